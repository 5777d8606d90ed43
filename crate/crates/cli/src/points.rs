//! Plain-text point and radii files: one point per line, coordinates
//! separated by whitespace, `#` starts a comment. The dimension is
//! taken from the first data line.

use std::path::Path;

use anyhow::{bail, Context, Result};
use lilypond::{Config, Point};

pub fn read_points(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading points {}", path.display()))?;
    parse_points(&text).with_context(|| format!("parsing points {}", path.display()))
}

pub fn parse_points(text: &str) -> Result<Config> {
    let mut points = Vec::new();
    let mut dim = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .with_context(|| format!("line {}: bad coordinate {s:?}", lineno + 1))
            })
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                bail!("line {}: expected {d} coordinates, got {}", lineno + 1, coords.len())
            }
            _ => {}
        }
        points.push(Point::new(&coords)?);
    }
    let Some(dim) = dim else { bail!("no points in file") };
    Ok(Config::new(dim, points)?)
}

#[cfg_attr(not(test), allow(dead_code))]
pub fn write_points(path: &Path, phi: &Config) -> Result<()> {
    let mut out = String::new();
    for p in phi.points() {
        let words: Vec<String> = p.coords().iter().map(|c| format!("{c:?}")).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing points {}", path.display()))
}

/// One radius per line; `inf` denotes an unbounded grain.
pub fn read_radii(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading radii {}", path.display()))?;
    let mut radii = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let r = line
            .parse::<f64>()
            .with_context(|| format!("line {}: bad radius {line:?}", lineno + 1))?;
        if r < 0.0 || r.is_nan() {
            bail!("line {}: radius must be nonnegative", lineno + 1);
        }
        radii.push(r);
    }
    Ok(radii)
}
