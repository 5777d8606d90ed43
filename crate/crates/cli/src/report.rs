//! Report serialization: every experiment writes a versioned JSON
//! summary plus a CSV of per-cell aggregates, and optionally one
//! line-delimited JSON record per raw replicate. Floats are written in
//! shortest round-trip decimal form, so a reader recovers the exact
//! doubles.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lilypond::experiments::{CltReport, FieldReport, PercReport, PzReport, TailReport};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// A report flattened to its three output artifacts.
pub struct ReportFiles {
    pub id: String,
    pub summary: Value,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    pub raw: Vec<Value>,
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn summarize<T: serde::Serialize>(report: &T) -> Result<Value> {
    let mut v = serde_json::to_value(report).context("serializing report")?;
    v.as_object_mut()
        .context("report is not a JSON object")?
        .insert("schema_version".into(), json!(SCHEMA_VERSION));
    Ok(v)
}

impl ReportFiles {
    pub fn from_pz(r: &PzReport) -> Result<Self> {
        Ok(Self {
            id: r.id.clone(),
            summary: summarize(r)?,
            csv_header: vec![
                "reps".into(),
                "accepted".into(),
                "cert_failures".into(),
                "p_indicator".into(),
                "se_indicator".into(),
                "p_moment".into(),
                "se_moment".into(),
            ],
            csv_rows: vec![vec![
                r.reps.to_string(),
                r.accepted.to_string(),
                r.cert_failures.to_string(),
                fmt(r.p_indicator),
                fmt(r.se_indicator),
                fmt(r.p_moment),
                fmt(r.se_moment),
            ]],
            raw: vec![],
        })
    }

    pub fn from_tails(r: &TailReport) -> Result<Self> {
        let mut rows = Vec::new();
        for (measure, curve) in [("diam", &r.diam), ("volume", &r.volume), ("card", &r.card)] {
            for row in curve {
                rows.push(vec![
                    measure.to_string(),
                    fmt(row.threshold),
                    row.survivors.to_string(),
                    fmt(row.p),
                    fmt(row.wilson_lo),
                    fmt(row.wilson_hi),
                    fmt(row.upper_coord),
                    fmt(row.lower_coord),
                ]);
            }
        }
        let raw = r
            .raw
            .iter()
            .flatten()
            .map(|(diam, vol, card, nn)| {
                json!({"diam": diam, "volume": vol, "card": card, "nearest": nn})
            })
            .collect();
        let mut summary = summarize(r)?;
        // raw replicates go to the ndjson stream, not the summary
        summary.as_object_mut().unwrap().remove("raw");
        Ok(Self {
            id: r.id.clone(),
            summary,
            csv_header: [
                "measure", "threshold", "survivors", "p", "wilson_lo", "wilson_hi",
                "upper_coord", "lower_coord",
            ]
            .map(String::from)
            .to_vec(),
            csv_rows: rows,
            raw,
        })
    }

    pub fn from_clt(r: &CltReport) -> Result<Self> {
        let rows = r
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.n.to_string(),
                    fmt(c.mean),
                    fmt(c.var_over_n),
                    fmt(c.ks_statistic),
                ]
            })
            .collect();
        let raw = r
            .cells
            .iter()
            .flat_map(|c| {
                c.standardized
                    .iter()
                    .map(move |z| json!({"n": c.n, "standardized": z}))
            })
            .collect();
        let mut summary = summarize(r)?;
        // the per-replicate standardized values go to the ndjson stream
        for cell in summary["cells"].as_array_mut().unwrap() {
            cell.as_object_mut().unwrap().remove("standardized");
        }
        Ok(Self {
            id: r.id.clone(),
            summary,
            csv_header: ["n", "mean", "var_over_n", "ks_statistic"].map(String::from).to_vec(),
            csv_rows: rows,
            raw,
        })
    }

    pub fn from_perc(r: &PercReport) -> Result<Self> {
        let rows = r
            .cells
            .iter()
            .map(|c| vec![fmt(c.delta), fmt(c.scale), fmt(c.crossing_probability)])
            .collect();
        Ok(Self {
            id: r.id.clone(),
            summary: summarize(r)?,
            csv_header: ["delta", "scale", "crossing_probability"].map(String::from).to_vec(),
            csv_rows: rows,
            raw: vec![],
        })
    }

    pub fn from_field(r: &FieldReport) -> Result<Self> {
        let rows = r
            .sites
            .iter()
            .map(|(z, y)| {
                let z_str = z.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
                vec![z_str, if *y { "1".into() } else { "0".into() }]
            })
            .collect();
        Ok(Self {
            id: r.id.clone(),
            summary: summarize(r)?,
            csv_header: ["site", "value"].map(String::from).to_vec(),
            csv_rows: rows,
            raw: vec![],
        })
    }

    /// Writes `<id>.json`, `<id>.csv` and, when raw records exist,
    /// `<id>.ndjson` under `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();

        let json_path = dir.join(format!("{}.json", self.id));
        let text = serde_json::to_string_pretty(&self.summary)?;
        std::fs::write(&json_path, text + "\n")
            .with_context(|| format!("writing {}", json_path.display()))?;
        written.push(json_path);

        let csv_path = dir.join(format!("{}.csv", self.id));
        let mut csv = self.csv_header.join(",") + "\n";
        for row in &self.csv_rows {
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        std::fs::write(&csv_path, csv)
            .with_context(|| format!("writing {}", csv_path.display()))?;
        written.push(csv_path);

        if !self.raw.is_empty() {
            let nd_path = dir.join(format!("{}.ndjson", self.id));
            let mut nd = String::new();
            for rec in &self.raw {
                nd.push_str(&serde_json::to_string(rec)?);
                nd.push('\n');
            }
            std::fs::write(&nd_path, nd)
                .with_context(|| format!("writing {}", nd_path.display()))?;
            written.push(nd_path);
        }
        Ok(written)
    }
}

/// Reads a summary back; used to check write-then-read fidelity.
#[cfg_attr(not(test), allow(dead_code))]
pub fn read_summary(path: &Path) -> Result<Value> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
