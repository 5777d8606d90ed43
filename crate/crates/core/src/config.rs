//! Finite point configurations with a spatial index for range and
//! nearest-neighbour queries.
//!
//! A `Config` is immutable after construction; all queries are pure reads,
//! so sharing across threads is safe.

use crate::error::{Error, Result};
use crate::geometry::{Point, EPS_GEO, MAX_DIM};
use crate::grid::UniformGrid;

#[derive(Clone, Debug)]
pub struct Config {
    dim: usize,
    points: Vec<Point>,
    grid: UniformGrid,
}

impl Config {
    /// Builds a configuration, enforcing pairwise distinctness at threshold
    /// `EPS_GEO * (1 + max coordinate magnitude)`.
    pub fn new(dim: usize, points: Vec<Point>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::BadDimension(dim));
        }
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        let grid = UniformGrid::build(dim, &points);
        let cfg = Config { dim, points, grid };
        cfg.check_distinct()?;
        Ok(cfg)
    }

    fn check_distinct(&self) -> Result<()> {
        let scale = self
            .points
            .iter()
            .fold(0.0f64, |m, p| m.max(p.max_abs_coord()));
        let threshold = EPS_GEO * (1.0 + scale);
        for (i, p) in self.points.iter().enumerate() {
            let mut clash: Option<(usize, f64)> = None;
            self.grid.for_each_candidate(p, threshold, |j| {
                if j != i {
                    let d = self.points[j].dist(p);
                    if d <= threshold && (j < i) {
                        clash = Some((j, d));
                    }
                }
            });
            if let Some((j, d)) = clash {
                return Err(Error::DuplicatePoint(j, i, d));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    #[inline]
    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// Index of a point equal to `x` up to the distinctness threshold.
    pub fn index_of(&self, x: &Point) -> Option<usize> {
        let threshold = EPS_GEO * (1.0 + x.max_abs_coord());
        let mut hit = None;
        self.grid.for_each_candidate(x, threshold, |i| {
            if self.points[i].dist(x) <= threshold {
                hit = Some(i);
            }
        });
        hit
    }

    /// Nearest-neighbour distance from a member point x to phi \ {x}.
    /// +infinity for a singleton configuration.
    pub fn nn_distance(&self, x: &Point) -> Result<f64> {
        let idx = self.index_of(x).ok_or(Error::PointNotInConfig)?;
        Ok(self.nn_from(x, Some(idx)).map_or(f64::INFINITY, |(_, d)| d))
    }

    /// Nearest point of the configuration to `y`, excluding index `exclude`.
    pub fn nn_from(&self, y: &Point, exclude: Option<usize>) -> Option<(usize, f64)> {
        let best: std::cell::Cell<Option<(usize, f64)>> = std::cell::Cell::new(None);
        self.grid.expanding_search(
            y,
            |i| {
                if Some(i) != exclude {
                    let d = self.points[i].dist(y);
                    if best.get().map_or(true, |(_, bd)| d < bd) {
                        best.set(Some((i, d)));
                    }
                }
            },
            |unseen| best.get().map_or(false, |(_, bd)| bd <= unseen),
        );
        best.get()
    }

    /// D(y, phi^y): nearest-neighbour distance from y in phi union {y}.
    /// A point of phi coinciding with y is not its own neighbour.
    pub fn palm_nn_distance(&self, y: &Point) -> f64 {
        let exclude = self.index_of(y);
        self.nn_from(y, exclude).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// All indices with |p - center| <= radius (or < radius when `open`).
    pub fn range_query(&self, center: &Point, radius: f64, open: bool) -> Vec<usize> {
        let mut out = vec![];
        self.grid.for_each_candidate(center, radius, |i| {
            let d = self.points[i].dist(center);
            if if open { d < radius } else { d <= radius } {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }

    /// phi^x := phi union {x}; errors when x duplicates an existing point.
    pub fn add_point(&self, x: Point) -> Result<Config> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        let mut pts = self.points.clone();
        pts.push(x);
        Config::new(self.dim, pts)
    }

    /// Configuration with the point at `idx` removed.
    pub fn remove_point(&self, idx: usize) -> Result<Config> {
        let mut pts = self.points.clone();
        pts.remove(idx);
        Config::new(self.dim, pts)
    }

    /// Restriction to the closed ball B_radius(center).
    pub fn restrict_to_ball(&self, center: &Point, radius: f64) -> Result<Config> {
        let idx = self.range_query(center, radius, false);
        let pts = idx.into_iter().map(|i| self.points[i]).collect();
        Config::new(self.dim, pts)
    }

    pub fn translate(&self, offset: &Point) -> Result<Config> {
        let pts = self.points.iter().map(|p| p.add(offset)).collect();
        Config::new(self.dim, pts)
    }

    pub fn scale(&self, factor: f64) -> Result<Config> {
        let pts = self.points.iter().map(|p| p.scale(factor)).collect();
        Config::new(self.dim, pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn cfg_1d(xs: &[f64]) -> Config {
        let pts = xs.iter().map(|&x| Point::new(&[x]).unwrap()).collect();
        Config::new(1, pts).unwrap()
    }

    #[test]
    fn nn_distance_examples() {
        let phi = cfg_1d(&[0.0, 3.0]);
        assert_eq!(phi.nn_distance(&Point::new(&[0.0]).unwrap()).unwrap(), 3.0);

        let single = cfg_1d(&[5.0]);
        assert_eq!(
            single.nn_distance(&Point::new(&[5.0]).unwrap()).unwrap(),
            f64::INFINITY
        );

        let pts = vec![
            Point::new(&[0.0, 0.0]).unwrap(),
            Point::new(&[1.0, 0.0]).unwrap(),
            Point::new(&[3.0, 4.0]).unwrap(),
        ];
        let phi2 = Config::new(2, pts).unwrap();
        assert_eq!(
            phi2.nn_distance(&Point::new(&[0.0, 0.0]).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn nn_distance_requires_membership() {
        let phi = cfg_1d(&[0.0, 3.0]);
        assert!(phi.nn_distance(&Point::new(&[1.0]).unwrap()).is_err());
    }

    #[test]
    fn range_query_examples() {
        let phi = cfg_1d(&[0.0, 1.0, 3.0]);
        let c = Point::new(&[0.0]).unwrap();
        assert_eq!(phi.range_query(&c, 1.0, false), vec![0, 1]);
        assert_eq!(phi.range_query(&c, 0.0, false), vec![0]);
        assert!(phi.range_query(&c, 0.0, true).is_empty());
    }

    #[test]
    fn duplicate_points_rejected() {
        let pts = vec![Point::new(&[1.0]).unwrap(), Point::new(&[1.0]).unwrap()];
        assert!(Config::new(1, pts).is_err());
    }

    #[test]
    fn add_then_remove_roundtrip() {
        let phi = cfg_1d(&[0.0, 3.0]);
        let x = Point::new(&[1.5]).unwrap();
        let phi2 = phi.add_point(x).unwrap();
        assert_eq!(phi2.len(), 3);
        assert!(phi2.add_point(x).is_err());
        let idx = phi2.index_of(&x).unwrap();
        let phi3 = phi2.remove_point(idx).unwrap();
        assert_eq!(phi3.len(), 2);
    }
}
