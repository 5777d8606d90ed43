//! Dimension-generic points, windows and metric helpers.
//!
//! Everything works in d-space for 1 <= d <= 8. Coordinates are `f64`;
//! geometric comparisons go through the single relative tolerance
//! [`EPS_GEO`] because lilypond grains touch at exact equality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 8;

/// Global relative geometric tolerance.
pub const EPS_GEO: f64 = 1e-9;

/// `a <= b` up to the relative tolerance `eps`.
#[inline]
pub fn approx_leq(a: f64, b: f64, eps: f64) -> bool {
    a <= b + eps * (1.0 + a.abs().max(b.abs()))
}

/// `|a - b|` within the relative tolerance `eps`.
#[inline]
pub fn approx_eq(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps * (1.0 + a.abs().max(b.abs()))
}

/// A point of R^d. Stored as a fixed-size array so configurations are
/// contiguous and `Copy`.
#[derive(Clone, Copy, Debug)]
pub struct Point {
    dim: u8,
    coords: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let d = coords.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::BadDimension(d));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate(coords.to_vec()));
        }
        let mut arr = [0.0; MAX_DIM];
        arr[..d].copy_from_slice(coords);
        Ok(Point { dim: d as u8, coords: arr })
    }

    /// The origin of R^d.
    pub fn origin(dim: usize) -> Result<Self> {
        Self::new(&vec![0.0; dim])
    }

    /// The unit vector e = (1, 0, ..., 0).
    pub fn unit_vector(dim: usize) -> Result<Self> {
        let mut c = vec![0.0; dim];
        c[0] = 1.0;
        Self::new(&c)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let d = self.dim as usize;
        let mut s = 0.0;
        for i in 0..d {
            let t = self.coords[i] - other.coords[i];
            s += t * t;
        }
        s
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.coords().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Point) -> Point {
        let mut p = *self;
        for i in 0..self.dim as usize {
            p.coords[i] += other.coords[i];
        }
        p
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut p = *self;
        for i in 0..self.dim as usize {
            p.coords[i] -= other.coords[i];
        }
        p
    }

    pub fn scale(&self, factor: f64) -> Point {
        let mut p = *self;
        for i in 0..self.dim as usize {
            p.coords[i] *= factor;
        }
        p
    }

    /// Largest coordinate magnitude; used for the distinctness threshold.
    pub fn max_abs_coord(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords() == other.coords()
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Volume of the d-ball of radius r: b_d r^d with b_d = pi^{d/2} / Gamma(d/2 + 1).
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    unit_ball_volume(dim) * r.powi(dim as i32)
}

/// b_d, the volume of the unit ball in R^d.
pub fn unit_ball_volume(dim: usize) -> f64 {
    std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half_integer(dim + 2)
}

/// Gamma(n/2) for positive integer n, via the half-integer recursion.
fn gamma_half_integer(n: usize) -> f64 {
    match n {
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        _ => (n as f64 / 2.0 - 1.0) * gamma_half_integer(n - 2),
    }
}

/// Shape of the unit-volume base body W.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowShape {
    Cube,
    Ball,
}

/// Observation window W_n = n^{1/d} W, where the base body W is a compact
/// convex set of unit volume centred at the origin (cube of side 1, or
/// ball of radius b_d^{-1/d}).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Window {
    pub shape: WindowShape,
    pub dim: usize,
    /// Scale n > 0; the window has volume n.
    pub scale: f64,
}

impl Window {
    pub fn new(shape: WindowShape, dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::BadDimension(dim));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::BadWindowScale(scale));
        }
        Ok(Window { shape, dim, scale })
    }

    /// A ball window of the given metric radius.
    pub fn ball_of_radius(dim: usize, radius: f64) -> Result<Self> {
        Self::new(WindowShape::Ball, dim, ball_volume(dim, radius))
    }

    /// A cube window of the given side length.
    pub fn cube_of_side(dim: usize, side: f64) -> Result<Self> {
        Self::new(WindowShape::Cube, dim, side.powi(dim as i32))
    }

    pub fn volume(&self) -> f64 {
        self.scale
    }

    /// Linear scale factor n^{1/d}.
    pub fn linear_scale(&self) -> f64 {
        self.scale.powf(1.0 / self.dim as f64)
    }

    /// Half the side length (cube) or the radius (ball).
    pub fn half_extent(&self) -> f64 {
        match self.shape {
            WindowShape::Cube => 0.5 * self.linear_scale(),
            WindowShape::Ball => {
                self.linear_scale() * unit_ball_volume(self.dim).powf(-1.0 / self.dim as f64)
            }
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        let h = self.half_extent();
        match self.shape {
            WindowShape::Cube => p.coords().iter().all(|c| c.abs() <= h),
            WindowShape::Ball => p.norm() <= h,
        }
    }

    /// Whether the closed ball B_r(c) intersects the window.
    pub fn intersects_ball(&self, c: &Point, r: f64) -> bool {
        let h = self.half_extent();
        match self.shape {
            WindowShape::Cube => {
                // distance from c to the cube
                let mut d2 = 0.0;
                for &x in c.coords() {
                    let t = (x.abs() - h).max(0.0);
                    d2 += t * t;
                }
                d2.sqrt() <= r
            }
            WindowShape::Ball => c.norm() <= h + r,
        }
    }
}
