//! Reproducible Poisson and binomial point process sampling.
//!
//! Every random draw is keyed by a `SeedSpec` (master seed, stream id).
//! Replicate r of an experiment owns stream `base + r`, so results are
//! bit-identical under any parallel schedule.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::geometry::{Point, Window, WindowShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(master: u64, stream: u64) -> Self {
        SeedSpec { master, stream }
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        SeedSpec { master: self.master, stream }
    }

    /// Counter-based key derivation: the ChaCha key is a SplitMix64 chain
    /// over (master, stream), so distinct streams are independent.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut state = self.master ^ 0x9e37_79b9_7f4a_7c15;
        let mut seed = [0u8; 32];
        state = state.wrapping_add(splitmix64(self.stream));
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Uniform draw from the window.
pub fn uniform_in_window<R: Rng>(window: &Window, rng: &mut R) -> Point {
    let h = window.half_extent();
    let d = window.dim;
    let mut coords = [0.0; crate::geometry::MAX_DIM];
    match window.shape {
        WindowShape::Cube => {
            for c in coords.iter_mut().take(d) {
                *c = rng.gen_range(-h..=h);
            }
        }
        WindowShape::Ball => {
            // normalized Gaussian direction, radial inverse CDF
            loop {
                let mut norm2 = 0.0;
                for c in coords.iter_mut().take(d) {
                    let g: f64 = StandardNormal.sample(rng);
                    *c = g;
                    norm2 += g * g;
                }
                if norm2 > 0.0 {
                    let r = h * rng.gen::<f64>().powf(1.0 / d as f64) / norm2.sqrt();
                    for c in coords.iter_mut().take(d) {
                        *c *= r;
                    }
                    break;
                }
            }
        }
    }
    Point::new(&coords[..d]).expect("window sample is finite")
}

/// Poisson process of intensity one restricted to the window.
pub fn sample_poisson(window: &Window, seed: SeedSpec) -> Result<Config> {
    let mut rng = seed.rng();
    loop {
        let count = Poisson::new(window.volume())
            .map(|p| p.sample(&mut rng) as usize)
            .unwrap_or(0);
        let pts: Vec<Point> = (0..count).map(|_| uniform_in_window(window, &mut rng)).collect();
        match Config::new(window.dim, pts) {
            Ok(cfg) => return Ok(cfg),
            // a within-tolerance collision; draw a fresh batch
            Err(crate::error::Error::DuplicatePoint(..)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Binomial point process chi_{n,m}: exactly m points n^{1/d} X_i with X_i
/// uniform on the unit-volume base body W.
pub fn sample_binomial(n: u64, m: usize, shape: WindowShape, dim: usize, seed: SeedSpec) -> Result<Config> {
    let window = Window::new(shape, dim, n as f64)?;
    let mut rng = seed.rng();
    loop {
        let pts: Vec<Point> = (0..m).map(|_| uniform_in_window(&window, &mut rng)).collect();
        match Config::new(dim, pts) {
            Ok(cfg) => return Ok(cfg),
            Err(crate::error::Error::DuplicatePoint(..)) => continue,
            Err(e) => return Err(e),
        }
    }
}
