//! Fixed-radius neighbor queries over a uniform grid.
//!
//! Query radii in this crate are bounded multiples of the mean
//! nearest-neighbour spacing, which is the regime where a flat grid beats
//! tree indexes. Cells are kept in a hash map so only occupied cells cost
//! memory.

use std::collections::HashMap;

use crate::geometry::{Point, MAX_DIM};

type CellKey = [i32; MAX_DIM];

#[derive(Clone, Debug)]
pub struct UniformGrid {
    dim: usize,
    cell: f64,
    origin: [f64; MAX_DIM],
    min_cell: CellKey,
    max_cell: CellKey,
    cells: HashMap<CellKey, Vec<u32>>,
    len: usize,
}

impl UniformGrid {
    /// Builds a grid with cell size close to the mean point spacing.
    pub fn build(dim: usize, points: &[Point]) -> Self {
        let cell = default_cell_size(dim, points);
        Self::build_with_cell(dim, points, cell)
    }

    pub fn build_with_cell(dim: usize, points: &[Point], cell: f64) -> Self {
        let mut origin = [0.0; MAX_DIM];
        if let Some(first) = points.first() {
            origin[..dim].copy_from_slice(first.coords());
            for p in points {
                for (o, &c) in origin[..dim].iter_mut().zip(p.coords()) {
                    if c < *o {
                        *o = c;
                    }
                }
            }
        }
        let mut grid = UniformGrid {
            dim,
            cell,
            origin,
            min_cell: [0; MAX_DIM],
            max_cell: [0; MAX_DIM],
            cells: HashMap::new(),
            len: points.len(),
        };
        let mut first = true;
        for (i, p) in points.iter().enumerate() {
            let key = grid.cell_of(p);
            if first {
                grid.min_cell = key;
                grid.max_cell = key;
                first = false;
            } else {
                for a in 0..dim {
                    grid.min_cell[a] = grid.min_cell[a].min(key[a]);
                    grid.max_cell[a] = grid.max_cell[a].max(key[a]);
                }
            }
            grid.cells.entry(key).or_default().push(i as u32);
        }
        grid
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn cell_of(&self, p: &Point) -> CellKey {
        let mut key = [0; MAX_DIM];
        for a in 0..self.dim {
            key[a] = ((p.coords()[a] - self.origin[a]) / self.cell).floor() as i32;
        }
        key
    }

    /// Visits indices of all points whose cell intersects B_radius(center).
    /// Callers must still filter by exact distance.
    pub fn for_each_candidate<F: FnMut(usize)>(&self, center: &Point, radius: f64, mut f: F) {
        if self.len == 0 {
            return;
        }
        let span = (radius / self.cell).ceil() as i64 + 1;
        let c = self.cell_of(center);
        let mut lo = [0i32; MAX_DIM];
        let mut hi = [0i32; MAX_DIM];
        let mut ncells: i64 = 1;
        for a in 0..self.dim {
            lo[a] = (c[a] as i64 - span).max(self.min_cell[a] as i64) as i32;
            hi[a] = (c[a] as i64 + span).min(self.max_cell[a] as i64) as i32;
            if lo[a] > hi[a] {
                return;
            }
            ncells = ncells.saturating_mul((hi[a] - lo[a] + 1) as i64);
        }
        if ncells as usize > self.cells.len() * 2 {
            // query box larger than occupancy: walking the map is cheaper
            for ids in self.cells.values() {
                for &i in ids {
                    f(i as usize);
                }
            }
            return;
        }
        let mut cur = lo;
        loop {
            if let Some(ids) = self.cells.get(&cur) {
                for &i in ids {
                    f(i as usize);
                }
            }
            // odometer over the box
            let mut a = 0;
            loop {
                if a == self.dim {
                    return;
                }
                cur[a] += 1;
                if cur[a] <= hi[a] {
                    break;
                }
                cur[a] = lo[a];
                a += 1;
            }
        }
    }

    /// Expanding-ring search: visits candidates in rings of increasing
    /// Chebyshev cell distance around `center`. After each ring, `done`
    /// is called with a lower bound on the Euclidean distance to any point
    /// not yet visited; returning true stops the search.
    pub fn expanding_search<F, G>(&self, center: &Point, mut visit: F, mut done: G)
    where
        F: FnMut(usize),
        G: FnMut(f64) -> bool,
    {
        if self.len == 0 {
            return;
        }
        let c = self.cell_of(center);
        let mut max_k = 0i64;
        for a in 0..self.dim {
            max_k = max_k
                .max((c[a] as i64 - self.min_cell[a] as i64).abs())
                .max((self.max_cell[a] as i64 - c[a] as i64).abs());
        }
        for k in 0..=max_k {
            self.for_each_on_ring(&c, k, &mut visit);
            let unseen_bound = k as f64 * self.cell;
            if done(unseen_bound) {
                return;
            }
        }
        done(f64::INFINITY);
    }

    fn for_each_on_ring<F: FnMut(usize)>(&self, c: &CellKey, k: i64, f: &mut F) {
        let mut lo = [0i32; MAX_DIM];
        let mut hi = [0i32; MAX_DIM];
        for a in 0..self.dim {
            lo[a] = (c[a] as i64 - k).max(self.min_cell[a] as i64 - 1) as i32;
            hi[a] = (c[a] as i64 + k).min(self.max_cell[a] as i64 + 1) as i32;
            if lo[a] > hi[a] {
                return;
            }
        }
        let mut cur = lo;
        loop {
            let cheb = (0..self.dim)
                .map(|a| (cur[a] as i64 - c[a] as i64).abs())
                .max()
                .unwrap();
            if cheb == k {
                if let Some(ids) = self.cells.get(&cur) {
                    for &i in ids {
                        f(i as usize);
                    }
                }
            }
            let mut a = 0;
            loop {
                if a == self.dim {
                    return;
                }
                cur[a] += 1;
                if cur[a] <= hi[a] {
                    break;
                }
                cur[a] = lo[a];
                a += 1;
            }
        }
    }
}

fn default_cell_size(dim: usize, points: &[Point]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let mut extent: f64 = 0.0;
    for a in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = lo.min(p.coords()[a]);
            hi = hi.max(p.coords()[a]);
        }
        extent = extent.max(hi - lo);
    }
    if extent <= 0.0 {
        return 1.0;
    }
    // roughly one point per cell
    (extent / (points.len() as f64).powf(1.0 / dim as f64)).max(extent * 1e-6)
}
