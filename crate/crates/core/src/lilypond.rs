//! Exact construction of the lilypond radii.
//!
//! All grains grow at unit rate from time zero and freeze on first contact.
//! The solver is event driven: each growing grain carries a tentative stop
//! time t(x) = min over y of |x-y|/2 (y growing) or |x-y| - rho(y) (y
//! frozen), witnessed by the minimizing y. Freezing a grain can only raise
//! other tentative times (the frozen radius is at most half the pair
//! distance), so events are revalidated lazily on pop: an entry is valid
//! iff its witness's frozen/growing status is unchanged.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{approx_eq, approx_leq, EPS_GEO};
use crate::util::DisjointSets;

/// The lilypond radii for a configuration, plus the freeze-event trace.
#[derive(Clone, Debug)]
pub struct RadiiAssignment {
    radii: Vec<f64>,
    trace: Vec<(usize, f64)>,
}

impl RadiiAssignment {
    pub fn from_radii(radii: Vec<f64>) -> Self {
        RadiiAssignment { radii, trace: vec![] }
    }

    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Freeze events in the order they occurred.
    pub fn trace(&self) -> &[(usize, f64)] {
        &self.trace
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().fold(0.0f64, |m, &r| m.max(r))
    }

    pub fn has_infinite(&self) -> bool {
        self.radii.iter().any(|r| r.is_infinite())
    }
}

/// Outcome of checking the two defining properties.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub hard_core: bool,
    pub smaller_neighbour: bool,
    /// max over pairs of rho(x) + rho(y) - |x-y|
    pub max_hard_core_excess: f64,
    /// max over points of the best touching residual |rho(x)+rho(y)-|x-y||
    /// among candidates y with rho(y) <= rho(x)
    pub worst_neighbour_residual: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.hard_core && self.smaller_neighbour
    }
}

/// Smaller-grain-neighbour relation as a directed graph: (x, y) is an edge
/// iff y is a smaller grain-neighbour of x.
#[derive(Clone, Debug)]
pub struct GrainGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
    out_degree: Vec<u32>,
}

impl GrainGraph {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_degree[i] as usize
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from as u32, to as u32))
    }

    /// Component structure of the undirected closure G*.
    pub fn undirected_components(&self) -> DisjointSets {
        let mut ds = DisjointSets::new(self.n);
        for &(a, b) in &self.edges {
            ds.union(a as usize, b as usize);
        }
        ds
    }
}

#[derive(Clone, Copy)]
enum State {
    Growing { t: f64 },
    Frozen { r: f64 },
}

struct Event {
    t: f64,
    idx: u32,
    witness: u32,
    witness_frozen: bool,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.idx == other.idx
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t.total_cmp(&other.t).then(self.idx.cmp(&other.idx))
    }
}

/// Computes the unique radii satisfying the hard-core and smaller
/// grain-neighbour properties. A singleton gets radius +infinity.
pub fn solve(phi: &Config) -> Result<RadiiAssignment> {
    let n = phi.len();
    if n == 0 {
        return Err(Error::EmptyConfig);
    }
    if n == 1 {
        return Ok(RadiiAssignment { radii: vec![f64::INFINITY], trace: vec![] });
    }

    let mut state = Vec::with_capacity(n);
    let mut heap = BinaryHeap::with_capacity(n);
    let mut max_frozen: f64 = 0.0;

    // initial tentative times: half the nearest-neighbour distance
    for i in 0..n {
        let (w, d) = phi
            .nn_from(phi.point(i), Some(i))
            .expect("config with >= 2 points has a nearest neighbour");
        let t = d / 2.0;
        state.push(State::Growing { t });
        heap.push(Reverse(Event { t, idx: i as u32, witness: w as u32, witness_frozen: false }));
    }

    let compute_t = |i: usize, state: &[State], max_frozen: f64| -> (f64, u32, bool) {
        use std::cell::Cell;
        let p = phi.point(i);
        let best = Cell::new((f64::INFINITY, 0u32, false));
        phi.grid().expanding_search(
            p,
            |j| {
                if j != i {
                    let d = phi.point(j).dist(p);
                    let (cand, frozen) = match state[j] {
                        State::Growing { .. } => (d / 2.0, false),
                        State::Frozen { r } => (d - r, true),
                    };
                    if cand < best.get().0 {
                        best.set((cand, j as u32, frozen));
                    }
                }
            },
            |unseen| {
                let b = best.get().0;
                2.0 * b <= unseen && b + max_frozen <= unseen
            },
        );
        best.get()
    };

    let mut trace = Vec::with_capacity(n);
    while let Some(Reverse(ev)) = heap.pop() {
        let i = ev.idx as usize;
        let cur = match state[i] {
            State::Frozen { .. } => continue,
            State::Growing { t, .. } => t,
        };
        let wi = ev.witness as usize;
        let witness_unchanged = matches!(state[wi], State::Frozen { .. }) == ev.witness_frozen;
        if witness_unchanged && ev.t == cur {
            state[i] = State::Frozen { r: ev.t };
            max_frozen = max_frozen.max(ev.t);
            trace.push((i, ev.t));
            continue;
        }
        // stale entry: recompute and either freeze now or requeue
        let (t, w, wf) = compute_t(i, &state, max_frozen);
        if t <= ev.t {
            state[i] = State::Frozen { r: t };
            max_frozen = max_frozen.max(t);
            trace.push((i, t));
        } else {
            state[i] = State::Growing { t };
            heap.push(Reverse(Event { t, idx: ev.idx, witness: w, witness_frozen: wf }));
        }
    }

    let radii = state
        .iter()
        .map(|s| match s {
            State::Frozen { r } => *r,
            State::Growing { .. } => unreachable!("all grains freeze"),
        })
        .collect();
    Ok(RadiiAssignment { radii, trace })
}

/// Largest query radius that can contain a touching partner of grain i.
fn contact_radius(rho: &RadiiAssignment, i: usize, eps: f64) -> f64 {
    let r = rho.radius(i) + rho.max_radius();
    r + eps * (1.0 + r)
}

/// Checks the hard-core and smaller grain-neighbour properties at
/// tolerance `EPS_GEO`.
pub fn verify(phi: &Config, rho: &RadiiAssignment) -> VerifyReport {
    let n = phi.len();
    assert_eq!(n, rho.radii().len(), "radii must cover the configuration");
    let eps = EPS_GEO;
    if n <= 1 {
        return VerifyReport {
            hard_core: true,
            smaller_neighbour: true,
            max_hard_core_excess: f64::NEG_INFINITY,
            worst_neighbour_residual: 0.0,
        };
    }
    if rho.has_infinite() {
        return VerifyReport {
            hard_core: false,
            smaller_neighbour: false,
            max_hard_core_excess: f64::INFINITY,
            worst_neighbour_residual: f64::INFINITY,
        };
    }

    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_residual: f64 = 0.0;
    let mut hard_core = true;
    let mut smaller = true;
    for i in 0..n {
        let p = phi.point(i);
        let ri = rho.radius(i);
        let mut best_residual = f64::INFINITY;
        phi.grid().for_each_candidate(p, contact_radius(rho, i, eps), |j| {
            if j == i {
                return;
            }
            let d = phi.point(j).dist(p);
            let rj = rho.radius(j);
            let excess = ri + rj - d;
            if excess > max_excess {
                max_excess = excess;
            }
            if !approx_leq(ri + rj, d, eps) {
                hard_core = false;
            }
            if approx_leq(rj, ri, eps) {
                best_residual = best_residual.min(excess.abs());
            }
        });
        if !best_residual.is_finite() || !approx_eq(best_residual, 0.0, eps) {
            smaller = false;
        }
        if best_residual.is_finite() {
            worst_residual = worst_residual.max(best_residual);
        } else {
            worst_residual = f64::INFINITY;
        }
    }
    VerifyReport {
        hard_core,
        smaller_neighbour: smaller,
        max_hard_core_excess: max_excess,
        worst_neighbour_residual: worst_residual,
    }
}

/// The directed smaller grain-neighbour graph G(phi).
pub fn neighbour_graph(phi: &Config, rho: &RadiiAssignment) -> Result<GrainGraph> {
    let n = phi.len();
    if rho.has_infinite() {
        return Err(Error::InfiniteRadius);
    }
    let eps = EPS_GEO;
    let mut edges = vec![];
    let mut out_degree = vec![0u32; n];
    for i in 0..n {
        let p = phi.point(i);
        let ri = rho.radius(i);
        phi.grid().for_each_candidate(p, contact_radius(rho, i, eps), |j| {
            if j == i {
                return;
            }
            let d = phi.point(j).dist(p);
            let rj = rho.radius(j);
            if approx_eq(ri + rj, d, eps) && approx_leq(rj, ri, eps) {
                edges.push((i as u32, j as u32));
                out_degree[i] += 1;
            }
        });
    }
    Ok(GrainGraph { n, edges, out_degree })
}

/// True iff the ascending-sorted lilypond radii are lexicographically >=
/// the ascending-sorted alternative `alt` (which must be hard-core).
pub fn maximin_compare(phi: &Config, rho: &RadiiAssignment, alt: &[f64]) -> Result<bool> {
    let n = phi.len();
    assert_eq!(n, alt.len());
    // precondition: alt satisfies the hard-core property
    for i in 0..n {
        for j in (i + 1)..n {
            let d = phi.point(i).dist(phi.point(j));
            if !approx_leq(alt[i] + alt[j], d, EPS_GEO) {
                return Err(Error::HardCoreViolation(i, j, alt[i] + alt[j] - d));
            }
        }
    }
    let mut a = rho.radii().to_vec();
    let mut b = alt.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    for (x, y) in a.iter().zip(&b) {
        if approx_eq(*x, *y, EPS_GEO) {
            continue;
        }
        return Ok(*x > *y);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::sampling::{sample_poisson, SeedSpec};
    use crate::geometry::{Window, WindowShape};

    fn cfg_1d(xs: &[f64]) -> Config {
        let pts = xs.iter().map(|&x| Point::new(&[x]).unwrap()).collect();
        Config::new(1, pts).unwrap()
    }

    #[test]
    fn chain_micro_oracles() {
        let cases: &[(&[f64], &[f64])] = &[
            (&[0.0, 1.0], &[0.5, 0.5]),
            (&[0.0, 1.0, 3.0], &[0.5, 0.5, 1.5]),
            (&[0.0, 1.0, 3.0, 7.0], &[0.5, 0.5, 1.5, 2.5]),
        ];
        for (xs, expect) in cases {
            let rho = solve(&cfg_1d(xs)).unwrap();
            for (i, &e) in expect.iter().enumerate() {
                assert!(
                    (rho.radius(i) - e).abs() < 1e-12,
                    "chain {xs:?}: rho[{i}] = {} != {e}",
                    rho.radius(i)
                );
            }
        }
    }

    #[test]
    fn singleton_infinite() {
        let rho = solve(&cfg_1d(&[5.0])).unwrap();
        assert!(rho.radius(0).is_infinite());
    }

    #[test]
    fn empty_config_errors() {
        let phi = Config::new(1, vec![]).unwrap();
        assert!(solve(&phi).is_err());
    }

    #[test]
    fn verify_detects_tampering() {
        let phi = cfg_1d(&[0.0, 1.0]);
        let rho = solve(&phi).unwrap();
        assert!(verify(&phi, &rho).passed());

        let flat = RadiiAssignment::from_radii(vec![0.0, 0.0]);
        let rep = verify(&phi, &flat);
        assert!(rep.hard_core && !rep.smaller_neighbour);

        let fat = RadiiAssignment::from_radii(vec![0.6, 0.6]);
        let rep = verify(&phi, &fat);
        assert!(!rep.hard_core);
    }

    #[test]
    fn verify_random_poisson() {
        for d in 1..=3usize {
            let w = Window::new(WindowShape::Cube, d, 200.0).unwrap();
            for s in 0..25 {
                let phi = sample_poisson(&w, SeedSpec::new(100 + d as u64, s)).unwrap();
                if phi.is_empty() {
                    continue;
                }
                let rho = solve(&phi).unwrap();
                let rep = verify(&phi, &rho);
                assert!(rep.passed(), "d={d} s={s}: {rep:?}");
            }
        }
    }

    #[test]
    fn neighbour_graph_chain() {
        let phi = cfg_1d(&[0.0, 1.0]);
        let rho = solve(&phi).unwrap();
        let g = neighbour_graph(&phi, &rho).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert_eq!(g.edges().len(), 2);

        let phi = cfg_1d(&[0.0, 1.0, 3.0]);
        let rho = solve(&phi).unwrap();
        let g = neighbour_graph(&phi, &rho).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0) && g.has_edge(2, 1));
        assert!(!g.has_edge(1, 2));
        assert_eq!(g.edges().len(), 3);
    }

    #[test]
    fn neighbour_graph_rejects_singleton() {
        let phi = cfg_1d(&[0.0]);
        let rho = solve(&phi).unwrap();
        assert!(neighbour_graph(&phi, &rho).is_err());
    }

    #[test]
    fn out_degree_positive() {
        let w = Window::new(WindowShape::Cube, 2, 100.0).unwrap();
        let phi = sample_poisson(&w, SeedSpec::new(9, 0)).unwrap();
        let rho = solve(&phi).unwrap();
        let g = neighbour_graph(&phi, &rho).unwrap();
        for i in 0..phi.len() {
            assert!(g.out_degree(i) >= 1);
        }
    }

    #[test]
    fn maximin_simple_cases() {
        let phi = cfg_1d(&[0.0, 1.0, 3.0]);
        let rho = solve(&phi).unwrap();
        assert!(maximin_compare(&phi, &rho, rho.radii()).unwrap());
        let shrunk: Vec<f64> = rho.radii().iter().map(|r| 0.9 * r).collect();
        assert!(maximin_compare(&phi, &rho, &shrunk).unwrap());
        // infeasible alternative is a precondition error
        assert!(maximin_compare(&phi, &rho, &[0.6, 0.6, 0.6]).is_err());
    }

    #[test]
    fn radius_bounded_by_nn_distance() {
        let w = Window::new(WindowShape::Cube, 2, 150.0).unwrap();
        for s in 0..10 {
            let phi = sample_poisson(&w, SeedSpec::new(21, s)).unwrap();
            if phi.len() < 2 {
                continue;
            }
            let rho = solve(&phi).unwrap();
            for i in 0..phi.len() {
                let d = phi.nn_distance(phi.point(i)).unwrap();
                assert!(rho.radius(i) <= d + 1e-9);
            }
        }
    }

    #[test]
    fn trace_is_monotone() {
        let w = Window::new(WindowShape::Cube, 2, 100.0).unwrap();
        let phi = sample_poisson(&w, SeedSpec::new(33, 0)).unwrap();
        let rho = solve(&phi).unwrap();
        let mut last = 0.0;
        for &(_, t) in rho.trace() {
            assert!(t >= last - 1e-12);
            last = t;
        }
        assert_eq!(rho.trace().len(), phi.len());
    }

    #[test]
    fn isometry_and_scale_equivariance() {
        let w = Window::new(WindowShape::Cube, 2, 60.0).unwrap();
        let phi = sample_poisson(&w, SeedSpec::new(55, 1)).unwrap();
        if phi.len() < 2 {
            return;
        }
        let rho = solve(&phi).unwrap();

        let off = Point::new(&[13.25, -4.5]).unwrap();
        let shifted = phi.translate(&off).unwrap();
        let rho_t = solve(&shifted).unwrap();
        for i in 0..phi.len() {
            assert!((rho.radius(i) - rho_t.radius(i)).abs() < 1e-8);
        }

        // rotation by a fixed angle
        let (s, c) = (0.6f64, 0.8f64);
        let rotated: Vec<Point> = phi
            .points()
            .iter()
            .map(|p| {
                let (x, y) = (p.coords()[0], p.coords()[1]);
                Point::new(&[c * x - s * y, s * x + c * y]).unwrap()
            })
            .collect();
        let rot = Config::new(2, rotated).unwrap();
        let rho_r = solve(&rot).unwrap();
        for i in 0..phi.len() {
            assert!((rho.radius(i) - rho_r.radius(i)).abs() < 1e-8);
        }

        for &lam in &[0.5, 2.0, 10.0] {
            let scaled = phi.scale(lam).unwrap();
            let rho_s = solve(&scaled).unwrap();
            for i in 0..phi.len() {
                assert!((lam * rho.radius(i) - rho_s.radius(i)).abs() < 1e-8 * lam.max(1.0));
            }
        }
    }
}
