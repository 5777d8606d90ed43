//! Stopping sets, stabilization radii, fences, and the composite events
//! E_r, U_r, G_r used for external stabilization certificates.
//!
//! Descending chains are explored over ordered pair states with the
//! distinctness requirement relaxed: a repeating chain shortcuts to a
//! distinct chain whose terminal ball contains the repeat's terminal ball,
//! so the union is unchanged. Only the largest incoming link per chain
//! point matters for both the union and for onward reachability, which
//! reduces the search to a max-propagation pass over points.

use std::collections::BinaryHeap;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{Point, Window};
use crate::lilypond::{neighbour_graph, solve, RadiiAssignment};

/// The ball union S(y, phi) of a stopping set.
#[derive(Clone, Debug, Serialize)]
pub struct StoppingSet {
    pub anchor: Point,
    /// Radius 2 D(y, phi^y) of the base ball around the anchor.
    pub base_radius: f64,
    /// Chain balls (center, radius); centers are points of phi.
    pub chain_balls: Vec<(Point, f64)>,
    /// phi \ {y} is empty: S(y, phi) = R^d.
    pub whole_space: bool,
}

impl StoppingSet {
    /// Radius of the smallest anchor-centred ball containing the set.
    pub fn enclosing_radius(&self) -> f64 {
        if self.whole_space {
            return f64::INFINITY;
        }
        let mut r = self.base_radius;
        for (c, br) in &self.chain_balls {
            r = r.max(c.dist(&self.anchor) + br);
        }
        r
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.whole_space
            || p.dist(&self.anchor) <= self.base_radius
            || self.chain_balls.iter().any(|(c, r)| p.dist(c) <= *r)
    }

    pub fn is_bounded(&self) -> bool {
        !self.whole_space
    }
}

/// True iff `seq` is a descending chain in phi: distinct points of phi
/// with non-increasing consecutive link lengths.
pub fn is_descending_chain(seq: &[Point], phi: &Config) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut idx = Vec::with_capacity(seq.len());
    for p in seq {
        match phi.index_of(p) {
            Some(i) if !idx.contains(&i) => idx.push(i),
            _ => return false,
        }
    }
    let mut prev = seq[0].dist(&seq[1]);
    for w in seq[1..].windows(2) {
        let link = w[0].dist(&w[1]);
        if link > prev {
            return false;
        }
        prev = link;
    }
    true
}

struct HeapItem(f64, usize);
impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Max incoming link length per reachable chain point; `bound` stops the
/// search early once some ball pushes the enclosing radius to `bound` or
/// beyond (the remaining search cannot shrink it).
fn chain_reach(phi: &Config, y: &Point, bound: Option<f64>) -> (f64, HashMap<usize, f64>, bool) {
    let y_idx = phi.index_of(y);
    let base = 2.0 * phi.palm_nn_distance(y);
    let mut reach: HashMap<usize, f64> = HashMap::new();
    let mut exceeded = false;
    if let Some(b) = bound {
        if base >= b {
            return (base, reach, true);
        }
    }
    if !base.is_finite() {
        return (base, reach, false);
    }

    let mut heap = BinaryHeap::new();
    for j in phi.range_query(y, base, false) {
        if Some(j) == y_idx {
            continue;
        }
        let link = phi.point(j).dist(y);
        let cur = reach.entry(j).or_insert(f64::NEG_INFINITY);
        if link > *cur {
            *cur = link;
            heap.push(HeapItem(link, j));
        }
    }

    while let Some(HeapItem(link, j)) = heap.pop() {
        if reach.get(&j) != Some(&link) {
            continue;
        }
        if let Some(b) = bound {
            if phi.point(j).dist(y) + link >= b {
                exceeded = true;
                break;
            }
        }
        let pj = *phi.point(j);
        for w in phi.range_query(&pj, link, false) {
            if w == j || Some(w) == y_idx {
                continue;
            }
            let next = phi.point(w).dist(&pj);
            let cur = reach.entry(w).or_insert(f64::NEG_INFINITY);
            if next > *cur {
                *cur = next;
                heap.push(HeapItem(next, w));
            }
        }
    }
    (base, reach, exceeded)
}

/// The stopping set S(y, phi). `y` need not belong to phi.
pub fn stopping_set(y: &Point, phi: &Config) -> StoppingSet {
    let y_idx = phi.index_of(y);
    let others = phi.len() - usize::from(y_idx.is_some());
    if others == 0 {
        return StoppingSet {
            anchor: *y,
            base_radius: f64::INFINITY,
            chain_balls: vec![],
            whole_space: true,
        };
    }
    let (base, reach, _) = chain_reach(phi, y, None);
    let mut chain_balls: Vec<(Point, f64)> =
        reach.into_iter().map(|(j, r)| (*phi.point(j), r)).collect();
    chain_balls.sort_by(|a, b| a.0.coords().partial_cmp(b.0.coords()).unwrap());
    StoppingSet { anchor: *y, base_radius: base, chain_balls, whole_space: false }
}

/// R(phi): enclosing radius of S(0, phi); +infinity when phi is empty.
pub fn stab_radius(phi: &Config) -> f64 {
    let origin = Point::origin(phi.dim()).expect("valid dim");
    stopping_set(&origin, phi).enclosing_radius()
}

/// Whether the stabilization radius about `y` (i.e. R of the translate
/// -y + phi) is >= `bound`; early-exits without exploring far chains.
pub fn stab_radius_exceeds(phi: &Config, y: &Point, bound: f64) -> bool {
    let y_idx = phi.index_of(y);
    let others = phi.len() - usize::from(y_idx.is_some());
    if others == 0 {
        return true;
    }
    let (base, reach, exceeded) = chain_reach(phi, y, Some(bound));
    if exceeded || base >= bound {
        return true;
    }
    reach
        .iter()
        .any(|(&j, &r)| phi.point(j).dist(y) + r >= bound)
}

// ---------------------------------------------------------------------------
// Fences
// ---------------------------------------------------------------------------

/// Unit-sphere cover by open caps of a given angular size, cached per
/// (dimension, radius ratio) since k(s, r) depends only on s/r.
struct CoverUnit {
    dirs: Vec<Vec<f64>>,
    certified: bool,
}

fn cover_cache() -> &'static Mutex<HashMap<(usize, u64), Arc<CoverUnit>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<CoverUnit>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cover of the unit sphere boundary by open balls of radius `c` centred
/// on the sphere; deterministic, greedy-first-feasible.
fn unit_cover(dim: usize, c: f64) -> Result<Arc<CoverUnit>> {
    let key = (dim, c.to_bits());
    if let Some(hit) = cover_cache().lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let unit = match dim {
        1 => Ok(CoverUnit { dirs: vec![vec![1.0], vec![-1.0]], certified: true }),
        2 => unit_cover_2d(c),
        3 => unit_cover_3d(c),
        _ => Err(Error::CoverNotCertified { dim }),
    }?;
    let arc = Arc::new(unit);
    cover_cache().lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}

/// Exact circular-arc cover: candidate directions from the golden-angle
/// sequence; certification by open-interval union on the circle.
fn unit_cover_2d(c: f64) -> Result<CoverUnit> {
    use std::f64::consts::PI;
    // open ball of radius c about a point on the circle covers the open
    // arc of half-angle 2 asin(c/2)
    let half = 2.0 * (c / 2.0).asin();
    if !(half > 0.0) {
        return Err(Error::CoverNotCertified { dim: 2 });
    }
    let golden = PI * (3.0 - 5.0f64.sqrt());
    let mut chosen: Vec<f64> = vec![];
    let mut intervals: Vec<(f64, f64)> = vec![];
    let budget = 100_000;
    for j in 0..budget {
        let theta = (j as f64 * golden).rem_euclid(2.0 * PI);
        if !angle_covered(&intervals, theta) {
            chosen.push(theta);
            intervals.push((theta - half, theta + half));
            if circle_covered(&intervals) {
                let dirs = chosen.iter().map(|t| vec![t.cos(), t.sin()]).collect();
                return Ok(CoverUnit { dirs, certified: true });
            }
        }
    }
    Err(Error::CoverNotCertified { dim: 2 })
}

/// Whether `theta` lies strictly inside one of the open arcs (a, b).
fn angle_covered(intervals: &[(f64, f64)], theta: f64) -> bool {
    use std::f64::consts::PI;
    intervals.iter().any(|&(a, b)| {
        let t = a + (theta - a).rem_euclid(2.0 * PI);
        t > a && t < b
    })
}

/// Whether the open arcs cover the whole circle: unfolded over two turns,
/// some strictly-overlapping chain must span at least 2 pi.
fn circle_covered(intervals: &[(f64, f64)]) -> bool {
    use std::f64::consts::PI;
    let mut segs: Vec<(f64, f64)> = vec![];
    for &(a, b) in intervals {
        let a0 = a.rem_euclid(2.0 * PI);
        segs.push((a0, a0 + (b - a)));
        segs.push((a0 + 2.0 * PI, a0 + (b - a) + 2.0 * PI));
    }
    segs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut reach: Option<(f64, f64)> = None;
    for (a, b) in segs {
        reach = match reach {
            Some((ra, rb)) if a < rb => Some((ra, rb.max(b))),
            _ => Some((a, b)),
        };
        if let Some((ra, rb)) = reach {
            if rb - ra >= 2.0 * PI {
                return true;
            }
        }
    }
    false
}

/// Spherical-Fibonacci candidates with a boundary-net certificate: net
/// points must fall within the shrunken radius 0.95 c of a chosen
/// direction, with net spacing tight enough that the full-radius cover
/// of the whole sphere follows.
fn unit_cover_3d(c: f64) -> Result<CoverUnit> {
    let eff = 0.95 * c;
    let h = 0.04 * c;
    let mut net = cube_surface_net(3, h);
    let candidates = fibonacci_sphere(((40.0 / (c * c)).ceil() as usize).clamp(64, 2_000_000));
    let mut chosen: Vec<Vec<f64>> = vec![];
    for cand in candidates {
        let mut took = false;
        let mut i = 0;
        while i < net.len() {
            if dist_slice(&net[i], &cand) < eff {
                net.swap_remove(i);
                took = true;
            } else {
                i += 1;
            }
        }
        if took {
            chosen.push(cand);
        }
        if net.is_empty() {
            return Ok(CoverUnit { dirs: chosen, certified: true });
        }
    }
    Err(Error::CoverNotCertified { dim: 3 })
}

fn dist_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Normalized cube-surface grid: a sphere net with spacing <= `h`
/// (radial projection from the unit cube surface is 1-Lipschitz).
fn cube_surface_net(dim: usize, h: f64) -> Vec<Vec<f64>> {
    let g = h / (dim as f64 - 1.0).sqrt();
    let m = (2.0 / g).ceil() as usize;
    let mut out = vec![];
    let mut idx = vec![0usize; dim - 1];
    for face_axis in 0..dim {
        for &sign in &[-1.0f64, 1.0] {
            idx.iter_mut().for_each(|v| *v = 0);
            loop {
                let mut p = vec![0.0; dim];
                p[face_axis] = sign;
                let mut a = 0;
                for ax in (0..dim).filter(|&ax| ax != face_axis) {
                    p[ax] = -1.0 + 2.0 * idx[a] as f64 / m as f64;
                    a += 1;
                }
                let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.push(p.iter().map(|x| x / norm).collect());
                let mut carry = 0;
                loop {
                    if carry == dim - 1 {
                        break;
                    }
                    idx[carry] += 1;
                    if idx[carry] <= m {
                        break;
                    }
                    idx[carry] = 0;
                    carry += 1;
                }
                if carry == dim - 1 {
                    break;
                }
            }
        }
    }
    out
}

fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let golden = PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            vec![r * th.cos(), r * th.sin(), z]
        })
        .collect()
}

/// Which fence definition the cover follows.
#[derive(Clone, Debug, Serialize)]
pub enum FenceVariant {
    /// F(x, s, r): balls B_r°(y_i) minus B_s(x) must each hold >= 2 points.
    Free,
    /// F_n(x, s, r): half-width cover, window-restricted; balls B_r°(z_i)
    /// must each hold >= 2 points and phi must lie in the window.
    Windowed(Window),
}

/// Cover points realizing a fence in the annulus around ∂B_s(x).
#[derive(Clone, Debug, Serialize)]
pub struct FenceSpec {
    pub center: Point,
    pub s: f64,
    pub width: f64,
    pub cover: Vec<Point>,
    /// Indices of retained cover points (the z_i of the windowed variant;
    /// all of them for the free variant).
    pub kept: Vec<usize>,
    pub variant: FenceVariant,
    pub cover_certified: bool,
}

impl FenceSpec {
    pub fn k(&self) -> usize {
        self.cover.len()
    }
}

/// Deterministic fence cover for F(x, s, width), or its window-restricted
/// variant when `window` is given.
pub fn fence_cover(x: &Point, s: f64, width: f64, window: Option<&Window>) -> Result<FenceSpec> {
    if !(width > 0.0 && width < s) {
        return Err(Error::BadFenceParams { s, width });
    }
    let cover_radius = if window.is_some() { width / 2.0 } else { width };
    let unit = unit_cover(x.dim(), cover_radius / s)?;
    let cover: Vec<Point> = unit
        .dirs
        .iter()
        .map(|dir| {
            let mut coords = x.coords().to_vec();
            for (c, d) in coords.iter_mut().zip(dir) {
                *c += s * d;
            }
            Point::new(&coords).expect("finite cover point")
        })
        .collect();
    let kept = match window {
        None => (0..cover.len()).collect(),
        Some(w) => (0..cover.len())
            .filter(|&i| w.intersects_ball(&cover[i], cover_radius))
            .collect(),
    };
    Ok(FenceSpec {
        center: *x,
        s,
        width,
        cover,
        kept,
        variant: match window {
            None => FenceVariant::Free,
            Some(w) => FenceVariant::Windowed(*w),
        },
        cover_certified: unit.certified,
    })
}

/// Whether phi realizes the fence event.
pub fn in_fence(phi: &Config, fence: &FenceSpec) -> Result<bool> {
    if !fence.cover_certified {
        return Err(Error::UncertifiedFence);
    }
    match &fence.variant {
        FenceVariant::Free => {
            for &i in &fence.kept {
                let y = &fence.cover[i];
                let count = phi
                    .range_query(y, fence.width, true)
                    .into_iter()
                    .filter(|&j| phi.point(j).dist(&fence.center) > fence.s)
                    .count();
                if count < 2 {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        FenceVariant::Windowed(w) => {
            if phi.points().iter().any(|p| !w.contains(p)) {
                return Ok(false);
            }
            for &i in &fence.kept {
                if phi.range_query(&fence.cover[i], fence.width, true).len() < 2 {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

// ---------------------------------------------------------------------------
// Composite events
// ---------------------------------------------------------------------------

/// E_r(x): every y in phi ∩ B_{8r}(x) has stabilization radius < r.
pub fn in_e_r(phi: &Config, x: &Point, r: f64) -> bool {
    phi.range_query(x, 8.0 * r, false)
        .into_iter()
        .all(|i| !stab_radius_exceeds(phi, phi.point(i), r))
}

/// U_r(x): on phi ∩ B_{9r}(x), every point has a unique smaller grain
/// neighbour, or the restriction has at most 2 points.
pub fn in_u_r(phi: &Config, x: &Point, r: f64) -> Result<bool> {
    let sub = phi.restrict_to_ball(x, 9.0 * r)?;
    if sub.len() <= 2 {
        return Ok(true);
    }
    let rho = solve(&sub)?;
    let g = neighbour_graph(&sub, &rho)?;
    Ok((0..sub.len()).all(|i| g.out_degree(i) == 1))
}

/// G_r(x) (or G_{n,r}(x) with a window): E_r ∩ U_r ∩ fences at radii jr,
/// width r/2, j = 1..8.
pub fn in_g(phi: &Config, x: &Point, r: f64, window: Option<&Window>) -> Result<bool> {
    for j in 1..=8 {
        let fence = fence_cover(x, j as f64 * r, r / 2.0, window)?;
        if !in_fence(phi, &fence)? {
            return Ok(false);
        }
    }
    if !in_e_r(phi, x, r) {
        return Ok(false);
    }
    in_u_r(phi, x, r)
}

/// Rex(phi) = 9 min{r in 1..=r_cap : phi in G_r(0)}, +infinity when no
/// integer radius in range works.
pub fn external_radius(phi: &Config, r_cap: u32) -> Result<f64> {
    if r_cap < 1 {
        return Err(Error::InvalidArgument("r_cap must be >= 1".into()));
    }
    let origin = Point::origin(phi.dim())?;
    for r in 1..=r_cap {
        if in_g(phi, &origin, r as f64, None)? {
            return Ok(9.0 * r as f64);
        }
    }
    Ok(f64::INFINITY)
}

/// D_r(x, phi): minimum positive gap between non-touching lilypond balls
/// centred in B_{8r}(x); +infinity when all pairs touch.
pub fn min_gap(x: &Point, phi: &Config, rho: &RadiiAssignment, r: f64) -> f64 {
    let idx = phi.range_query(x, 8.0 * r, false);
    let eps = crate::geometry::EPS_GEO;
    let mut best = f64::INFINITY;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let d = phi.point(i).dist(phi.point(j));
            let touch = rho.radius(i) + rho.radius(j);
            let gap = d - touch;
            if gap > eps * (1.0 + d.abs().max(touch.abs())) && gap < best {
                best = gap;
            }
        }
    }
    best
}

/// S_r^*(phi): stopping sets of the annulus points B_{7r} \ B_{2r} around
/// the origin. Returns the constituent sets and whether all are bounded.
pub fn s_star(phi: &Config, r: f64) -> (Vec<StoppingSet>, bool) {
    let origin = Point::origin(phi.dim()).expect("valid dim");
    let mut sets = vec![];
    let mut bounded = true;
    for i in phi.range_query(&origin, 7.0 * r, false) {
        if phi.point(i).dist(&origin) < 2.0 * r {
            continue;
        }
        let s = stopping_set(phi.point(i), phi);
        bounded &= s.is_bounded();
        sets.push(s);
    }
    (sets, bounded)
}

/// Whether a point lies in the union of the given stopping sets.
pub fn in_any(sets: &[StoppingSet], p: &Point) -> bool {
    sets.iter().any(|s| s.contains(p))
}
