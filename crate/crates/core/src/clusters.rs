//! Component structure of the grain system and its delta-enhancement:
//! cluster statistics, the additive functionals H_g and H_kappa, their
//! add-one costs, and crossing events for the enhanced union set.

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{approx_leq, ball_volume, Point, Window, WindowShape, EPS_GEO};
use crate::lilypond::{solve, RadiiAssignment};
use crate::stabilization::external_radius;
use crate::util::DisjointSets;

/// Statistics of one grain-graph component.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterStats {
    pub members: Vec<usize>,
    pub cardinality: usize,
    /// Diameter of the union of member grains:
    /// max over pairs of |x-y| + rho(x) + rho(y), or 2 rho for a lone grain.
    pub diameter: f64,
    /// Total grain volume: sum of b_d rho^d (grain interiors are disjoint
    /// by the hard-core property).
    pub volume: f64,
    pub component_id: usize,
}

fn union_components(phi: &Config, rho: &RadiiAssignment, delta: f64) -> Result<DisjointSets> {
    if rho.has_infinite() {
        return Err(Error::InfiniteRadius);
    }
    if delta < 0.0 {
        return Err(Error::InvalidArgument("delta must be >= 0".into()));
    }
    let mut ds = DisjointSets::new(phi.len());
    let rmax = rho.max_radius();
    for i in 0..phi.len() {
        let reach = rho.radius(i) + rmax + 2.0 * delta;
        let slack = EPS_GEO * (1.0 + reach);
        for j in phi.range_query(phi.point(i), reach + slack, false) {
            if j > i {
                let d = phi.point(i).dist(phi.point(j));
                if approx_leq(d, rho.radius(i) + rho.radius(j) + 2.0 * delta, EPS_GEO) {
                    ds.union(i, j);
                }
            }
        }
    }
    Ok(ds)
}

/// Partition of phi into components of the delta-enhanced grain union:
/// points adjacent when |x-y| <= rho(x) + rho(y) + 2 delta.
pub fn components(phi: &Config, rho: &RadiiAssignment, delta: f64) -> Result<Vec<Vec<usize>>> {
    let mut ds = union_components(phi, rho, delta)?;
    let mut by_root: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for i in 0..phi.len() {
        by_root.entry(ds.find(i)).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
    out.iter_mut().for_each(|c| c.sort_unstable());
    out.sort_by_key(|c| c[0]);
    Ok(out)
}

/// Cluster statistics for the component of `x` at delta = 0.
pub fn cluster_stats(x: &Point, phi: &Config, rho: &RadiiAssignment) -> Result<ClusterStats> {
    let xi = phi.index_of(x).ok_or(Error::PointNotInConfig)?;
    let comps = components(phi, rho, 0.0)?;
    let (id, members) = comps
        .iter()
        .enumerate()
        .find(|(_, c)| c.contains(&xi))
        .map(|(i, c)| (i, c.clone()))
        .expect("every point lies in a component");
    Ok(stats_of(phi, rho, id, members))
}

fn stats_of(phi: &Config, rho: &RadiiAssignment, id: usize, members: Vec<usize>) -> ClusterStats {
    let dim = phi.dim();
    let mut diameter: f64 = 0.0;
    let mut volume = 0.0;
    for (a, &i) in members.iter().enumerate() {
        diameter = diameter.max(2.0 * rho.radius(i));
        volume += ball_volume(dim, rho.radius(i));
        for &j in &members[a + 1..] {
            let d = phi.point(i).dist(phi.point(j)) + rho.radius(i) + rho.radius(j);
            diameter = diameter.max(d);
        }
    }
    ClusterStats { cardinality: members.len(), members, diameter, volume, component_id: id }
}

/// Number of components of the grain union Z(phi); empty -> 0,
/// singleton -> 1 by convention.
pub fn kappa(phi: &Config, rho: &RadiiAssignment) -> Result<usize> {
    match phi.len() {
        0 => Ok(0),
        1 => Ok(1),
        _ => Ok(components(phi, rho, 0.0)?.len()),
    }
}

/// H_g(phi) = sum of g(rho(x)) over x in phi; 0 when phi has at most one
/// point. With g(t) = b_d t^d this is the total grain volume.
pub fn h_g(phi: &Config, rho: &RadiiAssignment, g: impl Fn(f64) -> f64) -> f64 {
    if phi.len() <= 1 {
        return 0.0;
    }
    (0..phi.len()).map(|i| g(rho.radius(i))).sum()
}

/// Add-one cost of H_g at a given localization radius r (with Rex = 9r):
/// the change of the g-sum over B_{2r}(0) when the origin is inserted.
pub fn add_one_cost_g_with_radius(
    phi: &Config,
    g: impl Fn(f64) -> f64,
    r: f64,
) -> Result<f64> {
    let origin = Point::origin(phi.dim())?;
    let rho = solve(phi)?;
    let phi0 = phi.add_point(origin)?;
    let rho0 = solve(&phi0)?;
    let sum = |cfg: &Config, rad: &RadiiAssignment| -> f64 {
        cfg.range_query(&origin, 2.0 * r, false)
            .into_iter()
            .map(|i| g(rad.radius(i)))
            .sum()
    };
    Ok(sum(&phi0, &rho0) - sum(phi, &rho))
}

/// Delta_g(phi): `None` when the external radius exceeds the cap.
pub fn add_one_cost_g(
    phi: &Config,
    g: impl Fn(f64) -> f64,
    r_cap: u32,
) -> Result<Option<f64>> {
    let rex = external_radius(phi, r_cap)?;
    if !rex.is_finite() {
        return Ok(None);
    }
    Ok(Some(add_one_cost_g_with_radius(phi, g, rex / 9.0)?))
}

/// Add-one cost of the component count at localization radius r:
/// N_0 - N, where N counts the clusters meeting B_{3r}(0) and N_0 counts
/// the components induced by those clusters plus the origin after
/// insertion.
pub fn add_one_cost_kappa_with_radius(phi: &Config, r: f64) -> Result<i64> {
    let origin = Point::origin(phi.dim())?;
    let rho = solve(phi)?;
    let comps = components(phi, &rho, 0.0)?;
    let near: std::collections::HashSet<usize> =
        phi.range_query(&origin, 3.0 * r, false).into_iter().collect();
    let star_comps: Vec<&Vec<usize>> = comps
        .iter()
        .filter(|c| c.iter().any(|i| near.contains(i)))
        .collect();
    let n = star_comps.len() as i64;
    let star: Vec<usize> = star_comps.iter().flat_map(|c| c.iter().copied()).collect();

    // components of phi^0 restricted to the star points plus the origin
    let phi0 = phi.add_point(origin)?;
    let rho0 = solve(&phi0)?;
    let mut verts: Vec<usize> = star
        .iter()
        .map(|&i| phi0.index_of(phi.point(i)).expect("point survives insertion"))
        .collect();
    verts.push(phi0.index_of(&origin).expect("origin inserted"));
    let mut ds = DisjointSets::new(verts.len());
    for a in 0..verts.len() {
        for b in a + 1..verts.len() {
            let (i, j) = (verts[a], verts[b]);
            let d = phi0.point(i).dist(phi0.point(j));
            if approx_leq(d, rho0.radius(i) + rho0.radius(j), EPS_GEO) {
                ds.union(a, b);
            }
        }
    }
    Ok(ds.count() as i64 - n)
}

/// Delta_kappa(phi): `None` when the external radius exceeds the cap.
pub fn add_one_cost_kappa(phi: &Config, r_cap: u32) -> Result<Option<i64>> {
    let rex = external_radius(phi, r_cap)?;
    if !rex.is_finite() {
        return Ok(None);
    }
    Ok(Some(add_one_cost_kappa_with_radius(phi, rex / 9.0)?))
}

/// Whether some component of the delta-enhanced union reaches from the
/// complement of B_{7r}(x) into B_r(x).
pub fn crossing(
    phi: &Config,
    rho: &RadiiAssignment,
    delta: f64,
    x: &Point,
    r: f64,
) -> Result<bool> {
    if phi.is_empty() {
        return Ok(false);
    }
    if rho.has_infinite() {
        // a lone grain fills all of space
        return Ok(true);
    }
    for comp in components(phi, rho, delta)? {
        let meets_inner = comp.iter().any(|&i| {
            approx_leq(phi.point(i).dist(x), r + rho.radius(i) + delta, EPS_GEO)
        });
        let meets_outer = comp
            .iter()
            .any(|&i| phi.point(i).dist(x) + rho.radius(i) + delta > 7.0 * r);
        if meets_inner && meets_outer {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether some component of the delta-enhanced union touches both
/// opposite faces of a cube window along `axis`.
pub fn face_crossing(
    phi: &Config,
    rho: &RadiiAssignment,
    delta: f64,
    window: &Window,
    axis: usize,
) -> Result<bool> {
    if window.shape != WindowShape::Cube {
        return Err(Error::NotACube);
    }
    if axis >= phi.dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    if phi.is_empty() {
        return Ok(false);
    }
    if rho.has_infinite() {
        return Ok(true);
    }
    let h = window.half_extent();
    for comp in components(phi, rho, delta)? {
        let hi = comp.iter().any(|&i| {
            approx_leq(h, phi.point(i).coords()[axis] + rho.radius(i) + delta, EPS_GEO)
        });
        let lo = comp.iter().any(|&i| {
            approx_leq(h, -phi.point(i).coords()[axis] + rho.radius(i) + delta, EPS_GEO)
        });
        if hi && lo {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_poisson, SeedSpec};

    fn cfg(dim: usize, pts: &[&[f64]]) -> Config {
        Config::new(dim, pts.iter().map(|c| Point::new(c).unwrap()).collect()).unwrap()
    }

    fn pt(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn components_line_examples() {
        let phi = cfg(1, &[&[0.0], &[1.0], &[10.0], &[11.0]]);
        let rho = solve(&phi).unwrap();
        let c0 = components(&phi, &rho, 0.0).unwrap();
        assert_eq!(c0, vec![vec![0, 1], vec![2, 3]]);
        let c45 = components(&phi, &rho, 4.5).unwrap();
        assert_eq!(c45.len(), 1);
    }

    #[test]
    fn components_coarsen_with_delta() {
        for rep in 0..20u64 {
            let w = Window::new(WindowShape::Cube, 2, 50.0).unwrap();
            let phi = sample_poisson(&w, SeedSpec::new(11, rep)).unwrap();
            if phi.len() < 2 {
                continue;
            }
            let rho = solve(&phi).unwrap();
            let mut prev: Option<Vec<Vec<usize>>> = None;
            for delta in [0.0, 0.2, 0.5, 1.5, 5.0] {
                let cur = components(&phi, &rho, delta).unwrap();
                if let Some(p) = &prev {
                    assert!(cur.len() <= p.len());
                    // each earlier component sits inside one later component
                    for old in p {
                        let host = cur.iter().find(|c| c.contains(&old[0])).unwrap();
                        assert!(old.iter().all(|i| host.contains(i)));
                    }
                }
                prev = Some(cur);
            }
        }
    }

    #[test]
    fn components_reject_infinite_radius() {
        let phi = cfg(1, &[&[0.0]]);
        let rho = solve(&phi).unwrap();
        assert!(components(&phi, &rho, 0.0).is_err());
        assert_eq!(kappa(&phi, &rho).unwrap(), 1);
    }

    #[test]
    fn cluster_stats_line_examples() {
        let phi = cfg(1, &[&[0.0], &[1.0], &[3.0], &[7.0]]);
        let rho = solve(&phi).unwrap();
        let s = cluster_stats(&pt(&[0.0]), &phi, &rho).unwrap();
        assert_eq!(s.cardinality, 4);
        assert!((s.volume - 10.0).abs() < 1e-12);
        assert!((s.diameter - 10.0).abs() < 1e-12);

        let phi2 = cfg(1, &[&[0.0], &[1.0], &[10.0], &[11.0]]);
        let rho2 = solve(&phi2).unwrap();
        let s2 = cluster_stats(&pt(&[0.0]), &phi2, &rho2).unwrap();
        assert_eq!(s2.cardinality, 2);
        assert!((s2.volume - 2.0).abs() < 1e-12);
        assert!((s2.diameter - 2.0).abs() < 1e-12);

        assert!(cluster_stats(&pt(&[5.0]), &phi2, &rho2).is_err());
    }

    #[test]
    fn two_point_diameter_is_twice_distance() {
        let phi = cfg(2, &[&[0.0, 0.0], &[1.5, 2.0]]);
        let rho = solve(&phi).unwrap();
        let s = cluster_stats(&pt(&[0.0, 0.0]), &phi, &rho).unwrap();
        assert!((s.diameter - 5.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_conventions_and_example() {
        let empty = Config::new(1, vec![]).unwrap();
        let rho_e = RadiiAssignment::from_radii(vec![]);
        assert_eq!(kappa(&empty, &rho_e).unwrap(), 0);

        let phi = cfg(1, &[&[0.0], &[1.0], &[10.0], &[11.0]]);
        let rho = solve(&phi).unwrap();
        assert_eq!(kappa(&phi, &rho).unwrap(), 2);
    }

    #[test]
    fn h_g_volume_identity_and_conventions() {
        let phi = cfg(1, &[&[0.0], &[1.0], &[3.0], &[7.0]]);
        let rho = solve(&phi).unwrap();
        let dim = phi.dim();
        let vol = h_g(&phi, &rho, |t| ball_volume(dim, t));
        assert!((vol - 10.0).abs() < 1e-12);
        assert_eq!(h_g(&phi, &rho, |_| 1.0), 4.0);

        let single = cfg(1, &[&[5.0]]);
        let rho_s = solve(&single).unwrap();
        assert_eq!(h_g(&single, &rho_s, |t| t), 0.0);
    }

    #[test]
    fn h_g_equals_component_volume_sum() {
        for rep in 0..10u64 {
            let w = Window::new(WindowShape::Cube, 2, 60.0).unwrap();
            let phi = sample_poisson(&w, SeedSpec::new(23, rep)).unwrap();
            if phi.len() < 2 {
                continue;
            }
            let rho = solve(&phi).unwrap();
            let dim = phi.dim();
            let total = h_g(&phi, &rho, |t| ball_volume(dim, t));
            let mut by_comp = 0.0;
            for (id, c) in components(&phi, &rho, 0.0).unwrap().into_iter().enumerate() {
                by_comp += stats_of(&phi, &rho, id, c).volume;
            }
            assert!((total - by_comp).abs() <= 1e-12 * (1.0 + total.abs()));
        }
    }

    /// Isolated pair {1, 3} plus fence groups at +-(5j + 0.1), +-(5j + 0.2)
    /// for j = 1..8; realizes G_5(0) while leaving the pair's radii at 1.
    fn fenced_pair() -> Config {
        let mut pts = vec![pt(&[1.0]), pt(&[3.0])];
        for j in 1..=8 {
            for off in [0.1, 0.2] {
                pts.push(pt(&[5.0 * j as f64 + off]));
                pts.push(pt(&[-(5.0 * j as f64 + off)]));
            }
        }
        Config::new(1, pts).unwrap()
    }

    #[test]
    fn add_one_cost_g_fenced_pair() {
        let phi = fenced_pair();
        let rex = external_radius(&phi, 8).unwrap();
        assert_eq!(rex, 45.0);
        let delta = add_one_cost_g(&phi, |t| 2.0 * t, 8).unwrap().unwrap();
        assert!((delta - 1.0).abs() < 1e-12, "delta = {delta}");
        let zero = add_one_cost_g(&phi, |_| 0.0, 8).unwrap().unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn add_one_cost_undefined_without_certificate() {
        let phi = cfg(1, &[&[1.0], &[3.0]]);
        assert!(add_one_cost_g(&phi, |t| t, 4).unwrap().is_none());
        assert!(add_one_cost_kappa(&phi, 4).unwrap().is_none());
    }

    #[test]
    fn add_one_cost_kappa_cases() {
        // origin joins the pair cluster without changing the count
        let phi = fenced_pair();
        assert_eq!(add_one_cost_kappa(&phi, 8).unwrap().unwrap(), 0);

        // a lone point near the origin splits off with it
        let split = cfg(1, &[&[0.3], &[4.9], &[5.1]]);
        assert_eq!(add_one_cost_kappa_with_radius(&split, 1.0).unwrap(), 1);

        // nothing near the origin: the inserted point is its own component
        let far = cfg(1, &[&[40.0], &[41.0]]);
        assert_eq!(add_one_cost_kappa_with_radius(&far, 1.0).unwrap(), 1);
    }

    #[test]
    fn add_one_cost_g_localization_identity() {
        // appending far points outside B_{9r} leaves the cost unchanged
        let phi = fenced_pair();
        let r = 5.0;
        let base = add_one_cost_g_with_radius(&phi, |t| 2.0 * t, r).unwrap();
        for far in [46.0, 50.0, -47.5, 80.0] {
            let phi2 = phi.add_point(pt(&[far])).unwrap();
            let d2 = add_one_cost_g_with_radius(&phi2, |t| 2.0 * t, r).unwrap();
            assert!((base - d2).abs() < 1e-12, "far point {far} changed the cost");
        }
    }

    #[test]
    fn crossing_chain_example() {
        // touching unit grains spanning [0, 8]
        let pts: Vec<&[f64]> = vec![&[0.5], &[1.5], &[2.5], &[3.5], &[4.5], &[5.5], &[6.5], &[7.5]];
        let phi = cfg(1, &pts);
        let rho = solve(&phi).unwrap();
        assert!(crossing(&phi, &rho, 0.0, &pt(&[0.0]), 1.0).unwrap());

        // everything inside B_r: no crossing
        let tight = cfg(1, &[&[0.1], &[0.2]]);
        let rho_t = solve(&tight).unwrap();
        assert!(!crossing(&tight, &rho_t, 0.0, &pt(&[0.0]), 1.0).unwrap());

        // large delta merges both sides
        let gap = cfg(1, &[&[0.4], &[0.6], &[9.0], &[9.5]]);
        let rho_g = solve(&gap).unwrap();
        assert!(!crossing(&gap, &rho_g, 0.0, &pt(&[0.0]), 1.0).unwrap());
        assert!(crossing(&gap, &rho_g, 5.0, &pt(&[0.0]), 1.0).unwrap());
    }

    #[test]
    fn face_crossing_cases() {
        let w = Window::cube_of_side(1, 4.0).unwrap();
        let empty = Config::new(1, vec![]).unwrap();
        let rho_e = RadiiAssignment::from_radii(vec![]);
        assert!(!face_crossing(&empty, &rho_e, 0.0, &w, 0).unwrap());

        // lone grain spans a tiny window
        let single = cfg(1, &[&[0.0]]);
        let rho_s = solve(&single).unwrap();
        assert!(face_crossing(&single, &rho_s, 0.0, &w, 0).unwrap());

        // monotone in delta
        let phi = cfg(1, &[&[-1.5], &[-0.5], &[0.7], &[1.6]]);
        let rho = solve(&phi).unwrap();
        let mut was = false;
        for delta in [0.0, 0.1, 0.3, 0.6, 1.0] {
            let now = face_crossing(&phi, &rho, delta, &w, 0).unwrap();
            assert!(now || !was, "crossing turned off as delta grew");
            was = now;
        }
        assert!(was);

        let ball = Window::new(WindowShape::Ball, 1, 4.0).unwrap();
        assert!(face_crossing(&phi, &rho, 0.0, &ball, 0).is_err());
        assert!(face_crossing(&phi, &rho, 0.0, &w, 3).is_err());
    }

    #[test]
    fn kappa_nonincreasing_in_delta() {
        for rep in 0..10u64 {
            let w = Window::new(WindowShape::Cube, 2, 60.0).unwrap();
            let phi = sample_poisson(&w, SeedSpec::new(31, rep)).unwrap();
            if phi.len() < 2 {
                continue;
            }
            let rho = solve(&phi).unwrap();
            let mut prev = usize::MAX;
            for delta in [0.0, 0.25, 0.5, 1.0, 2.0] {
                let k = components(&phi, &rho, delta).unwrap().len();
                assert!(k <= prev);
                prev = k;
            }
        }
    }
}
