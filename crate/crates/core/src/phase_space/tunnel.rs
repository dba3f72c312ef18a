use std::collections::HashMap;

use crate::grid::CylGrid;
use crate::potential::Potential;
use crate::units::LaserPulse;
use crate::{Error, Result};

/// Open or closed chain of `(z, ρ)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

/// Boundary of `{V(z, ρ) + qE z > level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TunnelRegion {
    pub field: f64,
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

impl TunnelRegion {
    /// Crossings of the boundary with the axis row `ρ = 0`, ascending.
    pub fn axis_crossings(&self) -> Vec<f64> {
        let mut zs: Vec<f64> = self
            .polylines
            .iter()
            .flat_map(|l| l.points.iter())
            .filter(|(_, r)| *r == 0.0)
            .map(|(z, _)| *z)
            .collect();
        zs.sort_by(f64::total_cmp);
        zs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        zs
    }
}

/// Boundary at the field of `pulse` at time `t`.
pub fn tunnel_region(potential: &Potential, pulse: &LaserPulse, t: f64, level: f64, grid: &CylGrid) -> Result<TunnelRegion> {
    tunnel_region_at_field(potential, pulse.electric_field(t), pulse.consts.q_e, level, grid)
}

/// Marching squares on nodes `(z_k, jΔρ)`, `j = 0..=n_ρ`, with each edge
/// crossing refined by bisection on the exact function.
pub fn tunnel_region_at_field(potential: &Potential, field: f64, charge: f64, level: f64, grid: &CylGrid) -> Result<TunnelRegion> {
    let f = |z: f64, r: f64| potential.value(z, r) + charge * field * z - level;
    let (nz, nr) = (grid.n_z, grid.n_rho + 1);
    let rho = |j: usize| j as f64 * grid.drho();
    let vals: Vec<f64> = (0..nz).flat_map(|k| (0..nr).map(move |j| (k, j))).map(|(k, j)| f(grid.z(k), rho(j))).collect();
    let v = |k: usize, j: usize| vals[k * nr + j];
    let inside = |k: usize, j: usize| v(k, j) > 0.0;
    if vals.iter().all(|&x| x > 0.0) || vals.iter().all(|&x| x <= 0.0) {
        return Err(Error::EmptyRegion);
    }

    // edge ids: horizontal (k,j)-(k+1,j) → 2·(k·nr + j); vertical (k,j)-(k,j+1) → 2·(k·nr + j) + 1
    let h_edge = |k: usize, j: usize| 2 * (k * nr + j);
    let v_edge = |k: usize, j: usize| 2 * (k * nr + j) + 1;
    let mut points: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut crossing = |id: usize| -> (f64, f64) {
        *points.entry(id).or_insert_with(|| {
            let node = id / 2;
            let (k, j) = (node / nr, node % nr);
            let (a, b) = if id % 2 == 0 {
                ((grid.z(k), rho(j)), (grid.z(k + 1), rho(j)))
            } else {
                ((grid.z(k), rho(j)), (grid.z(k), rho(j + 1)))
            };
            refine(&f, a, b)
        })
    };

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for k in 0..nz - 1 {
        for j in 0..nr - 1 {
            // corners counter-clockwise from (k, j)
            let c = [inside(k, j), inside(k + 1, j), inside(k + 1, j + 1), inside(k, j + 1)];
            let e = [h_edge(k, j), v_edge(k + 1, j), h_edge(k, j + 1), v_edge(k, j)];
            let case = c.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as usize) << i));
            let pairs: &[(usize, usize)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 | 10 => {
                    let centre = f(grid.z(k) + 0.5 * grid.dz(), rho(j) + 0.5 * grid.drho()) > 0.0;
                    if centre == (case == 5) {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                segments.push((e[a], e[b]));
            }
        }
    }
    for &(a, b) in &segments {
        crossing(a);
        crossing(b);
    }

    let polylines = link(&segments)
        .into_iter()
        .map(|(ids, closed)| Polyline {
            points: ids.iter().map(|id| points[id]).collect(),
            closed,
        })
        .collect();
    Ok(TunnelRegion { field, level, polylines })
}

fn refine(f: &impl Fn(f64, f64) -> f64, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let at = |s: f64| (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
    let fa = f(a.0, a.1);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = at(mid);
        if (f(p.0, p.1) > 0.0) == (fa > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Chains segments that share edge ids.
fn link(segments: &[(usize, usize)]) -> Vec<(Vec<usize>, bool)> {
    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let other = |s: usize, e: usize| if segments[s].0 == e { segments[s].1 } else { segments[s].0 };
    let next = |used: &[bool], e: usize| by_edge[&e].iter().copied().find(|&s| !used[s]);
    // start open chains at edges seen once, then sweep closed loops
    let mut starts: Vec<usize> = by_edge.iter().filter(|(_, v)| v.len() == 1).map(|(&e, _)| e).collect();
    starts.sort_unstable();
    let all: Vec<usize> = (0..segments.len()).collect();
    for (start_edge, open) in starts.into_iter().map(|e| (Some(e), true)).chain(all.iter().map(|_| (None, false))) {
        let (mut chain, mut e) = match start_edge {
            Some(e) => match next(&used, e) {
                Some(_) => (vec![e], e),
                None => continue,
            },
            None => match used.iter().position(|u| !u) {
                Some(s) => {
                    let e = segments[s].0;
                    (vec![e], e)
                }
                None => break,
            },
        };
        while let Some(s) = next(&used, e) {
            used[s] = true;
            e = other(s, e);
            chain.push(e);
        }
        let closed = !open && chain.len() > 2 && chain.first() == chain.last();
        if closed {
            chain.pop();
        }
        out.push((chain, closed));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> CylGrid {
        CylGrid::new(-12.0, 12.0, 241, 10.0, 100).unwrap()
    }

    #[test]
    fn zero_field_boundary_is_a_circle() {
        let g = grid();
        let region = tunnel_region_at_field(&Potential::coulomb(1.0), 0.0, 1.0, -0.5, &g).unwrap();
        assert_eq!(region.polylines.len(), 1);
        let line = &region.polylines[0];
        assert!(!line.closed);
        for (z, r) in &line.points {
            assert!(((z * z + r * r).sqrt() - 2.0).abs() < g.dz());
        }
        let ax = region.axis_crossings();
        assert_eq!(ax.len(), 2);
        assert!((ax[0] + 2.0).abs() < 1e-9 && (ax[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn downhill_axis_roots() {
        let region = tunnel_region_at_field(&Potential::coulomb(1.0), -0.05, 1.0, -0.5, &grid()).unwrap();
        let ax = region.axis_crossings();
        let s5 = 5.0f64.sqrt();
        for root in [5.0 - s5, 5.0 + s5] {
            assert!(ax.iter().any(|z| (z - root).abs() < 1e-9), "{ax:?}");
        }
    }

    #[test]
    fn barrier_suppression_merges_roots() {
        let g = CylGrid::new(-12.0, 12.0, 2401, 10.0, 100).unwrap();
        let below = tunnel_region_at_field(&Potential::coulomb(1.0), -0.0624, 1.0, -0.5, &g).unwrap();
        let pos: Vec<f64> = below.axis_crossings().into_iter().filter(|z| *z > 1.0).collect();
        assert_eq!(pos.len(), 2);
        assert!(pos.iter().all(|z| (z - 4.0).abs() < 0.2), "{pos:?}");
        let at = tunnel_region_at_field(&Potential::coulomb(1.0), -0.0626, 1.0, -0.5, &g).unwrap();
        assert!(at.axis_crossings().iter().all(|z| *z < 1.0));
    }

    #[test]
    fn uniform_sign_is_empty() {
        let err = tunnel_region_at_field(&Potential::coulomb(1.0), 0.0, 1.0, 5.0, &grid()).unwrap_err();
        assert!(matches!(err, Error::EmptyRegion));
    }
}
