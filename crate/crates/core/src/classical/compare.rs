use super::dynamics::Trajectory;
use crate::phase_space::{MomentProfiles, PhaseSpaceMap};
use crate::{Error, Result};

/// One snapshot row of a trajectory-vs-QMF comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmfDeviation {
    pub t: f64,
    pub z_cl: f64,
    pub p_cl: f64,
    pub qmf: f64,
    /// `|p_cl − qmf(z_cl)|`.
    pub delta_p: f64,
    /// `argmax_p W(z_cl, p)`, when a map was supplied.
    pub ridge_p: Option<f64>,
    /// `P₀(z_cl) / max P₀`.
    pub density_weight: f64,
    /// `density_weight · |p_cl − ridge_p|`.
    pub ridge_distance: Option<f64>,
}

/// Deviation of `traj` from the QMF at every profile time inside its support.
///
/// `maps` may be empty; a map is matched to a profile by time.
pub fn compare_to_qmf(traj: &Trajectory, profiles: &[MomentProfiles], maps: &[PhaseSpaceMap]) -> Result<Vec<QmfDeviation>> {
    let mut rows = Vec::new();
    for prof in profiles {
        let Some(state) = traj.state_at(prof.time) else {
            continue;
        };
        if prof.time <= traj.spec.t_i {
            continue;
        }
        let qmf = match prof.qmf_at(state.z) {
            Some(q) => q,
            None => {
                let a = prof
                    .nearest_valid(state.z, 2.0 * prof.dz)
                    .ok_or(Error::MaskedOut { z: state.z })?;
                prof.qmf[a]
            }
        };
        let peak = prof.p0().iter().copied().fold(0.0, f64::max);
        let density_weight = if peak > 0.0 { prof.density_at(state.z) / peak } else { 0.0 };
        let ridge_p = maps
            .iter()
            .find(|m| (m.time - prof.time).abs() < 1e-9)
            .and_then(|m| m.row_near(state.z).map(|a| m.ridge(a)));
        rows.push(QmfDeviation {
            t: prof.time,
            z_cl: state.z,
            p_cl: state.p_z,
            qmf,
            delta_p: (state.p_z - qmf).abs(),
            ridge_p,
            density_weight,
            ridge_distance: ridge_p.map(|r| density_weight * (state.p_z - r).abs()),
        });
    }
    Ok(rows)
}

pub fn mean_delta_p(rows: &[QmfDeviation]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    rows.iter().map(|r| r.delta_p).sum::<f64>() / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{ClassicalState, TrajectorySpec};

    fn profile(t: f64, slope: f64) -> MomentProfiles {
        let z: Vec<f64> = (0..401).map(|a| -20.0 + 0.1 * a as f64).collect();
        let p0: Vec<f64> = z.iter().map(|z| (-(z * z) / 50.0).exp()).collect();
        let p1: Vec<f64> = z.iter().zip(&p0).map(|(z, d)| slope * z * d).collect();
        MomentProfiles::from_moments(z, 0.1, vec![p0, p1], 1e-8, t)
    }

    fn follower(times: &[f64], slope: f64) -> Trajectory {
        // z(t) = e^{slope t}·z₀ has p = slope·z, the QMF of `profile`
        let states: Vec<ClassicalState> = times
            .iter()
            .map(|&t| {
                let z = 2.0 * (slope * (t - times[0])).exp();
                ClassicalState { t, x: 0.0, z, p_x: 0.0, p_z: slope * z }
            })
            .collect();
        Trajectory {
            spec: TrajectorySpec::simple_man(times[0], 2.0, false, false),
            final_momentum: (states.last().unwrap().p_z, 0.0),
            states,
            long_run_momentum: None,
            dt: 5.0,
        }
    }

    #[test]
    fn synthetic_follower_has_zero_deviation() {
        let tr = follower(&[145.0, 150.0, 155.0, 160.0, 165.0, 170.0], 0.01);
        let profs: Vec<_> = [145.0, 150.0, 160.0, 170.0].iter().map(|&t| profile(t, 0.01)).collect();
        let rows = compare_to_qmf(&tr, &profs, &[]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), vec![150.0, 160.0, 170.0]);
        for r in &rows {
            assert!(r.delta_p < 1e-12, "{}", r.delta_p);
            assert!(r.ridge_p.is_none());
        }
        assert!(mean_delta_p(&rows) < 1e-12);
    }

    #[test]
    fn leaving_the_mask_is_an_error() {
        let tr = follower(&[145.0, 150.0], 0.01);
        let mut prof = profile(150.0, 0.01);
        prof.mask.iter_mut().for_each(|m| *m = false);
        assert!(matches!(compare_to_qmf(&tr, &[prof], &[]), Err(Error::MaskedOut { .. })));
    }
}
