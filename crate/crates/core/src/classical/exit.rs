use serde::{Deserialize, Serialize};

use crate::grid::WavefunctionGrid;
use crate::phase_space::{radial_velocity, MomentProfiles};
use crate::potential::Potential;
use crate::units::LaserPulse;
use crate::{Error, Result};

/// Outer on-axis root of `V(z, 0) + qE(t_i) z = −I_p` on the downhill side.
pub fn exit_point(potential: &Potential, pulse: &LaserPulse, t_i: f64, ionization_potential: f64) -> Result<f64> {
    exit_point_at_field(potential, pulse.consts.q_e * pulse.electric_field(t_i), ionization_potential)
}

/// As [`exit_point`] for a given force scale `qE`.
///
/// The sign of the result is `−sign(qE)`, the side the force pushes the electron to.
pub fn exit_point_at_field(potential: &Potential, q_field: f64, ionization_potential: f64) -> Result<f64> {
    if !(q_field.abs() > 1e-300) || !q_field.is_finite() {
        return Err(Error::InvalidInput("exit point needs a nonzero field".into()));
    }
    if !(ionization_potential > 0.0) {
        return Err(Error::InvalidInput(format!("I_p must be > 0, got {ionization_potential}")));
    }
    let side = -q_field.signum();
    let f = q_field.abs();
    // distance s ≥ 0 along the downhill axis
    let g = |s: f64| potential.value(side * s, 0.0) - f * s + ionization_potential;
    let dg = |s: f64| side * potential.dv_dz(side * s, 0.0) - f;

    // barrier top: dg changes sign once beyond the steepest point of the well
    let mut lo = (potential.core_length() / std::f64::consts::SQRT_2).max(1e-6);
    if dg(lo) <= 0.0 {
        return Err(Error::NoBarrier { field: q_field });
    }
    let mut hi = lo.max(1.0);
    while dg(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoBarrier { field: q_field });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dg(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let top = 0.5 * (lo + hi);
    let g_top = g(top);
    if g_top < -1e-12 {
        return Err(Error::NoBarrier { field: q_field });
    }
    if g_top <= 0.0 {
        return Ok(side * top);
    }
    let mut lo = top;
    let mut hi = 2.0 * top;
    while g(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(side * 0.5 * (lo + hi))
}

/// Transverse exit momentum model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransverseModel {
    #[default]
    Zero,
    /// Mean radial current velocity on the exit row.
    CurrentBased,
}

/// `(p_z0, p_ρ0)` at the exit from the QMF and the chosen transverse model.
///
/// `wf` is needed for [`TransverseModel::CurrentBased`].
pub fn seed_from_qmf(
    profiles: &MomentProfiles,
    exit_z: f64,
    model: TransverseModel,
    wf: Option<&WavefunctionGrid>,
) -> Result<(f64, f64)> {
    let p_z0 = match profiles.qmf_at(exit_z) {
        Some(q) => q,
        None => {
            let a = profiles
                .nearest_valid(exit_z, 2.0 * profiles.dz)
                .ok_or(Error::MaskedOut { z: exit_z })?;
            profiles.qmf[a]
        }
    };
    let p_rho0 = match model {
        TransverseModel::Zero => 0.0,
        TransverseModel::CurrentBased => {
            let wf = wf.ok_or_else(|| Error::InvalidInput("current_based model needs the wavefunction".into()))?;
            radial_velocity(wf, exit_z)
        }
    };
    Ok((p_z0, p_rho0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CylGrid;
    use crate::phase_space::{moments, reduce_to_z, wigner, ZWindow, DEFAULT_MEMORY_BUDGET};
    use num_complex::Complex64;

    #[test]
    fn quadratic_roots() {
        let h = Potential::coulomb(1.0);
        // outer root of 0.05 s² − 0.5 s + 1 = 0
        let outer = 5.0 + 5.0f64.sqrt();
        assert!((exit_point_at_field(&h, -0.05, 0.5).unwrap() - outer).abs() < 1e-10);
        assert!((exit_point_at_field(&h, 0.05, 0.5).unwrap() + outer).abs() < 1e-10);
        assert!((exit_point_at_field(&h, -0.0625, 0.5).unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn over_barrier_and_zero_field() {
        let h = Potential::coulomb(1.0);
        assert!(matches!(exit_point_at_field(&h, 0.07, 0.5), Err(Error::NoBarrier { .. })));
        assert!(exit_point_at_field(&h, 0.0, 0.5).is_err());
    }

    #[test]
    fn soft_core_root_satisfies_equation() {
        let p = Potential::soft_core(1.0, 1.0);
        let z = exit_point_at_field(&p, -0.03, 0.4).unwrap();
        assert!(z > 0.0);
        assert!((p.value(z, 0.0) - 0.03 * z + 0.4).abs() < 1e-10);
    }

    #[test]
    fn pulse_exit_follows_field_sign() {
        let pulse = LaserPulse::new(0.095, 0.057).unwrap();
        let h = Potential::coulomb(1.0);
        assert!(pulse.electric_field(145.0) < 0.0);
        assert!(exit_point(&h, &pulse, 145.0, 0.5).unwrap() > 0.0);
    }

    fn profiles(k: f64, real: bool) -> (WavefunctionGrid, MomentProfiles) {
        let g = CylGrid::new(-20.0, 20.0, 201, 8.0, 40).unwrap();
        let wf = WavefunctionGrid::from_fn(g, |z, r| {
            let env = (-(z - 6.0).powi(2) / 8.0 - r * r / 4.0).exp();
            if real {
                Complex64::new(env, 0.0)
            } else {
                Complex64::from_polar(env, k * z)
            }
        });
        let win = ZWindow::new(-20.0, 20.0);
        let m = moments(&wigner(&reduce_to_z(&wf, win, DEFAULT_MEMORY_BUDGET).unwrap()).unwrap(), 1, 1e-8);
        (wf, m)
    }

    #[test]
    fn seeds_from_boosted_packet() {
        let (wf, m) = profiles(0.3, false);
        let (pz, pr) = seed_from_qmf(&m, 6.1, TransverseModel::Zero, None).unwrap();
        assert!((pz - 0.3).abs() < 1e-6);
        assert_eq!(pr, 0.0);
        let (_, pr) = seed_from_qmf(&m, 6.1, TransverseModel::CurrentBased, Some(&wf)).unwrap();
        assert!(pr.abs() < 1e-12);
        let (_, m0) = profiles(0.0, true);
        assert!(seed_from_qmf(&m0, 6.0, TransverseModel::Zero, None).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn masked_exit_is_reported() {
        let (_, mut m) = profiles(0.3, false);
        m.mask.iter_mut().for_each(|b| *b = false);
        assert!(matches!(
            seed_from_qmf(&m, 6.0, TransverseModel::Zero, None),
            Err(Error::MaskedOut { .. })
        ));
    }
}
