use super::wigner::PhaseSpaceMap;

/// Default density floor below which the QMF is left unreported.
pub const DEFAULT_P0_FLOOR: f64 = 1e-8;

/// Momentum moments `P_n(z)` and the quantum momentum function `P₁/P₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfiles {
    pub z: Vec<f64>,
    pub dz: f64,
    /// `moments[n][a] = P_n(z_a)`.
    pub moments: Vec<Vec<f64>>,
    /// `P₁/P₀` where `mask` holds, NaN elsewhere.
    pub qmf: Vec<f64>,
    pub mask: Vec<bool>,
    pub p0_floor: f64,
    pub time: f64,
}

impl MomentProfiles {
    /// Builds the QMF from `P₀` and `P₁` under the floor.
    pub fn from_moments(z: Vec<f64>, dz: f64, moments: Vec<Vec<f64>>, p0_floor: f64, time: f64) -> Self {
        let (p0, p1) = (&moments[0], &moments[1]);
        let mask: Vec<bool> = p0.iter().map(|&d| d >= p0_floor).collect();
        let qmf = mask
            .iter()
            .zip(p0.iter().zip(p1))
            .map(|(&m, (d, j))| if m { j / d } else { f64::NAN })
            .collect();
        MomentProfiles {
            z,
            dz,
            moments,
            qmf,
            mask,
            p0_floor,
            time,
        }
    }

    pub fn p0(&self) -> &[f64] {
        &self.moments[0]
    }

    pub fn p1(&self) -> &[f64] {
        &self.moments[1]
    }

    pub fn n_max(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Index of the masked-in sample nearest to `z`, within `max_dist`.
    pub fn nearest_valid(&self, z: f64, max_dist: f64) -> Option<usize> {
        (0..self.z.len())
            .filter(|&a| self.mask[a] && (self.z[a] - z).abs() <= max_dist + 1e-12)
            .min_by(|&a, &b| (self.z[a] - z).abs().total_cmp(&(self.z[b] - z).abs()))
    }

    /// Linear interpolation of the QMF; `None` unless both neighbours are masked in.
    pub fn qmf_at(&self, z: f64) -> Option<f64> {
        let first = *self.z.first()?;
        let s = (z - first) / self.dz;
        if s < 0.0 || s > (self.z.len() - 1) as f64 {
            return None;
        }
        let a = (s.floor() as usize).min(self.z.len().saturating_sub(2));
        let f = s - a as f64;
        if self.z.len() == 1 {
            return self.mask[0].then_some(self.qmf[0]);
        }
        (self.mask[a] && self.mask[a + 1]).then(|| self.qmf[a] * (1.0 - f) + self.qmf[a + 1] * f)
    }

    /// `P₀` interpolated linearly, zero outside.
    pub fn density_at(&self, z: f64) -> f64 {
        let Some(&first) = self.z.first() else { return 0.0 };
        let s = (z - first) / self.dz;
        if s < 0.0 || s > (self.z.len() - 1) as f64 || self.z.len() < 2 {
            return 0.0;
        }
        let a = (s.floor() as usize).min(self.z.len() - 2);
        let f = s - a as f64;
        self.p0()[a] * (1.0 - f) + self.p0()[a + 1] * f
    }

    /// Joins profiles from overlapping tiles, keeping the first sample at each `z`.
    pub fn concat(parts: &[MomentProfiles]) -> Option<MomentProfiles> {
        let first = parts.first()?;
        let n_mom = first.moments.len();
        let mut z = Vec::new();
        let mut moments = vec![Vec::new(); n_mom];
        for part in parts {
            for (a, &za) in part.z.iter().enumerate() {
                if z.last().is_some_and(|&l: &f64| za <= l + 0.5 * first.dz) {
                    continue;
                }
                z.push(za);
                for (n, m) in moments.iter_mut().enumerate() {
                    m.push(part.moments[n][a]);
                }
            }
        }
        Some(MomentProfiles::from_moments(z, first.dz, moments, first.p0_floor, first.time))
    }
}

/// Moments `P_0 … P_{n_max}` by the discrete `p` quadrature of the map.
///
/// The lowest bin sits at the Nyquist momentum and stands for both `±π/(2dz)`,
/// so it enters with the even part `pⁿ(1 + (−1)ⁿ)/2`.
pub fn moments(ps: &PhaseSpaceMap, n_max: usize, p0_floor: f64) -> MomentProfiles {
    let n_max = n_max.max(1);
    let np = ps.n_p();
    let weights: Vec<Vec<f64>> = (0..=n_max)
        .map(|n| {
            ps.p
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let pn = p.powi(n as i32);
                    if k == 0 && np % 2 == 0 {
                        pn * (1.0 + (-1.0f64).powi(n as i32)) / 2.0
                    } else {
                        pn
                    }
                })
                .collect()
        })
        .collect();
    let moments = weights
        .iter()
        .map(|wn| {
            (0..ps.n_z())
                .map(|a| ps.row(a).iter().zip(wn).map(|(w, p)| w * p).sum::<f64>() * ps.dp)
                .collect()
        })
        .collect();
    MomentProfiles::from_moments(ps.z.clone(), ps.dz, moments, p0_floor, ps.time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{wigner, ReducedDensity};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn boosted(k: f64) -> MomentProfiles {
        let n = 201;
        let dz = 0.1;
        let z0 = -10.0;
        let amp: Vec<Complex64> = (0..n)
            .map(|a| {
                let z = z0 + a as f64 * dz;
                Complex64::from_polar(PI.powf(-0.25) * (-(z - 1.0).powi(2) / 2.0).exp(), k * z)
            })
            .collect();
        moments(&wigner(&ReducedDensity::from_pure(z0, dz, &amp, 0.0)).unwrap(), 2, 1e-8)
    }

    #[test]
    fn real_state_has_no_current() {
        let m = boosted(0.0);
        assert!(m.valid_count() > 50);
        for (q, ok) in m.qmf.iter().zip(&m.mask) {
            if *ok {
                assert!(q.abs() < 1e-12);
            } else {
                assert!(q.is_nan());
            }
        }
    }

    #[test]
    fn boost_shifts_qmf() {
        for k in [0.25, 0.5, 1.0] {
            let m = boosted(k);
            for (q, ok) in m.qmf.iter().zip(&m.mask) {
                if *ok {
                    assert!((q - k).abs() < 1e-6, "k={k} q={q}");
                }
            }
            // second moment: P₂/P₀ = k² + 1/2 for the unit Gaussian
            let a = m.z.iter().position(|z| (z - 1.0).abs() < 1e-9).unwrap();
            assert!((m.moments[2][a] / m.p0()[a] - (k * k + 0.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn interpolation_and_nearest() {
        let m = boosted(0.5);
        assert!((m.qmf_at(1.03).unwrap() - 0.5).abs() < 1e-6);
        assert!(m.qmf_at(50.0).is_none());
        assert_eq!(m.nearest_valid(1.04, 0.2).map(|a| m.z[a]), Some(m.z[110]));
        let halves = [
            MomentProfiles::from_moments(m.z[..120].to_vec(), m.dz, m.moments.iter().map(|v| v[..120].to_vec()).collect(), 1e-8, 0.0),
            MomentProfiles::from_moments(m.z[100..].to_vec(), m.dz, m.moments.iter().map(|v| v[100..].to_vec()).collect(), 1e-8, 0.0),
        ];
        let joined = MomentProfiles::concat(&halves).unwrap();
        assert_eq!(joined.z, m.z);
        assert_eq!(joined.moments, m.moments);
    }
}
