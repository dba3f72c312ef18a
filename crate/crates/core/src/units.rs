//! Hartree atomic units and the few-cycle laser pulse.
//!
//! The pulse is linearly polarized along `z` with a sine-squared envelope
//! spanning three carrier periods:
//!
//! ```text
//! E(t) = E0 sin²(ωτ/6) cos(ωτ),   τ = t − t_start ∈ [0, 6π/ω]
//! ```
//!
//! and exactly zero outside that window. Envelope maximum and carrier
//! extremum coincide at `τ = 3π/ω` where `E = −E0`. The closed-form phase
//! `β(t) = E0/(16cω) [6 sin(2ωτ/3) − 8 sin(ωτ) + 3 sin(4ωτ/3)]` satisfies
//! `β′ = −E/c` and vanishes at both ends of the pulse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Speed of light in atomic units.
pub const C_LIGHT: f64 = 137.035999;

/// The four constants every formula in the crate draws from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub hbar: f64,
    pub m_e: f64,
    pub q_e: f64,
    pub c_light: f64,
}

impl Constants {
    pub const ATOMIC: Constants = Constants {
        hbar: 1.0,
        m_e: 1.0,
        q_e: 1.0,
        c_light: C_LIGHT,
    };

    /// Atomic units with a substituted speed of light (for scaling checks).
    pub fn with_c(c_light: f64) -> Self {
        Constants {
            c_light,
            ..Self::ATOMIC
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::ATOMIC
    }
}

/// Time-dependent field seen by a classical charge: `E` along `z`, `B` along `y`.
pub trait FieldProfile {
    fn electric(&self, t: f64) -> f64;
    fn magnetic_y(&self, t: f64) -> f64;
    fn constants(&self) -> Constants;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserPulse {
    pub e0: f64,
    pub omega: f64,
    pub t_start: f64,
    pub consts: Constants,
}

impl LaserPulse {
    pub fn new(e0: f64, omega: f64) -> crate::Result<Self> {
        Self::with_start(e0, omega, 0.0)
    }

    pub fn with_start(e0: f64, omega: f64, t_start: f64) -> crate::Result<Self> {
        if !(e0 >= 0.0 && e0.is_finite()) {
            return Err(crate::Error::InvalidInput(format!("E0 must be >= 0, got {e0}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(crate::Error::InvalidInput(format!("omega must be > 0, got {omega}")));
        }
        if !t_start.is_finite() {
            return Err(crate::Error::InvalidInput("t_start must be finite".into()));
        }
        Ok(LaserPulse {
            e0,
            omega,
            t_start,
            consts: Constants::ATOMIC,
        })
    }

    pub fn with_constants(mut self, consts: Constants) -> Self {
        self.consts = consts;
        self
    }

    pub fn duration(&self) -> f64 {
        6.0 * PI / self.omega
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration()
    }

    /// Time of the envelope maximum, where `E = −E0`.
    pub fn t_peak(&self) -> f64 {
        self.t_start + 3.0 * PI / self.omega
    }

    /// Half-cycle window centred on the main peak; the field keeps one sign inside.
    pub fn peak_half_cycle(&self) -> (f64, f64) {
        let half = 0.5 * PI / self.omega;
        (self.t_peak() - half, self.t_peak() + half)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end()
    }

    /// Carrier phase `ωτ`, with `τ` clamped to the pulse support.
    fn clamped_phase(&self, t: f64) -> f64 {
        self.omega * (t - self.t_start).clamp(0.0, self.duration())
    }

    pub fn electric_field(&self, t: f64) -> f64 {
        if !self.contains(t) {
            return 0.0;
        }
        let u = self.omega * (t - self.t_start);
        let env = (u / 6.0).sin();
        self.e0 * env * env * u.cos()
    }

    /// Bracketed trigonometric sum shared by `beta` and `field_drift`.
    fn phase_sum(u: f64) -> f64 {
        6.0 * (2.0 * u / 3.0).sin() - 8.0 * u.sin() + 3.0 * (4.0 * u / 3.0).sin()
    }

    /// Rotation angle accumulated by `(p_z, c − p_x)` from `t_i` to the pulse end.
    /// Clamped to the boundary value (zero) outside the pulse.
    pub fn beta(&self, t_i: f64) -> f64 {
        let u = self.clamped_phase(t_i);
        self.e0 / (16.0 * self.consts.c_light * self.omega) * Self::phase_sum(u)
    }

    /// `∫_{t_i}^{t_end} E(t) dt`, from the closed-form antiderivative.
    pub fn field_drift(&self, t_i: f64) -> f64 {
        let antiderivative =
            |u: f64| -self.e0 / (16.0 * self.omega) * Self::phase_sum(u);
        antiderivative(self.omega * self.duration()) - antiderivative(self.clamped_phase(t_i))
    }

    /// `y` component of the plane-wave magnetic field for propagation along
    /// `+x`: `B = x̂ × E / c`, so `B_y = −E/c`.
    pub fn magnetic_field(&self, t: f64) -> f64 {
        -self.electric_field(t) / self.consts.c_light
    }

    /// Keldysh parameter `ω √(2 I_p) / E0`.
    pub fn keldysh(&self, ionization_potential: f64) -> f64 {
        self.omega * (2.0 * ionization_potential).sqrt() / self.e0
    }
}

impl FieldProfile for LaserPulse {
    fn electric(&self, t: f64) -> f64 {
        self.electric_field(t)
    }

    fn magnetic_y(&self, t: f64) -> f64 {
        self.magnetic_field(t)
    }

    fn constants(&self) -> Constants {
        self.consts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse() -> LaserPulse {
        LaserPulse::new(0.095, 0.057).unwrap()
    }

    /// Composite Gauss–Legendre (5-point) quadrature, used as the oracle.
    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let mid = a + (k as f64 + 0.5) * h;
                X.iter()
                    .zip(W.iter())
                    .map(|(x, w)| w * f(mid + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    #[test]
    fn field_endpoints_and_peak() {
        let p = pulse();
        assert_eq!(p.electric_field(0.0), 0.0);
        assert_eq!(p.electric_field(-1.0), 0.0);
        assert_eq!(p.electric_field(p.t_end() + 1e-9), 0.0);
        assert!((p.electric_field(p.t_peak()) + p.e0).abs() < 1e-15);
        assert!((p.t_peak() - 165.346).abs() < 1e-3);
    }

    #[test]
    fn beta_vanishes_at_start_and_peak() {
        let p = pulse();
        assert_eq!(p.beta(p.t_start), 0.0);
        assert!(p.beta(p.t_peak()).abs() < 1e-15);
        assert!(p.beta(p.t_end()).abs() < 1e-15);
        // clamped outside support
        assert_eq!(p.beta(-50.0), p.beta(0.0));
        assert_eq!(p.beta(p.t_end() + 50.0), p.beta(p.t_end()));
    }

    #[test]
    fn beta_derivative_is_minus_field_over_c() {
        let p = pulse();
        let c = p.consts.c_light;
        let h = 1e-3;
        let n = 10_000;
        let mut worst = 0.0f64;
        for k in 1..n {
            let t = p.duration() * k as f64 / n as f64;
            let d = (p.beta(t + h) - p.beta(t - h)) / (2.0 * h);
            worst = worst.max((d + p.electric_field(t) / c).abs());
        }
        assert!(worst < 1e-8 * p.e0 / c, "worst {worst:e}");
    }

    #[test]
    fn beta_matches_quadrature() {
        let p = pulse();
        let c = p.consts.c_light;
        for &t in &[10.0, 77.7, 145.0, 165.0, 200.0, 300.0] {
            let q = -quad(|s| p.electric_field(s), 0.0, t, 400) / c;
            assert!((p.beta(t) - q).abs() < 1e-10, "t={t}: {} vs {q}", p.beta(t));
        }
    }

    #[test]
    fn field_drift_matches_quadrature() {
        let p = pulse();
        assert_eq!(p.field_drift(p.t_end()), 0.0);
        let full = quad(|s| p.electric_field(s), 0.0, p.t_end(), 800);
        assert!(full.abs() < 1e-10 * p.e0 * p.duration());
        assert!(p.field_drift(p.t_start).abs() < 1e-12);
        for &t in &[20.0, 145.0, 160.0, 250.0] {
            let q = quad(|s| p.electric_field(s), t, p.t_end(), 800);
            assert!((p.field_drift(t) - q).abs() < 1e-10);
        }
    }

    #[test]
    fn magnetic_field_scales_with_inverse_c() {
        let p = pulse();
        assert_eq!(p.magnetic_field(-3.0), 0.0);
        assert!((p.magnetic_field(p.t_peak()).abs() - p.e0 / C_LIGHT).abs() < 1e-18);
        let slow = p.with_constants(Constants::with_c(10.0 * C_LIGHT));
        let t = 150.0;
        assert_eq!(slow.electric_field(t), p.electric_field(t));
        assert!((slow.magnetic_field(t) * 10.0 - p.magnetic_field(t)).abs() < 1e-18);
        assert!((slow.beta(t) * 10.0 - p.beta(t)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LaserPulse::new(-0.1, 0.05).is_err());
        assert!(LaserPulse::new(0.1, 0.0).is_err());
    }
}
