//! Strong-field tunnel ionization toolkit.
//!
//! The crate follows one electron from its bound state to the detector:
//!
//! - [`units`]: atomic units and the sine-squared few-cycle pulse, with the
//!   closed-form rotation angle `β(t)` and drift integral.
//! - [`grid`], [`potential`], [`atomic`]: the cylindrical `(z, ρ)` grid,
//!   binding potentials and imaginary-time ground states.
//! - [`tdse`]: real-time propagation with a unitary alternating-direction
//!   Crank–Nicolson splitting.
//! - [`phase_space`]: reduction along `ρ`, Wigner function, its momentum
//!   moments, the quantum momentum function and the tunnel region.
//! - [`classical`]: tunnel exit, QMF-seeded Newton–Lorentz trajectories and
//!   their comparison with the quantum momentum function.
//! - [`reconstruction`]: detector-to-exit momentum map and exit-time estimation.
//! - [`io`] and [`pipeline`]: run configuration, persisted products and the
//!   end-to-end pipeline used by the `strongfield` binary.

pub mod atomic;
pub mod classical;
pub mod error;
pub mod grid;
pub mod io;
pub mod phase_space;
pub mod pipeline;
pub mod potential;
pub mod reconstruction;
pub mod tdse;
pub mod units;

pub use error::{ConfigIssue, Error, Result};
pub use grid::{CylGrid, WavefunctionGrid};
pub use potential::{Potential, PotentialKind};
pub use units::{Constants, LaserPulse};
