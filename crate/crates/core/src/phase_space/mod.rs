//! Phase-space analysis along the polarization axis.
//!
//! The 3D field is reduced along `ρ` to a one-dimensional density matrix
//! `ρ_red(z, z′) = ∫ Ψ*(z′, ρ) Ψ(z, ρ) 2πρ dρ`, whose Wigner function
//!
//! ```text
//! W(z, p) = (1/π) ∫ dζ e^{2ipζ} ρ_red(z − ζ, z + ζ)
//! ```
//!
//! is sampled either with `ζ` on the `z` grid ([`wigner`]) or at `dz/2` on
//! the trigonometric interpolant of the grid state ([`wigner_spectral`]).
//! Its momentum moments give the quantum momentum function `p̄(z) = P₁(z)/P₀(z)`.

mod current;
mod moments;
mod reduce;
mod spectral;
mod tunnel;
mod wigner;

pub use current::{qmf_from_current, radial_velocity};
pub use moments::{moments, MomentProfiles, DEFAULT_P0_FLOOR};
pub use reduce::{reduce_amplitude, reduce_to_z, ReducedDensity, ReductionMode, ZWindow, DEFAULT_MEMORY_BUDGET};
pub use spectral::{half_step_values, wigner_spectral, LagSampling};
pub use tunnel::{tunnel_region, tunnel_region_at_field, Polyline, TunnelRegion};
pub use wigner::{
    reduction_discrepancy, tile_windows, wigner, wigner_rows, wigner_tiled, PhaseSpaceMap, IMAG_RESIDUE_LIMIT,
};
