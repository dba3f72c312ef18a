//! Classical electron motion after the tunnel exit.
//!
//! States live in the `(x, z)` plane: `z` along the polarization, `x` along
//! propagation. The force is `ṗ = −q(E + v×B) − ∇V` with `E = E ẑ` and
//! `B = B_y ŷ`.

mod compare;
mod dynamics;
mod exit;

pub use compare::{compare_to_qmf, mean_delta_p, QmfDeviation};
pub use dynamics::{
    integrate, integrate_with, ClassicalState, Flags, IntegrateOptions, Model, Trajectory, TrajectorySpec,
    DEFAULT_CORE_SOFTENING, DEFAULT_TRAJ_DT, LONG_RUN_EXTRA,
};
pub use exit::{exit_point, exit_point_at_field, seed_from_qmf, TransverseModel};
