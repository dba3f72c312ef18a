//! Real- and imaginary-time propagation on the cylindrical grid.

pub mod operators;
mod propagator;
pub mod tridiag;

pub use propagator::{
    propagate, propagate_into, step, Absorber, Diagnostics, OutgoingProbe, PropagationRun,
    Propagator, PropagatorConfig, SnapshotSink, Splitting, SCHEME_ORDER,
};
