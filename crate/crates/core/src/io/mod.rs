//! Run configuration and persisted products.
//!
//! Arrays are raw little-endian files with a TOML sidecar; tables are
//! tab-separated text. A `manifest.toml` lists every file with its SHA-256.

mod config;
mod manifest;
mod product;
mod table;

pub use config::{
    OnsetConfig, OutputConfig, PhaseSpaceConfig, PulseConfig, ReconstructionConfig, RunConfig, TrajectoryConfig,
};
pub use manifest::{error_kind, read_array_checked, sha256_hex, Entry, Failure, Manifest, OutputDir, ProductKind, Skipped, MANIFEST_NAME};
pub use product::{ArrayMeta, ArrayProduct, Axis, Element};
pub use table::{format_float, parse_numeric, read_numeric, Cell, Table};
