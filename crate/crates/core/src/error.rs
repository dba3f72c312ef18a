use std::fmt;

/// A single config validation failure, addressed by its key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("imaginary-time relaxation did not converge after {iterations} iterations (last energy change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("tridiagonal solve hit a zero pivot at row {row}")]
    SolverSingular { row: usize },

    #[error("propagation aborted: non-finite wavefunction at t = {time}")]
    Aborted { time: f64 },

    #[error("window of {points} points needs {bytes} bytes, over the budget of {budget} bytes")]
    WindowTooLarge { points: usize, bytes: u64, budget: u64 },

    #[error("Wigner transform imaginary residue {residue:e} exceeds {limit:e}")]
    ImagResidue { residue: f64, limit: f64 },

    #[error("no level crossing found on the grid")]
    EmptyRegion,

    #[error("no tunnel barrier at field {field} (over-the-barrier or zero field)")]
    NoBarrier { field: f64 },

    #[error("no valid quantum momentum sample near z = {z}")]
    MaskedOut { z: f64 },

    #[error("trajectory step unstable at t = {time}: relative energy change {change:e}")]
    StepUnstable { time: f64, change: f64 },

    #[error("detector momentum {p_z_d} is outside the drift range over [{t_lo}, {t_hi}]")]
    NoRoot { p_z_d: f64, t_lo: f64, t_hi: f64 },

    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("malformed product: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
