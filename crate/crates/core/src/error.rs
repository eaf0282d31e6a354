/// Errors surfaced by the simulation core.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    /// A parameter or config value failed validation.
    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },

    /// A geometric input failed validation (degenerate polygon, out-of-bounds
    /// vertex, malformed zone).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A quantity that must stay finite became NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An operation was called outside its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input inference could not be completed.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// The decoded obstacle residual was not consistent with any point inside
    /// the reaction radius.
    #[error("inconsistent reactive residual: decoded distance {decoded} below zero tolerance")]
    InconsistentResidual { decoded: f64 },

    /// The planner could not produce a usable input sequence.
    #[error("solver failed: {0}")]
    Solver(String),

    /// The two agents latched different role-switch decisions in the same
    /// period. Cannot happen under exact state estimates; kept as a guard.
    #[error("role-switch decisions diverged at period {period}")]
    SwitchConsistency { period: u32 },

    /// Randomized obstacle placement kept leaving the workspace.
    #[error("obstacle placement failed after {attempts} attempts for obstacle {obstacle}")]
    Placement { obstacle: usize, attempts: u32 },
}
