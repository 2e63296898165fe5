use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Sideslip angle is undefined (or at +-pi/2) because surge speed is not positive.
    #[error("sideslip singular: surge speed u = {u} <= 0")]
    SingularSideslip { u: f64 },

    /// Reduced surge gain fell below the invertibility guard.
    #[error("reduced surge gain {b_ul:e} below guard {guard:e}")]
    GainSingular { b_ul: f64, guard: f64 },

    /// Two traces cannot be compared sample by sample.
    #[error("time grids differ: {0}")]
    GridMismatch(String),

    /// State became non-finite during integration.
    #[error("state diverged (non-finite) at t = {t} s")]
    Diverged { t: f64 },

    #[error("time {t} s outside the reference specification")]
    OutOfRange { t: f64 },

    /// Every violated invariant, collected in one pass.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("failed at step {step} (t = {t} s): {source}")]
    AtStep {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips step context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors that signal a singularity guard tripping at run time.
    pub fn is_guard_trip(&self) -> bool {
        matches!(
            self.root(),
            Error::SingularSideslip { .. } | Error::GainSingular { .. } | Error::Diverged { .. }
        )
    }
}
