use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BegError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("schedule underflow at n={n}: beta={beta}, K={k}")]
    ScheduleUnderflow { n: usize, beta: f64, k: f64 },
    #[error("n={n} exceeds the exact-law cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("non-integrable coefficients b1={b1}, b2={b2}, b3={b3}")]
    NonIntegrable { b1: f64, b2: f64, b3: f64 },
    #[error("case {case}: {reason}")]
    InvalidCase { case: String, reason: String },
    #[error("need at least {needed} ladder points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate fit: all distances are equal")]
    DegenerateFit,
    #[error("{0}")]
    Format(String),
}

impl BegError {
    /// Validation errors are caused by the caller's input; everything else is a
    /// failure of the computation itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            BegError::InvalidParams(_)
                | BegError::NonFinite(_)
                | BegError::NonIntegrable { .. }
                | BegError::InvalidCase { .. }
                | BegError::Format(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BegError::InvalidParams(_) => "invalid_params",
            BegError::NonFinite(_) => "non_finite",
            BegError::ScheduleUnderflow { .. } => "schedule_underflow",
            BegError::CapExceeded { .. } => "cap_exceeded",
            BegError::NonIntegrable { .. } => "non_integrable",
            BegError::InvalidCase { .. } => "invalid_case",
            BegError::TooFewPoints { .. } => "too_few_points",
            BegError::DegenerateFit => "degenerate_fit",
            BegError::Format(_) => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, BegError>;
