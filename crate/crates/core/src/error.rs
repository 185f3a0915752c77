use thiserror::Error;

/// Errors produced by the planning, observer and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate layout: {reason}{}", index_suffix(.index))]
    DegenerateLayout { index: Option<usize>, reason: String },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid prefix: {0}")]
    InvalidPrefix(String),

    #[error("cost list is empty")]
    EmptyCostList,

    #[error("cost at index {0} is not finite")]
    NonFiniteCost(usize),

    #[error("invalid rationality coefficient {0}; must be finite and > 0")]
    InvalidRationality(f64),

    #[error("horizon exceeded: t = {t} but layout has {targets} targets")]
    HorizonExceeded { t: usize, targets: usize },

    #[error("layout generation stalled after {attempts} rejected samples (layout {layout})")]
    GenerationStalled { layout: usize, attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("unknown layout id {0:?}")]
    UnknownLayout(String),

    #[error("layout file format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn index_suffix(index: &Option<usize>) -> String {
    match index {
        Some(i) => format!(" (index {i})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
