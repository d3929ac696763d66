use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("mdp validation failed: {0}")]
    MdpValidation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible threshold: {0}")]
    InfeasibleThreshold(String),

    #[error("lambda cap too small: {0}")]
    LambdaCapTooSmall(String),

    #[error("empty demonstration set")]
    EmptyDemonstrations,

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code class: 1 for input/validation problems, 2 for runtime
    /// failures encountered after inputs were accepted.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_)
            | Error::Invalid(_)
            | Error::MdpValidation(_)
            | Error::Config(_)
            | Error::InfeasibleThreshold(_) => 1,
            _ => 2,
        }
    }
}
