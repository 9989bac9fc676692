use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("loss of significance in {func}: {detail}")]
    LossOfSignificance { func: &'static str, detail: String },

    #[error("{func} did not converge after {iterations} iterations")]
    NonConvergence { func: &'static str, iterations: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sampling failed: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
