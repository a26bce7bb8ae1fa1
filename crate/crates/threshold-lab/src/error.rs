use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("singular argument: {0}")]
    Singularity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} is numerically singular (smallest singular value {sigma_min:e})")]
    NearSingular { what: String, sigma_min: f64 },

    /// Carries a unit vector spanning the numerical kernel.
    #[error("{what} is singular along direction {direction:?}")]
    SingularDirection { what: String, direction: Vec<num_complex::Complex64> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("wrong threshold case: {0}")]
    WrongCase(String),

    /// rank T >= 2 while T D~ != 0: part of ker SD~S is s-wave like and part is not.
    /// The decision tree has no branch for this.
    #[error("mixed threshold: rank T = {rank_t} but T D~^2 T has rank {rank_td2t}")]
    MixedThreshold { rank_t: usize, rank_td2t: usize },

    #[error("zero-mode design requires a_j != 0 for all j (component {index} vanishes)")]
    DesignObstructed { index: usize },

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Error {
    /// Input problems as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Configuration(_) | Error::Domain(_) | Error::Precondition(_)
        )
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
