use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An input outside the domain of an operation (zero inverse, empty message, n > pool).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid code parameters: {0}")]
    Parameter(String),

    /// Shapes that do not line up: wrong cell count, malformed wire bytes, missing generations.
    #[error("structural error: {0}")]
    Structural(String),

    /// Fewer than k linearly independent coded cells reached the decoder.
    #[error("generation {generation_id} is unrecoverable: rank {rank} < k = {k}")]
    UnrecoverableGeneration {
        generation_id: u32,
        rank: usize,
        k: usize,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("resource guard exceeded: {requested} > {limit}")]
    Resource { requested: u128, limit: u128 },

    /// The transport pipeline and the blocked-count rule disagreed on a trial.
    #[error("consistency violation in trial {trial}: rule says interrupted={rule}, pipeline says interrupted={pipeline}")]
    Consistency {
        trial: u64,
        rule: bool,
        pipeline: bool,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
