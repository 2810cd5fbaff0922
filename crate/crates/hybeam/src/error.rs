use thiserror::Error;

/// Failure modes surfaced by the simulator stages.
///
/// Numerical guards convert the offending quantity to `f64` so the error
/// type stays independent of the scalar parameter.
#[derive(Debug, Error)]
pub enum Error {
    /// Greedy beam selection ran out of candidates for one user and the
    /// restoration fallback had nothing left to restore.
    #[error("analog codebook exhausted while filling user {user}")]
    CodebookExhausted { user: usize },

    /// Effective channel too close to singular for the requested inverse.
    #[error("effective channel is singular: sigma_max = {sigma_max:.3e}, sigma_min = {sigma_min:.3e}")]
    SingularChannel { sigma_max: f64, sigma_min: f64 },

    /// Gram matrix of the effective channel failed its conditioning guard.
    #[error("effective channel gram matrix is rank deficient (condition {cond:.3e})")]
    RankDeficient { cond: f64 },

    /// Per-user combiner system matrix was not invertible.
    #[error("combiner system for user {user} is singular")]
    SingularCombinerSystem { user: usize },

    /// Power normalization would divide by (numerically) zero.
    #[error("precoder radiates no power (trace {trace:.3e})")]
    ZeroPowerPrecoder { trace: f64 },

    /// Interference-plus-noise covariance was not invertible.
    #[error("interference-plus-noise covariance is singular for user {user}")]
    SingularCovariance { user: usize },

    /// Configuration rejected by [`crate::config::validate_config`].
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed input file (config, codebook or curve CSV).
    #[error("failed to parse {what}: {detail}")]
    Parse { what: String, detail: String },

    /// Error from an underlying I/O operation.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A Monte Carlo trial failed; carries the trial index and derived
    /// channel seed so the exact realization can be replayed.
    #[error("trial {trial} (channel seed {seed}) failed: {source}")]
    TrialFailure {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by numerical degeneracy rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularChannel { .. }
                | Error::RankDeficient { .. }
                | Error::SingularCombinerSystem { .. }
                | Error::ZeroPowerPrecoder { .. }
                | Error::SingularCovariance { .. }
                | Error::CodebookExhausted { .. }
        ) || matches!(self, Error::TrialFailure { source, .. } if source.is_numerical())
    }
}
