use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance matrix is not physical: symplectic eigenvalue {nu} < 1/2")]
    Unphysical { nu: f64 },

    #[error("covariance matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("degenerate homodyne measurement: measured variance {0:e} is below 1e-12")]
    DegenerateHomodyne(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("tail correction exhausts the epsilon budget (eps_mu = {eps_mu:e}); alpha is too small")]
    BudgetExhausted { eps_mu: f64 },

    #[error("AEP validity condition violated: n = {n} < {required:.1}")]
    AepInvalid { n: u64, required: f64 },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Json(_) => true,
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
