use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: bad matrices, unknown letters, inconsistent cocycles.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// A configured memory or enumeration cap was hit.
    #[error("resource limit exceeded in {context}: {size} entries at radius {radius} (cap {cap})")]
    Resource {
        context: String,
        radius: usize,
        size: usize,
        cap: usize,
    },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("root bracket [{lo}, {hi}] does not change sign: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("{0}")]
    InsufficientData(String),

    #[error("Følner search exhausted its budget; best defect {best_defect} with |F| = {best_size} (not a proof of non-amenability)")]
    FolnerBudget { best_defect: f64, best_size: usize },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. } | Error::FolnerBudget { .. })
    }
}
