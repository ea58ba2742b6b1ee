use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `m = sqrt(gamma_-^2 - g^2)` vanishes and the optimal mode function has a
    /// removable singularity that is not handled.
    #[error("degenerate coupling: m = 0 (g_eff equals (gamma_o - gamma_m) / 2)")]
    DegenerateCoupling,

    #[error("{what} evaluated outside its domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("estimator called on an empty ensemble")]
    EmptyEnsemble,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
