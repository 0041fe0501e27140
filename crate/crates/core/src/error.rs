use thiserror::Error;

use crate::model::ActionPair;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `p_u = 0` against a positive attack: `ln(p_a / p_u + 1)` has no finite value.
    #[error("risk is unbounded for zero protection against attack level {attack}")]
    UnboundedRisk { attack: f64 },

    /// The loss distribution collapses to a point mass at zero when the risk is zero.
    #[error("loss distribution is a point mass at zero (risk level is zero)")]
    DegenerateRisk,

    #[error("user is not insurable: insurability margin {margin} is not positive")]
    NotInsurable { margin: f64 },

    #[error("premium {premium} exceeds the participation cap {cap}")]
    PremiumAboveCap { premium: f64, cap: f64 },

    #[error("best-response iteration did not converge after {iterations} iterations (last iterate {last:?})")]
    NonConvergence { iterations: usize, last: ActionPair },

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
