//! Domain types and the primitive formulas of the model.
//!
//! The user picks a protection level `p_u`, the attacker an attack level
//! `p_a`, both in `[0, 1]`. They fix the risk level `R = ln(p_a / p_u + 1)`,
//! which is the mean of an exponentially distributed direct loss `X`. Under
//! a linear policy the insurer reimburses `sX`, so the user keeps the
//! effective loss `ξ = (1 - s)X` and evaluates it through `H(ξ) = e^{γξ}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Margins in `(0, NEAR_BOUNDARY)` are feasible but numerically on the edge.
pub const NEAR_BOUNDARY: f64 = 1e-9;

/// Market prices of protection and attack, plus the insurer's trade-off weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Cost per unit of user protection effort (`c_u`).
    #[serde(rename = "cu")]
    pub protection_cost: f64,
    /// Cost per unit of attack effort (`c_a`).
    #[serde(rename = "ca")]
    pub attack_cost: f64,
    /// Weight of the insurer's operating profit against user safety (`c_s`).
    #[serde(rename = "cs", default)]
    pub tradeoff: f64,
}

impl MarketParams {
    pub fn new(protection_cost: f64, attack_cost: f64, tradeoff: f64) -> Result<Self> {
        let market = Self {
            protection_cost,
            attack_cost,
            tradeoff,
        };
        market.validate()?;
        Ok(market)
    }

    pub fn validate(&self) -> Result<()> {
        positive("cu", self.protection_cost)?;
        positive("ca", self.attack_cost)?;
        if !(self.tradeoff.is_finite() && self.tradeoff >= 0.0) {
            return Err(invalid(
                "cs",
                format!("must be finite and >= 0, got {}", self.tradeoff),
            ));
        }
        Ok(())
    }

    /// Risk level at the saddle point, `ln(c_u / c_a + 1)`. It does not depend on
    /// the coverage level.
    pub fn equilibrium_risk(&self) -> f64 {
        (self.protection_cost / self.attack_cost).ln_1p()
    }
}

/// Risk-averse user with loss disutility `H(ξ) = e^{γξ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRiskProfile {
    #[serde(rename = "gamma")]
    pub risk_aversion: f64,
}

impl UserRiskProfile {
    pub fn new(risk_aversion: f64) -> Result<Self> {
        let profile = Self { risk_aversion };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.risk_aversion)
    }

    /// Exponent `γ(1 - s)` applied to the direct loss once coverage `s` is in place.
    pub fn retained_aversion(&self, coverage: f64) -> f64 {
        self.risk_aversion * (1.0 - coverage)
    }
}

/// Linear insurance contract: reimburse `coverage · X` for a fixed `premium`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsurancePolicy {
    #[serde(rename = "s")]
    pub coverage: f64,
    #[serde(rename = "t", default)]
    pub premium: f64,
}

impl InsurancePolicy {
    pub fn new(coverage: f64, premium: f64) -> Result<Self> {
        let policy = Self { coverage, premium };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        check_coverage(self.coverage)?;
        if !(self.premium.is_finite() && self.premium >= 0.0) {
            return Err(invalid(
                "t",
                format!("must be finite and >= 0, got {}", self.premium),
            ));
        }
        Ok(())
    }
}

/// Protection level of the user and attack level of the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionPair {
    #[serde(rename = "p_u")]
    pub protection: f64,
    #[serde(rename = "p_a")]
    pub attack: f64,
}

impl ActionPair {
    pub fn new(protection: f64, attack: f64) -> Result<Self> {
        unit_interval("p_u", protection)?;
        unit_interval("p_a", attack)?;
        Ok(Self { protection, attack })
    }

    /// `p_a / p_u`, or `None` when the user exerts no protection.
    pub fn ratio(&self) -> Option<f64> {
        (self.protection > 0.0).then(|| self.attack / self.protection)
    }
}

/// A finite expectation, or one that diverges to `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Finite(f64),
    Divergent,
}

impl Outcome {
    pub fn finite(self) -> Option<f64> {
        match self {
            Outcome::Finite(v) => Some(v),
            Outcome::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, Outcome::Divergent)
    }

    /// Divergent outcomes map to `+inf`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Everything a caller wants to know about the user/attacker equilibrium
/// induced by a given policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub actions: ActionPair,
    pub risk: f64,
    pub expected_direct_loss: f64,
    pub expected_effective_loss: f64,
    pub expected_payout: f64,
    pub policy: InsurancePolicy,
    pub feasible: bool,
    pub interior: bool,
    /// Insurability margin `1 - γ(1-s)R`.
    pub margin: f64,
    pub near_boundary: bool,
}

impl EquilibriumReport {
    /// Fills in the loss accounting for exponential losses with mean `risk`:
    /// `E(X) = R`, `E(ξ) = (1-s)R`, `E(sX) = sR`.
    pub fn new(
        actions: ActionPair,
        risk: f64,
        policy: InsurancePolicy,
        margin: f64,
        interior: bool,
    ) -> Self {
        let s = policy.coverage;
        Self {
            actions,
            risk,
            expected_direct_loss: risk,
            expected_effective_loss: (1.0 - s) * risk,
            expected_payout: s * risk,
            policy,
            feasible: margin > 0.0,
            interior,
            margin,
            near_boundary: is_near_boundary(margin),
        }
    }
}

/// Risk level `R = ln(p_a / p_u + 1)`.
///
/// No attack means no risk, so `p_a = 0` yields 0 for any protection level,
/// including the no-effort state `(0, 0)`. Zero protection against a
/// positive attack has unbounded risk and is reported as
/// [`Error::UnboundedRisk`].
pub fn risk_level(actions: ActionPair) -> Result<f64> {
    let ActionPair { protection, attack } = actions;
    if attack == 0.0 {
        return Ok(0.0);
    }
    if protection == 0.0 {
        return Err(Error::UnboundedRisk { attack });
    }
    Ok((attack / protection).ln_1p())
}

/// `E[H(ξ)] = 1 / (1 - γ(1-s)R)` when the denominator is positive, divergent
/// otherwise.
pub fn expected_loss_factor(risk: f64, profile: UserRiskProfile, coverage: f64) -> Result<Outcome> {
    if !(risk.is_finite() && risk >= 0.0) {
        return Err(invalid(
            "risk",
            format!("must be finite and >= 0, got {risk}"),
        ));
    }
    check_coverage(coverage)?;
    let margin = 1.0 - profile.retained_aversion(coverage) * risk;
    Ok(if margin > 0.0 {
        Outcome::Finite(1.0 / margin)
    } else {
        Outcome::Divergent
    })
}

/// `1 - γ(1-s)·r(p_u, p_a)`; positive exactly on the feasible action set.
///
/// At full coverage the risk term carries a zero weight and the margin is 1
/// even where the risk itself is unbounded.
pub fn feasibility_margin(
    actions: ActionPair,
    profile: UserRiskProfile,
    coverage: f64,
) -> Result<f64> {
    check_coverage(coverage)?;
    let weight = profile.retained_aversion(coverage);
    if weight == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - weight * risk_level(actions)?)
}

pub fn is_near_boundary(margin: f64) -> bool {
    margin > 0.0 && margin < NEAR_BOUNDARY
}

/// Zero-sum objective `K = γ(1-s)R + c_u p_u - c_a p_a`: the user minimizes
/// it, the attacker maximizes it. Outside the feasible set the cost is
/// infinite.
pub fn zero_sum_payoff(
    actions: ActionPair,
    profile: UserRiskProfile,
    coverage: f64,
    market: MarketParams,
) -> Result<Outcome> {
    check_coverage(coverage)?;
    let value = payoff(
        actions.protection,
        actions.attack,
        profile.retained_aversion(coverage),
        market,
    );
    Ok(if value.is_finite() {
        Outcome::Finite(value)
    } else {
        Outcome::Divergent
    })
}

/// Unchecked form of [`zero_sum_payoff`] for the grid sweeps; `+inf` marks
/// infeasible points. `weight` is `γ(1-s)`.
#[inline]
pub(crate) fn payoff(protection: f64, attack: f64, weight: f64, market: MarketParams) -> f64 {
    let effort = market.protection_cost * protection - market.attack_cost * attack;
    if weight == 0.0 {
        return effort;
    }
    let loss = if attack == 0.0 {
        0.0
    } else if protection == 0.0 {
        return f64::INFINITY;
    } else {
        weight * (attack / protection).ln_1p()
    };
    if 1.0 - loss > 0.0 {
        loss + effort
    } else {
        f64::INFINITY
    }
}

/// Density `(1/R) e^{-x/R}` of the direct loss at the risk level produced by `actions`.
pub fn loss_density(x: f64, actions: ActionPair) -> Result<f64> {
    exponential_density(x, risk_level(actions)?)
}

/// Exponential density with mean `risk`.
pub fn exponential_density(x: f64, risk: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(invalid("x", format!("must be finite and >= 0, got {x}")));
    }
    if risk == 0.0 {
        return Err(Error::DegenerateRisk);
    }
    if !(risk.is_finite() && risk > 0.0) {
        return Err(invalid(
            "risk",
            format!("must be finite and > 0, got {risk}"),
        ));
    }
    Ok((-x / risk).exp() / risk)
}

pub(crate) fn check_coverage(s: f64) -> Result<()> {
    unit_interval("s", s)
}

fn unit_interval(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in [0, 1], got {v}")))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}
