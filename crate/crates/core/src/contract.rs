//! The insurer's contract design problem.
//!
//! The insurer anticipates the saddle-point risk `R* = ln(c_u/c_a + 1)` and
//! picks a linear policy `(s, T)` minimizing
//! `J_i = γ(1-s)R* + c_s(sR* - T)` subject to four conditions:
//!
//! * IR-u: `T ≤ R*` (insuring is no worse than staying uninsured),
//! * IC-u: `s ≥ T / R*`,
//! * IR-i: `T - sR* ≥ 0` (non-negative operating profit),
//! * F-i:  `s > 1 - 1/(γR*)` (the user is insurable).
//!
//! IC-u and IR-i pin every acceptable policy to the line `T = sR*`, so the
//! insurer's operating profit is always zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{closed_form_spe, insurability_margin};
use crate::model::{ActionPair, EquilibriumReport, InsurancePolicy, MarketParams, UserRiskProfile};

/// Slack below which a constraint counts as binding.
pub const BINDING_TOLERANCE: f64 = 1e-9;

/// Closes the strict F-i inequality for the vertex enumeration.
pub const FEASIBILITY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    #[serde(rename = "IR-u")]
    IrUser,
    #[serde(rename = "IC-u")]
    IcUser,
    #[serde(rename = "IR-i")]
    IrInsurer,
    #[serde(rename = "F-i")]
    FeasibilityInsurer,
}

impl Constraint {
    pub const ALL: [Constraint; 4] = [
        Constraint::IrUser,
        Constraint::IcUser,
        Constraint::IrInsurer,
        Constraint::FeasibilityInsurer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::IrUser => "IR-u",
            Constraint::IcUser => "IC-u",
            Constraint::IrInsurer => "IR-i",
            Constraint::FeasibilityInsurer => "F-i",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintVerdict {
    pub ir_user: bool,
    pub ic_user: bool,
    pub ir_insurer: bool,
    pub feasibility_insurer: bool,
    pub binding: Vec<Constraint>,
}

impl ConstraintVerdict {
    pub fn all_hold(&self) -> bool {
        self.ir_user && self.ic_user && self.ir_insurer && self.feasibility_insurer
    }
}

/// Largest premium the user accepts: `T_max = R*`.
pub fn premium_cap(market: MarketParams) -> f64 {
    market.equilibrium_risk()
}

/// Smallest coverage the user accepts at premium `T`: `s_0 = T / R*`.
pub fn min_coverage(premium: f64, market: MarketParams) -> Result<f64> {
    let cap = premium_cap(market);
    if !(premium.is_finite() && premium >= 0.0) {
        return Err(crate::error::invalid(
            "t",
            format!("must be finite and >= 0, got {premium}"),
        ));
    }
    if premium > cap {
        return Err(Error::PremiumAboveCap { premium, cap });
    }
    Ok((premium / cap).min(1.0))
}

/// Coverage floor of F-i, `1 - 1/(γR*)`. Can be negative.
pub fn coverage_floor(market: MarketParams, profile: UserRiskProfile) -> f64 {
    1.0 - 1.0 / (profile.risk_aversion * market.equilibrium_risk())
}

/// Slack of each constraint, written so that `slack ≥ 0` means "holds"
/// (strictly `> 0` for F-i).
pub fn constraint_slacks(
    policy: InsurancePolicy,
    market: MarketParams,
    profile: UserRiskProfile,
) -> [(Constraint, f64); 4] {
    let r = market.equilibrium_risk();
    let InsurancePolicy {
        coverage: s,
        premium: t,
    } = policy;
    [
        (Constraint::IrUser, r - t),
        // s ≥ T/R*, scaled by R* > 0 so it mirrors IR-i exactly
        (Constraint::IcUser, s * r - t),
        (Constraint::IrInsurer, t - s * r),
        (
            Constraint::FeasibilityInsurer,
            insurability_margin(profile, s, market),
        ),
    ]
}

pub fn check_constraints(
    policy: InsurancePolicy,
    market: MarketParams,
    profile: UserRiskProfile,
) -> ConstraintVerdict {
    let slacks = constraint_slacks(policy, market, profile);
    let holds = |c: Constraint| {
        let (_, v) = slacks.iter().find(|(k, _)| *k == c).copied().unwrap();
        match c {
            Constraint::FeasibilityInsurer => v > 0.0,
            _ => v >= 0.0,
        }
    };
    ConstraintVerdict {
        ir_user: holds(Constraint::IrUser),
        ic_user: holds(Constraint::IcUser),
        ir_insurer: holds(Constraint::IrInsurer),
        feasibility_insurer: holds(Constraint::FeasibilityInsurer),
        binding: slacks
            .iter()
            .filter(|(_, v)| v.abs() < BINDING_TOLERANCE)
            .map(|(c, _)| *c)
            .collect(),
    }
}

/// Insurer objective `J_i = γ(1-s)R* + c_s(sR* - T)`.
pub fn insurer_objective(
    policy: InsurancePolicy,
    market: MarketParams,
    profile: UserRiskProfile,
) -> f64 {
    let r = market.equilibrium_risk();
    let s = policy.coverage;
    profile.risk_aversion * (1.0 - s) * r + market.tradeoff * (s * r - policy.premium)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySolution {
    pub policy: InsurancePolicy,
    pub objective: f64,
    pub binding: Vec<Constraint>,
    /// Vertices of the feasible polygon in `(s, T)`, in enumeration order.
    pub vertices: Vec<(f64, f64)>,
}

/// Half-plane `a·s + b·T ≤ c`.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    a: f64,
    b: f64,
    c: f64,
}

impl HalfPlane {
    fn contains(&self, s: f64, t: f64) -> bool {
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs()).max(1.0);
        self.a * s + self.b * t <= self.c + 1e-12 * scale
    }

    fn intersect(&self, other: &HalfPlane) -> Option<(f64, f64)> {
        let det = self.a * other.b - other.a * self.b;
        if det.abs() < 1e-14 {
            return None;
        }
        let s = (self.c * other.b - other.c * self.b) / det;
        let t = (self.a * other.c - other.a * self.c) / det;
        // `+ 0.0` turns -0 into 0
        Some((s + 0.0, t + 0.0))
    }
}

/// Solves the insurer's two-variable linear program by enumerating the
/// vertices of the constraint polygon. Ties go to the larger coverage, then
/// the larger premium.
pub fn solve_insurer_lp(market: MarketParams, profile: UserRiskProfile) -> PolicySolution {
    let r = market.equilibrium_risk();
    let floor = coverage_floor(market, profile) + FEASIBILITY_EPSILON;
    let planes = [
        HalfPlane {
            a: -1.0,
            b: 0.0,
            c: 0.0,
        }, // s ≥ 0
        HalfPlane {
            a: 1.0,
            b: 0.0,
            c: 1.0,
        }, // s ≤ 1
        HalfPlane {
            a: 0.0,
            b: -1.0,
            c: 0.0,
        }, // T ≥ 0
        HalfPlane {
            a: 0.0,
            b: 1.0,
            c: r,
        }, // IR-u
        HalfPlane {
            a: -r,
            b: 1.0,
            c: 0.0,
        }, // IC-u: T ≤ sR*
        HalfPlane {
            a: r,
            b: -1.0,
            c: 0.0,
        }, // IR-i: T ≥ sR*
        HalfPlane {
            a: -1.0,
            b: 0.0,
            c: -floor,
        }, // F-i
    ];

    let mut vertices: Vec<(f64, f64)> = Vec::new();
    for (i, p) in planes.iter().enumerate() {
        for q in &planes[i + 1..] {
            if let Some((s, t)) = p.intersect(q) {
                if planes.iter().all(|h| h.contains(s, t)) && !vertices.contains(&(s, t)) {
                    vertices.push((s, t));
                }
            }
        }
    }

    // s = 1, T = R* satisfies every constraint, so the list is never empty
    let mut best: Option<(f64, f64, f64)> = None;
    for &(s, t) in &vertices {
        let j = insurer_objective(
            InsurancePolicy {
                coverage: s,
                premium: t,
            },
            market,
            profile,
        );
        let better = match best {
            None => true,
            Some((bj, bs, bt)) => {
                let tol = 1e-12 * bj.abs().max(1.0);
                j < bj - tol || ((j - bj).abs() <= tol && (s > bs || (s == bs && t > bt)))
            }
        };
        if better {
            best = Some((j, s, t));
        }
    }
    let (objective, coverage, premium) = best.expect("feasible polygon is never empty");
    let policy = InsurancePolicy {
        coverage: coverage.clamp(0.0, 1.0),
        premium: premium.max(0.0),
    };
    PolicySolution {
        policy,
        objective,
        binding: check_constraints(policy, market, profile).binding,
        vertices,
    }
}

/// Bi-level equilibrium: the insurer's optimal policy plus the saddle point it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgneSolution {
    pub policy: InsurancePolicy,
    pub actions: ActionPair,
    pub insurer_objective: f64,
    /// `K` at the saddle point.
    pub user_payoff: f64,
    /// Operating profit `T - sR*`.
    pub zero_profit_check: f64,
    pub report: EquilibriumReport,
}

pub fn compose_bgne(market: MarketParams, profile: UserRiskProfile) -> Result<BgneSolution> {
    let lp = solve_insurer_lp(market, profile);
    let policy = lp.policy;
    let spe = closed_form_spe(profile, policy.coverage, market)?;
    let r = market.equilibrium_risk();
    let margin = insurability_margin(profile, policy.coverage, market);
    Ok(BgneSolution {
        policy,
        actions: spe.actions,
        insurer_objective: lp.objective,
        user_payoff: spe.payoff,
        zero_profit_check: policy.premium - policy.coverage * r,
        report: EquilibriumReport::new(spe.actions, r, policy, margin, spe.interior),
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn market(cu: f64, ca: f64, cs: f64) -> MarketParams {
        MarketParams::new(cu, ca, cs).unwrap()
    }

    fn gamma(g: f64) -> UserRiskProfile {
        UserRiskProfile::new(g).unwrap()
    }

    fn policy(s: f64, t: f64) -> InsurancePolicy {
        InsurancePolicy::new(s, t).unwrap()
    }

    /// Exhaustive grid over (s, T) ∈ [0,1] × [0, T_max]; feasibility checked
    /// with a relative tolerance since `T = sR*` never holds exactly on a grid.
    fn grid_search(m: MarketParams, p: UserRiskProfile, n: usize) -> (f64, f64, f64) {
        let r = premium_cap(m);
        let floor = coverage_floor(m, p);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=n {
            let s = i as f64 / n as f64;
            for j in 0..=n {
                let t = j as f64 * r / n as f64;
                let tol = 1e-12 * r.max(1.0);
                let ok = t <= r + tol && (t - s * r).abs() <= tol && s > floor;
                if ok {
                    let v = p.risk_aversion * (1.0 - s) * r + m.tradeoff * (s * r - t);
                    if v < best.0 {
                        best = (v, s, t);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn premium_cap_examples() {
        assert_relative_eq!(premium_cap(market(1.0, 1.0, 0.0)), 0.693147, epsilon = 1e-6);
        assert!(premium_cap(market(1e-12, 1.0, 0.0)) < 1e-11);
        assert_relative_eq!(premium_cap(market(1.0, 3.0, 0.0)), 0.287682, epsilon = 1e-6);
    }

    #[test]
    fn premium_cap_is_monotone() {
        let cs = [0.1, 0.5, 1.0, 2.0, 5.0];
        for w in cs.windows(2) {
            assert!(premium_cap(market(w[1], 1.0, 0.0)) > premium_cap(market(w[0], 1.0, 0.0)));
            assert!(premium_cap(market(1.0, w[1], 0.0)) < premium_cap(market(1.0, w[0], 0.0)));
        }
    }

    #[test]
    fn min_coverage_examples() {
        let m = market(1.0, 1.0, 0.0);
        assert_eq!(min_coverage(0.0, m).unwrap(), 0.0);
        assert_relative_eq!(min_coverage(0.3465735, m).unwrap(), 0.5, epsilon = 1e-6);
        assert_eq!(min_coverage(LN_2, m).unwrap(), 1.0);
        assert!(matches!(
            min_coverage(0.7, m),
            Err(Error::PremiumAboveCap { .. })
        ));
    }

    #[test]
    fn constraint_examples() {
        let v = check_constraints(policy(1.0, LN_2), market(1.0, 1.0, 0.0), gamma(1.0));
        assert!(v.all_hold());
        assert!(v.binding.contains(&Constraint::IrInsurer));
        assert!(v.binding.contains(&Constraint::IcUser));

        let m = market(1.0, 1.0, 0.0);
        assert_relative_eq!(coverage_floor(m, gamma(2.0)), 0.278652, epsilon = 1e-6);
        let v = check_constraints(policy(0.2, 0.0), m, gamma(2.0));
        assert!(!v.feasibility_insurer);
        // T = 0 < sR*: the insurer would also run a loss
        assert!(v.ir_user && v.ic_user && !v.ir_insurer);

        assert_relative_eq!(coverage_floor(m, gamma(1.0)), -0.442695, epsilon = 1e-6);
        let v = check_constraints(policy(0.0, 0.0), m, gamma(1.0));
        assert!(v.all_hold());
    }

    #[test]
    fn lp_examples() {
        let sol = solve_insurer_lp(market(1.0, 1.0, 1.0), gamma(1.0));
        assert_eq!(sol.policy.coverage, 1.0);
        assert_relative_eq!(sol.policy.premium, 0.693147, epsilon = 1e-6);
        assert_eq!(sol.objective, 0.0);

        let sol = solve_insurer_lp(market(1.0, 3.0, 0.5), gamma(2.0));
        assert_eq!(sol.policy.coverage, 1.0);
        assert_relative_eq!(sol.policy.premium, 0.287682, epsilon = 1e-6);
        assert_eq!(sol.objective, 0.0);

        let sol = solve_insurer_lp(market(1.0, 1.0, 0.0), gamma(1.0));
        assert_eq!((sol.policy.coverage, sol.policy.premium), (1.0, LN_2));
    }

    #[test]
    fn lp_matches_grid_search() {
        for &(cu, ca, g, cs) in &[
            (1.0, 1.0, 1.0, 1.0),
            (1.0, 3.0, 2.0, 0.5),
            (5.0, 0.5, 2.0, 3.0),
        ] {
            let m = market(cu, ca, cs);
            let sol = solve_insurer_lp(m, gamma(g));
            let (v, s, t) = grid_search(m, gamma(g), 1000);
            assert!((sol.objective - v).abs() < 1e-6);
            assert_eq!(s, 1.0);
            assert!((t - sol.policy.premium).abs() < 1e-12);
        }
    }

    #[test]
    fn bgne_examples() {
        let b = compose_bgne(market(1.0, 1.0, 1.0), gamma(1.0)).unwrap();
        assert_eq!(
            b.actions,
            ActionPair {
                protection: 0.0,
                attack: 0.0
            }
        );
        assert_eq!(
            b.policy,
            InsurancePolicy {
                coverage: 1.0,
                premium: LN_2
            }
        );
        assert_eq!(b.zero_profit_check, 0.0);
        assert_eq!(b.report.expected_effective_loss, 0.0);
        assert_eq!(b.report.expected_payout, LN_2);

        let b = compose_bgne(market(2.0, 1.0, 2.0), gamma(3.0)).unwrap();
        assert_eq!(
            b.actions,
            ActionPair {
                protection: 0.0,
                attack: 0.0
            }
        );
        assert_relative_eq!(b.policy.premium, 1.098612, epsilon = 1e-6);

        for &(g, cs) in &[(0.5, 0.0), (4.0, 10.0)] {
            let b = compose_bgne(market(3.0, 3.0, cs), gamma(g)).unwrap();
            assert_eq!(b.policy.premium, LN_2);
        }
    }

    proptest! {
        #[test]
        fn optimum_is_full_coverage_at_the_cap(
            cu in 0.05f64..10.0, ca in 0.05f64..10.0, g in 0.05f64..5.0, cs in 0.0f64..5.0,
        ) {
            let m = market(cu, ca, cs);
            let sol = solve_insurer_lp(m, gamma(g));
            prop_assert_eq!(sol.policy.coverage, 1.0);
            prop_assert!((sol.policy.premium - premium_cap(m)).abs() <= 1e-12);
            prop_assert!((sol.policy.premium - sol.policy.coverage * m.equilibrium_risk()).abs() <= 1e-12);
        }

        #[test]
        fn linear_policy_principle(
            cu in 0.1f64..5.0, ca in 0.1f64..5.0, s in 0.0f64..=1.0, frac in 0.0f64..=1.0,
            on_line in any::<bool>(),
        ) {
            let m = market(cu, ca, 0.0);
            let r = m.equilibrium_risk();
            let t = if on_line { s * r } else { frac * r };
            let v = check_constraints(policy(s, t), m, gamma(1.0));
            let on = (t - s * r).abs() <= 1e-12 * r.max(1.0);
            if v.ir_insurer && v.ic_user {
                prop_assert!(on);
            }
            if t == s * r {
                prop_assert!(v.ir_insurer && v.ic_user);
            }
        }
    }
}
