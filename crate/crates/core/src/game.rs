//! The constrained zero-sum game between the user and the attacker.
//!
//! For a fixed coverage level `s` the user minimizes and the attacker
//! maximizes `K(p_u, p_a) = γ(1-s) ln(p_a/p_u + 1) + c_u p_u - c_a p_a` over
//! the actions whose insurability margin is positive. The interior saddle
//! point has a closed form; [`numerical_spe`] recomputes it by damped
//! best-response iteration and by brute-force grid minimax.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_coverage, feasibility_margin, payoff, risk_level, ActionPair, MarketParams,
    UserRiskProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeDiagnostics {
    /// `p_a / p_u`; `None` when `p_u = 0`.
    pub ratio: Option<f64>,
    /// Risk level attached to the equilibrium.
    pub risk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeSolution {
    pub actions: ActionPair,
    /// `K` at the equilibrium.
    pub payoff: f64,
    pub feasible: bool,
    /// Both actions strictly inside `(0, 1)`.
    pub interior: bool,
    /// The closed form fell inside `[0, 1]²`. When false the actions were
    /// clamped and [`numerical_spe`] is the authoritative answer.
    pub bounded: bool,
    pub diagnostics: SpeDiagnostics,
}

/// Attacker's best reply `clamp(γ(1-s)/c_a - p_u, 0, 1)`.
pub fn attacker_best_response(
    protection: f64,
    profile: UserRiskProfile,
    coverage: f64,
    market: MarketParams,
) -> f64 {
    let weight = profile.retained_aversion(coverage);
    (weight / market.attack_cost - protection).clamp(0.0, 1.0)
}

/// User's best reply: the positive root of
/// `c_u p² + c_u p_a p - γ(1-s) p_a = 0`, clamped to `[0, 1]`.
pub fn user_best_response(
    attack: f64,
    profile: UserRiskProfile,
    coverage: f64,
    market: MarketParams,
) -> f64 {
    if attack <= 0.0 {
        return 0.0;
    }
    let cu = market.protection_cost;
    let weight = profile.retained_aversion(coverage);
    let disc = cu * cu * attack * attack + 4.0 * cu * weight * attack;
    ((disc.sqrt() - cu * attack) / (2.0 * cu)).clamp(0.0, 1.0)
}

/// Margin `1 - γ(1-s) ln(c_u/c_a + 1)` of the saddle point; the user is
/// insurable iff it is positive.
pub fn insurability_margin(profile: UserRiskProfile, coverage: f64, market: MarketParams) -> f64 {
    1.0 - profile.retained_aversion(coverage) * market.equilibrium_risk()
}

/// Closed-form saddle point
/// `p_u* = γ(1-s)/(c_u+c_a)`, `p_a* = c_u γ(1-s) / (c_a (c_u+c_a))`.
///
/// Fails with [`Error::NotInsurable`] when the saddle-point margin is not
/// positive. The reported risk is the constant `ln(c_u/c_a + 1)`, which is
/// also the limit along the equilibrium path at full coverage where both
/// actions vanish.
pub fn closed_form_spe(
    profile: UserRiskProfile,
    coverage: f64,
    market: MarketParams,
) -> Result<SpeSolution> {
    check_coverage(coverage)?;
    let margin = insurability_margin(profile, coverage, market);
    if margin <= 0.0 {
        return Err(Error::NotInsurable { margin });
    }
    let (cu, ca) = (market.protection_cost, market.attack_cost);
    let weight = profile.retained_aversion(coverage);
    let protection = weight / (cu + ca);
    let attack = protection * (cu / ca);
    let bounded = protection <= 1.0 && attack <= 1.0;
    let actions = ActionPair {
        protection: protection.min(1.0),
        attack: attack.min(1.0),
    };
    Ok(SpeSolution {
        actions,
        payoff: payoff(actions.protection, actions.attack, weight, market),
        feasible: true,
        interior: bounded && protection > 0.0 && attack > 0.0 && protection < 1.0 && attack < 1.0,
        bounded,
        diagnostics: SpeDiagnostics {
            ratio: actions.ratio(),
            risk: market.equilibrium_risk(),
        },
    })
}

/// Knobs for [`numerical_spe`] and [`verify_saddle_inequality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericalConfig {
    /// Points per axis of the minimax grid.
    pub grid: usize,
    /// Lower end of the grid; keeps `p_u` away from the unbounded-risk edge.
    pub epsilon: f64,
    /// Initial damping `α` of the best-response iteration.
    pub damping: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the sup-norm of successive iterates.
    pub tolerance: f64,
    /// How many times `α` is halved after a failed run before giving up.
    pub max_halvings: u32,
}

impl Default for NumericalConfig {
    fn default() -> Self {
        Self {
            grid: 2001,
            epsilon: 1e-6,
            damping: 0.5,
            max_iterations: 10_000,
            tolerance: 1e-10,
            max_halvings: 6,
        }
    }
}

impl NumericalConfig {
    pub fn grid_points(&self) -> Vec<f64> {
        let n = self.grid.max(2);
        let step = self.grid_step();
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    1.0
                } else {
                    self.epsilon + i as f64 * step
                }
            })
            .collect()
    }

    pub fn grid_step(&self) -> f64 {
        (1.0 - self.epsilon) / (self.grid.max(2) - 1) as f64
    }
}

/// Result of the brute-force grid minimax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMinimax {
    pub step: f64,
    /// `max_{p_a} min_{p_u} K` over the grid.
    pub maxmin: f64,
    /// `min_{p_u} max_{p_a} K` over the grid.
    pub minmax: f64,
    /// Attack level attaining `maxmin`.
    pub attack: f64,
    /// Protection level attaining `minmax`.
    pub protection: f64,
    /// `minmax - maxmin` stayed within one grid step.
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericalSpe {
    pub solution: SpeSolution,
    pub iterations: usize,
    /// Damping that actually converged.
    pub damping: f64,
    pub grid: GridMinimax,
}

/// Saddle point by damped simultaneous best-response iteration from
/// `(0.5, 0.5)`, cross-checked by a grid minimax.
///
/// The iteration map `p ← (1-α)p + α·BR(p)` spirals when the user's best
/// response is steep, so a run that fails to settle within
/// `max_iterations` restarts with `α` halved.
pub fn numerical_spe(
    profile: UserRiskProfile,
    coverage: f64,
    market: MarketParams,
    config: &NumericalConfig,
) -> Result<NumericalSpe> {
    check_coverage(coverage)?;
    let margin = insurability_margin(profile, coverage, market);
    if margin <= 0.0 {
        return Err(Error::NotInsurable { margin });
    }

    let mut damping = config.damping;
    let mut last = ActionPair {
        protection: 0.5,
        attack: 0.5,
    };
    let mut converged = None;
    for _ in 0..=config.max_halvings {
        match best_response_iteration(profile, coverage, market, damping, config) {
            Ok((p, iterations)) => {
                converged = Some((p, iterations));
                break;
            }
            Err(p) => {
                last = p;
                damping *= 0.5;
            }
        }
    }
    let Some((actions, iterations)) = converged else {
        return Err(Error::NonConvergence {
            iterations: config.max_iterations,
            last,
        });
    };

    let weight = profile.retained_aversion(coverage);
    let margin = feasibility_margin(actions, profile, coverage).unwrap_or(f64::NEG_INFINITY);
    let ActionPair { protection, attack } = actions;
    let solution = SpeSolution {
        actions,
        payoff: payoff(protection, attack, weight, market),
        feasible: margin > 0.0,
        interior: protection > 0.0 && attack > 0.0 && protection < 1.0 && attack < 1.0,
        bounded: true,
        diagnostics: SpeDiagnostics {
            ratio: actions.ratio(),
            risk: risk_level(actions).unwrap_or(f64::INFINITY),
        },
    };
    Ok(NumericalSpe {
        solution,
        iterations,
        damping,
        grid: grid_minimax(weight, market, config),
    })
}

fn best_response_iteration(
    profile: UserRiskProfile,
    coverage: f64,
    market: MarketParams,
    damping: f64,
    config: &NumericalConfig,
) -> std::result::Result<(ActionPair, usize), ActionPair> {
    let (mut u, mut a) = (0.5, 0.5);
    for k in 1..=config.max_iterations {
        let next_u =
            (1.0 - damping) * u + damping * user_best_response(a, profile, coverage, market);
        let next_a =
            (1.0 - damping) * a + damping * attacker_best_response(u, profile, coverage, market);
        let step = (next_u - u).abs().max((next_a - a).abs());
        u = next_u;
        a = next_a;
        if step < config.tolerance {
            return Ok((
                ActionPair {
                    protection: u,
                    attack: a,
                },
                k,
            ));
        }
    }
    Err(ActionPair {
        protection: u,
        attack: a,
    })
}

/// Row minima (user replies to each attack level) and column maxima
/// (attacker replies to each protection level) of `K` on the grid.
///
/// The grid uses `K` without the insurability cap. The cap couples the two
/// players' action sets, and on a coupled set `max min ≤ min max` can fail:
/// near `p_u = ε` almost every attack is infeasible, which would hand the
/// minimizer a spurious optimum. Without the cap `K` is convex-concave on the
/// box, so the grid values bracket the saddle value; feasibility of the
/// saddle itself is checked separately.
pub fn grid_minimax(weight: f64, market: MarketParams, config: &NumericalConfig) -> GridMinimax {
    const CHUNK: usize = 32;
    let grid = config.grid_points();
    let n = grid.len();
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();

    let sweep = |start: usize| {
        let mut row_min = Vec::with_capacity(CHUNK);
        let mut col_max = vec![f64::NEG_INFINITY; n];
        for &attack in &grid[start..(start + CHUNK).min(n)] {
            let mut best = f64::INFINITY;
            for (i, &protection) in grid.iter().enumerate() {
                let k = uncapped_payoff(protection, attack, weight, market);
                if k < best {
                    best = k;
                }
                if k > col_max[i] {
                    col_max[i] = k;
                }
            }
            row_min.push(best);
        }
        (row_min, col_max)
    };

    #[cfg(feature = "parallel")]
    let parts: Vec<_> = starts.par_iter().map(|&s| sweep(s)).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<_> = starts.iter().map(|&s| sweep(s)).collect();

    let mut row_min = Vec::with_capacity(n);
    let mut col_max = vec![f64::NEG_INFINITY; n];
    for (rows, cols) in parts {
        row_min.extend(rows);
        for (acc, c) in col_max.iter_mut().zip(cols) {
            *acc = acc.max(c);
        }
    }

    let (mut maxmin, mut attack) = (f64::NEG_INFINITY, grid[0]);
    for (j, &v) in row_min.iter().enumerate() {
        if v > maxmin {
            maxmin = v;
            attack = grid[j];
        }
    }
    let (mut minmax, mut protection) = (f64::INFINITY, grid[0]);
    for (i, &v) in col_max.iter().enumerate() {
        if v < minmax {
            minmax = v;
            protection = grid[i];
        }
    }
    let step = config.grid_step();
    GridMinimax {
        step,
        maxmin,
        minmax,
        attack,
        protection,
        consistent: (minmax - maxmin).abs() <= step,
    }
}

#[inline]
fn uncapped_payoff(protection: f64, attack: f64, weight: f64, market: MarketParams) -> f64 {
    weight * (attack / protection).ln_1p() + market.protection_cost * protection
        - market.attack_cost * attack
}

/// Checks `K(p_u*, p_a) ≤ K(p_u*, p_a*) ≤ K(p_u, p_a*)` against every
/// feasible grid deviation of either player.
pub fn verify_saddle_inequality(
    candidate: ActionPair,
    profile: UserRiskProfile,
    coverage: f64,
    market: MarketParams,
    config: &NumericalConfig,
) -> bool {
    let weight = profile.retained_aversion(coverage);
    let value = payoff(candidate.protection, candidate.attack, weight, market);
    if !value.is_finite() {
        return false;
    }
    let tol = 1e-9 * value.abs().max(1.0);
    config.grid_points().iter().all(|&g| {
        let attacker_dev = payoff(candidate.protection, g, weight, market);
        let user_dev = payoff(g, candidate.attack, weight, market);
        // infinite payoffs are infeasible deviations
        (!attacker_dev.is_finite() || attacker_dev <= value + tol)
            && (!user_dev.is_finite() || value <= user_dev + tol)
    })
}

/// Insurability conditions derived by rearranging the saddle-point margin
/// and the feasibility constraint along the attacker's best reply, together
/// with the variants as printed in the source model. The two disagree; the
/// derived forms are the ones consistent with [`closed_form_spe`].
pub mod bounds {
    use crate::model::{MarketParams, UserRiskProfile};

    /// Largest protection cost for which the user stays insurable:
    /// `c_u < c_a (e^{1/(γ(1-s))} - 1)`.
    pub fn max_protection_cost(profile: UserRiskProfile, coverage: f64, attack_cost: f64) -> f64 {
        let w = profile.retained_aversion(coverage);
        if w == 0.0 {
            return f64::INFINITY;
        }
        attack_cost * (1.0 / w).exp_m1()
    }

    /// Printed form `c_u < c_a (1 - e^{-γ(1-s)})`.
    pub fn max_protection_cost_as_published(
        profile: UserRiskProfile,
        coverage: f64,
        attack_cost: f64,
    ) -> f64 {
        let w = profile.retained_aversion(coverage);
        -attack_cost * (-w).exp_m1()
    }

    /// Protection needed to stay feasible against the attacker's unclamped
    /// best reply: `p_u > (γ(1-s)/c_a) e^{-1/(γ(1-s))}`.
    pub fn min_protection(profile: UserRiskProfile, coverage: f64, market: MarketParams) -> f64 {
        let w = profile.retained_aversion(coverage);
        if w == 0.0 {
            return 0.0;
        }
        w / market.attack_cost * (-1.0 / w).exp()
    }

    /// Printed form `p_u > (γ(1-s)/c_a) e^{γ(1-s)}`.
    pub fn min_protection_as_published(
        profile: UserRiskProfile,
        coverage: f64,
        market: MarketParams,
    ) -> f64 {
        let w = profile.retained_aversion(coverage);
        w / market.attack_cost * w.exp()
    }
}
