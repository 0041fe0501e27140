//! Output documents of each subcommand. Every document carries the scenario
//! it was computed from and round-trips through JSON unchanged.

use cyberins::contract::{
    check_constraints, compose_bgne, insurer_objective, solve_insurer_lp, BgneSolution,
    ConstraintVerdict, PolicySolution,
};
use cyberins::game::NumericalConfig;
use cyberins::model::expected_loss_factor;
use cyberins::montecarlo::{
    default_stages, divergence_probe, estimate_loss_accounting, estimate_loss_factor,
    DivergenceReport, EstimateWithCI, MomentRegime,
};
use cyberins::scenario::{equilibrium_report, sweep, Scenario, SpeReport, SweepParam, SweepRow};
use cyberins::{InsurancePolicy, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeOutput {
    pub scenario: Scenario,
    pub spe: SpeReport,
}

pub fn spe(scenario: &Scenario, config: &NumericalConfig) -> Result<SpeOutput> {
    let policy = scenario.policy_or_optimal();
    Ok(SpeOutput {
        scenario: *scenario,
        spe: equilibrium_report(scenario.market, scenario.profile, policy, config)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GivenPolicy {
    pub policy: InsurancePolicy,
    pub objective: f64,
    pub verdict: ConstraintVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutput {
    pub scenario: Scenario,
    pub optimum: PolicySolution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given: Option<GivenPolicy>,
}

pub fn policy(scenario: &Scenario) -> PolicyOutput {
    let (m, p) = (scenario.market, scenario.profile);
    PolicyOutput {
        scenario: *scenario,
        optimum: solve_insurer_lp(m, p),
        given: scenario.policy.map(|policy| GivenPolicy {
            policy,
            objective: insurer_objective(policy, m, p),
            verdict: check_constraints(policy, m, p),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgneOutput {
    pub scenario: Scenario,
    pub bgne: BgneSolution,
}

pub fn bgne(scenario: &Scenario) -> Result<BgneOutput> {
    Ok(BgneOutput {
        scenario: *scenario,
        bgne: compose_bgne(scenario.market, scenario.profile)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The estimator has infinite variance; no interval check is possible.
    CiInvalid,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::CiInvalid => "ci-invalid",
        }
    }
}

/// An estimate passes when it lies within this many half-widths of the analytic value.
pub const PASS_HALF_WIDTHS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub quantity: String,
    pub analytic: f64,
    pub estimate: EstimateWithCI,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub scenario: Scenario,
    pub coverage: f64,
    pub seed: u64,
    /// Risk level the losses are drawn with.
    pub risk: f64,
    pub insurable: bool,
    pub rows: Vec<SimRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<MomentRegime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceReport>,
}

impl SimulateOutput {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }
}

fn check(analytic: f64, est: &EstimateWithCI) -> Verdict {
    if (est.point - analytic).abs() <= PASS_HALF_WIDTHS * est.half_width {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Simulates at the equilibrium risk. When the user is not insurable the
/// loss factor has no finite mean, and the staged divergence probe runs
/// instead of the comparison.
pub fn simulate(scenario: &Scenario, config: &NumericalConfig) -> Result<SimulateOutput> {
    let policy = scenario.policy_or_optimal();
    let s = policy.coverage;
    let sim = scenario.sim.unwrap_or_default();
    let (m, p) = (scenario.market, scenario.profile);

    let report = match equilibrium_report(m, p, policy, config) {
        Ok(r) if r.report.feasible => Some(r.report),
        Ok(_) | Err(cyberins::Error::NotInsurable { .. }) => None,
        Err(e) => return Err(e),
    };
    let Some(report) = report else {
        let risk = m.equilibrium_risk();
        let regime = MomentRegime::classify(p.retained_aversion(s), risk);
        return Ok(SimulateOutput {
            scenario: *scenario,
            coverage: s,
            seed: sim.seed,
            risk,
            insurable: false,
            rows: Vec::new(),
            regime: Some(regime),
            advisory: regime.advisory().map(str::to_string),
            divergence: Some(divergence_probe(risk, p, s, sim.seed, &default_stages())?),
        });
    };

    let risk = report.risk;
    let acc = estimate_loss_accounting(risk, s, &sim)?;
    let factor = estimate_loss_factor(risk, p, s, &sim)?;
    let factor_exact = expected_loss_factor(risk, p, s)?.to_f64();
    let mut rows = vec![
        ("E(X)", report.expected_direct_loss, acc.direct),
        ("E(xi)", report.expected_effective_loss, acc.effective),
        ("E(sX)", report.expected_payout, acc.payout),
    ]
    .into_iter()
    .map(|(q, analytic, estimate)| SimRow {
        quantity: q.to_string(),
        analytic,
        estimate,
        verdict: check(analytic, &estimate),
    })
    .collect::<Vec<_>>();
    rows.push(SimRow {
        quantity: "E[H(xi)]".to_string(),
        analytic: factor_exact,
        estimate: factor.estimate,
        verdict: match factor.regime {
            MomentRegime::FiniteVariance => check(factor_exact, &factor.estimate),
            _ => Verdict::CiInvalid,
        },
    });
    Ok(SimulateOutput {
        scenario: *scenario,
        coverage: s,
        seed: sim.seed,
        risk,
        insurable: true,
        rows,
        regime: Some(factor.regime),
        advisory: factor.regime.advisory().map(str::to_string),
        divergence: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub scenario: Scenario,
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

pub fn sweep_output(
    scenario: &Scenario,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
    config: &NumericalConfig,
) -> Result<SweepOutput> {
    Ok(SweepOutput {
        scenario: *scenario,
        param,
        rows: sweep(scenario, param, from, to, steps, config)?,
    })
}
