//! Scenario files, equilibrium reports and parameter sweeps.
//!
//! A scenario file is TOML with dotted sections; every key is optional in the
//! file itself so that command-line flags can fill the gaps:
//!
//! ```toml
//! market.cu = 1.0
//! market.ca = 1.0
//! market.cs = 0.5
//! profile.gamma = 1.0
//! policy.s = 0.5
//! policy.t = 0.2
//! sim.seed = 42
//! sim.samples = 1000000
//! sim.batches = 50
//! ```

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contract::solve_insurer_lp;
use crate::error::{Error, Result};
use crate::game::{
    closed_form_spe, insurability_margin, numerical_spe, NumericalConfig, NumericalSpe,
};
use crate::model::{
    feasibility_margin, risk_level, EquilibriumReport, InsurancePolicy, MarketParams,
    UserRiskProfile,
};
use crate::montecarlo::SimConfig;

/// Fully validated inputs of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub market: MarketParams,
    pub profile: UserRiskProfile,
    /// `None` means "solve for the insurer's optimal policy".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<InsurancePolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.profile.validate()?;
        if let Some(p) = &self.policy {
            p.validate()?;
        }
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        Ok(())
    }

    /// The stated policy, or the insurer's optimum when none was given.
    pub fn policy_or_optimal(&self) -> InsurancePolicy {
        self.policy
            .unwrap_or_else(|| solve_insurer_lp(self.market, self.profile).policy)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketSection {
    cu: Option<f64>,
    ca: Option<f64>,
    cs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSection {
    gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicySection {
    s: Option<f64>,
    t: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    seed: Option<u64>,
    samples: Option<usize>,
    batches: Option<usize>,
}

/// Partially specified scenario: what a config file and the command line
/// each contribute before they are merged.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDraft {
    #[serde(default)]
    market: MarketSection,
    #[serde(default)]
    profile: ProfileSection,
    #[serde(default)]
    policy: PolicySection,
    #[serde(default)]
    sim: SimSection,
}

impl ScenarioDraft {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.message().to_string()))
    }

    pub fn cu(mut self, v: Option<f64>) -> Self {
        self.market.cu = v.or(self.market.cu);
        self
    }
    pub fn ca(mut self, v: Option<f64>) -> Self {
        self.market.ca = v.or(self.market.ca);
        self
    }
    pub fn cs(mut self, v: Option<f64>) -> Self {
        self.market.cs = v.or(self.market.cs);
        self
    }
    pub fn gamma(mut self, v: Option<f64>) -> Self {
        self.profile.gamma = v.or(self.profile.gamma);
        self
    }
    pub fn coverage(mut self, v: Option<f64>) -> Self {
        self.policy.s = v.or(self.policy.s);
        self
    }
    pub fn premium(mut self, v: Option<f64>) -> Self {
        self.policy.t = v.or(self.policy.t);
        self
    }
    pub fn seed(mut self, v: Option<u64>) -> Self {
        self.sim.seed = v.or(self.sim.seed);
        self
    }
    pub fn samples(mut self, v: Option<usize>) -> Self {
        self.sim.samples = v.or(self.sim.samples);
        self
    }
    pub fn batches(mut self, v: Option<usize>) -> Self {
        self.sim.batches = v.or(self.sim.batches);
        self
    }

    /// Checks that the required keys are present and every value is in range.
    ///
    /// A policy is present when `policy.s` is given (the premium defaults to
    /// 0); `policy.t` alone is rejected. A simulation block is present when
    /// any `sim.*` key is given, with defaults for the rest.
    pub fn finish(self) -> Result<Scenario> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Scenario(format!("missing required value `{key}`")))
        };
        let market = MarketParams::new(
            need(self.market.cu, "market.cu")?,
            need(self.market.ca, "market.ca")?,
            self.market.cs.unwrap_or(0.0),
        )?;
        let profile = UserRiskProfile::new(need(self.profile.gamma, "profile.gamma")?)?;
        let policy = match (self.policy.s, self.policy.t) {
            (Some(s), t) => Some(InsurancePolicy::new(s, t.unwrap_or(0.0))?),
            (None, Some(_)) => {
                return Err(Error::Scenario(
                    "`policy.t` given without `policy.s`".into(),
                ))
            }
            (None, None) => None,
        };
        let sim = if self.sim == SimSection::default() {
            None
        } else {
            let d = SimConfig::default();
            Some(SimConfig::new(
                self.sim.samples.unwrap_or(d.sample_count),
                self.sim.seed.unwrap_or(d.seed),
                self.sim.batches.unwrap_or(d.batch_count),
            )?)
        };
        Ok(Scenario {
            market,
            profile,
            policy,
            sim,
        })
    }
}

/// Equilibrium under a given policy, plus how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeReport {
    pub report: EquilibriumReport,
    /// The closed form fell outside `[0, 1]²`; the actions come from the
    /// clamped best-response iteration instead.
    pub outside_interior_analysis: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerical: Option<NumericalSpe>,
}

/// Saddle point and loss accounting for `policy`.
///
/// Uses the closed form when it lies in the unit square and falls back to
/// [`numerical_spe`] otherwise. Fails with [`Error::NotInsurable`] when the
/// saddle-point margin is not positive.
pub fn equilibrium_report(
    market: MarketParams,
    profile: UserRiskProfile,
    policy: InsurancePolicy,
    config: &NumericalConfig,
) -> Result<SpeReport> {
    let s = policy.coverage;
    let cf = closed_form_spe(profile, s, market)?;
    if cf.bounded {
        let margin = insurability_margin(profile, s, market);
        return Ok(SpeReport {
            report: EquilibriumReport::new(
                cf.actions,
                cf.diagnostics.risk,
                policy,
                margin,
                cf.interior,
            ),
            outside_interior_analysis: false,
            numerical: None,
        });
    }
    let num = numerical_spe(profile, s, market, config)?;
    let actions = num.solution.actions;
    let risk = risk_level(actions)?;
    let margin = feasibility_margin(actions, profile, s)?;
    Ok(SpeReport {
        report: EquilibriumReport::new(actions, risk, policy, margin, false),
        outside_interior_analysis: true,
        numerical: Some(num),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "s")]
    Coverage,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "cu")]
    ProtectionCost,
    #[serde(rename = "ca")]
    AttackCost,
    #[serde(rename = "cs")]
    Tradeoff,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Coverage => "s",
            SweepParam::Gamma => "gamma",
            SweepParam::ProtectionCost => "cu",
            SweepParam::AttackCost => "ca",
            SweepParam::Tradeoff => "cs",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "s" => SweepParam::Coverage,
            "gamma" => SweepParam::Gamma,
            "cu" => SweepParam::ProtectionCost,
            "ca" => SweepParam::AttackCost,
            "cs" => SweepParam::Tradeoff,
            other => {
                return Err(Error::Scenario(format!(
                    "unknown sweep parameter `{other}` (expected s, gamma, cu, ca or cs)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub protection: f64,
    pub attack: f64,
    pub ratio: Option<f64>,
    pub risk: f64,
    pub effective_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// `None` on non-insurable steps.
    pub equilibrium: Option<SweepPoint>,
    pub optimal_coverage: f64,
    pub optimal_premium: f64,
    pub feasible: bool,
}

/// `steps` evenly spaced values from `from` to `to`, both included.
pub fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n)
            .map(|i| {
                if i + 1 == n {
                    to
                } else {
                    from + (to - from) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Re-solves the scenario at each value of `param`. Coverage defaults to the
/// scenario's policy, or the insurer's optimum when it has none.
pub fn sweep(
    base: &Scenario,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
    config: &NumericalConfig,
) -> Result<Vec<SweepRow>> {
    if steps == 0 {
        return Err(Error::Scenario("sweep needs at least one step".into()));
    }
    linspace(from, to, steps)
        .into_iter()
        .map(|value| {
            let mut sc = *base;
            let mut coverage = base.policy.map(|p| p.coverage);
            match param {
                SweepParam::Coverage => coverage = Some(value),
                SweepParam::Gamma => sc.profile.risk_aversion = value,
                SweepParam::ProtectionCost => sc.market.protection_cost = value,
                SweepParam::AttackCost => sc.market.attack_cost = value,
                SweepParam::Tradeoff => sc.market.tradeoff = value,
            }
            sc.market.validate()?;
            sc.profile.validate()?;
            let optimum = solve_insurer_lp(sc.market, sc.profile).policy;
            let s = coverage.unwrap_or(optimum.coverage);
            let policy = InsurancePolicy::new(s, 0.0)?;

            let equilibrium = match equilibrium_report(sc.market, sc.profile, policy, config) {
                Ok(rep) if rep.report.feasible => Some(SweepPoint {
                    protection: rep.report.actions.protection,
                    attack: rep.report.actions.attack,
                    ratio: rep.report.actions.ratio(),
                    risk: rep.report.risk,
                    effective_loss: rep.report.expected_effective_loss,
                }),
                Ok(_) | Err(Error::NotInsurable { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                value,
                feasible: equilibrium.is_some(),
                equilibrium,
                optimal_coverage: optimum.coverage,
                optimal_premium: optimum.premium,
            })
        })
        .collect()
}

/// Header row of the sweep CSV; the first column is named after the swept parameter.
pub fn sweep_header(param: SweepParam) -> String {
    format!("{param},p_u,p_a,ratio,risk,effective_loss,s_opt,t_opt,feasible")
}

/// Comma-separated, no quoting, LF line endings, 9 significant digits.
/// Equilibrium columns are blank on non-insurable rows, as is `ratio` when
/// `p_u = 0`.
pub fn write_sweep_csv(
    out: &mut impl Write,
    param: SweepParam,
    rows: &[SweepRow],
) -> io::Result<()> {
    writeln!(out, "{}", sweep_header(param))?;
    for row in rows {
        let eq = match &row.equilibrium {
            Some(p) => format!(
                "{},{},{},{},{}",
                format_sig9(p.protection),
                format_sig9(p.attack),
                p.ratio.map(format_sig9).unwrap_or_default(),
                format_sig9(p.risk),
                format_sig9(p.effective_loss),
            ),
            None => ",,,,".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            format_sig9(row.value),
            eq,
            format_sig9(row.optimal_coverage),
            format_sig9(row.optimal_premium),
            row.feasible
        )?;
    }
    Ok(())
}

/// Nine significant digits, `.` as the decimal point, trailing zeros
/// trimmed. Plain notation for magnitudes in `[1e-5, 1e15)`, scientific
/// otherwise.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> Scenario {
        ScenarioDraft::default()
            .cu(Some(1.0))
            .ca(Some(1.0))
            .gamma(Some(1.0))
            .finish()
            .unwrap()
    }

    #[test]
    fn parses_dotted_and_sectioned_files() {
        let a = ScenarioDraft::from_toml_str(
            "market.cu = 1\nmarket.ca = 2.5\nprofile.gamma = 1\npolicy.s = 0.5\n",
        )
        .unwrap()
        .finish()
        .unwrap();
        let b = ScenarioDraft::from_toml_str(
            "[market]\ncu = 1.0\nca = 2.5\n[profile]\ngamma = 1\n[policy]\ns = 0.5\n",
        )
        .unwrap()
        .finish()
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.market.attack_cost, 2.5);
        assert_eq!(
            a.policy,
            Some(InsurancePolicy {
                coverage: 0.5,
                premium: 0.0
            })
        );
        assert_eq!(a.sim, None);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ScenarioDraft::from_toml_str("market.cu = 1\nmarket.cx = 2\n").unwrap_err();
        assert!(err.to_string().contains("cx"), "{err}");
        let err = ScenarioDraft::from_toml_str("insurer.cs = 2\n").unwrap_err();
        assert!(err.to_string().contains("insurer"), "{err}");
    }

    #[test]
    fn flags_override_file_values() {
        let sc = ScenarioDraft::from_toml_str(
            "market.cu = 1\nmarket.ca = 1\nprofile.gamma = 1\nsim.seed = 3\n",
        )
        .unwrap()
        .cu(Some(2.0))
        .cu(None)
        .samples(Some(1000))
        .finish()
        .unwrap();
        assert_eq!(sc.market.protection_cost, 2.0);
        let sim = sc.sim.unwrap();
        assert_eq!((sim.seed, sim.sample_count, sim.batch_count), (3, 1000, 50));
    }

    #[test]
    fn missing_and_invalid_values() {
        let err = ScenarioDraft::default().cu(Some(1.0)).finish().unwrap_err();
        assert!(err.to_string().contains("market.ca"));
        let err = base_draft().gamma(Some(-1.0)).finish().unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "gamma", .. }));
        let err = base_draft().premium(Some(0.1)).finish().unwrap_err();
        assert!(err.to_string().contains("policy.t"));
    }

    fn base_draft() -> ScenarioDraft {
        ScenarioDraft::default()
            .cu(Some(1.0))
            .ca(Some(1.0))
            .gamma(Some(1.0))
    }

    #[test]
    fn report_examples() {
        let sc = base();
        let cfg = NumericalConfig::default();
        let rep = equilibrium_report(
            sc.market,
            sc.profile,
            InsurancePolicy::new(0.5, 0.0).unwrap(),
            &cfg,
        )
        .unwrap();
        assert_eq!(rep.report.actions.protection, 0.25);
        assert_eq!(rep.report.actions.attack, 0.25);
        assert!(!rep.outside_interior_analysis);

        let rep = equilibrium_report(
            sc.market,
            sc.profile,
            InsurancePolicy::new(1.0, 0.0).unwrap(),
            &cfg,
        )
        .unwrap();
        assert_eq!(rep.report.actions.protection, 0.0);

        let m = MarketParams::new(10.0, 0.1, 0.0).unwrap();
        let p = UserRiskProfile::new(2.0).unwrap();
        let err =
            equilibrium_report(m, p, InsurancePolicy::new(0.0, 0.0).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, Error::NotInsurable { .. }));
    }

    #[test]
    fn out_of_box_report_uses_the_iteration() {
        let m = MarketParams::new(0.1, 1.0, 0.0).unwrap();
        let p = UserRiskProfile::new(1.2).unwrap();
        let cfg = NumericalConfig {
            grid: 201,
            ..NumericalConfig::default()
        };
        let rep = equilibrium_report(m, p, InsurancePolicy::new(0.0, 0.0).unwrap(), &cfg).unwrap();
        assert!(rep.outside_interior_analysis);
        assert!(rep.numerical.is_some());
        assert!((rep.report.actions.attack - 0.2).abs() < 1e-8);
    }

    #[test]
    fn sweep_over_coverage() {
        let rows = sweep(
            &base(),
            SweepParam::Coverage,
            0.0,
            0.9,
            10,
            &NumericalConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 10);
        for w in rows.windows(2) {
            let (a, b) = (w[0].equilibrium.unwrap(), w[1].equilibrium.unwrap());
            assert!(b.protection < a.protection);
        }
        assert!(rows
            .iter()
            .all(|r| r.equilibrium.unwrap().ratio == Some(1.0)));
    }

    #[test]
    fn sweep_marks_the_insurability_boundary() {
        let sc = ScenarioDraft::default()
            .cu(Some(1.0))
            .ca(Some(1.0))
            .gamma(Some(3.0))
            .finish()
            .unwrap();
        let rows = sweep(
            &sc,
            SweepParam::Coverage,
            0.0,
            1.0,
            101,
            &NumericalConfig::default(),
        )
        .unwrap();
        let boundary = 1.0 - 1.0 / (3.0 * std::f64::consts::LN_2);
        for r in &rows {
            if (r.value - boundary).abs() > 1e-9 {
                assert_eq!(r.feasible, r.value > boundary, "s = {}", r.value);
            }
        }
        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, SweepParam::Coverage, &rows).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("s,p_u,p_a,ratio,risk,effective_loss,s_opt,t_opt,feasible\n"));
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("0,,,,,,1,0.693147181,false"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn sweep_rejects_out_of_domain_values() {
        assert!(sweep(
            &base(),
            SweepParam::Gamma,
            0.0,
            1.0,
            3,
            &NumericalConfig::default()
        )
        .is_err());
        assert!("bogus".parse::<SweepParam>().is_err());
        assert_eq!(
            "cu".parse::<SweepParam>().unwrap(),
            SweepParam::ProtectionCost
        );
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(std::f64::consts::LN_2), "0.693147181");
        assert_eq!(format_sig9(0.25), "0.25");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-8.230241), "-8.230241");
        assert_eq!(format_sig9(1234567.891234), "1234567.89");
        assert_eq!(format_sig9(9.9999999999), "10");
        assert_eq!(format_sig9(1.5e-7), "1.5e-7");
        assert_eq!(format_sig9(2.0e20), "2e20");
        assert_eq!(format_sig9(0.0), "0");
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 0.9, 10).last(), Some(&0.9));
        assert_eq!(linspace(0.3, 0.9, 1), vec![0.3]);
    }

    proptest! {
        #[test]
        fn sig9_round_trips_to_nine_digits(x in -1e6f64..1e6) {
            let back: f64 = format_sig9(x).parse().unwrap();
            let tol = x.abs() * 1e-8 + 1e-300;
            prop_assert!((back - x).abs() <= tol, "{} -> {}", x, back);
        }

        #[test]
        fn scenario_json_round_trip(
            cu in 0.01f64..10.0, ca in 0.01f64..10.0, cs in 0.0f64..5.0, g in 0.01f64..5.0,
            s in 0.0f64..=1.0, t in 0.0f64..2.0, seed in any::<u64>(),
        ) {
            let sc = ScenarioDraft::default()
                .cu(Some(cu)).ca(Some(ca)).cs(Some(cs)).gamma(Some(g))
                .coverage(Some(s)).premium(Some(t)).seed(Some(seed))
                .finish().unwrap();
            let text = serde_json::to_string(&sc).unwrap();
            let back: Scenario = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(sc, back);
        }
    }
}
