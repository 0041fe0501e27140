//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string; `www/index.html` draws the results on a canvas.

use cyberins::contract::{coverage_floor, solve_insurer_lp, Constraint};
use cyberins::game::NumericalConfig;
use cyberins::model::exponential_density;
use cyberins::montecarlo::{estimate_loss_factor, sample_losses, MomentRegime, SimConfig};
use cyberins::scenario::{equilibrium_report, sweep, Scenario, SweepParam};
use cyberins::{InsurancePolicy, MarketParams, UserRiskProfile};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Coarse grid for the out-of-box fallback so the page stays responsive.
fn demo_config() -> NumericalConfig {
    NumericalConfig {
        grid: 201,
        ..NumericalConfig::default()
    }
}

fn inputs(
    cu: f64,
    ca: f64,
    gamma: f64,
    cs: f64,
) -> Result<(MarketParams, UserRiskProfile), String> {
    let market = MarketParams::new(cu, ca, cs).map_err(|e| e.to_string())?;
    let profile = UserRiskProfile::new(gamma).map_err(|e| e.to_string())?;
    Ok((market, profile))
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    s: f64,
    p_u: Option<f64>,
    p_a: Option<f64>,
    effective_loss: Option<f64>,
    feasible: bool,
}

#[derive(Serialize)]
struct Curve {
    risk: f64,
    /// Smallest insurable coverage; may be negative.
    boundary: f64,
    points: Vec<CurvePoint>,
}

pub fn spe_curve_json(cu: f64, ca: f64, gamma: f64, steps: usize) -> Result<String, String> {
    let (market, profile) = inputs(cu, ca, gamma, 0.0)?;
    let sc = Scenario {
        market,
        profile,
        policy: None,
        sim: None,
    };
    let rows = sweep(
        &sc,
        SweepParam::Coverage,
        0.0,
        1.0,
        steps.max(2),
        &demo_config(),
    )
    .map_err(|e| e.to_string())?;
    to_json(&Curve {
        risk: market.equilibrium_risk(),
        boundary: coverage_floor(market, profile),
        points: rows
            .iter()
            .map(|r| CurvePoint {
                s: r.value,
                p_u: r.equilibrium.map(|e| e.protection),
                p_a: r.equilibrium.map(|e| e.attack),
                effective_loss: r.equilibrium.map(|e| e.effective_loss),
                feasible: r.feasible,
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct Region {
    risk: f64,
    coverage_floor: f64,
    vertices: Vec<(f64, f64)>,
    s: f64,
    t: f64,
    objective: f64,
    binding: Vec<Constraint>,
}

pub fn policy_region_json(cu: f64, ca: f64, gamma: f64, cs: f64) -> Result<String, String> {
    let (market, profile) = inputs(cu, ca, gamma, cs)?;
    let sol = solve_insurer_lp(market, profile);
    to_json(&Region {
        risk: market.equilibrium_risk(),
        coverage_floor: coverage_floor(market, profile),
        vertices: sol.vertices,
        s: sol.policy.coverage,
        t: sol.policy.premium,
        objective: sol.objective,
        binding: sol.binding,
    })
}

#[derive(Serialize)]
struct Histogram {
    risk: f64,
    bin_width: f64,
    /// Empirical density per bin.
    counts: Vec<f64>,
    /// Exponential density at the bin centres.
    density: Vec<f64>,
    loss_factor: f64,
    loss_factor_half_width: f64,
    regime: MomentRegime,
    advisory: Option<&'static str>,
}

pub fn loss_histogram_json(
    cu: f64,
    ca: f64,
    gamma: f64,
    s: f64,
    samples: usize,
    seed: u64,
    bins: usize,
) -> Result<String, String> {
    let (market, profile) = inputs(cu, ca, gamma, 0.0)?;
    let policy = InsurancePolicy::new(s, 0.0).map_err(|e| e.to_string())?;
    let report =
        equilibrium_report(market, profile, policy, &demo_config()).map_err(|e| e.to_string())?;
    if !report.report.feasible {
        return Err("the user is not insurable at this coverage".into());
    }
    let risk = report.report.risk;
    let config =
        SimConfig::new(samples, seed, SimConfig::DEFAULT_BATCHES).map_err(|e| e.to_string())?;
    let bins = bins.max(1);
    let width = 6.0 * risk.max(f64::MIN_POSITIVE) / bins as f64;
    let mut counts = vec![0.0; bins];
    for x in sample_losses(risk, &config).map_err(|e| e.to_string())? {
        let k = (x / width) as usize;
        if k < bins {
            counts[k] += 1.0;
        }
    }
    let norm = samples as f64 * width;
    counts.iter_mut().for_each(|c| *c /= norm);
    let density = (0..bins)
        .map(|k| exponential_density((k as f64 + 0.5) * width, risk).unwrap_or(0.0))
        .collect();
    let factor = estimate_loss_factor(risk, profile, s, &config).map_err(|e| e.to_string())?;
    to_json(&Histogram {
        risk,
        bin_width: width,
        counts,
        density,
        loss_factor: factor.estimate.point,
        loss_factor_half_width: factor.estimate.half_width,
        regime: factor.regime,
        advisory: factor.regime.advisory(),
    })
}

/// Equilibrium actions over `steps` coverage levels in `[0, 1]`.
#[wasm_bindgen]
pub fn spe_curve(cu: f64, ca: f64, gamma: f64, steps: usize) -> Result<String, JsError> {
    spe_curve_json(cu, ca, gamma, steps).map_err(|e| JsError::new(&e))
}

/// Feasible `(s, T)` polygon of the insurer's problem and its optimum.
#[wasm_bindgen]
pub fn policy_region(cu: f64, ca: f64, gamma: f64, cs: f64) -> Result<String, JsError> {
    policy_region_json(cu, ca, gamma, cs).map_err(|e| JsError::new(&e))
}

/// Simulated loss histogram at the equilibrium risk, against the exponential density.
#[wasm_bindgen]
pub fn loss_histogram(
    cu: f64,
    ca: f64,
    gamma: f64,
    s: f64,
    samples: usize,
    seed: u64,
    bins: usize,
) -> Result<String, JsError> {
    loss_histogram_json(cu, ca, gamma, s, samples, seed, bins).map_err(|e| JsError::new(&e))
}
