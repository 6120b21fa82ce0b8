//! Browser bindings: each export takes plain numbers and returns a JSON string.

use msavg::criterion::msa_criterion;
use msavg::optimizer::{solve_mma, solve_msa, DEFAULT_TOL};
use msavg::regression::{averaged_fit, fit_nested_models};
use msavg::simulation::{evaluate_loss, r2_sweep, run_experiment, simulate_dataset, SimulationConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps the page responsive; the sweep runs on the main thread.
pub const MAX_SWEEP_ITERATIONS: usize = 200;

#[derive(Serialize)]
pub struct Estimate {
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub criterion: f64,
    pub loss: f64,
}

#[derive(Serialize)]
pub struct FitResult {
    pub n: usize,
    pub models: usize,
    pub sigma2: f64,
    pub mma: Estimate,
    pub msa: Estimate,
}

#[derive(Serialize)]
pub struct AlphaProfile {
    pub alpha: Vec<f64>,
    pub criterion: Vec<f64>,
    pub alpha_hat: f64,
    /// MMA criterion at its own optimum: the profile dips below this line.
    pub mma_criterion: f64,
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub r2: f64,
    pub log_risk_diff: f64,
    pub se: f64,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn cell(n: usize, decay: f64, r2: f64, iterations: usize, seed: u64) -> Result<SimulationConfig, String> {
    SimulationConfig::new(n, decay, r2, iterations, seed).map_err(err)
}

/// Simulates one dataset and returns both estimators with their true losses.
pub fn fit_simulated(n: usize, decay: f64, r2: f64, seed: u64) -> Result<FitResult, String> {
    let cfg = cell(n, decay, r2, 1, seed)?;
    let sim = simulate_dataset(&cfg, 0).map_err(err)?;
    let fits = fit_nested_models(&sim.data, &cfg.spec()).map_err(err)?;
    let s2 = fits.sigma2_hat();
    let mma = solve_mma(&fits, s2, DEFAULT_TOL).map_err(err)?;
    let msa = solve_msa(&fits, s2, DEFAULT_TOL).map_err(err)?;
    let loss = |w: &[f64], a: f64| -> Result<f64, String> {
        evaluate_loss(&sim, &averaged_fit(&fits, w, a).map_err(err)?).map_err(err)
    };
    Ok(FitResult {
        n,
        models: cfg.models,
        sigma2: s2,
        mma: Estimate { loss: loss(&mma.weights, 0.0)?, weights: mma.weights, alpha: 0.0, criterion: mma.criterion_value },
        msa: Estimate {
            loss: loss(&msa.weights, msa.alpha)?,
            weights: msa.weights,
            alpha: msa.alpha,
            criterion: msa.criterion_value,
        },
    })
}

/// The mean-shift criterion along the shift at the MSA weights.
pub fn alpha_profile(n: usize, decay: f64, r2: f64, seed: u64, points: usize) -> Result<AlphaProfile, String> {
    let cfg = cell(n, decay, r2, 1, seed)?;
    let sim = simulate_dataset(&cfg, 0).map_err(err)?;
    let fits = fit_nested_models(&sim.data, &cfg.spec()).map_err(err)?;
    let s2 = fits.sigma2_hat();
    let mma = solve_mma(&fits, s2, DEFAULT_TOL).map_err(err)?;
    let msa = solve_msa(&fits, s2, DEFAULT_TOL).map_err(err)?;
    let points = points.clamp(3, 2001);
    let span = 1.5 * msa.alpha.abs().max(1.0);
    let alpha: Vec<f64> = (0..points)
        .map(|i| msa.alpha - span + 2.0 * span * i as f64 / (points - 1) as f64)
        .collect();
    let criterion = alpha
        .iter()
        .map(|&a| msa_criterion(&fits, &msa.weights, a, s2).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AlphaProfile { alpha, criterion, alpha_hat: msa.alpha, mma_criterion: mma.criterion_value })
}

/// Log-risk difference across `R^2 = 0.1, ..., 0.9` for one `(n, decay)`.
pub fn risk_sweep(n: usize, decay: f64, iterations: usize, seed: u64) -> Result<Vec<SweepPoint>, String> {
    let iterations = iterations.clamp(2, MAX_SWEEP_ITERATIONS);
    let cells = r2_sweep(0.1, 0.9, 0.1)
        .map_err(err)?
        .into_iter()
        .map(|r2| cell(n, decay, r2, iterations, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let report = run_experiment(&cells).map_err(err)?;
    Ok(report
        .cells
        .iter()
        .map(|c| SweepPoint { r2: c.config.r2, log_risk_diff: c.log_risk_diff, se: c.se_log_diff })
        .collect())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(err)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = fitSimulated)]
pub fn fit_simulated_js(n: usize, decay: f64, r2: f64, seed: u32) -> Result<String, JsValue> {
    to_js(fit_simulated(n, decay, r2, seed as u64))
}

#[wasm_bindgen(js_name = alphaProfile)]
pub fn alpha_profile_js(n: usize, decay: f64, r2: f64, seed: u32, points: usize) -> Result<String, JsValue> {
    to_js(alpha_profile(n, decay, r2, seed as u64, points))
}

#[wasm_bindgen(js_name = riskSweep)]
pub fn risk_sweep_js(n: usize, decay: f64, iterations: usize, seed: u32) -> Result<String, JsValue> {
    to_js(risk_sweep(n, decay, iterations, seed as u64))
}
