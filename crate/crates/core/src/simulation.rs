//! Monte Carlo comparison of MMA and MSA under a positively biased design.
//!
//! Data follow
//!
//! ```text
//! y_i = sum_{j <= k_M} theta_j x_ji + sum_{k_M < j <= j_max} theta_j g(x_ji) + e_i
//! theta_j = c sqrt(2 decay) j^(-decay - 1/2),   c = R^2 / (1 - R^2)
//! ```
//!
//! with `x_ji, e_i` i.i.d. standard normal and `g = exp` (tail with mean
//! `sqrt(e) theta_j`, the location bias) or `g = identity` (zero-mean tail).
//! Only the first `k_M` columns are observed. Every replicate draws from
//! ChaCha streams keyed by `(seed, replicate)`, so results do not depend on
//! scheduling or on which other cells run alongside.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::criterion::mma_criterion;
use crate::error::{Error, Result};
use crate::optimizer::{solve_mma, solve_msa, solve_msa_from, DEFAULT_TOL};
use crate::regression::{averaged_fit, fit_nested_models, Dataset, ModelFits, NestedModelSpec};

/// Sample sizes of the reference experiment.
pub const PAPER_SAMPLE_SIZES: [usize; 4] = [50, 150, 400, 1000];
/// Coefficient decay rates of the reference experiment.
pub const PAPER_DECAYS: [f64; 3] = [0.5, 1.0, 1.5];
pub const DESK_ITERATIONS: usize = 200;
pub const PAPER_ITERATIONS: usize = 1000;
/// Criterion dominance slack, used when counting replicate-level violations.
pub const DOMINANCE_SLACK: f64 = 1e-9;

const STREAM_DESIGN: u64 = 0;
const STREAM_TAIL: u64 = 1;
const STREAM_NOISE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma2Mode {
    /// Full-model estimate `||e_M||^2 / (n - k_M)`.
    Estimate,
    /// The known noise variance of the simulation.
    TrueValue,
}

/// Shape of the unobserved tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasKind {
    /// `theta_j exp(x_ji)`: positive mean, i.e. location bias.
    Exponential,
    /// `theta_j x_ji`: mean zero, no location bias.
    Linear,
}

impl std::fmt::Display for Sigma2Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sigma2Mode::Estimate => "estimate",
            Sigma2Mode::TrueValue => "true_value",
        })
    }
}

impl std::fmt::Display for BiasKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BiasKind::Exponential => "exp",
            BiasKind::Linear => "linear",
        })
    }
}

/// One cell of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub decay: f64,
    pub r2: f64,
    /// Number of nested models; the ladder is `k_m = m`.
    pub models: usize,
    pub j_max: usize,
    pub iterations: usize,
    pub seed: u64,
    pub sigma2_mode: Sigma2Mode,
    pub bias: BiasKind,
    pub tol: f64,
}

impl SimulationConfig {
    /// A cell with `M = model_count(n)` and `j_max = max(1000, 3 M)`.
    pub fn new(n: usize, decay: f64, r2: f64, iterations: usize, seed: u64) -> Result<Self> {
        let models = model_count(n);
        let cfg = Self {
            n,
            decay,
            r2,
            models,
            j_max: default_j_max(models),
            iterations,
            seed,
            sigma2_mode: Sigma2Mode::Estimate,
            bias: BiasKind::Exponential,
            tol: DEFAULT_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `c = R^2 / (1 - R^2)`.
    pub fn c(&self) -> f64 {
        self.r2 / (1.0 - self.r2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n < 10 {
            return bad(format!("n must be at least 10, got {}", self.n));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return bad(format!("decay must be positive, got {}", self.decay));
        }
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return bad(format!("r2 must lie in (0, 1), got {}", self.r2));
        }
        if self.models == 0 || self.models >= self.n {
            return bad(format!("need 1 <= models < n, got {} models for n = {}", self.models, self.n));
        }
        if self.j_max < self.models {
            return bad(format!("j_max = {} is below k_M = {}", self.j_max, self.models));
        }
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        Ok(())
    }

    pub fn spec(&self) -> NestedModelSpec {
        NestedModelSpec::consecutive(self.models).expect("models >= 1")
    }
}

/// `max(1000, 3 k_M)`.
pub fn default_j_max(models: usize) -> usize {
    1000.max(3 * models)
}

/// `theta_j = c sqrt(2 decay) j^(-decay - 1/2)` for `j = 1..=j_max`.
pub fn gen_theta(decay: f64, c: f64, j_max: usize) -> Vec<f64> {
    let lead = c * (2.0 * decay).sqrt();
    (1..=j_max).map(|j| lead * (j as f64).powf(-decay - 0.5)).collect()
}

/// `M = round(3 n^(1/3))`.
pub fn model_count(n: usize) -> usize {
    (3.0 * (n as f64).cbrt()).round() as usize
}

/// Bounds on what truncating the tail at `j_max` leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    /// Upper bound on the variance of the omitted tail, per observation.
    pub variance_bound: f64,
    /// Upper bound on the mean of the omitted tail; infinite when the series diverges.
    pub mean_bound: f64,
}

pub fn truncation_bounds(decay: f64, c: f64, j_max: usize, bias: BiasKind) -> TruncationBounds {
    let jm = j_max as f64;
    // sum_{j > J} theta_j^2 <= c^2 J^(-2 decay)
    let sq = c * c * jm.powf(-2.0 * decay);
    let sum = if decay > 0.5 {
        c * (2.0 * decay).sqrt() * jm.powf(0.5 - decay) / (decay - 0.5)
    } else {
        f64::INFINITY
    };
    let e = std::f64::consts::E;
    match bias {
        BiasKind::Exponential => TruncationBounds { variance_bound: (e * e - e) * sq, mean_bound: e.sqrt() * sum },
        BiasKind::Linear => TruncationBounds { variance_bound: sq, mean_bound: 0.0 },
    }
}

/// A dataset together with its true conditional mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub data: Dataset,
    pub mu: Array1<f64>,
    pub sigma2_true: f64,
}

/// RNG for one `(seed, replicate, stream)` triple.
pub fn replicate_rng(seed: u64, replicate: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replicate.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

pub fn simulate_dataset(config: &SimulationConfig, replicate: u64) -> Result<SimulatedDataset> {
    config.validate()?;
    let (n, k) = (config.n, config.models);
    let theta = gen_theta(config.decay, config.c(), config.j_max);

    let mut x = Array2::<f64>::zeros((n, k));
    let mut rng = replicate_rng(config.seed, replicate, STREAM_DESIGN);
    for j in 0..k {
        for i in 0..n {
            x[[i, j]] = rng.sample(StandardNormal);
        }
    }
    let mut mu = x.dot(&Array1::from(theta[..k].to_vec()));

    let mut rng = replicate_rng(config.seed, replicate, STREAM_TAIL);
    for &t in &theta[k..] {
        for m in mu.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *m += t * match config.bias {
                BiasKind::Exponential => z.exp(),
                BiasKind::Linear => z,
            };
        }
    }

    let mut rng = replicate_rng(config.seed, replicate, STREAM_NOISE);
    let y: Array1<f64> = mu.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect();

    Ok(SimulatedDataset { data: Dataset::new(y, x)?, mu, sigma2_true: 1.0 })
}

/// `||mu - fitted||^2`.
pub fn evaluate_loss(sim: &SimulatedDataset, fitted: &Array1<f64>) -> Result<f64> {
    if fitted.len() != sim.mu.len() {
        return Err(Error::DimensionMismatch(format!(
            "fitted has length {}, mu has length {}",
            fitted.len(),
            sim.mu.len()
        )));
    }
    Ok(sim.mu.iter().zip(fitted).map(|(a, b)| (a - b).powi(2)).sum())
}

fn sigma2_for(config: &SimulationConfig, sim: &SimulatedDataset, fits: &ModelFits) -> f64 {
    match config.sigma2_mode {
        Sigma2Mode::Estimate => fits.sigma2_hat(),
        Sigma2Mode::TrueValue => sim.sigma2_true,
    }
}

/// Losses and criteria of both estimators on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub loss_mma: f64,
    pub loss_msa: f64,
    pub criterion_mma: f64,
    pub criterion_msa: f64,
    pub alpha: f64,
    pub converged: bool,
}

pub fn run_replicate(config: &SimulationConfig, replicate: u64) -> Result<ReplicateOutcome> {
    let sim = simulate_dataset(config, replicate)?;
    let fits = fit_nested_models(&sim.data, &config.spec())?;
    let sigma2 = sigma2_for(config, &sim, &fits);
    let mma = solve_mma(&fits, sigma2, config.tol)?;
    let msa = solve_msa_from(&fits, sigma2, config.tol, &mma.weights)?;
    Ok(ReplicateOutcome {
        loss_mma: evaluate_loss(&sim, &averaged_fit(&fits, &mma.weights, 0.0)?)?,
        loss_msa: evaluate_loss(&sim, &averaged_fit(&fits, &msa.weights, msa.alpha)?)?,
        criterion_mma: mma.criterion_value,
        criterion_msa: msa.criterion_value,
        alpha: msa.alpha,
        converged: mma.converged && msa.converged,
    })
}

/// Aggregated results for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub config: SimulationConfig,
    /// Replicates entering the means (converged ones).
    pub used: usize,
    pub nonconverged: usize,
    /// Replicates where the MSA criterion exceeded the MMA criterion by more than [`DOMINANCE_SLACK`].
    pub dominance_violations: usize,
    pub mean_loss_mma: f64,
    pub mean_loss_msa: f64,
    pub se_loss_mma: f64,
    pub se_loss_msa: f64,
    pub log_risk_mma: f64,
    pub log_risk_msa: f64,
    /// `log_risk_mma - log_risk_msa`; positive when MSA has lower risk.
    pub log_risk_diff: f64,
    /// Delta-method standard error of the difference from the two per-estimator standard errors.
    pub se_log_diff: f64,
    /// Delta-method standard error using the paired replicate differences.
    pub se_log_diff_paired: f64,
    pub mean_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub cells: Vec<CellReport>,
}

impl RiskReport {
    pub fn find(&self, n: usize, decay: f64, r2: f64) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.config.n == n && c.config.decay == decay && (c.config.r2 - r2).abs() < 1e-9)
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Reduces per-replicate outcomes, taken in replicate order.
pub fn summarize(config: &SimulationConfig, outcomes: &[ReplicateOutcome]) -> CellReport {
    let used: Vec<&ReplicateOutcome> = outcomes.iter().filter(|o| o.converged).collect();
    let a: Vec<f64> = used.iter().map(|o| o.loss_mma).collect();
    let b: Vec<f64> = used.iter().map(|o| o.loss_msa).collect();
    let (ma, sa) = mean_sd(&a);
    let (mb, sb) = mean_sd(&b);
    let r = used.len() as f64;
    let se_a = sa / r.sqrt();
    let se_b = sb / r.sqrt();
    let rel: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x / ma - y / mb).collect();
    let (_, sd_rel) = mean_sd(&rel);
    CellReport {
        config: config.clone(),
        used: used.len(),
        nonconverged: outcomes.len() - used.len(),
        dominance_violations: outcomes
            .iter()
            .filter(|o| o.criterion_msa > o.criterion_mma + DOMINANCE_SLACK)
            .count(),
        mean_loss_mma: ma,
        mean_loss_msa: mb,
        se_loss_mma: se_a,
        se_loss_msa: se_b,
        log_risk_mma: ma.ln(),
        log_risk_msa: mb.ln(),
        log_risk_diff: ma.ln() - mb.ln(),
        se_log_diff: ((se_a / ma).powi(2) + (se_b / mb).powi(2)).sqrt(),
        se_log_diff_paired: sd_rel / r.sqrt(),
        mean_alpha: used.iter().map(|o| o.alpha).sum::<f64>() / r,
    }
}

/// Maps `f` over `0..count` in parallel when the `parallel` feature is on,
/// always returning results in index order.
pub(crate) fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Runs every cell and reduces each in replicate order.
pub fn run_experiment(configs: &[SimulationConfig]) -> Result<RiskReport> {
    if configs.is_empty() {
        return Err(Error::InvalidInput("no configurations to run".into()));
    }
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..c.iterations as u64).map(move |r| (ci, r)))
        .collect();
    let results = map_indexed(jobs.len(), |i| {
        let (ci, r) = jobs[i];
        run_replicate(&configs[ci], r)
    });
    let mut results = results.into_iter();
    let mut cells = Vec::with_capacity(configs.len());
    for c in configs {
        let outcomes = results.by_ref().take(c.iterations).collect::<Result<Vec<_>>>()?;
        cells.push(summarize(c, &outcomes));
    }
    Ok(RiskReport { cells })
}

/// The `(n, decay, R^2)` grid with `R^2 = 0.1, 0.2, ..., 0.9`.
pub fn paper_grid(sample_sizes: &[usize], decays: &[f64], iterations: usize, seed: u64) -> Result<Vec<SimulationConfig>> {
    let r2s = r2_sweep(0.1, 0.9, 0.1)?;
    let mut out = Vec::new();
    for &d in decays {
        for &n in sample_sizes {
            for &r2 in &r2s {
                out.push(SimulationConfig::new(n, d, r2, iterations, seed)?);
            }
        }
    }
    Ok(out)
}

/// `min, min + step, ...` up to `max` inclusive, rounded to 12 decimals so labels stay clean.
pub fn r2_sweep(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(min <= max) {
        return Err(Error::InvalidInput(format!("bad sweep {min}..{max} step {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Monte Carlo check that `E[C(W)] - n sigma^2 = E[L(W)]` for fixed weights and the true variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub replicates: usize,
    pub mean_criterion_minus_n_sigma2: f64,
    pub mean_loss: f64,
    /// Standard error of the paired difference `C - n sigma^2 - L`.
    pub se_diff: f64,
}

impl UnbiasednessReport {
    pub fn z_score(&self) -> f64 {
        (self.mean_criterion_minus_n_sigma2 - self.mean_loss) / self.se_diff
    }
}

pub fn mallows_unbiasedness(config: &SimulationConfig, weights: &[f64], replicates: usize) -> Result<UnbiasednessReport> {
    config.validate()?;
    let pairs = map_indexed(replicates, |r| -> Result<(f64, f64)> {
        let sim = simulate_dataset(config, r as u64)?;
        let fits = fit_nested_models(&sim.data, &config.spec())?;
        let c = mma_criterion(&fits, weights, sim.sigma2_true)? - config.n as f64 * sim.sigma2_true;
        let l = evaluate_loss(&sim, &averaged_fit(&fits, weights, 0.0)?)?;
        Ok((c, l))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let c: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let l: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let (_, sd) = mean_sd(&d);
    Ok(UnbiasednessReport {
        replicates,
        mean_criterion_minus_n_sigma2: mean_sd(&c).0,
        mean_loss: mean_sd(&l).0,
        se_diff: sd / (replicates as f64).sqrt(),
    })
}

/// Ratio of the MSA loss to the smallest loss attainable on the weight grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityRatioReport {
    pub n: usize,
    pub replicates: usize,
    pub mean_ratio: f64,
    pub se_ratio: f64,
}

/// `L(W_hat, alpha_hat) / inf_{W in grid, alpha} L(W, alpha)`, averaged over replicates.
///
/// For each grid `W` the infimum over the shift is attained at the mean of
/// `mu - mu(W)`, so the inner minimization is exact rather than gridded.
pub fn optimality_ratio(config: &SimulationConfig, n_grid: usize, replicates: usize) -> Result<OptimalityRatioReport> {
    config.validate()?;
    let ratios = map_indexed(replicates, |r| -> Result<f64> {
        let sim = simulate_dataset(config, r as u64)?;
        let fits = fit_nested_models(&sim.data, &config.spec())?;
        let sigma2 = sigma2_for(config, &sim, &fits);
        let msa = solve_msa(&fits, sigma2, config.tol)?;
        let loss = evaluate_loss(&sim, &averaged_fit(&fits, &msa.weights, msa.alpha)?)?;
        Ok(loss / oracle_loss(&sim, &fits, n_grid)?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (mean, sd) = mean_sd(&ratios);
    Ok(OptimalityRatioReport {
        n: config.n,
        replicates,
        mean_ratio: mean,
        se_ratio: sd / (replicates as f64).sqrt(),
    })
}

/// Smallest `||mu - mu(W) - alpha||^2` over the weight grid and all shifts.
pub fn oracle_loss(sim: &SimulatedDataset, fits: &ModelFits, n_grid: usize) -> Result<f64> {
    let m = fits.model_count();
    let count = crate::optimizer::grid_size(n_grid, m);
    if count > crate::optimizer::GRID_LIMIT {
        return Err(Error::GridTooLarge { count, limit: crate::optimizer::GRID_LIMIT });
    }
    // Columns d_m = mu - P_m y, centered so the optimal shift is already removed.
    let n = fits.n();
    let mut d = Array2::<f64>::zeros((n, m));
    for j in 0..m {
        let col: Array1<f64> = &sim.mu - &fits.fitted().column(j);
        let mean = col.mean().expect("n >= 2");
        d.column_mut(j).assign(&(col - mean));
    }
    let g = d.t().dot(&d);
    let mut best = f64::INFINITY;
    let mut w = vec![0.0; m];
    let inv = 1.0 / n_grid as f64;
    crate::optimizer::for_each_composition(n_grid, m, &mut |c| {
        for (wi, &ci) in w.iter_mut().zip(c) {
            *wi = ci as f64 * inv;
        }
        let wv = ndarray::ArrayView1::from(&w[..]);
        best = best.min(wv.dot(&g.dot(&wv)));
    });
    Ok(best)
}
