//! Self-contained invariant suites, runnable from the command line.
//!
//! Each suite draws its own random instances from a fixed seed and reports the
//! worst violation it saw. Suites are independent: one failing does not stop
//! the others.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::criterion::{build_qp, msa_criterion, profiled_alpha, QpProblem};
use crate::error::Result;
use crate::optimizer::{default_alpha_grid, grid_oracle, largest_eigenvalue, solve_mma, solve_msa, DEFAULT_TOL};
use crate::regression::{fit_nested_models, Dataset, ModelFits, NestedModelSpec};
use crate::simplex::{check_simplex, project_onto_simplex};
use crate::simulation::{mallows_unbiasedness, SimulationConfig, Sigma2Mode};

/// Stationarity required of a solver result, independent of the solver tolerance in use.
pub const KKT_BOUND: f64 = 1e-8;
/// Resolution of the grid the QP solutions are checked against.
pub const GRID_STEPS: usize = 200;

/// Largest amount by which the best point of the `1/N` grid can exceed the
/// continuous minimum: rounding the optimum's support to the grid moves it by
/// `d` with `|d|^2 <= M / N^2` and no first-order change, so the excess is at
/// most `lambda_max(Q) M / N^2`.
pub fn grid_gap_bound(problem: &QpProblem, n_grid: usize) -> f64 {
    let m = problem.dim() as f64;
    largest_eigenvalue(&problem.q) * m / (n_grid * n_grid) as f64
}

pub const SUITES: [&str; 6] = [
    "simplex-projection",
    "nesting-orthogonality",
    "qp-vs-grid",
    "profiling-identity",
    "dominance",
    "unbiasedness",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Tolerance handed to the weight solver.
    pub solver_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 20240917, solver_tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

/// Random nested-model instance: Gaussian design, random coefficients and a
/// random offset that the design (no intercept) cannot absorb.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<ModelFits> {
    let x = Array2::from_shape_fn((n, m), |_| rng.sample(StandardNormal));
    let theta: Array1<f64> = (0..m).map(|j| rng.random_range(-2.0..2.0) / (j + 1) as f64).collect();
    let offset = rng.random_range(-1.5..1.5);
    let noise_sd = rng.random_range(0.3..2.0);
    let y = x.dot(&theta) + offset + Array1::from_shape_fn(n, |_| noise_sd * rng.sample::<f64, _>(StandardNormal));
    fit_nested_models(&Dataset::new(y, x)?, &NestedModelSpec::consecutive(m)?)
}

/// Uniformly distributed point on the simplex.
pub fn random_simplex_point(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn rng_for(opts: &VerifyOptions, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(suite);
    rng
}

pub fn run_suite(name: &str, opts: &VerifyOptions) -> Option<SuiteOutcome> {
    let outcome = match name {
        "simplex-projection" => simplex_projection(opts),
        "nesting-orthogonality" => nesting_orthogonality(opts),
        "qp-vs-grid" => qp_vs_grid(opts),
        "profiling-identity" => profiling_identity(opts),
        "dominance" => dominance(opts),
        "unbiasedness" => unbiasedness(opts),
        _ => return None,
    };
    Some(outcome.unwrap_or_else(|e| SuiteOutcome {
        name: SUITES.iter().find(|s| **s == name).copied().unwrap_or("unknown"),
        passed: false,
        cases: 0,
        detail: format!("error: {e}"),
    }))
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteOutcome> {
    SUITES.iter().filter_map(|s| run_suite(s, opts)).collect()
}

fn outcome(name: &'static str, passed: bool, cases: usize, detail: String) -> Result<SuiteOutcome> {
    Ok(SuiteOutcome { name, passed, cases, detail })
}

fn simplex_projection(opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let mut rng = rng_for(opts, 1);
    let cases = 2000;
    let mut worst = 0.0f64;
    let mut feasible = true;
    for _ in 0..cases {
        let m = rng.random_range(1..=30);
        let v: Vec<f64> = (0..m).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let p = project_onto_simplex(&v);
        feasible &= check_simplex(&p, m).is_ok();
        // <v - p, q - p> <= 0 for every feasible q.
        for _ in 0..5 {
            let q = random_simplex_point(&mut rng, m);
            let inner: f64 = (0..m).map(|i| (v[i] - p[i]) * (q[i] - p[i])).sum();
            worst = worst.max(inner);
        }
    }
    let passed = feasible && worst <= 1e-12;
    outcome("simplex-projection", passed, cases, format!("max variational gap {worst:.2e}"))
}

fn nesting_orthogonality(opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let mut rng = rng_for(opts, 2);
    let cases = 200;
    let mut worst_split = 0.0f64;
    let mut worst_orth = 0.0f64;
    let mut monotone = true;
    for _ in 0..cases {
        let n = rng.random_range(15..=150);
        let m = rng.random_range(1..=10);
        let fits = random_instance(&mut rng, n, m)?;
        let y = fits.y();
        let ynorm2 = y.dot(&y);
        let (f, e) = (fits.fitted(), fits.residuals());
        let mut prev = f64::INFINITY;
        for j in 0..m {
            let split = (&f.column(j) + &e.column(j) - &y).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            worst_split = worst_split.max(split / ynorm2.sqrt());
            for l in 0..=j {
                let diff = &f.column(l) - &f.column(j);
                worst_orth = worst_orth.max(e.column(j).dot(&diff).abs() / ynorm2);
            }
            worst_orth = worst_orth.max(e.column(j).dot(&f.column(j)).abs() / ynorm2);
            let rss = e.column(j).dot(&e.column(j));
            monotone &= rss <= prev * (1.0 + 1e-12);
            prev = rss;
        }
    }
    let passed = worst_split <= 1e-10 && worst_orth <= 1e-8 && monotone;
    outcome(
        "nesting-orthogonality",
        passed,
        cases,
        format!("split {worst_split:.2e}, orthogonality {worst_orth:.2e}, rss monotone {monotone}"),
    )
}

fn qp_vs_grid(opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let mut rng = rng_for(opts, 3);
    let cases = 100;
    let mut worst_kkt = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut beaten = 0usize;
    for _ in 0..cases {
        let n = rng.random_range(20..=200);
        let m = rng.random_range(2..=3);
        let fits = random_instance(&mut rng, n, m)?;
        let s2 = fits.sigma2_hat();
        let grid_alpha = default_alpha_grid(&fits);
        for mean_shift in [false, true] {
            let sol = if mean_shift {
                solve_msa(&fits, s2, opts.solver_tol)?
            } else {
                solve_mma(&fits, s2, opts.solver_tol)?
            };
            let problem = build_qp(&fits, s2, mean_shift)?;
            let cont = problem.objective(&sol.weights);
            let grid = grid_oracle(&fits, s2, GRID_STEPS, mean_shift, &grid_alpha)?.criterion_value;
            worst_kkt = worst_kkt.max(if sol.converged { sol.kkt_residual } else { f64::INFINITY });
            let slack = 1e-12 * grid.abs().max(1.0);
            if cont > grid + slack {
                beaten += 1;
            }
            worst_ratio = worst_ratio.max((grid - cont) / (grid_gap_bound(&problem, GRID_STEPS) + slack));
        }
    }
    let passed = worst_kkt <= KKT_BOUND && beaten == 0 && worst_ratio <= 1.0;
    outcome(
        "qp-vs-grid",
        passed,
        2 * cases,
        format!("max kkt {worst_kkt:.2e}, grid beat solver {beaten}x, max gap / resolution bound {worst_ratio:.2}"),
    )
}

fn profiling_identity(opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let mut rng = rng_for(opts, 4);
    let cases = 500;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.random_range(6..=120);
        let m = rng.random_range(1..=5.min(n - 1));
        let fits = random_instance(&mut rng, n, m)?;
        let s2 = fits.sigma2_hat();
        let w = random_simplex_point(&mut rng, m);
        let direct = msa_criterion(&fits, &w, profiled_alpha(&fits, &w)?, s2)?;
        let qp = build_qp(&fits, s2, true)?.objective(&w);
        worst = worst.max((direct - qp).abs() / direct.abs().max(1e-300));
    }
    outcome("profiling-identity", worst <= 1e-9, cases, format!("max relative error {worst:.2e}"))
}

fn dominance(opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let mut rng = rng_for(opts, 5);
    let cases = 1000;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let n = rng.random_range(20..=200);
        let m = rng.random_range(2..=10);
        let fits = random_instance(&mut rng, n, m)?;
        let s2 = fits.sigma2_hat();
        let mma = solve_mma(&fits, s2, opts.solver_tol)?;
        let msa = solve_msa(&fits, s2, opts.solver_tol)?;
        let excess = msa.criterion_value - mma.criterion_value;
        worst = worst.max(excess);
        if excess > 1e-9 {
            violations += 1;
        }
    }
    outcome(
        "dominance",
        violations == 0,
        cases,
        format!("{violations} violations, max excess {worst:.2e}"),
    )
}

fn unbiasedness(opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let mut cfg = SimulationConfig::new(50, 1.0, 0.5, 1, opts.seed)?;
    cfg.sigma2_mode = Sigma2Mode::TrueValue;
    let w = crate::simplex::uniform(cfg.models);
    let report = mallows_unbiasedness(&cfg, &w, 2000)?;
    let z = report.z_score();
    outcome(
        "unbiasedness",
        z.abs() <= 3.0,
        report.replicates,
        format!(
            "E[C] - n = {:.4}, E[L] = {:.4}, z = {z:.2}",
            report.mean_criterion_minus_n_sigma2, report.mean_loss
        ),
    )
}
