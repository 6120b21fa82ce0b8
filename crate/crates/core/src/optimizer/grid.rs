//! Exhaustive search over the discrete weight class `{w : w_m in {0, 1/N, ..., 1}, sum w = 1}`.
//!
//! Verification oracle only; cost grows as `C(N + M - 1, M - 1)`.

use ndarray::{Array1, ArrayView1};

use super::AveragingSolution;
use crate::criterion::build_qp;
use crate::error::{Error, Result};
use crate::optimizer::qp::{kkt_residual, objective_at};
use crate::regression::ModelFits;

pub const GRID_LIMIT: f64 = 1e7;

/// Number of points in the grid with resolution `1/n_grid` over `m` weights.
pub fn grid_size(n_grid: usize, m: usize) -> f64 {
    // C(N + M - 1, M - 1)
    (1..m).fold(1.0, |acc, i| acc * (n_grid + i) as f64 / i as f64)
}

/// 201 equispaced shifts spanning the mean residual plus or minus five standard deviations of `y`.
pub fn default_alpha_grid(fits: &ModelFits) -> Vec<f64> {
    let center = fits.residuals().mean().expect("non-empty");
    let y = fits.y();
    let n = y.len() as f64;
    let ybar = y.mean().expect("non-empty");
    let sd = (y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let half = 5.0 * sd;
    (0..201).map(|i| center - half + 2.0 * half * i as f64 / 200.0).collect()
}

/// Calls `visit` on every composition of `total` into `parts` nonnegative integers,
/// in lexicographic order.
pub(crate) fn for_each_composition(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, left: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
        if buf.len() + 1 == parts {
            buf.push(left);
            visit(buf);
            buf.pop();
            return;
        }
        for c in (0..=left).rev() {
            buf.push(c);
            rec(buf, left - c, parts, visit);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(parts);
    rec(&mut buf, total, parts, visit);
}

/// Best grid point for the MMA criterion, or with `mean_shift` the best
/// `(W, alpha)` over the grid crossed with `alpha_grid` plus the profiled shift at each `W`.
pub fn grid_oracle(
    fits: &ModelFits,
    sigma2: f64,
    n_grid: usize,
    mean_shift: bool,
    alpha_grid: &[f64],
) -> Result<AveragingSolution> {
    if n_grid == 0 {
        return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
    }
    let m = fits.model_count();
    let count = grid_size(n_grid, m);
    if count > GRID_LIMIT {
        return Err(Error::GridTooLarge { count, limit: GRID_LIMIT });
    }
    let plain = build_qp(fits, sigma2, false)?;
    let centered = build_qp(fits, sigma2, true)?;
    let sums = fits.residual_sums();
    let n = fits.n() as f64;
    let inv = 1.0 / n_grid as f64;

    let mut best_value = f64::INFINITY;
    let mut best_w = vec![0.0; m];
    let mut best_alpha = 0.0;
    let mut w = Array1::<f64>::zeros(m);
    let mut points = 0usize;
    for_each_composition(n_grid, m, &mut |c: &[usize]| {
        points += 1;
        for (wi, &ci) in w.iter_mut().zip(c) {
            *wi = ci as f64 * inv;
        }
        let view: ArrayView1<'_, f64> = w.view();
        let (value, alpha) = if mean_shift {
            let s = sums.dot(&view);
            let mut best = (objective_at(&centered, view), s / n);
            let base = objective_at(&plain, view);
            for &a in alpha_grid {
                let v = base - 2.0 * a * s + n * a * a;
                if v < best.0 {
                    best = (v, a);
                }
            }
            best
        } else {
            (objective_at(&plain, view), 0.0)
        };
        if value < best_value {
            best_value = value;
            best_w.copy_from_slice(w.as_slice().expect("contiguous"));
            best_alpha = alpha;
        }
    });

    let problem = if mean_shift { &centered } else { &plain };
    Ok(AveragingSolution {
        kkt_residual: kkt_residual(problem, &best_w),
        weights: best_w,
        alpha: best_alpha,
        criterion_value: best_value,
        iterations: points,
        converged: true,
    })
}
