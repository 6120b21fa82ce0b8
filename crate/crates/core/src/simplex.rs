//! The probability simplex: membership checks and Euclidean projection.

use crate::error::{Error, Result};

/// Tolerance on each coordinate and on the sum when validating weights.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Checks that `w` has `m` entries in `[0, 1]` summing to one, within [`SIMPLEX_TOL`].
pub fn check_simplex(w: &[f64], m: usize) -> Result<()> {
    if w.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "weight vector has length {}, expected {m}",
            w.len()
        )));
    }
    if let Some((i, v)) = w
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < -SIMPLEX_TOL || **v > 1.0 + SIMPLEX_TOL)
    {
        return Err(Error::SimplexViolation(format!("w[{i}] = {v}")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::SimplexViolation(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// Euclidean projection of `v` onto `{w : w >= 0, sum(w) = 1}`.
///
/// Sort-based: find the largest `rho` with `u_rho > (sum_{i<=rho} u_i - 1) / rho`
/// on the descending sort `u`, then threshold at that level.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// The uniform point `(1/m, ..., 1/m)`.
pub fn uniform(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}
