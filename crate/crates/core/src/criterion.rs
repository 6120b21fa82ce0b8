//! Mallows criteria for linear and mean-shift model averages.
//!
//! On the simplex the residual of the average is the average of the residuals,
//! so both criteria are quadratic forms in the weights:
//!
//! ```text
//! C(W)        = ||y - mu(W)||^2          + 2 s2 K'W = W' E'E W  + 2 s2 K'W
//! min_a C(W,a) = ||y - mu(W) - a 1||^2   + 2 s2 K'W = W' E'CE W + 2 s2 K'W
//! ```
//!
//! with `E` the `n x M` residual matrix and `C = I - 11'/n` the centering matrix.
//! The minimizing shift for fixed `W` is the mean residual of `mu(W)`.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::regression::{averaged_residual, ModelFits};
use crate::simplex::check_simplex;

/// `W' Q W + lin' W + constant`, restricted to the simplex by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub q: Array2<f64>,
    pub lin: Array1<f64>,
    pub constant: f64,
    /// Set for the profiled mean-shift problem.
    pub centered: bool,
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let w = ArrayView1::from(w);
        w.dot(&self.q.dot(&w)) + self.lin.dot(&w) + self.constant
    }

    /// `2 Q w + lin`.
    pub fn gradient(&self, w: &[f64]) -> Array1<f64> {
        2.0 * self.q.dot(&ArrayView1::from(w)) + &self.lin
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let m = self.lin.len();
        if m == 0 {
            return Err(Error::BadProblem("empty problem".into()));
        }
        if self.q.dim() != (m, m) {
            return Err(Error::BadProblem(format!(
                "quadratic term is {:?}, linear term has length {m}",
                self.q.dim()
            )));
        }
        if self.q.iter().chain(self.lin.iter()).any(|v| !v.is_finite()) || !self.constant.is_finite() {
            return Err(Error::BadProblem("non-finite entries".into()));
        }
        Ok(())
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::InvalidInput(format!("error variance must be finite and nonnegative, got {sigma2}")));
    }
    Ok(())
}

fn penalty(fits: &ModelFits, w: &[f64], sigma2: f64) -> f64 {
    2.0 * sigma2 * fits.dims_f64().dot(&ArrayView1::from(w))
}

/// `||y - mu(W)||^2 + 2 sigma2 K'W`.
pub fn mma_criterion(fits: &ModelFits, w: &[f64], sigma2: f64) -> Result<f64> {
    check_simplex(w, fits.model_count())?;
    check_sigma2(sigma2)?;
    let r = averaged_residual(fits, w);
    Ok(r.dot(&r) + penalty(fits, w, sigma2))
}

/// `||y - mu(W) - alpha 1||^2 + 2 sigma2 K'W`.
pub fn msa_criterion(fits: &ModelFits, w: &[f64], alpha: f64, sigma2: f64) -> Result<f64> {
    check_simplex(w, fits.model_count())?;
    check_sigma2(sigma2)?;
    if !alpha.is_finite() {
        return Err(Error::NonFiniteAlpha(alpha));
    }
    let r = averaged_residual(fits, w) - alpha;
    Ok(r.dot(&r) + penalty(fits, w, sigma2))
}

/// The shift minimizing [`msa_criterion`] for fixed weights: the mean residual of `mu(W)`.
pub fn profiled_alpha(fits: &ModelFits, w: &[f64]) -> Result<f64> {
    check_simplex(w, fits.model_count())?;
    Ok(averaged_residual(fits, w).mean().expect("n >= 2"))
}

/// Assembles the weights-only quadratic program for MMA (`mean_shift = false`)
/// or for MSA with the shift profiled out (`mean_shift = true`).
pub fn build_qp(fits: &ModelFits, sigma2: f64, mean_shift: bool) -> Result<QpProblem> {
    check_sigma2(sigma2)?;
    let e = fits.residuals();
    let q = if mean_shift {
        let means = e.mean_axis(Axis(0)).expect("n >= 2");
        let centered = &e - &means.insert_axis(Axis(0));
        centered.t().dot(&centered)
    } else {
        e.t().dot(&e)
    };
    Ok(QpProblem {
        q: symmetrize(q),
        lin: 2.0 * sigma2 * fits.dims_f64(),
        constant: 0.0,
        centered: mean_shift,
    })
}

fn symmetrize(mut q: Array2<f64>) -> Array2<f64> {
    let m = q.nrows();
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (q[[i, j]] + q[[j, i]]);
            q[[i, j]] = v;
            q[[j, i]] = v;
        }
    }
    q
}
