//! Nested least-squares fits.
//!
//! Model `m` regresses `y` on the first `k_m` columns of `X`. All models share
//! one Householder factorization of `X[:, ..k_M]`, grown a column at a time, so
//! the fitted values of every model come from a single full-model factorization.
//! The caller's design is used verbatim: no intercept column is added.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::check_simplex;

/// A column is dependent when its norm after projecting out the preceding
/// columns falls below this fraction of its original norm.
pub const RANK_TOL: f64 = 1e-10;

/// Observed response and design.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Array1<f64>,
    x: Array2<f64>,
}

impl Dataset {
    pub fn new(y: Array1<f64>, x: Array2<f64>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "y has {} entries but X has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if y.len() < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 observations, got {}", y.len())));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidInput("design has no columns".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("y has non-finite entries".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("X has non-finite entries".into()));
        }
        Ok(Self { y, x })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    /// Multiplies both the response and the design by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(&self.y * s, &self.x * s)
    }
}

/// The ladder `k_1 < k_2 < ... < k_M` of model dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedModelSpec {
    k: Vec<usize>,
}

impl NestedModelSpec {
    pub fn new(k: Vec<usize>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidInput("model ladder is empty".into()));
        }
        if k[0] == 0 {
            return Err(Error::InvalidInput("k_1 must be at least 1".into()));
        }
        if let Some(w) = k.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "model ladder must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { k })
    }

    /// The densest ladder `k_m = m` for `m = 1..=models`.
    pub fn consecutive(models: usize) -> Result<Self> {
        Self::new((1..=models).collect())
    }

    /// Number of models `M`.
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// The dimension vector `K`.
    pub fn dims(&self) -> &[usize] {
        &self.k
    }

    /// `k_M`, the size of the largest model.
    pub fn largest(&self) -> usize {
        *self.k.last().expect("ladder is non-empty")
    }
}

/// Fitted values and residuals of every nested model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFits {
    y: Array1<f64>,
    fitted: Array2<f64>,
    residuals: Array2<f64>,
    sigma2_hat: f64,
    spec: NestedModelSpec,
}

impl ModelFits {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of models `M`.
    pub fn model_count(&self) -> usize {
        self.spec.len()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    /// `n x M`; column `m` is `P_m y`.
    pub fn fitted(&self) -> ArrayView2<'_, f64> {
        self.fitted.view()
    }

    /// `n x M`; column `m` is `y - P_m y`.
    pub fn residuals(&self) -> ArrayView2<'_, f64> {
        self.residuals.view()
    }

    /// `||e_M||^2 / (n - k_M)` from the largest model.
    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2_hat
    }

    pub fn spec(&self) -> &NestedModelSpec {
        &self.spec
    }

    /// `K` as floating point, for the penalty term.
    pub fn dims_f64(&self) -> Array1<f64> {
        self.spec.dims().iter().map(|&k| k as f64).collect()
    }

    /// Column sums of the residual matrix, `1^T e_m`.
    pub fn residual_sums(&self) -> Array1<f64> {
        self.residuals.sum_axis(Axis(0))
    }
}

struct Reflector {
    /// Unit vector acting on rows `start..n`.
    v: Vec<f64>,
    start: usize,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let seg = &mut x[self.start..];
        let s: f64 = self.v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
        let s2 = 2.0 * s;
        for (xi, vi) in seg.iter_mut().zip(&self.v) {
            *xi -= s2 * vi;
        }
    }
}

/// Fits all nested models of `spec` to `data`.
pub fn fit_nested_models(data: &Dataset, spec: &NestedModelSpec) -> Result<ModelFits> {
    let n = data.n();
    let k_max = spec.largest();
    if k_max > data.p() {
        return Err(Error::DimensionMismatch(format!(
            "largest model uses {k_max} columns but X has {}",
            data.p()
        )));
    }
    if k_max >= n {
        return Err(Error::DimensionMismatch(format!(
            "largest model uses {k_max} columns with only {n} observations; \
             the error variance needs n > k_M"
        )));
    }

    let mut reflectors: Vec<Reflector> = Vec::with_capacity(k_max);
    let mut z: Vec<f64> = data.y.to_vec();
    for j in 0..k_max {
        let mut col: Vec<f64> = data.x.column(j).to_vec();
        let original = norm(&col);
        for h in &reflectors {
            h.apply(&mut col);
        }
        let trailing = norm(&col[j..]);
        if original == 0.0 || trailing < RANK_TOL * original {
            return Err(Error::RankDeficient { column: j + 1 });
        }
        let alpha = if col[j] >= 0.0 { -trailing } else { trailing };
        let mut v = col[j..].to_vec();
        v[0] -= alpha;
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        let h = Reflector { v, start: j };
        h.apply(&mut z);
        reflectors.push(h);
    }

    // z = Q^T y. Model m keeps the first k_m coordinates of z.
    let m = spec.len();
    let mut fitted = Array2::<f64>::zeros((n, m));
    let mut residuals = Array2::<f64>::zeros((n, m));
    let back = |mut coords: Vec<f64>| {
        for h in reflectors.iter().rev() {
            h.apply(&mut coords);
        }
        coords
    };
    for (idx, &k) in spec.dims().iter().enumerate() {
        let mut head = vec![0.0; n];
        head[..k].copy_from_slice(&z[..k]);
        let mut tail = vec![0.0; n];
        tail[k..].copy_from_slice(&z[k..]);
        fitted.column_mut(idx).assign(&Array1::from(back(head)));
        residuals.column_mut(idx).assign(&Array1::from(back(tail)));
    }

    let rss_full: f64 = residuals.column(m - 1).iter().map(|e| e * e).sum();
    let sigma2_hat = rss_full / (n - k_max) as f64;

    Ok(ModelFits {
        y: data.y.clone(),
        fitted,
        residuals,
        sigma2_hat,
        spec: spec.clone(),
    })
}

/// The averaged predictive mean `alpha * 1 + sum_m w_m P_m y`.
///
/// With `alpha = 0` this is the plain linear average.
pub fn averaged_fit(fits: &ModelFits, w: &[f64], alpha: f64) -> Result<Array1<f64>> {
    check_simplex(w, fits.model_count())?;
    if !alpha.is_finite() {
        return Err(Error::NonFiniteAlpha(alpha));
    }
    Ok(fits.fitted.dot(&ArrayView1::from(w)) + alpha)
}

/// Residual of the linear average, `y - sum_m w_m P_m y = sum_m w_m e_m` on the simplex.
pub(crate) fn averaged_residual(fits: &ModelFits, w: &[f64]) -> Array1<f64> {
    &fits.y - &fits.fitted.dot(&ArrayView1::from(w))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
