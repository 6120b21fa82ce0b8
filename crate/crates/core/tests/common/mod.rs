//! Independent oracles shared by the integration tests. Nothing here calls the
//! factorization, criterion or solver code paths it is used to check.

#![allow(dead_code)]

use ndarray::{Array1, Array2};

/// Least-squares fit of `y` on `x` via the normal equations and a Cholesky solve.
pub fn normal_equations_fit(x: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    let g = x.t().dot(x);
    let b = x.t().dot(y);
    let k = g.nrows();
    let mut l = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[[i, p]] * l[[j, p]]).sum();
            if i == j {
                l[[i, i]] = (g[[i, i]] - s).sqrt();
            } else {
                l[[i, j]] = (g[[i, j]] - s) / l[[j, j]];
            }
        }
    }
    let mut z = Array1::<f64>::zeros(k);
    for i in 0..k {
        let s: f64 = (0..i).map(|p| l[[i, p]] * z[p]).sum();
        z[i] = (b[i] - s) / l[[i, i]];
    }
    let mut theta = Array1::<f64>::zeros(k);
    for i in (0..k).rev() {
        let s: f64 = ((i + 1)..k).map(|p| l[[p, i]] * theta[p]).sum();
        theta[i] = (z[i] - s) / l[[i, i]];
    }
    x.dot(&theta)
}

/// Double-double accumulation of `sum_i (r_i - a)^2`, accurate far below f64 roundoff.
pub fn compensated_sq_dev(r: &[f64], a: f64) -> (f64, f64) {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &ri in r {
        // d = ri - a exactly as dh + dl
        let dh = ri - a;
        let bb = dh - ri;
        let dl = (ri - (dh - bb)) + (-a - bb);
        // d^2 = p + e exactly for the head, plus the cross term
        let p = dh * dh;
        let e = dh.mul_add(dh, -p) + 2.0 * dh * dl;
        // (hi, lo) += (p, e)
        let s = hi + p;
        let bv = s - hi;
        let err = (hi - (s - bv)) + (p - bv);
        lo += err + e;
        hi = s;
    }
    let s = hi + lo;
    (s, lo - (s - hi))
}

fn dd_less(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0) + (a.1 - b.1) < 0.0
}

/// Golden-section minimization of a unimodal function given as a double-double value.
pub fn golden_section(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if dd_less(f1, f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Every point of the simplex grid with `per_axis - 1` steps, as weight vectors.
pub fn simplex_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(buf: &mut Vec<usize>, left: usize, m: usize, out: &mut Vec<Vec<usize>>) {
        if buf.len() + 1 == m {
            buf.push(left);
            out.push(buf.clone());
            buf.pop();
            return;
        }
        for c in 0..=left {
            buf.push(c);
            rec(buf, left - c, m, out);
            buf.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), steps, m, &mut out);
    out.into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / steps as f64).collect())
        .collect()
}

/// Direct `W' Q W + lin' W` by explicit double loop.
pub fn quad_form(q: &Array2<f64>, lin: &Array1<f64>, w: &[f64]) -> f64 {
    let m = w.len();
    let mut v = 0.0;
    for i in 0..m {
        v += lin[i] * w[i];
        for j in 0..m {
            v += w[i] * q[[i, j]] * w[j];
        }
    }
    v
}
