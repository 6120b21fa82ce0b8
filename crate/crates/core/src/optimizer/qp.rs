//! Small dense convex QP over the probability simplex.
//!
//! Accelerated projected gradient with function-value restart, followed by an
//! exact equality-constrained solve on the support the iterates settle on.

use ndarray::{Array1, ArrayView1};

use super::AveragingSolution;
use crate::criterion::QpProblem;
use crate::error::Result;
use crate::simplex::{project_onto_simplex, uniform};

const POWER_ITERATIONS: usize = 50;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration from a fixed start.
pub fn largest_eigenvalue(q: &ndarray::Array2<f64>) -> f64 {
    let m = q.nrows();
    let mut v: Array1<f64> = (0..m).map(|i| 1.0 + i as f64 / m as f64).collect();
    v /= v.dot(&v).sqrt();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let qv = q.dot(&v);
        lambda = v.dot(&qv);
        let nrm = qv.dot(&qv).sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        v = qv / nrm;
    }
    lambda.max(v.dot(&q.dot(&v)))
}

fn problem_scale(problem: &QpProblem) -> f64 {
    let qmax = problem.q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lmax = problem.lin.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    1.0 + qmax + lmax
}

fn initial_lipschitz(problem: &QpProblem) -> f64 {
    // Gradient is 2Qw + lin, so the Lipschitz constant is 2 * lambda_max(Q).
    let l = 2.0 * largest_eigenvalue(&problem.q) * 1.05;
    l.max(1e-12 * problem_scale(problem))
}

/// `||w - P(w - g / s)||_inf` with `s = 1 + max|Q| + max|lin|`: the
/// projected-gradient mapping at a fixed step tied to the problem's scale,
/// divided by that scale. Zero exactly at the minimizers.
fn stationarity(w: &[f64], g: &Array1<f64>, scale: f64) -> f64 {
    let step: Vec<f64> = w.iter().zip(g).map(|(wi, gi)| wi - gi / scale).collect();
    let p = project_onto_simplex(&step);
    w.iter().zip(&p).fold(0.0f64, |a, (wi, pi)| a.max((wi - pi).abs()))
}

/// Scale-free stationarity measure on the simplex; see the solver docs.
pub fn kkt_residual(problem: &QpProblem, w: &[f64]) -> f64 {
    stationarity(w, &problem.gradient(w), problem_scale(problem))
}

/// Minimizes `problem` over the simplex, starting from the uniform weights.
///
/// Hitting the iteration cap `100 * M^2` is not an error: the best iterate is
/// returned with `converged = false`.
pub fn solve_simplex_qp(problem: &QpProblem, tol: f64) -> Result<AveragingSolution> {
    solve_simplex_qp_from(problem, tol, &uniform(problem.dim()))
}

/// As [`solve_simplex_qp`] but from a caller-supplied start (projected onto the
/// simplex first). The returned objective never exceeds the start's.
pub fn solve_simplex_qp_from(problem: &QpProblem, tol: f64, start: &[f64]) -> Result<AveragingSolution> {
    run(problem, tol, start, None)
}

/// Solves and records the objective after every iteration.
pub fn solve_simplex_qp_traced(problem: &QpProblem, tol: f64) -> Result<(AveragingSolution, Vec<f64>)> {
    let mut trace = Vec::new();
    let sol = run(problem, tol, &uniform(problem.dim()), Some(&mut trace))?;
    Ok((sol, trace))
}

fn run(problem: &QpProblem, tol: f64, start: &[f64], mut trace: Option<&mut Vec<f64>>) -> Result<AveragingSolution> {
    problem.validate()?;
    if !(tol > 0.0) {
        return Err(crate::Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let m = problem.dim();
    if start.len() != m {
        return Err(crate::Error::DimensionMismatch(format!(
            "start has length {}, problem has dimension {m}",
            start.len()
        )));
    }
    let scale = problem_scale(problem);
    let cap = 100 * m * m;

    let mut l = initial_lipschitz(problem);
    let mut x = project_onto_simplex(start);
    let mut fx = problem.objective(&x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut restarted = false;
    let mut iterations = 0;
    let mut kkt = stationarity(&x, &problem.gradient(&x), scale);
    if let Some(tr) = trace.as_deref_mut() {
        tr.push(fx);
    }

    while kkt > tol && iterations < cap {
        iterations += 1;
        let g = problem.gradient(&y);
        let xn = loop {
            let cand: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - gi / l).collect();
            let xn = project_onto_simplex(&cand);
            let d: Array1<f64> = xn.iter().zip(&y).map(|(a, b)| a - b).collect();
            let curv = d.dot(&problem.q.dot(&d));
            if curv <= 0.5 * l * d.dot(&d) * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                break xn;
            }
            l *= 2.0;
        };
        let fxn = problem.objective(&xn);
        if fxn > fx + roundoff(fx) {
            if restarted {
                // A plain step from x no longer decreases: roundoff floor.
                break;
            }
            t = 1.0;
            y = x.clone();
            restarted = true;
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / tn;
            y = xn.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            x = xn;
            fx = fxn;
            t = tn;
            restarted = false;
            kkt = stationarity(&x, &problem.gradient(&x), scale);
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(fx);
        }
    }

    if let Some(p) = polish(problem, &x) {
        let fp = problem.objective(&p);
        if fp <= fx + roundoff(fx) {
            let kp = stationarity(&p, &problem.gradient(&p), scale);
            if kp <= kkt {
                x = p;
                fx = fp;
                kkt = kp;
                if let Some(tr) = trace.as_deref_mut() {
                    tr.push(fx);
                }
            }
        }
    }

    let sum: f64 = x.iter().sum();
    let weights: Vec<f64> = x.iter().map(|v| (v / sum).clamp(0.0, 1.0)).collect();
    Ok(AveragingSolution {
        alpha: 0.0,
        criterion_value: fx,
        kkt_residual: kkt,
        iterations,
        converged: kkt <= tol,
        weights,
    })
}

/// Objective changes this small are below what the evaluation can resolve.
fn roundoff(f: f64) -> f64 {
    4.0 * f64::EPSILON * f.abs()
}

/// Solves `min w'Qw + lin'w` subject to `sum(w) = 1` on the support of `x`.
/// Returns `None` when the reduced system is singular or the solution leaves
/// the nonnegative orthant.
fn polish(problem: &QpProblem, x: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
    let s = support.len();
    if s == 0 {
        return None;
    }
    // [2 Q_SS  1] [w ]   [-lin_S]
    // [1'      0] [nu] = [  1   ]
    let dim = s + 1;
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r][c] = 2.0 * problem.q[[i, j]];
        }
        a[r][s] = 1.0;
        a[r][dim] = -problem.lin[i];
    }
    for c in 0..s {
        a[s][c] = 1.0;
    }
    a[s][dim] = 1.0;
    let sol = gaussian_solve(a)?;
    if sol[..s].iter().any(|&v| !(v >= 0.0)) {
        return None;
    }
    let mut w = vec![0.0; x.len()];
    for (r, &i) in support.iter().enumerate() {
        w[i] = sol[r];
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gaussian_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    let amax = a.iter().flat_map(|r| r[..n].iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if amax == 0.0 {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * amax {
            return None;
        }
        a.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Objective of `problem` at `w`, as a view-friendly helper for callers.
pub(crate) fn objective_at(problem: &QpProblem, w: ArrayView1<'_, f64>) -> f64 {
    w.dot(&problem.q.dot(&w)) + problem.lin.dot(&w) + problem.constant
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn qp(q: Array2<f64>, lin: Array1<f64>) -> QpProblem {
        QpProblem { q, lin, constant: 0.0, centered: false }
    }

    #[test]
    fn identity_gives_uniform() {
        let sol = solve_simplex_qp(&qp(Array2::eye(3), Array1::zeros(3)), 1e-9).unwrap();
        assert!(sol.converged);
        for w in &sol.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_lagrange_solution() {
        let sol = solve_simplex_qp(&qp(array![[1.0, 0.0], [0.0, 100.0]], Array1::zeros(2)), 1e-9).unwrap();
        assert!(sol.converged);
        assert!((sol.weights[0] - 100.0 / 101.0).abs() < 1e-12);
        assert!((sol.weights[1] - 1.0 / 101.0).abs() < 1e-12);
        assert!((sol.criterion_value - 100.0 / 101.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_optimum() {
        // Linear term pushes everything onto the second coordinate.
        let sol = solve_simplex_qp(&qp(Array2::eye(3) * 0.01, array![5.0, -5.0, 5.0]), 1e-9).unwrap();
        assert!(sol.converged);
        assert!((sol.weights[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_quadratic_term() {
        let sol = solve_simplex_qp(&qp(Array2::zeros((3, 3)), array![3.0, 1.0, 2.0]), 1e-9).unwrap();
        assert!((sol.weights[1] - 1.0).abs() < 1e-12);
        assert!((sol.criterion_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_coordinate() {
        let sol = solve_simplex_qp(&qp(array![[4.0]], array![1.0]), 1e-9).unwrap();
        assert_eq!(sol.weights, vec![1.0]);
        assert_eq!(sol.criterion_value, 5.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn bad_problems_are_rejected() {
        let err = solve_simplex_qp(&qp(array![[f64::NAN]], array![0.0]), 1e-9).unwrap_err();
        assert!(matches!(err, crate::Error::BadProblem(_)));
        let err = solve_simplex_qp(&qp(Array2::eye(2), array![0.0]), 1e-9).unwrap_err();
        assert!(matches!(err, crate::Error::BadProblem(_)));
        assert!(solve_simplex_qp(&qp(Array2::eye(2), Array1::zeros(2)), 0.0).is_err());
    }

    #[test]
    fn warm_start_never_worse() {
        let q = array![[2.0, 1.9, 1.8], [1.9, 2.0, 1.9], [1.8, 1.9, 2.0]];
        let p = qp(q, array![0.1, 0.2, 0.4]);
        let start = [0.9, 0.05, 0.05];
        let sol = solve_simplex_qp_from(&p, 1e-9, &start).unwrap();
        assert!(sol.criterion_value <= p.objective(&start));
    }

    #[test]
    fn power_iteration_matches_known_spectrum() {
        let q = array![[2.0, 1.0], [1.0, 2.0]];
        assert!((largest_eigenvalue(&q) - 3.0).abs() < 1e-12);
        assert_eq!(largest_eigenvalue(&Array2::zeros((2, 2))), 0.0);
    }

    #[test]
    fn singular_system_is_not_polished() {
        assert!(gaussian_solve(vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]]).is_none());
        let x = gaussian_solve(vec![vec![2.0, 1.0, 3.0], vec![1.0, 3.0, 4.0]]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn objective_helper_agrees() {
        let p = qp(array![[2.0, 0.5], [0.5, 1.0]], array![0.3, -0.2]);
        let w = [0.25, 0.75];
        assert!((objective_at(&p, ArrayView1::from(&w[..])) - p.objective(&w)).abs() < 1e-15);
    }
}
