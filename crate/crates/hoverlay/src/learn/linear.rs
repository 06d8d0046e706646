//! Linear least squares and its L1-penalized variant, from scratch.

use serde::{Deserialize, Serialize};

/// A fitted linear predictor for one output axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisLinear {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl AxisLinear {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Solves `a * x = b` in place by Gaussian elimination with partial
/// pivoting. `a` is row-major n x n. Panics on dimension mismatch; a
/// numerically singular pivot is driven through anyway, which the callers
/// preclude by ridging the diagonal.
pub fn solve_linear_system(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        let (pivot_rows, rest) = a.split_at_mut(col + 1);
        let pivot_row = &pivot_rows[col];
        let (b_done, b_rest) = b.split_at_mut(col + 1);
        let b_col = b_done[col];
        for (row_vec, b_row) in rest.iter_mut().zip(b_rest.iter_mut()) {
            let factor = row_vec[col] / p;
            if factor == 0.0 {
                continue;
            }
            for (dst, &src) in row_vec[col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= factor * src;
            }
            *b_row -= factor * b_col;
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Ordinary least squares with intercept via the normal equations. The
/// Gram matrix diagonal is ridged by 1e-8 so collinear feature sets (the
/// padded-capture case produces exactly duplicated columns) stay solvable.
pub fn ols_fit(x: &[Vec<f64>], y: &[f64]) -> AxisLinear {
    let n = x.len();
    let d = x[0].len();
    // Augmented design: implicit leading 1 for the intercept.
    let dim = d + 1;
    let mut gram = vec![vec![0.0f64; dim]; dim];
    let mut rhs = vec![0.0f64; dim];
    for (row, &target) in x.iter().zip(y) {
        for i in 0..dim {
            let xi = if i == 0 { 1.0 } else { row[i - 1] };
            rhs[i] += xi * target;
            for j in i..dim {
                let xj = if j == 0 { 1.0 } else { row[j - 1] };
                gram[i][j] += xi * xj;
            }
        }
    }
    for i in 0..dim {
        let (head, tail) = gram.split_at_mut(i);
        let row = &mut tail[0];
        for (j, prior) in head.iter().enumerate() {
            row[j] = prior[i];
        }
        row[i] += 1e-8;
    }
    let _ = n;
    let sol = solve_linear_system(gram, rhs);
    AxisLinear {
        bias: sol[0],
        weights: sol[1..].to_vec(),
    }
}

/// Lasso fit plus its convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub model: AxisLinear,
    /// Objective value after each full coordinate sweep; non-increasing.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

const LASSO_TOL: f64 = 1e-6;
const LASSO_MAX_SWEEPS: usize = 10_000;

/// L1-penalized least squares by cyclic coordinate descent.
///
/// Minimizes `(1/2n) * sum((y - b - Xw)^2) + lambda * sum(|w|)` on
/// standardized features, then maps the solution back to raw units.
/// Zero-variance columns keep weight zero. Convergence is declared when
/// no coefficient moves more than 1e-6 in a sweep; `lambda = 0` recovers
/// the least squares solution.
pub fn lasso_fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> LassoFit {
    let n = x.len();
    let d = x[0].len();
    let nf = n as f64;

    let mut mean = vec![0.0f64; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let mut sd = vec![0.0f64; d];
    for row in x {
        for j in 0..d {
            sd[j] += (row[j] - mean[j]).powi(2);
        }
    }
    for s in &mut sd {
        *s = (*s / nf).sqrt();
        if *s == 0.0 {
            *s = 1.0; // centered column is all zero; weight stays zero
        }
    }
    let y_mean = y.iter().sum::<f64>() / nf;

    // Standardized design, centered target.
    let xs: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, v)| (v - mean[j]) / sd[j])
                .collect()
        })
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    // Column scale (1/n) * sum(x_j^2); 1 for standardized columns, 0 for
    // constant ones, whose coordinate update is then skipped.
    let col_scale: Vec<f64> = (0..d)
        .map(|j| xs.iter().map(|r| r[j] * r[j]).sum::<f64>() / nf)
        .collect();

    let mut w = vec![0.0f64; d];
    let mut resid = yc.clone(); // residual = yc - xs * w
    let objective = |resid: &[f64], w: &[f64]| {
        resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * nf)
            + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    };

    let mut trace = vec![objective(&resid, &w)];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_delta = 0.0f64;
        for j in 0..d {
            if col_scale[j] == 0.0 {
                continue;
            }
            // rho = (1/n) x_j . (residual + x_j * w_j)
            let mut rho = 0.0;
            for i in 0..n {
                rho += xs[i][j] * (resid[i] + xs[i][j] * w[j]);
            }
            rho /= nf;
            let new_w = soft_threshold(rho, lambda) / col_scale[j];
            let delta = new_w - w[j];
            if delta != 0.0 {
                for i in 0..n {
                    resid[i] -= delta * xs[i][j];
                }
                w[j] = new_w;
                max_delta = max_delta.max(delta.abs());
            }
        }
        trace.push(objective(&resid, &w));
        if max_delta < LASSO_TOL {
            converged = true;
            break;
        }
    }

    // Back to raw units.
    let weights: Vec<f64> = w.iter().zip(&sd).map(|(wj, s)| wj / s).collect();
    let bias = y_mean - weights.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>();
    LassoFit {
        model: AxisLinear { weights, bias },
        objective_trace: trace,
        sweeps,
        converged,
    }
}

fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let true_w: Vec<f64> = (0..d).map(|j| (j as f64) - 2.0).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let target = 1.5
                + row.iter().zip(&true_w).map(|(a, b)| a * b).sum::<f64>()
                + rng.gen_range(-0.01..0.01);
            x.push(row);
            y.push(target);
        }
        (x, y)
    }

    #[test]
    fn solver_inverts_a_known_system() {
        // 3x + y = 9, x + 2y = 8 -> x = 2, y = 3.
        let a = vec![vec![3.0, 1.0], vec![1.0, 2.0]];
        let b = vec![9.0, 8.0];
        let x = solve_linear_system(a, b);
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_planted_coefficients() {
        let (x, y) = synthetic(300, 5, 7);
        let fit = ols_fit(&x, &y);
        assert!((fit.bias - 1.5).abs() < 0.01);
        for (j, w) in fit.weights.iter().enumerate() {
            assert!((w - ((j as f64) - 2.0)).abs() < 0.01, "w[{j}] = {w}");
        }
    }

    #[test]
    fn ols_survives_duplicated_columns() {
        // Padded captures duplicate feature columns exactly; the ridge
        // keeps the normal equations solvable and predictions finite.
        let (mut x, y) = synthetic(100, 3, 8);
        for row in &mut x {
            let c = row[2];
            row.push(c);
        }
        let fit = ols_fit(&x, &y);
        let pred = fit.predict(&x[0]);
        assert!(pred.is_finite());
        assert!((pred - y[0]).abs() < 0.1);
    }

    #[test]
    fn lasso_at_zero_matches_ols() {
        let (x, y) = synthetic(200, 9, 9);
        let ols = ols_fit(&x, &y);
        let lasso = lasso_fit(&x, &y, 0.0);
        assert!(lasso.converged);
        let max_gap = ols
            .weights
            .iter()
            .zip(&lasso.model.weights)
            .map(|(a, b)| (a - b).abs())
            .fold((ols.bias - lasso.model.bias).abs(), f64::max);
        assert!(max_gap <= 1e-6, "max coefficient gap {max_gap}");
    }

    #[test]
    fn huge_penalty_zeroes_every_weight() {
        let (x, y) = synthetic(200, 9, 10);
        let lasso = lasso_fit(&x, &y, 1e6);
        assert!(lasso.converged);
        assert!(lasso.model.weights.iter().all(|&w| w == 0.0));
        let y_mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((lasso.model.bias - y_mean).abs() < 1e-9);
    }

    #[test]
    fn objective_trace_never_increases() {
        let (x, y) = synthetic(150, 6, 11);
        for lambda in [0.0, 0.05, 0.5, 5.0] {
            let fit = lasso_fit(&x, &y, lambda);
            for pair in fit.objective_trace.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-12,
                    "objective rose under lambda {lambda}: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn moderate_penalty_sparsifies() {
        let (x, y) = synthetic(200, 9, 12);
        // Planted weight for feature 2 is 0; a moderate penalty should
        // pin it at exactly zero while keeping the strong features.
        let fit = lasso_fit(&x, &y, 0.1);
        assert_eq!(fit.model.weights[2], 0.0);
        assert!(fit.model.weights[0].abs() > 1.0);
    }

    #[test]
    fn constant_columns_keep_zero_weight() {
        let (mut x, y) = synthetic(100, 3, 13);
        for row in &mut x {
            row.push(7.0);
        }
        let fit = lasso_fit(&x, &y, 0.01);
        assert_eq!(fit.model.weights[3], 0.0);
        assert!(fit.model.predict(&x[0]).is_finite());
    }
}
