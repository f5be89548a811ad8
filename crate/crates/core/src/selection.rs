//! Feature standardization and LASSO feature selection.
//!
//! The LASSO objective is `(1/2n) |y - Xw - b|^2 + lambda |w|_1` with an
//! unpenalized intercept, solved by cyclic coordinate descent with
//! soft-thresholding. Updates run on the Gram matrix of the centered design,
//! so each sweep costs O(p^2) regardless of the row count.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_GRID_LEN: usize = 50;
pub const DEFAULT_GRID_RATIO: f64 = 1e-3;
pub const DEFAULT_INNER_FOLDS: usize = 3;

/// Per-column z-score statistics from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero spread; they map to 0.
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::NotEnoughSamples(format!(
                "standardization needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidDims("ragged feature matrix".into()));
        }
        check_finite(rows)?;
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds: Vec<f64> = (0..p)
            .map(|j| (rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        let constant = stds
            .iter()
            .zip(&means)
            .map(|(&s, &m)| s <= 1e-12 * m.abs().max(1.0))
            .collect();
        Ok(Scaler {
            means,
            stds,
            constant,
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.constant[j] {
                    0.0
                } else {
                    (v - self.means[j]) / self.stds[j]
                }
            })
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

pub fn standardize(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Scaler)> {
    let s = Scaler::fit(rows)?;
    Ok((s.transform(rows), s))
}

fn check_finite(rows: &[Vec<f64>]) -> Result<()> {
    for (i, r) in rows.iter().enumerate() {
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("row {i}, column {j}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LassoFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn objective(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        lasso_objective(x, y, &self.weights, self.intercept, self.lambda)
    }
}

pub fn lasso_objective(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = x.len() as f64;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(r, &t)| {
            let pred = b + r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
            (t - pred).powi(2)
        })
        .sum();
    rss / (2.0 * n) + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Centered sufficient statistics of one design, reused along a path.
struct Problem {
    p: usize,
    /// `X_c^T X_c / n`, row-major.
    gram: Vec<f64>,
    /// `X_c^T y_c / n`.
    xty: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
}

impl Problem {
    fn new(x: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidDims(format!("{} rows vs {} targets", x.len(), y.len())));
        }
        check_finite(x)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target".into()));
        }
        let n = x.len() as f64;
        let p = x[0].len();
        let x_mean: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let y_mean = y.iter().sum::<f64>() / n;
        let mut gram = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        let mut centered = vec![0.0; p];
        for (row, &t) in x.iter().zip(y) {
            for j in 0..p {
                centered[j] = row[j] - x_mean[j];
            }
            let yc = t - y_mean;
            for j in 0..p {
                let cj = centered[j];
                if cj == 0.0 {
                    continue;
                }
                xty[j] += cj * yc;
                let g = &mut gram[j * p..(j + 1) * p];
                for (k, &ck) in centered.iter().enumerate().skip(j) {
                    g[k] += cj * ck;
                }
            }
        }
        for j in 0..p {
            xty[j] /= n;
            for k in j..p {
                let v = gram[j * p + k] / n;
                gram[j * p + k] = v;
                gram[k * p + j] = v;
            }
        }
        Ok(Problem {
            p,
            gram,
            xty,
            x_mean,
            y_mean,
        })
    }

    fn lambda_max(&self) -> f64 {
        self.xty.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn solve(&self, lambda: f64, tol: f64, max_iter: usize, warm: Option<&[f64]>) -> LassoFit {
        let p = self.p;
        let mut w = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; p]);
        // grad[j] = x_j^T (y - Xw) / n on centered data
        let mut grad = self.xty.clone();
        for k in 0..p {
            if w[k] != 0.0 {
                for j in 0..p {
                    grad[j] -= self.gram[j * p + k] * w[k];
                }
            }
        }
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            iterations += 1;
            let mut max_delta = 0.0f64;
            for j in 0..p {
                let gjj = self.gram[j * p + j];
                if gjj <= 0.0 {
                    continue;
                }
                let old = w[j];
                let new = soft_threshold(grad[j] + gjj * old, lambda) / gjj;
                let delta = new - old;
                if delta != 0.0 {
                    w[j] = new;
                    let col = &self.gram[j * p..(j + 1) * p];
                    for (g, &c) in grad.iter_mut().zip(col) {
                        *g -= c * delta;
                    }
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if max_delta < tol && kkt_violation(&w, &grad, lambda, &self.gram, p) < tol {
                converged = true;
                break;
            }
        }
        let intercept = self.y_mean - self.x_mean.iter().zip(&w).map(|(m, c)| m * c).sum::<f64>();
        LassoFit {
            weights: w,
            intercept,
            lambda,
            iterations,
            converged,
        }
    }
}

fn kkt_violation(w: &[f64], grad: &[f64], lambda: f64, gram: &[f64], p: usize) -> f64 {
    (0..p)
        .filter(|&j| gram[j * p + j] > 0.0)
        .map(|j| {
            if w[j] == 0.0 {
                (grad[j].abs() - lambda).max(0.0)
            } else {
                (grad[j] - lambda * w[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Largest subgradient residual of a fit, recomputed from the data.
pub fn kkt_residual(x: &[Vec<f64>], y: &[f64], fit: &LassoFit) -> f64 {
    let n = x.len() as f64;
    let p = fit.weights.len();
    let resid: Vec<f64> = x.iter().zip(y).map(|(r, &t)| t - fit.predict(r)).collect();
    (0..p)
        .map(|j| {
            let g = x.iter().zip(&resid).map(|(r, e)| r[j] * e).sum::<f64>() / n;
            let spread = x.iter().any(|r| r[j] != x[0][j]);
            if !spread {
                0.0
            } else if fit.weights[j] == 0.0 {
                (g.abs() - fit.lambda).max(0.0)
            } else {
                (g - fit.lambda * fit.weights[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Smallest lambda at which every coefficient is zero:
/// `max_j |x_j^T (y - mean(y))| / n` on the centered design.
pub fn lambda_max(x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    Ok(Problem::new(x, y)?.lambda_max())
}

pub fn lasso_fit(x: &[Vec<f64>], y: &[f64], lambda: f64, tol: f64, max_iter: usize) -> Result<LassoFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(Problem::new(x, y)?.solve(lambda, tol, max_iter, None))
}

/// Fits along a lambda path in the given order with warm starts.
pub fn lasso_path(x: &[Vec<f64>], y: &[f64], lambdas: &[f64], tol: f64, max_iter: usize) -> Result<Vec<LassoFit>> {
    let prob = Problem::new(x, y)?;
    let mut out: Vec<LassoFit> = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let warm = out.last().map(|f| f.weights.as_slice());
        out.push(prob.solve(l, tol, max_iter, warm));
    }
    Ok(out)
}

/// `len` log-spaced values from `lambda_max` down to `lambda_max * ratio`.
pub fn lambda_grid(lambda_max: f64, len: usize, ratio: f64) -> Vec<f64> {
    if len == 1 {
        return vec![lambda_max];
    }
    let (hi, lo) = (lambda_max.ln(), (lambda_max * ratio).ln());
    (0..len)
        .map(|i| (hi + (lo - hi) * i as f64 / (len - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub lambda: f64,
    pub mean_mse: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeatures {
    pub names: Vec<String>,
    pub indices: Vec<usize>,
    pub lambda: f64,
    pub cv_curve: Vec<CvPoint>,
    /// The one-standard-error choice selected nothing and the largest lambda
    /// with a nonzero weight was used instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub inner_folds: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            inner_folds: DEFAULT_INNER_FOLDS,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

/// Chooses lambda by inner k-fold cross-validated MSE with the
/// one-standard-error rule (largest lambda within one SE of the minimum).
pub fn select_lambda(
    x: &[Vec<f64>],
    y: &[f64],
    names: &[String],
    grid: &[f64],
    params: &SelectionParams,
) -> Result<SelectedFeatures> {
    let groups: Vec<usize> = (0..x.len()).collect();
    select_lambda_grouped(x, y, &groups, names, grid, params)
}

/// Inner fold of each row. Whole groups are dealt round-robin, positive
/// groups (any row with y > 0.5) first, each class shuffled.
fn inner_folds(y: &[f64], groups: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut positive: BTreeMap<usize, bool> = BTreeMap::new();
    for (&g, &v) in groups.iter().zip(y) {
        *positive.entry(g).or_default() |= v > 0.5;
    }
    if positive.len() < k {
        return Err(Error::NotEnoughSamples(format!("{} groups for {k} inner folds", positive.len())));
    }
    let mut r = rng(seed);
    let mut pos: Vec<usize> = positive.iter().filter(|(_, &p)| p).map(|(&g, _)| g).collect();
    let mut neg: Vec<usize> = positive.iter().filter(|(_, &p)| !p).map(|(&g, _)| g).collect();
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);
    let fold_of: BTreeMap<usize, usize> = pos.into_iter().chain(neg).enumerate().map(|(i, g)| (g, i % k)).collect();
    Ok(groups.iter().map(|g| fold_of[g]).collect())
}

/// As [`select_lambda`], but rows sharing a group id (e.g. slices of one
/// patient) always fall in the same inner fold.
pub fn select_lambda_grouped(
    x: &[Vec<f64>],
    y: &[f64],
    groups: &[usize],
    names: &[String],
    grid: &[f64],
    params: &SelectionParams,
) -> Result<SelectedFeatures> {
    if groups.len() != x.len() {
        return Err(Error::InvalidDims(format!("{} group ids for {} rows", groups.len(), x.len())));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    let k = params.inner_folds;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("inner folds must be >= 2, got {k}")));
    }
    let n = x.len();
    if n < k {
        return Err(Error::NotEnoughSamples(format!("{n} rows for {k} inner folds")));
    }
    if names.len() != x[0].len() {
        return Err(Error::FeatureMismatch(format!("{} names for {} columns", names.len(), x[0].len())));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let fold_of = inner_folds(y, groups, k, params.seed)?;

    // mse[fold][lambda]
    let mut mse = vec![vec![0.0; grid.len()]; k];
    for (f, row) in mse.iter_mut().enumerate() {
        let (tx, ty): (Vec<Vec<f64>>, Vec<f64>) =
            (0..n).filter(|&i| fold_of[i] != f).map(|i| (x[i].clone(), y[i])).unzip();
        let path = lasso_path(&tx, &ty, &grid, params.tol, params.max_iter)?;
        let held: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        for (li, fit) in path.iter().enumerate() {
            row[li] = held.iter().map(|&i| (y[i] - fit.predict(&x[i])).powi(2)).sum::<f64>() / held.len() as f64;
        }
    }
    let cv_curve: Vec<CvPoint> = grid
        .iter()
        .enumerate()
        .map(|(li, &lambda)| {
            let vals: Vec<f64> = mse.iter().map(|r| r[li]).collect();
            let mean = vals.iter().sum::<f64>() / k as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            CvPoint {
                lambda,
                mean_mse: mean,
                std_error: (var / k as f64).sqrt(),
            }
        })
        .collect();
    let best = cv_curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean_mse.partial_cmp(&b.1.mean_mse).unwrap().then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap();
    let threshold = cv_curve[best].mean_mse + cv_curve[best].std_error;
    // grid is descending, so the first point under the threshold is sparsest
    let chosen = cv_curve.iter().position(|c| c.mean_mse <= threshold).unwrap_or(best);

    let full = lasso_path(x, y, &grid, params.tol, params.max_iter)?;
    let nonzero = |fit: &LassoFit| -> Vec<usize> {
        fit.weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, _)| i).collect()
    };
    let mut lambda = grid[chosen];
    let mut indices = nonzero(&full[chosen]);
    let mut fallback = false;
    if indices.is_empty() {
        let alt = full
            .iter()
            .position(|f| !nonzero(f).is_empty())
            .ok_or_else(|| Error::Empty("no lambda in the grid selects any feature".into()))?;
        lambda = grid[alt];
        indices = nonzero(&full[alt]);
        fallback = true;
    }
    Ok(SelectedFeatures {
        names: indices.iter().map(|&i| names[i].clone()).collect(),
        indices,
        lambda,
        cv_curve,
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_design(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| (0..p).map(|_| StandardNormal.sample(&mut r)).collect())
            .collect()
    }

    /// Normal-equation solve with intercept, by Gaussian elimination.
    fn ols(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
        let p = x[0].len() + 1;
        let mut a = vec![vec![0.0; p + 1]; p];
        for (row, &t) in x.iter().zip(y) {
            let mut z = vec![1.0];
            z.extend_from_slice(row);
            for i in 0..p {
                for j in 0..p {
                    a[i][j] += z[i] * z[j];
                }
                a[i][p] += z[i] * t;
            }
        }
        for c in 0..p {
            let piv = (c..p).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=p {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        let sol: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
        (sol[1..].to_vec(), sol[0])
    }

    #[test]
    fn zscore_column() {
        let rows = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let (z, s) = standardize(&rows).unwrap();
        let col: Vec<f64> = z.iter().map(|r| r[0]).collect();
        for (a, b) in col.iter().zip([-1.2247, 0.0, 1.2247]) {
            assert!((a - b).abs() < 1e-4);
        }
        assert!(z.iter().all(|r| r[1] == 0.0));
        assert_eq!(s.constant, vec![false, true]);
        assert!(standardize(&rows[..1]).is_err());
    }

    #[test]
    fn scaler_uses_training_statistics() {
        let train = random_design(30, 3, 1);
        let held = random_design(5, 3, 2);
        let s = Scaler::fit(&train).unwrap();
        let z = s.transform(&held);
        for (row, zr) in held.iter().zip(&z) {
            for j in 0..3 {
                let m = train.iter().map(|r| r[j]).sum::<f64>() / 30.0;
                let sd = (train.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / 30.0).sqrt();
                assert!((zr[j] - (row[j] - m) / sd).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda_zero_is_least_squares() {
        let x = random_design(10, 4, 3);
        let mut r = rng(4);
        let y: Vec<f64> = x
            .iter()
            .map(|row| 0.3 + row[0] - 2.0 * row[2] + 0.1 * r.random::<f64>())
            .collect();
        let fit = lasso_fit(&x, &y, 0.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let (w, b) = ols(&x, &y);
        assert!(fit.converged);
        for (a, c) in fit.weights.iter().zip(&w) {
            assert!((a - c).abs() < 1e-6, "{a} vs {c}");
        }
        assert!((fit.intercept - b).abs() < 1e-6);
    }

    #[test]
    fn kill_threshold_gives_zero() {
        let x = random_design(40, 6, 5);
        let y: Vec<f64> = x.iter().map(|r| (r[1] > 0.0) as u8 as f64).collect();
        let lm = lambda_max(&x, &y).unwrap();
        let fit = lasso_fit(&x, &y, lm, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.weights.iter().all(|&w| w == 0.0));
        let fit = lasso_fit(&x, &y, lm * 0.9, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.weights.iter().any(|&w| w != 0.0));
    }

    #[test]
    fn local_grid_optimality() {
        let x = random_design(10, 4, 6);
        let y: Vec<f64> = x.iter().map(|r| (r[0] + r[3] > 0.0) as u8 as f64).collect();
        let fit = lasso_fit(&x, &y, 0.05, 1e-10, DEFAULT_MAX_ITER).unwrap();
        let best = fit.objective(&x, &y);
        let w0 = fit.weights.clone();
        // every neighbor on a 0.01 lattice around the solution is no better
        for code in 0..3usize.pow(5) {
            let mut c = code;
            let mut w = w0.clone();
            let mut b = fit.intercept;
            for wi in w.iter_mut() {
                *wi += (c % 3) as f64 * 0.01 - 0.01;
                c /= 3;
            }
            b += (c % 3) as f64 * 0.01 - 0.01;
            assert!(lasso_objective(&x, &y, &w, b, 0.05) >= best - 1e-12);
        }
    }

    #[test]
    fn converged_fit_satisfies_kkt() {
        let x = random_design(60, 8, 7);
        let y: Vec<f64> = x.iter().map(|r| r[2] - 0.5 * r[5]).collect();
        for lambda in [0.01, 0.1, 0.3] {
            let fit = lasso_fit(&x, &y, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            assert!(fit.converged);
            assert!(kkt_residual(&x, &y, &fit) < 1e-6, "lambda {lambda}");
        }
    }

    #[test]
    fn non_finite_rejected() {
        let x = vec![vec![1.0, f64::NAN], vec![0.0, 1.0]];
        assert!(matches!(lasso_fit(&x, &[0.0, 1.0], 0.1, 1e-7, 10), Err(Error::NonFinite(_))));
        assert!(lasso_fit(&[vec![1.0], vec![2.0]], &[0.0, 1.0], -1.0, 1e-7, 10).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = lambda_grid(2.0, 50, 1e-3);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert!((g[49] - 2e-3).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn single_lambda_grid_is_chosen() {
        let x = random_design(30, 5, 8);
        let y: Vec<f64> = x.iter().map(|r| (r[0] > 0.0) as u8 as f64).collect();
        let s = select_lambda(&x, &y, &names(5), &[0.01], &SelectionParams::default()).unwrap();
        assert_eq!(s.lambda, 0.01);
        assert!(!s.fallback);
    }

    #[test]
    fn fallback_when_one_se_rule_selects_nothing() {
        // pure noise target: the sparsest model is within one SE
        let x = random_design(40, 4, 9);
        let mut r = rng(10);
        let y: Vec<f64> = (0..40).map(|_| r.random_range(0..2) as f64).collect();
        let lm = lambda_max(&x, &y).unwrap();
        let grid = lambda_grid(lm, 20, 1e-2);
        let s = select_lambda(&x, &y, &names(4), &grid, &SelectionParams::default()).unwrap();
        assert!(!s.names.is_empty());
        if s.fallback {
            assert!(s.lambda < lm);
        }
    }
}
