//! Linear classifiers: L2-regularized logistic regression and a Pegasos
//! linear SVM with a two-parameter logistic link on its margins.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{dot, sigmoid};
use crate::seed::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    /// Full-batch gradient descent on mean cross-entropy plus
    /// `(l2 / 2) |w|^2`; the bias is not penalized.
    pub fn fit(x: &[Vec<f64>], y: &[u8], l2: f64, epochs: usize, learning_rate: f64) -> Self {
        let n = x.len() as f64;
        let p = x[0].len();
        let mut w = vec![0.0; p];
        let mut b = 0.0;
        let mut grad = vec![0.0; p];
        for _ in 0..epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (row, &label) in x.iter().zip(y) {
                let err = sigmoid(dot(&w, row) + b) - label as f64;
                for (g, v) in grad.iter_mut().zip(row) {
                    *g += err * v;
                }
                gb += err;
            }
            for (wj, g) in w.iter_mut().zip(&grad) {
                *wj -= learning_rate * (g / n + l2 * *wj);
            }
            b -= learning_rate * gb / n;
        }
        LogisticModel { weights: w, bias: b }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

/// `p = sigmoid(a * margin + b)` with `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattLink {
    pub a: f64,
    pub b: f64,
}

const MIN_SLOPE: f64 = 1e-6;

impl PlattLink {
    /// Newton's method on the smoothed-target negative log likelihood,
    /// with step halving.
    pub fn fit(margins: &[f64], y: &[u8]) -> Self {
        let np = y.iter().filter(|&&l| l == 1).count() as f64;
        let nn = y.len() as f64 - np;
        let hi = (np + 1.0) / (np + 2.0);
        let lo = 1.0 / (nn + 2.0);
        let t: Vec<f64> = y.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
        let nll = |a: f64, b: f64| -> f64 {
            margins
                .iter()
                .zip(&t)
                .map(|(&f, &ti)| {
                    let z = a * f + b;
                    // log(1 + e^z) - t z, computed stably
                    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                    softplus - ti * z
                })
                .sum()
        };
        let (mut a, mut b) = (1.0, ((np + 1.0) / (nn + 1.0)).ln());
        let mut f = nll(a, b);
        for _ in 0..100 {
            let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (&m, &ti) in margins.iter().zip(&t) {
                let p = sigmoid(a * m + b);
                let d = p - ti;
                let w = p * (1.0 - p);
                ga += d * m;
                gb += d;
                haa += w * m * m;
                hab += w * m;
                hbb += w;
            }
            if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
                break;
            }
            haa += 1e-12;
            hbb += 1e-12;
            let det = haa * hbb - hab * hab;
            let (da, db) = if det.abs() > 1e-300 {
                ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det)
            } else {
                (ga, gb)
            };
            let mut step = 1.0;
            let mut improved = false;
            while step > 1e-10 {
                let (na, nb) = (a - step * da, b - step * db);
                let nf = nll(na, nb);
                if nf < f {
                    a = na;
                    b = nb;
                    f = nf;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        PlattLink { a: a.max(MIN_SLOPE), b }
    }

    pub fn apply(&self, margin: f64) -> f64 {
        sigmoid(self.a * margin + self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub link: PlattLink,
}

impl SvmModel {
    /// Pegasos with `lambda = 1 / (C n)`; the bias is an extra constant
    /// feature and is regularized with the weights.
    pub fn fit(x: &[Vec<f64>], y: &[u8], c: f64, epochs: usize, seed: u64) -> Self {
        let n = x.len();
        let p = x[0].len();
        let lambda = 1.0 / (c * n as f64);
        let mut w = vec![0.0; p + 1];
        let mut order: Vec<usize> = (0..n).collect();
        let mut r = rng(seed);
        let mut t = 0u64;
        for _ in 0..epochs {
            order.shuffle(&mut r);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let yi = if y[i] == 1 { 1.0 } else { -1.0 };
                let margin = yi * (dot(&w[..p], &x[i]) + w[p]);
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (wj, v) in w.iter_mut().zip(&x[i]) {
                        *wj += eta * yi * v;
                    }
                    w[p] += eta * yi;
                }
            }
        }
        let bias = w.pop().unwrap();
        let margins: Vec<f64> = x.iter().map(|r| dot(&w, r) + bias).collect();
        let link = PlattLink::fit(&margins, y);
        SvmModel { weights: w, bias, link }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.link.apply(self.decision(x))
    }
}
