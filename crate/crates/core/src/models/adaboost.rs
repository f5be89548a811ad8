//! Binary SAMME boosting of shallow weighted trees.

use serde::{Deserialize, Serialize};

use super::tree::DecisionTree;

const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaboostModel {
    pub stumps: Vec<DecisionTree>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each kept stump, all below 0.5.
    pub errors: Vec<f64>,
}

impl AdaboostModel {
    /// Stops early when a stump's weighted error reaches 0.5 (that stump is
    /// discarded) or the ensemble fits the weighted data exactly.
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_rounds: usize, depth: usize) -> Self {
        let n = x.len();
        let p = x[0].len();
        let mut w = vec![1.0 / n as f64; n];
        let mut model = AdaboostModel {
            stumps: Vec::new(),
            alphas: Vec::new(),
            errors: Vec::new(),
        };
        for _ in 0..n_rounds {
            let stump = DecisionTree::fit(x, y, &w, depth, p, None);
            let wrong: Vec<bool> = x.iter().zip(y).map(|(r, &l)| stump.predict(r) != l).collect();
            let total: f64 = w.iter().sum();
            let err = wrong.iter().zip(&w).filter(|(m, _)| **m).map(|(_, v)| v).sum::<f64>() / total;
            if err >= 0.5 {
                break;
            }
            let e = err.max(MIN_ERROR);
            let alpha = ((1.0 - e) / e).ln();
            model.stumps.push(stump);
            model.alphas.push(alpha);
            model.errors.push(err);
            if err <= MIN_ERROR {
                break;
            }
            for (wi, &m) in w.iter_mut().zip(&wrong) {
                if m {
                    *wi *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        model
    }

    /// Weighted vote for the positive class over the total weight; 0.5 for
    /// an empty ensemble.
    pub fn score(&self, x: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        if self.stumps.is_empty() || total <= 0.0 {
            return 0.5;
        }
        let pos: f64 = self
            .stumps
            .iter()
            .zip(&self.alphas)
            .filter(|(s, _)| s.predict(x) == 1)
            .map(|(_, a)| a)
            .sum();
        pos / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kept_stumps_beat_chance() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i % 5) as f64]).collect();
        let y: Vec<u8> = (0..40).map(|i| ((i % 7) + (i % 5) > 5) as u8).collect();
        let m = AdaboostModel::fit(&x, &y, 50, 1);
        assert!(!m.stumps.is_empty());
        assert!(m.errors.iter().all(|&e| e < 0.5));
        assert!(m.alphas.iter().all(|&a| a > 0.0));
        let acc = x.iter().zip(&y).filter(|(r, &l)| (m.score(r) >= 0.5) as u8 == l).count();
        assert!(acc >= 36, "{acc}");
    }

    #[test]
    fn perfect_stump_stops_boosting() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let m = AdaboostModel::fit(&x, &[0, 0, 0, 1, 1, 1], 50, 1);
        assert_eq!(m.stumps.len(), 1);
        assert_eq!(m.score(&[5.0]), 1.0);
        assert_eq!(m.score(&[0.0]), 0.0);
    }
}
