use serde::{Deserialize, Serialize};

use super::Metric;
use crate::error::Result;
use crate::selection::Scaler;

/// Stores the standardized training points; scores are the positive
/// fraction among the k nearest, distance ties broken by training order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: Metric,
    pub scaler: Scaler,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &[u8], k: usize, metric: Metric) -> Result<Self> {
        let scaler = Scaler::fit(x)?;
        Ok(KnnModel {
            k: k.min(x.len()),
            metric,
            points: scaler.transform(x),
            scaler,
            labels: y.to_vec(),
        })
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.metric {
            Metric::Euclidean => a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum(),
        }
    }

    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let q = self.scaler.transform_row(x);
        let mut d: Vec<(f64, usize)> = self.points.iter().enumerate().map(|(i, p)| (self.distance(&q, p), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let nb = self.neighbors(x);
        nb.iter().filter(|&&i| self.labels[i] == 1).count() as f64 / nb.len() as f64
    }
}
