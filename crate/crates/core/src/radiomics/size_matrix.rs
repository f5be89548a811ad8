//! Shared machinery for the (gray level, size) count matrices behind the
//! run-length, size-zone and dependence families.

use std::collections::BTreeMap;

use crate::radiomics::log2e;

/// Sparse count matrix keyed by (gray level, size). Both start at 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SizeCounts {
    pub counts: BTreeMap<(u32, u32), u64>,
}

impl SizeCounts {
    pub fn add(&mut self, level: u32, size: u32) {
        *self.counts.entry((level, size)).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn get(&self, level: u32, size: u32) -> u64 {
        self.counts.get(&(level, size)).copied().unwrap_or(0)
    }
}

/// Dense accumulator used while building; one growable row per level.
pub(crate) struct DenseCounts {
    rows: Vec<Vec<u64>>,
}

impl DenseCounts {
    pub fn new(ng: u32) -> Self {
        DenseCounts {
            rows: vec![Vec::new(); ng as usize],
        }
    }

    #[inline]
    pub fn add(&mut self, level: u32, size: u32) {
        let row = &mut self.rows[level as usize - 1];
        let s = size as usize;
        if row.len() < s {
            row.resize(s, 0);
        }
        row[s - 1] += 1;
    }

    pub fn into_sparse(self) -> SizeCounts {
        let mut counts = BTreeMap::new();
        for (i, row) in self.rows.into_iter().enumerate() {
            for (j, c) in row.into_iter().enumerate() {
                if c > 0 {
                    counts.insert((i as u32 + 1, j as u32 + 1), c);
                }
            }
        }
        SizeCounts { counts }
    }
}

/// Aggregates every feature the three families draw from. `n` is the
/// number of runs/zones/voxels counted, `np` the voxel count.
pub(crate) struct Emphasis {
    pub short: f64,
    pub long: f64,
    pub gln: f64,
    pub glnn: f64,
    pub sn: f64,
    pub snn: f64,
    pub percentage: f64,
    pub gl_variance: f64,
    pub size_variance: f64,
    pub entropy: f64,
    pub low_gl: f64,
    pub high_gl: f64,
    pub short_low: f64,
    pub short_high: f64,
    pub long_low: f64,
    pub long_high: f64,
}

impl Emphasis {
    pub fn compute(m: &SizeCounts, np: usize) -> Self {
        let n = m.total() as f64;
        let mut rows: BTreeMap<u32, f64> = BTreeMap::new();
        let mut cols: BTreeMap<u32, f64> = BTreeMap::new();
        let (mut short, mut long, mut low, mut high) = (0.0, 0.0, 0.0, 0.0);
        let (mut sl, mut sh, mut ll, mut lh) = (0.0, 0.0, 0.0, 0.0);
        let (mut mu_i, mut mu_j, mut entropy) = (0.0, 0.0, 0.0);
        for (&(i, j), &c) in &m.counts {
            let c = c as f64;
            let (i2, j2) = ((i as f64).powi(2), (j as f64).powi(2));
            *rows.entry(i).or_default() += c;
            *cols.entry(j).or_default() += c;
            short += c / j2;
            long += c * j2;
            low += c / i2;
            high += c * i2;
            sl += c / (i2 * j2);
            sh += c * i2 / j2;
            ll += c * j2 / i2;
            lh += c * i2 * j2;
            let p = c / n;
            mu_i += p * i as f64;
            mu_j += p * j as f64;
            entropy -= p * log2e(p);
        }
        let (mut gl_var, mut size_var) = (0.0, 0.0);
        for (&(i, j), &c) in &m.counts {
            let p = c as f64 / n;
            gl_var += p * (i as f64 - mu_i).powi(2);
            size_var += p * (j as f64 - mu_j).powi(2);
        }
        let gln = rows.values().map(|r| r * r).sum::<f64>() / n;
        let sn = cols.values().map(|c| c * c).sum::<f64>() / n;
        Emphasis {
            short: short / n,
            long: long / n,
            gln,
            glnn: gln / n,
            sn,
            snn: sn / n,
            percentage: n / np as f64,
            gl_variance: gl_var,
            size_variance: size_var,
            entropy,
            low_gl: low / n,
            high_gl: high / n,
            short_low: sl / n,
            short_high: sh / n,
            long_low: ll / n,
            long_high: lh / n,
        }
    }
}
