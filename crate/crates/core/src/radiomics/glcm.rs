//! Gray-level co-occurrence matrix features.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::radiomics::directions;
use crate::radiomics::{log2e, DiscreteStack, ExtractionParams, Family, FamilyValues};

pub const NAMES: &[&str] = &[
    "Autocorrelation",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "Id",
    "Idm",
    "Idmn",
    "Idn",
    "Imc1",
    "Imc2",
    "InverseVariance",
    "JointAverage",
    "JointEnergy",
    "JointEntropy",
    "MCC",
    "MaximumProbability",
    "SumAverage",
    "SumEntropy",
    "SumSquares",
];

/// Symmetric co-occurrence counts, `ng x ng`, level `i` at row `i - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlcmMatrix {
    pub ng: usize,
    pub counts: Vec<u64>,
}

impl GlcmMatrix {
    pub fn zeros(ng: usize) -> Self {
        GlcmMatrix {
            ng,
            counts: vec![0; ng * ng],
        }
    }

    #[inline]
    pub fn get(&self, i: u32, j: u32) -> u64 {
        self.counts[(i as usize - 1) * self.ng + (j as usize - 1)]
    }

    #[inline]
    fn bump(&mut self, i: u32, j: u32) {
        self.counts[(i as usize - 1) * self.ng + (j as usize - 1)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

/// Counts each pair `(v, v + offset)` once in each order.
pub fn build_matrix(ds: &DiscreteStack, offset: [i64; 3]) -> GlcmMatrix {
    let mut m = GlcmMatrix::zeros(ds.ng as usize);
    let d = ds.dims;
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let a = ds.at(z, y, x);
                let n = ds.at_signed(z as i64 + offset[0], y as i64 + offset[1], x as i64 + offset[2]);
                if let Some(b) = n {
                    m.bump(a, b);
                    m.bump(b, a);
                }
            }
        }
    }
    m
}

/// One matrix per active offset at the configured distance.
pub fn build_matrices(ds: &DiscreteStack, distance: usize) -> Vec<([i64; 3], GlcmMatrix)> {
    directions::active(ds.dims, distance)
        .into_iter()
        .map(|o| (o, build_matrix(ds, o)))
        .collect()
}

/// Features of one matrix, in `NAMES` order.
///
/// Degenerate rules: Correlation and MCC are 1 when only one gray level
/// occurs (zero marginal variance); Imc1 is 0 when both marginal entropies
/// vanish; Imc2 is 0 when `HXY2 <= HXY`.
pub fn matrix_features(m: &GlcmMatrix) -> Vec<f64> {
    let ng = m.ng;
    let p = m.normalized();
    let at = |i: usize, j: usize| p[i * ng + j];
    let lvl = |i: usize| (i + 1) as f64;

    let mut px = vec![0.0; ng];
    let mut py = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            px[i] += at(i, j);
            py[j] += at(i, j);
        }
    }
    let ux: f64 = (0..ng).map(|i| lvl(i) * px[i]).sum();
    let uy: f64 = (0..ng).map(|j| lvl(j) * py[j]).sum();
    let sx = (0..ng).map(|i| (lvl(i) - ux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..ng).map(|j| (lvl(j) - uy).powi(2) * py[j]).sum::<f64>().sqrt();

    // k = i + j in 2..=2ng maps to index k - 2; k = |i - j| in 0..ng
    let mut p_sum = vec![0.0; 2 * ng - 1];
    let mut p_diff = vec![0.0; ng];
    let ngf = ng as f64;
    let (mut autocorr, mut prom, mut shade, mut tend, mut contrast) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut energy, mut hxy, mut hxy1, mut hxy2) = (0.0, 0.0, 0.0, 0.0);
    let (mut idm, mut idmn, mut id, mut idn, mut sum_sq, mut max_p) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0f64);
    for i in 0..ng {
        for j in 0..ng {
            let pij = at(i, j);
            let (li, lj) = (lvl(i), lvl(j));
            let pxy = px[i] * py[j];
            hxy2 -= pxy * log2e(pxy);
            if pij == 0.0 {
                continue;
            }
            p_sum[i + j] += pij;
            let diff = (li - lj).abs();
            p_diff[i.abs_diff(j)] += pij;
            autocorr += li * lj * pij;
            let c = li + lj - ux - uy;
            tend += c * c * pij;
            shade += c * c * c * pij;
            prom += c * c * c * c * pij;
            contrast += diff * diff * pij;
            energy += pij * pij;
            hxy -= pij * log2e(pij);
            hxy1 -= pij * log2e(pxy);
            idm += pij / (1.0 + diff * diff);
            idmn += pij / (1.0 + diff * diff / (ngf * ngf));
            id += pij / (1.0 + diff);
            idn += pij / (1.0 + diff / ngf);
            sum_sq += (li - ux).powi(2) * pij;
            max_p = max_p.max(pij);
        }
    }

    let correlation = if sx * sy > 0.0 {
        (autocorr - ux * uy) / (sx * sy)
    } else {
        1.0
    };
    let diff_avg: f64 = p_diff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let diff_ent: f64 = -p_diff.iter().map(|&v| v * log2e(v)).sum::<f64>();
    let diff_var: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - diff_avg).powi(2) * v)
        .sum();
    let inv_var: f64 = p_diff
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &v)| v / (k * k) as f64)
        .sum();
    let sum_avg: f64 = p_sum.iter().enumerate().map(|(k, &v)| (k + 2) as f64 * v).sum();
    let sum_ent: f64 = -p_sum.iter().map(|&v| v * log2e(v)).sum::<f64>();

    let hx: f64 = -px.iter().map(|&v| v * log2e(v)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&v| v * log2e(v)).sum::<f64>();
    let div = hx.max(hy);
    let imc1 = if div.abs() > 1e-10 { (hxy - hxy1) / div } else { 0.0 };
    let imc2 = if hxy2 > hxy {
        (1.0 - (-2.0 * (hxy2 - hxy)).exp()).sqrt()
    } else {
        0.0
    };

    FamilyValues::from_pairs(
        Family::Glcm,
        &[
            ("Autocorrelation", autocorr),
            ("ClusterProminence", prom),
            ("ClusterShade", shade),
            ("ClusterTendency", tend),
            ("Contrast", contrast),
            ("Correlation", correlation),
            ("DifferenceAverage", diff_avg),
            ("DifferenceEntropy", diff_ent),
            ("DifferenceVariance", diff_var),
            ("Id", id),
            ("Idm", idm),
            ("Idmn", idmn),
            ("Idn", idn),
            ("Imc1", imc1),
            ("Imc2", imc2),
            ("InverseVariance", inv_var),
            ("JointAverage", ux),
            ("JointEnergy", energy),
            ("JointEntropy", hxy),
            ("MCC", mcc(&p, &px, ng)),
            ("MaximumProbability", max_p),
            ("SumAverage", sum_avg),
            ("SumEntropy", sum_ent),
            ("SumSquares", sum_sq),
        ],
    )
    .values
}

/// Maximal correlation coefficient: square root of the second-largest
/// eigenvalue of `Q = D^-1 P D^-1 P^T`. For a symmetric matrix `Q` is
/// similar to `A^2` with `A = D^-1/2 P D^-1/2`, so the eigenvalues follow
/// from a symmetric decomposition of `A` over the occupied levels.
fn mcc(p: &[f64], px: &[f64], ng: usize) -> f64 {
    let occupied: Vec<usize> = (0..ng).filter(|&i| px[i] > 0.0).collect();
    let k = occupied.len();
    if k < 2 {
        return 1.0;
    }
    let a = DMatrix::from_fn(k, k, |r, c| {
        let (i, j) = (occupied[r], occupied[c]);
        p[i * ng + j] / (px[i] * px[j]).sqrt()
    });
    let mut eig: Vec<f64> = SymmetricEigen::new(a)
        .eigenvalues
        .iter()
        .map(|l| l * l)
        .collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig[1].max(0.0).sqrt()
}

pub fn glcm_features(ds: &DiscreteStack, p: &ExtractionParams) -> FamilyValues {
    let mats = build_matrices(ds, p.distance);
    let per_dir: Vec<Vec<f64>> = mats
        .iter()
        .filter(|(_, m)| m.total() > 0)
        .map(|(_, m)| matrix_features(m))
        .collect();
    let values = if per_dir.is_empty() {
        // no voxel pairs at all: treat as a single self co-occurrence
        let mut m = GlcmMatrix::zeros(ds.ng as usize);
        m.bump(ds.levels[0], ds.levels[0]);
        matrix_features(&m)
    } else {
        mean_columns(&per_dir)
    };
    FamilyValues {
        family: Family::Glcm,
        values,
    }
}

pub(crate) fn mean_columns(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, Spacing};

    fn stack2d(rows: &[&[u32]]) -> DiscreteStack {
        let ny = rows.len();
        let nx = rows[0].len();
        let levels = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DiscreteStack::new(Dims::new(1, ny, nx), Spacing::isotropic(1.0), levels)
    }

    fn get(values: &[f64], name: &str) -> f64 {
        values[NAMES.iter().position(|n| *n == name).unwrap()]
    }

    #[test]
    fn horizontal_contrast_hand_check() {
        // gray levels 0,1,2 shifted to 1,2,3; differences are unchanged
        let ds = stack2d(&[&[1, 1, 2], &[1, 2, 2], &[2, 2, 3]]);
        let m = build_matrix(&ds, [0, 0, 1]);
        assert_eq!(m.total(), 12);
        let weighted: u64 = (1..=3)
            .flat_map(|i| (1..=3).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * (i as i64 - j as i64).pow(2) as u64)
            .sum();
        assert_eq!(weighted, 6);
        let f = matrix_features(&m);
        assert!((get(&f, "Contrast") - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_stack() {
        let ds = DiscreteStack::new(Dims::new(3, 3, 3), Spacing::isotropic(1.0), vec![1; 27]);
        let f = glcm_features(&ds, &ExtractionParams::default()).values;
        assert_eq!(get(&f, "Contrast"), 0.0);
        assert_eq!(get(&f, "MaximumProbability"), 1.0);
        assert!(get(&f, "JointEntropy").abs() < 1e-9);
        assert_eq!(get(&f, "Correlation"), 1.0);
        assert_eq!(get(&f, "MCC"), 1.0);
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn normalized_sums_to_one() {
        let ds = stack2d(&[&[1, 2, 3, 1], &[2, 2, 1, 3], &[3, 1, 1, 2]]);
        for (_, m) in build_matrices(&ds, 1) {
            let s: f64 = m.normalized().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            for i in 1..=3 {
                for j in 1..=3 {
                    assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
        }
    }

    #[test]
    fn mcc_two_independent_blocks_is_one() {
        // levels 1 and 3 never co-occur with each other: two blocks give a
        // second eigenvalue of 1
        let ds = stack2d(&[&[1, 1, 1, 1], &[3, 3, 3, 3]]);
        let m = build_matrix(&ds, [0, 0, 1]);
        assert!((get(&matrix_features(&m), "MCC") - 1.0).abs() < 1e-9);
    }
}
