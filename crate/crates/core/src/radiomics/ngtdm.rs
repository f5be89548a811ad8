//! Neighbourhood gray-tone difference matrix features.

use crate::radiomics::directions;
use crate::radiomics::{DiscreteStack, ExtractionParams, Family, FamilyValues};

pub const NAMES: &[&str] = &["Busyness", "Coarseness", "Complexity", "Contrast", "Strength"];

/// Coarseness when the summed differences vanish.
pub const COARSENESS_CAP: f64 = 1e6;

/// Per-level voxel counts `n` and summed absolute differences `s`, index
/// `level - 1`. Voxels without any in-bounds neighbor are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct NgtdmTable {
    pub n: Vec<u64>,
    pub s: Vec<f64>,
}

pub fn build_table(ds: &DiscreteStack, distance: usize) -> NgtdmTable {
    let d = ds.dims;
    let ng = ds.ng as usize;
    let mut t = NgtdmTable {
        n: vec![0; ng],
        s: vec![0.0; ng],
    };
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let level = ds.at(z, y, x);
                let (mut sum, mut count) = (0u64, 0u64);
                directions::for_each_neighbor(d, z, y, x, distance, |j| {
                    sum += ds.levels[j] as u64;
                    count += 1;
                });
                if count > 0 {
                    let avg = sum as f64 / count as f64;
                    t.n[level as usize - 1] += 1;
                    t.s[level as usize - 1] += (level as f64 - avg).abs();
                }
            }
        }
    }
    t
}

/// Degenerate rules: Coarseness is `COARSENESS_CAP` when every difference is
/// zero; Contrast is 0 with fewer than two occupied levels; Busyness and
/// Strength are 0 when their denominators vanish.
pub fn table_features(t: &NgtdmTable) -> Vec<f64> {
    let nvp: u64 = t.n.iter().sum();
    let occupied: Vec<(f64, f64, f64)> = t
        .n
        .iter()
        .zip(&t.s)
        .enumerate()
        .filter(|(_, (&n, _))| n > 0)
        .map(|(i, (&n, &s))| ((i + 1) as f64, n as f64 / nvp as f64, s))
        .collect();
    if occupied.is_empty() {
        return FamilyValues::from_pairs(
            Family::Ngtdm,
            &[
                ("Busyness", 0.0),
                ("Coarseness", COARSENESS_CAP),
                ("Complexity", 0.0),
                ("Contrast", 0.0),
                ("Strength", 0.0),
            ],
        )
        .values;
    }
    let ngp = occupied.len() as f64;
    let nvp = nvp as f64;
    let ps: f64 = occupied.iter().map(|(_, p, s)| p * s).sum();
    let s_total: f64 = occupied.iter().map(|(_, _, s)| s).sum();

    let coarseness = if ps > 0.0 { 1.0 / ps } else { COARSENESS_CAP };
    let (mut pair_contrast, mut busy_den, mut complexity, mut strength) = (0.0, 0.0, 0.0, 0.0);
    for &(i, pi, si) in &occupied {
        for &(j, pj, sj) in &occupied {
            let d = i - j;
            pair_contrast += pi * pj * d * d;
            busy_den += (i * pi - j * pj).abs();
            complexity += d.abs() * (pi * si + pj * sj) / (pi + pj);
            strength += (pi + pj) * d * d;
        }
    }
    let contrast = if ngp > 1.0 {
        pair_contrast / (ngp * (ngp - 1.0)) * s_total / nvp
    } else {
        0.0
    };
    let busyness = if busy_den > 0.0 { ps / busy_den } else { 0.0 };
    let strength = if s_total > 0.0 { strength / s_total } else { 0.0 };
    FamilyValues::from_pairs(
        Family::Ngtdm,
        &[
            ("Busyness", busyness),
            ("Coarseness", coarseness),
            ("Complexity", complexity / nvp),
            ("Contrast", contrast),
            ("Strength", strength),
        ],
    )
    .values
}

pub fn ngtdm_features(ds: &DiscreteStack, p: &ExtractionParams) -> FamilyValues {
    FamilyValues {
        family: Family::Ngtdm,
        values: table_features(&build_table(ds, p.distance)),
    }
}
