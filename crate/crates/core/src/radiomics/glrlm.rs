//! Gray-level run-length matrix features, averaged over directions.

use crate::radiomics::directions;
use crate::radiomics::glcm::mean_columns;
use crate::radiomics::size_matrix::{DenseCounts, Emphasis};
use crate::radiomics::{DiscreteStack, Family, FamilyValues, SizeCounts};

pub const NAMES: &[&str] = &[
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelRunEmphasis",
    "LongRunEmphasis",
    "LongRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LowGrayLevelRunEmphasis",
    "RunEntropy",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "RunVariance",
    "ShortRunEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "ShortRunLowGrayLevelEmphasis",
];

/// Runs of equal level along `offset`, keyed by (level, run length).
pub fn build_matrix(ds: &DiscreteStack, offset: [i64; 3]) -> SizeCounts {
    let mut m = DenseCounts::new(ds.ng);
    let d = ds.dims;
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let (zi, yi, xi) = (z as i64, y as i64, x as i64);
                let level = ds.at(z, y, x);
                if ds.at_signed(zi - offset[0], yi - offset[1], xi - offset[2]) == Some(level) {
                    continue;
                }
                let mut len = 1u32;
                let (mut cz, mut cy, mut cx) = (zi + offset[0], yi + offset[1], xi + offset[2]);
                while ds.at_signed(cz, cy, cx) == Some(level) {
                    len += 1;
                    cz += offset[0];
                    cy += offset[1];
                    cx += offset[2];
                }
                m.add(level, len);
            }
        }
    }
    m.into_sparse()
}

/// Unit offsets with at least one in-bounds neighbor pair; a lone voxel
/// falls back to the x axis.
pub fn run_directions(ds: &DiscreteStack) -> Vec<[i64; 3]> {
    let dirs = directions::active(ds.dims, 1);
    if dirs.is_empty() {
        vec![[0, 0, 1]]
    } else {
        dirs
    }
}

pub fn build_matrices(ds: &DiscreteStack) -> Vec<([i64; 3], SizeCounts)> {
    run_directions(ds)
        .into_iter()
        .map(|o| (o, build_matrix(ds, o)))
        .collect()
}

pub fn matrix_features(m: &SizeCounts, np: usize) -> Vec<f64> {
    let e = Emphasis::compute(m, np);
    FamilyValues::from_pairs(
        Family::Glrlm,
        &[
            ("GrayLevelNonUniformity", e.gln),
            ("GrayLevelNonUniformityNormalized", e.glnn),
            ("GrayLevelVariance", e.gl_variance),
            ("HighGrayLevelRunEmphasis", e.high_gl),
            ("LongRunEmphasis", e.long),
            ("LongRunHighGrayLevelEmphasis", e.long_high),
            ("LongRunLowGrayLevelEmphasis", e.long_low),
            ("LowGrayLevelRunEmphasis", e.low_gl),
            ("RunEntropy", e.entropy),
            ("RunLengthNonUniformity", e.sn),
            ("RunLengthNonUniformityNormalized", e.snn),
            ("RunPercentage", e.percentage),
            ("RunVariance", e.size_variance),
            ("ShortRunEmphasis", e.short),
            ("ShortRunHighGrayLevelEmphasis", e.short_high),
            ("ShortRunLowGrayLevelEmphasis", e.short_low),
        ],
    )
    .values
}

pub fn glrlm_features(ds: &DiscreteStack) -> FamilyValues {
    let np = ds.voxel_count();
    let rows: Vec<Vec<f64>> = build_matrices(ds)
        .iter()
        .map(|(_, m)| matrix_features(m, np))
        .collect();
    FamilyValues {
        family: Family::Glrlm,
        values: mean_columns(&rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, Spacing};

    #[test]
    fn row_runs() {
        let ds = DiscreteStack::new(Dims::new(1, 1, 5), Spacing::isotropic(1.0), vec![1, 1, 2, 2, 2]);
        let m = build_matrix(&ds, [0, 0, 1]);
        assert_eq!(m.counts.len(), 2);
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(m.get(2, 3), 1);
        assert_eq!(run_directions(&ds), vec![[0, 0, 1]]);
    }

    #[test]
    fn constant_cube_has_longest_runs() {
        let ds = DiscreteStack::new(Dims::new(3, 3, 3), Spacing::isotropic(1.0), vec![1; 27]);
        let f = glrlm_features(&ds);
        // axis runs are length 3 (LRE 9); diagonal runs mix lengths 1..3
        let lre = f.get("LongRunEmphasis").unwrap();
        let mixed = DiscreteStack::new(
            Dims::new(3, 3, 3),
            Spacing::isotropic(1.0),
            (0..27).map(|i| (i % 2 + 1) as u32).collect(),
        );
        assert!(lre > glrlm_features(&mixed).get("LongRunEmphasis").unwrap());
        for (_, m) in build_matrices(&ds) {
            let voxels: u64 = m.counts.iter().map(|(&(_, len), &c)| len as u64 * c).sum();
            assert_eq!(voxels, 27);
        }
        assert_eq!(build_matrix(&ds, [0, 0, 1]).get(1, 3), 9);
    }
}
