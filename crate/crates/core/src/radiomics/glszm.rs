//! Gray-level size-zone matrix features. Zones are 26-connected sets of
//! voxels sharing a gray level; the matrix is direction independent.

use crate::radiomics::directions;
use crate::radiomics::size_matrix::{DenseCounts, Emphasis};
use crate::radiomics::{DiscreteStack, Family, FamilyValues, SizeCounts};

pub const NAMES: &[&str] = &[
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelZoneEmphasis",
    "LargeAreaEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LowGrayLevelZoneEmphasis",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "SmallAreaEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "ZoneEntropy",
    "ZonePercentage",
    "ZoneVariance",
];

/// Zone counts keyed by (level, zone size), via iterative flood fill.
pub fn build_matrix(ds: &DiscreteStack) -> SizeCounts {
    let d = ds.dims;
    let mut seen = vec![false; ds.voxel_count()];
    let mut stack = Vec::new();
    let mut m = DenseCounts::new(ds.ng);
    for start in 0..ds.voxel_count() {
        if seen[start] {
            continue;
        }
        let level = ds.levels[start];
        seen[start] = true;
        stack.push(start);
        let mut size = 0u32;
        while let Some(i) = stack.pop() {
            size += 1;
            let z = i / (d.ny * d.nx);
            let y = (i / d.nx) % d.ny;
            let x = i % d.nx;
            directions::for_each_neighbor(d, z, y, x, 1, |j| {
                if !seen[j] && ds.levels[j] == level {
                    seen[j] = true;
                    stack.push(j);
                }
            });
        }
        m.add(level, size);
    }
    m.into_sparse()
}

pub fn matrix_features(m: &SizeCounts, np: usize) -> Vec<f64> {
    let e = Emphasis::compute(m, np);
    FamilyValues::from_pairs(
        Family::Glszm,
        &[
            ("GrayLevelNonUniformity", e.gln),
            ("GrayLevelNonUniformityNormalized", e.glnn),
            ("GrayLevelVariance", e.gl_variance),
            ("HighGrayLevelZoneEmphasis", e.high_gl),
            ("LargeAreaEmphasis", e.long),
            ("LargeAreaHighGrayLevelEmphasis", e.long_high),
            ("LargeAreaLowGrayLevelEmphasis", e.long_low),
            ("LowGrayLevelZoneEmphasis", e.low_gl),
            ("SizeZoneNonUniformity", e.sn),
            ("SizeZoneNonUniformityNormalized", e.snn),
            ("SmallAreaEmphasis", e.short),
            ("SmallAreaHighGrayLevelEmphasis", e.short_high),
            ("SmallAreaLowGrayLevelEmphasis", e.short_low),
            ("ZoneEntropy", e.entropy),
            ("ZonePercentage", e.percentage),
            ("ZoneVariance", e.size_variance),
        ],
    )
    .values
}

pub fn glszm_features(ds: &DiscreteStack) -> FamilyValues {
    FamilyValues {
        family: Family::Glszm,
        values: matrix_features(&build_matrix(ds), ds.voxel_count()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, Spacing};

    #[test]
    fn constant_cube_is_one_zone() {
        let ds = DiscreteStack::new(Dims::new(3, 3, 3), Spacing::isotropic(1.0), vec![2; 27]);
        let m = build_matrix(&ds);
        assert_eq!(m.counts.len(), 1);
        assert_eq!(m.get(2, 27), 1);
    }

    #[test]
    fn diagonal_neighbors_connect() {
        // checkerboard slice: every same-level voxel touches another diagonally
        let levels = (0..9).map(|i| (i % 2 + 1) as u32).collect();
        let ds = DiscreteStack::new(Dims::new(1, 3, 3), Spacing::isotropic(1.0), levels);
        let m = build_matrix(&ds);
        assert_eq!(m.get(1, 5), 1);
        assert_eq!(m.get(2, 4), 1);
        assert_eq!(m.total(), 2);
    }
}
