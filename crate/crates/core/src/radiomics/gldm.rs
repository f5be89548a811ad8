//! Gray-level dependence matrix features. A voxel's dependence is one plus
//! the number of neighbors within Chebyshev distance `d` sharing its level.

use crate::radiomics::directions;
use crate::radiomics::size_matrix::{DenseCounts, Emphasis};
use crate::radiomics::{DiscreteStack, ExtractionParams, Family, FamilyValues, SizeCounts};

pub const NAMES: &[&str] = &[
    "DependenceEntropy",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "DependenceVariance",
    "GrayLevelNonUniformity",
    "GrayLevelVariance",
    "HighGrayLevelEmphasis",
    "LargeDependenceEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LowGrayLevelEmphasis",
    "SmallDependenceEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
];

pub fn build_matrix(ds: &DiscreteStack, distance: usize) -> SizeCounts {
    let d = ds.dims;
    let mut m = DenseCounts::new(ds.ng);
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let level = ds.at(z, y, x);
                let mut dep = 1u32;
                directions::for_each_neighbor(d, z, y, x, distance, |j| {
                    if ds.levels[j] == level {
                        dep += 1;
                    }
                });
                m.add(level, dep);
            }
        }
    }
    m.into_sparse()
}

pub fn matrix_features(m: &SizeCounts) -> Vec<f64> {
    let e = Emphasis::compute(m, m.total() as usize);
    FamilyValues::from_pairs(
        Family::Gldm,
        &[
            ("DependenceEntropy", e.entropy),
            ("DependenceNonUniformity", e.sn),
            ("DependenceNonUniformityNormalized", e.snn),
            ("DependenceVariance", e.size_variance),
            ("GrayLevelNonUniformity", e.gln),
            ("GrayLevelVariance", e.gl_variance),
            ("HighGrayLevelEmphasis", e.high_gl),
            ("LargeDependenceEmphasis", e.long),
            ("LargeDependenceHighGrayLevelEmphasis", e.long_high),
            ("LargeDependenceLowGrayLevelEmphasis", e.long_low),
            ("LowGrayLevelEmphasis", e.low_gl),
            ("SmallDependenceEmphasis", e.short),
            ("SmallDependenceHighGrayLevelEmphasis", e.short_high),
            ("SmallDependenceLowGrayLevelEmphasis", e.short_low),
        ],
    )
    .values
}

pub fn gldm_features(ds: &DiscreteStack, p: &ExtractionParams) -> FamilyValues {
    FamilyValues {
        family: Family::Gldm,
        values: matrix_features(&build_matrix(ds, p.distance)),
    }
}
