use crate::radiomics::{Binning, ExtractionParams};
use crate::volume::{Dims, GrayVolume, Spacing};

/// Stack of discretized gray levels in `1..=ng`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStack {
    pub dims: Dims,
    pub spacing: Spacing,
    pub levels: Vec<u32>,
    /// Highest level present.
    pub ng: u32,
}

impl DiscreteStack {
    pub fn new(dims: Dims, spacing: Spacing, levels: Vec<u32>) -> Self {
        assert_eq!(dims.len(), levels.len(), "level count must match dims");
        assert!(levels.iter().all(|&l| l >= 1), "levels start at 1");
        let ng = levels.iter().copied().max().unwrap_or(1);
        DiscreteStack {
            dims,
            spacing,
            levels,
            ng,
        }
    }

    #[inline]
    pub fn at(&self, z: usize, y: usize, x: usize) -> u32 {
        self.levels[self.dims.index(z, y, x)]
    }

    #[inline]
    pub fn at_signed(&self, z: i64, y: i64, x: i64) -> Option<u32> {
        self.dims.checked_index(z, y, x).map(|i| self.levels[i])
    }

    pub fn voxel_count(&self) -> usize {
        self.levels.len()
    }
}

/// Fixed bin width: `floor((v - min) / width) + 1`. Fixed bin count:
/// `floor(n * (v - min) / (max - min)) + 1`, with the maximum folded into
/// bin `n`.
pub fn discretize(image: &GrayVolume, p: &ExtractionParams) -> DiscreteStack {
    let vox = image.voxels();
    let min = vox.iter().copied().min().unwrap_or(0) as f64;
    let max = vox.iter().copied().max().unwrap_or(0) as f64;
    let levels = match p.binning {
        Binning::Width(w) => vox
            .iter()
            .map(|&v| ((v as f64 - min) / w).floor() as u32 + 1)
            .collect(),
        Binning::Count(n) => {
            let range = max - min;
            vox.iter()
                .map(|&v| {
                    if range == 0.0 {
                        1
                    } else {
                        (((v as f64 - min) * n as f64 / range).floor() as u32 + 1).min(n as u32)
                    }
                })
                .collect()
        }
    };
    DiscreteStack::new(image.dims(), image.spacing(), levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    fn vol(values: Vec<u8>) -> GrayVolume {
        GrayVolume::new(Dims::new(1, 1, values.len()), Spacing::isotropic(1.0), values).unwrap()
    }

    #[test]
    fn constant_is_single_level() {
        let d = discretize(&vol(vec![77; 10]), &ExtractionParams::default());
        assert_eq!(d.ng, 1);
        assert!(d.levels.iter().all(|&l| l == 1));
    }

    #[test]
    fn width_formula() {
        let d = discretize(&vol(vec![0, 25, 50]), &ExtractionParams::default());
        assert_eq!(d.levels, vec![1, 2, 3]);
        assert_eq!(d.ng, 3);
    }

    #[test]
    fn count_mode_spans_range() {
        let p = ExtractionParams {
            binning: Binning::Count(4),
            distance: 1,
        };
        let d = discretize(&vol(vec![10, 20, 30, 40, 50]), &p);
        assert_eq!(d.levels, vec![1, 2, 3, 4, 4]);
    }

    #[test]
    fn histogram_matches_brute_force_binning() {
        let mut r = rng(5);
        let values: Vec<u8> = (0..500).map(|_| r.random()).collect();
        let d = discretize(&vol(values.clone()), &ExtractionParams::default());
        let min = *values.iter().min().unwrap() as i32;
        // brute force: walk bin edges until the value falls inside
        for (v, &l) in values.iter().zip(&d.levels) {
            let mut bin = 1;
            let mut upper = min + 25;
            while (*v as i32) >= upper {
                bin += 1;
                upper += 25;
            }
            assert_eq!(l, bin);
        }
    }
}
