//! Radiomics feature extraction: 18 first-order, 14 shape and 75
//! gray-level texture features (GLCM 24, GLDM 14, GLRLM 16, GLSZM 16,
//! NGTDM 5), 107 in total.
//!
//! Gray-level families work on a discretized stack and aggregate
//! direction-dependent matrices by the arithmetic mean over the 13 unique
//! 3D offsets (4 in-plane offsets for single-slice stacks). Logarithms are
//! base 2 with `EPS` added to the argument. Degenerate inputs (one gray
//! level, zero variance) resolve to fixed finite values documented on each
//! feature so that constant regions never produce NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roi::CuboidMask;
use crate::volume::GrayVolume;

pub mod directions;
pub mod discretize;
pub mod first_order;
pub mod glcm;
pub mod gldm;
pub mod glrlm;
pub mod glszm;
pub mod ngtdm;
pub mod shape;
mod size_matrix;

pub use discretize::{discretize, DiscreteStack};
pub use size_matrix::SizeCounts;

pub const EPS: f64 = 1e-12;

#[inline]
pub(crate) fn log2e(p: f64) -> f64 {
    (p + EPS).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Gray levels per bin, counted from the stack minimum.
    Width(f64),
    /// Fixed number of bins spanning the stack range.
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    pub binning: Binning,
    /// Neighbor distance for GLCM offsets, GLDM and NGTDM neighborhoods.
    pub distance: usize,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        ExtractionParams {
            binning: Binning::Width(25.0),
            distance: 1,
        }
    }
}

impl ExtractionParams {
    pub fn validate(&self) -> Result<()> {
        match self.binning {
            Binning::Width(w) if !(w > 0.0 && w.is_finite()) => {
                return Err(Error::InvalidParameter(format!("bin width must be > 0, got {w}")))
            }
            Binning::Count(n) if n < 2 => {
                return Err(Error::InvalidParameter(format!("bin count must be >= 2, got {n}")))
            }
            _ => {}
        }
        if self.distance < 1 {
            return Err(Error::InvalidParameter("distance must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FirstOrder,
    Shape,
    Glcm,
    Gldm,
    Glrlm,
    Glszm,
    Ngtdm,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::FirstOrder,
        Family::Shape,
        Family::Glcm,
        Family::Gldm,
        Family::Glrlm,
        Family::Glszm,
        Family::Ngtdm,
    ];

    pub fn prefix(&self) -> &'static str {
        match self {
            Family::FirstOrder => "firstorder",
            Family::Shape => "shape",
            Family::Glcm => "glcm",
            Family::Gldm => "gldm",
            Family::Glrlm => "glrlm",
            Family::Glszm => "glszm",
            Family::Ngtdm => "ngtdm",
        }
    }

    /// Canonical member names, sorted.
    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Family::FirstOrder => first_order::NAMES,
            Family::Shape => shape::NAMES,
            Family::Glcm => glcm::NAMES,
            Family::Gldm => gldm::NAMES,
            Family::Glrlm => glrlm::NAMES,
            Family::Glszm => glszm::NAMES,
            Family::Ngtdm => ngtdm::NAMES,
        }
    }

    pub fn is_gray_level(&self) -> bool {
        !matches!(self, Family::FirstOrder | Family::Shape)
    }
}

/// Named values of one family, in the family's canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyValues {
    pub family: Family,
    pub values: Vec<f64>,
}

impl FamilyValues {
    pub(crate) fn from_pairs(family: Family, pairs: &[(&str, f64)]) -> Self {
        let names = family.names();
        debug_assert_eq!(names.len(), pairs.len());
        let values = names
            .iter()
            .map(|n| {
                pairs
                    .iter()
                    .find(|(k, _)| k == n)
                    .unwrap_or_else(|| panic!("feature {n} not computed"))
                    .1
            })
            .collect();
        FamilyValues { family, values }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.family
            .names()
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

/// The 107-entry feature vector, ordered by (family, canonical name).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

pub const FEATURE_COUNT: usize = 107;

/// All 107 qualified names (`<family>_<Name>`) in canonical order.
pub fn feature_names() -> Vec<String> {
    Family::ALL
        .iter()
        .flat_map(|f| f.names().iter().map(move |n| format!("{}_{}", f.prefix(), n)))
        .collect()
}

impl FeatureVector {
    fn assemble(mut families: Vec<FamilyValues>) -> Result<Self> {
        families.sort_by_key(|f| f.family);
        let names = feature_names();
        let values: Vec<f64> = families.into_iter().flat_map(|f| f.values).collect();
        if values.len() != FEATURE_COUNT {
            return Err(Error::InvalidDims(format!(
                "expected {FEATURE_COUNT} features, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {} = {}", names[i], values[i])));
        }
        Ok(FeatureVector { names, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Computes one family. `Shape` is derived from the stack's cuboid extent.
pub fn extract_family(
    image: &GrayVolume,
    discrete: &DiscreteStack,
    family: Family,
    p: &ExtractionParams,
) -> FamilyValues {
    match family {
        Family::FirstOrder => first_order::first_order(image, discrete),
        Family::Shape => shape::shape_features(
            &CuboidMask { dims: image.dims() },
            image.spacing(),
        )
        .expect("volume dims are non-empty"),
        Family::Glcm => glcm::glcm_features(discrete, p),
        Family::Gldm => gldm::gldm_features(discrete, p),
        Family::Glrlm => glrlm::glrlm_features(discrete),
        Family::Glszm => glszm::glszm_features(discrete),
        Family::Ngtdm => ngtdm::ngtdm_features(discrete, p),
    }
}

/// Extracts all families in the given order; the result is ordered
/// canonically regardless of `order`.
pub fn extract_in_order(image: &GrayVolume, p: &ExtractionParams, order: &[Family]) -> Result<FeatureVector> {
    p.validate()?;
    let discrete = discretize(image, p);
    let families = order
        .iter()
        .map(|&f| extract_family(image, &discrete, f, p))
        .collect();
    FeatureVector::assemble(families)
}

pub fn extract_all(image: &GrayVolume, p: &ExtractionParams) -> Result<FeatureVector> {
    extract_in_order(image, p, &Family::ALL)
}
