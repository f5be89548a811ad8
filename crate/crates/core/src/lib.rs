//! CT radiomics pipeline for predicting a binary tumor genotype label from a
//! center-point and slice-count annotation.
//!
//! Stages: [`volume`] loading, windowing and resampling; [`roi`] cropping and
//! channel synthesis; [`augment`] training-split balancing; [`radiomics`]
//! feature extraction; [`selection`] LASSO feature selection; [`models`]
//! classifiers; [`eval`] patient-grouped cross-validation and metrics;
//! [`phantom`] synthetic cohorts; [`pipeline`] end-to-end orchestration.

pub mod augment;
pub mod error;
pub mod eval;
pub mod models;
pub mod phantom;
pub mod pipeline;
pub mod radiomics;
pub mod roi;
pub mod seed;
pub mod selection;
pub mod volume;

pub use error::{Error, Result};
