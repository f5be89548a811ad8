//! Patient-grouped stratified cross-validation, ROC-AUC with bootstrap
//! confidence intervals, and slice-to-patient aggregation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{balance_cohort, AugmentPolicy, LabeledSlice};
use crate::error::{Error, Result};
use crate::models::{train, ModelKind, ModelSpec, DEFAULT_THRESHOLD};
use crate::radiomics::first_order::percentile;
use crate::radiomics::{extract_all, feature_names, ExtractionParams};
use crate::seed::{derive_seed, rng};
use crate::selection::{lambda_grid, lambda_max, select_lambda_grouped, Scaler, SelectedFeatures, SelectionParams};
use crate::volume::{Dims, GrayVolume, Spacing};

pub const DEFAULT_FOLDS: usize = 4;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
/// Redraws allowed per bootstrap resample before giving up.
pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientLabel {
    pub patient_id: String,
    pub label: u8,
}

/// Patient-to-fold mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold(&self, patient_id: &str) -> Option<usize> {
        self.fold_of.get(patient_id).copied()
    }

    pub fn patients_in(&self, fold: usize) -> Vec<String> {
        self.fold_of
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in self.fold_of.values() {
            s[f] += 1;
        }
        s
    }

    /// (training, validation) masks over per-slice patient ids.
    pub fn masks<S: AsRef<str>>(&self, patient_ids: &[S], fold: usize) -> (Vec<bool>, Vec<bool>) {
        patient_ids
            .iter()
            .map(|p| {
                let f = self.fold(p.as_ref());
                (f.is_some_and(|f| f != fold), f == Some(fold))
            })
            .unzip()
    }
}

/// Shuffled positives then shuffled negatives dealt round-robin with one
/// running counter, so positives spread as evenly as counts allow.
pub fn make_folds(patients: &[PatientLabel], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    if patients.len() < k {
        return Err(Error::NotEnoughSamples(format!("{} patients for {k} folds", patients.len())));
    }
    let mut sorted: Vec<&PatientLabel> = patients.iter().collect();
    sorted.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    if sorted.windows(2).any(|w| w[0].patient_id == w[1].patient_id) {
        return Err(Error::InvalidParameter("duplicate patient id".into()));
    }
    let mut r = rng(seed);
    let mut fold_of = BTreeMap::new();
    let mut counter = 0;
    for label in [1u8, 0] {
        let mut group: Vec<&str> = sorted
            .iter()
            .filter(|p| p.label == label)
            .map(|p| p.patient_id.as_str())
            .collect();
        group.shuffle(&mut r);
        for p in group {
            fold_of.insert(p.to_string(), counter % k);
            counter += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    (pos, labels.len() - pos)
}

/// Mann-Whitney U over `n+ * n-`, with half credit for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidDims(format!("{} scores vs {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let (np, nn) = class_counts(labels);
    if np == 0 || nn == 0 {
        return Err(Error::SingleClass(format!("auc needs both classes ({np} positive, {nn} negative)")));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged over the tie group
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * idx[i..=j].iter().filter(|&&t| labels[t] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (np * (np + 1)) as f64 / 2.0;
    Ok(u / (np as f64 * nn as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores at or above it are called positive; `None` for the starting
    /// point above every score.
    pub threshold: Option<f64>,
}

/// ROC points for decreasing thresholds, starting at (0, 0).
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>> {
    roc_auc(scores, labels)?;
    let (np, nn) = class_counts(labels);
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (k, &i) in idx.iter().enumerate() {
        if labels[i] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        if k + 1 == idx.len() || scores[idx[k + 1]] != scores[i] {
            out.push(RocPoint {
                fpr: fp as f64 / nn as f64,
                tpr: tp as f64 / np as f64,
                threshold: Some(scores[i]),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    /// Single-class resamples that were redrawn.
    pub redraws: usize,
}

/// Percentile bootstrap (2.5th, 97.5th) of the AUC over resampled
/// (score, label) pairs; single-class resamples are redrawn.
pub fn bootstrap_ci(scores: &[f64], labels: &[u8], n_resamples: usize, seed: u64) -> Result<ConfidenceInterval> {
    roc_auc(scores, labels)?;
    if n_resamples < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 resamples, got {n_resamples}")));
    }
    let n = scores.len();
    let mut r = rng(seed);
    let mut aucs = Vec::with_capacity(n_resamples);
    let mut redraws = 0;
    let (mut s, mut l) = (vec![0.0; n], vec![0u8; n]);
    for _ in 0..n_resamples {
        let mut tries = 0;
        loop {
            for k in 0..n {
                let i = r.random_range(0..n);
                s[k] = scores[i];
                l[k] = labels[i];
            }
            let (np, nn) = class_counts(&l);
            if np > 0 && nn > 0 {
                break;
            }
            redraws += 1;
            tries += 1;
            if tries >= MAX_REDRAWS {
                return Err(Error::NotEnoughSamples(format!(
                    "bootstrap resample stayed single-class after {MAX_REDRAWS} redraws"
                )));
            }
        }
        aucs.push(roc_auc(&s, &l)?);
    }
    aucs.sort_by(f64::total_cmp);
    Ok(ConfidenceInterval {
        lo: percentile(&aucs, 0.025),
        hi: percentile(&aucs, 0.975),
        resamples: n_resamples,
        redraws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationRule {
    /// Mean slice score against the threshold.
    Mean,
    /// More than half of the slice labels positive; ties go negative.
    MajorityVote,
}

impl std::str::FromStr for AggregationRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(AggregationRule::Mean),
            "majority_vote" => Ok(AggregationRule::MajorityVote),
            other => Err(Error::InvalidParameter(format!("unknown aggregation rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePrediction {
    pub patient_id: String,
    pub slice_index: usize,
    pub label: u8,
    pub score: f64,
    pub predicted: u8,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientPrediction {
    pub patient_id: String,
    pub label: u8,
    pub n_slices: usize,
    pub mean_score: f64,
    pub positive_slices: usize,
    pub predicted: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientSummary {
    pub rule: AggregationRule,
    pub patients: Vec<PatientPrediction>,
    pub accuracy: f64,
}

pub fn patient_aggregate(slices: &[SlicePrediction], rule: AggregationRule, threshold: f64) -> Result<PatientSummary> {
    if slices.is_empty() {
        return Err(Error::Empty("no slice predictions to aggregate".into()));
    }
    let mut groups: BTreeMap<&str, Vec<&SlicePrediction>> = BTreeMap::new();
    for s in slices {
        if s.patient_id.is_empty() {
            return Err(Error::InvalidParameter(format!("slice {} has no patient id", s.slice_index)));
        }
        groups.entry(&s.patient_id).or_default().push(s);
    }
    let mut patients = Vec::with_capacity(groups.len());
    for (pid, g) in groups {
        let label = g[0].label;
        if g.iter().any(|s| s.label != label) {
            return Err(Error::InvalidParameter(format!("patient {pid} has mixed slice labels")));
        }
        let mean_score = g.iter().map(|s| s.score).sum::<f64>() / g.len() as f64;
        let positive_slices = g.iter().filter(|s| s.predicted == 1).count();
        let predicted = match rule {
            AggregationRule::Mean => (mean_score >= threshold) as u8,
            AggregationRule::MajorityVote => (2 * positive_slices > g.len()) as u8,
        };
        patients.push(PatientPrediction {
            patient_id: pid.to_string(),
            label,
            n_slices: g.len(),
            mean_score,
            positive_slices,
            predicted,
        });
    }
    let accuracy = patients.iter().filter(|p| p.predicted == p.label).count() as f64 / patients.len() as f64;
    Ok(PatientSummary {
        rule,
        patients,
        accuracy,
    })
}

/// Population mean and variance.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (m, values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n)
}

/// Memoized single-slice feature extraction keyed by a digest of the pixels
/// and the extraction settings. Shareable across runs over the same images.
#[derive(Debug, Default)]
pub struct FeatureCache {
    map: Mutex<HashMap<[u8; 32], Arc<Vec<f64>>>>,
}

impl FeatureCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self, slice: &LabeledSlice, params: &ExtractionParams, spacing: f64) -> Result<Arc<Vec<f64>>> {
        let mut h = Sha256::new();
        h.update(format!("{params:?}|{spacing}|{}|", slice.image.size).as_bytes());
        h.update(&slice.image.pixels);
        let key: [u8; 32] = h.finalize().into();
        if let Some(v) = self.map.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let n = slice.image.size;
        let vol = GrayVolume::new(Dims::new(1, n, n), Spacing::isotropic(spacing), slice.image.pixels.clone())?;
        let v = Arc::new(extract_all(&vol, params)?.values);
        self.map.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub grid_len: usize,
    pub grid_ratio: f64,
    pub inner_folds: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Keep each patient's slices, augmented copies included, in one inner
    /// fold.
    pub group_by_patient: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            grid_len: crate::selection::DEFAULT_GRID_LEN,
            grid_ratio: crate::selection::DEFAULT_GRID_RATIO,
            inner_folds: crate::selection::DEFAULT_INNER_FOLDS,
            tol: crate::selection::DEFAULT_TOL,
            max_iter: crate::selection::DEFAULT_MAX_ITER,
            group_by_patient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    /// `None` disables augmentation of training slices.
    pub augment: Option<AugmentPolicy>,
    pub extraction: ExtractionParams,
    /// In-plane pixel spacing of the slices, millimeters.
    pub pixel_spacing: f64,
    pub selection: SelectionConfig,
    pub models: Vec<ModelSpec>,
    /// Which feature-selection settings to evaluate, e.g. `[true, false]`.
    pub feature_selection: Vec<bool>,
    pub threshold: f64,
    pub bootstrap_resamples: usize,
    pub aggregation: AggregationRule,
}

impl CvConfig {
    pub fn new(models: Vec<ModelSpec>, seed: u64) -> Self {
        CvConfig {
            k: DEFAULT_FOLDS,
            seed,
            augment: Some(AugmentPolicy {
                seed: derive_seed(seed, &[1]),
                ..Default::default()
            }),
            extraction: ExtractionParams::default(),
            pixel_spacing: 1.0,
            selection: SelectionConfig::default(),
            models,
            feature_selection: vec![true, false],
            threshold: DEFAULT_THRESHOLD,
            bootstrap_resamples: DEFAULT_BOOTSTRAP,
            aggregation: AggregationRule::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("k must be >= 2, got {}", self.k)));
        }
        if self.models.is_empty() || self.feature_selection.is_empty() {
            return Err(Error::InvalidParameter("no model variants to evaluate".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter(format!("threshold must be in (0, 1), got {}", self.threshold)));
        }
        if !(self.pixel_spacing > 0.0 && self.pixel_spacing.is_finite()) {
            return Err(Error::InvalidParameter("pixel spacing must be > 0".into()));
        }
        if self.selection.grid_len == 0 || !(self.selection.grid_ratio > 0.0 && self.selection.grid_ratio < 1.0) {
            return Err(Error::InvalidParameter("bad lambda grid settings".into()));
        }
        if let Some(p) = &self.augment {
            p.validate()?;
        }
        for m in &self.models {
            m.hyper.validate()?;
        }
        self.extraction.validate()
    }
}

/// Training and validation slices of one fold. Only training slices are
/// augmented, and augmented slices keep their source patient id.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub train: Vec<LabeledSlice>,
    pub validation: Vec<LabeledSlice>,
}

pub fn fold_split(
    slices: &[LabeledSlice],
    folds: &FoldAssignment,
    fold: usize,
    augment: Option<&AugmentPolicy>,
) -> Result<FoldSplit> {
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for s in slices {
        match folds.fold(&s.patient_id) {
            Some(f) if f == fold => validation.push(s.clone()),
            Some(_) => train.push(s.clone()),
            None => return Err(Error::InvalidParameter(format!("patient {} has no fold", s.patient_id))),
        }
    }
    if let Some(policy) = augment {
        let (np, nn) = class_counts(&train.iter().map(|s| s.label).collect::<Vec<_>>());
        if np > 0 && nn > 0 {
            train = balance_cohort(&train, policy)?;
        }
    }
    Ok(FoldSplit { train, validation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldDetail {
    pub fold: usize,
    pub train_patients: Vec<String>,
    pub validation_patients: Vec<String>,
    /// Training slices after augmentation.
    pub train_slices: usize,
    pub synthetic_slices: usize,
    pub validation_slices: usize,
    pub validation_has_positive: bool,
    /// Set when the fold could not be trained.
    pub skipped: Option<String>,
    pub selection: Option<SelectedFeatures>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub feature_selection: bool,
    /// Slice-level validation accuracy per fold; `None` for skipped folds.
    pub fold_accuracy: Vec<Option<f64>>,
    pub accuracy_mean: f64,
    /// Population variance across evaluated folds.
    pub accuracy_variance: f64,
    /// Pooled out-of-fold slice accuracy.
    pub slice_accuracy: f64,
    /// Pooled out-of-fold ROC-AUC.
    pub auc: f64,
    pub auc_ci: ConfidenceInterval,
    pub roc: Vec<RocPoint>,
    pub predictions: Vec<SlicePrediction>,
    pub patients: PatientSummary,
    pub flags: Vec<String>,
}

impl EvalReport {
    pub fn variant_name(&self) -> String {
        format!(
            "{}{}",
            self.model.as_str(),
            if self.feature_selection { "+lasso" } else { "" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub folds: FoldAssignment,
    pub fold_details: Vec<FoldDetail>,
    pub reports: Vec<EvalReport>,
}

struct FoldResult {
    detail: FoldDetail,
    /// Per variant (selection setting, model index), validation scores and
    /// predicted labels.
    scores: Vec<Vec<(f64, u8)>>,
    labels: Vec<Vec<u8>>,
    validation: Vec<LabeledSlice>,
}

fn variants(cfg: &CvConfig) -> Vec<(bool, usize)> {
    cfg.feature_selection
        .iter()
        .flat_map(|&fs| (0..cfg.models.len()).map(move |m| (fs, m)))
        .collect()
}

fn run_fold(
    slices: &[LabeledSlice],
    folds: &FoldAssignment,
    fold: usize,
    cfg: &CvConfig,
    cache: &FeatureCache,
    with_models: bool,
) -> Result<FoldResult> {
    let policy = cfg.augment.as_ref();
    let split = fold_split(slices, folds, fold, policy)?;
    let patients = |v: &[LabeledSlice]| -> Vec<String> {
        v.iter().map(|s| s.patient_id.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    };
    let train_labels: Vec<u8> = split.train.iter().map(|s| s.label).collect();
    let (np, nn) = class_counts(&train_labels);
    let mut detail = FoldDetail {
        fold,
        train_patients: patients(&split.train),
        validation_patients: patients(&split.validation),
        train_slices: split.train.len(),
        synthetic_slices: split.train.iter().filter(|s| s.provenance.is_some() && s.label == 1).count(),
        validation_slices: split.validation.len(),
        validation_has_positive: split.validation.iter().any(|s| s.label == 1),
        skipped: None,
        selection: None,
    };
    let n_variants = variants(cfg).len();
    if np == 0 || nn == 0 || split.validation.is_empty() {
        detail.skipped = Some(if split.validation.is_empty() {
            "empty validation set".into()
        } else {
            format!("single-class training set ({np} positive, {nn} negative slices)")
        });
        return Ok(FoldResult {
            detail,
            scores: vec![Vec::new(); n_variants],
            labels: vec![Vec::new(); n_variants],
            validation: Vec::new(),
        });
    }

    let extract = |v: &[LabeledSlice]| -> Result<Vec<Vec<f64>>> {
        v.par_iter()
            .map(|s| cache.features(s, &cfg.extraction, cfg.pixel_spacing).map(|f| f.as_ref().clone()))
            .collect()
    };
    let xtr = extract(&split.train)?;
    let xva = extract(&split.validation)?;
    let scaler = Scaler::fit(&xtr)?;
    let (ztr, zva) = (scaler.transform(&xtr), scaler.transform(&xva));
    let names = feature_names();

    if cfg.feature_selection.contains(&true) {
        let y: Vec<f64> = train_labels.iter().map(|&l| l as f64).collect();
        let lm = lambda_max(&ztr, &y)?;
        let grid = lambda_grid(lm, cfg.selection.grid_len, cfg.selection.grid_ratio);
        let params = SelectionParams {
            inner_folds: cfg.selection.inner_folds,
            tol: cfg.selection.tol,
            max_iter: cfg.selection.max_iter,
            seed: derive_seed(cfg.seed, &[2, fold as u64]),
        };
        let groups: Vec<usize> = if cfg.selection.group_by_patient {
            let ids: BTreeMap<&str, usize> = detail
                .train_patients
                .iter()
                .enumerate()
                .map(|(i, p)| (p.as_str(), i))
                .collect();
            split.train.iter().map(|s| ids[s.patient_id.as_str()]).collect()
        } else {
            (0..ztr.len()).collect()
        };
        detail.selection = Some(select_lambda_grouped(&ztr, &y, &groups, &names, &grid, &params)?);
    }

    if !with_models {
        return Ok(FoldResult {
            detail,
            scores: Vec::new(),
            labels: Vec::new(),
            validation: Vec::new(),
        });
    }
    let val_labels: Vec<u8> = split.validation.iter().map(|s| s.label).collect();
    let mut scores = Vec::with_capacity(n_variants);
    for (fs, mi) in variants(cfg) {
        let cols: Vec<usize> = match (&detail.selection, fs) {
            (Some(sel), true) => sel.indices.clone(),
            _ => (0..names.len()).collect(),
        };
        let pick = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> { rows.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect() };
        let col_names: Vec<String> = cols.iter().map(|&j| names[j].clone()).collect();
        let mut spec = cfg.models[mi];
        spec.seed = derive_seed(spec.seed, &[fold as u64]);
        let model = train(&spec, &pick(&ztr), &train_labels, &col_names)?;
        let s = pick(&zva)
            .iter()
            .map(|r| model.score(r).map(|v| (v, model.label_for(v, cfg.threshold))))
            .collect::<Result<Vec<_>>>()?;
        scores.push(s);
    }
    Ok(FoldResult {
        detail,
        labels: vec![val_labels; n_variants],
        scores,
        validation: split.validation,
    })
}

fn assign_folds(slices: &[LabeledSlice], cfg: &CvConfig) -> Result<FoldAssignment> {
    cfg.validate()?;
    let mut patients: BTreeMap<&str, u8> = BTreeMap::new();
    for s in slices {
        if let Some(&l) = patients.get(s.patient_id.as_str()) {
            if l != s.label {
                return Err(Error::InvalidParameter(format!("patient {} has mixed labels", s.patient_id)));
            }
        }
        patients.insert(&s.patient_id, s.label);
    }
    if !patients.values().any(|&l| l == 1) {
        return Err(Error::SingleClass("no positive patient in the dataset".into()));
    }
    let plist: Vec<PatientLabel> = patients
        .iter()
        .map(|(p, &l)| PatientLabel {
            patient_id: p.to_string(),
            label: l,
        })
        .collect();
    make_folds(&plist, cfg.k, derive_seed(cfg.seed, &[0]))
}

/// The per-fold LASSO selections `cross_validate` would make, without
/// training any model.
pub fn select_folds(slices: &[LabeledSlice], cfg: &CvConfig, cache: &FeatureCache) -> Result<(FoldAssignment, Vec<FoldDetail>)> {
    let folds = assign_folds(slices, cfg)?;
    let mut cfg = cfg.clone();
    cfg.feature_selection = vec![true];
    let details = (0..cfg.k)
        .into_par_iter()
        .map(|f| run_fold(slices, &folds, f, &cfg, cache, false).map(|r| r.detail))
        .collect::<Result<_>>()?;
    Ok((folds, details))
}

/// Runs every (feature selection, model) variant over the patient folds.
/// Folds run concurrently; results are assembled in fold order.
pub fn cross_validate(slices: &[LabeledSlice], cfg: &CvConfig, cache: &FeatureCache) -> Result<CvOutcome> {
    let folds = assign_folds(slices, cfg)?;

    let results: Vec<FoldResult> = (0..cfg.k)
        .into_par_iter()
        .map(|f| run_fold(slices, &folds, f, cfg, cache, true))
        .collect::<Result<_>>()?;

    let mut reports = Vec::new();
    for (vi, (fs, mi)) in variants(cfg).into_iter().enumerate() {
        let mut predictions = Vec::new();
        let mut fold_accuracy = Vec::with_capacity(cfg.k);
        let mut flags = Vec::new();
        let kind = cfg.models[mi].kind();
        for r in &results {
            let f = r.detail.fold;
            if let Some(why) = &r.detail.skipped {
                fold_accuracy.push(None);
                flags.push(format!("fold {f} skipped: {why}"));
                continue;
            }
            if !r.detail.validation_has_positive {
                flags.push(format!("fold {f} has no positive validation patient; per-fold AUC undefined, pooled AUC used"));
            }
            if fs {
                if let Some(sel) = &r.detail.selection {
                    if sel.fallback {
                        flags.push(format!("fold {f}: one-standard-error rule selected nothing; fell back to lambda {:e}", sel.lambda));
                    }
                }
            }
            let mut correct = 0;
            for ((s, &(score, predicted)), &label) in r.validation.iter().zip(&r.scores[vi]).zip(&r.labels[vi]) {
                correct += (predicted == label) as usize;
                predictions.push(SlicePrediction {
                    patient_id: s.patient_id.clone(),
                    slice_index: s.slice_index,
                    label,
                    score,
                    predicted,
                    fold: f,
                });
            }
            fold_accuracy.push(Some(correct as f64 / r.validation.len() as f64));
        }
        let evaluated: Vec<f64> = fold_accuracy.iter().flatten().copied().collect();
        if evaluated.is_empty() {
            return Err(Error::NotEnoughSamples("every fold was skipped".into()));
        }
        let (accuracy_mean, accuracy_variance) = mean_variance(&evaluated);
        let s: Vec<f64> = predictions.iter().map(|p| p.score).collect();
        let l: Vec<u8> = predictions.iter().map(|p| p.label).collect();
        let slice_accuracy = predictions.iter().filter(|p| p.predicted == p.label).count() as f64 / predictions.len() as f64;
        let auc = roc_auc(&s, &l)?;
        let auc_ci = bootstrap_ci(&s, &l, cfg.bootstrap_resamples, derive_seed(cfg.seed, &[3, vi as u64]))?;
        let roc = roc_curve(&s, &l)?;
        let patients = patient_aggregate(&predictions, cfg.aggregation, cfg.threshold)?;
        reports.push(EvalReport {
            model: kind,
            feature_selection: fs,
            fold_accuracy,
            accuracy_mean,
            accuracy_variance,
            slice_accuracy,
            auc,
            auc_ci,
            roc,
            predictions,
            patients,
            flags,
        });
    }
    Ok(CvOutcome {
        folds,
        fold_details: results.into_iter().map(|r| r.detail).collect(),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cohort(n: usize, pos: usize) -> Vec<PatientLabel> {
        (0..n)
            .map(|i| PatientLabel {
                patient_id: format!("P{i:02}"),
                label: (i < pos) as u8,
            })
            .collect()
    }

    #[test]
    fn folds_for_two_of_twenty_three() {
        let f = make_folds(&cohort(23, 2), 4, 7).unwrap();
        let mut sizes = f.sizes();
        sizes.sort();
        assert_eq!(sizes, vec![5, 6, 6, 6]);
        let mut pos_per_fold = vec![0; 4];
        for p in cohort(23, 2).iter().filter(|p| p.label == 1) {
            pos_per_fold[f.fold(&p.patient_id).unwrap()] += 1;
        }
        pos_per_fold.sort();
        assert_eq!(pos_per_fold, vec![0, 0, 1, 1]);
    }

    #[test]
    fn folds_divisible_case_and_determinism() {
        let c = cohort(8, 4);
        let f = make_folds(&c, 4, 1).unwrap();
        for fold in 0..4 {
            let pos = f.patients_in(fold).iter().filter(|p| c.iter().any(|q| &q.patient_id == *p && q.label == 1)).count();
            assert_eq!(pos, 1);
        }
        assert_eq!(f, make_folds(&c, 4, 1).unwrap());
        assert!(make_folds(&cohort(3, 1), 4, 1).is_err());
        assert!(make_folds(&cohort(8, 1), 1, 1).is_err());
    }

    #[test]
    fn auc_edge_cases() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.9, 0.1], &[0, 1]).unwrap(), 0.0);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass(_))));
    }

    #[test]
    fn roc_curve_ends_at_one() {
        let c = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!((c[0].fpr, c[0].tpr), (0.0, 0.0));
        let last = c.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        // trapezoid area equals the rank statistic
        let area: f64 = c.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum();
        assert!((area - 0.75).abs() < 1e-12);
    }

    #[test]
    fn separable_ci_is_degenerate() {
        let s: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let l: Vec<u8> = (0..20).map(|i| (i >= 10) as u8).collect();
        let ci = bootstrap_ci(&s, &l, 200, 3).unwrap();
        assert_eq!((ci.lo, ci.hi), (1.0, 1.0));
        assert_eq!(ci, bootstrap_ci(&s, &l, 200, 3).unwrap());
        assert!(bootstrap_ci(&s, &l, 50, 3).is_err());
    }

    fn sp(pid: &str, label: u8, score: f64) -> SlicePrediction {
        SlicePrediction {
            patient_id: pid.into(),
            slice_index: 0,
            label,
            score,
            predicted: (score >= 0.5) as u8,
            fold: 0,
        }
    }

    #[test]
    fn mean_rule_example() {
        let s = [sp("a", 1, 0.9), sp("a", 1, 0.8), sp("a", 1, 0.2)];
        let r = patient_aggregate(&s, AggregationRule::Mean, 0.5).unwrap();
        assert_eq!(r.patients[0].predicted, 1);
        assert!((r.patients[0].mean_score - 0.6333333333333333).abs() < 1e-12);
        assert!(patient_aggregate(&[], AggregationRule::Mean, 0.5).is_err());
    }

    #[test]
    fn rules_diverge_on_hand_built_case() {
        // a: one confident positive slice outweighs two weak negatives under
        // the mean rule but loses the vote. b: two weak positives win the vote
        // but lose on the mean. c: agrees under both.
        let s = [
            sp("a", 1, 0.95),
            sp("a", 1, 0.45),
            sp("a", 1, 0.40),
            sp("b", 0, 0.55),
            sp("b", 0, 0.52),
            sp("b", 0, 0.05),
            sp("c", 0, 0.10),
            sp("c", 0, 0.20),
            sp("c", 0, 0.30),
        ];
        let mean = patient_aggregate(&s, AggregationRule::Mean, 0.5).unwrap();
        let vote = patient_aggregate(&s, AggregationRule::MajorityVote, 0.5).unwrap();
        let preds = |r: &PatientSummary| r.patients.iter().map(|p| p.predicted).collect::<Vec<_>>();
        assert_eq!(preds(&mean), vec![1, 0, 0]);
        assert_eq!(preds(&vote), vec![0, 1, 0]);
        assert_eq!(mean.accuracy, 1.0);
        assert!((vote.accuracy - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn population_variance() {
        let (m, v) = mean_variance(&[1.0, 0.5, 0.75, 0.75]);
        assert_eq!(m, 0.75);
        assert!((v - 0.03125).abs() < 1e-15);
    }
}
