//! Configuration and stage runners behind the `mna` command line. Every
//! stage writes into `<work_dir>/<stage>/` through a staging directory that
//! is renamed into place only when the stage succeeds.

mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{AugmentPolicy, LabeledSlice};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, select_folds, AggregationRule, CvConfig, CvOutcome, FeatureCache, SelectionConfig};
use crate::models::{Hyper, ModelKind, ModelSpec, DEFAULT_THRESHOLD};
use crate::phantom::{generate_cohort, PhantomParams, MANIFEST_NAME};
use crate::radiomics::{extract_all, feature_names, Binning, ExtractionParams};
use crate::roi::{crop_roi_sized, export_channel_image, read_manifest, synth_channels, ChannelMode, RoiStack, CROP_SIZE};
use crate::seed::{derive_seed, stage_seed};
use crate::volume::{hu_to_gray, read_volume, read_volume_as, resample_isotropic, write_volume, GrayVolume, Window};

pub use report::{render_text, Report, TableRow, ComparisonRow};

pub const FORMAT_VERSION: u32 = 1;
pub const ROI_INDEX: &str = "rois.csv";
pub const FEATURES_CSV: &str = "features.csv";
pub const OUTCOME_JSON: &str = "outcome.json";
pub const RUN_LOG: &str = "run_log.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Phantom,
    Preprocess,
    Extract,
    Select,
    TrainEval,
    ExportChannels,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Phantom,
        Stage::Preprocess,
        Stage::Extract,
        Stage::Select,
        Stage::TrainEval,
        Stage::ExportChannels,
        Stage::Report,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Phantom => "phantom",
            Stage::Preprocess => "preprocess",
            Stage::Extract => "extract",
            Stage::Select => "select",
            Stage::TrainEval => "train-eval",
            Stage::ExportChannels => "export-channels",
            Stage::Report => "report",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Cohort manifest; defaults to the phantom stage's manifest.
    pub manifest: Option<PathBuf>,
    pub work_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            manifest: None,
            work_dir: PathBuf::from("work"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    /// One feature row per 2D slice ROI.
    PerSlice,
    /// One feature row per 3D ROI stack.
    PerStack,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub bin_width: Option<f64>,
    /// Fixed bin count; excludes `bin_width`.
    pub bin_count: Option<usize>,
    pub distance: usize,
    /// Row granularity of the `extract` stage. Cross-validation always
    /// classifies slices.
    pub mode: ExtractionMode,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            bin_width: None,
            bin_count: None,
            distance: 1,
            mode: ExtractionMode::PerSlice,
        }
    }
}

impl ExtractionConfig {
    pub fn params(&self) -> Result<ExtractionParams> {
        let binning = match (self.bin_width, self.bin_count) {
            (Some(_), Some(_)) => return Err(Error::Config("set either bin_width or bin_count, not both".into())),
            (_, Some(n)) => Binning::Count(n),
            (Some(w), None) => Binning::Width(w),
            (None, None) => ExtractionParams::default().binning,
        };
        let p = ExtractionParams {
            binning,
            distance: self.distance,
        };
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub enabled: bool,
    pub target_ratio: f64,
    pub noise_sigma: f64,
    pub transform_majority: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let d = AugmentPolicy::default();
        AugmentConfig {
            enabled: true,
            target_ratio: d.target_ratio,
            noise_sigma: d.noise_sigma,
            transform_majority: d.transform_majority,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    /// The stage seed replaces `phantom.seed`, and `target_spacing`
    /// replaces `phantom.target_spacing`.
    pub phantom: PhantomParams,
    pub window: Window,
    pub target_spacing: f64,
    pub crop_size: usize,
    pub augment: AugmentConfig,
    pub extraction: ExtractionConfig,
    pub selection: SelectionConfig,
    pub models: Vec<Hyper>,
    pub feature_selection: Vec<bool>,
    pub k: usize,
    pub threshold: f64,
    pub bootstrap_resamples: usize,
    pub aggregation: AggregationRule,
    pub channel_mode: ChannelMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            paths: Paths::default(),
            phantom: PhantomParams::default(),
            window: Window::default(),
            target_spacing: 1.0,
            crop_size: CROP_SIZE,
            augment: AugmentConfig::default(),
            extraction: ExtractionConfig::default(),
            selection: SelectionConfig::default(),
            models: ModelKind::ALL.iter().map(|&k| Hyper::default_for(k)).collect(),
            feature_selection: vec![true, false],
            k: crate::eval::DEFAULT_FOLDS,
            threshold: DEFAULT_THRESHOLD,
            bootstrap_resamples: crate::eval::DEFAULT_BOOTSTRAP,
            aggregation: AggregationRule::Mean,
            channel_mode: ChannelMode::Replicate,
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config; relative paths are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.work_dir = resolve(base, &cfg.paths.work_dir);
        cfg.paths.manifest = cfg.paths.manifest.as_deref().map(|m| resolve(base, m));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// SHA-256 of the settings with `paths` cleared, so relocating the work
    /// directory keeps the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn work_dir(&self) -> &Path {
        &self.paths.work_dir
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.paths.work_dir.join(stage.as_str())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.paths
            .manifest
            .clone()
            .unwrap_or_else(|| self.stage_dir(Stage::Phantom).join(MANIFEST_NAME))
    }

    pub fn stage_seed(&self, stage: Stage) -> u64 {
        match stage {
            // selection must match the selection inside train-eval
            Stage::Select | Stage::TrainEval => stage_seed(self.seed, "cross-validation"),
            s => stage_seed(self.seed, s.as_str()),
        }
    }

    pub fn phantom_params(&self) -> PhantomParams {
        PhantomParams {
            seed: self.stage_seed(Stage::Phantom),
            target_spacing: self.target_spacing,
            ..self.phantom.clone()
        }
    }

    pub fn cv_config(&self) -> Result<CvConfig> {
        let seed = self.stage_seed(Stage::TrainEval);
        let models = self
            .models
            .iter()
            .enumerate()
            .map(|(i, &hyper)| ModelSpec {
                hyper,
                seed: derive_seed(seed, &[4, i as u64]),
            })
            .collect();
        let mut cv = CvConfig::new(models, seed);
        cv.augment = self.augment.enabled.then(|| AugmentPolicy {
            seed: derive_seed(seed, &[1]),
            target_ratio: self.augment.target_ratio,
            noise_sigma: self.augment.noise_sigma,
            transform_majority: self.augment.transform_majority,
        });
        cv.extraction = self.extraction.params()?;
        cv.pixel_spacing = self.target_spacing;
        cv.selection = self.selection;
        cv.feature_selection = self.feature_selection.clone();
        cv.k = self.k;
        cv.threshold = self.threshold;
        cv.bootstrap_resamples = self.bootstrap_resamples;
        cv.aggregation = self.aggregation;
        Ok(cv)
    }

    /// Settings checks plus the upstream inputs `stage` needs.
    pub fn validate_for(&self, stage: Stage) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.target_spacing > 0.0 && self.target_spacing.is_finite()) {
            return bad(format!("target_spacing must be > 0, got {}", self.target_spacing));
        }
        if self.crop_size == 0 {
            return bad("crop_size must be >= 1".into());
        }
        self.window.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.cv_config()?.validate().map_err(|e| Error::Config(e.to_string()))?;
        let need = |p: PathBuf| -> Result<()> {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::MissingArtifact(p))
            }
        };
        match stage {
            Stage::Phantom => self.phantom_params().validate().map_err(|e| Error::Config(e.to_string())),
            Stage::Preprocess => need(self.manifest_path()),
            Stage::Extract | Stage::Select | Stage::TrainEval | Stage::ExportChannels => {
                need(self.stage_dir(Stage::Preprocess).join(ROI_INDEX))
            }
            Stage::Report => need(self.stage_dir(Stage::TrainEval).join(OUTCOME_JSON)),
        }
    }
}

/// What a finished stage left behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub format_version: u32,
    pub stage: Stage,
    pub master_seed: u64,
    pub stage_seed: u64,
    pub config_hash: String,
    /// Files written, relative to the stage directory, sorted.
    pub artifacts: Vec<String>,
}

fn list_files(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let p = e.map_err(|e| Error::io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).expect("under dir").to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Runs `body` against a fresh staging directory and moves it to the stage
/// directory on success; on failure the staging directory is removed.
fn staged(cfg: &PipelineConfig, stage: Stage, body: impl FnOnce(&Path) -> Result<()>) -> Result<RunLog> {
    let work = cfg.work_dir();
    fs::create_dir_all(work).map_err(|e| Error::io(work, e))?;
    let tmp = work.join(format!(".{}.partial", stage.as_str()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let result = body(&tmp).and_then(|_| {
        let mut artifacts = list_files(&tmp)?;
        artifacts.push(RUN_LOG.to_string());
        artifacts.sort();
        let log = RunLog {
            format_version: FORMAT_VERSION,
            stage,
            master_seed: cfg.seed,
            stage_seed: cfg.stage_seed(stage),
            config_hash: cfg.hash(),
            artifacts,
        };
        write_json(&tmp.join(RUN_LOG), &log)?;
        Ok(log)
    });
    match result {
        Ok(log) => {
            let dest = cfg.stage_dir(stage);
            if dest.exists() {
                fs::remove_dir_all(&dest).map_err(|e| Error::io(&dest, e))?;
            }
            fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))?;
            Ok(log)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            Err(e)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One row of the preprocess stage's ROI index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiRecord {
    pub patient_id: String,
    pub label: u8,
    /// Header path relative to the preprocess directory.
    pub volume: String,
    pub slices: usize,
}

/// Loads the ROI stacks written by `preprocess`, in index order.
pub fn load_rois(cfg: &PipelineConfig) -> Result<Vec<RoiStack>> {
    let dir = cfg.stage_dir(Stage::Preprocess);
    let index = dir.join(ROI_INDEX);
    if !index.exists() {
        return Err(Error::MissingArtifact(index));
    }
    let mut r = csv::Reader::from_path(&index)?;
    let records: Vec<RoiRecord> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    records
        .par_iter()
        .map(|rec| {
            let image: GrayVolume = read_volume_as(&dir.join(&rec.volume))?;
            Ok(RoiStack {
                patient_id: rec.patient_id.clone(),
                label: rec.label,
                mask: crate::roi::CuboidMask { dims: image.dims() },
                image,
            })
        })
        .collect()
}

pub fn load_slices(cfg: &PipelineConfig) -> Result<Vec<LabeledSlice>> {
    Ok(load_rois(cfg)?.iter().flat_map(LabeledSlice::from_stack).collect())
}

fn run_phantom(cfg: &PipelineConfig) -> Result<RunLog> {
    let p = cfg.phantom_params();
    staged(cfg, Stage::Phantom, |dir| generate_cohort(&p, dir).map(|_| ()))
}

fn run_preprocess(cfg: &PipelineConfig) -> Result<RunLog> {
    let manifest = cfg.manifest_path();
    let base = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let records = read_manifest(&manifest)?;
    if records.is_empty() {
        return Err(Error::Empty(format!("manifest {} has no rows", manifest.display())));
    }
    staged(cfg, Stage::Preprocess, |dir| {
        let rois = records
            .par_iter()
            .map(|rec| {
                let ct = read_volume(&base.join(&rec.volume))?;
                let iso = resample_isotropic(&ct, cfg.target_spacing)?;
                let gray = hu_to_gray(&iso, cfg.window)?;
                let stack = crop_roi_sized(&gray, &rec.annotation(), cfg.crop_size)?;
                let name = format!("{}.hdr", rec.patient_id);
                write_volume(&stack.image, &dir.join(&name))?;
                Ok(RoiRecord {
                    patient_id: rec.patient_id.clone(),
                    label: rec.label,
                    volume: name,
                    slices: stack.slice_count(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let path = dir.join(ROI_INDEX);
        let mut w = csv::Writer::from_path(&path)?;
        for r in &rois {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    })
}

fn run_extract(cfg: &PipelineConfig) -> Result<RunLog> {
    let params = cfg.extraction.params()?;
    let rois = load_rois(cfg)?;
    staged(cfg, Stage::Extract, |dir| {
        let rows: Vec<(String, u8, Option<usize>, Vec<f64>)> = match cfg.extraction.mode {
            ExtractionMode::PerSlice => {
                let cache = FeatureCache::new();
                let slices: Vec<LabeledSlice> = rois.iter().flat_map(LabeledSlice::from_stack).collect();
                slices
                    .par_iter()
                    .map(|s| {
                        let f = cache.features(s, &params, cfg.target_spacing)?;
                        Ok((s.patient_id.clone(), s.label, Some(s.slice_index), f.as_ref().clone()))
                    })
                    .collect::<Result<_>>()?
            }
            ExtractionMode::PerStack => rois
                .par_iter()
                .map(|r| Ok((r.patient_id.clone(), r.label, None, extract_all(&r.image, &params)?.values)))
                .collect::<Result<_>>()?,
        };
        let mut text = String::from("patient_id,slice_index,label");
        for n in feature_names() {
            text.push(',');
            text.push_str(&n);
        }
        text.push('\n');
        for (pid, label, slice, values) in rows {
            let _ = write!(text, "{pid},{},{label}", slice.map(|s| s.to_string()).unwrap_or_default());
            for v in values {
                let _ = write!(text, ",{v}");
            }
            text.push('\n');
        }
        write_text(&dir.join(FEATURES_CSV), &text)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FoldSelection {
    fold: usize,
    train_patients: Vec<String>,
    validation_patients: Vec<String>,
    selection: Option<crate::selection::SelectedFeatures>,
    skipped: Option<String>,
}

fn run_select(cfg: &PipelineConfig, cache: &FeatureCache) -> Result<RunLog> {
    let cv = cfg.cv_config()?;
    let slices = load_slices(cfg)?;
    let (folds, details) = select_folds(&slices, &cv, cache)?;
    staged(cfg, Stage::Select, |dir| {
        write_json(&dir.join("folds.json"), &folds)?;
        for d in details {
            let out = FoldSelection {
                fold: d.fold,
                train_patients: d.train_patients,
                validation_patients: d.validation_patients,
                selection: d.selection,
                skipped: d.skipped,
            };
            write_json(&dir.join(format!("fold_{}.json", out.fold)), &out)?;
        }
        Ok(())
    })
}

fn run_train_eval(cfg: &PipelineConfig, cache: &FeatureCache) -> Result<RunLog> {
    let cv = cfg.cv_config()?;
    let slices = load_slices(cfg)?;
    let outcome = cross_validate(&slices, &cv, cache)?;
    staged(cfg, Stage::TrainEval, |dir| {
        write_json(&dir.join(OUTCOME_JSON), &outcome)?;
        let mut pred = String::from("variant,patient_id,slice_index,fold,label,score,predicted\n");
        let mut roc = String::from("variant,fpr,tpr,threshold\n");
        for r in &outcome.reports {
            let v = r.variant_name();
            for p in &r.predictions {
                let _ = writeln!(
                    pred,
                    "{v},{},{},{},{},{},{}",
                    p.patient_id, p.slice_index, p.fold, p.label, p.score, p.predicted
                );
            }
            for pt in &r.roc {
                let t = pt.threshold.map(|t| t.to_string()).unwrap_or_default();
                let _ = writeln!(roc, "{v},{},{},{t}", pt.fpr, pt.tpr);
            }
        }
        write_text(&dir.join("predictions.csv"), &pred)?;
        write_text(&dir.join("roc.csv"), &roc)
    })
}

fn run_export(cfg: &PipelineConfig) -> Result<RunLog> {
    let rois = load_rois(cfg)?;
    let mode = cfg.channel_mode;
    staged(cfg, Stage::ExportChannels, |dir| {
        let sub = dir.join(mode.as_str());
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        rois.par_iter().try_for_each(|r| {
            for i in 0..r.slice_count() {
                let img = synth_channels(r, i, mode)?;
                export_channel_image(&img, &r.patient_id, r.label, &sub)?;
            }
            Ok(())
        })
    })
}

pub fn read_outcome(cfg: &PipelineConfig) -> Result<CvOutcome> {
    let path = cfg.stage_dir(Stage::TrainEval).join(OUTCOME_JSON);
    if !path.exists() {
        return Err(Error::MissingArtifact(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn run_report(cfg: &PipelineConfig) -> Result<RunLog> {
    let outcome = read_outcome(cfg)?;
    let report = Report::build(cfg, &outcome);
    staged(cfg, Stage::Report, |dir| {
        write_json(&dir.join("report.json"), &report)?;
        write_text(&dir.join("report.txt"), &render_text(&report))
    })
}

/// Validates and runs one stage. `cache` lets consecutive stages share
/// extracted features.
pub fn run_stage_with(cfg: &PipelineConfig, stage: Stage, cache: &FeatureCache) -> Result<RunLog> {
    cfg.validate_for(stage)?;
    match stage {
        Stage::Phantom => run_phantom(cfg),
        Stage::Preprocess => run_preprocess(cfg),
        Stage::Extract => run_extract(cfg),
        Stage::Select => run_select(cfg, cache),
        Stage::TrainEval => run_train_eval(cfg, cache),
        Stage::ExportChannels => run_export(cfg),
        Stage::Report => run_report(cfg),
    }
}

pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<RunLog> {
    run_stage_with(cfg, stage, &FeatureCache::new())
}

/// Runs `stages` in order with a shared feature cache.
pub fn run_all(cfg: &PipelineConfig, stages: &[Stage]) -> Result<Vec<RunLog>> {
    let cache = FeatureCache::new();
    stages.iter().map(|&s| run_stage_with(cfg, s, &cache)).collect()
}
