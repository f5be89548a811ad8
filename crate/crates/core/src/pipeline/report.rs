use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PipelineConfig, Stage, FORMAT_VERSION};
use crate::eval::{AggregationRule, CvOutcome, EvalReport};
use crate::models::ModelKind;

/// One model's row of the per-model accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: ModelKind,
    pub display_name: String,
    pub feature_selection: bool,
    pub accuracy_mean: f64,
    pub accuracy_variance: f64,
    pub auc: f64,
    pub auc_ci: [f64; 2],
    pub patient_accuracy: f64,
}

/// Pooled accuracy and AUC of one model with and without selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: ModelKind,
    pub display_name: String,
    pub acc_without: Option<f64>,
    pub auc_without: Option<f64>,
    pub acc_with: Option<f64>,
    pub auc_with: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub validation_patients: Vec<String>,
    pub validation_positive: bool,
    pub train_slices: usize,
    pub synthetic_slices: usize,
    pub validation_slices: usize,
    pub selected_features: Option<Vec<String>>,
    pub lambda: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub config_hash: String,
    pub master_seed: u64,
    pub cv_seed: u64,
    pub k: usize,
    pub patients: usize,
    pub positive_patients: usize,
    pub slices: usize,
    pub aggregation: AggregationRule,
    /// Five rows in model order, for the selection setting listed first in
    /// the config.
    pub accuracy_table: Vec<TableRow>,
    pub comparison: Vec<ComparisonRow>,
    pub folds: Vec<FoldSummary>,
    pub flags: Vec<String>,
}

fn find(outcome: &CvOutcome, model: ModelKind, fs: bool) -> Option<&EvalReport> {
    outcome.reports.iter().find(|r| r.model == model && r.feature_selection == fs)
}

impl Report {
    pub fn build(cfg: &PipelineConfig, outcome: &CvOutcome) -> Self {
        let mut models: Vec<ModelKind> = Vec::new();
        for r in &outcome.reports {
            if !models.contains(&r.model) {
                models.push(r.model);
            }
        }
        let primary = cfg.feature_selection.first().copied().unwrap_or(true);
        let accuracy_table = models
            .iter()
            .filter_map(|&m| find(outcome, m, primary))
            .map(|r| TableRow {
                model: r.model,
                display_name: r.model.display_name().to_string(),
                feature_selection: r.feature_selection,
                accuracy_mean: r.accuracy_mean,
                accuracy_variance: r.accuracy_variance,
                auc: r.auc,
                auc_ci: [r.auc_ci.lo, r.auc_ci.hi],
                patient_accuracy: r.patients.accuracy,
            })
            .collect();
        let comparison = models
            .iter()
            .map(|&m| {
                let (without, with) = (find(outcome, m, false), find(outcome, m, true));
                ComparisonRow {
                    model: m,
                    display_name: m.display_name().to_string(),
                    acc_without: without.map(|r| r.slice_accuracy),
                    auc_without: without.map(|r| r.auc),
                    acc_with: with.map(|r| r.slice_accuracy),
                    auc_with: with.map(|r| r.auc),
                }
            })
            .collect();
        let first = outcome.reports.first();
        let patients: BTreeSet<&str> = first
            .map(|r| r.predictions.iter().map(|p| p.patient_id.as_str()).collect())
            .unwrap_or_default();
        let positive: BTreeSet<&str> = first
            .map(|r| r.predictions.iter().filter(|p| p.label == 1).map(|p| p.patient_id.as_str()).collect())
            .unwrap_or_default();
        let folds = outcome
            .fold_details
            .iter()
            .map(|d| FoldSummary {
                fold: d.fold,
                validation_patients: d.validation_patients.clone(),
                validation_positive: d.validation_has_positive,
                train_slices: d.train_slices,
                synthetic_slices: d.synthetic_slices,
                validation_slices: d.validation_slices,
                selected_features: d.selection.as_ref().map(|s| s.names.clone()),
                lambda: d.selection.as_ref().map(|s| s.lambda),
                skipped: d.skipped.clone(),
            })
            .collect();
        let mut flags: Vec<String> = Vec::new();
        for r in &outcome.reports {
            for f in &r.flags {
                let line = format!("{}: {f}", r.variant_name());
                if !flags.contains(&line) {
                    flags.push(line);
                }
            }
        }
        Report {
            format_version: FORMAT_VERSION,
            config_hash: cfg.hash(),
            master_seed: cfg.seed,
            cv_seed: cfg.stage_seed(Stage::TrainEval),
            k: outcome.folds.k,
            patients: patients.len(),
            positive_patients: positive.len(),
            slices: first.map_or(0, |r| r.predictions.len()),
            aggregation: cfg.aggregation,
            accuracy_table,
            comparison,
            folds,
            flags,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

pub fn render_text(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Radiomics cross-validation report");
    let _ = writeln!(s, "config sha256: {}", r.config_hash);
    let _ = writeln!(s, "master seed: {}  cross-validation seed: {}", r.master_seed, r.cv_seed);
    let _ = writeln!(
        s,
        "{} folds, {} patients ({} positive), {} validation slices",
        r.k, r.patients, r.positive_patients, r.slices
    );
    let fs = r.accuracy_table.first().is_some_and(|t| t.feature_selection);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Per-model slice accuracy over folds ({})",
        if fs { "LASSO-selected features" } else { "all features" }
    );
    let _ = writeln!(
        s,
        "{:<22} {:>24} {:>26} {:>10}",
        "Model", "Accuracy (mean ± var)", "AUC (95% CI)", "Patient"
    );
    for t in &r.accuracy_table {
        let acc = format!("{:.4} ± {:.4}", t.accuracy_mean, t.accuracy_variance);
        let auc = format!("{:.4} ({:.4}, {:.4})", t.auc, t.auc_ci[0], t.auc_ci[1]);
        let _ = writeln!(
            s,
            "{:<22} {:>24} {:>26} {:>10.4}",
            t.display_name, acc, auc, t.patient_accuracy
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Pooled out-of-fold ACC/AUC with and without feature selection");
    let _ = writeln!(
        s,
        "{:<22} {:>10} {:>10} {:>10} {:>10}",
        "Model", "ACC", "AUC", "ACC+FS", "AUC+FS"
    );
    for c in &r.comparison {
        let _ = writeln!(
            s,
            "{:<22} {:>10} {:>10} {:>10} {:>10}",
            c.display_name,
            opt(c.acc_without),
            opt(c.auc_without),
            opt(c.acc_with),
            opt(c.auc_with)
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Folds");
    for f in &r.folds {
        let _ = write!(
            s,
            "fold {}: {} validation patients{}, {} validation slices, {} training slices ({} synthetic positive)",
            f.fold,
            f.validation_patients.len(),
            if f.validation_positive { "" } else { " (no positive)" },
            f.validation_slices,
            f.train_slices,
            f.synthetic_slices
        );
        if let (Some(names), Some(l)) = (&f.selected_features, f.lambda) {
            let _ = write!(s, ", {} features at lambda {l:.4e}", names.len());
        }
        if let Some(why) = &f.skipped {
            let _ = write!(s, ", skipped: {why}");
        }
        let _ = writeln!(s);
    }
    if !r.flags.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "Flags");
        for f in &r.flags {
            let _ = writeln!(s, "- {f}");
        }
    }
    s
}
