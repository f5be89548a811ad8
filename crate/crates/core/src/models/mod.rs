//! Five classical classifiers behind one train/score interface.
//!
//! Training canonicalizes feature columns by sorting on feature name, so a
//! consistent permutation of the columns of training and scoring inputs
//! yields the same model.

mod adaboost;
mod knn;
mod linear;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use adaboost::AdaboostModel;
pub use knn::KnnModel;
pub use linear::{LogisticModel, PlattLink, SvmModel};
pub use tree::{DecisionTree, ForestModel};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm,
    Logistic,
    Knn,
    RandomForest,
    Adaboost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Svm,
        ModelKind::Logistic,
        ModelKind::Knn,
        ModelKind::RandomForest,
        ModelKind::Adaboost,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Logistic => "logistic",
            ModelKind::Knn => "knn",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Adaboost => "adaboost",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            ModelKind::Svm => "SVM",
            ModelKind::Logistic => "Logistic Regression",
            ModelKind::Knn => "KNN",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::Adaboost => "AdaBoost",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyper {
    Svm {
        c: f64,
        epochs: usize,
    },
    Logistic {
        l2: f64,
        epochs: usize,
        learning_rate: f64,
    },
    Knn {
        k: usize,
        metric: Metric,
    },
    RandomForest {
        n_trees: usize,
        max_depth: usize,
        /// `None` means ceil(sqrt(p)).
        features_per_split: Option<usize>,
    },
    Adaboost {
        n_rounds: usize,
        stump_depth: usize,
    },
}

impl Hyper {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Svm => Hyper::Svm { c: 1.0, epochs: 200 },
            ModelKind::Logistic => Hyper::Logistic {
                l2: 1e-3,
                epochs: 500,
                learning_rate: 0.1,
            },
            ModelKind::Knn => Hyper::Knn {
                k: 5,
                metric: Metric::Euclidean,
            },
            ModelKind::RandomForest => Hyper::RandomForest {
                n_trees: 100,
                max_depth: 8,
                features_per_split: None,
            },
            ModelKind::Adaboost => Hyper::Adaboost {
                n_rounds: 50,
                stump_depth: 1,
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Hyper::Svm { .. } => ModelKind::Svm,
            Hyper::Logistic { .. } => ModelKind::Logistic,
            Hyper::Knn { .. } => ModelKind::Knn,
            Hyper::RandomForest { .. } => ModelKind::RandomForest,
            Hyper::Adaboost { .. } => ModelKind::Adaboost,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} must be positive")));
        match *self {
            Hyper::Svm { c, epochs } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad("svm C");
                }
                if epochs == 0 {
                    return bad("svm epochs");
                }
            }
            Hyper::Logistic {
                l2,
                epochs,
                learning_rate,
            } => {
                if !(l2 >= 0.0 && l2.is_finite()) {
                    return Err(Error::InvalidParameter("logistic l2 must be >= 0".into()));
                }
                if epochs == 0 {
                    return bad("logistic epochs");
                }
                if !(learning_rate > 0.0 && learning_rate.is_finite()) {
                    return bad("logistic learning rate");
                }
            }
            Hyper::Knn { k, .. } => {
                if k == 0 {
                    return bad("knn k");
                }
            }
            Hyper::RandomForest {
                n_trees,
                max_depth,
                features_per_split,
            } => {
                if n_trees == 0 {
                    return bad("forest n_trees");
                }
                if max_depth == 0 {
                    return bad("forest max_depth");
                }
                if features_per_split == Some(0) {
                    return bad("forest features_per_split");
                }
            }
            Hyper::Adaboost { n_rounds, stump_depth } => {
                if n_rounds == 0 {
                    return bad("adaboost n_rounds");
                }
                if stump_depth == 0 {
                    return bad("adaboost stump_depth");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hyper: Hyper,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelSpec {
            hyper: Hyper::default_for(kind),
            seed,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.hyper.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Svm(SvmModel),
    Logistic(LogisticModel),
    Knn(KnnModel),
    RandomForest(ForestModel),
    Adaboost(AdaboostModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    /// Feature names in the order scoring rows must follow.
    pub feature_names: Vec<String>,
    /// Position in the scoring row of each canonical (name-sorted) column.
    order: Vec<usize>,
    pub params: Params,
}

fn validate_training(x: &[Vec<f64>], y: &[u8], names: &[String]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidDims(format!("{} rows vs {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::NotEnoughSamples(format!("training needs at least 2 rows, got {}", x.len())));
    }
    if let Some(l) = y.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidParameter(format!("label {l} is not binary")));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass(format!("{} rows, {pos} positive", y.len())));
    }
    let p = names.len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != p {
            return Err(Error::FeatureMismatch(format!("row {i} has {} values for {p} names", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("training row {i}")));
        }
    }
    Ok(())
}

pub fn train(spec: &ModelSpec, x: &[Vec<f64>], y: &[u8], names: &[String]) -> Result<TrainedModel> {
    spec.hyper.validate()?;
    validate_training(x, y, names)?;
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    if order.windows(2).any(|w| names[w[0]] == names[w[1]]) {
        return Err(Error::FeatureMismatch("duplicate feature names".into()));
    }
    let xc: Vec<Vec<f64>> = x.iter().map(|r| order.iter().map(|&j| r[j]).collect()).collect();
    let params = match spec.hyper {
        Hyper::Logistic {
            l2,
            epochs,
            learning_rate,
        } => Params::Logistic(LogisticModel::fit(&xc, y, l2, epochs, learning_rate)),
        Hyper::Svm { c, epochs } => Params::Svm(SvmModel::fit(&xc, y, c, epochs, spec.seed)),
        Hyper::Knn { k, metric } => Params::Knn(KnnModel::fit(&xc, y, k, metric)?),
        Hyper::RandomForest {
            n_trees,
            max_depth,
            features_per_split,
        } => {
            let p = names.len().max(1);
            let m = features_per_split.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).min(p);
            Params::RandomForest(ForestModel::fit(&xc, y, n_trees, max_depth, m, spec.seed))
        }
        Hyper::Adaboost { n_rounds, stump_depth } => Params::Adaboost(AdaboostModel::fit(&xc, y, n_rounds, stump_depth)),
    };
    Ok(TrainedModel {
        kind: spec.kind(),
        feature_names: names.to_vec(),
        order,
        params,
    })
}

impl TrainedModel {
    pub fn check_names(&self, names: &[String]) -> Result<()> {
        if names != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch(format!(
                "model trained on {} features, scoring input has {} (names or order differ)",
                self.feature_names.len(),
                names.len()
            )));
        }
        Ok(())
    }

    /// Score in [0, 1] for a row laid out like `feature_names`.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.feature_names.len() {
            return Err(Error::FeatureMismatch(format!(
                "expected {} features, got {}",
                self.feature_names.len(),
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scoring row".into()));
        }
        let xc: Vec<f64> = self.order.iter().map(|&j| row[j]).collect();
        let s = match &self.params {
            Params::Logistic(m) => m.score(&xc),
            Params::Svm(m) => m.score(&xc),
            Params::Knn(m) => m.score(&xc),
            Params::RandomForest(m) => m.score(&xc),
            Params::Adaboost(m) => m.score(&xc),
        };
        Ok(s.clamp(0.0, 1.0))
    }

    pub fn score_named(&self, names: &[String], row: &[f64]) -> Result<f64> {
        self.check_names(names)?;
        self.score(row)
    }

    /// Label for a score: `score >= threshold`, except that an exact knn
    /// vote tie goes to the negative class.
    pub fn label_for(&self, score: f64, threshold: f64) -> u8 {
        let tie = matches!(self.params, Params::Knn(_)) && score == threshold;
        (score >= threshold && !tie) as u8
    }

    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(self.label_for(self.score(row)?, DEFAULT_THRESHOLD))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
