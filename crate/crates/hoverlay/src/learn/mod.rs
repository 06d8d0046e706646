//! Inference models: from captured hover tails back to clicks and keys.
//!
//! Everything numeric is implemented here from first principles on plain
//! `Vec<f64>` rows: ordinary least squares, lasso coordinate descent,
//! CART trees, and bagged/randomized forests. The models are small enough
//! that transparent implementations beat dependencies: every estimator is
//! deterministic given its seed, and every training routine is pure.

mod eval;
mod forest;
mod linear;
mod serde_model;
mod tree;

pub use eval::{
    evaluate_classifier, evaluate_regressor, per_user_eval_reg, ClsMetrics, Confusion, CvScheme,
    EvalError, PerUserReport, RegMetrics,
};
pub use forest::{ClsForest, RegForest};
pub use linear::{lasso_fit, ols_fit, solve_linear_system, AxisLinear, LassoFit};
pub use serde_model::{
    load_classifier, load_regressor, save_classifier, save_regressor, ModelIoError,
};
pub use tree::{ClsTree, RegTree, TreeParams};

use crate::attacker::CapturedClick;
use crate::events::Click;
use crate::layout::KeyboardLayout;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which parts of a capture become model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMode {
    /// Hover coordinates only: `[x1, y1, .., xk, yk]`, 2k features.
    CoordsOnly,
    /// Coordinates then hover delays: `[x1, y1, .., xk, yk, dt1, .., dtk]`,
    /// 3k features.
    CoordsAndDt,
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("capture holds no hover samples")]
    EmptyCapture,
    #[error("feature width k must be positive")]
    ZeroWidth,
}

/// Fixed-width feature vector from a capture's first `k` hovers. Captures
/// with fewer than `k` samples repeat their last sample; the first two
/// features are always the first hover's coordinates, which is what the
/// baseline predictors read.
pub fn featurize(c: &CapturedClick, k: usize, mode: FeatureMode) -> Result<Vec<f64>, FeatureError> {
    if k == 0 {
        return Err(FeatureError::ZeroWidth);
    }
    if c.hovers.is_empty() {
        return Err(FeatureError::EmptyCapture);
    }
    let pick = |i: usize| c.hovers[i.min(c.hovers.len() - 1)];
    let mut f = Vec::with_capacity(3 * k);
    for i in 0..k {
        let h = pick(i);
        f.push(h.x);
        f.push(h.y);
    }
    if mode == FeatureMode::CoordsAndDt {
        for i in 0..k {
            f.push(pick(i).dt_ms as f64);
        }
    }
    Ok(f)
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("pair {index}: {source}")]
    Feature { index: usize, source: FeatureError },
    #[error("dataset is empty")]
    Empty,
    #[error("pair {index} has no key label, cannot build a classification target")]
    UnlabeledClick { index: usize },
    #[error("pair {index}: label {label:?} is not on the keyboard")]
    UnknownLabel { index: usize, label: char },
}

/// Supervised coordinates task: features per click plus the true touch
/// point, grouped by user for per-user evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<[f64; 2]>,
    pub user: Vec<u32>,
}

/// Supervised key task; `y` indexes into `labels`, which is the layout's
/// full key list so every predictable key exists in the universe.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub user: Vec<u32>,
    pub labels: Vec<char>,
    pub layout: KeyboardLayout,
}

pub fn build_regression_set(
    pairs: &[(&CapturedClick, &Click)],
    k: usize,
    mode: FeatureMode,
) -> Result<RegressionSet, DatasetError> {
    if pairs.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut set = RegressionSet {
        x: Vec::with_capacity(pairs.len()),
        y: Vec::with_capacity(pairs.len()),
        user: Vec::with_capacity(pairs.len()),
    };
    for (index, (cap, truth)) in pairs.iter().enumerate() {
        let f =
            featurize(cap, k, mode).map_err(|source| DatasetError::Feature { index, source })?;
        set.x.push(f);
        set.y.push([truth.x, truth.y]);
        set.user.push(cap.user_id as u32);
    }
    Ok(set)
}

pub fn build_classification_set(
    pairs: &[(&CapturedClick, &Click)],
    layout: &KeyboardLayout,
    k: usize,
    mode: FeatureMode,
) -> Result<ClassificationSet, DatasetError> {
    if pairs.is_empty() {
        return Err(DatasetError::Empty);
    }
    let labels: Vec<char> = layout.labels().collect();
    let mut set = ClassificationSet {
        x: Vec::with_capacity(pairs.len()),
        y: Vec::with_capacity(pairs.len()),
        user: Vec::with_capacity(pairs.len()),
        labels: labels.clone(),
        layout: layout.clone(),
    };
    for (index, (cap, truth)) in pairs.iter().enumerate() {
        let label = truth
            .key_label
            .ok_or(DatasetError::UnlabeledClick { index })?;
        let y = labels
            .iter()
            .position(|&l| l == label)
            .ok_or(DatasetError::UnknownLabel { index, label })?;
        let f =
            featurize(cap, k, mode).map_err(|source| DatasetError::Feature { index, source })?;
        set.x.push(f);
        set.y.push(y);
        set.user.push(cap.user_id as u32);
    }
    Ok(set)
}

/// Coordinate regressors. `Baseline` predicts the first captured hover
/// position unchanged: the naive attack, and the yardstick everything
/// else must beat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegressorSpec {
    Baseline,
    Ols,
    Lasso {
        lambda: f64,
    },
    Tree {
        max_depth: usize,
        min_leaf: usize,
    },
    Forest {
        n_trees: usize,
        max_depth: usize,
        min_leaf: usize,
        bootstrap: bool,
        /// Features considered per split; None picks ceil(d/3).
        mtry: Option<usize>,
    },
}

/// Key classifiers. `Baseline` snaps the first hover to the nearest key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassifierSpec {
    Baseline,
    Tree {
        max_depth: usize,
        min_leaf: usize,
    },
    Forest {
        n_trees: usize,
        max_depth: usize,
        min_leaf: usize,
        bootstrap: bool,
        /// Features considered per split; None picks ceil(sqrt(d)).
        mtry: Option<usize>,
    },
    /// Bootstrap aggregation with every feature available at every split.
    Bagging {
        n_trees: usize,
        max_depth: usize,
        min_leaf: usize,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("feature rows have inconsistent widths")]
    RaggedRows,
    #[error("hyperparameter out of range: {0}")]
    BadHyper(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegModel {
    Baseline,
    /// One linear predictor per output axis.
    Linear {
        axes: [AxisLinear; 2],
    },
    Tree(RegTree),
    Forest(RegForest),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClsModel {
    pub labels: Vec<char>,
    pub kind: ClsModelKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClsModelKind {
    Baseline { layout: KeyboardLayout },
    Tree(ClsTree),
    Forest(ClsForest),
}

fn check_rows(x: &[Vec<f64>]) -> Result<usize, TrainError> {
    let d = x.first().ok_or(TrainError::Empty)?.len();
    if x.iter().any(|r| r.len() != d) {
        return Err(TrainError::RaggedRows);
    }
    Ok(d)
}

/// Trains a coordinate regressor. `seed` drives only the randomized
/// estimators; deterministic specs ignore it.
pub fn train_regressor(
    spec: &RegressorSpec,
    set: &RegressionSet,
    seed: u64,
) -> Result<RegModel, TrainError> {
    let d = check_rows(&set.x)?;
    match spec {
        RegressorSpec::Baseline => Ok(RegModel::Baseline),
        RegressorSpec::Ols => {
            let fit = |axis: usize| {
                let y: Vec<f64> = set.y.iter().map(|t| t[axis]).collect();
                ols_fit(&set.x, &y)
            };
            Ok(RegModel::Linear {
                axes: [fit(0), fit(1)],
            })
        }
        RegressorSpec::Lasso { lambda } => {
            if !lambda.is_finite() || *lambda < 0.0 {
                return Err(TrainError::BadHyper(format!("lambda {lambda}")));
            }
            let fit = |axis: usize| {
                let y: Vec<f64> = set.y.iter().map(|t| t[axis]).collect();
                lasso_fit(&set.x, &y, *lambda).model
            };
            Ok(RegModel::Linear {
                axes: [fit(0), fit(1)],
            })
        }
        RegressorSpec::Tree {
            max_depth,
            min_leaf,
        } => {
            let params = TreeParams::full(*max_depth, *min_leaf, d)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(RegModel::Tree(RegTree::fit(
                &set.x, &set.y, &params, &mut rng,
            )))
        }
        RegressorSpec::Forest {
            n_trees,
            max_depth,
            min_leaf,
            bootstrap,
            mtry,
        } => {
            let mtry = mtry.unwrap_or(d.div_ceil(3)).min(d);
            let params = TreeParams::new(*max_depth, *min_leaf, mtry)?;
            Ok(RegModel::Forest(RegForest::fit(
                &set.x, &set.y, *n_trees, &params, *bootstrap, seed,
            )?))
        }
    }
}

impl RegModel {
    pub fn predict(&self, x: &[f64]) -> [f64; 2] {
        match self {
            RegModel::Baseline => [x[0], x[1]],
            RegModel::Linear { axes } => [axes[0].predict(x), axes[1].predict(x)],
            RegModel::Tree(t) => t.predict(x),
            RegModel::Forest(f) => f.predict(x),
        }
    }
}

/// Trains a key classifier. The label universe and layout travel with the
/// model so predictions are self-describing.
pub fn train_classifier(
    spec: &ClassifierSpec,
    set: &ClassificationSet,
    seed: u64,
) -> Result<ClsModel, TrainError> {
    let d = check_rows(&set.x)?;
    let n_labels = set.labels.len();
    let kind = match spec {
        ClassifierSpec::Baseline => ClsModelKind::Baseline {
            layout: set.layout.clone(),
        },
        ClassifierSpec::Tree {
            max_depth,
            min_leaf,
        } => {
            let params = TreeParams::full(*max_depth, *min_leaf, d)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ClsModelKind::Tree(ClsTree::fit(&set.x, &set.y, n_labels, &params, &mut rng))
        }
        ClassifierSpec::Forest {
            n_trees,
            max_depth,
            min_leaf,
            bootstrap,
            mtry,
        } => {
            let mtry = mtry.unwrap_or((d as f64).sqrt().ceil() as usize).min(d);
            let params = TreeParams::new(*max_depth, *min_leaf, mtry)?;
            ClsModelKind::Forest(ClsForest::fit(
                &set.x, &set.y, n_labels, *n_trees, &params, *bootstrap, seed,
            )?)
        }
        ClassifierSpec::Bagging {
            n_trees,
            max_depth,
            min_leaf,
        } => {
            let params = TreeParams::full(*max_depth, *min_leaf, d)?;
            ClsModelKind::Forest(ClsForest::fit(
                &set.x, &set.y, n_labels, *n_trees, &params, true, seed,
            )?)
        }
    };
    Ok(ClsModel {
        labels: set.labels.clone(),
        kind,
    })
}

impl ClsModel {
    /// Predicted label index into `self.labels`.
    pub fn predict(&self, x: &[f64]) -> usize {
        match &self.kind {
            ClsModelKind::Baseline { layout } => {
                let key = layout.nearest_key(crate::geom::Point::new(x[0], x[1]));
                self.labels
                    .iter()
                    .position(|&l| l == key)
                    .expect("layout key missing from label universe")
            }
            ClsModelKind::Tree(t) => t.predict(x),
            ClsModelKind::Forest(f) => f.predict(x),
        }
    }

    pub fn predict_char(&self, x: &[f64]) -> char {
        self.labels[self.predict(x)]
    }
}
