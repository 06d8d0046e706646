//! Cross-validated evaluation with pooled and per-user reporting.

use super::{
    train_classifier, train_regressor, ClassificationSet, ClassifierSpec, RegressionSet,
    RegressorSpec, TrainError,
};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvScheme {
    /// One fold per sample. Exact but quadratic in training cost.
    LeaveOneOut,
    /// Seeded shuffle, then k near-equal folds. Predictions are pooled
    /// across folds before metrics are computed.
    KFold(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{have} samples cannot support this scheme (needs {need})")]
    TooFewSamples { have: usize, need: usize },
    #[error("fold count {0} is not meaningful")]
    BadFolds(usize),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("user {user} has only {n} samples, too few for the scheme")]
    GroupTooSmall { user: u32, n: usize },
}

/// Coordinate recovery quality in pixels. `rmse_px` is the root mean
/// squared Euclidean error; `mean_px` the mean Euclidean error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegMetrics {
    pub rmse_px: f64,
    pub mean_px: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub labels: Vec<char>,
    /// `counts[truth][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

impl Confusion {
    /// The most frequently confused (truth, predicted) pairs, diagonal
    /// excluded, heaviest first.
    pub fn top_confusions(&self, limit: usize) -> Vec<(char, char, usize)> {
        let mut pairs = Vec::new();
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &c) in row.iter().enumerate() {
                if t != p && c > 0 {
                    pairs.push((self.labels[t], self.labels[p], c));
                }
            }
        }
        pairs.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        pairs.truncate(limit);
        pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClsMetrics {
    pub accuracy: f64,
    pub n: usize,
    pub confusion: Confusion,
}

/// Fold layout: `folds[i]` is the test index set of fold i. Train sets
/// are the complements, in original order.
fn make_folds(n: usize, cv: CvScheme, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    match cv {
        CvScheme::LeaveOneOut => {
            if n < 2 {
                return Err(EvalError::TooFewSamples { have: n, need: 2 });
            }
            Ok((0..n).map(|i| vec![i]).collect())
        }
        CvScheme::KFold(k) => {
            if k < 2 {
                return Err(EvalError::BadFolds(k));
            }
            if n < k {
                return Err(EvalError::TooFewSamples { have: n, need: k });
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            Ok((0..k)
                .map(|i| order[i * n / k..(i + 1) * n / k].to_vec())
                .collect())
        }
    }
}

fn reg_subset(set: &RegressionSet, keep: &[bool]) -> RegressionSet {
    let mut out = RegressionSet {
        x: Vec::new(),
        y: Vec::new(),
        user: Vec::new(),
    };
    for (i, &k) in keep.iter().enumerate() {
        if k {
            out.x.push(set.x[i].clone());
            out.y.push(set.y[i]);
            out.user.push(set.user[i]);
        }
    }
    out
}

fn cls_subset(set: &ClassificationSet, keep: &[bool]) -> ClassificationSet {
    let mut out = ClassificationSet {
        x: Vec::new(),
        y: Vec::new(),
        user: Vec::new(),
        labels: set.labels.clone(),
        layout: set.layout.clone(),
    };
    for (i, &k) in keep.iter().enumerate() {
        if k {
            out.x.push(set.x[i].clone());
            out.y.push(set.y[i]);
            out.user.push(set.user[i]);
        }
    }
    out
}

/// Cross-validated coordinate metrics: for each fold, train on the rest
/// and predict the held-out clicks; all held-out errors pool into one
/// score.
pub fn evaluate_regressor(
    spec: &RegressorSpec,
    set: &RegressionSet,
    cv: CvScheme,
    seed: u64,
) -> Result<RegMetrics, EvalError> {
    let n = set.x.len();
    let folds = make_folds(n, cv, seed)?;
    let mut sq_sum = 0.0f64;
    let mut dist_sum = 0.0f64;
    for test in &folds {
        let mut keep = vec![true; n];
        for &i in test {
            keep[i] = false;
        }
        let train = reg_subset(set, &keep);
        let model = train_regressor(spec, &train, seed)?;
        for &i in test {
            let p = model.predict(&set.x[i]);
            let dx = p[0] - set.y[i][0];
            let dy = p[1] - set.y[i][1];
            let sq = dx * dx + dy * dy;
            sq_sum += sq;
            dist_sum += sq.sqrt();
        }
    }
    Ok(RegMetrics {
        rmse_px: (sq_sum / n as f64).sqrt(),
        mean_px: dist_sum / n as f64,
        n,
    })
}

/// Cross-validated key recovery: pooled accuracy plus the summed
/// confusion matrix over the layout's full label universe.
pub fn evaluate_classifier(
    spec: &ClassifierSpec,
    set: &ClassificationSet,
    cv: CvScheme,
    seed: u64,
) -> Result<ClsMetrics, EvalError> {
    let n = set.x.len();
    let folds = make_folds(n, cv, seed)?;
    let l = set.labels.len();
    let mut counts = vec![vec![0usize; l]; l];
    let mut correct = 0usize;
    for test in &folds {
        let mut keep = vec![true; n];
        for &i in test {
            keep[i] = false;
        }
        let train = cls_subset(set, &keep);
        let model = train_classifier(spec, &train, seed)?;
        for &i in test {
            let p = model.predict(&set.x[i]);
            counts[set.y[i]][p] += 1;
            if p == set.y[i] {
                correct += 1;
            }
        }
    }
    Ok(ClsMetrics {
        accuracy: correct as f64 / n as f64,
        n,
        confusion: Confusion {
            labels: set.labels.clone(),
            counts,
        },
    })
}

/// Pooled versus per-user training, the adaptation question: does a model
/// fitted to one person's habits beat one fitted to everybody's?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerUserReport {
    pub pooled: RegMetrics,
    pub per_user: BTreeMap<u32, RegMetrics>,
    /// Per-user RMSE averaged with user sample counts as weights;
    /// directly comparable to `pooled.rmse_px`.
    pub weighted_rmse_px: f64,
}

pub fn per_user_eval_reg(
    spec: &RegressorSpec,
    set: &RegressionSet,
    cv: CvScheme,
    seed: u64,
) -> Result<PerUserReport, EvalError> {
    let pooled = evaluate_regressor(spec, set, cv, seed)?;
    let mut users: Vec<u32> = set.user.clone();
    users.sort_unstable();
    users.dedup();
    let mut per_user = BTreeMap::new();
    let mut weighted = 0.0f64;
    for &u in &users {
        let keep: Vec<bool> = set.user.iter().map(|&x| x == u).collect();
        let sub = reg_subset(set, &keep);
        let metrics = evaluate_regressor(spec, &sub, cv, seed).map_err(|e| match e {
            EvalError::TooFewSamples { have, .. } => EvalError::GroupTooSmall { user: u, n: have },
            other => other,
        })?;
        weighted += metrics.rmse_px * metrics.n as f64;
        per_user.insert(u, metrics);
    }
    Ok(PerUserReport {
        weighted_rmse_px: weighted / set.x.len() as f64,
        pooled,
        per_user,
    })
}
