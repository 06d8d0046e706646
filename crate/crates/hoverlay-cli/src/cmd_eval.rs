//! `hoverlay eval`: join capture streams to their ground-truth sessions
//! by (user, click index) and score inference models under
//! cross-validation, one CSV row per model and scope.

use std::collections::HashMap;
use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use hoverlay::attacker::CapturedClick;
use hoverlay::events::{Click, Session};
use hoverlay::layout::make_layout;
use hoverlay::learn::{
    build_classification_set, build_regression_set, evaluate_classifier, evaluate_regressor,
    per_user_eval_reg, ClassificationSet, CvScheme, EvalError, FeatureMode, TrainError,
};

use crate::error::{data, usage, CliError};
use crate::manifest::{self, CommandParams};
use crate::specs::{parse_cls_model, parse_cv, parse_reg_model};
use crate::table::{num, Csv};
use crate::util::{expand_inputs, load_captures, load_session, write_output};

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalParams {
    /// Capture streams: .cap files or directories of them.
    #[arg(long, num_args = 1.., required = true)]
    pub captures: Vec<String>,
    /// Ground truth: session files or directories of them.
    #[arg(long, num_args = 1.., required = true)]
    pub truth: Vec<String>,
    /// Model spec, repeatable: baseline, ols, lasso:lambda=0.1,
    /// tree:depth=12,leaf=4, forest:n=60,depth=12, bagging:n=60.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    /// reg recovers click coordinates, cls recovers key labels.
    #[arg(long, default_value = "reg")]
    pub task: String,
    /// Cross-validation scheme: loocv or kfold:K.
    #[arg(long, default_value = "kfold:10")]
    pub cv: String,
    /// Feature layout: coords or coords-dt.
    #[arg(long, default_value = "coords-dt")]
    pub features: String,
    /// Hover samples per feature vector.
    #[arg(long, default_value_t = 4)]
    pub k_hovers: usize,
    /// Additionally score each user separately.
    #[arg(long, default_value_t = false)]
    pub per_user: bool,
    /// Seed for fold shuffling and randomized learners.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Metrics CSV path.
    #[arg(long)]
    pub out: String,
}

fn eval_err(e: EvalError) -> CliError {
    match &e {
        EvalError::BadFolds(_) | EvalError::Train(TrainError::BadHyper(_)) => usage(e.to_string()),
        _ => data(e.to_string()),
    }
}

/// Pairs every capture with its truth click. Each (user, click index)
/// must resolve uniquely, which also means at most one truth session per
/// user and per run.
fn join<'a>(
    captures: &'a [CapturedClick],
    sessions: &'a [Session],
) -> Result<Vec<(&'a CapturedClick, &'a Click)>, CliError> {
    let mut truth: HashMap<(u16, u16), &Click> = HashMap::new();
    for session in sessions {
        let user = u16::try_from(session.user_id).map_err(|_| {
            data(format!(
                "user id {} does not fit the capture format",
                session.user_id
            ))
        })?;
        for (i, click) in session.truth_clicks.iter().enumerate() {
            let index = u16::try_from(i).map_err(|_| {
                data(format!(
                    "user {user} has more clicks than the capture format allows"
                ))
            })?;
            if truth.insert((user, index), click).is_some() {
                return Err(data(format!(
                    "user {user} click {index} appears in more than one truth session"
                )));
            }
        }
    }
    let mut pairs = Vec::with_capacity(captures.len());
    for capture in captures {
        let click = truth
            .get(&(capture.user_id, capture.click_index))
            .ok_or_else(|| {
                data(format!(
                    "capture (user {}, click {}) has no matching truth click",
                    capture.user_id, capture.click_index
                ))
            })?;
        pairs.push((capture, *click));
    }
    Ok(pairs)
}

/// The model column must survive the comma-separated format, so spec
/// strings are written with ';' between their key=value parts.
fn model_column(spec: &str) -> String {
    spec.replace(',', ";")
}

fn parse_features(s: &str) -> Result<FeatureMode, CliError> {
    match s {
        "coords" => Ok(FeatureMode::CoordsOnly),
        "coords-dt" => Ok(FeatureMode::CoordsAndDt),
        other => Err(usage(format!(
            "features must be coords or coords-dt, got {other:?}"
        ))),
    }
}

pub fn run(params: &EvalParams) -> Result<(), CliError> {
    let cv = parse_cv(&params.cv)?;
    let mode = parse_features(&params.features)?;

    let captures = load_captures(&expand_inputs(&params.captures, "cap")?)?;
    let sessions: Vec<Session> = expand_inputs(&params.truth, "jsonl")?
        .iter()
        .map(|p| load_session(p))
        .collect::<Result<_, _>>()?;
    let pairs = join(&captures, &sessions)?;
    if pairs.is_empty() {
        return Err(data("no captures to evaluate".to_string()));
    }

    let body = match params.task.as_str() {
        "reg" => eval_reg(params, &pairs, cv, mode)?,
        "cls" => eval_cls(params, &pairs, &sessions, cv, mode)?,
        other => return Err(usage(format!("task must be reg or cls, got {other:?}"))),
    };
    let out = Path::new(&params.out);
    write_output(out, body.as_bytes())?;
    manifest::write_for(out, false, CommandParams::Eval(params.clone()))
}

fn eval_reg(
    params: &EvalParams,
    pairs: &[(&CapturedClick, &Click)],
    cv: CvScheme,
    mode: FeatureMode,
) -> Result<String, CliError> {
    // Parse every model up front so a typo in the last spec cannot waste
    // a long run.
    let specs = params
        .models
        .iter()
        .map(|s| parse_reg_model(s).map(|spec| (s.as_str(), spec)))
        .collect::<Result<Vec<_>, _>>()?;
    let set =
        build_regression_set(pairs, params.k_hovers, mode).map_err(|e| data(e.to_string()))?;

    let mut csv = Csv::new(&["model", "task", "cv", "scope", "n", "rmse_px", "mean_px"]);
    for (name, spec) in &specs {
        if params.per_user {
            let report = per_user_eval_reg(spec, &set, cv, params.seed).map_err(eval_err)?;
            csv.row(&[
                model_column(name),
                "reg".into(),
                params.cv.clone(),
                "pooled".into(),
                report.pooled.n.to_string(),
                num(report.pooled.rmse_px),
                num(report.pooled.mean_px),
            ]);
            for (user, metrics) in &report.per_user {
                csv.row(&[
                    model_column(name),
                    "reg".into(),
                    params.cv.clone(),
                    format!("user_{user}"),
                    metrics.n.to_string(),
                    num(metrics.rmse_px),
                    num(metrics.mean_px),
                ]);
            }
            csv.row(&[
                model_column(name),
                "reg".into(),
                params.cv.clone(),
                "per_user_weighted".into(),
                report.pooled.n.to_string(),
                num(report.weighted_rmse_px),
                String::new(),
            ]);
        } else {
            let metrics = evaluate_regressor(spec, &set, cv, params.seed).map_err(eval_err)?;
            csv.row(&[
                model_column(name),
                "reg".into(),
                params.cv.clone(),
                "pooled".into(),
                metrics.n.to_string(),
                num(metrics.rmse_px),
                num(metrics.mean_px),
            ]);
        }
    }
    Ok(csv.into_string())
}

fn eval_cls(
    params: &EvalParams,
    pairs: &[(&CapturedClick, &Click)],
    sessions: &[Session],
    cv: CvScheme,
    mode: FeatureMode,
) -> Result<String, CliError> {
    let specs = params
        .models
        .iter()
        .map(|s| parse_cls_model(s).map(|spec| (s.as_str(), spec)))
        .collect::<Result<Vec<_>, _>>()?;

    let screen = sessions[0].screen;
    if sessions
        .iter()
        .any(|s| s.screen.width_px != screen.width_px || s.screen.height_px != screen.height_px)
    {
        return Err(data(
            "truth sessions disagree on screen size; one keyboard layout cannot fit all"
                .to_string(),
        ));
    }
    let layout = make_layout(screen.width_px, screen.height_px)
        .map_err(|e| data(format!("no keyboard fits this screen: {e}")))?;
    let set = build_classification_set(pairs, &layout, params.k_hovers, mode)
        .map_err(|e| data(format!("{e}; the cls task needs typing sessions")))?;

    let mut csv = Csv::new(&[
        "model",
        "task",
        "cv",
        "scope",
        "n",
        "accuracy",
        "top_confusions",
    ]);
    for (name, spec) in &specs {
        let pooled = evaluate_classifier(spec, &set, cv, params.seed).map_err(eval_err)?;
        csv.row(&[
            model_column(name),
            "cls".into(),
            params.cv.clone(),
            "pooled".into(),
            pooled.n.to_string(),
            num(pooled.accuracy),
            confusion_summary(&pooled.confusion.top_confusions(3)),
        ]);
        if params.per_user {
            let mut users: Vec<u32> = set.user.clone();
            users.sort_unstable();
            users.dedup();
            let mut weighted = 0.0f64;
            for &user in &users {
                let sub = cls_user_subset(&set, user);
                let metrics =
                    evaluate_classifier(spec, &sub, cv, params.seed).map_err(|e| match e {
                        EvalError::TooFewSamples { have, .. } => data(format!(
                            "user {user} has only {have} clicks, too few for {}",
                            params.cv
                        )),
                        other => eval_err(other),
                    })?;
                weighted += metrics.accuracy * metrics.n as f64;
                csv.row(&[
                    model_column(name),
                    "cls".into(),
                    params.cv.clone(),
                    format!("user_{user}"),
                    metrics.n.to_string(),
                    num(metrics.accuracy),
                    confusion_summary(&metrics.confusion.top_confusions(3)),
                ]);
            }
            csv.row(&[
                model_column(name),
                "cls".into(),
                params.cv.clone(),
                "per_user_weighted".into(),
                set.x.len().to_string(),
                num(weighted / set.x.len() as f64),
                String::new(),
            ]);
        }
    }
    Ok(csv.into_string())
}

fn cls_user_subset(set: &ClassificationSet, user: u32) -> ClassificationSet {
    let mut sub = ClassificationSet {
        x: Vec::new(),
        y: Vec::new(),
        user: Vec::new(),
        labels: set.labels.clone(),
        layout: set.layout.clone(),
    };
    for i in 0..set.x.len() {
        if set.user[i] == user {
            sub.x.push(set.x[i].clone());
            sub.y.push(set.y[i]);
            sub.user.push(set.user[i]);
        }
    }
    sub
}

/// "truth>predicted:count" triples joined by ';', a CSV-safe summary of
/// where a classifier bleeds accuracy.
fn confusion_summary(top: &[(char, char, usize)]) -> String {
    top.iter()
        .map(|(t, p, n)| format!("{}>{}:{n}", label_name(*t), label_name(*p)))
        .collect::<Vec<_>>()
        .join(";")
}

fn label_name(c: char) -> String {
    match c {
        ' ' => "space".to_string(),
        ',' => "comma".to_string(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hoverlay::events::{InputMethod, ScreenSpec};

    fn session_with_clicks(user_id: u32, n: usize) -> Session {
        let clicks = (0..n)
            .map(|i| Click {
                t_down_us: 1_000_000 * i as u64 + 2_000,
                t_up_us: 1_000_000 * i as u64 + 62_000,
                x: 100.0 + i as f64,
                y: 900.0,
                key_label: None,
            })
            .collect();
        Session {
            screen: ScreenSpec {
                width_px: 720,
                height_px: 1280,
                hover_range_mm: 20.0,
            },
            method: InputMethod::Stylus,
            user_id,
            events: Vec::new(),
            truth_clicks: clicks,
            seed: 0,
        }
    }

    fn capture(user_id: u16, click_index: u16) -> CapturedClick {
        CapturedClick {
            user_id,
            click_index,
            t_down_ms: 1_000 * click_index as u32 + 2,
            dt_up_ms: 60,
            hovers: vec![hoverlay::attacker::HoverPoint {
                dt_ms: 61,
                x: 100.0,
                y: 900.0,
            }],
            method: InputMethod::Stylus,
        }
    }

    #[test]
    fn join_matches_by_user_and_index() {
        let sessions = vec![session_with_clicks(0, 2), session_with_clicks(1, 1)];
        let captures = vec![capture(1, 0), capture(0, 1), capture(0, 0)];
        let pairs = join(&captures, &sessions).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].1.x, 100.0);
        assert_eq!(pairs[1].1.x, 101.0);
    }

    #[test]
    fn unmatched_captures_are_data_errors() {
        let sessions = vec![session_with_clicks(0, 1)];
        let captures = vec![capture(0, 5)];
        let err = join(&captures, &sessions).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn duplicate_truth_keys_are_data_errors() {
        let sessions = vec![session_with_clicks(0, 1), session_with_clicks(0, 2)];
        let err = join(&[], &sessions).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn confusion_summaries_never_need_quoting() {
        let s = confusion_summary(&[('e', ' ', 4), (',', 'm', 2)]);
        assert_eq!(s, "e>space:4;comma>m:2");
    }
}
