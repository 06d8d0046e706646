//! Parsers for the compact spec strings taken on the command line:
//! dispatch policies, overlay window anchors, model descriptions, and
//! cross-validation schemes.

use hoverlay::attacker::WindowAnchor;
use hoverlay::dispatch::DispatchPolicy;
use hoverlay::learn::{ClassifierSpec, CvScheme, RegressorSpec};

use crate::error::{usage, CliError};

/// Comma-separated policy toggles, e.g.
/// `filter-touches-when-obscured,min-view-px=1`. The empty string is the
/// permissive default policy.
pub fn parse_policy(s: &str) -> Result<DispatchPolicy, CliError> {
    let mut policy = DispatchPolicy::default();
    for name in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some(v) = name.strip_prefix("min-view-px=") {
            policy.min_view_px = v
                .parse()
                .map_err(|_| usage(format!("min-view-px wants an integer, got {v:?}")))?;
        } else {
            match name {
                "foreground-only-hover" => policy.foreground_only_hover = true,
                "filter-touches-when-obscured" => policy.filter_touches_when_obscured = true,
                "forbid-watch-outside" => policy.forbid_watch_outside = true,
                _ => {
                    return Err(usage(format!(
                        "unknown policy {name:?}; valid: foreground-only-hover, \
                         filter-touches-when-obscured, forbid-watch-outside, min-view-px=N"
                    )))
                }
            }
        }
    }
    Ok(policy)
}

pub fn parse_anchor(s: &str) -> Result<WindowAnchor, CliError> {
    match s {
        "down" => Ok(WindowAnchor::TouchDown),
        "up" => Ok(WindowAnchor::TouchUp),
        _ => Err(usage(format!("anchor must be down or up, got {s:?}"))),
    }
}

pub fn parse_cv(s: &str) -> Result<CvScheme, CliError> {
    if s == "loocv" {
        return Ok(CvScheme::LeaveOneOut);
    }
    if let Some(k) = s.strip_prefix("kfold:") {
        let k = k
            .parse()
            .map_err(|_| usage(format!("kfold wants a fold count, got {k:?}")))?;
        return Ok(CvScheme::KFold(k));
    }
    Err(usage(format!("cv must be loocv or kfold:K, got {s:?}")))
}

/// A model spec is `name` or `name:key=value,key=value`. Keys the model
/// does not know are rejected rather than ignored.
struct KvSpec<'a> {
    head: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

fn split_spec(s: &str) -> Result<KvSpec<'_>, CliError> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut pairs = Vec::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("expected key=value in model spec, got {part:?}")))?;
        pairs.push((k.trim(), v.trim()));
    }
    Ok(KvSpec {
        head: head.trim(),
        pairs,
    })
}

impl KvSpec<'_> {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.pairs.iter().position(|(k, _)| *k == key) {
            Some(i) => {
                let (_, v) = self.pairs.remove(i);
                let parsed = v
                    .parse()
                    .map_err(|_| usage(format!("bad value {v:?} for {key}")))?;
                Ok(Some(parsed))
            }
            None => Ok(None),
        }
    }

    fn finish(&self, what: &str) -> Result<(), CliError> {
        match self.pairs.first() {
            Some((k, _)) => Err(usage(format!("unknown key {k:?} in {what} spec"))),
            None => Ok(()),
        }
    }
}

pub fn parse_reg_model(s: &str) -> Result<RegressorSpec, CliError> {
    let mut kv = split_spec(s)?;
    let spec = match kv.head {
        "baseline" => RegressorSpec::Baseline,
        "ols" => RegressorSpec::Ols,
        "lasso" => RegressorSpec::Lasso {
            lambda: kv.take("lambda")?.unwrap_or(0.1),
        },
        "tree" => RegressorSpec::Tree {
            max_depth: kv.take("depth")?.unwrap_or(12),
            min_leaf: kv.take("leaf")?.unwrap_or(1),
        },
        "forest" => RegressorSpec::Forest {
            n_trees: kv.take("n")?.unwrap_or(60),
            max_depth: kv.take("depth")?.unwrap_or(12),
            min_leaf: kv.take("leaf")?.unwrap_or(1),
            bootstrap: kv.take("bootstrap")?.unwrap_or(true),
            mtry: kv.take("mtry")?,
        },
        other => {
            return Err(usage(format!(
                "unknown regression model {other:?}; valid: baseline, ols, lasso, tree, forest"
            )))
        }
    };
    kv.finish("regression model")?;
    Ok(spec)
}

pub fn parse_cls_model(s: &str) -> Result<ClassifierSpec, CliError> {
    let mut kv = split_spec(s)?;
    let spec = match kv.head {
        "baseline" => ClassifierSpec::Baseline,
        "tree" => ClassifierSpec::Tree {
            max_depth: kv.take("depth")?.unwrap_or(14),
            min_leaf: kv.take("leaf")?.unwrap_or(1),
        },
        "forest" => ClassifierSpec::Forest {
            n_trees: kv.take("n")?.unwrap_or(60),
            max_depth: kv.take("depth")?.unwrap_or(14),
            min_leaf: kv.take("leaf")?.unwrap_or(1),
            bootstrap: kv.take("bootstrap")?.unwrap_or(true),
            mtry: kv.take("mtry")?,
        },
        "bagging" => ClassifierSpec::Bagging {
            n_trees: kv.take("n")?.unwrap_or(60),
            max_depth: kv.take("depth")?.unwrap_or(14),
            min_leaf: kv.take("leaf")?.unwrap_or(1),
        },
        other => {
            return Err(usage(format!(
                "unknown classification model {other:?}; valid: baseline, tree, forest, bagging"
            )))
        }
    };
    kv.finish("classification model")?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CliError;

    #[test]
    fn policy_strings_parse() {
        let p = parse_policy("").unwrap();
        assert_eq!(p, DispatchPolicy::default());
        let p = parse_policy("foreground-only-hover,min-view-px=3").unwrap();
        assert!(p.foreground_only_hover);
        assert_eq!(p.min_view_px, 3);
        assert!(!p.forbid_watch_outside);
        assert!(matches!(parse_policy("nonsense"), Err(CliError::Usage(_))));
        assert!(matches!(
            parse_policy("min-view-px=lots"),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn model_strings_parse() {
        assert_eq!(parse_reg_model("ols").unwrap(), RegressorSpec::Ols);
        assert_eq!(
            parse_reg_model("forest:n=100,depth=12").unwrap(),
            RegressorSpec::Forest {
                n_trees: 100,
                max_depth: 12,
                min_leaf: 1,
                bootstrap: true,
                mtry: None,
            }
        );
        assert_eq!(
            parse_reg_model("lasso:lambda=0.25").unwrap(),
            RegressorSpec::Lasso { lambda: 0.25 }
        );
        assert_eq!(
            parse_cls_model("forest:n=60,depth=14,leaf=1,bootstrap=false,mtry=5").unwrap(),
            ClassifierSpec::Forest {
                n_trees: 60,
                max_depth: 14,
                min_leaf: 1,
                bootstrap: false,
                mtry: Some(5),
            }
        );
        assert!(matches!(parse_reg_model("svm"), Err(CliError::Usage(_))));
        assert!(matches!(
            parse_reg_model("ols:depth=3"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse_cls_model("tree:depth"),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn cv_strings_parse() {
        assert_eq!(parse_cv("loocv").unwrap(), CvScheme::LeaveOneOut);
        assert_eq!(parse_cv("kfold:10").unwrap(), CvScheme::KFold(10));
        assert!(matches!(parse_cv("kfold:ten"), Err(CliError::Usage(_))));
        assert!(matches!(parse_cv("holdout"), Err(CliError::Usage(_))));
    }

    #[test]
    fn anchors_parse() {
        assert_eq!(parse_anchor("down").unwrap(), WindowAnchor::TouchDown);
        assert_eq!(parse_anchor("up").unwrap(), WindowAnchor::TouchUp);
        assert!(matches!(parse_anchor("sideways"), Err(CliError::Usage(_))));
    }
}
