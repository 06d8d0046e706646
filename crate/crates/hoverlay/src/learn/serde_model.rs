//! Versioned JSON persistence for trained models.
//!
//! Numeric parameters are stored as decimal strings (Rust's shortest
//! round-trip rendering), so a saved model reloads to bit-identical
//! predictions on every platform; tree nodes nest as small JSON arrays.

use super::forest::{ClsForest, RegForest};
use super::linear::AxisLinear;
use super::tree::{ClsTree, Node, RegTree};
use super::{ClassifierSpec, ClsModel, ClsModelKind, RegModel, RegressorSpec};
use crate::layout::make_layout;
use serde_json::{json, Value};
use thiserror::Error;

pub const MODEL_FORMAT: &str = "hoverlay-model";
pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a {MODEL_FORMAT} document")]
    WrongFormat,
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u64),
    #[error("expected a {expected} model, found {found}")]
    WrongTask { expected: String, found: String },
    #[error("malformed model payload: {0}")]
    Malformed(String),
}

fn envelope(task: &str, spec: Value, model: Value) -> String {
    let doc = json!({
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "task": task,
        "spec": spec,
        "model": model,
    });
    serde_json::to_string_pretty(&doc).expect("model envelopes always serialize")
}

fn open_envelope(s: &str, task: &str) -> Result<(Value, Value), ModelIoError> {
    let doc: Value = serde_json::from_str(s)?;
    if doc["format"].as_str() != Some(MODEL_FORMAT) {
        return Err(ModelIoError::WrongFormat);
    }
    match doc["version"].as_u64() {
        Some(MODEL_VERSION) => {}
        Some(v) => return Err(ModelIoError::UnsupportedVersion(v)),
        None => return Err(ModelIoError::WrongFormat),
    }
    let found = doc["task"].as_str().unwrap_or("?");
    if found != task {
        return Err(ModelIoError::WrongTask {
            expected: task.into(),
            found: found.into(),
        });
    }
    let spec = doc["spec"].clone();
    let model = doc["model"].clone();
    Ok((spec, model))
}

fn num_str(v: f64) -> Value {
    Value::String(v.to_string())
}

fn parse_num(v: &Value, what: &str) -> Result<f64, ModelIoError> {
    v.as_str()
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| ModelIoError::Malformed(format!("{what}: expected a decimal string")))
}

fn axis_to_value(a: &AxisLinear) -> Value {
    json!({
        "weights": a.weights.iter().map(|&w| num_str(w)).collect::<Vec<_>>(),
        "bias": num_str(a.bias),
    })
}

fn axis_from_value(v: &Value) -> Result<AxisLinear, ModelIoError> {
    let raw = v["weights"]
        .as_array()
        .ok_or_else(|| ModelIoError::Malformed("axis weights missing".into()))?;
    let weights = raw
        .iter()
        .map(|w| parse_num(w, "weight"))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(AxisLinear {
        weights,
        bias: parse_num(&v["bias"], "bias")?,
    })
}

fn reg_node_to_value(n: &Node<[f64; 2]>) -> Value {
    match n {
        Node::Leaf([x, y]) => json!(["leaf", num_str(*x), num_str(*y)]),
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => json!([
            "split",
            feature,
            num_str(*threshold),
            reg_node_to_value(left),
            reg_node_to_value(right)
        ]),
    }
}

fn reg_node_from_value(v: &Value) -> Result<Node<[f64; 2]>, ModelIoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| ModelIoError::Malformed("tree node is not an array".into()))?;
    match arr.first().and_then(Value::as_str) {
        Some("leaf") if arr.len() == 3 => Ok(Node::Leaf([
            parse_num(&arr[1], "leaf x")?,
            parse_num(&arr[2], "leaf y")?,
        ])),
        Some("split") if arr.len() == 5 => Ok(Node::Split {
            feature: arr[1]
                .as_u64()
                .ok_or_else(|| ModelIoError::Malformed("split feature".into()))?
                as usize,
            threshold: parse_num(&arr[2], "split threshold")?,
            left: Box::new(reg_node_from_value(&arr[3])?),
            right: Box::new(reg_node_from_value(&arr[4])?),
        }),
        _ => Err(ModelIoError::Malformed("unrecognized tree node".into())),
    }
}

fn cls_node_to_value(n: &Node<usize>) -> Value {
    match n {
        Node::Leaf(label) => json!(["leaf", label]),
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => json!([
            "split",
            feature,
            num_str(*threshold),
            cls_node_to_value(left),
            cls_node_to_value(right)
        ]),
    }
}

fn cls_node_from_value(v: &Value) -> Result<Node<usize>, ModelIoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| ModelIoError::Malformed("tree node is not an array".into()))?;
    match arr.first().and_then(Value::as_str) {
        Some("leaf") if arr.len() == 2 => Ok(Node::Leaf(
            arr[1]
                .as_u64()
                .ok_or_else(|| ModelIoError::Malformed("leaf label".into()))? as usize,
        )),
        Some("split") if arr.len() == 5 => Ok(Node::Split {
            feature: arr[1]
                .as_u64()
                .ok_or_else(|| ModelIoError::Malformed("split feature".into()))?
                as usize,
            threshold: parse_num(&arr[2], "split threshold")?,
            left: Box::new(cls_node_from_value(&arr[3])?),
            right: Box::new(cls_node_from_value(&arr[4])?),
        }),
        _ => Err(ModelIoError::Malformed("unrecognized tree node".into())),
    }
}

pub fn save_regressor(spec: &RegressorSpec, model: &RegModel) -> String {
    let payload = match model {
        RegModel::Baseline => json!({ "kind": "baseline" }),
        RegModel::Linear { axes } => json!({
            "kind": "linear",
            "axes": [axis_to_value(&axes[0]), axis_to_value(&axes[1])],
        }),
        RegModel::Tree(t) => json!({ "kind": "tree", "root": reg_node_to_value(t.root()) }),
        RegModel::Forest(f) => json!({
            "kind": "forest",
            "trees": f.trees().iter().map(|t| reg_node_to_value(t.root())).collect::<Vec<_>>(),
        }),
    };
    envelope(
        "regression",
        serde_json::to_value(spec).expect("specs serialize"),
        payload,
    )
}

pub fn load_regressor(s: &str) -> Result<(RegressorSpec, RegModel), ModelIoError> {
    let (spec_v, model_v) = open_envelope(s, "regression")?;
    let spec: RegressorSpec = serde_json::from_value(spec_v)?;
    let model = match model_v["kind"].as_str() {
        Some("baseline") => RegModel::Baseline,
        Some("linear") => {
            let axes = model_v["axes"]
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| ModelIoError::Malformed("linear axes".into()))?;
            RegModel::Linear {
                axes: [axis_from_value(&axes[0])?, axis_from_value(&axes[1])?],
            }
        }
        Some("tree") => RegModel::Tree(RegTree::from_root(reg_node_from_value(&model_v["root"])?)),
        Some("forest") => {
            let trees = model_v["trees"]
                .as_array()
                .ok_or_else(|| ModelIoError::Malformed("forest trees".into()))?
                .iter()
                .map(|t| Ok(RegTree::from_root(reg_node_from_value(t)?)))
                .collect::<Result<Vec<_>, ModelIoError>>()?;
            if trees.is_empty() {
                return Err(ModelIoError::Malformed("forest has no trees".into()));
            }
            RegModel::Forest(RegForest::from_trees(trees))
        }
        _ => return Err(ModelIoError::Malformed("unknown regressor kind".into())),
    };
    Ok((spec, model))
}

pub fn save_classifier(spec: &ClassifierSpec, model: &ClsModel) -> String {
    let labels: String = model.labels.iter().collect();
    let payload = match &model.kind {
        ClsModelKind::Baseline { layout } => {
            let region = layout.region;
            json!({
                "kind": "baseline",
                "labels": labels,
                // The layout is a pure function of the screen size.
                "screen": [region.x1 as u32, region.y1 as u32],
            })
        }
        ClsModelKind::Tree(t) => json!({
            "kind": "tree",
            "labels": labels,
            "n_labels": t.n_labels,
            "root": cls_node_to_value(t.root()),
        }),
        ClsModelKind::Forest(f) => json!({
            "kind": "forest",
            "labels": labels,
            "n_labels": f.labels(),
            "trees": f.trees().iter().map(|t| cls_node_to_value(t.root())).collect::<Vec<_>>(),
        }),
    };
    envelope(
        "classification",
        serde_json::to_value(spec).expect("specs serialize"),
        payload,
    )
}

pub fn load_classifier(s: &str) -> Result<(ClassifierSpec, ClsModel), ModelIoError> {
    let (spec_v, model_v) = open_envelope(s, "classification")?;
    let spec: ClassifierSpec = serde_json::from_value(spec_v)?;
    let labels: Vec<char> = model_v["labels"]
        .as_str()
        .ok_or_else(|| ModelIoError::Malformed("labels".into()))?
        .chars()
        .collect();
    let n_labels_of = |v: &Value| {
        v.as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| ModelIoError::Malformed("n_labels".into()))
    };
    let kind = match model_v["kind"].as_str() {
        Some("baseline") => {
            let dims = model_v["screen"]
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| ModelIoError::Malformed("baseline screen".into()))?;
            let w = dims[0].as_u64().unwrap_or(0) as u32;
            let h = dims[1].as_u64().unwrap_or(0) as u32;
            let layout = make_layout(w, h)
                .map_err(|e| ModelIoError::Malformed(format!("baseline layout: {e}")))?;
            ClsModelKind::Baseline { layout }
        }
        Some("tree") => ClsModelKind::Tree(ClsTree::from_root(
            cls_node_from_value(&model_v["root"])?,
            n_labels_of(&model_v["n_labels"])?,
        )),
        Some("forest") => {
            let n_labels = n_labels_of(&model_v["n_labels"])?;
            let trees = model_v["trees"]
                .as_array()
                .ok_or_else(|| ModelIoError::Malformed("forest trees".into()))?
                .iter()
                .map(|t| Ok(ClsTree::from_root(cls_node_from_value(t)?, n_labels)))
                .collect::<Result<Vec<_>, ModelIoError>>()?;
            if trees.is_empty() {
                return Err(ModelIoError::Malformed("forest has no trees".into()));
            }
            ClsModelKind::Forest(ClsForest::from_trees(trees, n_labels))
        }
        _ => return Err(ModelIoError::Malformed("unknown classifier kind".into())),
    };
    Ok((spec, ClsModel { labels, kind }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{train_classifier, train_regressor, ClassificationSet, RegressionSet};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reg_set() -> RegressionSet {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut set = RegressionSet {
            x: Vec::new(),
            y: Vec::new(),
            user: Vec::new(),
        };
        for _ in 0..60 {
            let row: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..700.0)).collect();
            set.y.push([row[0] * 0.99 - 3.17, row[1] * 1.01 + 2.03]);
            set.x.push(row);
            set.user.push(1);
        }
        set
    }

    fn cls_set() -> ClassificationSet {
        let layout = make_layout(720, 1280).unwrap();
        let labels: Vec<char> = layout.labels().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut set = ClassificationSet {
            x: Vec::new(),
            y: Vec::new(),
            user: Vec::new(),
            labels,
            layout,
        };
        for _ in 0..80 {
            let x = rng.gen_range(0.0..720.0);
            let y = rng.gen_range(768.0..1280.0);
            let key = set.layout.nearest_key(crate::geom::Point::new(x, y));
            let yi = set.labels.iter().position(|&c| c == key).unwrap();
            set.x.push(vec![x, y]);
            set.y.push(yi);
            set.user.push(1);
        }
        set
    }

    #[test]
    fn every_regressor_kind_round_trips_to_identical_predictions() {
        let set = reg_set();
        let specs = [
            RegressorSpec::Baseline,
            RegressorSpec::Ols,
            RegressorSpec::Lasso { lambda: 0.1 },
            RegressorSpec::Tree {
                max_depth: 6,
                min_leaf: 2,
            },
            RegressorSpec::Forest {
                n_trees: 7,
                max_depth: 5,
                min_leaf: 2,
                bootstrap: true,
                mtry: None,
            },
        ];
        for spec in &specs {
            let model = train_regressor(spec, &set, 5).unwrap();
            let text = save_regressor(spec, &model);
            let (spec2, model2) = load_regressor(&text).unwrap();
            assert_eq!(spec, &spec2);
            for row in &set.x {
                let a = model.predict(row);
                let b = model2.predict(row);
                assert_eq!(a, b, "drift after reload under {spec:?}");
            }
        }
    }

    #[test]
    fn every_classifier_kind_round_trips_to_identical_predictions() {
        let set = cls_set();
        let specs = [
            ClassifierSpec::Baseline,
            ClassifierSpec::Tree {
                max_depth: 8,
                min_leaf: 1,
            },
            ClassifierSpec::Forest {
                n_trees: 9,
                max_depth: 6,
                min_leaf: 1,
                bootstrap: true,
                mtry: None,
            },
            ClassifierSpec::Bagging {
                n_trees: 5,
                max_depth: 6,
                min_leaf: 1,
            },
        ];
        for spec in &specs {
            let model = train_classifier(spec, &set, 6).unwrap();
            let text = save_classifier(spec, &model);
            let (spec2, model2) = load_classifier(&text).unwrap();
            assert_eq!(spec, &spec2);
            for row in &set.x {
                assert_eq!(model.predict(row), model2.predict(row));
            }
        }
    }

    #[test]
    fn envelope_is_validated() {
        let set = reg_set();
        let model = train_regressor(&RegressorSpec::Ols, &set, 0).unwrap();
        let text = save_regressor(&RegressorSpec::Ols, &model);

        assert!(matches!(
            load_classifier(&text),
            Err(ModelIoError::WrongTask { .. })
        ));
        let bumped = text.replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(
            load_regressor(&bumped),
            Err(ModelIoError::UnsupportedVersion(99))
        ));
        let renamed = text.replace(MODEL_FORMAT, "other-format");
        assert!(matches!(
            load_regressor(&renamed),
            Err(ModelIoError::WrongFormat)
        ));
        assert!(load_regressor("{not json").is_err());
    }

    #[test]
    fn weights_survive_as_exact_decimal_strings() {
        let awkward = [0.1 + 0.2, 1e-17, -3.0000000000000004, 123456.78901234567];
        for &w in &awkward {
            let v = num_str(w);
            let back = parse_num(&v, "test").unwrap();
            assert_eq!(w.to_bits(), back.to_bits(), "bit drift for {w}");
        }
    }
}
