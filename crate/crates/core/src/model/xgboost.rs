//! Reader for the JSON flavour of XGBoost's `dump_model` output.
//!
//! Each array entry is a recursive tree object. Split nodes carry `nodeid`,
//! `split`, `split_condition`, `yes`, `no`, `missing`, `cover` and
//! `children`; leaves carry `nodeid`, `leaf` and `cover`. The dump must be
//! produced with statistics enabled, otherwise covers are absent.

use serde_json::{Map, Value};

use super::{Ensemble, ModelError, Node, Tree};

/// Parses a dump whose split names follow the default `f<k>` pattern.
/// Tree `i` is assigned to output group `i % num_class`.
pub fn parse_xgboost_dump(text: &str, num_class: usize) -> Result<Ensemble, ModelError> {
    parse_xgboost_dump_with_feature_names(text, num_class, None)
}

/// Like [`parse_xgboost_dump`], resolving split names through a feature map
/// when one is given.
pub fn parse_xgboost_dump_with_feature_names(
    text: &str,
    num_class: usize,
    feature_names: Option<&[String]>,
) -> Result<Ensemble, ModelError> {
    if num_class == 0 {
        return Err(ModelError::Ensemble("num_class must be at least 1".into()));
    }
    let doc: Value = serde_json::from_str(text)?;
    let Value::Array(trees) = doc else {
        return Err(schema(0, 0, "dump must be a JSON array of trees"));
    };
    let mut out = Vec::with_capacity(trees.len());
    let mut max_feature = None;
    for (t, root) in trees.iter().enumerate() {
        let mut nodes = Vec::new();
        let mut stack = vec![root];
        while let Some(value) = stack.pop() {
            let obj = value.as_object().ok_or_else(|| schema(t, 0, "tree node must be an object"))?;
            let id = uint(obj, "nodeid", t, 0)?;
            let cover = float(obj, "cover", t, id)?;
            if let Some(leaf) = obj.get("leaf") {
                let v = leaf.as_f64().ok_or_else(|| schema(t, id, "`leaf` must be a number"))?;
                nodes.push(Node::leaf(id, v, cover));
                continue;
            }
            let feature = feature_index(obj.get("split"), feature_names, t, id)?;
            max_feature = max_feature.max(Some(feature));
            let threshold = float(obj, "split_condition", t, id)?;
            let yes = uint(obj, "yes", t, id)?;
            let no = uint(obj, "no", t, id)?;
            if let Some(missing) = obj.get("missing") {
                let missing = missing.as_u64().ok_or_else(|| schema(t, id, "`missing` must be a node id"))?;
                if missing as usize != yes && missing as usize != no {
                    return Err(schema(t, id, "missing branch differs from both yes and no; unsupported"));
                }
            }
            let children = obj
                .get("children")
                .and_then(Value::as_array)
                .ok_or_else(|| schema(t, id, "split node without `children` array"))?;
            for child in children {
                stack.push(child);
            }
            nodes.push(Node::split(id, feature, threshold, yes, no, cover));
        }
        out.push(Tree::new(t % num_class, nodes));
    }
    let num_features = max_feature.map_or(0, |f| f + 1);
    Ensemble::new(out, num_features, num_class, 0.0)
}

fn schema(tree: usize, node: usize, message: &str) -> ModelError {
    ModelError::Schema { tree, node, message: message.to_string() }
}

fn uint(obj: &Map<String, Value>, key: &str, tree: usize, node: usize) -> Result<usize, ModelError> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| schema(tree, node, &format!("missing or non-integer `{key}`")))
}

fn float(obj: &Map<String, Value>, key: &str, tree: usize, node: usize) -> Result<f64, ModelError> {
    obj.get(key).and_then(Value::as_f64).ok_or_else(|| schema(tree, node, &format!("missing or non-numeric `{key}`")))
}

fn feature_index(
    split: Option<&Value>,
    names: Option<&[String]>,
    tree: usize,
    node: usize,
) -> Result<usize, ModelError> {
    let name = match split {
        Some(Value::String(s)) => s.as_str(),
        Some(Value::Number(n)) => {
            return n
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| schema(tree, node, "numeric split must be a feature index"))
        }
        _ => return Err(schema(tree, node, "missing `split`")),
    };
    if let Some(names) = names {
        return names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| schema(tree, node, &format!("split name `{name}` not in feature map")));
    }
    name.strip_prefix('f')
        .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|digits| digits.parse().ok())
        .ok_or_else(|| {
            schema(tree, node, &format!("split name `{name}` is not of the form f<k>; a feature map is required"))
        })
}
