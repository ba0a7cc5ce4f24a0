//! Tree-exchange format: a nested JSON document for moving syntax trees
//! across tools. Leaves carry `text`, internal nodes carry `children`, every
//! node carries `kind` and a byte `span`. See `docs/formats.md`.

use super::kind::NodeKind;
use super::{Node, SyntaxTree};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("invalid document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
}

fn schema_err<T>(path: &str, message: impl Into<String>) -> Result<T, ExchangeError> {
    Err(ExchangeError::Schema {
        path: path.to_string(),
        message: message.into(),
    })
}

/// Parses a tree-exchange document. Unknown kind names become structural
/// [`NodeKind::Foreign`] nodes and log a warning.
pub fn import_tree(document: &str) -> Result<SyntaxTree, ExchangeError> {
    let value: Value = serde_json::from_str(document)?;
    let root = import_node(&value, "root")?;
    Ok(SyntaxTree::new(root, None))
}

fn import_node(value: &Value, path: &str) -> Result<Node, ExchangeError> {
    let obj = match value.as_object() {
        Some(obj) => obj,
        None => return schema_err(path, "node must be an object"),
    };
    for key in obj.keys() {
        if !matches!(key.as_str(), "kind" | "span" | "text" | "children") {
            return schema_err(path, format!("unknown field `{key}`"));
        }
    }

    let kind_name = match obj.get("kind").and_then(Value::as_str) {
        Some(name) => name,
        None => return schema_err(&format!("{path}.kind"), "missing or non-string"),
    };
    let kind = NodeKind::parse_name(kind_name).unwrap_or_else(|| {
        log::warn!("unknown node kind `{kind_name}` imported as structural");
        NodeKind::Foreign(kind_name.to_string())
    });

    let span = parse_span(obj.get("span"), &format!("{path}.span"))?;

    let text = obj.get("text");
    let children = obj.get("children");
    match (text, children) {
        (Some(text), None) => {
            let text = match text.as_str() {
                Some(t) => t,
                None => return schema_err(&format!("{path}.text"), "must be a string"),
            };
            if !kind.is_terminal() && NodeKind::parse_name(kind_name).is_some() {
                return schema_err(
                    path,
                    format!("kind `{kind_name}` is not a terminal kind but node is a leaf"),
                );
            }
            Ok(Node::leaf(kind, text, span))
        }
        (None, Some(children)) => {
            let items = match children.as_array() {
                Some(items) if !items.is_empty() => items,
                Some(_) => {
                    return schema_err(&format!("{path}.children"), "must be non-empty");
                }
                None => return schema_err(&format!("{path}.children"), "must be an array"),
            };
            if kind.is_terminal() {
                return schema_err(
                    path,
                    format!("terminal kind `{kind_name}` cannot have children"),
                );
            }
            let mut nodes = Vec::with_capacity(items.len());
            let mut previous_end = span.0;
            for (index, item) in items.iter().enumerate() {
                let child_path = format!("{path}.children[{index}]");
                let child = import_node(item, &child_path)?;
                let (start, end) = child.span();
                if start < span.0 || end > span.1 {
                    return schema_err(
                        &format!("{child_path}.span"),
                        format!(
                            "child span [{start}, {end}] outside parent span [{}, {}]",
                            span.0, span.1
                        ),
                    );
                }
                if start < previous_end {
                    return schema_err(
                        &format!("{child_path}.span"),
                        "child spans must be ordered and non-overlapping",
                    );
                }
                previous_end = end;
                nodes.push(child);
            }
            let mut node = Node::internal(kind, nodes);
            // Internal spans may be wider than the hull of the children.
            node.span = span;
            Ok(node)
        }
        (Some(_), Some(_)) => schema_err(path, "node has both text and children"),
        (None, None) => schema_err(path, "node needs either text or children"),
    }
}

fn parse_span(value: Option<&Value>, path: &str) -> Result<(usize, usize), ExchangeError> {
    let arr = match value.and_then(Value::as_array) {
        Some(arr) if arr.len() == 2 => arr,
        _ => return schema_err(path, "must be a two-element array"),
    };
    let start = arr[0].as_u64();
    let end = arr[1].as_u64();
    match (start, end) {
        (Some(start), Some(end)) if start <= end => Ok((start as usize, end as usize)),
        (Some(_), Some(_)) => schema_err(path, "span start exceeds end"),
        _ => schema_err(path, "span entries must be non-negative integers"),
    }
}

/// Serializes a tree into the exchange document format.
pub fn export_tree(tree: &SyntaxTree) -> String {
    let value = export_node(tree.root());
    serde_json::to_string_pretty(&value).expect("tree serialization cannot fail")
}

fn export_node(node: &Node) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("kind".into(), Value::String(node.kind().name().to_string()));
    let (start, end) = node.span();
    obj.insert("span".into(), serde_json::json!([start, end]));
    if let Some(text) = node.text() {
        obj.insert("text".into(), Value::String(text.to_string()));
    } else {
        let children: Vec<Value> = node.children().iter().map(export_node).collect();
        obj.insert("children".into(), Value::Array(children));
    }
    Value::Object(obj)
}
