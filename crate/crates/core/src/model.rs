//! Normalized design document model and the JSON interchange format.
//!
//! The interchange format stands in for a design tool's native node tree.
//! Coordinates are document-absolute. Only solid fills are modelled; other
//! fill types are dropped on ingest with a warning.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::color::Color;

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    Frame,
    Text,
    Vector,
    Rectangle,
    Image,
    Component,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Frame,
        NodeKind::Text,
        NodeKind::Vector,
        NodeKind::Rectangle,
        NodeKind::Image,
        NodeKind::Component,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Frame => "FRAME",
            NodeKind::Text => "TEXT",
            NodeKind::Vector => "VECTOR",
            NodeKind::Rectangle => "RECTANGLE",
            NodeKind::Image => "IMAGE",
            NodeKind::Component => "COMPONENT",
        }
    }

    /// Only frames and components may carry children.
    pub fn is_container(&self) -> bool {
        matches!(self, NodeKind::Frame | NodeKind::Component)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown node type {s:?}"))
    }
}

/// Axis-aligned box in document coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Bounds {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Bounds { x, y, w, h }
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.x + other.w <= self.x + self.w
            && other.y + other.h <= self.y + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub color: Color,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextStyle {
    pub characters: String,
    pub font_size: f64,
    pub font_weight: u16,
    pub font_family: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignNode {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    pub bounds: Bounds,
    pub fills: Vec<Color>,
    pub strokes: Vec<Stroke>,
    pub text: Option<TextStyle>,
    pub children: Vec<DesignNode>,
}

impl DesignNode {
    /// Number of nodes in this subtree, including `self`.
    pub fn subtree_len(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(DesignNode::subtree_len)
            .sum::<usize>()
    }

    pub fn has_text_descendant(&self) -> bool {
        self.children
            .iter()
            .any(|c| c.kind == NodeKind::Text || c.has_text_descendant())
    }

    pub fn iter(&self) -> impl Iterator<Item = &DesignNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }
}

/// A parsed design document. Immutable by convention: edits go through
/// [`crate::remediation::apply_patch`], which returns a new document.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignDocument {
    pub name: String,
    pub frames: Vec<DesignNode>,
}

/// Product context supplied alongside a document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DesignContext {
    pub product_goal: String,
    pub brand_keywords: Vec<String>,
    #[serde(with = "hex_color_opt", skip_serializing_if = "Option::is_none")]
    pub theme_color: Option<Color>,
    pub target_users: String,
}

impl DesignContext {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

mod hex_color_opt {
    use super::Color;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Option<Color>, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Some(c) => s.serialize_str(&c.to_hex()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Color>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        match raw.as_deref().map(str::trim) {
            None | Some("") => Ok(None),
            Some(hex) => Color::from_hex(hex)
                .map(Some)
                .map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate node id {id:?} at {first} and {second}")]
    DuplicateId {
        id: String,
        first: String,
        second: String,
    },
}

/// Non-fatal ingest diagnostic, e.g. a gradient fill that was dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub path: String,
    pub message: String,
}

pub fn parse_document(text: &str) -> Result<DesignDocument, ParseError> {
    parse_document_with_warnings(text).map(|(doc, _)| doc)
}

pub fn parse_document_with_warnings(
    text: &str,
) -> Result<(DesignDocument, Vec<ParseWarning>), ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    document_from_value(&value)
}

/// Builds a document from an already-decoded JSON value.
pub fn document_from_value(
    value: &Value,
) -> Result<(DesignDocument, Vec<ParseWarning>), ParseError> {
    let mut reader = Reader::default();
    let doc = reader.document(value)?;
    for w in &reader.warnings {
        log::warn!("{}: {}", w.path, w.message);
    }
    Ok((doc, reader.warnings))
}

#[derive(Default)]
struct Reader {
    warnings: Vec<ParseWarning>,
    seen: HashMap<String, String>,
}

fn schema(path: &str, message: impl Into<String>) -> ParseError {
    ParseError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

impl Reader {
    fn object<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Map<String, Value>, ParseError> {
        v.as_object()
            .ok_or_else(|| schema(path, format!("expected object, found {}", type_name(v))))
    }

    fn field<'v>(
        &self,
        obj: &'v Map<String, Value>,
        key: &str,
        path: &str,
    ) -> Result<&'v Value, ParseError> {
        obj.get(key)
            .ok_or_else(|| schema(path, format!("missing required field {key:?}")))
    }

    fn string(
        &self,
        obj: &Map<String, Value>,
        key: &str,
        path: &str,
    ) -> Result<String, ParseError> {
        let v = self.field(obj, key, path)?;
        v.as_str().map(str::to_string).ok_or_else(|| {
            schema(
                &format!("{path}.{key}"),
                format!("expected string, found {}", type_name(v)),
            )
        })
    }

    fn number(&self, obj: &Map<String, Value>, key: &str, path: &str) -> Result<f64, ParseError> {
        let v = self.field(obj, key, path)?;
        v.as_f64().ok_or_else(|| {
            schema(
                &format!("{path}.{key}"),
                format!("expected number, found {}", type_name(v)),
            )
        })
    }

    fn array<'v>(
        &self,
        obj: &'v Map<String, Value>,
        key: &str,
        path: &str,
    ) -> Result<&'v Vec<Value>, ParseError> {
        let v = self.field(obj, key, path)?;
        v.as_array().ok_or_else(|| {
            schema(
                &format!("{path}.{key}"),
                format!("expected array, found {}", type_name(v)),
            )
        })
    }

    fn document(&mut self, v: &Value) -> Result<DesignDocument, ParseError> {
        let path = "$";
        let obj = self.object(v, path)?;
        let version = self.field(obj, "schemaVersion", path)?;
        if version.as_i64() != Some(SCHEMA_VERSION) {
            return Err(schema(
                "$.schemaVersion",
                format!("unsupported schema version {version}, expected {SCHEMA_VERSION}"),
            ));
        }
        let name = self.string(obj, "name", path)?;
        let raw_frames = self.array(obj, "frames", path)?;
        if raw_frames.is_empty() {
            return Err(schema(
                "$.frames",
                "document must contain at least one frame",
            ));
        }
        let mut frames = Vec::with_capacity(raw_frames.len());
        for (i, f) in raw_frames.iter().enumerate() {
            let fpath = format!("$.frames[{i}]");
            let node = self.node(f, &fpath)?;
            if node.kind != NodeKind::Frame {
                return Err(schema(
                    &format!("{fpath}.type"),
                    format!("top-level nodes must be FRAME, found {}", node.kind),
                ));
            }
            frames.push(node);
        }
        Ok(DesignDocument { name, frames })
    }

    fn node(&mut self, v: &Value, path: &str) -> Result<DesignNode, ParseError> {
        let obj = self.object(v, path)?;
        let id = self.string(obj, "id", path)?;
        if let Some(first) = self.seen.get(&id) {
            return Err(ParseError::DuplicateId {
                id,
                first: first.clone(),
                second: path.to_string(),
            });
        }
        self.seen.insert(id.clone(), path.to_string());

        let name = self.string(obj, "name", path)?;
        let kind_raw = self.string(obj, "type", path)?;
        let kind: NodeKind = kind_raw
            .parse()
            .map_err(|msg: String| schema(&format!("{path}.type"), msg))?;
        let bounds = self.bounds(self.field(obj, "bounds", path)?, &format!("{path}.bounds"))?;

        let mut fills = Vec::new();
        for (i, f) in self.array(obj, "fills", path)?.iter().enumerate() {
            let fpath = format!("{path}.fills[{i}]");
            let fo = self.object(f, &fpath)?;
            let fill_type = self.string(fo, "type", &fpath)?;
            if fill_type != "SOLID" {
                self.warnings.push(ParseWarning {
                    path: fpath,
                    message: format!("dropped non-solid fill of type {fill_type:?}"),
                });
                continue;
            }
            fills.push(self.color(self.field(fo, "color", &fpath)?, &format!("{fpath}.color"))?);
        }

        let mut strokes = Vec::new();
        for (i, s) in self.array(obj, "strokes", path)?.iter().enumerate() {
            let spath = format!("{path}.strokes[{i}]");
            let so = self.object(s, &spath)?;
            let color = self.color(self.field(so, "color", &spath)?, &format!("{spath}.color"))?;
            let weight = self.number(so, "weight", &spath)?;
            if weight < 0.0 {
                return Err(schema(
                    &format!("{spath}.weight"),
                    "stroke weight must be nonnegative",
                ));
            }
            strokes.push(Stroke { color, weight });
        }

        let text = match obj.get("text") {
            None | Some(Value::Null) => None,
            Some(t) => Some(self.text(t, &format!("{path}.text"))?),
        };
        match (kind, &text) {
            (NodeKind::Text, None) => {
                return Err(schema(path, "TEXT node is missing required field \"text\""))
            }
            (k, Some(_)) if k != NodeKind::Text => {
                return Err(schema(
                    &format!("{path}.text"),
                    format!("{k} node must not carry text properties"),
                ))
            }
            _ => {}
        }

        let mut children = Vec::new();
        match obj.get("children") {
            None | Some(Value::Null) => {}
            Some(Value::Array(items)) => {
                if !items.is_empty() && !kind.is_container() {
                    return Err(schema(
                        &format!("{path}.children"),
                        format!("{kind} node cannot have children"),
                    ));
                }
                for (i, c) in items.iter().enumerate() {
                    children.push(self.node(c, &format!("{path}.children[{i}]"))?);
                }
            }
            Some(other) => {
                return Err(schema(
                    &format!("{path}.children"),
                    format!("expected array, found {}", type_name(other)),
                ))
            }
        }

        Ok(DesignNode {
            id,
            name,
            kind,
            bounds,
            fills,
            strokes,
            text,
            children,
        })
    }

    fn bounds(&self, v: &Value, path: &str) -> Result<Bounds, ParseError> {
        let o = self.object(v, path)?;
        let b = Bounds {
            x: self.number(o, "x", path)?,
            y: self.number(o, "y", path)?,
            w: self.number(o, "w", path)?,
            h: self.number(o, "h", path)?,
        };
        if b.w < 0.0 || b.h < 0.0 {
            return Err(schema(path, "width and height must be nonnegative"));
        }
        Ok(b)
    }

    fn color(&self, v: &Value, path: &str) -> Result<Color, ParseError> {
        let o = self.object(v, path)?;
        Color::try_new(
            self.number(o, "r", path)?,
            self.number(o, "g", path)?,
            self.number(o, "b", path)?,
            self.number(o, "a", path)?,
        )
        .map_err(|e| schema(path, e.to_string()))
    }

    fn text(&self, v: &Value, path: &str) -> Result<TextStyle, ParseError> {
        let o = self.object(v, path)?;
        let characters = self.string(o, "characters", path)?;
        let font_size = self.number(o, "fontSize", path)?;
        if font_size <= 0.0 {
            return Err(schema(
                &format!("{path}.fontSize"),
                "font size must be positive",
            ));
        }
        let weight_value = self.field(o, "fontWeight", path)?;
        let font_weight = weight_value
            .as_u64()
            .filter(|w| (100..=1000).contains(w))
            .ok_or_else(|| {
                schema(
                    &format!("{path}.fontWeight"),
                    format!("expected integer in [100, 1000], found {weight_value}"),
                )
            })? as u16;
        let font_family = self.string(o, "fontFamily", path)?;
        Ok(TextStyle {
            characters,
            font_size,
            font_weight,
            font_family,
        })
    }
}

fn color_value(c: &Color) -> Value {
    serde_json::json!({ "r": c.r, "g": c.g, "b": c.b, "a": c.a })
}

fn node_value(n: &DesignNode) -> Value {
    let mut o = Map::new();
    o.insert("id".into(), n.id.clone().into());
    o.insert("name".into(), n.name.clone().into());
    o.insert("type".into(), n.kind.as_str().into());
    o.insert(
        "bounds".into(),
        serde_json::json!({ "x": n.bounds.x, "y": n.bounds.y, "w": n.bounds.w, "h": n.bounds.h }),
    );
    o.insert(
        "fills".into(),
        n.fills
            .iter()
            .map(|c| serde_json::json!({ "type": "SOLID", "color": color_value(c) }))
            .collect(),
    );
    o.insert(
        "strokes".into(),
        n.strokes
            .iter()
            .map(|s| serde_json::json!({ "color": color_value(&s.color), "weight": s.weight }))
            .collect(),
    );
    if let Some(t) = &n.text {
        o.insert(
            "text".into(),
            serde_json::json!({
                "characters": t.characters,
                "fontSize": t.font_size,
                "fontWeight": t.font_weight,
                "fontFamily": t.font_family,
            }),
        );
    }
    if n.kind.is_container() {
        o.insert(
            "children".into(),
            n.children.iter().map(node_value).collect(),
        );
    }
    Value::Object(o)
}

impl DesignDocument {
    /// Canonical JSON value: keys sorted, optional members omitted when empty.
    pub fn to_value(&self) -> Value {
        serde_json::json!({
            "schemaVersion": SCHEMA_VERSION,
            "name": self.name,
            "frames": self.frames.iter().map(node_value).collect::<Vec<_>>(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.frames.iter().map(DesignNode::subtree_len).sum()
    }
}

/// Canonical interchange text. Serializing the same model twice yields the
/// same bytes, so byte equality is a valid model-equality check.
pub fn serialize_document(doc: &DesignDocument) -> String {
    let mut out = serde_json::to_string_pretty(&doc.to_value()).expect("document value serializes");
    out.push('\n');
    out
}

impl Serialize for DesignDocument {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DesignDocument {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        document_from_value(&v)
            .map(|(doc, _)| doc)
            .map_err(serde::de::Error::custom)
    }
}

pub fn find_node<'a>(doc: &'a DesignDocument, id: &str) -> Option<&'a DesignNode> {
    doc.frames
        .iter()
        .flat_map(DesignNode::iter)
        .find(|n| n.id == id)
}

pub(crate) fn find_node_mut<'a>(
    doc: &'a mut DesignDocument,
    id: &str,
) -> Option<&'a mut DesignNode> {
    fn go<'a>(node: &'a mut DesignNode, id: &str) -> Option<&'a mut DesignNode> {
        if node.id == id {
            return Some(node);
        }
        node.children.iter_mut().find_map(|c| go(c, id))
    }
    doc.frames.iter_mut().find_map(|f| go(f, id))
}

/// One step of a depth-first traversal.
#[derive(Debug, Clone)]
pub struct WalkEntry<'a> {
    pub node: &'a DesignNode,
    /// Ancestors, root first.
    pub ancestors: Vec<&'a DesignNode>,
}

impl WalkEntry<'_> {
    pub fn path(&self) -> Vec<&str> {
        self.ancestors.iter().map(|a| a.id.as_str()).collect()
    }

    pub fn depth(&self) -> usize {
        self.ancestors.len()
    }
}

/// Depth-first pre-order over every frame, in document order.
pub fn walk(doc: &DesignDocument) -> Vec<WalkEntry<'_>> {
    fn go<'a>(node: &'a DesignNode, stack: &mut Vec<&'a DesignNode>, out: &mut Vec<WalkEntry<'a>>) {
        out.push(WalkEntry {
            node,
            ancestors: stack.clone(),
        });
        stack.push(node);
        for c in &node.children {
            go(c, stack, out);
        }
        stack.pop();
    }
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for f in &doc.frames {
        go(f, &mut stack, &mut out);
    }
    out
}

/// Ancestors of the node with `id`, root first, or `None` when absent.
pub fn ancestors<'a>(doc: &'a DesignDocument, id: &str) -> Option<Vec<&'a DesignNode>> {
    walk(doc)
        .into_iter()
        .find(|e| e.node.id == id)
        .map(|e| e.ancestors)
}
