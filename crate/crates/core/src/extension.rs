//! The YAML sidecar carrying closures, actuation and joint replacements.
//!
//! ```yaml
//! closed_loop:
//! - name: knee
//!   type: 6D
//!   link_1: closure_6d_knee_A
//!   link_2: closure_6d_knee_B
//! actuated:
//! - motor_knee
//! joint_replacements:
//!   ankle_ball: spherical
//!   "wrist_x,wrist_y,wrist_z": spherical
//! ```
//!
//! Unknown top-level keys are carried through untouched.

use crate::urdf::UrdfDocument;
use regex::Regex;
use serde_yaml::{Mapping, Value};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_CLOSURE_PATTERN: &str =
    r"^closure_(?P<type>3d|6d|3D|6D)_(?P<id>.+)_(?P<endpoint>[AB])$";
pub const DEFAULT_ACTUATED_PATTERN: &str = r"^motor_.*$";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtensionError {
    #[error("YAML syntax error{}: {message}", location.map(|(l, c)| format!(" at {l}:{c}")).unwrap_or_default())]
    YamlSyntax {
        location: Option<(usize, usize)>,
        message: String,
    },
    #[error("bad constraint type `{0}` (expected 3D or 6D)")]
    BadConstraintType(String),
    #[error("duplicate closure name `{0}`")]
    DuplicateClosureName(String),
    #[error("closure `{0}` uses the same frame for both ends")]
    SameFrame(String),
    #[error("joint `{0}` listed twice as actuated")]
    DuplicateActuatedJoint(String),
    #[error("unsupported replacement `{value}` for `{target}` (expected spherical)")]
    BadReplacementTarget { target: String, value: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("closure frame `{0}` has no partner")]
    UnpairedClosureFrame(String),
    #[error("closure id `{0}` cannot be paired unambiguously")]
    AmbiguousPair(String),
    #[error("bad naming pattern `{pattern}`: {reason}")]
    BadPattern { pattern: String, reason: String },
}

impl ExtensionError {
    pub fn code(&self) -> &'static str {
        match self {
            ExtensionError::YamlSyntax { .. } => "YamlSyntax",
            ExtensionError::BadConstraintType(_) => "BadConstraintType",
            ExtensionError::DuplicateClosureName(_) => "DuplicateClosureName",
            ExtensionError::SameFrame(_) => "SameFrame",
            ExtensionError::DuplicateActuatedJoint(_) => "DuplicateActuatedJoint",
            ExtensionError::BadReplacementTarget { .. } => "BadReplacementTarget",
            ExtensionError::Schema { .. } => "Schema",
            ExtensionError::UnpairedClosureFrame(_) => "UnpairedClosureFrame",
            ExtensionError::AmbiguousPair(_) => "AmbiguousPair",
            ExtensionError::BadPattern { .. } => "BadPattern",
        }
    }

    pub fn subject(&self) -> String {
        match self {
            ExtensionError::YamlSyntax { location, .. } => location
                .map(|(l, c)| format!("{l}:{c}"))
                .unwrap_or_default(),
            ExtensionError::BadConstraintType(s)
            | ExtensionError::DuplicateClosureName(s)
            | ExtensionError::SameFrame(s)
            | ExtensionError::DuplicateActuatedJoint(s)
            | ExtensionError::UnpairedClosureFrame(s)
            | ExtensionError::AmbiguousPair(s) => s.clone(),
            ExtensionError::BadReplacementTarget { target, .. } => target.clone(),
            ExtensionError::Schema { path, .. } => path.clone(),
            ExtensionError::BadPattern { pattern, .. } => pattern.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintType {
    Constraint3D,
    Constraint6D,
}

impl ConstraintType {
    pub fn dim(self) -> usize {
        match self {
            ConstraintType::Constraint3D => 3,
            ConstraintType::Constraint6D => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintType::Constraint3D => "3D",
            ConstraintType::Constraint6D => "6D",
        }
    }
}

impl fmt::Display for ConstraintType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintType {
    type Err = ExtensionError;

    fn from_str(s: &str) -> Result<Self, ExtensionError> {
        match s.to_ascii_uppercase().as_str() {
            "3D" | "CONSTRAINT_3D" => Ok(ConstraintType::Constraint3D),
            "6D" | "CONSTRAINT_6D" => Ok(ConstraintType::Constraint6D),
            _ => Err(ExtensionError::BadConstraintType(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureSpec {
    pub name: String,
    pub kind: ConstraintType,
    pub frame_a: String,
    pub frame_b: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ReplacementTarget {
    Joint(String),
    /// Three consecutive revolutes, parent-most first.
    Chain([String; 3]),
}

impl ReplacementTarget {
    pub fn key(&self) -> String {
        match self {
            ReplacementTarget::Joint(j) => j.clone(),
            ReplacementTarget::Chain(c) => c.join(","),
        }
    }

    pub fn joints(&self) -> Vec<&str> {
        match self {
            ReplacementTarget::Joint(j) => vec![j.as_str()],
            ReplacementTarget::Chain(c) => c.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReplacementKind {
    Spherical,
}

impl ReplacementKind {
    pub fn as_str(self) -> &'static str {
        "spherical"
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replacement {
    pub target: ReplacementTarget,
    pub kind: ReplacementKind,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExtensionDoc {
    pub closures: Vec<ClosureSpec>,
    /// Actuated joint names; the order is the actuation-vector layout.
    pub actuated: Vec<String>,
    pub replacements: Vec<Replacement>,
    pub extras: Mapping,
}

impl ExtensionDoc {
    pub fn is_empty(&self) -> bool {
        self.closures.is_empty()
            && self.actuated.is_empty()
            && self.replacements.is_empty()
            && self.extras.is_empty()
    }

    /// Checks the list invariants (unique names, distinct frames, no repeated actuators).
    pub fn check(&self) -> Result<(), ExtensionError> {
        let mut names = HashSet::new();
        for c in &self.closures {
            if !names.insert(c.name.as_str()) {
                return Err(ExtensionError::DuplicateClosureName(c.name.clone()));
            }
            if c.frame_a == c.frame_b {
                return Err(ExtensionError::SameFrame(c.name.clone()));
            }
        }
        let mut act = HashSet::new();
        for a in &self.actuated {
            if !act.insert(a.as_str()) {
                return Err(ExtensionError::DuplicateActuatedJoint(a.clone()));
            }
        }
        Ok(())
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ExtensionError {
    ExtensionError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn as_string(v: &Value, path: &str) -> Result<String, ExtensionError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(schema(path, "expected a string")),
    }
}

fn as_sequence<'a>(v: &'a Value, path: &str) -> Result<&'a [Value], ExtensionError> {
    match v {
        Value::Null => Ok(&[]),
        Value::Sequence(s) => Ok(s),
        _ => Err(schema(path, "expected a list")),
    }
}

pub fn parse_extension(yaml_text: &str) -> Result<ExtensionDoc, ExtensionError> {
    let value: Value = serde_yaml::from_str(yaml_text).map_err(|e| ExtensionError::YamlSyntax {
        location: e.location().map(|l| (l.line(), l.column())),
        message: e.to_string(),
    })?;
    let map = match value {
        Value::Null => return Ok(ExtensionDoc::default()),
        Value::Mapping(m) => m,
        _ => return Err(schema("/", "top level must be a mapping")),
    };
    let mut doc = ExtensionDoc::default();
    for (key, value) in map {
        let Value::String(key_str) = &key else {
            doc.extras.insert(key, value);
            continue;
        };
        match key_str.as_str() {
            "closed_loop" => {
                for (i, entry) in as_sequence(&value, "closed_loop")?.iter().enumerate() {
                    doc.closures
                        .push(parse_closure(entry, &format!("closed_loop[{i}]"))?);
                }
            }
            "actuated" => {
                for (i, entry) in as_sequence(&value, "actuated")?.iter().enumerate() {
                    doc.actuated
                        .push(as_string(entry, &format!("actuated[{i}]"))?);
                }
            }
            "joint_replacements" => match &value {
                Value::Null => {}
                Value::Mapping(m) => {
                    for (k, v) in m {
                        let key = as_string(k, "joint_replacements")?;
                        doc.replacements.push(parse_replacement(&key, v)?);
                    }
                }
                _ => return Err(schema("joint_replacements", "expected a mapping")),
            },
            _ => {
                doc.extras.insert(key, value);
            }
        }
    }
    doc.check()?;
    Ok(doc)
}

fn parse_closure(entry: &Value, path: &str) -> Result<ClosureSpec, ExtensionError> {
    let Value::Mapping(m) = entry else {
        return Err(schema(path, "expected a mapping"));
    };
    let mut fields: BTreeMap<&str, String> = BTreeMap::new();
    for (k, v) in m {
        let k = match k {
            Value::String(s) => s.as_str(),
            _ => return Err(schema(path, "keys must be strings")),
        };
        if !matches!(k, "name" | "type" | "link_1" | "link_2") {
            return Err(schema(format!("{path}.{k}"), "unknown key"));
        }
        fields.insert(k, as_string(v, &format!("{path}.{k}"))?);
    }
    let mut take = |k: &str| {
        fields
            .remove(k)
            .ok_or_else(|| schema(format!("{path}.{k}"), "missing key"))
    };
    let name = take("name")?;
    let kind: ConstraintType = take("type")?.parse()?;
    Ok(ClosureSpec {
        name,
        kind,
        frame_a: take("link_1")?,
        frame_b: take("link_2")?,
    })
}

fn parse_replacement(key: &str, value: &Value) -> Result<Replacement, ExtensionError> {
    let path = format!("joint_replacements.{key}");
    let target_str = as_string(value, &path)?;
    if !target_str.eq_ignore_ascii_case("spherical") {
        return Err(ExtensionError::BadReplacementTarget {
            target: key.to_string(),
            value: target_str,
        });
    }
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    let target = match parts.as_slice() {
        [single] if !single.is_empty() => ReplacementTarget::Joint(single.to_string()),
        [a, b, c]
            if !a.is_empty() && !b.is_empty() && !c.is_empty() && a != b && b != c && a != c =>
        {
            ReplacementTarget::Chain([a.to_string(), b.to_string(), c.to_string()])
        }
        _ => {
            return Err(schema(
                path,
                "key must be one joint name or three distinct comma-separated names",
            ))
        }
    };
    Ok(Replacement {
        target,
        kind: ReplacementKind::Spherical,
    })
}

/// Writes `closed_loop` and `actuated` always, `joint_replacements` when
/// nonempty, then the extra keys in their original order.
pub fn serialize_extension(doc: &ExtensionDoc) -> String {
    let s = |x: &str| Value::String(x.to_string());
    let mut map = Mapping::new();
    let closures = doc
        .closures
        .iter()
        .map(|c| {
            let mut m = Mapping::new();
            m.insert(s("name"), s(&c.name));
            m.insert(s("type"), s(c.kind.as_str()));
            m.insert(s("link_1"), s(&c.frame_a));
            m.insert(s("link_2"), s(&c.frame_b));
            Value::Mapping(m)
        })
        .collect();
    map.insert(s("closed_loop"), Value::Sequence(closures));
    map.insert(
        s("actuated"),
        Value::Sequence(doc.actuated.iter().map(|a| s(a)).collect()),
    );
    if !doc.replacements.is_empty() {
        let mut m = Mapping::new();
        for r in &doc.replacements {
            m.insert(s(&r.target.key()), s(r.kind.as_str()));
        }
        map.insert(s("joint_replacements"), Value::Mapping(m));
    }
    for (k, v) in &doc.extras {
        map.insert(k.clone(), v.clone());
    }
    serde_yaml::to_string(&Value::Mapping(map)).expect("a YAML value always serializes")
}

/// Regexes that recognize closure frames (by link name) and actuated joints.
#[derive(Clone, Debug)]
pub struct NamingConvention {
    pub closure: Regex,
    pub actuated: Regex,
}

impl Default for NamingConvention {
    fn default() -> Self {
        NamingConvention::new(DEFAULT_CLOSURE_PATTERN, DEFAULT_ACTUATED_PATTERN)
            .expect("default patterns are valid")
    }
}

impl NamingConvention {
    /// The closure pattern needs the named groups `type`, `id` and `endpoint`.
    pub fn new(closure: &str, actuated: &str) -> Result<Self, ExtensionError> {
        let compile = |p: &str| {
            Regex::new(p).map_err(|e| ExtensionError::BadPattern {
                pattern: p.to_string(),
                reason: e.to_string(),
            })
        };
        let closure_re = compile(closure)?;
        let names: HashSet<&str> = closure_re.capture_names().flatten().collect();
        for group in ["type", "id", "endpoint"] {
            if !names.contains(group) {
                return Err(ExtensionError::BadPattern {
                    pattern: closure.to_string(),
                    reason: format!("missing named group `{group}`"),
                });
            }
        }
        Ok(NamingConvention {
            closure: closure_re,
            actuated: compile(actuated)?,
        })
    }
}

/// Builds an extension document from naming conventions.
///
/// Closure frames are paired by id; the endpoint tag that sorts first becomes
/// `link_1`. Closures come out sorted by id, actuated joints in document order.
pub fn generate_extension(
    doc: &UrdfDocument,
    convention: &NamingConvention,
) -> Result<ExtensionDoc, ExtensionError> {
    struct Hit<'a> {
        link: &'a str,
        kind: String,
        endpoint: String,
    }
    let mut by_id: BTreeMap<String, Vec<Hit>> = BTreeMap::new();
    for link in &doc.links {
        let Some(caps) = convention.closure.captures(&link.name) else {
            continue;
        };
        let group = |g: &str| caps.name(g).map_or("", |m| m.as_str()).to_string();
        by_id.entry(group("id")).or_default().push(Hit {
            link: &link.name,
            kind: group("type"),
            endpoint: group("endpoint"),
        });
    }
    let mut closures = Vec::new();
    for (id, mut hits) in by_id {
        match hits.len() {
            1 => {
                return Err(ExtensionError::UnpairedClosureFrame(
                    hits[0].link.to_string(),
                ))
            }
            2 => {}
            _ => return Err(ExtensionError::AmbiguousPair(id)),
        }
        hits.sort_by(|a, b| a.endpoint.cmp(&b.endpoint));
        if hits[0].endpoint == hits[1].endpoint {
            return Err(ExtensionError::AmbiguousPair(id));
        }
        let kind: ConstraintType = hits[0].kind.parse()?;
        let kind_b: ConstraintType = hits[1].kind.parse()?;
        if kind != kind_b {
            return Err(ExtensionError::AmbiguousPair(id));
        }
        closures.push(ClosureSpec {
            name: id,
            kind,
            frame_a: hits[0].link.to_string(),
            frame_b: hits[1].link.to_string(),
        });
    }
    let actuated = doc
        .joints
        .iter()
        .filter(|j| convention.actuated.is_match(&j.name))
        .map(|j| j.name.clone())
        .collect();
    let ext = ExtensionDoc {
        closures,
        actuated,
        replacements: Vec::new(),
        extras: Mapping::new(),
    };
    ext.check()?;
    Ok(ext)
}
