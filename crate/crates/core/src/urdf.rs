//! URDF reader and writer.
//!
//! Only the kinematic and inertial subset is interpreted. `visual`, `collision`,
//! `mimic` and `transmission` elements are kept as raw text so a document can be
//! written back out; anything else is ignored.

use crate::inertia::SpatialInertia;
use crate::se3::{Placement, Rotation};
use crate::text::{format_f64, format_list};
use nalgebra::{Matrix3, Vector3};
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UrdfError {
    #[error("XML syntax error at {line}:{col}: {message}")]
    XmlSyntax {
        line: u32,
        col: u32,
        message: String,
    },
    #[error("joint `{joint}` has unknown type `{kind}`")]
    UnknownJointType { joint: String, kind: String },
    #[error("joint `{joint}` references unknown link `{link}`")]
    DanglingLinkRef { joint: String, link: String },
    #[error("link `{link}` is the child of more than one joint")]
    MultipleParents { link: String },
    #[error("more than one root link: {}", roots.join(", "))]
    MultipleRoots { roots: Vec<String> },
    #[error("missing attribute or element `{path}`")]
    MissingAttribute { path: String },
    #[error("invalid value `{value}` at `{path}`: {reason}")]
    InvalidValue {
        path: String,
        value: String,
        reason: String,
    },
    #[error("duplicate {what} name `{name}`")]
    DuplicateName { what: &'static str, name: String },
    #[error("links not reachable from a root (kinematic loop): {}", links.join(", "))]
    KinematicLoop { links: Vec<String> },
    #[error("document root is `<{found}>`, expected `<robot>`")]
    NotARobot { found: String },
}

impl UrdfError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            UrdfError::XmlSyntax { .. } => "XmlSyntax",
            UrdfError::UnknownJointType { .. } => "UnknownJointType",
            UrdfError::DanglingLinkRef { .. } => "DanglingLinkRef",
            UrdfError::MultipleParents { .. } => "MultipleParents",
            UrdfError::MultipleRoots { .. } => "MultipleRoots",
            UrdfError::MissingAttribute { .. } => "MissingAttribute",
            UrdfError::InvalidValue { .. } => "InvalidValue",
            UrdfError::DuplicateName { .. } => "DuplicateName",
            UrdfError::KinematicLoop { .. } => "KinematicLoop",
            UrdfError::NotARobot { .. } => "NotARobot",
        }
    }

    /// Name of the element the error is about, when there is one.
    pub fn subject(&self) -> String {
        match self {
            UrdfError::XmlSyntax { line, col, .. } => format!("{line}:{col}"),
            UrdfError::UnknownJointType { joint, .. } => joint.clone(),
            UrdfError::DanglingLinkRef { joint, .. } => joint.clone(),
            UrdfError::MultipleParents { link } => link.clone(),
            UrdfError::MultipleRoots { roots } => roots.join(","),
            UrdfError::MissingAttribute { path } => path.clone(),
            UrdfError::InvalidValue { path, .. } => path.clone(),
            UrdfError::DuplicateName { name, .. } => name.clone(),
            UrdfError::KinematicLoop { links } => links.join(","),
            UrdfError::NotARobot { found } => found.clone(),
        }
    }
}

/// `<origin>` as written: translation and fixed-axis roll-pitch-yaw.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Origin {
    pub xyz: Vector3<f64>,
    pub rpy: Vector3<f64>,
}

impl Origin {
    pub fn placement(&self) -> Placement {
        Placement::new(
            Rotation::from_rpy(self.rpy.x, self.rpy.y, self.rpy.z),
            self.xyz,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Inertial {
    pub origin: Origin,
    pub mass: f64,
    /// ixx, ixy, ixz, iyy, iyz, izz in the `origin` frame.
    pub inertia: [f64; 6],
}

impl Inertial {
    /// Inertia expressed in the link frame.
    pub fn spatial(&self) -> SpatialInertia {
        let [ixx, ixy, ixz, iyy, iyz, izz] = self.inertia;
        let local = Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
        SpatialInertia::new(self.mass, Vector3::zeros(), local)
            .transformed(&self.origin.placement())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkDesc {
    pub name: String,
    pub inertial: Option<Inertial>,
    /// Raw `<visual>` / `<collision>` elements.
    pub blobs: Vec<String>,
}

impl LinkDesc {
    pub fn new(name: impl Into<String>) -> Self {
        LinkDesc {
            name: name.into(),
            inertial: None,
            blobs: Vec::new(),
        }
    }

    pub fn inertia(&self) -> SpatialInertia {
        self.inertial
            .as_ref()
            .map(Inertial::spatial)
            .unwrap_or_default()
    }

    pub fn mass(&self) -> f64 {
        self.inertial.as_ref().map_or(0.0, |i| i.mass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JointKind {
    Revolute,
    Continuous,
    Prismatic,
    Fixed,
    Floating,
    Planar,
}

impl JointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Continuous => "continuous",
            JointKind::Prismatic => "prismatic",
            JointKind::Fixed => "fixed",
            JointKind::Floating => "floating",
            JointKind::Planar => "planar",
        }
    }

    fn uses_axis(self) -> bool {
        !matches!(self, JointKind::Fixed | JointKind::Floating)
    }
}

impl FromStr for JointKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "revolute" => JointKind::Revolute,
            "continuous" => JointKind::Continuous,
            "prismatic" => JointKind::Prismatic,
            "fixed" => JointKind::Fixed,
            "floating" => JointKind::Floating,
            "planar" => JointKind::Planar,
            _ => return Err(()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct JointLimit {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub effort: Option<f64>,
    pub velocity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointDesc {
    pub name: String,
    pub kind: JointKind,
    pub parent: String,
    pub child: String,
    pub origin: Origin,
    pub axis: Vector3<f64>,
    pub limit: Option<JointLimit>,
    /// Raw `<mimic>` element.
    pub mimic: Option<String>,
}

impl JointDesc {
    pub fn new(
        name: impl Into<String>,
        kind: JointKind,
        parent: impl Into<String>,
        child: impl Into<String>,
    ) -> Self {
        JointDesc {
            name: name.into(),
            kind,
            parent: parent.into(),
            child: child.into(),
            origin: Origin::default(),
            axis: Vector3::x(),
            limit: None,
            mimic: None,
        }
    }

    pub fn position_limits(&self) -> Option<(f64, f64)> {
        let l = self.limit.as_ref()?;
        Some((l.lower?, l.upper?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UrdfDocument {
    pub name: String,
    pub links: Vec<LinkDesc>,
    pub joints: Vec<JointDesc>,
    /// Raw `<transmission>` elements.
    pub transmissions: Vec<String>,
}

impl UrdfDocument {
    pub fn link(&self, name: &str) -> Option<&LinkDesc> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn joint(&self, name: &str) -> Option<&JointDesc> {
        self.joints.iter().find(|j| j.name == name)
    }

    /// The link that is nobody's child.
    pub fn root(&self) -> &str {
        let children: HashSet<&str> = self.joints.iter().map(|j| j.child.as_str()).collect();
        self.links
            .iter()
            .map(|l| l.name.as_str())
            .find(|n| !children.contains(n))
            .expect("validated document has a root")
    }

    /// Joints whose parent is `link`, in declaration order.
    pub fn child_joints<'a>(&'a self, link: &'a str) -> impl Iterator<Item = &'a JointDesc> + 'a {
        self.joints.iter().filter(move |j| j.parent == link)
    }

    /// Checks the tree invariants.
    pub fn check_tree(&self) -> Result<(), UrdfError> {
        let mut link_names = HashSet::new();
        for l in &self.links {
            if !link_names.insert(l.name.as_str()) {
                return Err(UrdfError::DuplicateName {
                    what: "link",
                    name: l.name.clone(),
                });
            }
        }
        let mut joint_names = HashSet::new();
        let mut parent_of: HashMap<&str, &str> = HashMap::new();
        for j in &self.joints {
            if !joint_names.insert(j.name.as_str()) {
                return Err(UrdfError::DuplicateName {
                    what: "joint",
                    name: j.name.clone(),
                });
            }
            for link in [&j.parent, &j.child] {
                if !link_names.contains(link.as_str()) {
                    return Err(UrdfError::DanglingLinkRef {
                        joint: j.name.clone(),
                        link: link.clone(),
                    });
                }
            }
            if parent_of
                .insert(j.child.as_str(), j.parent.as_str())
                .is_some()
            {
                return Err(UrdfError::MultipleParents {
                    link: j.child.clone(),
                });
            }
        }
        let roots: Vec<String> = self
            .links
            .iter()
            .filter(|l| !parent_of.contains_key(l.name.as_str()))
            .map(|l| l.name.clone())
            .collect();
        if roots.len() > 1 {
            return Err(UrdfError::MultipleRoots { roots });
        }
        let unreachable: Vec<String> = match roots.first() {
            None => self.links.iter().map(|l| l.name.clone()).collect(),
            Some(root) => {
                let mut reached = HashSet::from([root.as_str()]);
                let mut stack = vec![root.as_str()];
                while let Some(l) = stack.pop() {
                    for j in self.child_joints(l) {
                        if reached.insert(j.child.as_str()) {
                            stack.push(j.child.as_str());
                        }
                    }
                }
                self.links
                    .iter()
                    .filter(|l| !reached.contains(l.name.as_str()))
                    .map(|l| l.name.clone())
                    .collect()
            }
        };
        if !unreachable.is_empty() {
            return Err(UrdfError::KinematicLoop { links: unreachable });
        }
        debug_assert_eq!(self.joints.len() + 1, self.links.len());
        Ok(())
    }
}

pub fn parse_urdf(xml_text: &str) -> Result<UrdfDocument, UrdfError> {
    let opts = roxmltree::ParsingOptions {
        allow_dtd: true,
        ..Default::default()
    };
    let doc = roxmltree::Document::parse_with_options(xml_text, opts).map_err(|e| {
        let pos = e.pos();
        UrdfError::XmlSyntax {
            line: pos.row,
            col: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "robot" {
        return Err(UrdfError::NotARobot {
            found: root.tag_name().name().to_string(),
        });
    }
    let name = required_attr(root, "name", "robot")?.to_string();
    let mut links = Vec::new();
    let mut joints = Vec::new();
    let mut transmissions = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => links.push(parse_link(node, xml_text)?),
            "joint" => joints.push(parse_joint(node, xml_text)?),
            "transmission" => transmissions.push(raw(node, xml_text)),
            _ => {}
        }
    }
    let doc = UrdfDocument {
        name,
        links,
        joints,
        transmissions,
    };
    doc.check_tree()?;
    Ok(doc)
}

fn raw(node: roxmltree::Node, text: &str) -> String {
    text[node.range()].to_string()
}

fn required_attr<'a>(
    node: roxmltree::Node<'a, '_>,
    attr: &str,
    path: &str,
) -> Result<&'a str, UrdfError> {
    node.attribute(attr)
        .ok_or_else(|| UrdfError::MissingAttribute {
            path: format!("{path}@{attr}"),
        })
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, tag: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == tag)
}

fn parse_f64(value: &str, path: &str) -> Result<f64, UrdfError> {
    let x: f64 = value.trim().parse().map_err(|_| UrdfError::InvalidValue {
        path: path.to_string(),
        value: value.to_string(),
        reason: "not a number".into(),
    })?;
    if !x.is_finite() {
        return Err(UrdfError::InvalidValue {
            path: path.to_string(),
            value: value.to_string(),
            reason: "not finite".into(),
        });
    }
    Ok(x)
}

fn parse_vec3(value: &str, path: &str) -> Result<Vector3<f64>, UrdfError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(UrdfError::InvalidValue {
            path: path.to_string(),
            value: value.to_string(),
            reason: "expected three numbers".into(),
        });
    }
    let mut out = Vector3::zeros();
    for (i, p) in parts.iter().enumerate() {
        out[i] = parse_f64(p, path)?;
    }
    Ok(out)
}

fn optional_f64(node: roxmltree::Node, attr: &str, path: &str) -> Result<Option<f64>, UrdfError> {
    node.attribute(attr)
        .map(|v| parse_f64(v, &format!("{path}@{attr}")))
        .transpose()
}

fn parse_origin(node: Option<roxmltree::Node>, path: &str) -> Result<Origin, UrdfError> {
    let Some(node) = node else {
        return Ok(Origin::default());
    };
    let path = format!("{path}/origin");
    let xyz = match node.attribute("xyz") {
        Some(v) => parse_vec3(v, &format!("{path}@xyz"))?,
        None => Vector3::zeros(),
    };
    let rpy = match node.attribute("rpy") {
        Some(v) => parse_vec3(v, &format!("{path}@rpy"))?,
        None => Vector3::zeros(),
    };
    Ok(Origin { xyz, rpy })
}

fn parse_link(node: roxmltree::Node, text: &str) -> Result<LinkDesc, UrdfError> {
    let name = required_attr(node, "name", "link")?.to_string();
    let path = format!("link[{name}]");
    let mut link = LinkDesc::new(name);
    for c in node.children().filter(|n| n.is_element()) {
        match c.tag_name().name() {
            "inertial" => link.inertial = Some(parse_inertial(c, &path)?),
            "visual" | "collision" => link.blobs.push(raw(c, text)),
            _ => {}
        }
    }
    Ok(link)
}

fn parse_inertial(node: roxmltree::Node, path: &str) -> Result<Inertial, UrdfError> {
    let path = format!("{path}/inertial");
    let origin = parse_origin(child(node, "origin"), &path)?;
    let mass_node = child(node, "mass").ok_or_else(|| UrdfError::MissingAttribute {
        path: format!("{path}/mass"),
    })?;
    let mass_path = format!("{path}/mass");
    let mass = parse_f64(
        required_attr(mass_node, "value", &mass_path)?,
        &format!("{mass_path}@value"),
    )?;
    if mass < 0.0 {
        return Err(UrdfError::InvalidValue {
            path: format!("{mass_path}@value"),
            value: format_f64(mass),
            reason: "mass must be nonnegative".into(),
        });
    }
    let inertia_node = child(node, "inertia").ok_or_else(|| UrdfError::MissingAttribute {
        path: format!("{path}/inertia"),
    })?;
    let inertia_path = format!("{path}/inertia");
    let mut inertia = [0.0; 6];
    for (slot, attr) in inertia
        .iter_mut()
        .zip(["ixx", "ixy", "ixz", "iyy", "iyz", "izz"])
    {
        *slot = parse_f64(
            required_attr(inertia_node, attr, &inertia_path)?,
            &format!("{inertia_path}@{attr}"),
        )?;
    }
    Ok(Inertial {
        origin,
        mass,
        inertia,
    })
}

fn parse_joint(node: roxmltree::Node, text: &str) -> Result<JointDesc, UrdfError> {
    let name = required_attr(node, "name", "joint")?.to_string();
    let path = format!("joint[{name}]");
    let kind_str = required_attr(node, "type", &path)?;
    let kind: JointKind = kind_str.parse().map_err(|_| UrdfError::UnknownJointType {
        joint: name.clone(),
        kind: kind_str.to_string(),
    })?;
    let link_ref = |tag: &str| -> Result<String, UrdfError> {
        let el = child(node, tag).ok_or_else(|| UrdfError::MissingAttribute {
            path: format!("{path}/{tag}"),
        })?;
        Ok(required_attr(el, "link", &format!("{path}/{tag}"))?.to_string())
    };
    let parent = link_ref("parent")?;
    let child_link = link_ref("child")?;
    let origin = parse_origin(child(node, "origin"), &path)?;

    let mut axis = Vector3::x();
    if let Some(a) = child(node, "axis") {
        if let Some(v) = a.attribute("xyz") {
            let apath = format!("{path}/axis@xyz");
            axis = parse_vec3(v, &apath)?;
            let n = axis.norm();
            if n < 1e-12 {
                return Err(UrdfError::InvalidValue {
                    path: apath,
                    value: v.to_string(),
                    reason: "axis has zero length".into(),
                });
            }
            if (n - 1.0).abs() > 1e-12 {
                axis /= n;
            }
        }
    }

    let limit = match child(node, "limit") {
        Some(l) => {
            let lpath = format!("{path}/limit");
            Some(JointLimit {
                lower: optional_f64(l, "lower", &lpath)?,
                upper: optional_f64(l, "upper", &lpath)?,
                effort: optional_f64(l, "effort", &lpath)?,
                velocity: optional_f64(l, "velocity", &lpath)?,
            })
        }
        None => None,
    };
    match kind {
        JointKind::Revolute => {
            let lpath = format!("{path}/limit");
            let l = limit.ok_or_else(|| UrdfError::MissingAttribute {
                path: lpath.clone(),
            })?;
            for (v, attr) in [(l.lower, "lower"), (l.upper, "upper")] {
                if v.is_none() {
                    return Err(UrdfError::MissingAttribute {
                        path: format!("{lpath}@{attr}"),
                    });
                }
            }
        }
        JointKind::Continuous => {
            if let Some(l) = limit {
                if let Some(v) = l.lower.or(l.upper) {
                    return Err(UrdfError::InvalidValue {
                        path: format!("{path}/limit"),
                        value: format_f64(v),
                        reason: "continuous joints take no position limits".into(),
                    });
                }
            }
        }
        _ => {}
    }
    if let Some((lo, hi)) = limit.and_then(|l| Some((l.lower?, l.upper?))) {
        if lo > hi {
            return Err(UrdfError::InvalidValue {
                path: format!("{path}/limit"),
                value: format!("{} > {}", format_f64(lo), format_f64(hi)),
                reason: "lower limit exceeds upper limit".into(),
            });
        }
    }
    let mimic = child(node, "mimic").map(|m| raw(m, text));
    Ok(JointDesc {
        name,
        kind,
        parent,
        child: child_link,
        origin,
        axis,
        limit,
        mimic,
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn origin_element(o: &Origin) -> String {
    format!(
        "<origin xyz=\"{}\" rpy=\"{}\"/>",
        format_list(o.xyz.as_slice()),
        format_list(o.rpy.as_slice())
    )
}

/// Writes a document in a fixed layout: links, then joints, then transmissions,
/// two-space indentation, every float in shortest round-trip form.
pub fn serialize_urdf(doc: &UrdfDocument) -> String {
    let mut out = String::from("<?xml version=\"1.0\"?>\n");
    let _ = writeln!(out, "<robot name=\"{}\">", escape(&doc.name));
    for link in &doc.links {
        let name = escape(&link.name);
        if link.inertial.is_none() && link.blobs.is_empty() {
            let _ = writeln!(out, "  <link name=\"{name}\"/>");
            continue;
        }
        let _ = writeln!(out, "  <link name=\"{name}\">");
        for blob in &link.blobs {
            let _ = writeln!(out, "    {blob}");
        }
        if let Some(i) = &link.inertial {
            out.push_str("    <inertial>\n");
            let _ = writeln!(out, "      {}", origin_element(&i.origin));
            let _ = writeln!(out, "      <mass value=\"{}\"/>", format_f64(i.mass));
            let [ixx, ixy, ixz, iyy, iyz, izz] = i.inertia.map(format_f64);
            let _ = writeln!(
                out,
                "      <inertia ixx=\"{ixx}\" ixy=\"{ixy}\" ixz=\"{ixz}\" iyy=\"{iyy}\" iyz=\"{iyz}\" izz=\"{izz}\"/>"
            );
            out.push_str("    </inertial>\n");
        }
        out.push_str("  </link>\n");
    }
    for j in &doc.joints {
        let _ = writeln!(
            out,
            "  <joint name=\"{}\" type=\"{}\">",
            escape(&j.name),
            j.kind.as_str()
        );
        let _ = writeln!(out, "    <parent link=\"{}\"/>", escape(&j.parent));
        let _ = writeln!(out, "    <child link=\"{}\"/>", escape(&j.child));
        let _ = writeln!(out, "    {}", origin_element(&j.origin));
        if j.kind.uses_axis() || j.axis != Vector3::x() {
            let _ = writeln!(
                out,
                "    <axis xyz=\"{}\"/>",
                format_list(j.axis.as_slice())
            );
        }
        if let Some(l) = &j.limit {
            out.push_str("    <limit");
            for (attr, v) in [
                ("lower", l.lower),
                ("upper", l.upper),
                ("effort", l.effort),
                ("velocity", l.velocity),
            ] {
                if let Some(v) = v {
                    let _ = write!(out, " {attr}=\"{}\"", format_f64(v));
                }
            }
            out.push_str("/>\n");
        }
        if let Some(m) = &j.mimic {
            let _ = writeln!(out, "    {m}");
        }
        out.push_str("  </joint>\n");
    }
    for t in &doc.transmissions {
        let _ = writeln!(out, "  {t}");
    }
    out.push_str("</robot>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LINK: &str = r#"<?xml version="1.0"?>
<robot name="two">
  <link name="a"/>
  <link name="b">
    <inertial><mass value="1"/><inertia ixx="1" ixy="0" ixz="0" iyy="1" iyz="0" izz="1"/></inertial>
  </link>
  <joint name="j" type="revolute">
    <parent link="a"/><child link="b"/>
    <axis xyz="0 0 1"/>
    <limit lower="-1" upper="1"/>
  </joint>
</robot>"#;

    #[test]
    fn two_link_document() {
        let doc = parse_urdf(TWO_LINK).unwrap();
        assert_eq!(doc.links.len(), 2);
        assert_eq!(doc.joints.len(), 1);
        assert_eq!(doc.root(), "a");
        assert_eq!(doc.joints[0].origin, Origin::default());
        assert_eq!(doc.joints[0].position_limits(), Some((-1.0, 1.0)));
    }

    #[test]
    fn round_trip_two_link() {
        let doc = parse_urdf(TWO_LINK).unwrap();
        let text = serialize_urdf(&doc);
        assert_eq!(parse_urdf(&text).unwrap(), doc);
        assert_eq!(serialize_urdf(&parse_urdf(&text).unwrap()), text);
    }

    #[test]
    fn empty_robot_round_trips() {
        let doc = UrdfDocument {
            name: "solo".into(),
            links: vec![LinkDesc::new("only")],
            joints: vec![],
            transmissions: vec![],
        };
        let text = serialize_urdf(&doc);
        assert_eq!(parse_urdf(&text).unwrap(), doc);
    }

    #[test]
    fn multiple_parents() {
        let xml = r#"<robot name="r">
  <link name="a"/><link name="b"/><link name="foo"/>
  <joint name="j1" type="fixed"><parent link="a"/><child link="foo"/></joint>
  <joint name="j2" type="fixed"><parent link="b"/><child link="foo"/></joint>
</robot>"#;
        assert_eq!(
            parse_urdf(xml).unwrap_err(),
            UrdfError::MultipleParents { link: "foo".into() }
        );
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_urdf("<robot name=\"r\">\n  <link name=\"a\">\n</robot>").unwrap_err();
        match err {
            UrdfError::XmlSyntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn origin_rpy_is_fixed_axis_xyz() {
        // rpy = (r, p, y) means R = Rz(y) Ry(p) Rx(r)
        let o = Origin {
            xyz: Vector3::zeros(),
            rpy: Vector3::new(0.3, -0.2, 1.1),
        };
        let rx = Rotation::from_axis_angle(&Vector3::x(), 0.3).matrix();
        let ry = Rotation::from_axis_angle(&Vector3::y(), -0.2).matrix();
        let rz = Rotation::from_axis_angle(&Vector3::z(), 1.1).matrix();
        assert!((o.placement().rotation.matrix() - rz * ry * rx).amax() < 1e-14);
    }

    #[test]
    fn axis_is_normalized() {
        let xml = TWO_LINK.replace("0 0 1", "0 0 2");
        let doc = parse_urdf(&xml).unwrap();
        assert_eq!(doc.joints[0].axis, Vector3::z());
    }

    #[test]
    fn blobs_are_preserved() {
        let xml = TWO_LINK.replace(
            "<link name=\"a\"/>",
            "<link name=\"a\"><visual><geometry><sphere radius=\"0.1\"/></geometry></visual></link>",
        );
        let doc = parse_urdf(&xml).unwrap();
        assert_eq!(
            doc.links[0].blobs,
            vec!["<visual><geometry><sphere radius=\"0.1\"/></geometry></visual>".to_string()]
        );
        assert_eq!(parse_urdf(&serialize_urdf(&doc)).unwrap(), doc);
    }

    #[test]
    fn unknown_elements_are_skipped() {
        let xml = TWO_LINK.replace(
            "<link name=\"a\"/>",
            "<link name=\"a\"/><gazebo reference=\"a\"><material>Red</material></gazebo>",
        );
        assert!(parse_urdf(&xml).is_ok());
    }

    #[test]
    fn inertial_origin_moves_com_and_rotates_inertia() {
        let i = Inertial {
            origin: Origin {
                xyz: Vector3::new(0.1, 0.2, 0.3),
                rpy: Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
            },
            mass: 2.0,
            inertia: [1.0, 0.0, 0.0, 2.0, 0.0, 3.0],
        };
        let s = i.spatial();
        assert!((s.com - Vector3::new(0.1, 0.2, 0.3)).norm() < 1e-15);
        // a quarter turn about z swaps the x and y moments
        let expected = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 3.0));
        assert!((s.rotational - expected).amax() < 1e-14);
    }
}
