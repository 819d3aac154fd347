//! Closed-loop robot model: a kinematic tree of joints carrying rigid bodies,
//! named frames, closure constraints and actuation.

use crate::extension::{ConstraintType, ExtensionDoc, ReplacementTarget};
use crate::inertia::SpatialInertia;
use crate::kinematics::{crba, neutral};
use crate::linalg::{min_symmetric_eigenvalue, singular_values};
use crate::se3::{Placement, Rotation};
use crate::urdf::{JointKind, UrdfDocument};
use nalgebra::{Matrix3, Vector3};
use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use thiserror::Error;

/// Name of the synthetic root joint.
pub const UNIVERSE: &str = "universe";
/// Name of the joint added by [`BuildOptions::floating_base`].
pub const ROOT_JOINT: &str = "root_joint";
/// Bodies lighter than this count as massless.
pub const MASSLESS: f64 = 1e-9;
/// Smallest acceptable eigenvalue of the joint-space inertia matrix.
pub const INERTIA_EIGEN_MIN: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JointType {
    Revolute,
    Continuous,
    Prismatic,
    Fixed,
    Floating,
    Planar,
    Spherical,
}

impl JointType {
    pub fn nq(self) -> usize {
        match self {
            JointType::Revolute | JointType::Prismatic => 1,
            JointType::Continuous => 2,
            JointType::Fixed => 0,
            JointType::Floating => 7,
            JointType::Planar | JointType::Spherical => 4,
        }
    }

    pub fn nv(self) -> usize {
        match self {
            JointType::Revolute | JointType::Prismatic | JointType::Continuous => 1,
            JointType::Fixed => 0,
            JointType::Floating => 6,
            JointType::Planar | JointType::Spherical => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointType::Revolute => "revolute",
            JointType::Continuous => "continuous",
            JointType::Prismatic => "prismatic",
            JointType::Fixed => "fixed",
            JointType::Floating => "floating",
            JointType::Planar => "planar",
            JointType::Spherical => "spherical",
        }
    }

    fn is_rotational_1dof(self) -> bool {
        matches!(self, JointType::Revolute | JointType::Continuous)
    }
}

impl From<JointKind> for JointType {
    fn from(k: JointKind) -> Self {
        match k {
            JointKind::Revolute => JointType::Revolute,
            JointKind::Continuous => JointType::Continuous,
            JointKind::Prismatic => JointType::Prismatic,
            JointKind::Fixed => JointType::Fixed,
            JointKind::Floating => JointType::Floating,
            JointKind::Planar => JointType::Planar,
        }
    }
}

impl fmt::Display for JointType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One revolute joint folded into a spherical joint.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplacedJoint {
    pub name: String,
    pub kind: JointType,
    /// Axis in the replaced joint's own frame.
    pub axis: Vector3<f64>,
    /// Rotation of this joint's frame relative to the previous replaced joint
    /// (identity for the first).
    pub offset: Rotation,
    pub limits: Option<(f64, f64)>,
}

/// Records which revolutes a spherical joint stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalSource {
    pub replaced: Vec<ReplacedJoint>,
}

impl SphericalSource {
    /// Spherical-joint rotation equivalent to the given angles of the replaced joints.
    pub fn matched_rotation(&self, angles: &[f64]) -> Rotation {
        assert_eq!(angles.len(), self.replaced.len());
        let mut frame = Rotation::identity();
        let mut total = Rotation::identity();
        for (j, &theta) in self.replaced.iter().zip(angles) {
            frame = frame.compose(&j.offset);
            total = total
                .compose(&j.offset)
                .compose(&Rotation::from_axis_angle(&j.axis, theta));
        }
        frame.inverse().compose(&total)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointModel {
    pub name: String,
    pub kind: JointType,
    /// `None` only for the synthetic root.
    pub parent: Option<usize>,
    /// Joint frame relative to the parent joint's frame at zero motion.
    pub placement: Placement,
    /// Rotation/translation axis; plane normal for planar joints.
    pub axis: Vector3<f64>,
    pub q_offset: usize,
    pub nq: usize,
    pub v_offset: usize,
    pub nv: usize,
    pub limits: Option<(f64, f64)>,
    /// Body rigidly attached to the joint's child side, in the joint frame.
    pub inertia: SpatialInertia,
    /// URDF link this body was built from.
    pub link: String,
    pub spherical: Option<SphericalSource>,
}

impl JointModel {
    pub fn q_range(&self) -> Range<usize> {
        self.q_offset..self.q_offset + self.nq
    }

    pub fn v_range(&self) -> Range<usize> {
        self.v_offset..self.v_offset + self.nv
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameModel {
    pub name: String,
    pub parent: usize,
    /// Frame relative to its parent joint frame.
    pub placement: Placement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureConstraint {
    pub name: String,
    pub kind: ConstraintType,
    pub frame_a: usize,
    pub frame_b: usize,
}

impl ClosureConstraint {
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActuatedJoint {
    pub name: String,
    pub joint: usize,
    pub v_range: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    pub name: String,
    /// Topological (depth-first) order; joint 0 is the synthetic root.
    pub joints: Vec<JointModel>,
    pub frames: Vec<FrameModel>,
    pub closures: Vec<ClosureConstraint>,
    pub actuated: Vec<ActuatedJoint>,
    pub nq: usize,
    pub nv: usize,
}

/// One row of the configuration layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutEntry {
    pub joint: String,
    pub kind: JointType,
    pub q: Range<usize>,
    pub v: Range<usize>,
}

impl RobotModel {
    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn frame_index(&self, name: &str) -> Option<usize> {
        self.frames.iter().position(|f| f.name == name)
    }

    /// Constrained dimension: sum of closure dimensions.
    pub fn constraint_dim(&self) -> usize {
        self.closures.iter().map(|c| c.dim()).sum()
    }

    pub fn n_actuated(&self) -> usize {
        self.actuated.iter().map(|a| a.v_range.len()).sum()
    }

    pub fn layout(&self) -> Vec<LayoutEntry> {
        self.joints
            .iter()
            .filter(|j| j.nq > 0 || j.nv > 0)
            .map(|j| LayoutEntry {
                joint: j.name.clone(),
                kind: j.kind,
                q: j.q_range(),
                v: j.v_range(),
            })
            .collect()
    }

    /// Is `ancestor` on the path from the root to `joint` (inclusive)?
    pub fn supports(&self, ancestor: usize, joint: usize) -> bool {
        let mut j = Some(joint);
        while let Some(i) = j {
            if i == ancestor {
                return true;
            }
            j = self.joints[i].parent;
        }
        false
    }

    pub fn children(&self, joint: usize) -> impl Iterator<Item = usize> + '_ {
        self.joints
            .iter()
            .enumerate()
            .filter(move |(_, j)| j.parent == Some(joint))
            .map(|(i, _)| i)
    }

    /// Recomputes the q/v layout and re-resolves closures and actuators by name.
    fn relayout(
        &mut self,
        closures: &[(String, ConstraintType, String, String)],
        actuated: &[String],
    ) -> Result<(), BuildError> {
        let (mut q, mut v) = (0, 0);
        for j in &mut self.joints {
            j.nq = j.kind.nq();
            j.nv = j.kind.nv();
            j.q_offset = q;
            j.v_offset = v;
            q += j.nq;
            v += j.nv;
        }
        self.nq = q;
        self.nv = v;
        self.closures = closures
            .iter()
            .map(|(name, kind, a, b)| {
                let find = |f: &str| {
                    self.frame_index(f)
                        .ok_or_else(|| BuildError::UnknownClosureFrame(f.to_string()))
                };
                Ok(ClosureConstraint {
                    name: name.clone(),
                    kind: *kind,
                    frame_a: find(a)?,
                    frame_b: find(b)?,
                })
            })
            .collect::<Result<_, BuildError>>()?;
        self.actuated = actuated
            .iter()
            .map(|name| {
                let idx = self
                    .joint_index(name)
                    .ok_or_else(|| BuildError::UnknownActuatedJoint(name.clone()))?;
                let j = &self.joints[idx];
                if j.nv == 0 {
                    return Err(BuildError::ActuatedJointNotMovable(name.clone()));
                }
                Ok(ActuatedJoint {
                    name: name.clone(),
                    joint: idx,
                    v_range: j.v_range(),
                })
            })
            .collect::<Result<_, BuildError>>()?;
        Ok(())
    }

    fn closure_names(&self) -> Vec<(String, ConstraintType, String, String)> {
        self.closures
            .iter()
            .map(|c| {
                (
                    c.name.clone(),
                    c.kind,
                    self.frames[c.frame_a].name.clone(),
                    self.frames[c.frame_b].name.clone(),
                )
            })
            .collect()
    }

    fn actuated_names(&self) -> Vec<String> {
        self.actuated.iter().map(|a| a.name.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("closure references unknown frame `{0}`")]
    UnknownClosureFrame(String),
    #[error("actuated joint `{0}` does not exist")]
    UnknownActuatedJoint(String),
    #[error("actuated joint `{0}` has no degree of freedom")]
    ActuatedJointNotMovable(String),
    #[error("replacement target `{0}` does not exist")]
    ReplacementTargetMissing(String),
    #[error("cannot replace `{name}` with a spherical joint: {reason}")]
    ReplacementNotApplicable { name: String, reason: String },
}

impl BuildError {
    pub fn code(&self) -> &'static str {
        match self {
            BuildError::UnknownClosureFrame(_) => "UnknownClosureFrame",
            BuildError::UnknownActuatedJoint(_) => "UnknownActuatedJoint",
            BuildError::ActuatedJointNotMovable(_) => "ActuatedJointNotMovable",
            BuildError::ReplacementTargetMissing(_) => "ReplacementTargetMissing",
            BuildError::ReplacementNotApplicable { .. } => "ReplacementNotApplicable",
        }
    }

    pub fn subject(&self) -> String {
        match self {
            BuildError::UnknownClosureFrame(s)
            | BuildError::UnknownActuatedJoint(s)
            | BuildError::ActuatedJointNotMovable(s)
            | BuildError::ReplacementTargetMissing(s) => s.clone(),
            BuildError::ReplacementNotApplicable { name, .. } => name.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubstitutionTolerances {
    /// Largest allowed distance between axis lines, m.
    pub concurrency: f64,
    /// Smallest allowed singular value of the stacked unit axes.
    pub axis_rank: f64,
    /// Largest mass of an intermediate body, kg.
    pub mass: f64,
}

impl Default for SubstitutionTolerances {
    fn default() -> Self {
        SubstitutionTolerances {
            concurrency: 1e-6,
            axis_rank: 1e-6,
            mass: MASSLESS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    /// Mount the root link on a free-flying joint.
    pub floating_base: bool,
    /// Detect and fold concurrent revolute triples into spherical joints.
    pub substitute_spherical: bool,
    pub tolerances: SubstitutionTolerances,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            floating_base: false,
            substitute_spherical: true,
            tolerances: SubstitutionTolerances::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub subject: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn warn(&mut self, code: &str, subject: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding {
            severity: Severity::Warning,
            code: code.into(),
            subject: subject.into(),
            message: message.into(),
        });
    }

    fn error(&mut self, code: &str, subject: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Finding {
            severity: Severity::Error,
            code: code.into(),
            subject: subject.into(),
            message: message.into(),
        });
    }

    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.errors.iter().chain(self.warnings.iter())
    }

    pub fn has(&self, code: &str) -> bool {
        self.findings().any(|f| f.code == code)
    }
}

/// Builds the spanning-tree model from a URDF and resolves the extension.
///
/// Fixed joints are folded into their parent body; every URDF link stays
/// addressable as a frame. Joints are laid out depth first, children in
/// declaration order.
pub fn build_model(
    urdf: &UrdfDocument,
    ext: &ExtensionDoc,
    opts: &BuildOptions,
) -> Result<(RobotModel, ValidationReport), BuildError> {
    let mut model = tree_from_urdf(urdf, opts.floating_base);
    let closures: Vec<_> = ext
        .closures
        .iter()
        .map(|c| (c.name.clone(), c.kind, c.frame_a.clone(), c.frame_b.clone()))
        .collect();
    // frames must exist before substitution may drop any
    for (_, _, a, b) in &closures {
        for f in [a, b] {
            if model.frame_index(f).is_none() {
                return Err(BuildError::UnknownClosureFrame(f.clone()));
            }
        }
    }
    let referenced: HashSet<&str> = closures
        .iter()
        .flat_map(|(_, _, a, b)| [a.as_str(), b.as_str()])
        .collect();
    for name in &ext.actuated {
        match urdf.joint(name) {
            None => return Err(BuildError::UnknownActuatedJoint(name.clone())),
            Some(j) if j.kind == JointKind::Fixed => {
                return Err(BuildError::ActuatedJointNotMovable(name.clone()))
            }
            Some(_) => {}
        }
    }
    let actuated: HashSet<&str> = ext.actuated.iter().map(String::as_str).collect();

    for r in &ext.replacements {
        model = apply_replacement(&model, urdf, &r.target, &referenced, &opts.tolerances)?;
    }
    if opts.substitute_spherical {
        model = substitute_chains(model, &opts.tolerances, &referenced, &actuated);
    }
    model.relayout(&closures, &ext.actuated)?;
    let report = validate_model(&model);
    Ok((model, report))
}

fn tree_from_urdf(urdf: &UrdfDocument, floating_base: bool) -> RobotModel {
    let root = urdf.root();
    let root_link = urdf.link(root).expect("root link exists");
    let mut model = RobotModel {
        name: urdf.name.clone(),
        joints: vec![JointModel {
            name: UNIVERSE.into(),
            kind: JointType::Fixed,
            parent: None,
            placement: Placement::identity(),
            axis: Vector3::zeros(),
            q_offset: 0,
            nq: 0,
            v_offset: 0,
            nv: 0,
            limits: None,
            inertia: SpatialInertia::zero(),
            link: root.to_string(),
            spherical: None,
        }],
        frames: Vec::new(),
        closures: Vec::new(),
        actuated: Vec::new(),
        nq: 0,
        nv: 0,
    };
    let mut body = 0;
    if floating_base {
        model.joints.push(JointModel {
            name: ROOT_JOINT.into(),
            kind: JointType::Floating,
            parent: Some(0),
            placement: Placement::identity(),
            axis: Vector3::zeros(),
            q_offset: 0,
            nq: 0,
            v_offset: 0,
            nv: 0,
            limits: None,
            inertia: SpatialInertia::zero(),
            link: root.to_string(),
            spherical: None,
        });
        body = 1;
    }
    model.joints[body].inertia = root_link.inertia();
    model.frames.push(FrameModel {
        name: root.to_string(),
        parent: body,
        placement: Placement::identity(),
    });
    attach_children(urdf, &mut model, root, body, Placement::identity());
    let _ = model.relayout(&[], &[]);
    model
}

fn attach_children(
    urdf: &UrdfDocument,
    model: &mut RobotModel,
    link: &str,
    body: usize,
    link_in_body: Placement,
) {
    for j in urdf.child_joints(link) {
        let child = urdf.link(&j.child).expect("validated document");
        let placement = link_in_body.compose(&j.origin.placement());
        if j.kind == JointKind::Fixed {
            let merged = model.joints[body]
                .inertia
                .combined(&child.inertia().transformed(&placement));
            model.joints[body].inertia = merged;
            model.frames.push(FrameModel {
                name: child.name.clone(),
                parent: body,
                placement,
            });
            attach_children(urdf, model, &child.name, body, placement);
        } else {
            let idx = model.joints.len();
            model.joints.push(JointModel {
                name: j.name.clone(),
                kind: j.kind.into(),
                parent: Some(body),
                placement,
                axis: j.axis,
                q_offset: 0,
                nq: 0,
                v_offset: 0,
                nv: 0,
                limits: j.position_limits(),
                inertia: child.inertia(),
                link: child.name.clone(),
                spherical: None,
            });
            model.frames.push(FrameModel {
                name: child.name.clone(),
                parent: idx,
                placement: Placement::identity(),
            });
            attach_children(urdf, model, &child.name, idx, Placement::identity());
        }
    }
}

/// Where a run of revolutes meets, and the pieces needed to fold it.
struct FoldGeometry {
    /// Common point in the first joint's frame.
    center_first: Vector3<f64>,
    /// Common point in the last joint's frame.
    center_last: Vector3<f64>,
    /// Rotation of the last joint frame relative to the first.
    frame_rotation: Rotation,
    replaced: Vec<ReplacedJoint>,
}

fn replaced_joint(j: &JointModel, offset: Rotation) -> ReplacedJoint {
    ReplacedJoint {
        name: j.name.clone(),
        kind: j.kind,
        axis: j.axis,
        offset,
        limits: j.limits,
    }
}

/// Checks whether the consecutive joints `chain` can become one spherical joint.
fn chain_geometry(
    model: &RobotModel,
    chain: [usize; 3],
    tol: &SubstitutionTolerances,
    referenced: &HashSet<&str>,
) -> Result<FoldGeometry, String> {
    let js = chain.map(|i| &model.joints[i]);
    for j in js {
        if !j.kind.is_rotational_1dof() {
            return Err(format!("`{}` is {}, not revolute", j.name, j.kind));
        }
    }
    for k in 1..3 {
        if js[k].parent != Some(chain[k - 1]) {
            return Err(format!(
                "`{}` is not the child of `{}`",
                js[k].name,
                js[k - 1].name
            ));
        }
    }
    for k in 0..2 {
        let kids: Vec<usize> = model.children(chain[k]).collect();
        if kids != [chain[k + 1]] {
            return Err(format!("body after `{}` branches", js[k].name));
        }
        if js[k].inertia.mass >= tol.mass {
            return Err(format!(
                "body after `{}` has mass {} kg",
                js[k].name, js[k].inertia.mass
            ));
        }
        if let Some(f) = model
            .frames
            .iter()
            .find(|f| f.parent == chain[k] && referenced.contains(f.name.as_str()))
        {
            return Err(format!(
                "intermediate frame `{}` is used by a closure",
                f.name
            ));
        }
    }
    // axis lines expressed in the first joint frame
    let p2 = js[1].placement;
    let p3 = p2.compose(&js[2].placement);
    let points = [Vector3::zeros(), p2.translation, p3.translation];
    let dirs = [
        js[0].axis,
        p2.rotation.rotate(&js[1].axis),
        p3.rotation.rotate(&js[2].axis),
    ];
    let stacked = Matrix3::from_rows(&[
        dirs[0].transpose(),
        dirs[1].transpose(),
        dirs[2].transpose(),
    ]);
    let sv = singular_values(&nalgebra::DMatrix::from_iterator(
        3,
        3,
        stacked.iter().copied(),
    ));
    if sv[2] <= tol.axis_rank {
        return Err(format!(
            "axes do not span 3D (smallest singular value {:e})",
            sv[2]
        ));
    }
    for a in 0..3 {
        for b in a + 1..3 {
            let d = line_distance(&points[a], &dirs[a], &points[b], &dirs[b]);
            if d >= tol.concurrency {
                return Err(format!(
                    "axes of `{}` and `{}` miss each other by {:e} m",
                    js[a].name, js[b].name, d
                ));
            }
        }
    }
    let center = closest_point(&points, &dirs);
    Ok(FoldGeometry {
        center_first: center,
        center_last: p3.inverse().act(&center),
        frame_rotation: p3.rotation,
        replaced: vec![
            replaced_joint(js[0], Rotation::identity()),
            replaced_joint(js[1], js[1].placement.rotation),
            replaced_joint(js[2], js[2].placement.rotation),
        ],
    })
}

fn line_distance(
    p1: &Vector3<f64>,
    d1: &Vector3<f64>,
    p2: &Vector3<f64>,
    d2: &Vector3<f64>,
) -> f64 {
    let n = d1.cross(d2);
    let w = p2 - p1;
    if n.norm() < 1e-12 {
        (w - d1 * w.dot(d1)).norm()
    } else {
        w.dot(&n).abs() / n.norm()
    }
}

/// Least-squares point nearest to all lines.
fn closest_point(points: &[Vector3<f64>], dirs: &[Vector3<f64>]) -> Vector3<f64> {
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for (p, d) in points.iter().zip(dirs) {
        let proj = Matrix3::identity() - d * d.transpose();
        a += proj;
        b += proj * p;
    }
    a.try_inverse()
        .map(|inv| inv * b)
        .unwrap_or_else(Vector3::zeros)
}

/// Replaces the consecutive joints `run` with one spherical joint centered on
/// the common point.
fn fold(model: &RobotModel, run: &[usize], geom: FoldGeometry) -> RobotModel {
    let first = run[0];
    let last = *run.last().expect("nonempty run");
    let dropped: HashSet<usize> = run[1..].iter().copied().collect();
    let shift = Placement::from_translation(-geom.center_last);
    let mut remap = vec![usize::MAX; model.joints.len()];
    let mut joints = Vec::with_capacity(model.joints.len() - dropped.len());
    for (i, j) in model.joints.iter().enumerate() {
        if dropped.contains(&i) {
            continue;
        }
        remap[i] = joints.len();
        let mut j = j.clone();
        if i == first {
            let end = &model.joints[last];
            j = JointModel {
                name: model.joints[first].name.clone(),
                kind: JointType::Spherical,
                parent: model.joints[first].parent,
                placement: model.joints[first]
                    .placement
                    .compose(&Placement::from_translation(geom.center_first))
                    .compose(&Placement::from_rotation(geom.frame_rotation)),
                axis: Vector3::zeros(),
                q_offset: 0,
                nq: 0,
                v_offset: 0,
                nv: 0,
                limits: None,
                inertia: end.inertia.transformed(&shift),
                link: end.link.clone(),
                spherical: Some(SphericalSource {
                    replaced: geom.replaced.clone(),
                }),
            };
        } else if j.parent == Some(last) {
            j.placement = shift.compose(&j.placement);
        }
        joints.push(j);
    }
    for j in &mut joints {
        if let Some(p) = j.parent {
            j.parent = Some(if p == last { remap[first] } else { remap[p] });
        }
    }
    let frames = model
        .frames
        .iter()
        .filter_map(|f| {
            if f.parent == last {
                Some(FrameModel {
                    name: f.name.clone(),
                    parent: remap[first],
                    placement: shift.compose(&f.placement),
                })
            } else if run[..run.len() - 1].contains(&f.parent) {
                None
            } else {
                Some(FrameModel {
                    parent: remap[f.parent],
                    ..f.clone()
                })
            }
        })
        .collect();
    RobotModel {
        joints,
        frames,
        ..model.clone()
    }
}

fn apply_replacement(
    model: &RobotModel,
    urdf: &UrdfDocument,
    target: &ReplacementTarget,
    referenced: &HashSet<&str>,
    tol: &SubstitutionTolerances,
) -> Result<RobotModel, BuildError> {
    let not_applicable = |name: &str, reason: String| BuildError::ReplacementNotApplicable {
        name: name.to_string(),
        reason,
    };
    let lookup = |name: &str| {
        model.joint_index(name).ok_or_else(|| {
            if urdf.joint(name).is_some() {
                not_applicable(name, "fixed joints have no motion to replace".into())
            } else {
                BuildError::ReplacementTargetMissing(name.to_string())
            }
        })
    };
    match target {
        ReplacementTarget::Joint(name) => {
            let idx = lookup(name)?;
            let j = &model.joints[idx];
            if !j.kind.is_rotational_1dof() {
                return Err(not_applicable(
                    name,
                    format!("`{name}` is {}, not revolute", j.kind),
                ));
            }
            let geom = FoldGeometry {
                center_first: Vector3::zeros(),
                center_last: Vector3::zeros(),
                frame_rotation: Rotation::identity(),
                replaced: vec![replaced_joint(j, Rotation::identity())],
            };
            let mut out = fold(model, &[idx], geom);
            let _ = out.relayout(&[], &[]);
            Ok(out)
        }
        ReplacementTarget::Chain(names) => {
            let chain = [lookup(&names[0])?, lookup(&names[1])?, lookup(&names[2])?];
            let geom = chain_geometry(model, chain, tol, referenced)
                .map_err(|reason| not_applicable(&target.key(), reason))?;
            let mut out = fold(model, &chain, geom);
            let _ = out.relayout(&[], &[]);
            Ok(out)
        }
    }
}

fn substitute_chains(
    mut model: RobotModel,
    tol: &SubstitutionTolerances,
    referenced: &HashSet<&str>,
    actuated: &HashSet<&str>,
) -> RobotModel {
    let mut i = 1;
    while i + 2 < model.joints.len() {
        let chain = [i, i + 1, i + 2];
        let free = chain
            .iter()
            .all(|&k| !actuated.contains(model.joints[k].name.as_str()));
        if free {
            if let Ok(geom) = chain_geometry(&model, chain, tol, referenced) {
                log::debug!(
                    "folding {}, {}, {} into a spherical joint",
                    model.joints[i].name,
                    model.joints[i + 1].name,
                    model.joints[i + 2].name
                );
                model = fold(&model, &chain, geom);
            }
        }
        i += 1;
    }
    let _ = model.relayout(&[], &[]);
    model
}

/// Folds every eligible concurrent revolute triple of a built model into a
/// spherical joint. Chains with actuated joints or closure frames on their
/// intermediate bodies are left alone.
pub fn substitute_spherical(model: &RobotModel, tol: &SubstitutionTolerances) -> RobotModel {
    let closures = model.closure_names();
    let actuated_names = model.actuated_names();
    let referenced: HashSet<&str> = closures
        .iter()
        .flat_map(|(_, _, a, b)| [a.as_str(), b.as_str()])
        .collect();
    let actuated: HashSet<&str> = actuated_names.iter().map(String::as_str).collect();
    let mut out = substitute_chains(model.clone(), tol, &referenced, &actuated);
    out.relayout(&closures, &actuated_names)
        .expect("substitution keeps closure frames and actuated joints");
    out
}

/// Structural and inertial checks on a built model.
pub fn validate_model(model: &RobotModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    for j in model.joints.iter().filter(|j| j.nv > 0) {
        let i = &j.inertia;
        if i.mass < MASSLESS {
            report.warn(
                "ZeroInertiaBody",
                &j.link,
                format!("body `{}` on joint `{}` has no mass", j.link, j.name),
            );
            continue;
        }
        let moments = i.principal_moments();
        if moments[0] < -1e-12 {
            report.warn(
                "InertiaIndefinite",
                &j.link,
                format!(
                    "body `{}` has a negative principal moment {:e}",
                    j.link, moments[0]
                ),
            );
        } else if !i.satisfies_triangle_inequality(1e-9) {
            report.warn(
                "InertiaTriangle",
                &j.link,
                format!(
                    "principal moments of `{}` violate the triangle inequality",
                    j.link
                ),
            );
        }
    }
    if model.nv > 0 {
        let m = crba(model, &neutral(model));
        let min = min_symmetric_eigenvalue(&m).unwrap_or(0.0);
        if min < INERTIA_EIGEN_MIN {
            report.error(
                "InertiaNotPositive",
                &model.name,
                format!("joint-space inertia matrix at neutral has minimum eigenvalue {min:e}"),
            );
        }
    }
    for c in &model.closures {
        let (a, b) = (&model.frames[c.frame_a], &model.frames[c.frame_b]);
        if a.parent == b.parent {
            report.warn(
                "ClosureFrameCoincident",
                &c.name,
                format!(
                    "frames `{}` and `{}` are on the same body `{}`",
                    a.name, b.name, model.joints[a.parent].link
                ),
            );
        }
    }
    if !model.closures.is_empty() && model.actuated.is_empty() {
        report.warn(
            "NoActuation",
            &model.name,
            "closures are defined but no joint is actuated",
        );
    }
    report
}
