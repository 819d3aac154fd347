//! Configuration-space operations, forward kinematics, frame Jacobians and the
//! joint-space inertia matrix.
//!
//! Velocities are body twists of each joint's child frame, angular first.
//! Frame Jacobians use the local-world-aligned convention: world axes, taken
//! about the frame origin.

use crate::model::{JointModel, JointType, RobotModel};
use crate::se3::{exp_se3, exp_so3, Placement, Rotation, Twist};
use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector6};
use thiserror::Error;

pub type Configuration = DVector<f64>;
pub type TangentVector = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("frame index {index} out of range ({count} frames)")]
    FrameIndexOutOfRange { index: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigurationError {
    #[error("configuration has {found} entries, model expects {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("configuration entry {index} is not finite")]
    NotFinite { index: usize },
    #[error("joint `{joint}`: block norm {norm} is not 1")]
    NotNormalized { joint: String, norm: f64 },
}

/// Orthonormal basis (e1, e2) of the plane with normal `n`.
pub fn plane_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let reference = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = (reference - n * reference.dot(n)).normalize();
    (e1, n.cross(&e1))
}

fn angle_of(c: f64, s: f64) -> f64 {
    s.atan2(c)
}

fn quaternion_block(q: &[f64]) -> Rotation {
    Rotation::from_wxyz(q[0], q[1], q[2], q[3])
}

/// Placement of the joint's child frame relative to its unmoved frame.
pub fn joint_motion(joint: &JointModel, q: &[f64]) -> Placement {
    match joint.kind {
        JointType::Fixed => Placement::identity(),
        JointType::Revolute => {
            Placement::from_rotation(Rotation::from_axis_angle(&joint.axis, q[0]))
        }
        JointType::Continuous => {
            Placement::from_rotation(Rotation::from_axis_angle(&joint.axis, angle_of(q[0], q[1])))
        }
        JointType::Prismatic => Placement::from_translation(joint.axis * q[0]),
        JointType::Spherical => Placement::from_rotation(quaternion_block(q)),
        JointType::Floating => {
            Placement::new(quaternion_block(&q[3..7]), Vector3::new(q[0], q[1], q[2]))
        }
        JointType::Planar => {
            let (e1, e2) = plane_basis(&joint.axis);
            Placement::new(
                Rotation::from_axis_angle(&joint.axis, angle_of(q[2], q[3])),
                e1 * q[0] + e2 * q[1],
            )
        }
    }
}

/// Columns are body twists (angular; linear) of the child frame per unit velocity.
pub fn motion_subspace(joint: &JointModel) -> Vec<Vector6<f64>> {
    let ang = |a: Vector3<f64>| Vector6::new(a.x, a.y, a.z, 0.0, 0.0, 0.0);
    let lin = |a: Vector3<f64>| Vector6::new(0.0, 0.0, 0.0, a.x, a.y, a.z);
    match joint.kind {
        JointType::Fixed => vec![],
        JointType::Revolute | JointType::Continuous => vec![ang(joint.axis)],
        JointType::Prismatic => vec![lin(joint.axis)],
        JointType::Spherical => vec![ang(Vector3::x()), ang(Vector3::y()), ang(Vector3::z())],
        JointType::Floating => (0..6)
            .map(|i| Vector6::from_fn(|r, _| f64::from(r == i)))
            .collect(),
        JointType::Planar => {
            let (e1, e2) = plane_basis(&joint.axis);
            vec![lin(e1), lin(e2), ang(joint.axis)]
        }
    }
}

/// Zero scalars, identity rotations.
pub fn neutral(model: &RobotModel) -> Configuration {
    let mut q = DVector::zeros(model.nq);
    for j in &model.joints {
        let o = j.q_offset;
        match j.kind {
            JointType::Continuous => q[o] = 1.0,
            JointType::Spherical => q[o] = 1.0,
            JointType::Floating => q[o + 3] = 1.0,
            JointType::Planar => q[o + 2] = 1.0,
            _ => {}
        }
    }
    q
}

/// Retraction: moves `q` along `v` for time `dt`, joint by joint.
pub fn integrate(
    model: &RobotModel,
    q: &Configuration,
    v: &TangentVector,
    dt: f64,
) -> Configuration {
    let mut out = q.clone();
    for j in &model.joints {
        let (qo, vo) = (j.q_offset, j.v_offset);
        match j.kind {
            JointType::Fixed => {}
            JointType::Revolute | JointType::Prismatic => out[qo] = q[qo] + v[vo] * dt,
            JointType::Continuous => {
                let theta = angle_of(q[qo], q[qo + 1]) + v[vo] * dt;
                out[qo] = theta.cos();
                out[qo + 1] = theta.sin();
            }
            JointType::Spherical => {
                let w = Vector3::new(v[vo], v[vo + 1], v[vo + 2]) * dt;
                let r = quaternion_block(&q.as_slice()[qo..qo + 4]).compose(&exp_so3(&w));
                out.rows_mut(qo, 4).copy_from_slice(&r.wxyz());
            }
            JointType::Floating => {
                let m = joint_motion(j, &q.as_slice()[qo..qo + 7]);
                let tw = Twist::new(
                    Vector3::new(v[vo], v[vo + 1], v[vo + 2]) * dt,
                    Vector3::new(v[vo + 3], v[vo + 4], v[vo + 5]) * dt,
                );
                let m = m.compose(&exp_se3(&tw));
                out.rows_mut(qo, 3).copy_from(&m.translation);
                out.rows_mut(qo + 3, 4).copy_from_slice(&m.rotation.wxyz());
            }
            JointType::Planar => {
                let (e1, e2) = plane_basis(&j.axis);
                let m = joint_motion(j, &q.as_slice()[qo..qo + 4]);
                let tw = Twist::new(
                    j.axis * (v[vo + 2] * dt),
                    (e1 * v[vo] + e2 * v[vo + 1]) * dt,
                );
                let m = m.compose(&exp_se3(&tw));
                let r1 = m.rotation.rotate(&e1);
                let theta = angle_of(r1.dot(&e1), r1.dot(&e2));
                out[qo] = m.translation.dot(&e1);
                out[qo + 1] = m.translation.dot(&e2);
                out[qo + 2] = theta.cos();
                out[qo + 3] = theta.sin();
            }
        }
    }
    out
}

/// Checks length, finiteness, and unit norm of group blocks (within `tol`).
pub fn check_configuration(
    model: &RobotModel,
    q: &Configuration,
    tol: f64,
) -> Result<(), ConfigurationError> {
    if q.len() != model.nq {
        return Err(ConfigurationError::WrongLength {
            expected: model.nq,
            found: q.len(),
        });
    }
    if let Some(index) = q.iter().position(|x| !x.is_finite()) {
        return Err(ConfigurationError::NotFinite { index });
    }
    for j in &model.joints {
        let block = match j.kind {
            JointType::Continuous => j.q_offset..j.q_offset + 2,
            JointType::Spherical => j.q_offset..j.q_offset + 4,
            JointType::Floating => j.q_offset + 3..j.q_offset + 7,
            JointType::Planar => j.q_offset + 2..j.q_offset + 4,
            _ => continue,
        };
        let norm = q.rows(block.start, block.len()).norm();
        if (norm - 1.0).abs() > tol {
            return Err(ConfigurationError::NotNormalized {
                joint: j.name.clone(),
                norm,
            });
        }
    }
    Ok(())
}

/// Rescales group blocks to unit norm.
pub fn normalize(model: &RobotModel, q: &Configuration) -> Configuration {
    let mut out = q.clone();
    for j in &model.joints {
        let (start, len) = match j.kind {
            JointType::Continuous => (j.q_offset, 2),
            JointType::Spherical => (j.q_offset, 4),
            JointType::Floating => (j.q_offset + 3, 4),
            JointType::Planar => (j.q_offset + 2, 2),
            _ => continue,
        };
        let n = out.rows(start, len).norm();
        if n > 0.0 {
            out.rows_mut(start, len).unscale_mut(n);
        }
    }
    out
}

/// World placements of every joint and frame at one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicsCache {
    pub q: Configuration,
    pub joints: Vec<Placement>,
    pub frames: Vec<Placement>,
}

pub fn forward_kinematics(model: &RobotModel, q: &Configuration) -> KinematicsCache {
    assert_eq!(q.len(), model.nq, "configuration length");
    let mut joints: Vec<Placement> = Vec::with_capacity(model.joints.len());
    for j in &model.joints {
        let parent = j.parent.map_or(Placement::identity(), |p| joints[p]);
        let motion = joint_motion(j, &q.as_slice()[j.q_range()]);
        joints.push(parent.compose(&j.placement).compose(&motion));
    }
    let frames = model
        .frames
        .iter()
        .map(|f| joints[f.parent].compose(&f.placement))
        .collect();
    KinematicsCache {
        q: q.clone(),
        joints,
        frames,
    }
}

/// 6×n_v Jacobian of a frame, rows (ω; v) in world axes about the frame origin.
pub fn frame_jacobian(
    model: &RobotModel,
    cache: &KinematicsCache,
    frame: usize,
) -> Result<DMatrix<f64>, KinematicsError> {
    let f = model
        .frames
        .get(frame)
        .ok_or(KinematicsError::FrameIndexOutOfRange {
            index: frame,
            count: model.frames.len(),
        })?;
    let p = cache.frames[frame].translation;
    Ok(point_jacobian(model, cache, f.parent, &p))
}

/// Jacobian of a point rigidly attached to `joint`'s body, world axes.
pub fn point_jacobian(
    model: &RobotModel,
    cache: &KinematicsCache,
    joint: usize,
    point: &Vector3<f64>,
) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(6, model.nv);
    let mut cur = Some(joint);
    while let Some(i) = cur {
        let j = &model.joints[i];
        let m = &cache.joints[i];
        let r = m.rotation.matrix();
        for (k, s) in motion_subspace(j).iter().enumerate() {
            let w = r * s.fixed_rows::<3>(0);
            let v = r * s.fixed_rows::<3>(3) + w.cross(&(point - m.translation));
            let col = j.v_offset + k;
            jac.fixed_view_mut::<3, 1>(0, col).copy_from(&w);
            jac.fixed_view_mut::<3, 1>(3, col).copy_from(&v);
        }
        cur = j.parent;
    }
    jac
}

/// Converts a local-world-aligned Jacobian to body-frame rows for a frame with rotation `r`.
pub fn to_local(jac: &DMatrix<f64>, r: &Rotation) -> DMatrix<f64> {
    let rt = r.matrix().transpose();
    let mut out = jac.clone();
    for c in 0..jac.ncols() {
        let w = rt * jac.fixed_view::<3, 1>(0, c);
        let v = rt * jac.fixed_view::<3, 1>(3, c);
        out.fixed_view_mut::<3, 1>(0, c).copy_from(&w);
        out.fixed_view_mut::<3, 1>(3, c).copy_from(&v);
    }
    out
}

/// Joint-space inertia matrix by the composite-rigid-body recursion.
pub fn crba(model: &RobotModel, q: &Configuration) -> DMatrix<f64> {
    let cache = forward_kinematics(model, q);
    let n = model.joints.len();
    // composite spatial inertias about the world origin, world axes
    let mut composite: Vec<Matrix6<f64>> = model
        .joints
        .iter()
        .zip(&cache.joints)
        .map(|(j, m)| j.inertia.transformed(m).matrix())
        .collect();
    for i in (1..n).rev() {
        if let Some(p) = model.joints[i].parent {
            let c = composite[i];
            composite[p] += c;
        }
    }
    // motion-subspace columns as spatial twists about the world origin
    let columns: Vec<Vec<Vector6<f64>>> = model
        .joints
        .iter()
        .zip(&cache.joints)
        .map(|(j, m)| {
            let r = m.rotation.matrix();
            motion_subspace(j)
                .iter()
                .map(|s| {
                    let w = r * s.fixed_rows::<3>(0);
                    let v = r * s.fixed_rows::<3>(3) - w.cross(&m.translation);
                    Vector6::new(w.x, w.y, w.z, v.x, v.y, v.z)
                })
                .collect()
        })
        .collect();
    let mut mass = DMatrix::zeros(model.nv, model.nv);
    for i in 0..n {
        let ji = &model.joints[i];
        if ji.nv == 0 {
            continue;
        }
        let forces: Vec<Vector6<f64>> = columns[i].iter().map(|s| composite[i] * s).collect();
        let mut cur = Some(i);
        while let Some(a) = cur {
            let ja = &model.joints[a];
            for (r, f) in forces.iter().enumerate() {
                for (c, s) in columns[a].iter().enumerate() {
                    let val = f.dot(s);
                    mass[(ji.v_offset + r, ja.v_offset + c)] = val;
                    mass[(ja.v_offset + c, ji.v_offset + r)] = val;
                }
            }
            cur = ja.parent;
        }
    }
    mass
}
