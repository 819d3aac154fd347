//! Rigid-body transforms: unit-quaternion rotations, SE(3) placements, twists,
//! and the exponential / logarithm maps between them.
//!
//! Twists are ordered angular-first everywhere in this crate: `[ω; v]`.
//! Six-dimensional Jacobians and adjoints follow the same ordering.

use nalgebra::{Matrix3, Matrix6, Quaternion, UnitQuaternion, Vector3, Vector6};
use std::fmt;
use thiserror::Error;

/// Distance from π below which the SE(3)/SO(3) logarithm is refused.
pub const NEAR_PI_MARGIN: f64 = 1e-6;

/// Below this angle the closed-form coefficients switch to their Taylor series.
const SERIES_ANGLE: f64 = 2e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Se3Error {
    #[error("rotation angle {angle} is within {NEAR_PI_MARGIN:e} of pi, logarithm is not unique")]
    AngleNearPi { angle: f64 },
}

/// Skew-symmetric matrix such that `skew(a) * b == a.cross(&b)`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// A rotation stored as a unit quaternion with `w >= 0`.
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

fn canonical(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    let q = q.normalize();
    let flip = if q.w != 0.0 {
        q.w < 0.0
    } else {
        let first = [q.i, q.j, q.k]
            .into_iter()
            .find(|c| *c != 0.0)
            .unwrap_or(0.0);
        first < 0.0
    };
    UnitQuaternion::new_unchecked(if flip { -q } else { q })
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(UnitQuaternion::identity())
    }

    /// Builds from quaternion components, normalizing and canonicalizing the sign.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Self {
        Rotation(canonical(Quaternion::new(w, x, y, z)))
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Rotation(canonical(q.into_inner()))
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        exp_so3(&(axis.normalize() * angle))
    }

    /// Fixed-axis roll/pitch/yaw, i.e. `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Rotation::from_unit_quaternion(UnitQuaternion::from_euler_angles(roll, pitch, yaw))
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(*m);
        Rotation::from_unit_quaternion(UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    /// Components in `[w, x, y, z]` order.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.as_ref();
        [q.w, q.i, q.j, q.k]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn inverse(&self) -> Self {
        Rotation(canonical(self.0.inverse().into_inner()))
    }

    /// `self * other`, renormalized.
    pub fn compose(&self, other: &Rotation) -> Self {
        Rotation(canonical((self.0 * other.0).into_inner()))
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let q = self.0.as_ref();
        2.0 * q.imag().norm().atan2(q.w)
    }

    pub fn rpy(&self) -> [f64; 3] {
        let (r, p, y) = self.0.euler_angles();
        [r, p, y]
    }

    pub fn norm(&self) -> f64 {
        self.0.as_ref().norm()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::identity()
    }
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [w, x, y, z] = self.wxyz();
        write!(f, "Rotation(w: {w}, x: {x}, y: {y}, z: {z})")
    }
}

/// SO(3) exponential of a rotation vector.
pub fn exp_so3(omega: &Vector3<f64>) -> Rotation {
    let theta = omega.norm();
    let half = 0.5 * theta;
    let k = if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        0.5 - t2 / 48.0 + t2 * t2 / 3840.0
    } else {
        half.sin() / theta
    };
    Rotation(canonical(Quaternion::new(
        half.cos(),
        k * omega.x,
        k * omega.y,
        k * omega.z,
    )))
}

/// SO(3) logarithm; the angle of the result lies in `[0, π]`.
pub fn log_so3(r: &Rotation) -> Vector3<f64> {
    let q = r.0.as_ref();
    let v = q.imag();
    let s = v.norm();
    let w = q.w;
    if s < 1e-10 {
        // θ/s = 2/w (1 + s²/(3w²) + ...), w ≈ 1 here
        return v * (2.0 / w) * (1.0 - s * s / (3.0 * w * w));
    }
    let theta = 2.0 * s.atan2(w);
    v * (theta / s)
}

/// Left Jacobian of SO(3), the `V` matrix of the SE(3) exponential.
fn left_jacobian_so3(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let (b, c) = if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        (
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        let t2 = theta * theta;
        (
            (1.0 - theta.cos()) / t2,
            (theta - theta.sin()) / (t2 * theta),
        )
    };
    let w = skew(omega);
    Matrix3::identity() + w * b + w * w * c
}

/// Coefficient shared by the inverse left Jacobian and the inverse right Jacobian.
fn inv_jacobian_coeff(theta: f64) -> f64 {
    if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    }
}

/// Inverse of the SO(3) right Jacobian.
pub fn jlog3(omega: &Vector3<f64>) -> Matrix3<f64> {
    let w = skew(omega);
    Matrix3::identity() + w * 0.5 + w * w * inv_jacobian_coeff(omega.norm())
}

/// A rigid transform `ᴬM_B`: maps coordinates in B to coordinates in A.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Placement {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl Placement {
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Placement {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Placement::default()
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Placement::new(Rotation::identity(), t)
    }

    pub fn from_rotation(r: Rotation) -> Self {
        Placement::new(r, Vector3::zeros())
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &Placement) -> Placement {
        Placement {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.translation + self.rotation.rotate(&other.translation),
        }
    }

    pub fn inverse(&self) -> Placement {
        let rinv = self.rotation.inverse();
        Placement {
            rotation: rinv,
            translation: -rinv.rotate(&self.translation),
        }
    }

    /// Maps a point from the local frame to the reference frame.
    pub fn act(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    /// Adjoint action on twists (angular-first).
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = self.rotation.matrix();
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(skew(&self.translation) * r));
        ad
    }

    pub fn to_homogeneous(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// An element of the SE(3) tangent space.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Twist {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl Twist {
    pub fn new(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        Twist { angular, linear }
    }

    pub fn zero() -> Self {
        Twist::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Twist {
            angular: v.fixed_rows::<3>(0).into(),
            linear: v.fixed_rows::<3>(3).into(),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.angular);
        v.fixed_rows_mut::<3>(3).copy_from(&self.linear);
        v
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }
}

pub fn exp_se3(v: &Twist) -> Placement {
    Placement {
        rotation: exp_so3(&v.angular),
        translation: left_jacobian_so3(&v.angular) * v.linear,
    }
}

/// SE(3) logarithm. Refuses rotations within [`NEAR_PI_MARGIN`] of π.
pub fn log_se3(m: &Placement) -> Result<Twist, Se3Error> {
    let angle = m.rotation.angle();
    if angle > std::f64::consts::PI - NEAR_PI_MARGIN {
        return Err(Se3Error::AngleNearPi { angle });
    }
    let omega = log_so3(&m.rotation);
    let w = skew(&omega);
    let v_inv = Matrix3::identity() - w * 0.5 + w * w * inv_jacobian_coeff(angle);
    Ok(Twist {
        angular: omega,
        linear: v_inv * m.translation,
    })
}

/// The `Q` block of the SE(3) left Jacobian, translation part `rho`, rotation part `phi`.
fn left_jacobian_q(rho: &Vector3<f64>, phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let (c1, c2, c3) = if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
            1.0 / 24.0 - t2 / 720.0 + t4 / 40320.0,
            1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            (theta - s) / (t2 * theta),
            (t2 + 2.0 * c - 2.0) / (2.0 * t4),
            (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t4 * theta),
        )
    };
    let p = skew(phi);
    let r = skew(rho);
    let prp = p * r * p;
    r * 0.5
        + (p * r + r * p + prp) * c1
        + (p * p * r + r * p * p - prp * 3.0) * c2
        + (prp * p + p * prp) * c3
}

/// Inverse right Jacobian of SE(3) at `log(m)`.
///
/// For a body-frame perturbation `δ`, `log(m · exp(δ)) ≈ log(m) + jlog6(m) δ`.
pub fn jlog6(m: &Placement) -> Result<Matrix6<f64>, Se3Error> {
    let xi = log_se3(m)?;
    let ji = jlog3(&xi.angular);
    // right Jacobian: J_r(ξ) = J_l(-ξ)
    let q = left_jacobian_q(&(-xi.linear), &(-xi.angular));
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&ji);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&ji);
    out.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(-(ji * q * ji)));
    Ok(out)
}
