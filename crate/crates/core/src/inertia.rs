//! Rigid-body inertia: mass, center of mass, and rotational inertia about the
//! center of mass, all expressed in some body frame.

use crate::se3::{skew, Placement};
use nalgebra::{Matrix3, Matrix6, Vector3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialInertia {
    pub mass: f64,
    pub com: Vector3<f64>,
    /// Rotational inertia about the center of mass, body-frame axes.
    pub rotational: Matrix3<f64>,
}

impl Default for SpatialInertia {
    fn default() -> Self {
        SpatialInertia::zero()
    }
}

impl SpatialInertia {
    pub fn zero() -> Self {
        SpatialInertia {
            mass: 0.0,
            com: Vector3::zeros(),
            rotational: Matrix3::zeros(),
        }
    }

    pub fn new(mass: f64, com: Vector3<f64>, rotational: Matrix3<f64>) -> Self {
        SpatialInertia {
            mass,
            com,
            rotational,
        }
    }

    /// Re-expresses an inertia given in frame B into frame A, where `placement` is `ᴬM_B`.
    pub fn transformed(&self, placement: &Placement) -> SpatialInertia {
        let r = placement.rotation.matrix();
        SpatialInertia {
            mass: self.mass,
            com: placement.act(&self.com),
            rotational: r * self.rotational * r.transpose(),
        }
    }

    /// Sum of two bodies expressed in the same frame (parallel-axis theorem).
    pub fn combined(&self, other: &SpatialInertia) -> SpatialInertia {
        let mass = self.mass + other.mass;
        if mass <= 0.0 {
            return SpatialInertia {
                mass: 0.0,
                com: Vector3::zeros(),
                rotational: self.rotational + other.rotational,
            };
        }
        let com = (self.com * self.mass + other.com * other.mass) / mass;
        let shift = |b: &SpatialInertia| {
            let d = b.com - com;
            b.rotational + (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * b.mass
        };
        SpatialInertia {
            mass,
            com,
            rotational: shift(self) + shift(other),
        }
    }

    /// 6×6 spatial inertia about the frame origin, angular-first.
    pub fn matrix(&self) -> Matrix6<f64> {
        let c = skew(&self.com);
        let m = self.mass;
        let mut out = Matrix6::zeros();
        out.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(self.rotational - c * c * m));
        out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(c * m));
        out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-c * m));
        out.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(Matrix3::identity() * m));
        out
    }

    pub fn principal_moments(&self) -> Vector3<f64> {
        let sym = (self.rotational + self.rotational.transpose()) * 0.5;
        let mut ev = sym.symmetric_eigen().eigenvalues;
        ev.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Each principal moment must not exceed the sum of the other two.
    pub fn satisfies_triangle_inequality(&self, slack: f64) -> bool {
        let p = self.principal_moments();
        p[2] <= p[0] + p[1] + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::Rotation;

    #[test]
    fn combination_preserves_mass_and_com() {
        let a = SpatialInertia::new(1.0, Vector3::new(1.0, 0.0, 0.0), Matrix3::identity() * 0.1);
        let b = SpatialInertia::new(3.0, Vector3::new(-1.0, 2.0, 0.0), Matrix3::identity() * 0.2);
        let c = a.combined(&b);
        assert_eq!(c.mass, 4.0);
        assert!((c.com - Vector3::new(-0.5, 1.5, 0.0)).norm() < 1e-15);
        // spatial matrices about a common origin add
        assert!((c.matrix() - (a.matrix() + b.matrix())).amax() < 1e-12);
    }

    #[test]
    fn transform_matches_spatial_congruence() {
        let i = SpatialInertia::new(
            2.0,
            Vector3::new(0.1, -0.2, 0.3),
            Matrix3::new(0.3, 0.01, 0.0, 0.01, 0.2, 0.02, 0.0, 0.02, 0.1),
        );
        let m = Placement::new(
            Rotation::from_rpy(0.2, -0.4, 0.9),
            Vector3::new(1.0, 2.0, -0.5),
        );
        // I_A = Ad(M)^{-T} I_B Ad(M)^{-1}
        let ad_inv = m.inverse().adjoint();
        let expected = ad_inv.transpose() * i.matrix() * ad_inv;
        assert!((i.transformed(&m).matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn triangle_inequality() {
        let ok = SpatialInertia::new(
            1.0,
            Vector3::zeros(),
            Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 1.5)),
        );
        assert!(ok.satisfies_triangle_inequality(1e-9));
        let bad = SpatialInertia::new(
            1.0,
            Vector3::zeros(),
            Matrix3::from_diagonal(&Vector3::new(0.1, 0.1, 1.0)),
        );
        assert!(!bad.satisfies_triangle_inequality(1e-9));
    }
}
