#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xurdf::kinematics::{forward_kinematics, integrate, neutral, Configuration};
use xurdf::se3::{log_so3, Placement};
use xurdf::urdf::{Inertial, JointDesc, JointKind, JointLimit, LinkDesc, Origin, UrdfDocument};
use xurdf::RobotModel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn uniform_vec3(rng: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    Vector3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

pub fn unit_vec3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = uniform_vec3(rng, 1.0);
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_inertial(rng: &mut ChaCha8Rng) -> Inertial {
    // principal moments of a box keep the triangle inequality
    let (a, b, c) = (
        rng.gen_range(0.05..0.5),
        rng.gen_range(0.05..0.5),
        rng.gen_range(0.05..0.5),
    );
    let m = rng.gen_range(0.2..3.0);
    Inertial {
        origin: Origin {
            xyz: uniform_vec3(rng, 0.3),
            rpy: uniform_vec3(rng, 1.5),
        },
        mass: m,
        inertia: [
            m * (b * b + c * c) / 12.0,
            0.0,
            0.0,
            m * (a * a + c * c) / 12.0,
            0.0,
            m * (a * a + b * b) / 12.0,
        ],
    }
}

/// Random tree with every joint type, inertias on every moving body, and a
/// massless leaf frame on every third link.
pub fn random_urdf(rng: &mut ChaCha8Rng, n_joints: usize) -> UrdfDocument {
    let mut links = vec![LinkDesc {
        name: "l0".into(),
        inertial: Some(random_inertial(rng)),
        blobs: vec![],
    }];
    let mut joints = Vec::new();
    let kinds = [
        JointKind::Revolute,
        JointKind::Continuous,
        JointKind::Prismatic,
        JointKind::Fixed,
        JointKind::Planar,
        JointKind::Floating,
    ];
    for i in 1..=n_joints {
        let parent = rng.gen_range(0..links.len());
        let parent_name = links[parent].name.clone();
        let name = format!("l{i}");
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let mut j = JointDesc::new(format!("j{i}"), kind, parent_name, name.clone());
        j.origin = Origin {
            xyz: uniform_vec3(rng, 0.8),
            rpy: uniform_vec3(rng, 1.5),
        };
        j.axis = unit_vec3(rng);
        if matches!(kind, JointKind::Revolute | JointKind::Prismatic) {
            j.limit = Some(JointLimit {
                lower: Some(-3.0),
                upper: Some(3.0),
                effort: Some(1.0),
                velocity: Some(1.0),
            });
        }
        joints.push(j);
        links.push(LinkDesc {
            name,
            inertial: Some(random_inertial(rng)),
            blobs: vec![],
        });
        if i % 3 == 0 {
            let frame = format!("f{i}");
            let mut fj = JointDesc::new(
                format!("fj{i}"),
                JointKind::Fixed,
                format!("l{i}"),
                frame.clone(),
            );
            fj.origin = Origin {
                xyz: uniform_vec3(rng, 0.5),
                rpy: uniform_vec3(rng, 1.5),
            };
            joints.push(fj);
            links.push(LinkDesc::new(frame));
        }
    }
    UrdfDocument {
        name: "random".into(),
        links,
        joints,
        transmissions: vec![],
    }
}

pub fn random_tangent(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

/// A configuration reached from neutral along a random tangent.
pub fn random_configuration(model: &RobotModel, rng: &mut ChaCha8Rng, scale: f64) -> Configuration {
    let v = random_tangent(rng, model.nv, scale);
    integrate(model, &neutral(model), &v, 1.0)
}

/// Local-world-aligned frame Jacobian by central differences through `integrate`.
pub fn fd_frame_jacobian(
    model: &RobotModel,
    q: &Configuration,
    frame: usize,
    eps: f64,
) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(6, model.nv);
    for k in 0..model.nv {
        let mut e = DVector::zeros(model.nv);
        e[k] = eps;
        let plus: Placement =
            forward_kinematics(model, &integrate(model, q, &e, 1.0)).frames[frame];
        let minus: Placement =
            forward_kinematics(model, &integrate(model, q, &e, -1.0)).frames[frame];
        let w = log_so3(&plus.rotation.compose(&minus.rotation.inverse())) / (2.0 * eps);
        let v = (plus.translation - minus.translation) / (2.0 * eps);
        jac.fixed_view_mut::<3, 1>(0, k).copy_from(&w);
        jac.fixed_view_mut::<3, 1>(3, k).copy_from(&v);
    }
    jac
}

/// Columnwise central-difference Jacobian of any map on the configuration manifold.
pub fn fd_jacobian<F>(model: &RobotModel, q: &Configuration, eps: f64, f: F) -> DMatrix<f64>
where
    F: Fn(&Configuration) -> DVector<f64>,
{
    let base = f(q);
    let mut jac = DMatrix::zeros(base.len(), model.nv);
    for k in 0..model.nv {
        let mut e = DVector::zeros(model.nv);
        e[k] = eps;
        let d =
            (f(&integrate(model, q, &e, 1.0)) - f(&integrate(model, q, &e, -1.0))) / (2.0 * eps);
        jac.column_mut(k).copy_from(&d);
    }
    jac
}

pub fn fixture_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}
