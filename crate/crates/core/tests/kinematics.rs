mod common;

use common::*;
use nalgebra::{DMatrix, DVector, Matrix6};
use xurdf::fixtures::{load_fixture, FIXTURES};
use xurdf::kinematics::*;
use xurdf::linalg::min_symmetric_eigenvalue;
use xurdf::model::{build_model, BuildOptions};
use xurdf::se3::log_so3;
use xurdf::{ExtensionDoc, RobotModel};

fn random_model(seed: u64) -> RobotModel {
    let mut r = rng(seed);
    let n = 2 + (seed % 9) as usize;
    let doc = random_urdf(&mut r, n);
    let opts = BuildOptions {
        floating_base: seed.is_multiple_of(4),
        ..Default::default()
    };
    build_model(&doc, &ExtensionDoc::default(), &opts)
        .unwrap()
        .0
}

#[test]
fn frame_jacobians_match_finite_differences() {
    let mut draws = 0;
    for seed in 0..110u64 {
        let model = random_model(seed);
        let q = random_configuration(&model, &mut rng(seed + 1000), 1.5);
        let cache = forward_kinematics(&model, &q);
        for f in 0..model.frames.len() {
            let jac = frame_jacobian(&model, &cache, f).unwrap();
            let fd = fd_frame_jacobian(&model, &q, f, 1e-6);
            let err = (&jac - &fd).amax();
            assert!(err < 1e-6, "seed {seed} frame {f}: {err:e}");
        }
        draws += 1;
    }
    assert!(draws >= 100);
}

#[test]
fn fixture_jacobians_match_finite_differences() {
    for name in FIXTURES {
        let f = load_fixture(name).unwrap();
        let m = &f.model;
        let q = random_configuration(m, &mut rng(5), 0.5);
        let cache = forward_kinematics(m, &q);
        for fr in 0..m.frames.len() {
            let err = (frame_jacobian(m, &cache, fr).unwrap() - fd_frame_jacobian(m, &q, fr, 1e-6))
                .amax();
            assert!(err < 1e-6, "{name} frame {fr}: {err:e}");
        }
    }
}

/// Σ over bodies of Jᵀ I J with J taken at each body's center of mass.
fn naive_mass_matrix(model: &RobotModel, q: &Configuration) -> DMatrix<f64> {
    let cache = forward_kinematics(model, q);
    let mut out = DMatrix::zeros(model.nv, model.nv);
    for (i, j) in model.joints.iter().enumerate() {
        let world = j.inertia.transformed(&cache.joints[i]);
        let jac = point_jacobian(model, &cache, i, &world.com);
        let mut inertia = Matrix6::zeros();
        inertia
            .fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&world.rotational);
        inertia
            .fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(nalgebra::Matrix3::identity() * world.mass));
        let inertia = DMatrix::from_iterator(6, 6, inertia.iter().copied());
        out += jac.transpose() * inertia * &jac;
    }
    out
}

#[test]
fn crba_matches_body_sum() {
    for seed in 0..60u64 {
        let model = random_model(seed);
        let q = random_configuration(&model, &mut rng(seed + 7), 1.5);
        let m = crba(&model, &q);
        let oracle = naive_mass_matrix(&model, &q);
        let err = (&m - &oracle).amax();
        assert!(err < 1e-9, "seed {seed}: {err:e}");
        assert!((&m - m.transpose()).amax() < 1e-10);
        assert!(min_symmetric_eigenvalue(&m).unwrap() > -1e-10);
    }
}

#[test]
fn fixture_inertia_is_positive_definite() {
    for name in FIXTURES {
        let f = load_fixture(name).unwrap();
        let m = crba(&f.model, &neutral(&f.model));
        assert!((&m - naive_mass_matrix(&f.model, &neutral(&f.model))).amax() < 1e-9);
        let min = min_symmetric_eigenvalue(&m).unwrap();
        assert!(min > 1e-10, "{name}: {min:e}");
    }
}

#[test]
fn forward_kinematics_is_pure() {
    let model = random_model(3);
    let q1 = random_configuration(&model, &mut rng(1), 1.0);
    let q2 = random_configuration(&model, &mut rng(2), 1.0);
    let first = forward_kinematics(&model, &q1);
    let _ = forward_kinematics(&model, &q2);
    let again = forward_kinematics(&model, &q1);
    assert_eq!(first, again);
}

#[test]
fn integration_error_is_second_order() {
    for seed in 0..30u64 {
        let model = random_model(seed);
        let mut r = rng(seed + 99);
        let q = random_configuration(&model, &mut r, 1.0);
        let v = random_tangent(&mut r, model.nv, 1.0);
        let cache = forward_kinematics(&model, &q);
        for f in 0..model.frames.len() {
            let jv = frame_jacobian(&model, &cache, f).unwrap() * &v;
            let err = |dt: f64| {
                let moved = forward_kinematics(&model, &integrate(&model, &q, &v, dt)).frames[f];
                let start = cache.frames[f];
                let w = log_so3(&moved.rotation.compose(&start.rotation.inverse()));
                let dp = moved.translation - start.translation;
                let d = DVector::from_iterator(6, w.iter().chain(dp.iter()).copied());
                (d - &jv * dt).norm()
            };
            let (e1, e2) = (err(1e-3), err(1e-4));
            if e1 < 1e-12 {
                continue;
            }
            let ratio = e1 / e2;
            assert!(
                (50.0..200.0).contains(&ratio),
                "seed {seed} frame {f}: ratio {ratio}"
            );
        }
    }
}

#[test]
fn floating_base_neutral() {
    let f = load_fixture("digit_leg").unwrap();
    let urdf = xurdf::parse_urdf(f.urdf).unwrap();
    let ext = xurdf::parse_extension(f.yaml).unwrap();
    let opts = BuildOptions {
        floating_base: true,
        ..Default::default()
    };
    let (model, report) = build_model(&urdf, &ext, &opts).unwrap();
    assert!(report.is_ok());
    assert_eq!((model.nq, model.nv), (f.model.nq + 7, f.model.nv + 6));
    let q = neutral(&model);
    assert_eq!(&q.as_slice()[..7], &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    assert_eq!(&q.as_slice()[7..], neutral(&f.model).as_slice());
}

#[test]
fn configuration_checks() {
    let f = load_fixture("gimbal").unwrap();
    let mut q = neutral(&f.model);
    assert!(check_configuration(&f.model, &q, 1e-9).is_ok());
    q[3] = 2.0;
    assert!(matches!(
        check_configuration(&f.model, &q, 1e-9),
        Err(ConfigurationError::NotNormalized { .. })
    ));
    assert!(check_configuration(&f.model, &normalize(&f.model, &q), 1e-9).is_ok());
    assert!(matches!(
        check_configuration(&f.model, &DVector::zeros(2), 1e-9),
        Err(ConfigurationError::WrongLength {
            expected: 7,
            found: 2
        })
    ));
}
