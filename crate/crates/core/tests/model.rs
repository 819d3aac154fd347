mod common;

use common::*;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xurdf::extension::parse_extension;
use xurdf::kinematics::{forward_kinematics, Configuration};
use xurdf::model::*;
use xurdf::urdf::{JointDesc, JointKind, JointLimit, LinkDesc, Origin, UrdfDocument};
use xurdf::{load_model, parse_urdf, ExtensionDoc};

fn limit() -> Option<JointLimit> {
    Some(JointLimit {
        lower: Some(-2.0),
        upper: Some(2.0),
        effort: None,
        velocity: None,
    })
}

/// Serial chain mixing plain revolutes with concurrent, massless-middle triples.
fn chain_with_gimbals(rng: &mut ChaCha8Rng, segments: usize) -> UrdfDocument {
    let mut links = vec![LinkDesc {
        name: "base".into(),
        inertial: Some(random_inertial(rng)),
        blobs: vec![],
    }];
    let mut joints = Vec::new();
    let mut n = 0;
    let mut push = |links: &mut Vec<LinkDesc>,
                    joints: &mut Vec<JointDesc>,
                    at_pivot: bool,
                    heavy: bool,
                    rng: &mut ChaCha8Rng| {
        n += 1;
        let name = format!("l{n}");
        let mut j = JointDesc::new(
            format!("j{n}"),
            JointKind::Revolute,
            links.last().unwrap().name.clone(),
            name.clone(),
        );
        j.origin = Origin {
            xyz: if at_pivot {
                Default::default()
            } else {
                uniform_vec3(rng, 0.6)
            },
            rpy: uniform_vec3(rng, 1.5),
        };
        j.axis = unit_vec3(rng);
        j.limit = limit();
        joints.push(j);
        links.push(LinkDesc {
            name,
            inertial: heavy.then(|| random_inertial(rng)),
            blobs: vec![],
        });
    };
    for _ in 0..segments {
        if rng.gen_bool(0.5) {
            push(&mut links, &mut joints, false, false, rng);
            push(&mut links, &mut joints, true, false, rng);
            push(&mut links, &mut joints, true, true, rng);
        } else {
            push(&mut links, &mut joints, false, true, rng);
        }
    }
    UrdfDocument {
        name: "chain".into(),
        links,
        joints,
        transmissions: vec![],
    }
}

fn serial_options() -> BuildOptions {
    BuildOptions {
        substitute_spherical: false,
        ..Default::default()
    }
}

/// Maps revolute angles of the unsubstituted model onto the substituted one.
fn transfer(
    serial: &xurdf::RobotModel,
    sph: &xurdf::RobotModel,
    q: &Configuration,
) -> Configuration {
    let mut out = DVector::zeros(sph.nq);
    for j in &sph.joints {
        match &j.spherical {
            Some(src) => {
                let angles: Vec<f64> = src
                    .replaced
                    .iter()
                    .map(|r| q[serial.joints[serial.joint_index(&r.name).unwrap()].q_offset])
                    .collect();
                let wxyz = src.matched_rotation(&angles).wxyz();
                out.rows_mut(j.q_offset, 4).copy_from_slice(&wxyz);
            }
            None => {
                let s = &serial.joints[serial.joint_index(&j.name).unwrap()];
                out.rows_mut(j.q_offset, j.nq)
                    .copy_from(&q.rows(s.q_offset, s.nq));
            }
        }
    }
    out
}

#[test]
fn substitution_preserves_forward_kinematics() {
    let mut folded = 0;
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let doc = chain_with_gimbals(&mut r, 1 + (seed % 5) as usize);
        let (serial, _) = build_model(&doc, &ExtensionDoc::default(), &serial_options()).unwrap();
        let (sph, _) =
            build_model(&doc, &ExtensionDoc::default(), &BuildOptions::default()).unwrap();
        folded += sph.joints.iter().filter(|j| j.spherical.is_some()).count();
        let q = DVector::from_fn(serial.nq, |_, _| r.gen_range(-2.0..2.0));
        let a = forward_kinematics(&serial, &q);
        let b = forward_kinematics(&sph, &transfer(&serial, &sph, &q));
        for (g, frame) in sph.frames.iter().enumerate() {
            let f = serial.frame_index(&frame.name).unwrap();
            let (pa, pb) = (a.frames[f], b.frames[g]);
            assert!(
                (pa.translation - pb.translation).amax() < 1e-9,
                "seed {seed} {}",
                frame.name
            );
            assert!((pa.rotation.matrix() - pb.rotation.matrix()).amax() < 1e-9);
        }
    }
    assert!(folded > 50, "too few folds exercised: {folded}");
}

#[test]
fn substitution_is_idempotent() {
    for seed in 0..50u64 {
        let doc = chain_with_gimbals(&mut rng(seed), 4);
        let (m, _) = build_model(&doc, &ExtensionDoc::default(), &BuildOptions::default()).unwrap();
        assert_eq!(
            substitute_spherical(&m, &SubstitutionTolerances::default()),
            m
        );
    }
}

#[test]
fn layout_partitions_configuration_and_tangent() {
    for seed in 0..50u64 {
        let doc = random_urdf(&mut rng(seed), 8);
        let opts = BuildOptions {
            floating_base: seed % 2 == 0,
            ..Default::default()
        };
        let (m, _) = build_model(&doc, &ExtensionDoc::default(), &opts).unwrap();
        let layout = m.layout();
        let (mut q, mut v) = (0, 0);
        for entry in &layout {
            assert_eq!(entry.q.start, q);
            assert_eq!(entry.v.start, v);
            assert_eq!(entry.q.len(), entry.kind.nq());
            assert_eq!(entry.v.len(), entry.kind.nv());
            q = entry.q.end;
            v = entry.v.end;
        }
        assert_eq!((q, v), (m.nq, m.nv));
        // zero-dof joints take no slots
        assert!(layout
            .iter()
            .all(|e| e.joint != UNIVERSE && !e.q.is_empty()));
        if opts.floating_base {
            assert_eq!(layout[0].joint, ROOT_JOINT);
            assert_eq!((layout[0].q.len(), layout[0].v.len()), (7, 6));
        }
        // every joint's parent precedes it
        for (i, j) in m.joints.iter().enumerate().skip(1) {
            assert!(j.parent.unwrap() < i);
        }
    }
}

#[test]
fn every_link_is_a_frame() {
    for seed in 0..30u64 {
        let doc = random_urdf(&mut rng(seed), 9);
        let (m, _) = build_model(&doc, &ExtensionDoc::default(), &BuildOptions::default()).unwrap();
        for link in &doc.links {
            assert!(m.frame_index(&link.name).is_some(), "{}", link.name);
        }
    }
}

#[test]
fn empty_extension_matches_no_extension() {
    for name in ["serial_arm", "four_bar", "gimbal"] {
        let urdf = read_fixture(&format!("{name}/robot.urdf"));
        let (plain, r1) = load_model(&urdf, None, &BuildOptions::default()).unwrap();
        let (empty, r2) = load_model(
            &urdf,
            Some("closed_loop: []\nactuated: []\n"),
            &BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(plain, empty, "{name}");
        assert_eq!(r1, r2);
        assert!(plain.closures.is_empty() && plain.actuated.is_empty());
    }
}

#[test]
fn build_error_fixtures() {
    let urdf = parse_urdf(&read_fixture("four_bar/robot.urdf")).unwrap();
    let cases = [
        ("unknown_closure_frame", "UnknownClosureFrame"),
        ("unknown_actuated_joint", "UnknownActuatedJoint"),
        ("replacement_target_missing", "ReplacementTargetMissing"),
        ("replacement_not_applicable", "ReplacementNotApplicable"),
        ("actuated_joint_not_movable", "ActuatedJointNotMovable"),
    ];
    for (file, code) in cases {
        let ext = parse_extension(&read_fixture(&format!("invalid/{file}.yaml"))).unwrap();
        let err = build_model(&urdf, &ext, &BuildOptions::default()).unwrap_err();
        assert_eq!(err.code(), code, "{file}: {err}");
    }
}

#[test]
fn explicit_replacement_on_gimbal() {
    let urdf = parse_urdf(&read_fixture("gimbal/robot.urdf")).unwrap();
    let ext = parse_extension(
        "closed_loop: []\nactuated: []\njoint_replacements:\n  gimbal_x,gimbal_y,gimbal_z: spherical\n",
    )
    .unwrap();
    let opts = BuildOptions {
        substitute_spherical: false,
        ..Default::default()
    };
    let (m, report) = build_model(&urdf, &ext, &opts).unwrap();
    assert!(report.is_ok());
    let sph: Vec<_> = m
        .joints
        .iter()
        .filter(|j| j.kind == JointType::Spherical)
        .collect();
    assert_eq!(sph.len(), 1);
    assert_eq!(sph[0].name, "gimbal_x");
    assert_eq!((m.nq, m.nv), (7, 6));
}

#[test]
fn diagnostic_fixtures() {
    let codes = |file: &str| {
        let urdf = read_fixture(&format!("diagnostics/{file}.urdf"));
        let (_, report) = load_model(&urdf, None, &BuildOptions::default()).unwrap();
        report
    };
    let leaf = codes("zero_inertia_leaf");
    assert!(leaf.has("ZeroInertiaBody") && leaf.has("InertiaNotPositive"));
    let mid = codes("zero_inertia_mid");
    assert!(mid.has("ZeroInertiaBody") && mid.has("InertiaNotPositive"));
    let regular = codes("zero_inertia_mid_regular");
    assert!(regular.is_ok());
    assert!(regular.has("ZeroInertiaBody"));
    assert!(regular.warnings.iter().any(|w| w.subject == "spacer"));
}

#[test]
fn fixtures_build_cleanly() {
    for name in xurdf::fixtures::FIXTURES {
        let f = xurdf::fixtures::load_fixture(name).unwrap();
        assert!(f.report.is_ok(), "{name}: {:?}", f.report.errors);
        assert!(!f.report.has("ZeroInertiaBody"), "{name}");
    }
}
