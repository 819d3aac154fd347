//! Bundled example models, each with an expected mobility analysis.

use crate::model::{BuildOptions, RobotModel, ValidationReport};
use crate::{load_model, LoadError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Names of the bundled fixtures.
pub const FIXTURES: &[&str] = &[
    "serial_arm",
    "four_bar",
    "gimbal",
    "gimbal_3d",
    "infeasible",
    "digit_leg",
    "kangaroo_leg",
];

macro_rules! fixture_files {
    ($($name:literal),*) => {
        fn files(name: &str) -> Option<(&'static str, &'static str, &'static str)> {
            match name {
                $($name => Some((
                    include_str!(concat!("../../../fixtures/", $name, "/robot.urdf")),
                    include_str!(concat!("../../../fixtures/", $name, "/robot.yaml")),
                    include_str!(concat!("../../../fixtures/", $name, "/expect.json")),
                )),)*
                _ => None,
            }
        }
    };
}

fixture_files!(
    "serial_arm",
    "four_bar",
    "gimbal",
    "gimbal_3d",
    "infeasible",
    "digit_leg",
    "kangaroo_leg"
);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureExpectation {
    pub model: String,
    pub floating_base: bool,
    pub n_q: usize,
    pub n_v: usize,
    pub m: usize,
    pub rank_k: usize,
    pub n_actuated: usize,
    pub internal_mobilities: i64,
    /// A configuration satisfying the closures, when one exists.
    pub configuration: Option<Vec<f64>>,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("fixture `{name}`: {source}")]
    Load { name: String, source: LoadError },
    #[error("fixture `{name}`: bad expectation file: {source}")]
    Expectation {
        name: String,
        source: serde_json::Error,
    },
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub urdf: &'static str,
    pub yaml: &'static str,
    pub model: RobotModel,
    pub report: ValidationReport,
    pub expectation: FixtureExpectation,
}

pub fn load_fixture(name: &str) -> Result<Fixture, FixtureError> {
    let (urdf, yaml, expect) =
        files(name).ok_or_else(|| FixtureError::UnknownFixture(name.to_string()))?;
    let name = FIXTURES
        .iter()
        .copied()
        .find(|n| *n == name)
        .expect("listed fixture");
    let expectation: FixtureExpectation =
        serde_json::from_str(expect).map_err(|source| FixtureError::Expectation {
            name: name.to_string(),
            source,
        })?;
    let opts = BuildOptions {
        floating_base: expectation.floating_base,
        ..Default::default()
    };
    let (model, report) =
        load_model(urdf, Some(yaml), &opts).map_err(|source| FixtureError::Load {
            name: name.to_string(),
            source,
        })?;
    Ok(Fixture {
        name,
        urdf,
        yaml,
        model,
        report,
        expectation,
    })
}
