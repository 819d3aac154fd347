//! Extended URDF toolkit: URDF parsing, a YAML sidecar for closed kinematic
//! loops and actuation, a model builder, kinematics and closure constraints.

pub mod constraints;
pub mod extension;
pub mod fixtures;
pub mod inertia;
pub mod kinematics;
pub mod linalg;
pub mod model;
pub mod se3;
pub mod text;
pub mod urdf;

pub use constraints::{mobility_report, project, MobilityReport, ProjectionOptions};
pub use extension::{parse_extension, serialize_extension, ExtensionDoc};
pub use kinematics::{forward_kinematics, neutral, Configuration};
pub use model::{build_model, BuildOptions, RobotModel, ValidationReport};
pub use se3::{Placement, Rotation, Twist};
pub use urdf::{parse_urdf, serialize_urdf, UrdfDocument};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Urdf(#[from] urdf::UrdfError),
    #[error(transparent)]
    Extension(#[from] extension::ExtensionError),
    #[error(transparent)]
    Build(#[from] model::BuildError),
}

impl LoadError {
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::Urdf(e) => e.code(),
            LoadError::Extension(e) => e.code(),
            LoadError::Build(e) => e.code(),
        }
    }

    pub fn subject(&self) -> String {
        match self {
            LoadError::Urdf(e) => e.subject(),
            LoadError::Extension(e) => e.subject(),
            LoadError::Build(e) => e.subject(),
        }
    }
}

/// Parses both documents and builds the model. A missing extension is the
/// same as an empty one.
pub fn load_model(
    urdf_text: &str,
    yaml_text: Option<&str>,
    opts: &BuildOptions,
) -> Result<(RobotModel, ValidationReport), LoadError> {
    let urdf = parse_urdf(urdf_text)?;
    let ext = match yaml_text {
        Some(t) => parse_extension(t)?,
        None => ExtensionDoc::default(),
    };
    Ok(build_model(&urdf, &ext, opts)?)
}
