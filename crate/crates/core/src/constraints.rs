//! Closure constraints: residual φ(q), Jacobian K(q), acceleration bias
//! k(q, v), projection onto φ = 0, and mobility counting.
//!
//! A 6D closure contributes `log(oMa⁻¹ · oMb)` (a twist in frame A), a 3D
//! closure contributes `p_b − p_a` in world coordinates.

use crate::extension::ConstraintType;
use crate::kinematics::{
    forward_kinematics, frame_jacobian, integrate, to_local, Configuration, KinematicsCache,
    TangentVector,
};
use crate::linalg::{rank_from_singular_values, singular_values};
use crate::model::{Finding, RobotModel, Severity};
use crate::se3::{jlog6, log_se3, Se3Error};
use nalgebra::{DMatrix, DVector, Matrix6};
use std::ops::Range;
use thiserror::Error;

/// Rank cutoff relative to the largest singular value.
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Residual above which a configuration counts as off the constraint manifold.
pub const ON_MANIFOLD_TOLERANCE: f64 = 1e-6;
/// Step along the tangent used for finite differences of K.
pub const BIAS_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("closure `{closure}`: relative rotation angle {angle} is too close to pi")]
    AngleNearPi { closure: String, angle: f64 },
}

impl ConstraintError {
    pub fn code(&self) -> &'static str {
        "AngleNearPi"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResidual {
    pub values: DVector<f64>,
    /// Row range of each closure, in closure order.
    pub slices: Vec<Range<usize>>,
}

impl ConstraintResidual {
    pub fn max_norm(&self) -> f64 {
        self.values.amax()
    }

    /// ∞-norm of each closure's slice.
    pub fn per_closure(&self) -> Vec<f64> {
        self.slices
            .iter()
            .map(|r| self.values.rows(r.start, r.len()).amax())
            .collect()
    }
}

fn slices(model: &RobotModel) -> Vec<Range<usize>> {
    let mut start = 0;
    model
        .closures
        .iter()
        .map(|c| {
            let r = start..start + c.dim();
            start = r.end;
            r
        })
        .collect()
}

fn near_pi(closure: &str, e: Se3Error) -> ConstraintError {
    let Se3Error::AngleNearPi { angle } = e;
    ConstraintError::AngleNearPi {
        closure: closure.to_string(),
        angle,
    }
}

pub fn residual(
    model: &RobotModel,
    cache: &KinematicsCache,
) -> Result<ConstraintResidual, ConstraintError> {
    let slices = slices(model);
    let mut values = DVector::zeros(model.constraint_dim());
    for (c, r) in model.closures.iter().zip(&slices) {
        let (ma, mb) = (&cache.frames[c.frame_a], &cache.frames[c.frame_b]);
        match c.kind {
            ConstraintType::Constraint3D => {
                values
                    .rows_mut(r.start, 3)
                    .copy_from(&(mb.translation - ma.translation));
            }
            ConstraintType::Constraint6D => {
                let tw = log_se3(&ma.inverse().compose(mb)).map_err(|e| near_pi(&c.name, e))?;
                values.rows_mut(r.start, 6).copy_from(&tw.to_vector());
            }
        }
    }
    Ok(ConstraintResidual { values, slices })
}

pub fn residual_at(
    model: &RobotModel,
    q: &Configuration,
) -> Result<ConstraintResidual, ConstraintError> {
    residual(model, &forward_kinematics(model, q))
}

/// m×n_v constraint Jacobian, rows in the same layout as the residual.
pub fn jacobian(
    model: &RobotModel,
    cache: &KinematicsCache,
) -> Result<DMatrix<f64>, ConstraintError> {
    let mut k = DMatrix::zeros(model.constraint_dim(), model.nv);
    for (c, r) in model.closures.iter().zip(slices(model)) {
        let ja = frame_jacobian(model, cache, c.frame_a).expect("closure frames are valid");
        let jb = frame_jacobian(model, cache, c.frame_b).expect("closure frames are valid");
        match c.kind {
            ConstraintType::Constraint3D => {
                k.rows_mut(r.start, 3)
                    .copy_from(&(jb.rows(3, 3) - ja.rows(3, 3)));
            }
            ConstraintType::Constraint6D => {
                let (ma, mb) = (&cache.frames[c.frame_a], &cache.frames[c.frame_b]);
                let rel = ma.inverse().compose(mb);
                let jlog: Matrix6<f64> = jlog6(&rel).map_err(|e| near_pi(&c.name, e))?;
                let nu_a = to_local(&ja, &ma.rotation);
                let nu_b = to_local(&jb, &mb.rotation);
                let ad = rel.inverse().adjoint();
                let rel_twist = nu_b - to_dyn(&ad) * nu_a;
                k.rows_mut(r.start, 6)
                    .copy_from(&(to_dyn(&jlog) * rel_twist));
            }
        }
    }
    Ok(k)
}

fn to_dyn(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_iterator(6, 6, m.iter().copied())
}

pub fn jacobian_at(model: &RobotModel, q: &Configuration) -> Result<DMatrix<f64>, ConstraintError> {
    jacobian(model, &forward_kinematics(model, q))
}

/// k(q, v) such that K q̈ = k along constrained motion, from a central
/// difference of K in the direction of v.
pub fn acceleration_bias(
    model: &RobotModel,
    q: &Configuration,
    v: &TangentVector,
) -> Result<DVector<f64>, ConstraintError> {
    if v.iter().all(|x| *x == 0.0) {
        return Ok(DVector::zeros(model.constraint_dim()));
    }
    let plus = jacobian_at(model, &integrate(model, q, v, BIAS_STEP))?;
    let minus = jacobian_at(model, &integrate(model, q, v, -BIAS_STEP))?;
    Ok(-((plus - minus) / (2.0 * BIAS_STEP)) * v)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionOptions {
    /// Stop once ‖φ‖∞ falls below this.
    pub tol: f64,
    pub max_iterations: usize,
    pub initial_damping: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            tol: 1e-8,
            max_iterations: 100,
            initial_damping: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionStats {
    /// Linear solves performed, accepted or not.
    pub iterations: usize,
    pub accepted: usize,
    /// ‖φ‖∞ at the returned configuration.
    pub final_norm: f64,
    /// ‖φ‖₂ after each accepted step, starting with the seed.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("projection did not converge: final residual {final_norm:e}")]
    MaxIterations {
        final_norm: f64,
        best: Box<Configuration>,
        stats: Box<ProjectionStats>,
    },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

impl ProjectionError {
    pub fn code(&self) -> &'static str {
        match self {
            ProjectionError::MaxIterations { .. } => "MaxIterations",
            ProjectionError::Constraint(e) => e.code(),
        }
    }
}

/// Levenberg-Marquardt on φ with steps applied through `integrate`.
///
/// A step is accepted only if it lowers ‖φ‖₂; damping shrinks tenfold on
/// acceptance and grows tenfold on rejection.
pub fn project(
    model: &RobotModel,
    q0: &Configuration,
    opts: &ProjectionOptions,
) -> Result<(Configuration, ProjectionStats), ProjectionError> {
    let mut q = q0.clone();
    let mut cache = forward_kinematics(model, &q);
    let mut phi = residual(model, &cache)?.values;
    let mut lambda = opts.initial_damping;
    let mut stats = ProjectionStats {
        iterations: 0,
        accepted: 0,
        final_norm: phi.amax(),
        history: vec![phi.norm()],
    };
    while stats.final_norm >= opts.tol {
        if stats.iterations >= opts.max_iterations {
            return Err(ProjectionError::MaxIterations {
                final_norm: stats.final_norm,
                best: Box::new(q),
                stats: Box::new(stats),
            });
        }
        stats.iterations += 1;
        let k = jacobian(model, &cache)?;
        let kt = k.transpose();
        let mut normal = &kt * &k;
        for i in 0..model.nv {
            normal[(i, i)] += lambda;
        }
        let rhs = -(&kt * &phi);
        let Some(chol) = normal.cholesky() else {
            lambda *= 10.0;
            continue;
        };
        let delta = chol.solve(&rhs);
        let trial = integrate(model, &q, &delta, 1.0);
        let trial_cache = forward_kinematics(model, &trial);
        let trial_phi = match residual(model, &trial_cache) {
            Ok(r) => Some(r.values),
            Err(_) => None,
        };
        match trial_phi {
            Some(p) if p.norm() < phi.norm() => {
                q = trial;
                cache = trial_cache;
                phi = p;
                lambda = (lambda / 10.0).max(1e-15);
                stats.accepted += 1;
                stats.final_norm = phi.amax();
                stats.history.push(phi.norm());
            }
            _ => lambda = (lambda * 10.0).min(1e15),
        }
    }
    Ok((q, stats))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MobilityReport {
    pub n_q: usize,
    pub n_v: usize,
    /// Constrained DoF: sum of closure dimensions.
    pub m: usize,
    pub rank_k: usize,
    pub n_actuated: usize,
    /// n_v − rank_K − n_actuated; negative when over-actuated.
    pub internal_mobilities: i64,
    /// n_v − rank_K.
    pub net_dof: usize,
    pub singular_values: Vec<f64>,
    /// ‖φ‖∞ at the evaluated configuration.
    pub residual_norm: f64,
    pub warnings: Vec<Finding>,
}

pub fn mobility_report(
    model: &RobotModel,
    q: &Configuration,
) -> Result<MobilityReport, ConstraintError> {
    let cache = forward_kinematics(model, q);
    let phi = residual(model, &cache)?;
    let k = jacobian(model, &cache)?;
    let sv = singular_values(&k);
    let rank_k = rank_from_singular_values(&sv, RANK_TOLERANCE);
    let n_actuated = model.n_actuated();
    let internal = model.nv as i64 - rank_k as i64 - n_actuated as i64;
    let mut warnings = Vec::new();
    let mut warn = |code: &str, message: String| {
        warnings.push(Finding {
            severity: Severity::Warning,
            code: code.into(),
            subject: model.name.clone(),
            message,
        })
    };
    let residual_norm = if phi.values.is_empty() {
        0.0
    } else {
        phi.max_norm()
    };
    if residual_norm > ON_MANIFOLD_TOLERANCE {
        warn(
            "OffManifold",
            format!("rank evaluated off the constraint manifold (residual {residual_norm:e})"),
        );
    }
    if rank_k > 0 {
        let cutoff = RANK_TOLERANCE * sv[0];
        let smallest = sv[rank_k - 1];
        if smallest < 100.0 * cutoff {
            warn(
                "RankMarginal",
                format!("smallest retained singular value {smallest:e} is close to the cutoff {cutoff:e}"),
            );
        }
    }
    if internal < 0 {
        warn(
            "OverActuated",
            format!("{} more actuators than free motions", -internal),
        );
    }
    Ok(MobilityReport {
        n_q: model.nq,
        n_v: model.nv,
        m: model.constraint_dim(),
        rank_k,
        n_actuated,
        internal_mobilities: internal,
        net_dof: model.nv - rank_k,
        singular_values: sv,
        residual_norm,
        warnings,
    })
}
