use crate::report::*;
use log::{debug, info};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use xurdf::constraints::{
    residual_at, ConstraintResidual, ProjectionError, ProjectionOptions, ON_MANIFOLD_TOLERANCE,
};
use xurdf::extension::{generate_extension, NamingConvention};
use xurdf::kinematics::{check_configuration, neutral};
use xurdf::model::{BuildOptions, RobotModel};
use xurdf::{load_model, mobility_report, parse_urdf, project, serialize_extension, Configuration};

/// Tolerance on unit-quaternion and unit-circle blocks of a user configuration.
const CONFIG_NORM_TOLERANCE: f64 = 1e-6;

pub struct ModelArgs<'a> {
    pub urdf: &'a Path,
    pub yaml: Option<&'a Path>,
    pub options: BuildOptions,
}

fn read(path: &Path) -> Result<String, Finding> {
    std::fs::read_to_string(path).map_err(|e| {
        Finding::error(
            Category::Io,
            "Io",
            path.display().to_string(),
            format!("cannot read {}: {e}", path.display()),
        )
    })
}

struct Loaded {
    model: RobotModel,
    findings: Vec<Finding>,
}

/// Parses, builds and validates; `Err` carries the exit code and the fatal finding.
fn load(args: &ModelArgs) -> Result<Loaded, (u8, Vec<Finding>)> {
    let urdf = read(args.urdf).map_err(|f| (EXIT_PARSE, vec![f]))?;
    let yaml = match args.yaml {
        Some(p) => Some(read(p).map_err(|f| (EXIT_PARSE, vec![f]))?),
        None => None,
    };
    let (model, report) = load_model(&urdf, yaml.as_deref(), &args.options).map_err(|e| {
        let (f, exit) = Finding::from_load(&e);
        (exit, vec![f])
    })?;
    info!(
        "built `{}`: n_q={} n_v={} closures={}",
        model.name,
        model.nq,
        model.nv,
        model.closures.len()
    );
    let findings: Vec<Finding> = report.findings().map(Finding::from_model).collect();
    if !report.is_ok() {
        return Err((EXIT_SEMANTIC, findings));
    }
    Ok(Loaded { model, findings })
}

fn closures_json(model: &RobotModel, residual: &ConstraintResidual) -> Value {
    let norms = residual.per_closure();
    Value::Array(
        model
            .closures
            .iter()
            .zip(norms)
            .map(|(c, n)| {
                json!({
                    "name": c.name,
                    "type": c.kind.as_str(),
                    "frame_a": model.frames[c.frame_a].name,
                    "frame_b": model.frames[c.frame_b].name,
                    "residual_norm": n,
                })
            })
            .collect(),
    )
}

fn layout_json(model: &RobotModel) -> Value {
    Value::Array(
        model
            .layout()
            .into_iter()
            .map(|e| {
                json!({
                    "joint": e.joint,
                    "type": e.kind.as_str(),
                    "q": [e.q.start, e.q.end],
                    "v": [e.v.start, e.v.end],
                })
            })
            .collect(),
    )
}

fn read_config(path: &Path, model: &RobotModel) -> Result<Configuration, Finding> {
    let text = read(path)?;
    let subject = path.display().to_string();
    let values: Vec<f64> = serde_json::from_str(&text).map_err(|e| {
        Finding::error(
            Category::Config,
            "ConfigSyntax",
            subject.clone(),
            format!("expected a JSON array of numbers: {e}"),
        )
    })?;
    let q = Configuration::from_vec(values);
    check_configuration(model, &q, CONFIG_NORM_TOLERANCE)
        .map_err(|e| Finding::error(Category::Config, "ConfigInvalid", subject, e.to_string()))?;
    Ok(xurdf::kinematics::normalize(model, &q))
}

/// Writes via a sibling temporary file and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Finding> {
    let fail = |e: std::io::Error| {
        Finding::error(
            Category::Io,
            "Io",
            path.display().to_string(),
            format!("cannot write {}: {e}", path.display()),
        )
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Where the evaluated configuration came from.
enum Source {
    Given,
    ProjectedNeutral,
}

/// The configuration to evaluate: the given one, or neutral pulled onto the closures.
fn evaluation_point(
    model: &RobotModel,
    config: Option<&Path>,
    findings: &mut Vec<Finding>,
) -> Result<(Configuration, Source), Finding> {
    if let Some(path) = config {
        return Ok((read_config(path, model)?, Source::Given));
    }
    let q0 = neutral(model);
    if model.closures.is_empty() {
        return Ok((q0, Source::ProjectedNeutral));
    }
    match project(model, &q0, &ProjectionOptions::default()) {
        Ok((q, stats)) => {
            debug!("neutral projected in {} iterations", stats.iterations);
            Ok((q, Source::ProjectedNeutral))
        }
        Err(ProjectionError::MaxIterations {
            final_norm, best, ..
        }) => {
            findings.push(Finding::warning(
                Category::Numerics,
                "ProjectionFailed",
                model.name.clone(),
                format!("neutral configuration could not be projected (residual {final_norm:e}); reporting at the best iterate"),
            ));
            Ok((*best, Source::ProjectedNeutral))
        }
        Err(ProjectionError::Constraint(e)) => Err(Finding::error(
            Category::Numerics,
            e.code(),
            model.name.clone(),
            e.to_string(),
        )),
    }
}

fn source_str(s: &Source) -> &'static str {
    match s {
        Source::Given => "given",
        Source::ProjectedNeutral => "projected_neutral",
    }
}

pub fn validate(args: &ModelArgs) -> Outcome {
    let loaded = match load(args) {
        Ok(l) => l,
        Err((exit, findings)) => return Outcome::new("validate", exit, Value::Null, findings),
    };
    let Loaded {
        model, findings, ..
    } = loaded;
    let mut findings = findings;
    let mut note = Value::Null;
    if args.yaml.is_none() {
        // closure-named links without a sidecar are probably a forgotten file
        let urdf = parse_urdf(&read(args.urdf).unwrap_or_default()).ok();
        let undeclared = urdf
            .and_then(|u| generate_extension(&u, &NamingConvention::default()).ok())
            .map(|ext| ext.closures.len())
            .unwrap_or(0);
        if undeclared > 0 {
            findings.push(Finding::warning(
                Category::Extension,
                "UndeclaredClosures",
                model.name.clone(),
                format!("{undeclared} closure frame pairs follow the naming convention but no extension was given"),
            ));
        } else {
            note = json!("serial model, no extension");
        }
    }
    let payload = json!({
        "model": model.name,
        "n_q": model.nq,
        "n_v": model.nv,
        "closures": model.closures.len(),
        "actuated": model.actuated.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
        "spherical_joints": model.joints.iter().filter(|j| j.spherical.is_some()).map(|j| j.name.clone()).collect::<Vec<_>>(),
        "note": note,
    });
    Outcome::new("validate", EXIT_OK, payload, findings)
}

pub fn info(args: &ModelArgs, config: Option<&Path>, layout: bool) -> Outcome {
    let Loaded {
        model,
        mut findings,
        ..
    } = match load(args) {
        Ok(l) => l,
        Err((exit, findings)) => return Outcome::new("info", exit, Value::Null, findings),
    };
    let (q, source) = match evaluation_point(&model, config, &mut findings) {
        Ok(p) => p,
        Err(f) => {
            let exit = if f.category == Category::Numerics {
                EXIT_NUMERIC
            } else {
                EXIT_PARSE
            };
            findings.push(f);
            return Outcome::new("info", exit, Value::Null, findings);
        }
    };
    let report = match mobility_report(&model, &q) {
        Ok(r) => r,
        Err(e) => {
            findings.push(Finding::error(
                Category::Numerics,
                e.code(),
                model.name.clone(),
                e.to_string(),
            ));
            return Outcome::new("info", EXIT_NUMERIC, Value::Null, findings);
        }
    };
    let residual = residual_at(&model, &q).expect("residual evaluated above");
    findings.extend(report.warnings.iter().map(|w| {
        let mut f = Finding::from_model(w);
        f.category = Category::Numerics;
        f
    }));
    let mut payload = json!({
        "model": model.name,
        "floating_base": args.options.floating_base,
        "configuration_source": source_str(&source),
        "configuration": q.as_slice(),
        "n_q": report.n_q,
        "n_v": report.n_v,
        "m": report.m,
        "rank_k": report.rank_k,
        "n_actuated": report.n_actuated,
        "internal_mobilities": report.internal_mobilities,
        "net_dof": report.net_dof,
        "singular_values": report.singular_values,
        "residual_norm": report.residual_norm,
        "closures": closures_json(&model, &residual),
    });
    if layout {
        payload["layout"] = layout_json(&model);
    }
    Outcome::new("info", EXIT_OK, payload, findings)
}

pub fn check(args: &ModelArgs, config: Option<&Path>) -> Outcome {
    let Loaded {
        model,
        mut findings,
        ..
    } = match load(args) {
        Ok(l) => l,
        Err((exit, findings)) => return Outcome::new("check", exit, Value::Null, findings),
    };
    let (q, source) = match evaluation_point(&model, config, &mut findings) {
        Ok(p) => p,
        Err(f) => {
            let exit = if f.category == Category::Numerics {
                EXIT_NUMERIC
            } else {
                EXIT_PARSE
            };
            findings.push(f);
            return Outcome::new("check", exit, Value::Null, findings);
        }
    };
    let residual = match residual_at(&model, &q) {
        Ok(r) => r,
        Err(e) => {
            findings.push(Finding::error(
                Category::Numerics,
                e.code(),
                model.name.clone(),
                e.to_string(),
            ));
            return Outcome::new("check", EXIT_NUMERIC, Value::Null, findings);
        }
    };
    let norm = if residual.values.is_empty() {
        0.0
    } else {
        residual.max_norm()
    };
    if norm > ON_MANIFOLD_TOLERANCE {
        findings.push(Finding::warning(
            Category::Numerics,
            "OffManifold",
            model.name.clone(),
            format!("closure residual {norm:e} exceeds {ON_MANIFOLD_TOLERANCE:e}"),
        ));
    }
    let payload = json!({
        "model": model.name,
        "configuration_source": source_str(&source),
        "residual_norm": norm,
        "closures": closures_json(&model, &residual),
    });
    Outcome::new("check", EXIT_OK, payload, findings)
}

pub struct GenArgs<'a> {
    pub urdf: &'a Path,
    pub closure_pattern: &'a str,
    pub actuated_pattern: &'a str,
    pub out: Option<&'a Path>,
}

pub fn gen_yaml(args: &GenArgs) -> Outcome {
    const CMD: &str = "gen-yaml";
    let convention = match NamingConvention::new(args.closure_pattern, args.actuated_pattern) {
        Ok(c) => c,
        Err(e) => {
            return Outcome::failed(
                CMD,
                EXIT_PARSE,
                Finding::error(Category::Extension, e.code(), e.subject(), e.to_string()),
            )
        }
    };
    let text = match read(args.urdf) {
        Ok(t) => t,
        Err(f) => return Outcome::failed(CMD, EXIT_PARSE, f),
    };
    let urdf = match parse_urdf(&text) {
        Ok(u) => u,
        Err(e) => {
            let (f, exit) = Finding::from_load(&e.into());
            return Outcome::failed(CMD, exit, f);
        }
    };
    let ext = match generate_extension(&urdf, &convention) {
        Ok(x) => x,
        Err(e) => {
            return Outcome::failed(
                CMD,
                EXIT_SEMANTIC,
                Finding::error(Category::Extension, e.code(), e.subject(), e.to_string()),
            )
        }
    };
    let mut findings = Vec::new();
    if ext.closures.is_empty() && ext.actuated.is_empty() {
        findings.push(Finding::warning(
            Category::Extension,
            "NoMatches",
            urdf.name.clone(),
            "no link or joint matched the naming patterns",
        ));
    }
    let yaml = serialize_extension(&ext);
    if let Some(out) = args.out {
        if let Err(f) = write_atomic(out, &yaml) {
            return Outcome::failed(CMD, EXIT_PARSE, f);
        }
        info!("wrote {}", out.display());
    }
    let payload = json!({
        "model": urdf.name,
        "closures": ext.closures.len(),
        "actuated": ext.actuated.len(),
        "out": args.out.map(|p| p.display().to_string()),
        "yaml": yaml,
    });
    Outcome::new(CMD, EXIT_OK, payload, findings)
}

pub struct ProjectArgs<'a> {
    pub config_in: &'a Path,
    pub config_out: Option<&'a Path>,
    pub tol: f64,
    pub max_iterations: usize,
}

pub fn project_cmd(args: &ModelArgs, p: &ProjectArgs) -> Outcome {
    const CMD: &str = "project";
    let Loaded {
        model,
        mut findings,
        ..
    } = match load(args) {
        Ok(l) => l,
        Err((exit, findings)) => return Outcome::new(CMD, exit, Value::Null, findings),
    };
    let q0 = match read_config(p.config_in, &model) {
        Ok(q) => q,
        Err(f) => {
            findings.push(f);
            return Outcome::new(CMD, EXIT_PARSE, Value::Null, findings);
        }
    };
    let opts = ProjectionOptions {
        tol: p.tol,
        max_iterations: p.max_iterations,
        ..Default::default()
    };
    match project(&model, &q0, &opts) {
        Ok((q, stats)) => {
            let text = serde_json::to_string(q.as_slice()).expect("finite floats serialize") + "\n";
            if let Some(out) = p.config_out {
                if let Err(f) = write_atomic(out, &text) {
                    findings.push(f);
                    return Outcome::new(CMD, EXIT_PARSE, Value::Null, findings);
                }
            }
            let payload = json!({
                "model": model.name,
                "iterations": stats.iterations,
                "accepted_steps": stats.accepted,
                "final_norm": stats.final_norm,
                "configuration": q.as_slice(),
                "out": p.config_out.map(|p| p.display().to_string()),
            });
            Outcome::new(CMD, EXIT_OK, payload, findings)
        }
        Err(ProjectionError::MaxIterations {
            final_norm,
            best,
            stats,
        }) => {
            findings.push(Finding::error(
                Category::Numerics,
                "MaxIterations",
                model.name.clone(),
                format!(
                    "no convergence after {} iterations; residual {final_norm:e}",
                    stats.iterations
                ),
            ));
            let payload = json!({
                "model": model.name,
                "iterations": stats.iterations,
                "accepted_steps": stats.accepted,
                "final_norm": final_norm,
                "configuration": best.as_slice(),
                "out": Value::Null,
            });
            Outcome::new(CMD, EXIT_NUMERIC, payload, findings)
        }
        Err(ProjectionError::Constraint(e)) => {
            findings.push(Finding::error(
                Category::Numerics,
                e.code(),
                model.name.clone(),
                e.to_string(),
            ));
            Outcome::new(CMD, EXIT_NUMERIC, Value::Null, findings)
        }
    }
}
