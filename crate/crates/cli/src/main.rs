mod commands;
mod report;

use clap::{Args, Parser, Subcommand};
use commands::{GenArgs, ModelArgs, ProjectArgs};
use report::{Outcome, Status};
use serde_json::Value;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use xurdf::extension::{DEFAULT_ACTUATED_PATTERN, DEFAULT_CLOSURE_PATTERN};
use xurdf::model::BuildOptions;

#[derive(Parser, Debug)]
#[command(
    version,
    about = "Inspect robot descriptions with closed kinematic loops"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Print the report as a single JSON document.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, build and validate a model.
    Validate(ModelOpts),
    /// Report mobility counts and closure residuals.
    Info(InfoOpts),
    /// Report closure residuals only.
    Check(CheckOpts),
    /// Generate a closure/actuation sidecar from naming conventions.
    GenYaml(GenOpts),
    /// Pull a configuration onto the closure constraints.
    Project(ProjectOpts),
}

#[derive(Args, Debug)]
struct ModelOpts {
    urdf: PathBuf,
    /// Closure/actuation sidecar.
    yaml: Option<PathBuf>,
    /// Mount the root link on a free-flying joint.
    #[arg(long)]
    floating_base: bool,
    /// Keep concurrent revolute triples as they are.
    #[arg(long)]
    no_substitute: bool,
}

impl ModelOpts {
    fn args(&self) -> ModelArgs<'_> {
        ModelArgs {
            urdf: &self.urdf,
            yaml: self.yaml.as_deref(),
            options: BuildOptions {
                floating_base: self.floating_base,
                substitute_spherical: !self.no_substitute,
                ..Default::default()
            },
        }
    }
}

#[derive(Args, Debug)]
struct InfoOpts {
    #[command(flatten)]
    model: ModelOpts,
    /// JSON array of configuration values in the layout order.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Include the configuration and tangent layout.
    #[arg(long)]
    layout: bool,
}

#[derive(Args, Debug)]
struct CheckOpts {
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenOpts {
    urdf: PathBuf,
    #[arg(long, default_value = DEFAULT_CLOSURE_PATTERN)]
    closure_pattern: String,
    #[arg(long, default_value = DEFAULT_ACTUATED_PATTERN)]
    actuated_pattern: String,
    /// Write here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectOpts {
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, value_name = "PATH")]
    config_in: PathBuf,
    #[arg(long, value_name = "PATH")]
    config_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("XURDF_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate(o) => commands::validate(&o.args()),
        Command::Info(o) => commands::info(&o.model.args(), o.config.as_deref(), o.layout),
        Command::Check(o) => commands::check(&o.model.args(), o.config.as_deref()),
        Command::GenYaml(o) => commands::gen_yaml(&GenArgs {
            urdf: &o.urdf,
            closure_pattern: &o.closure_pattern,
            actuated_pattern: &o.actuated_pattern,
            out: o.out.as_deref(),
        }),
        Command::Project(o) => commands::project_cmd(
            &o.model.args(),
            &ProjectArgs {
                config_in: &o.config_in,
                config_out: o.config_out.as_deref(),
                tol: o.tol,
                max_iterations: o.max_iterations,
            },
        ),
    };
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&outcome.report).expect("report serializes")
        );
    } else {
        print_human(
            &outcome,
            matches!(&cli.command, Command::GenYaml(o) if o.out.is_none()),
        );
    }
    ExitCode::from(outcome.exit)
}

/// Findings go to stderr; stdout carries the result.
fn print_human(outcome: &Outcome, yaml_to_stdout: bool) {
    let mut out = String::new();
    render_human(outcome, yaml_to_stdout, &mut out).expect("writing to a String");
    // a closed pipe is not worth a panic
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
}

fn render_human(outcome: &Outcome, yaml_to_stdout: bool, out: &mut String) -> std::fmt::Result {
    let r = &outcome.report;
    for f in &r.findings {
        eprintln!("{}[{}] {}: {}", f.severity, f.code, f.subject, f.message);
    }
    let p = &r.payload;
    if p.is_null() {
        return Ok(());
    }
    let field = |k: &str| match &p[k] {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        v => v.to_string(),
    };
    match r.command.as_str() {
        "validate" => {
            writeln!(
                out,
                "{}: n_q={} n_v={} closures={}",
                field("model"),
                field("n_q"),
                field("n_v"),
                field("closures")
            )?;
            if let Value::String(note) = &p["note"] {
                writeln!(out, "note: {note}")?;
            }
        }
        "info" | "check" => {
            if r.command == "info" {
                for k in [
                    "n_q",
                    "n_v",
                    "m",
                    "rank_k",
                    "n_actuated",
                    "internal_mobilities",
                    "net_dof",
                ] {
                    writeln!(out, "{k}: {}", field(k))?;
                }
            }
            writeln!(out, "residual_norm: {}", field("residual_norm"))?;
            for c in p["closures"].as_array().into_iter().flatten() {
                writeln!(
                    out,
                    "  {} ({}): {}",
                    c["name"].as_str().unwrap_or(""),
                    c["type"].as_str().unwrap_or(""),
                    c["residual_norm"]
                )?;
            }
            for e in p["layout"].as_array().into_iter().flatten() {
                writeln!(
                    out,
                    "  {} {} q={} v={}",
                    e["joint"].as_str().unwrap_or(""),
                    e["type"].as_str().unwrap_or(""),
                    e["q"],
                    e["v"]
                )?;
            }
        }
        "gen-yaml" => {
            if yaml_to_stdout {
                write!(out, "{}", field("yaml"))?;
            } else {
                writeln!(
                    out,
                    "wrote {} closures, {} actuated joints to {}",
                    field("closures"),
                    field("actuated"),
                    field("out")
                )?;
            }
        }
        "project" => {
            writeln!(out, "iterations: {}", field("iterations"))?;
            writeln!(out, "final_norm: {}", field("final_norm"))?;
            if r.status != Status::Error && p["out"].is_null() {
                writeln!(out, "{}", p["configuration"])?;
            }
        }
        _ => {}
    }
    Ok(())
}
