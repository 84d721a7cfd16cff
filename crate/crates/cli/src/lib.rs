//! Batch driver for `hypermin-core`: reads one JSON experiment, runs a stage
//! or the whole chain, and writes JSON, CSV and whitespace-delimited results.
//!
//! Exit status is 0 on success, 1 when a computation or a check fails and 2 for
//! configuration errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod exact;
pub mod formats;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use hypermin_core::series::Rational;

use crate::commands::{Context, GeometryOverrides};
use crate::config::{ExperimentConfig, Geometry, SCHEMA_VERSION};
use crate::error::CliError;
use crate::exact::Exact;
use crate::formats::{sha256_hex, OutDir};
use crate::manifest::{Input, Manifest, Timing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScalarArg {
    Rational,
    Float,
}

#[derive(Debug, Parser)]
#[command(name = "hypermin", version, about = "Boundary expansions and numerics for minimal graphs in hyperbolic upper half-space")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-level, per-station and per-query work.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: u16,
    /// Coefficient field of the formal expansion.
    #[arg(long, global = true, value_enum, default_value_t = ScalarArg::Rational)]
    pub scalar: ScalarArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Formal expansion with its residual and structure reports.
    Expand,
    /// Newton solves over a refinement sequence.
    Solve,
    /// Coefficient fit of solver output or of the sampled expansion.
    Fit,
    /// Residual, structure and verticality checks; nonzero exit on any failure.
    Verify,
    /// Distances, flatness deficits and the envelope edge of a boundary curve.
    Envelope {
        #[arg(long, value_parser = ["circle", "line", "crease"])]
        geometry: Option<String>,
        /// CSV point cloud with normals.
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Sampling resolution of a cloud.
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Expand, solve with manufactured data, fit and compare.
    Pipeline,
    /// Print the JSON schema of the configuration.
    Schema,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Expand => "expand",
            Command::Solve => "solve",
            Command::Fit => "fit",
            Command::Verify => "verify",
            Command::Envelope { .. } => "envelope",
            Command::Pipeline => "pipeline",
            Command::Schema => "schema",
        }
    }
}

/// JSON schema of [`ExperimentConfig`].
pub fn config_schema() -> String {
    let schema = schemars::schema_for!(ExperimentConfig);
    let mut s = serde_json::to_string_pretty(&schema).expect("schema serializes");
    s.push('\n');
    s
}

fn dispatch<S: Exact>(ctx: &mut Context, cmd: &Command, cloud: Option<&[u8]>) -> Result<(), CliError> {
    match cmd {
        Command::Expand => commands::run_expand::<S>(ctx).map(drop),
        Command::Solve => {
            let expanded = match ctx.cfg.solve.as_ref().map(|s| &s.boundary) {
                Some(config::Boundary::Rotational { .. }) => None,
                _ => Some(commands::run_expand::<S>(ctx)?),
            };
            commands::run_solve(ctx, expanded.as_ref()).map(drop)
        }
        Command::Fit => {
            let fit = ctx.cfg.fit.clone().unwrap_or_default();
            let rotational = matches!(ctx.cfg.solve.as_ref().map(|s| &s.boundary), Some(config::Boundary::Rotational { .. }));
            let expanded = if rotational && ctx.cfg.expand.is_none() { None } else { Some(commands::run_expand::<S>(ctx)?) };
            let solved = match fit.source {
                config::FitSource::Solve { .. } => {
                    let e = if rotational { None } else { expanded.as_ref() };
                    Some(commands::run_solve(ctx, e)?)
                }
                config::FitSource::Series { .. } => None,
            };
            let tol = ctx.cfg.verify.clone().unwrap_or_default().verticality_tol;
            commands::run_fit(ctx, expanded.as_ref(), solved.as_ref(), tol).map(drop)
        }
        Command::Verify => commands::run_verify::<S>(ctx),
        Command::Pipeline => commands::run_pipeline::<S>(ctx),
        Command::Envelope { geometry, cloud: cloud_path, samples, alpha, resolution } => {
            let o = GeometryOverrides {
                geometry: geometry.clone(),
                cloud: cloud_path.clone(),
                samples: *samples,
                alpha: *alpha,
                resolution: *resolution,
            };
            commands::run_envelope(ctx, &o, cloud)
        }
        Command::Schema => unreachable!("handled before the run"),
    }
}

fn report(err: &CliError) {
    eprintln!("error: {err}");
}

/// Runs one invocation and returns its exit status.
pub fn run(cli: &Cli) -> u8 {
    if let Command::Schema = cli.command {
        print!("{}", config_schema());
        return 0;
    }
    let mut result = Ok(());
    let mut config_bytes = None;
    let cfg = match &cli.config {
        Some(path) => match std::fs::read(path) {
            Ok(bytes) => {
                let parsed = ExperimentConfig::from_slice(&bytes);
                config_bytes = Some(bytes);
                parsed
            }
            Err(e) => Err(CliError::config("--config", format!("cannot read {}: {e}", path.display()))),
        },
        None => Ok(ExperimentConfig { schema_version: SCHEMA_VERSION, ..Default::default() }),
    };
    let cfg = cfg.unwrap_or_else(|e| {
        result = Err(e);
        ExperimentConfig { schema_version: SCHEMA_VERSION, ..Default::default() }
    });
    let root = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let out = match OutDir::create(&root) {
        Ok(o) => o,
        Err(e) => {
            report(result.as_ref().err().unwrap_or(&e));
            return result.err().unwrap_or(e).exit_code();
        }
    };
    let scalar = match cli.scalar {
        ScalarArg::Rational => "rational",
        ScalarArg::Float => "float",
    };
    let threads = usize::from(cli.threads);
    let mut manifest = Manifest::new(cli.command.name(), scalar, threads);
    if let (Some(path), Some(bytes)) = (&cli.config, &config_bytes) {
        manifest.inputs.push(Input { name: path.display().to_string(), sha256: sha256_hex(bytes) });
    }

    let mut ctx = Context::new(cfg, out, threads);
    // A cloud file is an input like the config and is hashed with it.
    let cloud_path = match &cli.command {
        Command::Envelope { cloud: Some(p), .. } => Some(p.clone()),
        Command::Envelope { .. } => match ctx.cfg.envelope.as_ref().map(|e| &e.geometry) {
            Some(Geometry::Cloud { path, .. }) => Some(path.clone()),
            _ => None,
        },
        _ => None,
    };
    let mut cloud = None;
    if let (Ok(()), Some(p)) = (&result, &cloud_path) {
        match std::fs::read(p) {
            Ok(b) => {
                manifest.inputs.push(Input { name: p.display().to_string(), sha256: sha256_hex(&b) });
                cloud = Some(b);
            }
            Err(e) => result = Err(CliError::config("envelope.geometry.path", format!("cannot read {}: {e}", p.display()))),
        }
    }
    if result.is_ok() {
        result = match cli.scalar {
            ScalarArg::Rational => dispatch::<Rational>(&mut ctx, &cli.command, cloud.as_deref()),
            ScalarArg::Float => dispatch::<f64>(&mut ctx, &cli.command, cloud.as_deref()),
        };
    }
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            report(e);
            if let Err(w) = ctx.out.json("error.json", &e.doc()) {
                report(&w);
            }
            e.exit_code()
        }
    };
    manifest.exit_code = code;
    manifest.timings = ctx.timings.iter().map(|(stage, ms)| Timing { stage: stage.clone(), ms: *ms }).collect();
    manifest.artifacts = ctx.out.artifacts().to_vec();
    let path = ctx.out.root().join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    if let Err(e) = std::fs::write(&path, bytes) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return error::EXIT_FAILURE.max(code);
    }
    code
}
