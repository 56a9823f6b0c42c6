//! `susy2` — build second-order SUSY (Darboux) partner potentials, classify
//! the transformation, and verify the predicted spectrum numerically.
//!
//! One configuration = one run; every command reads a JSON configuration
//! and/or a built-in example id and writes CSV/JSON artifacts into the
//! output directory. Identical configurations produce byte-identical
//! artifacts.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use pipeline::{exit_code_for, run_classify, run_spectrum, run_transform, run_verify, Session};

#[derive(Parser)]
#[command(name = "susy2", version, about = "Second-order SUSY partner potentials: transform, classify, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in example id (1-9); overrides the configuration's example.
    #[arg(long, value_name = "N")]
    example: Option<u8>,
    /// Output directory (default: "out", or the configuration's value).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Working grid node count (odd).
    #[arg(long, value_name = "N")]
    grid_n: Option<usize>,
    /// Interior nodes of the eigensolver discretisation.
    #[arg(long, value_name = "N")]
    eig_n: Option<usize>,
    /// Number of lowest levels to verify.
    #[arg(long, value_name = "K")]
    levels: Option<usize>,
    /// Truncation half-width for unbounded domains.
    #[arg(long = "trunc-L", value_name = "L")]
    trunc_l: Option<f64>,
    /// Spectrum matching tolerance.
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the partner potential and Wronskian; write V1.csv, W.csv,
    /// result.json.
    Transform(CommonOpts),
    /// Classify the transformation; write verdict.json.
    Classify(CommonOpts),
    /// Compute and refine the partner spectrum; write spectrum.json and
    /// eigenvalues.csv.
    Spectrum(CommonOpts),
    /// Full pipeline with pass/fail checks; write report.json.
    Verify(CommonOpts),
    /// Verify a built-in example (shorthand for `verify --example N`).
    Example {
        /// Example id, 1-9.
        id: u8,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn load_config(opts: &CommonOpts) -> anyhow::Result<(RunConfig, PathBuf)> {
    let mut config = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => RunConfig::empty(),
    };
    if let Some(example) = opts.example {
        config.example = Some(example);
    }
    if let Some(n) = opts.grid_n {
        config.numeric.grid_n = n;
    }
    if let Some(n) = opts.eig_n {
        config.numeric.eig_n = n;
    }
    if let Some(k) = opts.levels {
        config.numeric.levels = k;
    }
    if let Some(l) = opts.trunc_l {
        config.numeric.trunc_l = Some(l);
    }
    if let Some(t) = opts.tol {
        config.numeric.tol = t;
    }
    let out = opts
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn dispatch(cmd: &Command) -> anyhow::Result<bool> {
    let (opts, force_example, verb): (&CommonOpts, Option<u8>, &str) = match cmd {
        Command::Transform(o) => (o, None, "transform"),
        Command::Classify(o) => (o, None, "classify"),
        Command::Spectrum(o) => (o, None, "spectrum"),
        Command::Verify(o) => (o, None, "verify"),
        Command::Example { id, opts } => (opts, Some(*id), "verify"),
    };
    let (mut config, out) = load_config(opts)?;
    if let Some(id) = force_example {
        config.example = Some(id);
    }
    if config.example.is_none() && config.problem.is_none() {
        return Err(anyhow!("either --config with a problem block or --example N is required"));
    }
    let session = Session::from_config(&config)?;
    match verb {
        "transform" => {
            let r = run_transform(&session, &out)?;
            println!("transform: regular = {}, artifacts in {}", r.regular, out.display());
            Ok(true)
        }
        "classify" => {
            let v = run_classify(&session, &out)?;
            println!(
                "classify: case {:?}, irreducible = {}, real_spectrum = {}",
                v.case_label, v.irreducible, v.real_spectrum
            );
            Ok(true)
        }
        "spectrum" => {
            let r = run_transform(&session, &out)?;
            let (s, _) = run_spectrum(&session, &r, &out)?;
            for (e, m) in s.refined.iter().zip(s.refined_residuals.iter()) {
                println!("level {:+.10e} {:+.10e}i  mismatch {:.3e}", e.re, e.im, m);
            }
            Ok(true)
        }
        "verify" => {
            let (pass, checks) = run_verify(&session, &out)?;
            for c in &checks {
                let detail = match (c.value, c.threshold) {
                    (Some(v), Some(t)) => format!(" ({v:.3e} vs {t:.1e})"),
                    _ => String::new(),
                };
                println!("[{}] {}{} - {}", c.status.to_uppercase(), c.name, detail, c.note);
            }
            println!("verify: {}", if pass { "PASS" } else { "FAIL" });
            Ok(pass)
        }
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = exit_code_for(&err);
            // Leave a machine-readable diagnostic next to the artifacts.
            let diag = serde_json::json!({
                "error": format!("{err:#}"),
                "exit_code": code,
            });
            let _ = std::fs::write("error.json", serde_json::to_string_pretty(&diag).unwrap());
            ExitCode::from(code as u8)
        }
    }
}
