//! `chaoslab <kind> --config <file> [--set k=v ...] --out <dir>`
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod cache;
mod config;
mod error;
mod experiments;
mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use cache::SpectrumCache;
use config::{RawConfig, Resolved, KINDS};
use error::CliError;
use experiments::Run;
use output::{sha256_hex, Artifact, Bundle};

#[derive(Parser, Debug)]
#[command(name = "chaoslab", version, about = "Quantum and classical chaos experiments for the Dicke and Tavis-Cummings models")]
struct Args {
    /// Experiment kind (spectrum, peres, tc-gaps, poincare, lyapunov-map, dos,
    /// adscan, vmap) or figure tag (fig1, fig2, fig4, fig5, fig7, fig10, fig13).
    kind: String,
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set n_max=120`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Part of the manifest that is hashed; fixed by the inputs alone.
#[derive(Serialize)]
struct Identity<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'a str,
    runs: Vec<(&'a str, &'a Resolved)>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    prefix: &'a str,
    config: &'a Resolved,
    summary: Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    kind: &'a str,
    manifest_hash: &'a str,
    runs: Vec<RunRecord<'a>>,
    artifacts: &'a [Artifact],
    wall_clock_seconds: f64,
}

fn plan(args: &Args) -> Result<Vec<(String, Resolved)>, CliError> {
    let mut user = match &args.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    for s in &args.set {
        user.set(s)?;
    }
    if KINDS.contains(&args.kind.as_str()) {
        return Ok(vec![(String::new(), user.resolve(&args.kind)?)]);
    }
    let Some(figure) = figures::find(&args.kind) else {
        return Err(CliError::config(
            "kind",
            format!("unknown kind or figure tag `{}`; kinds: {}; figure tags: {}", args.kind, KINDS.join(", "), figures::listing()),
        ));
    };
    figure
        .parts
        .iter()
        .map(|part| {
            let canned = RawConfig::from_toml(part.toml)?;
            Ok((part.prefix.to_string(), canned.merged(&user).resolve(part.kind)?))
        })
        .collect()
}

fn execute(args: &Args) -> Result<(), CliError> {
    let start = Instant::now();
    let runs = plan(args)?;
    let identity = Identity {
        tool: "chaoslab",
        version: env!("CARGO_PKG_VERSION"),
        kind: &args.kind,
        runs: runs.iter().map(|(p, c)| (p.as_str(), c)).collect(),
    };
    let hash = sha256_hex(serde_json::to_string(&identity).expect("config serializes").as_bytes());
    let mut bundle = Bundle::new(&args.out, hash.clone())?;
    let mut records = Vec::new();
    for (prefix, cfg) in &runs {
        let cache_dir = if cfg.cache { Some(cfg.cache_dir.clone().unwrap_or_else(|| args.out.join("cache"))) } else { None };
        let cache = SpectrumCache::new(cache_dir);
        log::info!("running {} {}", cfg.kind, prefix);
        let summary = experiments::run(&mut Run { cfg, cache: &cache, bundle: &mut bundle, prefix })?;
        records.push(RunRecord { prefix, config: cfg, summary });
    }
    let artifacts = std::mem::take(&mut bundle.artifacts);
    let manifest = Manifest {
        tool: "chaoslab",
        version: env!("CARGO_PKG_VERSION"),
        core_version: chaoslab_core::VERSION,
        kind: &args.kind,
        manifest_hash: &hash,
        runs: records,
        artifacts: &artifacts,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    bundle.json("manifest.json", &manifest)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chaoslab: {e}");
            e.exit_code()
        }
    }
}
