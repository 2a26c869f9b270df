use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Parser, Subcommand};
use log::{error, info};

use stealthsim_core::io::{
    config_to_json, emit_plot, emit_roc_csv, emit_trials_csv, parse_config, read_roc_csv, series_of, write_manifest,
    RunManifest,
};
use stealthsim_core::scenario::{run_campaign_with_progress, ModeSelection, ScenarioConfig};
use stealthsim_core::selftest::run_selftest;
use stealthsim_core::{Result, VERSION};

#[derive(Parser)]
#[command(name = "stealthsim", version, about = "SSB eavesdropper-detection Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and write roc.csv, trials.csv, roc.svg and manifest.json.
    Run {
        /// JSON config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// baseline, csi or both.
        #[arg(long)]
        mode: Option<ModeSelection>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a ROC CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the fast property checks.
    Selftest,
}

fn run(config: Option<PathBuf>, seed: Option<u64>, trials: Option<usize>, mode: Option<ModeSelection>, out: PathBuf) -> Result<()> {
    let mut cfg = match &config {
        Some(p) => parse_config(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = trials {
        cfg.n_trials = n;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&out).map_err(|e| stealthsim_core::Error::Io { path: out.clone(), source: e })?;

    let started_at = chrono::Utc::now().to_rfc3339();
    let modes = cfg.mode.modes();
    info!(
        "running {} trials ({}), M = {}, seed {}",
        cfg.n_trials,
        modes.iter().map(|m| m.as_str()).collect::<Vec<_>>().join("+"),
        cfg.gnb_array.ports(),
        cfg.seed
    );
    let done = AtomicUsize::new(0);
    let total = cfg.n_trials;
    let result = run_campaign_with_progress(&cfg, &modes, None, |_| {
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if n.is_multiple_of(10) || n == total {
            info!("{n}/{total} trials");
        }
    })?;

    let series = series_of(&result);
    let outputs = [out.join("roc.csv"), out.join("trials.csv"), out.join("roc.svg"), out.join("config.json")];
    emit_roc_csv(&series, &outputs[0])?;
    emit_trials_csv(&result, &outputs[1])?;
    emit_plot(&series, &outputs[2])?;
    std::fs::write(&outputs[3], config_to_json(&cfg) + "\n")
        .map_err(|e| stealthsim_core::Error::Io { path: outputs[3].clone(), source: e })?;
    for s in &series {
        let curve = result.curve(s.mode, s.detector, s.observer).expect("series comes from the result");
        info!("{}: pd@pfa=0.1 {:.3}, auc {:.3}", s.label(), curve.pd_at_pfa(0.1), curve.auc());
    }
    let manifest = RunManifest {
        seed: cfg.seed,
        config: cfg,
        modes,
        engine_version: VERSION.to_string(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        outputs: outputs.to_vec(),
    };
    write_manifest(&manifest, out.join("manifest.json"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, trials, mode, out } => run(config, seed, trials, mode, out),
        Command::Plot { input, out } => read_roc_csv(&input).and_then(|s| emit_plot(&s, &out)),
        Command::Selftest => {
            let checks = run_selftest();
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
