//! `lsi`: solitary-wave experiments for the long wave / short wave system.
//!
//! Exit codes: 0 all checks within tolerance, 1 a tolerance check failed,
//! 2 usage or configuration error.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lsi_cli::config::ExperimentConfig;
use lsi_cli::experiments::{
    self, run_check, run_stability, run_sweep, write_json, write_run_outputs, write_sweep_csv,
};
use lsi_cli::perturb;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lsi", version, about = "Solitary-wave runs, stability sweeps, and identity checks")]
struct Cli {
    /// Experiment config file (flat key = value); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides perturbation.seed from the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the solitary profile (CSV) and its parameters (JSON).
    Soliton,
    /// Evolve the configured initial state and emit trajectory CSVs and snapshots.
    Evolve,
    /// Single stability run at perturbation.delta.
    Stability,
    /// One stability run per delta in sweep.deltas, plus a summary.
    Sweep,
    /// Closed-form identity report (JSON to stdout).
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Configuration problems exit 2; completed runs that violate a tolerance
    // exit 1.
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()
        {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli.cmd, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    // Surface inadmissible parameters before any compute or output.
    cfg.profile()?;
    Ok(cfg)
}

fn dispatch(cmd: &Cmd, cfg: &ExperimentConfig) -> Result<bool> {
    match cmd {
        Cmd::Soliton => cmd_soliton(cfg),
        Cmd::Evolve => cmd_run(cfg, false),
        Cmd::Stability => cmd_run(cfg, true),
        Cmd::Sweep => cmd_sweep(cfg),
        Cmd::Check => cmd_check(cfg),
    }
}

fn cmd_soliton(cfg: &ExperimentConfig) -> Result<bool> {
    let profile = cfg.profile()?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = std::fs::File::create(dir.join("profile.csv"))?;
    profile.write_csv(BufWriter::new(csv)).map_err(anyhow::Error::from)?;
    write_json(&dir.join("profile.json"), &profile.sidecar())?;
    let (res1, res2) = profile.residual();
    println!(
        "profile: n = {}, length = {}, ode residuals {:.3e} / {:.3e}",
        cfg.n, cfg.length, res1, res2
    );
    println!("wrote {}", dir.join("profile.csv").display());
    Ok(res1 < experiments::CHECK_TOL && res2 < experiments::CHECK_TOL)
}

fn cmd_run(cfg: &ExperimentConfig, print_report: bool) -> Result<bool> {
    let output = run_stability(cfg, cfg.delta)?;
    write_run_outputs(&cfg.out_dir, &output)?;
    let report = &output.report;
    if print_report {
        println!("{}", serde_json::to_string_pretty(report)?);
    } else {
        println!(
            "evolved to t = {:.3}: sup rho {:.3e}, drifts {:.3e}",
            output.orbit_rows.last().map(|r| r.t).unwrap_or(0.0),
            report.sup_rho,
            report.invariant_drifts.iter().fold(0.0_f64, |a, b| a.max(*b)),
        );
    }
    if let Some(t) = report.failed_at {
        eprintln!("run blew up at t = {t:.6}; partial report written");
    }
    println!("wrote {}", cfg.out_dir.join("report.json").display());
    Ok(report.within_tolerance())
}

fn cmd_sweep(cfg: &ExperimentConfig) -> Result<bool> {
    let summary = run_sweep(cfg, &cfg.deltas, Some(&cfg.out_dir))?;
    write_sweep_csv(&cfg.out_dir.join("sweep.csv"), &summary)?;
    write_json(&cfg.out_dir.join("sweep.json"), &summary)?;
    println!("{:>12} {:>13} {:>13} {:>13} {:>13}", "delta", "sup_rho", "final_rho", "sup_w_dist", "delta_L0");
    for row in &summary.rows {
        match (&row.report, &row.error) {
            (Some(rep), _) => println!(
                "{:>12.3e} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e}",
                row.delta, rep.sup_rho, rep.final_rho, rep.sup_w_dist, rep.delta_l0
            ),
            (None, Some(err)) => println!("{:>12.3e} failed: {err}", row.delta),
            (None, None) => unreachable!("sweep row without report or error"),
        }
    }
    if let Some(a) = summary.quadratic_coefficient {
        println!("lyapunov increment fit: delta_L0 ~ {a:.6e} * delta^2");
    }
    println!("wrote {}", cfg.out_dir.join("sweep.csv").display());
    // Positivity of the Lyapunov increment is only meaningful when the
    // perturbation leaves the component masses on their reference values.
    let mass_preserving =
        cfg.preserve_mass || cfg.kind == perturb::PerturbKind::WOnly;
    Ok(summary.within_tolerance(mass_preserving))
}

fn cmd_check(cfg: &ExperimentConfig) -> Result<bool> {
    let report = run_check(cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    write_json(&cfg.out_dir.join("check.json"), &report)?;
    Ok(report.verdict == "pass")
}
