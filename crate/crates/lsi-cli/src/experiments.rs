//! Experiment drivers: single stability runs, delta sweeps, and the
//! identity check report.
//!
//! Every driver is deterministic given (config, seed) and writes both
//! machine output (CSV/JSON) and a short human-readable summary.

use crate::config::ExperimentConfig;
use crate::perturb::{perturb, Perturbation};
use anyhow::{Context, Result};
use lsi_core::dynamics::{evolve, EvolveConfig};
use lsi_core::functionals::{
    invariants, j_functional, lyapunov, pohozaev_residuals, InvariantRecord,
};
use lsi_core::operators::{constrained_rayleigh_l0, constrained_rayleigh_p, kernel_identities};
use lsi_core::orbital::orbital_distance;
use lsi_core::{Error, LsiState, RealField, SolitonProfile};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

/// Relative drift allowed in each conserved quantity over a full run.
pub const DRIFT_TOL: f64 = 1e-8;

/// One record of the orbit fit along a trajectory.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrbitRow {
    pub t: f64,
    pub rho: f64,
    pub i_omega: f64,
    pub x0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub w_dist_shared: f64,
    pub w_dist_min: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub kind: String,
    pub delta: f64,
    pub seed: u64,
    pub initial_distance: f64,
    pub sup_rho: f64,
    pub final_rho: f64,
    pub sup_w_dist: f64,
    /// Relative drifts of the two masses, the momentum, and the energy.
    pub invariant_drifts: [f64; 4],
    pub lyapunov_drift: f64,
    pub delta_l0: f64,
    pub runtime_s: f64,
    /// Set when the run blew up; the report then covers [0, failed_at).
    pub failed_at: Option<f64>,
}

impl StabilityReport {
    /// All run-level health checks: finished, conserved quantities held.
    pub fn within_tolerance(&self) -> bool {
        self.failed_at.is_none()
            && self.invariant_drifts.iter().all(|d| *d < DRIFT_TOL)
            && self.lyapunov_drift < DRIFT_TOL
    }
}

/// Full output of one run: the report plus the per-record time series.
pub struct RunOutput {
    pub report: StabilityReport,
    pub orbit_rows: Vec<OrbitRow>,
    pub invariant_rows: Vec<InvariantRecord>,
    /// Absent when the run blew up before reaching t_end.
    pub final_state: Option<LsiState>,
    pub initial_state: LsiState,
}

/// Perturbs the solitary wave per the config (with `delta` overriding the
/// config value), evolves to t_end, and fits the orbit at every record
/// point. A blow-up mid-run yields a partial report with the failure time
/// rather than an error.
pub fn run_stability(cfg: &ExperimentConfig, delta: f64) -> Result<RunOutput> {
    let start = Instant::now();
    let profile = cfg.profile()?;
    let params = *profile.params();
    let recipe = Perturbation {
        kind: cfg.kind,
        delta,
        seed: cfg.seed,
        preserve_mass: cfg.preserve_mass,
        preserve_ray: cfg.preserve_ray,
    };
    let (state0, initial_distance) = perturb(&profile, &recipe)?;
    let delta_l0 = lyapunov(&state0, &params) - lyapunov(&profile.solitary_state(0.0)?, &params);

    let run_cfg = EvolveConfig::new(cfg.dt, cfg.t_end)
        .map_err(anyhow::Error::from)?
        .with_record_every(cfg.record_every)
        .map_err(anyhow::Error::from)?
        .with_dealias(cfg.dealias);

    let mut orbit_rows: Vec<OrbitRow> = Vec::new();
    let mut invariant_rows: Vec<InvariantRecord> = Vec::new();
    let mut fit_error: Option<Error> = None;
    // The observer feeds side tables so that a blow-up still leaves every
    // record collected before the failure available for the partial report.
    let outcome = evolve(&state0, &params, &run_cfg, |s| {
        invariant_rows.push(invariants(s, &params));
        match orbital_distance(s, &profile) {
            Ok(fit) => orbit_rows.push(OrbitRow {
                t: s.t(),
                rho: fit.rho,
                i_omega: fit.i_omega,
                x0: fit.x0,
                theta1: fit.theta1,
                theta2: fit.theta2,
                w_dist_shared: fit.w_dist_shared,
                w_dist_min: fit.w_dist_min,
            }),
            Err(e) => {
                if fit_error.is_none() {
                    fit_error = Some(e);
                }
            }
        }
    });
    let (final_state, failed_at) = match outcome {
        Ok((state, _)) => (Some(state), None),
        Err(Error::BlowUp { time, .. }) => (None, Some(time)),
        Err(e) => return Err(e.into()),
    };
    if let Some(e) = fit_error {
        return Err(anyhow::Error::from(e).context("orbit fit failed mid-run"));
    }

    let sup_rho = orbit_rows.iter().map(|r| r.rho).fold(0.0, f64::max);
    let final_rho = orbit_rows.last().map(|r| r.rho).unwrap_or(0.0);
    let sup_w_dist = orbit_rows.iter().map(|r| r.w_dist_shared).fold(0.0, f64::max);
    let drift = |f: fn(&InvariantRecord) -> f64| -> f64 {
        let first = invariant_rows.first().map(f).unwrap_or(0.0);
        let scale = first.abs().max(1.0);
        invariant_rows.iter().map(|r| (f(r) - first).abs() / scale).fold(0.0, f64::max)
    };
    let report = StabilityReport {
        kind: cfg.kind.name().to_string(),
        delta,
        seed: cfg.seed,
        initial_distance,
        sup_rho,
        final_rho,
        sup_w_dist,
        invariant_drifts: [
            drift(|r| r.i1),
            drift(|r| r.i2),
            drift(|r| r.i3),
            drift(|r| r.i4),
        ],
        lyapunov_drift: drift(|r| r.lyapunov),
        delta_l0,
        runtime_s: start.elapsed().as_secs_f64(),
        failed_at,
    };
    Ok(RunOutput { report, orbit_rows, invariant_rows, final_state, initial_state: state0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub report: Option<StabilityReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub sup_rho_monotone: bool,
    /// Lyapunov increments positive for every run that actually moved off
    /// the orbit (a perturbation mapped back onto the orbit has increment 0).
    pub positivity_ok: bool,
    /// Least-squares coefficient a in delta_L0 ~ a * delta^2.
    pub quadratic_coefficient: Option<f64>,
}

impl SweepSummary {
    pub fn within_tolerance(&self, require_positivity: bool) -> bool {
        let runs_ok = self
            .rows
            .iter()
            .all(|r| r.report.as_ref().map(|rep| rep.within_tolerance()).unwrap_or(false));
        runs_ok && self.sup_rho_monotone && (!require_positivity || self.positivity_ok)
    }
}

/// Runs one stability run per delta (in parallel) and aggregates. Per-run
/// failures are captured in the corresponding row; the sweep always
/// completes. `out_dir`, when given, receives one subdirectory per run.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    deltas: &[f64],
    out_dir: Option<&Path>,
) -> Result<SweepSummary> {
    let rows: Vec<SweepRow> = deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| match run_stability(cfg, delta) {
            Ok(output) => {
                let mut row = SweepRow { delta, report: Some(output.report.clone()), error: None };
                if let Some(dir) = out_dir {
                    let run_dir = dir.join(format!("run{i}"));
                    if let Err(e) = write_run_outputs(&run_dir, &output) {
                        row.error = Some(format!("output write failed: {e:#}"));
                    }
                }
                row
            }
            Err(e) => SweepRow { delta, report: None, error: Some(format!("{e:#}")) },
        })
        .collect();

    let sups: Vec<f64> = rows.iter().filter_map(|r| r.report.as_ref().map(|p| p.sup_rho)).collect();
    let sup_rho_monotone = rows.is_empty()
        || (sups.len() == rows.len() && sups.windows(2).all(|w| w[0] < w[1]));
    let positivity_ok = rows.iter().all(|r| match &r.report {
        Some(rep) => rep.delta_l0 > 0.0 || rep.initial_distance < 1e-13,
        None => false,
    });
    let fitted: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.report.as_ref().map(|rep| (r.delta, rep.delta_l0)))
        .collect();
    let quadratic_coefficient = if fitted.is_empty() {
        None
    } else {
        let num: f64 = fitted.iter().map(|(d, l)| d * d * l).sum();
        let den: f64 = fitted.iter().map(|(d, _)| d.powi(4)).sum();
        (den > 0.0).then(|| num / den)
    };
    Ok(SweepSummary { rows, sup_rho_monotone, positivity_ok, quadratic_coefficient })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub beta: f64,
    pub c: f64,
    pub omega: f64,
    pub theta: f64,
    pub n: usize,
    pub length: f64,
    pub ode_residuals: [f64; 2],
    pub pohozaev_residuals: [f64; 2],
    pub kernel_identities: [f64; 3],
    pub mu_constrained: f64,
    pub rayleigh_p_min: f64,
    pub rayleigh_p_alignment: f64,
    pub j_value: f64,
    pub j_gradient_norm: f64,
    pub verdict: String,
}

/// Residual threshold for the identity checks.
pub const CHECK_TOL: f64 = 1e-8;
/// Looser threshold for finite-difference gradient probes.
pub const GRADIENT_TOL: f64 = 1e-6;

/// Evaluates every closed-form identity of the solitary family on the
/// configured grid and aggregates a verdict.
pub fn run_check(cfg: &ExperimentConfig) -> Result<CheckReport> {
    let profile = cfg.profile()?;
    let ode = profile.residual();
    let pohozaev = pohozaev_residuals(&profile);
    let kernel = kernel_identities(&profile);

    let env = profile.envelope_sq();
    let mu1 = constrained_rayleigh_l0(&profile, &[env.mul(profile.r1())])
        .map_err(anyhow::Error::from)?
        .0;
    let mu2 = constrained_rayleigh_l0(&profile, &[env.mul(profile.r2())])
        .map_err(anyhow::Error::from)?
        .0;
    let mu_constrained = mu1.min(mu2);

    let grid = *profile.grid();
    let zero = RealField::zeros(grid);
    let pairs =
        vec![(profile.r1().clone(), zero.clone()), (zero.clone(), profile.r2().clone())];
    let (p_min, (v1, v2)) = constrained_rayleigh_p(&profile, &pairs).map_err(anyhow::Error::from)?;
    let rayleigh_p_alignment = derivative_alignment(&profile, &v1, &v2)?;

    let j_value = j_functional(profile.r1(), profile.r2()).map_err(anyhow::Error::from)?;
    let j_gradient_norm = tangential_j_gradient(&profile)?;

    let residuals_ok = ode.0 < CHECK_TOL
        && ode.1 < CHECK_TOL
        && pohozaev.0 < CHECK_TOL
        && pohozaev.1 < CHECK_TOL
        && kernel.0 < CHECK_TOL
        && kernel.1 < CHECK_TOL
        && kernel.2 < CHECK_TOL
        && p_min.abs() < CHECK_TOL;
    let spectral_ok = mu_constrained > 0.0 && rayleigh_p_alignment > 0.999;
    let gradient_ok = j_gradient_norm < GRADIENT_TOL;
    let verdict = if residuals_ok && spectral_ok && gradient_ok { "pass" } else { "fail" };

    Ok(CheckReport {
        beta: cfg.beta,
        c: cfg.c,
        omega: cfg.omega,
        theta: cfg.theta,
        n: cfg.n,
        length: cfg.length,
        ode_residuals: [ode.0, ode.1],
        pohozaev_residuals: [pohozaev.0, pohozaev.1],
        kernel_identities: [kernel.0, kernel.1, kernel.2],
        mu_constrained,
        rayleigh_p_min: p_min,
        rayleigh_p_alignment,
        j_value,
        j_gradient_norm,
        verdict: verdict.to_string(),
    })
}

/// |cos angle| between the minimizing pair and the profile derivative pair.
fn derivative_alignment(
    profile: &SolitonProfile,
    v1: &RealField,
    v2: &RealField,
) -> Result<f64> {
    let d1 = profile.r1().deriv(1);
    let d2 = profile.r2().deriv(1);
    let dot = v1.inner(&d1).map_err(anyhow::Error::from)? + v2.inner(&d2).map_err(anyhow::Error::from)?;
    let nv = (v1.l2_norm_sq() + v2.l2_norm_sq()).sqrt();
    let nd = (d1.l2_norm_sq() + d2.l2_norm_sq()).sqrt();
    if nv == 0.0 || nd == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nv * nd)).abs())
}

/// Largest finite-difference derivative of J over a fixed family of
/// mass-neutral directions; vanishes at the profile because the profile
/// minimizes J at fixed mass.
fn tangential_j_gradient(profile: &SolitonProfile) -> Result<f64> {
    let grid = *profile.grid();
    let (r1, r2) = (profile.r1(), profile.r2());
    let mass = r1.l2_norm_sq() + r2.l2_norm_sq();
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    for (offset, width, on_first) in [(0.8, 1.0, true), (-1.3, 0.7, false), (2.1, 1.4, true)] {
        let bump = RealField::from_fn(grid, |x| 1.0 / (width * (x - grid.center() - offset)).cosh());
        let zero = RealField::zeros(grid);
        let (raw1, raw2) = if on_first { (bump, zero) } else { (zero, bump) };
        // Remove the radial component so the direction is mass-neutral.
        let overlap = (raw1.inner(r1).map_err(anyhow::Error::from)?
            + raw2.inner(r2).map_err(anyhow::Error::from)?)
            / mass;
        let d1 = raw1.add_scaled(-overlap, r1);
        let d2 = raw2.add_scaled(-overlap, r2);
        let scale = (d1.l2_norm_sq() + d2.l2_norm_sq()).sqrt();
        let probe = |s: f64| -> Result<f64> {
            j_functional(&r1.add_scaled(s / scale, &d1), &r2.add_scaled(s / scale, &d2))
                .map_err(anyhow::Error::from)
        };
        let fd = (probe(eps)? - probe(-eps)?) / (2.0 * eps);
        worst = worst.max(fd.abs());
    }
    Ok(worst)
}

pub fn write_orbit_csv(path: &Path, rows: &[OrbitRow]) -> Result<()> {
    let mut out = BufWriter::new(create(path)?);
    writeln!(out, "t,rho,i_omega,x0,theta1,theta2,w_dist_shared,w_dist_min")?;
    for r in rows {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.rho, r.i_omega, r.x0, r.theta1, r.theta2, r.w_dist_shared, r.w_dist_min
        )?;
    }
    Ok(())
}

pub fn write_invariants_csv(path: &Path, rows: &[InvariantRecord]) -> Result<()> {
    let mut out = BufWriter::new(create(path)?);
    writeln!(out, "t,i1,i2,i3,i4,lyapunov")?;
    for r in rows {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.i1, r.i2, r.i3, r.i4, r.lyapunov
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(path: &Path, summary: &SweepSummary) -> Result<()> {
    let mut out = BufWriter::new(create(path)?);
    writeln!(out, "delta,sup_rho,final_rho,sup_w_dist,delta_L0")?;
    for row in &summary.rows {
        if let Some(rep) = &row.report {
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                row.delta, rep.sup_rho, rep.final_rho, rep.sup_w_dist, rep.delta_l0
            )?;
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let out = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(out, value).context("serializing report")?;
    Ok(())
}

/// Writes the standard trio (report.json, orbit.csv, invariants.csv) plus
/// initial/final field snapshots for one run.
pub fn write_run_outputs(dir: &Path, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("report.json"), &output.report)?;
    write_orbit_csv(&dir.join("orbit.csv"), &output.orbit_rows)?;
    write_invariants_csv(&dir.join("invariants.csv"), &output.invariant_rows)?;
    let mut snapshots = vec![("initial", &output.initial_state)];
    if let Some(state) = &output.final_state {
        snapshots.push(("final", state));
    }
    for (name, state) in snapshots {
        state
            .phi()
            .write_csv(BufWriter::new(create(&dir.join(format!("phi_{name}.csv")))?))
            .map_err(anyhow::Error::from)?;
        state
            .psi()
            .write_csv(BufWriter::new(create(&dir.join(format!("psi_{name}.csv")))?))
            .map_err(anyhow::Error::from)?;
        state
            .w()
            .write_csv(BufWriter::new(create(&dir.join(format!("w_{name}.csv")))?))
            .map_err(anyhow::Error::from)?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}
