//! Flat `key = value` experiment configuration with dotted section names.
//!
//! Parsing is strict: unknown or repeated keys are errors, so an archived
//! config replays exactly or not at all.

use anyhow::{anyhow, bail, Context, Result};
use lsi_core::{PeriodicGrid, PhysParams, SolitonProfile};
use std::path::{Path, PathBuf};

use crate::perturb::PerturbKind;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub beta: f64,
    pub c: f64,
    pub omega: f64,
    pub theta: f64,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub dealias: bool,
    pub kind: PerturbKind,
    pub delta: f64,
    pub seed: u64,
    pub preserve_mass: bool,
    pub preserve_ray: bool,
    pub deltas: Vec<f64>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            beta: 2.0_f64.sqrt(),
            c: 2.0,
            omega: 2.0,
            theta: std::f64::consts::FRAC_PI_4,
            n: 1024,
            length: 80.0,
            dt: 1e-3,
            t_end: 10.0,
            record_every: 100,
            dealias: true,
            kind: PerturbKind::LocalizedBump,
            delta: 1e-3,
            seed: 42,
            preserve_mass: true,
            preserve_ray: false,
            deltas: vec![1e-3, 3e-3, 1e-2],
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                bail!("line {}: key {key} given twice", lineno + 1);
            }
            seen.push(key.to_string());
            cfg.set(key, value)
                .with_context(|| format!("line {}: key {key}", lineno + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(v: &str) -> Result<f64> {
            v.parse::<f64>().map_err(|_| anyhow!("{v:?} is not a number"))
        }
        fn int(v: &str) -> Result<usize> {
            v.parse::<usize>().map_err(|_| anyhow!("{v:?} is not a non-negative integer"))
        }
        fn flag(v: &str) -> Result<bool> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(anyhow!("{v:?} is not true/false")),
            }
        }
        match key {
            "params.beta" => self.beta = num(value)?,
            "params.c" => self.c = num(value)?,
            "params.omega" => self.omega = num(value)?,
            "params.theta" => self.theta = num(value)?,
            "grid.n" => self.n = int(value)?,
            "grid.length" => self.length = num(value)?,
            "run.dt" => self.dt = num(value)?,
            "run.t_end" => self.t_end = num(value)?,
            "run.record_every" => self.record_every = int(value)?,
            "run.dealias" => self.dealias = flag(value)?,
            "perturbation.kind" => self.kind = value.parse()?,
            "perturbation.delta" => self.delta = num(value)?,
            "perturbation.seed" => {
                self.seed = value.parse().map_err(|_| anyhow!("{value:?} is not a seed"))?
            }
            "perturbation.preserve_mass" => self.preserve_mass = flag(value)?,
            "perturbation.preserve_ray" => self.preserve_ray = flag(value)?,
            "sweep.deltas" => {
                let parsed: Result<Vec<f64>> =
                    value.split(',').map(|s| num(s.trim())).collect();
                self.deltas = parsed?;
            }
            "output.dir" => self.out_dir = PathBuf::from(value),
            _ => bail!("unknown key"),
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysParams> {
        PhysParams::new(self.beta, self.c, self.omega)
            .map_err(|e| anyhow!("invalid physical parameters: {e}"))
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.n, self.length, 0.0).map_err(|e| anyhow!("invalid grid: {e}"))
    }

    /// Builds and validates the reference profile for this configuration.
    pub fn profile(&self) -> Result<SolitonProfile> {
        let profile = SolitonProfile::ground_state(self.params()?, self.theta, self.grid()?)
            .map_err(|e| anyhow!("cannot build reference profile: {e}"))?;
        if self.dt <= 0.0 || !self.dt.is_finite() {
            bail!("run.dt must be positive");
        }
        if !self.t_end.is_finite() {
            bail!("run.t_end must be finite");
        }
        if self.record_every == 0 {
            bail!("run.record_every must be at least 1");
        }
        if self.delta < 0.0 || !self.delta.is_finite() {
            bail!("perturbation.delta must be nonnegative");
        }
        if self.deltas.iter().any(|d| *d <= 0.0 || !d.is_finite()) {
            bail!("sweep.deltas must be positive");
        }
        if self.deltas.windows(2).any(|w| w[0] >= w[1]) {
            bail!("sweep.deltas must be strictly ascending");
        }
        Ok(profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_the_canonical_profile() {
        let cfg = ExperimentConfig::default();
        let prof = cfg.profile().unwrap();
        assert_eq!(prof.grid().n(), 1024);
        assert!((prof.params().big_omega() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parses_dotted_keys_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# stability run\nparams.c = 3.0\ngrid.n = 512  # coarse\nperturbation.kind = w_only\nsweep.deltas = 1e-4, 1e-3\n",
        )
        .unwrap();
        assert_eq!(cfg.c, 3.0);
        assert_eq!(cfg.n, 512);
        assert_eq!(cfg.kind, PerturbKind::WOnly);
        assert_eq!(cfg.deltas, vec![1e-4, 1e-3]);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        assert!(ExperimentConfig::parse("params.gamma = 1.0\n").is_err());
        assert!(ExperimentConfig::parse("params.c = 2.0\nparams.c = 3.0\n").is_err());
        assert!(ExperimentConfig::parse("just some words\n").is_err());
    }

    #[test]
    fn inadmissible_parameters_fail_at_build_time() {
        let mut cfg = ExperimentConfig::default();
        cfg.omega = 0.5; // 4 omega - c^2 < 0
        assert!(cfg.profile().is_err());
    }
}
