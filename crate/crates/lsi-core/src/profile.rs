//! Solitary-wave profiles and the closed-form traveling solution.
//!
//! An admissible parameter set `(beta, c, omega)` with `Omega = omega - c²/4`
//! and `gamma = beta²/c` admits a ray of ground-state profiles
//!
//! ```text
//!     R1 = cos(theta) R,   R2 = sin(theta) R,
//!     R(x) = sqrt(2 Omega / gamma) sech(sqrt(Omega) x),
//! ```
//!
//! each solving the profile equation `-u'' + Omega u - gamma (R1²+R2²) u = 0`,
//! with the long-wave component slaved to the envelopes:
//! `W = -beta (R1² + R2²) / c`. The traveling solution translates the
//! profile at speed `c`, multiplies in the carrier `exp(i c (x - c t) / 2)`,
//! and rotates the overall phase at rate `omega`.

use crate::field::{check_same_grid, RealField};
use crate::grid::PeriodicGrid;
use crate::params::PhysParams;
use crate::state::LsiState;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Relative tail height above which a profile is considered to not fit on
/// the requested box.
const TAIL_TOL: f64 = 1.0e-8;

/// Ground-state profile triple `(R1, R2, W)` on a fixed grid, centered at
/// the grid center.
#[derive(Clone, Debug)]
pub struct SolitonProfile {
    params: PhysParams,
    theta: f64,
    r1: RealField,
    r2: RealField,
    w: RealField,
}

/// Metadata written next to a profile CSV so it can be re-imported.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub beta: f64,
    pub c: f64,
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
    pub gamma: f64,
    pub theta: f64,
    pub n: usize,
    pub length: f64,
}

impl SolitonProfile {
    /// Builds the ground state for `params` at ray angle `theta ∈ [0, π/2]`.
    ///
    /// Rejects grids whose half-length leaves the sech tail above 1e-8 of
    /// the peak; all spectral operations downstream assume the profile has
    /// decayed to round-off at the periodic seam.
    pub fn ground_state(params: PhysParams, theta: f64, grid: PeriodicGrid) -> Result<Self> {
        let big_omega = params.big_omega();
        let gamma = params.gamma();
        if big_omega <= 0.0 || gamma <= 0.0 {
            return Err(Error::InadmissibleParams(format!(
                "ground state needs Omega > 0 and gamma > 0 (Omega = {big_omega}, gamma = {gamma})"
            )));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} outside [0, pi/2]"
            )));
        }
        let root = big_omega.sqrt();
        let tail = 1.0 / (root * 0.5 * grid.length()).cosh();
        if tail > TAIL_TOL {
            return Err(Error::UnderResolved(format!(
                "profile tail {tail:.3e} exceeds {TAIL_TOL:.0e} at the domain edge; \
                 need length >= {:.1} for Omega = {big_omega}",
                PeriodicGrid::recommended_length(big_omega)
            )));
        }
        let amp = (2.0 * big_omega / gamma).sqrt();
        let center = grid.center();
        let r = RealField::from_fn(grid, |x| amp / ((root * (x - center)).cosh()));
        let r1 = r.scale(theta.cos());
        let r2 = r.scale(theta.sin());
        let sum_sq = r1.mul(&r1).add_scaled(1.0, &r2.mul(&r2));
        let w = sum_sq.scale(-params.beta() / params.c());
        Ok(Self { params, theta, r1, r2, w })
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn r1(&self) -> &RealField {
        &self.r1
    }

    pub fn r2(&self) -> &RealField {
        &self.r2
    }

    pub fn w(&self) -> &RealField {
        &self.w
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.r1.grid()
    }

    /// Pointwise `R1² + R2²`.
    pub fn envelope_sq(&self) -> RealField {
        self.r1.mul(&self.r1).add_scaled(1.0, &self.r2.mul(&self.r2))
    }

    /// Sup norms of the profile-equation residual
    /// `-R_i'' + Omega R_i - gamma (R1²+R2²) R_i` for each component.
    pub fn residual(&self) -> (f64, f64) {
        let big_omega = self.params.big_omega();
        let gamma = self.params.gamma();
        let sum_sq = self.envelope_sq();
        let res = |u: &RealField| -> f64 {
            u.deriv(2)
                .scale(-1.0)
                .add_scaled(big_omega, u)
                .add_scaled(-gamma, &sum_sq.mul(u))
                .max_abs()
        };
        (res(&self.r1), res(&self.r2))
    }

    /// Closed-form traveling solution at time `t >= 0`: profiles translated
    /// by `c t` (spectrally, so the periodic image wraps), carrier phase
    /// `c (x - c t) / 2`, global phase `omega t`.
    ///
    /// The carrier offset is wrapped to `[-L/2, L/2)` so that its phase
    /// follows the traveling envelope around the torus: `c/2` is in
    /// general incommensurate with the period, and wrapping puts the
    /// unavoidable carrier seam at the point opposite the envelope peak
    /// where the profiles have decayed, instead of letting it cut through
    /// the peak once `c t` reaches the domain edge.
    pub fn solitary_state(&self, t: f64) -> Result<LsiState> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("time t = {t} must be finite and >= 0")));
        }
        let p = &self.params;
        let (c, omega) = (p.c(), p.omega());
        let length = self.grid().length();
        let carrier = |x: f64| {
            let y = x - c * t;
            let y = y - length * (y / length + 0.5).floor();
            Complex64::from_polar(1.0, 0.5 * c * y + omega * t)
        };
        let phi = self.r1.translate(-c * t).to_complex().mul_fn(carrier);
        let psi = self.r2.translate(-c * t).to_complex().mul_fn(carrier);
        let w = self.w.translate(-c * t);
        LsiState::new(phi, psi, w, t)
    }

    /// Writes `x,R1,R2,W` rows with full double precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,R1,R2,W")?;
        let g = self.grid();
        for j in 0..g.n() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                g.point(j),
                self.r1.values()[j],
                self.r2.values()[j],
                self.w.values()[j]
            )?;
        }
        Ok(())
    }

    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            beta: self.params.beta(),
            c: self.params.c(),
            omega: self.params.omega(),
            big_omega: self.params.big_omega(),
            gamma: self.params.gamma(),
            theta: self.theta,
            n: self.grid().n(),
            length: self.grid().length(),
        }
    }

    /// Reconstructs a profile from a CSV written by [`Self::write_csv`] and
    /// its JSON sidecar. The grid center is recovered from the x column and
    /// the long-wave slaving relation is re-checked as an import sanity
    /// test.
    pub fn import<R: BufRead>(csv: R, sidecar: &ProfileSidecar) -> Result<Self> {
        let params = PhysParams::new(sidecar.beta, sidecar.c, sidecar.omega)?;
        if (params.big_omega() - sidecar.big_omega).abs() > 1e-12 * (1.0 + sidecar.big_omega.abs())
            || (params.gamma() - sidecar.gamma).abs() > 1e-12 * (1.0 + sidecar.gamma.abs())
        {
            return Err(Error::Import(
                "sidecar Omega/gamma disagree with (beta, c, omega)".into(),
            ));
        }
        let mut lines = csv.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Import("empty profile CSV".into()))??;
        if header.trim() != "x,R1,R2,W" {
            return Err(Error::Import(format!("expected header 'x,R1,R2,W', got '{header}'")));
        }
        let mut xs = Vec::new();
        let mut cols = [Vec::new(), Vec::new(), Vec::new()];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Import("profile rows need 4 columns".into()));
            }
            let mut vals = [0.0; 4];
            for (slot, p) in vals.iter_mut().zip(&parts) {
                *slot = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::Import(format!("bad number '{p}'")))?;
            }
            xs.push(vals[0]);
            for (c, v) in cols.iter_mut().zip(&vals[1..]) {
                c.push(*v);
            }
        }
        if xs.len() != sidecar.n {
            return Err(Error::Import(format!(
                "sidecar n = {} but CSV has {} rows",
                sidecar.n,
                xs.len()
            )));
        }
        let center = xs[0] + 0.5 * sidecar.length;
        let grid = PeriodicGrid::new(sidecar.n, sidecar.length, center)?;
        let [r1v, r2v, wv] = cols;
        let r1 = RealField::from_values(grid, r1v)?;
        let r2 = RealField::from_values(grid, r2v)?;
        let w = RealField::from_values(grid, wv)?;
        let profile = Self { params, theta: sidecar.theta, r1, r2, w };
        let slaved = profile.envelope_sq().scale(-params.beta() / params.c());
        let err = slaved.add_scaled(-1.0, &profile.w).max_abs();
        if err > 1e-10 * (1.0 + profile.w.max_abs()) {
            return Err(Error::Import(format!(
                "W is not slaved to the envelopes (mismatch {err:.3e})"
            )));
        }
        Ok(profile)
    }
}

pub(crate) fn check_profile_state(profile: &SolitonProfile, state: &LsiState) -> Result<()> {
    check_same_grid(profile.grid(), state.grid(), "profile vs state")
}
