//! Initial-data perturbations for stability runs.
//!
//! Every kind starts from the exact solitary state at t = 0 and disturbs it
//! in a controlled, seeded way, so a report is reproducible from its config
//! alone. Optional post-passes restore the component masses or the ratio of
//! the envelope projections onto the reference ray.

use anyhow::{anyhow, bail, Result};
use lsi_core::{orbital, Complex64, ComplexField, LsiState, RealField, SolitonProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

/// Offset of the localized disturbances ahead of the profile peak.
const BUMP_OFFSET: f64 = 2.0;

/// Highest Fourier mode (in units of the fundamental) carried by the seeded
/// noise; small enough to stay far inside the dealiased band on any grid
/// this tool accepts.
const NOISE_MODES: i64 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbKind {
    /// Multiply both short-wave components by 1 + delta.
    Amplitude,
    /// Add a carrier-modulated sech bump to the first component.
    LocalizedBump,
    /// Add seeded band-limited noise of H1 size delta to each component.
    RandomFourier,
    /// Add a sech^2 bump to the long-wave field only.
    WOnly,
}

impl PerturbKind {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbKind::Amplitude => "amplitude",
            PerturbKind::LocalizedBump => "localized_bump",
            PerturbKind::RandomFourier => "random_fourier",
            PerturbKind::WOnly => "w_only",
        }
    }
}

impl fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(PerturbKind::Amplitude),
            "localized_bump" => Ok(PerturbKind::LocalizedBump),
            "random_fourier" => Ok(PerturbKind::RandomFourier),
            "w_only" => Ok(PerturbKind::WOnly),
            _ => Err(anyhow!(
                "unknown perturbation kind {s:?} (expected amplitude, localized_bump, random_fourier, or w_only)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Perturbation {
    pub kind: PerturbKind,
    pub delta: f64,
    pub seed: u64,
    pub preserve_mass: bool,
    pub preserve_ray: bool,
}

/// Applies `recipe` to the solitary state at t = 0.
///
/// Returns the perturbed state together with its distance to the solitary
/// state: the largest of the two short-wave H1 distances and the long-wave
/// L2 distance. delta = 0 short-circuits and returns the solitary state
/// itself, bypassing the post-passes.
pub fn perturb(profile: &SolitonProfile, recipe: &Perturbation) -> Result<(LsiState, f64)> {
    if !recipe.delta.is_finite() || recipe.delta < 0.0 {
        bail!("perturbation delta must be nonnegative, got {}", recipe.delta);
    }
    let base = profile.solitary_state(0.0)?;
    if recipe.delta == 0.0 {
        return Ok((base, 0.0));
    }

    let grid = *profile.grid();
    let c = profile.params().c();
    let xb = grid.center() + BUMP_OFFSET;
    let one = Complex64::new(1.0, 0.0);
    let mut phi = base.phi().clone();
    let mut psi = base.psi().clone();
    let mut w = base.w().clone();

    match recipe.kind {
        PerturbKind::Amplitude => {
            let s = Complex64::new(1.0 + recipe.delta, 0.0);
            phi = phi.scale(s);
            psi = psi.scale(s);
        }
        PerturbKind::LocalizedBump => {
            let bump = ComplexField::from_fn(grid, |x| {
                Complex64::from_polar(recipe.delta / (2.0 * (x - xb)).cosh(), 0.5 * c * x)
            });
            phi = phi.add_scaled(one, &bump);
        }
        PerturbKind::RandomFourier => {
            let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
            let noise_phi = band_limited_noise(grid, c, recipe.delta, &mut rng)?;
            let noise_psi = band_limited_noise(grid, c, recipe.delta, &mut rng)?;
            phi = phi.add_scaled(one, &noise_phi);
            psi = psi.add_scaled(one, &noise_psi);
        }
        PerturbKind::WOnly => {
            let bump = RealField::from_fn(grid, |x| {
                let s = 1.0 / (x - xb).cosh();
                recipe.delta * s * s
            });
            w = w.add_scaled(1.0, &bump);
        }
    }

    if recipe.preserve_ray {
        let (a, b) = equalize_ray(&phi, &psi, profile)?;
        phi = phi.scale(Complex64::new(a, 0.0));
        psi = psi.scale(Complex64::new(b, 0.0));
    }
    if recipe.preserve_mass {
        phi = rescale_mass(&phi, profile.r1())?;
        psi = rescale_mass(&psi, profile.r2())?;
    }

    let state = base.with_fields(phi, psi, w)?;
    let dist = distance_to(&state, &base);
    Ok((state, dist))
}

/// Random trigonometric polynomial over modes 1..=NOISE_MODES (both signs),
/// modulated by the traveling carrier and normalized to H1 norm `delta`.
fn band_limited_noise(
    grid: lsi_core::PeriodicGrid,
    c: f64,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ComplexField> {
    let k0 = 2.0 * std::f64::consts::PI / grid.length();
    let mut coefs: Vec<(f64, Complex64)> = Vec::with_capacity(2 * NOISE_MODES as usize);
    for m in 1..=NOISE_MODES {
        for sign in [1.0, -1.0] {
            let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            coefs.push((sign * m as f64 * k0, a));
        }
    }
    let center = grid.center();
    let field = ComplexField::from_fn(grid, |x| {
        let mut z = Complex64::new(0.0, 0.0);
        for (kappa, a) in &coefs {
            z += a * Complex64::from_polar(1.0, kappa * (x - center));
        }
        z * Complex64::from_polar(1.0, 0.5 * c * x)
    });
    let norm = field.n_omega(1.0).sqrt();
    if norm == 0.0 {
        bail!("degenerate noise draw");
    }
    Ok(field.scale(Complex64::new(delta / norm, 0.0)))
}

/// Real factors (a, b) so that after scaling, the carrier-removed envelopes
/// project onto R1 and R2 with a common ratio (the mean of the two current
/// ratios). Scaling a component by a real factor scales its projection the
/// same way, so the equalization is exact.
fn equalize_ray(
    phi: &ComplexField,
    psi: &ComplexField,
    profile: &SolitonProfile,
) -> Result<(f64, f64)> {
    let params = profile.params();
    let ratio = |f: &ComplexField, r: &RealField| -> Result<f64> {
        let mass = r.l2_norm_sq();
        if mass == 0.0 {
            // Component absent from the ray: nothing to align.
            return Ok(1.0);
        }
        let g = orbital::demodulate(f, params, 0.0, 0.0, 0.0);
        Ok(g.re().inner(r)? / mass)
    };
    let r1 = ratio(phi, profile.r1())?;
    let r2 = ratio(psi, profile.r2())?;
    let target = 0.5 * (r1 + r2);
    let factor = |r: f64| -> Result<f64> {
        if r.abs() < 1e-12 {
            bail!("perturbed component has lost its overlap with the reference ray");
        }
        Ok(target / r)
    };
    let a = if profile.r1().l2_norm_sq() == 0.0 { 1.0 } else { factor(r1)? };
    let b = if profile.r2().l2_norm_sq() == 0.0 { 1.0 } else { factor(r2)? };
    Ok((a, b))
}

/// Rescales `f` to the L2 norm of the reference component `r`.
fn rescale_mass(f: &ComplexField, r: &RealField) -> Result<ComplexField> {
    let target = r.l2_norm_sq().sqrt();
    let current = f.l2_norm_sq().sqrt();
    if target == 0.0 {
        return Ok(f.scale(Complex64::new(0.0, 0.0)));
    }
    if current == 0.0 {
        bail!("cannot rescale an identically zero component to a positive mass");
    }
    Ok(f.scale(Complex64::new(target / current, 0.0)))
}

fn distance_to(state: &LsiState, base: &LsiState) -> f64 {
    let minus = Complex64::new(-1.0, 0.0);
    let dp = state.phi().add_scaled(minus, base.phi()).n_omega(1.0).sqrt();
    let dq = state.psi().add_scaled(minus, base.psi()).n_omega(1.0).sqrt();
    let dw = state.w().add_scaled(-1.0, base.w()).l2_norm_sq().sqrt();
    dp.max(dq).max(dw)
}
