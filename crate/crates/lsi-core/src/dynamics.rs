//! Integrating-factor RK4 time stepping for the coupled system
//!
//! ```text
//!     i φ_t + φ_xx = β w φ
//!     i ψ_t + ψ_xx = β w ψ
//!       w_t = β (|φ|² + |ψ|²)_x
//! ```
//!
//! The stiff dispersive part is diagonal in Fourier space, so each envelope
//! mode carries the exact propagator `exp(-i κ² h)` and only the coupling
//! terms are treated by classical RK4. The long-wave component has no
//! linear part and steps by plain RK4. Products are formed in physical
//! space with a 2/3-rule spectral cutoff applied on both sides of every
//! product to suppress aliasing.

use crate::field::{ComplexField, RealField};
use crate::grid::PeriodicGrid;
use crate::params::PhysParams;
use crate::state::LsiState;
use crate::{Error, Result};
use num_complex::Complex64;

/// Step size, stop time, and recording cadence for [`evolve`].
#[derive(Clone, Copy, Debug)]
pub struct EvolveConfig {
    dt: f64,
    t_end: f64,
    record_every: usize,
    dealias: bool,
}

impl EvolveConfig {
    /// A configuration stepping with size `dt > 0` until `t_end`. The
    /// direction of integration is taken from the sign of `t_end - t` at
    /// the initial state, so the same configuration drives forward and
    /// reversed runs.
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidArgument(format!("step size dt = {dt} must be positive")));
        }
        if !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("stop time t_end = {t_end} must be finite")));
        }
        Ok(EvolveConfig { dt, t_end, record_every: 1, dealias: true })
    }

    /// Observe every `every`-th step instead of every step.
    pub fn with_record_every(mut self, every: usize) -> Result<Self> {
        if every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        self.record_every = every;
        Ok(self)
    }

    /// Disable or re-enable the 2/3-rule product cutoff.
    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }
}

/// Spectral coefficients of one state, the representation the stepper
/// works in between observations.
struct Modal {
    phi: Vec<Complex64>,
    psi: Vec<Complex64>,
    w: Vec<Complex64>,
}

impl Modal {
    fn from_state(state: &LsiState) -> Modal {
        Modal {
            phi: state.phi().spectrum(),
            psi: state.psi().spectrum(),
            w: state.w().to_complex().spectrum(),
        }
    }

    fn into_state(self, grid: PeriodicGrid, t: f64) -> LsiState {
        let phi = ComplexField::from_spectrum(grid, self.phi);
        let psi = ComplexField::from_spectrum(grid, self.psi);
        let w = ComplexField::from_spectrum(grid, self.w).re();
        LsiState::new(phi, psi, w, t).expect("modal fields share one grid")
    }

    /// Name of the first component containing a non-finite coefficient.
    fn first_non_finite(&self) -> Option<&'static str> {
        let bad = |v: &[Complex64]| v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite());
        if bad(&self.phi) {
            Some("phi")
        } else if bad(&self.psi) {
            Some("psi")
        } else if bad(&self.w) {
            Some("w")
        } else {
            None
        }
    }
}

/// Grid-dependent constants shared by every step: wavenumbers, the product
/// cutoff, and scratch-free closures over them.
struct Workspace {
    grid: PeriodicGrid,
    kappa: Vec<f64>,
    mask: Vec<f64>,
    beta: f64,
}

impl Workspace {
    fn new(grid: PeriodicGrid, params: &PhysParams, dealias: bool) -> Workspace {
        let n = grid.n() as i64;
        let cut = n / 3;
        let mask = (0..grid.n())
            .map(|k| {
                if dealias && grid.signed_index(k).abs() > cut {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        Workspace { grid, kappa: grid.wavenumbers(), mask, beta: params.beta() }
    }

    /// Half- and full-step envelope propagators `exp(-i κ² h / 2)` and
    /// `exp(-i κ² h)` for a step of signed size `h`.
    fn propagators(&self, h: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let half = self
            .kappa
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -0.5 * k * k * h))
            .collect::<Vec<_>>();
        let full = half.iter().map(|e| e * e).collect();
        (half, full)
    }

    /// Coupling tendencies in spectral space:
    /// `-i β (w φ)^`, `-i β (w ψ)^`, and `i β κ (|φ|² + |ψ|²)^`.
    fn nonlinear(&self, u: &Modal) -> Modal {
        let n = self.grid.n();
        let masked = |hat: &[Complex64]| -> Vec<Complex64> {
            let mut buf: Vec<Complex64> = hat.iter().zip(&self.mask).map(|(z, &m)| m * z).collect();
            crate::fft::inverse(&mut buf);
            buf
        };
        let phi = masked(&u.phi);
        let psi = masked(&u.psi);
        let w = masked(&u.w);

        let mut w_phi = vec![Complex64::default(); n];
        let mut w_psi = vec![Complex64::default(); n];
        let mut env = vec![Complex64::default(); n];
        for j in 0..n {
            // The long-wave component is real; its inverse transform may
            // carry a roundoff-level imaginary residue that must not leak
            // into the products.
            let wj = w[j].re;
            w_phi[j] = wj * phi[j];
            w_psi[j] = wj * psi[j];
            env[j] = Complex64::new(phi[j].norm_sqr() + psi[j].norm_sqr(), 0.0);
        }
        crate::fft::forward(&mut w_phi);
        crate::fft::forward(&mut w_psi);
        crate::fft::forward(&mut env);

        let minus_i_beta = Complex64::new(0.0, -self.beta);
        for k in 0..n {
            w_phi[k] *= minus_i_beta * self.mask[k];
            w_psi[k] *= minus_i_beta * self.mask[k];
            env[k] *= Complex64::new(0.0, self.beta * self.kappa[k]) * self.mask[k];
        }
        // The gradient is an odd-order spectral derivative; the unpaired
        // Nyquist mode must not contribute.
        env[self.grid.nyquist_slot()] = Complex64::default();
        Modal { phi: w_phi, psi: w_psi, w: env }
    }

    /// One integrating-factor RK4 step of signed size `h`.
    fn step(&self, u: &Modal, h: f64) -> Modal {
        let (e_half, e_full) = self.propagators(h);
        let prop = |e: &[Complex64], x: &[Complex64]| -> Vec<Complex64> {
            e.iter().zip(x).map(|(a, b)| a * b).collect()
        };
        let ident = |x: &[Complex64]| x.to_vec();
        let axpy = |a: f64, x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
            y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
        };
        // Apply the same linear map to all three components; the long wave
        // has no dispersive factor, so its propagator is the identity.
        let map = |u: &Modal, f: &dyn Fn(&[Complex64]) -> Vec<Complex64>| Modal {
            phi: f(&u.phi),
            psi: f(&u.psi),
            w: ident(&u.w),
        };
        let half = |u: &Modal| map(u, &|x| prop(&e_half, x));
        let full = |u: &Modal| map(u, &|x| prop(&e_full, x));
        let add = |u: &Modal, a: f64, k: &Modal| Modal {
            phi: axpy(a, &k.phi, &u.phi),
            psi: axpy(a, &k.psi, &u.psi),
            w: axpy(a, &k.w, &u.w),
        };

        let k1 = self.nonlinear(u);
        let u2 = half(&add(u, 0.5 * h, &k1));
        let k2 = self.nonlinear(&u2);
        let u3 = add(&half(u), 0.5 * h, &k2);
        let k3 = self.nonlinear(&u3);
        let u4 = add(&full(u), h, &half(&k3));
        let k4 = self.nonlinear(&u4);

        let mut out = full(u);
        out = add(&out, h / 6.0, &full(&k1));
        out = add(&out, h / 3.0, &half(&add(&k2, 1.0, &k3)));
        add(&out, h / 6.0, &k4)
    }
}

/// Right-hand side of the evolution system in physical space, with the
/// same product treatment as the stepper. Useful for cross-checking the
/// stepper against closed-form time derivatives.
pub fn rhs(
    state: &LsiState,
    params: &PhysParams,
    dealias: bool,
) -> (ComplexField, ComplexField, RealField) {
    let grid = *state.grid();
    let ws = Workspace::new(grid, params, dealias);
    let u = Modal::from_state(state);
    let mut tendency = ws.nonlinear(&u);
    for k in 0..grid.n() {
        let lin = Complex64::new(0.0, -ws.kappa[k] * ws.kappa[k]);
        tendency.phi[k] += lin * u.phi[k];
        tendency.psi[k] += lin * u.psi[k];
    }
    let phi_dot = ComplexField::from_spectrum(grid, tendency.phi);
    let psi_dot = ComplexField::from_spectrum(grid, tendency.psi);
    let w_dot = ComplexField::from_spectrum(grid, tendency.w).re();
    (phi_dot, psi_dot, w_dot)
}

/// A single integrating-factor RK4 step of signed size `h`.
pub fn step_ifrk4(state: &LsiState, params: &PhysParams, h: f64, dealias: bool) -> Result<LsiState> {
    if !h.is_finite() || h == 0.0 {
        return Err(Error::InvalidArgument(format!("step size h = {h} must be nonzero")));
    }
    let ws = Workspace::new(*state.grid(), params, dealias);
    let u = ws.step(&Modal::from_state(state), h);
    let t = state.t() + h;
    if let Some(field) = u.first_non_finite() {
        return Err(Error::BlowUp { step: 1, time: t, field });
    }
    Ok(u.into_state(*state.grid(), t))
}

/// Integrates `state` to `config.t_end()`, calling `observer` on the
/// initial state, every `record_every`-th step, and the final state.
/// Returns the final state together with the observed `(t, value)` series.
///
/// The final step is shortened so the returned state sits exactly at
/// `t_end`; intermediate times are computed as `t0 + i dt` rather than by
/// accumulation. A non-finite coefficient aborts with [`Error::BlowUp`].
pub fn evolve<T>(
    state: &LsiState,
    params: &PhysParams,
    config: &EvolveConfig,
    mut observer: impl FnMut(&LsiState) -> T,
) -> Result<(LsiState, Vec<(f64, T)>)> {
    let grid = *state.grid();
    let t0 = state.t();
    let span = config.t_end - t0;
    let mut records = Vec::new();
    records.push((t0, observer(state)));
    if span == 0.0 {
        return Ok((state.clone(), records));
    }

    let ws = Workspace::new(grid, params, config.dealias);
    let h = config.dt.copysign(span);
    let full_steps = (span.abs() / config.dt).floor() as usize;
    // A remainder below roundoff of the last full step is treated as zero
    // rather than stepped over.
    let remainder = span - full_steps as f64 * h;
    let tiny = 1e-12 * config.dt;

    let mut u = Modal::from_state(state);
    for i in 1..=full_steps {
        u = ws.step(&u, h);
        let t = t0 + i as f64 * h;
        if let Some(field) = u.first_non_finite() {
            return Err(Error::BlowUp { step: i, time: t, field });
        }
        if i % config.record_every == 0 {
            let s = Modal {
                phi: u.phi.clone(),
                psi: u.psi.clone(),
                w: u.w.clone(),
            }
            .into_state(grid, t);
            records.push((t, observer(&s)));
        }
    }
    if remainder.abs() > tiny {
        u = ws.step(&u, remainder);
        if let Some(field) = u.first_non_finite() {
            return Err(Error::BlowUp { step: full_steps + 1, time: config.t_end, field });
        }
    }
    let final_state = u.into_state(grid, config.t_end);
    if records.last().map(|(tr, _)| *tr) != Some(config.t_end) {
        records.push((config.t_end, observer(&final_state)));
    }
    Ok((final_state, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::invariants;
    use crate::profile::SolitonProfile;

    fn canonical() -> (PhysParams, PeriodicGrid) {
        (
            PhysParams::new(2.0_f64.sqrt(), 2.0, 2.0).unwrap(),
            PeriodicGrid::new(1024, 80.0, 0.0).unwrap(),
        )
    }

    fn canonical_profile() -> SolitonProfile {
        let (p, g) = canonical();
        SolitonProfile::ground_state(p, std::f64::consts::FRAC_PI_4, g).unwrap()
    }

    fn sup_distance(a: &LsiState, b: &LsiState) -> f64 {
        let m1 = Complex64::new(-1.0, 0.0);
        let d_phi = a.phi().add_scaled(m1, b.phi()).max_abs();
        let d_psi = a.psi().add_scaled(m1, b.psi()).max_abs();
        let d_w = a.w().add_scaled(-1.0, b.w()).max_abs();
        d_phi.max(d_psi).max(d_w)
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let (p, g) = canonical();
        let cfg = EvolveConfig::new(1e-2, 0.5).unwrap().with_record_every(10).unwrap();
        let (end, recs) = evolve(&LsiState::zero(g), &p, &cfg, |s| s.phi().max_abs()).unwrap();
        assert_eq!(end.t(), 0.5);
        assert!(end.phi().max_abs() == 0.0 && end.w().max_abs() == 0.0);
        assert!(recs.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn plane_waves_with_zero_long_wave_stay_exact() {
        // With w = 0 and single-mode envelopes, |φ|² + |ψ|² is constant, so
        // the coupling never activates and the integrating factor carries
        // the whole solution: any step size is exact to roundoff.
        let (p, g) = canonical();
        let k1 = 2.0 * std::f64::consts::PI * 3.0 / g.length();
        let k2 = 2.0 * std::f64::consts::PI * 5.0 / g.length();
        let phi = ComplexField::from_fn(g, |x| Complex64::from_polar(0.7, k1 * x));
        let psi = ComplexField::from_fn(g, |x| Complex64::from_polar(0.4, k2 * x));
        let init = LsiState::new(phi, psi, RealField::zeros(g), 0.0).unwrap();
        let t_end = 1.0;
        let cfg = EvolveConfig::new(0.05, t_end).unwrap().with_record_every(100).unwrap();
        let (end, _) = evolve(&init, &p, &cfg, |_| ()).unwrap();
        let expect_phi =
            ComplexField::from_fn(g, |x| Complex64::from_polar(0.7, k1 * x - k1 * k1 * t_end));
        let err = end.phi().add_scaled(Complex64::new(-1.0, 0.0), &expect_phi).max_abs();
        assert!(err < 1e-10, "plane-wave phase error {err:.3e}");
        assert!(end.w().max_abs() < 1e-12);
    }

    #[test]
    fn rhs_matches_centered_differences_of_the_closed_form() {
        let prof = canonical_profile();
        let p = *prof.params();
        let t0 = 0.1;
        let (phi_dot, _, w_dot) = rhs(&prof.solitary_state(t0).unwrap(), &p, true);

        let fd_error = |eps: f64| -> (f64, f64) {
            let plus = prof.solitary_state(t0 + eps).unwrap();
            let minus = prof.solitary_state(t0 - eps).unwrap();
            let scale = Complex64::new(0.5 / eps, 0.0);
            let fd_phi = plus
                .phi()
                .add_scaled(Complex64::new(-1.0, 0.0), minus.phi())
                .scale(scale);
            let fd_w = plus.w().add_scaled(-1.0, minus.w()).scale(0.5 / eps);
            (
                fd_phi.add_scaled(Complex64::new(-1.0, 0.0), &phi_dot).max_abs(),
                fd_w.add_scaled(-1.0, &w_dot).max_abs(),
            )
        };
        let (e_phi_1, e_w_1) = fd_error(1e-3);
        let (e_phi_2, e_w_2) = fd_error(5e-4);
        assert!(e_phi_1 < 1e-5, "rhs disagrees with the flow: {e_phi_1:.3e}");
        assert!(e_w_1 < 1e-5);
        // Centered differences converge at second order, so halving the
        // increment must cut the defect by about four.
        let ratio = e_phi_1 / e_phi_2;
        assert!((3.0..5.0).contains(&ratio), "φ defect ratio {ratio}");
        let ratio_w = e_w_1 / e_w_2;
        assert!((3.0..5.0).contains(&ratio_w), "w defect ratio {ratio_w}");
    }

    #[test]
    fn free_dispersion_single_step_is_exact() {
        // β = 0 turns off every coupling term, so one step of any size must
        // reproduce the dispersive propagator to roundoff.
        let p = PhysParams::new_unchecked(0.0, 2.0, 2.0);
        let g = PeriodicGrid::new(256, 40.0, 0.0).unwrap();
        let phi = ComplexField::from_fn(g, |x| {
            Complex64::new((-0.5 * x * x).exp(), 0.3 * (0.7 * x).sin())
        });
        let psi = ComplexField::from_fn(g, |x| Complex64::new(0.0, 1.0 / (1.0 + x * x)));
        let w = RealField::from_fn(g, |x| 0.2 * (-x.abs()).exp());
        let init = LsiState::new(phi.clone(), psi.clone(), w.clone(), 0.0).unwrap();
        let h = 0.37;
        let end = step_ifrk4(&init, &p, h, true).unwrap();

        let kappa = g.wavenumbers();
        let reference = |f: &ComplexField| -> ComplexField {
            let mut hat = f.spectrum();
            for (z, &k) in hat.iter_mut().zip(&kappa) {
                *z *= Complex64::from_polar(1.0, -k * k * h);
            }
            ComplexField::from_spectrum(g, hat)
        };
        let err = end
            .phi()
            .add_scaled(Complex64::new(-1.0, 0.0), &reference(&phi))
            .max_abs();
        assert!(err < 1e-13, "free φ step error {err:.3e}");
        let err_psi = end
            .psi()
            .add_scaled(Complex64::new(-1.0, 0.0), &reference(&psi))
            .max_abs();
        assert!(err_psi < 1e-13);
        assert!(end.w().add_scaled(-1.0, &w).max_abs() < 1e-14, "w is frozen when β = 0");
    }

    #[test]
    fn free_dispersion_accumulates_the_right_phase() {
        let p = PhysParams::new_unchecked(0.0, 2.0, 2.0);
        let g = PeriodicGrid::new(256, 40.0, 0.0).unwrap();
        let k0 = 2.0 * std::f64::consts::PI * 7.0 / g.length();
        let phi = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, k0 * x));
        let init = LsiState::new(phi, ComplexField::zeros(g), RealField::zeros(g), 0.0).unwrap();
        let cfg = EvolveConfig::new(1e-3, 1.0).unwrap().with_record_every(500).unwrap();
        let (end, _) = evolve(&init, &p, &cfg, |_| ()).unwrap();
        let expect = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, k0 * x - k0 * k0));
        let err = end.phi().add_scaled(Complex64::new(-1.0, 0.0), &expect).max_abs();
        assert!(err < 1e-10, "phase after T = 1: error {err:.3e}");
    }

    #[test]
    fn invariants_hold_over_a_short_run() {
        let prof = canonical_profile();
        let p = *prof.params();
        let init = prof.solitary_state(0.0).unwrap();
        let before = invariants(&init, &p);
        let cfg = EvolveConfig::new(1e-3, 0.2).unwrap().with_record_every(200).unwrap();
        let (end, _) = evolve(&init, &p, &cfg, |_| ()).unwrap();
        let after = invariants(&end, &p);
        assert!((after.i1 - before.i1).abs() < 1e-11);
        assert!((after.i2 - before.i2).abs() < 1e-11);
        assert!((after.i3 - before.i3).abs() < 1e-10);
        assert!((after.i4 - before.i4).abs() < 1e-10);
        assert!((after.lyapunov - before.lyapunov).abs() < 1e-10);
    }

    #[test]
    fn long_wave_mean_is_conserved_to_roundoff() {
        // The w tendency is a perfect x-derivative; its zero mode never
        // moves, so the spatial mean is exact up to accumulation error.
        let prof = canonical_profile();
        let p = *prof.params();
        let init = prof.solitary_state(0.0).unwrap();
        let mean0 = init.w().quadrature() / init.grid().length();
        let cfg = EvolveConfig::new(1e-3, 0.5).unwrap().with_record_every(500).unwrap();
        let (end, _) = evolve(&init, &p, &cfg, |_| ()).unwrap();
        let mean1 = end.w().quadrature() / end.grid().length();
        assert!((mean1 - mean0).abs() < 1e-13, "mean drift {:.3e}", (mean1 - mean0).abs());
    }

    #[test]
    fn evolution_reverses_to_the_initial_state() {
        let prof = canonical_profile();
        let p = *prof.params();
        let g = *prof.grid();
        // Perturb so the run exercises the genuine nonlinear coupling.
        let bump = RealField::from_fn(g, |x| 1e-2 / (2.0 * (x - 3.0)).cosh());
        let init0 = prof.solitary_state(0.0).unwrap();
        let init = init0
            .with_fields(
                init0.phi().clone(),
                init0.psi().clone(),
                init0.w().add_scaled(1.0, &bump),
            )
            .unwrap();
        let fwd_cfg = EvolveConfig::new(1e-3, 1.0).unwrap().with_record_every(1000).unwrap();
        let (mid, _) = evolve(&init, &p, &fwd_cfg, |_| ()).unwrap();
        let back_cfg = EvolveConfig::new(1e-3, 0.0).unwrap().with_record_every(1000).unwrap();
        let (back, _) = evolve(&mid, &p, &back_cfg, |_| ()).unwrap();
        assert_eq!(back.t(), 0.0);
        let err = sup_distance(&back, &init);
        assert!(err < 1e-7, "round trip error {err:.3e}");
    }

    #[test]
    fn partial_final_step_lands_exactly_on_t_end() {
        let prof = canonical_profile();
        let p = *prof.params();
        let init = prof.solitary_state(0.0).unwrap();
        // 0.1035 / 1e-3 leaves a 0.0005 remainder step.
        let cfg = EvolveConfig::new(1e-3, 0.1035).unwrap().with_record_every(50).unwrap();
        let (end, recs) = evolve(&init, &p, &cfg, |s| s.t()).unwrap();
        assert_eq!(end.t(), 0.1035);
        assert_eq!(recs.last().unwrap().0, 0.1035);
        assert_eq!(recs[0].0, 0.0);
        assert_eq!(recs[1].0, 0.05);
        // The shortened step keeps the closed-form orbit accuracy.
        let exact = prof.solitary_state(0.1035).unwrap();
        assert!(sup_distance(&end, &exact) < 1e-9);
    }

    #[test]
    fn stepping_converges_at_fourth_order() {
        let prof = canonical_profile();
        let p = *prof.params();
        let init = prof.solitary_state(0.0).unwrap();
        let t_end = 0.5;
        let exact = prof.solitary_state(t_end).unwrap();
        let error_at = |dt: f64| -> f64 {
            let cfg = EvolveConfig::new(dt, t_end).unwrap().with_record_every(10_000).unwrap();
            let (end, _) = evolve(&init, &p, &cfg, |_| ()).unwrap();
            sup_distance(&end, &exact)
        };
        let e1 = error_at(4e-3);
        let e2 = error_at(2e-3);
        let ratio = e1 / e2;
        assert!(
            (11.0..22.0).contains(&ratio),
            "halving dt should divide the error by about 16, got {ratio} ({e1:.3e} / {e2:.3e})"
        );
    }

    #[test]
    fn config_rejects_bad_arguments() {
        assert!(EvolveConfig::new(0.0, 1.0).is_err());
        assert!(EvolveConfig::new(-1e-3, 1.0).is_err());
        assert!(EvolveConfig::new(1e-3, f64::NAN).is_err());
        assert!(EvolveConfig::new(1e-3, 1.0).unwrap().with_record_every(0).is_err());
        let (p, g) = canonical();
        assert!(step_ifrk4(&LsiState::zero(g), &p, 0.0, true).is_err());
    }
}
