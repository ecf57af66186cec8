//! End-to-end exercises of the public API: profile construction, export and
//! re-import, evolution against the closed-form traveling solution,
//! conservation, operator identities, and orbit fitting, all through the
//! crate boundary.

use lsi_core::dynamics::{evolve, EvolveConfig};
use lsi_core::functionals::invariants;
use lsi_core::operators::{constrained_rayleigh_l0, kernel_identities};
use lsi_core::orbital::orbital_distance;
use lsi_core::profile::SolitonProfile;
use lsi_core::{Complex64, PeriodicGrid, PhysParams, RealField};
use std::io::BufReader;

fn profile(n: usize, length: f64) -> SolitonProfile {
    let params = PhysParams::new(2.0_f64.sqrt(), 2.0, 2.0).unwrap();
    let grid = PeriodicGrid::new(n, length, 0.0).unwrap();
    SolitonProfile::ground_state(params, std::f64::consts::FRAC_PI_4, grid).unwrap()
}

#[test]
fn evolution_follows_the_closed_form_traveling_solution() {
    let prof = profile(512, 60.0);
    let params = *prof.params();
    let t_end = 0.5;
    let cfg = EvolveConfig::new(1e-3, t_end).unwrap();
    let (state, _) = evolve(&prof.solitary_state(0.0).unwrap(), &params, &cfg, |_| ()).unwrap();
    let reference = prof.solitary_state(t_end).unwrap();
    let minus = Complex64::new(-1.0, 0.0);
    let err = state
        .phi()
        .add_scaled(minus, reference.phi())
        .max_abs()
        .max(state.psi().add_scaled(minus, reference.psi()).max_abs())
        .max(state.w().add_scaled(-1.0, reference.w()).max_abs());
    assert!(err < 1e-9, "closed-form deviation {err:.3e}");
}

#[test]
fn invariants_are_conserved_through_a_perturbed_run() {
    let prof = profile(512, 60.0);
    let params = *prof.params();
    let base = prof.solitary_state(0.0).unwrap();
    let bump = RealField::from_fn(*prof.grid(), |x| 1e-2 / ((x - 2.0).cosh() * (x - 2.0).cosh()));
    let state = base
        .with_fields(base.phi().clone(), base.psi().clone(), base.w().add_scaled(1.0, &bump))
        .unwrap();
    let cfg = EvolveConfig::new(1e-3, 1.0).unwrap();
    let first = invariants(&state, &params);
    let (final_state, _) = evolve(&state, &params, &cfg, |_| ()).unwrap();
    let last = invariants(&final_state, &params);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
    assert!(rel(first.i1, last.i1) < 1e-10, "mass 1 drift");
    assert!(rel(first.i2, last.i2) < 1e-10, "mass 2 drift");
    assert!(rel(first.i3, last.i3) < 1e-9, "energy drift");
    assert!(rel(first.i4, last.i4) < 1e-9, "momentum drift");
    assert!(rel(first.lyapunov, last.lyapunov) < 1e-9, "lyapunov drift");
}

#[test]
fn profile_round_trips_through_csv_and_sidecar() {
    let prof = profile(512, 60.0);
    let mut csv = Vec::new();
    prof.write_csv(&mut csv).unwrap();
    let sidecar = prof.sidecar();
    let text = serde_json::to_string(&sidecar).unwrap();
    let parsed = serde_json::from_str(&text).unwrap();
    let back = SolitonProfile::import(BufReader::new(csv.as_slice()), &parsed).unwrap();
    let dev = back
        .r1()
        .add_scaled(-1.0, prof.r1())
        .max_abs()
        .max(back.r2().add_scaled(-1.0, prof.r2()).max_abs())
        .max(back.w().add_scaled(-1.0, prof.w()).max_abs());
    assert!(dev < 1e-14, "round-trip deviation {dev:.3e}");
    let (r1, r2) = back.residual();
    assert!(r1 < 1e-10 && r2 < 1e-10, "imported profile residuals {r1:.3e} / {r2:.3e}");
}

#[test]
fn operator_identities_hold_on_a_fresh_grid() {
    let prof = profile(512, 60.0);
    let (k1, k2, k3) = kernel_identities(&prof);
    assert!(k1 < 1e-9 && k2 < 1e-9 && k3 < 1e-9, "kernel identities {k1:.3e} {k2:.3e} {k3:.3e}");
    let constraint = prof.envelope_sq().mul(prof.r1());
    let (mu, _) = constrained_rayleigh_l0(&prof, &[constraint]).unwrap();
    assert!(mu > 0.0, "constrained quotient {mu}");
}

#[test]
fn orbit_fit_recovers_an_engineered_group_element() {
    let prof = profile(512, 60.0);
    let base = prof.solitary_state(0.0).unwrap();
    let shift = -7.25;
    let rot = Complex64::from_polar(1.0, 1.1);
    let moved = base
        .with_fields(
            base.phi().translate(shift).scale(rot),
            base.psi().translate(shift).scale(rot),
            base.w().translate(shift),
        )
        .unwrap();
    let fit = orbital_distance(&moved, &prof).unwrap();
    assert!(fit.rho < 1e-6, "rho {:.3e}", fit.rho);
    let length = prof.grid().length();
    let dx = (fit.x0 - (-shift)).rem_euclid(length);
    let dx = dx.min(length - dx);
    assert!(dx < 1e-6, "x0 {} vs {}", fit.x0, -shift);
    assert!(!fit.degenerate);
}
