//! Thin wrappers around `rustfft` with per-thread plan caches.
//!
//! Convention: `forward` is the unnormalized DFT
//! `F_k = Σ_j f_j e^{-2πi jk/n}`, `inverse` applies the conjugate transform
//! and divides by `n`, so `inverse(forward(f)) == f` to round-off.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn forward(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

pub fn inverse(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}
