//! Real and complex fields on a periodic grid.
//!
//! Differentiation, translation, and interpolation act through the FFT, so
//! they are exact for band-limited data and spectrally accurate for smooth
//! fields whose tails have decayed below round-off at the domain edge.
//! Integrals are trapezoid sums `h Σ f_j`, which on a periodic grid equal
//! the exact integral of the trigonometric interpolant.

use crate::fft;
use crate::grid::PeriodicGrid;
use crate::{Error, Result};
use num_complex::Complex64;
use std::io::{BufRead, Write};

/// Real scalar field sampled on a [`PeriodicGrid`].
#[derive(Clone, Debug)]
pub struct RealField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

/// Complex scalar field sampled on a [`PeriodicGrid`].
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: PeriodicGrid,
    values: Vec<Complex64>,
}

pub(crate) fn check_same_grid(a: &PeriodicGrid, b: &PeriodicGrid, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{what}: ({}, {}, {}) vs ({}, {}, {})",
            a.n(),
            a.length(),
            a.center(),
            b.n(),
            b.length(),
            b.center()
        )))
    }
}

// ─── RealField ──────────────────────────────────────────────────────────────

impl RealField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self { grid, values: vec![0.0; grid.n()] }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.point(j))).collect();
        Self { grid, values }
    }

    /// Wraps raw samples; the length must match the grid.
    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Unnormalized DFT of the samples.
    pub(crate) fn spectrum(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward(&mut buf);
        buf
    }

    /// Spectral derivative of the given order. Odd orders zero the Nyquist
    /// slot, which carries no sign information for them.
    pub fn deriv(&self, order: u32) -> RealField {
        let mut hat = self.spectrum();
        apply_deriv(&mut hat, &self.grid, order);
        let values = to_real(hat);
        RealField { grid: self.grid, values }
    }

    /// Samples of `x ↦ f(x + shift)` obtained by modal phase ramps; exact
    /// for band-limited fields, including shifts off the grid.
    pub fn translate(&self, shift: f64) -> RealField {
        let mut hat = self.spectrum();
        apply_shift_real(&mut hat, &self.grid, shift);
        let values = to_real(hat);
        RealField { grid: self.grid, values }
    }

    /// Trapezoid quadrature `h Σ f_j`.
    pub fn quadrature(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// `∫ f g` over the period.
    pub fn inner(&self, other: &RealField) -> Result<f64> {
        check_same_grid(&self.grid, &other.grid, "inner")?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.spacing() * s)
    }

    /// `∫ f²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// Weighted H¹ form `omega ∫ f² + ∫ f_x²`.
    pub fn n_omega(&self, omega: f64) -> f64 {
        omega * self.l2_norm_sq() + self.deriv(1).l2_norm_sq()
    }

    /// Evaluates the trigonometric interpolant at arbitrary points.
    /// Points outside the period are wrapped.
    pub fn eval_trig(&self, points: &[f64]) -> Vec<f64> {
        let hat = self.spectrum();
        let kappa = self.grid.wavenumbers();
        let left = self.grid.left();
        let n = self.grid.n() as f64;
        points
            .iter()
            .map(|&x| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (h, k) in hat.iter().zip(&kappa) {
                    acc += h * Complex64::from_polar(1.0, k * (x - left));
                }
                acc.re / n
            })
            .collect()
    }

    /// Evaluates the trigonometric interpolant on the uniform points
    /// `start + j * step`. Uses per-mode phase recurrences, re-seeded
    /// periodically so phase drift stays near round-off.
    pub fn eval_trig_uniform(&self, start: f64, step: f64, count: usize) -> Vec<f64> {
        let hat = self.spectrum();
        let kappa = self.grid.wavenumbers();
        let left = self.grid.left();
        let mut acc = vec![Complex64::new(0.0, 0.0); count];
        for (h, &k) in hat.iter().zip(&kappa) {
            if h.norm_sqr() == 0.0 {
                continue;
            }
            let ratio = Complex64::from_polar(1.0, k * step);
            let mut phase = Complex64::from_polar(1.0, k * (start - left));
            for (j, a) in acc.iter_mut().enumerate() {
                if j % 256 == 0 {
                    phase = Complex64::from_polar(1.0, k * (start + j as f64 * step - left));
                }
                *a += h * phase;
                phase *= ratio;
            }
        }
        let n = self.grid.n() as f64;
        acc.into_iter().map(|v| v.re / n).collect()
    }

    pub fn scale(&self, a: f64) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn add_const(&self, a: f64) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| a + v).collect() }
    }

    /// `self + a * other`; grids must match.
    pub fn add_scaled(&self, a: f64, other: &RealField) -> RealField {
        assert_eq!(self.grid, other.grid, "add_scaled requires a shared grid");
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        RealField { grid: self.grid, values }
    }

    /// Pointwise product; grids must match.
    pub fn mul(&self, other: &RealField) -> RealField {
        assert_eq!(self.grid, other.grid, "mul requires a shared grid");
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect();
        RealField { grid: self.grid, values }
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `x,value` rows with full double precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.grid.point(j), v)?;
        }
        Ok(())
    }

    /// Reads rows written by [`RealField::write_csv`] back onto `grid`.
    pub fn read_csv<R: BufRead>(grid: PeriodicGrid, reader: R) -> Result<RealField> {
        let values = parse_csv(grid, reader, 2, "x,value")?
            .into_iter()
            .map(|row| row[0])
            .collect();
        RealField::from_values(grid, values)
    }
}

// ─── ComplexField ───────────────────────────────────────────────────────────

impl ComplexField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.point(j))).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft::forward(&mut buf);
        buf
    }

    pub(crate) fn from_spectrum(grid: PeriodicGrid, mut hat: Vec<Complex64>) -> ComplexField {
        fft::inverse(&mut hat);
        ComplexField { grid, values: hat }
    }

    pub fn deriv(&self, order: u32) -> ComplexField {
        let mut hat = self.spectrum();
        apply_deriv(&mut hat, &self.grid, order);
        fft::inverse(&mut hat);
        ComplexField { grid: self.grid, values: hat }
    }

    /// Samples of `x ↦ f(x + shift)` via modal phase ramps.
    pub fn translate(&self, shift: f64) -> ComplexField {
        let mut hat = self.spectrum();
        let kappa = self.grid.wavenumbers();
        for (h, k) in hat.iter_mut().zip(&kappa) {
            *h *= Complex64::from_polar(1.0, k * shift);
        }
        fft::inverse(&mut hat);
        ComplexField { grid: self.grid, values: hat }
    }

    pub fn quadrature(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.spacing()
    }

    /// `∫ conj(f) g` over the period.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        check_same_grid(&self.grid, &other.grid, "inner")?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.spacing())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn n_omega(&self, omega: f64) -> f64 {
        omega * self.l2_norm_sq() + self.deriv(1).l2_norm_sq()
    }

    pub fn scale(&self, a: Complex64) -> ComplexField {
        ComplexField { grid: self.grid, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn add_scaled(&self, a: Complex64, other: &ComplexField) -> ComplexField {
        assert_eq!(self.grid, other.grid, "add_scaled requires a shared grid");
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        ComplexField { grid: self.grid, values }
    }

    /// Pointwise product with a complex function of x.
    pub fn mul_fn(&self, f: impl Fn(f64) -> Complex64) -> ComplexField {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v * f(self.grid.point(j)))
            .collect();
        ComplexField { grid: self.grid, values }
    }

    pub fn re(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| v.re).collect() }
    }

    pub fn im(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| v.im).collect() }
    }

    /// Pointwise squared modulus.
    pub fn abs_sq(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| v.norm_sqr()).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Writes `x,re,im` rows with full double precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re,im")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.grid.point(j), v.re, v.im)?;
        }
        Ok(())
    }

    /// Reads rows written by [`ComplexField::write_csv`] back onto `grid`.
    pub fn read_csv<R: BufRead>(grid: PeriodicGrid, reader: R) -> Result<ComplexField> {
        let values = parse_csv(grid, reader, 3, "x,re,im")?
            .into_iter()
            .map(|row| Complex64::new(row[0], row[1]))
            .collect();
        ComplexField::from_values(grid, values)
    }
}

// ─── shared spectral helpers ────────────────────────────────────────────────

fn apply_deriv(hat: &mut [Complex64], grid: &PeriodicGrid, order: u32) {
    let kappa = grid.wavenumbers();
    for (h, k) in hat.iter_mut().zip(&kappa) {
        *h *= Complex64::new(0.0, *k).powu(order);
    }
    if order % 2 == 1 {
        hat[grid.nyquist_slot()] = Complex64::new(0.0, 0.0);
    }
}

/// Phase-ramp translation that keeps a real signal real: the Nyquist slot
/// has no conjugate partner, so it picks up only the cosine of the ramp.
fn apply_shift_real(hat: &mut [Complex64], grid: &PeriodicGrid, shift: f64) {
    let kappa = grid.wavenumbers();
    for (slot, (h, k)) in hat.iter_mut().zip(&kappa).enumerate() {
        if slot == grid.nyquist_slot() {
            *h *= (k * shift).cos();
        } else {
            *h *= Complex64::from_polar(1.0, k * shift);
        }
    }
}

fn to_real(mut hat: Vec<Complex64>) -> Vec<f64> {
    fft::inverse(&mut hat);
    hat.into_iter().map(|v| v.re).collect()
}

fn parse_csv<R: BufRead>(
    grid: PeriodicGrid,
    reader: R,
    cols: usize,
    header: &str,
) -> Result<Vec<Vec<f64>>> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(line) => {
            let line = line?;
            if line.trim() != header {
                return Err(Error::Import(format!("expected header '{header}', got '{line}'")));
            }
        }
        None => return Err(Error::Import("empty file".into())),
    }
    let mut rows = Vec::with_capacity(grid.n());
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != cols {
            return Err(Error::Import(format!("row {idx}: expected {cols} columns")));
        }
        let x: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Import(format!("row {idx}: bad x value '{}'", parts[0])))?;
        let expect = grid.point(rows.len());
        if (x - expect).abs() > 1e-9 * grid.length().max(1.0) {
            return Err(Error::Import(format!(
                "row {idx}: x = {x} does not match grid point {expect}"
            )));
        }
        let mut row = Vec::with_capacity(cols - 1);
        for p in &parts[1..] {
            row.push(
                p.trim()
                    .parse()
                    .map_err(|_| Error::Import(format!("row {idx}: bad value '{p}'")))?,
            );
        }
        rows.push(row);
    }
    if rows.len() != grid.n() {
        return Err(Error::Import(format!("expected {} rows, got {}", grid.n(), rows.len())));
    }
    Ok(rows)
}
