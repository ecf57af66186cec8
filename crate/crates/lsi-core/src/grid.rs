//! Uniform periodic grid shared by all fields.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid on `[center - length/2, center + length/2)`.
///
/// `n` is restricted to powers of two so the FFT sizes are always fast and
/// the Nyquist slot is unambiguous. Two grids compare equal exactly when
/// they were built from identical `(n, length, center)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
    center: f64,
}

impl PeriodicGrid {
    /// Builds a grid with `n` points over a period of `length` centered at
    /// `center`. Rejects `n` that is not a power of two below 16 and
    /// non-finite or non-positive dimensions.
    pub fn new(n: usize, length: f64, center: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 16"
            )));
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidGrid(format!("length = {length} must be finite and positive")));
        }
        if !center.is_finite() {
            return Err(Error::InvalidGrid(format!("center = {center} must be finite")));
        }
        Ok(Self { n, length, center })
    }

    /// Domain length that keeps sech-profile tails below 1e-8 for a given
    /// decay rate `omega` (profiles decay like `exp(-sqrt(omega) |x|)`).
    pub fn recommended_length(omega: f64) -> f64 {
        40.0 / omega.sqrt()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Grid spacing `length / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Left edge of the domain.
    pub fn left(&self) -> f64 {
        self.center - 0.5 * self.length
    }

    /// Coordinate of sample `j`.
    pub fn point(&self, j: usize) -> f64 {
        self.left() + j as f64 * self.spacing()
    }

    /// All sample coordinates.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed mode index for FFT slot `k`: `0, 1, .., n/2-1, -n/2, .., -1`.
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Angular wavenumbers `2π s_k / length` in FFT slot order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let f = 2.0 * std::f64::consts::PI / self.length;
        (0..self.n).map(|k| f * self.signed_index(k) as f64).collect()
    }

    /// FFT slot of the Nyquist mode.
    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(PeriodicGrid::new(100, 80.0, 0.0).is_err(), "non power of two");
        assert!(PeriodicGrid::new(8, 80.0, 0.0).is_err(), "too small");
        assert!(PeriodicGrid::new(1024, -1.0, 0.0).is_err(), "negative length");
        assert!(PeriodicGrid::new(1024, f64::NAN, 0.0).is_err(), "nan length");
        assert!(PeriodicGrid::new(1024, 80.0, f64::INFINITY).is_err(), "infinite center");
    }

    #[test]
    fn points_cover_half_open_period() {
        let g = PeriodicGrid::new(16, 8.0, 1.0).unwrap();
        assert_eq!(g.point(0), 1.0 - 4.0);
        assert_eq!(g.spacing(), 0.5);
        let pts = g.points();
        assert_eq!(pts.len(), 16);
        // Last point stops one spacing short of the right edge.
        assert!((pts[15] - (5.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn wavenumber_layout_is_symmetric_with_negative_nyquist() {
        let g = PeriodicGrid::new(16, 2.0 * std::f64::consts::PI, 0.0).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert_eq!(k[1], 1.0);
        assert_eq!(k[15], -1.0);
        assert_eq!(k[8], -8.0, "Nyquist slot carries the negative frequency");
    }

    #[test]
    fn recommended_length_scales_with_decay_rate() {
        assert!((PeriodicGrid::recommended_length(1.0) - 40.0).abs() < 1e-12);
        assert!((PeriodicGrid::recommended_length(4.0) - 20.0).abs() < 1e-12);
        // The recommended box keeps sech tails just under 1e-8.
        let tail = 1.0 / (20.0_f64).cosh();
        assert!(tail < 1.0e-8 && tail > 1.0e-9);
    }
}
