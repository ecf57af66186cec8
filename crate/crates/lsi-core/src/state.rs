//! Full system state `(φ, ψ, w)` at a given time.

use crate::field::{check_same_grid, ComplexField, RealField};
use crate::grid::PeriodicGrid;
use crate::{Error, Result};

/// State of the three-component system: complex envelopes `φ`, `ψ`, the
/// real long-wave field `w`, and the time they belong to. All three fields
/// share one grid.
#[derive(Clone, Debug)]
pub struct LsiState {
    phi: ComplexField,
    psi: ComplexField,
    w: RealField,
    t: f64,
}

impl LsiState {
    pub fn new(phi: ComplexField, psi: ComplexField, w: RealField, t: f64) -> Result<Self> {
        check_same_grid(phi.grid(), psi.grid(), "phi vs psi")?;
        check_same_grid(phi.grid(), w.grid(), "phi vs w")?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time t = {t} must be finite")));
        }
        Ok(Self { phi, psi, w, t })
    }

    /// All-zero state at `t = 0`.
    pub fn zero(grid: PeriodicGrid) -> Self {
        Self {
            phi: ComplexField::zeros(grid),
            psi: ComplexField::zeros(grid),
            w: RealField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn phi(&self) -> &ComplexField {
        &self.phi
    }

    pub fn psi(&self) -> &ComplexField {
        &self.psi
    }

    pub fn w(&self) -> &RealField {
        &self.w
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.phi.grid()
    }

    /// Replaces the fields, keeping the grid checks.
    pub fn with_fields(&self, phi: ComplexField, psi: ComplexField, w: RealField) -> Result<Self> {
        Self::new(phi, psi, w, self.t)
    }

    pub fn with_time(mut self, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time t = {t} must be finite")));
        }
        self.t = t;
        Ok(self)
    }

    /// True when every sample of every component is finite.
    pub fn is_finite(&self) -> bool {
        self.phi.values().iter().all(|v| v.re.is_finite() && v.im.is_finite())
            && self.psi.values().iter().all(|v| v.re.is_finite() && v.im.is_finite())
            && self.w.values().iter().all(|v| v.is_finite())
    }
}
