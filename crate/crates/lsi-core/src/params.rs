//! Physical parameters of the long wave / short wave system.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Coupling, wave speed, and carrier frequency `(beta, c, omega)` of a
/// solitary-wave family, with the derived profile constants
///
/// * `Omega = omega - c²/4`, the decay rate of the profile, and
/// * `gamma = beta²/c`, the effective cubic coefficient.
///
/// Admissibility requires `c > 0`, `4 omega - c² > 0`, and `beta ≠ 0`;
/// [`PhysParams::new`] rejects anything else and names the violated
/// constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    beta: f64,
    c: f64,
    omega: f64,
}

impl PhysParams {
    pub fn new(beta: f64, c: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("c", c), ("omega", omega)] {
            if !v.is_finite() {
                return Err(Error::InadmissibleParams(format!("{name} = {v} is not finite")));
            }
        }
        if c <= 0.0 {
            return Err(Error::InadmissibleParams(format!(
                "constraint c > 0 failed (c = {c})"
            )));
        }
        if 4.0 * omega - c * c <= 0.0 {
            return Err(Error::InadmissibleParams(format!(
                "constraint 4*omega - c^2 > 0 failed (omega = {omega}, c = {c})"
            )));
        }
        if beta == 0.0 {
            return Err(Error::InadmissibleParams("constraint beta != 0 failed".into()));
        }
        Ok(Self { beta, c, omega })
    }

    /// Builds parameters without admissibility checks. Intended for reference
    /// configurations outside the solitary-wave regime, such as `beta = 0`
    /// free-dispersion runs used to validate the time stepper.
    pub fn new_unchecked(beta: f64, c: f64, omega: f64) -> Self {
        Self { beta, c, omega }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Profile decay constant `omega - c²/4`.
    pub fn big_omega(&self) -> f64 {
        self.omega - 0.25 * self.c * self.c
    }

    /// Effective cubic coefficient `beta²/c`.
    pub fn gamma(&self) -> f64 {
        self.beta * self.beta / self.c
    }
}
