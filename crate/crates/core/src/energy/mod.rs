//! Energy objects of the conformal multiplier method and the norms used to
//! monitor solutions: densities X±, the remainders ρ and R, the multiplier
//! identity, the characteristic-polygon flux balance, the conformal estimate,
//! the Sobolev energy, the weighted amplitude norm and the weight integral J.

mod conformal;
mod hexagon;
mod norms;

pub use conformal::*;
pub use hexagon::*;
pub use norms::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents of the conformal weights: τ₋^s weights, slack δ, interpolation
/// parameter θ with σ = 2/θ, and angular exponent κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalParams {
    pub s: f64,
    pub delta: f64,
    pub theta: f64,
    pub sigma: f64,
    pub kappa: f64,
}

impl ConformalParams {
    pub fn new(s: f64, delta: f64, theta: f64, kappa: f64) -> Result<Self> {
        let p = Self { s, delta, theta, sigma: 2.0 / theta, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 1.0 && self.s < 2.0) {
            return Err(Error::config("conformal.s", format!("must lie in (1, 2), got {}", self.s)));
        }
        if !(self.delta > 0.0 && self.delta < self.s - 1.0) {
            return Err(Error::config(
                "conformal.delta",
                format!("must lie in (0, s - 1) = (0, {}), got {}", self.s - 1.0, self.delta),
            ));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::config("conformal.theta", format!("must lie in (0, 1], got {}", self.theta)));
        }
        if (self.sigma * self.theta - 2.0).abs() > 1e-12 {
            return Err(Error::config("conformal.sigma", "must equal 2/θ"));
        }
        if !(self.kappa > 2.0 && self.kappa.is_finite()) {
            return Err(Error::config("conformal.kappa", format!("must lie in (2, ∞), got {}", self.kappa)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        let p = ConformalParams::new(1.8, 0.1, 0.01, 4.0).unwrap();
        assert_eq!(p.sigma, 200.0);
        assert!(ConformalParams::new(2.0, 0.1, 0.01, 4.0).is_err());
        assert!(ConformalParams::new(1.5, 0.6, 0.01, 4.0).is_err());
        assert!(ConformalParams::new(1.5, 0.1, 0.0, 4.0).is_err());
        assert!(ConformalParams::new(1.5, 0.1, 0.5, 2.0).is_err());
    }
}
