//! Radial potentials of the form V(r) = χ(r)/r².
//!
//! Two families are available: the pure inverse-square potential χ ≡ a and a
//! shifted decaying profile χ(r) = c0 + a/(1 + r). Both are non-increasing,
//! bounded, and satisfy r V'(r) + 2 V(r) = χ'(r)/r ≤ 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::RadialGrid;

/// Lower bound on inf χ required for the Friedrichs domain characterization.
pub const HARDY_THRESHOLD: f64 = 0.75;

/// Tolerance applied by [`check_admissibility`] to analytic quantities.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialFamily {
    /// χ(r) ≡ a.
    InverseSquare { a: f64 },
    /// χ(r) = c0 + a/(1 + r), a ≥ 0.
    ShiftedDecay { c0: f64, a: f64 },
}

/// An immutable radial potential together with the infimum of its profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    family: PotentialFamily,
    c_inf: f64,
}

impl PotentialSpec {
    pub fn inverse_square(a: f64) -> Result<Self> {
        Self::new(PotentialFamily::InverseSquare { a })
    }

    pub fn shifted_decay(c0: f64, a: f64) -> Result<Self> {
        Self::new(PotentialFamily::ShiftedDecay { c0, a })
    }

    /// Builds a spec, validating the family parameters and storing inf χ.
    ///
    /// Specs with inf χ ≤ 3/4 can be built (so that they can be reported on)
    /// but fail [`check_admissibility`].
    pub fn new(family: PotentialFamily) -> Result<Self> {
        let c_inf = match family {
            PotentialFamily::InverseSquare { a } => {
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::config("potential.a", format!("must be finite and >= 0, got {a}")));
                }
                a
            }
            PotentialFamily::ShiftedDecay { c0, a } => {
                if !c0.is_finite() || c0 < 0.0 {
                    return Err(Error::config("potential.c0", format!("must be finite and >= 0, got {c0}")));
                }
                if !a.is_finite() || a < 0.0 {
                    // a < 0 would make χ increasing.
                    return Err(Error::config("potential.a", format!("must be finite and >= 0, got {a}")));
                }
                c0
            }
        };
        Ok(Self { family, c_inf })
    }

    pub fn family(&self) -> PotentialFamily {
        self.family
    }

    /// inf χ, the constant c of the lower bound V ≥ c/r².
    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }

    /// c_inf − 3/4; positive exactly when the spec is admissible.
    pub fn hardy_margin(&self) -> f64 {
        self.c_inf - HARDY_THRESHOLD
    }

    pub fn is_admissible(&self) -> bool {
        self.hardy_margin() > 0.0
    }

    /// χ(r) for r ≥ 0.
    pub fn chi(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.chi_unchecked(r))
    }

    /// χ'(r) for r ≥ 0.
    pub fn chi_prime(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.chi_prime_unchecked(r))
    }

    /// V(r) = χ(r)/r² for r > 0.
    pub fn v(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Err(Error::Singularity { r });
        }
        Ok(self.chi_unchecked(r) / (r * r))
    }

    /// V'(r) = χ'(r)/r² − 2χ(r)/r³ for r > 0.
    pub fn v_prime(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Err(Error::Singularity { r });
        }
        Ok(self.chi_prime_unchecked(r) / (r * r) - 2.0 * self.chi_unchecked(r) / (r * r * r))
    }

    /// r V'(r) + 2 V(r), evaluated in the cancellation-free form χ'(r)/r.
    pub fn virial(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Err(Error::Singularity { r });
        }
        Ok(self.chi_prime_unchecked(r) / r)
    }

    /// r V'(r) + 2 V(r) with V' from a centered difference of step `step`.
    ///
    /// Fallback path for tabulated profiles; the built-in families use
    /// [`PotentialSpec::virial`].
    pub fn virial_centered_difference(&self, r: f64, step: f64) -> Result<f64> {
        if step <= 0.0 || r - step <= 0.0 {
            return Err(Error::Domain(format!("centered difference needs 0 < step < r, got r={r}, step={step}")));
        }
        let dv = (self.v(r + step)? - self.v(r - step)?) / (2.0 * step);
        Ok(r * dv + 2.0 * self.v(r)?)
    }

    pub(crate) fn chi_unchecked(&self, r: f64) -> f64 {
        match self.family {
            PotentialFamily::InverseSquare { a } => a,
            PotentialFamily::ShiftedDecay { c0, a } => c0 + a / (1.0 + r),
        }
    }

    pub(crate) fn chi_prime_unchecked(&self, r: f64) -> f64 {
        match self.family {
            PotentialFamily::InverseSquare { .. } => 0.0,
            PotentialFamily::ShiftedDecay { a, .. } => -a / ((1.0 + r) * (1.0 + r)),
        }
    }

    /// V(r) for r > 0 without validation; used in inner loops on staggered nodes.
    pub(crate) fn v_unchecked(&self, r: f64) -> f64 {
        self.chi_unchecked(r) / (r * r)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    Ok(())
}

/// Outcome of the structural hypothesis checks over a radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// max over nodes of r V' + 2V.
    pub max_virial: f64,
    /// min over nodes of r² V(r) − c_inf.
    pub min_lower_bound_gap: f64,
    /// Number of consecutive node pairs where χ increases.
    pub monotonicity_violations: usize,
    /// c_inf − 3/4.
    pub hardy_margin: f64,
    pub pass: bool,
}

/// Checks r V' + 2 V ≤ 0, V ≥ c/r², monotonicity of χ and c > 3/4 on `grid`.
pub fn check_admissibility(spec: &PotentialSpec, grid: &RadialGrid) -> AdmissibilityReport {
    let mut max_virial = f64::NEG_INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut violations = 0;
    let mut prev_chi: Option<f64> = None;
    for &r in grid.nodes() {
        let virial = spec.chi_prime_unchecked(r) / r;
        max_virial = max_virial.max(virial);
        min_gap = min_gap.min(r * r * spec.v_unchecked(r) - spec.c_inf);
        let chi = spec.chi_unchecked(r);
        if let Some(p) = prev_chi {
            if chi > p {
                violations += 1;
            }
        }
        prev_chi = Some(chi);
    }
    let hardy_margin = spec.hardy_margin();
    let pass = max_virial <= ADMISSIBILITY_TOL
        && min_gap >= -ADMISSIBILITY_TOL
        && violations == 0
        && hardy_margin > 0.0;
    AdmissibilityReport {
        max_virial,
        min_lower_bound_gap: min_gap,
        monotonicity_violations: violations,
        hardy_margin,
        pass,
    }
}
