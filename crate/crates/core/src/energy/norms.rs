//! Norms of mode fields: the Sobolev energy built from the discrete mode
//! operators, the conformal-estimate terms, the weighted amplitude norm in
//! L^σ_r L^κ(S²), and the weight integral J(t).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::conformal::centered_derivative;
use super::ConformalParams;
use crate::error::{Error, Result};
use crate::grids::{gauss_legendre, tau_minus, tau_plus, RadialGrid};
use crate::harmonics::{mode_degree_order, mode_eigenvalue, ModeField, PhysicalField, SphericalTransform};
use crate::radial::{RadialOperator, Trajectory};

/// The five norms of E = ‖Au‖ + ‖A^{1/2}u‖ + ‖u‖ + ‖A^{1/2}∂t u‖ + ‖∂t u‖.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevEnergy {
    pub a_u: f64,
    pub half_u: f64,
    pub u: f64,
    pub half_ut: f64,
    pub ut: f64,
}

impl SobolevEnergy {
    pub fn total(&self) -> f64 {
        self.a_u + self.half_u + self.u + self.half_ut + self.ut
    }
}

/// Squared L² norm Σ_m h Σ_j v_m(r_j)², equal to the physical L²(R³) norm.
pub fn l2_squared(v: &ModeField, h: f64) -> f64 {
    h * v.as_slice().iter().map(|x| x * x).sum::<f64>()
}

/// Σ_m q_ℓ(v_m), the discrete ‖A^{1/2}v‖².
pub fn form_squared(v: &ModeField, op: &RadialOperator) -> f64 {
    v.rows()
        .enumerate()
        .map(|(m, row)| op.quadratic_form(mode_degree_order(m).0, row))
        .sum()
}

/// Σ_m h Σ_j (L_ℓ v_m)², the discrete ‖Av‖².
pub fn operator_squared(v: &ModeField, op: &RadialOperator) -> f64 {
    let h = op.grid().spacing();
    let mut buf = vec![0.0; v.n_radial()];
    v.rows()
        .enumerate()
        .map(|(m, row)| {
            op.apply(mode_degree_order(m).0, row, &mut buf);
            h * buf.iter().map(|x| x * x).sum::<f64>()
        })
        .sum()
}

pub fn sobolev_energy(u: &ModeField, ut: &ModeField, op: &RadialOperator) -> SobolevEnergy {
    let h = op.grid().spacing();
    SobolevEnergy {
        a_u: operator_squared(u, op).sqrt(),
        half_u: form_squared(u, op).max(0.0).sqrt(),
        u: l2_squared(u, h).sqrt(),
        half_ut: form_squared(ut, op).max(0.0).sqrt(),
        ut: l2_squared(ut, h).sqrt(),
    }
}

/// Size η of the data (f, g), the Sobolev energy evaluated at t = 0.
pub fn data_size(f: &ModeField, g: &ModeField, op: &RadialOperator) -> f64 {
    sobolev_energy(f, g, op).total()
}

/// ‖∇f‖ through the free mode operators −D + λ_ℓ/r².
pub fn gradient_norm(f: &ModeField, grid: &RadialGrid) -> f64 {
    let free = RadialOperator::with_potential(grid, f.l_max(), |_| 0.0);
    form_squared(f, &free).max(0.0).sqrt()
}

/// The three left-hand terms of the conformal estimate at time t:
/// ‖τ₋^{s/2}∇_{t,r}u‖, the rotational term ‖τ₋^{s/2}|Ru|/r‖ in its
/// mode-space form (Σ_m ∫ τ₋^s λ_ℓ v²/r²)^{1/2}, and ‖τ₋^{s/2}u/r‖.
pub fn conformal_lhs_terms(t: f64, u: &ModeField, ut: &ModeField, grid: &RadialGrid, s: f64) -> [f64; 3] {
    let h = grid.spacing();
    let weights: Vec<f64> = grid.nodes().iter().map(|&r| tau_minus(t, r).max(0.0).powf(s)).collect();
    let (mut grad, mut rot, mut amp) = (0.0, 0.0, 0.0);
    for (m, (row, trow)) in u.rows().zip(ut.rows()).enumerate() {
        let lam = mode_eigenvalue(mode_degree_order(m).0);
        let vr = centered_derivative(row, h);
        for (j, &r) in grid.nodes().iter().enumerate() {
            let w = weights[j];
            let radial = vr[j] - row[j] / r;
            let q = row[j] * row[j] / (r * r);
            grad += w * (trow[j] * trow[j] + radial * radial);
            rot += w * lam * q;
            amp += w * q;
        }
    }
    [(h * grad).sqrt(), (h * rot).sqrt(), (h * amp).sqrt()]
}

/// Σ_m ∫ τ₊^s τ₋^{1+δ} F_m² dr at time t.
pub fn weighted_source_squared(t: f64, source: &ModeField, grid: &RadialGrid, params: &ConformalParams) -> f64 {
    let h = grid.spacing();
    let w: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| tau_plus(t, r).powf(params.s) * tau_minus(t, r).max(0.0).powf(1.0 + params.delta))
        .collect();
    h * source.rows().map(|row| row.iter().zip(&w).map(|(f, w)| w * f * f).sum::<f64>()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub lhs_terms: BTreeMap<String, f64>,
    pub rhs_terms: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Running evaluation of the conformal estimate along an evolution: the
/// data part of the right side is fixed, the source part accumulates by the
/// trapezoidal rule as levels are pushed in time order.
#[derive(Debug, Clone)]
pub struct ConformalTracker {
    params: ConformalParams,
    grid: RadialGrid,
    g_norm: f64,
    grad_f_norm: f64,
    accumulated: f64,
    last: Option<(f64, f64)>,
}

impl ConformalTracker {
    pub fn new(f: &ModeField, g: &ModeField, grid: &RadialGrid, params: ConformalParams) -> Self {
        Self {
            params,
            grid: grid.clone(),
            g_norm: l2_squared(g, grid.spacing()).sqrt(),
            grad_f_norm: gradient_norm(f, grid),
            accumulated: 0.0,
            last: None,
        }
    }

    /// Records the level (t, u, ∂t u, F) and returns the estimate at t.
    pub fn push(&mut self, t: f64, u: &ModeField, ut: &ModeField, source: Option<&ModeField>) -> EnergyReport {
        let density = source.map_or(0.0, |s| weighted_source_squared(t, s, &self.grid, &self.params));
        if let Some((t0, d0)) = self.last {
            self.accumulated += 0.5 * (t - t0) * (d0 + density);
        }
        self.last = Some((t, density));
        let [grad, rot, amp] = conformal_lhs_terms(t, u, ut, &self.grid, self.params.s);
        let source_norm = self.accumulated.sqrt();
        let lhs = grad + rot + amp;
        let rhs = self.g_norm + self.grad_f_norm + source_norm;
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        EnergyReport {
            t,
            lhs_terms: BTreeMap::from([
                ("gradient".to_string(), grad),
                ("rotation".to_string(), rot),
                ("amplitude".to_string(), amp),
            ]),
            rhs_terms: BTreeMap::from([
                ("g".to_string(), self.g_norm),
                ("grad_f".to_string(), self.grad_f_norm),
                ("source".to_string(), source_norm),
            ]),
            lhs,
            rhs,
            ratio,
        }
    }
}

/// The conformal estimate at every recorded snapshot. Sources are taken from
/// the snapshots, so inhomogeneous runs should record every step with
/// sources kept.
pub fn conformal_norm_report(
    traj: &Trajectory,
    f: &ModeField,
    g: &ModeField,
    params: &ConformalParams,
) -> Vec<EnergyReport> {
    let mut tracker = ConformalTracker::new(f, g, &traj.grid, *params);
    traj.snapshots
        .iter()
        .map(|s| tracker.push(s.t, &s.u, &s.ut, s.source.as_ref()))
        .collect()
}

/// w(t, r) = r^{(1−3θ)/2} τ₊^{(1−θ)/2} τ₋^{(s−1+θ)/2}, with τ₋ clamped at 0.
pub fn amplitude_weight(t: f64, r: f64, params: &ConformalParams) -> f64 {
    let th = params.theta;
    r.powf(0.5 * (1.0 - 3.0 * th))
        * tau_plus(t, r).powf(0.5 * (1.0 - th))
        * tau_minus(t, r).max(0.0).powf(0.5 * (params.s - 1.0 + th))
}

/// (∫ ‖weight(r)·f(rω)‖^σ_{L^κ(S²)} r² dr)^{1/σ} with the staggered midpoint
/// rule in r and the transform's quadrature on the sphere.
pub fn mixed_norm(
    field: &PhysicalField,
    weights: &[f64],
    grid: &RadialGrid,
    transform: &SphericalTransform,
    sigma: f64,
    kappa: f64,
) -> f64 {
    let quad = transform.quadrature().nodes();
    let angular: Vec<f64> = (0..grid.len())
        .map(|j| {
            let row = field.row(j);
            let peak = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if peak == 0.0 {
                return 0.0;
            }
            let sum: f64 = row.iter().zip(quad).map(|(x, n)| n.weight * (x.abs() / peak).powf(kappa)).sum();
            weights[j] * peak * sum.powf(1.0 / kappa)
        })
        .collect();
    let top = angular.iter().fold(0.0f64, |m, &a| m.max(a));
    if top == 0.0 {
        return 0.0;
    }
    let sum: f64 = angular
        .iter()
        .zip(grid.nodes())
        .map(|(&a, &r)| r * r * (a / top).powf(sigma))
        .sum::<f64>()
        * grid.spacing();
    top * sum.powf(1.0 / sigma)
}

/// ‖w u‖_{L^σ_r L^κ} + Σ_j ‖w R_j u‖_{L^σ_r L^κ} at time t.
pub fn weighted_amplitude_norm(
    t: f64,
    u: &ModeField,
    grid: &RadialGrid,
    transform: &SphericalTransform,
    params: &ConformalParams,
) -> Result<f64> {
    let weights: Vec<f64> = grid.nodes().iter().map(|&r| amplitude_weight(t, r, params)).collect();
    let norm = |field: &PhysicalField| mixed_norm(field, &weights, grid, transform, params.sigma, params.kappa);
    let mut total = norm(&transform.inverse(u, grid)?);
    for c in 0..3 {
        total += norm(&transform.rotation_field(u, grid, c)?);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightIntegral {
    pub t: f64,
    pub j: f64,
    /// J(t)^{1−pθ} / (2 + t)^{3 + 2/p − 2p + δ}
    pub ratio: f64,
}

/// J(t) = ∫₀^{t+1} (τ₊^s τ₋^{1+δ} w^{−2p})^{1/(1−pθ)} r² dr and its ratio to
/// the predicted decay rate.
pub fn weight_integral_j(t: f64, params: &ConformalParams, p: f64) -> Result<WeightIntegral> {
    let ConformalParams { s, delta, theta, .. } = *params;
    let q = 1.0 - p * theta;
    if q <= 0.0 {
        return Err(Error::config("conformal.theta", format!("needs 1 − pθ > 0, got {q}")));
    }
    let a = 2.0 - p * (1.0 - 3.0 * theta) / q;
    let b = (s - p * (1.0 - theta)) / q;
    let c = (1.0 + delta - p * (s - 1.0 + theta)) / q;
    if a <= -1.0 {
        return Err(Error::config("nonlinear.p", format!("r-exponent {a} of J is not integrable")));
    }
    // r = R y^{1/(a+1)} turns r^a dr into R^{a+1}/(a+1) dy.
    let big_r = t + 1.0;
    let e = 1.0 / (a + 1.0);
    let (x, w) = gauss_legendre(16);
    let panels = 64;
    let mut sum = 0.0;
    for k in 0..panels {
        let y0 = k as f64 / panels as f64;
        let half = 0.5 / panels as f64;
        for (xi, wi) in x.iter().zip(&w) {
            let y = y0 + half * (xi + 1.0);
            let r = big_r * y.powf(e);
            sum += half * wi * tau_plus(t, r).powf(b) * tau_minus(t, r).powf(c);
        }
    }
    let j = big_r.powf(a + 1.0) / (a + 1.0) * sum;
    let rate = 3.0 + 2.0 / p - 2.0 * p + delta;
    Ok(WeightIntegral { t, j, ratio: j.powf(q) / (2.0 + t).powf(rate) })
}
