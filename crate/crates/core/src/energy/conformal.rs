//! Pointwise objects of the multiplier identity
//! M(u)·[(∂t² − ∂r²)u + Wu] = ∇₊X₊ + ∇₋X₋ + R u²,
//! with ∇± = ∂t ± ∂r, τ± = 2 + t ± r, W = V + λ/r² and
//! M(u) = τ₊^s ∇₊u + τ₋^s ∇₋u.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{tau_minus, tau_plus};
use crate::potential::PotentialSpec;
use crate::radial::ConvergenceReport;

/// f(x) = φ(x) − φ(−x) with φ(x) = (1 + x)^{s−1}(1 − (s − 1)x), for |x| < 1.
fn rho_profile(x: f64, s: f64) -> f64 {
    if s == 1.0 || s == 2.0 || x == 0.0 {
        return 0.0;
    }
    if x < 0.0 {
        return -rho_profile(-x, s);
    }
    if x < 0.1 {
        // f(x) = 2 Σ_{k odd ≥ 3} (1 − k) C(s, k) x^k; the direct formula
        // cancels catastrophically here.
        let mut binom = s; // C(s, 1)
        let mut xk = x;
        let mut sum = 0.0;
        for k in 2..200 {
            binom *= (s - (k - 1) as f64) / k as f64;
            xk *= x;
            if k % 2 == 1 {
                let term = (1.0 - k as f64) * binom * xk;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
        }
        return 2.0 * sum;
    }
    let phi = |y: f64| (1.0 + y).powf(s - 1.0) * (1.0 - (s - 1.0) * y);
    phi(x) - phi(-x)
}

/// ρ = τ₊^s − τ₋^s − s r (τ₊^{s−1} + τ₋^{s−1}), odd in r, for |r| < 2 + t.
pub fn remainder_rho(t: f64, r: f64, s: f64) -> f64 {
    let a = 2.0 + t;
    a.powf(s) * rho_profile(r / a, s)
}

/// The coefficient R = −(τ₊^s − τ₋^s)(rV′ + 2V)/(2r) + ρV/r + ρλ/r³.
pub fn remainder_r(t: f64, r: f64, s: f64, spec: &PotentialSpec, lambda: f64) -> Result<f64> {
    if r == 0.0 {
        return Err(Error::Singularity { r });
    }
    if r < 0.0 {
        return Err(Error::Domain(format!("remainder R needs r > 0, got {r}")));
    }
    Ok(remainder_r_unchecked(t, r, s, spec, lambda))
}

pub(crate) fn remainder_r_unchecked(t: f64, r: f64, s: f64, spec: &PotentialSpec, lambda: f64) -> f64 {
    let rho = remainder_rho(t, r, s);
    let chi = spec.chi_unchecked(r);
    let dchi = spec.chi_prime_unchecked(r);
    let r3 = r * r * r;
    let spread = tau_plus(t, r).powf(s) - tau_minus(t, r).powf(s);
    // rV' + 2V = χ'/r
    -spread * dchi / (2.0 * r * r) + rho * (chi + lambda) / r3
}

/// Densities (X₊, X₋) at one point from u, ∂t u, ∂r u and W = V + λ/r²:
/// X₊ = ½τ₋^s(∇₋u)² + ½τ₊^s W u², X₋ = ½τ₊^s(∇₊u)² + ½τ₋^s W u².
pub fn densities_at(t: f64, r: f64, s: f64, w: f64, u: f64, ut: f64, ur: f64) -> (f64, f64) {
    let tp = tau_plus(t, r).max(0.0).powf(s);
    let tm = tau_minus(t, r).max(0.0).powf(s);
    let plus = ut + ur;
    let minus = ut - ur;
    let wu2 = w * u * u;
    (0.5 * (tm * minus * minus + tp * wu2), 0.5 * (tp * plus * plus + tm * wu2))
}

/// M(u) = τ₊^s ∇₊u + τ₋^s ∇₋u.
pub fn multiplier_at(t: f64, r: f64, s: f64, ut: f64, ur: f64) -> f64 {
    tau_plus(t, r).max(0.0).powf(s) * (ut + ur) + tau_minus(t, r).max(0.0).powf(s) * (ut - ur)
}

/// Densities along one mode on the staggered grid. `ut` is the time
/// derivative; ∂r is the centered difference with the odd ghost at the
/// origin and zero beyond r_max.
pub fn conformal_densities(
    grid: &crate::grids::RadialGrid,
    t: f64,
    u: &[f64],
    ut: &[f64],
    lambda: f64,
    spec: &PotentialSpec,
    s: f64,
) -> (Vec<f64>, Vec<f64>) {
    let ur = centered_derivative(u, grid.spacing());
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let w = spec.v_unchecked(r) + lambda / (r * r);
            densities_at(t, r, s, w, u[j], ut[j], ur[j])
        })
        .unzip()
}

/// Centered first differences with the odd ghost at the origin and zero
/// beyond the last node.
pub fn centered_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|j| {
            let left = if j == 0 { -v[0] } else { v[j - 1] };
            let right = if j + 1 == n { 0.0 } else { v[j + 1] };
            (right - left) / (2.0 * h)
        })
        .collect()
}

/// Both sides of the multiplier identity at (t, r), with every derivative of
/// u replaced by a centered difference of step h. Returns (lhs, rhs, R u²).
#[allow(clippy::too_many_arguments)]
pub fn identity_sides(
    u: &dyn Fn(f64, f64) -> f64,
    t: f64,
    r: f64,
    h: f64,
    lambda: f64,
    spec: &PotentialSpec,
    s: f64,
) -> (f64, f64, f64) {
    let w = |r: f64| spec.v_unchecked(r) + lambda / (r * r);
    let d_t = |t: f64, r: f64| (u(t + h, r) - u(t - h, r)) / (2.0 * h);
    let d_r = |t: f64, r: f64| (u(t, r + h) - u(t, r - h)) / (2.0 * h);
    let x = |t: f64, r: f64| densities_at(t, r, s, w(r), u(t, r), d_t(t, r), d_r(t, r));

    let u0 = u(t, r);
    let utt = (u(t + h, r) - 2.0 * u0 + u(t - h, r)) / (h * h);
    let urr = (u(t, r + h) - 2.0 * u0 + u(t, r - h)) / (h * h);
    let lhs = multiplier_at(t, r, s, d_t(t, r), d_r(t, r)) * (utt - urr + w(r) * u0);

    let (xp_tp, xm_tp) = x(t + h, r);
    let (xp_tm, xm_tm) = x(t - h, r);
    let (xp_rp, xm_rp) = x(t, r + h);
    let (xp_rm, xm_rm) = x(t, r - h);
    let grad_plus = (xp_tp - xp_tm) / (2.0 * h) + (xp_rp - xp_rm) / (2.0 * h);
    let grad_minus = (xm_tp - xm_tm) / (2.0 * h) - (xm_rp - xm_rm) / (2.0 * h);
    let ru2 = remainder_r_unchecked(t, r, s, spec, lambda) * u0 * u0;
    (lhs, grad_plus + grad_minus + ru2, ru2)
}

/// Maximum nodal residual of the multiplier identity for the smooth function
/// `u` at time `t0`, sampled on each grid with time step equal to the radial
/// spacing, over nodes 2h ≤ r ≤ r_window.
pub fn multiplier_identity_residual(
    u: &dyn Fn(f64, f64) -> f64,
    lambda: f64,
    spec: &PotentialSpec,
    s: f64,
    grids: &[crate::grids::RadialGrid],
    t0: f64,
    r_window: f64,
) -> ConvergenceReport {
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for grid in grids {
        let h = grid.spacing();
        let worst = grid
            .nodes()
            .iter()
            .filter(|&&r| r >= 2.0 * h && r <= r_window)
            .map(|&r| {
                let (lhs, rhs, _) = identity_sides(u, t0, r, h, lambda, spec, s);
                (lhs - rhs).abs()
            })
            .fold(0.0, f64::max);
        spacings.push(h);
        errors.push(worst);
    }
    ConvergenceReport::new(format!("identity s={s} lambda={lambda}"), spacings, errors)
}

/// Extremes of ρ and R over a seeded sweep of (s, t, r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderSweep {
    pub points: usize,
    /// min ρ over s ∈ [1, 2], t ∈ [0, t_max], 0 ≤ r ≤ t + 1.
    pub min_rho: f64,
    /// min R over the same sweep (r > 0), λ = ℓ(ℓ + 1) with ℓ ≤ 4.
    pub min_r: f64,
    /// max |ρ| over the points with s ∈ {1, 2}.
    pub max_abs_rho_endpoints: f64,
}

/// Samples `points` triples (s, t, r) uniformly, plus `points` more with
/// s ∈ {1, 2}, and records the extremes of ρ and R.
pub fn remainder_sweep(spec: &PotentialSpec, points: usize, t_max: f64, seed: u64) -> Result<RemainderSweep> {
    if points == 0 {
        return Err(Error::config("identity.sweep_points", "must be positive"));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::config("identity.t_max", format!("must be finite and >= 0, got {t_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_rho = f64::INFINITY;
    let mut min_r = f64::INFINITY;
    for _ in 0..points {
        let s = rng.random_range(1.0..=2.0);
        let t = rng.random_range(0.0..=t_max);
        let r = rng.random_range(0.0..=t + 1.0);
        let l = rng.random_range(0..=4u32) as f64;
        min_rho = min_rho.min(remainder_rho(t, r, s));
        if r > 0.0 {
            min_r = min_r.min(remainder_r_unchecked(t, r, s, spec, l * (l + 1.0)));
        }
    }
    let mut max_abs_rho_endpoints: f64 = 0.0;
    for i in 0..points {
        let s = if i % 2 == 0 { 1.0 } else { 2.0 };
        let t = rng.random_range(0.0..=t_max);
        let r = rng.random_range(0.0..=t + 1.0);
        max_abs_rho_endpoints = max_abs_rho_endpoints.max(remainder_rho(t, r, s).abs());
    }
    Ok(RemainderSweep { points, min_rho, min_r, max_abs_rho_endpoints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::RadialGrid;
    use crate::radial::bump_profile;

    fn rho_direct(t: f64, r: f64, s: f64) -> f64 {
        let (p, m) = (tau_plus(t, r), tau_minus(t, r));
        p.powf(s) - m.powf(s) - s * r * (p.powf(s - 1.0) + m.powf(s - 1.0))
    }

    #[test]
    fn remainder_sweep_is_nonnegative() {
        for spec in [PotentialSpec::inverse_square(1.0).unwrap(), PotentialSpec::shifted_decay(1.0, 2.0).unwrap()] {
            let sweep = remainder_sweep(&spec, 2000, 50.0, 3).unwrap();
            assert!(sweep.min_rho >= -1e-12, "{sweep:?}");
            assert!(sweep.min_r >= -1e-12, "{sweep:?}");
            assert!(sweep.max_abs_rho_endpoints <= 1e-12, "{sweep:?}");
        }
        assert!(remainder_sweep(&PotentialSpec::inverse_square(1.0).unwrap(), 0, 1.0, 0).is_err());
    }

    #[test]
    fn rho_reference_value() {
        let want = 3f64.powf(1.5) - 1.0 - 1.5 * (3f64.sqrt() + 1.0);
        assert!((remainder_rho(0.0, 1.0, 1.5) - want).abs() < 1e-14);
        assert!((want - 0.098_076_211_353_315_9).abs() < 1e-12);
    }

    #[test]
    fn rho_series_matches_direct_formula() {
        for &s in &[1.1, 1.5, 1.9] {
            for &x in &[0.02, 0.05, 0.0999, 0.1, 0.3] {
                let t = 3.0;
                let r = x * (2.0 + t);
                let d = rho_direct(t, r, s);
                let a = remainder_rho(t, r, s);
                assert!((a - d).abs() < 1e-12 * (2.0 + t).powf(s), "s={s} x={x}: {a} vs {d}");
            }
        }
        assert_eq!(remainder_rho(4.0, 0.3, 2.0), 0.0);
        assert_eq!(remainder_rho(4.0, 0.3, 1.0), 0.0);
        assert!((remainder_rho(1.0, -0.4, 1.5) + remainder_rho(1.0, 0.4, 1.5)).abs() < 1e-15);
    }

    #[test]
    fn remainder_vanishes_for_inverse_square_at_integer_s() {
        let spec = PotentialSpec::inverse_square(1.0).unwrap();
        for &s in &[1.0, 2.0] {
            assert_eq!(remainder_r(2.0, 0.7, s, &spec, 6.0).unwrap(), 0.0);
        }
        assert!(remainder_r(2.0, 0.0, 1.5, &spec, 6.0).is_err());
        let r = remainder_r(2.0, 0.7, 1.5, &spec, 6.0).unwrap();
        let rho = remainder_rho(2.0, 0.7, 1.5);
        assert!((r - rho * 7.0 / 0.343).abs() < 1e-12);
    }

    #[test]
    fn densities_match_definition() {
        let (xp, xm) = densities_at(1.0, 0.5, 1.5, 2.0, 0.3, 0.7, -0.2);
        let tp = 3.5f64.powf(1.5);
        let tm = 2.5f64.powf(1.5);
        assert!((xp - 0.5 * (tm * 0.81 + tp * 2.0 * 0.09)).abs() < 1e-14);
        assert!((xm - 0.5 * (tp * 0.25 + tm * 2.0 * 0.09)).abs() < 1e-14);
        assert_eq!(densities_at(1.0, 0.5, 1.5, 2.0, 0.0, 0.0, 0.0), (0.0, 0.0));
        // Reflection r → −r swaps the roles of the two densities.
        let (a, b) = densities_at(1.0, 0.5, 1.5, 2.0, 0.3, 0.7, -0.2);
        let (c, d) = densities_at(1.0, -0.5, 1.5, 2.0, -0.3, -0.7, -0.2);
        assert!((a - d).abs() < 1e-14 && (b - c).abs() < 1e-14);
    }

    #[test]
    fn identity_holds_for_exact_derivatives() {
        // Along a solution-free check: with u = r³(1−r)⁴ cos t the residual is
        // pure truncation error and falls like h².
        let spec = PotentialSpec::shifted_decay(1.0, 0.5).unwrap();
        let u = |t: f64, r: f64| bump_profile(r).0 * t.cos();
        let grids: Vec<_> = [256, 512, 1024].iter().map(|&n| RadialGrid::new(n, 2.0).unwrap()).collect();
        let rep = multiplier_identity_residual(&u, 6.0, &spec, 1.5, &grids, 0.5, 1.2);
        assert!(rep.orders_within(1.8, 2.2), "{rep:?}");
        let zero = |_: f64, _: f64| 0.0;
        let rep = multiplier_identity_residual(&zero, 6.0, &spec, 1.5, &grids, 0.5, 1.2);
        assert!(rep.errors.iter().all(|&e| e == 0.0));
    }
}
