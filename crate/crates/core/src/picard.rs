//! Picard iteration for the integral form of the semilinear equation,
//! u_{m+1} = u₀ + D[F(u_m)], where u₀ solves the homogeneous linear problem
//! and D is the Duhamel operator realized as a zero-data inhomogeneous linear
//! solve. Also selects the conformal exponents admissible for a given p.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{sobolev_energy, ConformalParams};
use crate::error::{Error, Result};
use crate::grids::RadialGrid;
use crate::harmonics::ModeField;
use crate::nonlinear::{NonlinearTerm, NonlinearityParams};
use crate::potential::PotentialSpec;
use crate::radial::{solve_linear, NoSource, RadialOperator, SchemeConfig, Source, Trajectory};

/// Lower end 1 + √2 of the exponent range with global small-data existence.
pub const STRAUSS_EXPONENT: f64 = 1.0 + std::f64::consts::SQRT_2;

/// Slack of each strict inequality the selected exponents must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterMargins {
    /// (p² − 2p − 1) − pδ/2.
    pub delta_vs_exponent: f64,
    /// (s − 1) − δ.
    pub delta_vs_s: f64,
    /// (p + 1)(p − 2) − p²θ.
    pub theta_vs_exponent: f64,
    /// δ − 2pθ.
    pub theta_vs_delta: f64,
    /// 1 − pθ.
    pub interpolation: f64,
    /// κ − 2.
    pub kappa: f64,
}

impl ParameterMargins {
    pub fn all_positive(&self) -> bool {
        [
            self.delta_vs_exponent,
            self.delta_vs_s,
            self.theta_vs_exponent,
            self.theta_vs_delta,
            self.interpolation,
            self.kappa,
        ]
        .iter()
        .all(|&m| m > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSelection {
    pub p: f64,
    pub params: ConformalParams,
    pub margins: ParameterMargins,
}

/// Midpoint choices s = 1 + 2/p, δ = ½ min(s − 1, 2(p² − 2p − 1)/p),
/// θ = ½ min((p + 1)(p − 2)/p², δ/(2p)), σ = 2/θ, κ = 4 for 1 + √2 < p < 3.
pub fn parameter_select(p: f64) -> Result<ParameterSelection> {
    if !(p > STRAUSS_EXPONENT && p < 3.0) {
        return Err(Error::config("nonlinear.p", format!("must lie in (1 + √2, 3) for parameter selection, got {p}")));
    }
    let s = 1.0 + 2.0 / p;
    let strauss = p * p - 2.0 * p - 1.0;
    let delta = 0.5 * (s - 1.0).min(2.0 * strauss / p);
    let quad = (p + 1.0) * (p - 2.0);
    let theta = 0.5 * (quad / (p * p)).min(delta / (2.0 * p));
    let kappa = 4.0;
    let params = ConformalParams::new(s, delta, theta, kappa)?;
    let margins = ParameterMargins {
        delta_vs_exponent: strauss - p * delta / 2.0,
        delta_vs_s: s - 1.0 - delta,
        theta_vs_exponent: quad - p * p * theta,
        theta_vs_delta: delta - 2.0 * p * theta,
        interpolation: 1.0 - p * theta,
        kappa: kappa - 2.0,
    };
    if !margins.all_positive() {
        return Err(Error::config("nonlinear.p", format!("selected exponents violate a constraint: {margins:?}")));
    }
    Ok(ParameterSelection { p, params, margins })
}

/// The Duhamel term ∫₀ᵗ sin((t−τ)√A)/√A F(τ) dτ, computed as the linear
/// solution with zero data and source F.
pub fn duhamel(
    source: &dyn Source,
    l_max: usize,
    spec: &PotentialSpec,
    grid: &RadialGrid,
    t_end: f64,
    scheme: &SchemeConfig,
) -> Result<Trajectory> {
    let zero = ModeField::zeros(l_max, grid.len());
    solve_linear(&zero, &zero, source, spec, grid, t_end, scheme)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PicardStatus {
    /// The last gap fell below the tolerance.
    Converged,
    /// m_max iterations without reaching the tolerance.
    MaxIterations,
    /// The gap grew three times in a row.
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub status: PicardStatus,
    /// sup_t E(u_{m+1} − u_m) for m = 0, 1, ...
    pub iterate_gaps: Vec<f64>,
    /// gap_{m+1} / gap_m.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    /// Number of iterates computed beyond u₀.
    pub m_used: usize,
    pub tol: f64,
}

impl IterationReport {
    /// Every ratio lies below one, so gap_m ≤ gap_0·q^m with q the largest
    /// ratio.
    pub fn is_geometric(&self) -> bool {
        !self.contraction_ratios.is_empty() && self.contraction_ratios.iter().all(|&x| x.is_finite() && x < 1.0)
    }

    /// The largest contraction ratio q.
    pub fn max_ratio(&self) -> f64 {
        self.contraction_ratios.iter().cloned().fold(0.0, f64::max)
    }
}

/// sup over common recorded steps of E(a − b), with E the Sobolev energy.
pub fn sup_energy_distance(a: &Trajectory, b: &Trajectory, op: &RadialOperator) -> Result<f64> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::Contract("trajectories record different steps".into()));
    }
    let distances: Vec<f64> = a
        .snapshots
        .par_iter()
        .zip(&b.snapshots)
        .map(|(x, y)| {
            if x.step != y.step || !x.u.same_shape(&y.u) {
                return Err(Error::Contract("trajectories record different steps".into()));
            }
            Ok(sobolev_energy(&x.u.difference(&y.u), &x.ut.difference(&y.ut), op).total())
        })
        .collect::<Result<_>>()?;
    Ok(distances.into_iter().fold(0.0, f64::max))
}

fn add_trajectories(base: &Trajectory, increment: &Trajectory) -> Trajectory {
    let mut out = base.clone();
    for (s, d) in out.snapshots.iter_mut().zip(&increment.snapshots) {
        s.u.add_assign(&d.u);
        s.ut.add_assign(&d.ut);
    }
    out
}

/// Settings of [`picard_iterate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub params: NonlinearityParams,
    pub spec: PotentialSpec,
    pub grid: RadialGrid,
    pub t_end: f64,
    pub scheme: SchemeConfig,
    pub m_max: usize,
    pub tol: f64,
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.m_max == 0 {
            return Err(Error::config("picard.m_max", "must be positive"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::config("picard.tol", format!("must be finite and >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Iterates u_{m+1} = u₀ + D[F(u_m)] until the sup-in-time energy gap drops
/// to `tol`, `m_max` iterates are computed, or the gap grows three times in a
/// row. Returns the last iterate.
pub fn picard_iterate(f: &ModeField, g: &ModeField, config: &PicardConfig) -> Result<(Trajectory, IterationReport)> {
    config.validate()?;
    let grid = &config.grid;
    let l_max = f.l_max();
    let term = NonlinearTerm::new(config.params, grid, l_max);
    let op = RadialOperator::new(grid, &config.spec, l_max);
    let u0 = solve_linear(f, g, &NoSource, &config.spec, grid, config.t_end, &config.scheme)?;

    let mut current = u0.clone();
    let mut gaps = Vec::new();
    let mut growth = 0;
    let mut status = PicardStatus::MaxIterations;
    for _ in 0..config.m_max {
        let next = if config.params.b == 0.0 {
            u0.clone()
        } else {
            let sources: Vec<ModeField> = current.snapshots.iter().map(|s| term.source(&s.u)).collect::<Result<_>>()?;
            let provider = |n: usize, _t: f64| Some(sources[n].clone());
            let d = duhamel(&provider, l_max, &config.spec, grid, config.t_end, &config.scheme)?;
            add_trajectories(&u0, &d)
        };
        let gap = sup_energy_distance(&next, &current, &op)?;
        if !gap.is_finite() {
            gaps.push(gap);
            status = PicardStatus::Diverged;
            current = next;
            break;
        }
        if let Some(&prev) = gaps.last() {
            growth = if gap > prev { growth + 1 } else { 0 };
        }
        gaps.push(gap);
        current = next;
        if gap <= config.tol {
            status = PicardStatus::Converged;
            break;
        }
        if growth >= 3 {
            status = PicardStatus::Diverged;
            break;
        }
    }
    let contraction_ratios = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let report = IterationReport {
        status,
        m_used: gaps.len(),
        iterate_gaps: gaps,
        contraction_ratios,
        converged: status == PicardStatus::Converged,
        tol: config.tol,
    };
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::{solve_semilinear, standard_bump_data, SemilinearConfig};
    use crate::radial::{bump_profile, RecordOptions};

    fn config(p: f64, b: f64, n: usize, t_end: f64) -> PicardConfig {
        PicardConfig {
            params: NonlinearityParams::new(p, b).unwrap(),
            spec: PotentialSpec::inverse_square(1.0).unwrap(),
            grid: RadialGrid::new(n, 1.0 + t_end).unwrap(),
            t_end,
            scheme: SchemeConfig::default(),
            m_max: 12,
            tol: 1e-14,
        }
    }

    #[test]
    fn selection_at_two_and_a_half() {
        let sel = parameter_select(2.5).unwrap();
        assert!((sel.params.s - 1.8).abs() < 1e-15);
        assert!((sel.params.delta - 0.1).abs() < 1e-15);
        assert!((sel.params.theta - 0.01).abs() < 1e-15);
        assert!((sel.params.sigma - 200.0).abs() < 1e-9);
        assert_eq!(sel.params.kappa, 4.0);
        assert!((sel.margins.delta_vs_exponent - 0.125).abs() < 1e-14);
        assert!(sel.margins.all_positive());
    }

    #[test]
    fn selection_rejects_exponents_outside_range() {
        for p in [2.0, STRAUSS_EXPONENT, 3.0, 3.5, f64::NAN] {
            match parameter_select(p) {
                Err(Error::Config { key, .. }) => assert_eq!(key, "nonlinear.p"),
                other => panic!("p = {p}: {other:?}"),
            }
        }
        for i in 1..50 {
            let p = STRAUSS_EXPONENT + (3.0 - STRAUSS_EXPONENT) * i as f64 / 50.0;
            assert!(parameter_select(p).unwrap().margins.all_positive());
        }
    }

    #[test]
    fn zero_source_gives_zero_duhamel_term() {
        let grid = RadialGrid::new(32, 3.0).unwrap();
        let d = duhamel(&NoSource, 2, &PotentialSpec::inverse_square(1.0).unwrap(), &grid, 2.0, &SchemeConfig::default()).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn duhamel_is_the_zero_data_linear_solve() {
        let grid = RadialGrid::new(64, 3.0).unwrap();
        let spec = PotentialSpec::inverse_square(1.0).unwrap();
        let mut f0 = ModeField::zeros(1, 64);
        for (j, &r) in grid.nodes().iter().enumerate() {
            f0.mode_mut(1, 0)[j] = bump_profile(r).0;
        }
        let provider = |_: usize, _: f64| Some(f0.clone());
        let d = duhamel(&provider, 1, &spec, &grid, 2.0, &SchemeConfig::default()).unwrap();
        let zero = ModeField::zeros(1, 64);
        let direct = solve_linear(&zero, &zero, &provider, &spec, &grid, 2.0, &SchemeConfig::default()).unwrap();
        assert_eq!(d, direct);
    }

    #[test]
    fn duhamel_matches_manufactured_solution() {
        // v*(t, r) = t² r³(1−r)⁴ has zero data and source 2φ + t² Aφ.
        let spec = PotentialSpec::inverse_square(1.0).unwrap();
        let t_end = 1.0;
        let mut errors = Vec::new();
        for n in [128, 256, 512] {
            let grid = RadialGrid::new(n, 2.0).unwrap();
            let l = 1;
            let lam = crate::harmonics::mode_eigenvalue(l);
            let (phi, aphi): (Vec<f64>, Vec<f64>) = grid
                .nodes()
                .iter()
                .map(|&r| {
                    let (v, _, d2) = bump_profile(r);
                    (v, -d2 + (spec.v(r).unwrap() + lam / (r * r)) * v)
                })
                .unzip();
            let provider = |_: usize, t: f64| {
                let mut s = ModeField::zeros(l, n);
                for j in 0..n {
                    s.mode_mut(l, 0)[j] = 2.0 * phi[j] + t * t * aphi[j];
                }
                Some(s)
            };
            let d = duhamel(&provider, l, &spec, &grid, t_end, &SchemeConfig::default()).unwrap();
            let last = d.last();
            let t = last.t;
            let h = grid.spacing();
            let err: f64 = (0..n).map(|j| (last.u.mode(l, 0)[j] - t * t * phi[j]).powi(2) * h).sum::<f64>().sqrt();
            errors.push(err);
        }
        let order = (errors[1] / errors[2]).log2();
        assert!((1.8..=2.2).contains(&order), "errors {errors:?}");
    }

    #[test]
    fn linear_iteration_is_stationary() {
        let cfg = config(2.5, 0.0, 64, 2.0);
        let (f, g) = standard_bump_data(&cfg.grid, 2, 0.5);
        let (traj, report) = picard_iterate(&f, &g, &cfg).unwrap();
        assert_eq!(report.m_used, 1);
        assert_eq!(report.iterate_gaps, vec![0.0]);
        assert!(report.converged);
        let u0 = solve_linear(&f, &g, &NoSource, &cfg.spec, &cfg.grid, cfg.t_end, &cfg.scheme).unwrap();
        assert_eq!(traj, u0);
    }

    #[test]
    fn fixed_point_matches_direct_solver() {
        let cfg = config(2.5, 1.0, 128, 2.0);
        let (f, g) = standard_bump_data(&cfg.grid, 2, 0.05);
        let (traj, report) = picard_iterate(&f, &g, &cfg).unwrap();
        assert!(report.converged, "{report:?}");
        assert!(report.contraction_ratios.iter().all(|&r| r < 1.0));
        let direct = SemilinearConfig {
            params: cfg.params,
            spec: cfg.spec,
            grid: cfg.grid.clone(),
            t_end: cfg.t_end,
            scheme: cfg.scheme,
            threshold_factor: 1e3,
            conformal: parameter_select(2.5).unwrap().params,
            diagnostics_stride: 1000,
            record: RecordOptions::default(),
        };
        let (sl, _) = solve_semilinear(&f, &g, &direct).unwrap();
        let op = RadialOperator::new(&cfg.grid, &cfg.spec, 2);
        let diff = sup_energy_distance(&traj, &sl, &op).unwrap();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn large_data_diverges() {
        let mut cfg = config(2.0, 1.0, 64, 6.0);
        cfg.m_max = 30;
        let (f, g) = standard_bump_data(&cfg.grid, 0, 40.0);
        let (_, report) = picard_iterate(&f, &g, &cfg).unwrap();
        assert_eq!(report.status, PicardStatus::Diverged, "{report:?}");
        assert!(!report.converged);
    }
}
