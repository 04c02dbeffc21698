//! The power nonlinearity F(u) = b|u|^{p−1}u, the semilinear evolution that
//! couples modes through physical space, the L^{2p} blow-up monitor, and the
//! sampled Lipschitz bounds for F.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{data_size, sobolev_energy, ConformalParams, ConformalTracker};
use crate::energy::weighted_amplitude_norm;
use crate::error::{Error, Result};
use crate::grids::RadialGrid;
use crate::harmonics::{mode_count, mode_degree_order, mode_eigenvalue, mode_index, ModeField, PhysicalField, SphericalTransform};
use crate::potential::PotentialSpec;
use crate::radial::{evolve, support_radius, Control, RadialOperator, RecordOptions, SchemeConfig, Trajectory, SUPPORT_TOL};

/// Default ratio of the monitored L^{2p} norm to its initial value at which
/// growth counts as blow-up.
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 1e3;

/// Floor for the initial norm in the blow-up test.
pub const MONITOR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityParams {
    pub p: f64,
    pub b: f64,
}

impl NonlinearityParams {
    pub fn new(p: f64, b: f64) -> Result<Self> {
        let params = Self { p, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p < 3.0) {
            return Err(Error::config("nonlinear.p", format!("must lie in (1, 3), got {}", self.p)));
        }
        if !self.b.is_finite() {
            return Err(Error::config("nonlinear.b", format!("must be finite, got {}", self.b)));
        }
        Ok(())
    }
}

/// b|u|^{p−1}u.
pub fn nonlinearity_pointwise(u: f64, params: &NonlinearityParams) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    params.b * u.abs().powf(params.p - 1.0) * u
}

/// F′(u) = b p |u|^{p−1}.
pub fn nonlinearity_derivative(u: f64, params: &NonlinearityParams) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    params.b * params.p * u.abs().powf(params.p - 1.0)
}

/// (∫ |u|^q dx)^{1/q} over the ball of radius r_max, by the staggered rule in
/// r and the transform quadrature on the sphere.
pub fn lq_norm(field: &PhysicalField, grid: &RadialGrid, transform: &SphericalTransform, q: f64) -> f64 {
    let quad = transform.quadrature().nodes();
    let peak = field.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return peak;
    }
    let sum: f64 = (0..grid.len())
        .map(|j| {
            let r = grid.node(j);
            r * r * field.row(j).iter().zip(quad).map(|(u, n)| n.weight * (u.abs() / peak).powf(q)).sum::<f64>()
        })
        .sum::<f64>()
        * grid.spacing();
    peak * sum.powf(1.0 / q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum MonitorStatus {
    Quiet,
    Tripped { t: f64 },
}

/// Online form of the blow-up test: the first observation fixes the
/// reference level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupMonitor {
    factor: f64,
    reference: Option<f64>,
    status: MonitorStatus,
}

impl BlowupMonitor {
    pub fn new(factor: f64) -> Result<Self> {
        if !(factor > 1.0 && factor.is_finite()) {
            return Err(Error::config("monitor.threshold_factor", format!("must exceed 1, got {factor}")));
        }
        Ok(Self { factor, reference: None, status: MonitorStatus::Quiet })
    }

    pub fn observe(&mut self, t: f64, norm: f64) -> MonitorStatus {
        let reference = *self.reference.get_or_insert(norm.max(MONITOR_FLOOR));
        if self.status == MonitorStatus::Quiet && norm > self.factor * reference {
            self.status = MonitorStatus::Tripped { t };
        }
        self.status
    }

    pub fn status(&self) -> MonitorStatus {
        self.status
    }
}

/// Blow-up test over a series of (t, ‖u(t)‖_{L^{2p}}) in time order.
pub fn blowup_monitor(series: &[(f64, f64)], threshold_factor: f64) -> Result<MonitorStatus> {
    let mut monitor = BlowupMonitor::new(threshold_factor)?;
    for &(t, norm) in series {
        if let MonitorStatus::Tripped { .. } = monitor.observe(t, norm) {
            break;
        }
    }
    Ok(monitor.status())
}

/// Blow-up test on the recorded snapshots of a trajectory.
pub fn blowup_monitor_trajectory(
    traj: &Trajectory,
    params: &NonlinearityParams,
    transform: &SphericalTransform,
    threshold_factor: f64,
) -> Result<MonitorStatus> {
    let series = traj
        .snapshots
        .iter()
        .map(|s| Ok((s.t, lq_norm(&transform.inverse(&s.u, &traj.grid)?, &traj.grid, transform, 2.0 * params.p))))
        .collect::<Result<Vec<_>>>()?;
    blowup_monitor(&series, threshold_factor)
}

/// Evaluation of F(u) in mode space: synthesis on an oversampled sphere
/// quadrature, the pointwise power, and projection back onto the modes.
#[derive(Debug, Clone)]
pub struct NonlinearTerm {
    params: NonlinearityParams,
    transform: SphericalTransform,
    grid: RadialGrid,
}

impl NonlinearTerm {
    /// Quadrature of degree 2·l_max, which keeps aliasing of |u|^{p−1}u out
    /// of the retained modes.
    pub fn new(params: NonlinearityParams, grid: &RadialGrid, l_max: usize) -> Self {
        Self {
            params,
            transform: SphericalTransform::new(l_max, 2 * l_max),
            grid: grid.clone(),
        }
    }

    pub fn params(&self) -> &NonlinearityParams {
        &self.params
    }

    pub fn transform(&self) -> &SphericalTransform {
        &self.transform
    }

    pub fn physical(&self, u: &ModeField) -> Result<PhysicalField> {
        self.transform.inverse(u, &self.grid)
    }

    /// F(u) projected onto the modes, from the physical values of u.
    pub fn source_from_physical(&self, physical: &PhysicalField) -> Result<ModeField> {
        let params = self.params;
        let fu = physical.map(move |x| nonlinearity_pointwise(x, &params));
        self.transform.forward(&fu, &self.grid)
    }

    pub fn source(&self, u: &ModeField) -> Result<ModeField> {
        self.source_from_physical(&self.physical(u)?)
    }

    pub fn l2p_norm(&self, physical: &PhysicalField) -> f64 {
        lq_norm(physical, &self.grid, &self.transform, 2.0 * self.params.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Blowup,
    Overflow,
}

/// Per-step diagnostics, one CSV row each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub eta_ratio: f64,
    pub l2p_norm: f64,
    pub conformal_lhs: f64,
    pub conformal_rhs: f64,
    pub support_radius: f64,
    pub triple_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub status: RunStatus,
    pub monitor: MonitorStatus,
    pub last_valid_t: f64,
    pub eta: f64,
    pub rows: Vec<StepDiagnostics>,
}

impl DiagnosticsReport {
    pub fn max_energy_ratio(&self) -> f64 {
        let e0 = self.rows.first().map_or(0.0, |r| r.energy);
        if e0 == 0.0 {
            return 0.0;
        }
        self.rows.iter().map(|r| r.energy / e0).fold(0.0, f64::max)
    }

    pub fn max_triple_norm_ratio(&self) -> f64 {
        let n0 = self.rows.first().map_or(0.0, |r| r.triple_norm);
        if n0 == 0.0 {
            return 0.0;
        }
        self.rows.iter().map(|r| r.triple_norm / n0).fold(0.0, f64::max)
    }

    pub fn max_conformal_ratio(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| if r.conformal_rhs > 0.0 { r.conformal_lhs / r.conformal_rhs } else { 0.0 })
            .fold(0.0, f64::max)
    }
}

/// Everything a semilinear run needs besides its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemilinearConfig {
    pub params: NonlinearityParams,
    pub spec: PotentialSpec,
    pub grid: RadialGrid,
    pub t_end: f64,
    pub scheme: SchemeConfig,
    pub threshold_factor: f64,
    /// Weights of the conformal and amplitude diagnostics.
    pub conformal: ConformalParams,
    /// Diagnostics are evaluated every this many steps (and at the end).
    pub diagnostics_stride: usize,
    pub record: RecordOptions,
}

/// Semilinear evolution with per-step diagnostics. The run halts when the
/// monitor trips (status Blowup) or a non-finite value appears (Overflow).
pub fn solve_semilinear(f: &ModeField, g: &ModeField, config: &SemilinearConfig) -> Result<(Trajectory, DiagnosticsReport)> {
    config.params.validate()?;
    config.conformal.validate()?;
    let grid = &config.grid;
    let l_max = f.l_max();
    let term = NonlinearTerm::new(config.params, grid, l_max);
    let op = RadialOperator::new(grid, &config.spec, l_max);
    let eta = data_size(f, g, &op);
    let schedule = config.scheme.schedule(grid, config.t_end)?;
    let stride = config.diagnostics_stride.max(1);
    let linear = config.params.b == 0.0;

    let mut monitor = BlowupMonitor::new(config.threshold_factor)?;
    let mut tracker = ConformalTracker::new(f, g, grid, config.conformal);
    let mut rows = Vec::new();
    let mut status = RunStatus::Completed;
    let mut last_valid_t = 0.0;
    // Physical field and source of the level most recently handed to the
    // solver, reused by the observer.
    let current: RefCell<Option<(usize, PhysicalField, Option<ModeField>)>> = RefCell::new(None);

    let traj = evolve(
        f,
        g,
        &config.spec,
        grid,
        config.t_end,
        &config.scheme,
        config.record,
        |n, _, u| {
            let phys = term.physical(u)?;
            let src = if linear { None } else { Some(term.source_from_physical(&phys)?) };
            *current.borrow_mut() = Some((n, phys, src.clone()));
            Ok(src)
        },
        |snap| {
            let (n, phys, src) = current.borrow_mut().take().expect("source evaluated before observation");
            debug_assert_eq!(n, snap.step);
            if !(snap.u.is_finite() && snap.ut.is_finite() && src.as_ref().is_none_or(|s| s.is_finite())) {
                status = RunStatus::Overflow;
                return Ok(Control::Stop);
            }
            let l2p = term.l2p_norm(&phys);
            let tripped = matches!(monitor.observe(snap.t, l2p), MonitorStatus::Tripped { .. });
            let report = tracker.push(snap.t, &snap.u, &snap.ut, src.as_ref());
            if snap.step % stride == 0 || snap.step == schedule.n_steps || tripped {
                let energy = sobolev_energy(&snap.u, &snap.ut, &op).total();
                rows.push(StepDiagnostics {
                    t: snap.t,
                    energy,
                    eta_ratio: if eta > 0.0 { energy / eta } else { 0.0 },
                    l2p_norm: l2p,
                    conformal_lhs: report.lhs,
                    conformal_rhs: report.rhs,
                    support_radius: support_radius(&snap.u, grid, SUPPORT_TOL),
                    triple_norm: weighted_amplitude_norm(snap.t, &snap.u, grid, term.transform(), &config.conformal)?,
                });
            }
            last_valid_t = snap.t;
            if tripped {
                status = RunStatus::Blowup;
                return Ok(Control::Stop);
            }
            Ok(Control::Continue)
        },
    )?;
    let report = DiagnosticsReport { status, monitor: monitor.status(), last_valid_t, eta, rows };
    Ok((traj, report))
}

/// Diagnostics rows of a trajectory that recorded every step, with the
/// source F(u) of each level recomputed from the recorded field.
pub fn trajectory_diagnostics(
    traj: &Trajectory,
    params: NonlinearityParams,
    spec: &PotentialSpec,
    conformal: &ConformalParams,
    stride: usize,
) -> Result<Vec<StepDiagnostics>> {
    if traj.snapshots.len() != traj.schedule.n_steps + 1 {
        return Err(Error::Contract("diagnostics need every step of the trajectory".into()));
    }
    let grid = &traj.grid;
    let l_max = traj.l_max();
    let term = NonlinearTerm::new(params, grid, l_max);
    let op = RadialOperator::new(grid, spec, l_max);
    let first = &traj.snapshots[0];
    let eta = data_size(&first.u, &first.ut, &op);
    let mut tracker = ConformalTracker::new(&first.u, &first.ut, grid, *conformal);
    let stride = stride.max(1);
    let mut rows = Vec::new();
    for snap in &traj.snapshots {
        let phys = term.physical(&snap.u)?;
        let src = if params.b == 0.0 { None } else { Some(term.source_from_physical(&phys)?) };
        let report = tracker.push(snap.t, &snap.u, &snap.ut, src.as_ref());
        if snap.step % stride == 0 || snap.step == traj.schedule.n_steps {
            let energy = sobolev_energy(&snap.u, &snap.ut, &op).total();
            rows.push(StepDiagnostics {
                t: snap.t,
                energy,
                eta_ratio: if eta > 0.0 { energy / eta } else { 0.0 },
                l2p_norm: term.l2p_norm(&phys),
                conformal_lhs: report.lhs,
                conformal_rhs: report.rhs,
                support_radius: support_radius(&snap.u, grid, SUPPORT_TOL),
                triple_norm: weighted_amplitude_norm(snap.t, &snap.u, grid, term.transform(), conformal)?,
            });
        }
    }
    Ok(rows)
}

/// Radial profile a r^{ℓ+1}(1 − (r/w)²)⁴₊ of a sampled mode, with its first
/// and second derivatives.
fn sample_profile(l: usize, a: f64, w: f64, r: f64) -> (f64, f64, f64) {
    if r >= w {
        return (0.0, 0.0, 0.0);
    }
    let e = (l + 1) as f64;
    let q = 1.0 - (r / w).powi(2);
    let dq = -2.0 * r / (w * w);
    let d2q = -2.0 / (w * w);
    let (p, dp, d2p) = (r.powf(e), e * r.powf(e - 1.0), e * (e - 1.0) * r.powf(e - 2.0).min(f64::MAX));
    let d2p = if l == 0 { 0.0 } else { d2p };
    let (b, db, d2b) = (q.powi(4), 4.0 * q.powi(3) * dq, 12.0 * q * q * dq * dq + 4.0 * q.powi(3) * d2q);
    (a * p * b, a * (dp * b + p * db), a * (d2p * b + 2.0 * dp * db + p * d2b))
}

/// A random band-limited field given by one sampled profile per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    l_max: usize,
    /// (amplitude, width) per mode index.
    terms: Vec<(f64, f64)>,
}

impl SampledField {
    pub fn random(rng: &mut impl Rng, l_max: usize, scale: f64) -> Self {
        let terms = (0..mode_count(l_max))
            .map(|_| (scale * rng.random_range(-1.0..1.0), rng.random_range(0.5..1.0)))
            .collect();
        Self { l_max, terms }
    }

    pub fn zero(l_max: usize) -> Self {
        Self { l_max, terms: vec![(0.0, 1.0); mode_count(l_max)] }
    }

    fn modes(&self, grid: &RadialGrid, which: usize) -> ModeField {
        let mut out = ModeField::zeros(self.l_max, grid.len());
        for (m, &(a, w)) in self.terms.iter().enumerate() {
            let l = mode_degree_order(m).0;
            for (o, &r) in out.row_mut(m).iter_mut().zip(grid.nodes()) {
                let (v, d1, d2) = sample_profile(l, a, w, r);
                *o = match which {
                    0 => v,
                    1 => d1 - v / r,
                    _ => d2 - mode_eigenvalue(l) * v / (r * r),
                };
            }
        }
        out
    }

    /// Mode coefficients v_m(r_j).
    pub fn coefficients(&self, grid: &RadialGrid) -> ModeField {
        self.modes(grid, 0)
    }

    /// Coefficients whose synthesis is ∂r u.
    pub fn radial_derivative(&self, grid: &RadialGrid) -> ModeField {
        self.modes(grid, 1)
    }

    /// Coefficients (v″ − λ v/r²) whose synthesis is Δu.
    pub fn laplacian(&self, grid: &RadialGrid) -> ModeField {
        self.modes(grid, 2)
    }

    pub fn difference<'a>(&'a self, other: &'a SampledField) -> SampledFieldPair<'a> {
        SampledFieldPair { a: self, b: other }
    }
}

/// The difference of two sampled fields, evaluated termwise.
pub struct SampledFieldPair<'a> {
    a: &'a SampledField,
    b: &'a SampledField,
}

impl SampledFieldPair<'_> {
    fn apply(&self, grid: &RadialGrid, f: impl Fn(&SampledField, &RadialGrid) -> ModeField) -> ModeField {
        f(self.a, grid).difference(&f(self.b, grid))
    }
}

/// Values of u, ∂r u and R_c u on the physical grid of a transform.
struct PointwiseField {
    u: PhysicalField,
    ur: PhysicalField,
    rot: [PhysicalField; 3],
}

impl PointwiseField {
    fn new(coeffs: &ModeField, radial: &ModeField, grid: &RadialGrid, t: &SphericalTransform) -> Result<Self> {
        Ok(Self {
            u: t.inverse(coeffs, grid)?,
            ur: t.inverse(radial, grid)?,
            rot: [
                t.rotation_field(coeffs, grid, 0)?,
                t.rotation_field(coeffs, grid, 1)?,
                t.rotation_field(coeffs, grid, 2)?,
            ],
        })
    }
}

fn physical_l2(values: impl Fn(usize, usize) -> f64 + Sync, grid: &RadialGrid, t: &SphericalTransform) -> f64 {
    let quad = t.quadrature().nodes();
    let sum: f64 = (0..grid.len())
        .map(|j| {
            let r = grid.node(j);
            r * r * quad.iter().enumerate().map(|(q, n)| n.weight * values(j, q).powi(2)).sum::<f64>()
        })
        .sum();
    (sum * grid.spacing()).sqrt()
}

/// Ratios of the sampled Lipschitz bounds for F.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub samples: usize,
    pub skipped: usize,
    /// max ‖F(u) − F(v)‖ / [(N(u)^{p−1} + N(v)^{p−1}) N(u − v)]
    pub max_ratio: f64,
    /// The same at gradient level with N extended by ‖Δ·‖.
    pub max_gradient_ratio: f64,
}

/// Samples `sample_count` random pairs (u, v) of band-limited fields
/// supported in the unit ball (every fifth pair has v = 0) and records the
/// largest Lipschitz ratios for F, with N(·) = ‖·‖ + ‖∇·‖ and
/// N₂(·) = N(·) + ‖Δ·‖.
pub fn check_lipschitz_nonlinearity(
    sample_count: usize,
    seed: u64,
    params: &NonlinearityParams,
    grid: &RadialGrid,
    l_max: usize,
) -> Result<LipschitzReport> {
    if sample_count < 100 {
        return Err(Error::config("samples", format!("needs at least 100 samples, got {sample_count}")));
    }
    params.validate()?;
    let transform = SphericalTransform::new(l_max, 2 * l_max);
    let free = RadialOperator::with_potential(grid, l_max, |_| 0.0);
    let h = grid.spacing();
    let results: Vec<Option<(f64, f64)>> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let scale = 10f64.powf(rng.random_range(-1.0..1.0));
            let u = SampledField::random(&mut rng, l_max, scale);
            let v = if i % 5 == 0 { SampledField::zero(l_max) } else { SampledField::random(&mut rng, l_max, scale) };
            let diff = u.difference(&v);
            let n1 = |c: &ModeField| crate::energy::l2_squared(c, h).sqrt() + crate::energy::form_squared(c, &free).max(0.0).sqrt();
            let lap = |c: &ModeField| crate::energy::l2_squared(c, h).sqrt();
            let (cu, cv) = (u.coefficients(grid), v.coefficients(grid));
            let cd = diff.apply(grid, SampledField::coefficients);
            let nd = n1(&cd);
            if nd < 1e-14 {
                return Ok(None);
            }
            let pu = PointwiseField::new(&cu, &u.radial_derivative(grid), grid, &transform)?;
            let pv = PointwiseField::new(&cv, &v.radial_derivative(grid), grid, &transform)?;
            let na = transform.quadrature().len();
            let at = |f: &PhysicalField, j: usize, q: usize| f.as_slice()[j * na + q];
            let fdiff = physical_l2(
                |j, q| nonlinearity_pointwise(at(&pu.u, j, q), params) - nonlinearity_pointwise(at(&pv.u, j, q), params),
                grid,
                &transform,
            );
            let (nu, nv) = (n1(&cu), n1(&cv));
            let ratio = fdiff / ((nu.powf(params.p - 1.0) + nv.powf(params.p - 1.0)) * nd);

            // |∇w|² = (∂r w)² + Σ_c (R_c w)²/r² for w = F(u) − F(v).
            let grad = {
                let quad = transform.quadrature().nodes();
                let sum: f64 = (0..grid.len())
                    .map(|j| {
                        let r = grid.node(j);
                        (0..na)
                            .map(|q| {
                                let (du, dv) = (
                                    nonlinearity_derivative(at(&pu.u, j, q), params),
                                    nonlinearity_derivative(at(&pv.u, j, q), params),
                                );
                                let radial = du * at(&pu.ur, j, q) - dv * at(&pv.ur, j, q);
                                let ang: f64 = (0..3)
                                    .map(|c| (du * at(&pu.rot[c], j, q) - dv * at(&pv.rot[c], j, q)).powi(2))
                                    .sum();
                                quad[q].weight * (radial * radial + ang / (r * r))
                            })
                            .sum::<f64>()
                            * r
                            * r
                    })
                    .sum();
                (sum * h).sqrt()
            };
            let n2 = |c: &ModeField, s: &ModeField| n1(c) + lap(s);
            let (n2u, n2v) = (n2(&cu, &u.laplacian(grid)), n2(&cv, &v.laplacian(grid)));
            let n2d = n2(&cd, &diff.apply(grid, SampledField::laplacian));
            let gratio = grad / ((n2u.powf(params.p - 1.0) + n2v.powf(params.p - 1.0)) * n2d);
            Ok(Some((ratio, gratio)))
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let (max_ratio, max_gradient_ratio) = results
        .iter()
        .flatten()
        .fold((0.0f64, 0.0f64), |(a, b), &(x, y)| (a.max(x), b.max(y)));
    Ok(LipschitzReport { samples: sample_count, skipped, max_ratio, max_gradient_ratio })
}

/// Coefficients of the bump r³(1 − r)⁴₊ scaled so that a monopole term of
/// weight 1 has physical peak 1.
pub fn unit_bump(r: f64) -> f64 {
    const PEAK: f64 = 729.0 / 16.0;
    (4.0 * std::f64::consts::PI).sqrt() * PEAK * crate::radial::bump_profile(r).0
}

/// The standard data (f, g) at amplitude ε: f has monopole, dipole and
/// quadrupole parts, g is a monopole, all proportional to [`unit_bump`].
pub fn standard_bump_data(grid: &RadialGrid, l_max: usize, epsilon: f64) -> (ModeField, ModeField) {
    let mut f = ModeField::zeros(l_max, grid.len());
    let mut g = ModeField::zeros(l_max, grid.len());
    let parts: [(usize, i64, f64); 3] = [(0, 0, 1.0), (1, 1, 0.5), (2, 0, 0.25)];
    for &(l, k, weight) in parts.iter().filter(|p| p.0 <= l_max) {
        for (o, &r) in f.row_mut(mode_index(l, k)).iter_mut().zip(grid.nodes()) {
            *o = epsilon * weight * unit_bump(r);
        }
    }
    for (o, &r) in g.row_mut(0).iter_mut().zip(grid.nodes()) {
        *o = epsilon * unit_bump(r);
    }
    (f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{solve_linear, NoSource};

    #[test]
    fn pointwise_values() {
        let p2 = NonlinearityParams::new(2.0, 1.0).unwrap();
        assert_eq!(nonlinearity_pointwise(0.0, &p2), 0.0);
        assert_eq!(nonlinearity_pointwise(-3.0, &p2), -9.0);
        let p25 = NonlinearityParams::new(2.5, 1.0).unwrap();
        assert!((nonlinearity_pointwise(2.0, &p25) - 2f64.powf(2.5)).abs() < 1e-14);
        assert!((nonlinearity_pointwise(2.0, &p25) - 5.656_854_249_492_38).abs() < 1e-12);
        assert!(NonlinearityParams::new(3.0, 1.0).is_err());
        assert!(NonlinearityParams::new(1.0, 1.0).is_err());
        assert!(NonlinearityParams::new(2.0, f64::NAN).is_err());
    }

    #[test]
    fn monitor_thresholds() {
        assert_eq!(blowup_monitor(&[(0.0, 0.0), (1.0, 0.0)], 1e3).unwrap(), MonitorStatus::Quiet);
        // ‖e^t φ‖ = e^t ‖φ‖ crosses 10³‖φ‖ at t = ln 10³.
        let dt = 1e-4;
        let series: Vec<_> = (0..100_000).map(|k| (k as f64 * dt, (k as f64 * dt).exp() * 0.3)).collect();
        match blowup_monitor(&series, 1e3).unwrap() {
            MonitorStatus::Tripped { t } => assert!((t - 1e3f64.ln()).abs() < 2.0 * dt, "{t}"),
            MonitorStatus::Quiet => panic!("monitor did not trip"),
        }
        assert!(BlowupMonitor::new(1.0).is_err());
    }

    #[test]
    fn standard_bump_peak() {
        let grid = RadialGrid::new(3000, 1.0).unwrap();
        let (f, _) = standard_bump_data(&grid, 0, 1.0);
        let t = SphericalTransform::new(0, 0);
        let phys = t.inverse(&f, &grid).unwrap();
        let peak = phys.as_slice().iter().fold(0.0f64, |m, x| m.max(*x));
        assert!((peak - 1.0).abs() < 1e-5);
    }

    fn config(b: f64, t_end: f64, n: usize, l_max: usize) -> (SemilinearConfig, ModeField, ModeField) {
        let grid = RadialGrid::new(n, 1.0 + t_end).unwrap();
        let (f, g) = standard_bump_data(&grid, l_max, 1e-2);
        let cfg = SemilinearConfig {
            params: NonlinearityParams::new(2.5, b).unwrap(),
            spec: PotentialSpec::inverse_square(1.0).unwrap(),
            grid,
            t_end,
            scheme: SchemeConfig::default(),
            threshold_factor: DEFAULT_THRESHOLD_FACTOR,
            conformal: ConformalParams::new(1.8, 0.1, 0.01, 4.0).unwrap(),
            diagnostics_stride: 1,
            record: RecordOptions::default(),
        };
        (cfg, f, g)
    }

    #[test]
    fn zero_coupling_reproduces_linear_solver() {
        let (cfg, f, g) = config(0.0, 2.0, 96, 2);
        let (traj, rep) = solve_semilinear(&f, &g, &cfg).unwrap();
        let lin = solve_linear(&f, &g, &NoSource, &cfg.spec, &cfg.grid, cfg.t_end, &cfg.scheme).unwrap();
        assert_eq!(traj, lin);
        assert_eq!(rep.status, RunStatus::Completed);
        assert_eq!(rep.monitor, MonitorStatus::Quiet);
    }

    #[test]
    fn post_hoc_diagnostics_match_in_run_rows() {
        let (cfg, f, g) = config(1.0, 2.0, 96, 2);
        let (traj, rep) = solve_semilinear(&f, &g, &cfg).unwrap();
        let rows = trajectory_diagnostics(&traj, cfg.params, &cfg.spec, &cfg.conformal, 1).unwrap();
        assert_eq!(rows, rep.rows);
    }

    #[test]
    fn odd_symmetry_is_exact() {
        let (cfg, f, g) = config(1.0, 2.0, 96, 2);
        let (a, _) = solve_semilinear(&f, &g, &cfg).unwrap();
        let (b, _) = solve_semilinear(&f.scaled(-1.0), &g.scaled(-1.0), &cfg).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.u.scaled(-1.0), y.u);
        }
    }

    #[test]
    fn oversampled_source_of_quadratic_power_is_exact() {
        // For p = 2 with u ≥ 0 a monopole, F(u) = u² stays a monopole.
        let grid = RadialGrid::new(16, 2.0).unwrap();
        let term = NonlinearTerm::new(NonlinearityParams::new(2.0, 1.0).unwrap(), &grid, 2);
        let mut u = ModeField::zeros(2, 16);
        for (o, &r) in u.row_mut(0).iter_mut().zip(grid.nodes()) {
            *o = unit_bump(r / 2.0);
        }
        let src = term.source(&u).unwrap();
        let y00 = 0.5 / std::f64::consts::PI.sqrt();
        for (j, &r) in grid.nodes().iter().enumerate() {
            let phys = u.row(0)[j] / r * y00;
            assert!((src.row(0)[j] - r * phys * phys / y00).abs() < 1e-12);
            for m in 1..src.n_modes() {
                assert!(src.row(m)[j].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn lipschitz_ratios_are_finite_and_stable() {
        let params = NonlinearityParams::new(2.5, 1.0).unwrap();
        let coarse = check_lipschitz_nonlinearity(100, 7, &params, &RadialGrid::new(256, 1.0).unwrap(), 2).unwrap();
        let fine = check_lipschitz_nonlinearity(100, 7, &params, &RadialGrid::new(512, 1.0).unwrap(), 2).unwrap();
        assert!(coarse.max_ratio.is_finite() && coarse.max_ratio > 0.0);
        assert!(coarse.max_gradient_ratio.is_finite() && coarse.max_gradient_ratio > 0.0);
        assert!((fine.max_ratio / coarse.max_ratio - 1.0).abs() < 0.2);
        assert!((fine.max_gradient_ratio / coarse.max_gradient_ratio - 1.0).abs() < 0.2);
        assert!(check_lipschitz_nonlinearity(10, 7, &params, &RadialGrid::new(64, 1.0).unwrap(), 2).is_err());
    }
}
