//! Leapfrog evolution of the reduced radial equations
//! (∂t² − ∂r²)v + (V + λ_ℓ/r²)v = F for every spherical-harmonic mode.
//!
//! The potential term is averaged over the outer time levels, so each step is
//! explicit while the time step stays O(h) for every ℓ. The coefficients are
//! extended oddly across r = 0 (ghost v_{-1} = -v_0) and vanish at r_max.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{RadialGrid, MIN_RUN_NODES};
use crate::harmonics::{mode_degree_order, mode_eigenvalue, ModeField};
use crate::potential::PotentialSpec;

/// Threshold below which a coefficient counts as zero for support detection.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Time-step control. With cfl = 1 the stencil moves exactly one cell per
/// step, so compactly supported data stay inside the light cone; smaller
/// values let dispersive tails leak ahead of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub cfl: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { cfl: 1.0 }
    }
}

impl SchemeConfig {
    pub fn new(cfl: f64) -> Result<Self> {
        let s = Self { cfl };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config("scheme.cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        Ok(())
    }

    /// Number of steps and step size reaching `t_end` exactly with
    /// dt ≤ cfl·h.
    pub fn schedule(&self, grid: &RadialGrid, t_end: f64) -> Result<StepSchedule> {
        self.validate()?;
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::config("run.T_end", format!("must be finite and nonnegative, got {t_end}")));
        }
        let nominal = self.cfl * grid.spacing();
        let n_steps = ((t_end / nominal) - 1e-9).ceil().max(0.0) as usize;
        let dt = if n_steps == 0 { nominal } else { t_end / n_steps as f64 };
        Ok(StepSchedule { n_steps, dt, t_end })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub n_steps: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl StepSchedule {
    pub fn time(&self, step: usize) -> f64 {
        if step == self.n_steps {
            self.t_end
        } else {
            step as f64 * self.dt
        }
    }
}

/// Checks the geometric preconditions of an evolution on `grid` up to `t_end`.
pub fn validate_run_grid(grid: &RadialGrid, t_end: f64) -> Result<()> {
    if grid.len() < MIN_RUN_NODES {
        return Err(Error::config(
            "grid.J",
            format!("evolution needs at least {MIN_RUN_NODES} nodes, got {}", grid.len()),
        ));
    }
    if grid.r_max() < 1.0 + t_end - 1e-12 {
        return Err(Error::config(
            "grid.r_max",
            format!("must be at least 1 + T_end = {}, got {}", 1.0 + t_end, grid.r_max()),
        ));
    }
    Ok(())
}

/// The mode operators L_ℓ = -D + W_ℓ on a grid, with D the three-point
/// second difference and W_ℓ = V + λ_ℓ/r².
#[derive(Debug, Clone)]
pub struct RadialOperator {
    grid: RadialGrid,
    /// W_ℓ(r_j) at ℓ·J + j.
    w: Vec<f64>,
    l_max: usize,
}

impl RadialOperator {
    pub fn new(grid: &RadialGrid, spec: &PotentialSpec, l_max: usize) -> Self {
        Self::with_potential(grid, l_max, |r| spec.v_unchecked(r))
    }

    /// Operator with an arbitrary potential profile (V ≡ 0 for the free
    /// Laplacian).
    pub fn with_potential(grid: &RadialGrid, l_max: usize, v: impl Fn(f64) -> f64) -> Self {
        let mut w = Vec::with_capacity((l_max + 1) * grid.len());
        for l in 0..=l_max {
            let lam = mode_eigenvalue(l);
            w.extend(grid.nodes().iter().map(|&r| v(r) + lam / (r * r)));
        }
        Self { grid: grid.clone(), w, l_max }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn weight(&self, l: usize) -> &[f64] {
        let n = self.grid.len();
        &self.w[l * n..(l + 1) * n]
    }

    /// (Dv)_j with the odd ghost at the origin and zero at r_max.
    pub fn second_difference(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let inv_h2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        for j in 0..n {
            let left = if j == 0 { -v[0] } else { v[j - 1] };
            let right = if j + 1 == n { 0.0 } else { v[j + 1] };
            out[j] = (left - 2.0 * v[j] + right) * inv_h2;
        }
    }

    /// L_ℓ v = -Dv + W_ℓ v.
    pub fn apply(&self, l: usize, v: &[f64], out: &mut [f64]) {
        self.second_difference(v, out);
        for ((o, &w), &x) in out.iter_mut().zip(self.weight(l)).zip(v) {
            *o = -*o + w * x;
        }
    }

    /// Forward differences (v_{j+1} - v_j)/h with v_J = 0.
    pub fn forward_difference(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let h = self.grid.spacing();
        for j in 0..n {
            let right = if j + 1 == n { 0.0 } else { v[j + 1] };
            out[j] = (right - v[j]) / h;
        }
    }

    /// Discrete quadratic form q(v) = h⟨v, L_ℓ v⟩.
    pub fn quadratic_form(&self, l: usize, v: &[f64]) -> f64 {
        let mut lv = vec![0.0; v.len()];
        self.apply(l, v, &mut lv);
        self.grid.spacing() * v.iter().zip(&lv).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Source of the inhomogeneity F at step n (time t). `None` means zero.
pub trait Source: Sync {
    fn at(&self, step: usize, t: f64) -> Option<ModeField>;
}

/// The zero source.
pub struct NoSource;

impl Source for NoSource {
    fn at(&self, _: usize, _: f64) -> Option<ModeField> {
        None
    }
}

impl<F> Source for F
where
    F: Fn(usize, f64) -> Option<ModeField> + Sync,
{
    fn at(&self, step: usize, t: f64) -> Option<ModeField> {
        self(step, t)
    }
}

/// The leapfrog update for a fixed grid, potential and step size.
#[derive(Debug, Clone)]
pub struct LeapfrogEvolver {
    op: RadialOperator,
    dt: f64,
    /// 1 / (1 + dt² W / 2), laid out like the operator weights.
    inv_denom: Vec<f64>,
}

impl LeapfrogEvolver {
    pub fn new(op: RadialOperator, dt: f64) -> Self {
        let inv_denom = op.w.iter().map(|&w| 1.0 / (1.0 + 0.5 * dt * dt * w)).collect();
        Self { op, dt, inv_denom }
    }

    pub fn operator(&self) -> &RadialOperator {
        &self.op
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn check(&self, field: &ModeField) -> Result<()> {
        if field.n_radial() != self.op.grid.len() || field.l_max() > self.op.l_max {
            return Err(Error::Contract(format!(
                "mode field (l_max {}, {} nodes) does not fit evolver (l_max {}, {} nodes)",
                field.l_max(),
                field.n_radial(),
                self.op.l_max,
                self.op.grid.len()
            )));
        }
        Ok(())
    }

    /// v^{n+1} = [2v^n + dt²(Dv^n + F^n)] / (1 + dt²W/2) - v^{n-1}.
    pub fn step(&self, prev: &ModeField, cur: &ModeField, source: Option<&ModeField>) -> Result<ModeField> {
        self.check(prev)?;
        self.check(cur)?;
        if !prev.same_shape(cur) || source.is_some_and(|s| !s.same_shape(cur)) {
            return Err(Error::Contract("leapfrog levels differ in shape".into()));
        }
        let n = cur.n_radial();
        let mut next = ModeField::zeros(cur.l_max(), n);
        next.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(m, out)| {
            let (l, _) = mode_degree_order(m);
            self.step_row(l, prev.row(m), cur.row(m), source.map(|s| s.row(m)), out);
        });
        Ok(next)
    }

    /// The update for a single mode of degree `l`.
    pub fn step_row(&self, l: usize, prev: &[f64], cur: &[f64], source: Option<&[f64]>, out: &mut [f64]) {
        let n = cur.len();
        let dt2 = self.dt * self.dt;
        let inv = &self.inv_denom[l * n..(l + 1) * n];
        self.op.second_difference(cur, out);
        for j in 0..n {
            let f = source.map_or(0.0, |s| s[j]);
            out[j] = (2.0 * cur[j] + dt2 * (out[j] + f)) * inv[j] - prev[j];
        }
    }

    /// The Taylor start for a single mode of degree `l`.
    pub fn first_step_row(&self, l: usize, f: &[f64], g: &[f64], source: Option<&[f64]>, out: &mut [f64]) {
        let dt = self.dt;
        let w = self.op.weight(l);
        self.op.second_difference(f, out);
        for j in 0..f.len() {
            let src = source.map_or(0.0, |s| s[j]);
            out[j] = f[j] + dt * g[j] + 0.5 * dt * dt * (out[j] - w[j] * f[j] + src);
        }
    }

    /// v¹ = f + dt g + (dt²/2)(Df - Wf + F⁰).
    pub fn first_step(&self, f: &ModeField, g: &ModeField, source: Option<&ModeField>) -> Result<ModeField> {
        self.check(f)?;
        if !f.same_shape(g) || source.is_some_and(|s| !s.same_shape(f)) {
            return Err(Error::Contract("initial data differ in shape".into()));
        }
        let n = f.n_radial();
        let mut next = ModeField::zeros(f.l_max(), n);
        next.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(m, out)| {
            let (l, _) = mode_degree_order(m);
            self.first_step_row(l, f.row(m), g.row(m), source.map(|s| s.row(m)), out);
        });
        Ok(next)
    }
}

/// One leapfrog update with a freshly assembled operator.
pub fn leapfrog_step(
    prev: &ModeField,
    cur: &ModeField,
    source: Option<&ModeField>,
    spec: &PotentialSpec,
    grid: &RadialGrid,
    dt: f64,
) -> Result<ModeField> {
    let op = RadialOperator::new(grid, spec, cur.l_max());
    LeapfrogEvolver::new(op, dt).step(prev, cur, source)
}

/// State of an evolution at one time level. The velocity is the centered
/// difference of the neighbouring levels (the datum g at t = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: ModeField,
    pub ut: ModeField,
    pub source: Option<ModeField>,
}

impl Snapshot {
    /// Outer edge of the last cell holding a coefficient above `tol`.
    pub fn support_radius(&self, grid: &RadialGrid, tol: f64) -> f64 {
        support_radius(&self.u, grid, tol)
    }
}

pub fn support_radius(u: &ModeField, grid: &RadialGrid, tol: f64) -> f64 {
    let n = grid.len();
    let mut last = None;
    for j in (0..n).rev() {
        if u.rows().any(|row| row[j].abs() > tol) {
            last = Some(j);
            break;
        }
    }
    last.map_or(0.0, |j| grid.node(j) + 0.5 * grid.spacing())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordOptions {
    /// Keep every `stride`-th snapshot (the final one is always kept).
    pub stride: usize,
    pub keep_sources: bool,
}

impl Default for RecordOptions {
    fn default() -> Self {
        Self { stride: 1, keep_sources: false }
    }
}

/// Recorded snapshots of one evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: RadialGrid,
    pub schedule: StepSchedule,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectories hold at least the initial snapshot")
    }

    pub fn l_max(&self) -> usize {
        self.snapshots[0].u.l_max()
    }

    /// Snapshot recorded for step `n`, if any.
    pub fn at_step(&self, n: usize) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by_key(&n, |s| s.step)
            .ok()
            .map(|i| &self.snapshots[i])
    }

    pub fn is_zero(&self) -> bool {
        self.snapshots.iter().all(|s| s.u.is_zero() && s.ut.is_zero())
    }
}

/// Every time level of a single mode of degree `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTrajectory {
    pub grid: RadialGrid,
    pub schedule: StepSchedule,
    pub l: usize,
    pub u: Vec<Vec<f64>>,
    pub ut: Vec<Vec<f64>>,
    /// Source at each level; empty for a homogeneous run.
    pub source: Vec<Vec<f64>>,
}

impl ModeTrajectory {
    pub fn levels(&self) -> usize {
        self.u.len()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.schedule.time(n)
    }
}

impl Trajectory {
    /// Extracts mode (l, k) when every step was recorded.
    pub fn mode_trajectory(&self, l: usize, k: i64) -> Option<ModeTrajectory> {
        if self.snapshots.len() != self.schedule.n_steps + 1 {
            return None;
        }
        let m = crate::harmonics::mode_index(l, k);
        let with_sources = self.snapshots.iter().all(|s| s.source.is_some());
        Some(ModeTrajectory {
            grid: self.grid.clone(),
            schedule: self.schedule,
            l,
            u: self.snapshots.iter().map(|s| s.u.row(m).to_vec()).collect(),
            ut: self.snapshots.iter().map(|s| s.ut.row(m).to_vec()).collect(),
            source: if with_sources {
                self.snapshots.iter().map(|s| s.source.as_ref().unwrap().row(m).to_vec()).collect()
            } else {
                Vec::new()
            },
        })
    }
}

/// Evolves one mode of degree `l`. `source(n, t)` returns F at level n.
#[allow(clippy::too_many_arguments)]
pub fn solve_mode(
    l: usize,
    f: &[f64],
    g: &[f64],
    source: Option<&dyn Fn(usize, f64) -> Vec<f64>>,
    spec: &PotentialSpec,
    grid: &RadialGrid,
    t_end: f64,
    scheme: &SchemeConfig,
) -> Result<ModeTrajectory> {
    validate_run_grid(grid, t_end)?;
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::Contract("mode data do not match the grid".into()));
    }
    let schedule = scheme.schedule(grid, t_end)?;
    let evolver = LeapfrogEvolver::new(RadialOperator::new(grid, spec, l), schedule.dt);
    let n = grid.len();
    let src = |k: usize| source.map(|s| s(k, schedule.time(k)));
    let mut sources = Vec::new();
    let s0 = src(0);
    let mut cur = vec![0.0; n];
    evolver.first_step_row(l, f, g, s0.as_deref(), &mut cur);
    let mut prev = f.to_vec();
    let mut us = vec![f.to_vec()];
    let mut uts = vec![g.to_vec()];
    if let Some(s0) = s0 {
        sources.push(s0);
    }
    for k in 1..=schedule.n_steps {
        let sk = src(k);
        let mut next = vec![0.0; n];
        evolver.step_row(l, &prev, &cur, sk.as_deref(), &mut next);
        let dt2 = 2.0 * schedule.dt;
        uts.push(next.iter().zip(&prev).map(|(a, b)| (a - b) / dt2).collect());
        if let Some(sk) = sk {
            sources.push(sk);
        }
        prev = std::mem::replace(&mut cur, next);
        us.push(prev.clone());
    }
    Ok(ModeTrajectory { grid: grid.clone(), schedule, l, u: us, ut: uts, source: sources })
}

/// Whether the driver should keep stepping after observing a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Runs the leapfrog scheme from (f, g). `source` receives the step, time and
/// current level and returns F at that level; `observe` sees every snapshot
/// (recorded or not) and may stop the run.
#[allow(clippy::too_many_arguments)]
pub fn evolve<S, O>(
    f: &ModeField,
    g: &ModeField,
    spec: &PotentialSpec,
    grid: &RadialGrid,
    t_end: f64,
    scheme: &SchemeConfig,
    record: RecordOptions,
    mut source: S,
    mut observe: O,
) -> Result<Trajectory>
where
    S: FnMut(usize, f64, &ModeField) -> Result<Option<ModeField>>,
    O: FnMut(&Snapshot) -> Result<Control>,
{
    validate_run_grid(grid, t_end)?;
    let schedule = scheme.schedule(grid, t_end)?;
    let op = RadialOperator::new(grid, spec, f.l_max());
    let evolver = LeapfrogEvolver::new(op, schedule.dt);
    let stride = record.stride.max(1);
    let mut snapshots = Vec::new();

    let src0 = source(0, 0.0, f)?;
    let mut prev = f.clone();
    let mut cur = evolver.first_step(f, g, src0.as_ref())?;
    let first = Snapshot {
        step: 0,
        t: 0.0,
        u: f.clone(),
        ut: g.clone(),
        source: if record.keep_sources { src0 } else { None },
    };
    let mut stop = observe(&first)? == Control::Stop;
    snapshots.push(first);

    let mut n = 1;
    while !stop && n <= schedule.n_steps {
        let t = schedule.time(n);
        let src = source(n, t, &cur)?;
        let next = evolver.step(&prev, &cur, src.as_ref())?;
        let mut ut = next.difference(&prev);
        ut.as_mut_slice().iter_mut().for_each(|x| *x /= 2.0 * schedule.dt);
        let snap = Snapshot {
            step: n,
            t,
            u: cur,
            ut,
            source: if record.keep_sources { src } else { None },
        };
        stop = observe(&snap)? == Control::Stop;
        let keep = n % stride == 0 || n == schedule.n_steps || stop;
        prev = snap.u.clone();
        cur = next;
        if keep {
            snapshots.push(snap);
        }
        n += 1;
    }
    Ok(Trajectory { grid: grid.clone(), schedule, snapshots })
}

/// Linear evolution (∂t² + A)u = F from data (f, g).
pub fn solve_linear(
    f: &ModeField,
    g: &ModeField,
    source: &dyn Source,
    spec: &PotentialSpec,
    grid: &RadialGrid,
    t_end: f64,
    scheme: &SchemeConfig,
) -> Result<Trajectory> {
    solve_linear_recorded(f, g, source, spec, grid, t_end, scheme, RecordOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn solve_linear_recorded(
    f: &ModeField,
    g: &ModeField,
    source: &dyn Source,
    spec: &PotentialSpec,
    grid: &RadialGrid,
    t_end: f64,
    scheme: &SchemeConfig,
    record: RecordOptions,
) -> Result<Trajectory> {
    evolve(
        f,
        g,
        spec,
        grid,
        t_end,
        scheme,
        record,
        |n, t, _| Ok(source.at(n, t)),
        |_| Ok(Control::Continue),
    )
}

/// Errors of a quantity on a refinement sequence and the observed orders
/// log2(e_i / e_{i+1}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub label: String,
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn new(label: impl Into<String>, spacings: Vec<f64>, errors: Vec<f64>) -> Self {
        let orders = errors
            .windows(2)
            .zip(spacings.windows(2))
            .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            .collect();
        Self { label: label.into(), spacings, errors, orders }
    }

    /// Order observed between the two finest grids.
    pub fn finest_order(&self) -> f64 {
        self.orders.last().copied().unwrap_or(f64::NAN)
    }

    pub fn orders_within(&self, lo: f64, hi: f64) -> bool {
        !self.orders.is_empty() && self.orders.iter().all(|&o| o >= lo && o <= hi)
    }
}

/// Closed-form radial profile r³(1 - r)⁴₊ and its first two derivatives.
pub fn bump_profile(r: f64) -> (f64, f64, f64) {
    if !(0.0..1.0).contains(&r) {
        return (0.0, 0.0, 0.0);
    }
    let s = 1.0 - r;
    let v = r.powi(3) * s.powi(4);
    let d1 = 3.0 * r * r * s.powi(4) - 4.0 * r.powi(3) * s.powi(3);
    let d2 = 6.0 * r * s.powi(4) - 24.0 * r * r * s.powi(3) + 12.0 * r.powi(3) * s * s;
    (v, d1, d2)
}

/// Manufactured-solution convergence of the scheme for modes ℓ = 0, 1, 2
/// with exact solution v*(t, r) = r³(1 - r)⁴₊ cos t up to time `t_end`.
pub fn manufactured_residual(
    grids: &[RadialGrid],
    spec: &PotentialSpec,
    t_end: f64,
    scheme: &SchemeConfig,
) -> Result<Vec<ConvergenceReport>> {
    if grids.len() < 3 {
        return Err(Error::config("grids", "a refinement study needs at least three grids"));
    }
    let mut reports = Vec::new();
    for l in 0..=2usize {
        let k = 0i64;
        let mut errors = Vec::new();
        let mut spacings = Vec::new();
        for grid in grids {
            let lam = mode_eigenvalue(l);
            let exact = |t: f64, r: f64| bump_profile(r).0 * t.cos();
            let forcing: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&r| {
                    let (v, _, d2) = bump_profile(r);
                    -v - d2 + (spec.v_unchecked(r) + lam / (r * r)) * v
                })
                .collect();
            let mut f = ModeField::zeros(l, grid.len());
            for (j, &r) in grid.nodes().iter().enumerate() {
                f.mode_mut(l, k)[j] = exact(0.0, r);
            }
            let g = ModeField::zeros(l, grid.len());
            let source = |_: usize, t: f64| {
                let mut s = ModeField::zeros(l, grid.len());
                for (o, &fo) in s.mode_mut(l, k).iter_mut().zip(&forcing) {
                    *o = fo * t.cos();
                }
                Some(s)
            };
            let traj = solve_linear_recorded(
                &f,
                &g,
                &source,
                spec,
                grid,
                t_end,
                scheme,
                RecordOptions { stride: usize::MAX, keep_sources: false },
            )?;
            let last = traj.last();
            let err: f64 = grid
                .nodes()
                .iter()
                .zip(last.u.mode(l, k))
                .map(|(&r, &v)| (v - exact(last.t, r)).powi(2))
                .sum::<f64>()
                * grid.spacing();
            errors.push(err.sqrt());
            spacings.push(grid.spacing());
        }
        reports.push(ConvergenceReport::new(format!("mode l={l}"), spacings, errors));
    }
    Ok(reports)
}
