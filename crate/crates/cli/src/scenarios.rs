//! The computations behind each subcommand. Each returns its report and the
//! tables and snapshots to persist, without touching the filesystem.

use serde::Serialize;
use swpv_core::energy::{
    hexagon_refinement, multiplier_identity_residual, remainder_sweep, weight_integral_j, ConformalParams,
    HexagonStudy, RemainderSweep, WeightIntegral,
};
use swpv_core::grids::RadialGrid;
use swpv_core::inequalities::{verify_inequalities, InequalityReport, InequalitySuite};
use swpv_core::nonlinear::{
    solve_semilinear, standard_bump_data, trajectory_diagnostics, MonitorStatus, NonlinearityParams, RunStatus,
    SemilinearConfig, StepDiagnostics,
};
use swpv_core::picard::{picard_iterate, IterationReport, ParameterSelection, PicardConfig, PicardStatus};
use swpv_core::radial::{bump_profile, ConvergenceReport, RecordOptions, Trajectory};

use crate::config::{conformal_for, EvolutionSetup, HexagonSetup, IdentitySetup, Plan, SolveSetup, SweepSetup};
use crate::error::Result;

/// Richardson orders accepted for the multiplier identity residual.
pub const IDENTITY_ORDER_RANGE: (f64, f64) = (1.8, 2.2);
/// Lower bound accepted for ρ and R.
pub const REMAINDER_FLOOR: f64 = -1e-12;
/// Times at which the weight integral is tabulated by `sweep`.
pub const WEIGHT_TIMES: [f64; 6] = [0.0, 1.0, 10.0, 25.0, 50.0, 100.0];

/// Result of one scenario: a serializable report, whether it met its own
/// success criterion, and optional artifacts.
pub struct ScenarioOutput {
    pub report: serde_json::Value,
    pub failure: Option<String>,
    pub rows: Option<Vec<StepDiagnostics>>,
    pub trajectory: Option<Trajectory>,
}

impl ScenarioOutput {
    fn new(report: &impl Serialize, failure: Option<String>) -> Self {
        Self {
            report: serde_json::to_value(report).expect("reports serialize"),
            failure,
            rows: None,
            trajectory: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: RunStatus,
    pub monitor: MonitorStatus,
    pub last_valid_t: f64,
    pub eta: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub final_norms: Option<StepDiagnostics>,
    pub max_energy_ratio: f64,
    pub max_triple_norm_ratio: f64,
    pub max_conformal_ratio: f64,
    pub nonlinearity: NonlinearityParams,
    pub conformal: ConformalParams,
    pub parameter_selection: Option<ParameterSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardReport {
    pub iteration: IterationReport,
    pub geometric: bool,
    pub max_ratio: f64,
    pub final_norms: Option<StepDiagnostics>,
    pub nonlinearity: NonlinearityParams,
    pub conformal: ConformalParams,
    pub parameter_selection: Option<ParameterSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCase {
    pub s: f64,
    pub lambda: f64,
    pub residual: ConvergenceReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub cases: Vec<IdentityCase>,
    pub remainder: RemainderSweep,
    pub remainder_passed: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub p: f64,
    pub epsilon: f64,
    pub status: RunStatus,
    pub monitor: MonitorStatus,
    pub last_valid_t: f64,
    pub eta: f64,
    pub max_energy_ratio: f64,
    pub max_l2p_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTable {
    pub p: f64,
    pub selection: ParameterSelection,
    pub values: Vec<WeightIntegral>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub runs: Vec<SweepEntry>,
    /// J(t) for each exponent of the list that admits a parameter selection.
    pub weight_integrals: Vec<WeightTable>,
}

pub fn execute(plan: &Plan) -> Result<ScenarioOutput> {
    match plan {
        Plan::Solve(s) => solve(s),
        Plan::Picard(s) => picard(s),
        Plan::Inequalities(s) => inequalities(s),
        Plan::Identity(s) => identity(s),
        Plan::Hexagon(s) => hexagon(s),
        Plan::Sweep(s) => sweep(s),
    }
}

fn semilinear_config(
    e: &EvolutionSetup,
    params: NonlinearityParams,
    conformal: ConformalParams,
    record: RecordOptions,
) -> SemilinearConfig {
    SemilinearConfig {
        params,
        spec: e.spec,
        grid: e.grid.clone(),
        t_end: e.t_end,
        scheme: e.scheme,
        threshold_factor: e.threshold_factor,
        conformal,
        diagnostics_stride: e.stride,
        record,
    }
}

/// Snapshot spacing giving about `count` recorded levels over the run.
fn record_stride(setup: &SolveSetup) -> Result<usize> {
    let e = &setup.evolution;
    let n = e.scheme.schedule(&e.grid, e.t_end)?.n_steps;
    Ok(n.div_ceil(e.snapshot_count - 1).max(1))
}

pub fn solve(setup: &SolveSetup) -> Result<ScenarioOutput> {
    let e = &setup.evolution;
    let (f, g) = standard_bump_data(&e.grid, e.l_max, setup.epsilon);
    let record = RecordOptions { stride: record_stride(setup)?, keep_sources: false };
    let config = semilinear_config(e, setup.params, setup.conformal, record);
    let (traj, diag) = solve_semilinear(&f, &g, &config)?;
    let report = SolveReport {
        status: diag.status,
        monitor: diag.monitor,
        last_valid_t: diag.last_valid_t,
        eta: diag.eta,
        n_steps: traj.schedule.n_steps,
        dt: traj.schedule.dt,
        final_norms: diag.rows.last().copied(),
        max_energy_ratio: diag.max_energy_ratio(),
        max_triple_norm_ratio: diag.max_triple_norm_ratio(),
        max_conformal_ratio: diag.max_conformal_ratio(),
        nonlinearity: setup.params,
        conformal: setup.conformal,
        parameter_selection: setup.selection,
    };
    let failure = (diag.status != RunStatus::Completed)
        .then(|| format!("run stopped with status {:?} at t = {}", diag.status, diag.last_valid_t));
    let mut out = ScenarioOutput::new(&report, failure);
    out.rows = Some(diag.rows);
    out.trajectory = Some(traj);
    Ok(out)
}

pub fn picard(setup: &SolveSetup) -> Result<ScenarioOutput> {
    let e = &setup.evolution;
    let (f, g) = standard_bump_data(&e.grid, e.l_max, setup.epsilon);
    let config = PicardConfig {
        params: setup.params,
        spec: e.spec,
        grid: e.grid.clone(),
        t_end: e.t_end,
        scheme: e.scheme,
        m_max: setup.m_max,
        tol: setup.tol,
    };
    let (traj, iteration) = picard_iterate(&f, &g, &config)?;
    let rows = trajectory_diagnostics(&traj, setup.params, &e.spec, &setup.conformal, e.stride)?;
    let report = PicardReport {
        geometric: iteration.is_geometric(),
        max_ratio: iteration.max_ratio(),
        final_norms: rows.last().copied(),
        iteration,
        nonlinearity: setup.params,
        conformal: setup.conformal,
        parameter_selection: setup.selection,
    };
    let failure = (report.iteration.status != PicardStatus::Converged).then(|| {
        format!(
            "iteration ended with status {:?} after {} iterates",
            report.iteration.status, report.iteration.m_used
        )
    });
    let mut out = ScenarioOutput::new(&report, failure);
    out.rows = Some(rows);
    out.trajectory = Some(traj);
    Ok(out)
}

pub fn inequalities(suite: &InequalitySuite) -> Result<ScenarioOutput> {
    let report: InequalityReport = verify_inequalities(suite)?;
    let failed: Vec<&str> = report.families.iter().filter(|f| !f.passed).map(|f| f.name.as_str()).collect();
    let failure = (!report.passed).then(|| {
        let mut parts: Vec<String> = failed.iter().map(|s| s.to_string()).collect();
        if !report.sup_trace.passed {
            parts.push("sup_trace k-independence".into());
        }
        if !report.laplacian_constant.passed {
            parts.push("laplacian constant refinement".into());
        }
        format!("failed checks: {}", parts.join(", "))
    });
    Ok(ScenarioOutput::new(&report, failure))
}

pub fn identity(setup: &IdentitySetup) -> Result<ScenarioOutput> {
    let grids = setup.sizes.iter().map(|&n| RadialGrid::new(n, 2.0)).collect::<swpv_core::Result<Vec<_>>>()?;
    let u = |t: f64, r: f64| bump_profile(r).0 * t.cos();
    let (lo, hi) = IDENTITY_ORDER_RANGE;
    let mut cases = Vec::new();
    for &s in &setup.s_list {
        for &lambda in &setup.lambda_list {
            let residual = multiplier_identity_residual(&u, lambda, &setup.spec, s, &grids, setup.t0, setup.r_window);
            let passed = residual.orders_within(lo, hi);
            cases.push(IdentityCase { s, lambda, residual, passed });
        }
    }
    let remainder = remainder_sweep(&setup.spec, setup.sweep_points, setup.t_max, setup.seed)?;
    let remainder_passed = remainder.min_rho >= REMAINDER_FLOOR
        && remainder.min_r >= REMAINDER_FLOOR
        && remainder.max_abs_rho_endpoints <= -REMAINDER_FLOOR;
    let passed = remainder_passed && cases.iter().all(|c| c.passed);
    let report = IdentityReport { cases, remainder, remainder_passed, passed };
    let failure = (!passed).then(|| {
        let bad: Vec<String> = report
            .cases
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("(s={}, lambda={}) orders {:?}", c.s, c.lambda, c.residual.orders))
            .collect();
        let mut msg = bad.join("; ");
        if !report.remainder_passed {
            msg.push_str(&format!(" remainder sweep {:?}", report.remainder));
        }
        msg
    });
    Ok(ScenarioOutput::new(&report, failure))
}

pub fn hexagon(setup: &HexagonSetup) -> Result<ScenarioOutput> {
    let study: HexagonStudy = hexagon_refinement(setup.l, &setup.spec, setup.s, &setup.params, &setup.sizes, &setup.scheme)?;
    let failure = (!study.passed).then(|| {
        let defects: Vec<f64> = study.reports.iter().map(|r| r.defect).collect();
        format!("defects {defects:?}, smallest flux {}", study.min_flux)
    });
    Ok(ScenarioOutput::new(&study, failure))
}

pub fn sweep(setup: &SweepSetup) -> Result<ScenarioOutput> {
    let e = &setup.evolution;
    let mut runs = Vec::new();
    let mut weight_integrals = Vec::new();
    for &p in &setup.p_list {
        let mut section = setup.conformal.clone();
        let (conformal, selection) = conformal_for(p, &mut section)?;
        let params = NonlinearityParams::new(p, e.b)?;
        for &epsilon in &setup.epsilon_list {
            let record = RecordOptions { stride: usize::MAX, keep_sources: false };
            let config = semilinear_config(e, params, conformal, record);
            let (f, g) = standard_bump_data(&e.grid, e.l_max, epsilon);
            let (_, diag) = solve_semilinear(&f, &g, &config)?;
            runs.push(SweepEntry {
                p,
                epsilon,
                status: diag.status,
                monitor: diag.monitor,
                last_valid_t: diag.last_valid_t,
                eta: diag.eta,
                max_energy_ratio: diag.max_energy_ratio(),
                max_l2p_norm: diag.rows.iter().map(|r| r.l2p_norm).fold(0.0, f64::max),
            });
        }
        if let Some(selection) = selection {
            let values = WEIGHT_TIMES
                .iter()
                .map(|&t| weight_integral_j(t, &selection.params, p))
                .collect::<swpv_core::Result<Vec<_>>>()?;
            weight_integrals.push(WeightTable { p, selection, values });
        }
    }
    Ok(ScenarioOutput::new(&SweepReport { runs, weight_integrals }, None))
}

