//! TOML run configuration: parsing, defaults, validation and conversion into
//! the settings of each scenario.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swpv_core::energy::{ConformalParams, PolygonParams};
use swpv_core::grids::RadialGrid;
use swpv_core::inequalities::InequalitySuite;
use swpv_core::nonlinear::{NonlinearityParams, DEFAULT_THRESHOLD_FACTOR};
use swpv_core::picard::{parameter_select, ParameterSelection};
use swpv_core::potential::PotentialSpec;
use swpv_core::radial::{validate_run_grid, SchemeConfig};

use crate::error::{CliError, Result};

/// Exponent whose parameter selection supplies the diagnostic weights when
/// the run's own exponent has none.
pub const FALLBACK_EXPONENT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Solve,
    Picard,
    VerifyInequalities,
    VerifyIdentity,
    Hexagon,
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Solve => "solve",
            Scenario::Picard => "picard",
            Scenario::VerifyInequalities => "verify-inequalities",
            Scenario::VerifyIdentity => "verify-identity",
            Scenario::Hexagon => "hexagon",
            Scenario::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// The configuration file. Every entry is optional at parse time; each
/// scenario requires and defaults the entries it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub scheme: SchemeSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub potential: PotentialSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub nonlinear: NonlinearSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub monitor: MonitorSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub data: DataSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub conformal: ConformalSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub diagnostics: DiagnosticsSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub picard: PicardSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub inequalities: InequalitiesSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub identity: IdentitySection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub hexagon: HexagonSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "T_end", skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Number of evenly spaced snapshots written to snapshots.bin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_count: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(rename = "L_max", skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// "inverse_square" or "shifted_decay".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalitiesSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2_exponents: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hardy_exponents: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial_intervals: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angular_degree: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_list: Option<Vec<f64>>,
    #[serde(rename = "J_list", skip_serializing_if = "Option::is_none")]
    pub j_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexagonSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_top: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(rename = "J_list", skip_serializing_if = "Option::is_none")]
    pub j_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_list: Option<Vec<f64>>,
}

/// Settings shared by every run of the evolution solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSetup {
    pub grid: RadialGrid,
    pub l_max: usize,
    pub t_end: f64,
    pub spec: PotentialSpec,
    pub scheme: SchemeConfig,
    pub b: f64,
    pub threshold_factor: f64,
    pub stride: usize,
    pub snapshot_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSetup {
    pub evolution: EvolutionSetup,
    pub params: NonlinearityParams,
    pub epsilon: f64,
    pub conformal: ConformalParams,
    /// Present when the exponent admits a parameter selection.
    pub selection: Option<ParameterSelection>,
    pub m_max: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySetup {
    pub spec: PotentialSpec,
    pub s_list: Vec<f64>,
    pub lambda_list: Vec<f64>,
    pub sizes: Vec<usize>,
    pub t0: f64,
    pub r_window: f64,
    pub sweep_points: usize,
    pub t_max: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexagonSetup {
    pub spec: PotentialSpec,
    pub params: PolygonParams,
    pub l: usize,
    pub sizes: Vec<usize>,
    pub s: f64,
    pub scheme: SchemeConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub evolution: EvolutionSetup,
    pub p_list: Vec<f64>,
    pub epsilon_list: Vec<f64>,
    /// Overrides applied on top of each exponent's selection.
    pub conformal: ConformalSection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Solve(SolveSetup),
    Picard(SolveSetup),
    Inequalities(InequalitySuite),
    Identity(IdentitySetup),
    Hexagon(HexagonSetup),
    Sweep(SweepSetup),
}

/// A validated configuration: the echo with every default filled in, the
/// run directory and the typed settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scenario: Scenario,
    pub config: RunConfig,
    pub run_dir: PathBuf,
    pub plan: Plan,
}

fn require<T: Clone>(value: &Option<T>, key: &str) -> Result<T> {
    value.clone().ok_or_else(|| CliError::config(key, "required entry is missing"))
}

fn nonempty<T>(v: &[T], key: &str) -> Result<()> {
    if v.is_empty() {
        return Err(CliError::config(key, "must not be empty"));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = unknown_key(&message).unwrap_or_else(|| "config".to_string());
            CliError::config(&key, message)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration tables serialize")
    }

    /// Checks the scenario, fills defaults and builds the typed settings.
    pub fn resolve(&self, scenario: Scenario) -> Result<Resolved> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(CliError::config("scenario", format!("configuration is for `{s}`, not `{scenario}`")));
            }
        }
        let mut c = self.clone();
        c.scenario = Some(scenario);
        c.run.name.get_or_insert_with(|| scenario.name().to_string());
        c.run.seed.get_or_insert(0);
        c.output.dir.get_or_insert_with(|| PathBuf::from("runs"));
        let plan = match scenario {
            Scenario::Solve => Plan::Solve(c.solve_setup()?),
            Scenario::Picard => Plan::Picard(c.solve_setup()?),
            Scenario::VerifyInequalities => Plan::Inequalities(c.inequality_suite()?),
            Scenario::VerifyIdentity => Plan::Identity(c.identity_setup()?),
            Scenario::Hexagon => Plan::Hexagon(c.hexagon_setup()?),
            Scenario::Sweep => Plan::Sweep(c.sweep_setup()?),
        };
        let name = c.run.name.clone().unwrap_or_default();
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(CliError::config("run.name", format!("must be a plain directory name, got {name:?}")));
        }
        let run_dir = c.output.dir.clone().unwrap_or_default().join(name);
        Ok(Resolved { scenario, config: c, run_dir, plan })
    }

    fn potential(&mut self) -> Result<PotentialSpec> {
        let family = self.potential.family.get_or_insert_with(|| "inverse_square".to_string()).clone();
        let a = *self.potential.a.get_or_insert(1.0);
        match family.as_str() {
            "inverse_square" => Ok(PotentialSpec::inverse_square(a)?),
            "shifted_decay" => Ok(PotentialSpec::shifted_decay(require(&self.potential.c0, "potential.c0")?, a)?),
            other => Err(CliError::config(
                "potential.family",
                format!("expected \"inverse_square\" or \"shifted_decay\", got {other:?}"),
            )),
        }
    }

    fn scheme(&mut self) -> Result<SchemeConfig> {
        Ok(SchemeConfig::new(*self.scheme.cfl.get_or_insert(1.0))?)
    }

    fn evolution(&mut self) -> Result<EvolutionSetup> {
        let t_end = require(&self.run.t_end, "run.T_end")?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(CliError::config("run.T_end", format!("must be positive, got {t_end}")));
        }
        let j = require(&self.grid.j, "grid.J")?;
        let l_max = require(&self.grid.l_max, "grid.L_max")?;
        let r_max = *self.grid.r_max.get_or_insert(1.0 + t_end);
        let grid = RadialGrid::new(j, r_max)?;
        validate_run_grid(&grid, t_end)?;
        let spec = self.potential()?;
        let scheme = self.scheme()?;
        let b = *self.nonlinear.b.get_or_insert(1.0);
        let threshold_factor = *self.monitor.threshold_factor.get_or_insert(DEFAULT_THRESHOLD_FACTOR);
        if threshold_factor.is_nan() || threshold_factor <= 1.0 {
            return Err(CliError::config("monitor.threshold_factor", format!("must exceed 1, got {threshold_factor}")));
        }
        let stride = *self.diagnostics.stride.get_or_insert(10);
        if stride == 0 {
            return Err(CliError::config("diagnostics.stride", "must be positive"));
        }
        let snapshot_count = *self.output.snapshot_count.get_or_insert(11);
        if snapshot_count < 2 {
            return Err(CliError::config("output.snapshot_count", "must be at least 2"));
        }
        Ok(EvolutionSetup { grid, l_max, t_end, spec, scheme, b, threshold_factor, stride, snapshot_count })
    }

    fn solve_setup(&mut self) -> Result<SolveSetup> {
        let evolution = self.evolution()?;
        let p = require(&self.nonlinear.p, "nonlinear.p")?;
        let params = NonlinearityParams::new(p, evolution.b)?;
        let epsilon = require(&self.data.epsilon, "data.epsilon")?;
        if !epsilon.is_finite() {
            return Err(CliError::config("data.epsilon", "must be finite"));
        }
        let (conformal, selection) = conformal_for(p, &mut self.conformal)?;
        let m_max = *self.picard.m_max.get_or_insert(12);
        let tol = *self.picard.tol.get_or_insert(1e-8);
        if m_max == 0 {
            return Err(CliError::config("picard.m_max", "must be positive"));
        }
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(CliError::config("picard.tol", format!("must be finite and >= 0, got {tol}")));
        }
        Ok(SolveSetup { evolution, params, epsilon, conformal, selection, m_max, tol })
    }

    fn inequality_suite(&mut self) -> Result<InequalitySuite> {
        let d = InequalitySuite::default();
        let s = &mut self.inequalities;
        let suite = InequalitySuite {
            samples: *s.samples.get_or_insert(d.samples),
            seed: self.run.seed.unwrap_or(0),
            k_list: s.k_list.get_or_insert(d.k_list).clone(),
            trace_samples: *s.trace_samples.get_or_insert(d.trace_samples),
            trace_s: *s.trace_s.get_or_insert(d.trace_s),
            l2_exponents: s.l2_exponents.get_or_insert(d.l2_exponents).clone(),
            hardy_exponents: s.hardy_exponents.get_or_insert(d.hardy_exponents).clone(),
            potential: self.potential()?,
            radial_intervals: *self.inequalities.radial_intervals.get_or_insert(d.radial_intervals),
            angular_degree: *self.inequalities.angular_degree.get_or_insert(d.angular_degree),
        };
        suite.validate()?;
        Ok(suite)
    }

    fn identity_setup(&mut self) -> Result<IdentitySetup> {
        let spec = self.potential()?;
        let i = &mut self.identity;
        let setup = IdentitySetup {
            spec,
            s_list: i.s_list.get_or_insert_with(|| vec![1.2, 1.5, 1.8]).clone(),
            lambda_list: i.lambda_list.get_or_insert_with(|| vec![0.0, 2.0, 6.0]).clone(),
            sizes: i.j_list.get_or_insert_with(|| vec![256, 512, 1024]).clone(),
            t0: *i.t0.get_or_insert(0.5),
            r_window: *i.r_window.get_or_insert(1.2),
            sweep_points: *i.sweep_points.get_or_insert(10_000),
            t_max: *i.t_max.get_or_insert(50.0),
            seed: self.run.seed.unwrap_or(0),
        };
        nonempty(&setup.s_list, "identity.s_list")?;
        nonempty(&setup.lambda_list, "identity.lambda_list")?;
        if setup.s_list.iter().any(|&s| !(0.0..=2.0).contains(&s)) {
            return Err(CliError::config("identity.s_list", "exponents must lie in [0, 2]"));
        }
        if setup.lambda_list.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(CliError::config("identity.lambda_list", "eigenvalues must be finite and >= 0"));
        }
        if setup.sizes.len() < 3 || setup.sizes.iter().any(|&n| n < 8) {
            return Err(CliError::config("identity.J_list", "needs at least three grids of J >= 8"));
        }
        if !(setup.r_window > 0.0 && setup.r_window <= 2.0) {
            return Err(CliError::config("identity.r_window", "must lie in (0, 2]"));
        }
        if !(setup.t0 > 0.0 && setup.t0.is_finite()) {
            return Err(CliError::config("identity.t0", "must be positive"));
        }
        Ok(setup)
    }

    fn hexagon_setup(&mut self) -> Result<HexagonSetup> {
        let spec = self.potential()?;
        let scheme = self.scheme()?;
        let h = &mut self.hexagon;
        let params = PolygonParams::new(
            *h.alpha.get_or_insert(5.0),
            *h.beta.get_or_insert(2.0),
            *h.t_top.get_or_insert(3.0),
        )?;
        let setup = HexagonSetup {
            spec,
            params,
            l: *h.l.get_or_insert(0),
            sizes: h.j_list.get_or_insert_with(|| vec![128, 256, 512]).clone(),
            s: *h.s.get_or_insert(1.5),
            scheme,
        };
        if setup.sizes.len() < 2 || setup.sizes.iter().any(|&n| n < 8) {
            return Err(CliError::config("hexagon.J_list", "needs at least two grids of J >= 8"));
        }
        if !(setup.s > 1.0 && setup.s < 2.0) {
            return Err(CliError::config("hexagon.s", format!("must lie in (1, 2), got {}", setup.s)));
        }
        Ok(setup)
    }

    fn sweep_setup(&mut self) -> Result<SweepSetup> {
        let evolution = self.evolution()?;
        let p_list = self.sweep.p_list.get_or_insert_with(|| vec![2.0, 2.5, 2.9]).clone();
        let epsilon_list = self.sweep.epsilon_list.get_or_insert_with(|| vec![1e-3, 1e-1, 1.0]).clone();
        nonempty(&p_list, "sweep.p_list")?;
        nonempty(&epsilon_list, "sweep.epsilon_list")?;
        for &p in &p_list {
            NonlinearityParams::new(p, evolution.b).map_err(|e| match e {
                swpv_core::Error::Config { message, .. } => CliError::config("sweep.p_list", message),
                other => other.into(),
            })?;
        }
        if epsilon_list.iter().any(|e| !e.is_finite()) {
            return Err(CliError::config("sweep.epsilon_list", "amplitudes must be finite"));
        }
        Ok(SweepSetup { evolution, p_list, epsilon_list, conformal: self.conformal.clone() })
    }
}

/// Diagnostic weights for exponent p: the parameter selection of p (or of
/// [`FALLBACK_EXPONENT`] when p has none) with any configured entries
/// overriding it. Missing entries of `section` are filled in.
pub fn conformal_for(p: f64, section: &mut ConformalSection) -> Result<(ConformalParams, Option<ParameterSelection>)> {
    let selection = parameter_select(p).ok();
    let base = match selection {
        Some(sel) => sel.params,
        None => parameter_select(FALLBACK_EXPONENT)?.params,
    };
    let params = ConformalParams::new(
        *section.s.get_or_insert(base.s),
        *section.delta.get_or_insert(base.delta),
        *section.theta.get_or_insert(base.theta),
        *section.kappa.get_or_insert(base.kappa),
    )?;
    Ok((params, selection))
}

/// Dotted key named in a toml "unknown field" message, when present.
fn unknown_key(message: &str) -> Option<String> {
    let rest = message.split("unknown field `").nth(1)?;
    Some(rest.split('`').next()?.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLVE: &str = r#"
scenario = "solve"
[run]
T_end = 2.0
[grid]
J = 64
L_max = 2
[nonlinear]
p = 2.5
[data]
epsilon = 0.001
"#;

    #[test]
    fn defaults_are_filled_in() {
        let r = RunConfig::from_toml(SOLVE).unwrap().resolve(Scenario::Solve).unwrap();
        let Plan::Solve(s) = &r.plan else { panic!("wrong plan") };
        assert_eq!(s.evolution.grid.r_max(), 3.0);
        assert_eq!(s.params.b, 1.0);
        assert_eq!(s.evolution.threshold_factor, 1e3);
        assert_eq!(s.conformal.s, 1.8);
        assert!(s.selection.is_some());
        assert_eq!(r.config.grid.r_max, Some(3.0));
        assert_eq!(r.config.potential.family.as_deref(), Some("inverse_square"));
        assert_eq!(r.run_dir, PathBuf::from("runs/solve"));
    }

    #[test]
    fn echo_round_trips() {
        let r = RunConfig::from_toml(SOLVE).unwrap().resolve(Scenario::Solve).unwrap();
        let echo = RunConfig::from_toml(&r.config.to_toml()).unwrap();
        assert_eq!(echo, r.config);
        assert_eq!(echo.resolve(Scenario::Solve).unwrap(), r);
    }

    #[test]
    fn missing_keys_are_named() {
        for key in ["nonlinear.p", "run.T_end", "grid.J", "grid.L_max", "data.epsilon"] {
            let (section, field) = key.split_once('.').unwrap();
            let text: String = SOLVE
                .lines()
                .scan(String::new(), |current, line| {
                    if line.starts_with('[') {
                        *current = line.trim_matches(['[', ']']).to_string();
                    }
                    let drop = current == section && line.starts_with(&format!("{field} ="));
                    Some(if drop { String::new() } else { format!("{line}\n") })
                })
                .collect();
            let err = RunConfig::from_toml(&text).unwrap().resolve(Scenario::Solve).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(matches!(&err, CliError::Config { key: k, .. } if k == key), "{key}: {err}");
        }
    }

    #[test]
    fn invalid_entries_are_rejected() {
        let bad = |text: &str, key: &str| {
            let err = RunConfig::from_toml(text).and_then(|c| c.resolve(Scenario::Solve)).unwrap_err();
            assert!(err.to_string().contains(key), "{key}: {err}");
        };
        bad(&format!("{SOLVE}\n[scheme]\ncfl = 1.5\n"), "scheme.cfl");
        bad(&SOLVE.replace("J = 64", "J = 64\nr_max = 2.5"), "grid.r_max");
        bad(&SOLVE.replace("p = 2.5", "p = 0.5"), "nonlinear.p");
        bad(&format!("{SOLVE}\n[potential]\nfamily = \"cubic\"\n"), "potential.family");
        bad(&format!("{SOLVE}\n[potential]\nfamily = \"shifted_decay\"\n"), "potential.c0");
        bad(&SOLVE.replace("p = 2.5", "p = 2.5\nq = 1"), "q");
        bad(&SOLVE.replace("scenario = \"solve\"", "scenario = \"picard\""), "scenario");
    }

    #[test]
    fn exponent_without_selection_uses_fallback_weights() {
        let r = RunConfig::from_toml(&SOLVE.replace("p = 2.5", "p = 2.0")).unwrap().resolve(Scenario::Solve).unwrap();
        let Plan::Solve(s) = &r.plan else { panic!("wrong plan") };
        assert!(s.selection.is_none());
        assert_eq!(s.conformal, parameter_select(FALLBACK_EXPONENT).unwrap().params);
    }

    #[test]
    fn verification_scenarios_need_no_keys() {
        let empty = RunConfig::default();
        let r = empty.resolve(Scenario::VerifyInequalities).unwrap();
        assert_eq!(r.plan, Plan::Inequalities(InequalitySuite::default()));
        assert!(empty.resolve(Scenario::VerifyIdentity).is_ok());
        assert!(empty.resolve(Scenario::Hexagon).is_ok());
        let err = empty.resolve(Scenario::Sweep).unwrap_err();
        assert!(err.to_string().contains("run.T_end"));
    }
}
