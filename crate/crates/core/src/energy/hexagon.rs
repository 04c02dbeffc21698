//! Gauss–Green balance of the multiplier identity over the characteristic
//! polygons bounded by AB: t = r + β, BC: t = T and CD: t = α − r inside the
//! cone |r| ≤ t + 1 of the oddly extended mode.
//!
//! Integrating ∇₊X₊ + ∇₋X₋ over the region gives
//! ∬ M(u)F = 2(E_AB + E_CD + E_BC − E_data) + ∬ R u², where E_AB = ∫ X₋ dρ
//! and E_CD = ∫ X₊ dρ along the slanted sides, and E_BC, E_data are
//! ½∫(X₊ + X₋) dr over the top and over the data line t = 0.

use serde::{Deserialize, Serialize};

use super::conformal::{centered_derivative, densities_at, multiplier_at, remainder_r_unchecked};
use crate::error::{Error, Result};
use crate::harmonics::mode_eigenvalue;
use crate::potential::PotentialSpec;
use crate::grids::RadialGrid;
use crate::radial::{bump_profile, solve_mode, ModeTrajectory, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolygonShape {
    /// β > 1: the slanted side AB meets the cone edge r = −(t + 1) above t = 0.
    Hexagon,
    /// −1 < β ≤ 1: AB starts on the data line.
    Pentagon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonParams {
    pub alpha: f64,
    pub beta: f64,
    pub t_top: f64,
}

impl PolygonParams {
    pub fn new(alpha: f64, beta: f64, t_top: f64) -> Result<Self> {
        let p = Self { alpha, beta, t_top };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { alpha, beta, t_top } = *self;
        if !(t_top > 0.0 && t_top.is_finite()) {
            return Err(Error::config("hexagon.T", format!("must be positive, got {t_top}")));
        }
        if alpha.is_nan() || 2.0 * t_top + 1.0 <= alpha {
            return Err(Error::config("hexagon.alpha", format!("needs 2T + 1 > α, got α = {alpha}, T = {t_top}")));
        }
        if !(alpha > beta && beta > -1.0) {
            return Err(Error::config("hexagon.beta", format!("needs α > β > −1, got α = {alpha}, β = {beta}")));
        }
        if (alpha + beta) / 2.0 <= t_top {
            return Err(Error::config("hexagon.alpha", format!("needs (α + β)/2 > T, got α = {alpha}, β = {beta}")));
        }
        Ok(())
    }

    pub fn shape(&self) -> PolygonShape {
        if self.beta > 1.0 {
            PolygonShape::Hexagon
        } else {
            PolygonShape::Pentagon
        }
    }

    fn left(&self, t: f64) -> f64 {
        (t - self.beta).max(-(t + 1.0))
    }

    fn right(&self, t: f64) -> f64 {
        (self.alpha - t).min(t + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub shape: PolygonShape,
    /// ∫_AB X₋ dρ
    pub flux_ab: f64,
    /// ½∫_BC (X₊ + X₋) dr
    pub flux_bc: f64,
    /// ∫_CD X₊ dρ
    pub flux_cd: f64,
    /// ½∫_{t=0} (X₊ + X₋) dr
    pub data_term: f64,
    /// ∬ R u²
    pub remainder: f64,
    /// ∬ M(u) F
    pub source_term: f64,
    pub defect: f64,
}

impl FluxReport {
    pub fn min_flux(&self) -> f64 {
        self.flux_ab.min(self.flux_bc).min(self.flux_cd).min(self.data_term)
    }
}

/// Space-time samples on the full line r ∈ [−r_max, r_max], including zero
/// end values at ±r_max.
struct LineFields {
    r: Vec<f64>,
    dt: f64,
    /// [level][node]
    x_plus: Vec<Vec<f64>>,
    x_minus: Vec<Vec<f64>>,
    ru2: Vec<Vec<f64>>,
    mf: Vec<Vec<f64>>,
}

impl LineFields {
    fn build(traj: &ModeTrajectory, spec: &PotentialSpec, s: f64) -> Self {
        let grid = &traj.grid;
        let n = grid.len();
        let lambda = mode_eigenvalue(traj.l);
        let mut r = Vec::with_capacity(2 * n + 2);
        r.push(-grid.r_max());
        r.extend(grid.nodes().iter().rev().map(|&x| -x));
        r.extend_from_slice(grid.nodes());
        r.push(grid.r_max());

        let mut x_plus = Vec::with_capacity(traj.levels());
        let mut x_minus = Vec::with_capacity(traj.levels());
        let mut ru2 = Vec::with_capacity(traj.levels());
        let mut mf = Vec::with_capacity(traj.levels());
        for lvl in 0..traj.levels() {
            let t = traj.time(lvl);
            let u = &traj.u[lvl];
            let ut = &traj.ut[lvl];
            let ur = centered_derivative(u, grid.spacing());
            let mut xp = vec![0.0; n];
            let mut xm = vec![0.0; n];
            let mut rr = vec![0.0; n];
            let mut m = vec![0.0; n];
            for (j, &rj) in grid.nodes().iter().enumerate() {
                let w = spec.v_unchecked(rj) + lambda / (rj * rj);
                let (a, b) = densities_at(t, rj, s, w, u[j], ut[j], ur[j]);
                xp[j] = a;
                xm[j] = b;
                rr[j] = remainder_r_unchecked(t, rj, s, spec, lambda) * u[j] * u[j];
                if let Some(src) = traj.source.get(lvl) {
                    m[j] = multiplier_at(t, rj, s, ut[j], ur[j]) * src[j];
                }
            }
            // The odd extension exchanges X₊ and X₋ and keeps R u², M F even.
            let line = |pos: &[f64], neg: &[f64]| {
                let mut v = Vec::with_capacity(2 * n + 2);
                v.push(0.0);
                v.extend(neg.iter().rev());
                v.extend_from_slice(pos);
                v.push(0.0);
                v
            };
            x_plus.push(line(&xp, &xm));
            x_minus.push(line(&xm, &xp));
            ru2.push(line(&rr, &rr));
            mf.push(line(&m, &m));
        }
        Self { r, dt: traj.schedule.dt, x_plus, x_minus, ru2, mf }
    }

    fn levels(&self) -> usize {
        self.x_plus.len()
    }

    /// Linear interpolation weights of time t: (level, fraction).
    fn time_slot(&self, t: f64) -> (usize, f64) {
        let last = self.levels() - 1;
        let pos = (t / self.dt).max(0.0);
        let n = (pos.floor() as usize).min(last.saturating_sub(1));
        let frac = if last == 0 { 0.0 } else { (pos - n as f64).clamp(0.0, 1.0) };
        (n, frac)
    }

    fn space_slot(&self, r: f64) -> (usize, f64) {
        let nodes = &self.r;
        let i = match nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(nodes.len() - 2),
            Err(i) => i.clamp(1, nodes.len() - 1) - 1,
        };
        let frac = ((r - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0);
        (i, frac)
    }

    fn at(&self, field: &[Vec<f64>], t: f64, r: f64) -> f64 {
        let (n, a) = self.time_slot(t);
        let (i, b) = self.space_slot(r);
        let lerp = |row: &[f64]| row[i] * (1.0 - b) + row[i + 1] * b;
        let lo = lerp(&field[n]);
        if a == 0.0 {
            lo
        } else {
            lo * (1.0 - a) + lerp(&field[n + 1]) * a
        }
    }

    /// Exact integral over [a, b] of the piecewise-linear interpolant of the
    /// field at time t.
    fn row_integral(&self, field: &[Vec<f64>], t: f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let (n, frac) = self.time_slot(t);
        let value = |i: usize| {
            if frac == 0.0 {
                field[n][i]
            } else {
                field[n][i] * (1.0 - frac) + field[n + 1][i] * frac
            }
        };
        let nodes = &self.r;
        let eval = |i: usize, x: f64| {
            let w = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
            value(i) * (1.0 - w) + value(i + 1) * w
        };
        let (start, _) = self.space_slot(a);
        let mut total = 0.0;
        let mut i = start;
        while i + 1 < nodes.len() && nodes[i] < b {
            let x0 = nodes[i].max(a);
            let x1 = nodes[i + 1].min(b);
            if x1 > x0 {
                total += 0.5 * (x1 - x0) * (eval(i, x0) + eval(i, x1));
            }
            i += 1;
        }
        total
    }

    fn segment(&self, field: &[Vec<f64>], from: f64, to: f64, path: impl Fn(f64) -> (f64, f64), step: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let m = ((to - from) / step).ceil().max(1.0) as usize;
        let dh = (to - from) / m as f64;
        (0..=m)
            .map(|k| {
                let (t, r) = path(from + k as f64 * dh);
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                w * self.at(field, t, r)
            })
            .sum::<f64>()
            * dh
    }

    fn area(&self, field: &[Vec<f64>], params: &PolygonParams) -> f64 {
        let t_top = params.t_top;
        let mut times: Vec<f64> = (0..self.levels()).map(|n| n as f64 * self.dt).filter(|&t| t < t_top).collect();
        times.push(t_top);
        let rows: Vec<f64> = times
            .iter()
            .map(|&t| self.row_integral(field, t, params.left(t), params.right(t)))
            .collect();
        times
            .windows(2)
            .zip(rows.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Flux balance of one mode trajectory over the polygon `params` with
/// weight exponent `s`.
pub fn hexagon_balance(
    traj: &ModeTrajectory,
    spec: &PotentialSpec,
    s: f64,
    params: &PolygonParams,
) -> Result<FluxReport> {
    params.validate()?;
    if params.t_top > traj.schedule.t_end + 1e-12 {
        return Err(Error::config(
            "hexagon.T",
            format!("T = {} exceeds the trajectory end {}", params.t_top, traj.schedule.t_end),
        ));
    }
    if traj.levels() != traj.schedule.n_steps + 1 {
        return Err(Error::Contract("flux balance needs every time level".into()));
    }
    let fields = LineFields::build(traj, spec, s);
    let step = 0.25 * traj.grid.spacing();
    let PolygonParams { alpha, beta, t_top } = *params;

    let ab_start = (-(beta + 1.0) / 2.0).max(-beta);
    let flux_ab = fields.segment(&fields.x_minus, ab_start, t_top - beta, |p| (p + beta, p), step);
    let flux_cd = fields.segment(&fields.x_plus, alpha - t_top, (alpha + 1.0) / 2.0, |p| (alpha - p, p), step);
    let top = |f: &[Vec<f64>]| fields.row_integral(f, t_top, t_top - beta, alpha - t_top);
    let flux_bc = 0.5 * (top(&fields.x_plus) + top(&fields.x_minus));
    let (d0, d1) = (params.left(0.0), params.right(0.0));
    let data_term =
        0.5 * (fields.row_integral(&fields.x_plus, 0.0, d0, d1) + fields.row_integral(&fields.x_minus, 0.0, d0, d1));
    let remainder = fields.area(&fields.ru2, params);
    let source_term = fields.area(&fields.mf, params);
    let defect = (source_term - 2.0 * (flux_ab + flux_cd + flux_bc - data_term) - remainder).abs();
    Ok(FluxReport {
        shape: params.shape(),
        flux_ab,
        flux_bc,
        flux_cd,
        data_term,
        remainder,
        source_term,
        defect,
    })
}

/// Flux balance of one mode on a refinement sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexagonStudy {
    pub l: usize,
    pub s: f64,
    pub params: PolygonParams,
    pub sizes: Vec<usize>,
    pub reports: Vec<FluxReport>,
    /// Each defect is below the previous one.
    pub monotone: bool,
    pub min_flux: f64,
    pub passed: bool,
}

/// Runs the linear single-mode problem with data f = r³(1 − r)⁴₊,
/// g = −f/2 on grids of the given sizes over [0, 1 + T] and balances the
/// fluxes on each. Passes when defects decrease and every flux is ≥ −1e−10.
pub fn hexagon_refinement(
    l: usize,
    spec: &PotentialSpec,
    s: f64,
    params: &PolygonParams,
    sizes: &[usize],
    scheme: &SchemeConfig,
) -> Result<HexagonStudy> {
    params.validate()?;
    if sizes.len() < 2 {
        return Err(Error::config("hexagon.J_list", "needs at least two grid sizes"));
    }
    let reports = sizes
        .iter()
        .map(|&n| {
            let grid = RadialGrid::new(n, 1.0 + params.t_top)?;
            let f: Vec<f64> = grid.nodes().iter().map(|&r| bump_profile(r).0).collect();
            let g: Vec<f64> = f.iter().map(|v| -0.5 * v).collect();
            let traj = solve_mode(l, &f, &g, None, spec, &grid, params.t_top, scheme)?;
            hexagon_balance(&traj, spec, s, params)
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = reports.windows(2).all(|w| w[1].defect < w[0].defect);
    let min_flux = reports.iter().map(FluxReport::min_flux).fold(f64::INFINITY, f64::min);
    Ok(HexagonStudy {
        l,
        s,
        params: *params,
        sizes: sizes.to_vec(),
        passed: monotone && min_flux >= -1e-10,
        reports,
        monotone,
        min_flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(l: usize, n: usize) -> ModeTrajectory {
        let grid = RadialGrid::new(n, 4.0).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|&r| bump_profile(r).0).collect();
        let g: Vec<f64> = grid.nodes().iter().map(|&r| -0.5 * bump_profile(r).0).collect();
        let spec = PotentialSpec::inverse_square(1.0).unwrap();
        solve_mode(l, &f, &g, None, &spec, &grid, 3.0, &SchemeConfig::default()).unwrap()
    }

    #[test]
    fn parameter_constraints() {
        assert!(PolygonParams::new(5.0, 2.0, 3.0).is_ok());
        assert_eq!(PolygonParams::new(5.0, 2.0, 3.0).unwrap().shape(), PolygonShape::Hexagon);
        assert_eq!(PolygonParams::new(6.5, 0.0, 3.0).unwrap().shape(), PolygonShape::Pentagon);
        assert!(PolygonParams::new(7.5, 2.0, 3.0).is_err());
        assert!(PolygonParams::new(3.0, 2.0, 3.0).is_err());
        assert!(PolygonParams::new(5.0, -1.5, 3.0).is_err());
    }

    #[test]
    fn zero_trajectory_has_zero_fluxes() {
        let grid = RadialGrid::new(32, 4.0).unwrap();
        let zero = vec![0.0; 32];
        let spec = PotentialSpec::inverse_square(1.0).unwrap();
        let traj = solve_mode(0, &zero, &zero, None, &spec, &grid, 3.0, &SchemeConfig::default()).unwrap();
        let rep = hexagon_balance(&traj, &spec, 1.5, &PolygonParams::new(5.0, 2.0, 3.0).unwrap()).unwrap();
        assert_eq!(rep.defect, 0.0);
        assert_eq!(rep.min_flux(), 0.0);
    }

    #[test]
    fn defect_shrinks_under_refinement() {
        let spec = PotentialSpec::inverse_square(1.0).unwrap();
        for params in [PolygonParams::new(5.0, 2.0, 3.0).unwrap(), PolygonParams::new(6.5, 0.0, 3.0).unwrap()] {
            for l in [0, 2] {
                let defects: Vec<f64> = [128, 256, 512]
                    .iter()
                    .map(|&n| {
                        let rep = hexagon_balance(&run(l, n), &spec, 1.5, &params).unwrap();
                        assert!(rep.min_flux() >= -1e-10, "{rep:?}");
                        rep.defect
                    })
                    .collect();
                assert!(defects.windows(2).all(|d| d[1] < d[0]), "l={l} {params:?}: {defects:?}");
            }
        }
    }

    #[test]
    fn refinement_study_matches_direct_runs() {
        let spec = PotentialSpec::inverse_square(1.0).unwrap();
        let params = PolygonParams::new(5.0, 2.0, 3.0).unwrap();
        let study = hexagon_refinement(2, &spec, 1.5, &params, &[64, 128], &SchemeConfig::default()).unwrap();
        let direct = hexagon_balance(&run(2, 128), &spec, 1.5, &params).unwrap();
        assert_eq!(study.reports[1], direct);
        assert!(hexagon_refinement(2, &spec, 1.5, &params, &[64], &SchemeConfig::default()).is_err());
    }
}
