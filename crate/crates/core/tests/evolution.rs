//! Cross-module properties of the linear, semilinear and Picard solvers.

use proptest::prelude::*;
use swpv_core::energy::{form_squared, l2_squared};
use swpv_core::grids::RadialGrid;
use swpv_core::nonlinear::{solve_semilinear, standard_bump_data, NonlinearityParams, SemilinearConfig};
use swpv_core::picard::{parameter_select, picard_iterate, PicardConfig, PicardStatus};
use swpv_core::potential::PotentialSpec;
use swpv_core::radial::{solve_linear, NoSource, RadialOperator, RecordOptions, SchemeConfig};

fn max_beyond_light_cone(u: &swpv_core::harmonics::ModeField, grid: &RadialGrid, t: f64) -> f64 {
    let edge = 1.0 + t + 2.0 * grid.spacing();
    u.rows()
        .flat_map(|row| row.iter().zip(grid.nodes()).filter(|(_, &r)| r > edge).map(|(v, _)| v.abs()))
        .fold(0.0, f64::max)
}

#[test]
fn linear_wave_energy_is_nearly_conserved_and_support_stays_in_the_cone() {
    let spec = PotentialSpec::shifted_decay(1.0, 2.0).unwrap();
    let grid = RadialGrid::new(512, 7.0).unwrap();
    let (f, g) = standard_bump_data(&grid, 2, 1.0);
    let traj = solve_linear(&f, &g, &NoSource, &spec, &grid, 6.0, &SchemeConfig::default()).unwrap();
    let op = RadialOperator::new(&grid, &spec, 2);
    let h = grid.spacing();
    let energy = |u, ut| form_squared(u, &op) + l2_squared(ut, h);
    let e0 = energy(&f, &g);
    for snap in &traj.snapshots {
        let e = energy(&snap.u, &snap.ut);
        assert!((e / e0 - 1.0).abs() < 1e-2, "t = {}: E/E0 = {}", snap.t, e / e0);
        assert_eq!(max_beyond_light_cone(&snap.u, &grid, snap.t), 0.0, "t = {}", snap.t);
    }
}

#[test]
fn picard_without_nonlinearity_returns_the_linear_solution() {
    let spec = PotentialSpec::inverse_square(1.0).unwrap();
    let grid = RadialGrid::new(128, 3.0).unwrap();
    let (f, g) = standard_bump_data(&grid, 2, 0.1);
    let config = PicardConfig {
        params: NonlinearityParams::new(2.5, 0.0).unwrap(),
        spec,
        grid: grid.clone(),
        t_end: 2.0,
        scheme: SchemeConfig::default(),
        m_max: 4,
        tol: 1e-14,
    };
    let (fixed, report) = picard_iterate(&f, &g, &config).unwrap();
    assert_eq!(report.status, PicardStatus::Converged);
    let linear = solve_linear(&f, &g, &NoSource, &spec, &grid, 2.0, &SchemeConfig::default()).unwrap();
    for (a, b) in fixed.snapshots.iter().zip(&linear.snapshots) {
        assert!(a.u.difference(&b.u).max_abs() <= 1e-14);
    }
}

#[test]
fn small_data_semilinear_run_stays_close_to_linear() {
    let spec = PotentialSpec::inverse_square(1.0).unwrap();
    let grid = RadialGrid::new(256, 5.0).unwrap();
    let p = 2.5;
    let eps = 1e-2;
    let (f, g) = standard_bump_data(&grid, 2, eps);
    let config = SemilinearConfig {
        params: NonlinearityParams::new(p, 1.0).unwrap(),
        spec,
        grid: grid.clone(),
        t_end: 4.0,
        scheme: SchemeConfig::default(),
        threshold_factor: 1e3,
        conformal: parameter_select(p).unwrap().params,
        diagnostics_stride: 16,
        record: RecordOptions::default(),
    };
    let (traj, _) = solve_semilinear(&f, &g, &config).unwrap();
    let linear = solve_linear(&f, &g, &NoSource, &spec, &grid, 4.0, &SchemeConfig::default()).unwrap();
    let diff = traj.last().u.difference(&linear.last().u).max_abs();
    assert!(diff > 0.0 && diff < eps.powf(p) * 10.0, "diff {diff:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_solution_scales_with_the_data(scale in -4.0f64..4.0, a in 0.8f64..3.0) {
        let spec = PotentialSpec::inverse_square(a).unwrap();
        let grid = RadialGrid::new(64, 3.0).unwrap();
        let (f, g) = standard_bump_data(&grid, 1, 1.0);
        let scheme = SchemeConfig::default();
        let base = solve_linear(&f, &g, &NoSource, &spec, &grid, 2.0, &scheme).unwrap();
        let scaled = solve_linear(&f.scaled(scale), &g.scaled(scale), &NoSource, &spec, &grid, 2.0, &scheme).unwrap();
        let expected = base.last().u.scaled(scale);
        let err = scaled.last().u.difference(&expected).max_abs();
        prop_assert!(err <= 1e-12 * (1.0 + expected.max_abs()), "err {err:e}");
    }
}
