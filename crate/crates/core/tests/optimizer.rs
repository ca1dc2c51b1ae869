use pilothop_core::bounds::{r1_bar, r3, ra_value, McConfig, OperatingPoint};
use pilothop_core::optimizer::{
    asymptotic_1d, asymptotic_1d_objective, grid_opt, heuristic1, heuristic2_1d,
    heuristic2_objective, maximize_1d, optimize, solve_s0, Cost, GridSpec,
};
use pilothop_core::{LargeScaleModel, Method};
use proptest::prelude::*;

fn template(m: usize, k: u64, tau_u: usize) -> OperatingPoint {
    OperatingPoint {
        m,
        k,
        tau_u,
        tau_p: 1,
        p_a: 0.0,
    }
}

fn ppc() -> LargeScaleModel {
    LargeScaleModel::perfect_power_control(10.0)
}

#[test]
fn s0_is_bracketed_by_a_fine_scan() {
    let g = |x: f64| (1.0 + x).ln() - 2.0 * x / (1.0 + x);
    let s0 = solve_s0();
    let mut root = None;
    let mut x = 3.9;
    while x < 3.95 {
        if g(x) < 0.0 && g(x + 1e-6) >= 0.0 {
            root = Some(x);
        }
        x += 1e-6;
    }
    let r = root.expect("sign change in [3.9, 3.95]");
    assert!(s0 >= r - 1e-9 && s0 <= r + 1e-6 + 1e-9, "{s0} vs {r}");
}

#[test]
fn heuristic1_scales_with_the_square_root_of_m_tau_u() {
    let (t1, p1) = heuristic1(99, 50).unwrap();
    let (t2, p2) = heuristic1(396, 200).unwrap();
    assert_eq!((t1, t2), (33, 132));
    assert!((p2 / p1 - 4.0).abs() < 1e-12);
}

#[test]
fn heuristic2_with_equal_gains_matches_a_fine_scan_and_heuristic1() {
    let (_, _, b) = heuristic2_1d(100, 100, &ppc()).unwrap();
    let f = |b: f64| b * (1.0 + 1.0 / (3.0 * b * b)).log2();
    let (mut best, mut arg) = (f64::MIN, 0.0);
    for i in 1..=200_000 {
        let x = i as f64 * 5e-6;
        if f(x) > best {
            (best, arg) = (f(x), x);
        }
    }
    assert!((b - arg).abs() < 1e-4 * arg, "{b} vs {arg}");
    // The stationarity condition is the s0 equation with x = 1 / (3 b^2).
    let from_s0 = 1.0 / (3.0 * solve_s0()).sqrt();
    assert!((b - from_s0).abs() < 1e-4 * from_s0);
    let (_, p1) = heuristic1(100, 100).unwrap();
    assert!((b * 100.0 - p1).abs() < 1e-4 * p1);
}

#[test]
fn heuristic2_scale_depends_only_on_the_statistics() {
    let model = LargeScaleModel::model2(10.0, 0.3);
    let a = heuristic2_1d(100, 100, &model).unwrap();
    let b = heuristic2_1d(300, 400, &model).unwrap();
    assert_eq!(a.2.to_bits(), b.2.to_bits());
    assert_eq!(b.0, 100);
    assert!((b.1 - a.2 * (300.0f64 * 400.0).sqrt()).abs() < 1e-9 * b.1);
    // Path-loss constant cancels.
    let c = heuristic2_1d(100, 100, &LargeScaleModel::model2(1.0, 0.3)).unwrap();
    assert!((c.2 - a.2).abs() < 1e-4 * a.2);
}

#[test]
fn heuristic2_scale_grows_with_shadowing_variance() {
    let mut last = 0.0;
    for s2 in [0.0, 0.1, 0.25, 0.5] {
        let (_, _, b) = heuristic2_1d(100, 100, &LargeScaleModel::model2(10.0, s2)).unwrap();
        assert!(b > last, "sigma^2 = {s2}: {b}");
        last = b;
    }
}

#[test]
fn heuristic2_objective_vanishes_at_both_ends() {
    let m = LargeScaleModel::model1(10.0, 0.4);
    assert!(heuristic2_objective(1e-9, &m).unwrap() < 1e-6);
    assert!(heuristic2_objective(1e6, &m).unwrap() < 1e-5);
}

#[test]
fn asymptotic_objective_is_ra_on_the_third_line() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let (tau_u, m) = (99usize, 99usize);
    let root = (tau_u as f64 * m as f64).sqrt();
    for b in [0.05, 0.2, 0.4, 1.3] {
        let obj = asymptotic_1d_objective(b, tau_u, m, &model).unwrap() * root * 2.0 / 3.0;
        let ra = ra_value(tau_u, 33, b * root, m, &model).unwrap();
        assert!((obj - ra).abs() < 1e-10 * ra, "b={b}: {obj} vs {ra}");
    }
    let (t, pak, _) = asymptotic_1d(tau_u, m, &model).unwrap();
    assert_eq!(t, 33);
    let (mut best, mut arg) = (f64::MIN, 0.0);
    for i in 0..40_000 {
        let p = 1.0 + i as f64 * 0.005;
        let v = ra_value(tau_u, 33, p, m, &model).unwrap();
        if v > best {
            (best, arg) = (v, p);
        }
    }
    assert!((pak - arg).abs() < 1e-3 * arg, "{pak} vs {arg}");
}

#[test]
fn asymptotic_1d_sits_above_heuristic1_with_equal_gains() {
    let (_, pa, _) = asymptotic_1d(100, 100, &ppc()).unwrap();
    let (_, ph) = heuristic1(100, 100).unwrap();
    let ratio = pa / ph;
    assert!(ratio > 1.0 && ratio < 1.5, "{pa} vs {ph}");
}

#[test]
fn asymptotic_objective_vanishes_at_both_ends() {
    let m = LargeScaleModel::model3(10.0, 0.2);
    assert!(asymptotic_1d_objective(1e-9, 100, 100, &m).unwrap() < 1e-6);
    assert!(asymptotic_1d_objective(1e6, 100, 100, &m).unwrap() < 1e-5);
}

#[test]
fn maximize_1d_finds_a_log_parabola_peak() {
    let (x, v, it) = maximize_1d(|x: f64| Ok(-(x.ln() - 2.0).powi(2)), 1e-3, 1e3, 1e-8).unwrap();
    assert!((x - 2f64.exp()).abs() < 1e-6);
    assert!(v <= 0.0 && it > 48);
    assert!(maximize_1d(|x: f64| Ok(x), 0.0, 1.0, 1e-6).is_err());
}

#[test]
fn ra_grid_optimum_is_interior_at_large_m_and_tau_u() {
    let t = template(400, 5000, 400);
    let grid = GridSpec::full(400, 5000);
    let r = grid_opt(
        Cost::Ra,
        &t,
        &LargeScaleModel::model1(10.0, 0.5),
        &grid,
        &McConfig::default(),
    )
    .unwrap();
    let frac = r.tau_p_opt as f64 / 400.0;
    assert!((0.2..=0.5).contains(&frac), "tau_p/tau_u = {frac}");
    assert!(r.pak_opt > grid.pak_min && r.pak_opt < grid.pak_max);
    assert_eq!(r.diagnostics.stage_points, vec![625, 225]);
    assert_eq!(r.evaluations, 850);
}

#[test]
fn single_point_grid_returns_that_point() {
    let t = template(100, 800, 100);
    let model = LargeScaleModel::model1(10.0, 0.5);
    let r = grid_opt(
        Cost::Ra,
        &t,
        &model,
        &GridSpec::single(20, 50.0),
        &McConfig::default(),
    )
    .unwrap();
    assert_eq!(r.tau_p_opt, 20);
    assert_eq!(r.pak_opt, 50.0);
    assert_eq!(r.rate, ra_value(100, 20, 50.0, 100, &model).unwrap());
    assert_eq!(r.evaluations, 1);
}

#[test]
fn r3_and_ra_maximizers_agree_within_a_fine_cell() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    for tau_u in [100usize, 200] {
        let t = template(100, 800, tau_u);
        let grid = GridSpec::full(tau_u, 800);
        let a = grid_opt(Cost::R3, &t, &model, &grid, &McConfig::default()).unwrap();
        let b = grid_opt(Cost::Ra, &t, &model, &grid, &McConfig::default()).unwrap();
        let tau_step = (grid.tau_p_max - grid.tau_p_min) as f64 / (grid.n_tau - 1) as f64;
        let fine_tau = (2.0 * tau_step / (grid.n_refine - 1) as f64).ceil();
        let ratio = (grid.pak_max / grid.pak_min).ln() / (grid.n_pak - 1) as f64;
        let fine_pak = 2.0 * ratio / (grid.n_refine - 1) as f64;
        let dt = (a.tau_p_opt as f64 - b.tau_p_opt as f64).abs();
        let dp = (a.pak_opt / b.pak_opt).ln().abs();
        assert!(
            dt <= fine_tau,
            "tau_u={tau_u}: tau_p {} vs {}",
            a.tau_p_opt,
            b.tau_p_opt
        );
        assert!(
            dp <= fine_pak * (1.0 + 1e-9),
            "tau_u={tau_u}: pak {} vs {}",
            a.pak_opt,
            b.pak_opt
        );
    }
}

#[test]
fn reported_r1_rate_is_reproduced_by_a_fresh_evaluation() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let mc = McConfig {
        n_beta_samples: 60,
        seed: 4,
        ..McConfig::default()
    };
    let t = template(100, 400, 100);
    let mut grid = GridSpec::full(100, 400);
    (grid.n_tau, grid.n_pak, grid.n_refine) = (6, 6, 3);
    let r = optimize(Method::R1Opt, &t, &model, &grid, &mc).unwrap();
    assert_eq!(r.diagnostics.counts.r1, 36 + 9);
    let again = r1_bar(&r.apply(&t), &model, &mc).unwrap();
    assert_eq!(again.value.to_bits(), r.rate.to_bits());
}

#[test]
fn closed_form_methods_never_evaluate_r1() {
    let model = LargeScaleModel::model2(10.0, 0.2);
    let t = template(100, 800, 100);
    for method in [Method::Rh0, Method::Rh1D, Method::Ra1D] {
        let r = optimize(
            method,
            &t,
            &model,
            &GridSpec::full(100, 800),
            &McConfig::default(),
        )
        .unwrap();
        assert_eq!(r.diagnostics.counts.r1, 0, "{method}");
        assert_eq!(r.method, method);
        assert!(r.evaluations >= 1);
    }
}

#[test]
fn ra_grid_beats_ra_at_the_heuristic_point() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    for (m, tau_u) in [(100usize, 100usize), (50, 300), (400, 60)] {
        let t = template(m, 5000, tau_u);
        let g = grid_opt(
            Cost::Ra,
            &t,
            &model,
            &GridSpec::full(tau_u, 5000),
            &McConfig::default(),
        )
        .unwrap();
        let (tp, pak) = heuristic1(tau_u, m).unwrap();
        let h = ra_value(tau_u, tp, pak, m, &model).unwrap();
        assert!(g.rate >= h, "M={m} tau_u={tau_u}: {} < {h}", g.rate);
    }
}

#[test]
fn r3_grid_rate_is_r3_at_the_reported_point() {
    let model = LargeScaleModel::model3(10.0, 0.2);
    let t = template(64, 300, 80);
    let r = optimize(
        Method::R3Opt,
        &t,
        &model,
        &GridSpec::full(80, 300),
        &McConfig::default(),
    )
    .unwrap();
    assert_eq!(
        r.rate.to_bits(),
        r3(&r.apply(&t), &model).unwrap().value.to_bits()
    );
}

#[test]
fn method_names_parse_case_insensitively() {
    assert_eq!("ra-1d".parse::<Method>().unwrap(), Method::Ra1D);
    assert_eq!("RH0".parse::<Method>().unwrap(), Method::Rh0);
    assert_eq!(Method::R1Opt.to_string(), "R1-opt");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_method_returns_an_admissible_point(
        tau_u in 3usize..300, m in 2usize..500, k in 1u64..2000, alpha in 0.0f64..0.9,
    ) {
        let model = LargeScaleModel::model1(10.0, alpha);
        let t = template(m, k, tau_u);
        let mut grid = GridSpec::full(tau_u, k);
        (grid.n_tau, grid.n_pak, grid.n_refine) = (8, 8, 5);
        let mc = McConfig { n_beta_samples: 4, ..McConfig::default() };
        for method in Method::ALL {
            let r = optimize(method, &t, &model, &grid, &mc).unwrap();
            prop_assert!(r.tau_p_opt >= 1 && r.tau_p_opt <= tau_u, "{method}: tau_p {}", r.tau_p_opt);
            prop_assert!(r.pak_opt > 0.0 && r.pak_opt <= k as f64, "{method}: pak {}", r.pak_opt);
            prop_assert!(r.rate >= 0.0 && r.rate.is_finite());
        }
    }
}
