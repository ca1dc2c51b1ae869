use pilothop_core::bounds::{
    r1_bar, r2_bar, r3, ra, ra_value, sinr1, sinr1_from_sums, sinr2, sinr3, sinra, sinra_terms,
    CollisionScenario, McConfig, OperatingPoint, R1Evaluator, SinrComponents,
};
use pilothop_core::math::log2_1p;
use pilothop_core::optimizer::{grid_opt, Cost, GridSpec};
use pilothop_core::rng::{substream, Purpose};
use pilothop_core::{BetaMoments, LargeScaleModel};
use proptest::prelude::*;

fn op(m: usize, k: u64, tau_u: usize, tau_p: usize, p_a: f64) -> OperatingPoint {
    OperatingPoint {
        m,
        k,
        tau_u,
        tau_p,
        p_a,
    }
}

fn scenario_strategy() -> impl Strategy<Value = (CollisionScenario, Vec<f64>)> {
    (
        0.01f64..100.0,
        prop::collection::vec(0.01f64..100.0, 0..6),
        prop::collection::vec(0.01f64..100.0, 0..12),
        1usize..200,
        2usize..2000,
    )
        .prop_map(|(beta_0, colliders, others, tau_p, m)| {
            let k_a = (1 + colliders.len() + others.len()) as u64;
            (
                CollisionScenario {
                    beta_0,
                    colliders,
                    k_a,
                    tau_p,
                    m,
                },
                others,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn sinr1_equals_estimation_component_form((s, others) in scenario_strategy()) {
        let direct = sinr1(&s, &others).unwrap();
        let comp = SinrComponents::from_estimation(&s, &others).unwrap().sinr();
        prop_assert!((direct - comp).abs() <= 1e-12 * direct.abs().max(comp.abs()), "{direct} vs {comp}");
    }
}

proptest! {
    #[test]
    fn sum_form_equals_list_form((s, others) in scenario_strategy()) {
        let direct = sinr1(&s, &others).unwrap();
        let s1: f64 = s.colliders.iter().sum();
        let s2: f64 = s.colliders.iter().map(|b| b * b).sum();
        let o: f64 = others.iter().sum();
        let via = sinr1_from_sums(s.beta_0, s1, s2, o, s.tau_p as f64, s.m as f64);
        prop_assert!((direct - via).abs() <= 1e-12 * direct);
        prop_assert!(direct > 0.0);
    }

    #[test]
    fn ra_never_exceeds_r3(
        m in 10usize..1000, tau_u in 20usize..500, frac in 0.05f64..0.95,
        pak_frac in 0.0f64..=1.0, alpha in 0.0f64..0.9,
    ) {
        // Beyond p_a K ~ M the M vs M - 1 gain mismatch lets Ra overtake R3.
        let pak = 1.0 + pak_frac * (m as f64 - 1.0);
        let tau_p = ((tau_u as f64 * frac) as usize).max(1);
        let k = 5000;
        let model = LargeScaleModel::model1(10.0, alpha);
        let point = op(m, k, tau_u, tau_p, 0.0).with_pak(pak);
        let a = ra(&point, &model).unwrap().value;
        let b = r3(&point, &model).unwrap().value;
        prop_assert!(a <= b * (1.0 + 1e-9) + 1e-12, "Ra {a} > R3 {b}");
    }

    #[test]
    fn rates_are_non_negative(
        m in 2usize..300, tau_u in 2usize..200, frac in 0.0f64..=1.0, p_a in 0.0f64..=1.0,
    ) {
        let tau_p = ((tau_u as f64 * frac) as usize).clamp(1, tau_u);
        let point = op(m, 50, tau_u, tau_p, p_a);
        let model = LargeScaleModel::model1(10.0, 0.5);
        let mc = McConfig { n_beta_samples: 20, ..McConfig::default() };
        prop_assert!(r1_bar(&point, &model, &mc).unwrap().value >= 0.0);
        prop_assert!(r2_bar(&point, &model, &mc).unwrap().value >= 0.0);
        prop_assert!(ra(&point, &model).unwrap().value >= 0.0);
    }
}

fn den1(s: &CollisionScenario, others: &[f64]) -> f64 {
    let num = s.tau_p as f64 * (s.m - 1) as f64 * s.beta_0 * s.beta_0;
    num / sinr1(s, others).unwrap()
}

#[test]
fn sinr2_is_sinr1_with_deterministic_betas() {
    let moments = BetaMoments::constant(10.0);
    for (c, k_a) in [(0u64, 1u64), (0, 40), (1, 2), (3, 20), (7, 7 + 1), (2, 100)] {
        for (tau_p, m) in [(1usize, 2usize), (10, 100), (33, 400)] {
            let s = CollisionScenario {
                beta_0: 10.0,
                colliders: vec![10.0; c as usize],
                k_a,
                tau_p,
                m,
            };
            let others = vec![10.0; (k_a - 1 - c) as usize];
            let num = tau_p as f64 * (m - 1) as f64 * 100.0;
            let d2 = num / sinr2(c, k_a, 10.0, &moments, tau_p, m).unwrap();
            let d1 = den1(&s, &others);
            assert!(
                (d1 - d2).abs() <= 1e-10 * d1,
                "c={c} K_a={k_a}: {d1} vs {d2}"
            );
        }
    }
}

#[test]
fn sinr2_denominator_is_the_mean_sinr1_denominator() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let moments = model.analytic_moments();
    let mut rng = substream(21, Purpose::Sampling, 0);
    let (beta_0, tau_p, m) = (7.5, 20usize, 64usize);
    for (c, k_a) in [(1u64, 5u64), (3, 30)] {
        let n = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let colliders: Vec<f64> = (0..c).map(|_| model.sample_beta(&mut rng)).collect();
            let others: Vec<f64> = (0..k_a - 1 - c)
                .map(|_| model.sample_beta(&mut rng))
                .collect();
            let d = den1(
                &CollisionScenario {
                    beta_0,
                    colliders,
                    k_a,
                    tau_p,
                    m,
                },
                &others,
            );
            s1 += d;
            s2 += d * d;
        }
        let mean = s1 / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let num = tau_p as f64 * (m - 1) as f64 * beta_0 * beta_0;
        let d2 = num / sinr2(c, k_a, beta_0, &moments, tau_p, m).unwrap();
        assert!(
            (mean - d2).abs() < 3.0 * se,
            "c={c} K_a={k_a}: {mean} vs {d2} (se {se})"
        );
    }
}

#[test]
fn sinr2_rejects_impossible_collisions() {
    let m = BetaMoments::constant(1.0);
    assert!(sinr2(3, 3, 1.0, &m, 10, 10).is_err());
    assert!(sinr2(0, 0, 1.0, &m, 10, 10).is_err());
    assert!(sinr2(0, 1, 1.0, &m, 10, 1).is_err());
}

#[test]
fn sinr3_approaches_sinra_in_the_large_system_limit() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let mom = model.analytic_moments();
    for (m, k, p_a, tau_p) in [
        (10_000usize, 1_000_000u64, 1e-3, 200usize),
        (4000, 200_000, 2e-3, 150),
    ] {
        for beta_0 in [6.0, 10.0, 14.0] {
            let s3 = sinr3(beta_0, &mom, tau_p, p_a, k, m).unwrap();
            let sa = sinra(beta_0, &mom, tau_p, p_a * k as f64, m);
            assert!((s3 / sa - 1.0).abs() < 0.05, "{s3} vs {sa}");
        }
    }
}

#[test]
fn sinr3_decreases_with_load() {
    let mom = LargeScaleModel::model2(10.0, 0.3).analytic_moments();
    let mut last = f64::INFINITY;
    for i in 0..60 {
        let pak = 1.0 + 5.0 * i as f64;
        let v = sinr3(10.0, &mom, 20, pak / 1000.0, 1000, 100).unwrap();
        assert!(v < last, "pak={pak}");
        last = v;
    }
}

#[test]
fn sinr3_below_one_expected_device_is_a_domain_error() {
    let mom = BetaMoments::constant(10.0);
    assert!(sinr3(10.0, &mom, 10, 0.5 / 100.0, 100, 50).is_err());
    let point = op(50, 100, 100, 10, 0.005);
    assert!(r3(&point, &LargeScaleModel::model1(10.0, 0.0)).is_err());
}

#[test]
fn sinra_terms_sum_to_its_inverse() {
    let mom = LargeScaleModel::model3(10.0, 0.3).analytic_moments();
    let t = sinra_terms(8.0, &mom, 25, 40.0, 150);
    let inv = t.collision + t.multi_device + t.self_scaled;
    assert!((1.0 / inv - sinra(8.0, &mom, 25, 40.0, 150)).abs() < 1e-12);
}

#[test]
fn single_always_active_device_matches_quadrature() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let (m, tau_u, tau_p) = (64usize, 50usize, 5usize);
    let point = op(m, 1, tau_u, tau_p, 1.0);
    let prelog = (tau_u - tau_p) as f64 / tau_u as f64;
    let (tp, m1) = (tau_p as f64, (m - 1) as f64);
    let oracle = prelog
        * model
            .expect(|b| log2_1p(tp * m1 * b * b / (b + 1.0 + tp * b)))
            .unwrap();
    let mc = McConfig {
        n_beta_samples: 20_000,
        ..McConfig::default()
    };
    let r1 = r1_bar(&point, &model, &mc).unwrap();
    assert!(
        (r1.value - oracle).abs() < 3.0 * r1.mc_std_err,
        "{} vs {oracle}",
        r1.value
    );
    let r2 = r2_bar(&point, &model, &mc).unwrap();
    assert!((r2.value - oracle).abs() < 1e-9 * oracle);
}

#[test]
fn bounds_are_ordered_on_a_small_grid() {
    let mc = McConfig {
        n_beta_samples: 400,
        ..McConfig::default()
    };
    for model in [
        LargeScaleModel::model1(10.0, 0.0),
        LargeScaleModel::model1(10.0, 0.5),
    ] {
        for (tau_p, pak) in [(10usize, 5.0), (33, 30.0), (60, 120.0)] {
            let point = op(100, 400, 100, tau_p, 0.0).with_pak(pak);
            let r1 = r1_bar(&point, &model, &mc).unwrap();
            let r2 = r2_bar(&point, &model, &mc).unwrap().value;
            let r3v = r3(&point, &model).unwrap().value;
            let rav = ra(&point, &model).unwrap().value;
            let tol = 3.0 * r1.mc_std_err + 1e-12 * r1.value;
            assert!(r1.value + tol >= r2, "R1 {} < R2 {r2}", r1.value);
            assert!(r2 * (1.0 + 1e-12) >= r3v, "R2 {r2} < R3 {r3v}");
            assert!(r3v * (1.0 + 1e-12) >= rav, "R3 {r3v} < Ra {rav}");
        }
    }
}

#[test]
fn per_device_rate_times_k_is_the_sum_rate_for_identical_devices() {
    let model = LargeScaleModel::model1(10.0, 0.0);
    let mc = McConfig {
        n_beta_samples: 8,
        ..McConfig::default()
    };
    let point = op(80, 300, 120, 30, 0.1);
    let ev = R1Evaluator::new(&model, &mc, 300).unwrap();
    let sum = ev.evaluate(&point).unwrap().value;
    let one = ev.per_device(&point, 10.0).unwrap().value;
    assert!(
        (one * 300.0 - sum).abs() < 1e-12 * sum,
        "{} vs {sum}",
        one * 300.0
    );
}

#[test]
fn per_device_rate_falls_as_the_population_grows() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let mc = McConfig {
        n_beta_samples: 300,
        ..McConfig::default()
    };
    let ev = R1Evaluator::new(&model, &mc, 400).unwrap();
    let mut last = f64::INFINITY;
    for k in [20u64, 50, 100, 200, 400] {
        let v = ev
            .per_device(&op(100, k, 100, 20, 0.2), 10.0)
            .unwrap()
            .value;
        assert!(v < last, "K={k}: {v}");
        last = v;
    }
}

#[test]
fn sum_rate_saturates_then_falls_with_load() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let mc = McConfig {
        n_beta_samples: 200,
        ..McConfig::default()
    };
    let ev = R1Evaluator::new(&model, &mc, 1000).unwrap();
    let values: Vec<f64> = [2.0, 8.0, 30.0, 120.0, 500.0]
        .iter()
        .map(|&pak| {
            ev.evaluate(&op(100, 1000, 100, 33, 0.0).with_pak(pak))
                .unwrap()
                .value
        })
        .collect();
    let peak = values.iter().cloned().fold(f64::MIN, f64::max);
    assert!(values[0] < peak && values[4] < peak, "{values:?}");
    // Diminishing returns before the peak.
    assert!(values[2] / values[1] < values[1] / values[0], "{values:?}");
}

#[test]
fn nothing_to_send_means_zero_rate() {
    let model = LargeScaleModel::model2(10.0, 0.2);
    let mc = McConfig {
        n_beta_samples: 10,
        ..McConfig::default()
    };
    for point in [op(50, 100, 40, 40, 0.3), op(50, 100, 40, 10, 0.0)] {
        assert_eq!(r1_bar(&point, &model, &mc).unwrap().value, 0.0);
        assert_eq!(r2_bar(&point, &model, &mc).unwrap().value, 0.0);
        assert_eq!(ra(&point, &model).unwrap().value, 0.0);
    }
    assert!(r1_bar(&op(50, 100, 40, 41, 0.3), &model, &mc).is_err());
    assert!(r1_bar(&op(1, 100, 40, 4, 0.3), &model, &mc).is_err());
}

#[test]
fn ra_surface_is_unimodal_with_an_interior_maximum() {
    let model = LargeScaleModel::model1(10.0, 0.5);
    let taus: Vec<usize> = (1..40).map(|i| i * 10).collect();
    let paks: Vec<f64> = (0..40).map(|i| 10f64.powf(4.0 * i as f64 / 39.0)).collect();
    let surf: Vec<Vec<f64>> = taus
        .iter()
        .map(|&t| {
            paks.iter()
                .map(|&p| ra_value(400, t, p, 400, &model).unwrap())
                .collect()
        })
        .collect();
    let single_peak = |v: &[f64]| {
        let i = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        v[..=i].windows(2).all(|w| w[1] >= w[0]) && v[i..].windows(2).all(|w| w[1] <= w[0])
    };
    for row in &surf {
        assert!(single_peak(row));
    }
    for j in 0..paks.len() {
        let col: Vec<f64> = surf.iter().map(|r| r[j]).collect();
        assert!(single_peak(&col));
    }
    let (mut bi, mut bj) = (0, 0);
    for i in 0..taus.len() {
        for j in 0..paks.len() {
            if surf[i][j] > surf[bi][bj] {
                (bi, bj) = (i, j);
            }
        }
    }
    assert!(bi > 0 && bi + 1 < taus.len() && bj > 0 && bj + 1 < paks.len());
}

#[test]
fn r3_and_r1_coarse_maximizers_agree() {
    let model = LargeScaleModel::model1(10.0, 0.0);
    let template = op(100, 800, 100, 1, 0.0);
    let mut grid = GridSpec::full(100, 800);
    grid.refinements = 0;
    let mc = McConfig {
        n_beta_samples: 4,
        ..McConfig::default()
    };
    let a = grid_opt(Cost::R1, &template, &model, &grid, &mc).unwrap();
    let b = grid_opt(Cost::R3, &template, &model, &grid, &mc).unwrap();
    let tau_step = (grid.tau_p_max - grid.tau_p_min) as f64 / (grid.n_tau - 1) as f64;
    let pak_ratio = (grid.pak_max / grid.pak_min).powf(1.0 / (grid.n_pak - 1) as f64);
    let dt = (a.tau_p_opt as f64 - b.tau_p_opt as f64).abs() / tau_step;
    let dp = (a.pak_opt / b.pak_opt).ln().abs() / pak_ratio.ln();
    assert!(
        dt <= 1.0 + 1e-9 && dp <= 1.0 + 1e-9,
        "R1 ({}, {}) R3 ({}, {})",
        a.tau_p_opt,
        a.pak_opt,
        b.tau_p_opt,
        b.pak_opt
    );
}

#[test]
fn r1_is_reproducible_across_thread_counts() {
    let model = LargeScaleModel::model3(10.0, 0.3);
    let mc = McConfig {
        n_beta_samples: 500,
        seed: 99,
        ..McConfig::default()
    };
    let point = op(100, 500, 100, 25, 0.06);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| r1_bar(&point, &model, &mc).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.mc_std_err.to_bits(), b.mc_std_err.to_bits());
    let other = r1_bar(&point, &model, &McConfig { seed: 100, ..mc }).unwrap();
    assert_ne!(a.value, other.value);
}

#[test]
fn bigger_pool_serves_the_same_draws() {
    let model = LargeScaleModel::model2(10.0, 0.4);
    let mc = McConfig {
        n_beta_samples: 300,
        seed: 5,
        ..McConfig::default()
    };
    let point = op(64, 200, 80, 16, 0.1);
    let small = R1Evaluator::new(&model, &mc, 1)
        .unwrap()
        .evaluate(&point)
        .unwrap();
    let big = R1Evaluator::new(&model, &mc, 200)
        .unwrap()
        .evaluate(&point)
        .unwrap();
    assert_eq!(small.value.to_bits(), big.value.to_bits());
}
