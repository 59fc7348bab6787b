use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::Rng;

use mixrate::estimate::{min_distance_estimate, order_threshold, select_order, sup_distance, EstimateOptions, EstimatorResult};
use mixrate::family::sample_mixture;
use mixrate::rng::stream;
use mixrate::{ComponentFamily, Gaussian, Mixing, Sample};

fn fixed(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(14),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn mix_cdf(fam: &Gaussian, g: &Mixing, x: f64) -> f64 {
    g.atoms().map(|(t, w)| w * fam.cdf(x, t)).sum()
}

/// Brute-force sup over a uniform grid plus the sample points, checking the
/// empirical CDF on both sides of every jump.
fn grid_sup(fam: &Gaussian, g: &Mixing, data: &[f64], points: usize) -> f64 {
    let lo = data[0].min(g.min_location()) - 10.0;
    let hi = data[data.len() - 1].max(g.max_location()) + 10.0;
    let n = data.len() as f64;
    let mut xs: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    xs.extend_from_slice(data);
    let mut best: f64 = 0.0;
    for x in xs {
        let f = mix_cdf(fam, g, x);
        let le = data.iter().filter(|&&v| v <= x).count() as f64 / n;
        let lt = data.iter().filter(|&&v| v < x).count() as f64 / n;
        best = best.max((f - le).abs()).max((f - lt).abs());
    }
    best
}

/// `Phi^{-1}` by bisection on the family CDF.
fn std_quantile(fam: &Gaussian, p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fam.cdf(mid, 0.0) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn quick(seed: u64) -> EstimateOptions {
    EstimateOptions {
        restarts: Some(6),
        ..EstimateOptions::with_seed(seed)
    }
}

#[test]
fn sup_distance_examples() {
    let fam = Gaussian::standard();
    let two = Sample::new(vec![1.0, -1.0]).unwrap();
    let v = sup_distance(&fam, &Mixing::dirac(0.0), &two).unwrap();
    assert!((v - (fam.cdf(1.0, 0.0) - 0.5)).abs() < 1e-15);
    assert!((v - 0.341_344_746).abs() < 1e-9);
    assert!((v - grid_sup(&fam, &Mixing::dirac(0.0), two.data(), 100_001)).abs() < 1e-12);
    let one = Sample::new(vec![0.0]).unwrap();
    assert_eq!(sup_distance(&fam, &Mixing::dirac(0.0), &one).unwrap(), 0.5);

    let n = 25;
    let g = Mixing::new([(-1.0, 0.3), (2.0, 0.7)]).unwrap();
    let data: Vec<f64> = (1..=n)
        .map(|i| {
            let p = (2 * i - 1) as f64 / (2 * n) as f64;
            let (mut lo, mut hi) = (-20.0, 20.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mix_cdf(&fam, &g, mid) < p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    let v = sup_distance(&fam, &g, &Sample::new(data).unwrap()).unwrap();
    assert!((v - 1.0 / (2 * n) as f64).abs() < 1e-12, "{v}");
}

#[test]
fn sup_distance_matches_dense_grid() {
    let fam = Gaussian::standard();
    let mut rng = stream(2024, &[]);
    for case in 0..100 {
        let k = rng.gen_range(1..=4);
        let g = Mixing::from_unnormalized((0..k).map(|_| (rng.gen_range(-4.0..4.0), rng.gen_range(0.1..1.0)))).unwrap();
        let n = rng.gen_range(1..=30);
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let sample = Sample::new(data).unwrap();
        let exact = sup_distance(&fam, &g, &sample).unwrap();
        let grid = grid_sup(&fam, &g, sample.data(), 100_000);
        assert!((exact - grid).abs() <= 1e-9, "case {case}: {exact} vs {grid}");
    }
}

#[test]
fn single_point_sample_fits_at_zero() {
    let fam = Gaussian::standard();
    let r = min_distance_estimate(&fam, &Sample::new(vec![0.0]).unwrap(), 1, &EstimateOptions::default()).unwrap();
    assert!(r.g_hat.locations()[0].abs() < 1e-6, "{r:?}");
    assert!((r.objective - 0.5).abs() < 1e-6);
    assert_eq!(r.selected_order, 1);
}

#[test]
fn interleaved_quantiles_fit_at_zero() {
    let fam = Gaussian::standard();
    let n = 9;
    let data: Vec<f64> = (1..=n).map(|i| std_quantile(&fam, (2 * i - 1) as f64 / (2 * n) as f64)).collect();
    let r = min_distance_estimate(&fam, &Sample::new(data).unwrap(), 1, &EstimateOptions::default()).unwrap();
    assert!(r.g_hat.locations()[0].abs() < 1e-6, "{r:?}");
    assert!(r.objective >= 1.0 / 18.0 - 1e-12 && r.objective - 1.0 / 18.0 < 1e-8, "{}", r.objective);
}

#[test]
fn truth_is_dominated_and_result_is_canonical() {
    let fam = Gaussian::standard();
    let truth = Mixing::new([(-2.0, 0.4), (1.5, 0.6)]).unwrap();
    let sample = sample_mixture(&fam, &truth, 2000, &mut stream(9, &[])).unwrap();
    let opts = EstimateOptions {
        candidates: vec![truth.clone(), Mixing::dirac(0.3)],
        ..quick(1)
    };
    let r = min_distance_estimate(&fam, &sample, 2, &opts).unwrap();
    let at_truth = sup_distance(&fam, &truth, &sample).unwrap();
    assert!(r.objective <= at_truth);
    assert!(r.objective <= sup_distance(&fam, &Mixing::dirac(0.3), &sample).unwrap());
    assert!(r.objective <= 2.0 * at_truth);
    assert!(r.objective >= 0.0 && r.g_hat.order() <= 2);
    assert!(r.g_hat.locations().windows(2).all(|w| w[0] < w[1]));
    assert!((r.g_hat.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(r.objective, sup_distance(&fam, &r.g_hat, &sample).unwrap());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let fam = Gaussian::standard();
    let truth = Mixing::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
    let sample = sample_mixture(&fam, &truth, 500, &mut stream(10, &[])).unwrap();
    let run = || min_distance_estimate(&fam, &sample, 3, &quick(77)).unwrap();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    assert_eq!(serial, wide);
    assert_eq!(serial, run());
}

#[test]
fn result_json_round_trip() {
    let fam = Gaussian::standard();
    let sample = sample_mixture(&fam, &Mixing::dirac(0.5), 200, &mut stream(11, &[])).unwrap();
    let r = select_order(&fam, &sample, 0.25, 3, &quick(2)).unwrap();
    let back: EstimatorResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn order_rule_threshold() {
    assert!((order_threshold(100, 0.1) - 0.158_489_319).abs() < 1e-9);
}

/// `m_hat` over 100 seeded samples of size 4000.
fn selected_orders(truth: &Mixing, seed: u64) -> Vec<usize> {
    use rayon::prelude::*;
    let fam = Gaussian::standard();
    (0..100u64)
        .into_par_iter()
        .map(|r| {
            let sample = sample_mixture(&fam, truth, 4000, &mut stream(seed, &[r])).unwrap();
            select_order(&fam, &sample, 0.25, 6, &EstimateOptions::with_seed(r)).unwrap().selected_order
        })
        .collect()
}

#[test]
fn single_component_is_selected_for_a_dirac() {
    let orders = selected_orders(&Mixing::dirac(0.0), 31);
    let hits = orders.iter().filter(|&&m| m == 1).count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn two_components_are_selected_for_separated_pair() {
    let orders = selected_orders(&Mixing::new([(-3.0, 0.5), (3.0, 0.5)]).unwrap(), 32);
    let hits = orders.iter().filter(|&&m| m == 2).count();
    assert!(hits >= 95, "{hits}/100");
}

proptest! {
    #![proptest_config(fixed(12))]

    #[test]
    fn objective_is_monotone_in_the_order(seed in 0u64..1000, n in 50usize..400) {
        let fam = Gaussian::standard();
        let truth = Mixing::new([(-1.5, 0.3), (0.0, 0.3), (2.0, 0.4)]).unwrap();
        let sample = sample_mixture(&fam, &truth, n, &mut stream(seed, &[])).unwrap();
        let opts = quick(seed);
        let objs: Vec<f64> = (1..=4)
            .map(|m| min_distance_estimate(&fam, &sample, m, &opts).unwrap().objective)
            .collect();
        for w in objs.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", objs);
        }
    }

    #[test]
    fn supplied_candidates_are_never_beaten_by_the_result(seed in 0u64..1000, loc in -3.0f64..3.0) {
        let fam = Gaussian::standard();
        let sample = sample_mixture(&fam, &Mixing::dirac(0.0), 300, &mut stream(seed, &[1])).unwrap();
        let cand = Mixing::new([(loc, 0.5), (loc + 0.7, 0.5)]).unwrap();
        let opts = EstimateOptions { candidates: vec![cand.clone()], ..quick(seed) };
        let r = min_distance_estimate(&fam, &sample, 2, &opts).unwrap();
        prop_assert!(r.objective <= sup_distance(&fam, &cand, &sample).unwrap());
    }

    #[test]
    fn estimation_is_deterministic(seed in 0u64..1000) {
        let fam = Gaussian::standard();
        let sample = sample_mixture(&fam, &Mixing::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap(), 200, &mut stream(seed, &[2])).unwrap();
        let a = min_distance_estimate(&fam, &sample, 2, &quick(seed)).unwrap();
        let b = min_distance_estimate(&fam, &sample, 2, &quick(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}
