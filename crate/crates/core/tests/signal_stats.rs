use graphsmooth::graph::{self, build_complete, build_path, build_star, GraphKind};
use graphsmooth::signal::{self, SmoothnessBudget};
use graphsmooth::SeededStream;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

#[test]
fn normal_sampler_moments() {
    let mut rng = SeededStream::new(99);
    let k = 1_000_000;
    let draws: Vec<f64> = (0..k).map(|_| rng.standard_normal()).collect();
    let mean = draws.iter().sum::<f64>() / k as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    assert!(mean.abs() < 5.0 / (k as f64).sqrt(), "mean {mean}");
    assert!((0.99..=1.01).contains(&var), "variance {var}");
}

#[test]
fn normal_sampler_goodness_of_fit() {
    let bins = 16;
    let k = 100_000;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let edges: Vec<f64> = (1..bins).map(|i| normal.inverse_cdf(i as f64 / bins as f64)).collect();
    let mut counts = vec![0usize; bins];
    let mut rng = SeededStream::new(5);
    for _ in 0..k {
        let v = rng.standard_normal();
        counts[edges.partition_point(|&e| e < v)] += 1;
    }
    let expected = k as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi-square {stat} ≥ {critical}");
}

#[test]
fn noise_scale_and_zero_noise() {
    let mut rng = SeededStream::new(3);
    let e = signal::gen_noise(200_000, 2.5, &mut rng).unwrap();
    let var = e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64;
    assert!((var / 6.25 - 1.0).abs() < 0.02, "{var}");
    assert!(signal::gen_noise(10, 0.0, &mut rng).unwrap().iter().all(|&v| v == 0.0));
    assert!(signal::gen_noise(10, -1.0, &mut rng).is_err());
}

#[test]
fn star_recipe_stays_within_budget() {
    let (n, t) = (5, 200);
    let s_t = (t as f64).sqrt();
    let g = build_star(t).unwrap();
    for seed in 0..50 {
        let x = signal::gen_smooth_star(n, t, s_t, &mut SeededStream::new(seed)).unwrap();
        let qv = graph::quadratic_variation(&g, &x).unwrap();
        assert!(qv <= 10.0 * s_t, "seed {seed}: {qv}");
    }
}

#[test]
fn recipes_match_expected_variation() {
    let (n, t, s_t) = (4, 60, 7.5);
    let draws = 400;
    let cases: [(GraphKind, f64); 2] = [
        (GraphKind::Star, signal::star_expected_variation(t, s_t)),
        (GraphKind::Complete, signal::complete_expected_variation(t, s_t)),
    ];
    for (kind, want) in cases {
        let g = graph::build(kind, t).unwrap();
        let budget = SmoothnessBudget::for_kind(s_t, kind).unwrap();
        let mut rng = SeededStream::new(kind as u64 + 10);
        let mean = (0..draws)
            .map(|_| graph::quadratic_variation(&g, &budget.generate(n, t, &mut rng).unwrap()).unwrap())
            .sum::<f64>()
            / draws as f64;
        assert!((mean / want - 1.0).abs() < 0.05, "{kind:?}: {mean} vs {want}");
    }
}

#[test]
fn path_walk_variation() {
    let (n, t, s_t) = (3, 80, 12.0);
    let g = build_path(t).unwrap();
    let mut rng = SeededStream::new(21);
    let draws = 400;
    let mean = (0..draws)
        .map(|_| graph::quadratic_variation(&g, &signal::gen_smooth_path(n, t, s_t, &mut rng).unwrap()).unwrap())
        .sum::<f64>()
        / draws as f64;
    assert!((mean / s_t - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn zero_budget_is_block_constant() {
    let mut rng = SeededStream::new(8);
    let g = build_complete(9).unwrap();
    let x = signal::gen_smooth_complete(3, 9, 0.0, &mut rng).unwrap();
    assert_eq!(graph::quadratic_variation(&g, &x).unwrap(), 0.0);
    let s = signal::gen_smooth_star(3, 9, 0.0, &mut rng).unwrap();
    assert_eq!(graph::quadratic_variation(&build_star(9).unwrap(), &s).unwrap(), 0.0);
}

#[test]
fn generators_are_deterministic() {
    for kind in [GraphKind::Star, GraphKind::Complete, GraphKind::Path] {
        let budget = SmoothnessBudget::for_kind(4.0, kind).unwrap();
        let a = budget.generate(3, 17, &mut SeededStream::new(123)).unwrap();
        let b = budget.generate(3, 17, &mut SeededStream::new(123)).unwrap();
        let c = budget.generate(3, 17, &mut SeededStream::new(124)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn centering_zeroes_block_means() {
    let x = signal::gen_smooth_star(4, 12, 3.0, &mut SeededStream::new(2)).unwrap();
    let c = signal::center_blocks(&x);
    for b in c.blocks() {
        assert!(b.iter().sum::<f64>().abs() < 1e-14);
    }
}
