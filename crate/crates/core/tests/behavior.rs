mod common;

use icboost::criterion::{expected_max_cir, root_optimism, MaxCirEstimator};
use icboost::tree::build_tree;
use icboost::validation::{
    feature_importance, histogram, ks_test, ks_transform, uniform_transform,
};
use icboost::{synthetic, train, GrowthMode, LossKind, LossSpec, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mse() -> LossSpec {
    LossSpec::simple(LossKind::Mse).unwrap()
}

fn centered_gradients(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| mean - v).collect(), vec![1.0; y.len()])
}

#[test]
fn pure_noise_trees_are_stumps() {
    for mode in [GrowthMode::Vanilla, GrowthMode::GlobalSubset] {
        let stumps = (0..100)
            .filter(|&seed| {
                let data = synthetic::pure_noise(1000, 5, 1000 + seed);
                let (g, h) = centered_gradients(data.response());
                let built = build_tree(&data, &g, &h, mode, seed, 1000).unwrap();
                built.tree.n_leaves() == 2
            })
            .count();
        assert!(stumps >= 95, "{mode}: {stumps}/100 stumps");
    }
}

#[test]
fn interaction_needs_two_levels() {
    let data = synthetic::interaction(10_000, 0.1, 3);
    let (g, h) = centered_gradients(data.response());
    let built = build_tree(&data, &g, &h, GrowthMode::Vanilla, 1, 1000).unwrap();
    assert!(built.tree.depth() >= 2, "depth {}", built.tree.depth());
    let mut used: Vec<usize> = built.tree.internal_nodes().map(|(f, _, _)| f).collect();
    used.sort_unstable();
    used.dedup();
    assert_eq!(used, vec![0, 1]);
}

#[test]
fn expected_max_matches_long_path_oracle() {
    let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let q = vec![grid.clone(), grid];
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
    let oracle = common::oracle_expected_max(&q, 100_000, &mut rng);
    let estimate = expected_max_cir(&q, 10_000, 7).unwrap();
    let rel = (estimate - oracle).abs() / oracle;
    assert!(rel < 0.02, "estimate {estimate}, oracle {oracle}");
}

#[test]
fn expected_max_grows_with_split_points_and_features() {
    let nested = [
        vec![0.5],
        vec![0.25, 0.5, 0.75],
        (1..10).map(|k| k as f64 / 10.0).collect::<Vec<_>>(),
        (1..100).map(|k| k as f64 / 100.0).collect::<Vec<_>>(),
    ];
    let mut est = MaxCirEstimator::new(1, 1000).unwrap();
    let mut prev = 0.0;
    for q in &nested {
        let e = est.expected_max_quantiles(std::slice::from_ref(q)).unwrap();
        assert!(e >= prev, "{e} < {prev}");
        prev = e;
    }
    let base = nested[2].clone();
    let mut prev = 0.0;
    for m in 1..=6 {
        let e = est.expected_max_quantiles(&vec![base.clone(); m]).unwrap();
        assert!(e >= prev, "{m} features: {e} < {prev}");
        prev = e;
    }
    let mut prev = 0.0;
    for m in 1..=4 {
        let features: Vec<Vec<f64>> = nested[..m].to_vec();
        let e = est.expected_max_quantiles(&features).unwrap();
        assert!(e >= prev, "{m} mixed features: {e} < {prev}");
        prev = e;
    }
}

#[test]
fn root_optimism_matches_resimulated_gap() {
    // leaf with mse residuals r = [0, 2]: fitted mean 1, plug-in variance 1
    let c = root_optimism(&[0.0, -2.0], &[1.0, 1.0], 1.0).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(77);
    let reps = 100_000;
    let mut gap = 0.0;
    for _ in 0..reps {
        let draw = |rng: &mut Xoshiro256PlusPlus| 1.0 + rng.sample::<f64, _>(StandardNormal);
        let train = [draw(&mut rng), draw(&mut rng)];
        let test = [draw(&mut rng), draw(&mut rng)];
        let w = (train[0] + train[1]) / 2.0;
        let loss = |ys: &[f64; 2]| ys.iter().map(|y| 0.5 * (y - w) * (y - w)).sum::<f64>() / 2.0;
        gap += loss(&test) - loss(&train);
    }
    let gap = gap / reps as f64;
    assert!(
        (c - gap).abs() < 0.1 * gap,
        "plug-in {c}, resimulated {gap}"
    );
}

#[test]
fn discrete_transform_is_uniform() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(31);
    let chi = ChiSquared::new(19.0).unwrap();
    for (loss, f, nuisance) in [
        (LossSpec::simple(LossKind::Logloss).unwrap(), 0.4, 1.0),
        (
            LossSpec::simple(LossKind::Poisson).unwrap(),
            1.2f64.ln(),
            1.0,
        ),
        (LossSpec::negbinom(1.5).unwrap(), 3.0f64.ln(), 1.5),
    ] {
        let n = 100_000;
        let y: Vec<f64> = (0..n)
            .map(|_| common::sample_response(&loss, f, nuisance, &mut rng))
            .collect();
        let u = uniform_transform(&loss, &y, &vec![f; n], Some(nuisance), &mut rng).unwrap();
        let stat = common::chi_squared_uniform(&histogram(&u, 20));
        let p = 1.0 - chi.cdf(stat);
        assert!(p > 0.01, "{}: chi2 {stat}, p {p}", loss.kind());
    }
}

#[test]
fn misspecified_family_is_rejected() {
    let data = synthetic::exponential(10_000, 5);
    let model = train(&data, mse(), &TrainConfig::default()).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let t = ks_transform(&model, &data, &mut rng).unwrap();
    let ks = ks_test(&t.u).unwrap();
    assert!(ks.p_value < 0.01, "p {}", ks.p_value);
}

#[test]
fn importance_concentrates_on_the_signal() {
    let data = synthetic::additive_first_feature(2000, 5, 8);
    let model = train(&data, mse(), &TrainConfig::default()).unwrap();
    let imp = feature_importance(&model);
    assert!(imp.shares[0] > 0.95, "{:?}", imp.shares);
}

#[test]
fn pure_noise_training_stops_early() {
    for seed in 0..5 {
        let data = synthetic::pure_noise(1000, 5, 500 + seed);
        let config = TrainConfig {
            seed,
            max_iterations: usize::MAX,
            ..TrainConfig::default()
        };
        let model = train(&data, mse(), &config).unwrap();
        assert!(
            model.trees.len() < 100,
            "seed {seed}: {} trees",
            model.trees.len()
        );
    }
}

#[test]
fn other_families_train_and_validate() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    let n = 1500;
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    for loss in [
        LossSpec::simple(LossKind::Logloss).unwrap(),
        LossSpec::simple(LossKind::Poisson).unwrap(),
        LossSpec::simple(LossKind::GammaLog).unwrap(),
        LossSpec::simple(LossKind::GammaNegInv).unwrap(),
        LossSpec::negbinom(2.0).unwrap(),
    ] {
        let link = |v: f64| match loss.kind() {
            LossKind::GammaNegInv => -1.0 / (1.0 + 2.0 * v),
            _ => 2.0 * v - 1.0,
        };
        let y: Vec<f64> = x
            .iter()
            .map(|&v| common::sample_response(&loss, link(v), 2.0, &mut rng))
            .collect();
        let data = icboost::Dataset::new(vec![x.clone()], y).unwrap();
        let model = train(&data, loss, &TrainConfig::default()).unwrap();
        assert!(!model.trees.is_empty(), "{}", loss.kind());
        let f = model.predict(&data).unwrap();
        let base = loss
            .mean_loss(data.response(), &vec![model.initial_prediction; n])
            .unwrap();
        assert!(loss.mean_loss(data.response(), &f).unwrap() < base);
        let t = ks_transform(&model, &data, &mut rng).unwrap();
        assert!(ks_test(&t.u).unwrap().p_value > 1e-4, "{}", loss.kind());
    }
}
