//! Seeded data generators for tests, examples and benchmarks.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::data::Dataset;
use crate::losses::sigmoid;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// `x ~ U(0, 5)`, `y ~ N(x, 1)`.
pub fn linear_gaussian(n: usize, seed: u64) -> Dataset {
    additive_first_feature(n, 1, seed)
}

/// `m` features `x_j ~ U(0, 5)`; `y ~ N(x_1, 1)` depends on the first one only.
pub fn additive_first_feature(n: usize, m: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| r.random_range(0.0..5.0)).collect())
        .collect();
    let y = columns[0]
        .iter()
        .map(|&x| x + r.sample::<f64, _>(StandardNormal))
        .collect();
    Dataset::new(columns, y).expect("generated columns are rectangular")
}

/// `m` uniform features and an independent standard normal response.
pub fn pure_noise(n: usize, m: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| r.random::<f64>()).collect())
        .collect();
    let y = (0..n).map(|_| r.sample(StandardNormal)).collect();
    Dataset::new(columns, y).expect("generated columns are rectangular")
}

/// `x_1, x_2 ~ U(−1, 1)`, `y = 1{x_1 > 0}·1{x_2 > 0} + N(0, noise²)`.
pub fn interaction(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x1: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let x2: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let eps = Normal::new(0.0, noise).expect("noise is non-negative");
    let y = x1
        .iter()
        .zip(&x2)
        .map(|(&a, &b)| f64::from(u8::from(a > 0.0 && b > 0.0)) + eps.sample(&mut r))
        .collect();
    Dataset::new(vec![x1, x2], y).expect("generated columns are rectangular")
}

/// Binary response with `m >= 3` standard normal features and
/// `logit p = x_1 − 0.5 x_2 + x_1 x_3`.
pub fn binary(n: usize, m: usize, seed: u64) -> Dataset {
    let m = m.max(3);
    let mut r = rng(seed);
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| r.sample(StandardNormal)).collect())
        .collect();
    let y = (0..n)
        .map(|i| {
            let logit = columns[0][i] - 0.5 * columns[1][i] + columns[0][i] * columns[2][i];
            f64::from(u8::from(r.random::<f64>() < sigmoid(logit)))
        })
        .collect();
    Dataset::new(columns, y).expect("generated columns are rectangular")
}

/// `y ~ Exponential(1)` independent of one uniform feature.
pub fn exponential(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x = (0..n).map(|_| r.random::<f64>()).collect();
    let y = (0..n).map(|_| -(1.0 - r.random::<f64>()).ln()).collect();
    Dataset::new(vec![x], y).expect("generated columns are rectangular")
}
