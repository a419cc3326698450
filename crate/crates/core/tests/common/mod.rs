//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use icboost::{LossKind, LossSpec};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, Poisson, StandardNormal};

/// Exhaustive best split: every feature, every gap between distinct values,
/// child sums recomputed from scratch with `sum`.
///
/// Returns `(feature, threshold, R)`; ties go to the lower feature, then the
/// lower threshold.
pub fn oracle_split(
    columns: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    sum: &dyn Fn(&mut dyn Iterator<Item = f64>) -> f64,
) -> Option<(usize, f64, f64)> {
    let n = g.len();
    let gt = sum(&mut g.iter().copied());
    let ht = sum(&mut h.iter().copied());
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, col) in columns.iter().enumerate() {
        let mut values = col.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut s = lo + (hi - lo) / 2.0;
            if s >= hi || s < lo {
                s = lo;
            }
            let left: Vec<usize> = (0..n).filter(|&i| col[i] <= s).collect();
            let right: Vec<usize> = (0..n).filter(|&i| col[i] > s).collect();
            let gl = sum(&mut left.iter().map(|&i| g[i]));
            let hl = sum(&mut left.iter().map(|&i| h[i]));
            let gr = sum(&mut right.iter().map(|&i| g[i]));
            let hr = sum(&mut right.iter().map(|&i| h[i]));
            let r = ((gl * gl / hl + gr * gr / hr - gt * gt / ht) / (2.0 * n as f64)).max(0.0);
            let wins = match best {
                None => true,
                Some((bj, bs, br)) => r > br || (r == br && (j, s) < (bj, bs)),
            };
            if wins {
                best = Some((j, s, r));
            }
        }
    }
    best
}

/// Brute-force `sup_x |F_n(x) − x|`, evaluated on both sides of every jump.
pub fn oracle_ks(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mut d = 0.0f64;
    for &x in u {
        let le = u.iter().filter(|&&v| v <= x).count() as f64;
        let lt = u.iter().filter(|&&v| v < x).count() as f64;
        d = d.max(le / n - x).max(x - lt / n);
    }
    d
}

/// A random in-domain `(y, f)` pair for a loss.
pub fn random_point<R: Rng>(loss: &LossSpec, rng: &mut R) -> (f64, f64) {
    match loss.kind() {
        LossKind::Mse => (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
        LossKind::Logloss => (f64::from(rng.random_bool(0.5)), rng.random_range(-6.0..6.0)),
        LossKind::GammaNegInv => (rng.random_range(0.05..10.0), rng.random_range(-5.0..-0.2)),
        LossKind::GammaLog => (rng.random_range(0.05..10.0), rng.random_range(-3.0..3.0)),
        LossKind::Poisson | LossKind::NegBinom => (
            f64::from(rng.random_range(0u32..20)),
            rng.random_range(-3.0..3.0),
        ),
    }
}

pub fn all_losses() -> Vec<LossSpec> {
    LossKind::ALL
        .iter()
        .map(|&k| match k {
            LossKind::NegBinom => LossSpec::negbinom(2.0).unwrap(),
            k => LossSpec::simple(k).unwrap(),
        })
        .collect()
}

/// Largest relative error of analytic `g` and `h` against central finite
/// differences of `loss_value` at one point.
pub fn finite_difference_error(loss: &LossSpec, y: f64, f: f64) -> (f64, f64) {
    let l = |x: f64| loss.loss_value(y, x).unwrap();
    let gh = loss.grad_hess(&[y], &[f]).unwrap();
    let (g, h) = (gh.g[0], gh.h[0]);
    let e1 = 1e-5;
    let fd_g = (l(f + e1) - l(f - e1)) / (2.0 * e1);
    let e2 = 1e-3;
    let fd_h = (l(f + e2) - 2.0 * l(f) + l(f - e2)) / (e2 * e2);
    (relative_error(g, fd_g), relative_error(h, fd_h))
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff < 1e-9 {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

/// `c · χ'²(1, λ)` drawn as a Poisson mixture of central chi-squares.
pub fn noncentral_chi_squared_step<R: Rng>(s: f64, dt: f64, rng: &mut R) -> f64 {
    let c = 1.0 - (-2.0 * dt).exp();
    let lambda = s * (-2.0 * dt).exp() / c;
    let k = if lambda > 0.0 {
        Poisson::new(lambda / 2.0).unwrap().sample(rng) as u64
    } else {
        0
    };
    c * ChiSquared::new(1.0 + 2.0 * k as f64).unwrap().sample(rng)
}

/// `E[max_j max_k S_j(τ_k)]` from independent exact CIR paths per feature,
/// taking the joint maximum within each replicate.
pub fn oracle_expected_max<R: Rng>(quantiles: &[Vec<f64>], reps: usize, rng: &mut R) -> f64 {
    let eps: f64 = 1e-7;
    let tau = |u: f64| {
        let u = u.clamp(eps, 1.0 - eps);
        0.5 * (u * (1.0 - eps) / (eps * (1.0 - u))).ln()
    };
    let stationary = Gamma::new(0.5, 2.0).unwrap();
    let mut total = 0.0;
    for _ in 0..reps {
        let mut best = 0.0f64;
        for q in quantiles {
            let mut times: Vec<f64> = q.iter().map(|&u| tau(u)).collect();
            times.sort_by(f64::total_cmp);
            let mut s = stationary.sample(rng);
            best = best.max(s);
            for w in times.windows(2) {
                if w[1] > w[0] {
                    s = noncentral_chi_squared_step(s, w[1] - w[0], rng);
                    best = best.max(s);
                }
            }
        }
        total += best;
    }
    total / reps as f64
}

/// Sample from the family of `loss` with link-scale mean `f` and a nuisance value.
pub fn sample_response<R: Rng>(loss: &LossSpec, f: f64, nuisance: f64, rng: &mut R) -> f64 {
    let mu = loss.inverse_link(f).unwrap();
    match loss.kind() {
        LossKind::Mse => mu + nuisance.sqrt() * rng.sample::<f64, _>(StandardNormal),
        LossKind::Logloss => f64::from(rng.random_bool(mu)),
        LossKind::GammaNegInv | LossKind::GammaLog => {
            Gamma::new(nuisance, mu / nuisance).unwrap().sample(rng)
        }
        LossKind::Poisson => Poisson::new(mu).unwrap().sample(rng),
        LossKind::NegBinom => {
            let lambda = Gamma::new(nuisance, mu / nuisance).unwrap().sample(rng);
            if lambda <= 0.0 {
                0.0
            } else {
                Poisson::new(lambda).unwrap().sample(rng)
            }
        }
    }
}

/// Pearson χ² statistic of equal-width bin counts against uniform.
pub fn chi_squared_uniform(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}
