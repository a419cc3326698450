//! Optimism of greedily selected loss reductions.
//!
//! The loss-reduction optimism of a node is `−C_root · π · E[B]`, where
//! `C_root` is the node-conditional optimism of its constant prediction,
//! `π` the fraction of training rows reaching the node, and `E[B]` the
//! expected maximum of a Cox–Ingersoll–Ross process
//! `dS = 2(1 − S)dτ + 2√(2S) dW` observed at times derived from the profiled
//! split-point quantiles of every feature.
//!
//! With these constants the transition law has one degree of freedom, so
//! `S = X²` for a stationary Ornstein–Uhlenbeck process `X`. The simulator
//! carries `X` and squares it, which reproduces the exact CIR transition at
//! the cost of one normal draw per observation time.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Location, Result};
use crate::numeric::KahanSum;
use crate::splitting::SplitGrid;

/// Default number of Monte Carlo replicates for `E[B]`.
pub const DEFAULT_N_SIM: usize = 1000;

/// Cache entries kept before the per-run cache is flushed.
const CACHE_CAPACITY: usize = 8192;

/// Parameters of the CIR process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    /// Boundary constant of the quantile-to-time map.
    pub epsilon: f64,
}

impl CirParams {
    pub const STANDARD: CirParams = CirParams {
        kappa: 2.0,
        theta: 1.0,
        sigma: 2.0 * std::f64::consts::SQRT_2,
        epsilon: 1e-7,
    };

    /// Degrees of freedom of the noncentral chi-squared transition, `4κθ/σ²`.
    pub fn dof(&self) -> f64 {
        4.0 * self.kappa * self.theta / (self.sigma * self.sigma)
    }

    /// Scale `c` of the transition over a step `dt`.
    pub fn transition_scale(&self, dt: f64) -> f64 {
        self.sigma * self.sigma * (-(-self.kappa * dt).exp_m1()) / (4.0 * self.kappa)
    }

    /// `E[S_{t+dt} | S_t = s] = θ + (s − θ) e^{−κ dt}`.
    pub fn conditional_mean(&self, s: f64, dt: f64) -> f64 {
        self.theta + (s - self.theta) * (-self.kappa * dt).exp()
    }

    /// Observation time of a split-point quantile.
    ///
    /// `τ(u) = ½ log(u(1−ε) / (ε(1−u)))`, with `u` clamped to `[ε, 1−ε]`.
    pub fn split_time(&self, u: f64) -> f64 {
        let eps = self.epsilon;
        let u = u.clamp(eps, 1.0 - eps);
        0.5 * ((u * (1.0 - eps)).ln() - (eps * (1.0 - u)).ln())
    }
}

impl Default for CirParams {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Start states and step lengths on which the exact transition is checked
/// against the conditional mean.
pub const TRANSITION_CHECK_GRID: ([f64; 4], [f64; 3]) = ([0.0, 0.5, 1.0, 3.0], [0.01, 0.1, 1.0]);

/// One draw from the stationary law `Gamma(2κθ/σ², σ²/(2κ))`, here `χ²₁`.
pub fn cir_stationary_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let p = CirParams::STANDARD;
    let sd = (p.sigma * p.sigma / (4.0 * p.kappa)).sqrt();
    let x: f64 = sd * rng.sample::<f64, _>(StandardNormal);
    x * x
}

/// One exact CIR transition from state `s` over `dt > 0`:
/// `c · χ'²(1, s·e^{−κ dt}/c)`, drawn as `c (Z + √λ)²`.
pub fn cir_step_exact<R: Rng + ?Sized>(s: f64, dt: f64, rng: &mut R) -> f64 {
    let p = CirParams::STANDARD;
    debug_assert!((p.dof() - 1.0).abs() < 1e-12);
    let c = p.transition_scale(dt);
    let lambda = s.max(0.0) * (-p.kappa * dt).exp() / c;
    let z: f64 = rng.sample(StandardNormal);
    let t = z + lambda.sqrt();
    c * t * t
}

/// Node-conditional optimism of the node's constant prediction.
///
/// Sandwich form `tr(Ĥ · Cov(ŵ))` with empirical Hessian `H/n_node` and
/// plug-in variance `Σ(g_i + h_i ŵ)² / H²`, giving `Σ(g_i + h_i ŵ)² / (n_node H)`.
pub fn root_optimism(g: &[f64], h: &[f64], w_hat: f64) -> Result<f64> {
    if g.is_empty() || g.len() != h.len() {
        return Err(Error::Input(format!(
            "root optimism needs matching non-empty gradients ({}) and hessians ({})",
            g.len(),
            h.len()
        )));
    }
    let hess: f64 = h.iter().copied().collect::<KahanSum>().value();
    if !(hess > 0.0 && hess.is_finite()) {
        return Err(Error::Convexity {
            value: hess,
            location: Location::Node,
        });
    }
    let score_sq = g
        .iter()
        .zip(h)
        .map(|(&gi, &hi)| {
            let s = gi + hi * w_hat;
            s * s
        })
        .collect::<KahanSum>()
        .value();
    Ok(score_sq / (g.len() as f64 * hess))
}

/// Optimism of a profiled loss reduction, `−c_root · π · e_max`.
pub fn loss_reduction_optimism(c_root: f64, pi: f64, e_max: f64) -> f64 {
    -c_root * pi * e_max
}

/// Monte Carlo estimator of `E[max_j max_k S_j(τ_k)]` with a per-run cache.
///
/// Features are treated as independent. For each distinct observation grid
/// the estimator simulates `n_sim` replicate path maxima and keeps their
/// empirical distribution; a node's expectation integrates one minus the
/// product of the per-feature empirical distribution functions. The random
/// stream of a grid is derived from the run seed and the grid itself, so
/// estimates do not depend on evaluation order or cache state.
#[derive(Debug, Clone)]
pub struct MaxCirEstimator {
    params: CirParams,
    seed: u64,
    n_sim: usize,
    cache: HashMap<(usize, u64), Arc<[f64]>>,
}

impl MaxCirEstimator {
    pub fn new(seed: u64, n_sim: usize) -> Result<Self> {
        if n_sim == 0 {
            return Err(Error::Config("n_sim must be at least 1".into()));
        }
        Ok(Self {
            params: CirParams::STANDARD,
            seed,
            n_sim,
            cache: HashMap::new(),
        })
    }

    pub fn n_sim(&self) -> usize {
        self.n_sim
    }

    pub fn cached_grids(&self) -> usize {
        self.cache.len()
    }

    /// `E[B]` for a node from its per-feature split grids. Features without
    /// candidates are skipped.
    pub fn expected_max(&mut self, grids: &[SplitGrid]) -> Result<f64> {
        let quantiles: Vec<Vec<f64>> = grids
            .iter()
            .filter(|g| !g.is_empty())
            .map(SplitGrid::quantiles)
            .collect();
        self.expected_max_quantiles(&quantiles)
    }

    /// `E[B]` from explicit per-feature quantile sets `u_k ∈ (0, 1)`.
    pub fn expected_max_quantiles(&mut self, quantiles: &[Vec<f64>]) -> Result<f64> {
        if quantiles.is_empty() || quantiles.iter().any(Vec::is_empty) {
            return Err(Error::Config(
                "expected maximum needs at least one split quantile per feature".into(),
            ));
        }
        let mut samples: Vec<Arc<[f64]>> = Vec::with_capacity(quantiles.len());
        for u in quantiles {
            if let Some(bad) = u.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(Error::Config(format!(
                    "split quantile {bad} outside (0, 1)"
                )));
            }
            samples.push(self.feature_maxima(u));
        }
        Ok(expected_max_independent(&samples))
    }

    /// Sorted replicate maxima for one feature grid.
    fn feature_maxima(&mut self, u: &[f64]) -> Arc<[f64]> {
        let mut times: Vec<f64> = u.iter().map(|&v| self.params.split_time(v)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let key = (times.len(), fingerprint(&times));
        if let Some(s) = self.cache.get(&key) {
            return Arc::clone(s);
        }
        let stream = mix(self.seed ^ mix(key.1 ^ key.0 as u64));
        let sample: Arc<[f64]> = simulate_maxima(&self.params, &times, self.n_sim, stream).into();
        if self.cache.len() >= CACHE_CAPACITY {
            self.cache.clear();
        }
        self.cache.insert(key, Arc::clone(&sample));
        sample
    }
}

/// Monte Carlo estimate of `E[B]` for explicit quantile sets with a fresh estimator.
pub fn expected_max_cir(quantiles: &[Vec<f64>], n_sim: usize, seed: u64) -> Result<f64> {
    MaxCirEstimator::new(seed, n_sim)?.expected_max_quantiles(quantiles)
}

/// Replicate maxima of `S` over increasing `times`, started from stationarity.
fn simulate_maxima(params: &CirParams, times: &[f64], n_sim: usize, stream: u64) -> Vec<f64> {
    debug_assert!((params.dof() - 1.0).abs() < 1e-12);
    // X_{k+1} = a_k X_k + b_k Z with a_k = e^{−κΔτ/2}, b_k = √c(Δτ)
    let (a, b): (Vec<f64>, Vec<f64>) = times
        .windows(2)
        .map(|w| {
            let dt = w[1] - w[0];
            (
                (-0.5 * params.kappa * dt).exp(),
                params.transition_scale(dt).sqrt(),
            )
        })
        .unzip();
    // stationary law Gamma(½, σ²/(2κ)), i.e. (σ²/(4κ))·χ²₁
    let stationary_sd = (params.sigma * params.sigma / (4.0 * params.kappa)).sqrt();
    let mut out = Vec::with_capacity(n_sim);
    for r in 0..n_sim {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix(stream.wrapping_add(r as u64)));
        let mut x: f64 = stationary_sd * rng.sample::<f64, _>(StandardNormal);
        let mut best = x * x;
        for (&ak, &bk) in a.iter().zip(&b) {
            let z: f64 = rng.sample(StandardNormal);
            x = ak * x + bk * z;
            let s = x * x;
            if s > best {
                best = s;
            }
        }
        out.push(best);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `∫₀^∞ 1 − Π_j F̂_j(x) dx` for sorted non-negative samples, one per feature.
///
/// Identical samples (shared grids) are grouped and raised to their multiplicity.
pub fn expected_max_independent(samples: &[Arc<[f64]>]) -> f64 {
    let mut groups: Vec<(Arc<[f64]>, i32)> = Vec::new();
    for s in samples {
        match groups.iter_mut().find(|(g, _)| Arc::ptr_eq(g, s)) {
            Some((_, m)) => *m += 1,
            None => groups.push((Arc::clone(s), 1)),
        }
    }
    if groups.is_empty() {
        return 0.0;
    }
    let mut points: Vec<(f64, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(gi, (s, _))| s.iter().map(move |&v| (v, gi)))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut counts = vec![0usize; groups.len()];
    let mut acc = KahanSum::new();
    acc.add(points[0].0.max(0.0));
    for i in 0..points.len() - 1 {
        counts[points[i].1] += 1;
        let width = points[i + 1].0 - points[i].0;
        if width <= 0.0 {
            continue;
        }
        let cdf: f64 = groups
            .iter()
            .zip(&counts)
            .map(|((s, m), &c)| (c as f64 / s.len() as f64).powi(*m))
            .product();
        acc.add((1.0 - cdf) * width);
    }
    acc.value()
}

fn fingerprint(values: &[f64]) -> u64 {
    values
        .iter()
        .fold(0x6a09_e667_f3bc_c909u64, |h, v| mix(h ^ v.to_bits()))
}

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
