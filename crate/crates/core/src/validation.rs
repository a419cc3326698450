//! Goodness-of-fit and feature importance for fitted models.

use rand::Rng;

use crate::data::Dataset;
use crate::ensemble::EnsembleModel;
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::numeric::{digamma, ln_gamma, trigamma, ExactSum, KahanSum};

/// A distribution parameter not predicted by the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nuisance {
    pub name: &'static str,
    pub value: f64,
}

/// Probability-integral-transformed responses.
#[derive(Debug, Clone, PartialEq)]
pub struct KsTransform {
    pub u: Vec<f64>,
    pub nuisance: Option<Nuisance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Maximum-likelihood estimate of the parameter the loss leaves free, given
/// link-scale predictions.
pub fn estimate_nuisance(loss: &LossSpec, y: &[f64], f: &[f64]) -> Result<Option<Nuisance>> {
    if y.is_empty() || y.len() != f.len() {
        return Err(Error::Input(format!(
            "{} responses for {} predictions",
            y.len(),
            f.len()
        )));
    }
    for (&yi, &fi) in y.iter().zip(f) {
        loss.check_response(yi)?;
        loss.check_link(fi)?;
    }
    let n = y.len() as f64;
    Ok(match loss.kind() {
        LossKind::Mse => {
            let ss: KahanSum = y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).collect();
            let var = ss.value() / n;
            if var.is_nan() || var <= 0.0 {
                return Err(Error::DegenerateResponse {
                    loss: "mse",
                    reason: "zero residual variance".into(),
                });
            }
            Some(Nuisance {
                name: "variance",
                value: var,
            })
        }
        LossKind::GammaNegInv | LossKind::GammaLog => {
            let mut s = KahanSum::new();
            for (&yi, &fi) in y.iter().zip(f) {
                let ratio = yi / loss.inverse_link(fi)?;
                s.add(ratio - 1.0 - ratio.ln());
            }
            Some(Nuisance {
                name: "shape",
                value: gamma_shape_mle(s.value() / n)?,
            })
        }
        LossKind::NegBinom => {
            let r = match loss.dispersion() {
                Some(r) => r,
                None => {
                    let mu: Vec<f64> = f.iter().map(|v| v.exp()).collect();
                    negbinom_dispersion_mle(y, &mu)
                }
            };
            Some(Nuisance {
                name: "dispersion",
                value: r,
            })
        }
        LossKind::Logloss | LossKind::Poisson => None,
    })
}

/// Solves `log k − ψ(k) = s` for the gamma shape by Newton on `log k`.
fn gamma_shape_mle(s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::DegenerateResponse {
            loss: "gamma",
            reason: "responses equal their fitted means".into(),
        });
    }
    // closed-form starting value
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..100 {
        let resid = k.ln() - digamma(k) - s;
        let deriv = 1.0 / k - trigamma(k);
        let step = resid / (deriv * k);
        let next = (k.ln() - step).exp();
        if !next.is_finite() {
            break;
        }
        let done = (next - k).abs() <= 1e-12 * k;
        k = next;
        if done {
            break;
        }
    }
    Ok(k)
}

/// Profile maximum-likelihood dispersion of a negative binomial with known means.
fn negbinom_dispersion_mle(y: &[f64], mu: &[f64]) -> f64 {
    let loglik = |log_r: f64| {
        let r = log_r.exp();
        y.iter()
            .zip(mu)
            .map(|(&yi, &mi)| {
                ln_gamma(yi + r) - ln_gamma(r) + r * (r / (r + mi)).ln() + yi * (mi / (r + mi)).ln()
            })
            .sum::<f64>()
    };
    // golden-section search on log r
    let (mut a, mut b) = (-10.0f64, 15.0f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (loglik(c), loglik(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = loglik(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = loglik(d);
        }
        if b - a < 1e-10 {
            break;
        }
    }
    ((a + b) / 2.0).exp()
}

/// Uniform transform of responses given link-scale predictions and a nuisance value.
///
/// Continuous families: `u = F(y)`. Discrete families: `u = F(y − 1) + V·p(y)`
/// with `V ~ U(0, 1)` drawn from `rng`.
pub fn uniform_transform<R: Rng + ?Sized>(
    loss: &LossSpec,
    y: &[f64],
    f: &[f64],
    nuisance: Option<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if y.len() != f.len() {
        return Err(Error::Input(format!(
            "{} responses for {} predictions",
            y.len(),
            f.len()
        )));
    }
    let discrete = loss.kind().is_discrete();
    y.iter()
        .zip(f)
        .map(|(&yi, &fi)| {
            loss.check_response(yi)?;
            if discrete {
                let below = loss.cdf(yi - 1.0, fi, nuisance)?;
                let mass = loss.pmf(yi, fi, nuisance)?;
                let v: f64 = rng.random();
                Ok((below + v * mass).clamp(0.0, 1.0))
            } else {
                loss.cdf(yi, fi, nuisance)
            }
        })
        .collect()
}

/// Transforms labeled data through a fitted model, estimating the nuisance
/// parameter from the same data.
pub fn ks_transform<R: Rng + ?Sized>(
    model: &EnsembleModel,
    data: &Dataset,
    rng: &mut R,
) -> Result<KsTransform> {
    if !data.has_response() {
        return Err(Error::Input("validation data has no response".into()));
    }
    let f = model.predict(data)?;
    let y = data.response();
    let nuisance = estimate_nuisance(&model.loss, y, &f)?;
    let u = uniform_transform(&model.loss, y, &f, nuisance.map(|n| n.value), rng)?;
    Ok(KsTransform { u, nuisance })
}

/// One-sample Kolmogorov–Smirnov test against U(0, 1).
pub fn ks_test(u: &[f64]) -> Result<KsResult> {
    if u.is_empty() {
        return Err(Error::Input("KS test needs at least one value".into()));
    }
    if let Some(bad) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Input(format!("KS input {bad} outside [0, 1]")));
    }
    let mut sorted = u.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let i = i as f64;
            ((i + 1.0) / n - v).max(v - i / n)
        })
        .fold(0.0f64, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
        n: sorted.len(),
    })
}

/// Asymptotic Kolmogorov survival function `2 Σ (−1)^{k−1} e^{−2k²t²}`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = (-2.0 * k * k * t * t).exp();
        let sign = if (k as u64) % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * term;
        if term < 1e-12 || k > 1e6 {
            break;
        }
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Counts of `u` in `bins` equal-width bins on [0, 1].
pub fn histogram(u: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in u {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

/// Per-feature accumulated approximate generalization-loss reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    /// Accumulated values, floored at zero.
    pub raw: Vec<f64>,
    /// `raw` normalized to sum to one; all zero when no feature contributes.
    pub shares: Vec<f64>,
    /// Features whose accumulated total was negative before flooring.
    pub floored: Vec<usize>,
}

/// Adds `δ(2−δ)·R_t + δ·C̃_t` of every split to its feature.
pub fn feature_importance(model: &EnsembleModel) -> ImportanceVector {
    let m = model.n_features();
    let delta = model.learning_rate;
    let mut acc = vec![ExactSum::new(); m];
    for tree in &model.trees {
        for (feature, r, c) in tree.internal_nodes() {
            if feature < m {
                acc[feature].add(delta * (2.0 - delta) * r + delta * c);
            }
        }
    }
    let mut floored = Vec::new();
    let raw: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let v = s.value();
            if v < 0.0 {
                floored.push(j);
                0.0
            } else {
                v
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let shares = if total > 0.0 {
        raw.iter().map(|v| v / total).collect()
    } else {
        vec![0.0; m]
    };
    if !floored.is_empty() {
        log::info!("importance of features {floored:?} was negative and floored at 0");
    }
    ImportanceVector {
        raw,
        shares,
        floored,
    }
}
