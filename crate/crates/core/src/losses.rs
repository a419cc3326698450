//! Loss and link families.
//!
//! Every family is a negative log-likelihood in the link-scale prediction `f`,
//! up to additive terms that do not depend on `f`:
//!
//! | name            | distribution      | link              |
//! |-----------------|-------------------|-------------------|
//! | `mse`           | Gaussian          | μ = f             |
//! | `logloss`       | Bernoulli         | log(μ/(1−μ)) = f  |
//! | `gamma::neginv` | Gamma             | −1/μ = f          |
//! | `gamma::log`    | Gamma             | log μ = f         |
//! | `poisson`       | Poisson           | log μ = f         |
//! | `negbinom`      | Negative binomial | log μ = f         |
//!
//! Gamma losses use shape 1 during boosting; the shape cancels in the argmin
//! over `f` and is only estimated for goodness-of-fit validation.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{
    ContinuousCDF, Discrete, DiscreteCDF, Gamma, NegativeBinomial, Normal, Poisson,
};

use crate::error::{Error, Location, Result};
use crate::numeric::KahanSum;

/// Largest link value admitted by `gamma::neginv`; predictions must stay strictly negative.
pub const NEGINV_MAX_LINK: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Mse,
    Logloss,
    GammaNegInv,
    GammaLog,
    Poisson,
    NegBinom,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::Mse,
        LossKind::Logloss,
        LossKind::GammaNegInv,
        LossKind::GammaLog,
        LossKind::Poisson,
        LossKind::NegBinom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Logloss => "logloss",
            LossKind::GammaNegInv => "gamma::neginv",
            LossKind::GammaLog => "gamma::log",
            LossKind::Poisson => "poisson",
            LossKind::NegBinom => "negbinom",
        }
    }

    /// Human-readable family label used in validation reports.
    pub fn family(self) -> &'static str {
        match self {
            LossKind::Mse => "Gaussian regression",
            LossKind::Logloss => "Classification",
            LossKind::GammaNegInv | LossKind::GammaLog => "Gamma regression",
            LossKind::Poisson => "Poisson regression",
            LossKind::NegBinom => "Negative binomial regression",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            LossKind::Logloss | LossKind::Poisson | LossKind::NegBinom
        )
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown loss `{s}` (expected one of mse, logloss, gamma::neginv, gamma::log, poisson, negbinom)"
                ))
            })
    }
}

/// A loss family plus its dispersion (negative binomial only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    dispersion: Option<f64>,
}

impl LossSpec {
    pub fn new(kind: LossKind, dispersion: Option<f64>) -> Result<Self> {
        match (kind, dispersion) {
            (LossKind::NegBinom, None) => Err(Error::Config(
                "negbinom requires a dispersion parameter".into(),
            )),
            (LossKind::NegBinom, Some(r)) if !(r.is_finite() && r > 0.0) => Err(Error::Config(
                format!("negbinom dispersion must be positive and finite, got {r}"),
            )),
            (LossKind::NegBinom, Some(_)) => Ok(Self { kind, dispersion }),
            (_, Some(_)) => Err(Error::Config(format!(
                "dispersion is only used by negbinom, not {kind}"
            ))),
            (_, None) => Ok(Self { kind, dispersion }),
        }
    }

    /// Shorthand for the families that take no dispersion.
    pub fn simple(kind: LossKind) -> Result<Self> {
        Self::new(kind, None)
    }

    pub fn negbinom(dispersion: f64) -> Result<Self> {
        Self::new(LossKind::NegBinom, Some(dispersion))
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn dispersion(&self) -> Option<f64> {
        self.dispersion
    }

    fn nb_r(&self) -> f64 {
        self.dispersion
            .expect("negbinom constructed with dispersion")
    }

    pub fn check_response(&self, y: f64) -> Result<()> {
        let (ok, expected) = match self.kind {
            LossKind::Mse => (y.is_finite(), "finite real"),
            LossKind::Logloss => (y == 0.0 || y == 1.0, "0 or 1"),
            LossKind::GammaNegInv | LossKind::GammaLog => {
                (y.is_finite() && y > 0.0, "positive real")
            }
            LossKind::Poisson | LossKind::NegBinom => (
                y.is_finite() && y >= 0.0 && y.fract() == 0.0,
                "non-negative integer",
            ),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain {
                loss: self.kind.name(),
                what: "y",
                value: y,
                expected,
            })
        }
    }

    pub fn check_link(&self, f: f64) -> Result<()> {
        let ok = match self.kind {
            LossKind::GammaNegInv => f.is_finite() && f < NEGINV_MAX_LINK,
            _ => f.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain {
                loss: self.kind.name(),
                what: "f",
                value: f,
                expected: if self.kind == LossKind::GammaNegInv {
                    "negative real"
                } else {
                    "finite real"
                },
            })
        }
    }

    /// Per-observation loss at link-scale prediction `f`.
    pub fn loss_value(&self, y: f64, f: f64) -> Result<f64> {
        self.check_response(y)?;
        self.check_link(f)?;
        Ok(self.loss_unchecked(y, f))
    }

    fn loss_unchecked(&self, y: f64, f: f64) -> f64 {
        match self.kind {
            LossKind::Mse => 0.5 * (y - f) * (y - f),
            LossKind::Logloss => softplus(f) - y * f,
            LossKind::GammaNegInv => -y * f - (-f).ln(),
            LossKind::GammaLog => y * (-f).exp() + f,
            LossKind::Poisson => f.exp() - y * f,
            LossKind::NegBinom => {
                let r = self.nb_r();
                // (y + r) log(e^f + r) − y f, with log(e^f + r) = log r + softplus(f − log r)
                (y + r) * (r.ln() + softplus(f - r.ln())) - y * f
            }
        }
    }

    /// First and second derivative of the loss in `f`.
    fn derivatives(&self, y: f64, f: f64) -> (f64, f64) {
        match self.kind {
            LossKind::Mse => (f - y, 1.0),
            LossKind::Logloss => {
                let p = sigmoid(f);
                (p - y, p * (1.0 - p))
            }
            LossKind::GammaNegInv => (-y - 1.0 / f, 1.0 / (f * f)),
            LossKind::GammaLog => {
                let t = y * (-f).exp();
                (1.0 - t, t)
            }
            LossKind::Poisson => {
                let mu = f.exp();
                (mu - y, mu)
            }
            LossKind::NegBinom => {
                let r = self.nb_r();
                // q = e^f / (e^f + r)
                let q = sigmoid(f - r.ln());
                ((y + r) * q - y, (y + r) * q * (1.0 - q))
            }
        }
    }

    /// Analytic gradients and hessians for every observation.
    pub fn grad_hess(&self, y: &[f64], f: &[f64]) -> Result<GradHessBuffer> {
        if y.len() != f.len() {
            return Err(Error::Input(format!(
                "response has {} rows but predictions have {}",
                y.len(),
                f.len()
            )));
        }
        let mut g = Vec::with_capacity(y.len());
        let mut h = Vec::with_capacity(y.len());
        for (i, (&yi, &fi)) in y.iter().zip(f).enumerate() {
            self.check_response(yi)?;
            self.check_link(fi)?;
            let (gi, hi) = self.derivatives(yi, fi);
            if !(hi > 0.0 && hi.is_finite()) {
                return Err(Error::Convexity {
                    value: hi,
                    location: Location::Row(i),
                });
            }
            g.push(gi);
            h.push(hi);
        }
        Ok(GradHessBuffer { g, h })
    }

    /// Mean loss over a sample.
    pub fn mean_loss(&self, y: &[f64], f: &[f64]) -> Result<f64> {
        let mut acc = KahanSum::new();
        for (&yi, &fi) in y.iter().zip(f) {
            acc.add(self.loss_value(yi, fi)?);
        }
        Ok(acc.value() / y.len().max(1) as f64)
    }

    /// Constant link-scale prediction minimizing mean training loss.
    ///
    /// Newton iterations on the summed derivatives, started from the link of
    /// the response mean (the exact minimizer for every family here).
    pub fn initial_prediction(&self, y: &[f64]) -> Result<f64> {
        if y.is_empty() {
            return Err(Error::Input("empty response".into()));
        }
        for &yi in y {
            self.check_response(yi)?;
        }
        let mean = y.iter().copied().collect::<KahanSum>().value() / y.len() as f64;
        if self.kind == LossKind::Mse {
            return Ok(mean);
        }
        let degenerate = |reason: &str| Error::DegenerateResponse {
            loss: self.kind.name(),
            reason: reason.to_string(),
        };
        let mut f = match self.kind {
            LossKind::Logloss => {
                if mean <= 0.0 || mean >= 1.0 {
                    return Err(degenerate("all responses belong to one class"));
                }
                (mean / (1.0 - mean)).ln()
            }
            LossKind::GammaNegInv => -1.0 / mean,
            LossKind::GammaLog => mean.ln(),
            LossKind::Poisson | LossKind::NegBinom => {
                if mean <= 0.0 {
                    return Err(degenerate("all responses are zero"));
                }
                mean.ln()
            }
            LossKind::Mse => unreachable!(),
        };
        for _ in 0..50 {
            let mut gs = KahanSum::new();
            let mut hs = KahanSum::new();
            for &yi in y {
                let (g, h) = self.derivatives(yi, f);
                gs.add(g);
                hs.add(h);
            }
            let step = gs.value() / hs.value();
            if !step.is_finite() {
                return Err(degenerate("newton step is not finite"));
            }
            f -= step;
            if self.kind == LossKind::GammaNegInv && f >= NEGINV_MAX_LINK {
                return Err(degenerate(
                    "minimizer leaves the negative-inverse link domain",
                ));
            }
            if step.abs() < 1e-9 {
                break;
            }
        }
        Ok(f)
    }

    /// Response-scale mean implied by a link-scale prediction.
    pub fn inverse_link(&self, f: f64) -> Result<f64> {
        self.check_link(f)?;
        Ok(match self.kind {
            LossKind::Mse => f,
            LossKind::Logloss => sigmoid(f),
            LossKind::GammaNegInv => -1.0 / f,
            LossKind::GammaLog | LossKind::Poisson | LossKind::NegBinom => f.exp(),
        })
    }

    fn nuisance_or(&self, nuisance: Option<f64>, what: &str) -> Result<f64> {
        let v = nuisance.ok_or_else(|| {
            Error::Config(format!("{} cdf requires the {what}", self.kind.name()))
        })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!(
                "{} cdf: {what} must be positive, got {v}",
                self.kind.name()
            )));
        }
        Ok(v)
    }

    /// P(Y ≤ y) under the family with mean implied by `f`.
    ///
    /// `nuisance` is the Gaussian variance, the gamma shape, or the negative
    /// binomial dispersion (defaulting to the loss dispersion). `y` may be any
    /// real; discrete families floor it.
    pub fn cdf(&self, y: f64, f: f64, nuisance: Option<f64>) -> Result<f64> {
        self.check_link(f)?;
        let mu = self.inverse_link(f)?;
        if y.is_nan() {
            return Err(Error::Domain {
                loss: self.kind.name(),
                what: "y",
                value: y,
                expected: "a number",
            });
        }
        let p = match self.kind {
            LossKind::Mse => {
                let var = self.nuisance_or(nuisance, "variance")?;
                Normal::new(mu, var.sqrt())
                    .map_err(|e| Error::Config(e.to_string()))?
                    .cdf(y)
            }
            LossKind::Logloss => {
                if y < 0.0 {
                    0.0
                } else if y < 1.0 {
                    1.0 - mu
                } else {
                    1.0
                }
            }
            LossKind::GammaNegInv | LossKind::GammaLog => {
                let shape = self.nuisance_or(nuisance, "shape")?;
                if y <= 0.0 {
                    0.0
                } else {
                    Gamma::new(shape, shape / mu)
                        .map_err(|e| Error::Config(e.to_string()))?
                        .cdf(y)
                }
            }
            LossKind::Poisson => {
                if y < 0.0 {
                    0.0
                } else {
                    Poisson::new(mu)
                        .map_err(|e| Error::Config(e.to_string()))?
                        .cdf(y.floor() as u64)
                }
            }
            LossKind::NegBinom => {
                let r = self.nuisance_or(nuisance.or(self.dispersion), "dispersion")?;
                if y < 0.0 {
                    0.0
                } else {
                    NegativeBinomial::new(r, r / (r + mu))
                        .map_err(|e| Error::Config(e.to_string()))?
                        .cdf(y.floor() as u64)
                }
            }
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// P(Y = y) for the discrete families.
    pub fn pmf(&self, y: f64, f: f64, nuisance: Option<f64>) -> Result<f64> {
        self.check_response(y)?;
        let mu = self.inverse_link(f)?;
        let k = y as u64;
        Ok(match self.kind {
            LossKind::Logloss => {
                if k == 1 {
                    mu
                } else {
                    1.0 - mu
                }
            }
            LossKind::Poisson => Poisson::new(mu)
                .map_err(|e| Error::Config(e.to_string()))?
                .pmf(k),
            LossKind::NegBinom => {
                let r = self.nuisance_or(nuisance.or(self.dispersion), "dispersion")?;
                NegativeBinomial::new(r, r / (r + mu))
                    .map_err(|e| Error::Config(e.to_string()))?
                    .pmf(k)
            }
            _ => {
                return Err(Error::Config(format!(
                    "{} is a continuous family",
                    self.kind.name()
                )))
            }
        })
    }
}

/// Per-observation first and second derivatives for one boosting iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHessBuffer {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl GradHessBuffer {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^x) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
