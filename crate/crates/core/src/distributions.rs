//! Laws for initial vitality, jump sizes and multiplicative decay-rate mixing.

use crate::error::{ensure_positive, Error, Result};
use crate::numerics::special::ln_factorial;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1]: safe under ln and negative powers
    1.0 - rng.random::<f64>()
}

/// Distribution of the initial vitality `V(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum InitialVitalityDist {
    #[serde(rename = "exponential")]
    Exponential { rate: f64 },
    /// Lomax law with survival `(1 + v/scale)^{-shape}`.
    #[serde(rename = "pareto")]
    ParetoII { shape: f64, scale: f64 },
    /// Gompertz law with unit scale: survival `exp(-shape (e^v - 1))`.
    #[serde(rename = "gompertz")]
    GompertzDist { shape: f64 },
    /// Point mass; used to condition on a known vitality level.
    #[serde(rename = "degenerate")]
    Degenerate { v: f64 },
}

impl InitialVitalityDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { rate } => ensure_positive("initial.rate", rate),
            Self::ParetoII { shape, scale } => {
                ensure_positive("initial.shape", shape)?;
                ensure_positive("initial.scale", scale)
            }
            Self::GompertzDist { shape } => ensure_positive("initial.shape", shape),
            Self::Degenerate { v } => ensure_positive("initial.v", v),
        }
    }

    /// `Pr(V(0) > v)`.
    pub fn survival(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::param("v", format!("must be >= 0, got {v}")));
        }
        Ok(match *self {
            Self::Exponential { rate } => (-rate * v).exp(),
            Self::ParetoII { shape, scale } => (1.0 + v / scale).powf(-shape),
            Self::GompertzDist { shape } => (-shape * v.exp_m1()).exp(),
            Self::Degenerate { v: v0 } => {
                if v < v0 {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        Ok(1.0 - self.survival(v)?)
    }

    pub fn density(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::param("v", format!("must be >= 0, got {v}")));
        }
        match *self {
            Self::Exponential { rate } => Ok(rate * (-rate * v).exp()),
            Self::ParetoII { shape, scale } => Ok(shape / scale * (1.0 + v / scale).powf(-shape - 1.0)),
            Self::GompertzDist { shape } => Ok(shape * (v - shape * v.exp_m1()).exp()),
            Self::Degenerate { .. } => Err(Error::Unsupported(
                "a degenerate initial vitality has no density".into(),
            )),
        }
    }

    /// Inverse of the cdf at `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        // -ln(1 - p) without cancellation for small p
        let cum_hazard = -(-p).ln_1p();
        match *self {
            Self::Exponential { rate } => cum_hazard / rate,
            Self::ParetoII { shape, scale } => scale * (cum_hazard / shape).exp_m1(),
            Self::GompertzDist { shape } => (cum_hazard / shape).ln_1p(),
            Self::Degenerate { v } => v,
        }
    }

    /// Inversion sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let Self::Degenerate { v } = *self {
            return v;
        }
        // survival-scale inversion: S(V) = u
        let u = unit_open(rng);
        let cum_hazard = -u.ln();
        match *self {
            Self::Exponential { rate } => cum_hazard / rate,
            Self::ParetoII { shape, scale } => scale * (cum_hazard / shape).exp_m1(),
            Self::GompertzDist { shape } => (cum_hazard / shape).ln_1p(),
            Self::Degenerate { v } => v,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::ParetoII { shape, scale } => {
                if shape > 1.0 {
                    scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            // E[V] = e^η E1(η)
            Self::GompertzDist { shape } => shape.exp() * exp_integral_e1(shape),
            Self::Degenerate { v } => v,
        }
    }
}

fn exp_integral_e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        -0.577_215_664_901_532_9 - x.ln() + sum
    } else {
        // continued fraction (modified Lentz)
        let mut b = x + 1.0;
        let mut c = 1.0 / f64::MIN_POSITIVE;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Law of a single jump size `Z`. Positive sizes lower vitality.
///
/// `NormalJump` can produce negative sizes, i.e. vitality gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum JumpSizeDist {
    /// Infinite jump: every arrival is lethal.
    #[serde(rename = "fatal")]
    Fatal,
    #[serde(rename = "exponential")]
    ExponentialJump { rate: f64 },
    #[serde(rename = "mixture")]
    MixtureExponential { weights: Vec<f64>, rates: Vec<f64> },
    #[serde(rename = "normal")]
    NormalJump { mean: f64, sd: f64 },
}

impl JumpSizeDist {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fatal => Ok(()),
            Self::ExponentialJump { rate } => ensure_positive("jump.size.rate", *rate),
            Self::MixtureExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::param(
                        "jump.size.weights",
                        "mixture needs matching, non-empty weight and rate lists",
                    ));
                }
                for w in weights {
                    if !(*w >= 0.0 && *w <= 1.0) {
                        return Err(Error::param("jump.size.weights", format!("weight {w} not in [0, 1]")));
                    }
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::param("jump.size.weights", format!("weights sum to {total}, not 1")));
                }
                for r in rates {
                    ensure_positive("jump.size.rates", *r)?;
                }
                Ok(())
            }
            Self::NormalJump { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::param("jump.size.mean", "must be finite"));
                }
                ensure_positive("jump.size.sd", *sd)
            }
        }
    }

    pub fn is_fatal(&self) -> bool {
        matches!(self, Self::Fatal)
    }

    /// `Pr(Z ≤ z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        match self {
            Self::Fatal => 0.0,
            Self::ExponentialJump { rate } => {
                if z <= 0.0 {
                    0.0
                } else {
                    -(-rate * z).exp_m1()
                }
            }
            Self::MixtureExponential { weights, rates } => {
                if z <= 0.0 {
                    0.0
                } else {
                    weights
                        .iter()
                        .zip(rates)
                        .map(|(w, r)| -w * (-r * z).exp_m1())
                        .sum()
                }
            }
            Self::NormalJump { mean, sd } => {
                crate::numerics::special::std_normal_cdf((z - mean) / sd)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Fatal => f64::INFINITY,
            Self::ExponentialJump { rate } => 1.0 / rate,
            Self::MixtureExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w / r).sum()
            }
            Self::NormalJump { mean, .. } => *mean,
        }
    }

    /// Draw a size; `Fatal` yields `+∞`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Fatal => f64::INFINITY,
            Self::ExponentialJump { rate } => -unit_open(rng).ln() / rate,
            Self::MixtureExponential { weights, rates } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = rates.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                -unit_open(rng).ln() / rates[pick]
            }
            Self::NormalJump { mean, sd } => Normal::new(*mean, *sd)
                .expect("validated normal parameters")
                .sample(rng),
        }
    }

    /// Draw a size where a finite value is required.
    pub fn sample_finite<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if self.is_fatal() {
            return Err(Error::Unsupported(
                "fatal jumps have infinite size and cannot be sampled to a finite value".into(),
            ));
        }
        Ok(self.sample(rng))
    }
}

/// `n`-fold convolution cdf of exponential jump sizes (the Erlang cdf).
///
/// `n = 0` is the point mass at zero.
pub fn mixture_exponential_convolution_cdf(dist: &JumpSizeDist, n: u64, z: f64) -> Result<f64> {
    let rate = match dist {
        JumpSizeDist::ExponentialJump { rate } => *rate,
        _ => {
            return Err(Error::Unsupported(
                "convolution cdf is implemented for a single exponential jump law only".into(),
            ))
        }
    };
    if !(z >= 0.0) {
        return Err(Error::param("z", format!("must be >= 0, got {z}")));
    }
    Ok(erlang_cdf(n, rate, z))
}

/// Erlang(`n`, `rate`) cdf at `z ≥ 0`; `n = 0` gives 1.
pub(crate) fn erlang_cdf(n: u64, rate: f64, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let x = rate * z;
    if x <= 0.0 {
        return 0.0;
    }
    if (n as f64) < x {
        // upper tail sum is the small side
        let mut tail = 0.0;
        let lx = x.ln();
        for i in 0..n {
            tail += (-x + i as f64 * lx - ln_factorial(i)).exp();
        }
        (1.0 - tail).clamp(0.0, 1.0)
    } else {
        // lower tail Σ_{i≥n} e^{-x} x^i / i!
        let lx = x.ln();
        let mut term = (-x + n as f64 * lx - ln_factorial(n)).exp();
        let mut sum = term;
        let mut i = n;
        loop {
            i += 1;
            term *= x / i as f64;
            sum += term;
            if term < 1e-17 * sum || i > n + 10_000 {
                break;
            }
        }
        sum.clamp(0.0, 1.0)
    }
}

/// Law of a multiplicative factor on the depletion rate (frailty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum MixingDist {
    /// Gamma with `shape` and `rate`.
    #[serde(rename = "gamma")]
    GammaMix { shape: f64, rate: f64 },
    /// Dagum (inverse Burr): cdf `(1 + (z/b)^{-a})^{-p}`.
    #[serde(rename = "dagum")]
    DagumMix { p: f64, a: f64, b: f64 },
}

impl MixingDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::GammaMix { shape, rate } => {
                ensure_positive("mix.shape", shape)?;
                ensure_positive("mix.rate", rate)
            }
            Self::DagumMix { p, a, b } => {
                ensure_positive("mix.p", p)?;
                ensure_positive("mix.a", a)?;
                ensure_positive("mix.b", b)
            }
        }
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        match *self {
            Self::GammaMix { shape, rate } => Ok(regularized_gamma_p(shape, rate * z)),
            Self::DagumMix { p, a, b } => Ok((1.0 + (z / b).powf(-a)).powf(-p)),
        }
    }

    /// `E[e^{-sZ}]` for `s ≥ 0`; closed form for the Gamma law only.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        match *self {
            Self::GammaMix { shape, rate } => Ok((1.0 + s / rate).powf(-shape)),
            Self::DagumMix { .. } => Err(Error::NoClosedForm(
                "Laplace transform of the Dagum law".into(),
            )),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::GammaMix { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
            Self::DagumMix { p, a, b } => {
                let u = unit_open(rng);
                b * (u.powf(-1.0 / p) - 1.0).powf(-1.0 / a)
            }
        }
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub(crate) fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_pre = -x + a * x.ln() - libm::lgamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (sum * ln_pre.exp()).min(1.0)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / f64::MIN_POSITIVE;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < f64::MIN_POSITIVE {
                d = f64::MIN_POSITIVE;
            }
            c = b + an / c;
            if c.abs() < f64::MIN_POSITIVE {
                c = f64::MIN_POSITIVE;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - ln_pre.exp() * h).max(0.0)
    }
}
