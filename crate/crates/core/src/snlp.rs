//! Ruin-time Laplace transform for `V(t) = v − δt − σB(t) − J(t)` with
//! mixed-exponential jump sizes, and survival by numerical inversion.

use crate::distributions::JumpSizeDist;
use crate::error::{Error, Result};
use crate::model::{DiffusionSpec, Intensity, TrendSpec, VitalityModel};
use crate::numerics::laplace::EulerInversion;
use num_complex::Complex64;

/// Parameters of the spectrally negative Lévy vitality process.
#[derive(Debug, Clone, PartialEq)]
pub struct SnlpParams {
    pub drift: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// Mixture components `(p_i, α_i)` with `p_i > 0` and distinct rates.
    pub components: Vec<(f64, f64)>,
}

impl SnlpParams {
    pub fn from_model(model: &VitalityModel) -> Result<Self> {
        model.validate()?;
        let drift = match model.trend {
            TrendSpec::ConstantRate { rate } => rate,
            _ => return Err(Error::Unsupported("Laplace route needs a constant-rate trend".into())),
        };
        let sigma = match model.diffusion {
            DiffusionSpec::BrownianConst { sigma } => sigma,
            DiffusionSpec::NoDiffusion => {
                return Err(Error::Unsupported("Laplace route needs Brownian diffusion".into()))
            }
        };
        let lambda = match model.jump.intensity {
            Intensity::ConstantIntensity { rate } => rate,
            Intensity::PiecewiseIntensity { .. } => {
                return Err(Error::Unsupported("Laplace route needs a constant jump intensity".into()))
            }
        };
        let raw: Vec<(f64, f64)> = if lambda == 0.0 {
            Vec::new()
        } else {
            match &model.jump.size {
                JumpSizeDist::ExponentialJump { rate } => vec![(1.0, *rate)],
                JumpSizeDist::MixtureExponential { weights, rates } => {
                    weights.iter().copied().zip(rates.iter().copied()).collect()
                }
                _ => {
                    return Err(Error::Unsupported(
                        "Laplace route needs exponential or mixed-exponential jump sizes".into(),
                    ))
                }
            }
        };
        Ok(SnlpParams::new(drift, sigma, lambda, raw))
    }

    /// Builds parameters, dropping zero-weight components and merging equal rates.
    pub fn new(drift: f64, sigma: f64, lambda: f64, raw: Vec<(f64, f64)>) -> Self {
        let mut comps: Vec<(f64, f64)> = Vec::new();
        if lambda > 0.0 {
            for (p, a) in raw {
                if p <= 0.0 {
                    continue;
                }
                match comps.iter_mut().find(|(_, b)| *b == a) {
                    Some(c) => c.0 += p,
                    None => comps.push((p, a)),
                }
            }
            comps.sort_by(|x, y| x.1.total_cmp(&y.1));
        }
        SnlpParams {
            drift,
            sigma,
            lambda: if comps.is_empty() { 0.0 } else { lambda },
            components: comps,
        }
    }

    /// `ψ(y) − q` on the real line.
    fn excess(&self, y: f64, q: f64) -> f64 {
        // λpα/(y+α) − λp = −λp·y/(y+α), exact near y = 0
        let mut s = 0.5 * self.sigma * self.sigma * y * y - self.drift * y - q;
        for (p, a) in &self.components {
            s -= self.lambda * p * y / (y + a);
        }
        s
    }

    fn excess_c(&self, y: Complex64, q: Complex64) -> Complex64 {
        // λpα/(y+α) − λp = −λp·y/(y+α), exact near y = 0
        let mut s = 0.5 * self.sigma * self.sigma * y * y - self.drift * y - q;
        for (p, a) in &self.components {
            s -= self.lambda * p * y / (y + a);
        }
        s
    }

    /// `ψ'(y)`, the function `g` of the transform formula.
    fn slope_c(&self, y: Complex64) -> Complex64 {
        let mut s = self.sigma * self.sigma * y - self.drift;
        for (p, a) in &self.components {
            s -= self.lambda * p * a / ((y + a) * (y + a));
        }
        s
    }

    /// The `n + 2` real roots of `ψ(y) = q`, in decreasing order, for `q > 0`.
    pub fn roots(&self, q: f64) -> Result<Vec<f64>> {
        if !(q > 0.0) {
            return Err(Error::param("q", format!("must be > 0, got {q}")));
        }
        let f = |y: f64| self.excess(y, q);
        let mut roots = Vec::with_capacity(self.components.len() + 2);
        // (0, ∞): f(0) = −q < 0, f → +∞
        let mut hi = 1.0;
        while f(hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::RootFinding("no positive root of the Laplace exponent".into()));
            }
        }
        roots.push(bisect(&f, 0.0, hi)?);
        // poles at −α, ascending α; sign is +∞ just right of a pole and −∞ just left
        let poles: Vec<f64> = self.components.iter().map(|(_, a)| -a).collect();
        let mut right = 0.0;
        for &pole in &poles {
            let lo = approach(&f, pole, right, 1.0)?;
            let hi = if right == 0.0 { 0.0 } else { approach(&f, right, pole, -1.0)? };
            roots.push(bisect(&f, lo, hi)?);
            right = pole;
        }
        // (−∞, leftmost pole) or (−∞, 0) without jumps: f → +∞ on the left
        let hi = if right == 0.0 { 0.0 } else { approach(&f, right, right - 1.0, -1.0)? };
        let mut lo = hi - 1.0;
        while f(lo) <= 0.0 {
            lo = hi - 2.0 * (hi - lo);
            if lo < -1e300 {
                return Err(Error::RootFinding("no leftmost root of the Laplace exponent".into()));
            }
        }
        roots.push(bisect(&f, lo, hi)?);
        let expected = self.components.len() + 2;
        if roots.len() != expected {
            return Err(Error::RootFinding(format!(
                "found {} roots, expected {expected}",
                roots.len()
            )));
        }
        let ordered = roots[0] >= 0.0 && roots[1] <= 0.0 && roots.windows(2).all(|w| w[1] < w[0]);
        if !ordered {
            return Err(Error::RootFinding(format!("root ordering violated: {roots:?}")));
        }
        Ok(roots)
    }

    /// `E_v[e^{-qτ}]` for real `q > 0`.
    pub fn laplace_tau(&self, v: f64, q: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::param("v", format!("must be > 0, got {v}")));
        }
        let roots = self.roots(q)?;
        let c: Vec<Complex64> = roots.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        Ok(self.transform_from_roots(&c, v, Complex64::new(q, 0.0)).re)
    }

    fn transform_from_roots(&self, roots: &[Complex64], v: f64, q: Complex64) -> Complex64 {
        // the θ₁ terms of the two sums cancel exactly
        let inv1 = 1.0 / roots[0];
        let mut acc = Complex64::new(0.0, 0.0);
        for th in &roots[1..] {
            acc += (th * v).exp() / self.slope_c(*th) * (1.0 / th - inv1);
        }
        q * acc
    }

    /// Roots of `ψ(y) = q` for complex `q` with positive real part; the root
    /// with positive real part comes first.
    pub fn roots_complex(&self, q: Complex64) -> Result<Vec<Complex64>> {
        let poly = self.numerator_poly(q);
        let mut roots = polynomial_roots(&poly)?;
        for r in roots.iter_mut() {
            for _ in 0..4 {
                let step = self.excess_c(*r, q) / self.slope_c(*r);
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                *r -= step;
            }
        }
        let positive: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].re > 0.0).collect();
        if positive.len() != 1 {
            return Err(Error::RootFinding(format!(
                "expected one root with positive real part at q = {q}, found {}",
                positive.len()
            )));
        }
        roots.swap(0, positive[0]);
        Ok(roots)
    }

    /// `(ψ(y) − q) Π(y + α_i)` as ascending coefficients.
    fn numerator_poly(&self, q: Complex64) -> Vec<Complex64> {
        let quad = vec![
            Complex64::new(-self.lambda, 0.0) - q,
            Complex64::new(-self.drift, 0.0),
            Complex64::new(0.5 * self.sigma * self.sigma, 0.0),
        ];
        let mut all = Vec::from([Complex64::new(1.0, 0.0)]);
        for (_, a) in &self.components {
            all = poly_mul(&all, &[Complex64::new(*a, 0.0), Complex64::new(1.0, 0.0)]);
        }
        let mut out = poly_mul(&quad, &all);
        for (i, (p, a)) in self.components.iter().enumerate() {
            let mut others = vec![Complex64::new(self.lambda * p * a, 0.0)];
            for (j, (_, b)) in self.components.iter().enumerate() {
                if i != j {
                    others = poly_mul(&others, &[Complex64::new(*b, 0.0), Complex64::new(1.0, 0.0)]);
                }
            }
            for (k, c) in others.iter().enumerate() {
                out[k] += c;
            }
        }
        out
    }

    /// `E_v[e^{-qτ}]` for complex `q` with positive real part.
    pub fn laplace_tau_complex(&self, v: f64, q: Complex64) -> Result<Complex64> {
        let roots = self.roots_complex(q)?;
        Ok(self.transform_from_roots(&roots, v, q))
    }

    /// `Pr(τ > T | V(0) = v)` by Euler inversion of `(1 − E_v[e^{-qτ}])/q`.
    pub fn survival(&self, v: f64, horizon: f64, inversion: EulerInversion) -> Result<f64> {
        if !(horizon >= 0.0) {
            return Err(Error::param("T", format!("must be >= 0, got {horizon}")));
        }
        if horizon == 0.0 {
            return Ok(1.0);
        }
        if !(v > 0.0) {
            return Ok(0.0);
        }
        let failure = std::cell::RefCell::new(None);
        let value = inversion.invert(
            |q| match self.laplace_tau_complex(v, q) {
                Ok(e) => (1.0 - e) / q,
                Err(err) => {
                    failure.borrow_mut().get_or_insert(err);
                    Complex64::new(f64::NAN, f64::NAN)
                }
            },
            horizon,
        );
        if let Some(err) = failure.into_inner() {
            return Err(err);
        }
        Ok(value?.clamp(0.0, 1.0))
    }
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let s_lo = f(lo + (hi - lo) * f64::EPSILON).signum();
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        // relative width keeps full precision for roots close to zero
        if hi - lo <= 1e-13 * mid.abs() || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFinding("bisection did not terminate".into()))
}

/// A point between `pole` and `toward` where `f` has sign `sign`, found by
/// moving geometrically toward the pole.
fn approach<F: Fn(f64) -> f64>(f: &F, pole: f64, toward: f64, sign: f64) -> Result<f64> {
    let mut gap = 0.5 * (toward - pole);
    for _ in 0..1100 {
        let y = pole + gap;
        if y == pole {
            break;
        }
        if f(y) * sign > 0.0 {
            return Ok(y);
        }
        gap *= 0.5;
    }
    Err(Error::RootFinding(format!("no sign change next to the pole {pole}")))
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All roots of a polynomial with ascending coefficients (Aberth iteration).
fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    let eval = |x: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut repulse = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if i != j {
                    repulse += 1.0 / (z[i] - z[j]);
                }
            }
            let step = ratio / (1.0 - ratio * repulse);
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            return Ok(z);
        }
    }
    if z.iter().all(|r| r.re.is_finite() && r.im.is_finite()) {
        Ok(z)
    } else {
        Err(Error::RootFinding("polynomial root iteration diverged".into()))
    }
}

/// `E_v[e^{-qτ}]` for the constant-rate, Brownian, mixed-exponential-jump model.
pub fn snlp_laplace_tau(model: &VitalityModel, v: f64, q: f64) -> Result<f64> {
    SnlpParams::from_model(model)?.laplace_tau(v, q)
}

/// `Pr(τ > T | V(0) = v)` via Laplace inversion with default settings.
pub fn survival_snlp(model: &VitalityModel, v: f64, horizon: f64) -> Result<f64> {
    SnlpParams::from_model(model)?.survival(v, horizon, EulerInversion::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{brownian_noncrossing, JumpSpec};

    fn no_jump() -> SnlpParams {
        SnlpParams::new(1.0, 1.0, 0.0, vec![])
    }

    fn one_exp() -> SnlpParams {
        SnlpParams::new(1.0, 1.0, 0.5, vec![(1.0, 2.0)])
    }

    #[test]
    fn drifted_brownian_transform() {
        let v = no_jump().laplace_tau(1.0, 1.0).unwrap();
        let oracle = (1.0 - 3f64.sqrt()).exp();
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    }

    #[test]
    fn root_counts_and_ordering() {
        let p = SnlpParams::new(0.3, 0.7, 1.2, vec![(0.2, 1.0), (0.5, 3.0), (0.3, 7.0)]);
        for &q in &[1e-6, 0.1, 1.0, 50.0] {
            let r = p.roots(q).unwrap();
            assert_eq!(r.len(), 5);
            for th in &r {
                assert!(p.excess(*th, q).abs() < 1e-7 * (1.0 + th.abs().powi(2)), "q={q} th={th}");
            }
            assert!(r[2] > -3.0 && r[2] < -1.0);
            assert!(r[4] < -7.0);
        }
    }

    #[test]
    fn complex_roots_match_real_roots_on_real_axis() {
        let p = SnlpParams::new(0.3, 0.7, 1.2, vec![(0.4, 1.0), (0.6, 3.0)]);
        let mut real = p.roots(0.8).unwrap();
        let mut cx: Vec<f64> = p
            .roots_complex(Complex64::new(0.8, 0.0))
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        real.sort_by(f64::total_cmp);
        cx.sort_by(f64::total_cmp);
        for (a, b) in real.iter().zip(&cx) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let a = p.laplace_tau(1.3, 0.8).unwrap();
        let b = p.laplace_tau_complex(1.3, Complex64::new(0.8, 0.0)).unwrap();
        assert!((a - b.re).abs() < 1e-12 && b.im.abs() < 1e-12);
    }

    #[test]
    fn transform_is_completely_monotone_on_grid() {
        let p = one_exp();
        let qs: Vec<f64> = (1..40).map(|k| 0.05 * k as f64).collect();
        let vals: Vec<f64> = qs.iter().map(|q| p.laplace_tau(2.0, *q).unwrap()).collect();
        for w in vals.windows(3) {
            assert!(w[0] > 0.0 && w[1] < w[0] && w[2] < w[1]);
            assert!(w[0] - 2.0 * w[1] + w[2] > 0.0);
        }
        // q → 0⁺ tends to Pr(τ < ∞) ≤ 1
        let small = p.laplace_tau(2.0, 1e-9).unwrap();
        assert!(small <= 1.0 + 1e-9 && small > 0.99);
    }

    #[test]
    fn inversion_reproduces_closed_form() {
        let s = no_jump().survival(1.0, 1.0, EulerInversion::default()).unwrap();
        let oracle = brownian_noncrossing(1.0, 1.0, 1.0, 1.0);
        assert!((s - oracle).abs() < 1e-6, "{s} vs {oracle}");
        assert!((oracle - 0.331_897_998_776_829_4).abs() < 1e-12);
        assert_eq!(no_jump().survival(1.0, 0.0, EulerInversion::default()).unwrap(), 1.0);
    }

    #[test]
    fn model_entry_points() {
        let m = VitalityModel {
            age_x: 0.0,
            initial: crate::distributions::InitialVitalityDist::Degenerate { v: 2.0 },
            trend: TrendSpec::ConstantRate { rate: 1.0 },
            diffusion: DiffusionSpec::BrownianConst { sigma: 1.0 },
            jump: JumpSpec {
                intensity: Intensity::ConstantIntensity { rate: 0.5 },
                size: JumpSizeDist::ExponentialJump { rate: 2.0 },
            },
        };
        let a = snlp_laplace_tau(&m, 2.0, 0.5).unwrap();
        let b = one_exp().laplace_tau(2.0, 0.5).unwrap();
        assert_eq!(a, b);
        let fatal = VitalityModel {
            jump: JumpSpec::fatal(0.5),
            ..m
        };
        assert!(snlp_laplace_tau(&fatal, 2.0, 0.5).is_err());
    }
}
