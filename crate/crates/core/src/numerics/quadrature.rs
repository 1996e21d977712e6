//! Fixed Gauss rules and adaptive Gauss–Kronrod integration.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussLaguerre,
    GaussLegendre,
    Trapezoid,
}

/// A fixed quadrature rule: `∫ f ≈ Σ wᵢ f(xᵢ)`.
///
/// Laguerre rules integrate against the weight `e^{-v}` on `[0, ∞)`, so the
/// weights already carry the exponential factor.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

/// Gauss–Laguerre nodes used for `∫₀^∞ · e^{-v} dv` mixing integrals.
pub const DEFAULT_LAGUERRE_NODES: usize = 64;
/// Gauss–Legendre panel count for bounded integrals.
pub const DEFAULT_LEGENDRE_NODES: usize = 128;

impl QuadratureRule {
    /// `n`-point Gauss–Laguerre rule for weight `e^{-v}` on `[0, ∞)`.
    pub fn gauss_laguerre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "quadrature order must be positive"));
        }
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n {
            // initial guesses from the asymptotic node spacing
            if i == 0 {
                z = 3.0 / (1.0 + 2.4 * nf);
            } else if i == 1 {
                z += 15.0 / (1.0 + 2.5 * nf);
            } else {
                let ai = (i - 1) as f64;
                z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2]);
            }
            let mut converged = false;
            let mut p2 = 0.0;
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
                }
                pp = (nf * p1 - nf * p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-13 * z.abs() {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::RootFinding(format!(
                    "Gauss-Laguerre node {i} of {n} did not converge"
                )));
            }
            nodes[i] = z;
            weights[i] = -1.0 / (pp * nf * p2);
        }
        let rule = QuadratureRule {
            nodes,
            weights,
            kind: RuleKind::GaussLaguerre,
        };
        rule.check()?;
        Ok(rule)
    }

    /// `n`-point Gauss–Legendre rule on `[a, b]`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "quadrature order must be positive"));
        }
        if !(b > a) {
            return Err(Error::param("interval", format!("need a < b, got [{a}, {b}]")));
        }
        let (nodes, weights) = legendre_unit(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let rule = QuadratureRule {
            nodes: nodes.iter().map(|x| mid + half * x).collect(),
            weights: weights.iter().map(|w| half * w).collect(),
            kind: RuleKind::GaussLegendre,
        };
        rule.check()?;
        Ok(rule)
    }

    /// Composite trapezoid rule with `n` panels on `[a, b]`.
    pub fn trapezoid(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(Error::param("trapezoid", "need n > 0 and a < b"));
        }
        let h = (b - a) / n as f64;
        let nodes = (0..=n).map(|i| a + h * i as f64).collect();
        let weights = (0..=n)
            .map(|i| if i == 0 || i == n { 0.5 * h } else { h })
            .collect();
        Ok(QuadratureRule {
            nodes,
            weights,
            kind: RuleKind::Trapezoid,
        })
    }

    fn check(&self) -> Result<()> {
        let increasing = self.nodes.windows(2).all(|w| w[0] < w[1]);
        let positive = self.weights.iter().all(|w| *w > 0.0 && w.is_finite());
        if increasing && positive {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("{:?} rule construction", self.kind)))
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp;
        loop {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `Σ wᵢ f(xᵢ)`; a non-finite `f` value is an error.
pub fn integrate<F: FnMut(f64) -> f64>(rule: &QuadratureRule, mut f: F) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(*x);
        if !fx.is_finite() {
            return Err(Error::NonFinite(format!("integrand at node {x}")));
        }
        acc += w * fx;
    }
    Ok(acc)
}

/// Same as [`integrate`] for integrands that can fail.
pub fn try_integrate<F: FnMut(f64) -> Result<f64>>(rule: &QuadratureRule, mut f: F) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(*x)?;
        if !fx.is_finite() {
            return Err(Error::NonFinite(format!("integrand at node {x}")));
        }
        acc += w * fx;
    }
    Ok(acc)
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2_000,
        }
    }
}

impl Adaptive {
    pub fn with_abs(abs_tol: f64) -> Self {
        Adaptive {
            abs_tol,
            rel_tol: 0.0,
            ..Adaptive::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("integrand on [{a}, {b}]")));
    }
    Ok(Segment { a, b, value, error })
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn adaptive<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: Adaptive) -> Result<f64> {
    adaptive_with_breaks(f, &[a, b], opts)
}

/// Adaptive integration over consecutive breakpoints `breaks[0] < … < breaks[n]`.
pub fn adaptive_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    opts: Adaptive,
) -> Result<f64> {
    try_adaptive_with_breaks(|x| Ok(f(x)), breaks, opts)
}

/// Fallible-integrand version of [`adaptive_with_breaks`].
pub fn try_adaptive_with_breaks<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    breaks: &[f64],
    opts: Adaptive,
) -> Result<f64> {
    if breaks.len() < 2 {
        return Ok(0.0);
    }
    let mut segs = Vec::with_capacity(breaks.len() + 64);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            segs.push(gk15(&mut f, w[0], w[1])?);
        }
    }
    if segs.is_empty() {
        return Ok(0.0);
    }
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= tol {
            return Ok(total);
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                a: breaks[0],
                b: breaks[breaks.len() - 1],
                estimate: total,
                error: err,
            });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segs.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval cannot be split further in floating point
            return Err(Error::QuadratureNonConvergence {
                a: breaks[0],
                b: breaks[breaks.len() - 1],
                estimate: total,
                error: err,
            });
        }
        segs.push(gk15(&mut f, s.a, mid)?);
        segs.push(gk15(&mut f, mid, s.b)?);
    }
}

/// Fallible-integrand adaptive integration over `[a, b]`.
pub fn try_adaptive<F: FnMut(f64) -> Result<f64>>(f: F, a: f64, b: f64, opts: Adaptive) -> Result<f64> {
    try_adaptive_with_breaks(f, &[a, b], opts)
}

/// Breakpoints on `[a, b]` graded geometrically toward `b`, for integrands
/// whose structure concentrates at the right endpoint.
pub fn graded_toward_right(a: f64, b: f64, levels: usize) -> Vec<f64> {
    let mut pts = vec![a];
    let width = b - a;
    for k in 1..=levels {
        let p = b - width * 0.5f64.powi(k as i32);
        if p > *pts.last().unwrap() && p < b {
            pts.push(p);
        }
    }
    pts.push(b);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_moments() {
        let rule = QuadratureRule::gauss_laguerre(32).unwrap();
        assert!((integrate(&rule, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrate(&rule, |v| v).unwrap() - 1.0).abs() < 1e-10);
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laguerre_polynomial_exactness() {
        // ∫ v^k e^{-v} dv = k!
        for &n in &[8usize, 16, 64] {
            let rule = QuadratureRule::gauss_laguerre(n).unwrap();
            let mut fact = 1.0;
            for k in 0..(2 * n).min(30) {
                if k > 0 {
                    fact *= k as f64;
                }
                let got = integrate(&rule, |v| v.powi(k as i32)).unwrap();
                assert!((got / fact - 1.0).abs() < 1e-10, "n={n} k={k} got={got}");
            }
        }
    }

    #[test]
    fn legendre_exact_on_polynomials() {
        let rule = QuadratureRule::gauss_legendre(64, 0.0, 1.0).unwrap();
        assert!((integrate(&rule, |v| v * v).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let rule = QuadratureRule::gauss_legendre(5, -1.0, 2.0).unwrap();
        // exact up to degree 9
        let got = integrate(&rule, |x| x.powi(9)).unwrap();
        assert!((got - (2f64.powi(10) - 1.0) / 10.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let rule = QuadratureRule::gauss_legendre(4, 0.0, 1.0).unwrap();
        assert!(integrate(&rule, |_| f64::NAN).is_err());
    }

    #[test]
    fn adaptive_handles_peaks_and_endpoints() {
        let v = adaptive(|x| (-x).exp(), 0.0, 40.0, Adaptive::default()).unwrap();
        assert!((v - (1.0 - (-40f64).exp())).abs() < 1e-10);
        let v = adaptive(|x| x.sqrt(), 0.0, 1.0, Adaptive::default()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
        let breaks = graded_toward_right(0.0, 1.0, 30);
        let v = adaptive_with_breaks(|x| (1.0 - x).powf(-0.5), &breaks, Adaptive::with_abs(1e-6));
        assert!((v.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let opts = Adaptive {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_intervals: 4,
        };
        assert!(matches!(
            adaptive(|x| (50.0 * x).sin().abs(), 0.0, 10.0, opts),
            Err(Error::QuadratureNonConvergence { .. })
        ));
    }
}
