use rand::Rng;
use vitalkit::cod::*;
use vitalkit::numerics::quadrature::{adaptive_with_breaks, Adaptive};
use vitalkit::numerics::RngStream;

fn params(lambda: f64, alpha: f64, v: f64) -> CodParams {
    CodParams {
        age_x: 60.0,
        b: 0.0001744,
        c: 1.082,
        lambda,
        alpha,
        v,
    }
}

/// Direct simulation: returns (death time, died by accident).
fn simulate(p: &CodParams, rng: &mut impl Rng) -> (f64, bool) {
    let ln_c = p.c.ln();
    let base = p.b * p.c.powf(p.age_x);
    let trend = |t: f64| base * (t * ln_c).exp_m1() / ln_c;
    let inverse = |y: f64| (y * ln_c / base).ln_1p() / ln_c;
    let mut reserve = p.v;
    let mut t = 0.0;
    loop {
        let natural = inverse(reserve);
        t += -(1.0 - rng.random::<f64>()).ln() / p.lambda;
        if t >= natural {
            return (natural, false);
        }
        reserve -= -(1.0 - rng.random::<f64>()).ln() / p.alpha;
        if reserve < trend(t) {
            return (t, true);
        }
    }
}

#[test]
fn completeness_across_parameter_grid() {
    for lambda in [0.005, 0.03, 0.1, 0.5] {
        for (alpha, v) in [(0.5, 1.0), (2.0, 1.0), (5.0, 0.5), (2.0, 2.0), (20.0, 1.5)] {
            let p = params(lambda, alpha, v);
            let (a, n) = prob_cause_split(&p).unwrap();
            assert!((a + n - 1.0).abs() < 1e-6, "lambda={lambda} alpha={alpha} v={v}: {}", a + n);
        }
    }
}

#[test]
fn densities_integrate_to_transforms() {
    let p = params(0.03, 2.0, 1.0);
    let t_star = p.t_star();
    let opts = Adaptive {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_intervals: 4_000,
    };
    for q in [0.0, 0.5, 1.0, 2.0] {
        let acc = adaptive_with_breaks(
            |t| (-q * t).exp() * cod_density(&p, Cause::Accident, t).unwrap().value,
            &[0.0, t_star],
            opts,
        )
        .unwrap();
        let nat_density = cod_density(&p, Cause::Natural, 1.0).unwrap();
        let atom = nat_density.atom.unwrap();
        let nat = adaptive_with_breaks(
            |t| (-q * t).exp() * cod_density(&p, Cause::Natural, t).unwrap().value,
            &[0.0, t_star],
            opts,
        )
        .unwrap()
            + (-q * atom.time).exp() * atom.mass;
        assert!((acc - cod_laplace_accident(&p, q).unwrap()).abs() < 1e-6, "q={q}");
        assert!((nat - cod_laplace_natural(&p, q).unwrap()).abs() < 1e-6, "q={q}");
        if q == 0.0 {
            assert!((acc + nat - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn accident_probability_matches_simulation() {
    for (alpha, seed) in [(2.0, 1), (1e6, 2)] {
        let p = params(0.03, alpha, 1.0);
        let n = 100_000;
        let mut rng = RngStream::new(seed, 0).generator();
        let hits = (0..n).filter(|_| simulate(&p, &mut rng).1).count() as f64;
        let freq = hits / n as f64;
        let se = (freq * (1.0 - freq) / n as f64).sqrt();
        let exact = cod_laplace_accident(&p, 0.0).unwrap();
        assert!((freq - exact).abs() <= 3.0 * se, "alpha={alpha}: {freq} vs {exact} (se {se})");
        assert!(exact > 0.0);
    }
}

#[test]
fn death_time_law_passes_ks_against_simulation() {
    let p = params(0.03, 2.0, 1.0);
    let n = 100_000;
    let mut rng = RngStream::new(3, 0).generator();
    let mut times: Vec<f64> = (0..n).map(|_| simulate(&p, &mut rng).0).collect();
    times.sort_by(f64::total_cmp);
    let t_star = p.t_star();
    let density = |t: f64| {
        cod_density(&p, Cause::Accident, t).unwrap().value + cod_density(&p, Cause::Natural, t).unwrap().value
    };
    let opts = Adaptive {
        abs_tol: 1e-13,
        rel_tol: 1e-10,
        max_intervals: 200,
    };
    let mut d: f64 = 0.0;
    let mut cdf = 0.0;
    let mut last = 0.0;
    let mut i = 0;
    while i < n {
        let t = times[i];
        let mut j = i;
        while j < n && times[j] == t {
            j += 1;
        }
        let upto = t.min(t_star);
        if upto > last {
            cdf += adaptive_with_breaks(density, &[last, upto], opts).unwrap();
            last = upto;
        }
        let right = if t >= t_star { 1.0 } else { cdf };
        d = d.max((i as f64 / n as f64 - cdf).abs());
        d = d.max((j as f64 / n as f64 - right).abs());
        i = j;
    }
    let critical = 1.63 / (n as f64).sqrt();
    assert!(d < critical, "KS D = {d} vs {critical}");
}
