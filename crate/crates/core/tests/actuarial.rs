use proptest::prelude::*;
use vitalkit::actuarial::{
    annuity_certain, annuity_price, belief_gap, healthy_stay_prob, insurance_price, joint_max_endpoint_density,
    life_expectancy, max_endpoint_cdf, recovery_prob, recovery_prob_mc, simulated_valuation, DisabilityQuery,
    PricingBasis, ValuationOptions, ValuationRoute,
};
use vitalkit::fpmc::McConfig;
use vitalkit::numerics::quadrature::{adaptive, adaptive_with_breaks, Adaptive};
use vitalkit::{
    gompertz_death_time, DiffusionSpec, Error, InitialVitalityDist, JumpSpec, TrendSpec,
    VitalityModel,
};

const B: f64 = 0.0001744;
const C: f64 = 1.082;

fn exp1() -> InitialVitalityDist {
    InitialVitalityDist::Exponential { rate: 1.0 }
}

fn drifting(delta: f64, sigma: f64) -> VitalityModel {
    VitalityModel {
        diffusion: DiffusionSpec::BrownianConst { sigma },
        ..VitalityModel::pure_trend(0.0, exp1(), TrendSpec::ConstantRate { rate: delta })
    }
}

fn opts() -> ValuationOptions {
    ValuationOptions::default()
}

#[test]
fn gompertz_life_expectancy_at_sixty() {
    let m = VitalityModel::gompertz(60.0, B, C);
    let pop = life_expectancy(&m, None, opts()).unwrap();
    assert_eq!(pop.route, ValuationRoute::SurvivalIntegral);
    assert!((pop.value - 17.0).abs() < 0.2, "{}", pop.value);
    let avg = life_expectancy(&m, Some(1.0), opts()).unwrap();
    assert_eq!(avg.route, ValuationRoute::DeathTime);
    let avg = avg.value;
    assert!((avg - 20.4).abs() < 0.05, "{avg}");
}

#[test]
fn linear_depletion_lives_one_over_rate() {
    for rate in [0.02, 0.05, 0.3] {
        let m = VitalityModel::pure_trend(0.0, exp1(), TrendSpec::ConstantRate { rate });
        let e = life_expectancy(&m, None, opts()).unwrap().value;
        assert!((e - 1.0 / rate).abs() < 1e-9 / rate, "{e}");
    }
}

#[test]
fn deterministic_death_gives_annuity_certain() {
    let m = VitalityModel::pure_trend(0.0, InitialVitalityDist::Degenerate { v: 1.0 }, TrendSpec::ConstantRate { rate: 0.1 });
    let basis = PricingBasis::new(0.05).unwrap();
    let a = annuity_price(&m, &basis, None, opts()).unwrap().value;
    assert!((a - 7.8694).abs() < 5e-5, "{a}");
    let ins = insurance_price(&m, &basis, None, opts()).unwrap().value;
    assert!((ins - (-0.5f64).exp()).abs() < 1e-12);
}

#[test]
fn insurance_identity_against_direct_discounting() {
    let quad = Adaptive { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4_000 };
    let breaks: Vec<f64> = (0..=80).map(|i| i as f64 * 0.5).collect();
    for x in [40.0, 60.0, 80.0] {
        for force in [0.01, 0.04, 0.1] {
            let m = VitalityModel::gompertz(x, B, C);
            let basis = PricingBasis::new(force).unwrap();
            let ins = insurance_price(&m, &basis, None, opts()).unwrap().value;
            let direct = adaptive_with_breaks(
                |v| (-v - force * gompertz_death_time(v, x, B, C).unwrap()).exp(),
                &breaks,
                quad,
            )
            .unwrap();
            assert!((ins - direct).abs() < 1e-10, "{ins} vs {direct}");
        }
    }
}

#[test]
fn annuity_is_bounded_by_perpetuity() {
    let models = [VitalityModel::gompertz(60.0, B, C), drifting(0.08, 0.2)];
    for m in &models {
        for force in [0.01, 1.0, 1e3] {
            let a = annuity_price(m, &PricingBasis::new(force).unwrap(), None, opts()).unwrap().value;
            assert!(a > 0.0 && a <= 1.0 / force, "{a}");
        }
    }
}

#[test]
fn closed_form_survival_route_agrees_with_linear_depletion() {
    // fatal jumps at rate λ on top of linear depletion: E τ = ∫ e^{−λt} Pr(V(0) > δt) dt = 1/(δ + λ)
    let m = VitalityModel {
        jump: JumpSpec::fatal(0.02),
        ..VitalityModel::pure_trend(0.0, exp1(), TrendSpec::ConstantRate { rate: 0.05 })
    };
    let e = life_expectancy(&m, None, opts()).unwrap();
    assert_eq!(e.route, ValuationRoute::SurvivalIntegral);
    assert!((e.value - 1.0 / 0.07).abs() < 1e-8, "{}", e.value);
}

#[test]
fn brownian_life_expectancy_is_inverse_gaussian_mean() {
    // constant drift δ with Brownian noise: E τ(v) = v/δ exactly
    let m = drifting(0.1, 0.3);
    let e = life_expectancy(&m, Some(2.0), opts()).unwrap();
    assert!((e.value - 20.0).abs() < 1e-6, "{}", e.value);
}

#[test]
fn diffusion_density_route_tracks_simulation() {
    let m = VitalityModel {
        diffusion: DiffusionSpec::BrownianConst { sigma: 0.1 },
        ..VitalityModel::gompertz(60.0, B, C)
    };
    let e = life_expectancy(&m, Some(1.0), opts()).unwrap();
    assert_eq!(e.route, ValuationRoute::Density);
    let sim = simulated_valuation(&m, &PricingBasis::new(0.03).unwrap(), Some(1.0), &McConfig::new(4_000, 5)).unwrap();
    let gap = (e.value - sim.life_expectancy.value).abs();
    assert!(gap < 4.0 * sim.life_expectancy.std_error + 0.05, "{} vs {:?}", e.value, sim.life_expectancy);
    // the one-term tangent density is cruder but stays within a few percent
    let tangent = life_expectancy(&m, Some(1.0), ValuationOptions { density_order: 1 }).unwrap().value;
    assert!((tangent / e.value - 1.0).abs() < 0.05, "{tangent} vs {}", e.value);
}

#[test]
fn jumps_route_to_simulation() {
    let m = VitalityModel {
        jump: JumpSpec {
            size: vitalkit::JumpSizeDist::ExponentialJump { rate: 4.0 },
            ..JumpSpec::fatal(0.1)
        },
        ..VitalityModel::gompertz(60.0, B, C)
    };
    assert!(matches!(life_expectancy(&m, None, opts()), Err(Error::NoClosedForm(_))));
    let basis = PricingBasis::new(0.04).unwrap();
    let sim = simulated_valuation(&m, &basis, None, &McConfig::new(2_000, 9)).unwrap();
    let pure = life_expectancy(&VitalityModel::gompertz(60.0, B, C), None, opts()).unwrap().value;
    assert!(sim.life_expectancy.value < pure);
    assert!((sim.insurance.value + 0.04 * sim.annuity.value - 1.0).abs() < 1e-12);
    assert_eq!(sim.censored, 0);
}

#[test]
fn simulated_deterministic_path_is_exact_up_to_grid() {
    let m = VitalityModel::pure_trend(0.0, InitialVitalityDist::Degenerate { v: 1.0 }, TrendSpec::ConstantRate { rate: 0.1 });
    let sim = simulated_valuation(&m, &PricingBasis::new(0.05).unwrap(), None, &McConfig::new(100, 1)).unwrap();
    assert!((sim.life_expectancy.value - 10.0).abs() < 1e-9);
    assert!((sim.annuity.value - annuity_certain(10.0, 0.05)).abs() < 1e-9);
}

#[test]
fn belief_gap_at_sixty() {
    let g = belief_gap(B, C, 60.0).unwrap();
    assert!((g.pop_le - 17.0).abs() < 0.2);
    assert!((g.avg_v_le - 20.4).abs() < 0.05);
    let median = (std::f64::consts::LN_2 * C.ln() / (B * C.powf(60.0))).ln_1p() / C.ln();
    assert!((g.median_v_le - median).abs() < 1e-12, "{}", g.median_v_le);
    assert!((g.median_v_le - 16.83).abs() < 0.01, "{}", g.median_v_le);
}

#[test]
fn jensen_gap_is_strict_on_a_grid() {
    for b in [5e-5, 1.744e-4, 5e-4] {
        for c in [1.05, 1.082, 1.12] {
            for x in [30.0, 60.0, 85.0] {
                let g = belief_gap(b, c, x).unwrap();
                assert!(g.avg_v_le - g.pop_le > 0.0, "b={b} c={c} x={x}: {g:?}");
            }
        }
    }
}

#[test]
fn healthy_stay_is_memoryless() {
    let m = VitalityModel::pure_trend(0.0, exp1(), TrendSpec::ConstantRate { rate: 0.1 });
    let fixed = DisabilityQuery { threshold: 0.7, horizon: 3.0, threshold_dist: None };
    assert!((healthy_stay_prob(&m, &fixed).unwrap() - 0.7408182206817179).abs() < 1e-15);
    let random = DisabilityQuery { threshold_dist: Some(exp1()), ..fixed.clone() };
    assert!((healthy_stay_prob(&m, &random).unwrap() - 0.7408182206817179).abs() < 1e-9);
    let now = DisabilityQuery { horizon: 0.0, ..fixed.clone() };
    assert_eq!(healthy_stay_prob(&m, &now).unwrap(), 1.0);
    assert!(matches!(healthy_stay_prob(&drifting(0.1, 0.2), &fixed), Err(Error::Unsupported(_))));
}

fn density_mass(horizon: f64, delta: f64, sigma: f64) -> f64 {
    let opts = Adaptive { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 4_000 };
    let drift = delta / sigma;
    let spread = 14.0 * horizon.sqrt() + drift.abs() * horizon;
    let lo = (drift * horizon).min(0.0) - spread;
    let hi = (drift * horizon).max(0.0) + spread;
    let breaks: Vec<f64> = (0..=32).map(|i| lo + (hi - lo) * i as f64 / 32.0).collect();
    adaptive_with_breaks(
        |w| {
            let m_lo = w.max(0.0);
            adaptive(|m| joint_max_endpoint_density(m, w, horizon, delta, sigma), m_lo, m_lo + spread, opts).unwrap()
        },
        &breaks,
        opts,
    )
    .unwrap()
}

#[test]
fn joint_density_has_unit_mass() {
    for horizon in [0.5, 1.0, 5.0] {
        for (delta, sigma) in [(0.0, 1.0), (0.079, 0.5), (-0.2, 0.3)] {
            let mass = density_mass(horizon, delta, sigma);
            assert!((mass - 1.0).abs() < 1e-5, "T={horizon} δ={delta} σ={sigma}: {mass}");
        }
    }
}

#[test]
fn maximum_marginal_is_reflected_normal() {
    let opts = Adaptive { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 2_000 };
    for m in [0.5, 1.0, 2.0] {
        let marginal = adaptive(|w| joint_max_endpoint_density(m, w, 1.0, 0.0, 1.0), m - 15.0, m, opts).unwrap();
        let exact = 2.0 * (-0.5 * m * m).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((marginal - exact).abs() < 1e-6, "{marginal} vs {exact}");
    }
}

fn recovery_query(threshold: f64, horizon: f64) -> DisabilityQuery {
    DisabilityQuery { threshold, horizon, threshold_dist: None }
}

#[test]
fn recovery_matches_simulation() {
    let m = drifting(0.079, 0.5);
    let q = recovery_query(0.5, 5.0);
    let r = recovery_prob(&m, &q).unwrap();
    let mc = recovery_prob_mc(&m, &q, &McConfig::new(100_000, 4)).unwrap();
    assert!((r.conditional - mc.value).abs() < 3.0 * mc.std_error, "{r:?} vs {mc:?}");
    let disabled = 1.0 - (-0.5f64).exp();
    assert!((r.printed.unwrap() - r.numerator / (1.0 - disabled)).abs() < 1e-15);
}

#[test]
fn recovery_numerator_matches_closed_form() {
    let (delta, sigma, omega, horizon) = (0.079, 0.5, 0.5, 5.0);
    let r = recovery_prob(&drifting(delta, sigma), &recovery_query(omega, horizon)).unwrap();
    let opts = Adaptive { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 1_000 };
    let direct = adaptive(
        |v| max_endpoint_cdf(v / sigma, (v - omega) / sigma, horizon, delta / sigma) * (-v).exp(),
        0.0,
        omega,
        opts,
    )
    .unwrap();
    assert!((r.numerator - direct).abs() < 1e-8, "{} vs {direct}", r.numerator);
}

#[test]
fn recovery_limits() {
    let m = drifting(0.079, 0.5);
    // only lives within a few σ√T of the threshold can cross it, so the limit is O(√T)
    let short: Vec<f64> =
        [1e-6, 1e-8, 1e-10].iter().map(|t| recovery_prob(&m, &recovery_query(0.5, *t)).unwrap().conditional).collect();
    assert!(short[0] <= 1e-3 && short[1] <= 1e-4 && short[2] <= 1e-5, "{short:?}");
    assert!(recovery_prob(&m, &recovery_query(40.0, 5.0)).unwrap().conditional < 1e-6);
}

#[test]
fn recovery_monotone_in_threshold() {
    let m = VitalityModel { initial: InitialVitalityDist::Degenerate { v: 0.2 }, ..drifting(0.079, 0.5) };
    let values: Vec<f64> =
        [0.25, 0.5, 1.0, 2.0].iter().map(|w| recovery_prob(&m, &recovery_query(*w, 5.0)).unwrap().conditional).collect();
    assert!(values.windows(2).all(|p| p[1] <= p[0] + 1e-9), "{values:?}");
}

#[test]
fn recovery_rises_then_fades_in_horizon() {
    let m = drifting(0.079, 0.5);
    let values: Vec<f64> =
        [0.01, 0.05, 0.1, 0.3, 20.0].iter().map(|t| recovery_prob(&m, &recovery_query(0.5, *t)).unwrap().conditional).collect();
    assert!(values[0] < values[1] && values[1] < values[2] && values[2] < values[3], "{values:?}");
    assert!(values[4] < values.iter().cloned().fold(0.0, f64::max), "{values:?}");
}

#[test]
fn recovery_rejects_other_models() {
    let q = recovery_query(0.5, 1.0);
    assert!(recovery_prob(&VitalityModel::gompertz(60.0, B, C), &q).is_err());
    let healthy_only = VitalityModel {
        initial: InitialVitalityDist::Degenerate { v: 2.0 },
        ..drifting(0.1, 0.3)
    };
    assert!(recovery_prob(&healthy_only, &q).unwrap_err().is_validation());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fatal_jump_survival_integral_matches_formula(delta in 0.01f64..0.5, lambda in 0.0f64..0.2, force in 0.001f64..0.2) {
        let m = VitalityModel {
            jump: JumpSpec::fatal(lambda),
            ..VitalityModel::pure_trend(0.0, exp1(), TrendSpec::ConstantRate { rate: delta })
        };
        prop_assume!(lambda > 0.0);
        let priced = annuity_price(&m, &PricingBasis::new(force).unwrap(), None, opts()).unwrap();
        prop_assert_eq!(priced.route, ValuationRoute::SurvivalIntegral);
        let a = priced.value;
        let exact = 1.0 / (delta + lambda + force);
        prop_assert!((a - exact).abs() < 1e-8 * exact.max(1.0), "{} vs {}", a, exact);
    }
}
