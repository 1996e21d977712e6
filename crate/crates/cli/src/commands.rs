//! Thin adapters from configuration sections to library calls.

use crate::config::{
    section, DisabilityKind, FreeParam, LifecycleSection, PriceMethod, RunConfig, SurviveMethod,
};
use crate::table::{Cell, Output, Table};
use crate::CliError;
use vitalkit::actuarial::{
    annuity_price, healthy_stay_prob, insurance_price, life_expectancy, recovery_prob, recovery_prob_mc,
    simulated_valuation, PricingBasis, ValuationOptions,
};
use vitalkit::cod::{cod_death_cdf, cod_density, prob_cause_split, Cause};
use vitalkit::estimation::{
    calibrate_jump_intensity, fit_gompertz_law, fit_mle, load_accident_csv, load_cohort_csv, FitOptions, FitResult,
    ParamMask,
};
use vitalkit::fpmc::{mc_survival, survival_unconditional, McConfig, McEstimate};
use vitalkit::lifecycle::{
    consumption_factor, optimal_policy, simulate_lifecycle, value_function_g, DEFAULT_V_MAX,
};
use vitalkit::numerics::rng::RngStream;
use vitalkit::{survival_snlp, survival_static, Error, InitialVitalityDist, VitalityModel};

/// Subcommand selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Survive,
    Fit,
    Price,
    Cod,
    Lifecycle,
    Disability,
}

/// Runs one subcommand. `seed` is mandatory whenever the command samples.
pub fn execute(cmd: Command, cfg: &RunConfig, seed: Option<u64>) -> Result<Output, CliError> {
    match cmd {
        Command::Survive => survive(cfg, seed),
        Command::Fit => fit(cfg, seed),
        Command::Price => price(cfg, seed),
        Command::Cod => cod(cfg),
        Command::Lifecycle => lifecycle(cfg, seed),
        Command::Disability => disability(cfg, seed),
    }
}

fn need_seed(seed: Option<u64>, why: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::config("--seed", format!("required: {why} uses random sampling")))
}

fn mc_config(cfg: &RunConfig, seed: u64) -> McConfig {
    let mut mc = McConfig::new(cfg.monte_carlo.n_paths, seed);
    mc.n_time_points = cfg.monte_carlo.points_per_year;
    mc.antithetic = cfg.monte_carlo.antithetic;
    mc
}

fn closed_form_gap(e: &Error) -> bool {
    matches!(e, Error::NoClosedForm(_) | Error::Unsupported(_))
}

fn survive(cfg: &RunConfig, seed: Option<u64>) -> Result<Output, CliError> {
    let model = cfg.require_model()?;
    let s = section(&cfg.survive, "survive")?;
    let horizons = s.horizons.points("survive.horizons")?;
    let conditioned = match s.v {
        Some(v) => model.with_initial(InitialVitalityDist::Degenerate { v }),
        None => model.clone(),
    };
    let closed = || -> Result<Vec<f64>, Error> { horizons.iter().map(|&t| survival_static(&conditioned, t)).collect() };
    let (values, method): (Vec<McEstimate>, &str) = match s.method {
        SurviveMethod::ClosedForm => (exact(closed()?), "closed-form"),
        SurviveMethod::Laplace => {
            let v = s.v.expect("validated");
            let vals = horizons.iter().map(|&t| survival_snlp(model, v, t)).collect::<Result<Vec<_>, _>>()?;
            (exact(vals), "laplace")
        }
        SurviveMethod::MonteCarlo => (simulate_survival(cfg, model, s.v, &horizons, seed)?, "monte-carlo"),
        SurviveMethod::Auto => match closed() {
            Ok(v) => (exact(v), "closed-form"),
            Err(e) if closed_form_gap(&e) => (simulate_survival(cfg, model, s.v, &horizons, seed)?, "monte-carlo"),
            Err(e) => return Err(e.into()),
        },
    };
    let sampled = method == "monte-carlo";
    let mut table = Table::new(&["t", "age", "survival", "std_error", "log_death_rate", "method"]);
    for (i, (&t, est)) in horizons.iter().zip(&values).enumerate() {
        let log_rate = match (horizons.get(i + 1), values.get(i + 1)) {
            (Some(&t1), Some(next)) if (t1 - t - 1.0).abs() < 1e-9 && est.value > 0.0 => {
                Some((-(next.value / est.value)).ln_1p())
            }
            _ => None,
        };
        table.push(vec![
            t.into(),
            (model.age_x + t).into(),
            est.value.into(),
            if sampled { est.std_error.into() } else { Cell::Empty },
            log_rate.into(),
            method.into(),
        ]);
    }
    Ok(Output::Table(table))
}

fn exact(values: Vec<f64>) -> Vec<McEstimate> {
    values.into_iter().map(McEstimate::exact).collect()
}

fn simulate_survival(
    cfg: &RunConfig,
    model: &VitalityModel,
    v: Option<f64>,
    horizons: &[f64],
    seed: Option<u64>,
) -> Result<Vec<McEstimate>, CliError> {
    let mc = mc_config(cfg, need_seed(seed, "Monte Carlo survival")?);
    horizons
        .iter()
        .map(|&t| match v {
            Some(v) => mc_survival(model, v, t, &mc),
            None => survival_unconditional(model, t, &mc),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from)
}

fn fit(cfg: &RunConfig, seed: Option<u64>) -> Result<Output, CliError> {
    let f = section(&cfg.fit, "fit")?;
    let data = load_cohort_csv(cfg.resolve(&f.data)).map_err(|e| crate::config::at("fit.data", e))?;
    let mask = ParamMask {
        b: f.free.contains(&FreeParam::B),
        c: f.free.contains(&FreeParam::C),
        sigma: f.free.contains(&FreeParam::Sigma),
    };
    let intensity = match &f.accidents {
        Some(p) => {
            let table = load_accident_csv(cfg.resolve(p)).map_err(|e| crate::config::at("fit.accidents", e))?;
            Some(calibrate_jump_intensity(&table, data.age_x, data.t_max() + 1)?)
        }
        None => None,
    };
    let simulated = intensity.is_some()
        || mask.sigma
        || cfg.model.as_ref().is_some_and(|m| m.diffusion.sigma() > 0.0 || !m.jump.is_absent());
    let seed = if simulated || f.starts > 1 {
        need_seed(seed, "fitting with simulated likelihoods or several starts")?
    } else {
        seed.unwrap_or(0)
    };
    let mut opts = FitOptions {
        starts: f.starts,
        mc: mc_config(cfg, seed),
        seed,
        std_errors: f.std_errors,
        ..FitOptions::default()
    };
    opts.likelihood.censor_survivors = f.censor_survivors;
    let result = match &cfg.model {
        None if mask == ParamMask::GOMPERTZ && intensity.is_none() => fit_gompertz_law(&data, &opts)?,
        None => {
            let template = VitalityModel::gompertz(data.age_x as f64, 1e-4, 1.08);
            fit_mle(&template, mask, &data, intensity.as_ref(), &opts)?
        }
        Some(m) => fit_mle(m, mask, &data, intensity.as_ref(), &opts)?,
    };
    Ok(Output::document(&result, fit_table(&result)))
}

fn fit_table(r: &FitResult) -> Table {
    let mut t = Table::new(&["name", "value", "std_error"]);
    for (name, value) in &r.params {
        let se = r.std_errors.as_ref().and_then(|m| m.get(name).copied());
        t.push(vec![name.clone().into(), (*value).into(), se.into()]);
    }
    t.push(vec!["loglik".into(), r.loglik.into(), Cell::Empty]);
    t.push(vec!["loglik_constant".into(), r.loglik_constant.into(), Cell::Empty]);
    t
}

fn route_name<T: serde::Serialize>(route: &T) -> String {
    serde_json::to_value(route)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn price(cfg: &RunConfig, seed: Option<u64>) -> Result<Output, CliError> {
    let model = cfg.require_model()?;
    let p = section(&cfg.price, "price")?;
    let basis = PricingBasis::new(p.force_of_interest).map_err(|e| crate::config::at("price", e))?;
    let opts = ValuationOptions {
        density_order: p.density_order,
    };
    let mut table = Table::new(&["quantity", "value", "std_error", "route"]);
    if p.method == PriceMethod::Auto {
        let closed = (|| {
            Ok::<_, Error>([
                ("life_expectancy", life_expectancy(model, p.v, opts)?),
                ("annuity", annuity_price(model, &basis, p.v, opts)?),
                ("insurance", insurance_price(model, &basis, p.v, opts)?),
            ])
        })();
        match closed {
            Ok(rows) => {
                for (name, val) in rows {
                    table.push(vec![name.into(), val.value.into(), Cell::Empty, route_name(&val.route).into()]);
                }
                return Ok(Output::Table(table));
            }
            Err(e) if closed_form_gap(&e) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let mc = mc_config(cfg, need_seed(seed, "simulated pricing")?);
    let sim = simulated_valuation(model, &basis, p.v, &mc)?;
    for (name, est) in [
        ("life_expectancy", sim.life_expectancy),
        ("annuity", sim.annuity),
        ("insurance", sim.insurance),
    ] {
        table.push(vec![name.into(), est.value.into(), est.std_error.into(), "monte-carlo".into()]);
    }
    table.push(vec!["censored_paths".into(), (sim.censored as f64).into(), Cell::Empty, "monte-carlo".into()]);
    Ok(Output::Table(table))
}

fn cod(cfg: &RunConfig) -> Result<Output, CliError> {
    let c = section(&cfg.cod, "cod")?;
    let params = c.params();
    let (accident, natural) = prob_cause_split(&params)?;
    let mut table = Table::new(&["quantity", "t", "value"]);
    table.push(vec!["accident_prob".into(), Cell::Empty, accident.into()]);
    table.push(vec!["natural_prob".into(), Cell::Empty, natural.into()]);
    table.push(vec!["shock_free_lifetime".into(), Cell::Empty, params.t_star().into()]);
    if let Some(times) = &c.times {
        let mut atom_reported = false;
        for t in times.points("cod.times")? {
            let acc = cod_density(&params, Cause::Accident, t)?;
            let nat = cod_density(&params, Cause::Natural, t)?;
            if let (Some(atom), false) = (nat.atom, atom_reported) {
                table.push(vec!["natural_atom".into(), atom.time.into(), atom.mass.into()]);
                atom_reported = true;
            }
            table.push(vec!["accident_density".into(), t.into(), acc.value.into()]);
            table.push(vec!["natural_density".into(), t.into(), nat.value.into()]);
            table.push(vec!["death_cdf".into(), t.into(), cod_death_cdf(&params, t)?.into()]);
        }
    }
    Ok(Output::Table(table))
}

/// Smallest vitality on the solver grid.
const V_FLOOR: f64 = 1e-3;

fn lifecycle_grid(l: &LifecycleSection) -> Result<Vec<f64>, CliError> {
    match &l.v_grid {
        Some(g) => g.points("lifecycle.v_grid"),
        None => Ok(std::iter::once(V_FLOOR)
            .chain((1..=(DEFAULT_V_MAX * 4.0) as usize).map(|i| i as f64 * 0.25))
            .collect()),
    }
}

fn lifecycle(cfg: &RunConfig, seed: Option<u64>) -> Result<Output, CliError> {
    let l = section(&cfg.lifecycle, "lifecycle")?;
    let (market, sde) = (&l.market, &l.vitality);
    let points = lifecycle_grid(l)?;
    let mut solver_grid = points.clone();
    if solver_grid[0] > V_FLOOR {
        solver_grid.insert(0, V_FLOOR);
    }
    let vf = value_function_g(&solver_grid, market, sde).map_err(|e| crate::config::at("lifecycle.v_grid", e))?;
    let offset = solver_grid.len() - points.len();
    let mut table = Table::new(&["v", "f", "consumption_share", "risky_weight", "g"]);
    for (i, &v) in points.iter().enumerate() {
        let f = consumption_factor(v, market, sde)?;
        let (weight, _) = optimal_policy(1.0, v.max(f64::MIN_POSITIVE), market, sde)?;
        table.push(vec![v.into(), f.into(), (1.0 / f).into(), weight.into(), vf.g[i + offset].into()]);
    }
    if l.paths > 0 {
        let seed = need_seed(seed, "lifecycle path simulation")?;
        let path = cfg.resolve(l.paths_file.as_ref().expect("validated"));
        write_paths(l, seed, &path)?;
    }
    Ok(Output::Table(table))
}

/// Monthly snapshots of each simulated life, plus its final state.
fn write_paths(l: &LifecycleSection, seed: u64, file: &std::path::Path) -> Result<(), CliError> {
    let root = RngStream::new(seed, 0);
    let stride = ((1.0 / 12.0) / l.dt).round().max(1.0) as usize;
    let mut table = Table::new(&["path", "t", "assets", "consumption", "vitality", "tau", "bankrupt", "utility"]);
    for i in 0..l.paths {
        let mut rng = root.substream(i as u64).generator();
        let p = simulate_lifecycle(l.a0, &l.market, &l.vitality, l.policy, l.dt, &mut rng)?;
        let last = p.times.len() - 1;
        for k in (0..=last).filter(|k| k % stride == 0 || *k == last) {
            table.push(vec![
                (i as f64).into(),
                p.times[k].into(),
                p.assets[k].into(),
                p.consumption[k].into(),
                p.vitality[k].into(),
                p.tau.into(),
                if p.bankrupt { "true" } else { "false" }.into(),
                p.utility.into(),
            ]);
        }
    }
    let out = std::fs::File::create(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    table
        .write_csv(std::io::BufWriter::new(out))
        .map_err(|e| CliError::Io(format!("{}: {e}", file.display())))
}

fn disability(cfg: &RunConfig, seed: Option<u64>) -> Result<Output, CliError> {
    let model = cfg.require_model()?;
    let d = section(&cfg.disability, "disability")?;
    let horizons = d.horizons.points("disability.horizons")?;
    let mut table = Table::new(&["t", "probability", "printed", "std_error", "method"]);
    match d.kind {
        DisabilityKind::HealthyStay => {
            for &t in &horizons {
                let p = healthy_stay_prob(model, &d.query(t))?;
                table.push(vec![t.into(), p.into(), Cell::Empty, Cell::Empty, "closed-form".into()]);
            }
        }
        DisabilityKind::Recovery => {
            let mc = if d.mc_paths > 0 {
                let mut mc = mc_config(cfg, need_seed(seed, "the recovery cross-check")?);
                mc.n_paths = d.mc_paths;
                Some(mc)
            } else {
                None
            };
            for &t in &horizons {
                let q = d.query(t);
                let r = recovery_prob(model, &q)?;
                table.push(vec![t.into(), r.conditional.into(), r.printed.into(), Cell::Empty, "quadrature".into()]);
                if let Some(mc) = &mc {
                    let e = recovery_prob_mc(model, &q, mc)?;
                    table.push(vec![t.into(), e.value.into(), Cell::Empty, e.std_error.into(), "monte-carlo".into()]);
                }
            }
        }
    }
    Ok(Output::Table(table))
}
