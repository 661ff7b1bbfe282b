//! The `moments`, `simulate` and `limits` experiments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use additive_core::empirical::{
    empirical_moments, normalized_cdf, EmpiricalDistribution, Histogram, ProgressionSpec,
    HISTOGRAM_BINS, HISTOGRAM_RANGE,
};
use additive_core::functions::{
    build_prime_classes, builtin, kolmogorov_example_function, AdditiveFunction, Expr,
    KolmogorovParams,
};
use additive_core::limitlaws::{
    condition_profile, ks_distance, normal_cdf, KolmogorovFunction, KsDistance,
};
use additive_core::model::{build_model, exact_moments, simulate, ModelMoments};
use additive_core::predictor::{
    bounded_moment_check, compare, exceedance_fraction, mertens_progression, moment_sums,
    BoundedMomentReport, PrimeSumMode,
};
use additive_core::primes::cache::cached_primes_up_to;
use additive_core::primes::PrimeSet;
use additive_core::report::{fmt_f64, sig17, to_json};
use additive_core::{Error, Result};
use serde::Serialize;

use crate::config::{ExperimentConfig, FunctionSpec, Reference};

/// Environment variable naming the prime cache directory.
pub const CACHE_DIR_ENV: &str = "ADDITIVE_CACHE_DIR";

/// Bins of the plot histogram in `histogram.csv`.
pub const PLOT_BINS: usize = 256;

fn load_primes(n: u64) -> Result<PrimeSet> {
    let dir = std::env::var_os(CACHE_DIR_ENV).map(std::path::PathBuf::from);
    cached_primes_up_to(dir.as_deref(), n)
}

fn build_function(cfg: &ExperimentConfig, primes: &PrimeSet) -> Result<AdditiveFunction> {
    match &cfg.function {
        FunctionSpec::Builtin { name } => builtin(name),
        FunctionSpec::Rule {
            name,
            rule,
            strongly_additive,
        } => Ok(AdditiveFunction::from_expr(
            name.clone(),
            rule.parse::<Expr>()?,
            *strongly_additive,
        )),
        FunctionSpec::KolmogorovExample => {
            let params = cfg
                .params
                .ok_or(Error::InvalidParams("missing Kolmogorov params".into()))?;
            let classes = build_prime_classes(primes, params, cfg.spec.k)?;
            kolmogorov_example_function(params, &classes)
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents).map_err(|e| Error::Io(format!("{name}: {e}")))
}

fn prepare(cfg: &ExperimentConfig) -> Result<(PrimeSet, AdditiveFunction)> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::Io(format!("{}: {e}", cfg.out.display())))?;
    let primes = load_primes(cfg.spec.n)?;
    let f = build_function(cfg, &primes)?;
    write(&cfg.out, "config.json", &to_json(cfg))?;
    Ok((primes, f))
}

#[derive(Serialize)]
struct Exceedance {
    mode: PrimeSumMode,
    #[serde(serialize_with = "sig17")]
    eps: f64,
    #[serde(serialize_with = "sig17")]
    fraction: f64,
}

#[derive(Serialize)]
struct Boundedness {
    function: String,
    #[serde(flatten)]
    report: BoundedMomentReport,
    exceedance: Vec<Exceedance>,
}

pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let (primes, f) = prepare(cfg)?;
    let out = &cfg.out;
    let mut written = vec!["config.json".to_string()];
    let mut emit = |name: String, contents: String| -> Result<()> {
        write(out, &name, &contents)?;
        written.push(name);
        Ok(())
    };

    let empirical = empirical_moments(&f, cfg.spec, cfg.orders)?;
    emit("moment_report.json".into(), to_json(&empirical))?;
    emit("moment_report.csv".into(), empirical.to_csv())?;

    let mut predictions = Vec::new();
    for &mode in &cfg.modes {
        let p = moment_sums(&f, cfg.spec, mode, cfg.orders, &primes)?;
        emit(format!("prediction_{mode}.json"), to_json(&p))?;
        predictions.push(p);
    }
    let comparison = compare(&empirical, &predictions);
    emit("comparison.json".into(), to_json(&comparison))?;
    emit("ratios.csv".into(), comparison.ratio_csv())?;

    let report = bounded_moment_check(&f, cfg.spec, &primes, cfg.thresholds)?;
    let exceedance = cfg
        .modes
        .iter()
        .map(|&mode| {
            Ok(Exceedance {
                mode,
                eps: cfg.eps,
                fraction: exceedance_fraction(&f, cfg.spec, mode, &primes, cfg.eps)?,
            })
        })
        .collect::<Result<_>>()?;
    emit(
        "boundedness.json".into(),
        to_json(&Boundedness {
            function: f.name().to_string(),
            report,
            exceedance,
        }),
    )?;
    emit(
        "mertens.json".into(),
        to_json(&mertens_progression(cfg.spec, &primes)?),
    )?;
    Ok(written)
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    function: &'a str,
    spec: ProgressionSpec,
    mode: PrimeSumMode,
    model_entries: usize,
    exact: &'a ModelMoments,
    monte_carlo: &'a ModelMoments,
}

fn deviation_csv(exact: &ModelMoments, mc: &ModelMoments) -> String {
    let mut out = String::from("order,exact,monte_carlo,standard_error,deviation_in_se\n");
    let se = mc.standard_errors.as_deref().unwrap_or(&[]);
    let mut row = |order: usize, e: f64, m: f64, s: f64| {
        let z = if s > 0.0 {
            (m - e) / s
        } else if m == e {
            0.0
        } else {
            f64::INFINITY
        };
        let _ = writeln!(
            out,
            "{order},{},{},{},{}",
            fmt_f64(e),
            fmt_f64(m),
            fmt_f64(s),
            fmt_f64(z)
        );
    };
    row(
        1,
        exact.mean,
        mc.mean,
        mc.mean_standard_error.unwrap_or(0.0),
    );
    for u in 2..=exact.max_order {
        row(
            u,
            exact.central_moment(u),
            mc.central_moment(u),
            se.get(u - 2).copied().unwrap_or(0.0),
        );
    }
    out
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let (primes, f) = prepare(cfg)?;
    let mode = cfg.modes[0];
    let (trials, seed) = match (cfg.trials, cfg.seed) {
        (Some(t), Some(s)) => (t, s),
        _ => return Err(Error::InvalidParams("trials and seed are required".into())),
    };
    let model = build_model(&f, &primes, cfg.spec, mode)?;
    let exact = exact_moments(&model, cfg.orders)?;
    let sim = simulate(&model, trials, seed, cfg.orders)?;
    let report = SimulationReport {
        function: f.name(),
        spec: cfg.spec,
        mode,
        model_entries: model.len(),
        exact: &exact,
        monte_carlo: &sim.moments,
    };
    write(&cfg.out, "simulation.json", &to_json(&report))?;
    write(
        &cfg.out,
        "deviation.csv",
        &deviation_csv(&exact, &sim.moments),
    )?;
    Ok(vec![
        "config.json".into(),
        "simulation.json".into(),
        "deviation.csv".into(),
    ])
}

#[derive(Serialize)]
struct KsNormalReport<'a> {
    function: &'a str,
    spec: ProgressionSpec,
    reference: &'static str,
    sample_size: usize,
    binned: bool,
    #[serde(flatten)]
    ks: KsDistance,
}

#[derive(Serialize)]
struct KfunReport<'a> {
    function: &'a str,
    spec: ProgressionSpec,
    mode: PrimeSumMode,
    reference: &'static str,
    params: KolmogorovParams,
    /// `sum f(p)^2 / p` over the selected primes.
    #[serde(rename = "D", serialize_with = "sig17")]
    d: f64,
    grid_points: usize,
    #[serde(serialize_with = "sig17")]
    sup_distance: f64,
    #[serde(serialize_with = "sig17")]
    argsup_u: f64,
}

fn plot_histogram(dist: &EmpiricalDistribution) -> Result<Histogram> {
    match dist {
        EmpiricalDistribution::Sample(xs) => {
            let mut h = Histogram::new(HISTOGRAM_RANGE.0, HISTOGRAM_RANGE.1, PLOT_BINS);
            xs.iter().for_each(|&x| h.push(x));
            Ok(h)
        }
        EmpiricalDistribution::Histogram(h) => h.rebin(HISTOGRAM_BINS / PLOT_BINS),
    }
}

pub fn cmd_limits(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let (primes, f) = prepare(cfg)?;
    let mode = cfg.modes[0];
    let mut written = vec!["config.json".to_string()];
    let kf = cfg.params.map(KolmogorovFunction::new).transpose()?;

    let profile = condition_profile(&f, cfg.spec, mode, &primes, None)?;
    write(&cfg.out, "profile.csv", &profile.to_csv(kf.as_ref()))?;
    written.push("profile.csv".into());

    for reference in &cfg.vs {
        match reference {
            Reference::Normal => {
                let dist = normalized_cdf(&f, cfg.spec)?;
                let report = KsNormalReport {
                    function: f.name(),
                    spec: cfg.spec,
                    reference: "normal",
                    sample_size: dist.len(),
                    binned: matches!(dist, EmpiricalDistribution::Histogram(_)),
                    ks: ks_distance(&dist, normal_cdf),
                };
                write(&cfg.out, "ks_normal.json", &to_json(&report))?;
                write(&cfg.out, "histogram.csv", &plot_histogram(&dist)?.to_csv())?;
                written.extend(["ks_normal.json".into(), "histogram.csv".into()]);
            }
            Reference::Kfun => {
                let kf = kf.ok_or(Error::InvalidParams("missing Kolmogorov params".into()))?;
                let (mut sup, mut arg) = (0.0, profile.grid.first().copied().unwrap_or(0.0));
                for (&u, &v) in profile.grid.iter().zip(&profile.values) {
                    let diff = (v - kf.eval(u)).abs();
                    if diff > sup {
                        sup = diff;
                        arg = u;
                    }
                }
                let report = KfunReport {
                    function: f.name(),
                    spec: cfg.spec,
                    mode,
                    reference: "kolmogorov",
                    params: kf.params(),
                    d: profile.d,
                    grid_points: profile.grid.len(),
                    sup_distance: sup,
                    argsup_u: arg,
                };
                write(&cfg.out, "ks_kfun.json", &to_json(&report))?;
                written.push("ks_kfun.json".into());
            }
        }
    }
    Ok(written)
}
