//! The independent two-valued model `S_n = sum X_p`, where `X_p = f(p)` with
//! probability `1/p` and `0` otherwise.
//!
//! Exact moments go through cumulants, which add across independent terms.
//! Monte Carlo draws one Bernoulli variable per entry per trial.
//!
//! Random streams: trial `t` of a run with seed `s` uses
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `t`, so every trial is
//! reproducible on its own and the sample does not depend on how trials are
//! spread across threads.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::empirical::{EmpiricalDistribution, ProgressionSpec};
use crate::error::{Error, Result};
use crate::functions::AdditiveFunction;
use crate::predictor::{selected_primes_desc, xp_central_moment, PrimeSumMode};
use crate::primes::PrimeSet;
use crate::report::{sig17, sig17_opt, sig17_opt_seq, sig17_seq};
use crate::sum::{ExactSum, NeumaierSum};

/// Highest order handled by the moment/cumulant conversion.
pub const MAX_MODEL_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelEntry {
    pub p: u64,
    #[serde(serialize_with = "sig17")]
    pub value: f64,
    #[serde(serialize_with = "sig17")]
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoValuedModel {
    entries: Vec<ModelEntry>,
    spec: ProgressionSpec,
    mode: PrimeSumMode,
}

impl TwoValuedModel {
    /// Entries must have distinct primes in ascending order; `prob` is `1/p`.
    pub fn from_entries(
        entries: Vec<(u64, f64)>,
        spec: ProgressionSpec,
        mode: PrimeSumMode,
    ) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParams(
                "model entries must be strictly ascending in p".into(),
            ));
        }
        if entries.iter().any(|&(p, _)| p < 2) {
            return Err(Error::InvalidParams("model primes must be >= 2".into()));
        }
        Ok(Self {
            entries: entries
                .into_iter()
                .map(|(p, value)| ModelEntry {
                    p,
                    value,
                    prob: 1.0 / p as f64,
                })
                .collect(),
            spec,
            mode,
        })
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn spec(&self) -> ProgressionSpec {
        self.spec
    }

    pub fn mode(&self) -> PrimeSumMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `sum f(p)^2 / p`, the leading-order variance.
    pub fn asymptotic_variance(&self) -> f64 {
        let mut s = ExactSum::new();
        for e in &self.entries {
            s.add(e.value * e.value * e.prob);
        }
        s.value()
    }
}

/// One entry per selected prime with `f(p) != 0`. Only `f(p)` is used, so an
/// additive `f` is modelled through its strongly additive companion.
pub fn build_model(
    f: &AdditiveFunction,
    primes: &PrimeSet,
    spec: ProgressionSpec,
    mode: PrimeSumMode,
) -> Result<TwoValuedModel> {
    let mut selected = selected_primes_desc(primes, &spec, mode)?;
    selected.reverse();
    let entries = selected
        .into_iter()
        .map(|p| (p, f.at_prime(p)))
        .filter(|&(_, v)| v != 0.0)
        .collect();
    TwoValuedModel::from_entries(entries, spec, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelMoments {
    pub source: MomentSource,
    pub max_order: usize,
    #[serde(serialize_with = "sig17")]
    pub mean: f64,
    #[serde(serialize_with = "sig17")]
    pub variance: f64,
    /// `sum f(p)^2 / p` of the model (both sources report the model value).
    #[serde(serialize_with = "sig17")]
    pub asymptotic_variance: f64,
    /// Entry `i` is the central moment of order `i + 2`.
    #[serde(serialize_with = "sig17_seq")]
    pub central_moments: Vec<f64>,
    /// Entry `i` is the cumulant of order `i + 1`.
    #[serde(serialize_with = "sig17_seq")]
    pub cumulants: Vec<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    #[serde(serialize_with = "sig17_opt")]
    pub mean_standard_error: Option<f64>,
    /// Jackknife standard errors aligned with `central_moments`.
    #[serde(serialize_with = "sig17_opt_seq")]
    pub standard_errors: Option<Vec<f64>>,
}

impl ModelMoments {
    pub fn central_moment(&self, u: usize) -> f64 {
        match u {
            0 => 1.0,
            1 => 0.0,
            _ => self.central_moments[u - 2],
        }
    }

    pub fn cumulant(&self, u: usize) -> f64 {
        self.cumulants[u - 1]
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Cumulants `kappa_2..=kappa_U` from central moments `mu_0..=mu_U`
/// (`mu_0 = 1`, `mu_1 = 0`), by
/// `kappa_n = mu_n - sum_{m=2}^{n-2} C(n-1, m-1) kappa_m mu_{n-m}`.
/// Index `j` of the result holds `kappa_j`; entries 0 and 1 are zero.
pub fn cumulants_from_central(mu: &[f64]) -> Vec<f64> {
    let top = mu.len() - 1;
    let mut kappa = vec![0.0; top + 1];
    for n in 2..=top {
        let mut k = mu[n];
        for m in 2..=n.saturating_sub(2) {
            k -= binomial(n - 1, m - 1) * kappa[m] * mu[n - m];
        }
        kappa[n] = k;
    }
    kappa
}

/// Inverse of [`cumulants_from_central`]:
/// `mu_n = sum_{m=2}^{n} C(n-1, m-1) kappa_m mu_{n-m}`.
pub fn central_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let top = kappa.len() - 1;
    let mut mu = vec![0.0; top + 1];
    mu[0] = 1.0;
    for n in 2..=top {
        mu[n] = (2..=n)
            .map(|m| binomial(n - 1, m - 1) * kappa[m] * mu[n - m])
            .sum();
    }
    mu
}

fn check_model_order(max_order: usize) -> Result<()> {
    if max_order < 2 {
        return Err(Error::InvalidParams(
            "moment order must be at least 2".into(),
        ));
    }
    if max_order > MAX_MODEL_ORDER {
        return Err(Error::OrderLimit {
            order: max_order,
            limit: MAX_MODEL_ORDER,
        });
    }
    Ok(())
}

/// Per-order cumulant accumulators; merging two of them is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSums {
    sums: Vec<ExactSum>,
}

impl CumulantSums {
    pub fn of(model: &TwoValuedModel, max_order: usize) -> Self {
        let mut sums = vec![ExactSum::new(); max_order + 1];
        for e in &model.entries {
            sums[1].add(e.value * e.prob);
            let mu: Vec<f64> = (0..=max_order as u32)
                .map(|u| match u {
                    0 => 1.0,
                    1 => 0.0,
                    _ => xp_central_moment(e.value, e.p, u),
                })
                .collect();
            let kappa = cumulants_from_central(&mu);
            for (s, k) in sums.iter_mut().zip(&kappa).skip(2) {
                s.add(*k);
            }
        }
        Self { sums }
    }

    pub fn merge(&mut self, other: &CumulantSums) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            a.merge(b);
        }
    }

    /// `kappa_1..=kappa_U`.
    pub fn values(&self) -> Vec<f64> {
        self.sums[1..].iter().map(ExactSum::value).collect()
    }
}

/// Exact moments of `S_n` from summed per-entry cumulants.
pub fn exact_moments(model: &TwoValuedModel, max_order: usize) -> Result<ModelMoments> {
    check_model_order(max_order)?;
    let cumulants = CumulantSums::of(model, max_order).values();
    Ok(moments_from_cumulants(model, max_order, cumulants))
}

fn moments_from_cumulants(
    model: &TwoValuedModel,
    max_order: usize,
    cumulants: Vec<f64>,
) -> ModelMoments {
    let mut kappa = vec![0.0];
    kappa.extend_from_slice(&cumulants);
    kappa[1] = 0.0;
    let mu = central_from_cumulants(&kappa);
    ModelMoments {
        source: MomentSource::Exact,
        max_order,
        mean: cumulants[0],
        variance: mu[2],
        asymptotic_variance: model.asymptotic_variance(),
        central_moments: mu[2..].to_vec(),
        cumulants,
        trials: None,
        seed: None,
        mean_standard_error: None,
        standard_errors: None,
    }
}

/// Moments of `S_n` from cumulants computed elsewhere, e.g. by merging the
/// [`CumulantSums`] of several sub-models.
pub fn exact_moments_from_sums(
    model: &TwoValuedModel,
    max_order: usize,
    sums: &CumulantSums,
) -> Result<ModelMoments> {
    check_model_order(max_order)?;
    Ok(moments_from_cumulants(model, max_order, sums.values()))
}

/// Sample central moments with jackknife standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMoments {
    pub mean: f64,
    pub mean_se: f64,
    /// Entry `i` is the order `i + 2` central moment (divisor `N`).
    pub central: Vec<f64>,
    pub central_se: Vec<f64>,
}

/// Central moments from power sums of values centred at `shift`:
/// `m_u = (1/N) sum_j C(u, j) T_j (-d)^{u-j}` with `d = T_1 / N`.
fn central_from_power_sums(t: &[f64], count: f64, max_order: usize) -> Vec<f64> {
    let d = t[1] / count;
    (2..=max_order)
        .map(|u| {
            (0..=u)
                .map(|j| binomial(u, j) * t[j] * (-d).powi((u - j) as i32))
                .sum::<f64>()
                / count
        })
        .collect()
}

pub fn sample_moments(samples: &[f64], max_order: usize) -> SampleMoments {
    let n = samples.len();
    let count = n as f64;
    let shift = samples.iter().copied().collect::<NeumaierSum>().value() / count;
    let mut sums = vec![NeumaierSum::new(); max_order + 1];
    for &x in samples {
        let y = x - shift;
        let mut pw = 1.0;
        for s in sums.iter_mut() {
            s.add(pw);
            pw *= y;
        }
    }
    let t: Vec<f64> = sums.iter().map(NeumaierSum::value).collect();
    let central = central_from_power_sums(&t, count, max_order);
    let mean = shift + t[1] / count;
    if n < 2 {
        return SampleMoments {
            mean,
            mean_se: 0.0,
            central_se: vec![0.0; central.len()],
            central,
        };
    }

    // leave-one-out replicates
    let m = central.len();
    let mut loo_mean = Vec::with_capacity(n);
    let mut loo_central = vec![Vec::with_capacity(n); m];
    let mut t_i = t.clone();
    for &x in samples {
        let y = x - shift;
        let mut pw = 1.0;
        for (ti, tj) in t_i.iter_mut().zip(&t) {
            *ti = tj - pw;
            pw *= y;
        }
        loo_mean.push(t_i[1] / (count - 1.0));
        for (dst, v) in
            loo_central
                .iter_mut()
                .zip(central_from_power_sums(&t_i, count - 1.0, max_order))
        {
            dst.push(v);
        }
    }
    let jackknife_se = |reps: &[f64]| {
        let avg = reps.iter().copied().collect::<NeumaierSum>().value() / count;
        let ss = reps
            .iter()
            .map(|r| (r - avg).powi(2))
            .collect::<NeumaierSum>()
            .value();
        ((count - 1.0) / count * ss).sqrt()
    };
    SampleMoments {
        mean,
        mean_se: jackknife_se(&loo_mean),
        central_se: loo_central.iter().map(|r| jackknife_se(r)).collect(),
        central,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub moments: ModelMoments,
    /// Samples normalized by the exact mean and standard deviation; raw
    /// samples when the exact variance is zero.
    pub distribution: EmpiricalDistribution,
    /// Raw samples in trial order.
    pub samples: Vec<f64>,
}

fn draw(entries: &[(Bernoulli, f64)], seed: u64, trial: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut total = 0.0;
    for (dist, value) in entries {
        if dist.sample(&mut rng) {
            total += value;
        }
    }
    total
}

/// Monte Carlo sample of `S_n`.
pub fn simulate(
    model: &TwoValuedModel,
    trials: u64,
    seed: u64,
    max_order: usize,
) -> Result<Simulation> {
    check_model_order(max_order)?;
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let entries: Vec<(Bernoulli, f64)> = model
        .entries
        .iter()
        .map(|e| {
            Bernoulli::new(e.prob)
                .map(|d| (d, e.value))
                .map_err(|_| Error::InvalidParams(format!("bad probability for p = {}", e.p)))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| draw(&entries, seed, t))
        .collect();

    let stats = sample_moments(&samples, max_order);
    let mut mu = vec![1.0, 0.0];
    mu.extend_from_slice(&stats.central);
    let mut cumulants = cumulants_from_central(&mu);
    cumulants[1] = stats.mean;
    let exact = exact_moments(model, 2)?;
    let distribution = if exact.variance > 0.0 {
        let sd = exact.variance.sqrt();
        EmpiricalDistribution::from_unsorted(
            samples.iter().map(|x| (x - exact.mean) / sd).collect(),
        )
    } else {
        EmpiricalDistribution::from_unsorted(samples.clone())
    };
    Ok(Simulation {
        moments: ModelMoments {
            source: MomentSource::MonteCarlo,
            max_order,
            mean: stats.mean,
            variance: stats.central[0],
            asymptotic_variance: model.asymptotic_variance(),
            central_moments: stats.central,
            cumulants: cumulants[1..].to_vec(),
            trials: Some(trials),
            seed: Some(seed),
            mean_standard_error: Some(stats.mean_se),
            standard_errors: Some(stats.central_se),
        },
        distribution,
        samples,
    })
}
