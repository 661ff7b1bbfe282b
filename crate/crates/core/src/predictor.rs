//! Asymptotic predictions from prime sums `S_u = sum f(p)^u / p`.
//!
//! All sums run over primes in descending order with compensated summation,
//! so the small tail terms are accumulated before the large head terms.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::empirical::{MomentReport, ProgressionSpec};
use crate::error::{Error, Result};
use crate::functions::AdditiveFunction;
use crate::primes::{euler_phi, gcd, PrimeSet};
use crate::report::{fmt_f64, sig17, sig17_seq};
use crate::sum::compensated_sum;

/// Which primes a prediction sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeSumMode {
    /// Primes `p <= n` with `p = l (mod k)`.
    PaperProgression,
    /// All primes `p <= n` not dividing `k`; each divides a `1/p` share of
    /// the progression's members.
    DivisorDensity,
}

impl PrimeSumMode {
    pub const ALL: [PrimeSumMode; 2] =
        [PrimeSumMode::PaperProgression, PrimeSumMode::DivisorDensity];

    pub fn as_str(self) -> &'static str {
        match self {
            PrimeSumMode::PaperProgression => "paper_progression",
            PrimeSumMode::DivisorDensity => "divisor_density",
        }
    }

    /// Whether prime `p` takes part in sums for `spec`.
    pub fn selects(self, spec: &ProgressionSpec, p: u64) -> bool {
        if p > spec.n {
            return false;
        }
        match self {
            PrimeSumMode::PaperProgression => p % spec.k == spec.l % spec.k,
            PrimeSumMode::DivisorDensity => gcd(p, spec.k) == 1,
        }
    }

    /// Mertens-type scale of `sum 1/p` over the selected primes:
    /// `1/phi(k)` of `ln ln n` for the progression, all of it otherwise.
    pub fn density(self, k: u64) -> f64 {
        match self {
            PrimeSumMode::PaperProgression => 1.0 / euler_phi(k) as f64,
            PrimeSumMode::DivisorDensity => 1.0,
        }
    }
}

impl fmt::Display for PrimeSumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrimeSumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_progression" => Ok(PrimeSumMode::PaperProgression),
            "divisor_density" => Ok(PrimeSumMode::DivisorDensity),
            _ => Err(Error::InvalidParams(format!(
                "unknown prime-sum mode `{s}`"
            ))),
        }
    }
}

/// Selected primes `<= spec.n`, descending.
pub fn selected_primes_desc(
    primes: &PrimeSet,
    spec: &ProgressionSpec,
    mode: PrimeSumMode,
) -> Result<Vec<u64>> {
    if primes.bound() < spec.n {
        return Err(Error::InvalidParams(format!(
            "prime set covers {} but n = {}",
            primes.bound(),
            spec.n
        )));
    }
    Ok(primes
        .iter()
        .rev()
        .filter(|&p| mode.selects(spec, p))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedMoments {
    pub spec: ProgressionSpec,
    pub mode: PrimeSumMode,
    pub orders: Vec<usize>,
    /// `S_u` for each entry of `orders`.
    #[serde(serialize_with = "sig17_seq")]
    pub sums: Vec<f64>,
    /// `B(n) = sqrt(S_2)`.
    #[serde(rename = "B", serialize_with = "sig17")]
    pub b: f64,
    /// `density(mode) * (ln ln n)^u`, the Mertens-type reference scale.
    #[serde(serialize_with = "sig17_seq")]
    pub leading_terms: Vec<f64>,
    /// `max |f(p)| / B(n)` over the selected primes.
    #[serde(serialize_with = "sig17")]
    pub max_ratio_to_b: f64,
}

impl PredictedMoments {
    pub fn sum(&self, u: usize) -> f64 {
        self.sums[u - 1]
    }
}

/// Exact finite sums `S_u`, `u = 1..=max_order`, over the selected primes.
/// Only `f(p)` is used.
pub fn moment_sums(
    f: &AdditiveFunction,
    spec: ProgressionSpec,
    mode: PrimeSumMode,
    max_order: usize,
    primes: &PrimeSet,
) -> Result<PredictedMoments> {
    if max_order < 1 {
        return Err(Error::InvalidParams("order must be at least 1".into()));
    }
    let selected = selected_primes_desc(primes, &spec, mode)?;
    let values: Vec<(f64, f64)> = selected
        .iter()
        .map(|&p| (f.at_prime(p), p as f64))
        .collect();
    let sum_pow = |u: i32| compensated_sum(values.iter().map(|&(v, p)| v.powi(u) / p));
    let sums: Vec<f64> = (1..=max_order as i32).map(sum_pow).collect();
    let s2 = if max_order >= 2 { sums[1] } else { sum_pow(2) };
    let b = s2.sqrt();
    let max_abs = values.iter().map(|&(v, _)| v.abs()).fold(0.0, f64::max);
    let lnln = (spec.n as f64).ln().ln();
    let density = mode.density(spec.k);
    Ok(PredictedMoments {
        spec,
        mode,
        orders: (1..=max_order).collect(),
        leading_terms: (1..=max_order as i32)
            .map(|u| density * lnln.powi(u))
            .collect(),
        sums,
        b,
        max_ratio_to_b: if b > 0.0 { max_abs / b } else { 0.0 },
    })
}

/// Fraction of the selected primes with `|f(p)| > eps * B(n)`, a finite
/// stand-in for the vanishing-exceedance condition on the `X_p`.
pub fn exceedance_fraction(
    f: &AdditiveFunction,
    spec: ProgressionSpec,
    mode: PrimeSumMode,
    primes: &PrimeSet,
    eps: f64,
) -> Result<f64> {
    let selected = selected_primes_desc(primes, &spec, mode)?;
    if selected.is_empty() {
        return Ok(0.0);
    }
    let b = compensated_sum(selected.iter().map(|&p| f.at_prime(p).powi(2) / p as f64)).sqrt();
    let over = selected
        .iter()
        .filter(|&&p| f.at_prime(p).abs() > eps * b)
        .count();
    Ok(over as f64 / selected.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MertensReport {
    pub spec: ProgressionSpec,
    /// `sum 1/p` over primes `p <= n`, `p = l (mod k)`.
    #[serde(serialize_with = "sig17")]
    pub exact: f64,
    /// `ln ln n / phi(k)`.
    #[serde(serialize_with = "sig17")]
    pub leading: f64,
    #[serde(serialize_with = "sig17")]
    pub difference: f64,
}

pub fn mertens_progression(spec: ProgressionSpec, primes: &PrimeSet) -> Result<MertensReport> {
    let selected = selected_primes_desc(primes, &spec, PrimeSumMode::PaperProgression)?;
    let exact = compensated_sum(selected.iter().map(|&p| 1.0 / p as f64));
    let leading = (spec.n as f64).ln().ln() / euler_phi(spec.k) as f64;
    Ok(MertensReport {
        spec,
        exact,
        leading,
        difference: exact - leading,
    })
}

/// Thresholds behind the bounded-moments verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundednessThresholds {
    /// Largest admissible `sup |f(p)|`.
    #[serde(serialize_with = "sig17")]
    pub sup_bound: f64,
    /// Largest admissible change of `sum f(p)^2 / p` between `n / 10` and `n`.
    #[serde(serialize_with = "sig17")]
    pub tail_tolerance: f64,
}

impl Default for BoundednessThresholds {
    fn default() -> Self {
        Self {
            sup_bound: 10.0,
            tail_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedMomentReport {
    pub spec: ProgressionSpec,
    #[serde(serialize_with = "sig17")]
    pub sup_abs: f64,
    /// Smallest prime attaining the supremum (0 if no prime is selected).
    pub argmax_prime: u64,
    #[serde(serialize_with = "sig17")]
    pub partial_sum_at_tenth: f64,
    #[serde(serialize_with = "sig17")]
    pub partial_sum: f64,
    #[serde(serialize_with = "sig17")]
    pub tail_difference: f64,
    pub thresholds: BoundednessThresholds,
    /// True when the data is consistent with bounded central moments.
    pub bounded_evidence: bool,
}

/// Evidence for a bounded `|f(p)|` and a convergent `sum f(p)^2 / p`; a
/// finite computation can only support, not prove, either.
pub fn bounded_moment_check(
    f: &AdditiveFunction,
    spec: ProgressionSpec,
    primes: &PrimeSet,
    thresholds: BoundednessThresholds,
) -> Result<BoundedMomentReport> {
    let selected = selected_primes_desc(primes, &spec, PrimeSumMode::PaperProgression)?;
    let mut sup_abs = 0.0;
    let mut argmax_prime = 0;
    // ascending scan so ties resolve to the smallest prime
    for &p in selected.iter().rev() {
        let v = f.at_prime(p).abs();
        if v > sup_abs {
            sup_abs = v;
            argmax_prime = p;
        }
    }
    let tenth = spec.n / 10;
    let term = |p: u64| f.at_prime(p).powi(2) / p as f64;
    let partial_sum = compensated_sum(selected.iter().map(|&p| term(p)));
    let partial_sum_at_tenth =
        compensated_sum(selected.iter().filter(|&&p| p <= tenth).map(|&p| term(p)));
    let tail_difference =
        compensated_sum(selected.iter().filter(|&&p| p > tenth).map(|&p| term(p)));
    let bounded_evidence = sup_abs.is_finite()
        && sup_abs <= thresholds.sup_bound
        && tail_difference.abs() < thresholds.tail_tolerance;
    Ok(BoundedMomentReport {
        spec,
        sup_abs,
        argmax_prime,
        partial_sum_at_tenth,
        partial_sum,
        tail_difference,
        thresholds,
        bounded_evidence,
    })
}

/// `E[(X_p - f(p)/p)^u]` for `X_p = fp` with probability `1/p`, else 0:
/// `(1 - 1/p)(-fp/p)^u + (1/p)(fp - fp/p)^u`.
pub fn xp_central_moment(fp: f64, p: u64, u: u32) -> f64 {
    match u {
        0 => return 1.0,
        1 => return 0.0,
        _ => {}
    }
    let q = 1.0 / p as f64;
    let mean = fp * q;
    (1.0 - q) * (-mean).powi(u as i32) + q * (fp - mean).powi(u as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeComparison {
    pub mode: PrimeSumMode,
    /// Order 1: empirical mean over `S_1`; order `u >= 2`: empirical central
    /// moment over `S_u`.
    #[serde(serialize_with = "sig17_seq")]
    pub ratios: Vec<f64>,
}

/// Empirical moments side by side with one or more predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub empirical: MomentReport,
    pub predictions: Vec<PredictedMoments>,
    pub comparisons: Vec<ModeComparison>,
}

pub fn compare(empirical: &MomentReport, predictions: &[PredictedMoments]) -> ComparisonReport {
    let comparisons = predictions
        .iter()
        .map(|pred| {
            let ratios = pred
                .orders
                .iter()
                .zip(&pred.sums)
                .filter(|(&u, _)| u <= empirical.max_order)
                .map(|(&u, &s)| {
                    let e = if u == 1 {
                        empirical.mean
                    } else {
                        empirical.central_moment(u)
                    };
                    e / s
                })
                .collect();
            ModeComparison {
                mode: pred.mode,
                ratios,
            }
        })
        .collect();
    ComparisonReport {
        empirical: empirical.clone(),
        predictions: predictions.to_vec(),
        comparisons,
    }
}

impl ComparisonReport {
    /// `order,empirical,<mode>_sum,<mode>_ratio,...`
    pub fn ratio_csv(&self) -> String {
        let mut out = String::from("order,empirical");
        for p in &self.predictions {
            let _ = write!(out, ",{m}_sum,{m}_ratio", m = p.mode);
        }
        out.push('\n');
        for u in 1..=self.empirical.max_order {
            let e = if u == 1 {
                self.empirical.mean
            } else {
                self.empirical.central_moment(u)
            };
            let _ = write!(out, "{u},{}", fmt_f64(e));
            for (p, c) in self.predictions.iter().zip(&self.comparisons) {
                match (p.sums.get(u - 1), c.ratios.get(u - 1)) {
                    (Some(s), Some(r)) => {
                        let _ = write!(out, ",{},{}", fmt_f64(*s), fmt_f64(*r));
                    }
                    _ => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }
}
