//! Limit laws: the Kolmogorov function `K(u)`, the standard normal CDF, the
//! prime-sum condition profile and Kolmogorov–Smirnov distances.

use std::fmt::Write as _;

use serde::Serialize;

use crate::empirical::{EmpiricalDistribution, ProgressionSpec};
use crate::error::{Error, Result};
use crate::functions::{AdditiveFunction, KolmogorovParams};
use crate::predictor::{selected_primes_desc, PrimeSumMode};
use crate::primes::PrimeSet;
use crate::report::{fmt_f64, sig17};
use crate::sum::NeumaierSum;

/// Default number of grid points of a condition profile.
pub const DEFAULT_GRID_POINTS: usize = 512;

/// `K(u) = 0` for `u < A`, `mu (1 - u^2/A^2)` on `[A, 0)`,
/// `nu u^2/C^2 + 1 - nu` on `[0, C]` and `1` for `u > C`.
///
/// `K(0) = 1 - nu`, i.e. the function is taken right-continuous at the
/// atom at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovFunction {
    params: KolmogorovParams,
}

impl KolmogorovFunction {
    pub fn new(params: KolmogorovParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> KolmogorovParams {
        self.params
    }

    pub fn eval(&self, u: f64) -> f64 {
        let KolmogorovParams { a, c, mu, nu } = self.params;
        if u < 0.0 {
            if u < a {
                0.0
            } else {
                mu * (1.0 - u * u / (a * a))
            }
        } else if u > c || nu == 0.0 {
            1.0
        } else {
            nu * u * u / (c * c) + 1.0 - nu
        }
    }
}

pub fn k_eval(kf: &KolmogorovFunction, u: f64) -> f64 {
    kf.eval(u)
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `F_n(u) = (1/D) sum over selected p with f(p) < u sqrt(D) of f(p)^2/p`,
/// `D = sum f(p)^2 / p`, on a grid of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub d: f64,
}

impl ConditionProfile {
    /// Supremum of `|F_n(u) - K(u)|` over the grid.
    pub fn sup_distance(&self, kf: &KolmogorovFunction) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(&u, &v)| (v - kf.eval(u)).abs())
            .fold(0.0, f64::max)
    }

    /// Rows `u,F_n,K,abs_diff`; the last two columns are empty without `kf`.
    pub fn to_csv(&self, kf: Option<&KolmogorovFunction>) -> String {
        let mut out = String::from("u,F_n,K,abs_diff\n");
        for (&u, &v) in self.grid.iter().zip(&self.values) {
            match kf {
                Some(kf) => {
                    let k = kf.eval(u);
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        fmt_f64(u),
                        fmt_f64(v),
                        fmt_f64(k),
                        fmt_f64((v - k).abs())
                    );
                }
                None => {
                    let _ = writeln!(out, "{},{},,", fmt_f64(u), fmt_f64(v));
                }
            }
        }
        out
    }
}

/// Evenly spaced grid of `points` values over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Evaluates the condition profile. Without a grid, 512 points span
/// `[min f(p)/sqrt(D) - 0.1, max f(p)/sqrt(D) + 0.1]`.
pub fn condition_profile(
    f: &AdditiveFunction,
    spec: ProgressionSpec,
    mode: PrimeSumMode,
    primes: &PrimeSet,
    grid: Option<Vec<f64>>,
) -> Result<ConditionProfile> {
    let selected = selected_primes_desc(primes, &spec, mode)?;
    let mut pairs: Vec<(f64, f64)> = selected
        .iter()
        .map(|&p| {
            let v = f.at_prime(p);
            (v, v * v / p as f64)
        })
        .collect();
    let d = pairs
        .iter()
        .map(|&(_, w)| w)
        .collect::<NeumaierSum>()
        .value();
    if d.is_nan() || d <= 0.0 {
        return Err(Error::Degenerate("sum of f(p)^2/p is zero"));
    }
    let sd = d.sqrt();
    let grid = grid.unwrap_or_else(|| {
        let (lo, hi) = pairs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(v, _)| {
                (lo.min(v / sd), hi.max(v / sd))
            });
        linear_grid(lo - 0.1, hi + 0.1, DEFAULT_GRID_POINTS)
    });
    // sort by value (ties by weight) so the sweep is order-deterministic
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid[i].total_cmp(&grid[j]));
    let mut values = vec![0.0; grid.len()];
    let mut acc = NeumaierSum::new();
    let mut next = 0;
    for i in order {
        let cut = grid[i] * sd;
        while next < pairs.len() && pairs[next].0 < cut {
            acc.add(pairs[next].1);
            next += 1;
        }
        values[i] = acc.value() / d;
    }
    Ok(ConditionProfile { grid, values, d })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsDistance {
    /// Supremum over evaluation points.
    #[serde(serialize_with = "sig17")]
    pub statistic: f64,
    /// Extra allowance for histogram-backed data (zero for exact samples).
    #[serde(serialize_with = "sig17")]
    pub binning_slack: f64,
    /// `statistic + binning_slack`.
    #[serde(serialize_with = "sig17")]
    pub distance: f64,
}

/// Kolmogorov–Smirnov distance between `emp` and `ref_cdf`.
///
/// For an exact sample the statistic is
/// `max_i max(i/N - F(x_i), F(x_i) - (i-1)/N)` over the order statistics.
/// For a histogram it is evaluated at the bin edges and the slack is the
/// largest probability that either distribution puts inside a single bin.
pub fn ks_distance(emp: &EmpiricalDistribution, ref_cdf: impl Fn(f64) -> f64) -> KsDistance {
    match emp {
        EmpiricalDistribution::Sample(xs) => {
            let n = xs.len() as f64;
            let mut d: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let f = ref_cdf(x);
                d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
            }
            KsDistance {
                statistic: d,
                binning_slack: 0.0,
                distance: d,
            }
        }
        EmpiricalDistribution::Histogram(h) => {
            let n = h.total() as f64;
            let mut below = h.below as f64;
            let mut d: f64 = 0.0;
            let mut slack = (h.below as f64 / n)
                .max(ref_cdf(h.lo))
                .max(h.above as f64 / n)
                .max(1.0 - ref_cdf(h.hi));
            let mut f_prev = ref_cdf(h.lo);
            d = d.max((below / n - f_prev).abs());
            for (i, &c) in h.counts.iter().enumerate() {
                below += c as f64;
                let f_next = ref_cdf(h.edge(i + 1));
                d = d.max((below / n - f_next).abs());
                slack = slack.max(c as f64 / n).max(f_next - f_prev);
                f_prev = f_next;
            }
            KsDistance {
                statistic: d,
                binning_slack: slack,
                distance: d + slack,
            }
        }
    }
}
