//! Prime classes Q0/Q1/Q2 and the strongly additive function whose limit law
//! is the Kolmogorov function with given constants.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::AdditiveFunction;
use crate::error::{Error, Result};
use crate::primes::{euler_phi, PrimeSet};

/// Primes below this bound stay in Q0 with `f(p) = 0`; the class targets
/// and the `ln ln p` factors are only used from here on.
pub const LNLN_THRESHOLD: u64 = 16;

/// Constants `(A, C, mu, nu)` of the Kolmogorov function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KolmogorovParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub mu: f64,
    pub nu: f64,
}

impl KolmogorovParams {
    pub fn new(a: f64, c: f64, mu: f64, nu: f64) -> Result<Self> {
        let p = Self { a, c, mu, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, c, mu, nu } = *self;
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if ![a, c, mu, nu].iter().all(|x| x.is_finite()) {
            return bad("all constants must be finite");
        }
        if a > 0.0 || c < 0.0 {
            return bad("need A <= 0 <= C");
        }
        if mu < 0.0 || nu < 0.0 || mu + nu > 1.0 {
            return bad("need mu, nu >= 0 and mu + nu <= 1");
        }
        if mu > 0.0 && a >= 0.0 {
            return bad("mu > 0 requires A < 0");
        }
        if nu > 0.0 && c <= 0.0 {
            return bad("nu > 0 requires C > 0");
        }
        Ok(())
    }

    /// `1 + mu sgn(A) - nu sgn(C)`, the Q0 radicand coefficient.
    pub fn q0_coefficient(&self) -> f64 {
        1.0 + self.mu * sgn(self.a) - self.nu * sgn(self.c)
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl fmt::Display for KolmogorovParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A={},C={},mu={},nu={}", self.a, self.c, self.mu, self.nu)
    }
}

/// Parses `A=-1,C=1,mu=0.3,nu=0.3` (any order, all four keys required).
impl FromStr for KolmogorovParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut vals = [None; 4];
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("expected key=value, got `{part}`")))?;
            let slot = match key.trim() {
                "A" | "a" => 0,
                "C" | "c" => 1,
                "mu" => 2,
                "nu" => 3,
                other => return Err(Error::InvalidParams(format!("unknown key `{other}`"))),
            };
            let v: f64 = val
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("`{val}` is not a number")))?;
            vals[slot] = Some(v);
        }
        match vals {
            [Some(a), Some(c), Some(mu), Some(nu)] => Self::new(a, c, mu, nu),
            _ => Err(Error::InvalidParams("need all of A, C, mu, nu".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PrimeClass {
    Q0,
    Q1,
    Q2,
}

/// A label in {Q0, Q1, Q2} for each prime of a [`PrimeSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeClassAssignment {
    primes: Vec<u32>,
    labels: Vec<PrimeClass>,
    params: KolmogorovParams,
    k: u64,
}

impl PrimeClassAssignment {
    pub fn params(&self) -> KolmogorovParams {
        self.params
    }

    pub fn modulus(&self) -> u64 {
        self.k
    }

    pub fn labels(&self) -> impl Iterator<Item = (u64, PrimeClass)> + '_ {
        self.primes
            .iter()
            .zip(&self.labels)
            .map(|(&p, &c)| (p as u64, c))
    }

    pub fn class_of(&self, p: u64) -> Option<PrimeClass> {
        if p > u32::MAX as u64 {
            return None;
        }
        self.primes
            .binary_search(&(p as u32))
            .ok()
            .map(|i| self.labels[i])
    }

    /// Number of primes `<= x` labelled `class`.
    pub fn count_up_to(&self, class: PrimeClass, x: u64) -> usize {
        let end = self.primes.partition_point(|&p| p as u64 <= x);
        self.labels[..end].iter().filter(|&&c| c == class).count()
    }

    /// Target count of Q1 (resp. Q2) primes up to `x`:
    /// `2 mu x / (phi(k) A^2 ln x ln ln x)` (resp. with `nu`, `C`).
    pub fn target(&self, class: PrimeClass, x: f64) -> f64 {
        target_count(&self.params, self.k, class, x)
    }
}

fn target_count(params: &KolmogorovParams, k: u64, class: PrimeClass, x: f64) -> f64 {
    let (weight, scale) = match class {
        PrimeClass::Q0 => return 0.0,
        PrimeClass::Q1 => (params.mu, params.a),
        PrimeClass::Q2 => (params.nu, params.c),
    };
    if weight * scale == 0.0 || x < LNLN_THRESHOLD as f64 {
        return 0.0;
    }
    let lnx = x.ln();
    2.0 * weight * x / (euler_phi(k) as f64 * scale * scale * lnx * lnx.ln())
}

/// Greedy density matching: primes are scanned in ascending order and each
/// `p >= 16` joins Q1 while the running Q1 count is below the Q1 target at
/// `p`, otherwise Q2 under the same rule, otherwise Q0.
pub fn build_prime_classes(
    primes: &PrimeSet,
    params: KolmogorovParams,
    k: u64,
) -> Result<PrimeClassAssignment> {
    params.validate()?;
    if k == 0 {
        return Err(Error::InvalidParams("modulus must be positive".into()));
    }
    let mut n1 = 0usize;
    let mut n2 = 0usize;
    let labels = primes
        .iter()
        .map(|p| {
            if p < LNLN_THRESHOLD {
                return PrimeClass::Q0;
            }
            let x = p as f64;
            if (n1 as f64) < target_count(&params, k, PrimeClass::Q1, x) {
                n1 += 1;
                PrimeClass::Q1
            } else if (n2 as f64) < target_count(&params, k, PrimeClass::Q2, x) {
                n2 += 1;
                PrimeClass::Q2
            } else {
                PrimeClass::Q0
            }
        })
        .collect();
    Ok(PrimeClassAssignment {
        primes: primes.as_slice().to_vec(),
        labels,
        params,
        k,
    })
}

#[derive(Debug, Clone)]
pub(crate) struct ClassRule {
    assignment: PrimeClassAssignment,
    q0_scale: f64,
}

impl ClassRule {
    /// Primes outside the assignment are valued as Q0.
    pub(crate) fn value(&self, p: u64) -> f64 {
        if p < LNLN_THRESHOLD {
            return 0.0;
        }
        let lnln = (p as f64).ln().ln();
        let params = &self.assignment.params;
        match self.assignment.class_of(p).unwrap_or(PrimeClass::Q0) {
            PrimeClass::Q0 => (self.q0_scale * lnln).sqrt(),
            PrimeClass::Q1 => params.a * lnln,
            PrimeClass::Q2 => params.c * lnln,
        }
    }
}

/// Strongly additive `f` with `f(p) = sqrt(2(1 + mu sgn A - nu sgn C) ln ln p)`
/// on Q0, `A ln ln p` on Q1 and `C ln ln p` on Q2; zero below 16.
pub fn kolmogorov_example_function(
    params: KolmogorovParams,
    assignment: &PrimeClassAssignment,
) -> Result<AdditiveFunction> {
    params.validate()?;
    let coef = params.q0_coefficient();
    let has_q0 = assignment
        .labels()
        .any(|(p, c)| p >= LNLN_THRESHOLD && c == PrimeClass::Q0);
    if coef < 0.0 && has_q0 {
        return Err(Error::InvalidParams(format!(
            "negative Q0 radicand coefficient {coef}"
        )));
    }
    let mut assignment = assignment.clone();
    assignment.params = params;
    Ok(AdditiveFunction::from_class_rule(
        "kolmogorov_example",
        ClassRule {
            assignment,
            q0_scale: 2.0 * coef.max(0.0),
        },
    ))
}
