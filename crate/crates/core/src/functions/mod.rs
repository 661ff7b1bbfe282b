//! Additive and strongly additive arithmetic functions.
//!
//! An additive function is determined by its values on prime powers; a
//! strongly additive one additionally satisfies `f(p^a) = f(p)`, so that
//! `f(m) = sum over p | m of f(p)`.

mod classes;
pub mod expr;

use std::fmt;
use std::sync::Arc;

pub use classes::{
    build_prime_classes, kolmogorov_example_function, KolmogorovParams, PrimeClass,
    PrimeClassAssignment,
};
pub use expr::Expr;

use crate::error::{Error, Result};
use crate::primes::SpfTable;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 7] = [
    "omega",
    "big_omega",
    "omega_diff",
    "log_phi_ratio",
    "big_omega_minus_log_phi_ratio",
    "log_m",
    "log_p_sum",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    Omega,
    BigOmega,
    OmegaDiff,
    LogPhiRatio,
    BigOmegaMinusLogPhiRatio,
    LogM,
    LogPSum,
}

impl Builtin {
    fn eval(self, p: f64, a: f64) -> f64 {
        match self {
            Builtin::Omega => 1.0,
            Builtin::BigOmega => a,
            Builtin::OmegaDiff => a - 1.0,
            Builtin::LogPhiRatio => (-1.0 / p).ln_1p(),
            Builtin::BigOmegaMinusLogPhiRatio => a - (-1.0 / p).ln_1p(),
            Builtin::LogM => a * p.ln(),
            Builtin::LogPSum => p.ln(),
        }
    }
}

#[derive(Clone)]
enum Rule {
    Zero,
    Builtin(Builtin),
    Expr(Arc<Expr>),
    /// The inner rule evaluated at exponent 1.
    AtPrime(Arc<Rule>),
    Difference(Arc<Rule>, Arc<Rule>),
    Classes(Arc<classes::ClassRule>),
}

impl Rule {
    fn eval(&self, p: u64, a: u32) -> f64 {
        match self {
            Rule::Zero => 0.0,
            Rule::Builtin(b) => b.eval(p as f64, a as f64),
            Rule::Expr(e) => e.eval(p as f64, a as f64),
            Rule::AtPrime(r) => r.eval(p, 1),
            Rule::Difference(f, g) => f.eval(p, a) - g.eval(p, a),
            Rule::Classes(c) => c.value(p),
        }
    }
}

/// A real-valued additive arithmetic function, given by its rule on prime
/// powers `(p, a) -> f(p^a)`.
#[derive(Clone)]
pub struct AdditiveFunction {
    name: String,
    rule: Rule,
    strongly_additive: bool,
}

impl fmt::Debug for AdditiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdditiveFunction")
            .field("name", &self.name)
            .field("strongly_additive", &self.strongly_additive)
            .finish_non_exhaustive()
    }
}

impl AdditiveFunction {
    /// A user-defined function from a rule expression over `p` and `a`.
    pub fn from_expr(name: impl Into<String>, expr: Expr, strongly_additive: bool) -> Self {
        Self {
            name: name.into(),
            rule: Rule::Expr(Arc::new(expr)),
            strongly_additive,
        }
    }

    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            rule: Rule::Zero,
            strongly_additive: true,
        }
    }

    pub(crate) fn from_class_rule(name: &str, rule: classes::ClassRule) -> Self {
        Self {
            name: name.into(),
            rule: Rule::Classes(Arc::new(rule)),
            strongly_additive: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_strongly_additive(&self) -> bool {
        self.strongly_additive
    }

    /// `f(p^a)`. Strongly additive functions ignore the exponent.
    pub fn prime_power_rule(&self, p: u64, a: u32) -> f64 {
        let a = if self.strongly_additive { 1 } else { a };
        self.rule.eval(p, a)
    }

    /// `f(p)`.
    pub fn at_prime(&self, p: u64) -> f64 {
        self.rule.eval(p, 1)
    }

    /// The rule with the strong-additivity flag folded in.
    fn effective_rule(&self) -> Rule {
        if self.strongly_additive {
            Rule::AtPrime(Arc::new(self.rule.clone()))
        } else {
            self.rule.clone()
        }
    }

    /// Sum of `f(p^a)` over a factorization given as `(p, a)` pairs.
    pub fn eval_factors<I: IntoIterator<Item = (u64, u32)>>(&self, factors: I) -> f64 {
        factors
            .into_iter()
            .map(|(p, a)| self.prime_power_rule(p, a))
            .sum()
    }
}

/// Looks up one of the built-in functions by name.
pub fn builtin(name: &str) -> Result<AdditiveFunction> {
    let (b, strongly) = match name {
        "omega" => (Builtin::Omega, true),
        "big_omega" => (Builtin::BigOmega, false),
        "omega_diff" => (Builtin::OmegaDiff, false),
        "log_phi_ratio" => (Builtin::LogPhiRatio, true),
        "big_omega_minus_log_phi_ratio" => (Builtin::BigOmegaMinusLogPhiRatio, false),
        "log_m" => (Builtin::LogM, false),
        "log_p_sum" => (Builtin::LogPSum, true),
        _ => return Err(Error::UnknownFunction(name.to_string())),
    };
    Ok(AdditiveFunction {
        name: name.to_string(),
        rule: Rule::Builtin(b),
        strongly_additive: strongly,
    })
}

/// `f*(m) = sum over p | m of f(p)`.
pub fn strongly_additive_companion(f: &AdditiveFunction) -> AdditiveFunction {
    if f.strongly_additive {
        return f.clone();
    }
    AdditiveFunction {
        name: format!("{}*", f.name),
        rule: Rule::AtPrime(Arc::new(f.rule.clone())),
        strongly_additive: true,
    }
}

/// Pointwise difference `f - g` on prime powers.
pub fn difference(f: &AdditiveFunction, g: &AdditiveFunction) -> AdditiveFunction {
    AdditiveFunction {
        name: format!("{}-{}", f.name, g.name),
        rule: Rule::Difference(Arc::new(f.effective_rule()), Arc::new(g.effective_rule())),
        strongly_additive: f.strongly_additive && g.strongly_additive,
    }
}

/// `f(m)` using the factorization stored in `table`.
pub fn eval(f: &AdditiveFunction, m: u64, table: &SpfTable) -> Result<f64> {
    Ok(f.eval_factors(table.factors(m)?))
}
