//! Experiment configuration: a flat `key = value` file merged with command
//! line flags (flags win), then validated field by field.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use additive_core::empirical::{ProgressionSpec, MAX_EMPIRICAL_ORDER};
use additive_core::functions::expr::Expr;
use additive_core::functions::{KolmogorovParams, BUILTIN_NAMES};
use additive_core::model::MAX_MODEL_ORDER;
use additive_core::predictor::{BoundednessThresholds, PrimeSumMode};
use additive_core::primes::{gcd, MAX_BOUND};
use serde::Serialize;

pub const KOLMOGOROV_EXAMPLE: &str = "kolmogorov_example";

/// Keys accepted in a config file; flags use the same names with `-`.
pub const KEYS: [&str; 18] = [
    "fn",
    "rule",
    "kind",
    "name",
    "k",
    "l",
    "n",
    "orders",
    "mode",
    "trials",
    "seed",
    "params",
    "vs",
    "out",
    "threads",
    "sup_bound",
    "tail_tol",
    "eps",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Raw string values keyed by canonical (underscore) key.
pub type RawConfig = BTreeMap<String, String>;

fn canonical(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `key = value` lines; `#` and `;` start comments.
pub fn parse_config_text(text: &str) -> Result<RawConfig, ConfigError> {
    let mut out = RawConfig::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::new(
                "config",
                format!("line {}: expected key = value", lineno + 1),
            )
        })?;
        let key = canonical(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(
                &key,
                format!("line {}: unknown key", lineno + 1),
            ));
        }
        let value = value.trim().trim_matches('"').to_string();
        if out.insert(key.clone(), value).is_some() {
            return Err(ConfigError::new(
                &key,
                format!("line {}: duplicate key", lineno + 1),
            ));
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionSpec {
    Builtin {
        name: String,
    },
    Rule {
        name: String,
        rule: String,
        strongly_additive: bool,
    },
    KolmogorovExample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Normal,
    Kfun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Moments,
    Simulate,
    Limits,
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub function: FunctionSpec,
    pub spec: ProgressionSpec,
    pub orders: usize,
    pub modes: Vec<PrimeSumMode>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub params: Option<KolmogorovParams>,
    pub vs: Vec<Reference>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
    pub thresholds: BoundednessThresholds,
    pub eps: f64,
}

fn parse_num<T: std::str::FromStr>(raw: &RawConfig, key: &str) -> Result<Option<T>, ConfigError> {
    raw.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| ConfigError::new(key, format!("`{v}` is not a valid number")))
        })
        .transpose()
}

fn parse_positive_f64(raw: &RawConfig, key: &str, default: f64) -> Result<f64, ConfigError> {
    let v = parse_num::<f64>(raw, key)?.unwrap_or(default);
    if !(v.is_finite() && v > 0.0) {
        return Err(ConfigError::new(key, "must be a positive finite number"));
    }
    Ok(v)
}

impl ExperimentConfig {
    pub fn validate(raw: &RawConfig, command: Command) -> Result<Self, ConfigError> {
        let params = raw
            .get("params")
            .map(|s| {
                s.parse::<KolmogorovParams>()
                    .map_err(|e| ConfigError::new("params", e.to_string()))
            })
            .transpose()?;

        let function = match (raw.get("rule"), raw.get("fn")) {
            (Some(rule), f) => {
                rule.parse::<Expr>()
                    .map_err(|e| ConfigError::new("rule", e.to_string()))?;
                let strongly_additive = match raw.get("kind").map(String::as_str) {
                    None | Some("additive") => false,
                    Some("strongly_additive") => true,
                    Some(other) => {
                        return Err(ConfigError::new(
                            "kind",
                            format!("`{other}` is not one of additive, strongly_additive"),
                        ))
                    }
                };
                let name = raw
                    .get("name")
                    .or(f)
                    .cloned()
                    .unwrap_or_else(|| "custom".into());
                FunctionSpec::Rule {
                    name,
                    rule: rule.clone(),
                    strongly_additive,
                }
            }
            (None, Some(f)) if f == KOLMOGOROV_EXAMPLE => {
                if params.is_none() {
                    return Err(ConfigError::new("params", "required by kolmogorov_example"));
                }
                FunctionSpec::KolmogorovExample
            }
            (None, Some(f)) => {
                if !BUILTIN_NAMES.contains(&f.as_str()) {
                    return Err(ConfigError::new(
                        "fn",
                        format!(
                            "unknown function `{f}`; expected one of {}, {KOLMOGOROV_EXAMPLE} or a rule",
                            BUILTIN_NAMES.join(", ")
                        ),
                    ));
                }
                if raw.contains_key("kind") {
                    return Err(ConfigError::new("kind", "only applies together with rule"));
                }
                FunctionSpec::Builtin { name: f.clone() }
            }
            (None, None) => return Err(ConfigError::new("fn", "missing function (fn or rule)")),
        };

        let k: u64 = parse_num(raw, "k")?.unwrap_or(1);
        if k == 0 {
            return Err(ConfigError::new("k", "modulus must be at least 1"));
        }
        let l: u64 = match parse_num(raw, "l")? {
            Some(l) => l,
            None if k == 1 => 1,
            None => return Err(ConfigError::new("l", format!("required when k = {k}"))),
        };
        if l == 0 || l > k {
            return Err(ConfigError::new(
                "l",
                format!("must satisfy 1 <= l <= k = {k}"),
            ));
        }
        if gcd(k, l) != 1 {
            return Err(ConfigError::new("l", format!("gcd({k}, {l}) must be 1")));
        }
        let n: u64 = parse_num(raw, "n")?.ok_or_else(|| ConfigError::new("n", "missing"))?;
        if !(2..=MAX_BOUND).contains(&n) {
            return Err(ConfigError::new(
                "n",
                format!("must lie in [2, {MAX_BOUND}]"),
            ));
        }
        let spec =
            ProgressionSpec::new(k, l, n).map_err(|e| ConfigError::new("n", e.to_string()))?;

        let (max_orders, default_orders) = match command {
            Command::Moments => (MAX_EMPIRICAL_ORDER, 4),
            Command::Simulate => (MAX_MODEL_ORDER, 4),
            Command::Limits => (MAX_EMPIRICAL_ORDER, 2),
        };
        let orders: usize = parse_num(raw, "orders")?.unwrap_or(default_orders);
        if !(2..=max_orders).contains(&orders) {
            return Err(ConfigError::new(
                "orders",
                format!("must lie in [2, {max_orders}]"),
            ));
        }

        let modes = match raw.get("mode").map(String::as_str) {
            None => vec![PrimeSumMode::PaperProgression],
            Some("both") => PrimeSumMode::ALL.to_vec(),
            Some(m) => vec![m
                .parse::<PrimeSumMode>()
                .map_err(|e| ConfigError::new("mode", e.to_string()))?],
        };
        if modes.len() > 1 && command != Command::Moments {
            return Err(ConfigError::new(
                "mode",
                "`both` is only supported by moments",
            ));
        }

        let (trials, seed) = if command == Command::Simulate {
            let trials: u64 =
                parse_num(raw, "trials")?.ok_or_else(|| ConfigError::new("trials", "missing"))?;
            if trials < 2 {
                return Err(ConfigError::new("trials", "must be at least 2"));
            }
            let seed: u64 =
                parse_num(raw, "seed")?.ok_or_else(|| ConfigError::new("seed", "missing"))?;
            (Some(trials), Some(seed))
        } else {
            (None, None)
        };

        let vs = if command == Command::Limits {
            let vs = match raw.get("vs").map(String::as_str) {
                None | Some("normal") => vec![Reference::Normal],
                Some("kfun") => vec![Reference::Kfun],
                Some("both") => vec![Reference::Normal, Reference::Kfun],
                Some(other) => {
                    return Err(ConfigError::new(
                        "vs",
                        format!("`{other}` is not one of normal, kfun, both"),
                    ))
                }
            };
            if vs.contains(&Reference::Kfun) && params.is_none() {
                return Err(ConfigError::new(
                    "params",
                    "required when comparing against kfun",
                ));
            }
            vs
        } else {
            Vec::new()
        };

        let threads = parse_num::<usize>(raw, "threads")?;
        if threads == Some(0) {
            return Err(ConfigError::new("threads", "must be at least 1"));
        }
        let defaults = BoundednessThresholds::default();
        let thresholds = BoundednessThresholds {
            sup_bound: parse_positive_f64(raw, "sup_bound", defaults.sup_bound)?,
            tail_tolerance: parse_positive_f64(raw, "tail_tol", defaults.tail_tolerance)?,
        };
        let eps = parse_positive_f64(raw, "eps", 0.5)?;
        let out = PathBuf::from(raw.get("out").map(String::as_str).unwrap_or("."));

        Ok(Self {
            function,
            spec,
            orders,
            modes,
            trials,
            seed,
            params,
            vs,
            out,
            threads,
            thresholds,
            eps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[(&str, &str)]) -> RawConfig {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn field_of(r: Result<ExperimentConfig, ConfigError>) -> String {
        r.unwrap_err().field
    }

    #[test]
    fn file_syntax() {
        let text = "# comment\nfn = omega\n\nn=1000\n; other\nsup-bound = 3\n";
        let r = parse_config_text(text).unwrap();
        assert_eq!(r["fn"], "omega");
        assert_eq!(r["sup_bound"], "3");
        assert_eq!(parse_config_text("bogus = 1").unwrap_err().field, "bogus");
        assert_eq!(parse_config_text("n = 1\nn = 2").unwrap_err().field, "n");
        assert_eq!(parse_config_text("just words").unwrap_err().field, "config");
    }

    #[test]
    fn defaults() {
        let c =
            ExperimentConfig::validate(&raw(&[("fn", "omega"), ("n", "100")]), Command::Moments)
                .unwrap();
        assert_eq!(c.spec, ProgressionSpec::new(1, 1, 100).unwrap());
        assert_eq!(c.orders, 4);
        assert_eq!(c.modes, vec![PrimeSumMode::PaperProgression]);
        assert_eq!(c.out, PathBuf::from("."));
    }

    #[test]
    fn field_level_errors() {
        let m = Command::Moments;
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("k", "4"), ("n", "100")]),
                m
            )),
            "l"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("k", "4"), ("l", "2"), ("n", "100")]),
                m
            )),
            "l"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "nope"), ("n", "100")]),
                m
            )),
            "fn"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(&raw(&[("n", "100")]), m)),
            "fn"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(&raw(&[("fn", "omega")]), m)),
            "n"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("n", "x")]),
                m
            )),
            "n"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("n", "100"), ("orders", "13")]),
                m
            )),
            "orders"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("rule", "ln(p"), ("n", "100")]),
                m
            )),
            "rule"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("n", "100"), ("mode", "x")]),
                m
            )),
            "mode"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("n", "100"), ("eps", "-1")]),
                m
            )),
            "eps"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("n", "100")]),
                Command::Simulate
            )),
            "trials"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[
                    ("fn", "omega"),
                    ("n", "100"),
                    ("orders", "9"),
                    ("trials", "5"),
                    ("seed", "1")
                ]),
                Command::Simulate
            )),
            "orders"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", "omega"), ("n", "100"), ("vs", "kfun")]),
                Command::Limits
            )),
            "params"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[("fn", KOLMOGOROV_EXAMPLE), ("n", "100")]),
                Command::Limits
            )),
            "params"
        );
        assert_eq!(
            field_of(ExperimentConfig::validate(
                &raw(&[
                    ("fn", "omega"),
                    ("n", "100"),
                    ("params", "A=1,C=1,mu=0,nu=0")
                ]),
                m
            )),
            "params"
        );
    }

    #[test]
    fn rule_functions() {
        let c = ExperimentConfig::validate(
            &raw(&[
                ("rule", "ln(p)^2"),
                ("kind", "strongly_additive"),
                ("name", "sq"),
                ("n", "50"),
            ]),
            Command::Moments,
        )
        .unwrap();
        assert_eq!(
            c.function,
            FunctionSpec::Rule {
                name: "sq".into(),
                rule: "ln(p)^2".into(),
                strongly_additive: true
            }
        );
    }
}
