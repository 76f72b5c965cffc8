use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::error::CliError;

/// The experiments the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    SdeHitting,
    SpdeHitting,
    OuCheck,
    PotentialTheory,
    Determinant,
    KramersPredict,
    RateFunctional,
    RandomWalk,
    ArrheniusSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::SdeHitting,
        Experiment::SpdeHitting,
        Experiment::OuCheck,
        Experiment::PotentialTheory,
        Experiment::Determinant,
        Experiment::KramersPredict,
        Experiment::RateFunctional,
        Experiment::RandomWalk,
        Experiment::ArrheniusSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::SdeHitting => "sde-hitting",
            Experiment::SpdeHitting => "spde-hitting",
            Experiment::OuCheck => "ou-check",
            Experiment::PotentialTheory => "potential-theory",
            Experiment::Determinant => "determinant",
            Experiment::KramersPredict => "kramers-predict",
            Experiment::RateFunctional => "rate-functional",
            Experiment::RandomWalk => "randomwalk",
            Experiment::ArrheniusSweep => "arrhenius-sweep",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.as_str()).collect();
                CliError::Config(format!(
                    "unknown experiment `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// An experiment plus its raw parameters. Parameter values are JSON values;
/// each experiment validates the keys it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub parameters: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    /// Reads `{"experiment": ..., "parameters": {...}}`. The experiment may
    /// be omitted when `experiment` supplies it.
    pub fn from_json(text: &str, experiment: Option<Experiment>) -> Result<Self, CliError> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
        for key in obj.keys() {
            if key != "experiment" && key != "parameters" {
                return Err(CliError::Config(format!(
                    "unknown top-level config key `{key}`"
                )));
            }
        }
        let from_file = match obj.get("experiment") {
            None => None,
            Some(Value::String(s)) => Some(s.parse::<Experiment>()?),
            Some(_) => return Err(CliError::Config("`experiment` must be a string".into())),
        };
        let experiment = experiment
            .or(from_file)
            .ok_or_else(|| CliError::Config("missing required key `experiment`".into()))?;
        let parameters = match obj.get("parameters") {
            None => BTreeMap::new(),
            Some(Value::Object(m)) => m.clone().into_iter().collect(),
            Some(_) => return Err(CliError::Config("`parameters` must be an object".into())),
        };
        Ok(Self {
            experiment,
            parameters,
        })
    }

    pub fn from_file(path: &Path, experiment: Option<Experiment>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, experiment)
    }

    /// Applies `--key value` overrides on top of the file values.
    pub fn apply_flags(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .filter(|k| !k.is_empty())
                .ok_or_else(|| CliError::Config(format!("expected `--key value`, got `{flag}`")))?;
            let (key, raw) = match key.split_once('=') {
                Some((k, v)) => (k, v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| CliError::Config(format!("flag `--{key}` needs a value")))?;
                    (key, v.clone())
                }
            };
            self.parameters
                .insert(key.to_string(), parse_flag_value(&raw));
        }
        Ok(())
    }
}

/// Flag text as JSON when it parses (numbers, arrays, booleans), as a list
/// when comma-separated, otherwise as a string.
pub fn parse_flag_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(|p| parse_flag_value(p.trim())).collect());
    }
    Value::String(raw.to_string())
}

/// Typed access to an experiment's parameters. Every key read is recorded
/// with its resolved value (defaults included) for the manifest.
#[derive(Debug)]
pub struct Params {
    raw: BTreeMap<String, Value>,
    resolved: RefCell<BTreeMap<String, Value>>,
}

fn as_f64(key: &str, v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
    .ok_or_else(|| {
        CliError::Config(format!(
            "parameter `{key}` must be a finite number, got {v}"
        ))
    })
}

fn as_u64(key: &str, v: &Value) -> Result<u64, CliError> {
    match v {
        Value::Number(n) => n.as_u64().or_else(|| {
            n.as_f64()
                .filter(|x| x.fract() == 0.0 && *x >= 0.0)
                .map(|x| x as u64)
        }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .ok_or_else(|| {
        CliError::Config(format!(
            "parameter `{key}` must be a non-negative integer, got {v}"
        ))
    })
}

impl Params {
    pub fn new(raw: BTreeMap<String, Value>) -> Self {
        Self {
            raw,
            resolved: RefCell::new(BTreeMap::new()),
        }
    }

    fn record(&self, key: &str, v: Value) {
        self.resolved.borrow_mut().insert(key.to_string(), v);
    }

    fn required(&self, key: &str) -> Result<&Value, CliError> {
        self.raw
            .get(key)
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let x = as_f64(key, self.required(key)?)?;
        self.record(key, x.into());
        Ok(x)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let x = match self.raw.get(key) {
            Some(v) => as_f64(key, v)?,
            None => default,
        };
        self.record(key, x.into());
        Ok(x)
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x = self.f64(key)?;
        check_positive(key, x)
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let x = self.f64_or(key, default)?;
        check_positive(key, x)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        let x = match self.raw.get(key) {
            Some(v) => as_u64(key, v)?,
            None => default,
        };
        self.record(key, x.into());
        Ok(x)
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let x = as_u64(key, self.required(key)?)?;
        self.record(key, x.into());
        Ok(x as usize)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    /// A scalar or a list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self.required(key)?;
        let xs = match v {
            Value::Array(items) => items
                .iter()
                .map(|x| as_f64(key, x))
                .collect::<Result<Vec<_>, _>>()?,
            other => vec![as_f64(key, other)?],
        };
        if xs.is_empty() {
            return Err(CliError::Config(format!(
                "parameter `{key}` must not be empty"
            )));
        }
        self.record(key, xs.clone().into());
        Ok(xs)
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        if self.has(key) {
            self.f64_list(key)
        } else {
            self.record(key, default.to_vec().into());
            Ok(default.to_vec())
        }
    }

    pub fn str(&self, key: &str) -> Result<String, CliError> {
        match self.required(key)? {
            Value::String(s) => {
                self.record(key, s.clone().into());
                Ok(s.clone())
            }
            v => Err(CliError::Config(format!(
                "parameter `{key}` must be a string, got {v}"
            ))),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> Result<String, CliError> {
        if self.has(key) {
            self.str(key)
        } else {
            self.record(key, default.into());
            Ok(default.to_string())
        }
    }

    /// One of `choices`, defaulting to `default`.
    pub fn choice(
        &self,
        key: &str,
        choices: &[&str],
        default: Option<&str>,
    ) -> Result<String, CliError> {
        let s = match default {
            Some(d) => self.str_or(key, d)?,
            None => self.str(key)?,
        };
        if choices.contains(&s.as_str()) {
            Ok(s)
        } else {
            Err(CliError::Config(format!(
                "parameter `{key}` must be one of {}, got `{s}`",
                choices.join(", ")
            )))
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        let b = match self.raw.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(v) => {
                return Err(CliError::Config(format!(
                    "parameter `{key}` must be true or false, got {v}"
                )))
            }
        };
        self.record(key, b.into());
        Ok(b)
    }

    /// Rejects keys the experiment never read and returns the resolved map.
    pub fn finish(&self) -> Result<BTreeMap<String, Value>, CliError> {
        let resolved = self.resolved.borrow();
        if let Some(k) = self.raw.keys().find(|k| !resolved.contains_key(*k)) {
            return Err(CliError::Config(format!(
                "unknown parameter `{k}` for this experiment"
            )));
        }
        Ok(resolved.clone())
    }
}

fn check_positive(key: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::Config(format!(
            "parameter `{key}` must be > 0, got {x}"
        )))
    }
}
