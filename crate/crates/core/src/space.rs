//! Configuration spaces: per-parameter domains and their cross product.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Domain of a single parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Domain {
    Categorical {
        values: Vec<String>,
    },
    Real {
        lower: f64,
        upper: f64,
        #[serde(default)]
        log: bool,
    },
    /// Inclusive integer range.
    Integer { lower: i64, upper: i64 },
}

impl Domain {
    fn validate(&self) -> Result<()> {
        match self {
            Domain::Categorical { values } => {
                if values.is_empty() {
                    return Err(config_err("categorical domain must not be empty"));
                }
                let mut seen = HashSet::new();
                for v in values {
                    if !seen.insert(v) {
                        return Err(config_err(format!("duplicate categorical value `{v}`")));
                    }
                }
            }
            Domain::Real { lower, upper, log } => {
                if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
                    return Err(config_err(format!(
                        "real domain needs finite lower < upper, got [{lower}, {upper}]"
                    )));
                }
                if *log && *lower <= 0.0 {
                    return Err(config_err("log-scale real domain requires lower > 0"));
                }
            }
            Domain::Integer { lower, upper } => {
                if lower > upper {
                    return Err(config_err(format!(
                        "integer domain needs lower <= upper, got [{lower}, {upper}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of values in a finite domain, `None` for reals.
    pub fn cardinality(&self) -> Option<u64> {
        match self {
            Domain::Categorical { values } => Some(values.len() as u64),
            Domain::Real { .. } => None,
            Domain::Integer { lower, upper } => Some((upper - lower) as u64 + 1),
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::Categorical { values }, Value::Categorical(i)) => *i < values.len(),
            (Domain::Real { lower, upper, .. }, Value::Real(x)) => {
                x.is_finite() && *x >= *lower && *x <= *upper
            }
            (Domain::Integer { lower, upper }, Value::Integer(k)) => k >= lower && k <= upper,
            _ => false,
        }
    }

    /// Value at position `index` of a finite domain.
    fn nth(&self, index: u64) -> Value {
        match self {
            Domain::Categorical { .. } => Value::Categorical(index as usize),
            Domain::Integer { lower, .. } => Value::Integer(lower + index as i64),
            Domain::Real { .. } => unreachable!("real domains are not enumerable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub domain: Domain,
}

impl ParameterSpec {
    pub fn categorical<S: Into<String>>(name: &str, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.to_string(),
            domain: Domain::Categorical {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn real(name: &str, lower: f64, upper: f64, log: bool) -> Self {
        Self {
            name: name.to_string(),
            domain: Domain::Real { lower, upper, log },
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Self {
        Self {
            name: name.to_string(),
            domain: Domain::Integer { lower, upper },
        }
    }
}

/// A single parameter value, tagged by kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Categorical(usize),
    Real(f64),
    Integer(i64),
}

impl Value {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Value::Integer(k) => Some(*k),
            _ => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            Value::Categorical(i) => Some(*i),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Categorical(i) => write!(f, "#{i}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Integer(k) => write!(f, "{k}"),
        }
    }
}

/// A point θ of a configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    pub values: Vec<Value>,
}

impl Configuration {
    pub fn new(values: Vec<Value>) -> Self {
        Self { values }
    }

    pub fn single(value: Value) -> Self {
        Self {
            values: vec![value],
        }
    }

    pub fn get(&self, index: usize) -> Option<&Value> {
        self.values.get(index)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Ordered list of parameters; the space is the plain cross product of their domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParameterSpec>", into = "Vec<ParameterSpec>")]
pub struct ConfigurationSpace {
    params: Vec<ParameterSpec>,
}

impl ConfigurationSpace {
    pub fn new(params: Vec<ParameterSpec>) -> Result<Self> {
        let mut names = HashSet::new();
        for p in &params {
            if !names.insert(p.name.as_str()) {
                return Err(config_err(format!("duplicate parameter name `{}`", p.name)));
            }
            p.domain
                .validate()
                .map_err(|e| config_err(format!("parameter `{}`: {e}", p.name)))?;
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[ParameterSpec] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Checks arity, kinds and domain membership.
    pub fn check(&self, config: &Configuration) -> Result<()> {
        if config.values.len() != self.params.len() {
            return Err(config_err(format!(
                "configuration has {} values, space has {} parameters",
                config.values.len(),
                self.params.len()
            )));
        }
        for (p, v) in self.params.iter().zip(&config.values) {
            if !p.domain.contains(v) {
                return Err(config_err(format!(
                    "value {v} outside domain of parameter `{}`",
                    p.name
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        self.check(config).is_ok()
    }

    /// Size of the space when every domain is finite.
    pub fn cardinality(&self) -> Option<u64> {
        self.params.iter().try_fold(1u64, |acc, p| {
            p.domain.cardinality().and_then(|c| acc.checked_mul(c))
        })
    }

    /// Every configuration of a finite space, last parameter varying fastest.
    pub fn enumerate(&self) -> Option<Vec<Configuration>> {
        let total = self.cardinality()?;
        let radices: Vec<u64> = self
            .params
            .iter()
            .map(|p| p.domain.cardinality().unwrap_or(0))
            .collect();
        let mut out = Vec::with_capacity(total as usize);
        for mut code in 0..total {
            let mut values = vec![Value::Categorical(0); self.params.len()];
            for (j, p) in self.params.iter().enumerate().rev() {
                values[j] = p.domain.nth(code % radices[j]);
                code /= radices[j];
            }
            out.push(Configuration::new(values));
        }
        Some(out)
    }

    /// Position of `config` in [`Self::enumerate`] order.
    pub fn index_of(&self, config: &Configuration) -> Option<u64> {
        self.check(config).ok()?;
        let mut code = 0u64;
        for (p, v) in self.params.iter().zip(&config.values) {
            let radix = p.domain.cardinality()?;
            let digit = match (&p.domain, v) {
                (Domain::Categorical { .. }, Value::Categorical(i)) => *i as u64,
                (Domain::Integer { lower, .. }, Value::Integer(k)) => (k - lower) as u64,
                _ => return None,
            };
            code = code * radix + digit;
        }
        Some(code)
    }
}

impl TryFrom<Vec<ParameterSpec>> for ConfigurationSpace {
    type Error = crate::DacError;

    fn try_from(params: Vec<ParameterSpec>) -> Result<Self> {
        Self::new(params)
    }
}

impl From<ConfigurationSpace> for Vec<ParameterSpec> {
    fn from(space: ConfigurationSpace) -> Self {
        space.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> ConfigurationSpace {
        ConfigurationSpace::new(vec![
            ParameterSpec::categorical("c", ["a", "b", "c"]),
            ParameterSpec::integer("k", 1, 2),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_malformed_domains() {
        assert!(ConfigurationSpace::new(vec![ParameterSpec::real("x", 1.0, 1.0, false)]).is_err());
        assert!(ConfigurationSpace::new(vec![ParameterSpec::real("x", 0.0, 1.0, true)]).is_err());
        assert!(ConfigurationSpace::new(vec![ParameterSpec::categorical::<&str>("c", [])]).is_err());
        assert!(ConfigurationSpace::new(vec![ParameterSpec::categorical("c", ["a", "a"])]).is_err());
        assert!(ConfigurationSpace::new(vec![
            ParameterSpec::integer("k", 1, 3),
            ParameterSpec::real("k", 0.0, 1.0, false),
        ])
        .is_err());
    }

    #[test]
    fn enumerate_matches_index_of() {
        let space = mixed();
        let all = space.enumerate().unwrap();
        assert_eq!(all.len(), 6);
        for (i, c) in all.iter().enumerate() {
            assert_eq!(space.index_of(c), Some(i as u64));
        }
        assert_eq!(
            all[1],
            Configuration::new(vec![Value::Categorical(0), Value::Integer(2)])
        );
    }

    #[test]
    fn check_catches_kind_and_range() {
        let space = mixed();
        assert!(space
            .check(&Configuration::new(vec![Value::Categorical(3), Value::Integer(1)]))
            .is_err());
        assert!(space
            .check(&Configuration::new(vec![Value::Real(0.0), Value::Integer(1)]))
            .is_err());
        assert!(space.check(&Configuration::single(Value::Categorical(0))).is_err());
    }

    #[test]
    fn real_spaces_are_not_enumerable() {
        let space = ConfigurationSpace::new(vec![ParameterSpec::real("eta", 1e-6, 10.0, true)]).unwrap();
        assert!(space.enumerate().is_none());
        assert!(!space.contains(&Configuration::single(Value::Real(f64::NAN))));
    }

    #[test]
    fn serde_rejects_invalid_space() {
        let bad = r#"[{"name":"x","domain":{"type":"real","lower":2.0,"upper":1.0}}]"#;
        assert!(serde_json::from_str::<ConfigurationSpace>(bad).is_err());
        let good = serde_json::to_string(&mixed()).unwrap();
        assert_eq!(serde_json::from_str::<ConfigurationSpace>(&good).unwrap(), mixed());
    }
}
