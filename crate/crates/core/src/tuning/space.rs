use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Domain of one hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Real {
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
    },
    Integer {
        low: i64,
        high: i64,
        #[serde(default)]
        log: bool,
    },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Integer(i64),
    Real(f64),
    Categorical(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Integer(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            ParamValue::Categorical(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Integer(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Categorical(v) => f.write_str(v),
        }
    }
}

pub type Config = BTreeMap<String, ParamValue>;

impl Domain {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("search parameter {name:?}: {m}")));
        match *self {
            Domain::Real { low, high, log } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return bad("needs finite low <= high");
                }
                if log && low <= 0.0 {
                    return bad("log range must be strictly positive");
                }
            }
            Domain::Integer { low, high, log } => {
                if low > high {
                    return bad("needs low <= high");
                }
                if log && low <= 0 {
                    return bad("log range must be strictly positive");
                }
            }
            Domain::Categorical { ref choices } => {
                if choices.is_empty() {
                    return bad("no choices");
                }
            }
        }
        Ok(())
    }

    /// Value at position `u` in [0, 1] of the (possibly log) unit cube.
    pub(crate) fn from_unit(&self, u: f64) -> ParamValue {
        let u = u.clamp(0.0, 1.0);
        match *self {
            Domain::Real { low, high, log } => {
                let v = if log {
                    (low.ln() + u * (high.ln() - low.ln())).exp()
                } else {
                    low + u * (high - low)
                };
                ParamValue::Real(v.clamp(low, high))
            }
            Domain::Integer { low, high, log } => {
                let v = if log {
                    let (a, b) = ((low as f64 - 0.5).max(0.5).ln(), (high as f64 + 0.5).ln());
                    (a + u * (b - a)).exp().round() as i64
                } else {
                    low + (u * (high - low + 1) as f64).floor() as i64
                };
                ParamValue::Integer(v.clamp(low, high))
            }
            Domain::Categorical { ref choices } => {
                let i = ((u * choices.len() as f64) as usize).min(choices.len() - 1);
                ParamValue::Categorical(choices[i].clone())
            }
        }
    }

    /// Inverse of `from_unit` for numeric domains (cell centre for integers).
    pub(crate) fn to_unit(&self, v: &ParamValue) -> Option<f64> {
        let x = v.as_f64()?;
        Some(match *self {
            Domain::Real { low, high, log } => {
                if high == low {
                    0.5
                } else if log {
                    (x.ln() - low.ln()) / (high.ln() - low.ln())
                } else {
                    (x - low) / (high - low)
                }
            }
            Domain::Integer { low, high, log } => {
                if log {
                    let (a, b) = ((low as f64 - 0.5).max(0.5).ln(), (high as f64 + 0.5).ln());
                    (x.ln() - a) / (b - a)
                } else {
                    (x - low as f64 + 0.5) / (high - low + 1) as f64
                }
            }
            Domain::Categorical { .. } => return None,
        })
    }

    pub(crate) fn choice_index(&self, v: &ParamValue) -> Option<usize> {
        match (self, v) {
            (Domain::Categorical { choices }, ParamValue::Categorical(c)) => {
                choices.iter().position(|x| x == c)
            }
            _ => None,
        }
    }
}

/// Named hyperparameter domains, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchSpace {
    params: BTreeMap<String, Domain>,
}

impl SearchSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, domain: Domain) -> Self {
        self.params.insert(name.to_string(), domain);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::Config("empty search space".into()));
        }
        self.params.iter().try_for_each(|(n, d)| d.validate(n))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Domain)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Config {
        self.params
            .iter()
            .map(|(n, d)| (n.clone(), d.from_unit(rng.gen::<f64>())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn uniform_samples_stay_in_range() {
        let space = SearchSpace::new()
            .with("lr", Domain::Real { low: 1e-3, high: 1e-1, log: true })
            .with("leaves", Domain::Integer { low: 4, high: 64, log: false })
            .with("crit", Domain::Categorical { choices: vec!["gini".into(), "entropy".into()] });
        space.validate().unwrap();
        let mut r = rng::seeded(1);
        let mut logs = Vec::new();
        for _ in 0..4000 {
            let c = space.sample_uniform(&mut r);
            let lr = c["lr"].as_f64().unwrap();
            assert!((1e-3..=1e-1).contains(&lr));
            logs.push(lr.log10());
            let l = c["leaves"].as_f64().unwrap();
            assert!((4.0..=64.0).contains(&l) && l.fract() == 0.0);
        }
        // log10 of a log-uniform draw is uniform on [-3, -1].
        let below = logs.iter().filter(|&&v| v < -2.0).count() as f64 / logs.len() as f64;
        assert!((below - 0.5).abs() < 0.03, "{below}");
    }

    #[test]
    fn unit_round_trip() {
        let d = Domain::Integer { low: 2, high: 9, log: false };
        for v in 2..=9 {
            let u = d.to_unit(&ParamValue::Integer(v)).unwrap();
            assert_eq!(d.from_unit(u), ParamValue::Integer(v));
        }
        let d = Domain::Integer { low: 1, high: 1000, log: true };
        for v in [1, 7, 100, 1000] {
            let u = d.to_unit(&ParamValue::Integer(v)).unwrap();
            assert_eq!(d.from_unit(u), ParamValue::Integer(v));
        }
    }

    #[test]
    fn rejects_bad_domains() {
        let s = SearchSpace::new().with("a", Domain::Real { low: 0.0, high: 1.0, log: true });
        assert!(s.validate().is_err());
        let s = SearchSpace::new().with("a", Domain::Integer { low: 3, high: 2, log: false });
        assert!(s.validate().is_err());
        assert!(SearchSpace::new().validate().is_err());
    }

    #[test]
    fn toml_form() {
        let text = r#"
            learning_rate = { type = "real", low = 0.01, high = 0.3, log = true }
            num_leaves = { type = "integer", low = 4, high = 128 }
        "#;
        let s: SearchSpace = toml::from_str(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.names().collect::<Vec<_>>(), ["learning_rate", "num_leaves"]);
    }
}
