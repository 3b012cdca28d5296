//! `key = value` configuration files.
//!
//! ```text
//! # comment
//! case    = cs
//! n       = 3
//! alpha_2_0 = x^2          # operator coefficient α_{2,0}
//! center  = 1.5 2.0
//! lambda10 = 0.0 1.0       # complex values as "re im"
//! ```
//!
//! One entry per line; `#` starts a comment; blank lines are ignored; a
//! repeated key keeps its last value. Values are trimmed strings, converted
//! on access.

use std::collections::BTreeMap;
use std::str::FromStr;

use gpw_core::expr::Expr;
use gpw_core::{Complex64, Point};

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl FromStr for Config {
    type Err = BenchError;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BenchError::Config {
                line: k + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(BenchError::Config {
                    line: k + 1,
                    msg: format!("bad key {key:?}"),
                });
            }
            entries.insert(key.to_string(), (k + 1, value.trim().to_string()));
        }
        Ok(Self { entries })
    }
}

impl Config {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn err(&self, key: &str, msg: String) -> BenchError {
        BenchError::Config {
            line: self.entries.get(key).map_or(0, |(l, _)| *l),
            msg: format!("{key}: {msg}"),
        }
    }

    /// Parses `key` if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| self.err(key, e.to_string())))
            .transpose()
    }

    fn pair(&self, key: &str) -> Result<Option<(f64, f64)>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let parts: Vec<&str> = v.split_whitespace().collect();
        match parts.as_slice() {
            [a, b] => {
                let a = a.parse::<f64>().map_err(|e| self.err(key, e.to_string()))?;
                let b = b.parse::<f64>().map_err(|e| self.err(key, e.to_string()))?;
                Ok(Some((a, b)))
            }
            _ => Err(self.err(key, format!("expected two numbers, got {v:?}"))),
        }
    }

    pub fn point(&self, key: &str) -> Result<Option<Point>> {
        self.pair(key)
    }

    /// A complex value written `re im`, or a single real number.
    pub fn complex(&self, key: &str) -> Result<Option<Complex64>> {
        match self.raw(key) {
            Some(v) if !v.contains(char::is_whitespace) => Ok(self.get::<f64>(key)?.map(Complex64::from)),
            _ => Ok(self.pair(key)?.map(|(re, im)| Complex64::new(re, im))),
        }
    }

    /// Operator coefficients from `alpha_K_L = <expr>` entries.
    pub fn coefficients(&self) -> Result<Vec<((usize, usize), Expr)>> {
        let mut out = Vec::new();
        for key in self.keys() {
            let Some(rest) = key.strip_prefix("alpha_") else { continue };
            let idx = rest
                .split_once('_')
                .and_then(|(k, l)| Some((k.parse().ok()?, l.parse().ok()?)))
                .ok_or_else(|| self.err(key, "expected alpha_K_L".into()))?;
            let expr = self.get::<Expr>(key)?.expect("key present");
            out.push((idx, expr));
        }
        Ok(out)
    }
}
