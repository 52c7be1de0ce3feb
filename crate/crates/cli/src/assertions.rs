//! `--assert` expressions: `KEY>=X`, `KEY<=X` or `KEY in A..B`.

use anyhow::{bail, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Bound {
    AtLeast(f64),
    AtMost(f64),
    Between(f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub key: String,
    pub bound: Bound,
    pub text: String,
}

fn number(s: &str, expr: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| anyhow::anyhow!("invalid number `{}` in assertion `{expr}`", s.trim()))
}

impl Assertion {
    pub fn parse(expr: &str) -> Result<Self> {
        let text = expr.trim().to_string();
        let (key, bound) = if let Some((k, v)) = text.split_once(">=") {
            (k, Bound::AtLeast(number(v, expr)?))
        } else if let Some((k, v)) = text.split_once("<=") {
            (k, Bound::AtMost(number(v, expr)?))
        } else if let Some((k, range)) = text.split_once(" in ") {
            let Some((a, b)) = range.split_once("..") else { bail!("assertion `{expr}`: expected A..B") };
            (k, Bound::Between(number(a, expr)?, number(b, expr)?))
        } else {
            bail!("assertion `{expr}`: expected KEY>=X, KEY<=X or KEY in A..B");
        };
        let key = key.trim();
        if key.is_empty() {
            bail!("assertion `{expr}` has no key");
        }
        Ok(Self { key: key.to_string(), bound, text })
    }

    pub fn holds(&self, value: f64) -> bool {
        match self.bound {
            Bound::AtLeast(x) => value >= x,
            Bound::AtMost(x) => value <= x,
            Bound::Between(a, b) => (a..=b).contains(&value),
        }
    }
}

/// Outcome of checking every assertion; `lookup` maps keys to values.
pub fn check(assertions: &[Assertion], lookup: impl Fn(&str) -> Option<f64>) -> Result<Vec<(String, f64, bool)>> {
    let mut out = Vec::with_capacity(assertions.len());
    for a in assertions {
        let Some(v) = lookup(&a.key) else { bail!("unknown assertion key `{}`", a.key) };
        out.push((a.text.clone(), v, a.holds(v)));
    }
    Ok(out)
}
