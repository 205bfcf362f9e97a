//! Auditable collections of computed values and checked inequalities.

use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceValue;

/// Serializes `f64` with infinities and NaN as the strings `"inf"`,
/// `"-inf"`, `"nan"` (JSON has no representation for them).
pub mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("invalid number {other:?}"))),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundEntry {
    pub name: String,
    #[serde(with = "extended_float")]
    pub value: f64,
    pub finite: bool,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    #[default]
    Ge,
    Le,
}

/// A checked inequality `lhs ≥ rhs − slack` (or `lhs ≤ rhs + slack`).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    #[serde(default)]
    pub relation: Relation,
    #[serde(with = "extended_float")]
    pub lhs: f64,
    #[serde(with = "extended_float")]
    pub rhs: f64,
    pub slack: f64,
    pub passed: bool,
}

impl Check {
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let passed = if lhs.is_nan() || rhs.is_nan() {
            false
        } else {
            lhs == f64::INFINITY || rhs == f64::NEG_INFINITY || lhs >= rhs - slack
        };
        Self {
            name: name.into(),
            relation: Relation::Ge,
            lhs,
            rhs,
            slack,
            passed,
        }
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let mut c = Self::ge(name, rhs, lhs, slack);
        std::mem::swap(&mut c.lhs, &mut c.rhs);
        c.relation = Relation::Le;
        c
    }

    /// How far the inequality holds with its slack included; negative
    /// exactly when it fails (for finite sides).
    pub fn margin(&self) -> f64 {
        let (big, small) = match self.relation {
            Relation::Ge => (self.lhs, self.rhs),
            Relation::Le => (self.rhs, self.lhs),
        };
        if big == f64::INFINITY || small == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        let m = big - small + self.slack;
        if m.is_nan() {
            f64::NEG_INFINITY
        } else {
            m
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct BoundReport {
    pub title: String,
    pub entries: Vec<BoundEntry>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    pub fn value(&mut self, name: impl Into<String>, value: f64, method: &str, n: Option<usize>, tolerance: f64) {
        self.entries.push(BoundEntry {
            name: name.into(),
            value,
            finite: value.is_finite(),
            method: method.to_owned(),
            n,
            tolerance,
        });
    }

    pub fn divergence(&mut self, name: impl Into<String>, v: &DivergenceValue, n: Option<usize>) {
        self.entries.push(BoundEntry {
            name: name.into(),
            value: v.value,
            finite: v.finite,
            method: v.method.clone(),
            n,
            tolerance: v.tolerance,
        });
    }

    pub fn check(&mut self, check: Check) -> bool {
        let passed = check.passed;
        self.checks.push(check);
        passed
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn extend(&mut self, other: BoundReport) {
        self.entries.extend(other.entries);
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
