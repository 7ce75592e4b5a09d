use std::fmt;

use serde::{Deserialize, Serialize};

/// How a reported number relates to the true value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flag {
    Exact,
    Lower,
    Upper,
    Estimate,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flag::Exact => "EXACT",
            Flag::Lower => "LOWER",
            Flag::Upper => "UPPER",
            Flag::Estimate => "ESTIMATE",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified<T> {
    pub value: T,
    pub flag: Flag,
}

impl<T> Certified<T> {
    pub fn exact(value: T) -> Self {
        Certified { value, flag: Flag::Exact }
    }

    pub fn with_flag(value: T, flag: Flag) -> Self {
        Certified { value, flag }
    }
}

/// A closed interval known to contain the true value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedInterval {
    pub lower: f64,
    pub upper: f64,
}

impl CertifiedInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        CertifiedInterval { lower, upper }
    }

    pub fn is_tight(&self) -> bool {
        self.lower == self.upper
    }

    pub fn flag(&self) -> Flag {
        if self.is_tight() {
            Flag::Exact
        } else {
            Flag::Estimate
        }
    }

    /// Interval for the larger of two quantities.
    pub fn join(&self, other: &CertifiedInterval) -> CertifiedInterval {
        CertifiedInterval {
            lower: self.lower.max(other.lower),
            upper: self.upper.max(other.upper),
        }
    }
}

impl fmt::Display for CertifiedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}
