use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An integrability exponent in `[1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(Error::InvalidConfig(format!("exponent {p} outside [1, ∞]")))
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    pub fn from_reciprocal(r: f64) -> Self {
        if r <= 0.0 {
            Exponent::Infinity
        } else {
            Exponent::Finite(1.0 / r)
        }
    }

    /// Hölder conjugate `p*` with `1/p + 1/p* = 1`.
    pub fn conjugate(self) -> Self {
        Self::from_reciprocal(1.0 - self.reciprocal())
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("cannot parse exponent '{t}'")))
                .and_then(Exponent::finite),
        }
    }
}

/// Exponents `p_0, …, p_n` for graded `L^p` spaces of forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderSequence {
    pub exponents: Vec<Exponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub valid: bool,
    /// Pairs `(k, l)` with `p_k⁻¹ + p_l⁻¹ > p_{k+l}⁻¹`.
    pub violations: Vec<(usize, usize)>,
    pub p0_infinite: bool,
    pub monotone: bool,
    /// `p_k* ≤ p_{n−k}` for every `k`.
    pub conjugate_bound: bool,
}

const SLACK: f64 = 1e-12;

impl HolderSequence {
    pub fn new(exponents: Vec<Exponent>) -> Self {
        Self { exponents }
    }

    /// `p_k = n/k`, `p_0 = ∞`.
    pub fn conformal(n: usize) -> Self {
        Self::new(
            (0..=n)
                .map(|k| if k == 0 { Exponent::Infinity } else { Exponent::Finite(n as f64 / k as f64) })
                .collect(),
        )
    }

    pub fn all_infinite(n: usize) -> Self {
        Self::new(vec![Exponent::Infinity; n + 1])
    }

    pub fn n(&self) -> usize {
        self.exponents.len().saturating_sub(1)
    }

    pub fn get(&self, k: usize) -> Exponent {
        self.exponents[k]
    }

    pub fn validate(&self) -> HolderReport {
        let n = self.n();
        let r: Vec<f64> = self.exponents.iter().map(|p| p.reciprocal()).collect();
        let mut violations = Vec::new();
        for k in 0..=n {
            for l in 0..=n - k {
                if r[k] + r[l] > r[k + l] + SLACK {
                    violations.push((k, l));
                }
            }
        }
        let monotone = (0..n).all(|k| r[k + 1] + SLACK >= r[k]);
        let conjugate_bound = (0..=n).all(|k| self.exponents[k].conjugate().reciprocal() + SLACK >= r[n - k]);
        HolderReport {
            valid: violations.is_empty(),
            violations,
            p0_infinite: self.exponents.first().is_some_and(|p| p.is_infinite()),
            monotone,
            conjugate_bound,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_sequences() {
        for n in 1..6 {
            let rep = HolderSequence::conformal(n).validate();
            assert!(rep.valid && rep.p0_infinite && rep.monotone && rep.conjugate_bound, "{rep:?}");
            assert!(HolderSequence::all_infinite(n).validate().valid);
        }
    }

    #[test]
    fn violation_is_listed() {
        let seq = HolderSequence::new(vec![Exponent::Infinity, Exponent::Finite(1.0), Exponent::Finite(1.0)]);
        let rep = seq.validate();
        assert!(!rep.valid);
        assert_eq!(rep.violations, vec![(1, 1)]);
    }

    #[test]
    fn parse_and_conjugate() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("2".parse::<Exponent>().unwrap().conjugate(), Exponent::Finite(2.0));
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinity);
        assert!("0.5".parse::<Exponent>().is_err());
    }
}
