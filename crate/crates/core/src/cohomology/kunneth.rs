//! Künneth decomposition of closed trigonometric forms on `T^m`.

use serde::{Deserialize, Serialize};

use crate::algebra::basis;
use crate::error::{Error, Result};
use crate::maps::{AnalyticTargetForm, ScalarFn, TrigTerm, Wave};
use crate::KCovector;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KunnethDecomposition {
    /// `(α_i, β_i)` with the class part of `ω` equal to `Σ α_i ∧ β_i`.
    pub terms: Vec<(AnalyticTargetForm, AnalyticTargetForm)>,
    /// `τ` with `dτ = ω − Σ α_i ∧ β_i`, absent when the remainder is zero.
    pub antiderivative: Option<AnalyticTargetForm>,
    /// Sampled `max |dτ − (ω − class part)|`.
    pub residual: f64,
}

/// Split a closed trigonometric `k`-form (`k ≥ 2`) into constant monomials
/// `a_I dy^{i₁} ∧ dy^{I'}` plus `dτ`, where each non-zero frequency `ξ`
/// contributes `τ_ξ = ξ ⌟ ρ_ξ / (2π|ξ|²)` with the wave rotated by a quarter
/// period.
pub fn kunneth_decompose(omega: &AnalyticTargetForm) -> Result<KunnethDecomposition> {
    let (m, k) = (omega.m, omega.k);
    if !omega.torus {
        return Err(Error::Unsupported("Künneth decomposition needs a torus target".into()));
    }
    if k < 2 {
        return Err(Error::DegreeOutOfRange { degree: k, n: m });
    }
    let closed = omega.closedness_residual(6)?;
    if closed > 1e-8 {
        return Err(Error::Precondition(format!("form is not closed (residual {closed:.3e})")));
    }
    let idx = basis(m, k);
    let lower = basis(m, k - 1);
    let mut class = vec![0.0; idx.len()];
    let mut tau: Vec<Vec<TrigTerm>> = vec![Vec::new(); lower.len()];
    let mut remainder: Vec<Vec<TrigTerm>> = vec![Vec::new(); idx.len()];
    for (slot, coeff) in omega.coeffs.iter().enumerate() {
        let terms = coeff
            .trig_terms(m)
            .ok_or_else(|| Error::Unsupported(format!("coefficient {slot} is not a trigonometric polynomial")))?;
        let e = KCovector::basis_element(m, idx[slot].indices())?;
        for t in terms {
            if t.freq.iter().all(|f| *f == 0) {
                if t.wave == Wave::Cos {
                    class[slot] += t.coef;
                }
                continue;
            }
            remainder[slot].push(t.clone());
            let xi: Vec<f64> = t.freq.iter().map(|f| *f as f64).collect();
            let norm2: f64 = xi.iter().map(|v| v * v).sum();
            let contracted = e.interior(&xi)?;
            // d sin(2πξ·y) = 2π cos(2πξ·y) ξ, d cos(2πξ·y) = −2π sin(2πξ·y) ξ
            let (wave, sign) = match t.wave {
                Wave::Cos => (Wave::Sin, 1.0),
                Wave::Sin => (Wave::Cos, -1.0),
            };
            for (j, c) in contracted.coeffs().iter().enumerate() {
                if *c != 0.0 {
                    let coef = sign * t.coef * c / (std::f64::consts::TAU * norm2);
                    tau[j].push(TrigTerm::new(coef, &t.freq, wave));
                }
            }
        }
    }
    let mut terms = Vec::new();
    for (slot, a) in class.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let axes = idx[slot].indices();
        let alpha = AnalyticTargetForm::basis(m, &axes[..1], true)?.scale(*a);
        let beta = AnalyticTargetForm::basis(m, &axes[1..], true)?;
        terms.push((alpha, beta));
    }
    let (antiderivative, residual) = if tau.iter().all(|t| t.is_empty()) {
        (None, 0.0)
    } else {
        let tau = AnalyticTargetForm::new(m, k - 1, true, tau.into_iter().map(ScalarFn::trig).collect())?;
        let rho = AnalyticTargetForm::new(m, k, true, remainder.into_iter().map(ScalarFn::trig).collect())?;
        let dtau = tau.exterior_derivative()?;
        let residual = rho
            .sample_points(6)
            .iter()
            .map(|y| dtau.eval(y).max_abs_diff(&rho.eval(y)))
            .fold(0.0, f64::max);
        (Some(tau), residual)
    };
    Ok(KunnethDecomposition { terms, antiderivative, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials() {
        let d = kunneth_decompose(&AnalyticTargetForm::basis(2, &[0, 1], true).unwrap()).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.terms[0].0.as_constant().unwrap().coeffs(), &[1.0, 0.0]);
        assert_eq!(d.terms[0].1.as_constant().unwrap().coeffs(), &[0.0, 1.0]);
        let v = kunneth_decompose(&AnalyticTargetForm::volume(3, true)).unwrap();
        let (a, b) = &v.terms[0];
        assert_eq!(a.as_constant().unwrap().coeffs(), &[1.0, 0.0, 0.0]);
        assert_eq!(b.as_constant().unwrap().coeffs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn exact_remainder_has_verified_antiderivative() {
        // dy¹∧dy² + d(sin(2πy₁) dy²)
        let sin = AnalyticTargetForm::monomial(2, &[1], ScalarFn::trig(vec![TrigTerm::new(1.0, &[1, 0], Wave::Sin)]), true).unwrap();
        let omega = AnalyticTargetForm::basis(2, &[0, 1], true).unwrap().add(&sin.exterior_derivative().unwrap()).unwrap();
        let d = kunneth_decompose(&omega).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert!(d.residual < 1e-12, "{}", d.residual);
        assert!(d.antiderivative.is_some());
    }

    #[test]
    fn guards() {
        let flat = AnalyticTargetForm::basis(2, &[0, 1], false).unwrap();
        assert!(matches!(kunneth_decompose(&flat), Err(Error::Unsupported(_))));
        assert!(kunneth_decompose(&AnalyticTargetForm::basis(2, &[0], true).unwrap()).is_err());
    }
}
