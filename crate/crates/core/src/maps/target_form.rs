use serde::{Deserialize, Serialize};

use super::scalar::ScalarFn;
use crate::algebra::{basis_masks, binomial, merge_sign, rank_of_mask, KCovector};
use crate::error::{Error, Result};

/// A k-form on the target `ℝ^m` or `T^m` with closed-form coefficients in
/// lexicographic basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTargetForm {
    pub m: usize,
    pub k: usize,
    pub torus: bool,
    pub coeffs: Vec<ScalarFn>,
}

impl AnalyticTargetForm {
    pub fn new(m: usize, k: usize, torus: bool, coeffs: Vec<ScalarFn>) -> Result<Self> {
        if k > m {
            return Err(Error::DegreeOutOfRange { degree: k, n: m });
        }
        if coeffs.len() != binomial(m, k) {
            return Err(Error::DimensionMismatch { expected: binomial(m, k), got: coeffs.len() });
        }
        if torus {
            if let Some(i) = coeffs.iter().position(|c| !c.is_periodic()) {
                return Err(Error::InvalidConfig(format!("coefficient {i} is not periodic on the torus")));
            }
        }
        Ok(Self { m, k, torus, coeffs })
    }

    pub fn constant(a: &KCovector, torus: bool) -> Self {
        let coeffs = a.coeffs().iter().map(|c| ScalarFn::constant(*c)).collect();
        Self { m: a.dim(), k: a.degree(), torus, coeffs }
    }

    pub fn volume(m: usize, torus: bool) -> Self {
        Self::constant(&KCovector::volume(m), torus)
    }

    /// `dy^{i₁} ∧ … ∧ dy^{i_k}` (0-based axes).
    pub fn basis(m: usize, axes: &[usize], torus: bool) -> Result<Self> {
        Ok(Self::constant(&KCovector::basis_element(m, axes)?, torus))
    }

    pub fn scalar(m: usize, f: ScalarFn, torus: bool) -> Result<Self> {
        Self::new(m, 0, torus, vec![f])
    }

    /// `f · dy^I`.
    pub fn monomial(m: usize, axes: &[usize], f: ScalarFn, torus: bool) -> Result<Self> {
        let k = axes.len();
        let slot = crate::algebra::MultiIndex::new(axes, m)?.rank(m);
        let mut coeffs = vec![ScalarFn::zero(); binomial(m, k)];
        coeffs[slot] = f;
        Self::new(m, k, torus, coeffs)
    }

    pub fn ncoeffs(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c.eval(y);
        }
    }

    pub fn eval(&self, y: &[f64]) -> KCovector {
        let mut c = vec![0.0; self.ncoeffs()];
        self.eval_into(y, &mut c);
        KCovector::new(self.m, self.k, c).expect("consistent form")
    }

    /// Constant value, if all coefficients are constants.
    pub fn as_constant(&self) -> Option<KCovector> {
        let c: Option<Vec<f64>> = self.coeffs.iter().map(|c| c.as_constant()).collect();
        c.map(|c| KCovector::new(self.m, self.k, c).expect("consistent form"))
    }

    pub fn exterior_derivative(&self) -> Result<Self> {
        let (m, k) = (self.m, self.k);
        if k >= m {
            return Err(Error::DegreeOutOfRange { degree: k + 1, n: m });
        }
        let mut terms: Vec<Vec<ScalarFn>> = vec![Vec::new(); binomial(m, k + 1)];
        for (ci, &mask) in basis_masks(m, k).iter().enumerate() {
            if self.coeffs[ci].as_constant().is_some() {
                continue;
            }
            for a in 0..m {
                let s = merge_sign(1 << a, mask);
                if s == 0.0 {
                    continue;
                }
                let p = self.coeffs[ci].partial(a);
                let term = if s > 0.0 {
                    p
                } else {
                    ScalarFn::Product { factors: vec![ScalarFn::constant(-1.0), p] }
                };
                terms[rank_of_mask(mask | (1 << a), m)].push(term);
            }
        }
        let coeffs = terms
            .into_iter()
            .map(|t| if t.is_empty() { ScalarFn::zero() } else { ScalarFn::Sum { terms: t } })
            .collect();
        Ok(Self { m, k: k + 1, torus: self.torus, coeffs })
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: other.m });
        }
        let (m, k, l) = (self.m, self.k, other.k);
        if k + l > m {
            return Err(Error::DegreeOutOfRange { degree: k + l, n: m });
        }
        let mut terms: Vec<Vec<ScalarFn>> = vec![Vec::new(); binomial(m, k + l)];
        let bm = basis_masks(m, l);
        for (ia, &ma) in basis_masks(m, k).iter().enumerate() {
            for (ib, &mb) in bm.iter().enumerate() {
                let s = merge_sign(ma, mb);
                if s == 0.0 {
                    continue;
                }
                terms[rank_of_mask(ma | mb, m)].push(ScalarFn::Product {
                    factors: vec![ScalarFn::constant(s), self.coeffs[ia].clone(), other.coeffs[ib].clone()],
                });
            }
        }
        let coeffs = terms
            .into_iter()
            .map(|t| if t.is_empty() { ScalarFn::zero() } else { ScalarFn::Sum { terms: t } })
            .collect();
        Ok(Self { m, k: k + l, torus: self.torus || other.torus, coeffs })
    }

    pub fn scale(&self, s: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| match c.as_constant() {
                Some(v) => ScalarFn::constant(s * v),
                None => ScalarFn::Product { factors: vec![ScalarFn::constant(s), c.clone()] },
            })
            .collect();
        Self { coeffs, ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m || self.k != other.k {
            return Err(Error::DimensionMismatch { expected: self.ncoeffs(), got: other.ncoeffs() });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| match (a.as_constant(), b.as_constant()) {
                (Some(x), Some(y)) => ScalarFn::constant(x + y),
                _ => ScalarFn::Sum { terms: vec![a.clone(), b.clone()] },
            })
            .collect();
        Ok(Self { m: self.m, k: self.k, torus: self.torus || other.torus, coeffs })
    }

    /// Deterministic sample points: a regular lattice in `[0,1)^m` (or the
    /// cube `[-1,1]^m` for Euclidean targets).
    pub fn sample_points(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let total = per_axis.pow(self.m as u32);
        (0..total)
            .map(|mut i| {
                (0..self.m)
                    .map(|_| {
                        let t = ((i % per_axis) as f64 + 0.37) / per_axis as f64;
                        i /= per_axis;
                        if self.torus {
                            t
                        } else {
                            2.0 * t - 1.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Verifies `dω = 0` on a sample lattice, returning the largest residual.
    pub fn closedness_residual(&self, per_axis: usize) -> Result<f64> {
        if self.k == self.m {
            return Ok(0.0);
        }
        let d = self.exterior_derivative()?;
        Ok(self
            .sample_points(per_axis)
            .iter()
            .map(|y| d.eval(y).coeffs().iter().fold(0.0f64, |a, c| a.max(c.abs())))
            .fold(0.0, f64::max))
    }

    pub fn is_closed(&self, per_axis: usize, tol: f64) -> Result<bool> {
        Ok(self.closedness_residual(per_axis)? <= tol)
    }
}
