use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::index::{basis_masks, binomial, merge_sign, rank_of_mask, MultiIndex};
use super::linalg::det_small;
use super::tables::{ContractTable, PullbackPlan, WedgeTable};
use crate::error::{Error, Result};

/// An element of `∧^k(ℝⁿ)*`, stored as coefficients over the lexicographic basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovectorRepr", into = "CovectorRepr")]
pub struct KCovector {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CovectorRepr {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<CovectorRepr> for KCovector {
    type Error = Error;

    fn try_from(r: CovectorRepr) -> Result<Self> {
        KCovector::new(r.n, r.k, r.coeffs)
    }
}

impl From<KCovector> for CovectorRepr {
    fn from(c: KCovector) -> Self {
        CovectorRepr { n: c.n, k: c.k, coeffs: c.coeffs }
    }
}

impl KCovector {
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::DegreeOutOfRange { degree: k, n });
        }
        Ok(Self { n, k, coeffs: vec![0.0; binomial(n, k)] })
    }

    pub fn new(n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        if k > n {
            return Err(Error::DegreeOutOfRange { degree: k, n });
        }
        let expected = binomial(n, k);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: coeffs.len() });
        }
        Ok(Self { n, k, coeffs })
    }

    /// The scalar `1 ∈ ∧^0`.
    pub fn one(n: usize) -> Self {
        Self { n, k: 0, coeffs: vec![1.0] }
    }

    /// The basis covector `dx^I`; `axes` are 0-based and strictly increasing.
    pub fn basis_element(n: usize, axes: &[usize]) -> Result<Self> {
        let idx = MultiIndex::new(axes, n)?;
        let mut out = Self::zero(n, idx.degree())?;
        out.coeffs[idx.rank(n)] = 1.0;
        Ok(out)
    }

    /// The 1-covector `Σ vᵢ dxⁱ`.
    pub fn from_vector(v: &[f64]) -> Self {
        Self { n: v.len(), k: 1, coeffs: v.to_vec() }
    }

    /// Volume form `dx¹ ∧ … ∧ dxⁿ`.
    pub fn volume(n: usize) -> Self {
        Self { n, k: n, coeffs: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.coeffs[idx.rank(self.n)]
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let degree = self.k + other.k;
        if degree > self.n {
            return Err(Error::DegreeOutOfRange { degree, n: self.n });
        }
        let table = WedgeTable::new(self.n, self.k, other.k);
        let mut coeffs = vec![0.0; table.out_len];
        table.apply(&self.coeffs, &other.coeffs, &mut coeffs);
        Ok(Self { n: self.n, k: degree, coeffs })
    }

    /// Interior product `a ⌟ v`, i.e. `(a ⌟ v)(w…) = a(v, w…)`.
    pub fn interior(&self, v: &[f64]) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::DegreeOutOfRange { degree: 0, n: self.n });
        }
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        let table = ContractTable::new(self.n, self.k);
        let mut coeffs = vec![0.0; table.out_len];
        table.apply_acc(&self.coeffs, v, 1.0, &mut coeffs);
        Ok(Self { n: self.n, k: self.k - 1, coeffs })
    }

    /// Hodge star for the standard metric and orientation: `⋆e_I = sign(I, Iᶜ) e_{Iᶜ}`.
    pub fn hodge_star(&self) -> Self {
        let n = self.n;
        let full = (1u32 << n) - 1;
        let mut coeffs = vec![0.0; binomial(n, n - self.k)];
        for (i, &m) in basis_masks(n, self.k).iter().enumerate() {
            let c = full & !m;
            coeffs[rank_of_mask(c, n)] = merge_sign(m, c) * self.coeffs[i];
        }
        Self { n, k: n - self.k, coeffs }
    }

    /// Grassmann inner product (the lexicographic basis is orthonormal).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        if self.k != other.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: other.k });
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn grassmann_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Multilinear evaluation `a(v₁, …, v_k)`.
    pub fn evaluate(&self, vectors: &[&[f64]]) -> Result<f64> {
        if vectors.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: vectors.len() });
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        // frame matrix, row-major n×k
        let k = self.k;
        let mut frame = vec![0.0; self.n * k];
        for (c, v) in vectors.iter().enumerate() {
            for i in 0..self.n {
                frame[i * k + c] = v[i];
            }
        }
        Ok(evaluate_frame(&self.coeffs, self.n, k, &frame))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, k: self.k, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `a(V)` for a row-major `n×k` frame `V`: `Σ_I a_I det(V[I, :])`.
pub(crate) fn evaluate_frame(coeffs: &[f64], n: usize, k: usize, frame: &[f64]) -> f64 {
    let mut minor = [0.0f64; 64];
    let mut acc = 0.0;
    for (ii, m) in basis_masks(n, k).into_iter().enumerate() {
        if coeffs[ii] == 0.0 {
            continue;
        }
        let mut r = 0;
        for row in 0..n {
            if m & (1 << row) == 0 {
                continue;
            }
            minor[r * k..r * k + k].copy_from_slice(&frame[row * k..row * k + k]);
            r += 1;
        }
        acc += coeffs[ii] * det_small(&minor, k);
    }
    acc
}

/// Pull-back `Aᵀ a` of a k-covector on ℝ^m along a linear map `A: ℝⁿ → ℝ^m`.
///
/// The coefficient of `J` is `Σ_I a_I det(A[I, J])`.
pub fn pullback_linear(a_map: &DMatrix<f64>, a: &KCovector) -> Result<KCovector> {
    let (m, n) = a_map.shape();
    if a.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: a.dim() });
    }
    if a.degree() > n {
        return Err(Error::DegreeOutOfRange { degree: a.degree(), n });
    }
    let row_major: Vec<f64> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a_map[(i, j)]).collect();
    let plan = PullbackPlan::new(m, n, a.degree());
    let mut coeffs = vec![0.0; plan.out_len()];
    plan.apply(a.coeffs(), &row_major, &mut coeffs);
    KCovector::new(n, a.degree(), coeffs)
}

impl Add for &KCovector {
    type Output = KCovector;
    fn add(self, rhs: &KCovector) -> KCovector {
        assert_eq!((self.n, self.k), (rhs.n, rhs.k), "adding covectors of different shape");
        KCovector {
            n: self.n,
            k: self.k,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &KCovector {
    type Output = KCovector;
    fn sub(self, rhs: &KCovector) -> KCovector {
        self + &(-rhs)
    }
}

impl Neg for &KCovector {
    type Output = KCovector;
    fn neg(self) -> KCovector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &KCovector {
    type Output = KCovector;
    fn mul(self, s: f64) -> KCovector {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, axes: &[usize]) -> KCovector {
        KCovector::basis_element(n, axes).unwrap()
    }

    #[test]
    fn wedge_examples() {
        let dx1 = e(2, &[0]);
        let dx2 = e(2, &[1]);
        assert_eq!(dx1.wedge(&dx2).unwrap(), e(2, &[0, 1]));
        assert_eq!(dx2.wedge(&dx1).unwrap(), e(2, &[0, 1]).scale(-1.0));
        let e12 = e(4, &[0, 1]);
        assert!(e12.wedge(&e12).unwrap().grassmann_norm() == 0.0);
    }

    #[test]
    fn wedge_errors() {
        assert!(matches!(
            e(2, &[0]).wedge(&e(3, &[0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            e(3, &[0, 1]).wedge(&e(3, &[1, 2])),
            Err(Error::DegreeOutOfRange { .. })
        ));
    }

    #[test]
    fn interior_examples() {
        let e12 = e(2, &[0, 1]);
        assert_eq!(e12.interior(&[1.0, 0.0]).unwrap(), e(2, &[1]));
        assert_eq!(e12.interior(&[0.0, 1.0]).unwrap(), e(2, &[0]).scale(-1.0));
        assert!(KCovector::one(3).interior(&[1.0, 0.0, 0.0]).is_err());
        let a = KCovector::new(3, 2, vec![0.3, -1.2, 2.0]).unwrap();
        let v = [0.7, 0.1, -0.4];
        let twice = a.interior(&v).unwrap().interior(&v).unwrap();
        assert!(twice.coeffs()[0].abs() < 1e-15);
    }

    #[test]
    fn hodge_examples() {
        assert_eq!(KCovector::one(3).hodge_star(), e(3, &[0, 1, 2]));
        assert_eq!(e(3, &[0]).hodge_star(), e(3, &[1, 2]));
        assert_eq!(e(4, &[0, 1]).hodge_star().hodge_star(), e(4, &[0, 1]));
        // ⋆dx² = dx³ ∧ dx¹ = −dx¹∧dx³ in ℝ³
        assert_eq!(e(3, &[1]).hodge_star(), e(3, &[0, 2]).scale(-1.0));
    }

    #[test]
    fn norms() {
        assert_eq!(e(2, &[0, 1]).grassmann_norm(), 1.0);
        let s = &e(4, &[0, 1]) + &e(4, &[2, 3]);
        assert!((s.grassmann_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(e(4, &[0, 1]).inner(&e(4, &[2, 3])).unwrap(), 0.0);
    }

    #[test]
    fn pullback_examples() {
        let a = KCovector::new(3, 2, vec![1.0, 2.0, 3.0]).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(pullback_linear(&id, &a).unwrap(), a);
        let two = DMatrix::<f64>::identity(2, 2) * 2.0;
        let vol = KCovector::volume(2);
        assert_eq!(pullback_linear(&two, &vol).unwrap().coeffs(), &[4.0]);
        assert!(pullback_linear(&DMatrix::<f64>::identity(2, 3), &a).is_err());
    }

    #[test]
    fn evaluate_matches_basis() {
        let a = KCovector::new(3, 2, vec![1.5, -2.0, 0.25]).unwrap();
        let ex = [1.0, 0.0, 0.0];
        let ez = [0.0, 0.0, 1.0];
        assert_eq!(a.evaluate(&[&ex, &ez]).unwrap(), -2.0);
        assert_eq!(a.evaluate(&[&ez, &ex]).unwrap(), 2.0);
    }
}
