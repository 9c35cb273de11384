//! Precomputed index tables for the per-point kernels used by grid fields.

use super::index::{basis_masks, binomial, merge_sign, rank_of_mask};
use super::linalg::det_small;

/// Nonzero structure constants of `∧^k × ∧^l → ∧^{k+l}` on ℝⁿ.
#[derive(Clone, Debug)]
pub(crate) struct WedgeTable {
    pub out_len: usize,
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl WedgeTable {
    pub fn new(n: usize, k: usize, l: usize) -> Self {
        let a = basis_masks(n, k);
        let b = basis_masks(n, l);
        let mut entries = Vec::new();
        if k + l <= n {
            for (ia, &ma) in a.iter().enumerate() {
                for (ib, &mb) in b.iter().enumerate() {
                    let s = merge_sign(ma, mb);
                    if s != 0.0 {
                        entries.push((ia, ib, rank_of_mask(ma | mb, n), s));
                    }
                }
            }
        }
        Self { out_len: binomial(n, k + l), entries }
    }

    #[inline]
    pub fn apply(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(ia, ib, io, s) in &self.entries {
            out[io] += s * a[ia] * b[ib];
        }
    }
}

/// Interior product `∧^k × ℝⁿ → ∧^{k-1}`: entries `(in, axis, out, sign)`.
#[derive(Clone, Debug)]
pub(crate) struct ContractTable {
    pub out_len: usize,
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl ContractTable {
    pub fn new(n: usize, k: usize) -> Self {
        let mut entries = Vec::new();
        for (ii, &m) in basis_masks(n, k).iter().enumerate() {
            let mut pos = 0;
            for axis in 0..n {
                if m & (1 << axis) == 0 {
                    continue;
                }
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                entries.push((ii, axis, rank_of_mask(m & !(1 << axis), n), sign));
                pos += 1;
            }
        }
        Self { out_len: binomial(n, k.saturating_sub(1)), entries }
    }

    #[inline]
    pub fn apply_acc(&self, a: &[f64], v: &[f64], weight: f64, out: &mut [f64]) {
        for &(ii, axis, io, s) in &self.entries {
            out[io] += weight * s * a[ii] * v[axis];
        }
    }
}

/// Pull-back of `k`-covectors on ℝ^m along an `m×n` matrix.
#[derive(Clone, Debug)]
pub(crate) struct PullbackPlan {
    m: usize,
    n: usize,
    k: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl PullbackPlan {
    pub fn new(m: usize, n: usize, k: usize) -> Self {
        let lists = |dim: usize| -> Vec<Vec<usize>> {
            basis_masks(dim, k)
                .into_iter()
                .map(|mask| (0..dim).filter(|b| mask & (1 << b) != 0).collect())
                .collect()
        };
        Self { m, n, k, rows: lists(m), cols: lists(n) }
    }

    pub fn out_len(&self) -> usize {
        self.cols.len()
    }

    /// `out_J = Σ_I a_I det(A[I, J])` with `A` row-major `m×n`.
    pub fn apply(&self, a: &[f64], mat: &[f64], out: &mut [f64]) {
        let (m, n, k) = (self.m, self.n, self.k);
        debug_assert_eq!(mat.len(), m * n);
        if k == 0 {
            out[0] = a[0];
            return;
        }
        if k == 1 {
            for j in 0..n {
                out[j] = (0..m).map(|i| a[i] * mat[i * n + j]).sum();
            }
            return;
        }
        let mut minor = [0.0f64; 64];
        for (oj, cols) in self.cols.iter().enumerate() {
            let mut acc = 0.0;
            for (ii, rows) in self.rows.iter().enumerate() {
                if a[ii] == 0.0 {
                    continue;
                }
                for (r, &row) in rows.iter().enumerate() {
                    for (c, &col) in cols.iter().enumerate() {
                        minor[r * k + c] = mat[row * n + col];
                    }
                }
                acc += a[ii] * det_small(&minor, k);
            }
            out[oj] = acc;
        }
    }
}
