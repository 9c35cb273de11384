//! The limit map `L` on harmonic classes and its point evaluation `Φ`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sequence::{normalized_pullback, pair_with_test, HarmonicBasis, NormalizedSequence, TestDictionary};
use crate::algebra::{binomial, MultiIndex};
use crate::error::{Error, Result};
use crate::grid::{Exponent, GridDomain, GridForm, Region};
use crate::KCovector;

#[derive(Clone, Debug)]
pub struct LimitClass {
    pub class: MultiIndex,
    /// Estimated `L(c)` on the limit grid.
    pub form: GridForm,
    /// Dictionary-pairing increments `max_η |P_j − P_{j−1}|`, `j ≥ 1`.
    pub cauchy: Vec<f64>,
    /// `‖d L(c)‖_{L¹(0.8𝔹)} / ‖L(c)‖_{L¹(0.8𝔹)}` (0 for top degree or zero forms).
    pub closedness: f64,
}

#[derive(Clone, Debug)]
pub struct LimitMap {
    pub n: usize,
    pub m: usize,
    pub grid: Arc<GridDomain>,
    pub classes: Vec<LimitClass>,
}

impl LimitMap {
    pub fn class(&self, axes: &[usize]) -> Option<&LimitClass> {
        self.classes.iter().find(|c| c.class.indices() == axes)
    }
}

/// Average `fine` over the cells of the coarse `grid` (a box mollifier).
pub fn block_average(fine: &GridForm, grid: &Arc<GridDomain>) -> Result<GridForm> {
    let fd = fine.domain();
    let nc = fine.ncoeffs();
    let mut sum = vec![0.0; grid.len() * nc];
    let mut count = vec![0usize; grid.len()];
    let mut x = vec![0.0; fd.dim()];
    for i in 0..fd.len() {
        fd.point_into(i, &mut x);
        if let Some(c) = grid.locate(&x) {
            count[c] += 1;
            for (s, v) in sum[c * nc..(c + 1) * nc].iter_mut().zip(fine.at(i)) {
                *s += v;
            }
        }
    }
    if count.iter().enumerate().any(|(c, &k)| k == 0 && grid.in_domain(c)) {
        return Err(Error::InvalidGrid("limit grid is finer than the sequence grid".into()));
    }
    for (c, &k) in count.iter().enumerate() {
        if k > 0 {
            sum[c * nc..(c + 1) * nc].iter_mut().for_each(|s| *s /= k as f64);
        }
    }
    GridForm::from_values(grid, fine.degree(), sum)
}

/// Estimate `L(c)` for every harmonic class of degree `≤ n` from the last
/// member, block-averaged onto a `limit_res`-grid on `𝔹ⁿ`, with Cauchy
/// diagnostics from the standard dictionaries.
pub fn build_limit_map(seq: &NormalizedSequence, basis: &HarmonicBasis, limit_res: usize) -> Result<LimitMap> {
    let n = seq.dim();
    let last = seq.members.last().ok_or(Error::InvalidConfig("empty sequence".into()))?;
    let grid = Arc::new(GridDomain::ball(&vec![0.0; n], 1.0, limit_res)?);
    let inner = Region::ball(&vec![0.0; n], 0.8);
    let classes = basis
        .classes
        .iter()
        .filter(|(c, _)| c.degree() <= n)
        .map(|(class, alpha)| {
            let k = class.degree();
            let dict = TestDictionary::standard(n, n - k);
            let mut prev: Option<Vec<f64>> = None;
            let mut cauchy = Vec::new();
            for mem in &seq.members {
                let g = normalized_pullback(mem, alpha)?;
                let p: Vec<f64> = dict.entries.par_iter().map(|e| pair_with_test(&g, e)).collect::<Result<_>>()?;
                if let Some(q) = &prev {
                    cauchy.push(p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
                }
                prev = Some(p);
            }
            let form = block_average(&normalized_pullback(last, alpha)?, &grid)?;
            let closedness = if k < n {
                let size = form.restricted(&inner).lp_norm(Exponent::Finite(1.0));
                if size > 0.0 {
                    form.exterior_derivative()?.restricted(&inner).lp_norm(Exponent::Finite(1.0)) / size
                } else {
                    0.0
                }
            } else {
                0.0
            };
            Ok(LimitClass { class: class.clone(), form, cauchy, closedness })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitMap { n, m: basis.m, grid, classes })
}

/// `Φ(c) = (L c)_{x₀}` at the grid point minimizing the wedge defect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi {
    pub x0: Vec<f64>,
    /// Largest relative defect `|Lc∧Lc' − L(c∧c')| / scale` over basis pairs at `x₀`.
    pub defect: f64,
    pub values: Vec<(Vec<usize>, KCovector)>,
    /// Rank of the `2ⁿ × (#classes)` matrix of `Φ`.
    pub rank: usize,
}

impl Phi {
    pub fn get(&self, axes: &[usize]) -> Option<&KCovector> {
        self.values.iter().find(|(a, _)| a == axes).map(|(_, v)| v)
    }
}

/// `(i, l, target, sign)` with `c_i ∧ c_l = sign c_target` (target `None`
/// when the product vanishes).
type Product = (usize, usize, Option<usize>, f64);

/// Product structure of the basis.
fn products(l: &LimitMap) -> Result<Vec<Product>> {
    let mut out = Vec::new();
    for (i, a) in l.classes.iter().enumerate() {
        for (j, b) in l.classes.iter().enumerate().skip(i) {
            let (ka, kb) = (a.class.degree(), b.class.degree());
            if ka == 0 || kb == 0 || ka + kb > l.n {
                continue;
            }
            if ka + kb > l.m {
                out.push((i, j, None, 0.0));
                continue;
            }
            let w = KCovector::basis_element(l.m, a.class.indices())?.wedge(&KCovector::basis_element(l.m, b.class.indices())?)?;
            let hit = w.coeffs().iter().position(|c| *c != 0.0);
            match hit {
                Some(slot) => {
                    let target = crate::algebra::basis(l.m, ka + kb)[slot].clone();
                    let t = l.classes.iter().position(|c| c.class == target);
                    out.push((i, j, t, w.coeffs()[slot]));
                }
                None => out.push((i, j, None, 0.0)),
            }
        }
    }
    Ok(out)
}

/// Pick `x₀` minimizing the wedge-compatibility defect; fails when even the
/// best point exceeds `tol`.
pub fn point_evaluate_phi(l: &LimitMap, tol: f64) -> Result<Phi> {
    let n = l.n;
    let prods = products(l)?;
    let dom = l.grid.clone();
    let at = |i: usize, c: usize| -> KCovector { l.classes[c].form.covector_at(i) };
    let defect_at = |i: usize| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &(a, b, t, sign) in &prods {
            let (va, vb) = (at(i, a), at(i, b));
            let lhs = va.wedge(&vb)?;
            let rhs = match t {
                Some(t) => at(i, t).scale(sign),
                None => KCovector::zero(n, lhs.degree())?,
            };
            let scale = (va.grassmann_norm() * vb.grassmann_norm()).max(rhs.grassmann_norm());
            let diff = (&lhs - &rhs).grassmann_norm();
            if scale > 1e-300 {
                worst = worst.max(diff / scale);
            }
        }
        Ok(worst)
    };
    let best = (0..dom.len())
        .into_par_iter()
        .filter(|&i| dom.in_domain(i))
        .map(|i| defect_at(i).map(|d| (d, i)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by(|a, b| a.partial_cmp(b).expect("finite defects"))
        .ok_or(Error::InvalidGrid("empty limit grid".into()))?;
    let (defect, i0) = best;
    if defect > tol {
        return Err(Error::Precondition(format!("smallest wedge defect {defect:.3e} exceeds {tol:.3e}")));
    }
    let values: Vec<(Vec<usize>, KCovector)> = l.classes.iter().enumerate().map(|(c, cl)| (cl.class.indices().to_vec(), at(i0, c))).collect();
    // graded matrix: rows ∧⁰ ⊕ … ⊕ ∧ⁿ
    let offsets: Vec<usize> = (0..=n).scan(0, |acc, k| {
        let o = *acc;
        *acc += binomial(n, k);
        Some(o)
    }).collect();
    let mut mat = nalgebra::DMatrix::zeros(1 << n, values.len());
    for (col, (_, v)) in values.iter().enumerate() {
        for (r, c) in v.coeffs().iter().enumerate() {
            mat[(offsets[v.degree()] + r, col)] = *c;
        }
    }
    let svd = mat.svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-8 * smax).count();
    Ok(Phi { x0: dom.point(i0), defect, values, rank })
}
