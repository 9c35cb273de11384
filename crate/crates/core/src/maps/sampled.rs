use std::sync::Arc;

use rayon::prelude::*;

use super::target_form::AnalyticTargetForm;
use crate::algebra::linalg::{det_small, operator_norm};
use crate::algebra::tables::PullbackPlan;
use crate::algebra::binomial;
use crate::grid::{difference, GridDomain, GridForm, Region};
use crate::error::{Error, Result};

/// Wraps a coordinate into `[0, 1)`.
#[inline]
pub fn wrap_unit(t: f64) -> f64 {
    let w = t - t.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Flat-torus distance: per-coordinate nearest lattice translate.
pub fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs().rem_euclid(1.0);
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// A map sampled at the grid points of its domain.
#[derive(Clone, Debug)]
pub struct SampledMap {
    domain: Arc<GridDomain>,
    m: usize,
    torus: bool,
    values: Vec<f64>,
    exact_jacobian: Option<Vec<f64>>,
}

/// Per-point derivative data. Matrices are row-major `m×n`.
#[derive(Clone, Debug)]
pub struct DerivativeField {
    domain: Arc<GridDomain>,
    m: usize,
    matrices: Vec<f64>,
    op_norms: Vec<f64>,
    jacobians: Option<Vec<f64>>,
}

impl DerivativeField {
    pub fn from_matrices(domain: &Arc<GridDomain>, m: usize, matrices: Vec<f64>) -> Result<Self> {
        let n = domain.dim();
        if matrices.len() != domain.len() * m * n {
            return Err(Error::DimensionMismatch { expected: domain.len() * m * n, got: matrices.len() });
        }
        if matrices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("derivative matrix".into()));
        }
        let op_norms = matrices.par_chunks(m * n).map(|a| operator_norm(a, m, n)).collect();
        let jacobians = (m == n).then(|| matrices.par_chunks(n * n).map(|a| det_small(a, n)).collect());
        Ok(Self { domain: domain.clone(), m, matrices, op_norms, jacobians })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn matrix(&self, i: usize) -> &[f64] {
        let s = self.m * self.domain.dim();
        &self.matrices[i * s..(i + 1) * s]
    }

    pub fn op_norm(&self, i: usize) -> f64 {
        self.op_norms[i]
    }

    pub fn op_norms(&self) -> &[f64] {
        &self.op_norms
    }

    /// `J_f`, available only for equidimensional maps.
    pub fn jacobian(&self, i: usize) -> Option<f64> {
        self.jacobians.as_ref().map(|j| j[i])
    }

    pub fn jacobians(&self) -> Option<&[f64]> {
        self.jacobians.as_deref()
    }

    /// `|Df|ⁿ` as a 0-form.
    pub fn energy_density(&self) -> GridForm {
        let n = self.domain.dim() as i32;
        GridForm::from_values(&self.domain, 0, self.op_norms.iter().map(|v| v.powi(n)).collect())
            .expect("finite operator norms")
    }

    /// `J_f` as a 0-form.
    pub fn jacobian_form(&self) -> Result<GridForm> {
        let j = self.jacobians.as_ref().ok_or_else(|| Error::Unsupported("Jacobian requires m = n".into()))?;
        GridForm::from_values(&self.domain, 0, j.clone())
    }
}

impl SampledMap {
    pub fn from_values(domain: &Arc<GridDomain>, m: usize, torus: bool, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() * m {
            return Err(Error::DimensionMismatch { expected: domain.len() * m, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("map value {i}")));
        }
        if torus {
            values.iter_mut().for_each(|v| *v = wrap_unit(*v));
        }
        Ok(Self { domain: domain.clone(), m, torus, values, exact_jacobian: None })
    }

    /// Attaches analytic derivative matrices (row-major `m×n` per point).
    pub fn with_exact_jacobian(mut self, matrices: Vec<f64>) -> Result<Self> {
        let expected = self.domain.len() * self.m * self.domain.dim();
        if matrices.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: matrices.len() });
        }
        self.exact_jacobian = Some(matrices);
        Ok(self)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn target_dim(&self) -> usize {
        self.m
    }

    pub fn is_torus(&self) -> bool {
        self.torus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn has_exact_jacobian(&self) -> bool {
        self.exact_jacobian.is_some()
    }

    /// Target distance (flat-torus metric on torus targets).
    pub fn target_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.torus {
            torus_dist(a, b)
        } else {
            crate::grid::dist2(a, b).sqrt()
        }
    }

    /// Finite-difference derivative. On torus targets each neighbour value is
    /// lifted to the representative nearest the centre value first.
    pub fn derivative(&self) -> Result<DerivativeField> {
        let (m, n) = (self.m, self.domain.dim());
        let dom = self.domain.as_ref();
        let vals = &self.values;
        let torus = self.torus;
        let mut mats = vec![0.0; dom.len() * m * n];
        mats.par_chunks_mut(m * n).enumerate().for_each_init(
            || vec![0usize; n],
            |idx, (i, out)| {
                dom.multi_index(i, idx);
                for c in 0..m {
                    let center = vals[i * m + c];
                    for a in 0..n {
                        out[c * n + a] = difference(dom, idx, i, a, |j| {
                            let v = vals[j * m + c];
                            if torus {
                                v - (v - center).round()
                            } else {
                                v
                            }
                        });
                    }
                }
            },
        );
        DerivativeField::from_matrices(&self.domain, m, mats)
    }

    pub fn exact_derivative(&self) -> Option<Result<DerivativeField>> {
        self.exact_jacobian.as_ref().map(|j| DerivativeField::from_matrices(&self.domain, self.m, j.clone()))
    }

    /// Analytic derivative when attached, finite differences otherwise.
    pub fn best_derivative(&self) -> Result<DerivativeField> {
        self.exact_derivative().unwrap_or_else(|| self.derivative())
    }

    /// `f*ω` evaluated pointwise with the given derivative field.
    pub fn pullback_with(&self, df: &DerivativeField, omega: &AnalyticTargetForm) -> Result<GridForm> {
        let (m, n, k) = (self.m, self.domain.dim(), omega.k);
        if omega.m != m {
            return Err(Error::DimensionMismatch { expected: m, got: omega.m });
        }
        if k > n {
            return Err(Error::DegreeOutOfRange { degree: k, n });
        }
        let plan = PullbackPlan::new(m, n, k);
        let nin = binomial(m, k);
        let vals = &self.values;
        let mut out = vec![0.0; self.domain.len() * plan.out_len()];
        out.par_chunks_mut(plan.out_len()).enumerate().for_each_init(
            || vec![0.0; nin],
            |w, (i, o)| {
                omega.eval_into(&vals[i * m..(i + 1) * m], w);
                plan.apply(w, df.matrix(i), o);
            },
        );
        GridForm::from_values(&self.domain, k, out)
    }

    /// `f*ω` using [`best_derivative`](Self::best_derivative).
    pub fn pullback(&self, omega: &AnalyticTargetForm) -> Result<GridForm> {
        self.pullback_with(&self.best_derivative()?, omega)
    }

    /// `ω ∘ f` for a 0-form, i.e. the composition as a scalar field.
    pub fn compose_scalar(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<GridForm> {
        let m = self.m;
        let vals = &self.values;
        let v: Vec<f64> = (0..self.domain.len()).into_par_iter().map(|i| f(&vals[i * m..(i + 1) * m])).collect();
        GridForm::from_values(&self.domain, 0, v)
    }

    /// `∫_region |Df|ⁿ` (the whole masked domain when `region` is `None`).
    pub fn energy(&self, df: &DerivativeField, region: Option<&Region>) -> f64 {
        let dens = df.energy_density();
        let dens = match region {
            Some(r) => dens.restricted(r),
            None => dens,
        };
        dens.integrate_scalar().expect("0-form")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_distance_examples() {
        assert!((torus_dist(&[0.1], &[0.9]) - 0.2).abs() < 1e-12);
        assert_eq!(torus_dist(&[0.3, 0.4], &[0.3, 0.4]), 0.0);
        assert!(torus_dist(&[0.0, 0.0], &[0.5, 0.5]) <= 0.5f64.sqrt() + 1e-12);
        assert_eq!(wrap_unit(-0.25), 0.75);
        assert_eq!(wrap_unit(-1e-18), 0.0);
    }

    #[test]
    fn covering_derivative_through_wraparound() {
        let d = Arc::new(GridDomain::cube(-1.0, 1.0, 2, 32).unwrap());
        let vals: Vec<f64> = (0..d.len()).flat_map(|i| d.point(i)).map(|t| 3.0 * t).collect();
        let f = SampledMap::from_values(&d, 2, true, vals).unwrap();
        let df = f.derivative().unwrap();
        for i in 0..d.len() {
            assert!((df.op_norm(i) - 3.0).abs() < 1e-9);
            assert!((df.jacobian(i).unwrap() - 9.0).abs() < 1e-8);
        }
    }
}
