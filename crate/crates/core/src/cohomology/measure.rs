//! Discretized measures, the reduction measure `μ(E) = ∫_E (K⋆F*ω + Σ)`,
//! and the hunting-ball search `j ≤ μ(2B) ≤ D μ(B)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ball_points;
use super::family::{density, FamilyParams};
use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridForm};
use crate::maps::{DerivativeField, SampledMap};

/// Non-negative cell weights on a grid (cell-centre quadrature).
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    domain: Arc<GridDomain>,
    weights: Vec<f64>,
    total: f64,
    clamped: f64,
}

impl DiscreteMeasure {
    /// Weights `max(ρ, 0)·|cell|` over the masked grid; the discarded
    /// negative mass is recorded.
    pub fn from_density(rho: &GridForm) -> Result<Self> {
        if rho.degree() != 0 {
            return Err(Error::DegreeOutOfRange { degree: rho.degree(), n: rho.dim() });
        }
        let dom = rho.domain().clone();
        let cell = dom.cell_volume();
        let mut clamped = 0.0;
        let weights: Vec<f64> = (0..dom.len())
            .map(|i| {
                if !dom.in_domain(i) {
                    return 0.0;
                }
                let w = rho.at(i)[0] * cell;
                if w < 0.0 {
                    clamped -= w;
                    0.0
                } else {
                    w
                }
            })
            .collect();
        let total = weights.iter().sum();
        Ok(Self { domain: dom, weights, total, clamped })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Negative mass removed by clamping.
    pub fn clamped(&self) -> f64 {
        self.clamped
    }

    /// `μ(B(center, radius))` over cell centres in the closed ball.
    pub fn ball_mass(&self, center: &[f64], radius: f64) -> f64 {
        ball_points(&self.domain, center, radius).into_iter().map(|i| self.weights[i]).sum()
    }
}

/// Negative mass above this fraction of the total is an error.
pub const NEGATIVE_MASS_LIMIT: f64 = 0.01;

/// The reduction measure of `F` with perturbation `Σ`.
pub fn reduction_measure(f: &SampledMap, df: &DerivativeField, sigma: Option<&GridForm>, params: &FamilyParams) -> Result<DiscreteMeasure> {
    let mu = DiscreteMeasure::from_density(&density(f, df, sigma, params)?)?;
    if mu.clamped > NEGATIVE_MASS_LIMIT * (mu.total + mu.clamped) {
        return Err(Error::NegativeMass { negative: mu.clamped, total: mu.total });
    }
    Ok(mu)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuntBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub mass: f64,
    pub mass_double: f64,
}

impl HuntBall {
    /// Relative violation of `j ≤ μ(2B) ≤ D μ(B)`; `≤ 0` when both hold.
    fn violation(&self, j: f64, d: f64) -> f64 {
        let low = (j - self.mass_double) / j;
        let high = if self.mass > 0.0 { (self.mass_double - d * self.mass) / (d * self.mass) } else { f64::INFINITY };
        low.max(high)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuntReport {
    pub ball: Option<HuntBall>,
    /// Least-violating candidate when the search fails.
    pub best: Option<HuntBall>,
    pub examined: usize,
}

/// Search grid-centred balls with dyadic radii `2^i h` (smallest first, then
/// centres in grid order, every `stride`-th point per axis) for the first
/// ball with `j ≤ μ(2B) ≤ D μ(B)`. Only balls whose double lies inside the
/// grid's bounding box are considered, so both masses are exact.
pub fn hunting_search(mu: &DiscreteMeasure, j: f64, d: f64, stride: usize) -> Result<HuntReport> {
    if !(j > 0.0) || !(d >= 1.0) || stride == 0 {
        return Err(Error::InvalidConfig(format!("need j > 0, D ≥ 1, stride ≥ 1 (j = {j}, D = {d})")));
    }
    if mu.total < j {
        return Err(Error::Precondition(format!("total mass {:.4e} is below j = {j}", mu.total)));
    }
    let dom = mu.domain.as_ref();
    let n = dom.dim();
    let (lo, hi) = (dom.lower().to_vec(), dom.upper());
    let mut idx = vec![0; n];
    let mut best: Option<(f64, HuntBall)> = None;
    let mut examined = 0;
    let mut radius = 2.0 * dom.h_max();
    let half_width = (0..n).map(|a| 0.5 * (hi[a] - lo[a])).fold(f64::INFINITY, f64::min);
    while 2.0 * radius <= half_width {
        for i in 0..dom.len() {
            dom.multi_index(i, &mut idx);
            if idx.iter().any(|v| v % stride != 0) {
                continue;
            }
            let c = dom.point(i);
            if (0..n).any(|a| c[a] - 2.0 * radius < lo[a] || c[a] + 2.0 * radius > hi[a]) {
                continue;
            }
            examined += 1;
            let cand = HuntBall {
                center: c.clone(),
                radius,
                mass: mu.ball_mass(&c, radius),
                mass_double: mu.ball_mass(&c, 2.0 * radius),
            };
            let v = cand.violation(j, d);
            if v <= 0.0 {
                return Ok(HuntReport { ball: Some(cand), best: None, examined });
            }
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, cand));
            }
        }
        radius *= 2.0;
    }
    Ok(HuntReport { ball: None, best: best.map(|(_, b)| b), examined })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(half: f64, res: usize) -> DiscreteMeasure {
        let dom = Arc::new(GridDomain::cube(-half, half, 2, res).unwrap());
        DiscreteMeasure::from_density(&GridForm::scalar(&dom, |_| 1.0).unwrap()).unwrap()
    }

    #[test]
    fn uniform_measure_doubles_by_two_to_the_n() {
        let mu = uniform(8.0, 128);
        let rep = hunting_search(&mu, 1.0, 8.0, 4).unwrap();
        let b = rep.ball.unwrap();
        assert!(b.mass_double >= 1.0 && b.mass_double <= 8.0 * b.mass);
        let r = mu.ball_mass(&[0.0625, 0.0625], 4.0) / mu.ball_mass(&[0.0625, 0.0625], 2.0);
        assert!((r - 4.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn corner_blob_fails_and_reports_best() {
        let dom = Arc::new(GridDomain::cube(0.0, 4.0, 2, 64).unwrap());
        let rho = GridForm::scalar(&dom, |x| if x[0] < 0.2 && x[1] < 0.2 { 100.0 } else { 0.0 }).unwrap();
        let mu = DiscreteMeasure::from_density(&rho).unwrap();
        let rep = hunting_search(&mu, 0.9 * mu.total(), 2.0, 1).unwrap();
        assert!(rep.ball.is_none() && rep.best.is_some());
        let small = uniform(1.0, 16);
        assert!(matches!(hunting_search(&small, 100.0, 8.0, 1), Err(Error::Precondition(_))));
    }
}
