//! Comass norm: the supremum of `a(v₁, …, v_k)` over orthonormal k-frames.
//!
//! The problem is a non-convex maximization over the Stiefel manifold, so two
//! independent estimates are produced: multi-start Riemannian gradient ascent
//! with QR retraction, and a pure random-frame sampling oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::covector::{evaluate_frame, KCovector};
use super::index::basis_masks;
use super::linalg::{det_small, orthonormalize_columns};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComassConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    /// Number of random frames drawn by the sampling oracle.
    pub sample_budget: usize,
    pub seed: u64,
}

impl Default for ComassConfig {
    fn default() -> Self {
        Self { restarts: 16, max_iters: 400, step_tol: 1e-12, sample_budget: 20_000, seed: 0 }
    }
}

impl ComassConfig {
    /// Cheap configuration for per-point evaluation inside grid loops.
    pub fn fast() -> Self {
        Self { restarts: 4, max_iters: 200, step_tol: 1e-10, sample_budget: 64, seed: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 || self.sample_budget == 0 {
            return Err(Error::InvalidConfig("comass budgets must be positive".into()));
        }
        if !(self.step_tol > 0.0) {
            return Err(Error::InvalidConfig("comass step tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComassResult {
    /// Best value reached by local ascent; this is the reported comass.
    pub ascent: f64,
    /// Best value among the raw random frames.
    pub sampled: f64,
}

impl ComassResult {
    pub fn value(&self) -> f64 {
        self.ascent
    }
}

pub fn comass_norm(a: &KCovector, cfg: &ComassConfig) -> Result<ComassResult> {
    cfg.validate()?;
    let (n, k) = (a.dim(), a.degree());
    if k == 0 || k > n {
        return Err(Error::DegreeOutOfRange { degree: k, n });
    }
    let coeffs = a.coeffs();
    if coeffs.iter().all(|c| *c == 0.0) {
        return Ok(ComassResult { ascent: 0.0, sampled: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let masks = basis_masks(n, k);

    // Sampling oracle.
    let mut sampled = 0.0f64;
    let mut frame = vec![0.0; n * k];
    for _ in 0..cfg.sample_budget {
        random_frame(&mut rng, &mut frame, n, k);
        sampled = sampled.max(evaluate_frame(coeffs, n, k, &frame).abs());
    }

    // Ascent, started from the best coordinate frame and from random frames.
    let best_axis = coeffs
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut ascent = 0.0f64;
    for restart in 0..cfg.restarts {
        if restart == 0 {
            frame.iter_mut().for_each(|x| *x = 0.0);
            let mask = masks[best_axis];
            let mut c = 0;
            for row in 0..n {
                if mask & (1 << row) != 0 {
                    frame[row * k + c] = 1.0;
                    c += 1;
                }
            }
        } else {
            random_frame(&mut rng, &mut frame, n, k);
        }
        ascent = ascent.max(ascend(coeffs, n, k, &mut frame, cfg));
    }
    Ok(ComassResult { ascent, sampled })
}

fn random_frame(rng: &mut ChaCha8Rng, frame: &mut [f64], n: usize, k: usize) {
    loop {
        frame.iter_mut().for_each(|x| *x = StandardNormal.sample(rng));
        if orthonormalize_columns(frame, n, k) {
            return;
        }
    }
}

/// Gradient of `V ↦ a(V)` with respect to the frame entries (row-major n×k).
fn gradient(coeffs: &[f64], n: usize, k: usize, frame: &[f64], grad: &mut [f64]) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut minor = [0.0f64; 64];
    let mut sub = [0.0f64; 64];
    for (ii, mask) in basis_masks(n, k).into_iter().enumerate() {
        if coeffs[ii] == 0.0 {
            continue;
        }
        let rows: Vec<usize> = (0..n).filter(|r| mask & (1 << r) != 0).collect();
        for (r, &row) in rows.iter().enumerate() {
            minor[r * k..r * k + k].copy_from_slice(&frame[row * k..row * k + k]);
        }
        // cofactor expansion: ∂det/∂m_rc = (-1)^{r+c} det(minor without r, c)
        for r in 0..k {
            for c in 0..k {
                let mut t = 0;
                for rr in (0..k).filter(|&rr| rr != r) {
                    for cc in (0..k).filter(|&cc| cc != c) {
                        sub[t] = minor[rr * k + cc];
                        t += 1;
                    }
                }
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                grad[rows[r] * k + c] += coeffs[ii] * sign * det_small(&sub, k - 1);
            }
        }
    }
}

fn ascend(coeffs: &[f64], n: usize, k: usize, frame: &mut [f64], cfg: &ComassConfig) -> f64 {
    let mut value = evaluate_frame(coeffs, n, k, frame);
    if value < 0.0 {
        // flip orientation so that we maximize a positive pairing
        for i in 0..n {
            frame[i * k] = -frame[i * k];
        }
        value = -value;
    }
    let mut grad = vec![0.0; n * k];
    let mut trial = vec![0.0; n * k];
    let mut step: f64 = 0.5;
    for _ in 0..cfg.max_iters {
        gradient(coeffs, n, k, frame, &mut grad);
        // project onto the tangent space of the Stiefel manifold: G - V sym(VᵀG)
        let mut vtg = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                vtg[a * k + b] = (0..n).map(|i| frame[i * k + a] * grad[i * k + b]).sum();
            }
        }
        for i in 0..n {
            for b in 0..k {
                let corr: f64 = (0..k)
                    .map(|a| frame[i * k + a] * 0.5 * (vtg[a * k + b] + vtg[b * k + a]))
                    .sum();
                grad[i * k + b] -= corr;
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < cfg.step_tol {
            break;
        }
        let mut improved = false;
        step = (step * 2.0).min(4.0);
        while step * gnorm > cfg.step_tol {
            for (t, (v, g)) in trial.iter_mut().zip(frame.iter().zip(&grad)) {
                *t = v + step * g;
            }
            if orthonormalize_columns(&mut trial, n, k) {
                let tv = evaluate_frame(coeffs, n, k, &trial);
                if tv > value {
                    frame.copy_from_slice(&trial);
                    value = tv;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposable_and_one_forms() {
        let cfg = ComassConfig::default();
        let e12 = KCovector::basis_element(4, &[0, 1]).unwrap();
        assert!((comass_norm(&e12, &cfg).unwrap().value() - 1.0).abs() < 1e-12);
        let v = KCovector::from_vector(&[3.0, -4.0, 0.0]);
        assert!((comass_norm(&v, &cfg).unwrap().value() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn symplectic_form_has_unit_comass() {
        let a = &KCovector::basis_element(4, &[0, 1]).unwrap()
            + &KCovector::basis_element(4, &[2, 3]).unwrap();
        let r = comass_norm(&a, &ComassConfig::default()).unwrap();
        assert!((r.ascent - 1.0).abs() < 1e-9, "{r:?}");
        assert!(r.sampled <= 1.0 + 1e-12);
    }

    #[test]
    fn degenerate_config_is_rejected() {
        let cfg = ComassConfig { sample_budget: 0, ..ComassConfig::default() };
        let a = KCovector::basis_element(3, &[0]).unwrap();
        assert!(matches!(comass_norm(&a, &cfg), Err(Error::InvalidConfig(_))));
        assert!(comass_norm(&KCovector::one(3), &ComassConfig::default()).is_err());
    }
}
