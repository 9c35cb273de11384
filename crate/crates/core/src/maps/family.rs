use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampled::{wrap_unit, SampledMap};
use crate::grid::{bump_profile, GridDomain, Region};
use crate::error::{Error, Result};

fn default_scale() -> f64 {
    1.0
}

/// Built-in analytic map families with exact derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapFamily {
    Identity { n: usize },
    /// `x ↦ A x + b` with `A` given by rows; optionally wrapped into `T^m`.
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Vec<f64>,
        #[serde(default)]
        torus: bool,
    },
    /// Planar winding map `(r, θ) ↦ (r, kθ)`, i.e. `z ↦ z^k / |z|^{k−1}`:
    /// degree `k`, distortion `|Df|²/J_f = k`.
    Winding { k: u32 },
    /// `x ↦ s·x mod ℤⁿ`.
    Covering {
        n: usize,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// `x ↦ |x|^{α−1} x`.
    RadialStretch { n: usize, alpha: f64 },
    Constant {
        n: usize,
        value: Vec<f64>,
        #[serde(default)]
        torus: bool,
    },
    /// `(x₁, x₂) ↦ (x₁², x₂)`.
    Folding,
    /// `x ↦ x + a φ(x) e₁ mod ℤⁿ`, `φ` the quartic bump on `B(c, R)`.
    BumpCovering { n: usize, amplitude: f64, center: Vec<f64>, radius: f64 },
    /// `x ↦ base + a φ(x)(x − c + d) mod ℤⁿ`; equal to `base` outside `B(c, R)`.
    EventuallyConstant {
        base: Vec<f64>,
        amplitude: f64,
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        shift: Vec<f64>,
    },
    /// `x ↦ x + a (x₁ − c₁) g(x) e₁`, `g` a Gaussian of width `w`: an
    /// anisotropic spike with distortion `1 + a` at its centre.
    Spike { n: usize, center: Vec<f64>, width: f64, amplitude: f64 },
    /// `x ↦ inner(s·x + t)`.
    Rescaled {
        inner: Box<MapFamily>,
        scale: f64,
        #[serde(default)]
        shift: Vec<f64>,
    },
}

impl MapFamily {
    /// Covering map rescaled by `r`: `x ↦ r x mod ℤⁿ`.
    pub fn covering(n: usize, r: f64) -> Self {
        MapFamily::Covering { n, scale: r }
    }

    pub fn linear(matrix: Vec<Vec<f64>>) -> Self {
        MapFamily::Linear { matrix, offset: Vec::new(), torus: false }
    }

    pub fn rescaled(&self, scale: f64, shift: &[f64]) -> Self {
        MapFamily::Rescaled { inner: Box::new(self.clone()), scale, shift: shift.to_vec() }
    }

    pub fn source_dim(&self) -> usize {
        match self {
            MapFamily::Identity { n }
            | MapFamily::Covering { n, .. }
            | MapFamily::RadialStretch { n, .. }
            | MapFamily::Constant { n, .. }
            | MapFamily::BumpCovering { n, .. }
            | MapFamily::Spike { n, .. } => *n,
            MapFamily::Linear { matrix, .. } => matrix.first().map_or(0, |r| r.len()),
            MapFamily::Winding { .. } | MapFamily::Folding => 2,
            MapFamily::EventuallyConstant { base, .. } => base.len(),
            MapFamily::Rescaled { inner, .. } => inner.source_dim(),
        }
    }

    pub fn target_dim(&self) -> usize {
        match self {
            MapFamily::Linear { matrix, .. } => matrix.len(),
            MapFamily::Constant { value, .. } => value.len(),
            MapFamily::Rescaled { inner, .. } => inner.target_dim(),
            other => other.source_dim(),
        }
    }

    pub fn is_torus(&self) -> bool {
        match self {
            MapFamily::Covering { .. } | MapFamily::BumpCovering { .. } | MapFamily::EventuallyConstant { .. } => true,
            MapFamily::Linear { torus, .. } | MapFamily::Constant { torus, .. } => *torus,
            MapFamily::Rescaled { inner, .. } => inner.is_torus(),
            _ => false,
        }
    }

    /// A compact region outside of which the map is constant, if known.
    pub fn constant_outside(&self) -> Option<Region> {
        match self {
            MapFamily::Constant { n, .. } => Some(Region::ball(&vec![0.0; *n], 0.0)),
            MapFamily::EventuallyConstant { center, radius, .. } => Some(Region::ball(center, *radius)),
            MapFamily::Rescaled { inner, scale, shift } => {
                let r = inner.constant_outside()?;
                let n = self.source_dim();
                let t = |a: usize| shift.get(a).copied().unwrap_or(0.0);
                match r {
                    Region::Ball { center, radius } => Some(Region::Ball {
                        center: (0..n).map(|a| (center[a] - t(a)) / scale).collect(),
                        radius: radius / scale.abs(),
                    }),
                    Region::Box { .. } => None,
                }
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidConfig(s.into()));
        match self {
            MapFamily::Linear { matrix, offset, .. } => {
                let n = self.source_dim();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return bad("linear map rows must be non-empty and of equal length");
                }
                if !offset.is_empty() && offset.len() != matrix.len() {
                    return bad("offset length must equal the number of rows");
                }
            }
            MapFamily::Winding { k } if *k == 0 => return bad("winding exponent must be positive"),
            MapFamily::Constant { n, .. } if *n == 0 => return bad("dimension must be positive"),
            MapFamily::BumpCovering { n, center, radius, .. } if center.len() != *n || *radius <= 0.0 => {
                return bad("bump centre/radius inconsistent")
            }
            MapFamily::EventuallyConstant { base, center, radius, shift, .. } => {
                if center.len() != base.len() || *radius <= 0.0 || !(shift.is_empty() || shift.len() == base.len()) {
                    return bad("eventually-constant parameters inconsistent");
                }
            }
            MapFamily::Spike { n, center, width, .. } if center.len() != *n || *width <= 0.0 => {
                return bad("spike centre/width inconsistent")
            }
            MapFamily::Rescaled { inner, scale, shift } => {
                if *scale == 0.0 || !(shift.is_empty() || shift.len() == inner.source_dim()) {
                    return bad("rescaling parameters inconsistent");
                }
                inner.validate()?;
            }
            _ => {}
        }
        if self.source_dim() == 0 {
            return bad("dimension must be positive");
        }
        Ok(())
    }

    /// Value (unwrapped) and row-major `m×n` Jacobian at `x`.
    pub fn eval(&self, x: &[f64], val: &mut [f64], jac: &mut [f64]) {
        let n = x.len();
        let m = val.len();
        jac.iter_mut().for_each(|v| *v = 0.0);
        let identity = |jac: &mut [f64]| (0..n).for_each(|a| jac[a * n + a] = 1.0);
        match self {
            MapFamily::Identity { .. } => {
                val.copy_from_slice(x);
                identity(jac);
            }
            MapFamily::Linear { matrix, offset, .. } => {
                for (r, row) in matrix.iter().enumerate() {
                    val[r] = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + offset.get(r).copied().unwrap_or(0.0);
                    jac[r * n..(r + 1) * n].copy_from_slice(row);
                }
            }
            MapFamily::Winding { k } => {
                // (r, θ) ↦ (r, kθ): e_r ↦ u_k, e_θ ↦ k v_k
                let r = x[0].hypot(x[1]);
                let th = x[1].atan2(x[0]);
                let kf = *k as f64;
                let (sk, ck) = (kf * th).sin_cos();
                let (s1, c1) = th.sin_cos();
                val[0] = r * ck;
                val[1] = r * sk;
                let (u, v) = ([ck, sk], [-sk, ck]);
                let (er, et) = ([c1, s1], [-s1, c1]);
                for a in 0..2 {
                    for b in 0..2 {
                        jac[a * 2 + b] = u[a] * er[b] + kf * v[a] * et[b];
                    }
                }
            }
            MapFamily::Covering { scale, .. } => {
                for a in 0..n {
                    val[a] = scale * x[a];
                    jac[a * n + a] = *scale;
                }
            }
            MapFamily::RadialStretch { alpha, .. } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 {
                    val.iter_mut().for_each(|v| *v = 0.0);
                    if *alpha == 1.0 {
                        identity(jac);
                    }
                    return;
                }
                let s = r.powf(alpha - 1.0);
                for a in 0..n {
                    val[a] = s * x[a];
                    for b in 0..n {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        jac[a * n + b] = s * (delta + (alpha - 1.0) * x[a] * x[b] / (r * r));
                    }
                }
            }
            MapFamily::Constant { value, .. } => val.copy_from_slice(value),
            MapFamily::Folding => {
                val[0] = x[0] * x[0];
                val[1] = x[1];
                jac.copy_from_slice(&[2.0 * x[0], 0.0, 0.0, 1.0]);
            }
            MapFamily::BumpCovering { amplitude, center, radius, .. } => {
                let (phi, grad) = bump_with_grad(x, center, *radius);
                val.copy_from_slice(x);
                val[0] += amplitude * phi;
                identity(jac);
                for b in 0..n {
                    jac[b] += amplitude * grad[b];
                }
            }
            MapFamily::EventuallyConstant { base, amplitude, center, radius, shift } => {
                let (phi, grad) = bump_with_grad(x, center, *radius);
                for a in 0..m {
                    let d = x[a] - center[a] + shift.get(a).copied().unwrap_or(0.0);
                    val[a] = base[a] + amplitude * phi * d;
                    for b in 0..n {
                        let delta = if a == b { phi } else { 0.0 };
                        jac[a * n + b] = amplitude * (delta + d * grad[b]);
                    }
                }
            }
            MapFamily::Spike { center, width, amplitude, .. } => {
                let r2: f64 = x.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                let g = (-r2 / (2.0 * width * width)).exp();
                let d1 = x[0] - center[0];
                val.copy_from_slice(x);
                val[0] += amplitude * d1 * g;
                identity(jac);
                for b in 0..n {
                    let dg = -g * (x[b] - center[b]) / (width * width);
                    jac[b] += amplitude * (if b == 0 { g } else { 0.0 } + d1 * dg);
                }
            }
            MapFamily::Rescaled { inner, scale, shift } => {
                let y: Vec<f64> = (0..n).map(|a| scale * x[a] + shift.get(a).copied().unwrap_or(0.0)).collect();
                inner.eval(&y, val, jac);
                jac.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }

    /// Samples the map with its analytic Jacobian attached.
    pub fn sample(&self, domain: &Arc<GridDomain>) -> Result<SampledMap> {
        self.validate()?;
        let (n, m) = (self.source_dim(), self.target_dim());
        if domain.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: domain.dim() });
        }
        let torus = self.is_torus();
        let per_point: Vec<(Vec<f64>, Vec<f64>)> = (0..domain.len())
            .into_par_iter()
            .map(|i| {
                let x = domain.point(i);
                let mut v = vec![0.0; m];
                let mut j = vec![0.0; m * n];
                self.eval(&x, &mut v, &mut j);
                if torus {
                    v.iter_mut().for_each(|t| *t = wrap_unit(*t));
                }
                (v, j)
            })
            .collect();
        let mut values = Vec::with_capacity(domain.len() * m);
        let mut jac = Vec::with_capacity(domain.len() * m * n);
        for (v, j) in per_point {
            values.extend(v);
            jac.extend(j);
        }
        SampledMap::from_values(domain, m, torus, values)?.with_exact_jacobian(jac)
    }
}

fn bump_with_grad(x: &[f64], center: &[f64], radius: f64) -> (f64, Vec<f64>) {
    let phi = bump_profile(x, center, radius);
    let t: f64 = x.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>() / (radius * radius);
    let grad = if t >= 1.0 {
        vec![0.0; x.len()]
    } else {
        x.iter().zip(center).map(|(x, c)| -8.0 * (1.0 - t).powi(3) * (x - c) / (radius * radius)).collect()
    };
    (phi, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_jacobian(f: &MapFamily, x: &[f64]) {
        let (n, m) = (f.source_dim(), f.target_dim());
        let mut v = vec![0.0; m];
        let mut j = vec![0.0; m * n];
        f.eval(x, &mut v, &mut j);
        let e = 1e-6;
        for b in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[b] += e;
            xm[b] -= e;
            let (mut vp, mut vm) = (vec![0.0; m], vec![0.0; m]);
            let mut scratch = vec![0.0; m * n];
            f.eval(&xp, &mut vp, &mut scratch);
            f.eval(&xm, &mut vm, &mut scratch);
            for a in 0..m {
                let fd = (vp[a] - vm[a]) / (2.0 * e);
                assert!((fd - j[a * n + b]).abs() < 1e-5, "{f:?} entry ({a},{b}): {fd} vs {}", j[a * n + b]);
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let fams = vec![
            MapFamily::Winding { k: 3 },
            MapFamily::RadialStretch { n: 3, alpha: 0.6 },
            MapFamily::Folding,
            MapFamily::BumpCovering { n: 2, amplitude: 0.1, center: vec![0.1, 0.0], radius: 0.8 },
            MapFamily::EventuallyConstant {
                base: vec![0.5, 0.5],
                amplitude: 1.0,
                center: vec![0.0, 0.0],
                radius: 0.9,
                shift: vec![0.1, 0.0],
            },
            MapFamily::Spike { n: 2, center: vec![0.0, 0.0], width: 0.3, amplitude: 4.0 },
            MapFamily::Winding { k: 2 }.rescaled(1.7, &[0.1, -0.2]),
            MapFamily::linear(vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, -1.0]]),
        ];
        for f in &fams {
            f.validate().unwrap();
            for x in [[0.3, -0.4], [-0.55, 0.2]] {
                let x: Vec<f64> = x.iter().copied().chain(std::iter::repeat(0.1)).take(f.source_dim()).collect();
                check_jacobian(f, &x);
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let f = MapFamily::covering(2, 4.0).rescaled(2.0, &[]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"family\":\"rescaled\""));
        assert_eq!(serde_json::from_str::<MapFamily>(&s).unwrap(), f);
        assert!(serde_json::from_str::<MapFamily>(r#"{"family":"winding","k":2,"extra":1}"#).is_err());
    }

    #[test]
    fn eventually_constant_support() {
        let f = MapFamily::EventuallyConstant {
            base: vec![0.2, 0.3],
            amplitude: 1.0,
            center: vec![0.0, 0.0],
            radius: 0.5,
            shift: vec![],
        };
        let mut v = [0.0; 2];
        let mut j = [0.0; 4];
        f.eval(&[0.6, 0.0], &mut v, &mut j);
        assert_eq!(v, [0.2, 0.3]);
        assert!(j.iter().all(|x| *x == 0.0));
        assert!(f.constant_outside().is_some());
        assert!(MapFamily::covering(2, 1.0).constant_outside().is_none());
    }
}
