use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampled::{DerivativeField, SampledMap};
use super::target_form::AnalyticTargetForm;
use crate::algebra::{comass_norm, ComassConfig, KCovector};
use crate::error::{Error, Result};
use crate::grid::GridForm;

/// Which distortion inequality to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionKind {
    /// `|Df|ⁿ ≤ K J_f`
    Qr,
    /// `|Df|ⁿ ≤ K J_f + distⁿ(f, y₀) Σ`
    QrValue,
    /// `|ω_F|_M |DF|ⁿ ≤ K ⋆F*ω`
    QrCurve,
    /// `|ω_F|_M |DF|ⁿ ≤ K ⋆F*ω + Σ`
    QrCurveSigma,
    /// `|ω_F|_M |DF|ⁿ ≤ K ⋆F*ω + distⁿ(F, y₀) Σ`
    QrCurveValue,
}

impl DistortionKind {
    fn is_curve(self) -> bool {
        matches!(self, Self::QrCurve | Self::QrCurveSigma | Self::QrCurveValue)
    }

    fn uses_value(self) -> bool {
        matches!(self, Self::QrValue | Self::QrCurveValue)
    }

    fn uses_sigma(self) -> bool {
        matches!(self, Self::QrValue | Self::QrCurveSigma | Self::QrCurveValue)
    }
}

#[derive(Clone, Debug)]
pub struct DistortionParams {
    pub k: f64,
    pub sigma: Option<GridForm>,
    pub y0: Option<Vec<f64>>,
    pub omega: Option<AnalyticTargetForm>,
    pub comass: ComassConfig,
}

impl DistortionParams {
    pub fn with_k(k: f64) -> Self {
        Self { k, sigma: None, y0: None, omega: None, comass: ComassConfig::fast() }
    }
}

/// A scalar field defined only on part of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialField {
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
}

impl PartialField {
    /// `(min, max)` over defined points accepted by `keep`.
    pub fn extremes(&self, mut keep: impl FnMut(usize) -> bool) -> Option<(f64, f64)> {
        let mut out: Option<(f64, f64)> = None;
        for (i, (v, d)) in self.values.iter().zip(&self.defined).enumerate() {
            if *d && keep(i) {
                out = Some(match out {
                    None => (*v, *v),
                    Some((lo, hi)) => (lo.min(*v), hi.max(*v)),
                });
            }
        }
        out
    }

    /// Undefined points read as zero.
    pub fn to_form(&self, like: &GridForm) -> GridForm {
        let v = self.values.iter().zip(&self.defined).map(|(v, d)| if *d { *v } else { 0.0 }).collect();
        GridForm::from_values(like.domain(), 0, v).expect("finite field")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
    /// Fraction of in-domain points with residual ≤ 0.
    pub satisfied: f64,
}

impl Quantiles {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.collect();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return Self { count: 0, min: 0.0, median: 0.0, q90: 0.0, max: 0.0, satisfied: 1.0 };
        }
        let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
        Self {
            count: v.len(),
            min: v[0],
            median: at(0.5),
            q90: at(0.9),
            max: v[v.len() - 1],
            satisfied: v.iter().filter(|r| **r <= 0.0).count() as f64 / v.len() as f64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DistortionReport {
    pub kind: DistortionKind,
    /// LHS − RHS per point; `≤ 0` means satisfied.
    pub residual: GridForm,
    /// Smallest `K` making the inequality hold with no `Σ` term.
    pub minimal_k: PartialField,
    /// Smallest admissible `Σ` for the given `K` (value kinds: divided by `distⁿ`).
    pub minimal_sigma: PartialField,
    /// Curve kinds: LHS with the comass norm and with the Grassmann norm.
    pub lhs_comass: Option<GridForm>,
    pub lhs_grassmann: Option<GridForm>,
    /// Smallest comass of `ω` over the sampled image (curve kinds).
    pub min_comass: Option<f64>,
    pub summary: Quantiles,
}

/// Comass of `ω` at every sampled image point, with fast paths for the
/// decomposable degrees and constant forms.
pub fn comass_field(f: &SampledMap, omega: &AnalyticTargetForm, cfg: &ComassConfig) -> Result<Vec<f64>> {
    let (m, k) = (omega.m, omega.k);
    let len = f.domain().len();
    let exact = |a: &KCovector| -> Result<f64> {
        if k == 1 || k + 1 >= m {
            Ok(a.grassmann_norm())
        } else {
            Ok(comass_norm(a, cfg)?.value())
        }
    };
    if let Some(a) = omega.as_constant() {
        return Ok(vec![exact(&a)?; len]);
    }
    (0..len).into_par_iter().map(|i| exact(&omega.eval(f.value(i)))).collect()
}

pub fn distortion_check(
    f: &SampledMap,
    df: &DerivativeField,
    kind: DistortionKind,
    params: &DistortionParams,
) -> Result<DistortionReport> {
    let dom = f.domain().clone();
    let n = dom.dim();
    let len = dom.len();
    if !(params.k >= 0.0) {
        return Err(Error::InvalidConfig("K must be non-negative".into()));
    }
    // ⋆F*ω (curve kinds) or J_f, and the comass weight on |DF|ⁿ
    let (orient, weight, grassmann, min_comass): (Vec<f64>, Vec<f64>, Option<Vec<f64>>, Option<f64>) =
        if kind.is_curve() {
            let omega = params.omega.as_ref().ok_or(Error::MissingParameter("omega"))?;
            if omega.k != n || omega.m != f.target_dim() {
                return Err(Error::DimensionMismatch { expected: n, got: omega.k });
            }
            let closed = omega.closedness_residual(5)?;
            if closed > 1e-8 {
                return Err(Error::Precondition(format!("omega is not closed (residual {closed:.3e})")));
            }
            let comass = comass_field(f, omega, &params.comass)?;
            let min = comass.iter().zip(dom.mask()).filter(|(_, m)| **m).map(|(c, _)| *c).fold(f64::INFINITY, f64::min);
            if !(min > 1e-12) {
                return Err(Error::VanishingForm(format!("comass {min:.3e} on the sampled image")));
            }
            let pulled = f.pullback_with(df, omega)?;
            let grass: Vec<f64> = (0..len).map(|i| omega.eval(f.value(i)).grassmann_norm()).collect();
            (pulled.values().to_vec(), comass, Some(grass), Some(min))
        } else {
            if f.target_dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: f.target_dim() });
            }
            (df.jacobians().expect("square derivative").to_vec(), vec![1.0; len], None, None)
        };

    let sigma = if kind.uses_sigma() {
        let s = params.sigma.as_ref().ok_or(Error::MissingParameter("sigma"))?;
        if s.degree() != 0 || !s.domain().same_grid(&dom) {
            return Err(Error::InvalidConfig("sigma must be a 0-form on the map's grid".into()));
        }
        Some(s.values())
    } else {
        None
    };
    let dist_n: Option<Vec<f64>> = if kind.uses_value() {
        let y0 = params.y0.as_ref().ok_or(Error::MissingParameter("y0"))?;
        if y0.len() != f.target_dim() {
            return Err(Error::DimensionMismatch { expected: f.target_dim(), got: y0.len() });
        }
        Some((0..len).map(|i| f.target_dist(f.value(i), y0).powi(n as i32)).collect())
    } else {
        None
    };

    let k = params.k;
    let mut residual = vec![0.0; len];
    let mut min_k = PartialField { values: vec![0.0; len], defined: vec![false; len] };
    let mut min_s = PartialField { values: vec![0.0; len], defined: vec![false; len] };
    let mut lhs_c = vec![0.0; len];
    for i in 0..len {
        let energy = df.op_norm(i).powi(n as i32);
        let lhs = weight[i] * energy;
        lhs_c[i] = lhs;
        let extra = match (sigma, &dist_n) {
            (Some(s), Some(d)) => d[i] * s[i],
            (Some(s), None) => s[i],
            _ => 0.0,
        };
        residual[i] = lhs - (k * orient[i] + extra);
        if orient[i] > 0.0 {
            min_k.values[i] = lhs / orient[i];
            min_k.defined[i] = true;
        }
        let excess = (lhs - k * orient[i]).max(0.0);
        match &dist_n {
            Some(d) if d[i] > 0.0 => {
                min_s.values[i] = excess / d[i];
                min_s.defined[i] = true;
            }
            Some(_) => {}
            None => {
                min_s.values[i] = excess;
                min_s.defined[i] = true;
            }
        }
    }
    let summary = Quantiles::of(residual.iter().zip(dom.mask()).filter(|(_, m)| **m).map(|(r, _)| *r));
    let lhs_grassmann = grassmann.map(|g| {
        let v = (0..len).map(|i| g[i] * df.op_norm(i).powi(n as i32)).collect();
        GridForm::from_values(&dom, 0, v).expect("finite")
    });
    Ok(DistortionReport {
        kind,
        residual: GridForm::from_values(&dom, 0, residual)?,
        minimal_k: min_k,
        minimal_sigma: min_s,
        lhs_comass: kind.is_curve().then(|| GridForm::from_values(&dom, 0, lhs_c).expect("finite")),
        lhs_grassmann,
        min_comass,
        summary,
    })
}
