//! Normalization `A(F, Σ)` and membership in the family 𝔉(K, D, ω).

use serde::{Deserialize, Serialize};

use crate::algebra::ComassConfig;
use crate::error::{Error, Result};
use crate::grid::{GridForm, Region};
use crate::maps::{distortion_check, AnalyticTargetForm, DerivativeField, DistortionKind, DistortionParams, SampledMap};

/// Parameters of the family 𝔉: distortion `K`, doubling/mass constant `D`
/// and the calibrating `n`-form `ω` on the target.
#[derive(Clone, Debug)]
pub struct FamilyParams {
    pub k: f64,
    pub d: f64,
    pub omega: AnalyticTargetForm,
    pub comass: ComassConfig,
}

impl FamilyParams {
    pub fn new(k: f64, d: f64, omega: AnalyticTargetForm) -> Result<Self> {
        if !(k >= 1.0) || !(d >= 1.0) {
            return Err(Error::InvalidConfig(format!("need K ≥ 1 and D ≥ 1, got K = {k}, D = {d}")));
        }
        Ok(Self { k, d, omega, comass: ComassConfig::fast() })
    }

    /// The volume form of `Tⁿ` with `D = 2ⁿ⁺¹`.
    pub fn torus_volume(n: usize, k: f64) -> Self {
        let d = 2f64.powi(n as i32 + 1);
        Self::new(k, d, AnalyticTargetForm::volume(n, true)).expect("valid constants")
    }
}

/// `⋆F*ω` as a scalar field.
pub fn star_pullback(f: &SampledMap, df: &DerivativeField, omega: &AnalyticTargetForm) -> Result<GridForm> {
    let n = f.domain().dim();
    if omega.k != n {
        return Err(Error::DegreeOutOfRange { degree: omega.k, n });
    }
    let top = f.pullback_with(df, omega)?;
    GridForm::from_values(f.domain(), 0, top.into_values())
}

/// The density `K ⋆F*ω + Σ`.
pub fn density(f: &SampledMap, df: &DerivativeField, sigma: Option<&GridForm>, params: &FamilyParams) -> Result<GridForm> {
    let mut rho = star_pullback(f, df, &params.omega)?.scale(params.k);
    if let Some(s) = sigma {
        if s.degree() != 0 || !s.domain().same_grid(f.domain()) {
            return Err(Error::InvalidConfig("sigma must be a 0-form on the map's grid".into()));
        }
        rho = rho.add(s)?;
    }
    Ok(rho)
}

/// `A(F, Σ) = ∫_{𝔹ⁿ} (K ⋆F*ω + Σ)`.
pub fn normalizing_factor(f: &SampledMap, df: &DerivativeField, sigma: Option<&GridForm>, params: &FamilyParams) -> Result<f64> {
    let n = f.domain().dim();
    density(f, df, sigma, params)?.restricted(&Region::unit_ball(n)).integrate_scalar()
}

/// One membership condition; `margin ≥ 0` exactly when it passes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub pass: bool,
    pub margin: f64,
}

impl Condition {
    fn from_margin(margin: f64) -> Self {
        Self { pass: margin >= 0.0, margin }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    /// (i) `|ω_F|_M |DF|ⁿ ≤ K ⋆F*ω + Σ` on the grid; margin `−max residual`.
    pub distortion: Condition,
    /// (ii) `0 < ∫_{𝔹₂} ≤ D ∫_{𝔹}`; margin `min(∫_{𝔹₂}, D∫_𝔹 − ∫_{𝔹₂})`.
    pub doubling: Condition,
    /// (iii) `inf_{𝔹₂} |ω_F|_M ≥ 1/D`.
    pub comass: Condition,
    /// (iv) `∫_{𝔹₂} |Σ| ≤ D`.
    pub sigma_mass: Condition,
    pub a: f64,
    pub a_double: f64,
}

impl FamilyReport {
    pub fn all_pass(&self) -> bool {
        self.distortion.pass && self.doubling.pass && self.comass.pass && self.sigma_mass.pass
    }
}

/// Relative slack allowed in (i) for rounding in exact-derivative samples.
const DISTORTION_TOL: f64 = 1e-9;

/// Check `F ∈ 𝔉(K, D, ω)` on a grid covering `𝔹ⁿ₂`.
pub fn family_check(f: &SampledMap, df: &DerivativeField, sigma: Option<&GridForm>, params: &FamilyParams) -> Result<FamilyReport> {
    let dom = f.domain();
    let n = dom.dim();
    let b2 = Region::ball(&vec![0.0; n], 2.0);
    if !dom.region().contains_region(&b2) {
        return Err(Error::NotContained("the map must be sampled on the ball of radius 2".into()));
    }
    let kind = if sigma.is_some() { DistortionKind::QrCurveSigma } else { DistortionKind::QrCurve };
    let dp = DistortionParams {
        k: params.k,
        sigma: sigma.cloned(),
        y0: None,
        omega: Some(params.omega.clone()),
        comass: params.comass.clone(),
    };
    let (distortion, comass) = match distortion_check(f, df, kind, &dp) {
        Ok(rep) => {
            let inner = dom.restricted(&b2);
            let lhs = rep.lhs_comass.as_ref().expect("curve kind");
            let mut worst = f64::NEG_INFINITY;
            let mut scale: f64 = 0.0;
            for i in (0..dom.len()).filter(|&i| inner.in_domain(i)) {
                worst = worst.max(rep.residual.at(i)[0]);
                scale = scale.max(lhs.at(i)[0]);
            }
            let dist = Condition::from_margin(-(worst - DISTORTION_TOL * scale.max(1.0)));
            let comass = Condition::from_margin(rep.min_comass.unwrap_or(0.0) - 1.0 / params.d);
            (dist, comass)
        }
        Err(Error::VanishingForm(_)) => (
            Condition::from_margin(0.0),
            Condition::from_margin(-1.0 / params.d),
        ),
        Err(e) => return Err(e),
    };
    let rho = density(f, df, sigma, params)?;
    let a = rho.restricted(&Region::unit_ball(n)).integrate_scalar()?;
    let a_double = rho.restricted(&b2).integrate_scalar()?;
    let doubling = Condition::from_margin(a_double.min(params.d * a - a_double));
    let doubling = if a_double > 0.0 { doubling } else { Condition { pass: false, margin: doubling.margin.min(0.0) } };
    let sigma_mass = match sigma {
        Some(s) => s.restricted(&b2).lp_norm(crate::grid::Exponent::Finite(1.0)),
        None => 0.0,
    };
    Ok(FamilyReport {
        distortion,
        doubling,
        comass,
        sigma_mass: Condition::from_margin(params.d - sigma_mass),
        a,
        a_double,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{bump_form, GridDomain};
    use crate::maps::MapFamily;
    use crate::MultiIndex;
    use std::sync::Arc;

    fn b2(res: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::ball(&[0.0, 0.0], 2.0, res).unwrap())
    }

    #[test]
    fn covering_normalization_and_membership() {
        let dom = b2(128);
        let params = FamilyParams::torus_volume(2, 1.0);
        for r in [1.0, 2.0, 4.0] {
            let f = MapFamily::covering(2, r).sample(&dom).unwrap();
            let df = f.best_derivative().unwrap();
            let a = normalizing_factor(&f, &df, None, &params).unwrap();
            let expect = std::f64::consts::PI * r * r;
            assert!((a / expect - 1.0).abs() < 0.01, "r = {r}: {a} vs {expect}");
            let rep = family_check(&f, &df, None, &params).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
            assert!((rep.a_double / rep.a - 4.0).abs() < 0.05);
        }
    }

    #[test]
    fn constant_map_and_sigma_mass() {
        let dom = b2(64);
        let params = FamilyParams::torus_volume(2, 1.0);
        let f = MapFamily::Constant { n: 2, value: vec![0.3, 0.3], torus: true }.sample(&dom).unwrap();
        let df = f.best_derivative().unwrap();
        let rep = family_check(&f, &df, None, &params).unwrap();
        assert!(!rep.doubling.pass);
        // unit-mass Σ inside the unit ball: A = 1
        let s = bump_form(&dom, &[0.1, 0.0], 0.5, &MultiIndex::empty(), false).unwrap();
        let s = s.scale(1.0 / s.integrate_scalar().unwrap());
        let a = normalizing_factor(&f, &df, Some(&s), &params).unwrap();
        assert!((a - 1.0).abs() < 1e-3);
        let heavy = s.scale(20.0);
        assert!(!family_check(&f, &df, Some(&heavy), &params).unwrap().sigma_mass.pass);
    }
}
