//! Stokes vanishing for eventually constant maps, and the energy experiment
//! at a quasiregular value.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::degree::{candidate_cells, degree, DegreeResult};
use crate::error::{Error, Result};
use crate::grid::{unit_ball_volume, GridDomain, GridForm, Region};
use crate::homotopy::gauss_legendre;
use crate::maps::{distortion_check, AnalyticTargetForm, DistortionKind, DistortionParams, MapFamily, SampledMap, ScalarFn};

/// Box around the region outside of which `map` is constant.
fn support_box(map: &MapFamily) -> Result<Region> {
    let support = map
        .constant_outside()
        .ok_or_else(|| Error::Precondition("map is not known to be eventually constant".into()))?;
    let (lo, hi) = support.bounds();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let half = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (h - l)).fold(0.0, f64::max);
    Ok(Region::cube(&center, 2.0 * (1.25 * half).max(0.5)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesReport {
    pub integral: f64,
    pub resolution: usize,
    pub h: f64,
    pub support: Region,
}

/// `∫_{ℝⁿ} F*ω`, truncated exactly to a box around the non-constant region.
pub fn stokes_vanishing_check(map: &MapFamily, omega: &AnalyticTargetForm, res: usize) -> Result<StokesReport> {
    map.validate()?;
    let n = map.source_dim();
    if omega.k != n || omega.m != map.target_dim() {
        return Err(Error::DimensionMismatch { expected: n, got: omega.k });
    }
    let support = support_box(map)?;
    let dom = Arc::new(GridDomain::new(support.clone(), &vec![res; n])?);
    let f = map.sample(&dom)?;
    let integral = f.pullback(omega)?.integrate_top()?;
    Ok(StokesReport { integral, resolution: res, h: dom.h_max(), support })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrvConfig {
    pub x0: Vec<f64>,
    /// Radius of the neighbourhood `U₀ = B(x₀, u0_radius)`.
    pub u0_radius: f64,
    pub k: f64,
    pub radii: Vec<f64>,
    pub resolution: usize,
    #[serde(default)]
    pub sigma: Option<ScalarFn>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrvRow {
    pub r: f64,
    /// `B(y₀, r) ∩ f(∂U₀) = ∅` on the grid.
    pub admissible: bool,
    /// `∫_{U₀} f*(η_r vol)`.
    pub lhs: f64,
    /// `−∫_{V_r} f*(η_r vol)` with `V_r = f⁻¹B(y₀, r) \ U₀`.
    pub companion: f64,
    /// `∫_{V_r} J_f⁻`.
    pub jacobian_negative: f64,
    /// `∫_{f⁻¹B(y₀, r)} Σ` (with no `Σ` given: the smallest admissible one).
    pub sigma_mass: f64,
    /// `∫_M η_r vol`.
    pub eta_mass: f64,
    /// `lhs / |B(y₀, r/2)|`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrvReport {
    pub y0: Vec<f64>,
    pub local_index: DegreeResult,
    pub rows: Vec<QrvRow>,
}

/// `η_r`: 1 on `B(y₀, r/2)`, 0 outside `B(y₀, r)`, C² in between.
fn eta(d: f64, r: f64) -> f64 {
    let t = ((d - 0.5 * r) / (0.5 * r)).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// `∫_{ℝⁿ} η_r(|y|) dy` by Gauss–Legendre in the radius.
fn eta_mass(n: usize, r: f64) -> f64 {
    let sphere = n as f64 * unit_ball_volume(n);
    let (x, w) = gauss_legendre(24);
    let inner = (0.5 * r).powi(n as i32) * unit_ball_volume(n);
    let shell: f64 = x
        .iter()
        .zip(&w)
        .map(|(t, w)| {
            let rho = 0.75 * r + 0.25 * r * t;
            w * eta(rho, r) * rho.powi(n as i32 - 1)
        })
        .sum::<f64>()
        * 0.25
        * r;
    inner + sphere * shell
}

/// Per radius, the quantities of the energy argument at `y₀ = f(x₀)`.
pub fn qrv_energy_experiment(map: &MapFamily, cfg: &QrvConfig) -> Result<QrvReport> {
    map.validate()?;
    let n = map.source_dim();
    if map.target_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: map.target_dim() });
    }
    let mut region = support_box(map)?;
    let u0 = Region::ball(&cfg.x0, cfg.u0_radius);
    if !region.contains_region(&u0) {
        let (lo, hi) = region.bounds();
        let (ulo, uhi) = u0.bounds();
        let lower: Vec<f64> = lo.iter().zip(&ulo).map(|(a, b)| a.min(b - 0.1)).collect();
        let upper: Vec<f64> = hi.iter().zip(&uhi).map(|(a, b)| a.max(b + 0.1)).collect();
        region = Region::Box { lower, upper };
    }
    let dom = Arc::new(GridDomain::new(region, &vec![cfg.resolution; n])?);
    let f: SampledMap = map.sample(&dom)?;
    let df = f.best_derivative()?;
    let jac = df.jacobians().ok_or(Error::DimensionMismatch { expected: n, got: f.target_dim() })?.to_vec();
    let mut y0 = vec![0.0; n];
    let mut scratch = vec![0.0; n * n];
    map.eval(&cfg.x0, &mut y0, &mut scratch);

    // isolation of x₀ in Ū₀ at grid scale
    let h = dom.h_max();
    let sub = dom.restricted(&u0);
    for i in candidate_cells(&f, sub.mask(), &y0) {
        if crate::grid::dist2(&dom.point(i), &cfg.x0).sqrt() > 2.0 * h {
            return Err(Error::NotIsolated(format!("another preimage of y₀ near {:?}", dom.point(i))));
        }
    }
    let local_index = degree(&f, &df, &y0, &u0, None)?;
    let boundary = sub.boundary_points();
    let boundary_gap = boundary.iter().map(|&i| f.target_dist(f.value(i), &y0)).fold(f64::INFINITY, f64::min);

    let cell = dom.cell_volume();
    let sigma: Vec<f64> = match &cfg.sigma {
        Some(s) => (0..dom.len()).map(|i| s.eval(&dom.point(i))).collect(),
        None => {
            // smallest Σ making y₀ a K-quasiregular value of the sampled map
            let mut params = DistortionParams::with_k(cfg.k);
            params.y0 = Some(y0.clone());
            params.sigma = Some(GridForm::zeros(&dom, 0)?);
            let rep = distortion_check(&f, &df, DistortionKind::QrValue, &params)?;
            let ms = rep.minimal_sigma;
            (0..dom.len()).map(|i| if ms.defined[i] { ms.values[i] } else { 0.0 }).collect()
        }
    };
    let rows = cfg
        .radii
        .iter()
        .map(|&r| {
            let (mut lhs, mut comp, mut jneg, mut smass) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..dom.len() {
                let d = f.target_dist(f.value(i), &y0);
                if d >= r {
                    continue;
                }
                let w = eta(d, r) * jac[i] * cell;
                smass += sigma[i] * cell;
                if sub.in_domain(i) {
                    lhs += w;
                } else {
                    comp -= w;
                    jneg += (-jac[i]).max(0.0) * cell;
                }
            }
            let half = unit_ball_volume(n) * (0.5 * r).powi(n as i32);
            QrvRow {
                r,
                admissible: boundary_gap > r,
                lhs,
                companion: comp,
                jacobian_negative: jneg,
                sigma_mass: smass,
                eta_mass: eta_mass(n, r),
                normalized: lhs / half,
            }
        })
        .collect();
    Ok(QrvReport { y0, local_index, rows })
}
