//! Topological degree `deg(f, y, U) = ∫_U f*ω` for a unit-mass bump `ω` at
//! `y`, local indices, excision, and a Newton-based preimage count.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bump_integral, GridDomain, Region};
use crate::maps::{AnalyticTargetForm, DerivativeField, MapFamily, SampledMap, ScalarFn};

/// Rounding gaps above this mark a result unreliable.
pub const UNRELIABLE_GAP: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeResult {
    pub raw: f64,
    pub rounded: i64,
    pub gap: f64,
    pub bump_radius: f64,
    /// Estimated `dist(y, f(∂U))`: sampled minimum less one cell of slack.
    pub boundary_distance: f64,
    pub reliable: bool,
}

impl DegreeResult {
    fn from_raw(raw: f64, bump_radius: f64, boundary_distance: f64) -> Self {
        let rounded = raw.round();
        let gap = (raw - rounded).abs();
        Self { raw, rounded: rounded as i64, gap, bump_radius, boundary_distance, reliable: gap <= UNRELIABLE_GAP }
    }
}

/// Sampled `dist(y, f(∂U))` and the largest image oscillation across one grid
/// step at the boundary.
fn boundary_distance(f: &SampledMap, sub: &GridDomain, y: &[f64]) -> (f64, f64) {
    let dom = f.domain();
    let n = dom.dim();
    let strides = dom.strides();
    let mut idx = vec![0; n];
    let mut dist = f64::INFINITY;
    let mut slack: f64 = 0.0;
    for i in sub.boundary_points() {
        dist = dist.min(f.target_dist(f.value(i), y));
        dom.multi_index(i, &mut idx);
        for a in 0..n {
            if idx[a] > 0 {
                slack = slack.max(f.target_dist(f.value(i), f.value(i - strides[a])));
            }
            if idx[a] + 1 < dom.resolution()[a] {
                slack = slack.max(f.target_dist(f.value(i), f.value(i + strides[a])));
            }
        }
    }
    (dist, slack)
}

fn check_square(f: &SampledMap) -> Result<()> {
    if f.target_dim() != f.domain().dim() {
        return Err(Error::DimensionMismatch { expected: f.domain().dim(), got: f.target_dim() });
    }
    Ok(())
}

fn check_region(f: &SampledMap, u: &Region) -> Result<()> {
    if u.dim() != f.domain().dim() {
        return Err(Error::DimensionMismatch { expected: f.domain().dim(), got: u.dim() });
    }
    if !f.domain().region().contains_region(u) {
        return Err(Error::NotContained("U must lie inside the sampled domain".into()));
    }
    Ok(())
}

/// The unit-mass bump `n`-form at `y` with radius `rho`.
pub fn bump_volume_form(y: &[f64], rho: f64, torus: bool) -> Result<AnalyticTargetForm> {
    let n = y.len();
    let axes: Vec<usize> = (0..n).collect();
    let bump = ScalarFn::Bump { center: y.to_vec(), radius: rho, torus };
    Ok(AnalyticTargetForm::monomial(n, &axes, bump, torus)?.scale(1.0 / bump_integral(n, rho)))
}

fn integrate_over(f: &SampledMap, df: &DerivativeField, u: &Region, y: &[f64], rho: f64) -> Result<f64> {
    let omega = bump_volume_form(y, rho, f.is_torus())?;
    f.pullback_with(df, &omega)?.restricted(u).integrate_top()
}

/// Largest admissible bump radius for a boundary distance; on tori also
/// below the injectivity radius.
fn radius_for(f: &SampledMap, estimate: f64) -> f64 {
    let r = 0.5 * estimate;
    if f.is_torus() {
        r.min(0.45)
    } else {
        r
    }
}

/// `deg(f, y, U)`. `radius` overrides the default bump radius
/// `½ dist(y, f(∂U))`; it must not exceed the estimated distance.
pub fn degree(f: &SampledMap, df: &DerivativeField, y: &[f64], u: &Region, radius: Option<f64>) -> Result<DegreeResult> {
    check_square(f)?;
    check_region(f, u)?;
    let sub = f.domain().restricted(u);
    let (dist, slack) = boundary_distance(f, &sub, y);
    if !(dist > 2.0 * slack) {
        return Err(Error::BoundaryTooClose { distance: dist, slack });
    }
    let estimate = dist - slack;
    let rho = match radius {
        Some(r) if r > 0.0 && r <= estimate => r,
        Some(_) => return Err(Error::InvalidConfig("bump radius must be in (0, dist(y, f(∂U))]".into())),
        None => radius_for(f, estimate),
    };
    let raw = integrate_over(f, df, u, y, rho)?;
    Ok(DegreeResult::from_raw(raw, rho, estimate))
}

/// Grid points whose one-step image neighbourhood reaches `y`.
pub(crate) fn candidate_cells(f: &SampledMap, mask: &[bool], y: &[f64]) -> Vec<usize> {
    let dom = f.domain();
    let n = dom.dim();
    let strides = dom.strides();
    let mut idx = vec![0; n];
    (0..dom.len())
        .filter(|&i| {
            if !mask[i] {
                return false;
            }
            dom.multi_index(i, &mut idx);
            let mut osc: f64 = 0.0;
            for a in 0..n {
                if idx[a] > 0 {
                    osc = osc.max(f.target_dist(f.value(i), f.value(i - strides[a])));
                }
                if idx[a] + 1 < dom.resolution()[a] {
                    osc = osc.max(f.target_dist(f.value(i), f.value(i + strides[a])));
                }
            }
            f.target_dist(f.value(i), y) <= osc
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalIndex {
    pub radius: f64,
    pub result: DegreeResult,
    /// The Jacobian changes sign inside the isolating ball.
    pub folded: bool,
}

/// Local index `i(x, f)` at grid point `x`: try dyadic radii `R, R/2, …`
/// (down to three cells) around `x` and use the first ball whose closure
/// holds no grid-detected preimage of `f(x)` beyond the cluster at `x` and
/// whose boundary image avoids `f(x)`.
pub fn local_index(f: &SampledMap, df: &DerivativeField, x: usize) -> Result<LocalIndex> {
    check_square(f)?;
    let dom = f.domain();
    let center = dom.point(x);
    let y = f.value(x).to_vec();
    let h = dom.h_max();
    let cand = candidate_cells(f, dom.mask(), &y);
    let mut radius = {
        let (lo, hi) = dom.region().bounds();
        let mut r = f64::INFINITY;
        for a in 0..dom.dim() {
            r = r.min(center[a] - lo[a]).min(hi[a] - center[a]);
        }
        r - h
    };
    while radius >= 3.0 * h {
        let ball = Region::ball(&center, radius);
        let cluster = 2.0 * h;
        let isolated = cand.iter().all(|&j| {
            let d = crate::grid::dist2(&dom.point(j), &center).sqrt();
            d <= cluster || d > radius + h
        });
        if isolated && dom.region().contains_region(&ball) {
            if let Ok(result) = degree(f, df, &y, &ball, None) {
                let mut pos = false;
                let mut neg = false;
                if let Some(jac) = df.jacobians() {
                    let scale = df.op_norms().iter().fold(0.0f64, |m, v| m.max(*v)).powi(dom.dim() as i32);
                    let sub = dom.restricted(&ball);
                    for i in (0..dom.len()).filter(|&i| sub.in_domain(i)) {
                        pos |= jac[i] > 1e-9 * scale;
                        neg |= jac[i] < -1e-9 * scale;
                    }
                }
                let folded = pos && neg;
                let mut result = result;
                result.reliable &= !folded;
                return Ok(LocalIndex { radius, result, folded });
            }
        }
        radius *= 0.5;
    }
    Err(Error::NotIsolated("no dyadic ball isolates the preimage".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcisionReport {
    pub outer: DegreeResult,
    pub inner: DegreeResult,
    pub equal: bool,
}

/// `deg(f, y, U) = deg(f, y, V)` for `V̄ ⊂ U`, both with the same bump.
pub fn excision_check(f: &SampledMap, df: &DerivativeField, y: &[f64], u: &Region, v: &Region) -> Result<ExcisionReport> {
    check_square(f)?;
    check_region(f, u)?;
    if !u.contains_region(v) {
        return Err(Error::NotContained("V must lie inside U".into()));
    }
    let dom = f.domain();
    let su = dom.restricted(u);
    let sv = dom.restricted(v);
    // y must avoid f(Ū \ V): sample U-points outside V and V's boundary layer
    let vb = sv.boundary_points();
    let (_, slack_u) = boundary_distance(f, &su, y);
    let (_, slack_v) = boundary_distance(f, &sv, y);
    let slack = slack_u.max(slack_v);
    let ring = (0..dom.len()).filter(|&i| su.in_domain(i) && !sv.in_domain(i)).chain(vb);
    let avoid = ring.map(|i| f.target_dist(f.value(i), y)).fold(f64::INFINITY, f64::min);
    if !(avoid > 2.0 * slack) {
        return Err(Error::Precondition(format!(
            "y lies within {avoid:.3e} of f(Ū \\ V) (slack {slack:.3e})"
        )));
    }
    let rho = radius_for(f, avoid - slack);
    let outer = DegreeResult::from_raw(integrate_over(f, df, u, y, rho)?, rho, avoid - slack);
    let inner = degree(f, df, y, v, Some(rho))?;
    let equal = outer.rounded == inner.rounded;
    Ok(ExcisionReport { outer, inner, equal })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageCount {
    pub count: i64,
    /// Converged preimages with their Jacobians.
    pub preimages: Vec<(Vec<f64>, f64)>,
}

/// Signed count `Σ sign J_f` over preimages of `y` in `U`, located by damped
/// Newton iteration started from every candidate cell of a grid sample.
pub fn preimage_count(map: &MapFamily, domain: &Arc<GridDomain>, u: &Region, y: &[f64], tol: f64) -> Result<PreimageCount> {
    map.validate()?;
    let n = map.source_dim();
    if map.target_dim() != n || y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: map.target_dim() });
    }
    let f = map.sample(domain)?;
    let sub = domain.restricted(u);
    let torus = map.is_torus();
    let h = domain.h_max();
    let mut roots: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut val = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    let residual = |val: &[f64]| -> Vec<f64> {
        val.iter()
            .zip(y)
            .map(|(a, b)| {
                let d = a - b;
                if torus {
                    d - d.round()
                } else {
                    d
                }
            })
            .collect()
    };
    for i in candidate_cells(&f, sub.mask(), y) {
        let mut x = domain.point(i);
        let mut converged = false;
        for _ in 0..100 {
            map.eval(&x, &mut val, &mut jac);
            let r = residual(&val);
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                converged = true;
                break;
            }
            let m = nalgebra::DMatrix::from_row_slice(n, n, &jac);
            let Some(step) = m.lu().solve(&nalgebra::DVector::from_column_slice(&r)) else {
                break;
            };
            // damping: halve until the residual decreases
            let mut lambda = 1.0;
            let mut trial = x.clone();
            loop {
                for a in 0..n {
                    trial[a] = x[a] - lambda * step[a];
                }
                map.eval(&trial, &mut val, &mut jac);
                let rn = residual(&val).iter().map(|v| v * v).sum::<f64>().sqrt();
                if rn < norm || lambda < 1e-6 {
                    break;
                }
                lambda *= 0.5;
            }
            if crate::grid::dist2(&trial, &x).sqrt() > 4.0 * h {
                break;
            }
            x.clone_from(&trial);
        }
        if !converged || !u.contains(&x) || roots.iter().any(|(r, _)| crate::grid::dist2(r, &x).sqrt() < 0.25 * h) {
            continue;
        }
        map.eval(&x, &mut val, &mut jac);
        let det = crate::algebra::linalg::det_small(&jac, n);
        if det.abs() <= tol {
            return Err(Error::CriticalValue { jacobian: det });
        }
        roots.push((x, det));
    }
    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let count = roots.iter().map(|(_, j)| if *j > 0.0 { 1 } else { -1 }).sum();
    Ok(PreimageCount { count, preimages: roots })
}
