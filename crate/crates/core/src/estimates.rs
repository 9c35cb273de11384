//! Dyadic-cube estimates: the weak reverse Hölder inequality, a Gehring
//! higher-integrability probe and the polynomial growth table.
//!
//! All averages are plain means over the grid points whose cell centres lie in
//! the (half-open) cube, so they are exact Hölder/Jensen means of the sampled
//! data and reductions are deterministic.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridForm, Region};
use crate::maps::{
    distortion_check, AnalyticTargetForm, DerivativeField, DistortionKind, DistortionParams, MapFamily,
    SampledMap, ScalarFn,
};

/// Frozen constant `K·C(ω)` of the weak reverse Hölder inequality, written as
/// `C(ω)`; the margin uses `K · REVERSE_HOLDER_CONSTANT`. Obtained from
/// [`calibrate_reverse_holder`] at resolution 128 with a 1.25 safety factor.
pub const REVERSE_HOLDER_CONSTANT: f64 = 1.25;

/// Safety factor applied on top of the fitted calibration constant.
pub const CALIBRATION_SAFETY: f64 = 1.25;

/// Default Gehring exponent grid.
pub const DEFAULT_LAMBDAS: [f64; 5] = [1.01, 1.02, 1.05, 1.1, 1.2];

/// Largest relative change of a Gehring ratio under one halving of `h`.
pub const STABILITY_TOLERANCE: f64 = 0.2;

const HOLDER_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
    pub level: usize,
}

impl Cube {
    pub fn doubled(&self) -> Cube {
        Cube { center: self.center.clone(), side: 2.0 * self.side, level: self.level }
    }

    pub fn region(&self) -> Region {
        Region::cube(&self.center, self.side)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        let tol = 1e-12 * self.side;
        self.center
            .iter()
            .zip(&other.center)
            .all(|(a, b)| (a - b).abs() + 0.5 * other.side <= 0.5 * self.side + tol)
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.center.iter().map(|c| c - 0.5 * self.side).collect();
        let hi = self.center.iter().map(|c| c + 0.5 * self.side).collect();
        (lo, hi)
    }
}

/// Dyadic sub-cubes `Q` of a root cube `Q₀` with `2Q ⊆ Q₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    pub root: Cube,
    pub levels: usize,
    pub cubes: Vec<Cube>,
}

impl CubeFamily {
    /// All dyadic cubes of levels `1..=levels` (side `s/2^l`) whose double
    /// stays inside the root.
    pub fn dyadic(center: &[f64], side: f64, levels: usize) -> Result<Self> {
        if center.is_empty() || !(side > 0.0) || levels == 0 {
            return Err(Error::InvalidConfig("cube family needs n ≥ 1, side > 0 and levels ≥ 1".into()));
        }
        let n = center.len();
        let root = Cube { center: center.to_vec(), side, level: 0 };
        let mut cubes = Vec::new();
        for level in 1..=levels {
            let per = 1usize << level;
            let s = side / per as f64;
            let mut idx = vec![0usize; n];
            loop {
                let c: Vec<f64> =
                    (0..n).map(|a| center[a] - 0.5 * side + (idx[a] as f64 + 0.5) * s).collect();
                let q = Cube { center: c, side: s, level };
                if root.contains_cube(&q.doubled()) {
                    cubes.push(q);
                }
                let mut a = 0;
                while a < n {
                    idx[a] += 1;
                    if idx[a] < per {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if a == n {
                    break;
                }
            }
        }
        Ok(Self { root, levels, cubes })
    }

    pub fn dim(&self) -> usize {
        self.root.center.len()
    }

    /// Uniform grid on the root box, `res` cells per axis.
    pub fn grid(&self, res: usize) -> Result<Arc<GridDomain>> {
        let (lo, hi) = self.root.bounds();
        let n = self.dim();
        Ok(Arc::new(GridDomain::with_bounds(&lo, &hi, &vec![res; n], self.root.region())?))
    }

    /// The whole family rescaled about the origin by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let sc = |q: &Cube| Cube { center: q.center.iter().map(|c| c * s).collect(), side: q.side * s, level: q.level };
        Self { root: sc(&self.root), levels: self.levels, cubes: self.cubes.iter().map(sc).collect() }
    }
}

/// Grid points whose centres lie in the half-open cube.
fn cube_points(dom: &GridDomain, q: &Cube) -> Vec<usize> {
    let n = dom.dim();
    let (lo, hi) = q.bounds();
    let mut ranges = Vec::with_capacity(n);
    for a in 0..n {
        let h = dom.spacing()[a];
        let l = dom.lower()[a];
        let first = ((lo[a] - l) / h - 0.5 - 1e-9).ceil().max(0.0) as usize;
        let last = (((hi[a] - l) / h - 0.5 - 1e-9).ceil().max(0.0) as usize).min(dom.resolution()[a]);
        if first >= last {
            return Vec::new();
        }
        ranges.push((first, last));
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut out = Vec::new();
    loop {
        out.push(dom.flat_index(&idx));
        let mut a = 0;
        while a < n {
            idx[a] += 1;
            if idx[a] < ranges[a].1 {
                break;
            }
            idx[a] = ranges[a].0;
            a += 1;
        }
        if a == n {
            return out;
        }
    }
}

fn mean_pow(values: &[f64], pts: &[usize], p: f64) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    pts.iter().map(|&i| values[i].abs().powf(p)).sum::<f64>() / pts.len() as f64
}

fn power_mean(values: &[f64], pts: &[usize], p: f64) -> f64 {
    mean_pow(values, pts, p).powf(1.0 / p)
}

fn check_family(dom: &GridDomain, cubes: &CubeFamily) -> Result<()> {
    if dom.dim() != cubes.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: cubes.dim() });
    }
    let (lo, hi) = cubes.root.bounds();
    let upper = dom.upper();
    let tol = 1e-9 * cubes.root.side;
    if (0..dom.dim()).any(|a| lo[a] < dom.lower()[a] - tol || hi[a] > upper[a] + tol) {
        return Err(Error::NotContained("root cube must lie inside the grid box".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeMargin {
    pub level: usize,
    pub center: Vec<f64>,
    pub side: f64,
    /// `inf|ω|_M ⨍_Q |DF|ⁿ`.
    pub lhs: f64,
    /// `(⨍_{2Q} |DF|^{n²/(n+1)})^{(n+1)/n}`.
    pub holder_term: f64,
    /// `2ⁿ ⨍_{2Q} |Σ|`.
    pub sigma_term: f64,
    /// `(lhs − sigma_term) / (K · holder_term)`: the constant this cube needs.
    pub needed: f64,
    /// `K C · holder_term + sigma_term − lhs`.
    pub margin: f64,
    /// Largest relative violation of `(⨍|DF|^q)^{1/q} ≤ (⨍|DF|ⁿ)^{1/n}` on `Q` and `2Q`.
    pub holder_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseHolderReport {
    pub n: usize,
    pub resolution: usize,
    pub h: f64,
    pub k: f64,
    pub constant: f64,
    /// Whether the sampled map satisfies the distortion inequality on the root.
    pub compliant: bool,
    pub inf_comass: f64,
    pub rows: Vec<CubeMargin>,
    pub min_margin: f64,
    pub max_needed: f64,
    pub max_holder_slack: f64,
}

impl ReverseHolderReport {
    pub fn pass(&self) -> bool {
        self.compliant && self.min_margin >= 0.0 && self.max_holder_slack <= HOLDER_SLACK
    }
}

/// Weak reverse Hölder margins on every cube of the family. `sigma` is a
/// scalar field on the map's grid; `omega` is the calibrating `n`-form.
pub fn weak_reverse_holder_check(
    f: &SampledMap,
    df: &DerivativeField,
    omega: &AnalyticTargetForm,
    sigma: Option<&GridForm>,
    k: f64,
    cubes: &CubeFamily,
    constant: f64,
) -> Result<ReverseHolderReport> {
    let dom = f.domain().clone();
    check_family(&dom, cubes)?;
    let n = dom.dim();
    if omega.k != n {
        return Err(Error::DegreeOutOfRange { degree: omega.k, n });
    }
    if let Some(s) = sigma {
        if s.degree() != 0 || !s.domain().same_grid(&dom) {
            return Err(Error::InvalidConfig("Σ must be a 0-form on the map's grid".into()));
        }
    }
    let mut params = DistortionParams::with_k(k);
    params.omega = Some(omega.clone());
    let kind = match sigma {
        Some(s) => {
            params.sigma = Some(s.clone());
            DistortionKind::QrCurveSigma
        }
        None => DistortionKind::QrCurve,
    };
    let (compliant, inf_comass) = match distortion_check(f, df, kind, &params) {
        Ok(rep) => {
            let scale = (0..dom.len()).map(|i| df.op_norm(i).powi(n as i32)).fold(0.0, f64::max).max(1.0);
            let root = cubes.root.region();
            let worst = (0..dom.len())
                .filter(|&i| root.contains(&dom.point(i)))
                .map(|i| rep.residual.values()[i])
                .fold(f64::NEG_INFINITY, f64::max);
            (worst <= 1e-9 * scale, rep.min_comass.unwrap_or(0.0))
        }
        Err(Error::VanishingForm(_)) => (false, 0.0),
        Err(e) => return Err(e),
    };

    let norms = df.op_norms();
    let sig: Option<&[f64]> = sigma.map(|s| s.values());
    let nf = n as f64;
    let q = nf * nf / (nf + 1.0);
    let rows: Vec<CubeMargin> = cubes
        .cubes
        .par_iter()
        .map(|cube| {
            let inner = cube_points(&dom, cube);
            let outer = cube_points(&dom, &cube.doubled());
            let lhs = inf_comass * mean_pow(norms, &inner, nf);
            let holder_term = mean_pow(norms, &outer, q).powf((nf + 1.0) / nf);
            let sigma_term = sig.map_or(0.0, |s| 2f64.powi(n as i32) * mean_pow(s, &outer, 1.0));
            let needed = if holder_term > 0.0 {
                (lhs - sigma_term) / (k * holder_term)
            } else if lhs > sigma_term {
                f64::INFINITY
            } else {
                0.0
            };
            let margin = k * constant * holder_term + sigma_term - lhs;
            let slack = [&inner, &outer]
                .iter()
                .map(|pts| {
                    let (a, b) = (power_mean(norms, pts, q), power_mean(norms, pts, nf));
                    if b > 0.0 { ((a - b) / b).max(0.0) } else { 0.0 }
                })
                .fold(0.0, f64::max);
            CubeMargin {
                level: cube.level,
                center: cube.center.clone(),
                side: cube.side,
                lhs,
                holder_term,
                sigma_term,
                needed,
                margin,
                holder_slack: slack,
            }
        })
        .collect();
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let max_needed = rows.iter().map(|r| r.needed).fold(f64::NEG_INFINITY, f64::max);
    let max_holder_slack = rows.iter().map(|r| r.holder_slack).fold(0.0, f64::max);
    Ok(ReverseHolderReport {
        n,
        resolution: dom.resolution()[0],
        h: dom.h_max(),
        k,
        constant,
        compliant,
        inf_comass,
        rows,
        min_margin,
        max_needed,
        max_holder_slack,
    })
}

/// One member of a reverse Hölder suite: a map on a root cube, the
/// distortion constant it is tested with and an optional `Σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCase {
    pub name: String,
    pub map: MapFamily,
    pub root_center: Vec<f64>,
    pub root_side: f64,
    pub k: f64,
    /// Use the smallest `Σ` making the map satisfy the inequality with `k`.
    #[serde(default)]
    pub minimal_sigma: bool,
}

impl SuiteCase {
    /// Sample, derive `Σ` if requested, and run the check.
    pub fn run(&self, res: usize, levels: usize, constant: f64) -> Result<ReverseHolderReport> {
        let cubes = CubeFamily::dyadic(&self.root_center, self.root_side, levels)?;
        let dom = cubes.grid(res)?;
        let f = self.map.sample(&dom)?;
        let df = f.best_derivative()?;
        let n = dom.dim();
        let omega = AnalyticTargetForm::volume(n, f.is_torus());
        let sigma = if self.minimal_sigma {
            let mut params = DistortionParams::with_k(self.k);
            params.omega = Some(omega.clone());
            params.sigma = Some(GridForm::zeros(&dom, 0)?);
            let rep = distortion_check(&f, &df, DistortionKind::QrCurveSigma, &params)?;
            let ms = rep.minimal_sigma;
            // a hair above the minimum so the pointwise check is not decided by rounding
            let vals = (0..dom.len()).map(|i| if ms.defined[i] { ms.values[i] * (1.0 + 1e-9) } else { 0.0 }).collect();
            Some(GridForm::from_values(&dom, 0, vals)?)
        } else {
            None
        };
        weak_reverse_holder_check(&f, &df, &omega, sigma.as_ref(), self.k, &cubes, constant)
    }
}

/// Calibration suite (n = 2): maps with `Σ = 0` and their distortion constant.
pub fn calibration_suite() -> Vec<SuiteCase> {
    let case = |name: &str, map: MapFamily, c: [f64; 2], k: f64| SuiteCase {
        name: name.into(),
        map,
        root_center: c.to_vec(),
        root_side: 1.0,
        k,
        minimal_sigma: false,
    };
    vec![
        case("covering", MapFamily::covering(2, 1.0), [0.5, 0.5], 1.0),
        case("linear_2_1", MapFamily::linear(vec![vec![2.0, 0.0], vec![0.0, 1.0]]), [0.5, 0.5], 2.0),
        case("winding_2", MapFamily::Winding { k: 2 }, [1.0, 0.0], 2.0),
        case(
            "bump_covering",
            MapFamily::BumpCovering { n: 2, amplitude: 0.1, center: vec![0.5, 0.5], radius: 0.3 },
            [0.5, 0.5],
            3.0,
        ),
    ]
}

/// Compliant suite: the calibration maps, plus bump-perturbed coverings
/// tested at `K = 1` with a compatible `Σ`.
pub fn compliant_suite() -> Vec<SuiteCase> {
    let mut suite = calibration_suite();
    for (amp, name) in [(0.1, "bump_covering_sigma"), (0.2, "bump_covering_sigma_strong")] {
        suite.push(SuiteCase {
            name: name.into(),
            map: MapFamily::BumpCovering { n: 2, amplitude: amp, center: vec![0.4, 0.55], radius: 0.3 },
            root_center: vec![0.5, 0.5],
            root_side: 1.0,
            k: 1.0,
            minimal_sigma: true,
        });
    }
    suite
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub resolution: usize,
    pub levels: usize,
    /// `(case, largest needed constant)`.
    pub fitted: Vec<(String, f64)>,
    pub max_fitted: f64,
    pub frozen: f64,
}

/// Fit the reverse Hölder constant on a suite; `frozen` applies the safety
/// factor.
pub fn calibrate_reverse_holder(suite: &[SuiteCase], res: usize, levels: usize) -> Result<Calibration> {
    let mut fitted = Vec::with_capacity(suite.len());
    for case in suite {
        let rep = case.run(res, levels, 0.0)?;
        fitted.push((case.name.clone(), rep.max_needed));
    }
    let max_fitted = fitted.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Calibration { resolution: res, levels, fitted, max_fitted, frozen: CALIBRATION_SAFETY * max_fitted })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GehringRow {
    pub lambda: f64,
    /// Max over cubes of LHS/RHS at spacing `h` and `h/2`.
    pub ratio_coarse: f64,
    pub ratio_fine: f64,
    pub change: f64,
    pub stable: bool,
    /// Per-cube ratios on the fine grid, in family order.
    pub per_cube: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GehringReport {
    pub n: usize,
    pub resolution: usize,
    pub h: f64,
    pub rows: Vec<GehringRow>,
    /// Largest `λ` such that it and every smaller grid value are stable; `1`
    /// when even the first is not.
    pub lambda_star: f64,
    /// `λ*` did not get past the bottom of the grid.
    pub at_boundary: bool,
    /// Fitted constant: the fine max ratio at `λ*` (`None` at the boundary).
    pub constant: Option<f64>,
    /// `‖Σ‖_{L^{λ_max}(Q₀)}` on the fine grid.
    pub sigma_norm: f64,
}

fn gehring_ratios(norms: &[f64], sigma: Option<&[f64]>, dom: &GridDomain, cubes: &CubeFamily, lambda: f64) -> Vec<f64> {
    let n = dom.dim() as f64;
    let e = n / (lambda * (n + 1.0));
    cubes
        .cubes
        .par_iter()
        .map(|cube| {
            let inner = cube_points(dom, cube);
            let outer = cube_points(dom, &cube.doubled());
            let lhs = mean_pow(norms, &inner, lambda * n).powf(e);
            let rhs = mean_pow(norms, &outer, n).powf(n / (n + 1.0))
                + sigma.map_or(0.0, |s| mean_pow(s, &outer, lambda).powf(e));
            if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect()
}

fn sample_norms(map: &MapFamily, sigma: Option<&ScalarFn>, dom: &Arc<GridDomain>) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let f = map.sample(dom)?;
    let df = f.best_derivative()?;
    let s = sigma.map(|s| (0..dom.len()).map(|i| s.eval(&dom.point(i))).collect());
    Ok((df.op_norms().to_vec(), s))
}

/// Gehring ratios on a `λ` grid at resolution `res` and `2·res`.
pub fn gehring_probe(
    map: &MapFamily,
    lambdas: &[f64],
    sigma: Option<&ScalarFn>,
    cubes: &CubeFamily,
    res: usize,
) -> Result<GehringReport> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 1.0)) || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("λ grid must be increasing and > 1".into()));
    }
    if map.source_dim() != cubes.dim() {
        return Err(Error::DimensionMismatch { expected: cubes.dim(), got: map.source_dim() });
    }
    let coarse = cubes.grid(res)?;
    let fine = cubes.grid(2 * res)?;
    let (nc, sc) = sample_norms(map, sigma, &coarse)?;
    let (nf, sf) = sample_norms(map, sigma, &fine)?;
    let lmax = *lambdas.last().unwrap();
    let sigma_norm = sf.as_ref().map_or(0.0, |s| {
        (s.iter().map(|v| v.abs().powf(lmax)).sum::<f64>() * fine.cell_volume()).powf(1.0 / lmax)
    });
    if !sigma_norm.is_finite() {
        return Err(Error::Precondition(format!("Σ is not numerically in L^{lmax}")));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let rc = gehring_ratios(&nc, sc.as_deref(), &coarse, cubes, lambda);
        let per_cube = gehring_ratios(&nf, sf.as_deref(), &fine, cubes, lambda);
        let ratio_coarse = rc.iter().cloned().fold(0.0, f64::max);
        let ratio_fine = per_cube.iter().cloned().fold(0.0, f64::max);
        let change = if ratio_coarse > 0.0 {
            (ratio_fine - ratio_coarse).abs() / ratio_coarse
        } else if ratio_fine > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        rows.push(GehringRow {
            lambda,
            ratio_coarse,
            ratio_fine,
            change,
            stable: change.is_finite() && change <= STABILITY_TOLERANCE,
            per_cube,
        });
    }
    let stable_prefix = rows.iter().take_while(|r| r.stable).count();
    let (lambda_star, constant) = match stable_prefix {
        0 => (1.0, None),
        p => (rows[p - 1].lambda, Some(rows[p - 1].ratio_fine)),
    };
    Ok(GehringReport {
        n: cubes.dim(),
        resolution: res,
        h: coarse.h_max(),
        rows,
        lambda_star,
        at_boundary: stable_prefix == 0,
        constant,
        sigma_norm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    /// Side of `Q`.
    pub r: f64,
    pub resolution: usize,
    pub h: f64,
    /// `∫_{2Q} |Df|ⁿ`.
    pub energy: f64,
    /// `E(r₀)(r/r₀)^{(1−1/λ)n}`, anchored at the first row.
    pub reference: f64,
    pub dominates: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub lambda: f64,
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope of `log E` against `log r`.
    pub slope: f64,
    pub reference_slope: f64,
}

/// Energy of `f` on the doubled cubes `2Q(x₀, r)` for an increasing schedule
/// of sides, each sampled on its own grid with `res` cells per axis. Maps that
/// are constant outside a known region are only sampled where `Df` can be
/// non-zero, so large cubes stay resolved.
pub fn growth_probe(map: &MapFamily, x0: &[f64], sides: &[f64], lambda: f64, res: usize) -> Result<GrowthTable> {
    let n = map.source_dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(lambda > 1.0) {
        return Err(Error::InvalidConfig("λ must exceed 1".into()));
    }
    if sides.is_empty() || sides.iter().any(|&r| !(r > 0.0)) || sides.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("cube sides must be positive and increasing".into()));
    }
    let nf = n as f64;
    let reference_slope = (1.0 - 1.0 / lambda) * nf;
    let mut rows: Vec<GrowthRow> = Vec::with_capacity(sides.len());
    for &r in sides {
        let cube = Cube { center: x0.to_vec(), side: 2.0 * r, level: 0 };
        let (mut lo, mut hi) = cube.bounds();
        if let Some(support) = map.constant_outside() {
            let (slo, shi) = support.bounds();
            for a in 0..n {
                let pad = 0.125 * (shi[a] - slo[a]);
                lo[a] = lo[a].max(slo[a] - pad);
                hi[a] = hi[a].min(shi[a] + pad);
            }
        }
        let energy = if (0..n).all(|a| lo[a] < hi[a]) {
            let c: Vec<f64> = (0..n).map(|a| 0.5 * (lo[a] + hi[a])).collect();
            let side = (0..n).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
            let dom = Arc::new(GridDomain::with_bounds(&lo, &hi, &vec![res; n], Region::cube(&c, side))?);
            let f = map.sample(&dom)?;
            let df = f.best_derivative()?;
            f.energy(&df, None)
        } else {
            0.0
        };
        let h = (0..n).map(|a| (hi[a] - lo[a]).max(0.0) / res as f64).fold(0.0, f64::max);
        let reference = match rows.first() {
            Some(first) => first.energy * (r / first.r).powf(reference_slope),
            None => energy,
        };
        rows.push(GrowthRow {
            r,
            resolution: res,
            h,
            energy,
            reference,
            dominates: energy >= reference * (1.0 - 1e-9),
        });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.energy > 0.0).map(|r| (r.r.ln(), r.energy.ln())).collect();
    let slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        num / den
    } else {
        0.0
    };
    Ok(GrowthTable { lambda, rows, slope, reference_slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_family_counts() {
        let fam = CubeFamily::dyadic(&[0.5, 0.5], 1.0, 3).unwrap();
        let per_level: Vec<usize> = (1..=3).map(|l| fam.cubes.iter().filter(|q| q.level == l).count()).collect();
        assert_eq!(per_level, vec![0, 4, 36]);
        assert!(fam.cubes.iter().all(|q| fam.root.contains_cube(&q.doubled())));
    }

    #[test]
    fn cube_points_partition_root() {
        let fam = CubeFamily::dyadic(&[0.0, 0.0], 2.0, 2).unwrap();
        let dom = fam.grid(32).unwrap();
        let q = &fam.cubes[0];
        assert_eq!(cube_points(&dom, q).len(), 8 * 8);
        assert_eq!(cube_points(&dom, &q.doubled()).len(), 16 * 16);
        assert_eq!(cube_points(&dom, &fam.root).len(), dom.len());
    }

    #[test]
    fn covering_margins_are_constant() {
        let case = &calibration_suite()[0];
        let rep = case.run(64, 3, REVERSE_HOLDER_CONSTANT).unwrap();
        assert!(rep.compliant);
        for row in &rep.rows {
            assert!((row.needed - 1.0).abs() < 1e-12, "{row:?}");
        }
        assert!(rep.pass());
    }

    #[test]
    fn constant_map_has_zero_lhs() {
        let case = SuiteCase {
            name: "constant".into(),
            map: MapFamily::Constant { n: 2, value: vec![0.2, 0.3], torus: true },
            root_center: vec![0.5, 0.5],
            root_side: 1.0,
            k: 1.0,
            minimal_sigma: false,
        };
        let rep = case.run(32, 3, REVERSE_HOLDER_CONSTANT).unwrap();
        assert!(rep.rows.iter().all(|r| r.lhs == 0.0 && r.margin >= 0.0));
    }

    #[test]
    fn gehring_covering_is_flat() {
        let cubes = CubeFamily::dyadic(&[0.5, 0.5], 1.0, 3).unwrap();
        let rep = gehring_probe(&MapFamily::covering(2, 1.0), &DEFAULT_LAMBDAS, None, &cubes, 32).unwrap();
        for row in &rep.rows {
            assert!((row.ratio_fine - 1.0).abs() < 1e-12);
        }
        assert_eq!(rep.lambda_star, 1.2);
        assert!(!rep.at_boundary);
    }

    #[test]
    fn growth_of_covering_has_slope_n() {
        let t = growth_probe(&MapFamily::covering(2, 1.0), &[0.0, 0.0], &[0.25, 0.5, 1.0, 2.0], 1.1, 32).unwrap();
        assert!((t.slope - 2.0).abs() < 1e-9);
        assert!(t.rows.iter().all(|r| r.dominates));
    }

    #[test]
    fn eventually_constant_growth_plateaus() {
        let map = MapFamily::EventuallyConstant {
            base: vec![0.3, 0.4],
            amplitude: 0.8,
            center: vec![0.0, 0.0],
            radius: 0.5,
            shift: vec![],
        };
        let sides: Vec<f64> = (0..=11).map(|i| 0.0625 * 2f64.powi(i)).collect();
        let t = growth_probe(&map, &[0.0, 0.0], &sides, 1.2, 64).unwrap();
        let last = t.rows.last().unwrap();
        let prev = &t.rows[t.rows.len() - 2];
        assert!((last.energy - prev.energy).abs() < 0.02 * last.energy);
        assert!(!last.dominates);
    }

    #[test]
    fn reference_slope_vanishes_as_lambda_decreases() {
        let t = growth_probe(&MapFamily::covering(2, 1.0), &[0.0, 0.0], &[0.5, 1.0], 1.0 + 1e-9, 8).unwrap();
        assert!(t.reference_slope < 1e-8);
    }
}
