//! Rescaled map sequences `F_j(x) = F(r_j x + a_j)`, normalized pull-backs
//! `G_j^! α = A_j^{−k/n} F_j*α`, and their uniform and weak-limit diagnostics.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ball_points;
use super::family::{normalizing_factor, star_pullback, FamilyParams};
use crate::algebra::{basis, MultiIndex};
use crate::error::{Error, Result};
use crate::grid::{bump_profile, GridDomain, GridForm, HolderSequence, Region};
use crate::maps::{AnalyticTargetForm, DerivativeField, MapFamily, SampledMap, ScalarFn};
use crate::KCovector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    /// Increasing rescaling radii `r_j`.
    pub radii: Vec<f64>,
    /// Centres `a_j`; empty means the origin for every member.
    #[serde(default)]
    pub centers: Vec<Vec<f64>>,
    /// Minimum grid resolution per axis over `𝔹ⁿ₂`.
    pub base_resolution: usize,
    /// Grid points per unit of `r_j` (per period of the covering map).
    pub samples_per_period: f64,
}

impl SequenceConfig {
    /// `r_j = 2^j` for `j = 0..=levels`.
    pub fn dyadic(levels: usize, base_resolution: usize) -> Self {
        Self {
            radii: (0..=levels).map(|j| 2f64.powi(j as i32)).collect(),
            centers: Vec::new(),
            base_resolution,
            samples_per_period: 4.0,
        }
    }

    fn resolution(&self, r: f64) -> usize {
        let want = (4.0 * r * self.samples_per_period).ceil() as usize;
        let res = want.max(self.base_resolution);
        res + res % 2
    }
}

#[derive(Clone, Debug)]
pub struct SequenceMember {
    pub radius: f64,
    pub center: Vec<f64>,
    pub map: SampledMap,
    pub df: DerivativeField,
    /// `Σ_j(x) = r_jⁿ Σ(r_j x + a_j)`.
    pub sigma: Option<GridForm>,
    pub a: f64,
}

impl SequenceMember {
    pub fn domain(&self) -> &Arc<GridDomain> {
        self.map.domain()
    }
}

#[derive(Clone, Debug)]
pub struct NormalizedSequence {
    pub base: MapFamily,
    pub params: FamilyParams,
    pub members: Vec<SequenceMember>,
}

impl NormalizedSequence {
    pub fn build(base: &MapFamily, params: FamilyParams, sigma: Option<&ScalarFn>, cfg: &SequenceConfig) -> Result<Self> {
        base.validate()?;
        let n = base.source_dim();
        if cfg.radii.is_empty() || cfg.radii.windows(2).any(|w| !(w[1] > w[0])) || cfg.radii[0] <= 0.0 {
            return Err(Error::InvalidConfig("radii must be positive and strictly increasing".into()));
        }
        if !cfg.centers.is_empty() && cfg.centers.len() != cfg.radii.len() {
            return Err(Error::InvalidConfig("one centre per radius".into()));
        }
        let mut members = Vec::with_capacity(cfg.radii.len());
        for (j, &r) in cfg.radii.iter().enumerate() {
            let center = cfg.centers.get(j).cloned().unwrap_or_else(|| vec![0.0; n]);
            let dom = Arc::new(GridDomain::ball(&vec![0.0; n], 2.0, cfg.resolution(r))?);
            let map = base.rescaled(r, &center).sample(&dom)?;
            let df = map.best_derivative()?;
            let sigma = match sigma {
                Some(s) => Some(GridForm::scalar(&dom, |x| {
                    let y: Vec<f64> = x.iter().zip(&center).map(|(x, a)| r * x + a).collect();
                    r.powi(n as i32) * s.eval(&y)
                })?),
                None => None,
            };
            let a = normalizing_factor(&map, &df, sigma.as_ref(), &params)?;
            if !(a > 0.0) {
                return Err(Error::Precondition(format!("A_{j} = {a:.3e} is not positive")));
            }
            members.push(SequenceMember { radius: r, center, map, df, sigma, a });
        }
        Ok(Self { base: base.clone(), params, members })
    }

    pub fn dim(&self) -> usize {
        self.base.source_dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `G_j^! α = A_j^{−k/n} F_j*α`.
pub fn normalized_pullback(member: &SequenceMember, alpha: &AnalyticTargetForm) -> Result<GridForm> {
    let n = member.domain().dim() as f64;
    let pulled = member.map.pullback_with(&member.df, alpha)?;
    Ok(pulled.scale(member.a.powf(-(alpha.k as f64) / n)))
}

/// Sampled `‖α‖_{L^∞(M)}` (pointwise Grassmann norm).
pub fn sup_norm(alpha: &AnalyticTargetForm, per_axis: usize) -> f64 {
    if let Some(c) = alpha.as_constant() {
        return c.grassmann_norm();
    }
    alpha.sample_points(per_axis).iter().map(|y| alpha.eval(y).grassmann_norm()).fold(0.0, f64::max)
}

/// Constant-coefficient forms `dx^I` on `T^m`, spanning `H*(T^m)`.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub m: usize,
    pub classes: Vec<(MultiIndex, AnalyticTargetForm)>,
}

impl HarmonicBasis {
    pub fn torus(m: usize) -> Self {
        let classes = (0..=m)
            .flat_map(|k| basis(m, k))
            .map(|idx| {
                let f = AnalyticTargetForm::basis(m, idx.indices(), true).expect("valid index");
                (idx, f)
            })
            .collect();
        Self { m, classes }
    }

    pub fn degree(&self, k: usize) -> impl Iterator<Item = &(MultiIndex, AnalyticTargetForm)> {
        self.classes.iter().filter(move |(i, _)| i.degree() == k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityRow {
    pub j: usize,
    pub class: Vec<usize>,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub rows: Vec<AdmissibilityRow>,
    pub max_ratio: f64,
    pub constant: f64,
    pub pass: bool,
}

/// `max ‖G_j α‖_{L^{p_k}(𝔹)} / (A_j^{k/n} ‖α‖_∞)` over members and basis
/// classes of degree `≤ n`; passes iff at most `c`.
pub fn admissibility_check(seq: &NormalizedSequence, basis: &HarmonicBasis, c: f64, holder: &HolderSequence) -> Result<AdmissibilityReport> {
    let n = seq.dim();
    let hr = holder.validate();
    if !hr.valid || holder.n() != n {
        return Err(Error::Precondition(format!("invalid Hölder sequence: {:?}", hr.violations)));
    }
    let ball = Region::unit_ball(n);
    let mut rows = Vec::new();
    for (j, mem) in seq.members.iter().enumerate() {
        for (idx, alpha) in basis.classes.iter().filter(|(i, _)| i.degree() <= n) {
            let g = normalized_pullback(mem, alpha)?.restricted(&ball);
            let ratio = g.lp_norm(holder.get(idx.degree())) / sup_norm(alpha, 16);
            rows.push(AdmissibilityRow { j, class: idx.indices().to_vec(), ratio });
        }
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(AdmissibilityReport { rows, max_ratio, constant: c, pass: max_ratio <= c })
}

/// Bump test form `φ_{c,s} e_J` with compact support in `𝔹ⁿ₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestForm {
    pub center: Vec<f64>,
    pub radius: f64,
    pub axes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestDictionary {
    pub n: usize,
    pub degree: usize,
    pub entries: Vec<TestForm>,
}

impl TestDictionary {
    pub const MAX_ENTRIES: usize = 200;
    pub const SCALES: [f64; 3] = [0.25, 0.5, 0.75];

    /// Three scales × centres `{−½, 0, ½}ⁿ` × every basis direction,
    /// truncated to [`MAX_ENTRIES`](Self::MAX_ENTRIES).
    pub fn standard(n: usize, degree: usize) -> Self {
        let dirs = basis(n, degree);
        let mut entries = Vec::new();
        for &s in &Self::SCALES {
            for c in 0..3usize.pow(n as u32) {
                let center: Vec<f64> = (0..n).map(|a| ((c / 3usize.pow(a as u32)) % 3) as f64 * 0.5 - 0.5).collect();
                for d in &dirs {
                    entries.push(TestForm { center: center.clone(), radius: s, axes: d.indices().to_vec() });
                }
            }
        }
        entries.truncate(Self::MAX_ENTRIES);
        Self { n, degree, entries }
    }
}

/// `∫ ω ∧ η` for a test form, summed over the support of `η` only.
pub fn pair_with_test(omega: &GridForm, eta: &TestForm) -> Result<f64> {
    let n = omega.dim();
    if omega.degree() + eta.axes.len() != n {
        return Err(Error::DimensionMismatch { expected: n - omega.degree(), got: eta.axes.len() });
    }
    let j = MultiIndex::new(&eta.axes, n)?;
    let i = j.complement(n);
    let sign = KCovector::basis_element(n, i.indices())?.wedge(&KCovector::basis_element(n, &eta.axes)?)?.coeffs()[0];
    let slot = i.rank(n);
    let dom = omega.domain();
    let mut acc = 0.0;
    let mut x = vec![0.0; n];
    for p in ball_points(dom, &eta.center, eta.radius) {
        dom.point_into(p, &mut x);
        acc += omega.at(p)[slot] * bump_profile(&x, &eta.center, eta.radius);
    }
    Ok(sign * acc * dom.cell_volume())
}

/// `‖dη‖_{L¹}` on the given grid, with `|dη| = |∇φ ∧ e_J|`.
pub fn test_form_d_norm(dom: &GridDomain, eta: &TestForm) -> f64 {
    let n = dom.dim();
    let s2 = eta.radius * eta.radius;
    let mut x = vec![0.0; n];
    let mut acc = 0.0;
    for p in ball_points(dom, &eta.center, eta.radius) {
        dom.point_into(p, &mut x);
        let t = crate::grid::dist2(&x, &eta.center) / s2;
        if t >= 1.0 {
            continue;
        }
        let g = 8.0 * (1.0 - t).powi(3) / s2;
        let free: f64 = (0..n).filter(|a| !eta.axes.contains(a)).map(|a| (g * (x[a] - eta.center[a])).powi(2)).sum();
        acc += free.sqrt();
    }
    acc * dom.cell_volume()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub j: usize,
    pub radius: f64,
    pub a: f64,
    pub max_pairing: f64,
    /// `max_pairing · A_j^{1/n}`.
    pub scaled: f64,
    /// `max_η |P_j(η)| / (A_j^{−1/n} ‖α‖_∞ ‖dη‖₁)` for exact forms.
    pub bound_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of `log max_pairing` against `log A_j`.
    pub slope: Option<f64>,
    /// All bound ratios at most 3 (exact forms only).
    pub consistent: Option<bool>,
}

/// Allowed factor between measured pairings and the `A_j^{−1/n}` bound.
pub const DECAY_FACTOR: f64 = 3.0;

fn pairing_rows(seq: &NormalizedSequence, form: &AnalyticTargetForm, dict: &TestDictionary) -> Result<Vec<(f64, Vec<f64>)>> {
    seq.members
        .iter()
        .map(|mem| {
            let g = normalized_pullback(mem, form)?;
            let p: Result<Vec<f64>> = dict.entries.par_iter().map(|e| pair_with_test(&g, e)).collect();
            Ok((mem.a, p?))
        })
        .collect()
}

fn fit_slope(rows: &[DecayRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.max_pairing > 0.0).map(|r| (r.a.ln(), r.max_pairing.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Dictionary pairings of `G_j^! β` for a closed `k`-form `β` (no bound).
pub fn pairing_table(seq: &NormalizedSequence, beta: &AnalyticTargetForm, dict: &TestDictionary) -> Result<DecayTable> {
    let n = seq.dim() as f64;
    let rows: Vec<DecayRow> = pairing_rows(seq, beta, dict)?
        .into_iter()
        .enumerate()
        .map(|(j, (a, p))| {
            let max_pairing = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            DecayRow { j, radius: seq.members[j].radius, a, max_pairing, scaled: max_pairing * a.powf(1.0 / n), bound_ratio: None }
        })
        .collect();
    let slope = fit_slope(&rows);
    Ok(DecayTable { rows, slope, consistent: None })
}

/// Pairings `|∫ η ∧ G_j^! dα|` against the bound `A_j^{−1/n} ‖α‖_∞ ‖dη‖₁`.
pub fn exact_form_decay(seq: &NormalizedSequence, alpha: &AnalyticTargetForm, dict: &TestDictionary) -> Result<DecayTable> {
    let n = seq.dim();
    if dict.degree + alpha.k + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - alpha.k - 1, got: dict.degree });
    }
    let da = alpha.exterior_derivative()?;
    let sup = sup_norm(alpha, 16);
    let mut rows = Vec::new();
    for (j, (a, p)) in pairing_rows(seq, &da, dict)?.into_iter().enumerate() {
        let dom = seq.members[j].domain();
        let scale = a.powf(-1.0 / n as f64) * sup;
        let mut ratio: f64 = 0.0;
        for (e, v) in dict.entries.iter().zip(&p) {
            let bound = scale * test_form_d_norm(dom, e);
            if bound > 0.0 {
                ratio = ratio.max(v.abs() / bound);
            }
        }
        let max_pairing = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rows.push(DecayRow {
            j,
            radius: seq.members[j].radius,
            a,
            max_pairing,
            scaled: max_pairing * a.powf(1.0 / n as f64),
            bound_ratio: Some(ratio),
        });
    }
    let consistent = rows.iter().all(|r| r.bound_ratio.unwrap_or(0.0) <= DECAY_FACTOR);
    let slope = fit_slope(&rows);
    Ok(DecayTable { rows, slope, consistent: Some(consistent) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub j: usize,
    pub a: f64,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Smooth cut-off: 1 on `𝔹ⁿ`, 0 outside `𝔹ⁿ_{1.9}`.
pub fn unit_cutoff(x: &[f64]) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let t = ((r - 1.0) / 0.9).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// `∫_{𝔹₂} η A_j^{−1} ⋆F_j*ω ≥ 1/K − (1 + D)/(K A_j)` per member.
pub fn pairing_lower_bound(seq: &NormalizedSequence) -> Result<Vec<LowerBoundRow>> {
    let (k, d) = (seq.params.k, seq.params.d);
    seq.members
        .iter()
        .enumerate()
        .map(|(j, mem)| {
            let star = star_pullback(&mem.map, &mem.df, &seq.params.omega)?;
            let eta = GridForm::scalar(mem.domain(), unit_cutoff)?;
            let value = star.mul_scalar_field(&eta)?.restricted(&Region::ball(&vec![0.0; seq.dim()], 2.0)).integrate_scalar()? / mem.a;
            let bound = 1.0 / k - (1.0 + d) / (k * mem.a);
            Ok(LowerBoundRow { j, a: mem.a, value, bound, pass: value >= bound })
        })
        .collect()
}
