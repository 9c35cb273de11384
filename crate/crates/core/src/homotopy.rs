//! The Poincaré homotopy operator `T` on a ball or cube `D`, evaluated through
//! its singular kernel
//!
//! ```text
//! (Tω)_x = ∫_D ω_z ⌟ ζ(z, x − z) dz,   ζ(z, v) = g(z, v) v / |v|ⁿ,
//! g(z, v) = Σ_{m=k}^{n} C(n−k, m−k) |v|^{n−m} ∫₀^∞ s^{m−1} φ(z − s v/|v|) ds.
//! ```
//!
//! The binomial sum collapses to `∫₀^∞ s^{k−1} (|v| + s)^{n−k} φ(z − s v̂) ds`;
//! along a ray the quartic bump `φ` is a polynomial on a computable chord, so
//! Gauss–Legendre quadrature on that chord is exact up to rounding.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::binomial;
use crate::algebra::tables::ContractTable;
use crate::error::{Error, Result};
use crate::grid::{bump_integral, dist2, Exponent, GridDomain, GridForm, Region};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    for i in 0..count {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (count as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=count {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if count == 1 {
                p0 = 1.0;
            }
            dp = count as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Treatment of the grid cell containing the evaluation point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SingularCell {
    /// Omit the cell (first-order error).
    Skip,
    /// Split the cell into pyramids with apex at `x`; the Duffy substitution
    /// cancels the `|v|^{1−n}` singularity and Gauss–Legendre with `nodes`
    /// points per axis integrates the remainder. Cells within `near` index
    /// steps of `x` use a `nodes^n` product rule instead of the midpoint rule.
    Duffy { nodes: usize, near: usize },
}

/// The smoothing kernel `φ = c(1 − |y − y_φ|²/ρ²)⁴` with unit integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Gauss–Legendre nodes on the ray chord.
    pub nodes: usize,
    pub singular: SingularCell,
}

impl KernelConfig {
    /// Canonical choice: centred in `D`, radius half the inradius, Duffy
    /// treatment of the singular cell.
    pub fn canonical(region: &Region) -> Self {
        Self {
            center: region.center(),
            radius: 0.5 * region.inradius(),
            nodes: 32,
            singular: SingularCell::Duffy { nodes: 4, near: 2 },
        }
    }

    pub fn with_singular(mut self, singular: SingularCell) -> Self {
        self.singular = singular;
        self
    }

    pub fn phi(&self, y: &[f64]) -> f64 {
        let t = dist2(y, &self.center) / (self.radius * self.radius);
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - t).powi(4) / bump_integral(self.center.len(), self.radius)
        }
    }
}

/// `T` on a fixed domain for forms of a fixed degree `k ≥ 1`.
#[derive(Clone, Debug)]
pub struct TOperator {
    region: Region,
    kernel: KernelConfig,
    k: usize,
    /// Radius of a ball `B ⊇ D̄` concentric with `D`; the cut-off `η` is 1 on
    /// `2B` and vanishes outside `3B`.
    outer_radius: f64,
    gl: (Vec<f64>, Vec<f64>),
    norm: f64,
}

impl TOperator {
    pub fn new(region: &Region, kernel: KernelConfig, k: usize) -> Result<Self> {
        let n = region.dim();
        if k == 0 || k > n {
            return Err(Error::DegreeOutOfRange { degree: k, n });
        }
        if kernel.center.len() != n
            || !(kernel.radius > 0.0)
            || kernel.nodes == 0
            || matches!(kernel.singular, SingularCell::Duffy { nodes: 0, .. })
        {
            return Err(Error::InvalidConfig("smoothing kernel parameters".into()));
        }
        if !region.contains_ball(&kernel.center, kernel.radius) {
            return Err(Error::NotContained("smoothing kernel support must lie in D".into()));
        }
        let outer_radius = match region {
            Region::Ball { radius, .. } => *radius,
            Region::Box { lower, upper } => {
                0.5 * lower.iter().zip(upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>().sqrt()
            }
        };
        let norm = 1.0 / bump_integral(n, kernel.radius);
        let gl = gauss_legendre(kernel.nodes);
        Ok(Self { region: region.clone(), kernel, k, outer_radius, gl, norm })
    }

    /// Canonical operator: `φ` centred in `D` with radius half the inradius.
    pub fn canonical(region: &Region, k: usize) -> Result<Self> {
        Self::new(region, KernelConfig::canonical(region), k)
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Size parameter `r`: the radius of a ball, the side of a cube.
    pub fn scale(&self) -> f64 {
        match &self.region {
            Region::Ball { radius, .. } => *radius,
            Region::Box { lower, upper } => upper[0] - lower[0],
        }
    }

    /// The scalar `g_ζ(z, v) ≥ 0`.
    pub fn g_zeta(&self, z: &[f64], v: &[f64]) -> f64 {
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.g_with_len(z, v, len)
    }

    fn g_with_len(&self, z: &[f64], v: &[f64], len: f64) -> f64 {
        let n = z.len();
        let rho = self.kernel.radius;
        let c = &self.kernel.center;
        // chord of the ray s ↦ z − s v̂ through the support of φ
        let mut b = 0.0;
        let mut w2 = 0.0;
        for a in 0..n {
            let w = z[a] - c[a];
            b += w * v[a] / len;
            w2 += w * w;
        }
        // |w − s v̂|² = w2 − 2 s b + s² with b = w·v̂
        let disc = b * b - w2 + rho * rho;
        if disc <= 0.0 {
            return 0.0;
        }
        let root = disc.sqrt();
        let hi = b + root;
        if hi <= 0.0 {
            return 0.0;
        }
        let lo = (b - root).max(0.0);
        let (half, mid) = (0.5 * (hi - lo), 0.5 * (hi + lo));
        let (nodes, weights) = &self.gl;
        let mut acc = 0.0;
        for (t, wt) in nodes.iter().zip(weights) {
            let s = mid + half * t;
            let q = (w2 - 2.0 * s * b + s * s) / (rho * rho);
            if q >= 1.0 {
                continue;
            }
            let phi = (1.0 - q).powi(4);
            acc += wt * s.powi(self.k as i32 - 1) * (len + s).powi((n - self.k) as i32) * phi;
        }
        acc * half * self.norm
    }

    /// The vector kernel `ζ(z, v)`.
    pub fn zeta(&self, z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            return Err(Error::InvalidConfig("zeta is undefined at v = 0".into()));
        }
        let g = self.g_with_len(z, v, len);
        let s = g / len.powi(z.len() as i32);
        Ok(v.iter().map(|x| s * x).collect())
    }

    /// Cut-off `η(|v|)`: 1 on `2B`, 0 outside `3B`, C² in between.
    fn eta(&self, len: f64) -> f64 {
        let t = (len - 2.0 * self.outer_radius) / self.outer_radius;
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    fn check_input(&self, omega: &GridForm) -> Result<()> {
        if omega.degree() != self.k {
            return Err(Error::DegreeOutOfRange { degree: omega.degree(), n: omega.dim() });
        }
        if omega.dim() != self.region.dim() {
            return Err(Error::DimensionMismatch { expected: self.region.dim(), got: omega.dim() });
        }
        Ok(())
    }

    /// `(T̃ω)_x` at arbitrary points; the grid cell containing `x` is skipped.
    pub fn apply_at(&self, omega: &GridForm, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_input(omega)?;
        let dom = omega.domain().as_ref();
        let n = dom.dim();
        let nin = omega.ncoeffs();
        let nout = binomial(n, self.k - 1);
        let table = ContractTable::new(n, self.k);
        let cell = dom.cell_volume();
        // in-D cells with non-zero coefficients
        let sources: Vec<(usize, Vec<f64>)> = (0..dom.len())
            .filter(|&i| dom.in_domain(i) && self.region.contains(&dom.point(i)) && omega.at(i).iter().any(|c| *c != 0.0))
            .map(|i| (i, dom.point(i)))
            .collect();
        let out: Vec<Vec<f64>> = points
            .par_iter()
            .map(|x| {
                let skip = dom.locate(x);
                let mut home = vec![0usize; n];
                let mut other = vec![0usize; n];
                if let Some(s) = skip {
                    dom.multi_index(s, &mut home);
                }
                let mut acc = vec![0.0; nout];
                let mut v = vec![0.0; n];
                for (i, z) in &sources {
                    let c = &omega.values()[i * nin..(i + 1) * nin];
                    if skip == Some(*i) {
                        if let SingularCell::Duffy { nodes, .. } = self.kernel.singular {
                            self.duffy_cell(dom, z, x, nodes, c, &table, &mut acc);
                        }
                        continue;
                    }
                    if let (Some(_), SingularCell::Duffy { nodes, near }) = (skip, self.kernel.singular) {
                        dom.multi_index(*i, &mut other);
                        if home.iter().zip(&other).all(|(a, b)| a.abs_diff(*b) <= near) {
                            self.product_cell(dom, z, x, nodes, c, &table, &mut acc);
                            continue;
                        }
                    }
                    let mut len2 = 0.0;
                    for a in 0..n {
                        v[a] = x[a] - z[a];
                        len2 += v[a] * v[a];
                    }
                    let len = len2.sqrt();
                    let eta = self.eta(len);
                    if eta == 0.0 {
                        continue;
                    }
                    let g = self.g_with_len(z, &v, len);
                    if g == 0.0 {
                        continue;
                    }
                    let w = eta * g * cell / len.powi(n as i32);
                    table.apply_acc(&omega.values()[i * nin..(i + 1) * nin], &v, w, &mut acc);
                }
                acc
            })
            .collect();
        Ok(out.into_iter().flatten().collect())
    }

    /// `∫_cell ω ⌟ ζ(z, x − z) dz` with `ω` frozen, for `x` inside the cell
    /// centred at `zc`: one pyramid per face, `z = x + t (q − x)` with `q` on
    /// the face, `dz = t^{n−1} d_face dq dt`.
    #[allow(clippy::too_many_arguments)]
    fn duffy_cell(
        &self,
        dom: &GridDomain,
        zc: &[f64],
        x: &[f64],
        nodes: usize,
        coeffs: &[f64],
        table: &ContractTable,
        acc: &mut [f64],
    ) {
        let n = x.len();
        let h = dom.spacing();
        let (gx, gw) = gauss_legendre(nodes);
        let m = nodes.pow(n as u32 - 1);
        let mut q = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut v = vec![0.0; n];
        for axis in 0..n {
            for side in [-1.0, 1.0] {
                let face = zc[axis] + side * 0.5 * h[axis];
                let height = (face - x[axis]).abs();
                if height == 0.0 {
                    continue;
                }
                for f in 0..m {
                    let mut rem = f;
                    let mut wq = 1.0;
                    for a in 0..n {
                        if a == axis {
                            q[a] = face;
                            continue;
                        }
                        let j = rem % nodes;
                        rem /= nodes;
                        q[a] = zc[a] + 0.5 * h[a] * gx[j];
                        wq *= 0.5 * h[a] * gw[j];
                    }
                    for (tn, tw) in gx.iter().zip(&gw) {
                        let t = 0.5 * (tn + 1.0);
                        let mut len2 = 0.0;
                        for a in 0..n {
                            z[a] = x[a] + t * (q[a] - x[a]);
                            v[a] = x[a] - z[a];
                            len2 += v[a] * v[a];
                        }
                        let len = len2.sqrt();
                        let g = self.g_with_len(&z, &v, len);
                        if g == 0.0 {
                            continue;
                        }
                        let jac = 0.5 * tw * wq * height * t.powi(n as i32 - 1);
                        table.apply_acc(coeffs, &v, jac * g / len.powi(n as i32), acc);
                    }
                }
            }
        }
    }

    /// `∫_cell ω ⌟ ζ(z, x − z) dz` with `ω` frozen, by a tensor rule.
    #[allow(clippy::too_many_arguments)]
    fn product_cell(
        &self,
        dom: &GridDomain,
        zc: &[f64],
        x: &[f64],
        nodes: usize,
        coeffs: &[f64],
        table: &ContractTable,
        acc: &mut [f64],
    ) {
        let n = x.len();
        let h = dom.spacing();
        let (gx, gw) = gauss_legendre(nodes);
        let mut z = vec![0.0; n];
        let mut v = vec![0.0; n];
        for f in 0..nodes.pow(n as u32) {
            let mut rem = f;
            let mut w = 1.0;
            let mut len2 = 0.0;
            for a in 0..n {
                let j = rem % nodes;
                rem /= nodes;
                z[a] = zc[a] + 0.5 * h[a] * gx[j];
                w *= 0.5 * h[a] * gw[j];
                v[a] = x[a] - z[a];
                len2 += v[a] * v[a];
            }
            let len = len2.sqrt();
            let eta = self.eta(len);
            let g = self.g_with_len(&z, &v, len);
            if g == 0.0 || eta == 0.0 {
                continue;
            }
            table.apply_acc(coeffs, &v, eta * w * g / len.powi(n as i32), acc);
        }
    }

    /// `T̃ω` at every grid point of `ω`'s grid (equal to `Tω` inside `D`).
    pub fn apply(&self, omega: &GridForm) -> Result<GridForm> {
        let dom = omega.domain();
        let points: Vec<Vec<f64>> = (0..dom.len()).map(|i| dom.point(i)).collect();
        let values = self.apply_at(omega, &points)?;
        GridForm::from_values(dom, self.k - 1, values)
    }

    /// `‖ω − Tdω − dTω‖_{L¹(σD)} / ‖ω‖_{L¹(σD)}`.
    pub fn homotopy_residual(&self, omega: &GridForm, sigma: f64) -> Result<f64> {
        self.check_input(omega)?;
        let n = omega.dim();
        let shrunk = self.region.scaled(sigma);
        let dt = self.apply(omega)?.exterior_derivative()?;
        let mut recon = dt;
        if self.k < n {
            let t_next = TOperator::new(&self.region, self.kernel.clone(), self.k + 1)?;
            recon = recon.add(&t_next.apply(&omega.exterior_derivative()?)?)?;
        }
        let denom = omega.restricted(&shrunk).lp_norm(Exponent::Finite(1.0));
        if denom == 0.0 {
            return Err(Error::InvalidConfig("homotopy residual of the zero form".into()));
        }
        Ok(omega.sub(&recon)?.restricted(&shrunk).lp_norm(Exponent::Finite(1.0)) / denom)
    }

    /// `‖Tω‖_{L^p(D)} / (r ‖ω‖_{L^p(D)})`, any `p ∈ [1, ∞]`.
    pub fn norm_ratio(&self, omega: &GridForm, p: Exponent) -> Result<f64> {
        self.ratio(omega, p, p)
    }

    /// `‖Tω‖_{L^p(D)} / (r^{n/p + 1 − n/q} ‖ω‖_{L^q(D)})` for admissible
    /// `q ∈ (1, ∞]`, `q⁻¹ ≤ p⁻¹ + n⁻¹`, `(p, q) ≠ (∞, n)`.
    pub fn embedding_ratio(&self, omega: &GridForm, p: Exponent, q: Exponent) -> Result<f64> {
        let n = omega.dim() as f64;
        let (rp, rq) = (p.reciprocal(), q.reciprocal());
        if rq > rp + 1.0 / n + 1e-12 || rq >= 1.0 || (p.is_infinite() && (rq - 1.0 / n).abs() < 1e-12) {
            return Err(Error::InadmissibleExponents { p: p.value(), q: q.value() });
        }
        self.ratio(omega, p, q)
    }

    fn ratio(&self, omega: &GridForm, p: Exponent, q: Exponent) -> Result<f64> {
        let n = omega.dim() as f64;
        let t = self.apply(omega)?.restricted(&self.region);
        let w = omega.restricted(&self.region);
        let r = self.scale();
        let denom = r.powf(n * p.reciprocal() + 1.0 - n * q.reciprocal()) * w.lp_norm(q);
        if denom == 0.0 {
            return Err(Error::InvalidConfig("norm ratio of the zero form".into()));
        }
        Ok(t.lp_norm(p) / denom)
    }

    /// Contribution of the skipped singular cell at each grid point, computed
    /// with a `sub^n` midpoint rule (the centre is never a node for even
    /// `sub`); returned as its `L¹(D)` norm.
    pub fn singular_cell_contribution(&self, omega: &GridForm, sub: usize) -> Result<f64> {
        self.check_input(omega)?;
        let dom = omega.domain().clone();
        let n = dom.dim();
        let h = dom.spacing().to_vec();
        let nin = omega.ncoeffs();
        let nout = binomial(n, self.k - 1);
        let table = ContractTable::new(n, self.k);
        let sub_vol: f64 = h.iter().map(|h| h / sub as f64).product();
        let count = sub.pow(n as u32);
        let vals: Vec<f64> = (0..dom.len())
            .into_par_iter()
            .map(|i| {
                if !dom.in_domain(i) {
                    return 0.0;
                }
                let x = dom.point(i);
                let mut acc = vec![0.0; nout];
                let mut z = vec![0.0; n];
                let mut v = vec![0.0; n];
                for s in 0..count {
                    let mut rem = s;
                    let mut len2 = 0.0;
                    for a in 0..n {
                        let j = rem % sub;
                        rem /= sub;
                        let off = ((j as f64 + 0.5) / sub as f64 - 0.5) * h[a];
                        z[a] = x[a] + off;
                        v[a] = -off;
                        len2 += off * off;
                    }
                    let len = len2.sqrt();
                    let w = self.g_with_len(&z, &v, len) * sub_vol / len.powi(n as i32);
                    // ω frozen at the cell's sample value
                    table.apply_acc(&omega.values()[i * nin..(i + 1) * nin], &v, w, &mut acc);
                }
                acc.iter().map(|c| c * c).sum::<f64>().sqrt()
            })
            .collect();
        let f = GridForm::from_values(&dom, 0, vals)?.restricted(&self.region);
        f.integrate_scalar()
    }

    /// `‖T̃ω − τ_h T̃ω‖_{L^p}` over the grid's bounding box for shifts `h e₁`.
    pub fn equicontinuity(&self, omega: &GridForm, p: Exponent, shifts: &[f64]) -> Result<Vec<(f64, f64)>> {
        let dom = omega.domain();
        let base: Vec<Vec<f64>> = (0..dom.len()).map(|i| dom.point(i)).collect();
        let t0 = self.apply_at(omega, &base)?;
        let full = Arc::new(GridDomain::with_bounds(
            dom.lower(),
            &dom.upper(),
            dom.resolution(),
            Region::Box { lower: dom.lower().to_vec(), upper: dom.upper() },
        )?);
        shifts
            .iter()
            .map(|&h| {
                let diff = if h == 0.0 {
                    vec![0.0; t0.len()]
                } else {
                    let moved: Vec<Vec<f64>> = base
                        .iter()
                        .map(|x| {
                            let mut y = x.clone();
                            y[0] += h;
                            y
                        })
                        .collect();
                    let th = self.apply_at(omega, &moved)?;
                    t0.iter().zip(&th).map(|(a, b)| a - b).collect()
                };
                Ok((h, GridForm::from_values(&full, self.k - 1, diff)?.lp_norm(p)))
            })
            .collect()
    }
}
