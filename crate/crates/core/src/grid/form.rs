use std::sync::Arc;

use rayon::prelude::*;

use super::domain::{dist2, GridDomain, Region};
use super::holder::Exponent;
use crate::algebra::tables::WedgeTable;
use crate::algebra::{basis_masks, binomial, merge_sign, rank_of_mask, KCovector, MultiIndex};
use crate::error::{Error, Result};

/// A k-form field sampled at the cell centres of a grid; coefficients are
/// stored point-major, then in lexicographic basis order.
#[derive(Clone, Debug)]
pub struct GridForm {
    domain: Arc<GridDomain>,
    k: usize,
    values: Vec<f64>,
}

impl GridForm {
    pub fn zeros(domain: &Arc<GridDomain>, k: usize) -> Result<Self> {
        let n = domain.dim();
        if k > n {
            return Err(Error::DegreeOutOfRange { degree: k, n });
        }
        Ok(Self { domain: domain.clone(), k, values: vec![0.0; domain.len() * binomial(n, k)] })
    }

    pub fn from_values(domain: &Arc<GridDomain>, k: usize, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::zeros(domain, k)?;
        if values.len() != f.values.len() {
            return Err(Error::DimensionMismatch { expected: f.values.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("form coefficient {i}")));
        }
        f.values = values;
        Ok(f)
    }

    /// Samples `f(x, coeffs_out)` at every grid point (in parallel).
    pub fn from_fn<F>(domain: &Arc<GridDomain>, k: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let mut out = Self::zeros(domain, k)?;
        let nc = out.ncoeffs();
        let dom = domain.as_ref();
        out.values.par_chunks_mut(nc).enumerate().for_each_init(
            || vec![0.0; dom.dim()],
            |x, (i, c)| {
                dom.point_into(i, x);
                f(x, c);
            },
        );
        if out.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sampled form".into()));
        }
        Ok(out)
    }

    pub fn scalar<F>(domain: &Arc<GridDomain>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Self::from_fn(domain, 0, |x, c| c[0] = f(x))
    }

    pub fn constant(domain: &Arc<GridDomain>, a: &KCovector) -> Result<Self> {
        if a.dim() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), got: a.dim() });
        }
        let values = a.coeffs().repeat(domain.len());
        Ok(Self { domain: domain.clone(), k: a.degree(), values })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn ncoeffs(&self) -> usize {
        binomial(self.dim(), self.k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize) -> &[f64] {
        let nc = self.ncoeffs();
        &self.values[i * nc..(i + 1) * nc]
    }

    pub fn covector_at(&self, i: usize) -> KCovector {
        KCovector::new(self.dim(), self.k, self.at(i).to_vec()).expect("consistent storage")
    }

    /// The same samples viewed on `domain` (which must be the same grid).
    pub fn on_domain(&self, domain: &Arc<GridDomain>) -> Result<Self> {
        if !self.domain.same_grid(domain) {
            return Err(Error::InvalidGrid("forms live on different grids".into()));
        }
        Ok(Self { domain: domain.clone(), k: self.k, values: self.values.clone() })
    }

    /// The same samples with reductions restricted to `region`.
    pub fn restricted(&self, region: &Region) -> Self {
        Self { domain: Arc::new(self.domain.restricted(region)), k: self.k, values: self.values.clone() }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.domain.same_grid(&other.domain) {
            return Err(Error::InvalidGrid("forms live on different grids".into()));
        }
        Ok(())
    }

    pub fn map_coeffs(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { domain: self.domain.clone(), k: self.k, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coeffs(|v| s * v)
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        if self.k != other.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: other.k });
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { domain: self.domain.clone(), k: self.k, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Pointwise product with a 0-form.
    pub fn mul_scalar_field(&self, s: &GridForm) -> Result<Self> {
        self.check_compatible(s)?;
        if s.k != 0 {
            return Err(Error::DimensionMismatch { expected: 0, got: s.k });
        }
        let nc = self.ncoeffs();
        let values = self.values.iter().enumerate().map(|(j, v)| v * s.values[j / nc]).collect();
        Ok(Self { domain: self.domain.clone(), k: self.k, values })
    }

    /// Pointwise wedge product.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let n = self.dim();
        if self.k + other.k > n {
            return Err(Error::DegreeOutOfRange { degree: self.k + other.k, n });
        }
        let table = WedgeTable::new(n, self.k, other.k);
        let (na, nb) = (self.ncoeffs(), other.ncoeffs());
        let mut values = vec![0.0; self.domain.len() * table.out_len];
        values.par_chunks_mut(table.out_len).enumerate().for_each(|(i, out)| {
            table.apply(&self.values[i * na..(i + 1) * na], &other.values[i * nb..(i + 1) * nb], out);
        });
        Ok(Self { domain: self.domain.clone(), k: self.k + other.k, values })
    }

    pub fn hodge_star(&self) -> Self {
        let n = self.dim();
        let full = (1u32 << n) - 1;
        let perm: Vec<(usize, f64)> = basis_masks(n, self.k)
            .into_iter()
            .map(|m| (rank_of_mask(full & !m, n), merge_sign(m, full & !m)))
            .collect();
        let nc = self.ncoeffs();
        let mut values = vec![0.0; self.values.len()];
        for (src, dst) in self.values.chunks(nc).zip(values.chunks_mut(nc)) {
            for (i, &(j, s)) in perm.iter().enumerate() {
                dst[j] = s * src[i];
            }
        }
        Self { domain: self.domain.clone(), k: n - self.k, values }
    }

    /// Pointwise Grassmann norms as a 0-form.
    pub fn pointwise_norm(&self) -> Self {
        let values = self.values.chunks(self.ncoeffs()).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        Self { domain: self.domain.clone(), k: 0, values }
    }

    /// Discrete exterior derivative: central differences in the interior,
    /// one-sided differences on the outer layer of the grid.
    pub fn exterior_derivative(&self) -> Result<Self> {
        let n = self.dim();
        if self.k >= n {
            return Err(Error::DegreeOutOfRange { degree: self.k + 1, n });
        }
        let table = derivative_table(n, self.k);
        let (nin, nout) = (self.ncoeffs(), binomial(n, self.k + 1));
        let dom = self.domain.as_ref();
        let src = &self.values;
        let mut values = vec![0.0; dom.len() * nout];
        values.par_chunks_mut(nout).enumerate().for_each_init(
            || (vec![0usize; n], vec![0.0; n * nin]),
            |(idx, grad), (i, out)| {
                dom.multi_index(i, idx);
                for a in 0..n {
                    for c in 0..nin {
                        grad[a * nin + c] = difference(dom, idx, i, a, |j| src[j * nin + c]);
                    }
                }
                for &(a, ci, co, s) in &table {
                    out[co] += s * grad[a * nin + ci];
                }
            },
        );
        Ok(Self { domain: self.domain.clone(), k: self.k + 1, values })
    }

    /// Riemann-sum `L^p` norm over in-domain cells; `p = ∞` is the maximum.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        let dom = &self.domain;
        let norms = self.values.chunks(self.ncoeffs()).zip(dom.mask()).filter(|(_, m)| **m);
        match p {
            Exponent::Infinity => norms.map(|(c, _)| norm(c)).fold(0.0, f64::max),
            Exponent::Finite(p) => {
                let mut acc = 0.0;
                for (c, _) in norms {
                    acc += norm(c).powf(p);
                }
                (acc * dom.cell_volume()).powf(1.0 / p)
            }
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.lp_norm(Exponent::Infinity)
    }

    /// `∫ ω` for a top-degree form.
    pub fn integrate_top(&self) -> Result<f64> {
        if self.k != self.dim() {
            return Err(Error::DegreeOutOfRange { degree: self.k, n: self.dim() });
        }
        Ok(self.masked_sum())
    }

    /// `∫ f` for a 0-form.
    pub fn integrate_scalar(&self) -> Result<f64> {
        if self.k != 0 {
            return Err(Error::DegreeOutOfRange { degree: self.k, n: self.dim() });
        }
        Ok(self.masked_sum())
    }

    fn masked_sum(&self) -> f64 {
        let mut acc = 0.0;
        for (v, m) in self.values.iter().zip(self.domain.mask()) {
            if *m {
                acc += v;
            }
        }
        acc * self.domain.cell_volume()
    }

    /// `∫ ω ∧ η` for complementary degrees.
    pub fn pairing(&self, eta: &Self) -> Result<f64> {
        if self.k + eta.k != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim() - self.k, got: eta.k });
        }
        self.wedge(eta)?.integrate_top()
    }

    /// `max_i |ω_i − η_i|` over all coefficients.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn norm(c: &[f64]) -> f64 {
    if c.len() == 1 {
        c[0].abs()
    } else {
        c.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Entries `(axis, in, out, sign)` of `d(ω_I dx^I) = Σ_a ∂_a ω_I dx^a ∧ dx^I`.
fn derivative_table(n: usize, k: usize) -> Vec<(usize, usize, usize, f64)> {
    let mut t = Vec::new();
    for (ci, &m) in basis_masks(n, k).iter().enumerate() {
        for a in 0..n {
            let s = merge_sign(1 << a, m);
            if s != 0.0 {
                t.push((a, ci, rank_of_mask(m | (1 << a), n), s));
            }
        }
    }
    t
}

/// Finite difference of `value` along `axis` at flat point `i` (multi-index `idx`).
#[inline]
pub(crate) fn difference(dom: &GridDomain, idx: &[usize], i: usize, axis: usize, value: impl Fn(usize) -> f64) -> f64 {
    let s = dom.strides()[axis];
    let h = dom.spacing()[axis];
    let last = dom.resolution()[axis] - 1;
    if idx[axis] == 0 {
        (value(i + s) - value(i)) / h
    } else if idx[axis] == last {
        (value(i) - value(i - s)) / h
    } else {
        (value(i + s) - value(i - s)) / (2.0 * h)
    }
}

/// `Γ(n/2 + 5)` by the half-integer recursion.
fn gamma_half_plus_five(n: usize) -> f64 {
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    let mut g = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let target = n as f64 / 2.0 + 5.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `∫_{B(0,R)} (1 − |x|²/R²)⁴ dx = 24 π^{n/2} Rⁿ / Γ(n/2 + 5)`.
pub fn bump_integral(n: usize, radius: f64) -> f64 {
    24.0 * std::f64::consts::PI.powf(n as f64 / 2.0) * radius.powi(n as i32) / gamma_half_plus_five(n)
}

/// Profile `(1 − |x − c|²/r²)⁴` on the ball, zero outside.
#[inline]
pub fn bump_profile(x: &[f64], center: &[f64], radius: f64) -> f64 {
    let t = dist2(x, center) / (radius * radius);
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - t).powi(4)
    }
}

/// Bump test form `c φ(x) e_I`. With `normalize` and `k = n`, `c` is chosen
/// so that the exact integral of the form is 1.
pub fn bump_form(
    domain: &Arc<GridDomain>,
    center: &[f64],
    radius: f64,
    index: &MultiIndex,
    normalize: bool,
) -> Result<GridForm> {
    let n = domain.dim();
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.len() });
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig("bump radius must be positive".into()));
    }
    if !domain.region().contains_ball(center, radius) {
        return Err(Error::NotContained(format!("bump ball at {center:?} radius {radius}")));
    }
    let k = index.degree();
    let slot = index.rank(n);
    let c = if normalize && k == n { 1.0 / bump_integral(n, radius) } else { 1.0 };
    GridForm::from_fn(domain, k, |x, out| out[slot] = c * bump_profile(x, center, radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(n: usize, res: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::cube(0.0, 1.0, n, res).unwrap())
    }

    #[test]
    fn derivative_of_linear_coefficient() {
        let d = unit_box(2, 16);
        let w = GridForm::from_fn(&d, 1, |x, c| c[1] = x[0]).unwrap();
        let dw = w.exterior_derivative().unwrap();
        for i in 0..d.len() {
            assert!((dw.at(i)[0] - 1.0).abs() < 1e-12);
        }
        let c = GridForm::constant(&d, &KCovector::from_vector(&[1.0, 2.0])).unwrap();
        assert!(c.exterior_derivative().unwrap().max_norm() == 0.0);
        assert!(GridForm::constant(&d, &KCovector::volume(2)).unwrap().exterior_derivative().is_err());
    }

    #[test]
    fn norms_and_integrals() {
        let d = unit_box(2, 8);
        let c = GridForm::constant(&d, &KCovector::from_vector(&[3.0, 4.0])).unwrap();
        assert!((c.lp_norm(Exponent::Finite(2.0)) - 5.0).abs() < 1e-12);
        assert!((c.lp_norm(Exponent::Finite(1.0)) - 5.0).abs() < 1e-12);
        assert_eq!(c.max_norm(), 5.0);
        let vol = GridForm::constant(&d, &KCovector::volume(2)).unwrap();
        assert!((vol.integrate_top().unwrap() - 1.0).abs() < 1e-12);
        let sym = Arc::new(GridDomain::cube(-1.0, 1.0, 2, 10).unwrap());
        let odd = GridForm::from_fn(&sym, 2, |x, c| c[0] = x[0]).unwrap();
        assert!(odd.integrate_top().unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_pairing_in_four_dimensions() {
        let d = unit_box(4, 4);
        let a = GridForm::constant(&d, &KCovector::basis_element(4, &[0, 1]).unwrap()).unwrap();
        let b = GridForm::constant(&d, &KCovector::basis_element(4, &[2, 3]).unwrap()).unwrap();
        assert!((a.pairing(&b).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(a.pairing(&b.scale(0.0)).unwrap(), 0.0);
        assert!(a.pairing(&a.hodge_star().wedge(&GridForm::zeros(&d, 0).unwrap()).unwrap()).is_ok());
    }

    #[test]
    fn bump_closed_form_normalization() {
        // independent radial quadrature of (1 - t^2)^4 t^{n-1}
        for n in 1..=4 {
            let steps = 200_000;
            let mut radial = 0.0;
            for s in 0..steps {
                let t = (s as f64 + 0.5) / steps as f64;
                radial += (1.0 - t * t).powi(4) * t.powi(n as i32 - 1) / steps as f64;
            }
            let surface = n as f64 * crate::grid::unit_ball_volume(n);
            assert!((bump_integral(n, 1.0) - surface * radial).abs() < 1e-8, "n = {n}");
        }
        assert!((bump_integral(2, 1.0) - std::f64::consts::PI / 5.0).abs() < 1e-14);
    }

    #[test]
    fn bump_form_basic_properties() {
        let d = Arc::new(GridDomain::cube(-1.0, 1.0, 2, 64).unwrap());
        let vol = MultiIndex::new(&[0, 1], 2).unwrap();
        let b = bump_form(&d, &[0.0, 0.0], 0.5, &vol, true).unwrap();
        assert!((b.integrate_top().unwrap() - 1.0).abs() < 1e-3);
        let raw = bump_form(&d, &[0.0, 0.0], 0.5, &vol, false).unwrap();
        assert_eq!(bump_profile(&[0.0, 0.0], &[0.0, 0.0], 0.5), 1.0);
        for i in 0..d.len() {
            if dist2(&d.point(i), &[0.0, 0.0]) >= 0.25 {
                assert_eq!(raw.at(i)[0], 0.0);
            }
        }
        assert!(bump_form(&d, &[0.8, 0.0], 0.5, &vol, true).is_err());
    }
}
