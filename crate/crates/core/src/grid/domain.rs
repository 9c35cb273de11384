use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of an integration region in ℝⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn cube(center: &[f64], side: f64) -> Self {
        Region::Box {
            lower: center.iter().map(|c| c - side / 2.0).collect(),
            upper: center.iter().map(|c| c + side / 2.0).collect(),
        }
    }

    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region::Ball { center: center.to_vec(), radius }
    }

    pub fn unit_ball(n: usize) -> Self {
        Region::ball(&vec![0.0; n], 1.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lower, .. } => lower.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { lower, upper } => {
                x.iter().zip(lower.iter().zip(upper)).all(|(x, (l, u))| *x >= *l && *x <= *u)
            }
            Region::Ball { center, radius } => dist2(x, center) <= radius * radius,
        }
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lower, upper } => (lower.clone(), upper.clone()),
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Characteristic size: radius of a ball, half the smallest side of a box.
    pub fn inradius(&self) -> f64 {
        match self {
            Region::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| (u - l) / 2.0).fold(f64::INFINITY, f64::min)
            }
            Region::Ball { radius, .. } => *radius,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Region::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| (l + u) / 2.0).collect(),
            Region::Ball { center, .. } => center.clone(),
        }
    }

    /// Concentric copy scaled by `factor` (e.g. `2Q`, `σD`).
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Region::Box { lower, upper } => {
                let c = self.center();
                Region::Box {
                    lower: lower.iter().zip(&c).map(|(l, c)| c + factor * (l - c)).collect(),
                    upper: upper.iter().zip(&c).map(|(u, c)| c + factor * (u - c)).collect(),
                }
            }
            Region::Ball { center, radius } => Region::Ball { center: center.clone(), radius: radius * factor },
        }
    }

    /// Whether the closed ball `B(center, radius)` lies inside the region.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        match self {
            Region::Box { lower, upper } => center
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(c, (l, u))| c - radius >= l - 1e-12 && c + radius <= u + 1e-12),
            Region::Ball { center: c0, radius: r0 } => dist2(center, c0).sqrt() + radius <= r0 + 1e-12,
        }
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        match other {
            Region::Ball { center, radius } => self.contains_ball(center, *radius),
            Region::Box { lower, upper } => {
                // a box lies in a convex region iff all its corners do
                let n = lower.len();
                (0..1usize << n).all(|corner| {
                    let x: Vec<f64> =
                        (0..n).map(|a| if corner & (1 << a) != 0 { upper[a] } else { lower[a] }).collect();
                    match self {
                        Region::Box { lower: l, upper: u } => {
                            x.iter().zip(l.iter().zip(u)).all(|(x, (l, u))| *x >= l - 1e-12 && *x <= u + 1e-12)
                        }
                        Region::Ball { center, radius } => dist2(&x, center).sqrt() <= radius + 1e-12,
                    }
                })
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).product(),
            Region::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
        }
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `|𝔹ⁿ| = π^{n/2} / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // recursion |B^n| = 2π/n |B^{n-2}|
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Uniform tensor grid with cell-centred samples over the bounding box of a
/// region. Points outside the region are sampled but masked out of
/// reductions.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    region: Region,
    lower: Vec<f64>,
    res: Vec<usize>,
    h: Vec<f64>,
    strides: Vec<usize>,
    mask: Vec<bool>,
    active: usize,
}

impl GridDomain {
    /// Grid over the bounding box of `region`.
    pub fn new(region: Region, res: &[usize]) -> Result<Self> {
        let (lower, upper) = region.bounds();
        Self::with_bounds(&lower, &upper, res, region)
    }

    pub fn cube(lower: f64, upper: f64, n: usize, res: usize) -> Result<Self> {
        Self::new(Region::Box { lower: vec![lower; n], upper: vec![upper; n] }, &vec![res; n])
    }

    pub fn ball(center: &[f64], radius: f64, res: usize) -> Result<Self> {
        Self::new(Region::ball(center, radius), &vec![res; center.len()])
    }

    /// Grid over an explicit box, masked to `region`.
    pub fn with_bounds(lower: &[f64], upper: &[f64], res: &[usize], region: Region) -> Result<Self> {
        let n = lower.len();
        if n == 0 || upper.len() != n || res.len() != n || region.dim() != n {
            return Err(Error::InvalidGrid("inconsistent grid dimensions".into()));
        }
        if let Some(r) = res.iter().find(|&&r| r < 4) {
            return Err(Error::InvalidGrid(format!("resolution {r} below the minimum of 4")));
        }
        let h: Vec<f64> = (0..n).map(|a| (upper[a] - lower[a]) / res[a] as f64).collect();
        if h.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidGrid("grid spacing must be positive".into()));
        }
        let mut strides = vec![1; n];
        for a in (0..n - 1).rev() {
            strides[a] = strides[a + 1] * res[a + 1];
        }
        let mut dom = Self {
            region,
            lower: lower.to_vec(),
            res: res.to_vec(),
            h,
            strides,
            mask: Vec::new(),
            active: 0,
        };
        dom.recompute_mask(None);
        Ok(dom)
    }

    fn recompute_mask(&mut self, base: Option<&[bool]>) {
        let mut x = vec![0.0; self.dim()];
        let mask: Vec<bool> = (0..self.len())
            .map(|i| {
                self.point_into(i, &mut x);
                base.is_none_or(|b| b[i]) && self.region.contains(&x)
            })
            .collect();
        self.active = mask.iter().filter(|b| **b).count();
        self.mask = mask;
    }

    /// Same grid, with the mask intersected with `region`.
    pub fn restricted(&self, region: &Region) -> Self {
        let mut d = self.clone();
        d.region = region.clone();
        d.recompute_mask(Some(&self.mask));
        d
    }

    /// Same bounding box with doubled resolution on every axis.
    pub fn refined(&self) -> Self {
        let upper = self.upper();
        let res: Vec<usize> = self.res.iter().map(|r| 2 * r).collect();
        Self::with_bounds(&self.lower, &upper, &res, self.region.clone()).expect("refinement of a valid grid")
    }

    pub fn dim(&self) -> usize {
        self.res.len()
    }

    pub fn len(&self) -> usize {
        self.res.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.active == 0
    }

    pub fn resolution(&self) -> &[usize] {
        &self.res
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    /// Largest grid spacing.
    pub fn h_max(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.lower[a] + self.res[a] as f64 * self.h[a]).collect()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn in_domain(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    /// Multi-index of flat point `i` (axis 0 slowest).
    pub fn multi_index(&self, mut i: usize, out: &mut [usize]) {
        for a in 0..self.dim() {
            out[a] = i / self.strides[a];
            i %= self.strides[a];
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point_into(&self, i: usize, out: &mut [f64]) {
        let mut rem = i;
        for a in 0..self.dim() {
            let ia = rem / self.strides[a];
            rem %= self.strides[a];
            out[a] = self.lower[a] + (ia as f64 + 0.5) * self.h[a];
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(i, &mut x);
        x
    }

    /// Flat index of the cell containing `x`, if it lies in the bounding box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for a in 0..self.dim() {
            let t = ((x[a] - self.lower[a]) / self.h[a]).floor();
            if t < 0.0 || t >= self.res[a] as f64 {
                return None;
            }
            flat += t as usize * self.strides[a];
        }
        Some(flat)
    }

    /// Whether `other` samples exactly the same points.
    pub fn same_grid(&self, other: &GridDomain) -> bool {
        self.res == other.res
            && self.lower.iter().zip(&other.lower).all(|(a, b)| (a - b).abs() < 1e-12)
            && self.h.iter().zip(&other.h).all(|(a, b)| (a - b).abs() < 1e-12)
    }

    /// Whether flat point `i` lies on the outer layer of the bounding box.
    pub fn on_box_boundary(&self, i: usize) -> bool {
        let mut rem = i;
        for a in 0..self.dim() {
            let ia = rem / self.strides[a];
            rem %= self.strides[a];
            if ia == 0 || ia + 1 == self.res[a] {
                return true;
            }
        }
        false
    }

    /// In-domain points with at least one axis neighbour outside the domain
    /// (or outside the bounding box): the discrete boundary `∂U`.
    pub fn boundary_points(&self) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        (0..self.len())
            .filter(|&i| {
                if !self.mask[i] {
                    return false;
                }
                self.multi_index(i, &mut idx);
                (0..self.dim()).any(|a| {
                    let s = self.strides[a];
                    idx[a] == 0 || idx[a] + 1 == self.res[a] || !self.mask[i - s] || !self.mask[i + s]
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centres_and_indexing() {
        let d = GridDomain::cube(0.0, 1.0, 2, 4).unwrap();
        assert_eq!(d.point(0), vec![0.125, 0.125]);
        assert_eq!(d.point(1), vec![0.125, 0.375]);
        assert_eq!(d.point(4), vec![0.375, 0.125]);
        let mut mi = [0; 2];
        d.multi_index(13, &mut mi);
        assert_eq!(mi, [3, 1]);
        assert_eq!(d.flat_index(&mi), 13);
        assert_eq!(d.locate(&[0.9, 0.3]), Some(13));
        assert_eq!(d.locate(&[1.1, 0.3]), None);
        assert_eq!(d.active_count(), 16);
    }

    #[test]
    fn ball_mask_and_restriction() {
        let d = GridDomain::ball(&[0.0, 0.0], 1.0, 64).unwrap();
        let area = d.active_count() as f64 * d.cell_volume();
        assert!((area - std::f64::consts::PI).abs() < 0.05);
        let half = d.restricted(&Region::ball(&[0.0, 0.0], 0.5));
        assert!(half.active_count() < d.active_count() / 3);
        assert!(GridDomain::cube(0.0, 1.0, 2, 3).is_err());
    }

    #[test]
    fn region_geometry() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        let q = Region::cube(&[0.0, 0.0], 1.0);
        assert!(q.scaled(2.0).contains_region(&q));
        assert!(Region::unit_ball(2).contains_ball(&[0.5, 0.0], 0.5));
        assert!(!Region::unit_ball(2).contains_region(&Region::cube(&[0.0, 0.0], 1.5)));
    }
}
