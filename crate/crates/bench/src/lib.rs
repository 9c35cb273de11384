//! Shared inputs for the kernel benchmarks in `benches/`.

use std::f64::consts::PI;
use std::sync::Arc;

use qrlab_core::algebra::binomial;
use qrlab_core::{GridDomain, GridForm, KCovector, Region};

/// The symplectic 2-covector `e¹² + e³⁴ + …` in `ℝ²ᵐ`.
pub fn symplectic(m: usize) -> KCovector {
    let n = 2 * m;
    let mut a = KCovector::zero(n, 2).expect("valid degree");
    for i in 0..m {
        let e = KCovector::basis_element(n, &[2 * i, 2 * i + 1]).expect("valid axes");
        for (x, y) in a.coeffs_mut().iter_mut().zip(e.coeffs()) {
            *x += y;
        }
    }
    a
}

/// A deterministic dense `k`-covector in `ℝⁿ`.
pub fn dense(n: usize, k: usize) -> KCovector {
    let c = (0..binomial(n, k)).map(|i| ((i as f64 + 1.0) * 0.7).sin()).collect();
    KCovector::new(n, k, c).expect("valid size")
}

pub fn disk(res: usize) -> Arc<GridDomain> {
    Arc::new(GridDomain::new(Region::unit_ball(2), &[res, res]).expect("valid grid"))
}

/// A smooth non-closed 1-form on a planar grid.
pub fn trig_form(dom: &Arc<GridDomain>) -> GridForm {
    GridForm::from_fn(dom, 1, |x, o| {
        o[0] = (PI * x[1]).sin() + 0.3;
        o[1] = (PI * x[0]).cos() * x[1];
    })
    .expect("valid form")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        let w = symplectic(2);
        assert_eq!(w.coeffs(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(dense(5, 2).coeffs().len(), 10);
        assert_eq!(trig_form(&disk(8)).degree(), 1);
    }
}
