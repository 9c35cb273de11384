//! Normalized pull-back limits and the embedding `H*(T^m) → ∧*ℝⁿ` at desk
//! scale, with the Künneth, Stokes and quasiregular-value experiments.

mod experiments;
mod family;
mod kunneth;
mod limit;
mod measure;
mod sequence;

pub use experiments::{qrv_energy_experiment, stokes_vanishing_check, QrvConfig, QrvReport, QrvRow, StokesReport};
pub use family::{density, family_check, normalizing_factor, star_pullback, Condition, FamilyParams, FamilyReport};
pub use kunneth::{kunneth_decompose, KunnethDecomposition};
pub use limit::{block_average, build_limit_map, point_evaluate_phi, LimitClass, LimitMap, Phi};
pub use measure::{hunting_search, reduction_measure, DiscreteMeasure, HuntBall, HuntReport, NEGATIVE_MASS_LIMIT};
pub use sequence::{
    admissibility_check, exact_form_decay, normalized_pullback, pair_with_test, pairing_lower_bound, pairing_table,
    sup_norm, test_form_d_norm, unit_cutoff, AdmissibilityReport, AdmissibilityRow, DecayRow, DecayTable,
    HarmonicBasis, LowerBoundRow, NormalizedSequence, SequenceConfig, SequenceMember, TestDictionary, TestForm,
    DECAY_FACTOR,
};

use crate::grid::GridDomain;

/// In-domain grid points in the closed ball, scanning only its index box.
pub(crate) fn ball_points(dom: &GridDomain, center: &[f64], radius: f64) -> Vec<usize> {
    let n = dom.dim();
    let (lo, h, res) = (dom.lower(), dom.spacing(), dom.resolution());
    let mut first = vec![0usize; n];
    let mut last = vec![0usize; n];
    for a in 0..n {
        let f = ((center[a] - radius - lo[a]) / h[a] - 0.5).floor().max(0.0) as usize;
        let l = ((center[a] + radius - lo[a]) / h[a] - 0.5).ceil();
        if l < 0.0 || f >= res[a] {
            return Vec::new();
        }
        first[a] = f;
        last[a] = (l as usize).min(res[a] - 1);
    }
    let r2 = radius * radius;
    let mut out = Vec::new();
    let mut idx = first.clone();
    let mut x = vec![0.0; n];
    loop {
        let i = dom.flat_index(&idx);
        dom.point_into(i, &mut x);
        if dom.in_domain(i) && crate::grid::dist2(&x, center) <= r2 {
            out.push(i);
        }
        // odometer over the index box, last axis fastest
        let mut a = n;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if idx[a] < last[a] {
                idx[a] += 1;
                break;
            }
            idx[a] = first[a];
        }
    }
}
