use std::sync::Arc;

use proptest::prelude::*;
use qrlab_core::degree::{degree, excision_check, local_index, preimage_count};
use qrlab_core::{Error, GridDomain, MapFamily, Region};

fn disk(res: usize) -> Arc<GridDomain> {
    Arc::new(GridDomain::new(Region::ball(&[0.0, 0.0], 1.2), &[res, res]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // deg(A, y, 𝔹) = sign det A for y in the image of a small ball
    #[test]
    fn linear_degree_is_sign_of_determinant(t in 0.0f64..std::f64::consts::TAU, a in 0.6f64..1.5, b in 0.6f64..1.5, flip in any::<bool>()) {
        let (c, s) = (t.cos(), t.sin());
        let sb = if flip { -b } else { b };
        let m = vec![vec![a * c, -sb * s], vec![a * s, sb * c]];
        let dom = disk(48);
        let map = MapFamily::linear(m);
        let f = map.sample(&dom).unwrap();
        let df = f.best_derivative().unwrap();
        let d = degree(&f, &df, &[0.1, -0.05], &Region::unit_ball(2), None).unwrap();
        let expect = if flip { -1 } else { 1 };
        prop_assert_eq!(d.rounded, expect);
        prop_assert!(d.gap < 0.05);
        prop_assert_eq!(preimage_count(&map, &dom, &Region::unit_ball(2), &[0.1, -0.05], 1e-9).unwrap().count, expect);
    }
}

#[test]
fn covering_of_torus_has_degree_scale_squared() {
    let dom = Arc::new(GridDomain::cube(-0.1, 1.1, 2, 96).unwrap());
    let f = MapFamily::covering(2, 2.0).sample(&dom).unwrap();
    let df = f.best_derivative().unwrap();
    let u = Region::cube(&[0.5, 0.5], 1.0);
    let d = degree(&f, &df, &[0.25, 0.25], &u, None).unwrap();
    assert_eq!(d.rounded, 4);
    assert!(d.bump_radius <= 0.45);
}

#[test]
fn excision_and_local_index_of_winding() {
    let dom = disk(97);
    let f = MapFamily::Winding { k: 2 }.sample(&dom).unwrap();
    let df = f.best_derivative().unwrap();
    let y = [0.4, 0.3];
    let rep = excision_check(&f, &df, &y, &Region::unit_ball(2), &Region::ball(&[0.0, 0.0], 0.7)).unwrap();
    assert!(rep.equal);
    assert_eq!(rep.outer.rounded, 2);
    // V misses a preimage: the check refuses
    let e = excision_check(&f, &df, &y, &Region::unit_ball(2), &Region::ball(&[0.5, 0.0], 0.3));
    assert!(matches!(e, Err(Error::Precondition(_))));
    let li = local_index(&f, &df, dom.locate(&[0.0, 0.0]).unwrap()).unwrap();
    assert_eq!(li.result.rounded, 2);
}

#[test]
fn critical_values_are_refused() {
    // Newton meets the fold's double root only to ~1e-6, so |J| is of that size
    let dom = disk(32);
    let e = preimage_count(&MapFamily::Folding, &dom, &Region::unit_ball(2), &[0.0, 0.3], 1e-4);
    assert!(matches!(e, Err(Error::CriticalValue { .. })));
}
