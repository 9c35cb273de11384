use std::sync::Arc;

use proptest::prelude::*;
use qrlab_core::cohomology::*;
use qrlab_core::maps::{TrigTerm, Wave};
use qrlab_core::{AnalyticTargetForm, Error, GridDomain, GridForm, MapFamily, Region, ScalarFn};

fn trig(terms: &[(f64, [i32; 3], bool)]) -> ScalarFn {
    ScalarFn::trig(
        terms.iter().map(|(c, f, s)| TrigTerm::new(*c, f, if *s { Wave::Sin } else { Wave::Cos })).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // ω = a dy¹∧dy² + b dy²∧dy³ + dτ on T³ splits back into its class and dτ'
    #[test]
    fn kunneth_recovers_class_and_exact_part(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c in prop::collection::vec(-1.0f64..1.0, 3),
        f in prop::collection::vec(-2i32..=2, 3),
    ) {
        prop_assume!(f.iter().any(|v| *v != 0));
        let fr = [f[0], f[1], f[2]];
        let tau = AnalyticTargetForm::new(3, 1, true, vec![
            trig(&[(c[0], fr, true)]),
            trig(&[(c[1], fr, false)]),
            trig(&[(c[2], fr, true)]),
        ]).unwrap();
        let class = AnalyticTargetForm::basis(3, &[0, 1], true).unwrap().scale(a)
            .add(&AnalyticTargetForm::basis(3, &[1, 2], true).unwrap().scale(b)).unwrap();
        let omega = class.add(&tau.exterior_derivative().unwrap()).unwrap();
        let dec = kunneth_decompose(&omega).unwrap();
        prop_assert!(dec.residual < 1e-12);
        // the class part is read off the constant terms
        let mut sum = AnalyticTargetForm::new(3, 2, true, vec![ScalarFn::zero(), ScalarFn::zero(), ScalarFn::zero()]).unwrap();
        for (x, y) in &dec.terms {
            sum = sum.add(&x.wedge(y).unwrap()).unwrap();
        }
        let y = [0.3, 0.1, 0.7];
        let (got, want) = (sum.eval(&y), class.eval(&y));
        prop_assert!(got.max_abs_diff(&want) < 1e-12);
    }
}

#[test]
fn kunneth_rejects_non_torus_and_open_forms() {
    let vol = AnalyticTargetForm::volume(2, false);
    assert!(matches!(kunneth_decompose(&vol), Err(Error::Unsupported(_))));
    let open = AnalyticTargetForm::new(3, 2, true, vec![trig(&[(1.0, [1, 0, 0], true)]), ScalarFn::zero(), ScalarFn::zero()])
        .unwrap();
    // d(sin(2πy¹) dy¹∧dy²) = 0 but d(sin(2πy³) dy¹∧dy²) ≠ 0
    assert!(kunneth_decompose(&open).is_ok());
    let open = AnalyticTargetForm::new(3, 2, true, vec![trig(&[(1.0, [0, 0, 1], true)]), ScalarFn::zero(), ScalarFn::zero()])
        .unwrap();
    assert!(matches!(kunneth_decompose(&open), Err(Error::Precondition(_))));
}

#[test]
fn covering_family_and_reduction_measure() {
    let params = FamilyParams::torus_volume(2, 1.0);
    let dom = Arc::new(GridDomain::ball(&[0.0, 0.0], 2.0, 64).unwrap());
    let f = MapFamily::covering(2, 2.0).sample(&dom).unwrap();
    let df = f.best_derivative().unwrap();
    let rep = family_check(&f, &df, None, &params).unwrap();
    assert!(rep.all_pass(), "{rep:?}");
    let mu = reduction_measure(&f, &df, None, &params).unwrap();
    assert_eq!(mu.clamped(), 0.0);
    // the density of a conformal covering is |Df|ⁿ-proportional, uniform
    let w: Vec<f64> = mu.weights().iter().cloned().filter(|w| *w > 0.0).collect();
    assert!(w.iter().all(|v| (v - w[0]).abs() < 1e-12 * w[0]));
}

#[test]
fn block_average_preserves_integrals() {
    let fine = Arc::new(GridDomain::cube(0.0, 1.0, 2, 64).unwrap());
    let coarse = Arc::new(GridDomain::cube(0.0, 1.0, 2, 16).unwrap());
    let g = GridForm::scalar(&fine, |x| (6.0 * x[0]).sin() + x[1] * x[1]).unwrap();
    let avg = block_average(&g, &coarse).unwrap();
    assert!((avg.integrate_scalar().unwrap() - g.integrate_scalar().unwrap()).abs() < 1e-12);
}

#[test]
fn normalized_sequence_of_covering() {
    let params = FamilyParams::torus_volume(2, 1.0);
    let seq = NormalizedSequence::build(&MapFamily::covering(2, 1.0), params, None, &SequenceConfig::dyadic(3, 32)).unwrap();
    // A_j = c r_jⁿ |𝔹|_h, with |𝔹|_h the cell-counted ball on the member's grid
    let c: Vec<f64> = seq
        .members
        .iter()
        .map(|m| {
            let one = GridForm::scalar(m.domain(), |_| 1.0).unwrap();
            m.a / (m.radius * m.radius * one.restricted(&Region::unit_ball(2)).integrate_scalar().unwrap())
        })
        .collect();
    assert!(c.iter().all(|v| (v - c[0]).abs() < 1e-9 * c[0]), "{c:?}");
    let lb = pairing_lower_bound(&seq).unwrap();
    assert!(lb.iter().all(|r| r.pass));
    let dec = pairing_table(&seq, &AnalyticTargetForm::basis(2, &[0], true).unwrap(), &TestDictionary::standard(2, 1)).unwrap();
    // harmonic classes do not decay: A^{1/n}-scaled pairings grow like A^{1/n}
    assert!(dec.slope.unwrap() > -0.1);
}

#[test]
fn qrv_experiment_at_a_regular_point() {
    let map = MapFamily::EventuallyConstant {
        base: vec![0.3, 0.4],
        amplitude: 1.0,
        center: vec![0.0, 0.0],
        radius: 0.5,
        shift: vec![0.1, 0.0],
    };
    let cfg = QrvConfig { x0: vec![0.0, 0.0], u0_radius: 0.05, k: 1.0, radii: vec![0.08, 0.03, 0.02], resolution: 128, sigma: None };
    let rep = qrv_energy_experiment(&map, &cfg).unwrap();
    assert_eq!(rep.local_index.rounded, 1);
    // f(∂U₀) sits at distance ≈ 0.05 from y₀
    assert!(!rep.rows[0].admissible);
    for row in &rep.rows[1..] {
        assert!(row.admissible);
        // left-hand side and its companion agree with the η-mass
        assert!((row.lhs / row.eta_mass - 1.0).abs() < 0.05, "{row:?}");
        assert!(row.sigma_mass > 0.0);
    }
}
