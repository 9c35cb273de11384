//! Acceptance suite: every criterion runs at its stated tolerance and prints a
//! single PASS/FAIL line. Runs as a plain binary (`harness = false`) so the
//! lines are always visible; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use qrlab_core::algebra::{basis, binomial, comass_norm};
use qrlab_core::cohomology::*;
use qrlab_core::degree::{degree, excision_check, preimage_count};
use qrlab_core::estimates::*;
use qrlab_core::homotopy::TOperator;
use qrlab_core::maps::{distortion_check, DistortionKind, DistortionParams, TrigTerm, Wave};
use qrlab_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- 1

fn random_covector(rng: &mut ChaCha8Rng, n: usize, k: usize) -> KCovector {
    let c = (0..binomial(n, k)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    KCovector::new(n, k, c).unwrap()
}

fn interior(a: &KCovector, v: &[f64]) -> Option<KCovector> {
    (a.degree() > 0).then(|| a.interior(v).unwrap())
}

/// Returns the largest error of anticommutativity, associativity, `⋆⋆` and
/// the interior-product Leibniz rule for one triple.
fn algebra_errors(a: &KCovector, b: &KCovector, c: &KCovector, v: &[f64]) -> f64 {
    let n = a.dim();
    let (ka, kb) = (a.degree(), b.degree());
    let mut worst: f64 = 0.0;
    if ka + kb <= n {
        let ab = a.wedge(b).unwrap();
        let ba = b.wedge(a).unwrap();
        let sign = if (ka * kb) % 2 == 0 { 1.0 } else { -1.0 };
        worst = worst.max(ab.max_abs_diff(&ba.scale(sign)));
        if ka + kb + c.degree() <= n {
            let l = ab.wedge(c).unwrap();
            let r = a.wedge(&b.wedge(c).unwrap()).unwrap();
            worst = worst.max(l.max_abs_diff(&r));
        }
        // ι_v(a∧b) = ι_v a ∧ b + (−1)^k a ∧ ι_v b
        if ka + kb > 0 {
            let lhs = ab.interior(v).unwrap();
            let mut rhs = KCovector::zero(n, ka + kb - 1).unwrap();
            if let Some(ia) = interior(a, v) {
                rhs = KCovector::new(n, rhs.degree(), add(&rhs, &ia.wedge(b).unwrap())).unwrap();
            }
            if let Some(ib) = interior(b, v) {
                let s = if ka % 2 == 0 { 1.0 } else { -1.0 };
                rhs = KCovector::new(n, rhs.degree(), add(&rhs, &a.wedge(&ib).unwrap().scale(s))).unwrap();
            }
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
    }
    let ss = a.hodge_star().hodge_star();
    let sign = if (ka * (n - ka)).is_multiple_of(2) { 1.0 } else { -1.0 };
    worst.max(ss.max_abs_diff(&a.scale(sign)))
}

fn add(a: &KCovector, b: &KCovector) -> Vec<f64> {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + y).collect()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0usize;
    for n in 1..=5 {
        let all: Vec<KCovector> = (0..=n)
            .flat_map(|k| basis(n, k).into_iter().map(move |i| KCovector::basis_element(n, i.indices()).unwrap()))
            .collect();
        for a in &all {
            for b in &all {
                for c in &all {
                    for axis in 0..n {
                        let mut v = vec![0.0; n];
                        v[axis] = 1.0;
                        worst = worst.max(algebra_errors(a, b, c, &v));
                        cases += 1;
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=5);
        let (ka, kb, kc) = (rng.gen_range(0..=n), rng.gen_range(0..=n), rng.gen_range(0..=n));
        let a = random_covector(&mut rng, n, ka);
        let b = random_covector(&mut rng, n, kb);
        let c = random_covector(&mut rng, n, kc);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        worst = worst.max(algebra_errors(&a, &b, &c, &v));
        cases += 1;
    }
    outcome(worst <= 1e-12, format!("max error {worst:.2e} over {cases} cases"))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let cfg = ComassConfig::default();
    let a = KCovector::basis_element(4, &[0, 1]).unwrap();
    let b = KCovector::basis_element(4, &[2, 3]).unwrap();
    let w = KCovector::new(4, 2, add(&a, &b)).unwrap();
    let r = comass_norm(&w, &cfg).unwrap();
    let mut ok = (r.ascent - 1.0).abs() <= 1e-3 && (r.sampled - 1.0).abs() <= 1e-3;
    let mut worst_sandwich: f64 = f64::NEG_INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases = 0;
    for n in 2..=5 {
        for k in 1..=n {
            for _ in 0..8 {
                let x = random_covector(&mut rng, n, k);
                let c = comass_norm(&x, &cfg).unwrap().value();
                let g = x.grassmann_norm();
                let upper = (binomial(n, k) as f64).sqrt() * c;
                worst_sandwich = worst_sandwich.max((c - g) / g).max((g - upper) / g);
                cases += 1;
            }
        }
    }
    ok &= worst_sandwich <= 1e-12;
    outcome(
        ok,
        format!(
            "comass(e12+e34): ascent {:.6}, sampled {:.6}; sandwich worst {worst_sandwich:.2e} over {cases} covectors",
            r.ascent, r.sampled
        ),
    )
}

// ---------------------------------------------------------------- 3

fn smooth_suite(dom: &Arc<GridDomain>) -> Vec<(&'static str, GridForm)> {
    vec![
        ("dx1", GridForm::constant(dom, &KCovector::from_vector(&[1.0, 0.0])).unwrap()),
        ("vol", GridForm::constant(dom, &KCovector::volume(2)).unwrap()),
        (
            "trig",
            GridForm::from_fn(dom, 1, |x, o| {
                o[0] = (PI * x[1]).sin() + 0.3;
                o[1] = (PI * x[0]).cos() * x[1];
            })
            .unwrap(),
        ),
    ]
}

fn criterion_3() -> Outcome {
    let region = Region::unit_ball(2);
    let mut residuals = Vec::new();
    for res in [32, 64] {
        let dom = Arc::new(GridDomain::new(region.clone(), &[res, res]).unwrap());
        let row: Vec<(&str, f64)> = smooth_suite(&dom)
            .into_iter()
            .map(|(name, w)| {
                let t = TOperator::canonical(&region, w.degree()).unwrap();
                (name, t.homotopy_residual(&w, 0.9).unwrap())
            })
            .collect();
        residuals.push(row);
    }
    let mut ok = true;
    let mut detail = Vec::new();
    for (c, f) in residuals[0].iter().zip(&residuals[1]) {
        let order = (c.1 / f.1).log2();
        ok &= f.1 <= 0.05 && order >= 0.8;
        detail.push(format!("{} {:.4} (order {:.2})", f.0, f.1, order));
    }
    outcome(ok, format!("64² residuals: {}", detail.join(", ")))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    // p ∈ {1, 2, n, ∞} with n = 2
    let exps = [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity];
    let mut ok = true;
    let mut detail = Vec::new();
    for p in &exps {
        let mut vals = Vec::new();
        for res in [16, 32] {
            for r in [1.0, 2.0] {
                let reg = Region::ball(&[0.0, 0.0], r);
                let dom = Arc::new(GridDomain::new(reg.clone(), &[res, res]).unwrap());
                let om = GridForm::from_fn(&dom, 1, |x, o| {
                    o[0] = (PI * x[1] / r).sin() + 0.3;
                    o[1] = (PI * x[0] / r).cos() * x[1] / r;
                })
                .unwrap();
                vals.push(TOperator::canonical(&reg, 1).unwrap().norm_ratio(&om, *p).unwrap());
            }
        }
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let mid = 0.5 * (lo + hi);
        let spread = (hi - lo) / (2.0 * mid);
        ok &= vals.iter().all(|v| v.is_finite() && *v > 0.0) && spread <= 0.2;
        detail.push(format!("p={p}: {lo:.3}..{hi:.3}"));
    }
    outcome(ok, format!("‖Tω‖_p/(r‖ω‖_p) over res 16/32, r 1/2: {}", detail.join("; ")))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let dom = Arc::new(GridDomain::new(Region::ball(&[0.0, 0.0], 1.2), &[128, 128]).unwrap());
    let u = Region::unit_ball(2);
    let v = Region::ball(&[0.0, 0.0], 0.8);
    let y = [0.5, 0.0];
    let mut ok = true;
    let mut detail = Vec::new();
    for k in 1..=3u32 {
        let map = MapFamily::Winding { k };
        let f = map.sample(&dom).unwrap();
        let df = f.best_derivative().unwrap();
        let d = degree(&f, &df, &y, &u, None).unwrap();
        // radii resolved by the grid: the preimage of a ρ-ball has width ≈ ρ/k
        let radii: Vec<f64> = [0.1, 0.15, 0.2]
            .iter()
            .map(|&r| degree(&f, &df, &y, &u, Some(r)).unwrap().raw)
            .collect();
        let spread = radii.iter().map(|r| (r - d.raw).abs()).fold(0.0, f64::max);
        let exc = excision_check(&f, &df, &y, &u, &v).unwrap();
        let count = preimage_count(&map, &dom, &u, &y, 1e-9).unwrap().count;
        let fd = f.derivative().unwrap();
        let dfd = degree(&f, &fd, &y, &u, None).unwrap();
        ok &= d.rounded == k as i64
            && d.gap <= 0.1
            && dfd.rounded == k as i64
            && dfd.gap <= 0.1
            && radii.iter().all(|r| (r - k as f64).abs() <= 0.1)
            && exc.equal
            && count == k as i64;
        detail.push(format!(
            "k={k}: deg {} gap {:.1e} (fd {:.1e}), radius spread {spread:.1e}, excision {}, preimages {count}",
            d.rounded, d.gap, dfd.gap, exc.equal
        ));
    }
    outcome(ok, detail.join("; "))
}

// ---------------------------------------------------------------- 6

fn minimal_k(map: &MapFamily, dom: &Arc<GridDomain>, exclude: f64, exact: bool) -> f64 {
    let f = map.sample(dom).unwrap();
    let df = if exact { f.best_derivative() } else { f.derivative() }.unwrap();
    let rep = distortion_check(&f, &df, DistortionKind::Qr, &DistortionParams::with_k(1.0)).unwrap();
    rep.minimal_k
        .extremes(|i| {
            let x = dom.point(i);
            x.iter().map(|v| v * v).sum::<f64>().sqrt() > exclude
        })
        .unwrap()
        .1
}

fn criterion_6() -> Outcome {
    let square = Arc::new(GridDomain::cube(0.0, 1.0, 2, 128).unwrap());
    let disk = Arc::new(GridDomain::new(Region::ball(&[0.0, 0.0], 1.0), &[128, 128]).unwrap());
    let cov = minimal_k(&MapFamily::covering(2, 1.0), &square, -1.0, false);
    let lin = minimal_k(&MapFamily::linear(vec![vec![2.0, 0.0], vec![0.0, 1.0]]), &square, -1.0, false);
    let wind = minimal_k(&MapFamily::Winding { k: 2 }, &disk, 0.05, true);
    let wind_fd = minimal_k(&MapFamily::Winding { k: 2 }, &disk, 0.05, false);
    let ok = (cov - 1.0).abs() <= 1e-6
        && (lin - 2.0).abs() <= 1e-6
        && (wind - 2.0).abs() <= 0.04
        && (wind_fd - 2.0).abs() <= 0.04;
    outcome(ok, format!("covering {cov:.9}, diag(2,1) {lin:.9}, winding z² {wind:.6} (finite differences {wind_fd:.6})"))
}

// ---------------------------------------------------------------- 7

fn eventually_constant() -> MapFamily {
    MapFamily::EventuallyConstant { base: vec![0.3, 0.4], amplitude: 0.8, center: vec![0.0, 0.0], radius: 0.5, shift: vec![0.0, 0.0] }
}

/// Absolute level below which an integral counts as converged to zero.
const STOKES_FLOOR: f64 = 1e-12;

fn criterion_7() -> Outcome {
    let vol = AnalyticTargetForm::volume(2, true);
    let maps = [
        eventually_constant(),
        MapFamily::EventuallyConstant { base: vec![0.1, 0.9], amplitude: 0.5, center: vec![0.2, -0.1], radius: 0.4, shift: vec![0.05, 0.0] },
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for map in &maps {
        let vals: Vec<f64> =
            [32, 64, 128].iter().map(|&r| stokes_vanishing_check(map, &vol, r).unwrap().integral.abs()).collect();
        let halving = vals.windows(2).all(|w| w[1] <= 0.5 * w[0] || w[1] < STOKES_FLOOR);
        ok &= vals[2] <= 1e-2 && halving;
        detail.push(format!("{:.1e}/{:.1e}/{:.1e}", vals[0], vals[1], vals[2]));
    }
    outcome(ok, format!("|∫F*vol| at 32/64/128: {}", detail.join(", ")))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let params = FamilyParams::torus_volume(2, 1.0);
    let dom = Arc::new(GridDomain::cube(-4.0, 4.0, 2, 128).unwrap());
    let f = MapFamily::covering(2, 1.0).sample(&dom).unwrap();
    let df = f.best_derivative().unwrap();
    let mu = reduction_measure(&f, &df, None, &params).unwrap();
    let (j, d) = (4.0, params.d);
    let Some(ball) = hunting_search(&mu, j, d, 4).unwrap().ball else {
        return outcome(false, "no ball found");
    };
    // recheck by integrating the density directly
    let rho = density(&f, &df, None, &params).unwrap();
    let integrate = |r: f64| -> f64 {
        (0..dom.len())
            .filter(|&i| grid::dist2(&dom.point(i), &ball.center) <= r * r)
            .map(|i| rho.values()[i].max(0.0))
            .sum::<f64>()
            * dom.cell_volume()
    };
    let (m1, m2) = (integrate(ball.radius), integrate(2.0 * ball.radius));
    let ok = j <= m2 && m2 <= d * m1 && (m1 - ball.mass).abs() <= 1e-9 * m1 && (m2 - ball.mass_double).abs() <= 1e-9 * m2;
    outcome(
        ok,
        format!("B({:?}, {}): μB = {m1:.4}, μ2B = {m2:.4}, j = {j}, D = {d}", ball.center, ball.radius),
    )
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let params = FamilyParams::torus_volume(2, 1.0);
    let d = params.d;
    let seq = NormalizedSequence::build(&MapFamily::covering(2, 1.0), params, None, &SequenceConfig::dyadic(6, 64)).unwrap();
    let basis = HarmonicBasis::torus(2);
    let adm = admissibility_check(&seq, &basis, d * d, &HolderSequence::conformal(2)).unwrap();
    let sin = ScalarFn::trig(vec![TrigTerm::new(1.0, &[1, 0], Wave::Sin)]);
    let alpha = AnalyticTargetForm::scalar(2, sin, true).unwrap();
    let dec = exact_form_decay(&seq, &alpha, &TestDictionary::standard(2, 1)).unwrap();
    let worst_decay = dec.rows.iter().filter_map(|r| r.bound_ratio).fold(0.0, f64::max);
    let l = build_limit_map(&seq, &basis, 32).unwrap();
    let phi = point_evaluate_phi(&l, 0.05);
    let lb = pairing_lower_bound(&seq).unwrap();
    let lb_ok = lb.iter().all(|r| r.pass);
    let (rank, defect) = phi.as_ref().map_or((0, f64::INFINITY), |p| (p.rank, p.defect));
    let ok = adm.pass && dec.consistent == Some(true) && rank == 4 && defect <= 0.05 && lb_ok;
    outcome(
        ok,
        format!(
            "admissibility {:.3} ≤ {}, decay ratio ≤ {worst_decay:.3}, rank {rank}, defect {defect:.1e}, lower bound {}/{}",
            adm.max_ratio,
            d * d,
            lb.iter().filter(|r| r.pass).count(),
            lb.len()
        ),
    )
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_slack: f64 = 0.0;
    let mut cubes = 0;
    for case in compliant_suite() {
        let rep = case.run(128, 3, REVERSE_HOLDER_CONSTANT).unwrap();
        ok &= rep.pass();
        worst_margin = worst_margin.min(rep.min_margin);
        worst_slack = worst_slack.max(rep.max_holder_slack);
        cubes += rep.rows.len();
    }
    let cal = calibrate_reverse_holder(&calibration_suite(), 128, 3).unwrap();
    ok &= cal.frozen <= REVERSE_HOLDER_CONSTANT + 1e-12;
    outcome(
        ok,
        format!(
            "min margin {worst_margin:.3e} over {cubes} cubes, Hölder slack {worst_slack:.1e}, refit {:.4} vs frozen {}",
            cal.frozen, REVERSE_HOLDER_CONSTANT
        ),
    )
}

// ---------------------------------------------------------------- 11

fn reports() -> Vec<String> {
    let json = |v: &dyn erased::Json| v.to_json();
    let cfg = ComassConfig { seed: 7, ..ComassConfig::default() };
    let w = KCovector::new(4, 2, vec![1.0, 0.2, -0.3, 0.5, 0.1, 1.0]).unwrap();
    let comass = comass_norm(&w, &cfg).unwrap();

    let dom = Arc::new(GridDomain::new(Region::ball(&[0.0, 0.0], 1.2), &[64, 64]).unwrap());
    let f = MapFamily::Winding { k: 3 }.sample(&dom).unwrap();
    let df = f.best_derivative().unwrap();
    let deg = degree(&f, &df, &[0.5, 0.0], &Region::unit_ball(2), None).unwrap();

    let params = FamilyParams::torus_volume(2, 1.0);
    let hd = Arc::new(GridDomain::cube(-4.0, 4.0, 2, 64).unwrap());
    let hf = MapFamily::covering(2, 1.0).sample(&hd).unwrap();
    let hdf = hf.best_derivative().unwrap();
    let hunt = hunting_search(&reduction_measure(&hf, &hdf, None, &params).unwrap(), 4.0, 8.0, 2).unwrap();

    let seq = NormalizedSequence::build(&MapFamily::covering(2, 1.0), params, None, &SequenceConfig::dyadic(3, 32)).unwrap();
    let phi = point_evaluate_phi(&build_limit_map(&seq, &HarmonicBasis::torus(2), 16).unwrap(), 0.05).unwrap();

    let stokes = stokes_vanishing_check(&eventually_constant(), &AnalyticTargetForm::volume(2, true), 64).unwrap();
    let rh = compliant_suite()[4].run(64, 3, REVERSE_HOLDER_CONSTANT).unwrap();
    let cubes = CubeFamily::dyadic(&[0.5, 0.5], 1.0, 3).unwrap();
    let bump = MapFamily::BumpCovering { n: 2, amplitude: 0.2, center: vec![0.4, 0.55], radius: 0.3 };
    let gehring = gehring_probe(&bump, &DEFAULT_LAMBDAS, None, &cubes, 32).unwrap();

    let region = Region::unit_ball(2);
    let hdom = Arc::new(GridDomain::new(region.clone(), &[24, 24]).unwrap());
    let trig = smooth_suite(&hdom).remove(2).1;
    let t = TOperator::canonical(&region, 1).unwrap().apply(&trig).unwrap();

    vec![
        json(&comass),
        json(&deg),
        json(&hunt),
        json(&phi),
        json(&stokes),
        json(&rh),
        json(&gehring),
        json(&t.values().to_vec()),
    ]
}

mod erased {
    pub trait Json {
        fn to_json(&self) -> String;
    }
    impl<T: serde::Serialize> Json for T {
        fn to_json(&self) -> String {
            serde_json::to_string(self).unwrap()
        }
    }
}

fn criterion_11() -> Outcome {
    let a = reports();
    let b = reports();
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    outcome(same == a.len(), format!("{same}/{} serialized reports byte-identical", a.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("exterior algebra exactness", criterion_1),
        ("comass", criterion_2),
        ("homotopy identity", criterion_3),
        ("homotopy norm bound", criterion_4),
        ("degree", criterion_5),
        ("distortion constants", criterion_6),
        ("Stokes vanishing", criterion_7),
        ("doubling-ball hunt", criterion_8),
        ("embedding pipeline", criterion_9),
        ("reverse Hölder", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {} [{:.1}s]", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
