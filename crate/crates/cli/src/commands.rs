use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use qrlab_core::algebra::{binomial, comass_norm};
use qrlab_core::cohomology::*;
use qrlab_core::degree::{degree, preimage_count};
use qrlab_core::estimates::*;
use qrlab_core::grid::{dist2, qrgf};
use qrlab_core::homotopy::TOperator;
use qrlab_core::maps::{distortion_check, DistortionKind, DistortionParams, TrigTerm, Wave};
use qrlab_core::{
    AnalyticTargetForm, ComassConfig, DerivativeField, Exponent, GridDomain, GridForm, HolderSequence, KCovector,
    MapFamily, Region, SampledMap, ScalarFn,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::CliError;
use crate::report::{num, Report, Table};
use crate::spec::{Command, ExperimentSpec};

pub fn run(command: Command, spec: &ExperimentSpec, seed: u64) -> Result<Report, CliError> {
    match command {
        Command::Algebra => algebra(spec, seed),
        Command::Homotopy => homotopy(spec),
        Command::Degree => degree_cmd(spec),
        Command::Distortion => distortion(spec, seed),
        Command::Limits => limits(spec),
        Command::Estimates => estimates(spec),
        Command::Demo => demo(spec, seed),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::InvalidSpec(msg.into())
}

fn grid(region: &Region, res: usize) -> Result<Arc<GridDomain>, CliError> {
    Ok(Arc::new(GridDomain::new(region.clone(), &vec![res; region.dim()])?))
}

fn analytic_map(spec: &ExperimentSpec, default: MapFamily) -> Result<MapFamily, CliError> {
    if spec.map_file.is_some() {
        return Err(invalid("this command needs an analytic map family, not a map file"));
    }
    let map = spec.map.clone().unwrap_or(default);
    map.validate()?;
    Ok(map)
}

struct Sampled {
    family: Option<MapFamily>,
    f: SampledMap,
    df: DerivativeField,
}

/// The configured map on `region` at `res`: an analytic family with exact
/// derivatives, or a QRGF file differentiated on the grid.
fn sample(spec: &ExperimentSpec, default: MapFamily, region: &Region, res: usize) -> Result<Sampled, CliError> {
    let dom = grid(region, res)?;
    if let Some(path) = &spec.map_file {
        let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let f = qrgf::read_map(BufReader::new(file), &dom, spec.map_torus)?;
        let df = f.derivative()?;
        return Ok(Sampled { family: None, f, df });
    }
    let map = analytic_map(spec, default)?;
    let f = map.sample(&dom)?;
    let df = f.best_derivative()?;
    Ok(Sampled { family: Some(map), f, df })
}

fn unit_vector(n: usize, a: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[a] = s;
    v
}

// ------------------------------------------------------------------ algebra

fn random_covector(rng: &mut ChaCha8Rng, n: usize, k: usize) -> KCovector {
    let c = (0..binomial(n, k)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    KCovector::new(n, k, c).expect("consistent size")
}

fn sum(a: &KCovector, b: &KCovector) -> KCovector {
    let c = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + y).collect();
    KCovector::new(a.dim(), a.degree(), c).expect("same shape")
}

/// Worst violation of graded commutativity, associativity, the interior
/// Leibniz rule and `⋆⋆ = ±1` on one random triple.
fn identity_error(a: &KCovector, b: &KCovector, c: &KCovector, v: &[f64]) -> Result<f64, CliError> {
    let n = a.dim();
    let (ka, kb) = (a.degree(), b.degree());
    let mut worst: f64 = 0.0;
    if ka + kb <= n {
        let ab = a.wedge(b)?;
        let sign = if (ka * kb) % 2 == 0 { 1.0 } else { -1.0 };
        worst = worst.max(ab.max_abs_diff(&b.wedge(a)?.scale(sign)));
        if ka + kb + c.degree() <= n {
            worst = worst.max(ab.wedge(c)?.max_abs_diff(&a.wedge(&b.wedge(c)?)?));
        }
        if ka + kb > 0 {
            let mut rhs = KCovector::zero(n, ka + kb - 1)?;
            if ka > 0 {
                rhs = sum(&rhs, &a.interior(v)?.wedge(b)?);
            }
            if kb > 0 {
                let s = if ka % 2 == 0 { 1.0 } else { -1.0 };
                rhs = sum(&rhs, &a.wedge(&b.interior(v)?)?.scale(s));
            }
            worst = worst.max(ab.interior(v)?.max_abs_diff(&rhs));
        }
    }
    let sign = if (ka * (n - ka)).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(worst.max(a.hodge_star().hodge_star().max_abs_diff(&a.scale(sign))))
}

fn algebra(spec: &ExperimentSpec, seed: u64) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let cfg = ComassConfig { seed, ..ComassConfig::default() };
    let a = match &spec.covector {
        Some(c) => KCovector::new(c.n, c.k, c.coeffs.clone())?,
        // e¹² + e³⁴
        None => KCovector::new(4, 2, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0])?,
    };
    let r = comass_norm(&a, &cfg)?;
    let g = a.grassmann_norm();
    let bound = (binomial(a.dim(), a.degree()) as f64).sqrt();
    rep.put("covector", &json!({ "n": a.dim(), "k": a.degree(), "coeffs": a.coeffs() }));
    rep.put("comass", &r);
    rep.put("grassmann_norm", &g);
    let tol = 1e-12 * g.max(1.0);
    rep.check(
        "comass_sandwich",
        r.sampled <= r.ascent + tol && r.ascent <= g + tol && g <= bound * r.ascent + tol,
        format!("sampled {} ≤ comass {} ≤ |a| {} ≤ {bound:.4}·comass", r.sampled, r.ascent, g),
    );

    let samples = spec.samples.unwrap_or(200);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new("identities", &["case", "n", "ka", "kb", "kc", "max_error"]);
    let mut worst: f64 = 0.0;
    for case in 0..samples {
        let n = rng.gen_range(1..=5);
        let ks: Vec<usize> = (0..3).map(|_| rng.gen_range(0..=n)).collect();
        let x = random_covector(&mut rng, n, ks[0]);
        let y = random_covector(&mut rng, n, ks[1]);
        let z = random_covector(&mut rng, n, ks[2]);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = identity_error(&x, &y, &z, &v)?;
        worst = worst.max(e);
        table.push(vec![case.to_string(), n.to_string(), ks[0].to_string(), ks[1].to_string(), ks[2].to_string(), num(e)]);
    }
    rep.put("identity_cases", &samples);
    rep.put("identity_max_error", &worst);
    rep.check("identities", worst <= 1e-12, format!("max error {worst:.3e} over {samples} random triples"));
    rep.tables.push(table);
    Ok(rep)
}

// ----------------------------------------------------------------- homotopy

fn smooth_forms(dom: &Arc<GridDomain>) -> Result<Vec<(&'static str, GridForm)>, CliError> {
    let n = dom.dim();
    let r = dom.region().inradius().max(f64::MIN_POSITIVE);
    let mut out = vec![
        ("dx1", GridForm::constant(dom, &KCovector::from_vector(&unit_vector(n, 0, 1.0)))?),
        ("vol", GridForm::constant(dom, &KCovector::volume(n))?),
    ];
    if n >= 2 {
        out.push((
            "trig",
            GridForm::from_fn(dom, 1, |x, o| {
                o[0] = (PI * x[1] / r).sin() + 0.3;
                o[1] = (PI * x[0] / r).cos() * x[1] / r;
            })?,
        ));
    }
    Ok(out)
}

fn homotopy(spec: &ExperimentSpec) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let region = spec.domain.clone().unwrap_or_else(|| Region::unit_ball(2));
    let res = spec.resolution.unwrap_or(16);
    let exps = [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity];
    let mut table =
        Table::new("homotopy", &["form", "degree", "resolution", "h", "residual", "ratio_p1", "ratio_p2", "ratio_inf"]);
    let mut finest = Vec::new();
    let mut residuals: Vec<Vec<f64>> = Vec::new();
    for level_res in [res, 2 * res] {
        let dom = grid(&region, level_res)?;
        let mut row = Vec::new();
        for (name, w) in smooth_forms(&dom)? {
            let t = TOperator::canonical(&region, w.degree())?;
            let residual = t.homotopy_residual(&w, 0.9)?;
            let ratios = exps.iter().map(|p| t.norm_ratio(&w, *p)).collect::<Result<Vec<_>, _>>()?;
            let mut cells = vec![name.to_string(), w.degree().to_string(), level_res.to_string(), num(dom.h_max())];
            cells.push(num(residual));
            cells.extend(ratios.iter().map(|v| num(*v)));
            table.push(cells);
            row.push(residual);
            if level_res == 2 * res {
                finest.push(json!({ "form": name, "residual": residual, "norm_ratios": ratios }));
            }
        }
        residuals.push(row);
    }
    let orders: Vec<f64> = residuals[0].iter().zip(&residuals[1]).map(|(c, f)| (c / f).log2()).collect();
    rep.put("region", &region);
    rep.put("resolutions", &[res, 2 * res]);
    rep.put("finest", &finest);
    rep.put("observed_orders", &orders);
    if let Some(max) = spec.expect.max_residual {
        let worst = residuals[1].iter().cloned().fold(0.0, f64::max);
        rep.check("max_residual", worst <= max, format!("finest residual {worst:.4e} vs {max}"));
    }
    rep.tables.push(table);
    Ok(rep)
}

// ------------------------------------------------------------------- degree

fn degree_cmd(spec: &ExperimentSpec) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let default_map = MapFamily::Winding { k: 2 };
    let n = spec.map.as_ref().map_or(2, |m| m.source_dim());
    let u = spec.u.clone().unwrap_or_else(|| Region::unit_ball(n));
    let region = spec.domain.clone().unwrap_or_else(|| u.scaled(1.2));
    let res = spec.resolution.unwrap_or(128);
    let s = sample(spec, default_map, &region, res)?;
    let m = s.f.target_dim();
    let y = spec.y.clone().unwrap_or_else(|| unit_vector(m, 0, 0.5));
    if y.len() != m {
        return Err(invalid(format!("y has {} components, the target has {m}", y.len())));
    }
    let d = degree(&s.f, &s.df, &y, &u, spec.bump_radius)?;
    let h = s.f.domain().h_max();
    let mut table = Table::new("degree", &["resolution", "h", "bump_radius", "raw", "rounded", "gap"]);
    for factor in [1.0, 0.75, 0.5] {
        let r = degree(&s.f, &s.df, &y, &u, Some(d.bump_radius * factor))?;
        table.push(vec![res.to_string(), num(h), num(r.bump_radius), num(r.raw), r.rounded.to_string(), num(r.gap)]);
    }
    rep.put("resolution", &res);
    rep.put("h", &h);
    rep.put("y", &y);
    rep.put("u", &u);
    rep.put("degree", &d);
    if let Some(map) = &s.family {
        rep.put("map", map);
        let count = match preimage_count(map, s.f.domain(), &u, &y, 1e-9) {
            Ok(c) => serde_json::to_value(c).expect("serializable"),
            Err(e) => json!({ "error": e.to_string() }),
        };
        rep.put("preimage_count", &count);
    }
    if let Some(want) = spec.expect.degree {
        rep.check(
            "degree",
            d.rounded == want && d.reliable,
            format!("raw {:.6} rounds to {} (expected {want}), gap {:.2e}", d.raw, d.rounded, d.gap),
        );
    }
    rep.tables.push(table);
    Ok(rep)
}

// --------------------------------------------------------------- distortion

fn scalar_field(dom: &Arc<GridDomain>, f: &ScalarFn) -> Result<GridForm, CliError> {
    Ok(GridForm::scalar(dom, |x| f.eval(x))?)
}

fn distortion(spec: &ExperimentSpec, seed: u64) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let n = spec.map.as_ref().map_or(2, |m| m.source_dim());
    let region = spec.domain.clone().unwrap_or_else(|| Region::unit_ball(n));
    let res = spec.resolution.unwrap_or(64);
    let s = sample(spec, MapFamily::Winding { k: 2 }, &region, res)?;
    let dom = s.f.domain().clone();
    let kind = spec.kind.unwrap_or(DistortionKind::Qr);
    // the default winding map z² has distortion exactly 2
    let default_k = if spec.map.is_none() && spec.map_file.is_none() { 2.0 } else { 1.0 };
    let k = spec.k.unwrap_or(default_k);
    let mut params = DistortionParams::with_k(k);
    params.comass.seed = seed;
    params.y0 = spec.y.clone();
    params.omega = spec.omega.clone();
    params.sigma = spec.sigma.as_ref().map(|f| scalar_field(&dom, f)).transpose()?;
    let report = distortion_check(&s.f, &s.df, kind, &params)?;
    let h = dom.h_max();
    let scale = s.df.op_norms().iter().map(|v| v.powi(dom.dim() as i32)).fold(0.0, f64::max).max(1.0);
    let extremes = report.minimal_k.extremes(|i| dom.in_domain(i));
    rep.put("resolution", &res);
    rep.put("h", &h);
    rep.put("kind", &kind);
    rep.put("k", &k);
    if let Some(map) = &s.family {
        rep.put("map", map);
    }
    rep.put("residual", &report.summary);
    rep.put("minimal_k", &extremes.map(|(lo, hi)| json!({ "min": lo, "max": hi })));
    rep.put("min_comass", &report.min_comass);
    rep.check(
        "inequality",
        report.summary.max <= 1e-9 * scale,
        format!("largest residual {:.3e} (satisfied at {:.4} of points)", report.summary.max, report.summary.satisfied),
    );
    if let Some(max) = spec.expect.max_minimal_k {
        let got = extremes.map_or(f64::INFINITY, |e| e.1);
        rep.check("max_minimal_k", got <= max, format!("minimal K {got:.6} vs {max}"));
    }
    let mut header = vec!["resolution".to_string(), "h".to_string()];
    header.extend((1..=dom.dim()).map(|a| format!("x{a}")));
    header.extend(["residual".to_string(), "minimal_k".to_string()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("distortion", &header);
    for i in (0..dom.len()).filter(|&i| dom.in_domain(i)) {
        let mut row = vec![res.to_string(), num(h)];
        row.extend(dom.point(i).iter().map(|v| num(*v)));
        row.push(num(report.residual.values()[i]));
        row.push(if report.minimal_k.defined[i] { num(report.minimal_k.values[i]) } else { String::new() });
        table.push(row);
    }
    rep.tables.push(table);
    Ok(rep)
}

// ------------------------------------------------------------------- limits

fn limits(spec: &ExperimentSpec) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let map = analytic_map(spec, MapFamily::covering(2, 1.0))?;
    if !map.is_torus() || map.source_dim() != map.target_dim() {
        return Err(invalid("limits needs an equidimensional map into a flat torus"));
    }
    let n = map.source_dim();
    let omega = spec.omega.clone().unwrap_or_else(|| AnalyticTargetForm::volume(n, true));
    let d = spec.d.unwrap_or(2f64.powi(n as i32 + 1));
    let params = FamilyParams::new(spec.k.unwrap_or(1.0), d, omega)?;
    let res = spec.resolution.unwrap_or(32);
    let mut cfg = SequenceConfig::dyadic(spec.levels.unwrap_or(3), res);
    if let Some(r) = &spec.radii {
        cfg.radii = r.clone();
    }
    let seq = NormalizedSequence::build(&map, params.clone(), spec.sigma.as_ref(), &cfg)?;

    let mut members = Table::new(
        "members",
        &["j", "radius", "resolution", "h", "a", "distortion_margin", "doubling_margin", "comass_margin", "sigma_margin"],
    );
    let mut family_ok = true;
    for (j, mem) in seq.members.iter().enumerate() {
        let fr = family_check(&mem.map, &mem.df, mem.sigma.as_ref(), &params)?;
        family_ok &= fr.all_pass();
        let dom = mem.domain();
        members.push(vec![
            j.to_string(),
            num(mem.radius),
            dom.resolution()[0].to_string(),
            num(dom.h_max()),
            num(mem.a),
            num(fr.distortion.margin),
            num(fr.doubling.margin),
            num(fr.comass.margin),
            num(fr.sigma_mass.margin),
        ]);
    }
    rep.check("family", family_ok, "every member satisfies the family conditions");

    let basis = HarmonicBasis::torus(n);
    let adm = admissibility_check(&seq, &basis, d * d, &HolderSequence::conformal(n))?;
    rep.check("admissibility", adm.pass, format!("max ratio {:.4} ≤ {}", adm.max_ratio, d * d));
    let lb = pairing_lower_bound(&seq)?;
    let lb_ok = lb.iter().all(|r| r.pass);
    rep.check("lower_bound", lb_ok, format!("{}/{} members", lb.iter().filter(|r| r.pass).count(), lb.len()));
    let sin = ScalarFn::trig(vec![TrigTerm::new(1.0, &unit_freq(n), Wave::Sin)]);
    let dec = exact_form_decay(&seq, &AnalyticTargetForm::scalar(n, sin, true)?, &TestDictionary::standard(n, 1))?;
    rep.check("exact_decay", dec.consistent == Some(true), format!("slope {:?}", dec.slope));

    let limit_res = spec.limit_resolution.unwrap_or(16);
    let l = build_limit_map(&seq, &basis, limit_res)?;
    let mut classes = Table::new("classes", &["class", "degree", "resolution", "h", "last_increment", "closedness"]);
    for c in &l.classes {
        let name: Vec<String> = c.class.indices().iter().map(|a| (a + 1).to_string()).collect();
        classes.push(vec![
            if name.is_empty() { "1".into() } else { format!("e{}", name.join("")) },
            c.class.degree().to_string(),
            limit_res.to_string(),
            num(l.grid.h_max()),
            c.cauchy.last().map_or(String::new(), |v| num(*v)),
            num(c.closedness),
        ]);
    }
    let phi = point_evaluate_phi(&l, 0.05)?;
    rep.check("phi_defect", phi.defect <= 0.05, format!("defect {:.3e}, rank {}", phi.defect, phi.rank));

    let hunt = hunt(&map, &params, res)?;
    rep.check("hunting", hunt.ball.is_some(), format!("{} balls examined", hunt.examined));

    rep.put("map", &map);
    rep.put("radii", &cfg.radii);
    rep.put("admissibility", &json!({ "max_ratio": adm.max_ratio, "constant": adm.constant, "pass": adm.pass }));
    rep.put("lower_bound", &lb);
    rep.put("exact_decay", &dec);
    rep.put("phi", &phi);
    rep.put("hunting", &hunt);
    rep.tables.push(members);
    rep.tables.push(classes);
    Ok(rep)
}

fn unit_freq(n: usize) -> Vec<i32> {
    let mut f = vec![0; n];
    f[0] = 1;
    f
}

/// Searches for a doubling ball of the reduction measure on `[−4, 4]ⁿ`.
fn hunt(map: &MapFamily, params: &FamilyParams, res: usize) -> Result<HuntReport, CliError> {
    let n = map.source_dim();
    let dom = Arc::new(GridDomain::cube(-4.0, 4.0, n, 2 * res)?);
    let f = map.sample(&dom)?;
    let df = f.best_derivative()?;
    let mu = reduction_measure(&f, &df, None, params)?;
    let report = hunting_search(&mu, 2f64.powi(n as i32), params.d, 4)?;
    if let Some(ball) = &report.ball {
        // the reported masses are sums over the closed ball
        let direct: f64 = (0..dom.len())
            .filter(|&i| dist2(&dom.point(i), &ball.center) <= ball.radius * ball.radius)
            .map(|i| mu.weights()[i])
            .sum();
        debug_assert!((direct - ball.mass).abs() <= 1e-9 * ball.mass.max(1.0));
    }
    Ok(report)
}

// ---------------------------------------------------------------- estimates

fn estimates(spec: &ExperimentSpec) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let base = calibration_suite().into_iter().find(|c| c.name == "bump_covering").expect("suite case");
    let case = match &spec.map {
        None => base,
        Some(map) => {
            let n = map.source_dim();
            SuiteCase {
                name: "custom".into(),
                map: map.clone(),
                root_center: vec![0.5; n],
                root_side: 1.0,
                k: 1.0,
                minimal_sigma: false,
            }
        }
    };
    let case = SuiteCase {
        map: analytic_map(spec, case.map.clone())?,
        root_center: spec.root.as_ref().map_or(case.root_center.clone(), |r| r.center.clone()),
        root_side: spec.root.as_ref().map_or(case.root_side, |r| r.side),
        k: spec.k.unwrap_or(case.k),
        minimal_sigma: spec.minimal_sigma.unwrap_or(case.minimal_sigma),
        ..case
    };
    let res = spec.resolution.unwrap_or(64);
    let levels = spec.levels.unwrap_or(3);
    let lambdas = spec.lambdas.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    let cubes = CubeFamily::dyadic(&case.root_center, case.root_side, levels)?;
    let rh = match &spec.sigma {
        Some(sig) if !case.minimal_sigma => {
            let dom = cubes.grid(res)?;
            let f = case.map.sample(&dom)?;
            let df = f.best_derivative()?;
            let omega = AnalyticTargetForm::volume(dom.dim(), f.is_torus());
            let s = scalar_field(&dom, sig)?;
            weak_reverse_holder_check(&f, &df, &omega, Some(&s), case.k, &cubes, REVERSE_HOLDER_CONSTANT)?
        }
        Some(_) => return Err(invalid("give either sigma or minimal_sigma, not both")),
        None => case.run(res, levels, REVERSE_HOLDER_CONSTANT)?,
    };
    let gehring = gehring_probe(&case.map, &lambdas, spec.sigma.as_ref(), &cubes, res)?;

    let n = cubes.dim();
    let mut header: Vec<String> = vec!["cube".into(), "level".into()];
    header.extend((1..=n).map(|a| format!("center{a}")));
    header.extend(
        ["side", "lambda", "resolution", "h", "lhs", "holder_term", "sigma_term", "needed", "margin", "gehring_ratio", "stable"]
            .map(String::from),
    );
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("estimates", &header);
    for (ci, row) in rh.rows.iter().enumerate() {
        for g in &gehring.rows {
            let mut cells = vec![ci.to_string(), row.level.to_string()];
            cells.extend(row.center.iter().map(|v| num(*v)));
            cells.extend([
                num(row.side),
                num(g.lambda),
                rh.resolution.to_string(),
                num(rh.h),
                num(row.lhs),
                num(row.holder_term),
                num(row.sigma_term),
                num(row.needed),
                num(row.margin),
                num(g.per_cube[ci]),
                g.stable.to_string(),
            ]);
            table.push(cells);
        }
    }
    rep.check(
        "reverse_holder",
        rh.pass(),
        format!("compliant {}, min margin {:.4e}, max needed {:.4}", rh.compliant, rh.min_margin, rh.max_needed),
    );
    rep.put("case", &case);
    rep.put(
        "reverse_holder",
        &json!({
            "resolution": rh.resolution, "h": rh.h, "k": rh.k, "constant": rh.constant,
            "compliant": rh.compliant, "inf_comass": rh.inf_comass, "min_margin": rh.min_margin,
            "max_needed": rh.max_needed, "max_holder_slack": rh.max_holder_slack,
        }),
    );
    rep.put(
        "gehring",
        &json!({
            "resolution": gehring.resolution, "h": gehring.h, "lambda_star": gehring.lambda_star,
            "at_boundary": gehring.at_boundary, "constant": gehring.constant, "sigma_norm": gehring.sigma_norm,
            "rows": gehring.rows.iter().map(|r| json!({
                "lambda": r.lambda, "ratio_coarse": r.ratio_coarse, "ratio_fine": r.ratio_fine,
                "change": r.change, "stable": r.stable,
            })).collect::<Vec<_>>(),
        }),
    );
    rep.tables.push(table);
    Ok(rep)
}

// --------------------------------------------------------------------- demo

/// The covering map of the flat torus through distortion, degree, limit
/// and estimate stages.
fn demo(spec: &ExperimentSpec, seed: u64) -> Result<Report, CliError> {
    if spec.map.is_some() || spec.map_file.is_some() {
        return Err(invalid("demo always runs the covering map"));
    }
    let mut rep = Report::default();
    let res = spec.resolution.unwrap_or(32);
    let covering = MapFamily::covering(2, 1.0);

    let dist = ExperimentSpec {
        map: Some(covering.clone()),
        domain: Some(Region::cube(&[0.5, 0.5], 1.0)),
        resolution: Some(res),
        k: Some(1.0),
        expect: crate::spec::Expectations { max_minimal_k: Some(1.0 + 1e-9), ..Default::default() },
        ..Default::default()
    };
    rep.absorb("distortion", distortion(&dist, seed)?);

    // the covering of scale 2 wraps the square twice in each direction
    let deg = ExperimentSpec {
        map: Some(MapFamily::covering(2, 2.0)),
        domain: Some(Region::cube(&[0.5, 0.5], 1.2)),
        u: Some(Region::cube(&[0.5, 0.5], 1.0)),
        y: Some(vec![0.3, 0.7]),
        resolution: Some(4 * res),
        expect: crate::spec::Expectations { degree: Some(4), ..Default::default() },
        ..Default::default()
    };
    rep.absorb("degree", degree_cmd(&deg)?);

    let lim = ExperimentSpec { map: Some(covering.clone()), resolution: Some(res), ..Default::default() };
    rep.absorb("limits", limits(&lim)?);

    let est = ExperimentSpec {
        map: Some(covering),
        resolution: Some(res),
        root: Some(crate::spec::CubeSpec { center: vec![0.5, 0.5], side: 1.0 }),
        ..Default::default()
    };
    rep.absorb("estimates", estimates(&est)?);
    Ok(rep)
}
