//! One function per subcommand; each returns the report and the
//! command-specific data, or an input error (exit 2).

use crate::output::{Output, Timing};
use anyhow::{anyhow, bail, Context, Result};
use gcstar_core::convalg::{cstar_norm, geometric_bound, i_norm, regular_span_dim, structure_constants};
use gcstar_core::crossed::{
    cstar_pattern, describe_pattern, group_crossed_product, groupoid_rep_to_covariant, partial_isometry_form, transformation_theorem,
    EtaleFrame, InverseSemigroup,
};
use gcstar_core::fingroupoid::{build_preset, validate_haar, Action, ActionFile, GroupFile, GroupoidFile, Preset};
use gcstar_core::fixtures::load_fixture;
use gcstar_core::formats::{matrix_json, measured_from_file, RepBundle, SemigroupFile};
use gcstar_core::hilbmod::{dump_bytes, gamma_compose, gamma_fibre, DumpEntry};
use gcstar_core::intdis::{
    check_conv_rep, disintegrate, extend_prerep, integrate_rep, norm_triple, oracle_integrate, roundtrip_conv, roundtrip_rep,
    PreRepresentation,
};
use gcstar_core::linalg::{max_abs, CMat};
use gcstar_core::measures::{
    check_corr_isomorphism, compare_integrals_defect, groupoid_families, implied_delta, regular_iso, FiniteMap, TopologicalCorrespondence,
};
use gcstar_core::random::{random_representation, rng_from_seed, Rng64};
use gcstar_core::reps::{blockwise, check_representation, invariant_support, regular_representation, space_identity_defect};
use gcstar_core::suite::{etale_checks, naturality_on, run_suite, SuiteConfig};
use gcstar_core::{Check, ConvElement, MeasuredGroupoid, Report, Representation};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Parse or validation failure: exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub struct Ctx {
    pub groupoid: Option<PathBuf>,
    pub preset: Option<String>,
    pub tolerance: f64,
    pub seed: u64,
    pub trials: usize,
    pub dump: Option<PathBuf>,
}

impl Ctx {
    fn rng(&self) -> Rng64 {
        rng_from_seed(self.seed)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "groupoid".into())
}

fn load_groupoid(ctx: &Ctx) -> Result<(MeasuredGroupoid, String)> {
    match (&ctx.groupoid, &ctx.preset) {
        (Some(p), None) => {
            let file = GroupoidFile::parse(&read(p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            let mg = measured_from_file(&stem(p), &file).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            Ok((mg, p.display().to_string()))
        }
        (None, Some(name)) => Ok((load_fixture(name).map_err(|e| input_err(e.to_string()))?, name.clone())),
        (Some(_), Some(_)) => Err(input_err("give either --groupoid or --preset, not both")),
        (None, None) => Err(input_err("no input: give --groupoid FILE or --preset NAME")),
    }
}

/// The bundle if given, else the regular representation of the groupoid.
fn load_rep(ctx: &Ctx, bundle: Option<&PathBuf>) -> Result<(Representation, String)> {
    match bundle {
        Some(p) => {
            let b = RepBundle::parse(&read(p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            let rep = b.to_representation(&stem(p)).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            Ok((rep, p.display().to_string()))
        }
        None => {
            let (mg, name) = load_groupoid(ctx)?;
            Ok((regular_representation(Arc::new(mg)), format!("{name} (regular representation)")))
        }
    }
}

fn dump(ctx: &Ctx, mats: &[(String, CMat)]) -> Result<Value> {
    let Some(dir) = &ctx.dump else { return Ok(Value::Null) };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut entries = Vec::new();
    for (name, m) in mats {
        let e = DumpEntry::new(name, m);
        std::fs::write(dir.join(&e.file), dump_bytes(m)).with_context(|| format!("writing {}", e.file))?;
        entries.push(e);
    }
    let manifest = serde_json::to_string_pretty(&entries)?;
    std::fs::write(dir.join("manifest.json"), manifest + "\n")?;
    Ok(json!(dir.display().to_string()))
}

fn safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn validate(ctx: &Ctx, file: Option<&PathBuf>) -> Result<Output> {
    let path = file.or(ctx.groupoid.as_ref());
    let (g, c, input) = match path {
        Some(p) => {
            let f = GroupoidFile::parse(&read(p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            let (g, c) = f.to_groupoid().map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            (g, c, p.display().to_string())
        }
        None => {
            let (mg, name) = load_groupoid(ctx)?;
            (mg.g, mg.haar.c, name)
        }
    };
    let v = g.validate();
    let weights: Vec<f64> = (0..g.n_arrows()).map(|k| c[g.src[k]]).collect();
    let h = validate_haar(&g, &weights);
    let mut report = Report::new();
    for (label, vr) in [("groupoid axioms", &v), ("Haar system", &h)] {
        let mut ch = Check::flag(label, vr.is_valid());
        if let Some(first) = vr.first() {
            ch = ch.with_witness(first.to_string());
        }
        report.push(ch);
    }
    if !(v.is_valid() && h.is_valid()) {
        let lines: Vec<String> = v.violations.iter().chain(&h.violations).map(|x| x.to_string()).collect();
        return Err(input_err(format!("{input}: invalid\n  {}", lines.join("\n  "))));
    }
    let data = json!({
        "objects": g.n_objects(),
        "arrows": g.n_arrows(),
        "orbits": g.orbits().len(),
        "haar": g.object_ids.iter().cloned().zip(c.iter().cloned()).collect::<BTreeMap<_, _>>(),
    });
    Ok(Output::new("validate", &input, report, data))
}

pub fn families(ctx: &Ctx) -> Result<Output> {
    let (mg, input) = load_groupoid(ctx)?;
    let tol = ctx.tolerance;
    let fam = groupoid_families(&mg);
    let mut report = fam.check_identities();
    let mut rng = ctx.rng();
    let n2 = mg.nerve.n_pairs();
    let d = (0..ctx.trials)
        .map(|_| {
            let f: Vec<_> = gcstar_core::linalg::gaussian_matrix(n2, 1, &mut rng).iter().copied().collect();
            compare_integrals_defect(&mg, &f)
        })
        .fold(0.0, f64::max);
    report.push(Check::defect(format!("iterated integrals agree ({} functions)", ctx.trials), d, tol));
    let id2 = FiniteMap::identity(n2);
    let mut dg: f64 = 0.0;
    for i in 0..3 {
        for mu in [&fam.alpha, &fam.alpha_tilde] {
            dg = dg.max(gamma_compose(&id2, &fam.lambda[i], mu).map(|m| m.unitarity_defect()).unwrap_or(f64::INFINITY));
        }
    }
    report.push(Check::defect("γ compose unitary", dg, tol));
    let w =
        TopologicalCorrespondence { backward: FiniteMap { cod: mg.n_objects(), map: mg.g.rng.clone() }, family: fam.alpha_tilde.clone() };
    let mut df: f64 = 0.0;
    for f in [&fam.alpha, &fam.alpha_tilde] {
        let v = TopologicalCorrespondence { backward: FiniteMap::identity(mg.n_arrows()), family: f.clone() };
        df = df.max(gamma_fibre(&v, &w).map(|(m, _)| m.unitarity_defect()).unwrap_or(f64::INFINITY));
    }
    report.push(Check::defect("γ fibre unitary", df, tol));
    let iso = regular_iso(&mg);
    let delta = implied_delta(&iso.source, &iso.target, &iso.upsilon);
    report.absorb("Υ", check_corr_isomorphism(&iso.source, &iso.target, &iso.upsilon, &delta, tol));
    let data = json!({
        "alpha": fam.alpha.weight,
        "alpha_tilde": fam.alpha_tilde.weight,
        "lambda": fam.lambda.iter().map(|l| l.weight.clone()).collect::<Vec<_>>(),
        "mu": fam.mu.iter().map(|l| l.weight.clone()).collect::<Vec<_>>(),
        "delta": delta,
    });
    Ok(Output::new("families", &input, report, data))
}

fn coeff_json(c: gcstar_core::C64) -> Value {
    if c.im == 0.0 {
        json!(c.re)
    } else {
        json!([c.re, c.im])
    }
}

pub fn algebra(ctx: &Ctx) -> Result<Output> {
    let (mg, input) = load_groupoid(ctx)?;
    let tol = ctx.tolerance;
    let g = &mg.g;
    let n1 = mg.n_arrows();
    let sc = structure_constants(&mg);
    let product: Vec<Value> = sc
        .iter()
        .map(|(a, b, terms)| {
            let m: BTreeMap<String, Value> = terms.iter().map(|&(k, c)| (g.arrow_ids[k].clone(), coeff_json(c))).collect();
            json!([g.arrow_ids[*a], g.arrow_ids[*b], m])
        })
        .collect();
    let mut report = Report::new();
    let mut inorm = BTreeMap::new();
    let mut cnorm = BTreeMap::new();
    let mut geo = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for k in 0..n1 {
        let f = ConvElement::delta(n1, k);
        let (i, gb) = (i_norm(&mg, &f), geometric_bound(&mg, &f));
        let c = cstar_norm(&mg, &f).map_err(|e| anyhow!("eigenvalues: {e}"))?;
        worst = worst.max(c - gb).max(gb - i);
        inorm.insert(g.arrow_ids[k].clone(), i);
        cnorm.insert(g.arrow_ids[k].clone(), c);
        geo.insert(g.arrow_ids[k].clone(), gb);
    }
    report.push(Check::defect("‖δ_g‖ ≤ √(‖α(|δ_g|)‖∞‖α̃(|δ_g|)‖∞) ≤ ‖δ_g‖_I", worst.max(0.0), tol));
    let mut assoc = true;
    let mut anti = true;
    let mut rng = ctx.rng();
    for _ in 0..ctx.trials {
        let (a, b, c) = (ConvElement::random(n1, &mut rng), ConvElement::random(n1, &mut rng), ConvElement::random(n1, &mut rng));
        let conv = |x: &ConvElement, y: &ConvElement| gcstar_core::convalg::convolve(&mg, x, y);
        let star = |x: &ConvElement| gcstar_core::convalg::star(&mg, x);
        let scale = 1.0 + a.abs().iter().chain(b.abs().iter()).chain(c.abs().iter()).cloned().fold(0.0, f64::max).powi(3);
        assoc &= conv(&conv(&a, &b), &c).max_diff(&conv(&a, &conv(&b, &c))) <= tol * scale;
        anti &= star(&conv(&a, &b)).max_diff(&conv(&star(&b), &star(&a))) <= tol * scale;
    }
    report.push(Check::flag("convolution associative", assoc));
    report.push(Check::flag("(f₁*f₂)* = f₂* * f₁*", anti));
    let span = regular_span_dim(&mg);
    report.push(Check::flag("left regular representation faithful", span == n1).witness_if_failed(|| format!("span {span} < {n1}")));
    let pattern = cstar_pattern(g);
    let data = json!({
        "arrows": g.arrow_ids,
        "product": product,
        "inorm": inorm,
        "geometric": geo,
        "cstarnorm": cnorm,
        "pattern": describe_pattern(&pattern),
    });
    Ok(Output::new("algebra", &input, report, data))
}

pub fn rep(ctx: &Ctx, bundle: Option<&PathBuf>) -> Result<Output> {
    let (rep, input) = load_rep(ctx, bundle)?;
    let tol = ctx.tolerance;
    let mut report = check_representation(&rep, tol);
    if let Ok(fam) = blockwise(&rep) {
        report.absorb("blockwise", fam.check(&rep.mg));
    }
    report.absorb("", invariant_support(&rep).1);
    let g = &rep.mg.g;
    if (0..g.n_arrows()).all(|k| g.is_unit(k)) {
        let d = space_identity_defect(&rep).unwrap_or(f64::INFINITY);
        report.push(Check::defect("space groupoid: U = canonical identity", d, tol));
    }
    let dims: BTreeMap<String, Vec<usize>> =
        (0..g.n_objects()).map(|x| (g.object_ids[x].clone(), (0..rep.n_coeff()).map(|w| rep.module.fiber_dim(x, w)).collect())).collect();
    let dumped = dump(ctx, &[("U".to_string(), rep.u.normalized_dense())])?;
    let data = json!({"dims": dims, "coefficients": rep.n_coeff(), "tensor_dim": rep.u.source.dim(), "dump": dumped});
    Ok(Output::new("rep", &input, report, data))
}

pub fn integrate(ctx: &Ctx, bundle: Option<&PathBuf>) -> Result<Output> {
    let (rep, input) = load_rep(ctx, bundle)?;
    let tol = ctx.tolerance;
    let l = integrate_rep(&rep).map_err(|e| input_err(e.to_string()))?;
    let mut report = check_conv_rep(&l, tol);
    let scale = l.ops.iter().map(max_abs).fold(1.0, f64::max);
    let d = match oracle_integrate(&rep) {
        Ok(o) => l.max_diff(&o) / scale,
        Err(_) => f64::INFINITY,
    };
    report.push(Check::defect("integrate_rep = oracle_integrate", d, tol));
    let mut rng = ctx.rng();
    let n1 = rep.mg.n_arrows();
    let (mut s1, mut s2) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..ctx.trials {
        let f = ConvElement::random(n1, &mut rng);
        let (n, geo, inorm) = norm_triple(&l, &f);
        s1 = s1.min(geo - n);
        s2 = s2.min(inorm - geo);
    }
    report.push(Check::defect(format!("norm bounds on {} random f", ctx.trials), (-s1.min(s2)).max(0.0), tol));
    let g = &rep.mg.g;
    let ops: BTreeMap<String, Value> = (0..n1).map(|k| (g.arrow_ids[k].clone(), matrix_json(&l.ops[k]))).collect();
    let dumped = dump(ctx, &(0..n1).map(|k| (format!("L_{}", safe(&g.arrow_ids[k])), l.ops[k].clone())).collect::<Vec<_>>())?;
    let data = json!({"dim": l.dim(), "L": ops, "dump": dumped});
    Ok(Output::new("integrate", &input, report, data))
}

pub fn disintegrate_cmd(ctx: &Ctx, bundle: Option<&PathBuf>) -> Result<Output> {
    let (rep, input) = load_rep(ctx, bundle)?;
    let tol = ctx.tolerance;
    let l = integrate_rep(&rep).map_err(|e| input_err(e.to_string()))?;
    let mut report = Report::new();
    let p = PreRepresentation::from_conv(&l);
    report.absorb("pre-representation", p.check(tol));
    let d = disintegrate(&l, tol).map_err(|e| input_err(format!("disintegration failed: {e}")))?;
    report.absorb("", d.report.clone());
    match extend_prerep(&p, tol) {
        Ok((_, r)) => report.absorb("extension", r),
        Err(e) => report.push(Check::flag("extension", false).with_witness(e.to_string())),
    }
    report.absorb("recovered", check_representation(&d.rep, tol));
    let g = &rep.mg.g;
    let dims: BTreeMap<String, Vec<usize>> = (0..g.n_objects())
        .map(|x| (g.object_ids[x].clone(), (0..d.rep.n_coeff()).map(|w| d.rep.module.fiber_dim(x, w)).collect()))
        .collect();
    let dumped = dump(ctx, &[("J".to_string(), d.basis.clone())])?;
    Ok(Output::new("disintegrate", &input, report, json!({"dims": dims, "dump": dumped})))
}

pub fn roundtrip(ctx: &Ctx, bundle: Option<&PathBuf>) -> Result<Output> {
    let (rep, input) = load_rep(ctx, bundle)?;
    let tol = ctx.tolerance;
    let mut rng = ctx.rng();
    let mut reps = vec![rep.clone()];
    reps.extend((0..ctx.trials).map(|t| random_representation(rep.mg.clone(), 1 + t % 2, &mut rng)));
    let mut report = Report::new();
    for (i, r) in reps.iter().enumerate() {
        let label = if i == 0 { "input".to_string() } else { format!("random#{i:02}") };
        let mut sub = roundtrip_rep(r, tol);
        match integrate_rep(r) {
            Ok(l) => sub.absorb("", roundtrip_conv(&l, tol)),
            Err(e) => sub.push(Check::flag("integrate", false).with_witness(e.to_string())),
        }
        report.absorb(&label, sub);
    }
    let (nat, pos, neg) = naturality_on(&rep.mg, ctx.trials, tol, &mut rng);
    report.absorb("naturality", nat);
    Ok(Output::new("roundtrip", &input, report, json!({"representations": reps.len(), "intertwiners": pos, "non_intertwiners": neg})))
}

pub fn etale(ctx: &Ctx, semigroup: Option<&PathBuf>) -> Result<Output> {
    let (mg, input) = load_groupoid(ctx)?;
    if !mg.is_counting() {
        return Err(input_err("étale verification needs the counting Haar system (c ≡ 1)"));
    }
    let s = match semigroup {
        Some(p) => {
            let file = SemigroupFile::parse(&read(p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            let gens = file.to_bisections(&mg.g).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
            InverseSemigroup::from_bisections(&mg.g, gens).map_err(|e| input_err(e.to_string()))?
        }
        None => InverseSemigroup::all_bisections(&mg.g).map_err(|e| input_err(e.to_string()))?,
    };
    let mg = Arc::new(mg);
    let (frame, mut report) = EtaleFrame::from_bisections(mg.clone(), s).map_err(|e| input_err(e.to_string()))?;
    let mut rng = ctx.rng();
    report.absorb("", etale_checks(&frame, ctx.trials, ctx.tolerance, &mut rng));
    let regular = regular_representation(mg.clone());
    match groupoid_rep_to_covariant(&regular, &frame) {
        Ok(cov) => report.absorb("regular", partial_isometry_form(&cov, &frame.s, ctx.tolerance).1),
        Err(e) => report.push(Check::flag("regular covariant pair", false).with_witness(e.to_string())),
    }
    let data = json!({
        "semigroup": frame.s.labels,
        "idempotents": frame.s.idempotents().len(),
        "arrows": mg.n_arrows(),
        "pattern": describe_pattern(&cstar_pattern(&mg.g)),
    });
    Ok(Output::new("etale", &input, report, data))
}

pub fn trafo(ctx: &Ctx, group: Option<&PathBuf>, action: Option<&PathBuf>) -> Result<Output> {
    let (action, input) = match (group, action, &ctx.preset) {
        (Some(g), Some(a), _) => {
            let gf: GroupFile = serde_json::from_str(&read(g)?).map_err(|e| input_err(format!("{}: {e}", g.display())))?;
            let grp = gf.to_group().map_err(|e| input_err(format!("{}: {e}", g.display())))?;
            let af: ActionFile = serde_json::from_str(&read(a)?).map_err(|e| input_err(format!("{}: {e}", a.display())))?;
            let act = af.to_action(grp).map_err(|e| input_err(format!("{}: {e}", a.display())))?;
            (act, format!("{} on {}", g.display(), a.display()))
        }
        (None, None, Some(name)) => {
            let n = match name.as_str() {
                "T2" => 2,
                _ => name
                    .strip_prefix("trafo:")
                    .and_then(|n| n.parse().ok())
                    .filter(|&n: &usize| (1..=64).contains(&n))
                    .ok_or_else(|| input_err(format!("trafo needs --group and --action, or --preset trafo:N (got `{name}`)")))?,
            };
            (Action::rotation(n), name.clone())
        }
        _ => bail!(InputError("trafo needs --group FILE --action FILE, or --preset trafo:N".into())),
    };
    let t = build_preset(Preset::Transformation(action.clone())).map_err(|e| input_err(e.to_string()))?;
    let mg = Arc::new(MeasuredGroupoid::counting("Γ⋉X", t).map_err(|e| input_err(e.to_string()))?);
    let mut rng = ctx.rng();
    let mut report = Report::new();
    for i in 0..ctx.trials.max(1) {
        let rep = random_representation(mg.clone(), 1 + i % 2, &mut rng);
        let r = transformation_theorem(&action, Some(&rep), ctx.tolerance).map_err(|e| input_err(e.to_string()))?;
        if i == 0 {
            report.absorb("", r);
        } else {
            report.absorb(
                &format!("random#{i:02}"),
                r.checks.into_iter().filter(|c| c.name.starts_with("covariant pair")).fold(Report::new(), |mut acc, c| {
                    acc.push(c);
                    acc
                }),
            );
        }
    }
    let gcp = group_crossed_product(&action);
    let data = json!({
        "group_order": gcp.n_group,
        "points": gcp.n_points,
        "dim": gcp.mul.len(),
        "pattern": describe_pattern(&cstar_pattern(&mg.g)),
    });
    Ok(Output::new("trafo", &input, report, data))
}

pub fn suite(ctx: &Ctx) -> Result<Output> {
    let cfg = SuiteConfig::with_trials(ctx.seed, ctx.trials);
    let results = run_suite(&cfg);
    let mut report = Report::new();
    let mut criteria = Vec::new();
    let mut timing = Timing::default();
    for r in &results {
        report.absorb(&format!("{:02} {}", r.id, r.title), r.report.clone());
        criteria.push(json!({"id": r.id, "title": r.title, "passed": r.passed(), "max_defect": r.report.max_defect()}));
        timing.sections_ms.insert(format!("{:02} {}", r.id, r.title), r.elapsed.as_secs_f64() * 1e3);
    }
    let mut out =
        Output::new("suite", &format!("seed {} trials {}", ctx.seed, ctx.trials), report, json!({"config": cfg, "criteria": criteria}));
    out.timing = timing;
    Ok(out)
}
