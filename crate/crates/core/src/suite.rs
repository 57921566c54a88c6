//! The verification battery: eleven criteria, each a pure function of a
//! seed and trial counts returning a [`Report`].

use crate::convalg::{regular_matrix, ConvElement};
use crate::crossed::{
    canonical_iso_cstar, check_covariant, check_crossed_rep, compare_with_integrated, covariant_to_groupoid_rep, crossed_product,
    cstar_pattern, group_crossed_product, groupoid_rep_to_covariant, integrate_covariant, rep_of_crossed_to_covariant,
    transformation_theorem, CrossedRep, EtaleFrame, InverseSemigroup,
};
use crate::fingroupoid::{build_preset, validate_haar, Action, Group, MeasuredGroupoid, Preset};
use crate::fixtures;
use crate::hilbmod::{gamma_compose, gamma_fibre, Correspondence, ModuleMap};
use crate::intdis::{
    conv_intertwining_defect, induce_conv, integrate_rep, norm_triple, oracle_integrate, roundtrip_conv, roundtrip_rep, ConvRep,
};
use crate::linalg::{cr, gaussian_matrix, haar_unitary, max_abs, max_abs_diff, CMat, C64};
use crate::measures::{compare_integrals_defect, groupoid_families, FiniteMap, TopologicalCorrespondence};
use crate::random::{
    mutate, random_correspondence, random_etale, random_measured, random_representation, random_space, rng_from_seed, Rng64,
};
use crate::report::{Check, Report};
use crate::reps::{
    check_intertwiner, check_representation, conjugate, direct_sum, fibres, from_cocycle, induce, regular_representation,
    space_identity_defect, CocycleFamily, Representation,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;
use std::time::{Duration, Instant};

pub const TITLES: [&str; 11] = [
    "groupoid and Haar axioms",
    "measure calculus",
    "canonical isomorphisms",
    "regular representation",
    "integration bounds",
    "round trips",
    "two-path oracle",
    "étale theorem",
    "transformation theorem",
    "space-groupoid degeneracy",
    "naturality",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random representations, étale groupoids and intertwiner triples
    /// per fixture.
    pub trials: usize,
    pub random_groupoids: usize,
    pub mutants: usize,
    pub functions: usize,
    /// `(rep, f)` pairs per fixture for the norm bounds.
    pub norm_pairs: usize,
    pub etale_randoms: usize,
}

impl SuiteConfig {
    pub fn acceptance(seed: u64) -> Self {
        SuiteConfig { seed, trials: 20, random_groupoids: 50, mutants: 20, functions: 100, norm_pairs: 200, etale_randoms: 10 }
    }

    /// Scales the random counts with `trials` (20 gives the acceptance
    /// counts).
    pub fn with_trials(seed: u64, trials: usize) -> Self {
        let scale = |n: usize| (n * trials).div_ceil(20).max(1);
        SuiteConfig {
            seed,
            trials: trials.max(1),
            random_groupoids: scale(50),
            mutants: scale(20),
            functions: scale(100),
            norm_pairs: scale(200),
            etale_randoms: scale(10),
        }
    }

    fn rng(&self, criterion: u64) -> Rng64 {
        rng_from_seed(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ criterion.wrapping_mul(0xD1B5_4A32_D192_ED03))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub report: Report,
    /// Wall-clock time; not part of the comparable result.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    pub fn line(&self) -> String {
        let s = self.report.summarize(format!("[{:>2}] {}", self.id, self.title));
        s.to_string()
    }
}

/// Runs one criterion (1-based id).
pub fn run_criterion(id: usize, cfg: &SuiteConfig) -> CriterionResult {
    let start = Instant::now();
    let mut rng = cfg.rng(id as u64);
    let mut report = match id {
        1 => axioms(cfg, &mut rng),
        2 => measure_calculus(cfg, &mut rng),
        3 => canonical_isos(),
        4 => regular(cfg, &mut rng),
        5 => bounds(cfg, &mut rng),
        6 => round_trips(cfg, &mut rng),
        7 => oracle(cfg, &mut rng),
        8 => etale(cfg, &mut rng),
        9 => transformation(&mut rng),
        10 => degeneracy(cfg, &mut rng),
        11 => naturality(cfg, &mut rng),
        _ => panic!("criterion ids are 1..=11"),
    };
    report.sort();
    CriterionResult { id, title: TITLES[id - 1], report, elapsed: start.elapsed() }
}

/// All criteria, evaluated in parallel, ordered by id.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<CriterionResult> {
    (1..=11).into_par_iter().map(|id| run_criterion(id, cfg)).collect()
}

fn arc(mg: MeasuredGroupoid) -> Arc<MeasuredGroupoid> {
    Arc::new(mg)
}

fn fixture_arcs() -> Vec<Arc<MeasuredGroupoid>> {
    fixtures::all().into_iter().map(arc).collect()
}

fn n_coeff(t: usize) -> usize {
    1 + t % 2
}

fn op_scale(l: &ConvRep) -> f64 {
    l.ops.iter().map(max_abs).fold(1.0, f64::max)
}

fn axioms(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let mut instances: Vec<MeasuredGroupoid> = fixtures::all();
    instances.extend((0..cfg.random_groupoids).map(|i| random_measured(&format!("random#{i}"), rng)));
    let mut bad = None;
    for mg in &instances {
        let v = mg.g.validate();
        let h = validate_haar(&mg.g, &mg.haar.arrow_weights(&mg.g));
        if !(v.is_valid() && h.is_valid()) {
            bad.get_or_insert_with(|| format!("{}: {}", mg.name, v.first().or(h.first()).map(|x| x.to_string()).unwrap_or_default()));
        }
    }
    out.push(
        Check::flag(format!("{} fixtures and {} random groupoids validate", fixtures::NAMES.len(), cfg.random_groupoids), bad.is_none())
            .witness_if_failed(|| bad.clone().unwrap_or_default()),
    );
    let mut survivor = None;
    let mut caught = 0;
    for i in 0..cfg.mutants {
        let base = &instances[fixtures::NAMES.len() + i % cfg.random_groupoids.max(1)];
        let m = mutate(base, rng);
        let v = m.groupoid.validate();
        let rep = if v.is_valid() { validate_haar(&m.groupoid, &m.weights) } else { v };
        match rep.first() {
            Some(w) if !w.witness.is_empty() => caught += 1,
            _ => {
                survivor.get_or_insert_with(|| format!("{}: {}", base.name, m.description));
            }
        }
    }
    out.push(
        Check::flag(format!("{caught}/{} mutants rejected with a witness", cfg.mutants), survivor.is_none())
            .witness_if_failed(|| survivor.clone().unwrap_or_default()),
    );
    out
}

fn measure_calculus(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    for mg in fixtures::all() {
        out.absorb(&mg.name, groupoid_families(&mg).check_identities());
        let n2 = mg.nerve.n_pairs();
        let d = (0..cfg.functions)
            .map(|_| {
                let f: Vec<C64> = gaussian_matrix(n2, 1, rng).iter().copied().collect();
                compare_integrals_defect(&mg, &f)
            })
            .fold(0.0, f64::max);
        out.push(Check::defect(format!("{}/iterated integrals agree ({} functions)", mg.name, cfg.functions), d, 1e-12));
    }
    out
}

fn canonical_isos() -> Report {
    let mut out = Report::new();
    for mg in fixtures::all() {
        let fam = groupoid_families(&mg);
        let n0 = mg.n_objects();
        let n1 = mg.n_arrows();
        let id2 = FiniteMap::identity(mg.nerve.n_pairs());
        let mut d: f64 = 0.0;
        let mut err = None;
        for i in 0..3 {
            for mu in [&fam.alpha, &fam.alpha_tilde] {
                match gamma_compose(&id2, &fam.lambda[i], mu) {
                    Ok(m) => d = d.max(m.unitarity_defect()),
                    Err(e) => err = Some(e.to_string()),
                }
            }
        }
        out.push(
            Check::defect(format!("{}/γ compose preserves inner products", mg.name), d, 1e-12)
                .witness_if_failed(|| err.clone().unwrap_or_default()),
        );
        let w = TopologicalCorrespondence { backward: FiniteMap { cod: n0, map: mg.g.rng.clone() }, family: fam.alpha_tilde.clone() };
        let mut d: f64 = 0.0;
        for fam_v in [&fam.alpha, &fam.alpha_tilde] {
            let v = TopologicalCorrespondence { backward: FiniteMap::identity(n1), family: fam_v.clone() };
            match gamma_fibre(&v, &w) {
                Ok((m, _)) => d = d.max(m.unitarity_defect()),
                Err(_) => d = f64::INFINITY,
            }
        }
        out.push(Check::defect(format!("{}/γ fibre preserves inner products", mg.name), d, 1e-12));
    }
    out
}

fn regular(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let mut groupoids = fixture_arcs();
    groupoids.extend((0..cfg.trials).map(|i| arc(random_measured(&format!("weighted#{i}"), rng))));
    let mut worst_rep: f64 = 0.0;
    let mut worst_mat: f64 = 0.0;
    let mut bad = None;
    for mg in &groupoids {
        let rep = regular_representation(mg.clone());
        let r = check_representation(&rep, 1e-10);
        worst_rep = worst_rep.max(r.max_defect());
        if !r.passed() {
            bad.get_or_insert_with(|| format!("{}: {}", mg.name, r.summarize("").witness.unwrap_or_default()));
        }
        match integrate_rep(&rep) {
            Ok(l) => {
                for g in 0..mg.n_arrows() {
                    let f = ConvElement::delta(mg.n_arrows(), g);
                    worst_mat = worst_mat.max(max_abs_diff(&l.ops[g], &regular_matrix(mg, &f).normalized_dense()));
                }
            }
            Err(e) => {
                worst_mat = f64::INFINITY;
                bad.get_or_insert_with(|| format!("{}: {e}", mg.name));
            }
        }
    }
    let mut c = Check::defect("regular representation passes check_representation", worst_rep, 1e-10);
    c.passed &= bad.is_none();
    out.push(c.witness_if_failed(|| bad.clone().unwrap_or_default()));
    out.push(Check::defect("integrated regular representation = left convolution", worst_mat, 1e-10));
    out
}

/// Z2 on `ℂ²` with `U_g` the swap.
pub fn swap_rep() -> Representation {
    let mg = arc(fixtures::z2());
    let module = Correspondence::from_dims(&[vec![2]]);
    let swap = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
    let e = mg.g.arrow_index("e").expect("Z2 has e");
    let mut blocks = vec![vec![CMat::identity(2, 2)]; 2];
    blocks[1 - e] = vec![swap];
    from_cocycle(mg, module, &CocycleFamily { blocks }).expect("swap cocycle")
}

fn bounds(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let reps_per = cfg.trials.min(cfg.norm_pairs).max(1);
    let fns_per = cfg.norm_pairs.div_ceil(reps_per);
    for mg in fixture_arcs() {
        let mut s1: f64 = f64::INFINITY;
        let mut s2: f64 = f64::INFINITY;
        let mut count = 0;
        for t in 0..reps_per {
            let rep = random_representation(mg.clone(), n_coeff(t), rng);
            let l = integrate_rep(&rep).expect("random reps integrate");
            for _ in 0..fns_per {
                if count == cfg.norm_pairs {
                    break;
                }
                let f = ConvElement::random(mg.n_arrows(), rng);
                let (n, geo, inorm) = norm_triple(&l, &f);
                s1 = s1.min(geo - n);
                s2 = s2.min(inorm - geo);
                count += 1;
            }
        }
        let slack = s1.min(s2);
        let mut c = Check::defect(format!("{}/‖L(f)‖ ≤ √(‖α(|f|)‖∞‖α̃(|f|)‖∞) ≤ ‖f‖_I ({count} pairs)", mg.name), (-slack).max(0.0), 1e-9);
        c.passed &= !slack.is_nan();
        out.push(c);
    }
    let rep = swap_rep();
    let l = integrate_rep(&rep).expect("swap integrates");
    let f = ConvElement::from_values(vec![cr(1.0); 2]);
    let (n, geo, inorm) = norm_triple(&l, &f);
    out.push(
        Check::defect("Z2 swap: bound attained at δ_e + δ_g", (n - geo).abs(), 1e-9)
            .witness_if_failed(|| format!("‖L(f)‖ = {n}, bound = {geo}, ‖f‖_I = {inorm}")),
    );
    out
}

fn round_trips(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    for mg in fixture_arcs() {
        let mut a = Report::new();
        let mut b = Report::new();
        let mut reps = vec![regular_representation(mg.clone())];
        reps.extend((0..cfg.trials).map(|t| random_representation(mg.clone(), n_coeff(t), rng)));
        for rep in &reps {
            match integrate_rep(rep) {
                Ok(l) => a.absorb("", roundtrip_conv(&l, 1e-9)),
                Err(e) => a.push(Check::flag("integrate", false).with_witness(e.to_string())),
            }
            b.absorb("", roundtrip_rep(rep, 1e-9));
        }
        out.push(a.summarize(format!("{}/integrate∘disintegrate = id", mg.name)));
        out.push(b.summarize(format!("{}/disintegrate∘integrate = id", mg.name)));
    }
    out
}

fn oracle(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let mut groupoids = fixture_arcs();
    groupoids.extend((0..cfg.trials).map(|i| arc(random_measured(&format!("weighted#{i}"), rng))));
    for mg in groupoids {
        let mut d: f64 = 0.0;
        let mut reps = vec![regular_representation(mg.clone())];
        reps.extend((0..cfg.trials.div_ceil(4)).map(|t| random_representation(mg.clone(), n_coeff(t), rng)));
        for rep in &reps {
            d = d.max(match (integrate_rep(rep), oracle_integrate(rep)) {
                (Ok(l1), Ok(l2)) => l1.max_diff(&l2) / op_scale(&l1),
                _ => f64::INFINITY,
            });
        }
        out.push(Check::defect(format!("{}/integrate_rep = oracle_integrate", mg.name), d, 1e-10));
    }
    let mut c = Report::new();
    for ch in out.checks.drain(fixtures::NAMES.len()..).collect::<Vec<_>>() {
        c.push(ch);
    }
    out.push(c.summarize(format!("{} random weighted groupoids", cfg.trials)));
    out
}

fn etale_instance(name: &str, mg: Arc<MeasuredGroupoid>, reps: usize, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let s = match InverseSemigroup::all_bisections(&mg.g) {
        Ok(s) => s,
        Err(e) => {
            out.push(Check::flag("Bis(G)", false).with_witness(e.to_string()));
            return out;
        }
    };
    let (frame, r) = match EtaleFrame::from_bisections(mg.clone(), s) {
        Ok(x) => x,
        Err(e) => {
            out.push(Check::flag("étale frame", false).with_witness(e.to_string()));
            return out;
        }
    };
    out.push(r.summarize("S wide, germ groupoid ≅ G"));
    out.absorb("", etale_checks(&frame, reps, 1e-10, rng));
    let mut named = Report::new();
    named.absorb(name, out);
    named
}

/// Crossed product, canonical isomorphism and the translation round trips
/// on `reps` random representations.
pub fn etale_checks(frame: &EtaleFrame, reps: usize, tol: f64, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let mg = frame.mg.clone();
    let cp = match crossed_product(&frame.s) {
        Ok(cp) => cp,
        Err(e) => {
            out.push(Check::flag("S⋉C(X)", false).with_witness(e.to_string()));
            return out;
        }
    };
    out.push(cp.report.summarize("S⋉C(X) is a *-algebra"));
    out.push(
        Check::flag("dim S⋉C(X) = |G¹|", cp.dim() == mg.n_arrows()).witness_if_failed(|| format!("{} vs {}", cp.dim(), mg.n_arrows())),
    );
    out.push(canonical_iso_cstar(frame, &cp).summarize("canonical_iso_cstar"));
    let mut tr = Report::new();
    for t in 0..reps {
        let rep = random_representation(mg.clone(), n_coeff(t), rng);
        let res: Result<(), crate::crossed::CrossedError> = (|| {
            let cov = groupoid_rep_to_covariant(&rep, frame)?;
            tr.absorb("", check_covariant(&cov, &frame.s, tol));
            let (back, r) = covariant_to_groupoid_rep(&cov, frame, tol)?;
            tr.absorb("", r);
            tr.push(Check::defect("groupoid → covariant → groupoid", back.u.distance(&rep.u).map_err(crate::reps::RepError::from)?, tol));
            let (rho, r) = integrate_covariant(&cov, &frame.s, &cp, tol);
            tr.absorb("", r);
            tr.absorb("", check_crossed_rep(&rho, &cp, tol));
            tr.push(Check::defect("ρ = L∘Φ", compare_with_integrated(&rep, &rho, frame, &cp)?, tol));
            let (cov2, j) = rep_of_crossed_to_covariant(&rho, &frame.s, &cp, tol)?;
            let (rho2, _) = integrate_covariant(&cov2, &frame.s, &cp, tol);
            let back = CrossedRep { ops: rho2.ops.iter().map(|m| &j * m * j.adjoint()).collect(), ..rho2 };
            tr.push(Check::defect("crossed → covariant → crossed", back.max_diff(&rho), tol));
            Ok(())
        })();
        if let Err(e) = res {
            tr.push(Check::flag("translation", false).with_witness(e.to_string()));
        }
    }
    out.push(tr.summarize("representation translation round trips"));
    out
}

fn etale(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let reps = cfg.trials.div_ceil(4);
    for name in ["Z2", "P2", "X2"] {
        let mg = arc(fixtures::load_fixture(name).expect("fixture"));
        out.absorb("", etale_instance(name, mg, reps, rng));
    }
    let mut randoms = Report::new();
    for i in 0..cfg.etale_randoms {
        let mg = arc(random_etale(&format!("etale#{i}"), rng));
        randoms.absorb("", etale_instance(&mg.name.clone(), mg, 2, rng));
    }
    let mut grouped: std::collections::BTreeMap<String, Report> = Default::default();
    for c in randoms.checks {
        let key = c.name.split_once('/').map(|(_, k)| k.to_string()).unwrap_or_default();
        grouped.entry(key).or_default().push(c);
    }
    for (k, r) in grouped {
        out.push(r.summarize(format!("{} random étale/{k}", cfg.etale_randoms)));
    }
    out
}

fn transformation(rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let cases: [(&str, Action, usize, Vec<(usize, usize)>); 3] = [
        ("ℤ/2 swap", Action::rotation(2), 4, vec![(2, 1)]),
        ("ℤ/3 rotation", Action::rotation(3), 9, vec![(3, 1)]),
        ("ℤ/2 trivial", Action::trivial(Group::cyclic(2), 1), 2, vec![(1, 2)]),
    ];
    for (name, action, dim, pattern) in cases {
        let t = build_preset(Preset::Transformation(action.clone())).expect("transformation preset");
        let mg = arc(MeasuredGroupoid::counting(name, t.clone()).expect("counting"));
        let rep = random_representation(mg.clone(), 1 + rng.random_range(0..2), rng);
        match transformation_theorem(&action, Some(&rep), 1e-10) {
            Ok(r) => out.push(r.summarize(format!("{name}/ι matches structure constants, covariant pair"))),
            Err(e) => out.push(Check::flag(format!("{name}/transformation theorem"), false).with_witness(e.to_string())),
        }
        let gcp = group_crossed_product(&action);
        out.push(Check::flag(format!("{name}/both algebras have dimension {dim}"), t.n_arrows() == dim && gcp.mul.len() == dim));
        let got = cstar_pattern(&t);
        out.push(
            Check::flag(format!("{name}/C* pattern {}", crate::crossed::describe_pattern(&pattern)), got == pattern)
                .witness_if_failed(|| format!("{got:?}")),
        );
        if action.points.len() == 1 {
            let gr = &action.group;
            let ok = (0..gr.order()).all(|a| (0..gr.order()).all(|b| gcp.mul[a][b] == Some(gr.mul[a][b])));
            out.push(Check::flag(format!("{name}/recovers the group algebra"), ok));
        }
    }
    out
}

fn degeneracy(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let mut spaces = vec![arc(fixtures::x2())];
    spaces.extend((0..cfg.trials.div_ceil(2)).map(|i| arc(random_space(&format!("space#{i}"), rng))));
    let mut d: f64 = 0.0;
    let mut count = 0;
    for mg in spaces {
        let mut reps = vec![regular_representation(mg.clone())];
        reps.extend((0..cfg.trials.div_ceil(2)).map(|t| random_representation(mg.clone(), n_coeff(t), rng)));
        for rep in reps {
            d = d.max(space_identity_defect(&rep).unwrap_or(f64::INFINITY));
            count += 1;
        }
    }
    out.push(Check::defect(format!("U = canonical identity ({count} representations)"), d, 1e-12));
    out
}

/// `N` in orthonormal coordinates as a module map.
fn from_normalized(source: &Correspondence, target: &Correspondence, n: &CMat) -> ModuleMap {
    let ws = source.weights();
    let wt = target.weights();
    let raw = CMat::from_fn(n.nrows(), n.ncols(), |i, j| n[(i, j)] * (ws[j] / wt[i]).sqrt());
    ModuleMap::from_dense(source.clone(), target.clone(), &raw).expect("grading preserving")
}

/// Random isometry `F₁ → F₂` preserving both gradings (needs
/// `dim F₂_{x,w} ≥ dim F₁_{x,w}`).
fn random_graded_isometry(source: &Correspondence, target: &Correspondence, rng: &mut Rng64) -> ModuleMap {
    let fs = fibres(source);
    let ft = fibres(target);
    let mut n = CMat::zeros(target.dim(), source.dim());
    for x in 0..source.n_left {
        for w in 0..source.n_right {
            let (s, t) = (&fs[x][w], &ft[x][w]);
            let u = haar_unitary(t.len(), rng);
            for (j, &bj) in s.iter().enumerate() {
                for (i, &bi) in t.iter().enumerate() {
                    n[(bi, bj)] = u[(i, j)];
                }
            }
        }
    }
    from_normalized(source, target, &n)
}

struct Triple {
    rep1: Representation,
    rep2: Representation,
    v: ModuleMap,
}

fn triples(mg: &Arc<MeasuredGroupoid>, t: usize, rng: &mut Rng64) -> Vec<Triple> {
    let k = n_coeff(t);
    let rep1 = random_representation(mg.clone(), k, rng);
    match t % 3 {
        0 => {
            let rep0 = random_representation(mg.clone(), k, rng);
            let rep2 = direct_sum(&rep1, &rep0).expect("same coefficients");
            let n1 = rep1.module.dim();
            let incl = CMat::from_fn(rep2.module.dim(), n1, |i, j| if i == j { cr(1.0) } else { cr(0.0) });
            let v = from_normalized(&rep1.module, &rep2.module, &incl);
            let w = random_graded_isometry(&rep1.module, &rep2.module, rng);
            vec![Triple { rep1: rep1.clone(), rep2: rep2.clone(), v }, Triple { rep1, rep2, v: w }]
        }
        1 => {
            let w = random_graded_isometry(&rep1.module, &rep1.module, rng);
            let rep2 = conjugate(&rep1, &w).expect("conjugation");
            let other = random_graded_isometry(&rep1.module, &rep1.module, rng);
            vec![Triple { rep1: rep1.clone(), rep2: rep2.clone(), v: w }, Triple { rep1, rep2, v: other }]
        }
        _ => {
            let rep2 = random_representation(mg.clone(), k, rng);
            let joint = direct_sum(&rep1, &rep2).expect("same coefficients");
            let v = random_graded_isometry(&rep1.module, &joint.module, rng);
            vec![Triple { rep1, rep2: joint, v }]
        }
    }
}

fn naturality(cfg: &SuiteConfig, rng: &mut Rng64) -> Report {
    let mut out = Report::new();
    let (mut pos, mut neg) = (0, 0);
    for mg in fixture_arcs() {
        let (r, p, n) = naturality_on(&mg, cfg.trials, 1e-9, rng);
        out.absorb(&mg.name, r);
        pos += p;
        neg += n;
    }
    out.push(Check::flag(format!("both directions exercised ({pos} intertwiners, {neg} non-intertwiners)"), pos > 0 && neg > 0));
    out
}

/// The intertwiner if-and-only-if on random triples and induction against
/// integration; also returns how many triples were intertwiners and how
/// many were not.
pub fn naturality_on(mg: &Arc<MeasuredGroupoid>, trials: usize, tol: f64, rng: &mut Rng64) -> (Report, usize, usize) {
    let mut out = Report::new();
    let (mut pos, mut neg) = (0, 0);
    {
        let mut mismatch = None;
        for t in 0..trials {
            for tr in triples(mg, t, rng) {
                let rep_side = check_intertwiner(&tr.v, &tr.rep1, &tr.rep2, tol).passed();
                let (l1, l2) = (integrate_rep(&tr.rep1).expect("integrate"), integrate_rep(&tr.rep2).expect("integrate"));
                let d = conv_intertwining_defect(&tr.v, &l1, &l2) / op_scale(&l1).max(op_scale(&l2));
                let conv_side = d <= tol;
                if rep_side {
                    pos += 1;
                } else {
                    neg += 1;
                }
                if rep_side != conv_side {
                    mismatch
                        .get_or_insert(format!("trial {t}: representation side {rep_side}, integrated side {conv_side} (defect {d:e})"));
                }
            }
        }
        out.push(
            Check::flag("V intertwines U iff V intertwines L", mismatch.is_none())
                .witness_if_failed(|| mismatch.clone().unwrap_or_default()),
        );
        let mut d: f64 = 0.0;
        for t in 0..trials.div_ceil(4) {
            let rep = random_representation(mg.clone(), n_coeff(t), rng);
            let e = random_correspondence(rep.n_coeff(), 1 + rng.random_range(0..2), 2, rng);
            d = d.max(match (induce(&rep, &e), integrate_rep(&rep)) {
                (Ok(ind), Ok(l)) => match (integrate_rep(&ind), induce_conv(&l, &rep.module, &e)) {
                    (Ok(a), Ok(b)) => a.max_diff(&b) / op_scale(&a),
                    _ => f64::INFINITY,
                },
                _ => f64::INFINITY,
            });
        }
        out.push(Check::defect("induction commutes with integration", d, tol));
    }
    (out, pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = SuiteConfig::with_trials(3, 2);
        for r in run_suite(&cfg) {
            assert!(r.passed(), "{}\n{}", r.line(), r.report);
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SuiteConfig::with_trials(5, 1);
        let a = run_criterion(8, &cfg);
        let b = run_criterion(8, &cfg);
        assert_eq!(a.report, b.report);
    }
}
