//! Inverse semigroup actions, bisections, germ groupoids, crossed
//! products `S ⋉ C(X)`, covariant representations, and transformation
//! groupoids `Γ ⋉ X`.
//!
//! An inverse semigroup is kept abstractly (multiplication and inverse
//! tables) together with its action `ϑ` by partial bijections of a finite
//! set `X`. For `S ⊆ Bis(G)` the elements also remember their arrow sets:
//! distinct bisections can induce the same partial bijection of `G⁰`
//! (the two arrows of `ℤ/2` both act trivially on the single point).

use crate::convalg::{convolve, ConvElement};
use crate::fingroupoid::{build_preset, Action, FiniteGroupoid, MeasuredGroupoid, Preset, PresetError, StructuralError};
use crate::hilbmod::{BasisVector, Correspondence};
use crate::intdis::integrate_rep;
use crate::linalg::{cr, max_abs, max_abs_diff, orthonormal_columns, rank, unitarity_defect, CMat, C64};
use crate::report::{Check, Report};
use crate::reps::{blockwise, check_representation, fibres, from_cocycle, CocycleFamily, RepError, Representation};
use std::collections::HashMap;
use std::hash::Hash;
use std::sync::Arc;
use thiserror::Error;

pub const MAX_BISECTION_ARROWS: usize = 16;
pub const MAX_SEMIGROUP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrossedError {
    #[error("{what} has size {size}, above the guard {limit}")]
    Guard { what: &'static str, size: usize, limit: usize },
    #[error("point {0} lies in no domain D_e, so it carries no unit germ")]
    Uncovered(String),
    #[error("the Haar system is not the counting one (c ≢ 1); the étale correspondence needs c ≡ 1")]
    NotEtale,
    #[error("S is not wide in Bis(G): {0}")]
    NotWide(String),
    #[error("semigroup elements are not bisections of a groupoid")]
    NotBisections,
    #[error("{0}")]
    Shape(String),
    #[error("generator {index}: {reason}")]
    Generator { index: usize, reason: String },
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error("{0}")]
    Invalid(String),
}

/// A partial bijection of `{0, …, n-1}`; `map[x] = None` off the domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialBijection {
    pub map: Vec<Option<usize>>,
}

impl PartialBijection {
    pub fn new(map: Vec<Option<usize>>) -> Result<Self, CrossedError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &y in map.iter().flatten() {
            if y >= n || seen[y] {
                return Err(CrossedError::Invalid(format!("not injective or out of range at {y}")));
            }
            seen[y] = true;
        }
        Ok(PartialBijection { map })
    }

    pub fn identity_on(n: usize, dom: &[usize]) -> Self {
        let mut map = vec![None; n];
        for &x in dom {
            map[x] = Some(x);
        }
        PartialBijection { map }
    }

    pub fn carrier(&self) -> usize {
        self.map.len()
    }

    pub fn dom(&self) -> Vec<usize> {
        (0..self.map.len()).filter(|&x| self.map[x].is_some()).collect()
    }

    pub fn img(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.map.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn apply(&self, x: usize) -> Option<usize> {
        self.map[x]
    }

    /// `self ∘ other`, defined on `other⁻¹(dom self ∩ img other)`.
    pub fn compose(&self, other: &PartialBijection) -> PartialBijection {
        PartialBijection { map: other.map.iter().map(|y| y.and_then(|y| self.map[y])).collect() }
    }

    pub fn inverse(&self) -> PartialBijection {
        let mut map = vec![None; self.map.len()];
        for (x, y) in self.map.iter().enumerate() {
            if let Some(y) = y {
                map[*y] = Some(x);
            }
        }
        PartialBijection { map }
    }

    pub fn is_idempotent(&self) -> bool {
        self.map.iter().enumerate().all(|(x, y)| y.is_none_or(|y| y == x))
    }

    /// `self` is the restriction of `other` to `dom(self)`.
    pub fn restricts(&self, other: &PartialBijection) -> bool {
        self.map.iter().zip(&other.map).all(|(a, b)| a.is_none() || a == b)
    }
}

/// Finite inverse semigroup with an action on `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseSemigroup {
    pub point_ids: Vec<String>,
    pub labels: Vec<String>,
    pub mul: Vec<Vec<usize>>,
    pub inv: Vec<usize>,
    pub theta: Vec<PartialBijection>,
    /// Arrow bitmasks when `S ⊆ Bis(G)`.
    pub bisections: Option<Vec<u64>>,
}

/// Closure of `gens` under a binary product and an involution.
fn close<T: Clone + Eq + Hash>(
    gens: Vec<T>,
    mul: impl Fn(&T, &T) -> T,
    inv: impl Fn(&T) -> T,
) -> Result<(Vec<T>, Vec<Vec<usize>>, Vec<usize>), CrossedError> {
    let mut elems: Vec<T> = Vec::new();
    let mut index: HashMap<T, usize> = HashMap::new();
    let push = |t: T, elems: &mut Vec<T>, index: &mut HashMap<T, usize>| -> Result<usize, CrossedError> {
        if let Some(&i) = index.get(&t) {
            return Ok(i);
        }
        if elems.len() >= MAX_SEMIGROUP {
            return Err(CrossedError::Guard { what: "inverse semigroup", size: elems.len() + 1, limit: MAX_SEMIGROUP });
        }
        index.insert(t.clone(), elems.len());
        elems.push(t);
        Ok(elems.len() - 1)
    };
    for g in gens {
        let gi = inv(&g);
        push(g, &mut elems, &mut index)?;
        push(gi, &mut elems, &mut index)?;
    }
    let mut done = 0;
    while done < elems.len() {
        let n = elems.len();
        for i in 0..n {
            for j in 0..n {
                if i < done && j < done {
                    continue;
                }
                let p = mul(&elems[i], &elems[j]);
                push(p, &mut elems, &mut index)?;
            }
        }
        done = n;
    }
    let n = elems.len();
    let table = (0..n).map(|i| (0..n).map(|j| index[&mul(&elems[i], &elems[j])]).collect()).collect();
    let invs = (0..n).map(|i| index[&inv(&elems[i])]).collect();
    Ok((elems, table, invs))
}

fn pb_label(point_ids: &[String], p: &PartialBijection) -> String {
    let parts: Vec<String> =
        p.map.iter().enumerate().filter_map(|(x, y)| y.map(|y| format!("{}→{}", point_ids[x], point_ids[y]))).collect();
    if parts.is_empty() {
        "∅".into()
    } else {
        parts.join(",")
    }
}

fn mask_label(g: &FiniteGroupoid, m: u64) -> String {
    let ids: Vec<&str> = (0..g.n_arrows()).filter(|&k| m >> k & 1 == 1).map(|k| g.arrow_ids[k].as_str()).collect();
    if ids.is_empty() {
        "∅".into()
    } else {
        format!("{{{}}}", ids.join(","))
    }
}

fn mask_product(g: &FiniteGroupoid, a: u64, b: u64) -> u64 {
    let mut out = 0u64;
    for x in 0..g.n_arrows() {
        if a >> x & 1 == 0 {
            continue;
        }
        for y in 0..g.n_arrows() {
            if b >> y & 1 == 1 {
                if let Some(xy) = g.compose(x, y) {
                    out |= 1 << xy;
                }
            }
        }
    }
    out
}

fn mask_inverse(g: &FiniteGroupoid, a: u64) -> u64 {
    (0..g.n_arrows()).filter(|&k| a >> k & 1 == 1).fold(0, |m, k| m | 1 << g.inv[k])
}

/// `ϑ_a = r_a ∘ s_a⁻¹: s(a) → r(a)`.
pub fn bisection_action(g: &FiniteGroupoid, a: u64) -> PartialBijection {
    let mut map = vec![None; g.n_objects()];
    for k in 0..g.n_arrows() {
        if a >> k & 1 == 1 {
            map[g.src[k]] = Some(g.rng[k]);
        }
    }
    PartialBijection { map }
}

pub fn is_bisection(g: &FiniteGroupoid, a: u64) -> bool {
    let mut s = vec![false; g.n_objects()];
    let mut r = vec![false; g.n_objects()];
    for k in 0..g.n_arrows() {
        if a >> k & 1 == 1 {
            if s[g.src[k]] || r[g.rng[k]] {
                return false;
            }
            s[g.src[k]] = true;
            r[g.rng[k]] = true;
        }
    }
    true
}

/// Every subset of `G¹` on which `s` and `r` are injective, ordered by
/// size, then by bitmask.
pub fn all_bisections(g: &FiniteGroupoid) -> Result<Vec<u64>, CrossedError> {
    let n1 = g.n_arrows();
    if n1 > MAX_BISECTION_ARROWS {
        return Err(CrossedError::Guard { what: "arrow set for bisection enumeration", size: n1, limit: MAX_BISECTION_ARROWS });
    }
    let mut out: Vec<u64> = (0..1u64 << n1).filter(|&m| is_bisection(g, m)).collect();
    out.sort_by_key(|m| (m.count_ones(), *m));
    Ok(out)
}

impl InverseSemigroup {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.point_ids.len()
    }

    /// The inverse subsemigroup of `Bis(G)` generated by `gens`.
    pub fn from_bisections(g: &FiniteGroupoid, gens: Vec<u64>) -> Result<Self, CrossedError> {
        if g.n_arrows() > 64 {
            return Err(CrossedError::Guard { what: "arrow set for bisection masks", size: g.n_arrows(), limit: 64 });
        }
        for (index, &m) in gens.iter().enumerate() {
            if !is_bisection(g, m) {
                return Err(CrossedError::Generator { index, reason: format!("{} is not a bisection", mask_label(g, m)) });
            }
        }
        let (elems, mul, inv) = close(gens, |a, b| mask_product(g, *a, *b), |a| mask_inverse(g, *a))?;
        Ok(InverseSemigroup {
            point_ids: g.object_ids.clone(),
            labels: elems.iter().map(|&m| mask_label(g, m)).collect(),
            mul,
            inv,
            theta: elems.iter().map(|&m| bisection_action(g, m)).collect(),
            bisections: Some(elems),
        })
    }

    /// `Bis(G)`.
    pub fn all_bisections(g: &FiniteGroupoid) -> Result<Self, CrossedError> {
        Self::from_bisections(g, all_bisections(g)?)
    }

    /// The inverse semigroup of partial bijections generated by `gens`.
    pub fn from_partial_bijections(point_ids: Vec<String>, gens: Vec<PartialBijection>) -> Result<Self, CrossedError> {
        for (index, p) in gens.iter().enumerate() {
            if p.carrier() != point_ids.len() {
                return Err(CrossedError::Generator { index, reason: format!("carrier size {} ≠ {}", p.carrier(), point_ids.len()) });
            }
        }
        let (elems, mul, inv) = close(gens, |a, b| a.compose(b), |a| a.inverse())?;
        Ok(InverseSemigroup {
            labels: elems.iter().map(|p| pb_label(&point_ids, p)).collect(),
            point_ids,
            mul,
            inv,
            theta: elems,
            bisections: None,
        })
    }

    pub fn is_idempotent(&self, a: usize) -> bool {
        self.mul[a][a] == a
    }

    pub fn idempotents(&self) -> Vec<usize> {
        (0..self.len()).filter(|&a| self.is_idempotent(a)).collect()
    }

    /// `a ≤ b` iff `a = b·a*a`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.mul[b][self.mul[self.inv[a]][a]] == a
    }

    /// `D_{a*a}` as a membership table.
    pub fn source_domain(&self, a: usize) -> Vec<bool> {
        self.theta[a].map.iter().map(|y| y.is_some()).collect()
    }

    /// `D_{aa*}` as a membership table.
    pub fn range_domain(&self, a: usize) -> Vec<bool> {
        let mut out = vec![false; self.n_points()];
        for &y in self.theta[a].map.iter().flatten() {
            out[y] = true;
        }
        out
    }

    /// Inverse semigroup axioms and the action axioms, by enumeration.
    pub fn check(&self) -> Report {
        let n = self.len();
        let mut out = Report::new();
        let mut bad = None;
        'assoc: for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.mul[self.mul[a][b]][c] != self.mul[a][self.mul[b][c]] {
                        bad = Some(format!("({}, {}, {})", self.labels[a], self.labels[b], self.labels[c]));
                        break 'assoc;
                    }
                }
            }
        }
        out.push(Check::flag("associativity", bad.is_none()).witness_if_failed(|| bad.clone().unwrap_or_default()));
        let w = (0..n).find(|&a| self.mul[self.mul[a][self.inv[a]]][a] != a || self.inv[self.inv[a]] != a);
        out.push(Check::flag("a a* a = a, (a*)* = a", w.is_none()).witness_if_failed(|| self.labels[w.unwrap_or(0)].clone()));
        let idem = self.idempotents();
        let w = idem.iter().flat_map(|&e| idem.iter().map(move |&f| (e, f))).find(|&(e, f)| self.mul[e][f] != self.mul[f][e]);
        out.push(Check::flag("idempotents commute", w.is_none()).witness_if_failed(|| {
            let (e, f) = w.unwrap_or((0, 0));
            format!("({}, {})", self.labels[e], self.labels[f])
        }));
        let w = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .find(|&(a, b)| self.theta[self.mul[a][b]] != self.theta[a].compose(&self.theta[b]));
        out.push(Check::flag("ϑ_ab = ϑ_a ∘ ϑ_b", w.is_none()).witness_if_failed(|| {
            let (a, b) = w.unwrap_or((0, 0));
            format!("({}, {})", self.labels[a], self.labels[b])
        }));
        let w = (0..n).find(|&a| self.theta[self.inv[a]] != self.theta[a].inverse());
        out.push(Check::flag("ϑ_a* = ϑ_a⁻¹", w.is_none()).witness_if_failed(|| self.labels[w.unwrap_or(0)].clone()));
        let w = idem.iter().find(|&&e| !self.theta[e].is_idempotent());
        out.push(
            Check::flag("ϑ_e is an identity map for e ∈ E(S)", w.is_none()).witness_if_failed(|| self.labels[*w.unwrap_or(&0)].clone()),
        );
        out
    }
}

/// `⋃_{t∈S} t = G¹` and `⋃_{v ≤ u,t} v = u ∩ t` for all `u, t ∈ S`.
pub fn is_wide(s: &InverseSemigroup, g: &FiniteGroupoid) -> Result<Report, CrossedError> {
    let masks = s.bisections.as_ref().ok_or(CrossedError::NotBisections)?;
    let all: u64 = if g.n_arrows() == 64 { u64::MAX } else { (1u64 << g.n_arrows()) - 1 };
    let mut out = Report::new();
    let union = masks.iter().fold(0, |m, &t| m | t);
    out.push(Check::flag("⋃ S = G¹", union == all).witness_if_failed(|| format!("missing {}", mask_label(g, all & !union))));
    let n = s.len();
    let mut bad = None;
    'outer: for u in 0..n {
        for t in 0..n {
            let below = (0..n).filter(|&v| s.leq(v, u) && s.leq(v, t)).fold(0, |m, v| m | masks[v]);
            if below != masks[u] & masks[t] {
                bad = Some((u, t));
                break 'outer;
            }
        }
    }
    out.push(Check::flag("⋃_{v ≤ u,t} v = u ∩ t", bad.is_none()).witness_if_failed(|| {
        let (u, t) = bad.unwrap_or((0, 0));
        format!("u = {}, t = {}", s.labels[u], s.labels[t])
    }));
    Ok(out)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Equivalence classes of pairs `(a, x)` from a list, with
/// representatives in first-occurrence order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairClasses {
    pub reps: Vec<(usize, usize)>,
    pub class_of: HashMap<(usize, usize), usize>,
}

fn classes(pairs: Vec<(usize, usize)>, mut same: impl FnMut(&(usize, usize), &(usize, usize)) -> bool) -> PairClasses {
    let n = pairs.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if pairs[i].1 == pairs[j].1 && same(&pairs[i], &pairs[j]) {
                uf.union(i, j);
            }
        }
    }
    let mut reps = Vec::new();
    let mut root_class = HashMap::new();
    let mut class_of = HashMap::new();
    for i in 0..n {
        let r = uf.find(i);
        let k = *root_class.entry(r).or_insert_with(|| {
            reps.push(pairs[r]);
            reps.len() - 1
        });
        class_of.insert(pairs[i], k);
    }
    PairClasses { reps, class_of }
}

/// Germs `[a, y]` with `y ∈ D_{a*a}`; `(a,y) ~ (b,y)` iff some `c ≤ a, b`
/// has `y ∈ D_{c*c}`.
pub fn germs(s: &InverseSemigroup) -> PairClasses {
    let pairs: Vec<(usize, usize)> = (0..s.len()).flat_map(|a| s.theta[a].dom().into_iter().map(move |y| (a, y))).collect();
    classes(pairs, |&(a, y), &(b, _)| (0..s.len()).any(|c| s.leq(c, a) && s.leq(c, b) && s.theta[c].map[y].is_some()))
}

/// The transformation groupoid `S ⋉ X` of germs: `s[a,y] = y`,
/// `r[a,y] = ϑ_a(y)`, `[a, ϑ_b(z)]·[b, z] = [ab, z]`.
pub fn germ_groupoid(s: &InverseSemigroup) -> Result<(FiniteGroupoid, PairClasses), CrossedError> {
    let gm = germs(s);
    let n1 = gm.reps.len();
    let n0 = s.n_points();
    let src: Vec<usize> = gm.reps.iter().map(|&(_, y)| y).collect();
    let rng: Vec<usize> = gm.reps.iter().map(|&(a, y)| s.theta[a].map[y].expect("y in domain")).collect();
    let inv = gm.reps.iter().map(|&(a, y)| gm.class_of[&(s.inv[a], s.theta[a].map[y].unwrap())]).collect();
    let mut unit = Vec::with_capacity(n0);
    for x in 0..n0 {
        let e = s
            .idempotents()
            .into_iter()
            .find(|&e| s.theta[e].map[x].is_some())
            .ok_or_else(|| CrossedError::Uncovered(s.point_ids[x].clone()))?;
        unit.push(gm.class_of[&(e, x)]);
    }
    let mut comp = vec![vec![None; n1]; n1];
    for (i, &(a, y)) in gm.reps.iter().enumerate() {
        for (j, &(b, z)) in gm.reps.iter().enumerate() {
            if rng[j] == y {
                debug_assert_eq!(s.theta[b].map[z], Some(y));
                comp[i][j] = Some(gm.class_of[&(s.mul[a][b], z)]);
            }
        }
    }
    let arrow_ids = gm.reps.iter().map(|&(a, y)| format!("[{}, {}]", s.labels[a], s.point_ids[y])).collect();
    let g = FiniteGroupoid::from_tables(s.point_ids.clone(), arrow_ids, src, rng, inv, unit, comp)?;
    Ok((g, gm))
}

/// An inverse semigroup acting on `G⁰` together with the identification
/// of germs `(a, y)` with arrows of `G` (counting Haar system).
#[derive(Debug, Clone)]
pub struct EtaleFrame {
    pub s: InverseSemigroup,
    pub mg: Arc<MeasuredGroupoid>,
    /// `germ_arrow[a][y]`: the arrow of `G` for `y ∈ D_{a*a}`.
    pub germ_arrow: Vec<Vec<Option<usize>>>,
}

impl EtaleFrame {
    /// `S ⊆ Bis(G)`: `(a, y) ↦` the arrow of `a` with source `y`. Checks
    /// wideness and that the germ groupoid maps isomorphically onto `G`.
    pub fn from_bisections(mg: Arc<MeasuredGroupoid>, s: InverseSemigroup) -> Result<(Self, Report), CrossedError> {
        if !mg.is_counting() {
            return Err(CrossedError::NotEtale);
        }
        let masks = s.bisections.clone().ok_or(CrossedError::NotBisections)?;
        let g = &mg.g;
        let germ_arrow: Vec<Vec<Option<usize>>> = masks
            .iter()
            .map(|&m| (0..g.n_objects()).map(|y| (0..g.n_arrows()).find(|&k| m >> k & 1 == 1 && g.src[k] == y)).collect())
            .collect();
        let mut report = is_wide(&s, g)?;
        report.absorb("S", s.check());
        let frame = EtaleFrame { s, mg, germ_arrow };
        report.absorb("", frame.check_germ_iso());
        Ok((frame, report))
    }

    /// `G = S ⋉ X`, germs as arrows.
    pub fn from_semigroup(name: &str, s: InverseSemigroup) -> Result<Self, CrossedError> {
        let (g, gm) = germ_groupoid(&s)?;
        let germ_arrow = (0..s.len()).map(|a| (0..s.n_points()).map(|y| gm.class_of.get(&(a, y)).copied()).collect()).collect();
        let mg = MeasuredGroupoid::counting(name, g).map_err(|e| CrossedError::Invalid(e.to_string()))?;
        Ok(EtaleFrame { s, mg: Arc::new(mg), germ_arrow })
    }

    /// Germ groupoid of `S` → `G`, `[a, y] ↦ germ_arrow[a][y]`: well defined,
    /// bijective, and compatible with source, range and composition.
    pub fn check_germ_iso(&self) -> Report {
        let mut out = Report::new();
        let s = &self.s;
        let g = &self.mg.g;
        match germ_groupoid(s) {
            Err(e) => out.push(Check::flag("germ groupoid S ⋉ X ≅ G", false).with_witness(e.to_string())),
            Ok((h, gm)) => {
                let mut map = vec![None; gm.reps.len()];
                let mut consistent = true;
                for (&(a, y), &k) in &gm.class_of {
                    let t = self.germ_arrow[a][y];
                    match map[k] {
                        None => map[k] = t,
                        Some(prev) => consistent &= Some(prev) == t,
                    }
                }
                out.push(Check::flag("germ map well defined", consistent));
                let map: Vec<usize> = map.into_iter().map(|t| t.unwrap_or(usize::MAX)).collect();
                let mut hit = vec![false; g.n_arrows()];
                for &t in &map {
                    if t < hit.len() {
                        hit[t] = true;
                    }
                }
                let bij = map.len() == g.n_arrows() && hit.iter().all(|&b| b);
                out.push(
                    Check::flag("germ map bijective", bij).witness_if_failed(|| format!("{} germs, {} arrows", map.len(), g.n_arrows())),
                );
                if bij {
                    let hom = (0..h.n_arrows()).all(|i| {
                        g.src[map[i]] == h.src[i]
                            && g.rng[map[i]] == h.rng[i]
                            && (0..h.n_arrows()).all(|j| h.comp[i][j].map(|k| map[k]) == g.comp[map[i]][map[j]])
                    });
                    out.push(Check::flag("germ map is a groupoid isomorphism", hom));
                }
            }
        }
        out
    }
}

/// `S ⋉ C(X)` as the quotient of `⊕_a C(D_{aa*})` by `1_x δ_a = 1_x δ_b`
/// for `a ≤ b`, `x ∈ D_{aa*}`. Basis element `k` is the class of
/// `1_x δ_a` with `(a, x) = classes.reps[k]`; every product of basis
/// elements is zero or a basis element.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossedProduct {
    pub classes: PairClasses,
    pub mul: Vec<Vec<Option<usize>>>,
    pub star: Vec<usize>,
    pub report: Report,
}

impl CrossedProduct {
    pub fn dim(&self) -> usize {
        self.classes.reps.len()
    }

    /// Structure constants as coefficient vectors.
    pub fn product(&self, u: &[C64], v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if let Some(k) = self.mul[i][j] {
                    out[k] += u[i] * v[j];
                }
            }
        }
        out
    }

    pub fn is_commutative(&self) -> bool {
        (0..self.dim()).all(|i| (0..self.dim()).all(|j| self.mul[i][j] == self.mul[j][i]))
    }
}

/// `(1_x δ_a)(1_y δ_b) = [y = ϑ_{a*}(x)]·1_x δ_{ab}` and
/// `(1_x δ_a)* = 1_{ϑ_{a*}(x)} δ_{a*}`.
pub fn crossed_product(s: &InverseSemigroup) -> Result<CrossedProduct, CrossedError> {
    if s.len() > MAX_SEMIGROUP {
        return Err(CrossedError::Guard { what: "inverse semigroup", size: s.len(), limit: MAX_SEMIGROUP });
    }
    let pairs: Vec<(usize, usize)> = (0..s.len()).flat_map(|a| s.theta[a].img().into_iter().map(move |x| (a, x))).collect();
    let cl = classes(pairs.clone(), |&(a, _), &(b, _)| s.leq(a, b) || s.leq(b, a));
    let dim = cl.reps.len();
    let ainv = |a: usize, x: usize| s.theta[s.inv[a]].map[x];
    let raw_mul = |(a, x): (usize, usize), (b, y): (usize, usize)| -> Option<usize> {
        (ainv(a, x) == Some(y)).then(|| cl.class_of[&(s.mul[a][b], x)])
    };
    let raw_star = |(a, x): (usize, usize)| cl.class_of[&(s.inv[a], ainv(a, x).expect("x in D_aa*"))];
    let mut mul = vec![vec![None; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            mul[i][j] = raw_mul(cl.reps[i], cl.reps[j]);
        }
    }
    let star: Vec<usize> = cl.reps.iter().map(|&p| raw_star(p)).collect();
    let mut report = Report::new();
    // Products and stars do not depend on the representatives.
    let mut well = true;
    for &p in &pairs {
        let i = cl.class_of[&p];
        well &= raw_star(p) == star[i];
        for &q in &pairs {
            let j = cl.class_of[&q];
            well &= raw_mul(p, q) == mul[i][j];
        }
    }
    report.push(Check::flag("relations compatible with the quotient", well));
    let assoc =
        (0..dim).all(|i| (0..dim).all(|j| (0..dim).all(|k| mul[i][j].and_then(|ij| mul[ij][k]) == mul[j][k].and_then(|jk| mul[i][jk]))));
    report.push(Check::flag("associativity", assoc));
    let inv = (0..dim).all(|i| star[star[i]] == i);
    report.push(Check::flag("(x*)* = x", inv));
    let anti = (0..dim).all(|i| (0..dim).all(|j| mul[i][j].map(|k| star[k]) == mul[star[j]][star[i]]));
    report.push(Check::flag("(xy)* = y*x*", anti));
    Ok(CrossedProduct { classes: cl, mul, star, report })
}

/// `Φ(1_x δ_a) = δ_g` with `g` the germ of `a` at `ϑ_{a*}(x)`: a
/// `*`-homomorphism onto the convolution algebra of `G`, bijective.
pub fn canonical_iso_cstar(frame: &EtaleFrame, cp: &CrossedProduct) -> Report {
    let s = &frame.s;
    let mg = &frame.mg;
    let n1 = mg.n_arrows();
    let mut out = Report::new();
    out.push(Check::flag(format!("dim S⋉C(X) = {}, |G¹| = {}", cp.dim(), n1), cp.dim() == n1));
    let arrow = |(a, x): (usize, usize)| s.theta[s.inv[a]].map[x].and_then(|y| frame.germ_arrow[a][y]);
    let mut phi: Vec<Option<usize>> = cp.classes.reps.iter().map(|&p| arrow(p)).collect();
    let mut well = phi.iter().all(|t| t.is_some());
    for (&p, &k) in &cp.classes.class_of {
        well &= arrow(p) == phi[k];
    }
    out.push(Check::flag("Φ well defined on classes", well));
    if !well {
        return out;
    }
    let phi: Vec<usize> = phi.iter_mut().map(|t| t.unwrap()).collect();
    let mut hit = vec![false; n1];
    for &g in &phi {
        hit[g] = true;
    }
    out.push(Check::flag("Φ injective", phi.len() == hit.iter().filter(|&&b| b).count()));
    out.push(Check::flag("Φ surjective", hit.iter().all(|&b| b)));
    let delta = |k: usize| ConvElement::delta(n1, phi[k]);
    let mut dm: f64 = 0.0;
    for i in 0..cp.dim() {
        for j in 0..cp.dim() {
            let lhs = match cp.mul[i][j] {
                Some(k) => delta(k),
                None => ConvElement::zero(n1),
            };
            dm = dm.max(lhs.max_diff(&convolve(mg, &delta(i), &delta(j))));
        }
    }
    out.push(Check::defect("Φ(xy) = Φ(x)*Φ(y)", dm, 0.0));
    let ds = (0..cp.dim()).all(|i| phi[cp.star[i]] == mg.g.inv[phi[i]]);
    out.push(Check::flag("Φ(x*) = Φ(x)*", ds));
    out
}

/// Coordinates (module basis indices) whose object lies in `set`.
fn coords(module: &Correspondence, set: &[bool]) -> Vec<usize> {
    (0..module.dim()).filter(|&i| set[module.basis[i].left]).collect()
}

fn embed(n: usize, rows: &[usize], cols: &[usize], m: &CMat) -> CMat {
    let mut out = CMat::zeros(n, n);
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out[(r, c)] = m[(i, j)];
        }
    }
    out
}

fn restrict(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn projection(module: &Correspondence, set: &[bool]) -> CMat {
    let n = module.dim();
    let mut p = CMat::zeros(n, n);
    for i in coords(module, set) {
        p[(i, i)] = cr(1.0);
    }
    p
}

fn point_set(n: usize, x: usize) -> Vec<bool> {
    (0..n).map(|y| y == x).collect()
}

/// `φ` is the `X`-grading of `module` (orthonormal coordinates);
/// `u[a]: F_{a*a} → F_{aa*}` with rows the coordinates over `D_{aa*}` and
/// columns those over `D_{a*a}`, in module order.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantRep {
    pub module: Correspondence,
    pub u: Vec<CMat>,
}

impl CovariantRep {
    /// `U_a` extended by zero to a partial isometry of `F`.
    pub fn extended(&self, s: &InverseSemigroup, a: usize) -> CMat {
        let rows = coords(&self.module, &s.range_domain(a));
        let cols = coords(&self.module, &s.source_domain(a));
        embed(self.module.dim(), &rows, &cols, &self.u[a])
    }
}

/// Shapes, unitarity and the covariance axioms (1)–(4).
pub fn check_covariant(cov: &CovariantRep, s: &InverseSemigroup, tol: f64) -> Report {
    let mut out = Report::new();
    let m = &cov.module;
    let n = m.dim();
    let shapes = cov.u.len() == s.len()
        && m.n_left == s.n_points()
        && (0..s.len())
            .all(|a| cov.u[a].nrows() == coords(m, &s.range_domain(a)).len() && cov.u[a].ncols() == coords(m, &s.source_domain(a)).len());
    out.push(Check::flag("shapes", shapes));
    if !shapes {
        return out;
    }
    let ext: Vec<CMat> = (0..s.len()).map(|a| cov.extended(s, a)).collect();
    let du = cov.u.iter().filter(|u| u.nrows() > 0 || u.ncols() > 0).map(unitarity_defect).fold(0.0, f64::max);
    out.push(Check::defect("U_a unitary", du, tol));
    let mut d1: f64 = 0.0;
    for a in 0..s.len() {
        let pa = projection(m, &s.source_domain(a));
        for b in 0..s.len() {
            if s.leq(a, b) {
                d1 = d1.max(max_abs_diff(&(&ext[b] * &pa), &ext[a]));
            }
        }
    }
    out.push(Check::defect("(1) U_b restricts to U_a for a ≤ b", d1, tol));
    let d2 = (0..s.len()).map(|a| max_abs_diff(&ext[a].adjoint(), &ext[s.inv[a]])).fold(0.0, f64::max);
    out.push(Check::defect("(2) U_a* = U_a*", d2, tol));
    let mut d3: f64 = 0.0;
    for a in 0..s.len() {
        for b in 0..s.len() {
            if s.mul[s.inv[a]][a] == s.mul[b][s.inv[b]] {
                d3 = d3.max(max_abs_diff(&(&ext[a] * &ext[b]), &ext[s.mul[a][b]]));
            }
        }
    }
    out.push(Check::defect("(3) U_a U_b = U_ab when a*a = bb*", d3, tol));
    let mut d4: f64 = 0.0;
    for a in 0..s.len() {
        for y in s.theta[a].dom() {
            let py = projection(m, &point_set(s.n_points(), y));
            let px = projection(m, &point_set(s.n_points(), s.theta[a].map[y].unwrap()));
            d4 = d4.max(max_abs_diff(&(&ext[a] * py * ext[a].adjoint()), &px));
        }
    }
    out.push(Check::defect("(4) U_a φ(f) U_a* = φ(f∘ϑ_a*)", d4, tol));
    let mut dc: f64 = 0.0;
    for u in &ext {
        for i in 0..n {
            for j in 0..n {
                if m.basis[i].right != m.basis[j].right {
                    dc = dc.max(u[(i, j)].norm());
                }
            }
        }
    }
    out.push(Check::defect("U_a C(W)-linear", dc, tol));
    out
}

/// Each `U_a` extended by zero; verifies `U_a U_b = U_ab` for all `a, b`,
/// `U_a* = U_a*`, `U_e` = projection onto `F_e` and
/// `F_e ∩ F_f = F_ef`.
pub fn partial_isometry_form(cov: &CovariantRep, s: &InverseSemigroup, tol: f64) -> (Vec<CMat>, Report) {
    let ext: Vec<CMat> = (0..s.len()).map(|a| cov.extended(s, a)).collect();
    let mut out = Report::new();
    let mut dm: f64 = 0.0;
    let mut wit = None;
    for a in 0..s.len() {
        for b in 0..s.len() {
            let d = max_abs_diff(&(&ext[a] * &ext[b]), &ext[s.mul[a][b]]);
            if d > dm {
                dm = d;
                wit = Some((a, b));
            }
        }
    }
    out.push(Check::defect("U_a U_b = U_ab for all a, b", dm, tol).witness_if_failed(|| {
        let (a, b) = wit.unwrap_or((0, 0));
        format!("({}, {})", s.labels[a], s.labels[b])
    }));
    let ds = (0..s.len()).map(|a| max_abs_diff(&ext[a].adjoint(), &ext[s.inv[a]])).fold(0.0, f64::max);
    out.push(Check::defect("U_a* = U_a*", ds, tol));
    let idem = s.idempotents();
    let de = idem.iter().map(|&e| max_abs_diff(&ext[e], &projection(&cov.module, &s.source_domain(e)))).fold(0.0, f64::max);
    out.push(Check::defect("U_e projects onto F_e", de, tol));
    let mut meet = true;
    for &e in &idem {
        for &f in &idem {
            let de = s.source_domain(e);
            let df = s.source_domain(f);
            let both: Vec<bool> = de.iter().zip(&df).map(|(a, b)| *a && *b).collect();
            meet &= both == s.source_domain(s.mul[e][f]);
        }
    }
    out.push(Check::flag("F_e ∩ F_f = F_ef", meet));
    (ext, out)
}

/// Inverse of [`partial_isometry_form`]: restrict to `F_{a*a} → F_{aa*}`.
pub fn from_partial_isometries(module: Correspondence, s: &InverseSemigroup, ops: &[CMat]) -> CovariantRep {
    let u = (0..s.len())
        .map(|a| {
            let rows = coords(&module, &s.range_domain(a));
            let cols = coords(&module, &s.source_domain(a));
            restrict(&ops[a], &rows, &cols)
        })
        .collect();
    CovariantRep { module, u }
}

/// A representation of `S ⋉ C(X)` on a carrier with `C(W)`-labels, on
/// the basis of classes.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossedRep {
    pub n_coeff: usize,
    pub coeff: Vec<usize>,
    pub ops: Vec<CMat>,
}

impl CrossedRep {
    pub fn dim(&self) -> usize {
        self.coeff.len()
    }

    pub fn max_diff(&self, other: &CrossedRep) -> f64 {
        self.ops.iter().zip(&other.ops).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max)
    }
}

/// `ρ(1_x δ_a) = φ(1_x)U_a`, checked to be independent of the
/// representative `(a, x)`.
pub fn integrate_covariant(cov: &CovariantRep, s: &InverseSemigroup, cp: &CrossedProduct, tol: f64) -> (CrossedRep, Report) {
    let m = &cov.module;
    let ext: Vec<CMat> = (0..s.len()).map(|a| cov.extended(s, a)).collect();
    let op = |(a, x): (usize, usize)| projection(m, &point_set(s.n_points(), x)) * &ext[a];
    let ops: Vec<CMat> = cp.classes.reps.iter().map(|&p| op(p)).collect();
    let mut d: f64 = 0.0;
    for (&p, &k) in &cp.classes.class_of {
        d = d.max(max_abs_diff(&op(p), &ops[k]));
    }
    let mut out = Report::new();
    out.push(Check::defect("U⋉φ well defined on classes", d, tol));
    (CrossedRep { n_coeff: m.n_right, coeff: m.basis.iter().map(|b| b.right).collect(), ops }, out)
}

/// Multiplicativity and `*` on the class basis, nondegeneracy.
pub fn check_crossed_rep(rho: &CrossedRep, cp: &CrossedProduct, tol: f64) -> Report {
    let n = rho.dim();
    let mut out = Report::new();
    let mut dm: f64 = 0.0;
    for i in 0..cp.dim() {
        for j in 0..cp.dim() {
            let lhs = match cp.mul[i][j] {
                Some(k) => rho.ops[k].clone(),
                None => CMat::zeros(n, n),
            };
            dm = dm.max(max_abs_diff(&lhs, &(&rho.ops[i] * &rho.ops[j])));
        }
    }
    out.push(Check::defect("ρ(xy) = ρ(x)ρ(y)", dm, tol));
    let ds = (0..cp.dim()).map(|i| max_abs_diff(&rho.ops[cp.star[i]], &rho.ops[i].adjoint())).fold(0.0, f64::max);
    out.push(Check::defect("ρ(x*) = ρ(x)*", ds, tol));
    let cols: usize = rho.ops.iter().map(|m| m.ncols()).sum();
    let mut stacked = CMat::zeros(n, cols);
    let mut k = 0;
    for m in &rho.ops {
        stacked.view_mut((0, k), (n, m.ncols())).copy_from(m);
        k += m.ncols();
    }
    let rk = rank(&stacked, 1e-9);
    out.push(Check::flag("nondegenerate", rk == n).witness_if_failed(|| format!("rank {rk} < dim {n}")));
    out
}

/// `φ(1_x) = ρ(1_x δ_e)` for any idempotent `e` with `x ∈ D_e`, and
/// `U_a(ρ(1_y δ_{a*a})ξ) = ρ(1_{ϑ_a y} δ_a)ξ`. Returns the covariant
/// representation on a new orthonormal basis and the isometry `J` whose
/// columns are that basis in carrier coordinates.
pub fn rep_of_crossed_to_covariant(
    rho: &CrossedRep,
    s: &InverseSemigroup,
    cp: &CrossedProduct,
    tol: f64,
) -> Result<(CovariantRep, CMat), CrossedError> {
    let n = rho.dim();
    let nx = s.n_points();
    let mut proj = Vec::with_capacity(nx);
    for x in 0..nx {
        let e = s
            .idempotents()
            .into_iter()
            .find(|&e| s.theta[e].map[x].is_some())
            .ok_or_else(|| CrossedError::Uncovered(s.point_ids[x].clone()))?;
        proj.push(rho.ops[cp.classes.class_of[&(e, x)]].clone());
    }
    let sum = proj.iter().fold(CMat::zeros(n, n), |acc, p| acc + p);
    let dp = proj
        .iter()
        .map(|p| max_abs_diff(p, &p.adjoint()).max(max_abs_diff(&(p * p), p)))
        .fold(max_abs_diff(&sum, &CMat::identity(n, n)), f64::max);
    if dp > tol {
        return Err(CrossedError::Invalid(format!("φ(1_x) are not complementary projections (defect {dp:e})")));
    }
    let mut basis = Vec::new();
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
    for (x, p) in proj.iter().enumerate() {
        for w in 0..rho.n_coeff {
            let mut pw = p.clone();
            for j in 0..n {
                if rho.coeff[j] != w {
                    pw.column_mut(j).fill(C64::new(0.0, 0.0));
                }
            }
            let q = orthonormal_columns(&pw, 1e-8);
            for k in 0..q.ncols() {
                basis.push(BasisVector { left: x, right: w, weight: 1.0 });
                cols.push(q.column(k).into_owned());
            }
        }
    }
    if cols.len() != n {
        return Err(CrossedError::Invalid("grading does not split the carrier".into()));
    }
    let mut j = CMat::zeros(n, n);
    for (k, c) in cols.iter().enumerate() {
        j.set_column(k, c);
    }
    let module = Correspondence { n_left: nx, n_right: rho.n_coeff, basis };
    let u = (0..s.len())
        .map(|a| {
            let full = s.theta[a].img().into_iter().fold(CMat::zeros(n, n), |acc, x| acc + &rho.ops[cp.classes.class_of[&(a, x)]]);
            let local = j.adjoint() * full * &j;
            restrict(&local, &coords(&module, &s.range_domain(a)), &coords(&module, &s.source_domain(a)))
        })
        .collect();
    Ok((CovariantRep { module, u }, j))
}

/// `U_a := U|_a`: the blocks `U_g` for the arrows `g ∈ a`.
pub fn groupoid_rep_to_covariant(rep: &Representation, frame: &EtaleFrame) -> Result<CovariantRep, CrossedError> {
    if !rep.mg.is_counting() {
        return Err(CrossedError::NotEtale);
    }
    let s = &frame.s;
    let fam = blockwise(rep)?;
    let fib = fibres(&rep.module);
    let m = &rep.module;
    let g = &rep.mg.g;
    let u = (0..s.len())
        .map(|a| {
            let rows = coords(m, &s.range_domain(a));
            let cols = coords(m, &s.source_domain(a));
            let mut out = CMat::zeros(rows.len(), cols.len());
            for y in s.theta[a].dom() {
                let k = frame.germ_arrow[a][y].expect("germ has an arrow");
                for w in 0..m.n_right {
                    for (i, &bi) in fib[g.rng[k]][w].iter().enumerate() {
                        for (jj, &bj) in fib[y][w].iter().enumerate() {
                            let r = rows.iter().position(|&c| c == bi).unwrap();
                            let c = cols.iter().position(|&c| c == bj).unwrap();
                            out[(r, c)] = fam.blocks[k][w][(i, jj)];
                        }
                    }
                }
            }
            out
        })
        .collect();
    Ok(CovariantRep { module: m.clone(), u })
}

/// Reassembles `U_g` from any `a ∋ g`, checks that the choice does not
/// matter, and checks the cocycle of the result.
pub fn covariant_to_groupoid_rep(cov: &CovariantRep, frame: &EtaleFrame, tol: f64) -> Result<(Representation, Report), CrossedError> {
    let mg = frame.mg.clone();
    if !mg.is_counting() {
        return Err(CrossedError::NotEtale);
    }
    let s = &frame.s;
    let g = &mg.g;
    let m = &cov.module;
    let fib = fibres(m);
    let mut blocks: Vec<Option<Vec<CMat>>> = vec![None; g.n_arrows()];
    let mut dd: f64 = 0.0;
    for a in 0..s.len() {
        let rows = coords(m, &s.range_domain(a));
        let cols = coords(m, &s.source_domain(a));
        for y in s.theta[a].dom() {
            let k = frame.germ_arrow[a][y].ok_or_else(|| CrossedError::Invalid("germ without arrow".into()))?;
            let per_w: Vec<CMat> = (0..m.n_right)
                .map(|w| {
                    let ri: Vec<usize> = fib[g.rng[k]][w].iter().map(|b| rows.iter().position(|c| c == b).unwrap()).collect();
                    let ci: Vec<usize> = fib[y][w].iter().map(|b| cols.iter().position(|c| c == b).unwrap()).collect();
                    restrict(&cov.u[a], &ri, &ci)
                })
                .collect();
            match &blocks[k] {
                None => blocks[k] = Some(per_w),
                Some(prev) => {
                    for (p, q) in prev.iter().zip(&per_w) {
                        dd = dd.max(max_abs_diff(p, q));
                    }
                }
            }
        }
    }
    let blocks: Vec<Vec<CMat>> = blocks
        .into_iter()
        .enumerate()
        .map(|(k, b)| b.ok_or_else(|| CrossedError::NotWide(format!("arrow {} lies in no element of S", g.arrow_ids[k]))))
        .collect::<Result<_, _>>()?;
    let rep = from_cocycle(mg, m.clone(), &CocycleFamily { blocks })?;
    let mut report = Report::new();
    report.push(Check::defect("U_g independent of the bisection through g", dd, tol));
    report.absorb("", check_representation(&rep, tol));
    Ok((rep, report))
}

/// `ρ ∘ Φ⁻¹` compared with the integrated form: for each class `k`,
/// `ρ(e_k) = L(Φ(e_k))`.
pub fn compare_with_integrated(
    rep: &Representation,
    rho: &CrossedRep,
    frame: &EtaleFrame,
    cp: &CrossedProduct,
) -> Result<f64, CrossedError> {
    let l = integrate_rep(rep).map_err(|e| CrossedError::Invalid(e.to_string()))?;
    let s = &frame.s;
    let mut d: f64 = 0.0;
    for (k, &(a, x)) in cp.classes.reps.iter().enumerate() {
        let y = s.theta[s.inv[a]].map[x].expect("x in D_aa*");
        let g = frame.germ_arrow[a][y].expect("germ");
        d = d.max(max_abs_diff(&rho.ops[k], &l.ops[g]));
    }
    Ok(d)
}

/// Orbit sizes and isotropy orders: `C*(G) ≅ ⊕ M_n ⊗ C*(H)` for
/// transitive components with `n` objects and isotropy `H`.
pub fn cstar_pattern(g: &FiniteGroupoid) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = g.orbits().iter().map(|o| (o.len(), g.isotropy(o[0]).len())).collect();
    out.sort_unstable();
    out
}

pub fn describe_pattern(p: &[(usize, usize)]) -> String {
    p.iter()
        .map(|&(n, h)| match (n, h) {
            (1, 1) => "ℂ".to_string(),
            (n, 1) => format!("M{n}"),
            (1, h) => format!("C*(H{h})"),
            (n, h) => format!("M{n}⊗C*(H{h})"),
        })
        .collect::<Vec<_>>()
        .join(" ⊕ ")
}

/// `Γ ⋉ C(X)` with basis `1_x u_γ` (index `γ·|X| + x`):
/// `(1_x u_γ)(1_y u_δ) = [x = γy]·1_x u_{γδ}`, `(1_x u_γ)* = 1_{γ⁻¹x} u_{γ⁻¹}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCrossedProduct {
    pub n_group: usize,
    pub n_points: usize,
    pub mul: Vec<Vec<Option<usize>>>,
    pub star: Vec<usize>,
}

pub fn group_crossed_product(action: &Action) -> GroupCrossedProduct {
    let gr = &action.group;
    let (ng, np) = (gr.order(), action.points.len());
    let idx = |a: usize, x: usize| a * np + x;
    let n = ng * np;
    let mut mul = vec![vec![None; n]; n];
    let mut star = vec![0; n];
    for a in 0..ng {
        for x in 0..np {
            let ainv = gr.inv[a];
            star[idx(a, x)] = idx(ainv, action.act[ainv][x]);
            for b in 0..ng {
                for y in 0..np {
                    if x == action.act[a][y] {
                        mul[idx(a, x)][idx(b, y)] = Some(idx(gr.mul[a][b], x));
                    }
                }
            }
        }
    }
    GroupCrossedProduct { n_group: ng, n_points: np, mul, star }
}

/// The transformation groupoid `Γ ⋉ X` against `Γ ⋉ C(X)` through
/// `ι: (γ, x) ↦ (γ, γx)`, i.e. `δ_(γ,x) ↦ 1_{γx} u_γ`; optionally
/// translates a representation of `Γ ⋉ X` into a covariant pair and
/// compares integrated forms.
pub fn transformation_theorem(action: &Action, rep: Option<&Representation>, tol: f64) -> Result<Report, CrossedError> {
    let t = build_preset(Preset::Transformation(action.clone()))?;
    let mg = MeasuredGroupoid::counting("Γ⋉X", t).map_err(|e| CrossedError::Invalid(e.to_string()))?;
    let gcp = group_crossed_product(action);
    let np = action.points.len();
    let n1 = mg.n_arrows();
    let mut out = Report::new();
    let dim_g = gcp.mul.len();
    out.push(Check::flag(format!("dim C*(Γ⋉X) = {n1}, dim Γ⋉C(X) = {dim_g}"), n1 == dim_g));
    // arrow (γ, x) has index γ·|X| + x
    let iota: Vec<usize> = (0..n1).map(|k| (k / np) * np + action.act[k / np][k % np]).collect();
    let mut hit = vec![false; dim_g];
    for &i in &iota {
        hit[i] = true;
    }
    out.push(Check::flag("ι bijective", hit.iter().all(|&b| b)));
    let mut dm: f64 = 0.0;
    for a in 0..n1 {
        for b in 0..n1 {
            let conv = convolve(&mg, &ConvElement::delta(n1, a), &ConvElement::delta(n1, b));
            let mut img = vec![C64::new(0.0, 0.0); dim_g];
            for (k, v) in conv.values.iter().enumerate() {
                img[iota[k]] += v;
            }
            let mut rhs = vec![C64::new(0.0, 0.0); dim_g];
            if let Some(k) = gcp.mul[iota[a]][iota[b]] {
                rhs[k] = cr(1.0);
            }
            dm = dm.max(img.iter().zip(&rhs).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max));
        }
    }
    out.push(Check::defect("ι(f₁*f₂) = ι(f₁)ι(f₂)", dm, 0.0));
    let ds = (0..n1).all(|k| gcp.star[iota[k]] == iota[mg.g.inv[k]]);
    out.push(Check::flag("ι(f*) = ι(f)*", ds));
    let pattern = cstar_pattern(&mg.g);
    out.push(Check::flag(format!("C* pattern {}", describe_pattern(&pattern)), true));
    if let Some(rep) = rep {
        out.absorb("covariant pair", translate_to_group_pair(rep, action, &iota, &gcp, tol)?);
    }
    Ok(out)
}

/// `V_γ = Σ_x U_(γ,x)` and `φ`, checked as a covariant pair, and
/// `π(1_{γx} u_γ) = φ(1_{γx})V_γ` against `L(δ_(γ,x))`.
fn translate_to_group_pair(
    rep: &Representation,
    action: &Action,
    iota: &[usize],
    gcp: &GroupCrossedProduct,
    tol: f64,
) -> Result<Report, CrossedError> {
    let gr = &action.group;
    let np = action.points.len();
    let fam = blockwise(rep)?;
    let l = integrate_rep(rep).map_err(|e| CrossedError::Invalid(e.to_string()))?;
    let m = &rep.module;
    let n = m.dim();
    let fib = fibres(m);
    let v: Vec<CMat> = (0..gr.order())
        .map(|a| {
            let mut out = CMat::zeros(n, n);
            for x in 0..np {
                let k = a * np + x;
                for w in 0..m.n_right {
                    for (i, &bi) in fib[action.act[a][x]][w].iter().enumerate() {
                        for (j, &bj) in fib[x][w].iter().enumerate() {
                            out[(bi, bj)] = fam.blocks[k][w][(i, j)];
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut out = Report::new();
    let du = v.iter().map(unitarity_defect).fold(0.0, f64::max);
    out.push(Check::defect("V_γ unitary", du, tol));
    let mut dh: f64 = 0.0;
    for a in 0..gr.order() {
        for b in 0..gr.order() {
            dh = dh.max(max_abs_diff(&(&v[a] * &v[b]), &v[gr.mul[a][b]]));
        }
    }
    dh = dh.max(max_abs_diff(&v[gr.identity], &CMat::identity(n, n)));
    out.push(Check::defect("V_γ V_δ = V_γδ", dh, tol));
    let proj: Vec<CMat> = (0..np).map(|x| projection(m, &point_set(np, x))).collect();
    let mut dc: f64 = 0.0;
    for a in 0..gr.order() {
        for x in 0..np {
            dc = dc.max(max_abs_diff(&(&v[a] * &proj[x] * v[a].adjoint()), &proj[action.act[a][x]]));
        }
    }
    out.push(Check::defect("V_γ φ(1_x) V_γ* = φ(1_γx)", dc, tol));
    let mut di: f64 = 0.0;
    let scale = l.ops.iter().map(max_abs).fold(1.0, f64::max);
    for k in 0..iota.len() {
        let (a, x) = (iota[k] / np, iota[k] % np);
        di = di.max(max_abs_diff(&(&proj[x] * &v[a]), &l.ops[k]) / scale);
    }
    out.push(Check::defect("π∘ι = L on δ-basis", di, tol));
    debug_assert_eq!(gcp.n_group, gr.order());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingroupoid::Group;
    use crate::fixtures;
    use crate::random::{random_representation, rng_from_seed};
    use crate::reps::regular_representation;

    fn arc(mg: MeasuredGroupoid) -> Arc<MeasuredGroupoid> {
        Arc::new(mg)
    }

    #[test]
    fn bisection_counts() {
        let z2 = fixtures::z2();
        let b = all_bisections(&z2.g).unwrap();
        assert_eq!(b.len(), 3);
        let p2 = fixtures::p2();
        let b = all_bisections(&p2.g).unwrap();
        assert_eq!(b.len(), 7);
        let labels: Vec<String> = b.iter().map(|&m| mask_label(&p2.g, m)).collect();
        assert!(labels.contains(&"{(1,1),(2,2)}".to_string()));
        assert!(labels.contains(&"{(1,2),(2,1)}".to_string()));
        let g = crate::fingroupoid::build_preset(Preset::Pair(5)).unwrap();
        assert!(matches!(all_bisections(&g), Err(CrossedError::Guard { .. })));
    }

    #[test]
    fn wideness() {
        let z2 = fixtures::z2();
        let s = InverseSemigroup::all_bisections(&z2.g).unwrap();
        assert!(is_wide(&s, &z2.g).unwrap().passed());
        let e = z2.g.arrow_index("e").unwrap();
        let narrow = InverseSemigroup::from_bisections(&z2.g, vec![0, 1 << e]).unwrap();
        let r = is_wide(&narrow, &z2.g).unwrap();
        assert!(!r.get("⋃ S = G¹").unwrap().passed);
    }

    #[test]
    fn semigroup_axioms() {
        for mg in fixtures::all() {
            let s = InverseSemigroup::all_bisections(&mg.g).unwrap();
            assert!(s.check().passed(), "{}", mg.name);
        }
        let pts: Vec<String> = vec!["1".into(), "2".into()];
        let swap = PartialBijection::new(vec![Some(1), Some(0)]).unwrap();
        let half = PartialBijection::new(vec![Some(0), None]).unwrap();
        let s = InverseSemigroup::from_partial_bijections(pts, vec![swap, half]).unwrap();
        assert!(s.check().passed());
        // full 2x2 partial permutation monoid generated: 7 elements
        assert_eq!(s.len(), 7);
    }

    #[test]
    fn germ_groupoids_recover_fixtures() {
        for mg in fixtures::all() {
            let mg = arc(mg);
            let s = InverseSemigroup::all_bisections(&mg.g).unwrap();
            if !mg.is_counting() {
                assert!(matches!(EtaleFrame::from_bisections(mg.clone(), s), Err(CrossedError::NotEtale)));
                continue;
            }
            let (_, r) = EtaleFrame::from_bisections(mg.clone(), s.clone()).unwrap();
            assert!(r.passed(), "{}: {r}", mg.name);
            let (h, gm) = germ_groupoid(&s).unwrap();
            assert!(h.validate().is_valid());
            assert_eq!(gm.reps.len(), mg.n_arrows());
        }
        // idempotents only on X2
        let x2 = fixtures::x2();
        let idem: Vec<u64> = all_bisections(&x2.g).unwrap();
        let s = InverseSemigroup::from_bisections(&x2.g, idem).unwrap();
        assert_eq!(germ_groupoid(&s).unwrap().0.n_arrows(), 2);
    }

    #[test]
    fn crossed_product_dims() {
        let cases = [("Z2", 2, false), ("P2", 4, false), ("X2", 2, true)];
        for (name, dim, comm) in cases {
            let mg = fixtures::load_fixture(name).unwrap();
            let s = InverseSemigroup::all_bisections(&mg.g).unwrap();
            let cp = crossed_product(&s).unwrap();
            assert!(cp.report.passed());
            assert_eq!(cp.dim(), dim, "{name}");
            assert_eq!(cp.is_commutative(), comm || name == "Z2");
            let (frame, _) = EtaleFrame::from_bisections(arc(mg), s).unwrap();
            assert!(canonical_iso_cstar(&frame, &cp).passed());
        }
    }

    #[test]
    fn covariant_round_trips() {
        let mut rng = rng_from_seed(31);
        for name in ["Z2", "P2", "X2", "T2"] {
            let mg = arc(fixtures::load_fixture(name).unwrap());
            let s = InverseSemigroup::all_bisections(&mg.g).unwrap();
            let (frame, _) = EtaleFrame::from_bisections(mg.clone(), s).unwrap();
            let cp = crossed_product(&frame.s).unwrap();
            for n in [1, 2] {
                let rep = random_representation(mg.clone(), n, &mut rng);
                let cov = groupoid_rep_to_covariant(&rep, &frame).unwrap();
                assert!(check_covariant(&cov, &frame.s, 1e-10).passed());
                let (pi, r) = partial_isometry_form(&cov, &frame.s, 1e-10);
                assert!(r.passed(), "{name}: {r}");
                assert_eq!(from_partial_isometries(cov.module.clone(), &frame.s, &pi), cov);
                let (rho, r) = integrate_covariant(&cov, &frame.s, &cp, 1e-10);
                assert!(r.passed());
                assert!(check_crossed_rep(&rho, &cp, 1e-10).passed());
                assert!(compare_with_integrated(&rep, &rho, &frame, &cp).unwrap() < 1e-10);
                let (cov2, j) = rep_of_crossed_to_covariant(&rho, &frame.s, &cp, 1e-10).unwrap();
                let (rho2, _) = integrate_covariant(&cov2, &frame.s, &cp, 1e-10);
                let back = CrossedRep { ops: rho2.ops.iter().map(|m| &j * m * j.adjoint()).collect(), ..rho2 };
                assert!(back.max_diff(&rho) < 1e-10);
                let (rep2, r) = covariant_to_groupoid_rep(&cov, &frame, 1e-10).unwrap();
                assert!(r.passed());
                assert!(rep2.u.distance(&rep.u).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn regular_z2_swap_and_phase() {
        let mg = arc(fixtures::z2());
        let (frame, _) = EtaleFrame::from_bisections(mg.clone(), InverseSemigroup::all_bisections(&mg.g).unwrap()).unwrap();
        let rep = regular_representation(mg.clone());
        let cov = groupoid_rep_to_covariant(&rep, &frame).unwrap();
        let gi = mg.g.arrow_index("g").unwrap();
        let a = frame.s.bisections.as_ref().unwrap().iter().position(|&m| m == 1 << gi).unwrap();
        let swap = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        assert_eq!(cov.u[a], swap);
        let module = Correspondence::from_dims(&[vec![1]]);
        let ph = crate::linalg::c(0.6, 0.8);
        let mut blocks = vec![vec![CMat::identity(1, 1)]; 2];
        blocks[gi] = vec![CMat::from_element(1, 1, ph)];
        let rep = from_cocycle(mg, module, &CocycleFamily { blocks }).unwrap();
        let cov = groupoid_rep_to_covariant(&rep, &frame).unwrap();
        assert_eq!(cov.u[a][(0, 0)], ph);
    }

    #[test]
    fn x2_semilattice_projections() {
        let mg = arc(fixtures::x2());
        let (frame, _) = EtaleFrame::from_bisections(mg.clone(), InverseSemigroup::all_bisections(&mg.g).unwrap()).unwrap();
        let rep = regular_representation(mg);
        let cov = groupoid_rep_to_covariant(&rep, &frame).unwrap();
        let (pi, r) = partial_isometry_form(&cov, &frame.s, 1e-12);
        assert!(r.passed());
        for (a, p) in pi.iter().enumerate() {
            assert!(frame.s.is_idempotent(a));
            assert_eq!(p, &(p * p));
        }
    }

    #[test]
    fn transformation_cases() {
        let r = transformation_theorem(&Action::rotation(2), None, 1e-12).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.get("dim C*(Γ⋉X) = 4, dim Γ⋉C(X) = 4").is_some());
        assert!(r.get("C* pattern M2").is_some());
        let r = transformation_theorem(&Action::rotation(3), None, 1e-12).unwrap();
        assert!(r.passed() && r.get("dim C*(Γ⋉X) = 9, dim Γ⋉C(X) = 9").is_some());
        let triv = Action::trivial(Group::cyclic(2), 1);
        let r = transformation_theorem(&triv, None, 1e-12).unwrap();
        assert!(r.passed() && r.get("C* pattern C*(H2)").is_some());
        let mut rng = rng_from_seed(32);
        let t = build_preset(Preset::Transformation(Action::rotation(3))).unwrap();
        let mg = arc(MeasuredGroupoid::counting("T3", t).unwrap());
        let rep = random_representation(mg, 2, &mut rng);
        let r = transformation_theorem(&Action::rotation(3), Some(&rep), 1e-10).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn abstract_semigroup_frame() {
        let pts: Vec<String> = vec!["1".into(), "2".into()];
        let swap = PartialBijection::new(vec![Some(1), Some(0)]).unwrap();
        let s = InverseSemigroup::from_partial_bijections(pts, vec![swap, PartialBijection::identity_on(2, &[0])]).unwrap();
        let frame = EtaleFrame::from_semigroup("S⋉X", s).unwrap();
        assert_eq!(frame.mg.n_arrows(), 4);
        let cp = crossed_product(&frame.s).unwrap();
        assert_eq!(cp.dim(), 4);
        assert!(canonical_iso_cstar(&frame, &cp).passed());
        assert!(frame.check_germ_iso().passed());
    }
}
