//! Finite groupoids, Haar systems and nerves.
//!
//! Objects and arrows are dense indices; string identifiers are kept only
//! for interchange and witnesses. A Haar system on a finite groupoid is a
//! positive function `c` on objects, with `α(g) = c(s(g))` and
//! `α̃(g) = c(r(g))`.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

/// Malformed tables: wrong lengths, out-of-range indices, unknown ids.
/// Distinct from axiom violations, which go in a [`ValidationReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructuralError {
    #[error("table `{table}` has length {found}, expected {expected}")]
    Length { table: &'static str, expected: usize, found: usize },
    #[error("table `{table}` entry {index} is {value}, out of range 0..{bound}")]
    OutOfRange { table: &'static str, index: usize, value: usize, bound: usize },
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("unknown identifier `{0}`")]
    UnknownId(String),
    #[error("object `{0}` has no unit arrow (no idempotent loop)")]
    MissingUnit(String),
    #[error("arrow `{0}` has no inverse entry")]
    MissingInverse(String),
    #[error("composition of `{0}` and `{1}` listed twice")]
    DuplicateComposition(String, String),
    #[error("haar weight for `{0}` is not a finite positive number")]
    BadWeight(String),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: String,
    pub witness: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at ({})", self.axiom, self.witness.join(", "))
    }
}

/// Every violated axiom with a witness tuple; empty iff valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn add(&mut self, axiom: &str, witness: Vec<String>) {
        self.violations.push(Violation { axiom: axiom.to_string(), witness });
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn cites(&self, axiom: &str) -> impl Iterator<Item = &Violation> {
        let axiom = axiom.to_string();
        self.violations.iter().filter(move |v| v.axiom == axiom)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroupoid {
    pub object_ids: Vec<String>,
    pub arrow_ids: Vec<String>,
    pub src: Vec<usize>,
    pub rng: Vec<usize>,
    pub inv: Vec<usize>,
    pub unit: Vec<usize>,
    /// `comp[g][h] = Some(gh)`; meant to be defined iff `src[g] == rng[h]`.
    pub comp: Vec<Vec<Option<usize>>>,
}

impl FiniteGroupoid {
    /// Checks table shapes and index ranges only; axioms are checked by
    /// [`FiniteGroupoid::validate`].
    pub fn from_tables(
        object_ids: Vec<String>,
        arrow_ids: Vec<String>,
        src: Vec<usize>,
        rng: Vec<usize>,
        inv: Vec<usize>,
        unit: Vec<usize>,
        comp: Vec<Vec<Option<usize>>>,
    ) -> Result<Self, StructuralError> {
        let n0 = object_ids.len();
        let n1 = arrow_ids.len();
        let len = |table, v: usize, expected| {
            if v == expected {
                Ok(())
            } else {
                Err(StructuralError::Length { table, expected, found: v })
            }
        };
        len("src", src.len(), n1)?;
        len("rng", rng.len(), n1)?;
        len("inverse", inv.len(), n1)?;
        len("unit", unit.len(), n0)?;
        len("compose", comp.len(), n1)?;
        for row in &comp {
            len("compose row", row.len(), n1)?;
        }
        let range = |table, xs: &[usize], bound| {
            for (index, &value) in xs.iter().enumerate() {
                if value >= bound {
                    return Err(StructuralError::OutOfRange { table, index, value, bound });
                }
            }
            Ok(())
        };
        range("src", &src, n0)?;
        range("rng", &rng, n0)?;
        range("inverse", &inv, n1)?;
        range("unit", &unit, n1)?;
        for (g, row) in comp.iter().enumerate() {
            for &v in row.iter().flatten() {
                if v >= n1 {
                    return Err(StructuralError::OutOfRange { table: "compose", index: g, value: v, bound: n1 });
                }
            }
        }
        unique(&object_ids)?;
        unique(&arrow_ids)?;
        Ok(FiniteGroupoid { object_ids, arrow_ids, src, rng, inv, unit, comp })
    }

    pub fn n_objects(&self) -> usize {
        self.object_ids.len()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrow_ids.len()
    }

    pub fn compose(&self, g: usize, h: usize) -> Option<usize> {
        self.comp[g][h]
    }

    /// `gh`, panicking if undefined. Only for validated groupoids.
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.comp[g][h].unwrap_or_else(|| panic!("arrows {} and {} are not composable", self.arrow_ids[g], self.arrow_ids[h]))
    }

    pub fn is_unit(&self, g: usize) -> bool {
        self.unit[self.src[g]] == g
    }

    /// `G^x = r⁻¹(x)`.
    pub fn range_fiber(&self, x: usize) -> Vec<usize> {
        (0..self.n_arrows()).filter(|&g| self.rng[g] == x).collect()
    }

    /// `G_x = s⁻¹(x)`.
    pub fn source_fiber(&self, x: usize) -> Vec<usize> {
        (0..self.n_arrows()).filter(|&g| self.src[g] == x).collect()
    }

    pub fn isotropy(&self, x: usize) -> Vec<usize> {
        (0..self.n_arrows()).filter(|&g| self.src[g] == x && self.rng[g] == x).collect()
    }

    pub fn arrow_index(&self, id: &str) -> Option<usize> {
        self.arrow_ids.iter().position(|a| a == id)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.object_ids.iter().position(|a| a == id)
    }

    /// Orbits of `G⁰`, each sorted, ordered by smallest element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let n = self.n_objects();
        let mut label = vec![usize::MAX; n];
        let mut out = Vec::new();
        for x in 0..n {
            if label[x] != usize::MAX {
                continue;
            }
            let k = out.len();
            let orbit: Vec<usize> = (0..n).filter(|&y| (0..self.n_arrows()).any(|g| self.src[g] == x && self.rng[g] == y)).collect();
            for &y in &orbit {
                label[y] = k;
            }
            out.push(orbit);
        }
        out
    }

    /// An arrow `x → y`, if any.
    pub fn arrow_between(&self, x: usize, y: usize) -> Option<usize> {
        (0..self.n_arrows()).find(|&g| self.src[g] == x && self.rng[g] == y)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_groupoid(self)
    }

    /// Relabels arrows by the permutation `perm` (new index of old arrow).
    pub fn permute_arrows(&self, perm: &[usize]) -> FiniteGroupoid {
        let n1 = self.n_arrows();
        let mut old_of = vec![0; n1];
        for (old, &new) in perm.iter().enumerate() {
            old_of[new] = old;
        }
        let arrow_ids = (0..n1).map(|k| self.arrow_ids[old_of[k]].clone()).collect();
        let src = (0..n1).map(|k| self.src[old_of[k]]).collect();
        let rng = (0..n1).map(|k| self.rng[old_of[k]]).collect();
        let inv = (0..n1).map(|k| perm[self.inv[old_of[k]]]).collect();
        let unit = self.unit.iter().map(|&u| perm[u]).collect();
        let comp = (0..n1).map(|a| (0..n1).map(|b| self.comp[old_of[a]][old_of[b]].map(|c| perm[c])).collect()).collect();
        FiniteGroupoid { object_ids: self.object_ids.clone(), arrow_ids, src, rng, inv, unit, comp }
    }
}

fn unique(ids: &[String]) -> Result<(), StructuralError> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(StructuralError::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Checks every groupoid axiom by enumeration and records each failure.
pub fn validate_groupoid(g: &FiniteGroupoid) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let a = |i: usize| g.arrow_ids[i].clone();
    let o = |i: usize| g.object_ids[i].clone();
    let n1 = g.n_arrows();
    for x in 0..g.n_objects() {
        let u = g.unit[x];
        if g.src[u] != x || g.rng[u] != x {
            rep.add("unit has source and range x", vec![o(x), a(u)]);
        }
    }
    for p in 0..n1 {
        for q in 0..n1 {
            let composable = g.src[p] == g.rng[q];
            match (composable, g.comp[p][q]) {
                (true, None) => rep.add("composition defined on composable pairs", vec![a(p), a(q)]),
                (false, Some(_)) => rep.add("composition undefined on non-composable pairs", vec![a(p), a(q)]),
                (true, Some(pq)) => {
                    if g.rng[pq] != g.rng[p] {
                        rep.add("rng(gh) = rng(g)", vec![a(p), a(q)]);
                    }
                    if g.src[pq] != g.src[q] {
                        rep.add("src(gh) = src(h)", vec![a(p), a(q)]);
                    }
                }
                (false, None) => {}
            }
        }
    }
    for p in 0..n1 {
        for q in 0..n1 {
            let Some(pq) = g.comp[p][q] else { continue };
            for r in 0..n1 {
                let Some(qr) = g.comp[q][r] else { continue };
                if g.comp[pq][r] != g.comp[p][qr] {
                    rep.add("associativity", vec![a(p), a(q), a(r)]);
                }
            }
        }
    }
    for p in 0..n1 {
        if g.comp[p][g.unit[g.src[p]]] != Some(p) {
            rep.add("right unit law", vec![a(p)]);
        }
        if g.comp[g.unit[g.rng[p]]][p] != Some(p) {
            rep.add("left unit law", vec![a(p)]);
        }
        let pi = g.inv[p];
        if g.inv[pi] != p {
            rep.add("inv(inv(g)) = g", vec![a(p)]);
        }
        if g.comp[p][pi] != Some(g.unit[g.rng[p]]) {
            rep.add("g inv(g) = unit(rng(g))", vec![a(p)]);
        }
        if g.comp[pi][p] != Some(g.unit[g.src[p]]) {
            rep.add("inv(g) g = unit(src(g))", vec![a(p)]);
        }
    }
    rep
}

/// Positive weights `c` on objects; `α(g) = c(s(g))`, `α̃(g) = c(r(g))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarSystem {
    pub c: Vec<f64>,
}

impl HaarSystem {
    pub fn counting(n_objects: usize) -> Self {
        HaarSystem { c: vec![1.0; n_objects] }
    }

    /// Recovers `c` from an arrow weight table via `c(x) = weight(unit(x))`,
    /// after validating left invariance.
    pub fn from_arrow_weights(g: &FiniteGroupoid, weight: &[f64]) -> Result<Self, ValidationReport> {
        let rep = validate_haar(g, weight);
        if !rep.is_valid() {
            return Err(rep);
        }
        Ok(HaarSystem { c: g.unit.iter().map(|&u| weight[u]).collect() })
    }

    pub fn arrow_weights(&self, g: &FiniteGroupoid) -> Vec<f64> {
        g.src.iter().map(|&x| self.c[x]).collect()
    }

    pub fn is_counting(&self) -> bool {
        self.c.iter().all(|&x| x == 1.0)
    }
}

/// Strict positivity and `weight(gh) = weight(h)` on every composable pair.
pub fn validate_haar(g: &FiniteGroupoid, weight: &[f64]) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if weight.len() != g.n_arrows() {
        rep.add("weight table total", vec![format!("{} entries for {} arrows", weight.len(), g.n_arrows())]);
        return rep;
    }
    for p in 0..g.n_arrows() {
        if !(weight[p] > 0.0 && weight[p].is_finite()) {
            rep.add("full support", vec![g.arrow_ids[p].clone()]);
        }
    }
    for p in 0..g.n_arrows() {
        for q in 0..g.n_arrows() {
            if let Some(pq) = g.comp[p][q] {
                if weight[pq] != weight[q] {
                    rep.add("left invariance weight(gh) = weight(h)", vec![g.arrow_ids[p].clone(), g.arrow_ids[q].clone()]);
                }
            }
        }
    }
    rep
}

/// Composable pairs, triples, face maps and vertex maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nerve {
    pub pairs: Vec<(usize, usize)>,
    /// `pair_index[g][h]` is the position of `(g,h)` in `pairs`.
    pub pair_index: Vec<Vec<Option<usize>>>,
    pub triples: Vec<(usize, usize, usize)>,
    /// `d[i][p]`: `d0(g,h) = h`, `d1(g,h) = gh`, `d2(g,h) = g`.
    pub d: [Vec<usize>; 3],
    /// `v[i][p]`: `v0 = r∘d1`, `v1 = r∘d0`, `v2 = s∘d0`.
    pub v: [Vec<usize>; 3],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NerveError {
    #[error("not a groupoid: {0}")]
    Invalid(ValidationReport),
    #[error("nerve identity `{identity}` fails at pair ({g}, {h})")]
    Identity { identity: &'static str, g: String, h: String },
}

pub fn nerve(g: &FiniteGroupoid) -> Result<Nerve, NerveError> {
    let rep = validate_groupoid(g);
    if !rep.is_valid() {
        return Err(NerveError::Invalid(rep));
    }
    let n1 = g.n_arrows();
    let mut pairs = Vec::new();
    let mut pair_index = vec![vec![None; n1]; n1];
    for p in 0..n1 {
        for q in 0..n1 {
            if g.comp[p][q].is_some() {
                pair_index[p][q] = Some(pairs.len());
                pairs.push((p, q));
            }
        }
    }
    let mut triples = Vec::new();
    for &(p, q) in &pairs {
        for r in 0..n1 {
            if g.src[q] == g.rng[r] {
                triples.push((p, q, r));
            }
        }
    }
    let d0: Vec<usize> = pairs.iter().map(|&(_, h)| h).collect();
    let d1: Vec<usize> = pairs.iter().map(|&(p, q)| g.mul(p, q)).collect();
    let d2: Vec<usize> = pairs.iter().map(|&(p, _)| p).collect();
    let v0: Vec<usize> = d1.iter().map(|&k| g.rng[k]).collect();
    let v1: Vec<usize> = d0.iter().map(|&k| g.rng[k]).collect();
    let v2: Vec<usize> = d0.iter().map(|&k| g.src[k]).collect();
    for (k, &(p, q)) in pairs.iter().enumerate() {
        let fail = |identity| NerveError::Identity { identity, g: g.arrow_ids[p].clone(), h: g.arrow_ids[q].clone() };
        if v0[k] != g.rng[d2[k]] {
            return Err(fail("v0 = r∘d1 = r∘d2"));
        }
        if v1[k] != g.src[d2[k]] {
            return Err(fail("v1 = r∘d0 = s∘d2"));
        }
        if v2[k] != g.src[d1[k]] {
            return Err(fail("v2 = s∘d0 = s∘d1"));
        }
    }
    Ok(Nerve { pairs, pair_index, triples, d: [d0, d1, d2], v: [v0, v1, v2] })
}

impl Nerve {
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn index(&self, g: usize, h: usize) -> Option<usize> {
        self.pair_index[g][h]
    }
}

/// A validated finite groupoid with Haar system and nerve.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredGroupoid {
    pub name: String,
    pub g: FiniteGroupoid,
    pub haar: HaarSystem,
    pub nerve: Nerve,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasuredError {
    #[error("invalid groupoid:\n{0}")]
    Groupoid(ValidationReport),
    #[error("invalid haar system:\n{0}")]
    Haar(ValidationReport),
    #[error("haar table has {found} weights for {expected} objects")]
    HaarLength { expected: usize, found: usize },
    #[error(transparent)]
    Nerve(#[from] NerveError),
}

impl MeasuredGroupoid {
    pub fn new(name: impl Into<String>, g: FiniteGroupoid, c: Vec<f64>) -> Result<Self, MeasuredError> {
        let rep = validate_groupoid(&g);
        if !rep.is_valid() {
            return Err(MeasuredError::Groupoid(rep));
        }
        if c.len() != g.n_objects() {
            return Err(MeasuredError::HaarLength { expected: g.n_objects(), found: c.len() });
        }
        let haar = HaarSystem { c };
        let hrep = validate_haar(&g, &haar.arrow_weights(&g));
        if !hrep.is_valid() {
            return Err(MeasuredError::Haar(hrep));
        }
        let nerve = nerve(&g)?;
        Ok(MeasuredGroupoid { name: name.into(), g, haar, nerve })
    }

    pub fn counting(name: impl Into<String>, g: FiniteGroupoid) -> Result<Self, MeasuredError> {
        let n = g.n_objects();
        Self::new(name, g, vec![1.0; n])
    }

    pub fn n_objects(&self) -> usize {
        self.g.n_objects()
    }

    pub fn n_arrows(&self) -> usize {
        self.g.n_arrows()
    }

    pub fn c(&self, x: usize) -> f64 {
        self.haar.c[x]
    }

    /// `α(g) = c(s(g))`.
    pub fn alpha(&self, g: usize) -> f64 {
        self.haar.c[self.g.src[g]]
    }

    /// `α̃(g) = c(r(g))`.
    pub fn alpha_tilde(&self, g: usize) -> f64 {
        self.haar.c[self.g.rng[g]]
    }

    pub fn is_counting(&self) -> bool {
        self.haar.is_counting()
    }
}

// ---------------------------------------------------------------------------
// Groups, actions and presets

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresetError {
    #[error("invalid group table: {axiom} at ({})", witness.join(", "))]
    Group { axiom: &'static str, witness: Vec<String> },
    #[error("invalid action: {axiom} at ({})", witness.join(", "))]
    Action { axiom: &'static str, witness: Vec<String> },
    #[error("bad preset parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Structural(#[from] StructuralError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub names: Vec<String>,
    pub mul: Vec<Vec<usize>>,
    pub identity: usize,
    pub inv: Vec<usize>,
}

impl Group {
    pub fn from_table(names: Vec<String>, mul: Vec<Vec<usize>>) -> Result<Self, PresetError> {
        let n = names.len();
        let err = |axiom, witness: Vec<String>| PresetError::Group { axiom, witness };
        if n == 0 {
            return Err(err("nonempty", vec![]));
        }
        unique(&names)?;
        if mul.len() != n || mul.iter().any(|r| r.len() != n) {
            return Err(err("table is n x n", vec![]));
        }
        for (a, row) in mul.iter().enumerate() {
            for (b, &ab) in row.iter().enumerate() {
                if ab >= n {
                    return Err(err("closure", vec![names[a].clone(), names[b].clone()]));
                }
            }
        }
        let identity =
            (0..n).find(|&e| (0..n).all(|a| mul[e][a] == a && mul[a][e] == a)).ok_or_else(|| err("identity element exists", vec![]))?;
        let mut inv = vec![0; n];
        for a in 0..n {
            inv[a] = (0..n)
                .find(|&b| mul[a][b] == identity && mul[b][a] == identity)
                .ok_or_else(|| err("inverses exist", vec![names[a].clone()]))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(err("associativity", vec![names[a].clone(), names[b].clone(), names[c].clone()]));
                    }
                }
            }
        }
        Ok(Group { names, mul, identity, inv })
    }

    /// `ℤ/n` with elements `e, g, g^2, …`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1);
        let names = (0..n)
            .map(|k| match k {
                0 => "e".to_string(),
                1 => "g".to_string(),
                _ => format!("g^{k}"),
            })
            .collect();
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Group::from_table(names, mul).expect("cyclic group table")
    }

    /// `ℤ/2 × ℤ/2`.
    pub fn klein() -> Self {
        let names = ["e", "a", "b", "ab"].iter().map(|s| s.to_string()).collect();
        let mul = (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect();
        Group::from_table(names, mul).expect("klein table")
    }

    /// `S₃` as permutations of three letters, in one-line notation.
    pub fn symmetric3() -> Self {
        let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
        let names =
            perms.iter().map(|p| if *p == [0, 1, 2] { "e".to_string() } else { format!("{}{}{}", p[0] + 1, p[1] + 1, p[2] + 1) }).collect();
        let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        let mul = perms.iter().map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect()).collect();
        Group::from_table(names, mul).expect("S3 table")
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }

    /// Elements whose powers and products generate the group, chosen greedily.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![self.identity];
        for a in 0..self.order() {
            if span.contains(&a) {
                continue;
            }
            gens.push(a);
            span = self.closure(&gens);
        }
        gens
    }

    fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut span = vec![self.identity];
        let mut frontier = vec![self.identity];
        while let Some(x) = frontier.pop() {
            for &s in gens {
                let y = self.mul[x][s];
                if !span.contains(&y) {
                    span.push(y);
                    frontier.push(y);
                }
            }
        }
        span
    }
}

/// A left action of a group on a finite set: `act[γ][x] = γ·x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub group: Group,
    pub points: Vec<String>,
    pub act: Vec<Vec<usize>>,
}

impl Action {
    pub fn new(group: Group, points: Vec<String>, act: Vec<Vec<usize>>) -> Result<Self, PresetError> {
        let n = points.len();
        let err = |axiom, witness: Vec<String>| PresetError::Action { axiom, witness };
        unique(&points)?;
        if act.len() != group.order() || act.iter().any(|r| r.len() != n) {
            return Err(err("table is |group| x |points|", vec![]));
        }
        for (a, row) in act.iter().enumerate() {
            for (x, &y) in row.iter().enumerate() {
                if y >= n {
                    return Err(err("closure", vec![group.names[a].clone(), points[x].clone()]));
                }
            }
        }
        for x in 0..n {
            if act[group.identity][x] != x {
                return Err(err("e·x = x", vec![points[x].clone()]));
            }
        }
        for a in 0..group.order() {
            for b in 0..group.order() {
                for x in 0..n {
                    if act[group.mul[a][b]][x] != act[a][act[b][x]] {
                        return Err(err("(γη)·x = γ·(η·x)", vec![group.names[a].clone(), group.names[b].clone(), points[x].clone()]));
                    }
                }
            }
        }
        Ok(Action { group, points, act })
    }

    /// `ℤ/n` rotating `n` points.
    pub fn rotation(n: usize) -> Self {
        let group = Group::cyclic(n);
        let points = (1..=n).map(|k| k.to_string()).collect();
        let act = (0..n).map(|a| (0..n).map(|x| (x + a) % n).collect()).collect();
        Action::new(group, points, act).expect("rotation action")
    }

    pub fn trivial(group: Group, n_points: usize) -> Self {
        let points = (1..=n_points).map(|k| k.to_string()).collect();
        let act = vec![(0..n_points).collect(); group.order()];
        Action::new(group, points, act).expect("trivial action")
    }
}

pub enum Preset {
    Group(Group),
    Space(usize),
    Pair(usize),
    Transformation(Action),
    DisjointUnion(Vec<FiniteGroupoid>),
    /// `P_n × Γ`: the pair groupoid on `n` points times a group.
    PairTimesGroup(usize, Group),
}

pub fn build_preset(kind: Preset) -> Result<FiniteGroupoid, PresetError> {
    let g = match kind {
        Preset::Group(gr) => {
            let n = gr.order();
            FiniteGroupoid::from_tables(
                vec!["*".to_string()],
                gr.names.clone(),
                vec![0; n],
                vec![0; n],
                gr.inv.clone(),
                vec![gr.identity],
                gr.mul.iter().map(|r| r.iter().map(|&x| Some(x)).collect()).collect(),
            )?
        }
        Preset::Space(n) => {
            if n == 0 {
                return Err(PresetError::Params("space needs at least one point".into()));
            }
            FiniteGroupoid::from_tables(
                (1..=n).map(|k| k.to_string()).collect(),
                (1..=n).map(|k| format!("e{k}")).collect(),
                (0..n).collect(),
                (0..n).collect(),
                (0..n).collect(),
                (0..n).collect(),
                (0..n).map(|a| (0..n).map(|b| (a == b).then_some(a)).collect()).collect(),
            )?
        }
        Preset::Pair(n) => pair_times_group(n, &Group::cyclic(1), false)?,
        Preset::PairTimesGroup(n, gr) => pair_times_group(n, &gr, true)?,
        Preset::Transformation(action) => {
            let gr = &action.group;
            let np = action.points.len();
            let ng = gr.order();
            let idx = |a: usize, x: usize| a * np + x;
            let mut arrow_ids = Vec::new();
            let mut src = Vec::new();
            let mut rng = Vec::new();
            let mut inv = Vec::new();
            for a in 0..ng {
                for x in 0..np {
                    arrow_ids.push(format!("({},{})", gr.names[a], action.points[x]));
                    src.push(x);
                    rng.push(action.act[a][x]);
                    inv.push(idx(gr.inv[a], action.act[a][x]));
                }
            }
            let n1 = ng * np;
            let mut comp = vec![vec![None; n1]; n1];
            for a in 0..ng {
                for x in 0..np {
                    for b in 0..ng {
                        for y in 0..np {
                            // (a, x)(b, y) defined iff x = b·y.
                            if action.act[b][y] == x {
                                comp[idx(a, x)][idx(b, y)] = Some(idx(gr.mul[a][b], y));
                            }
                        }
                    }
                }
            }
            FiniteGroupoid::from_tables(
                action.points.clone(),
                arrow_ids,
                src,
                rng,
                inv,
                (0..np).map(|x| idx(gr.identity, x)).collect(),
                comp,
            )?
        }
        Preset::DisjointUnion(parts) => disjoint_union(&parts)?,
    };
    let rep = validate_groupoid(&g);
    debug_assert!(rep.is_valid(), "preset produced invalid groupoid: {rep}");
    Ok(g)
}

fn pair_times_group(n: usize, gr: &Group, label_group: bool) -> Result<FiniteGroupoid, PresetError> {
    if n == 0 {
        return Err(PresetError::Params("pair groupoid needs at least one point".into()));
    }
    let ng = gr.order();
    // Arrow ((i,j), γ) has range i and source j.
    let idx = |i: usize, j: usize, a: usize| (i * n + j) * ng + a;
    let n1 = n * n * ng;
    let mut arrow_ids = Vec::with_capacity(n1);
    let mut src = Vec::with_capacity(n1);
    let mut rng = Vec::with_capacity(n1);
    let mut inv = Vec::with_capacity(n1);
    for i in 0..n {
        for j in 0..n {
            for a in 0..ng {
                arrow_ids.push(if label_group {
                    format!("({},{};{})", i + 1, j + 1, gr.names[a])
                } else {
                    format!("({},{})", i + 1, j + 1)
                });
                src.push(j);
                rng.push(i);
                inv.push(idx(j, i, gr.inv[a]));
            }
        }
    }
    let mut comp = vec![vec![None; n1]; n1];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for a in 0..ng {
                    for b in 0..ng {
                        comp[idx(i, j, a)][idx(j, k, b)] = Some(idx(i, k, gr.mul[a][b]));
                    }
                }
            }
        }
    }
    Ok(FiniteGroupoid::from_tables(
        (1..=n).map(|k| k.to_string()).collect(),
        arrow_ids,
        src,
        rng,
        inv,
        (0..n).map(|i| idx(i, i, gr.identity)).collect(),
        comp,
    )?)
}

fn disjoint_union(parts: &[FiniteGroupoid]) -> Result<FiniteGroupoid, PresetError> {
    if parts.is_empty() {
        return Err(PresetError::Params("disjoint union of nothing".into()));
    }
    let (mut o, mut a) = (0usize, 0usize);
    let mut object_ids = Vec::new();
    let mut arrow_ids = Vec::new();
    let (mut src, mut rng, mut inv, mut unit) = (vec![], vec![], vec![], vec![]);
    let n1: usize = parts.iter().map(|p| p.n_arrows()).sum();
    let mut comp = vec![vec![None; n1]; n1];
    for (k, p) in parts.iter().enumerate() {
        object_ids.extend(p.object_ids.iter().map(|s| format!("{k}:{s}")));
        arrow_ids.extend(p.arrow_ids.iter().map(|s| format!("{k}:{s}")));
        src.extend(p.src.iter().map(|x| x + o));
        rng.extend(p.rng.iter().map(|x| x + o));
        inv.extend(p.inv.iter().map(|x| x + a));
        unit.extend(p.unit.iter().map(|x| x + a));
        for g in 0..p.n_arrows() {
            for h in 0..p.n_arrows() {
                comp[g + a][h + a] = p.comp[g][h].map(|x| x + a);
            }
        }
        o += p.n_objects();
        a += p.n_arrows();
    }
    Ok(FiniteGroupoid::from_tables(object_ids, arrow_ids, src, rng, inv, unit, comp)?)
}

// ---------------------------------------------------------------------------
// JSON interchange

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrowSpec {
    pub id: String,
    pub src: String,
    pub rng: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupoidFile {
    pub objects: Vec<String>,
    pub arrows: Vec<ArrowSpec>,
    pub inverse: BTreeMap<String, String>,
    pub compose: Vec<[String; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub haar: Option<BTreeMap<String, f64>>,
}

impl GroupoidFile {
    pub fn from_groupoid(g: &FiniteGroupoid, c: Option<&[f64]>) -> Self {
        let arrows = (0..g.n_arrows())
            .map(|k| ArrowSpec { id: g.arrow_ids[k].clone(), src: g.object_ids[g.src[k]].clone(), rng: g.object_ids[g.rng[k]].clone() })
            .collect();
        let inverse = (0..g.n_arrows()).map(|k| (g.arrow_ids[k].clone(), g.arrow_ids[g.inv[k]].clone())).collect();
        let mut compose = Vec::new();
        for p in 0..g.n_arrows() {
            for q in 0..g.n_arrows() {
                if let Some(pq) = g.comp[p][q] {
                    compose.push([g.arrow_ids[p].clone(), g.arrow_ids[q].clone(), g.arrow_ids[pq].clone()]);
                }
            }
        }
        let haar = c.map(|c| g.object_ids.iter().cloned().zip(c.iter().cloned()).collect());
        GroupoidFile { objects: g.object_ids.clone(), arrows, inverse, compose, haar }
    }

    /// Builds the tables; units are the idempotent loops. Axioms are not
    /// checked here.
    pub fn to_groupoid(&self) -> Result<(FiniteGroupoid, Vec<f64>), StructuralError> {
        let objects: HashMap<&str, usize> = self.objects.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
        unique(&self.objects)?;
        let arrow_ids: Vec<String> = self.arrows.iter().map(|a| a.id.clone()).collect();
        unique(&arrow_ids)?;
        let arrows: HashMap<&str, usize> = arrow_ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
        let obj = |s: &str| objects.get(s).copied().ok_or_else(|| StructuralError::UnknownId(s.to_string()));
        let arr = |s: &str| arrows.get(s).copied().ok_or_else(|| StructuralError::UnknownId(s.to_string()));
        let n1 = arrow_ids.len();
        let src = self.arrows.iter().map(|a| obj(&a.src)).collect::<Result<Vec<_>, _>>()?;
        let rng = self.arrows.iter().map(|a| obj(&a.rng)).collect::<Result<Vec<_>, _>>()?;
        for k in self.inverse.keys() {
            arr(k)?;
        }
        let inv = arrow_ids
            .iter()
            .map(|id| match self.inverse.get(id) {
                Some(v) => arr(v),
                None => Err(StructuralError::MissingInverse(id.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut comp = vec![vec![None; n1]; n1];
        for [a, b, ab] in &self.compose {
            let (p, q, pq) = (arr(a)?, arr(b)?, arr(ab)?);
            if comp[p][q].is_some() {
                return Err(StructuralError::DuplicateComposition(a.clone(), b.clone()));
            }
            comp[p][q] = Some(pq);
        }
        let unit = (0..self.objects.len())
            .map(|x| {
                (0..n1)
                    .find(|&g| src[g] == x && rng[g] == x && comp[g][g] == Some(g))
                    .ok_or_else(|| StructuralError::MissingUnit(self.objects[x].clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let c = match &self.haar {
            None => vec![1.0; self.objects.len()],
            Some(h) => {
                for k in h.keys() {
                    obj(k)?;
                }
                self.objects
                    .iter()
                    .map(|x| match h.get(x) {
                        Some(&w) if w > 0.0 && w.is_finite() => Ok(w),
                        _ => Err(StructuralError::BadWeight(x.clone())),
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        let g = FiniteGroupoid::from_tables(self.objects.clone(), arrow_ids, src, rng, inv, unit, comp)?;
        Ok((g, c))
    }

    pub fn parse(text: &str) -> Result<Self, StructuralError> {
        serde_json::from_str(text).map_err(|e| StructuralError::Json(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    pub elements: Vec<String>,
    /// `mul[a][b]` is the name of `ab`.
    pub mul: Vec<Vec<String>>,
}

impl GroupFile {
    pub fn to_group(&self) -> Result<Group, PresetError> {
        let idx = |s: &str| {
            self.elements.iter().position(|e| e == s).ok_or_else(|| PresetError::Structural(StructuralError::UnknownId(s.to_string())))
        };
        let mul = self.mul.iter().map(|row| row.iter().map(|s| idx(s)).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
        Group::from_table(self.elements.clone(), mul)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionFile {
    pub points: Vec<String>,
    /// `act[γ][x] = γ·x`; elements missing from the map act trivially only
    /// if they are the identity.
    pub act: BTreeMap<String, BTreeMap<String, String>>,
}

impl ActionFile {
    pub fn to_action(&self, group: Group) -> Result<Action, PresetError> {
        let pt = |s: &str| {
            self.points.iter().position(|e| e == s).ok_or_else(|| PresetError::Structural(StructuralError::UnknownId(s.to_string())))
        };
        for k in self.act.keys() {
            if !group.names.contains(k) {
                return Err(StructuralError::UnknownId(k.clone()).into());
            }
        }
        let mut act = Vec::new();
        for (a, name) in group.names.iter().enumerate() {
            let row = match self.act.get(name) {
                Some(m) => self
                    .points
                    .iter()
                    .map(|x| match m.get(x) {
                        Some(y) => pt(y),
                        None => Err(PresetError::Action { axiom: "action total", witness: vec![name.clone(), x.clone()] }),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None if a == group.identity => (0..self.points.len()).collect(),
                None => return Err(PresetError::Action { axiom: "action total", witness: vec![name.clone()] }),
            };
            act.push(row);
        }
        Action::new(group, self.points.clone(), act)
    }
}

// ---------------------------------------------------------------------------
// One-dimensional characters of isotropy groups

/// All homomorphisms from the isotropy group at `x` to the unit circle,
/// each as a phase per arrow of `isotropy(x)` (in that order). Found by
/// brute force over `m`-th roots of unity on a generating set, `m` the
/// group order.
pub fn isotropy_characters(g: &FiniteGroupoid, x: usize) -> Vec<Vec<f64>> {
    let elems = g.isotropy(x);
    let m = elems.len();
    let pos = |a: usize| elems.iter().position(|&e| e == a).unwrap();
    let mul: Vec<Vec<usize>> = elems.iter().map(|&a| elems.iter().map(|&b| pos(g.mul(a, b))).collect()).collect();
    let names = elems.iter().map(|&a| g.arrow_ids[a].clone()).collect();
    let gr = Group::from_table(names, mul).expect("isotropy is a group");
    let gens = gr.generators();
    let mut out = Vec::new();
    let total = m.pow(gens.len() as u32);
    for code in 0..total {
        // Exponents k_i: generator i maps to exp(2πi k_i / m); phases are
        // stored as fractions of a full turn.
        let mut ks = Vec::with_capacity(gens.len());
        let mut c = code;
        for _ in 0..gens.len() {
            ks.push(c % m);
            c /= m;
        }
        let mut val: Vec<Option<usize>> = vec![None; m];
        val[gr.identity] = Some(0);
        let mut frontier = vec![gr.identity];
        let mut ok = true;
        while let Some(a) = frontier.pop() {
            for (i, &s) in gens.iter().enumerate() {
                let b = gr.mul[a][s];
                let v = (val[a].unwrap() + ks[i]) % m;
                match val[b] {
                    None => {
                        val[b] = Some(v);
                        frontier.push(b);
                    }
                    Some(w) if w != v => ok = false,
                    _ => {}
                }
            }
        }
        if !ok {
            continue;
        }
        let hom = (0..m).all(|a| (0..m).all(|b| val[gr.mul[a][b]].unwrap() == (val[a].unwrap() + val[b].unwrap()) % m));
        if hom {
            out.push(val.iter().map(|v| v.unwrap() as f64 / m as f64).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> FiniteGroupoid {
        build_preset(Preset::Pair(2)).unwrap()
    }

    #[test]
    fn z2_is_valid_with_two_arrows() {
        let g = build_preset(Preset::Group(Group::cyclic(2))).unwrap();
        assert_eq!(g.n_arrows(), 2);
        assert!(validate_groupoid(&g).is_valid());
        assert_eq!(nerve(&g).unwrap().n_pairs(), 4);
    }

    #[test]
    fn p2_ordering_and_counts() {
        let g = p2();
        assert_eq!(g.arrow_ids, vec!["(1,1)", "(1,2)", "(2,1)", "(2,2)"]);
        assert!(validate_groupoid(&g).is_valid());
        let n = nerve(&g).unwrap();
        // pairs (i,j),(j,k): 2*2*2
        let brute = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).filter(|&(a, b)| g.src[a] == g.rng[b]).count();
        assert_eq!(n.n_pairs(), brute);
        assert_eq!(n.n_pairs(), 8);
    }

    #[test]
    fn broken_p2_cites_range_mismatch() {
        let mut g = p2();
        let (a12, a21, a22) = (1, 2, 3);
        g.comp[a12][a21] = Some(a22);
        let rep = validate_groupoid(&g);
        assert!(!rep.is_valid());
        let hit = rep.cites("rng(gh) = rng(g)").next().expect("range mismatch cited");
        assert_eq!(hit.witness, vec!["(1,2)".to_string(), "(2,1)".to_string()]);
    }

    #[test]
    fn out_of_range_is_structural() {
        let g = p2();
        let mut src = g.src.clone();
        src[0] = 7;
        let e = FiniteGroupoid::from_tables(g.object_ids, g.arrow_ids, src, g.rng, g.inv, g.unit, g.comp);
        assert!(matches!(e, Err(StructuralError::OutOfRange { table: "src", .. })));
    }

    #[test]
    fn transformation_swap_has_range_two() {
        let swap = Action::rotation(2);
        let g = build_preset(Preset::Transformation(swap)).unwrap();
        assert_eq!(g.n_arrows(), 4);
        let k = g.arrow_index("(g,1)").unwrap();
        assert_eq!(g.object_ids[g.rng[k]], "2");
        assert_eq!(g.object_ids[g.src[k]], "1");
    }

    #[test]
    fn space_nerve_faces_coincide() {
        let g = build_preset(Preset::Space(2)).unwrap();
        let n = nerve(&g).unwrap();
        assert_eq!(n.n_pairs(), 2);
        assert_eq!(n.d[0], n.d[1]);
        assert_eq!(n.d[1], n.d[2]);
    }

    #[test]
    fn weighted_haar_on_p2_is_left_invariant() {
        let g = p2();
        let w = HaarSystem { c: vec![1.0, 4.0] }.arrow_weights(&g);
        assert!(validate_haar(&g, &w).is_valid());
    }

    #[test]
    fn non_invariant_weight_fails_with_brute_force_witness() {
        let g = p2();
        let mut w = vec![1.0; 4];
        w[1] = 2.0;
        let rep = validate_haar(&g, &w);
        assert!(!rep.is_valid());
        // independent enumeration of violating pairs
        let mut expected = Vec::new();
        for p in 0..4 {
            for q in 0..4 {
                if let Some(pq) = g.comp[p][q] {
                    if w[pq] != w[q] {
                        expected.push(vec![g.arrow_ids[p].clone(), g.arrow_ids[q].clone()]);
                    }
                }
            }
        }
        let got: Vec<_> = rep.violations.iter().map(|v| v.witness.clone()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn json_round_trip() {
        let g = p2();
        let f = GroupoidFile::from_groupoid(&g, Some(&[1.0, 4.0]));
        let text = serde_json::to_string(&f).unwrap();
        let (h, c) = GroupoidFile::parse(&text).unwrap().to_groupoid().unwrap();
        assert_eq!(g, h);
        assert_eq!(c, vec![1.0, 4.0]);
    }

    #[test]
    fn characters_of_cyclic_and_klein() {
        let z3 = build_preset(Preset::Group(Group::cyclic(3))).unwrap();
        assert_eq!(isotropy_characters(&z3, 0).len(), 3);
        let k = build_preset(Preset::Group(Group::klein())).unwrap();
        assert_eq!(isotropy_characters(&k, 0).len(), 4);
        let s3 = build_preset(Preset::Group(Group::symmetric3())).unwrap();
        assert_eq!(isotropy_characters(&s3, 0).len(), 2);
    }

    #[test]
    fn bad_group_table_rejected() {
        let e = Group::from_table(vec!["e".into(), "a".into()], vec![vec![0, 1], vec![1, 1]]);
        assert!(matches!(e, Err(PresetError::Group { .. })));
    }
}
