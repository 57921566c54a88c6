//! Measure families along maps of finite sets.
//!
//! A family along `f: X → Y` is one weight per point of `X`; the measure
//! `λ_y` is the restriction to `f⁻¹(y)`. Composition and fibre products
//! are pointwise products of weights.

use crate::fingroupoid::MeasuredGroupoid;
use crate::linalg::C64;
use crate::report::{Check, Report};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("domain mismatch: codomain has {cod} points but next map has domain {dom}")]
    Mismatch { cod: usize, dom: usize },
    #[error("map value {value} at {index} is outside codomain of size {cod}")]
    OutOfRange { index: usize, value: usize, cod: usize },
    #[error("weight table has {found} entries, domain has {expected}")]
    WeightLength { expected: usize, found: usize },
    #[error("weight at {0} is negative or not finite")]
    BadWeight(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMap {
    pub cod: usize,
    pub map: Vec<usize>,
}

impl FiniteMap {
    pub fn new(cod: usize, map: Vec<usize>) -> Result<Self, MeasureError> {
        for (index, &value) in map.iter().enumerate() {
            if value >= cod {
                return Err(MeasureError::OutOfRange { index, value, cod });
            }
        }
        Ok(FiniteMap { cod, map })
    }

    pub fn identity(n: usize) -> Self {
        FiniteMap { cod: n, map: (0..n).collect() }
    }

    pub fn dom(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &FiniteMap) -> Result<FiniteMap, MeasureError> {
        if self.cod != other.dom() {
            return Err(MeasureError::Mismatch { cod: self.cod, dom: other.dom() });
        }
        Ok(FiniteMap { cod: other.cod, map: self.map.iter().map(|&y| other.map[y]).collect() })
    }

    pub fn preimage(&self, y: usize) -> Vec<usize> {
        (0..self.dom()).filter(|&x| self.map[x] == y).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFamily {
    pub along: FiniteMap,
    pub weight: Vec<f64>,
}

impl MeasureFamily {
    pub fn new(along: FiniteMap, weight: Vec<f64>) -> Result<Self, MeasureError> {
        if weight.len() != along.dom() {
            return Err(MeasureError::WeightLength { expected: along.dom(), found: weight.len() });
        }
        if let Some(k) = weight.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(MeasureError::BadWeight(k));
        }
        Ok(MeasureFamily { along, weight })
    }

    /// Unit point masses along `f`.
    pub fn point_masses(along: FiniteMap) -> Self {
        let n = along.dom();
        MeasureFamily { along, weight: vec![1.0; n] }
    }

    pub fn full_support(&self) -> bool {
        self.weight.iter().all(|&w| w > 0.0)
    }

    /// `(λφ)(y) = Σ_{f(x)=y} φ(x)·weight(x)`.
    pub fn integrate(&self, phi: &[C64]) -> Vec<C64> {
        assert_eq!(phi.len(), self.along.dom(), "function not total on the domain");
        let mut out = vec![C64::new(0.0, 0.0); self.along.cod];
        for (x, &v) in phi.iter().enumerate() {
            out[self.along.map[x]] += v * self.weight[x];
        }
        out
    }

    pub fn integrate_real(&self, phi: &[f64]) -> Vec<f64> {
        assert_eq!(phi.len(), self.along.dom(), "function not total on the domain");
        let mut out = vec![0.0; self.along.cod];
        for (x, &v) in phi.iter().enumerate() {
            out[self.along.map[x]] += v * self.weight[x];
        }
        out
    }
}

/// `μ∘λ` along `g∘f`, with weight `λ(x)·μ(f(x))`.
pub fn compose_families(lambda: &MeasureFamily, mu: &MeasureFamily) -> Result<MeasureFamily, MeasureError> {
    let along = lambda.along.then(&mu.along)?;
    let weight = (0..lambda.along.dom()).map(|x| lambda.weight[x] * mu.weight[lambda.along.map[x]]).collect();
    Ok(MeasureFamily { along, weight })
}

/// A span `Z ←b− X −f→ Y` with a family along `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologicalCorrespondence {
    pub backward: FiniteMap,
    pub family: MeasureFamily,
}

impl TopologicalCorrespondence {
    pub fn new(backward: FiniteMap, family: MeasureFamily) -> Result<Self, MeasureError> {
        if backward.dom() != family.along.dom() {
            return Err(MeasureError::Mismatch { cod: backward.dom(), dom: family.along.dom() });
        }
        Ok(TopologicalCorrespondence { backward, family })
    }

    pub fn space(&self) -> usize {
        self.backward.dom()
    }

    pub fn forward(&self) -> &FiniteMap {
        &self.family.along
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.family.weight[x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FibreProduct {
    pub corr: TopologicalCorrespondence,
    /// Point `k` of the product is `pairs[k] = (v, w)`.
    pub pairs: Vec<(usize, usize)>,
}

/// `V ×_Y W` with `b = b_V∘pr₁`, `f = f_W∘pr₂`, weight `λ(v)·μ(w)`.
pub fn fibre_product(v: &TopologicalCorrespondence, w: &TopologicalCorrespondence) -> Result<FibreProduct, MeasureError> {
    if v.forward().cod != w.backward.cod {
        return Err(MeasureError::Mismatch { cod: v.forward().cod, dom: w.backward.cod });
    }
    let mut pairs = Vec::new();
    for a in 0..v.space() {
        for b in 0..w.space() {
            if v.forward().map[a] == w.backward.map[b] {
                pairs.push((a, b));
            }
        }
    }
    let backward = FiniteMap { cod: v.backward.cod, map: pairs.iter().map(|&(a, _)| v.backward.map[a]).collect() };
    let forward = FiniteMap { cod: w.forward().cod, map: pairs.iter().map(|&(_, b)| w.forward().map[b]).collect() };
    let weight = pairs.iter().map(|&(a, b)| v.weight(a) * w.weight(b)).collect();
    Ok(FibreProduct { corr: TopologicalCorrespondence { backward, family: MeasureFamily { along: forward, weight } }, pairs })
}

/// The families of a measured groupoid. `lambda[i]` is along `d_i: G² → G¹`,
/// `mu[i]` along `v_i: G² → G⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupoidFamilies {
    /// `α` along `r`, weight `c(s(g))`.
    pub alpha: MeasureFamily,
    /// `α̃` along `s`, weight `c(r(g))`.
    pub alpha_tilde: MeasureFamily,
    pub lambda: [MeasureFamily; 3],
    pub mu: [MeasureFamily; 3],
}

/// `λ0(g,h) = c(r g)`, `λ1(g,h) = c(r h)`, `λ2(g,h) = c(s h)`;
/// `μ0 = α∘λ1`, `μ1 = α∘λ0`, `μ2 = α̃∘λ0`.
pub fn groupoid_families(mg: &MeasuredGroupoid) -> GroupoidFamilies {
    let g = &mg.g;
    let n = &mg.nerve;
    let n0 = g.n_objects();
    let n1 = g.n_arrows();
    let c = &mg.haar.c;
    let alpha = MeasureFamily { along: FiniteMap { cod: n0, map: g.rng.clone() }, weight: (0..n1).map(|k| mg.alpha(k)).collect() };
    let alpha_tilde =
        MeasureFamily { along: FiniteMap { cod: n0, map: g.src.clone() }, weight: (0..n1).map(|k| mg.alpha_tilde(k)).collect() };
    let along = |i: usize| FiniteMap { cod: n1, map: n.d[i].clone() };
    let lambda0 = MeasureFamily { along: along(0), weight: n.pairs.iter().map(|&(a, _)| c[g.rng[a]]).collect() };
    let lambda1 = MeasureFamily { along: along(1), weight: n.pairs.iter().map(|&(_, b)| c[g.rng[b]]).collect() };
    let lambda2 = MeasureFamily { along: along(2), weight: n.pairs.iter().map(|&(_, b)| c[g.src[b]]).collect() };
    let mu0 = compose_families(&lambda1, &alpha).expect("λ1 then α");
    let mu1 = compose_families(&lambda0, &alpha).expect("λ0 then α");
    let mu2 = compose_families(&lambda0, &alpha_tilde).expect("λ0 then α̃");
    GroupoidFamilies { alpha, alpha_tilde, lambda: [lambda0, lambda1, lambda2], mu: [mu0, mu1, mu2] }
}

impl GroupoidFamilies {
    /// The six composites, keyed by their defining expression, with the
    /// family index `i` of `μ_i` they must equal.
    pub fn composites(&self) -> Vec<(&'static str, usize, MeasureFamily)> {
        let a = &self.alpha;
        let at = &self.alpha_tilde;
        let l = &self.lambda;
        let comp = |x: &MeasureFamily, y: &MeasureFamily| compose_families(x, y).expect("composable");
        vec![
            ("α∘λ1", 0, comp(&l[1], a)),
            ("α∘λ2", 0, comp(&l[2], a)),
            ("α∘λ0", 1, comp(&l[0], a)),
            ("α̃∘λ2", 1, comp(&l[2], at)),
            ("α̃∘λ0", 2, comp(&l[0], at)),
            ("α̃∘λ1", 2, comp(&l[1], at)),
        ]
    }

    /// Exact (bitwise) equality of the three pairs of composites with `μ_i`,
    /// including the underlying maps `v_i`.
    pub fn check_identities(&self) -> Report {
        let mut rep = Report::new();
        for (name, i, fam) in self.composites() {
            let same_map = fam.along == self.mu[i].along;
            let mut witness = None;
            let mut defect: f64 = 0.0;
            for (k, (&x, &y)) in fam.weight.iter().zip(self.mu[i].weight.iter()).enumerate() {
                if x != y {
                    defect = defect.max((x - y).abs());
                    witness.get_or_insert(k);
                }
            }
            let passed = same_map && witness.is_none();
            let mut c = Check { name: format!("μ{i} = {name}"), passed, max_defect: defect, witness: None };
            if !same_map {
                c.witness = Some("underlying maps differ".into());
            } else if let Some(k) = witness {
                c.witness = Some(format!("pair #{k}"));
            }
            rep.push(c);
        }
        rep
    }
}

/// Both iterated sums of `f` on `G¹ ×_{s,r} G_x` (pairs `(g,h)` with
/// `s(g) = r(h)`, `s(h) = x`), indexed by nerve pair.
///
/// Left: `Σ_{k∈G_x} Σ_{g∈G^{r(k)}} f(g, g⁻¹k) α(g) α̃(k)`.
/// Right: `Σ_{h∈G_x} Σ_{g∈G_{r(h)}} f(g, h) α̃(g) α̃(h)`.
pub fn compare_integrals(mg: &MeasuredGroupoid, f: &[C64]) -> Vec<(C64, C64)> {
    let g = &mg.g;
    assert_eq!(f.len(), mg.nerve.n_pairs());
    (0..g.n_objects())
        .map(|x| {
            let mut lhs = C64::new(0.0, 0.0);
            for k in g.source_fiber(x) {
                for a in g.range_fiber(g.rng[k]) {
                    let h = g.mul(g.inv[a], k);
                    let p = mg.nerve.index(a, h).expect("composable");
                    lhs += f[p] * (mg.alpha(a) * mg.alpha_tilde(k));
                }
            }
            let mut rhs = C64::new(0.0, 0.0);
            for h in g.source_fiber(x) {
                for a in g.source_fiber(g.rng[h]) {
                    let p = mg.nerve.index(a, h).expect("composable");
                    rhs += f[p] * (mg.alpha_tilde(a) * mg.alpha_tilde(h));
                }
            }
            (lhs, rhs)
        })
        .collect()
}

/// Relative defect `|L − R| / max(1, |L|, |R|)` maximized over objects.
pub fn compare_integrals_defect(mg: &MeasuredGroupoid, f: &[C64]) -> f64 {
    compare_integrals(mg, f).into_iter().map(|(l, r)| (l - r).norm() / 1f64.max(l.norm()).max(r.norm())).fold(0.0, f64::max)
}

/// Checks that `Φ: X₁ → X₂` is a bijection with `f₂∘Φ = f₁`, `b₂∘Φ = b₁`
/// and `λ₂ = δ·Φ*(λ₁)`, i.e. `weight₂(Φ(x)) = δ(Φ(x))·weight₁(x)`. For
/// full-support families also checks that `δ` equals the forced ratio.
pub fn check_corr_isomorphism(
    c1: &TopologicalCorrespondence,
    c2: &TopologicalCorrespondence,
    phi: &[usize],
    delta: &[f64],
    tol: f64,
) -> Report {
    let mut rep = Report::new();
    let n = c1.space();
    let bij = phi.len() == n && c2.space() == n && delta.len() == n && {
        let mut seen = vec![false; n];
        phi.iter().all(|&y| y < n && !std::mem::replace(&mut seen[y], true))
    };
    rep.push(Check::flag("Φ bijective", bij));
    if !bij {
        return rep;
    }
    let fwd = (0..n).find(|&x| c2.forward().map[phi[x]] != c1.forward().map[x]);
    rep.push(Check::flag("f₂∘Φ = f₁", fwd.is_none()).witness_if_failed(|| format!("point {}", fwd.unwrap())));
    let bwd = (0..n).find(|&x| c2.backward.map[phi[x]] != c1.backward.map[x]);
    rep.push(Check::flag("b₂∘Φ = b₁", bwd.is_none()).witness_if_failed(|| format!("point {}", bwd.unwrap())));
    let mut defect: f64 = 0.0;
    let mut witness = None;
    for x in 0..n {
        let y = phi[x];
        let d = (c2.weight(y) - delta[y] * c1.weight(x)).abs() / 1f64.max(c2.weight(y).abs());
        if d > defect {
            defect = d;
            witness = Some(x);
        }
    }
    rep.push(Check::defect("λ₂ = δ·Φ*(λ₁)", defect, tol).witness_if_failed(|| format!("point {}", witness.unwrap())));
    if c1.family.full_support() && c2.family.full_support() {
        let forced = implied_delta(c1, c2, phi);
        let d = forced.iter().zip(delta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rep.push(Check::defect("δ unique", d, tol));
    }
    rep
}

/// The unique `δ` with `λ₂ = δ·Φ*(λ₁)` for full-support families.
pub fn implied_delta(c1: &TopologicalCorrespondence, c2: &TopologicalCorrespondence, phi: &[usize]) -> Vec<f64> {
    let mut delta = vec![0.0; c2.space()];
    for (x, &y) in phi.iter().enumerate() {
        delta[y] = c2.weight(y) / c1.weight(x);
    }
    delta
}

/// The two sides of the map `Υ: (g,h) ↦ (g, gh)`:
/// `(G², d₂, v₂, μ₂)` and `(G¹ ×_{r,r} G¹, pr₁, s∘pr₂, α̃∘α)`. Returns the
/// correspondences, the target point list `(g,k)` and `Υ` as an index map.
pub struct RegularIso {
    pub source: TopologicalCorrespondence,
    pub target: TopologicalCorrespondence,
    pub target_pairs: Vec<(usize, usize)>,
    pub upsilon: Vec<usize>,
}

pub fn regular_iso(mg: &MeasuredGroupoid) -> RegularIso {
    let g = &mg.g;
    let nv = &mg.nerve;
    let fam = groupoid_families(mg);
    let n1 = g.n_arrows();
    let source = TopologicalCorrespondence { backward: FiniteMap { cod: n1, map: nv.d[2].clone() }, family: fam.mu[2].clone() };
    let mut target_pairs = Vec::new();
    for a in 0..n1 {
        for k in 0..n1 {
            if g.rng[a] == g.rng[k] {
                target_pairs.push((a, k));
            }
        }
    }
    // α along pr₂ (fibre over k is G^{r(k)} with weight α(g)), then α̃ along s.
    let pr2_alpha = MeasureFamily {
        along: FiniteMap { cod: n1, map: target_pairs.iter().map(|&(_, k)| k).collect() },
        weight: target_pairs.iter().map(|&(a, _)| mg.alpha(a)).collect(),
    };
    let family = compose_families(&pr2_alpha, &fam.alpha_tilde).expect("pr₂ then s");
    let target = TopologicalCorrespondence { backward: FiniteMap { cod: n1, map: target_pairs.iter().map(|&(a, _)| a).collect() }, family };
    let upsilon = nv
        .pairs
        .iter()
        .map(|&(a, b)| {
            let ab = g.mul(a, b);
            target_pairs.iter().position(|&p| p == (a, ab)).expect("(g, gh) in G¹ ×_{r,r} G¹")
        })
        .collect();
    RegularIso { source, target, target_pairs, upsilon }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn integrate_sums_weights() {
        let fam = MeasureFamily::new(FiniteMap::new(1, vec![0, 0]).unwrap(), vec![2.0, 3.0]).unwrap();
        assert_eq!(fam.integrate(&[c(1.0), c(1.0)]), vec![c(5.0)]);
    }

    #[test]
    fn alpha_on_z2_integrates_delta() {
        let mg = fixtures::z2();
        let fam = groupoid_families(&mg);
        let g = mg.g.arrow_index("g").unwrap();
        let mut phi = vec![c(0.0); 2];
        phi[g] = c(1.0);
        assert_eq!(fam.alpha.integrate(&phi), vec![c(1.0)]);
    }

    #[test]
    fn alpha_on_w2_fiber_over_one() {
        let mg = fixtures::w2();
        let fam = groupoid_families(&mg);
        let out = fam.alpha.integrate_real(&[1.0; 4]);
        // brute force: arrows with range 1 weigh c(source)
        let brute: f64 = (0..4).filter(|&k| mg.g.rng[k] == 0).map(|k| mg.c(mg.g.src[k])).sum();
        assert_eq!(out[0], brute);
        assert_eq!(out[0], 5.0);
    }

    #[test]
    fn compose_trivial_and_support() {
        let l = MeasureFamily::new(FiniteMap::new(1, vec![0, 0]).unwrap(), vec![2.0, 3.0]).unwrap();
        let m = MeasureFamily::new(FiniteMap::new(1, vec![0]).unwrap(), vec![1.0]).unwrap();
        assert_eq!(compose_families(&l, &m).unwrap().weight, vec![2.0, 3.0]);
        let z = MeasureFamily::new(FiniteMap::new(1, vec![0]).unwrap(), vec![0.0]).unwrap();
        assert!(!compose_families(&l, &z).unwrap().full_support());
        assert!(compose_families(&m, &l).is_err());
    }

    #[test]
    fn identities_hold_on_all_fixtures() {
        for mg in fixtures::all() {
            let rep = groupoid_families(&mg).check_identities();
            assert!(rep.passed(), "{}: {rep}", mg.name);
        }
    }

    #[test]
    fn w2_mu_tables_by_brute_force() {
        let mg = fixtures::w2();
        let fam = groupoid_families(&mg);
        let (g, c) = (&mg.g, &mg.haar.c);
        for (k, &(a, b)) in mg.nerve.pairs.iter().enumerate() {
            assert_eq!(fam.mu[0].weight[k], c[g.src[a]] * c[g.src[b]]);
            assert_eq!(fam.mu[1].weight[k], c[g.rng[a]] * c[g.src[b]]);
            assert_eq!(fam.mu[2].weight[k], c[g.rng[a]] * c[g.rng[b]]);
        }
    }

    #[test]
    fn fibre_product_over_w2() {
        let mg = fixtures::w2();
        let g = &mg.g;
        let fam = groupoid_families(&mg);
        let v = TopologicalCorrespondence::new(FiniteMap::identity(4), fam.alpha_tilde.clone()).unwrap();
        let w = TopologicalCorrespondence::new(FiniteMap { cod: 2, map: g.rng.clone() }, fam.alpha_tilde.clone()).unwrap();
        let fp = fibre_product(&v, &w).unwrap();
        assert_eq!(fp.pairs.len(), 8);
        let a12 = g.arrow_index("(1,2)").unwrap();
        let a21 = g.arrow_index("(2,1)").unwrap();
        let k = fp.pairs.iter().position(|&p| p == (a12, a21)).unwrap();
        assert_eq!(fp.corr.weight(k), 4.0);
    }

    #[test]
    fn fibre_product_drops_empty_fibres() {
        let v = TopologicalCorrespondence::new(FiniteMap::identity(2), MeasureFamily::point_masses(FiniteMap::new(2, vec![0, 1]).unwrap()))
            .unwrap();
        let w = TopologicalCorrespondence::new(
            FiniteMap::new(2, vec![0]).unwrap(),
            MeasureFamily::point_masses(FiniteMap::new(1, vec![0]).unwrap()),
        )
        .unwrap();
        assert_eq!(fibre_product(&v, &w).unwrap().pairs, vec![(0, 0)]);
    }

    #[test]
    fn upsilon_is_an_isomorphism_with_unit_delta() {
        for mg in fixtures::all() {
            let iso = regular_iso(&mg);
            let delta = implied_delta(&iso.source, &iso.target, &iso.upsilon);
            assert!(delta.iter().all(|&d| d == 1.0), "{}", mg.name);
            let rep = check_corr_isomorphism(&iso.source, &iso.target, &iso.upsilon, &delta, 1e-12);
            assert!(rep.passed(), "{}: {rep}", mg.name);
        }
    }

    #[test]
    fn wrong_delta_is_rejected() {
        let mg = fixtures::z2();
        let fam = groupoid_families(&mg);
        let c = TopologicalCorrespondence::new(FiniteMap::identity(2), fam.alpha.clone()).unwrap();
        let rep = check_corr_isomorphism(&c, &c, &[0, 1], &[2.0, 2.0], 1e-12);
        assert!(!rep.passed());
        assert!(rep.get("λ₂ = δ·Φ*(λ₁)").unwrap().witness.is_some());
    }
}
