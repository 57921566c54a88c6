//! The convolution `*`-algebra `C_c(G¹)` of a measured groupoid.
//!
//! `(f₁ * f₂)(k) = Σ_{h ∈ G^{r(k)}} f₁(h) f₂(h⁻¹k) α(h)`, `f*(g) = conj f(g⁻¹)`.
//! The C*-norm is the operator norm in the regular representation on
//! `r*L²(G¹, s, α̃)`; finite groupoids are amenable, so this is the full norm.

use crate::fingroupoid::MeasuredGroupoid;
use crate::hilbmod::{BasisVector, Correspondence, ModuleMap};
use crate::linalg::{operator_norm, EigenError, C64};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvElement {
    pub values: Vec<C64>,
}

impl ConvElement {
    pub fn zero(n_arrows: usize) -> Self {
        ConvElement { values: vec![C64::new(0.0, 0.0); n_arrows] }
    }

    pub fn delta(n_arrows: usize, g: usize) -> Self {
        let mut f = Self::zero(n_arrows);
        f.values[g] = C64::new(1.0, 0.0);
        f
    }

    /// `Σ_x δ_{unit(x)}`, the unit of the algebra up to the Haar weights.
    pub fn unit_sum(mg: &MeasuredGroupoid) -> Self {
        let mut f = Self::zero(mg.n_arrows());
        for &u in &mg.g.unit {
            f.values[u] = C64::new(1.0, 0.0);
        }
        f
    }

    pub fn from_values(values: Vec<C64>) -> Self {
        ConvElement { values }
    }

    pub fn random<R: Rng + ?Sized>(n_arrows: usize, rng: &mut R) -> Self {
        ConvElement { values: (0..n_arrows).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, other: &ConvElement) -> ConvElement {
        ConvElement { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: C64) -> ConvElement {
        ConvElement { values: self.values.iter().map(|a| a * s).collect() }
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_diff(&self, other: &ConvElement) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&g| self.values[g] != C64::new(0.0, 0.0)).collect()
    }
}

pub fn convolve(mg: &MeasuredGroupoid, f1: &ConvElement, f2: &ConvElement) -> ConvElement {
    let g = &mg.g;
    let mut out = ConvElement::zero(g.n_arrows());
    for k in 0..g.n_arrows() {
        let mut acc = C64::new(0.0, 0.0);
        for h in 0..g.n_arrows() {
            if g.rng[h] == g.rng[k] {
                acc += f1.values[h] * f2.values[g.mul(g.inv[h], k)] * mg.alpha(h);
            }
        }
        out.values[k] = acc;
    }
    out
}

pub fn star(mg: &MeasuredGroupoid, f: &ConvElement) -> ConvElement {
    ConvElement { values: (0..mg.n_arrows()).map(|k| f.values[mg.g.inv[k]].conj()).collect() }
}

/// `max_x α(|f|)(x)` with `α(φ)(x) = Σ_{g ∈ G^x} φ(g) α(g)`.
pub fn sup_alpha(mg: &MeasuredGroupoid, f: &ConvElement) -> f64 {
    let mut acc = vec![0.0; mg.n_objects()];
    for k in 0..mg.n_arrows() {
        acc[mg.g.rng[k]] += f.values[k].norm() * mg.alpha(k);
    }
    acc.into_iter().fold(0.0, f64::max)
}

/// `max_x α̃(|f|)(x)` with `α̃(φ)(x) = Σ_{g ∈ G_x} φ(g) α̃(g)`.
pub fn sup_alpha_tilde(mg: &MeasuredGroupoid, f: &ConvElement) -> f64 {
    let mut acc = vec![0.0; mg.n_objects()];
    for k in 0..mg.n_arrows() {
        acc[mg.g.src[k]] += f.values[k].norm() * mg.alpha_tilde(k);
    }
    acc.into_iter().fold(0.0, f64::max)
}

pub fn i_norm(mg: &MeasuredGroupoid, f: &ConvElement) -> f64 {
    sup_alpha(mg, f).max(sup_alpha_tilde(mg, f))
}

/// `√(‖α(|f|)‖∞ · ‖α̃(|f|)‖∞)`, the sharper bound on integrated forms.
pub fn geometric_bound(mg: &MeasuredGroupoid, f: &ConvElement) -> f64 {
    (sup_alpha(mg, f) * sup_alpha_tilde(mg, f)).sqrt()
}

/// `r*L²(G¹, s, α̃)`: basis `δ_h` in arrow order, left label `r(h)`,
/// right label `s(h)`, `⟨δ_h, δ_h⟩ = α̃(h)`.
pub fn regular_module(mg: &MeasuredGroupoid) -> Correspondence {
    Correspondence {
        n_left: mg.n_objects(),
        n_right: mg.n_objects(),
        basis: (0..mg.n_arrows()).map(|h| BasisVector { left: mg.g.rng[h], right: mg.g.src[h], weight: mg.alpha_tilde(h) }).collect(),
    }
}

/// Left convolution by `f` on the regular module:
/// `(f·ξ)(k) = Σ_{g ∈ G^{r(k)}} f(g) ξ(g⁻¹k) α(g)`.
pub fn regular_matrix(mg: &MeasuredGroupoid, f: &ConvElement) -> ModuleMap {
    let g = &mg.g;
    let m = regular_module(mg);
    let mut t = Vec::new();
    for h in 0..g.n_arrows() {
        for a in 0..g.n_arrows() {
            if g.src[a] == g.rng[h] && f.values[a] != C64::new(0.0, 0.0) {
                t.push((g.mul(a, h), h, f.values[a] * mg.alpha(a)));
            }
        }
    }
    ModuleMap::from_triplets(m.clone(), m, t).expect("left convolution preserves sources")
}

pub fn cstar_norm(mg: &MeasuredGroupoid, f: &ConvElement) -> Result<f64, EigenError> {
    operator_norm(&regular_matrix(mg, f).normalized_dense())
}

/// `δ_g * δ_h = α(g)·δ_{gh}` for composable `(g, h)`, listed in nerve order.
pub fn structure_constants(mg: &MeasuredGroupoid) -> Vec<(usize, usize, Vec<(usize, C64)>)> {
    let n = mg.n_arrows();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let p = convolve(mg, &ConvElement::delta(n, a), &ConvElement::delta(n, b));
            let terms: Vec<(usize, C64)> = p.support().into_iter().map(|k| (k, p.values[k])).collect();
            if !terms.is_empty() {
                out.push((a, b, terms));
            }
        }
    }
    out
}

/// Dimension of `span{regular_matrix(δ_g)}` by numerical rank of the
/// stacked, vectorized matrices.
pub fn regular_span_dim(mg: &MeasuredGroupoid) -> usize {
    let n = mg.n_arrows();
    let cols: Vec<Vec<C64>> = (0..n).map(|g| regular_matrix(mg, &ConvElement::delta(n, g)).dense().iter().cloned().collect()).collect();
    let stacked = crate::linalg::CMat::from_fn(n * n, n, |i, j| cols[j][i]);
    crate::linalg::rank(&stacked, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{max_abs_diff, CMat};
    use proptest::prelude::*;

    fn d(mg: &MeasuredGroupoid, id: &str) -> ConvElement {
        ConvElement::delta(mg.n_arrows(), mg.g.arrow_index(id).unwrap())
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn z2_delta_g_squares_to_e() {
        let mg = fixtures::z2();
        assert_eq!(convolve(&mg, &d(&mg, "g"), &d(&mg, "g")), d(&mg, "e"));
        assert_eq!(star(&mg, &d(&mg, "g")), d(&mg, "g"));
    }

    #[test]
    fn p2_matrix_units() {
        let mg = fixtures::p2();
        assert_eq!(convolve(&mg, &d(&mg, "(1,2)"), &d(&mg, "(2,1)")), d(&mg, "(1,1)"));
        assert_eq!(convolve(&mg, &d(&mg, "(1,2)"), &d(&mg, "(1,2)")), ConvElement::zero(4));
        assert_eq!(star(&mg, &d(&mg, "(1,2)")), d(&mg, "(2,1)"));
        let f = d(&mg, "(1,2)").scale(C64::new(0.0, 1.0));
        assert_eq!(star(&mg, &f), d(&mg, "(2,1)").scale(C64::new(0.0, -1.0)));
    }

    #[test]
    fn w2_product_picks_up_weight() {
        let mg = fixtures::w2();
        let p = convolve(&mg, &d(&mg, "(1,2)"), &d(&mg, "(2,1)"));
        assert_eq!(p, d(&mg, "(1,1)").scale(C64::new(4.0, 0.0)));
    }

    #[test]
    fn i_norm_examples() {
        let z = fixtures::z2();
        assert_eq!(i_norm(&z, &d(&z, "e").add(&d(&z, "g"))), 2.0);
        assert_eq!(i_norm(&z, &ConvElement::zero(2)), 0.0);
        let w = fixtures::w2();
        let f = d(&w, "(1,2)");
        assert_eq!(sup_alpha(&w, &f), 4.0);
        assert_eq!(sup_alpha_tilde(&w, &f), 1.0);
        assert_eq!(i_norm(&w, &f), 4.0);
    }

    #[test]
    fn cstar_norm_examples() {
        let z = fixtures::z2();
        assert!((cstar_norm(&z, &d(&z, "e").add(&d(&z, "g"))).unwrap() - 2.0).abs() < 1e-12);
        let p = fixtures::p2();
        let all = ConvElement { values: vec![one(); 4] };
        assert!((cstar_norm(&p, &all).unwrap() - 2.0).abs() < 1e-12);
        let w = fixtures::w2();
        assert!((cstar_norm(&w, &d(&w, "(1,2)")).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn regular_matrix_examples() {
        let z = fixtures::z2();
        let swap = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), one(), one(), C64::new(0.0, 0.0)]);
        assert_eq!(regular_matrix(&z, &d(&z, "g")).dense(), swap);
        for mg in fixtures::all() {
            let id = regular_matrix(&mg, &ConvElement::unit_sum(&mg));
            // α(unit(x)) = c(x) scales the diagonal
            let expect =
                CMat::from_fn(
                    mg.n_arrows(),
                    mg.n_arrows(),
                    |i, j| {
                        if i == j {
                            C64::new(mg.c(mg.g.rng[i]), 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                );
            assert_eq!(id.dense(), expect, "{}", mg.name);
        }
        // P2, δ_(1,2) against the hand convolution table: δ_(2,1) ↦ δ_(1,1), δ_(2,2) ↦ δ_(1,2)
        let p = fixtures::p2();
        let m = regular_matrix(&p, &d(&p, "(1,2)")).dense();
        let ix = |s: &str| p.g.arrow_index(s).unwrap();
        let mut expect = CMat::zeros(4, 4);
        expect[(ix("(1,1)"), ix("(2,1)"))] = one();
        expect[(ix("(1,2)"), ix("(2,2)"))] = one();
        assert_eq!(m, expect);
    }

    #[test]
    fn structure_constants_w2() {
        let w = fixtures::w2();
        let sc = structure_constants(&w);
        assert_eq!(sc.len(), w.nerve.n_pairs());
        for (a, b, terms) in sc {
            assert_eq!(terms, vec![(w.g.mul(a, b), C64::new(w.alpha(a), 0.0))]);
        }
    }

    #[test]
    fn pair_groupoid_algebra_is_full() {
        for n in 1..=3 {
            let mg = fixtures::load_fixture(&format!("pair:{n}")).unwrap();
            assert_eq!(regular_span_dim(&mg), n * n);
        }
    }

    fn fixture_and_elements() -> impl Strategy<Value = (usize, Vec<(f64, f64)>, Vec<(f64, f64)>, Vec<(f64, f64)>)> {
        (0usize..5).prop_flat_map(|k| {
            let n = fixtures::all()[k].n_arrows();
            let v = || prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), n);
            (Just(k), v(), v(), v())
        })
    }

    fn el(v: &[(f64, f64)]) -> ConvElement {
        ConvElement { values: v.iter().map(|&(a, b)| C64::new(a, b)).collect() }
    }

    proptest! {
        #[test]
        fn algebra_laws((k, a, b, c) in fixture_and_elements()) {
            let mg = &fixtures::all()[k];
            let (f1, f2, f3) = (el(&a), el(&b), el(&c));
            let lhs = convolve(mg, &convolve(mg, &f1, &f2), &f3);
            let rhs = convolve(mg, &f1, &convolve(mg, &f2, &f3));
            prop_assert!(lhs.max_diff(&rhs) < 1e-12 * 1f64.max(i_norm(mg, &lhs)) * 10.0);
            let s1 = star(mg, &convolve(mg, &f1, &f2));
            let s2 = convolve(mg, &star(mg, &f2), &star(mg, &f1));
            prop_assert!(s1.max_diff(&s2) < 1e-12 * 1f64.max(i_norm(mg, &s1)) * 10.0);
            prop_assert_eq!(star(mg, &star(mg, &f1)), f1.clone());
            let p = convolve(mg, &f1, &f2);
            prop_assert!(i_norm(mg, &p) <= i_norm(mg, &f1) * i_norm(mg, &f2) * (1.0 + 1e-12));
            prop_assert!(cstar_norm(mg, &f1).unwrap() <= i_norm(mg, &f1) * (1.0 + 1e-12));
        }

        #[test]
        fn regular_matrix_is_star_hom((k, a, b, _c) in fixture_and_elements()) {
            let mg = &fixtures::all()[k];
            let (f1, f2) = (el(&a), el(&b));
            let m12 = regular_matrix(mg, &convolve(mg, &f1, &f2));
            let prod = regular_matrix(mg, &f1).compose(&regular_matrix(mg, &f2)).unwrap();
            prop_assert!(max_abs_diff(&m12.dense(), &prod.dense()) < 1e-10);
            let ms = regular_matrix(mg, &star(mg, &f1));
            let adj = regular_matrix(mg, &f1).adjoint();
            prop_assert!(max_abs_diff(&ms.dense(), &adj.dense()) < 1e-10);
        }
    }
}
