//! Representations `(φ, U)` of a measured groupoid on correspondences
//! `C(G⁰) → C(W)`.
//!
//! `φ` is the left grading of the module `F`; `U` is a module map
//! `L²(G¹, s, α̃) ⊗ F → L²(G¹, r, α) ⊗ F`. The pullbacks `d_i*(U)` are
//! assembled from tensor products with `L²(G², d_i, λ_i)`, associators
//! and the canonical unitaries of composed families.

use crate::fingroupoid::MeasuredGroupoid;
use crate::hilbmod::{
    associator, gamma_compose, gamma_fibre, l2, tensor, tensor_maps, BasisVector, Correspondence, HilbError, ModuleMap, Tensor,
};
use crate::linalg::{max_abs_diff, unitarity_defect, CMat, C64};
use crate::measures::{check_corr_isomorphism, groupoid_families, regular_iso, FiniteMap, MeasureFamily, TopologicalCorrespondence};
use crate::report::{Check, Report};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error(transparent)]
    Hilb(#[from] HilbError),
    #[error("module has left algebra of size {found}, groupoid has {expected} objects")]
    Grading { expected: usize, found: usize },
    #[error("block for arrow {arrow}, coefficient {w} is {rows}x{cols}, expected {exp_rows}x{exp_cols}")]
    BlockShape { arrow: String, w: usize, rows: usize, cols: usize, exp_rows: usize, exp_cols: usize },
    #[error("U does not intertwine the C(G¹) actions (defect {defect:e} at entry {entry:?})")]
    NotIntertwiner { defect: f64, entry: Option<(usize, usize)> },
    #[error("cocycle family has {found} arrows, groupoid has {expected}")]
    FamilyLength { expected: usize, found: usize },
}

/// `L²(G¹, s, α̃)` with the identity left grading: basis `δ_g` in arrow order.
pub fn l2_source(mg: &MeasuredGroupoid) -> Correspondence {
    Correspondence {
        n_left: mg.n_arrows(),
        n_right: mg.n_objects(),
        basis: (0..mg.n_arrows()).map(|g| BasisVector { left: g, right: mg.g.src[g], weight: mg.alpha_tilde(g) }).collect(),
    }
}

/// `L²(G¹, r, α)` with the identity left grading.
pub fn l2_range(mg: &MeasuredGroupoid) -> Correspondence {
    Correspondence {
        n_left: mg.n_arrows(),
        n_right: mg.n_objects(),
        basis: (0..mg.n_arrows()).map(|g| BasisVector { left: g, right: mg.g.rng[g], weight: mg.alpha(g) }).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub mg: Arc<MeasuredGroupoid>,
    /// `F`: left labels are objects, right labels index `W`.
    pub module: Correspondence,
    pub u: ModuleMap,
}

impl Representation {
    pub fn n_coeff(&self) -> usize {
        self.module.n_right
    }

    pub fn source_tensor(&self) -> Tensor {
        tensor(&l2_source(&self.mg), &self.module).expect("grading matches")
    }

    pub fn target_tensor(&self) -> Tensor {
        tensor(&l2_range(&self.mg), &self.module).expect("grading matches")
    }
}

/// Unitaries `U_g: H_{s(g),w} → H_{r(g),w}` in orthonormal coordinates of
/// the module fibres; `blocks[g][w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleFamily {
    pub blocks: Vec<Vec<CMat>>,
}

/// Basis indices of `H_{x,w}` for every `(x, w)`.
pub fn fibres(module: &Correspondence) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![vec![Vec::new(); module.n_right]; module.n_left];
    for (i, b) in module.basis.iter().enumerate() {
        out[b.left][b.right].push(i);
    }
    out
}

impl CocycleFamily {
    /// Unitarity of each block, `U_{gh} = U_g U_h` on all composable pairs,
    /// `U_{unit(x)} = 1`.
    pub fn check(&self, mg: &MeasuredGroupoid) -> Report {
        let mut rep = Report::new();
        let g = &mg.g;
        let mut du: f64 = 0.0;
        let mut dm: f64 = 0.0;
        let mut di: f64 = 0.0;
        let mut wit = None;
        for a in 0..g.n_arrows() {
            for m in &self.blocks[a] {
                if m.nrows() > 0 || m.ncols() > 0 {
                    du = du.max(unitarity_defect(m));
                }
            }
        }
        for &(a, b) in &mg.nerve.pairs {
            let ab = g.mul(a, b);
            for w in 0..self.blocks[ab].len() {
                let d = max_abs_diff(&self.blocks[ab][w], &(&self.blocks[a][w] * &self.blocks[b][w]));
                if d > dm {
                    dm = d;
                    wit = Some((a, b));
                }
            }
        }
        for &u in &g.unit {
            for m in &self.blocks[u] {
                di = di.max(max_abs_diff(m, &CMat::identity(m.nrows(), m.ncols())));
            }
        }
        rep.push(Check::defect("blocks unitary", du, 1e-9));
        let c = Check::defect("U_gh = U_g U_h", dm, 1e-9);
        rep.push(match wit {
            Some((a, b)) if !c.passed => c.with_witness(format!("({}, {})", g.arrow_ids[a], g.arrow_ids[b])),
            _ => c,
        });
        rep.push(Check::defect("U_unit = 1", di, 1e-9));
        rep
    }
}

/// Reads the `g`-blocks of `U` in orthonormal coordinates. The raw block
/// `V_g` relates to the unitary by `V_g = √(α̃(g)/α(g))·U_g`.
pub fn blockwise(rep: &Representation) -> Result<CocycleFamily, RepError> {
    let (defect, entry) = rep.u.intertwining_defect();
    if defect > 1e-9 {
        return Err(RepError::NotIntertwiner { defect, entry });
    }
    let mg = &rep.mg;
    let s_t = rep.source_tensor();
    let r_t = rep.target_tensor();
    let fib = fibres(&rep.module);
    let n = rep.u.normalized_dense();
    let mut blocks = Vec::with_capacity(mg.n_arrows());
    for g in 0..mg.n_arrows() {
        let mut per_w = Vec::with_capacity(rep.n_coeff());
        for w in 0..rep.n_coeff() {
            let rows = &fib[mg.g.rng[g]][w];
            let cols = &fib[mg.g.src[g]][w];
            let m = CMat::from_fn(rows.len(), cols.len(), |i, j| {
                let ri = r_t.index(g, rows[i]).expect("target pair");
                let cj = s_t.index(g, cols[j]).expect("source pair");
                n[(ri, cj)]
            });
            per_w.push(m);
        }
        blocks.push(per_w);
    }
    Ok(CocycleFamily { blocks })
}

/// Assembles `U` from unitary blocks; inverse of [`blockwise`].
pub fn from_cocycle(mg: Arc<MeasuredGroupoid>, module: Correspondence, fam: &CocycleFamily) -> Result<Representation, RepError> {
    if module.n_left != mg.n_objects() {
        return Err(RepError::Grading { expected: mg.n_objects(), found: module.n_left });
    }
    if fam.blocks.len() != mg.n_arrows() {
        return Err(RepError::FamilyLength { expected: mg.n_arrows(), found: fam.blocks.len() });
    }
    let es = l2_source(&mg);
    let er = l2_range(&mg);
    let s_t = tensor(&es, &module)?;
    let r_t = tensor(&er, &module)?;
    let fib = fibres(&module);
    let mut trip = Vec::new();
    for g in 0..mg.n_arrows() {
        for w in 0..module.n_right {
            let rows = &fib[mg.g.rng[g]][w];
            let cols = &fib[mg.g.src[g]][w];
            let m = fam.blocks[g].get(w).ok_or(RepError::BlockShape {
                arrow: mg.g.arrow_ids[g].clone(),
                w,
                rows: 0,
                cols: 0,
                exp_rows: rows.len(),
                exp_cols: cols.len(),
            })?;
            if m.nrows() != rows.len() || m.ncols() != cols.len() {
                return Err(RepError::BlockShape {
                    arrow: mg.g.arrow_ids[g].clone(),
                    w,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    exp_rows: rows.len(),
                    exp_cols: cols.len(),
                });
            }
            for (i, &bi) in rows.iter().enumerate() {
                for (j, &bj) in cols.iter().enumerate() {
                    let ri = r_t.index(g, bi).expect("target pair");
                    let cj = s_t.index(g, bj).expect("source pair");
                    let scale = (s_t.corr.basis[cj].weight / r_t.corr.basis[ri].weight).sqrt();
                    trip.push((ri, cj, m[(i, j)] * scale));
                }
            }
        }
    }
    let u = ModuleMap::from_triplets(s_t.corr, r_t.corr, trip)?;
    Ok(Representation { mg, module, u })
}

/// The pullback `d_i*(U)`: `i = 0` maps `M₂ → M₁`, `i = 1` maps `M₂ → M₀`,
/// `i = 2` maps `M₁ → M₀`, where `M_j = L²(G², v_j, μ_j) ⊗ F`.
///
/// `d_i*(U) = (γ_R ⊗ 1) ∘ assoc_R⁻¹ ∘ (1 ⊗ U) ∘ assoc_S ∘ (γ_S ⊗ 1)⁻¹`
/// with `A_i = L²(G², d_i, λ_i)` and `γ_S: A_i ⊗ L²(G¹, s, α̃) ≅ L²(G², s∘d_i, α̃∘λ_i)`.
pub fn pullback(rep: &Representation, i: usize) -> Result<ModuleMap, RepError> {
    assert!(i < 3);
    let mg = &rep.mg;
    let fam = groupoid_families(mg);
    let n2 = mg.nerve.n_pairs();
    let id2 = FiniteMap::identity(n2);
    let a_i = l2(&TopologicalCorrespondence { backward: id2.clone(), family: fam.lambda[i].clone() }).corr;
    let es = l2_source(mg);
    let er = l2_range(mg);
    let f = &rep.module;
    let gamma_s = gamma_compose(&id2, &fam.lambda[i], &fam.alpha_tilde)?;
    let gamma_r = gamma_compose(&id2, &fam.lambda[i], &fam.alpha)?;
    let id_f = ModuleMap::identity(f);
    let gs = tensor_maps(&gamma_s, &id_f)?;
    let gr = tensor_maps(&gamma_r, &id_f)?;
    let assoc_s = associator(&a_i, &es, f)?;
    let assoc_r = associator(&a_i, &er, f)?;
    let one_u = tensor_maps(&ModuleMap::identity(&a_i), &rep.u)?;
    let m = gr.compose(&assoc_r.adjoint())?.compose(&one_u)?.compose(&assoc_s)?.compose(&gs.adjoint())?;
    Ok(m)
}

/// Shapes, unitarity, `C(G¹)`-intertwining and `d₁*(U) = d₂*(U)∘d₀*(U)`.
pub fn check_representation(rep: &Representation, tol: f64) -> Report {
    let mut out = Report::new();
    let mg = &rep.mg;
    let shapes = rep.module.n_left == mg.n_objects()
        && tensor(&l2_source(mg), &rep.module).map(|t| t.corr.compatible(&rep.u.source, 1e-12).is_ok()).unwrap_or(false)
        && tensor(&l2_range(mg), &rep.module).map(|t| t.corr.compatible(&rep.u.target, 1e-12).is_ok()).unwrap_or(false);
    out.push(Check::flag("shapes", shapes));
    if !shapes {
        return out;
    }
    out.push(Check::defect("U unitary", rep.u.unitarity_defect(), tol));
    let (d, entry) = rep.u.intertwining_defect();
    let c = Check::defect("U intertwines C(G¹)", d, tol);
    out.push(match entry {
        Some((i, j)) if !c.passed => c.with_witness(format!("entry ({i}, {j})")),
        _ => c,
    });
    if d > tol {
        out.push(Check::flag("cocycle d1*(U) = d2*(U)∘d0*(U)", false).with_witness("U is not block diagonal in G¹"));
        return out;
    }
    let built: Result<[ModuleMap; 3], RepError> = (|| Ok([pullback(rep, 0)?, pullback(rep, 1)?, pullback(rep, 2)?]))();
    match built {
        Err(e) => out.push(Check::flag("cocycle d1*(U) = d2*(U)∘d0*(U)", false).with_witness(e.to_string())),
        Ok([d0, d1, d2]) => {
            for (k, m) in [&d0, &d1, &d2].iter().enumerate() {
                out.push(Check::defect(format!("d{k}*(U) unitary"), m.unitarity_defect(), tol));
            }
            match d2.compose(&d0).and_then(|p| d1.distance(&p)) {
                Ok(def) => out.push(Check::defect("cocycle d1*(U) = d2*(U)∘d0*(U)", def, tol)),
                Err(e) => out.push(Check::flag("cocycle d1*(U) = d2*(U)∘d0*(U)", false).with_witness(e.to_string())),
            }
        }
    }
    out
}

/// Representation on `r*L²(G¹, s, α̃)` over `C(G⁰)` with `U` induced by
/// `Υ(g, h) = (g, gh)`: `U = γ_R⁻¹ ∘ Υ_* ∘ γ_S`.
pub fn regular_representation(mg: Arc<MeasuredGroupoid>) -> Representation {
    let fam = groupoid_families(&mg);
    let n0 = mg.n_objects();
    let n1 = mg.n_arrows();
    let module = crate::convalg::regular_module(&mg);
    let w = TopologicalCorrespondence { backward: FiniteMap { cod: n0, map: mg.g.rng.clone() }, family: fam.alpha_tilde.clone() };
    let vs = TopologicalCorrespondence { backward: FiniteMap::identity(n1), family: fam.alpha_tilde.clone() };
    let vr = TopologicalCorrespondence { backward: FiniteMap::identity(n1), family: fam.alpha.clone() };
    let (gamma_s, fp_s) = gamma_fibre(&vs, &w).expect("source fibre product");
    let (gamma_r, fp_r) = gamma_fibre(&vr, &w).expect("range fibre product");
    let iso = regular_iso(&mg);
    let delta = crate::measures::implied_delta(&iso.source, &iso.target, &iso.upsilon);
    debug_assert!(check_corr_isomorphism(&iso.source, &iso.target, &iso.upsilon, &delta, 1e-12).passed());
    // Υ_*: δ_p ↦ δ(Υp)^{-1/2} δ_{Υp}, between the fibre-product L² spaces.
    let src_l2 = l2(&fp_s.corr);
    let tgt_l2 = l2(&fp_r.corr);
    let mut trip = Vec::new();
    for (k, &(a, b)) in fp_s.pairs.iter().enumerate() {
        let p = mg.nerve.index(a, b).expect("fibre product point is a composable pair");
        let (ga, kb) = iso.target_pairs[iso.upsilon[p]];
        let q = fp_r.pairs.iter().position(|&x| x == (ga, kb)).expect("Υ lands in G¹ ×_{r,r} G¹");
        let row = tgt_l2.index[q].expect("positive weight");
        let col = src_l2.index[k].expect("positive weight");
        trip.push((row, col, C64::new(1.0 / delta[iso.upsilon[p]].sqrt(), 0.0)));
    }
    let ups = ModuleMap::from_triplets(src_l2.corr, tgt_l2.corr, trip).expect("Υ_* is right linear");
    let u = gamma_r.adjoint().compose(&ups).expect("Υ_* then γ_R⁻¹").compose(&gamma_s).expect("γ_S then Υ_*");
    Representation { mg, module, u }
}

/// `F ⊗ E` with `U' = assoc_R ∘ (U ⊗ 1_E) ∘ assoc_S⁻¹`.
pub fn induce(rep: &Representation, e: &Correspondence) -> Result<Representation, RepError> {
    let es = l2_source(&rep.mg);
    let er = l2_range(&rep.mg);
    let module = tensor(&rep.module, e)?.corr;
    let ue = tensor_maps(&rep.u, &ModuleMap::identity(e))?;
    let a_s = associator(&es, &rep.module, e)?;
    let a_r = associator(&er, &rep.module, e)?;
    let u = a_r.compose(&ue)?.compose(&a_s.adjoint())?;
    Ok(Representation { mg: rep.mg.clone(), module, u })
}

/// `1 ⊗ V: L²(G¹, s, α̃) ⊗ F₁ → L²(G¹, s, α̃) ⊗ F₂` (and likewise for `r`).
pub fn lift(mg: &MeasuredGroupoid, v: &ModuleMap, range_side: bool) -> Result<ModuleMap, RepError> {
    let e = if range_side { l2_range(mg) } else { l2_source(mg) };
    Ok(tensor_maps(&ModuleMap::identity(&e), v)?)
}

/// `V` is an isometry respecting the `G⁰`-grading with
/// `(1 ⊗ V) ∘ U₁ = U₂ ∘ (1 ⊗ V)`.
pub fn check_intertwiner(v: &ModuleMap, rep1: &Representation, rep2: &Representation, tol: f64) -> Report {
    let mut out = Report::new();
    out.push(Check::defect("V isometric", v.isometry_defect(), tol));
    let (d, _) = v.intertwining_defect();
    out.push(Check::defect("V respects the G⁰-grading", d, tol));
    if d > tol {
        out.push(Check::flag("(1⊗V)U₁ = U₂(1⊗V)", false).with_witness("V mixes objects"));
        return out;
    }
    let res: Result<f64, RepError> = (|| {
        let vs = lift(&rep1.mg, v, false)?;
        let vr = lift(&rep1.mg, v, true)?;
        let lhs = vr.compose(&rep1.u)?;
        let rhs = rep2.u.compose(&vs)?;
        Ok(lhs.distance(&rhs)?)
    })();
    match res {
        Ok(def) => out.push(Check::defect("(1⊗V)U₁ = U₂(1⊗V)", def, tol)),
        Err(e) => out.push(Check::flag("(1⊗V)U₁ = U₂(1⊗V)", false).with_witness(e.to_string())),
    }
    out
}

/// Per coefficient `w`: the objects with `H_{x,w} ≠ 0`, and whether
/// `{g : s(g) ∈ supp} = {g : r(g) ∈ supp}`.
pub fn invariant_support(rep: &Representation) -> (Vec<Vec<usize>>, Report) {
    let mg = &rep.mg;
    let mut out = Report::new();
    let mut supports = Vec::new();
    for w in 0..rep.n_coeff() {
        let supp: Vec<usize> = (0..mg.n_objects()).filter(|&x| rep.module.fiber_dim(x, w) > 0).collect();
        let bad = (0..mg.n_arrows()).find(|&g| supp.contains(&mg.g.src[g]) != supp.contains(&mg.g.rng[g]));
        let c = Check::flag(format!("support invariant (w={w})"), bad.is_none());
        out.push(match bad {
            Some(g) => c.with_witness(mg.g.arrow_ids[g].clone()),
            None => c,
        });
        supports.push(supp);
    }
    (supports, out)
}

/// Direct sum of two representations of the same groupoid over the same
/// coefficients; the second module's basis follows the first.
pub fn direct_sum(a: &Representation, b: &Representation) -> Result<Representation, RepError> {
    let fa = blockwise(a)?;
    let fb = blockwise(b)?;
    if a.module.n_right != b.module.n_right || a.module.n_left != b.module.n_left {
        return Err(HilbError::AlgebraMismatch { left: a.module.n_right, right: b.module.n_right }.into());
    }
    let mut basis = a.module.basis.clone();
    basis.extend(b.module.basis.iter().cloned());
    let module = Correspondence { n_left: a.module.n_left, n_right: a.module.n_right, basis };
    let blocks = fa
        .blocks
        .iter()
        .zip(&fb.blocks)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| crate::linalg::block_diag(&[p.clone(), q.clone()])).collect())
        .collect();
    from_cocycle(a.mg.clone(), module, &CocycleFamily { blocks })
}

/// Transport along a grading-preserving unitary `W: F → F'`:
/// `U' = (1 ⊗ W) U (1 ⊗ W)*`.
pub fn conjugate(rep: &Representation, w: &ModuleMap) -> Result<Representation, RepError> {
    let ws = lift(&rep.mg, w, false)?;
    let wr = lift(&rep.mg, w, true)?;
    let u = wr.compose(&rep.u)?.compose(&ws.adjoint())?;
    Ok(Representation { mg: rep.mg.clone(), module: w.target.clone(), u })
}

/// The canonical identification `L²(G¹, s, α̃) ⊗ F = L²(G¹, r, α) ⊗ F` for
/// groupoids of units, and the distance of `U` from it.
pub fn space_identity_defect(rep: &Representation) -> Result<f64, RepError> {
    let ident = ModuleMap {
        source: rep.u.source.clone(),
        target: rep.u.target.clone(),
        matrix: crate::hilbmod::sparse_identity(rep.u.source.dim()),
    };
    rep.u.target.compatible(&rep.u.source, 0.0)?;
    Ok(rep.u.distance(&ident)?)
}

/// A candidate with arbitrary grading-preserving blocks, for negative
/// tests: not necessarily a representation.
pub fn candidate(mg: Arc<MeasuredGroupoid>, module: Correspondence, blocks: Vec<Vec<CMat>>) -> Result<Representation, RepError> {
    from_cocycle(mg, module, &CocycleFamily { blocks })
}

/// Measure family of the module weights, for diagnostics.
pub fn module_family(rep: &Representation) -> MeasureFamily {
    MeasureFamily {
        along: FiniteMap { cod: rep.module.n_right, map: rep.module.basis.iter().map(|b| b.right).collect() },
        weight: rep.module.weights(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{c, cr, haar_unitary};
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;

    fn arc(mg: MeasuredGroupoid) -> Arc<MeasuredGroupoid> {
        Arc::new(mg)
    }

    #[test]
    fn regular_rep_passes_on_fixtures() {
        for mg in fixtures::all() {
            let rep = regular_representation(arc(mg));
            let r = check_representation(&rep, 1e-12);
            assert!(r.passed(), "{}: {r}", rep.mg.name);
        }
    }

    #[test]
    fn regular_rep_z2_shape_and_blocks() {
        let rep = regular_representation(arc(fixtures::z2()));
        assert_eq!(rep.module.dim(), 2);
        assert_eq!(rep.u.source.dim(), 4);
        let u = rep.u.dense();
        // permutation: one unit entry per row and column
        for i in 0..4 {
            assert_eq!((0..4).filter(|&j| u[(i, j)] == cr(1.0)).count(), 1);
        }
        let fam = blockwise(&rep).unwrap();
        let g = rep.mg.g.arrow_index("g").unwrap();
        let swap = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        assert_eq!(fam.blocks[g][0], swap);
    }

    #[test]
    fn regular_rep_p2_fibres_and_x2_identity() {
        let rep = regular_representation(arc(fixtures::p2()));
        for x in 0..2 {
            for w in 0..2 {
                assert_eq!(rep.module.fiber_dim(x, w), 1);
            }
        }
        let rep = regular_representation(arc(fixtures::x2()));
        assert_eq!(space_identity_defect(&rep).unwrap(), 0.0);
    }

    #[test]
    fn w2_trivial_cocycle_has_raw_block_one_half() {
        let mg = arc(fixtures::w2());
        let module = Correspondence::from_dims(&[vec![1], vec![1]]);
        let blocks = (0..4).map(|_| vec![CMat::identity(1, 1)]).collect();
        let rep = from_cocycle(mg.clone(), module, &CocycleFamily { blocks }).unwrap();
        assert!(check_representation(&rep, 1e-12).passed());
        let g = mg.g.arrow_index("(1,2)").unwrap();
        let s = rep.source_tensor().index(g, 1).unwrap();
        let r = rep.target_tensor().index(g, 0).unwrap();
        // √(α̃/α) = √(c(1)/c(2))
        assert_eq!(rep.u.dense()[(r, s)], cr(0.5));
    }

    #[test]
    fn blockwise_round_trip_exact() {
        let mut rng = SplitMix64::seed_from_u64(4);
        for mg in fixtures::all() {
            let rep = crate::random::random_representation(arc(mg), 2, &mut rng);
            let fam = blockwise(&rep).unwrap();
            assert!(fam.check(&rep.mg).passed());
            let back = from_cocycle(rep.mg.clone(), rep.module.clone(), &fam).unwrap();
            assert!(back.u.distance(&rep.u).unwrap() < 1e-12);
            let again = blockwise(&back).unwrap();
            for (x, y) in again.blocks.iter().flatten().zip(fam.blocks.iter().flatten()) {
                assert!(max_abs_diff(x, y) < 1e-14);
            }
        }
    }

    #[test]
    fn space_candidate_fails_unless_identity() {
        let mut rng = SplitMix64::seed_from_u64(2);
        let mg = arc(fixtures::x2());
        let module = Correspondence::from_dims(&[vec![2], vec![1]]);
        let blocks = vec![vec![haar_unitary(2, &mut rng)], vec![CMat::identity(1, 1)]];
        let rep = candidate(mg, module, blocks).unwrap();
        let r = check_representation(&rep, 1e-9);
        assert!(rep.u.is_unitary(1e-12));
        assert!(!r.get("cocycle d1*(U) = d2*(U)∘d0*(U)").unwrap().passed);
    }

    #[test]
    fn broken_cocycle_detected_on_z2() {
        let mg = arc(fixtures::z2());
        let module = Correspondence::from_dims(&[vec![1]]);
        // U_g = i is not a character of ℤ/2 (i² ≠ 1)
        let blocks = vec![vec![CMat::identity(1, 1)], vec![CMat::from_element(1, 1, c(0.0, 1.0))]];
        let rep = candidate(mg, module, blocks).unwrap();
        assert!(!check_representation(&rep, 1e-9).passed());
    }

    #[test]
    fn induce_identity_and_zero() {
        let rep = regular_representation(arc(fixtures::z2()));
        let same = induce(&rep, &Correspondence::identity_corr(1)).unwrap();
        assert!(same.u.distance(&rep.u).unwrap() < 1e-15);
        let zero = induce(&rep, &Correspondence::zero(1, 3)).unwrap();
        assert_eq!(zero.module.dim(), 0);
        assert!(check_representation(&zero, 1e-12).passed());
        // evaluation C(G⁰) → ℂ on the regular rep
        let ev = induce(&rep, &Correspondence::from_dims(&[vec![1]])).unwrap();
        assert!(check_representation(&ev, 1e-12).passed());
        assert_eq!(ev.module.dim(), 2);
    }

    #[test]
    fn intertwiner_examples() {
        let rep = regular_representation(arc(fixtures::z2()));
        assert!(check_intertwiner(&ModuleMap::identity(&rep.module), &rep, &rep, 1e-12).passed());
        let p = regular_representation(arc(fixtures::p2()));
        // swap the two object-1 basis vectors with the two object-2 ones
        let g = &p.mg.g;
        let one = cr(1.0);
        let swap_target = |h: usize| {
            let (i, j) = (g.rng[h], g.src[h]);
            (0..4).find(|&k| g.rng[k] == 1 - i && g.src[k] == j).unwrap()
        };
        let v = ModuleMap::from_triplets(p.module.clone(), p.module.clone(), (0..4).map(|h| (swap_target(h), h, one)));
        // weights are all 1 on P2, so this is unitary and right linear
        let v = v.unwrap();
        assert!(!check_intertwiner(&v, &p, &p, 1e-9).passed());
    }

    #[test]
    fn invariant_summand_inclusion_intertwines() {
        let mut rng = SplitMix64::seed_from_u64(8);
        let mg = arc(fixtures::p2());
        let a = crate::random::random_representation(mg.clone(), 1, &mut rng);
        let b = crate::random::random_representation(mg.clone(), 1, &mut rng);
        let sum = direct_sum(&a, &b).unwrap();
        let incl = ModuleMap::from_triplets(a.module.clone(), sum.module.clone(), (0..a.module.dim()).map(|i| (i, i, cr(1.0)))).unwrap();
        assert!(check_intertwiner(&incl, &a, &sum, 1e-10).passed());
    }

    #[test]
    fn support_examples() {
        let rep = regular_representation(arc(fixtures::p2()));
        let (s, r) = invariant_support(&rep);
        assert_eq!(s, vec![vec![0, 1], vec![0, 1]]);
        assert!(r.passed());
        // disjoint union of Z2 and X2, supported on the Z2 part only
        let g =
            crate::fingroupoid::build_preset(crate::fingroupoid::Preset::DisjointUnion(vec![fixtures::z2().g, fixtures::x2().g])).unwrap();
        let mg = arc(MeasuredGroupoid::counting("Z2+X2", g).unwrap());
        let module = Correspondence::from_dims(&[vec![1], vec![0], vec![0]]);
        let mut blocks: Vec<Vec<CMat>> = Vec::new();
        for k in 0..mg.n_arrows() {
            let x = mg.g.src[k];
            let d = module.fiber_dim(x, 0);
            blocks.push(vec![CMat::identity(d, d)]);
        }
        let rep = from_cocycle(mg, module, &CocycleFamily { blocks }).unwrap();
        assert!(check_representation(&rep, 1e-12).passed());
        let (s, r) = invariant_support(&rep);
        assert_eq!(s, vec![vec![0]]);
        assert!(r.passed());
    }

    #[test]
    fn one_sided_support_on_p2_fails_first() {
        let mg = arc(fixtures::p2());
        let module = Correspondence::from_dims(&[vec![1], vec![0]]);
        let blocks = (0..4)
            .map(|k| {
                let (r, s) = (mg.g.rng[k], mg.g.src[k]);
                vec![CMat::zeros(module.fiber_dim(r, 0), module.fiber_dim(s, 0))]
            })
            .collect();
        let rep = candidate(mg, module, blocks).unwrap();
        assert!(!check_representation(&rep, 1e-9).passed());
        assert!(!invariant_support(&rep).1.passed());
    }
}
