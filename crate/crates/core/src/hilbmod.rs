//! Correspondences between finite commutative C*-algebras.
//!
//! A `C(Z)`–`C(Y)`-correspondence is stored in graded normal form: a
//! list of mutually orthogonal basis vectors, each carrying a left label
//! `z`, a right label `y` and a squared norm. The fibre `H_{z,y}` is the
//! span of the vectors with those labels. Module maps are sparse matrices
//! in these bases; right linearity means entries only between equal right
//! labels, intertwining means entries only between equal left labels.

use crate::linalg::{CMat, C64};
use crate::measures::{compose_families, fibre_product, FibreProduct, FiniteMap, MeasureFamily, TopologicalCorrespondence};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub type SMat = CsrMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbError {
    #[error("coefficient algebras differ: {left} points vs {right} points")]
    AlgebraMismatch { left: usize, right: usize },
    #[error("matrix is {rows}x{cols}, expected {exp_rows}x{exp_cols}")]
    Shape { rows: usize, cols: usize, exp_rows: usize, exp_cols: usize },
    #[error("entry ({row},{col}) mixes right labels {target_label} and {source_label}")]
    NotRightLinear { row: usize, col: usize, target_label: usize, source_label: usize },
    #[error("correspondences do not match: {0}")]
    Incompatible(String),
    #[error("tensor of maps is not balanced: image of ({0},{1}) leaves the tensor product")]
    Unbalanced(usize, usize),
    #[error("element has {found} coordinates, module has dimension {expected}")]
    ElementLength { expected: usize, found: usize },
    #[error("internal: point {0} present in the tensor product but not in the composite")]
    SupportMismatch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisVector {
    pub left: usize,
    pub right: usize,
    /// `⟨e, e⟩`, strictly positive.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub n_left: usize,
    pub n_right: usize,
    pub basis: Vec<BasisVector>,
}

impl Correspondence {
    pub fn zero(n_left: usize, n_right: usize) -> Self {
        Correspondence { n_left, n_right, basis: Vec::new() }
    }

    /// Orthonormal basis with `dims[z][y]` vectors in `H_{z,y}`, ordered
    /// by `z`, then `y`.
    pub fn from_dims(dims: &[Vec<usize>]) -> Self {
        let n_left = dims.len();
        let n_right = dims.first().map_or(0, |r| r.len());
        let mut basis = Vec::new();
        for (z, row) in dims.iter().enumerate() {
            assert_eq!(row.len(), n_right, "ragged dimension table");
            for (y, &d) in row.iter().enumerate() {
                for _ in 0..d {
                    basis.push(BasisVector { left: z, right: y, weight: 1.0 });
                }
            }
        }
        Correspondence { n_left, n_right, basis }
    }

    /// `C(Y)` as a correspondence over itself.
    pub fn identity_corr(n: usize) -> Self {
        Correspondence { n_left: n, n_right: n, basis: (0..n).map(|y| BasisVector { left: y, right: y, weight: 1.0 }).collect() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.basis.iter().map(|b| b.weight).collect()
    }

    pub fn fiber(&self, z: usize, y: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.basis[i].left == z && self.basis[i].right == y).collect()
    }

    pub fn fiber_dim(&self, z: usize, y: usize) -> usize {
        self.basis.iter().filter(|b| b.left == z && b.right == y).count()
    }

    /// `⟨ξ, η⟩(y) = Σ_{right(i)=y} conj(ξ_i)·η_i·w_i`.
    pub fn inner(&self, xi: &[C64], eta: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_right];
        for (i, b) in self.basis.iter().enumerate() {
            out[b.right] += xi[i].conj() * eta[i] * b.weight;
        }
        out
    }

    /// Same labels and weights within relative `tol`.
    pub fn compatible(&self, other: &Correspondence, tol: f64) -> Result<(), HilbError> {
        if self.n_left != other.n_left || self.n_right != other.n_right || self.dim() != other.dim() {
            return Err(HilbError::Incompatible(format!(
                "({} , {}, dim {}) vs ({}, {}, dim {})",
                self.n_left,
                self.n_right,
                self.dim(),
                other.n_left,
                other.n_right,
                other.dim()
            )));
        }
        for (i, (a, b)) in self.basis.iter().zip(&other.basis).enumerate() {
            if a.left != b.left || a.right != b.right || (a.weight - b.weight).abs() > tol * a.weight.max(b.weight) {
                return Err(HilbError::Incompatible(format!("basis vector {i}: {a:?} vs {b:?}")));
            }
        }
        Ok(())
    }
}

/// `b*L²(X, f, λ)`: basis `δ_x` for points of positive weight, with left
/// label `b(x)`, right label `f(x)` and `⟨δ_x, δ_x⟩ = λ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2 {
    pub corr: Correspondence,
    /// Basis vector `k` is `δ_{points[k]}`.
    pub points: Vec<usize>,
    /// Inverse of `points`; `None` for null points.
    pub index: Vec<Option<usize>>,
}

pub fn l2(tc: &TopologicalCorrespondence) -> L2 {
    let mut basis = Vec::new();
    let mut points = Vec::new();
    let mut index = vec![None; tc.space()];
    for x in 0..tc.space() {
        let w = tc.weight(x);
        if w > 0.0 {
            index[x] = Some(basis.len());
            points.push(x);
            basis.push(BasisVector { left: tc.backward.map[x], right: tc.forward().map[x], weight: w });
        }
    }
    L2 { corr: Correspondence { n_left: tc.backward.cod, n_right: tc.forward().cod, basis }, points, index }
}

/// `L²(X, f, λ)` with the identity left grading by `X`.
pub fn l2_family(fam: &MeasureFamily) -> L2 {
    l2(&TopologicalCorrespondence { backward: FiniteMap::identity(fam.along.dom()), family: fam.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub corr: Correspondence,
    /// Basis vector `k` is `e_i ⊗ f_j` with `pairs[k] = (i, j)`.
    pub pairs: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
}

impl Tensor {
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.index.get(&(i, j)).copied()
    }
}

/// `E ⊗_B F = ⊕_b E_{·,b} ⊗ F_{b,·}`, ordered by the `E` index, then `F`.
pub fn tensor(e: &Correspondence, f: &Correspondence) -> Result<Tensor, HilbError> {
    if e.n_right != f.n_left {
        return Err(HilbError::AlgebraMismatch { left: e.n_right, right: f.n_left });
    }
    let mut by_left = vec![Vec::new(); f.n_left];
    for (j, b) in f.basis.iter().enumerate() {
        by_left[b.left].push(j);
    }
    let mut basis = Vec::new();
    let mut pairs = Vec::new();
    let mut index = HashMap::new();
    for (i, a) in e.basis.iter().enumerate() {
        for &j in &by_left[a.right] {
            let b = f.basis[j];
            index.insert((i, j), pairs.len());
            pairs.push((i, j));
            basis.push(BasisVector { left: a.left, right: b.right, weight: a.weight * b.weight });
        }
    }
    Ok(Tensor { corr: Correspondence { n_left: e.n_left, n_right: f.n_right, basis }, pairs, index })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleMap {
    pub source: Correspondence,
    pub target: Correspondence,
    /// `target.dim() × source.dim()`.
    pub matrix: SMat,
}

fn csr_from_triplets(rows: usize, cols: usize, t: impl IntoIterator<Item = (usize, usize, C64)>) -> SMat {
    let mut coo = CooMatrix::new(rows, cols);
    for (i, j, v) in t {
        if v != C64::new(0.0, 0.0) {
            coo.push(i, j, v);
        }
    }
    CsrMatrix::from(&coo)
}

fn max_abs_values(m: &SMat) -> f64 {
    m.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `max |a − b|` over all entries.
pub fn sparse_max_diff(a: &SMat, b: &SMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    max_abs_values(&(a - b))
}

pub fn sparse_identity(n: usize) -> SMat {
    csr_from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))))
}

pub fn sparse_adjoint(m: &SMat) -> SMat {
    let mut t = m.transpose();
    for v in t.values_mut() {
        *v = v.conj();
    }
    t
}

fn sparse_to_dense(m: &SMat) -> CMat {
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.triplet_iter() {
        out[(i, j)] += *v;
    }
    out
}

impl ModuleMap {
    /// Checks shape and right linearity.
    pub fn new(source: Correspondence, target: Correspondence, matrix: SMat) -> Result<Self, HilbError> {
        if matrix.nrows() != target.dim() || matrix.ncols() != source.dim() {
            return Err(HilbError::Shape { rows: matrix.nrows(), cols: matrix.ncols(), exp_rows: target.dim(), exp_cols: source.dim() });
        }
        if source.n_right != target.n_right {
            return Err(HilbError::AlgebraMismatch { left: source.n_right, right: target.n_right });
        }
        for (i, j, v) in matrix.triplet_iter() {
            if *v != C64::new(0.0, 0.0) && target.basis[i].right != source.basis[j].right {
                return Err(HilbError::NotRightLinear {
                    row: i,
                    col: j,
                    target_label: target.basis[i].right,
                    source_label: source.basis[j].right,
                });
            }
        }
        Ok(ModuleMap { source, target, matrix })
    }

    pub fn from_triplets(
        source: Correspondence,
        target: Correspondence,
        t: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self, HilbError> {
        let m = csr_from_triplets(target.dim(), source.dim(), t);
        ModuleMap::new(source, target, m)
    }

    pub fn from_dense(source: Correspondence, target: Correspondence, m: &CMat) -> Result<Self, HilbError> {
        if m.nrows() != target.dim() || m.ncols() != source.dim() {
            return Err(HilbError::Shape { rows: m.nrows(), cols: m.ncols(), exp_rows: target.dim(), exp_cols: source.dim() });
        }
        let t: Vec<_> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)])).collect();
        ModuleMap::from_triplets(source, target, t)
    }

    pub fn identity(c: &Correspondence) -> Self {
        ModuleMap { source: c.clone(), target: c.clone(), matrix: sparse_identity(c.dim()) }
    }

    pub fn zero(source: Correspondence, target: Correspondence) -> Self {
        let m = SMat::zeros(target.dim(), source.dim());
        ModuleMap { source, target, matrix: m }
    }

    pub fn dense(&self) -> CMat {
        sparse_to_dense(&self.matrix)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.source.dim());
        let mut out = vec![C64::new(0.0, 0.0); self.target.dim()];
        for (i, j, a) in self.matrix.triplet_iter() {
            out[i] += a * v[j];
        }
        out
    }

    /// `self ∘ other`; `other.target` must match `self.source` (weights to
    /// relative 1e-12).
    pub fn compose(&self, other: &ModuleMap) -> Result<ModuleMap, HilbError> {
        other.target.compatible(&self.source, 1e-12)?;
        Ok(ModuleMap { source: other.source.clone(), target: self.target.clone(), matrix: &self.matrix * &other.matrix })
    }

    /// Adjoint for the weighted inner products: `D_s⁻¹ M† D_t`.
    pub fn adjoint(&self) -> ModuleMap {
        let mut m = sparse_adjoint(&self.matrix);
        let ws = self.source.weights();
        let wt = self.target.weights();
        for (i, j, v) in m.triplet_iter_mut() {
            *v *= wt[j] / ws[i];
        }
        ModuleMap { source: self.target.clone(), target: self.source.clone(), matrix: m }
    }

    /// `D_t^{1/2} M D_s^{-1/2}`: the matrix in orthonormal coordinates.
    pub fn normalized(&self) -> SMat {
        let mut m = self.matrix.clone();
        let ws = self.source.weights();
        let wt = self.target.weights();
        for (i, j, v) in m.triplet_iter_mut() {
            *v *= (wt[i] / ws[j]).sqrt();
        }
        m
    }

    pub fn normalized_dense(&self) -> CMat {
        sparse_to_dense(&self.normalized())
    }

    /// `max(|N†N − 1|, |NN† − 1|)` in orthonormal coordinates; infinite for
    /// different dimensions.
    pub fn unitarity_defect(&self) -> f64 {
        if self.source.dim() != self.target.dim() {
            return f64::INFINITY;
        }
        let n = self.normalized();
        let na = sparse_adjoint(&n);
        let id = sparse_identity(self.source.dim());
        sparse_max_diff(&(&na * &n), &id).max(sparse_max_diff(&(&n * &na), &id))
    }

    /// `|N†N − 1|` in orthonormal coordinates.
    pub fn isometry_defect(&self) -> f64 {
        let n = self.normalized();
        let na = sparse_adjoint(&n);
        sparse_max_diff(&(&na * &n), &sparse_identity(self.source.dim()))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Largest normalized entry between different left labels, with its
    /// position.
    pub fn intertwining_defect(&self) -> (f64, Option<(usize, usize)>) {
        let mut worst = (0.0, None);
        for (i, j, v) in self.normalized().triplet_iter() {
            if self.target.basis[i].left != self.source.basis[j].left && v.norm() > worst.0 {
                worst = (v.norm(), Some((i, j)));
            }
        }
        worst
    }

    pub fn is_intertwiner(&self, tol: f64) -> bool {
        self.source.n_left == self.target.n_left && self.intertwining_defect().0 <= tol
    }

    /// Normalized max-norm distance to a map between the same modules.
    pub fn distance(&self, other: &ModuleMap) -> Result<f64, HilbError> {
        self.source.compatible(&other.source, 1e-12)?;
        self.target.compatible(&other.target, 1e-12)?;
        Ok(sparse_max_diff(&self.normalized(), &other.normalized()))
    }

    /// `max |⟨m e_i, e_j⟩ − ⟨e_i, m* e_j⟩|` over basis pairs, relative to
    /// the weights involved.
    pub fn adjoint_identity_defect(&self) -> f64 {
        let m = self.dense();
        let a = self.adjoint().dense();
        let ws = self.source.weights();
        let wt = self.target.weights();
        let mut d: f64 = 0.0;
        for i in 0..self.source.dim() {
            for j in 0..self.target.dim() {
                let lhs = m[(j, i)].conj() * wt[j];
                let rhs = a[(i, j)] * ws[i];
                d = d.max((lhs - rhs).norm() / (wt[j] * ws[i]).sqrt());
            }
        }
        d
    }

    pub fn scale(&self, s: C64) -> ModuleMap {
        let mut m = self.matrix.clone();
        for v in m.values_mut() {
            *v *= s;
        }
        ModuleMap { source: self.source.clone(), target: self.target.clone(), matrix: m }
    }

    pub fn add(&self, other: &ModuleMap) -> Result<ModuleMap, HilbError> {
        self.source.compatible(&other.source, 1e-12)?;
        self.target.compatible(&other.target, 1e-12)?;
        Ok(ModuleMap { source: self.source.clone(), target: self.target.clone(), matrix: &self.matrix + &other.matrix })
    }
}

fn columns(m: &SMat) -> Vec<Vec<(usize, C64)>> {
    let mut cols = vec![Vec::new(); m.ncols()];
    for (i, j, v) in m.triplet_iter() {
        cols[j].push((i, *v));
    }
    cols
}

/// `a ⊗ b` between the tensor products of sources and of targets. Fails
/// if some image leaves the balanced tensor product, i.e. `b` does not
/// respect the left grading where `a` needs it.
pub fn tensor_maps(a: &ModuleMap, b: &ModuleMap) -> Result<ModuleMap, HilbError> {
    let src = tensor(&a.source, &b.source)?;
    let tgt = tensor(&a.target, &b.target)?;
    let ac = columns(&a.matrix);
    let bc = columns(&b.matrix);
    let mut t = Vec::new();
    for (k, &(i, j)) in src.pairs.iter().enumerate() {
        for &(i2, va) in &ac[i] {
            for &(j2, vb) in &bc[j] {
                match tgt.index(i2, j2) {
                    Some(row) => t.push((row, k, va * vb)),
                    None => return Err(HilbError::Unbalanced(i, j)),
                }
            }
        }
    }
    ModuleMap::from_triplets(src.corr, tgt.corr, t)
}

/// `(E ⊗ F) ⊗ H → E ⊗ (F ⊗ H)`.
pub fn associator(e: &Correspondence, f: &Correspondence, h: &Correspondence) -> Result<ModuleMap, HilbError> {
    let ef = tensor(e, f)?;
    let left = tensor(&ef.corr, h)?;
    let fh = tensor(f, h)?;
    let right = tensor(e, &fh.corr)?;
    let mut t = Vec::with_capacity(left.pairs.len());
    for (k, &(ij, l)) in left.pairs.iter().enumerate() {
        let (i, j) = ef.pairs[ij];
        let jl = fh.index(j, l).expect("f ⊗ h pair");
        let row = right.index(i, jl).expect("e ⊗ (f ⊗ h) pair");
        t.push((row, k, C64::new(1.0, 0.0)));
    }
    ModuleMap::from_triplets(left.corr, right.corr, t)
}

/// The canonical unitary `b*L²(X,f,λ) ⊗ L²(Y,g,μ) ≅ b*L²(X, g∘f, μ∘λ)`,
/// `δ_x ⊗ δ_{f(x)} ↦ δ_x` rescaled to preserve inner products.
pub fn gamma_compose(b: &FiniteMap, lambda: &MeasureFamily, mu: &MeasureFamily) -> Result<ModuleMap, HilbError> {
    let e = l2(&TopologicalCorrespondence { backward: b.clone(), family: lambda.clone() });
    let f = l2_family(mu);
    let composite = compose_families(lambda, mu).map_err(|err| HilbError::Incompatible(err.to_string()))?;
    let tgt = l2(&TopologicalCorrespondence { backward: b.clone(), family: composite });
    let src = tensor(&e.corr, &f.corr)?;
    let mut t = Vec::new();
    for (k, &(i, _)) in src.pairs.iter().enumerate() {
        let x = e.points[i];
        let row = tgt.index[x].ok_or(HilbError::SupportMismatch(x))?;
        let s = (src.corr.basis[k].weight / tgt.corr.basis[row].weight).sqrt();
        t.push((row, k, C64::new(s, 0.0)));
    }
    if src.pairs.len() != tgt.points.len() {
        let missing = tgt.points.iter().find(|&&x| !src.pairs.iter().any(|&(i, _)| e.points[i] == x)).copied();
        return Err(HilbError::SupportMismatch(missing.unwrap_or(0)));
    }
    ModuleMap::from_triplets(src.corr, tgt.corr, t)
}

/// The canonical unitary `b_V*L²(V) ⊗ b_W*L²(W) ≅ b*L²(V ×_Y W)`.
pub fn gamma_fibre(v: &TopologicalCorrespondence, w: &TopologicalCorrespondence) -> Result<(ModuleMap, FibreProduct), HilbError> {
    let lv = l2(v);
    let lw = l2(w);
    let fp = fibre_product(v, w).map_err(|err| HilbError::Incompatible(err.to_string()))?;
    let tgt = l2(&fp.corr);
    let pos: HashMap<(usize, usize), usize> = fp.pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let src = tensor(&lv.corr, &lw.corr)?;
    let mut t = Vec::new();
    for (k, &(i, j)) in src.pairs.iter().enumerate() {
        let p = pos[&(lv.points[i], lw.points[j])];
        let row = tgt.index[p].ok_or(HilbError::SupportMismatch(p))?;
        let s = (src.corr.basis[k].weight / tgt.corr.basis[row].weight).sqrt();
        t.push((row, k, C64::new(s, 0.0)));
    }
    if src.pairs.len() != tgt.points.len() {
        return Err(HilbError::SupportMismatch(tgt.points.len()));
    }
    Ok((ModuleMap::from_triplets(src.corr, tgt.corr, t)?, fp))
}

/// `T_x: F → E ⊗ F`, `η ↦ x ⊗ η`. The adjoint is `ModuleMap::adjoint`,
/// i.e. `z ⊗ η ↦ ⟨x, z⟩·η`.
pub fn creation(e: &Correspondence, f: &Correspondence, x: &[C64]) -> Result<ModuleMap, HilbError> {
    if x.len() != e.dim() {
        return Err(HilbError::ElementLength { expected: e.dim(), found: x.len() });
    }
    let t = tensor(e, f)?;
    let mut trip = Vec::new();
    for (k, &(i, j)) in t.pairs.iter().enumerate() {
        trip.push((k, j, x[i]));
    }
    ModuleMap::from_triplets(f.clone(), t.corr, trip)
}

/// Binary dump of a dense matrix: row-major, interleaved re/im,
/// little-endian `f64`.
pub fn dump_bytes(m: &CMat) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
    out
}

pub fn undump_bytes(bytes: &[u8], rows: usize, cols: usize) -> Option<CMat> {
    if bytes.len() != 16 * rows * cols {
        return None;
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    Some(CMat::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        C64::new(f(k), f(k + 1))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
    pub cols: usize,
    pub layout: String,
}

impl DumpEntry {
    pub fn new(name: &str, m: &CMat) -> Self {
        DumpEntry {
            name: name.to_string(),
            file: format!("{name}.bin"),
            rows: m.nrows(),
            cols: m.ncols(),
            layout: "row-major interleaved re/im f64 little-endian".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{gaussian_matrix, max_abs_diff};
    use crate::measures::groupoid_families;
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;

    fn left_regular(mg: &crate::MeasuredGroupoid) -> L2 {
        // (G¹, r, s, α̃)
        let fam = groupoid_families(mg);
        l2(&TopologicalCorrespondence::new(FiniteMap { cod: mg.n_objects(), map: mg.g.rng.clone() }, fam.alpha_tilde).unwrap())
    }

    #[test]
    fn l2_of_left_regular() {
        let z = left_regular(&fixtures::z2());
        assert_eq!(z.corr.fiber_dim(0, 0), 2);
        let p = fixtures::p2();
        let lp = left_regular(&p);
        for i in 0..2 {
            for j in 0..2 {
                let brute = (0..4).filter(|&k| p.g.rng[k] == i && p.g.src[k] == j).count();
                assert_eq!(lp.corr.fiber_dim(i, j), brute);
                assert_eq!(brute, 1);
            }
        }
    }

    #[test]
    fn l2_drops_null_points() {
        let fam = MeasureFamily::new(FiniteMap::new(1, vec![0, 0, 0]).unwrap(), vec![1.0, 0.0, 2.0]).unwrap();
        let l = l2_family(&fam);
        assert_eq!(l.corr.dim(), 2);
        assert_eq!(l.index[1], None);
    }

    #[test]
    fn tensor_dimensions() {
        for mg in [fixtures::z2(), fixtures::p2()] {
            let fam = groupoid_families(&mg);
            let e = l2_family(&fam.alpha_tilde);
            let f = left_regular(&mg);
            let t = tensor(&e.corr, &f.corr).unwrap();
            let brute: usize = (0..mg.n_objects())
                .map(|b| e.corr.basis.iter().filter(|v| v.right == b).count() * f.corr.basis.iter().filter(|v| v.left == b).count())
                .sum();
            assert_eq!(t.corr.dim(), brute);
            // the tensor is L² of the composable pairs
            assert_eq!(t.corr.dim(), mg.nerve.n_pairs());
        }
        let e = Correspondence::from_dims(&[vec![2]]);
        let z = Correspondence::zero(1, 3);
        assert_eq!(tensor(&e, &z).unwrap().corr.dim(), 0);
    }

    #[test]
    fn gamma_compose_unitary_on_w2_triangle() {
        let mg = fixtures::w2();
        let fam = groupoid_families(&mg);
        let n2 = mg.nerve.n_pairs();
        let g = gamma_compose(&FiniteMap::identity(n2), &fam.lambda[1], &fam.alpha).unwrap();
        assert!(g.unitarity_defect() < 1e-12);
        assert!(g.target.compatible(&l2_family(&fam.mu[0]).corr, 0.0).is_ok());
    }

    #[test]
    fn gamma_compose_with_collapsed_fibre() {
        let lam = MeasureFamily::new(FiniteMap::new(2, vec![0, 1, 1]).unwrap(), vec![1.0, 2.0, 3.0]).unwrap();
        let mu = MeasureFamily::new(FiniteMap::new(1, vec![0, 0]).unwrap(), vec![0.0, 5.0]).unwrap();
        let g = gamma_compose(&FiniteMap::identity(3), &lam, &mu).unwrap();
        assert_eq!(g.source.dim(), 2);
        assert!(g.unitarity_defect() < 1e-12);
    }

    #[test]
    fn gamma_fibre_left_regular_source() {
        for mg in [fixtures::z2(), fixtures::w2()] {
            let fam = groupoid_families(&mg);
            let n1 = mg.n_arrows();
            let v = TopologicalCorrespondence::new(FiniteMap::identity(n1), fam.alpha_tilde.clone()).unwrap();
            let w =
                TopologicalCorrespondence::new(FiniteMap { cod: mg.n_objects(), map: mg.g.rng.clone() }, fam.alpha_tilde.clone()).unwrap();
            let (m, fp) = gamma_fibre(&v, &w).unwrap();
            assert_eq!(fp.pairs.len(), mg.nerve.n_pairs());
            assert!(m.unitarity_defect() < 1e-12, "{}", mg.name);
        }
    }

    #[test]
    fn creation_adjoint_identity() {
        let mut rng = SplitMix64::seed_from_u64(9);
        let mg = fixtures::w2();
        let fam = groupoid_families(&mg);
        let e = l2_family(&fam.alpha_tilde).corr;
        let f = left_regular(&mg).corr;
        let x: Vec<C64> = gaussian_matrix(e.dim(), 1, &mut rng).iter().cloned().collect();
        let t = creation(&e, &f, &x).unwrap();
        assert!(t.adjoint_identity_defect() < 1e-12);
        // T_x* T_x = ⟨x,x⟩ acting on F through the left grading.
        let tt = t.adjoint().compose(&t).unwrap().dense();
        let ip = e.inner(&x, &x);
        let expect = CMat::from_fn(f.dim(), f.dim(), |i, j| if i == j { ip[f.basis[i].left] } else { C64::new(0.0, 0.0) });
        assert!(max_abs_diff(&tt, &expect) < 1e-12);
    }

    #[test]
    fn creation_of_unit_is_inclusion() {
        let mg = fixtures::z2();
        let fam = groupoid_families(&mg);
        let e = l2_family(&fam.alpha_tilde).corr;
        let f = Correspondence::from_dims(&[vec![1]]);
        let t = creation(&e, &f, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        assert_eq!(t.dense(), CMat::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]));
    }

    #[test]
    fn swap_is_unitary_but_not_intertwiner() {
        let c = Correspondence::from_dims(&[vec![1], vec![1]]);
        let one = C64::new(1.0, 0.0);
        let m = ModuleMap::from_triplets(c.clone(), c.clone(), [(0, 1, one), (1, 0, one)]).unwrap();
        assert!(m.is_unitary(1e-12));
        assert!(!m.is_intertwiner(1e-12));
        let id = ModuleMap::identity(&c);
        assert!(id.is_unitary(0.0) && id.is_intertwiner(0.0));
    }

    #[test]
    fn right_linearity_enforced() {
        let c = Correspondence::from_dims(&[vec![1, 1]]);
        let one = C64::new(1.0, 0.0);
        assert!(matches!(ModuleMap::from_triplets(c.clone(), c, [(0, 1, one)]), Err(HilbError::NotRightLinear { .. })));
    }

    #[test]
    fn associator_is_unitary() {
        let mg = fixtures::w2();
        let fam = groupoid_families(&mg);
        let e = l2_family(&fam.alpha_tilde).corr;
        let f = left_regular(&mg).corr;
        let h = Correspondence::from_dims(&[vec![1, 2], vec![0, 1]]);
        let a = associator(&e, &f, &h).unwrap();
        assert!(a.unitarity_defect() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let mut rng = SplitMix64::seed_from_u64(1);
        let m = gaussian_matrix(3, 2, &mut rng);
        let b = dump_bytes(&m);
        assert_eq!(b.len(), 96);
        assert_eq!(undump_bytes(&b, 3, 2).unwrap(), m);
    }
}
