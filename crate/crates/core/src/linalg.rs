//! Dense complex linear algebra helpers.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`. Hermitian spectra are
//! computed with a cyclic Jacobi sweep on the real symmetric embedding
//! `[[Re, -Im], [Im, Re]]`, whose spectrum is that of the complex matrix
//! with every eigenvalue doubled.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Off-diagonal Frobenius threshold, relative to the Frobenius norm of the input.
pub const JACOBI_THRESHOLD: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entry modulus; zero for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `diag(left) · m · diag(right)`.
pub fn diag_scale(m: &CMat, left: &[f64], right: &[f64]) -> CMat {
    assert_eq!(m.nrows(), left.len());
    assert_eq!(m.ncols(), right.len());
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (left[i] * right[j]))
}

pub fn sqrt_all(w: &[f64]) -> Vec<f64> {
    w.iter().map(|x| x.sqrt()).collect()
}

pub fn inv_sqrt_all(w: &[f64]) -> Vec<f64> {
    w.iter().map(|x| 1.0 / x.sqrt()).collect()
}

/// Eigenvalues of a real symmetric matrix (row-major, `n*n`) by cyclic Jacobi.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>, EigenError> {
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0 {
        return Ok(Vec::new());
    }
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let target = JACOBI_THRESHOLD * frob.max(f64::MIN_POSITIVE);
    let mut residual = off(&a);
    let mut sweeps = 0;
    while residual > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(EigenError::NoConvergence { sweeps, residual });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cs * akp - sn * akq;
                    a[k * n + q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cs * apk - sn * aqk;
                    a[q * n + k] = sn * apk + cs * aqk;
                }
            }
        }
        sweeps += 1;
        residual = off(&a);
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eig)
}

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrised
/// (`(h + h†)/2`) before the solve.
pub fn hermitian_eigenvalues(h: &CMat) -> Result<Vec<f64>, EigenError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(EigenError::NotSquare { rows: n, cols: h.ncols() });
    }
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(a, m)?;
    // Each eigenvalue appears twice in the embedding.
    Ok(doubled.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Operator norm `‖m‖₂` as the square root of the top eigenvalue of `m†m`.
pub fn operator_norm(m: &CMat) -> Result<f64, EigenError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = if m.ncols() <= m.nrows() { m.adjoint() * m } else { m * m.adjoint() };
    let eig = hermitian_eigenvalues(&gram)?;
    Ok(eig.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Thin singular value decomposition `m = u · diag(s) · v†`, `s` descending.
/// Columns of `u` belonging to a zero singular value are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    pub fn recompose(&self) -> CMat {
        let mut us = self.u.clone();
        for (k, &s) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

/// One-sided (Hestenes) Jacobi SVD. Used instead of the library SVD, which
/// can return an inaccurate factorisation for complex matrices with
/// repeated singular values.
pub fn svd(m: &CMat) -> Result<Svd, EigenError> {
    if m.ncols() > m.nrows() {
        let t = svd(&m.adjoint())?;
        return Ok(Svd { u: t.v, s: t.s, v: t.u });
    }
    let (rows, n) = (m.nrows(), m.ncols());
    let mut w = m.clone();
    let mut v = identity(n);
    let mut sweeps = 0;
    loop {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let a = w.column(p).norm_squared();
                let b = w.column(q).norm_squared();
                let g = w.column(p).dotc(&w.column(q));
                let gn = g.norm();
                if gn == 0.0 || gn <= f64::EPSILON * (a * b).sqrt() {
                    continue;
                }
                off = off.max(gn / (a * b).sqrt());
                let phase = g / gn;
                let zeta = (b - a) / (2.0 * gn);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // [x_p, x_q] ← [x_p, x_q]·[[c, s·e^{iφ}], [−s·e^{−iφ}, c]]
                for x in [&mut w, &mut v] {
                    for i in 0..x.nrows() {
                        let (xp, xq) = (x[(i, p)], x[(i, q)]);
                        x[(i, p)] = xp * c - xq * phase.conj() * s;
                        x[(i, q)] = xp * phase * s + xq * c;
                    }
                }
            }
        }
        sweeps += 1;
        if off <= 1e-15 {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(EigenError::NoConvergence { sweeps, residual: off });
        }
    }
    let mut order: Vec<(usize, f64)> = (0..n).map(|j| (j, w.column(j).norm())).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut u = zeros(rows, n);
    let mut vs = zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &(j, sj)) in order.iter().enumerate() {
        if sj > 0.0 {
            u.set_column(k, &(w.column(j) / cr(sj)));
        }
        vs.set_column(k, &v.column(j));
        s.push(sj);
    }
    Ok(Svd { u, s, v: vs })
}

/// Numerical rank with singular values above `tol · σ_max` (and above `tol`).
pub fn rank(m: &CMat, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = svd(m).expect("Jacobi SVD converges").s;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * smax.max(1.0)).count()
}

/// Moore–Penrose pseudo-inverse with relative cutoff `tol`.
pub fn pinv(m: &CMat, tol: f64) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return zeros(m.ncols(), m.nrows());
    }
    let d = svd(m).expect("Jacobi SVD converges");
    let smax = d.s.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax.max(1.0);
    let mut out = zeros(m.ncols(), m.nrows());
    for (k, &s) in d.s.iter().enumerate() {
        if s > cut {
            out += (d.v.column(k) * d.u.column(k).adjoint()) * cr(1.0 / s);
        }
    }
    out
}

/// Orthonormal basis of the column span, by modified Gram–Schmidt with one
/// re-orthogonalisation pass. Columns whose residual norm is below `tol`
/// (relative to the largest column norm) are skipped, so the output order
/// follows the first independent columns of the input.
pub fn orthonormal_columns(m: &CMat, tol: f64) -> CMat {
    let scale = (0..m.ncols()).map(|j| m.column(j).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let n = v.norm();
        if n > tol * scale {
            basis.push(v / cr(n));
        }
    }
    let mut out = zeros(m.nrows(), basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Deviation of `m` from being unitary: `max(|m†m − 1|, |mm† − 1|)`.
pub fn unitarity_defect(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let id = identity(n);
    max_abs_diff(&(m.adjoint() * m), &id).max(max_abs_diff(&(m * m.adjoint()), &id))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix, with the
/// phases of `R`'s diagonal moved into `Q` so that `R` has a positive
/// diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    if n == 0 {
        return zeros(0, 0);
    }
    let z = gaussian_matrix(n, n, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / cr(d.norm()) } else { cr(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Block-diagonal sum of square or rectangular blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;

    #[test]
    fn jacobi_on_all_ones() {
        let m = CMat::from_element(2, 2, cr(1.0));
        let eig = hermitian_eigenvalues(&m).unwrap();
        assert!((eig[0]).abs() < 1e-12);
        assert!((eig[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_nalgebra_on_random_hermitian() {
        let mut rng = SplitMix64::seed_from_u64(3);
        let g = gaussian_matrix(5, 5, &mut rng);
        let h = &g + g.adjoint();
        let ours = hermitian_eigenvalues(&h).unwrap();
        let mut theirs: Vec<f64> = h.clone().symmetric_eigenvalues().iter().cloned().collect();
        theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ours.iter().zip(theirs.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn operator_norm_of_rectangular() {
        let m = CMat::from_row_slice(1, 2, &[cr(3.0), cr(4.0)]);
        assert!((operator_norm(&m).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        let mut a = SplitMix64::seed_from_u64(11);
        let mut b = SplitMix64::seed_from_u64(11);
        let u = haar_unitary(4, &mut a);
        let v = haar_unitary(4, &mut b);
        assert!(unitarity_defect(&u) < 1e-12);
        assert_eq!(u, v);
    }

    #[test]
    fn svd_with_repeated_singular_values() {
        // wide complex, every singular value threefold
        let mut rng = SplitMix64::seed_from_u64(17);
        let u = haar_unitary(6, &mut rng);
        let w = haar_unitary(40, &mut rng);
        let mut sigma = zeros(6, 40);
        for (k, s) in [5.0, 5.0, 5.0, 0.5, 0.5, 0.5].into_iter().enumerate() {
            sigma[(k, k)] = cr(s);
        }
        let m = &u * sigma * &w;
        let d = svd(&m).unwrap();
        assert!(max_abs_diff(&d.recompose(), &m) < 1e-13);
        assert!(unitarity_defect(&d.u) < 1e-13);
        assert!(max_abs_diff(&(d.v.adjoint() * &d.v), &identity(6)) < 1e-13);
        for (got, want) in d.s.iter().zip([5.0, 5.0, 5.0, 0.5, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-13);
        }
        assert!(max_abs_diff(&(&m * pinv(&m, 1e-12)), &identity(6)) < 1e-13);
        assert_eq!(rank(&m, 1e-9), 6);
    }

    #[test]
    fn svd_rank_deficient_tall() {
        let mut rng = SplitMix64::seed_from_u64(19);
        let a = gaussian_matrix(7, 2, &mut rng);
        let b = gaussian_matrix(2, 4, &mut rng);
        let m = a * b;
        let d = svd(&m).unwrap();
        assert!(max_abs_diff(&d.recompose(), &m) < 1e-12);
        assert!(d.s[2] < 1e-12 && d.s[3] < 1e-12);
        assert_eq!(rank(&m, 1e-9), 2);
        let p = pinv(&m, 1e-9);
        assert!(max_abs_diff(&(&m * &p * &m), &m) < 1e-12);
        let eig = hermitian_eigenvalues(&(m.adjoint() * &m)).unwrap();
        assert!((eig[3].sqrt() - d.s[0]).abs() < 1e-10);
    }

    #[test]
    fn pinv_solves_full_rank_system() {
        let mut rng = SplitMix64::seed_from_u64(5);
        let a = gaussian_matrix(4, 6, &mut rng);
        let x = gaussian_matrix(3, 4, &mut rng);
        let b = &x * &a;
        let solved = &b * pinv(&a, 1e-12);
        assert!(max_abs_diff(&solved, &x) < 1e-10);
    }

    #[test]
    fn gram_schmidt_keeps_coordinate_vectors() {
        let mut m = zeros(3, 3);
        m[(1, 0)] = cr(1.0);
        m[(1, 1)] = cr(2.0);
        m[(2, 2)] = cr(1.0);
        let q = orthonormal_columns(&m, 1e-10);
        assert_eq!(q.ncols(), 2);
        assert_eq!(q[(1, 0)], cr(1.0));
        assert_eq!(q[(2, 1)], cr(1.0));
    }
}
