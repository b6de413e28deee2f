//! Dense complex Hermitian linear algebra.
//!
//! Eigendecomposition runs cyclic Jacobi on the real `2d x 2d` embedding
//! `[[Re, -Im], [Im, Re]]`, whose spectrum is the Hermitian spectrum with every
//! eigenvalue doubled. The doubled eigenvectors are paired back into `d`
//! orthonormal complex vectors.

use std::fmt;
use std::ops::Range;

use num_complex::Complex64;

use crate::config::TOL;
use crate::error::{validation, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Complex Hermitian `d x d` matrix stored row-major.
///
/// Construction validates Hermitian symmetry and then stores the exactly
/// symmetrized entries, so every value of this type is Hermitian to the bit.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "HermitianMatrix({})", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    if z.im == 0.0 {
                        format!("{:.6}", z.re)
                    } else {
                        format!("{:.6}{:+.6}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from row-major entries, rejecting inputs whose
    /// asymmetry exceeds the configured tolerance.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(dim, entries, TOL.hermitian)
    }

    pub fn with_tolerance(dim: usize, mut entries: Vec<C64>, tol: f64) -> Result<Self> {
        if dim == 0 {
            return Err(validation("matrix dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(validation(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(validation("matrix has non-finite entries"));
        }
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i].conj();
                if (a - b).norm() > tol {
                    return Err(validation(format!(
                        "matrix is not Hermitian: entry ({i},{j}) = {a} but conj of ({j},{i}) = {b}"
                    )));
                }
                let avg = (a + b) * 0.5;
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg.conj();
            }
            entries[i * dim + i].im = 0.0;
        }
        Ok(Self { dim, data: entries })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(validation("matrix rows must all have length equal to the row count"));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(validation("matrix rows must all have length equal to the row count"));
        }
        Self::new(dim, rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Wraps entries already known to be exactly Hermitian.
    pub(crate) fn from_raw(dim: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        let mut m = Self { dim, data };
        m.symmetrize();
        m
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            self.data[i * d + i].im = 0.0;
            for j in (i + 1)..d {
                let avg = (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5;
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg.conj();
            }
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    /// `s * I`.
    pub fn scalar(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(s, 0.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * dim + i] = C64::new(v, 0.0);
        }
        m
    }

    /// Rank-one `v v*`.
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = v[i] * v[j].conj();
            }
        }
        Self::from_raw(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sub");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add_scaled");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// Sum of a nonempty family of equal-dimension matrices.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a HermitianMatrix>) -> Option<Self> {
        let mut it = items.into_iter();
        let mut acc = it.next()?.clone();
        for m in it {
            acc.add_scaled(1.0, m);
        }
        Some(acc)
    }

    /// `x * self * x` for Hermitian `x`.
    pub fn sandwich(&self, x: &HermitianMatrix) -> Self {
        let xm = CMatrix::from_hermitian(x);
        let s = CMatrix::from_hermitian(self);
        Self::from_raw(self.dim, xm.mul(&s).mul(&xm).data)
    }

    /// `u * self * u^*`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        let s = CMatrix::from_hermitian(self);
        Self::from_raw(self.dim, u.mul(&s).mul(&u.adjoint()).data)
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let d = self.dim + other.dim;
        let mut m = Self::zeros(d);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[i * d + j] = self.get(i, j);
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                m.data[(self.dim + i) * d + self.dim + j] = other.get(i, j);
            }
        }
        m
    }

    /// Principal submatrix on the index range.
    pub fn compress(&self, range: Range<usize>) -> Self {
        assert!(range.end <= self.dim && range.start < range.end, "invalid compression range");
        let d = range.len();
        let mut data = Vec::with_capacity(d * d);
        for i in range.clone() {
            for j in range.clone() {
                data.push(self.get(i, j));
            }
        }
        Self { dim: d, data }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `<v, M v>`, real for Hermitian `M`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let mv = self.apply(v);
        v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigenvalues_hermitian(self)[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *eigenvalues_hermitian(self).last().unwrap()
    }

    /// `M^p` on the spectrum, for PSD input. Eigenvalues at or below `floor`
    /// are mapped to zero (pseudo-power).
    pub fn psd_power(&self, p: f64, floor: f64) -> Self {
        let eig = eig_hermitian(self);
        let mapped: Vec<f64> =
            eig.values.iter().map(|&l| if l > floor { l.powf(p) } else { 0.0 }).collect();
        eig.reconstruct_with(&mapped)
    }
}

/// General dense complex matrix, row-major. Used for eigenvector bases and
/// unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_hermitian(h: &HermitianMatrix) -> Self {
        Self { rows: h.dim, cols: h.dim, data: h.data.clone() }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), nrows);
            for (i, &z) in c.iter().enumerate() {
                m.data[i * ncols + j] = z;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let out = &mut m.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Spectral decomposition `M = V diag(values) V^*`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    /// `V diag(mapped) V^*`.
    pub fn reconstruct_with(&self, mapped: &[f64]) -> HermitianMatrix {
        let d = self.values.len();
        assert_eq!(mapped.len(), d);
        let v = &self.vectors;
        let mut data = vec![ZERO; d * d];
        for (k, &l) in mapped.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            for i in 0..d {
                let vik = v.get(i, k) * l;
                for j in 0..d {
                    data[i * d + j] += vik * v.get(j, k).conj();
                }
            }
        }
        HermitianMatrix::from_raw(d, data)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(&self.values)
    }

    /// Eigenvector for the largest eigenvalue.
    pub fn top_vector(&self) -> Vec<C64> {
        self.vectors.column(self.values.len() - 1)
    }
}

/// Cyclic Jacobi on a real symmetric row-major `n x n` matrix.
///
/// `a` is overwritten by the (nearly) diagonal rotated matrix and `v` has the
/// rotations accumulated into it from the right. Returns the number of sweeps.
pub(crate) fn jacobi_in_place(a: &mut [f64], v: &mut [f64], n: usize, tol: f64, max_sweeps: usize) -> usize {
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = tol * frob.max(1.0);
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
    let mut sweeps = 0;
    while sweeps < max_sweeps && off(a) >= threshold {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq.abs() < 1e-300 || apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    sweeps
}

/// Real symmetric eigendecomposition. Returns ascending eigenvalues and the
/// eigenvector matrix (row-major, eigenvectors in columns).
pub fn eig_symmetric(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut work = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    jacobi_in_place(&mut work, &mut v, n, TOL.jacobi_off_diagonal, TOL.jacobi_max_sweeps);
    sort_eigenpairs(&work, &v, n)
}

pub(crate) fn sort_eigenpairs(diag_src: &[f64], v: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag_src[i * n + i].total_cmp(&diag_src[j * n + j]));
    let values = order.iter().map(|&i| diag_src[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new] = v[k * n + old];
        }
    }
    (values, vectors)
}

fn eigenvalues_hermitian(m: &HermitianMatrix) -> Vec<f64> {
    eig_hermitian(m).values
}

/// Hermitian eigendecomposition with ascending eigenvalues and a unitary
/// eigenvector matrix.
pub fn eig_hermitian(m: &HermitianMatrix) -> EigenDecomposition {
    let d = m.dim;
    if m.is_real() {
        let re: Vec<f64> = m.data.iter().map(|z| z.re).collect();
        let (values, vecs) = eig_symmetric(&re, d);
        let vectors = CMatrix { rows: d, cols: d, data: vecs.into_iter().map(|x| C64::new(x, 0.0)).collect() };
        return EigenDecomposition { values, vectors };
    }

    let n = 2 * d;
    let mut emb = vec![0.0; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = m.get(i, j);
            emb[i * n + j] = z.re;
            emb[(i + d) * n + j + d] = z.re;
            emb[i * n + j + d] = -z.im;
            emb[(i + d) * n + j] = z.im;
        }
    }
    let (_, rvecs) = eig_symmetric(&emb, n);

    // Each complex eigenvector z shows up twice, as [Re z; Im z] and as the
    // embedding of i*z. Greedily keep the candidate with the largest residual
    // after projecting out the complex span of those already kept.
    let mut residuals: Vec<Vec<C64>> = (0..n)
        .map(|c| (0..d).map(|i| C64::new(rvecs[i * n + c], rvecs[(i + d) * n + c])).collect())
        .collect();
    let mut alive = vec![true; n];
    let mut chosen: Vec<Vec<C64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let (best, _) = residuals
            .iter()
            .enumerate()
            .filter(|(c, _)| alive[*c])
            .map(|(c, r)| (c, norm2(r)))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        alive[best] = false;
        let nrm = norm2(&residuals[best]).sqrt();
        let q: Vec<C64> = residuals[best].iter().map(|z| z / nrm).collect();
        for (c, r) in residuals.iter_mut().enumerate() {
            if !alive[c] {
                continue;
            }
            let proj: C64 = q.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum();
            for (ri, qi) in r.iter_mut().zip(&q) {
                *ri -= proj * qi;
            }
        }
        chosen.push(q);
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = chosen.into_iter().map(|z| (m.expectation(&z), z)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.1).collect();
    EigenDecomposition { values, vectors: CMatrix::from_columns(&cols) }
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Frobenius-nearest PSD matrix (negative eigenvalues clipped to zero).
pub fn psd_project(m: &HermitianMatrix) -> HermitianMatrix {
    let eig = eig_hermitian(m);
    if eig.values[0] >= 0.0 {
        return m.clone();
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    eig.reconstruct_with(&clipped)
}

/// Kronecker product, `dim = dim(a) * dim(b)`.
pub fn kron(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    let (da, db) = (a.dim, b.dim);
    let d = da * db;
    let mut data = vec![ZERO; d * d];
    for i in 0..da {
        for j in 0..da {
            let aij = a.get(i, j);
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    data[(i * db + k) * d + j * db + l] = aij * b.get(k, l);
                }
            }
        }
    }
    HermitianMatrix { dim: d, data }
}

/// Largest absolute eigenvalue.
pub fn operator_norm(m: &HermitianMatrix) -> f64 {
    let values = eigenvalues_hermitian(m);
    values[0].abs().max(values[values.len() - 1].abs())
}

/// `trace(A^* B)`.
pub fn frob_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<C64> {
    if a.dim != b.dim {
        return Err(validation(format!("frob_inner dimension mismatch: {} vs {}", a.dim, b.dim)));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum())
}

/// Real part of `trace(A B)` without dimension checks, for Hermitian pairs.
pub(crate) fn real_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    debug_assert_eq!(a.dim, b.dim);
    a.data.iter().zip(&b.data).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn frob_norm(m: &HermitianMatrix) -> f64 {
    norm2(&m.data).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(d: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            data[i * d + i] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..d {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                data[i * d + j] = z;
                data[j * d + i] = z.conj();
            }
        }
        HermitianMatrix::new(d, data).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_non_hermitian() {
        let err = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(err, Err(crate::Error::Validation(_))));
        let ok = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        assert!(ok.is_ok());
    }

    #[test]
    fn eig_of_diagonal_sorts_and_permutes() {
        let eig = eig_hermitian(&HermitianMatrix::diag(&[3.0, 1.0, 2.0]));
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
        // columns are standard basis vectors e1, e2, e0
        for (col, hot) in [(0, 1), (1, 2), (2, 0)] {
            for i in 0..3 {
                let expect = if i == hot { 1.0 } else { 0.0 };
                assert!((eig.vectors.get(i, col).norm() - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eig_of_pauli_x() {
        // characteristic polynomial l^2 - 1 = 0
        let eig = eig_hermitian(&HermitianMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_of_pauli_y_uses_complex_path() {
        let y = HermitianMatrix::new(2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let eig = eig_hermitian(&y);
        assert!((eig.values[0] + 1.0).abs() < 1e-13);
        assert!((eig.values[1] - 1.0).abs() < 1e-13);
        assert!(eig.reconstruct().max_abs_diff(&y) < 1e-13);
    }

    #[test]
    fn eig_of_identity() {
        let eig = eig_hermitian(&HermitianMatrix::identity(4));
        assert_eq!(eig.values, vec![1.0; 4]);
        let vv = eig.vectors.adjoint().mul(&eig.vectors);
        assert!(vv.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn eig_handles_complex_degenerate_spectrum() {
        // U diag(1,1,1,2) U* with a complex unitary: triple degeneracy on the
        // complex path.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(4, &mut rng);
        let u = eig_hermitian(&h).vectors;
        let m = HermitianMatrix::diag(&[1.0, 1.0, 1.0, 2.0]).conjugate_by(&u);
        assert!(!m.is_real());
        let eig = eig_hermitian(&m);
        for (l, e) in eig.values.iter().zip([1.0, 1.0, 1.0, 2.0]) {
            assert!((l - e).abs() < 1e-12);
        }
        assert!(eig.reconstruct().max_abs_diff(&m) < 1e-12);
        let vv = eig.vectors.adjoint().mul(&eig.vectors);
        assert!(vv.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 3, 5, 8, 16] {
            for _ in 0..5 {
                let m = random_hermitian(d, &mut rng);
                let eig = eig_hermitian(&m);
                assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
                let err = eig.reconstruct().max_abs_diff(&m);
                assert!(err <= 1e-9 * d as f64, "d={d} err={err}");
                let vv = eig.vectors.adjoint().mul(&eig.vectors);
                assert!(vv.max_abs_diff(&CMatrix::identity(d)) < 1e-9);
            }
        }
    }

    #[test]
    fn psd_project_examples() {
        let p = psd_project(&HermitianMatrix::diag(&[1.0, -1.0]));
        assert!(p.max_abs_diff(&HermitianMatrix::diag(&[1.0, 0.0])) < 1e-15);

        let x = HermitianMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let half = HermitianMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(psd_project(&x).max_abs_diff(&half) < 1e-14);

        let psd = HermitianMatrix::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(psd_project(&psd).max_abs_diff(&psd) < 1e-9);
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&HermitianMatrix::identity(2), &HermitianMatrix::identity(3)), HermitianMatrix::identity(6));
        let k = kron(&HermitianMatrix::diag(&[1.0, 0.0]), &HermitianMatrix::diag(&[0.0, 1.0]));
        assert_eq!(k, HermitianMatrix::diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_spectrum_is_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random_hermitian(2, &mut rng);
            let b = random_hermitian(2, &mut rng);
            let la = eig_hermitian(&a).values;
            let lb = eig_hermitian(&b).values;
            let mut prods: Vec<f64> = la.iter().flat_map(|x| lb.iter().map(move |y| x * y)).collect();
            prods.sort_by(f64::total_cmp);
            let lk = eig_hermitian(&kron(&a, &b)).values;
            for (x, y) in prods.iter().zip(&lk) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kron_acts_on_product_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let u = vec![c(0.3, -0.1), c(1.0, 0.2)];
        let v = vec![c(0.0, 1.0), c(-0.5, 0.5), c(2.0, 0.0)];
        let uv: Vec<C64> = u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect();
        let lhs = kron(&a, &b).apply(&uv);
        let (au, bv) = (a.apply(&u), b.apply(&v));
        let rhs: Vec<C64> = au.iter().flat_map(|x| bv.iter().map(move |y| x * y)).collect();
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&HermitianMatrix::identity(5)), 1.0);
        assert_eq!(operator_norm(&HermitianMatrix::diag(&[2.0, -3.0])), 3.0);
        let x = HermitianMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((operator_norm(&x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frob_inner_examples() {
        let i3 = HermitianMatrix::identity(3);
        assert_eq!(frob_inner(&i3, &i3).unwrap(), c(3.0, 0.0));
        let z = frob_inner(&HermitianMatrix::diag(&[1.0, 0.0]), &HermitianMatrix::diag(&[0.0, 1.0])).unwrap();
        assert_eq!(z, c(0.0, 0.0));
        assert!(frob_inner(&i3, &HermitianMatrix::identity(2)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(3, &mut rng);
        let sq: f64 = eig_hermitian(&a).values.iter().map(|l| l * l).sum();
        let ip = frob_inner(&a, &a).unwrap();
        assert!((ip.re - sq).abs() < 1e-12 && ip.im.abs() < 1e-15);
    }

    #[test]
    fn direct_sum_and_compress() {
        let a = HermitianMatrix::diag(&[1.0, 2.0]);
        let s = a.direct_sum(&HermitianMatrix::diag(&[3.0]));
        assert_eq!(s, HermitianMatrix::diag(&[1.0, 2.0, 3.0]));
        assert_eq!(s.compress(0..2), a);
    }
}
