//! Small dense complex matrices.
//!
//! Every matrix in this crate is at most a few dozen entries on a side
//! (antenna counts), so the routines here favour simple cyclic Jacobi and
//! Gram-Schmidt schemes over blocked algorithms. Storage is column-major,
//! which keeps the per-column operations used by Gram-Schmidt and the
//! one-sided Jacobi SVD contiguous.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use rand::Rng;

use crate::scalar::Real;

const MAX_SWEEPS: usize = 64;

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from row-major entries (convenient for literals in tests).
    pub fn from_rows(rows: usize, cols: usize, entries: &[Complex<T>]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        Self::from_fn(rows, cols, |r, c| entries[r * cols + c])
    }

    /// Build from real row-major entries.
    pub fn from_real_rows(rows: usize, cols: usize, entries: &[T]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        Self::from_fn(rows, cols, |r, c| Complex::new(entries[r * cols + c], T::zero()))
    }

    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for col in columns {
            assert_eq!(col.len(), rows, "ragged columns");
            data.extend_from_slice(col);
        }
        Self { rows, cols, data }
    }

    /// I.i.d. circularly-symmetric complex Gaussian entries with unit variance.
    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let half = T::FRAC_1_SQRT_2();
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let re = T::std_normal(rng) * half;
            let im = T::std_normal(rng) * half;
            data.push(Complex::new(re, im));
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex<T>] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Complex<T>] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b.re == T::zero() && b.im == T::zero() {
                    continue;
                }
                let a = self.col(k);
                let o = out.col_mut(j);
                for (oi, &ai) in o.iter_mut().zip(a) {
                    *oi = *oi + ai * b;
                }
            }
        }
        out
    }

    /// `self^H · rhs` without materialising the adjoint.
    pub fn adjoint_mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "row counts differ");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for j in 0..rhs.cols {
            let b = rhs.col(j);
            for i in 0..self.cols {
                out[(i, j)] = dot(self.col(i), b);
            }
        }
        out
    }

    /// `self · rhs^H`.
    pub fn mul_adjoint(&self, rhs: &Self) -> Self {
        self.mul(&rhs.adjoint())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn norm_sqr(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn frobenius_norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "row counts differ");
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Self {
            rows: self.rows,
            cols: self.cols + rhs.cols,
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.cols, |r, c| self[(rows[r], c)])
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let columns: Vec<Vec<Complex<T>>> = cols.iter().map(|&c| self.col(c).to_vec()).collect();
        if columns.is_empty() {
            return Self::zeros(self.rows, 0);
        }
        Self::from_columns(&columns)
    }

    /// `‖self^H self − I‖_F`.
    pub fn orthonormality_error(&self) -> T {
        self.adjoint_mul(self).sub(&Self::identity(self.cols)).frobenius_norm()
    }

    /// Orthonormalise the columns with twice-iterated modified Gram-Schmidt.
    ///
    /// The triangular factor this implies has a positive real diagonal, so a
    /// Gaussian input yields a Haar-distributed basis. Returns `None` if a
    /// column is numerically dependent on its predecessors.
    pub fn orthonormalize(&self) -> Option<Self> {
        let mut q = self.clone();
        for j in 0..q.cols {
            let original = norm(q.col(j));
            for _pass in 0..2 {
                for k in 0..j {
                    let (done, cur) = q.data.split_at_mut(j * q.rows);
                    let qk = &done[k * q.rows..(k + 1) * q.rows];
                    let cj = &mut cur[..q.rows];
                    let proj = dot(qk, cj);
                    for (x, &y) in cj.iter_mut().zip(qk) {
                        *x = *x - y * proj;
                    }
                }
            }
            let nrm = norm(q.col(j));
            if original == T::zero() || nrm <= T::RANK_TOL * original {
                return None;
            }
            let inv = T::one() / nrm;
            for x in q.col_mut(j) {
                *x = x.scale(inv);
            }
        }
        Some(q)
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues (unsorted, in the order the diagonal ends up) and
    /// the unitary matrix whose columns are the matching eigenvectors. Only
    /// the Hermitian part of `self` is meaningful.
    pub fn hermitian_eigen(&self) -> (Vec<T>, Self) {
        assert_eq!(self.rows, self.cols, "matrix must be square");
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let total = a.norm_sqr();
        let eps = T::epsilon();
        for _ in 0..MAX_SWEEPS {
            let mut off = T::zero();
            for q in 0..n {
                for p in 0..q {
                    off = off + a[(p, q)].norm_sqr();
                }
            }
            if off <= eps * eps * total || off == T::zero() {
                break;
            }
            for q in 1..n {
                for p in 0..q {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag == T::zero() {
                        continue;
                    }
                    let phase = apq.unscale(mag);
                    let (c, s) = jacobi_cs(a[(p, p)].re, a[(q, q)].re, mag);
                    rotate_cols(&mut a, p, q, c, s, phase);
                    rotate_rows(&mut a, p, q, c, s, phase);
                    rotate_cols(&mut v, p, q, c, s, phase);
                    a[(p, q)] = Complex::new(T::zero(), T::zero());
                    a[(q, p)] = Complex::new(T::zero(), T::zero());
                }
            }
        }
        let values = (0..n).map(|i| a[(i, i)].re).collect();
        (values, v)
    }

    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        self.hermitian_eigen().0
    }

    /// Singular values and the full set of right singular vectors via the
    /// one-sided (Hestenes) Jacobi method.
    ///
    /// Works on any shape. For a wide `r × c` matrix the returned `c × c`
    /// unitary contains the null-space directions as the columns whose
    /// singular value is (numerically) zero. Singular values are returned
    /// in column order of `V`, not sorted.
    pub fn svd_right(&self) -> (Vec<T>, Self) {
        let mut a = self.clone();
        let c = a.cols;
        let mut v = Self::identity(c);
        let eps = T::epsilon();
        // couplings this small only involve numerically null columns
        let floor = eps * eps * a.norm_sqr();
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for q in 1..c {
                for p in 0..q {
                    let alpha = norm_sqr(a.col(p));
                    let beta = norm_sqr(a.col(q));
                    let gamma = dot(a.col(p), a.col(q));
                    let mag = gamma.norm();
                    if mag <= floor || mag <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma.unscale(mag);
                    let (cs, sn) = jacobi_cs(alpha, beta, mag);
                    rotate_cols(&mut a, p, q, cs, sn, phase);
                    rotate_cols(&mut v, p, q, cs, sn, phase);
                }
            }
            if !rotated {
                break;
            }
        }
        let sigmas = (0..c).map(|j| norm(a.col(j))).collect();
        (sigmas, v)
    }

    /// `|det|` of a square matrix by LU with partial pivoting.
    pub fn abs_det(&self) -> T {
        assert_eq!(self.rows, self.cols, "matrix must be square");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            let (pivot, best) = (k..n)
                .map(|r| (r, a[(r, k)].norm()))
                .fold((k, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == T::zero() {
                return T::zero();
            }
            a.swap_rows(pivot, k);
            det = det * best;
            let d = a[(k, k)];
            for r in k + 1..n {
                let f = a[(r, k)] / d;
                for c in k..n {
                    let v = a[(k, c)];
                    a[(r, c)] = a[(r, c)] - f * v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "matrix must be square");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        if scale == T::zero() {
            return None;
        }
        for k in 0..n {
            let (pivot, best) = (k..n)
                .map(|r| (r, a[(r, k)].norm()))
                .fold((k, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= T::epsilon() * scale * T::of(n as f64) {
                return None;
            }
            if pivot != k {
                a.swap_rows(pivot, k);
                inv.swap_rows(pivot, k);
            }
            let d = a[(k, k)].inv();
            for c in 0..n {
                a[(k, c)] = a[(k, c)] * d;
                inv[(k, c)] = inv[(k, c)] * d;
            }
            for r in 0..n {
                if r == k {
                    continue;
                }
                let f = a[(r, k)];
                if f.re == T::zero() && f.im == T::zero() {
                    continue;
                }
                for c in 0..n {
                    let akc = a[(k, c)];
                    let ikc = inv[(k, c)];
                    a[(r, c)] = a[(r, c)] - f * akc;
                    inv[(r, c)] = inv[(r, c)] - f * ikc;
                }
            }
        }
        Some(inv)
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(c * self.rows + i, c * self.rows + j);
        }
    }
}

impl<T> AsRef<CMatrix<T>> for CMatrix<T> {
    fn as_ref(&self) -> &CMatrix<T> {
        self
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[c * self.rows + r]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[c * self.rows + r]
    }
}

/// `x^H y`.
#[inline]
pub fn dot<T: Real>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    let mut re = T::zero();
    let mut im = T::zero();
    for (a, b) in x.iter().zip(y) {
        re = re + a.re * b.re + a.im * b.im;
        im = im + a.re * b.im - a.im * b.re;
    }
    Complex::new(re, im)
}

#[inline]
pub fn norm_sqr<T: Real>(x: &[Complex<T>]) -> T {
    x.iter().fold(T::zero(), |acc, z| acc + z.re * z.re + z.im * z.im)
}

#[inline]
pub fn norm<T: Real>(x: &[Complex<T>]) -> T {
    norm_sqr(x).sqrt()
}

/// Cosine/sine of the real symmetric Schur rotation that diagonalises
/// `[[app, mag], [mag, aqq]]`.
#[inline]
fn jacobi_cs<T: Real>(app: T, aqq: T, mag: T) -> (T, T) {
    let two = T::one() + T::one();
    let tau = (aqq - app) / (two * mag);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    (c, t * c)
}

/// `m ← m · J` with `J = diag(1, conj(phase)) · [[c, s], [-s, c]]` acting on
/// columns `p`, `q`.
#[inline]
fn rotate_cols<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, c: T, s: T, phase: Complex<T>) {
    let rows = m.rows;
    let pc = phase.conj();
    for r in 0..rows {
        let x = m.data[p * rows + r];
        let y = m.data[q * rows + r] * pc;
        m.data[p * rows + r] = x.scale(c) - y.scale(s);
        m.data[q * rows + r] = x.scale(s) + y.scale(c);
    }
}

/// `m ← J^H · m` on rows `p`, `q` (same `J` as [`rotate_cols`]).
#[inline]
fn rotate_rows<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, c: T, s: T, phase: Complex<T>) {
    for col in 0..m.cols {
        let x = m[(p, col)];
        let y = m[(q, col)] * phase;
        m[(p, col)] = x.scale(c) - y.scale(s);
        m[(q, col)] = x.scale(s) + y.scale(c);
    }
}
