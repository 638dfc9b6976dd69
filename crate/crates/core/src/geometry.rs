//! Subspaces of complex `m`-space, chordal distance, and random codebooks.
//!
//! A [`SubspacePoint`] is an `m × n` basis with orthonormal columns standing
//! for the `n`-dimensional subspace it spans. Distances only depend on the
//! subspace, so two bases related by an `n × n` unitary are the same point.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sqr, CMatrix};
use crate::scalar::Real;

/// Default exponent `a` of the distortion bound's tail term.
pub const DEFAULT_BOUND_EXPONENT: f64 = 0.5;

/// Orthonormal basis of an `n`-dimensional subspace of `C^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePoint<T> {
    basis: CMatrix<T>,
}

impl<T: Real> SubspacePoint<T> {
    /// Wrap a basis that is already orthonormal.
    pub fn from_orthonormal(basis: CMatrix<T>) -> Result<Self> {
        check_shape(basis.rows(), basis.cols())?;
        let err = basis.orthonormality_error();
        if !(err <= T::ORTHO_TOL) {
            return Err(Error::NotOrthonormal(err.as_f64()));
        }
        Ok(Self { basis })
    }

    /// Orthonormalise an arbitrary full-column-rank matrix.
    pub fn from_spanning(matrix: &CMatrix<T>) -> Result<Self> {
        check_shape(matrix.rows(), matrix.cols())?;
        let basis = matrix
            .orthonormalize()
            .ok_or_else(|| Error::Dimension("spanning matrix is rank deficient".into()))?;
        Ok(Self { basis })
    }

    pub(crate) fn from_basis_unchecked(basis: CMatrix<T>) -> Self {
        Self { basis }
    }

    #[inline]
    pub fn basis(&self) -> &CMatrix<T> {
        &self.basis
    }

    pub fn into_basis(self) -> CMatrix<T> {
        self.basis
    }

    /// Ambient dimension.
    #[inline]
    pub fn m(&self) -> usize {
        self.basis.rows()
    }

    /// Subspace dimension.
    #[inline]
    pub fn n(&self) -> usize {
        self.basis.cols()
    }

    /// The same subspace expressed in the basis `self · u` for an `n × n` unitary `u`.
    pub fn rotated(&self, u: &CMatrix<T>) -> Self {
        Self {
            basis: self.basis.mul(u),
        }
    }
}

impl<T> AsRef<CMatrix<T>> for SubspacePoint<T> {
    fn as_ref(&self) -> &CMatrix<T> {
        &self.basis
    }
}

fn check_shape(m: usize, n: usize) -> Result<()> {
    if n == 0 || n > m {
        return Err(Error::Dimension(format!("subspace dimension {n} invalid for ambient dimension {m}")));
    }
    Ok(())
}

fn check_same_dims<T: Real>(a: &SubspacePoint<T>, b: &SubspacePoint<T>) -> Result<()> {
    if a.basis.shape() != b.basis.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.basis.shape(),
            actual: b.basis.shape(),
        });
    }
    Ok(())
}

/// A random vector quantization codebook of `2^bits` subspaces.
#[derive(Debug, Clone)]
pub struct Codebook<T> {
    entries: Vec<SubspacePoint<T>>,
    bits: u32,
}

impl<T: Real> Codebook<T> {
    pub fn new(entries: Vec<SubspacePoint<T>>, bits: u32) -> Result<Self> {
        let expected = codebook_len(bits)?;
        if entries.len() != expected {
            return Err(Error::Parameter(format!(
                "codebook with {bits} bits needs {expected} entries, got {}",
                entries.len()
            )));
        }
        if let Some(first) = entries.first() {
            let shape = first.basis.shape();
            if let Some(bad) = entries.iter().find(|e| e.basis.shape() != shape) {
                return Err(Error::DimensionMismatch {
                    expected: shape,
                    actual: bad.basis.shape(),
                });
            }
        }
        Ok(Self { entries, bits })
    }

    /// Draw `2^bits` independent uniform points of `G(m, n)`.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, bits: u32, rng: &mut R) -> Result<Self> {
        let len = codebook_len(bits)?;
        let entries = (0..len)
            .map(|_| sample_uniform_subspace(m, n, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries, bits })
    }

    pub fn entries(&self) -> &[SubspacePoint<T>] {
        &self.entries
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn codebook_len(bits: u32) -> Result<usize> {
    if bits >= usize::BITS - 1 {
        return Err(Error::Parameter(format!("{bits} bits is too many for an explicit codebook")));
    }
    Ok(1usize << bits)
}

/// Fill `buf` (column-major `m × n`) with a Haar-distributed orthonormal basis.
///
/// Gaussian columns followed by Gram-Schmidt with a positive real diagonal in
/// the implied triangular factor. That phase convention is what makes the
/// result uniform on the Grassmannian.
fn fill_uniform_basis<T: Real, R: Rng + ?Sized>(buf: &mut [Complex<T>], m: usize, n: usize, rng: &mut R) {
    let half = T::FRAC_1_SQRT_2();
    'draw: loop {
        for z in buf.iter_mut() {
            let re = T::std_normal(rng) * half;
            let im = T::std_normal(rng) * half;
            *z = Complex::new(re, im);
        }
        for j in 0..n {
            let (done, rest) = buf.split_at_mut(j * m);
            let cj = &mut rest[..m];
            let original = norm_sqr(cj);
            for _pass in 0..2 {
                for k in 0..j {
                    let qk = &done[k * m..(k + 1) * m];
                    let proj = dot(qk, cj);
                    for (x, &y) in cj.iter_mut().zip(qk) {
                        *x = *x - y * proj;
                    }
                }
            }
            let nsq = norm_sqr(cj);
            if !(nsq > T::RANK_TOL * T::RANK_TOL * original) {
                continue 'draw;
            }
            let inv = T::one() / nsq.sqrt();
            for x in cj.iter_mut() {
                *x = x.scale(inv);
            }
        }
        return;
    }
}

/// Uniformly distributed point of the complex Grassmannian `G(m, n)`.
pub fn sample_uniform_subspace<T: Real, R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<SubspacePoint<T>> {
    if n == 0 || n >= m {
        return Err(Error::Dimension(format!("need 1 <= n < m, got m={m}, n={n}")));
    }
    let mut basis = CMatrix::zeros(m, n);
    fill_uniform_basis(basis.as_mut_slice(), m, n, rng);
    Ok(SubspacePoint { basis })
}

/// Haar-distributed `n × n` unitary.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    let mut u = CMatrix::zeros(n, n);
    fill_uniform_basis(u.as_mut_slice(), n, n, rng);
    u
}

/// Principal angles between two subspaces, ascending, each in `[0, π/2]`.
///
/// Cosines come from the singular values of `A^H B` and sines from those of
/// `(I − A A^H) B`; pairing them through `atan2` keeps both small and large
/// angles accurate.
pub fn principal_angles<T: Real>(a: &SubspacePoint<T>, b: &SubspacePoint<T>) -> Result<Vec<T>> {
    check_same_dims(a, b)?;
    let cross = a.basis.adjoint_mul(&b.basis);
    let residual = b.basis.sub(&a.basis.mul(&cross));
    let mut cos_sq = cross.adjoint_mul(&cross).hermitian_eigenvalues();
    let mut sin_sq = residual.adjoint_mul(&residual).hermitian_eigenvalues();
    cos_sq.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sin_sq.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let clamp = |x: T| x.max(T::zero()).min(T::one()).sqrt();
    let mut angles: Vec<T> = cos_sq
        .into_iter()
        .zip(sin_sq)
        .map(|(c, s)| clamp(s).atan2(clamp(c)))
        .collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(angles)
}

/// `Σ sin²θ_i` computed from the principal angles.
pub fn chordal_distance_sqr_from_angles<T: Real>(a: &SubspacePoint<T>, b: &SubspacePoint<T>) -> Result<T> {
    Ok(principal_angles(a, b)?
        .into_iter()
        .fold(T::zero(), |acc, t| acc + t.sin() * t.sin()))
}

/// Squared chordal distance through `n − ‖A^H B‖_F²`.
pub fn chordal_distance_sqr<T: Real>(a: &SubspacePoint<T>, b: &SubspacePoint<T>) -> Result<T> {
    check_same_dims(a, b)?;
    Ok(chordal_distance_sqr_raw(a.basis.as_slice(), b.basis.as_slice(), a.m(), a.n()))
}

/// Chordal distance `sqrt(Σ sin²θ_i)`.
pub fn chordal_distance<T: Real>(a: &SubspacePoint<T>, b: &SubspacePoint<T>) -> Result<T> {
    chordal_distance_sqr(a, b).map(T::sqrt)
}

#[inline]
fn chordal_distance_sqr_raw<T: Real>(a: &[Complex<T>], b: &[Complex<T>], m: usize, n: usize) -> T {
    let mut overlap = T::zero();
    for i in 0..n {
        let ai = &a[i * m..(i + 1) * m];
        for j in 0..n {
            overlap = overlap + dot(ai, &b[j * m..(j + 1) * m]).norm_sqr();
        }
    }
    (T::of(n as f64) - overlap).max(T::zero())
}

/// Outcome of quantizing one channel direction.
#[derive(Debug, Clone)]
pub struct Quantized<T> {
    pub index: usize,
    pub point: SubspacePoint<T>,
    /// Squared chordal distance between the input and `point`.
    pub distortion: T,
}

/// Nearest codebook entry in chordal distance; ties go to the lowest index.
pub fn quantize<'a, T: Real>(h: &SubspacePoint<T>, cb: &'a Codebook<T>) -> Result<(usize, &'a SubspacePoint<T>)> {
    let first = cb.entries.first().ok_or(Error::EmptyCodebook)?;
    check_same_dims(h, first)?;
    let (m, n) = (h.m(), h.n());
    let mut best = (0, T::infinity());
    for (i, w) in cb.entries.iter().enumerate() {
        let d = chordal_distance_sqr_raw(h.basis.as_slice(), w.basis.as_slice(), m, n);
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok((best.0, &cb.entries[best.0]))
}

/// Quantize against a fresh random codebook without storing it.
///
/// Consumes `rng` exactly as [`Codebook::random`] followed by [`quantize`]
/// would, so both paths return the same entry for the same stream.
pub fn quantize_random_codebook<T: Real, R: Rng + ?Sized>(
    h: &SubspacePoint<T>,
    bits: u32,
    rng: &mut R,
) -> Result<Quantized<T>> {
    let (m, n) = (h.m(), h.n());
    if n >= m {
        return Err(Error::Dimension(format!("need 1 <= n < m, got m={m}, n={n}")));
    }
    let len = codebook_len(bits)?;
    let mut cur = vec![Complex::new(T::zero(), T::zero()); m * n];
    let mut best = cur.clone();
    let mut best_d = T::infinity();
    let mut best_i = 0;
    for i in 0..len {
        fill_uniform_basis(&mut cur, m, n, rng);
        let d = chordal_distance_sqr_raw(h.basis.as_slice(), &cur, m, n);
        if d < best_d {
            best_d = d;
            best_i = i;
            std::mem::swap(&mut best, &mut cur);
        }
    }
    let basis = CMatrix::from_columns(&best.chunks(m).map(<[_]>::to_vec).collect::<Vec<_>>());
    Ok(Quantized {
        index: best_i,
        point: SubspacePoint { basis },
        distortion: best_d,
    })
}

fn check_bound_dims(m: usize, n: usize) -> Result<()> {
    if n == 0 || m <= n {
        return Err(Error::Dimension(format!("need m > n >= 1, got m={m}, n={n}")));
    }
    Ok(())
}

/// Ball-volume constant `C_MN = (1/T!) Π_{i=1..n} (m−i)!/(n−i)!` with `T = n(m−n)`.
///
/// Accumulated in the log domain; the factorials overflow long before the
/// constant itself does.
pub fn c_mn(m: usize, n: usize) -> Result<f64> {
    check_bound_dims(m, n)?;
    let ln_fact = |k: usize| libm::lgamma(k as f64 + 1.0);
    let t = n * (m - n);
    let log_c = (1..=n).map(|i| ln_fact(m - i) - ln_fact(n - i)).sum::<f64>() - ln_fact(t);
    Ok(log_c.exp())
}

/// Real dimension count `T = n(m − n)` that sets the distortion decay rate.
pub fn grassmann_order(m: usize, n: usize) -> Result<usize> {
    check_bound_dims(m, n)?;
    Ok(n * (m - n))
}

/// Inputs of the random-codebook distortion bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBoundParams {
    pub m: usize,
    pub n: usize,
    pub bits: f64,
    pub a: f64,
}

impl DistortionBoundParams {
    pub fn new(m: usize, n: usize, bits: f64) -> Result<Self> {
        Self::with_exponent(m, n, bits, DEFAULT_BOUND_EXPONENT)
    }

    pub fn with_exponent(m: usize, n: usize, bits: f64, a: f64) -> Result<Self> {
        let p = Self { m, n, bits, a };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        check_bound_dims(self.m, self.n)?;
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::Parameter(format!("exponent a must lie in (0, 1), got {}", self.a)));
        }
        if !self.bits.is_finite() || self.bits < 0.0 {
            return Err(Error::Parameter(format!("bits must be finite and nonnegative, got {}", self.bits)));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.n * (self.m - self.n)
    }

    pub fn c_mn(&self) -> f64 {
        c_mn(self.m, self.n).expect("validated dims")
    }

    /// Whether `(C_MN 2^B)^(−a/T) ≤ 1`, i.e. `C_MN 2^B ≥ 1`.
    pub fn exponent_condition_holds(&self) -> bool {
        self.c_mn().ln() + self.bits * std::f64::consts::LN_2 >= 0.0
    }
}

/// The bound split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBound {
    /// `Γ(1/T)/T · C_MN^(−1/T) · 2^(−B/T)`, the term that survives for large `B`.
    pub leading: f64,
    /// `n · exp(−(2^B C_MN)^(1−a))`.
    pub tail: f64,
    pub exponent_condition_holds: bool,
}

impl DistortionBound {
    pub fn full(&self) -> f64 {
        self.leading + self.tail
    }
}

/// Upper bound on the mean minimum squared chordal distance of a random codebook.
pub fn distortion_bound(p: &DistortionBoundParams) -> Result<DistortionBound> {
    p.validate()?;
    Ok(DistortionBound {
        leading: distortion_bound_leading(p.m, p.n, p.bits)?,
        tail: distortion_bound_tail(p),
        exponent_condition_holds: p.exponent_condition_holds(),
    })
}

/// Leading term of the bound alone; needs no tail exponent.
pub fn distortion_bound_leading(m: usize, n: usize, bits: f64) -> Result<f64> {
    check_bound_dims(m, n)?;
    let t = (n * (m - n)) as f64;
    let c = c_mn(m, n)?;
    let log2_val = (libm::tgamma(1.0 / t) / t).log2() - c.log2() / t - bits / t;
    Ok(log2_val.exp2())
}

fn distortion_bound_tail(p: &DistortionBoundParams) -> f64 {
    let log_size = p.c_mn().ln() + p.bits * std::f64::consts::LN_2;
    p.n as f64 * (-((1.0 - p.a) * log_size).exp()).exp()
}

/// Draw the distortion of the best of `2^bits` independent uniform codewords.
///
/// Uses the single-codeword CDF `F(x) = min(1, C_MN x^T)` of the squared
/// chordal distance (exact for `n = 1`, where it is `x^(m−1)`, and the
/// small-ball law otherwise) and inverts `F_min = 1 − (1 − F)^(2^B)`.
pub fn sample_min_distortion<T: Real, R: Rng + ?Sized>(m: usize, n: usize, bits: u32, rng: &mut R) -> Result<T> {
    check_bound_dims(m, n)?;
    let u: f64 = rng.random();
    Ok(T::of(min_distortion_quantile(m, n, bits as f64, u)?))
}

/// Quantile function of the best-of-`2^bits` distortion.
pub fn min_distortion_quantile(m: usize, n: usize, bits: f64, u: f64) -> Result<f64> {
    check_bound_dims(m, n)?;
    let t = (n * (m - n)) as f64;
    let c = c_mn(m, n)?;
    let size = bits.exp2();
    // single-codeword CDF value whose minimum over the codebook has CDF `u`
    let f = -((-u).ln_1p() / size).exp_m1();
    let x = (f / c).powf(1.0 / t);
    Ok(x.min(n as f64))
}

/// CDF of the best-of-`2^bits` distortion (the law sampled above).
pub fn min_distortion_cdf(m: usize, n: usize, bits: f64, x: f64) -> Result<f64> {
    check_bound_dims(m, n)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let t = (n * (m - n)) as f64;
    let f = (c_mn(m, n)? * x.powf(t)).min(1.0);
    if f >= 1.0 {
        return Ok(1.0);
    }
    Ok(-(bits.exp2() * (-f).ln_1p()).exp_m1())
}

/// Split a total squared distance over the `n` principal angles between
/// `G(m, n)` points.
///
/// For a uniformly random subspace the squared sines `x_i` have joint
/// density `∝ Π x_i^(m−2n) Π_{i<j} (x_i − x_j)²`, so given their sum they
/// are distributed as the eigenvalues of a complex Wishart matrix `X^H X`
/// (`X` Gaussian, `(m−n) × n`) normalised by its trace. Draws with a share
/// above 1 are redrawn; after many failures the even split is returned.
pub fn split_distortion<T: Real, R: Rng + ?Sized>(d2: T, m: usize, n: usize, rng: &mut R) -> Result<Vec<T>> {
    if n == 0 || m < 2 * n {
        return Err(Error::UnsupportedGeometry(format!(
            "angle split needs m >= 2n, got m={m}, n={n}"
        )));
    }
    if !(d2 >= T::zero() && d2 <= T::of(n as f64)) {
        return Err(Error::Parameter(format!("squared distance {d2} outside [0, {n}]")));
    }
    if n == 1 {
        return Ok(vec![d2]);
    }
    for _ in 0..1000 {
        let x = CMatrix::<T>::gaussian(m - n, n, rng);
        let eig = x.adjoint_mul(&x).hermitian_eigenvalues();
        let total = eig.iter().fold(T::zero(), |acc, &l| acc + l.max(T::zero()));
        let shares: Vec<T> = eig.iter().map(|&l| (d2 * l.max(T::zero()) / total).min(d2)).collect();
        if shares.iter().all(|&s| s <= T::one()) {
            return Ok(shares);
        }
    }
    Ok(vec![d2 / T::of(n as f64); n])
}

/// Build a subspace at squared chordal distance exactly `d2` from `h`.
///
/// `Ĥ = H·diag(cos θ) + E·diag(sin θ)` with `E` a uniformly random
/// orthonormal basis of an `n`-dimensional subspace of the orthogonal
/// complement of `span(H)`, which must exist (`m ≥ 2n`). The principal
/// vectors are the columns of `h` as given; rotate `h` first if they should
/// be random.
pub fn apply_quantization_error<T: Real, R: Rng + ?Sized>(
    h: &SubspacePoint<T>,
    d2: T,
    rng: &mut R,
) -> Result<SubspacePoint<T>> {
    let (m, n) = (h.m(), h.n());
    if m < 2 * n {
        return Err(Error::UnsupportedGeometry(format!(
            "synthetic quantization error needs m >= 2n, got m={m}, n={n}"
        )));
    }
    let shares = split_distortion(d2, m, n, rng)?;
    let e = loop {
        let z = CMatrix::gaussian(m, n, rng);
        let projected = z.sub(&h.basis.mul(&h.basis.adjoint_mul(&z)));
        if let Some(q) = projected.orthonormalize() {
            // one more projection pass keeps E orthogonal to H to roundoff
            let cleaned = q.sub(&h.basis.mul(&h.basis.adjoint_mul(&q)));
            if let Some(q) = cleaned.orthonormalize() {
                break q;
            }
        }
    };
    let mut out = CMatrix::zeros(m, n);
    for (j, &s) in shares.iter().enumerate() {
        let sin = s.sqrt();
        let cos = (T::one() - s).max(T::zero()).sqrt();
        let hc = h.basis.col(j);
        let ec = e.col(j);
        for ((o, &x), &y) in out.col_mut(j).iter_mut().zip(hc).zip(ec) {
            *o = x.scale(cos) + y.scale(sin);
        }
    }
    Ok(SubspacePoint { basis: out })
}
