//! Block diagonalization and zero-forcing precoders with uniform power.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::SubspacePoint;
use crate::linalg::CMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Block diagonalization: no interference between users.
    Bd,
    /// Zero forcing: no interference between any two receive antennas.
    Zf,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bd => "BD",
            Scheme::Zf => "ZF",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BD" => Ok(Scheme::Bd),
            "ZF" => Ok(Scheme::Zf),
            other => Err(Error::Config(format!("unknown scheme `{other}` (expected BD or ZF)"))),
        }
    }
}

/// One `m × n` precoder per user, transmitted as `x = sqrt(P/K) Σ V_i s_i`.
#[derive(Debug, Clone)]
pub struct PrecoderSet<T> {
    pub v: Vec<CMatrix<T>>,
    pub scheme: Scheme,
    /// Total transmit power `P` (linear, noise has unit variance).
    pub power: T,
}

impl<T: Real> PrecoderSet<T> {
    pub fn users(&self) -> usize {
        self.v.len()
    }

    pub fn precoder(&self, i: usize) -> &CMatrix<T> {
        &self.v[i]
    }

    /// `E‖x‖²` when each user's symbol vector carries unit total energy
    /// spread evenly over its streams.
    pub fn transmit_power(&self) -> T {
        let k = T::of(self.users() as f64);
        self.v.iter().fold(T::zero(), |acc, v| {
            acc + self.power / k * v.norm_sqr() / T::of(v.cols() as f64)
        })
    }
}

fn check_user_layout(m: usize, n: usize, k: usize) -> Result<()> {
    if k == 0 || n == 0 || k * n != m {
        return Err(Error::Dimension(format!(
            "need K·n = m with K >= 1, got K={k}, n={n}, m={m}"
        )));
    }
    Ok(())
}

/// BD precoders from the (true or quantized) channel directions of all users.
///
/// `V_i` is an orthonormal basis of the null space of the other users'
/// stacked directions `[G_j^H]_{j≠i}`, read off the right singular vectors
/// whose singular value is below `RANK_TOL · σ_max`. Fails with
/// [`Error::DegenerateInput`] when that null space is larger than `n`.
pub fn bd_precoders<T: Real>(directions: &[SubspacePoint<T>], power: T) -> Result<PrecoderSet<T>> {
    bd_impl(directions, power, false)
}

/// Like [`bd_precoders`], but when other users' directions are linearly
/// dependent it keeps the `n` right singular vectors with the smallest
/// singular values instead of failing.
pub fn bd_precoders_rank_tolerant<T: Real>(directions: &[SubspacePoint<T>], power: T) -> Result<PrecoderSet<T>> {
    bd_impl(directions, power, true)
}

fn bd_impl<T: Real>(directions: &[SubspacePoint<T>], power: T, tolerant: bool) -> Result<PrecoderSet<T>> {
    let k = directions.len();
    let (m, n) = directions
        .first()
        .map(|d| (d.m(), d.n()))
        .ok_or_else(|| Error::Dimension("no users".into()))?;
    check_user_layout(m, n, k)?;
    if let Some(bad) = directions.iter().find(|d| d.m() != m || d.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: (m, n),
            actual: (bad.m(), bad.n()),
        });
    }
    let mut v = Vec::with_capacity(k);
    for i in 0..k {
        if k == 1 {
            v.push(CMatrix::identity(m));
            continue;
        }
        let others = directions
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, d)| d.basis().clone())
            .reduce(|acc, b| acc.hstack(&b))
            .expect("at least one other user");
        let (sigmas, right) = others.adjoint().svd_right();
        let smax = sigmas.iter().copied().fold(T::zero(), T::max);
        let mut null: Vec<usize> = sigmas
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s < T::RANK_TOL * smax)
            .map(|(j, _)| j)
            .collect();
        if null.len() > n && tolerant {
            null.sort_by(|&a, &b| sigmas[a].partial_cmp(&sigmas[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            null.truncate(n);
            null.sort_unstable();
        }
        if null.len() != n {
            return Err(Error::DegenerateInput(format!(
                "null space of the other users' channels has dimension {}, expected {n}",
                null.len()
            )));
        }
        v.push(right.select_cols(&null));
    }
    Ok(PrecoderSet {
        v,
        scheme: Scheme::Bd,
        power,
    })
}

/// ZF beams: unit-norm columns of `(H_all^H)^{-1}`, grouped `n` per user.
///
/// Each beam is orthogonal to every receive antenna except its own.
pub fn zf_precoders<T: Real, M: AsRef<CMatrix<T>>>(channels: &[M], power: T) -> Result<PrecoderSet<T>> {
    let k = channels.len();
    let (m, n) = channels
        .first()
        .map(|h| h.as_ref().shape())
        .ok_or_else(|| Error::Dimension("no users".into()))?;
    check_user_layout(m, n, k)?;
    if let Some(bad) = channels.iter().find(|h| h.as_ref().shape() != (m, n)) {
        return Err(Error::DimensionMismatch {
            expected: (m, n),
            actual: bad.as_ref().shape(),
        });
    }
    let stacked = channels
        .iter()
        .map(|h| h.as_ref().clone())
        .reduce(|acc, b| acc.hstack(&b))
        .expect("at least one user");
    let mut beams = stacked
        .adjoint()
        .inverse()
        .ok_or_else(|| Error::DegenerateInput("aggregate channel is singular".into()))?;
    for j in 0..m {
        let nrm = crate::linalg::norm(beams.col(j));
        let inv = T::one() / nrm;
        for z in beams.col_mut(j) {
            *z = z.scale(inv);
        }
    }
    let v = (0..k)
        .map(|i| beams.select_cols(&(i * n..(i + 1) * n).collect::<Vec<_>>()))
        .collect();
    Ok(PrecoderSet {
        v,
        scheme: Scheme::Zf,
        power,
    })
}

/// Build precoders of either scheme from per-user direction bases.
pub fn precoders_for<T: Real>(scheme: Scheme, directions: &[SubspacePoint<T>], power: T) -> Result<PrecoderSet<T>> {
    match scheme {
        Scheme::Bd => bd_precoders(directions, power),
        Scheme::Zf => zf_precoders(directions, power),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{factorize, sample_channel};
    use crate::geometry::{chordal_distance, haar_unitary, sample_uniform_subspace};
    use num_complex::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(m: usize, i: usize) -> SubspacePoint<f64> {
        let h = CMatrix::from_fn(m, 1, |r, _| Complex::new(if r == i { 1.0 } else { 0.0 }, 0.0));
        SubspacePoint::from_orthonormal(h).unwrap()
    }

    #[test]
    fn orthogonal_users_get_their_own_axis() {
        let p = bd_precoders(&[e(2, 0), e(2, 1)], 1.0).unwrap();
        assert!((p.v[0][(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((p.v[1][(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bd_nulls_other_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(m, n) in &[(4, 2), (6, 2), (6, 3), (6, 1)] {
            let k = m / n;
            let dirs: Vec<SubspacePoint<f64>> =
                (0..k).map(|_| sample_uniform_subspace(m, n, &mut rng).unwrap()).collect();
            let p = bd_precoders(&dirs, 10.0).unwrap();
            for i in 0..k {
                assert!(p.v[i].orthonormality_error() < 1e-10);
                for j in (0..k).filter(|&j| j != i) {
                    assert!(dirs[j].basis().adjoint_mul(&p.v[i]).frobenius_norm() < 1e-10);
                }
            }
            assert!((p.transmit_power() - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bd_is_invariant_to_basis_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let dirs: Vec<SubspacePoint<f64>> = (0..3).map(|_| sample_uniform_subspace(6, 2, &mut rng).unwrap()).collect();
        let rotated: Vec<_> = dirs.iter().map(|d| d.rotated(&haar_unitary(2, &mut rng))).collect();
        let a = bd_precoders(&dirs, 1.0).unwrap();
        let b = bd_precoders(&rotated, 1.0).unwrap();
        for i in 0..3 {
            let va = SubspacePoint::from_orthonormal(a.v[i].clone()).unwrap();
            let vb = SubspacePoint::from_orthonormal(b.v[i].clone()).unwrap();
            assert!(chordal_distance(&va, &vb).unwrap() <= 1e-7);
        }
    }

    #[test]
    fn bd_rejects_repeated_users() {
        let d = e(4, 0);
        let other = e(4, 1);
        // users 0 and 1 share a direction: user 2 sees a 2-dim stack in 4-space
        let users = [d.clone(), d, other.clone(), other];
        let res = bd_precoders(&users, 1.0);
        assert!(matches!(res, Err(Error::DegenerateInput(_))));
        let p = bd_precoders_rank_tolerant(&users, 1.0).unwrap();
        for i in 0..4 {
            assert!(p.v[i].orthonormality_error() < 1e-10);
            for j in (0..4).filter(|&j| j != i) {
                assert!(users[j].basis().adjoint_mul(&p.v[i]).frobenius_norm() < 1e-10);
            }
        }
    }

    #[test]
    fn bd_rejects_bad_layout() {
        assert!(bd_precoders(&[e(4, 0), e(4, 1)], 1.0).is_err());
        assert!(bd_precoders::<f64>(&[], 1.0).is_err());
    }

    #[test]
    fn zf_identity_channel_gives_standard_basis() {
        let users: Vec<CMatrix<f64>> = (0..4).map(|i| e(4, i).basis().clone()).collect();
        let p = zf_precoders(&users, 1.0).unwrap();
        for i in 0..4 {
            assert!((p.v[i][(i, 0)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zf_beams_are_orthogonal_to_other_antennas() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let chans: Vec<_> = (0..2).map(|u| sample_channel::<f64, _>(4, 2, u, &mut rng).unwrap()).collect();
            let p = zf_precoders(&chans, 1.0).unwrap();
            let all_h = chans[0].h.hstack(&chans[1].h);
            let all_v = p.v[0].hstack(&p.v[1]);
            let g = all_h.adjoint_mul(&all_v);
            for r in 0..4 {
                for c in 0..4 {
                    if r != c {
                        assert!(g[(r, c)].norm() <= 1e-10);
                    }
                }
                assert!((crate::linalg::norm(all_v.col(r)) - 1.0).abs() < 1e-12);
            }
            let _ = factorize(&chans[0]).unwrap();
        }
    }

    #[test]
    fn zf_singular_channel() {
        let users: Vec<CMatrix<f64>> = vec![e(2, 0).basis().clone(), e(2, 0).basis().clone()];
        assert!(matches!(zf_precoders(&users, 1.0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn scheme_parse() {
        assert_eq!("bd".parse::<Scheme>().unwrap(), Scheme::Bd);
        assert_eq!(Scheme::Zf.to_string(), "ZF");
        assert!("mmse".parse::<Scheme>().is_err());
    }
}
