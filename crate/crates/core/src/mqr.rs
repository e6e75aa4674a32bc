//! M-QR decomposition with column pivoting, rank detection, and the
//! truncated factors that give a full-rank decomposition `W = B *_M C`.
//!
//! Each hat slice `W^(i)` is factored as `W^(i) P^(i) = Q^(i) R^(i)` by
//! Householder QR with column pivoting, so the diagonal of every `R^(i)` is
//! non-increasing in modulus and the leading `s` rows carry the rank.

use crate::algebra::MContext;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::{CMat, C64};

/// Householder QR with column pivoting of one complex matrix: `A P = Q R`.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    /// Unitary `n x n` factor.
    pub q: CMat,
    /// Upper-triangular `n x m` factor with non-increasing diagonal moduli.
    pub r: CMat,
    /// Column `j` of `A P` is column `perm[j]` of `A`.
    pub perm: Vec<usize>,
}

impl PivotedQr {
    pub fn permutation_matrix(&self) -> CMat {
        let m = self.perm.len();
        let mut p = CMat::zeros(m, m);
        for (j, &src) in self.perm.iter().enumerate() {
            p[(src, j)] = C64::new(1.0, 0.0);
        }
        p
    }
}

/// Column-pivoted Householder QR. At every step the remaining column of
/// largest norm is moved to the front; ties go to the lowest column index.
pub fn pivoted_qr(a: &CMat) -> PivotedQr {
    let (n, m) = a.shape();
    let mut r = a.clone();
    let mut q = CMat::identity(n, n);
    let mut perm: Vec<usize> = (0..m).collect();

    for k in 0..n.min(m) {
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..m {
            let norm = r.view((k, j), (n - k, 1)).norm_squared();
            if norm > best_norm {
                best = j;
                best_norm = norm;
            }
        }
        if best != k {
            r.swap_columns(k, best);
            perm.swap(k, best);
        }

        let x = r.view((k, k), (n - k, 1)).clone_owned();
        let norm_x = x.norm();
        if norm_x == 0.0 {
            // every remaining column is zero
            break;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        let mut v = x;
        v[0] -= alpha;
        let v_norm2 = v.norm_squared();
        if v_norm2 == 0.0 {
            continue;
        }
        let scale = C64::new(2.0 / v_norm2, 0.0);

        // R[k.., k..] -= 2 v (v* R) / |v|^2
        {
            let mut block = r.view_mut((k, k), (n - k, m - k));
            let w = v.adjoint() * &block;
            block -= &v * w * scale;
        }
        r[(k, k)] = alpha;
        for i in k + 1..n {
            r[(i, k)] = C64::new(0.0, 0.0);
        }

        // Q[.., k..] -= 2 (Q v) v* / |v|^2
        {
            let mut block = q.view_mut((0, k), (n, n - k));
            let w = &block * &v;
            block -= w * v.adjoint() * scale;
        }
    }

    PivotedQr { q, r, perm }
}

/// Factors of `W *_M P = Q *_M R`.
#[derive(Clone, Debug)]
pub struct MQrFactors {
    pub q: Tensor3,
    pub r: Tensor3,
    pub p: Tensor3,
    /// Common numerical rank of the hat slices (smallest slice rank when
    /// produced by [`mqr_factorize`] on a tensor of non-uniform rank).
    pub slice_rank: usize,
    pub slice_ranks: Vec<usize>,
    pub tol_used: f64,
    q_hat: Vec<CMat>,
    r_hat: Vec<CMat>,
    p_hat: Vec<CMat>,
}

impl MQrFactors {
    pub fn q_hat(&self) -> &[CMat] {
        &self.q_hat
    }

    pub fn r_hat(&self) -> &[CMat] {
        &self.r_hat
    }

    /// Exact permutation matrices of the hat slices.
    pub fn p_hat(&self) -> &[CMat] {
        &self.p_hat
    }

    pub fn is_uniform(&self) -> bool {
        self.slice_ranks.iter().all(|&s| s == self.slice_rank)
    }

    /// `(Q~, R~)`: the first `s` lateral slices of `Q` and the first `s`
    /// horizontal slices of `R`, cut in the hat domain.
    pub fn truncate(&self, ctx: &MContext) -> Result<(Tensor3, Tensor3)> {
        let s = self.slice_rank;
        if s == 0 {
            return Err(Error::EmptyRank);
        }
        if !self.is_uniform() {
            return Err(Error::NonUniformRank {
                ranks: self.slice_ranks.clone(),
            });
        }
        let q: Vec<CMat> = self.q_hat.iter().map(|q| q.columns(0, s).into_owned()).collect();
        let r: Vec<CMat> = self.r_hat.iter().map(|r| r.rows(0, s).into_owned()).collect();
        Ok((ctx.from_hat_slices(&q)?, ctx.from_hat_slices(&r)?))
    }
}

/// Per-slice ranks read off the pivoted `R` diagonals: leading entries with
/// `|r_jj| > tol * g` count, where `g` is the largest `|r_11|` over all
/// slices. Rounding from the transform lands in every slice at the scale of
/// the largest one, so a per-slice reference would count noise in small
/// slices.
pub fn slice_ranks_from_r(r_slices: &[CMat], tol: f64) -> Vec<usize> {
    let leads: Vec<f64> = r_slices
        .iter()
        .map(|r| if r.is_empty() { 0.0 } else { r[(0, 0)].norm() })
        .collect();
    let global = leads.iter().copied().fold(0.0, f64::max);
    r_slices
        .iter()
        .zip(&leads)
        .map(|(r, &lead)| {
            if lead == 0.0 || lead <= tol * global {
                return 0;
            }
            let d = r.nrows().min(r.ncols());
            (0..d).take_while(|&j| r[(j, j)].norm() > tol * global).count()
        })
        .collect()
}

/// The common slice rank `s`, or `NonUniformRank` when the slices disagree.
pub fn detect_uniform_rank(r_slices: &[CMat], tol: f64) -> Result<usize> {
    let ranks = slice_ranks_from_r(r_slices, tol);
    match ranks.first() {
        Some(&s) if ranks.iter().all(|&r| r == s) => Ok(s),
        Some(_) => Err(Error::NonUniformRank { ranks }),
        None => Ok(0),
    }
}

/// Pivoted QR of every hat slice of `W`, without requiring uniform rank.
pub fn mqr_factorize(w: &Tensor3, ctx: &MContext, tol: Option<f64>) -> Result<MQrFactors> {
    let (n, m, _) = w.dims();
    let tol = tol.unwrap_or_else(|| ctx.default_rank_tol(n, m));
    let hat = ctx.hat_slices(w)?;
    let qrs: Vec<PivotedQr> = hat.iter().map(pivoted_qr).collect();
    let q_hat: Vec<CMat> = qrs.iter().map(|f| f.q.clone()).collect();
    let p_hat: Vec<CMat> = qrs.iter().map(|f| f.permutation_matrix()).collect();
    let r_hat: Vec<CMat> = qrs.into_iter().map(|f| f.r).collect();
    let slice_ranks = slice_ranks_from_r(&r_hat, tol);
    let slice_rank = slice_ranks.iter().copied().min().unwrap_or(0);
    Ok(MQrFactors {
        q: ctx.from_hat_slices(&q_hat)?,
        r: ctx.from_hat_slices(&r_hat)?,
        p: ctx.from_hat_slices(&p_hat)?,
        slice_rank,
        slice_ranks,
        tol_used: tol,
        q_hat,
        r_hat,
        p_hat,
    })
}

/// M-QR decomposition `W *_M P = Q *_M R` with a common slice rank.
pub fn mqr_decompose(w: &Tensor3, ctx: &MContext, tol: Option<f64>) -> Result<MQrFactors> {
    let f = mqr_factorize(w, ctx, tol)?;
    detect_uniform_rank(&f.r_hat, f.tol_used)?;
    Ok(f)
}

/// `W = B *_M C` with `B` of size `n x s x p` and `C` of size `s x m x p`.
#[derive(Clone, Debug)]
pub struct FullRankPair {
    pub b: Tensor3,
    pub c: Tensor3,
}

/// Full-rank decomposition from the truncated M-QR factors:
/// `B = Q~`, `C = R~ *_M P*`.
pub fn full_rank_decomposition(w: &Tensor3, ctx: &MContext, tol: Option<f64>) -> Result<FullRankPair> {
    let f = mqr_decompose(w, ctx, tol)?;
    full_rank_from_factors(&f, ctx)
}

pub fn full_rank_from_factors(f: &MQrFactors, ctx: &MContext) -> Result<FullRankPair> {
    let s = f.slice_rank;
    if s == 0 {
        return Err(Error::EmptyRank);
    }
    if !f.is_uniform() {
        return Err(Error::NonUniformRank {
            ranks: f.slice_ranks.clone(),
        });
    }
    let b: Vec<CMat> = f.q_hat.iter().map(|q| q.columns(0, s).into_owned()).collect();
    let c: Vec<CMat> = f
        .r_hat
        .iter()
        .zip(&f.p_hat)
        .map(|(r, p)| r.rows(0, s) * p.adjoint())
        .collect();
    Ok(FullRankPair {
        b: ctx.from_hat_slices(&b)?,
        c: ctx.from_hat_slices(&c)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{chow, cycol, gearmat_default, random_dense};
    use crate::transform::TransformSpec;
    use nalgebra::DMatrix;

    fn cm(a: &DMatrix<f64>) -> CMat {
        a.map(|x| C64::new(x, 0.0))
    }

    fn check_matrix_qr(a: &CMat) {
        let f = pivoted_qr(a);
        let (n, m) = a.shape();
        let recon = (a * f.permutation_matrix() - &f.q * &f.r).norm();
        assert!(recon <= 1e-13 * a.norm().max(1.0), "recon {recon}");
        assert!((f.q.adjoint() * &f.q - CMat::identity(n, n)).norm() < 1e-13 * n as f64);
        for j in 0..m {
            for i in j + 1..n {
                assert_eq!(f.r[(i, j)], C64::new(0.0, 0.0));
            }
        }
        let d = n.min(m);
        for j in 1..d {
            assert!(f.r[(j, j)].norm() <= f.r[(j - 1, j - 1)].norm() * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn matrix_qr_shapes_and_properties() {
        check_matrix_qr(&cm(&chow(6, 1.0, 0.0)));
        check_matrix_qr(&cm(&gearmat_default(7)));
        check_matrix_qr(&cm(&cycol(5, 8, 3, 1).unwrap()));
        check_matrix_qr(&cm(&cycol(8, 5, 2, 1).unwrap()));
        let complex = CMat::from_fn(4, 6, |i, j| C64::new((i * j) as f64 - 2.0, (i + 2 * j) as f64 % 3.0));
        check_matrix_qr(&complex);
        check_matrix_qr(&CMat::zeros(3, 4));
    }

    #[test]
    fn ties_pick_lowest_index() {
        let a = CMat::identity(3, 3);
        let f = pivoted_qr(&a);
        assert_eq!(f.perm, vec![0, 1, 2]);
        let b = cm(&DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, 0.0]));
        assert_eq!(pivoted_qr(&b).perm[0], 2);
    }

    fn contexts(p: usize) -> Vec<MContext> {
        vec![
            MContext::new(TransformSpec::dft(p).unwrap()),
            MContext::new(TransformSpec::m1(p).unwrap()),
            MContext::new(TransformSpec::random_invertible(p, 3).unwrap()),
        ]
    }

    fn check_factors(w: &Tensor3, ctx: &MContext, f: &MQrFactors) {
        let (n, _, p) = w.dims();
        let wp = ctx.product(w, &f.p).unwrap();
        let qr = ctx.product(&f.q, &f.r).unwrap();
        assert!(wp.distance(&qr).unwrap() <= 1e-10 * w.fro_norm().max(1e-300));
        let qq = ctx.product(&f.q, &ctx.conj_transpose(&f.q).unwrap()).unwrap();
        assert!(qq.distance(&ctx.identity(n)).unwrap() <= 1e-10 * ((n * p) as f64).sqrt());
        for ph in f.p_hat() {
            for i in 0..ph.nrows() {
                let ones = ph.row(i).iter().filter(|z| (*z - C64::new(1.0, 0.0)).norm() < 1e-12).count();
                let zeros = ph.row(i).iter().filter(|z| z.norm() < 1e-12).count();
                assert_eq!((ones, zeros), (1, ph.ncols() - 1));
            }
        }
        let kappa = ctx.transform().condition().max(1.0);
        let p_back = ctx.hat_slices(&f.p).unwrap();
        for (a, b) in p_back.iter().zip(f.p_hat()) {
            assert!((a - b).norm() <= 1e-12 * kappa);
        }
        let largest = f.r_hat().iter().map(|r| r.norm()).fold(0.0, f64::max);
        for (r, &rank) in f.r_hat().iter().zip(&f.slice_ranks) {
            // a slice judged numerically zero is measured against the largest slice
            let norm = if rank == 0 { largest } else { r.norm() };
            for i in rank..r.nrows() {
                assert!(r.row(i).norm() <= f.tol_used * norm + 1e-300);
            }
        }
    }

    #[test]
    fn identity_and_zero() {
        for ctx in contexts(3) {
            let id = ctx.identity(4);
            let f = mqr_decompose(&id, &ctx, None).unwrap();
            assert_eq!(f.slice_rank, 4);
            check_factors(&id, &ctx, &f);

            let z = Tensor3::zeros(3, 5, 3);
            let f = mqr_decompose(&z, &ctx, None).unwrap();
            assert_eq!(f.slice_rank, 0);
            assert_eq!(f.r.fro_norm(), 0.0);
            assert_eq!(f.truncate(&ctx).unwrap_err(), Error::EmptyRank);
        }
    }

    #[test]
    fn chow_slices_under_random_transform() {
        let ctx = MContext::new(TransformSpec::random_invertible(2, 8).unwrap());
        let w = Tensor3::from_real_slices(&[chow(4, 1.0, 0.0), chow(4, 1.0, 0.0)]).unwrap();
        let f = mqr_decompose(&w, &ctx, None).unwrap();
        check_factors(&w, &ctx, &f);
        // hat slices are nonzero multiples of chow(4), whose SVD rank is 3
        let sv = chow(4, 1.0, 0.0).singular_values();
        assert_eq!(sv.iter().filter(|&&s| s > 1e-10).count(), 3);
        assert_eq!(f.slice_rank, 3);
    }

    #[test]
    fn dft_of_identical_slices_is_non_uniform() {
        let ctx = MContext::new(TransformSpec::dft(2).unwrap());
        let w = Tensor3::from_real_slices(&[chow(4, 1.0, 0.0), chow(4, 1.0, 0.0)]).unwrap();
        assert_eq!(
            mqr_decompose(&w, &ctx, None).unwrap_err(),
            Error::NonUniformRank { ranks: vec![3, 0] }
        );
        let f = mqr_factorize(&w, &ctx, None).unwrap();
        check_factors(&w, &ctx, &f);
    }

    #[test]
    fn detect_uniform_rank_cases() {
        let full: Vec<CMat> = (0..3).map(|_| CMat::identity(4, 4) * C64::new(2.0, 0.0)).collect();
        assert_eq!(detect_uniform_rank(&full, 1e-12).unwrap(), 4);
        let mut a = CMat::zeros(3, 3);
        a[(0, 0)] = C64::new(3.0, 0.0);
        a[(1, 1)] = C64::new(1.0, 0.0);
        let mut b = a.clone();
        b[(2, 2)] = C64::new(0.5, 0.0);
        assert_eq!(
            detect_uniform_rank(&[a, b], 1e-12).unwrap_err(),
            Error::NonUniformRank { ranks: vec![2, 3] }
        );
    }

    #[test]
    fn cycol_rank_equals_period() {
        for ctx in contexts(3) {
            let slices: Vec<_> = (0..3).map(|i| cycol(6, 6, 2, 40 + i).unwrap()).collect();
            let w = Tensor3::from_real_slices(&slices).unwrap();
            let f = mqr_decompose(&w, &ctx, None).unwrap();
            assert_eq!(f.slice_rank, 2);
            // SVD oracle on each hat slice
            for h in ctx.hat_slices(&w).unwrap() {
                let sv = h.singular_values();
                assert_eq!(sv.iter().filter(|&&s| s > 1e-9 * sv.max()).count(), 2);
            }
            check_factors(&w, &ctx, &f);
        }
    }

    #[test]
    fn truncation_and_full_rank_pair() {
        for ctx in contexts(2) {
            let id = ctx.identity(3);
            let f = mqr_decompose(&id, &ctx, None).unwrap();
            let (qt, rt) = f.truncate(&ctx).unwrap();
            assert!(qt.distance(&f.q).unwrap() < 1e-12);
            assert_eq!(rt.dims(), (3, 3, 2));
            let pair = full_rank_decomposition(&id, &ctx, None).unwrap();
            let bc = ctx.product(&pair.b, &pair.c).unwrap();
            assert!(bc.distance(&id).unwrap() <= 1e-10 * id.fro_norm());

            // rank one per slice: u *_M v*
            let u = random_dense(4, 1, 2, 5);
            let v = random_dense(3, 1, 2, 6);
            let w = ctx.product(&u, &ctx.conj_transpose(&v).unwrap()).unwrap();
            let f = mqr_decompose(&w, &ctx, None).unwrap();
            assert_eq!(f.slice_rank, 1);
            let (qt, rt) = f.truncate(&ctx).unwrap();
            let qtq = ctx.product(&ctx.conj_transpose(&qt).unwrap(), &qt).unwrap();
            assert!(qtq.distance(&ctx.identity(1)).unwrap() < 1e-10);
            let recon = ctx.product(&qt, &rt).unwrap();
            let wp = ctx.product(&w, &f.p).unwrap();
            assert!(recon.distance(&wp).unwrap() <= 1e-10 * w.fro_norm());
        }
    }

    #[test]
    fn gearmat_full_rank_pair() {
        let ctx = MContext::new(TransformSpec::random_invertible(3, 12).unwrap());
        let g = gearmat_default(5);
        let w = Tensor3::from_real_slices(&[g.clone(), g.clone(), g]).unwrap();
        let pair = full_rank_decomposition(&w, &ctx, None).unwrap();
        let bc = ctx.product(&pair.b, &pair.c).unwrap();
        assert!(w.distance(&bc).unwrap() <= 1e-10 * w.fro_norm());
        let s = pair.b.ncols();
        assert_eq!(ctx.rank(&pair.b, None).unwrap(), s * 3);
        assert_eq!(ctx.rank(&pair.c, None).unwrap(), s * 3);
        assert_eq!(ctx.rank(&w, None).unwrap(), s * 3);
    }
}
