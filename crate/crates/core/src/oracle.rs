//! Brute-force reference implementations on the block-diagonal `mat`
//! representation.
//!
//! Nothing here goes through [`crate::algebra`], [`crate::mqr`] or
//! [`crate::hyperpower`]; only [`Tensor3`] and [`TransformSpec`] are shared.
//! Every generalized inverse is built from per-block SVDs. The code favours
//! clarity over speed and is meant for small tensors.

use crate::error::{mismatch, Error, Result};
use crate::tensor::Tensor3;
use crate::transform::TransformSpec;
use crate::{CMat, C64};

/// `mat(A)`: the hat slices of `A` as the diagonal blocks of an `mp x np` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagMatrix {
    pub blocks: Vec<CMat>,
    pub block_dims: (usize, usize),
}

impl BlockDiagMatrix {
    pub fn to_dense(&self) -> CMat {
        let (m, n) = self.block_dims;
        let p = self.blocks.len();
        let mut out = CMat::zeros(m * p, n * p);
        for (i, b) in self.blocks.iter().enumerate() {
            out.view_mut((i * m, i * n), (m, n)).copy_from(b);
        }
        out
    }

    pub fn mul(&self, rhs: &BlockDiagMatrix) -> Result<BlockDiagMatrix> {
        if self.blocks.len() != rhs.blocks.len() || self.block_dims.1 != rhs.block_dims.0 {
            return Err(mismatch(
                "BlockDiagMatrix::mul",
                format!("{:?} x {} blocks", self.block_dims, self.blocks.len()),
                format!("{:?} x {} blocks", rhs.block_dims, rhs.blocks.len()),
            ));
        }
        Ok(BlockDiagMatrix {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a * b).collect(),
            block_dims: (self.block_dims.0, rhs.block_dims.1),
        })
    }

    pub fn adjoint(&self) -> BlockDiagMatrix {
        BlockDiagMatrix {
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
            block_dims: (self.block_dims.1, self.block_dims.0),
        }
    }
}

pub fn mat(a: &Tensor3, t: &TransformSpec) -> Result<BlockDiagMatrix> {
    let hat = t.to_hat(a)?;
    Ok(BlockDiagMatrix {
        blocks: hat.slices(),
        block_dims: (a.nrows(), a.ncols()),
    })
}

pub fn mat_inv(b: &BlockDiagMatrix, t: &TransformSpec) -> Result<Tensor3> {
    if b.blocks.len() != t.size() {
        return Err(mismatch("mat_inv", t.size(), b.blocks.len()));
    }
    let hat = Tensor3::from_slices(&b.blocks)?;
    t.from_hat(&hat)
}

/// Default relative singular-value cutoff, `max(m, n) * eps * max(1, cond(M))`.
pub fn default_cutoff(m: usize, n: usize, t: &TransformSpec) -> f64 {
    m.max(n).max(1) as f64 * f64::EPSILON * t.condition().max(1.0)
}

struct BlockSvd {
    u: CMat,
    s: Vec<f64>,
    v_t: CMat,
}

/// Thin SVD with singular values in decreasing order. nalgebra 0.35 returns
/// wrong singular vectors for some rank-deficient complex blocks, so this
/// goes through faer.
fn svd(b: &CMat) -> BlockSvd {
    let (rows, cols) = b.shape();
    let k = rows.min(cols);
    if k == 0 {
        return BlockSvd {
            u: CMat::zeros(rows, 0),
            s: Vec::new(),
            v_t: CMat::zeros(0, cols),
        };
    }
    let f = faer::Mat::<C64>::from_fn(rows, cols, |i, j| b[(i, j)])
        .thin_svd()
        .expect("SVD of a finite block converges");
    let (u, s, v) = (f.U(), f.S().column_vector(), f.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].re.total_cmp(&s[i].re));
    BlockSvd {
        u: CMat::from_fn(rows, k, |r, c| u[(r, order[c])]),
        s: order.iter().map(|&i| s[i].re).collect(),
        v_t: CMat::from_fn(k, cols, |r, c| v[(c, order[r])].conj()),
    }
}

/// Numerical ranks of all blocks: singular values above `tol` times the
/// largest singular value of `mat(A)`.
fn block_ranks(svds: &[BlockSvd], tol: f64) -> Vec<usize> {
    let global = svds
        .iter()
        .map(|f| f.s.first().copied().unwrap_or(0.0))
        .fold(0.0, f64::max);
    svds.iter()
        .map(|f| f.s.iter().filter(|&&s| s > 0.0 && s > tol * global).count())
        .collect()
}

/// `V_r S_r^-1 U_r*`, keeping the `r` leading singular triplets.
fn truncated_pinv(f: &BlockSvd, r: usize) -> CMat {
    let (rows, cols) = (f.u.nrows(), f.v_t.ncols());
    let mut out = CMat::zeros(cols, rows);
    for k in 0..r {
        let inv = C64::new(1.0 / f.s[k], 0.0);
        out += f.v_t.row(k).adjoint() * f.u.column(k).adjoint() * inv;
    }
    out
}

/// `A^dagger = mat^-1(mat(A)^dagger)` with a per-block SVD pseudoinverse.
pub fn oracle_pinv(a: &Tensor3, t: &TransformSpec, tol: Option<f64>) -> Result<Tensor3> {
    let tol = tol.unwrap_or_else(|| default_cutoff(a.nrows(), a.ncols(), t));
    let m = mat(a, t)?;
    let svds: Vec<BlockSvd> = m.blocks.iter().map(svd).collect();
    let ranks = block_ranks(&svds, tol);
    let blocks = svds.iter().zip(&ranks).map(|(f, &r)| truncated_pinv(f, r)).collect();
    mat_inv(
        &BlockDiagMatrix {
            blocks,
            block_dims: (a.ncols(), a.nrows()),
        },
        t,
    )
}

fn power(b: &CMat, k: usize) -> CMat {
    (0..k).fold(CMat::identity(b.nrows(), b.ncols()), |acc, _| acc * b)
}

/// Per block: the index `k` and `rank(B^k)`. With `g` the largest singular
/// value over all blocks and `b = sigma_max(B) / g`, singular values of
/// `(B / g)^j` count above `tol * b^(j-1)`.
fn block_index(b: &CMat, global: f64, tol: f64) -> (usize, usize) {
    let n = b.nrows();
    let top = svd(b).s.first().copied().unwrap_or(0.0);
    if top == 0.0 || top <= tol * global {
        return (1, 0);
    }
    let unit = b / C64::new(global, 0.0);
    let rel_top = top / global;
    let mut prev = n;
    let mut pw = CMat::identity(n, n);
    for k in 0..=n {
        pw = &pw * &unit;
        let cut = tol * rel_top.powi(k as i32);
        let rank = svd(&pw).s.iter().filter(|&&s| s > cut).count();
        if rank == prev {
            return (k, rank);
        }
        prev = rank;
    }
    (n, prev)
}

/// `A^D = mat^-1(mat(A)^D)`, each block by `B^k (B^(2k+1))^dagger B^k` with
/// `k` the block index.
pub fn oracle_drazin(a: &Tensor3, t: &TransformSpec) -> Result<Tensor3> {
    let (m, n, _) = a.dims();
    if m != n {
        return Err(mismatch("oracle_drazin", "square slices", format!("{m}x{n}")));
    }
    let tol = default_cutoff(m, n, t);
    let blocks_in = mat(a, t)?.blocks;
    let global = blocks_in
        .iter()
        .map(|b| svd(b).s.first().copied().unwrap_or(0.0))
        .fold(0.0, f64::max);
    let blocks = blocks_in
        .iter()
        .map(|b| {
            let (k, r) = block_index(b, global, tol);
            if r == 0 {
                return CMat::zeros(m, m);
            }
            let bk = power(b, k);
            let core = power(b, 2 * k + 1);
            &bk * truncated_pinv(&svd(&core), r) * &bk
        })
        .collect();
    mat_inv(
        &BlockDiagMatrix {
            blocks,
            block_dims: (m, m),
        },
        t,
    )
}

/// Outer inverse with range `R(W)` and null space `N(W)`, per block
/// `B (C A B)^-1 C` from an SVD full-rank factorization `W = B C`.
pub fn outer_via_mat(a: &Tensor3, w: &Tensor3, t: &TransformSpec) -> Result<Tensor3> {
    let (m, n, _) = a.dims();
    if w.dims() != (n, m, a.depth()) {
        return Err(mismatch("outer_via_mat", format!("W of size {n}x{m}"), format!("{:?}", w.dims())));
    }
    let tol = default_cutoff(n, m, t);
    let ma = mat(a, t)?;
    let mw = mat(w, t)?;
    let svds: Vec<BlockSvd> = mw.blocks.iter().map(svd).collect();
    let ranks = block_ranks(&svds, tol);
    let mut blocks = Vec::with_capacity(ranks.len());
    for (i, (f, &s)) in svds.iter().zip(&ranks).enumerate() {
        if s == 0 {
            blocks.push(CMat::zeros(n, m));
            continue;
        }
        let sigma = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            s,
            f.s[..s].iter().map(|&x| C64::new(x, 0.0)),
        ));
        let b = f.u.columns(0, s) * sigma;
        let c = f.v_t.rows(0, s).into_owned();
        let core = &c * &ma.blocks[i] * &b;
        let core_sv = svd(&core).s;
        let (hi, lo) = (core_sv[0], core_sv[core_sv.len() - 1]);
        if !(lo > 1e-12 * hi) {
            return Err(Error::OuterInverseNotExist {
                reason: format!("block {i}: C A B is singular"),
            });
        }
        let inv = core.lu().try_inverse().ok_or_else(|| Error::OuterInverseNotExist {
            reason: format!("block {i}: C A B is singular"),
        })?;
        blocks.push(b * inv * c);
    }
    mat_inv(
        &BlockDiagMatrix {
            blocks,
            block_dims: (n, m),
        },
        t,
    )
}

/// t-product by circular convolution of frontal slices:
/// `C(:,:,l) = sum_s A(:,:,s) B(:,:,(l - s) mod p)`. No transform involved.
pub fn t_product_direct(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let (m, n, p) = a.dims();
    let (n2, k, p2) = b.dims();
    if n != n2 || p != p2 {
        return Err(mismatch("t_product_direct", format!("{n}x?x{p}"), format!("{n2}x{k}x{p2}")));
    }
    let mut slices = vec![CMat::zeros(m, k); p];
    for (l, out) in slices.iter_mut().enumerate() {
        for s in 0..p {
            *out += a.slice(s) * b.slice((l + p - s) % p);
        }
    }
    Tensor3::from_slices(&slices)
}

/// `mat(A) = mat(A)*` within `tol` (relative to `|mat(A)|_F`).
pub fn is_hermitian(a: &Tensor3, t: &TransformSpec, tol: f64) -> Result<bool> {
    if a.nrows() != a.ncols() {
        return Ok(false);
    }
    let m = mat(a, t)?;
    let scale = m.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt();
    let diff = m
        .blocks
        .iter()
        .map(|b| (b - b.adjoint()).norm_squared())
        .sum::<f64>()
        .sqrt();
    Ok(diff <= tol * scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{example_4_2, random_dense};

    fn transforms(p: usize) -> Vec<TransformSpec> {
        vec![
            TransformSpec::dft(p).unwrap(),
            TransformSpec::m1(p).unwrap(),
            TransformSpec::random_invertible(p, 19).unwrap(),
        ]
    }

    fn identity(m: usize, t: &TransformSpec) -> Tensor3 {
        mat_inv(
            &BlockDiagMatrix {
                blocks: vec![CMat::identity(m, m); t.size()],
                block_dims: (m, m),
            },
            t,
        )
        .unwrap()
    }

    fn rel(a: &Tensor3, b: &Tensor3) -> f64 {
        a.distance(b).unwrap() / b.fro_norm().max(f64::MIN_POSITIVE)
    }

    /// Penrose residuals computed blockwise, relative to |mat(A)|.
    fn penrose_block_residuals(a: &Tensor3, x: &Tensor3, t: &TransformSpec) -> [f64; 4] {
        let ma = mat(a, t).unwrap();
        let mx = mat(x, t).unwrap();
        let ax = ma.mul(&mx).unwrap();
        let xa = mx.mul(&ma).unwrap();
        let d = |l: &BlockDiagMatrix, r: &BlockDiagMatrix| (l.to_dense() - r.to_dense()).norm();
        let na = ma.to_dense().norm();
        [
            d(&ax.mul(&ma).unwrap(), &ma) / na,
            d(&xa.mul(&mx).unwrap(), &mx) / mx.to_dense().norm(),
            d(&ax, &ax.adjoint()) / na,
            d(&xa, &xa.adjoint()) / na,
        ]
    }

    #[test]
    fn mat_roundtrip_and_structure() {
        for t in transforms(3) {
            let id = identity(4, &t);
            for b in mat(&id, &t).unwrap().blocks {
                assert!((b - CMat::identity(4, 4)).norm() < 1e-12);
            }
            let z = Tensor3::zeros(2, 3, 3);
            assert!(mat(&z, &t).unwrap().blocks.iter().all(|b| b.norm() == 0.0));
            let a = random_dense(3, 2, 3, 1);
            let back = mat_inv(&mat(&a, &t).unwrap(), &t).unwrap();
            assert!(rel(&back, &a) <= 1e-12);
            assert_eq!(mat(&a, &t).unwrap().to_dense().shape(), (9, 6));
        }
    }

    #[test]
    fn mat_inv_two_blocks_by_hand() {
        // DFT p = 2: spatial slices are (B1 + B2) / 2 and (B1 - B2) / 2
        let t = TransformSpec::dft(2).unwrap();
        let b1 = CMat::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 1.0));
        let b2 = CMat::from_fn(2, 2, |i, j| C64::new(i as f64 - j as f64, -2.0));
        let a = mat_inv(
            &BlockDiagMatrix {
                blocks: vec![b1.clone(), b2.clone()],
                block_dims: (2, 2),
            },
            &t,
        )
        .unwrap();
        let half = C64::new(0.5, 0.0);
        assert!((a.slice(0) - (&b1 + &b2) * half).norm() < 1e-14);
        assert!((a.slice(1) - (&b1 - &b2) * half).norm() < 1e-14);

        let single = TransformSpec::dft(1).unwrap();
        let one = mat_inv(
            &BlockDiagMatrix {
                blocks: vec![b1.clone()],
                block_dims: (2, 2),
            },
            &single,
        )
        .unwrap();
        assert_eq!(one.slice(0), b1);
        assert!(mat_inv(
            &BlockDiagMatrix {
                blocks: vec![b1],
                block_dims: (2, 2)
            },
            &t
        )
        .is_err());
    }

    #[test]
    fn pinv_cases() {
        for t in transforms(2) {
            let id = identity(3, &t);
            assert!(rel(&oracle_pinv(&id, &t, None).unwrap(), &id) < 1e-12);
            let z = Tensor3::zeros(4, 2, 2);
            let zp = oracle_pinv(&z, &t, None).unwrap();
            assert_eq!(zp.dims(), (2, 4, 2));
            assert_eq!(zp.fro_norm(), 0.0);
            let a = random_dense(5, 3, 2, 8);
            let x = oracle_pinv(&a, &t, None).unwrap();
            for r in penrose_block_residuals(&a, &x, &t) {
                assert!(r <= 1e-10, "{r}");
            }
        }
    }

    #[test]
    fn drazin_cases() {
        for t in transforms(3) {
            let a = random_dense(3, 3, 3, 2);
            let inv = mat(&a, &t).unwrap().blocks.iter().map(|b| b.clone().try_inverse().unwrap()).collect();
            let expected = mat_inv(&BlockDiagMatrix { blocks: inv, block_dims: (3, 3) }, &t).unwrap();
            assert!(rel(&oracle_drazin(&a, &t).unwrap(), &expected) < 1e-10);

            let shift = CMat::from_fn(3, 3, |i, j| if j == i + 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
            let nil = mat_inv(&BlockDiagMatrix { blocks: vec![shift; 3], block_dims: (3, 3) }, &t).unwrap();
            assert!(oracle_drazin(&nil, &t).unwrap().fro_norm() < 1e-12);

            let e = example_4_2();
            let x = oracle_drazin(&e, &t).unwrap();
            let (ma, mx) = (mat(&e, &t).unwrap(), mat(&x, &t).unwrap());
            let ax = ma.mul(&mx).unwrap();
            let xa = mx.mul(&ma).unwrap();
            let norm = |b: &BlockDiagMatrix| b.to_dense().norm();
            let e1k = (xa.mul(&ma).unwrap().to_dense() - ma.to_dense()).norm() / norm(&ma);
            let e2 = (xa.mul(&mx).unwrap().to_dense() - mx.to_dense()).norm() / norm(&mx);
            let e5 = (ax.to_dense() - xa.to_dense()).norm() / norm(&ma);
            assert!(e1k <= 1e-9 && e2 <= 1e-9 && e5 <= 1e-9, "{e1k} {e2} {e5}");
        }
    }

    #[test]
    fn outer_specializations() {
        for t in transforms(2) {
            let a = random_dense(4, 3, 2, 30);
            let astar = mat_inv(&mat(&a, &t).unwrap().adjoint(), &t).unwrap();
            let x = outer_via_mat(&a, &astar, &t).unwrap();
            assert!(rel(&x, &oracle_pinv(&a, &t, None).unwrap()) <= 1e-9);

            let w = {
                let b = random_dense(3, 2, 2, 31);
                let c = random_dense(2, 4, 2, 32);
                mat_inv(&mat(&b, &t).unwrap().mul(&mat(&c, &t).unwrap()).unwrap(), &t).unwrap()
            };
            let x = outer_via_mat(&a, &w, &t).unwrap();
            let (ma, mx) = (mat(&a, &t).unwrap(), mat(&x, &t).unwrap());
            let xax = mx.mul(&ma).unwrap().mul(&mx).unwrap();
            assert!((xax.to_dense() - mx.to_dense()).norm() <= 1e-9 * mx.to_dense().norm());
        }
        for t in transforms(3) {
            let e = example_4_2();
            let x = outer_via_mat(&e, &e, &t).unwrap();
            assert!(rel(&x, &oracle_drazin(&e, &t).unwrap()) <= 1e-9);
        }
    }

    #[test]
    fn rank_one_blocks() {
        // nalgebra's complex SVD got the singular vectors of one of these
        // blocks wrong
        let t = TransformSpec::random_invertible(4, 329).unwrap();
        let a = random_dense(5, 6, 4, 429);
        let (b, c) = (t.to_hat(&random_dense(6, 1, 4, 529)).unwrap(), t.to_hat(&random_dense(1, 5, 4, 629)).unwrap());
        let w_hat: Vec<CMat> = b.slices().iter().zip(c.slices()).map(|(b, c)| b * c).collect();
        let w = t.from_hat(&Tensor3::from_slices(&w_hat).unwrap()).unwrap();
        let x = mat(&outer_via_mat(&a, &w, &t).unwrap(), &t).unwrap();
        let a_hat = mat(&a, &t).unwrap();
        for i in 0..4 {
            let (u, v) = (b.slice(i).into_owned(), c.slice(i).into_owned());
            let expected = &u * (&v * &a_hat.blocks[i] * &u)[(0, 0)].inv() * &v;
            assert!((&x.blocks[i] - &expected).norm() <= 1e-10 * expected.norm());
        }
    }

    #[test]
    fn outer_detects_singular_core() {
        // A annihilates the range of W: C A B = 0
        let t = TransformSpec::dft(1).unwrap();
        let a = Tensor3::from_real_slices(&[nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])]).unwrap();
        let w = Tensor3::from_real_slices(&[nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])]).unwrap();
        assert!(matches!(outer_via_mat(&a, &w, &t), Err(Error::OuterInverseNotExist { .. })));
    }

    #[test]
    fn t_product_basics() {
        let a = random_dense(3, 4, 1, 1);
        let b = random_dense(4, 2, 1, 2);
        let c = t_product_direct(&a, &b).unwrap();
        assert!((c.slice(0) - a.slice(0) * b.slice(0)).norm() < 1e-14);

        let a = random_dense(3, 3, 4, 3);
        let mut delta = Tensor3::zeros(3, 3, 4);
        for i in 0..3 {
            delta.set(i, i, 0, C64::new(1.0, 0.0));
        }
        assert_eq!(t_product_direct(&a, &delta).unwrap(), a);
        assert!(t_product_direct(&a, &random_dense(2, 3, 4, 1)).is_err());
    }

    #[test]
    fn hermitian_predicate() {
        for t in transforms(3) {
            let a = random_dense(3, 3, 3, 5);
            let astar = mat_inv(&mat(&a, &t).unwrap().adjoint(), &t).unwrap();
            let sym = mat_inv(&mat(&a, &t).unwrap().mul(&mat(&astar, &t).unwrap()).unwrap(), &t).unwrap();
            assert!(is_hermitian(&sym, &t, 1e-10).unwrap());
            assert!(!is_hermitian(&a, &t, 1e-10).unwrap());
        }
    }
}
