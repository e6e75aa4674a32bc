//! Outer inverses with prescribed range and null space from the M-QR
//! factorization, and the Moore-Penrose, Drazin and group inverses built on
//! them.
//!
//! All formulas are evaluated slice by slice in the transform domain and
//! mapped back once, so a badly conditioned `M` enters the error only once.

use crate::algebra::{hat_ranks, invert_slices, MContext};
use crate::error::{mismatch, Error, Result};
use crate::mqr::{mqr_factorize, FullRankPair, MQrFactors};
use crate::tensor::{fmt_dims, Tensor3};
use crate::CMat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterVariant {
    /// `Q~ (R~ P* A Q~)^-1 R~ P*`
    QrB,
    /// `Q~ (Q~* W A Q~)^-1 Q~* W`
    QrD,
    /// `B (C A B)^-1 C` with `B = Q~`, `C = R~ P*`
    FullRankBc,
}

impl OuterVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            OuterVariant::QrB => "qr_b",
            OuterVariant::QrD => "qr_d",
            OuterVariant::FullRankBc => "full_rank_bc",
        }
    }
}

fn check_pair(a: &Tensor3, w: &Tensor3, ctx: &MContext) -> Result<()> {
    let (m, n, p) = a.dims();
    if w.dims() != (n, m, p) {
        return Err(mismatch("outer_inverse", fmt_dims((n, m, p)), fmt_dims(w.dims())));
    }
    if p != ctx.depth() {
        return Err(mismatch("outer_inverse", ctx.depth(), p));
    }
    Ok(())
}

/// `rank(W A) = rank(W) <= rank(A)`.
fn check_existence(a_hat: &[CMat], w_hat: &[CMat], tol: f64) -> Result<()> {
    let wa: Vec<CMat> = w_hat.iter().zip(a_hat).map(|(w, a)| w * a).collect();
    let sum = |v: Vec<usize>| v.iter().sum::<usize>();
    let (rw, rwa, ra) = (
        sum(hat_ranks(w_hat, tol)),
        sum(hat_ranks(&wa, tol)),
        sum(hat_ranks(a_hat, tol)),
    );
    if rwa != rw || rw > ra {
        return Err(Error::OuterInverseNotExist {
            reason: format!("rank(W*A) = {rwa}, rank(W) = {rw}, rank(A) = {ra}"),
        });
    }
    Ok(())
}

fn core_inverse(cores: Vec<CMat>) -> Result<Vec<CMat>> {
    invert_slices(cores).map_err(|e| match e {
        Error::SingularSlice { slice } => Error::OuterInverseNotExist {
            reason: format!("core tensor is singular in hat slice {slice}"),
        },
        other => other,
    })
}

/// Evaluates the chosen variant from M-QR factors of `W`.
fn outer_from_factors(
    a_hat: &[CMat],
    w_hat: &[CMat],
    f: &MQrFactors,
    ctx: &MContext,
    variant: OuterVariant,
) -> Result<Tensor3> {
    if !f.is_uniform() {
        return Err(Error::NonUniformRank {
            ranks: f.slice_ranks.clone(),
        });
    }
    if f.slice_rank == 0 {
        return Err(Error::EmptyRank);
    }
    let s = f.slice_rank;
    let q: Vec<CMat> = f.q_hat().iter().map(|q| q.columns(0, s).into_owned()).collect();
    // left factor of the core and of X: R~ P* for (b), Q~* W for (d)
    let left: Vec<CMat> = match variant {
        OuterVariant::QrB | OuterVariant::FullRankBc => f
            .r_hat()
            .iter()
            .zip(f.p_hat())
            .map(|(r, p)| r.rows(0, s) * p.adjoint())
            .collect(),
        OuterVariant::QrD => q.iter().zip(w_hat).map(|(q, w)| q.adjoint() * w).collect(),
    };
    let cores: Vec<CMat> = left
        .iter()
        .zip(a_hat)
        .zip(&q)
        .map(|((l, a), q)| l * a * q)
        .collect();
    let inv = core_inverse(cores)?;
    let x: Vec<CMat> = q
        .iter()
        .zip(&inv)
        .zip(&left)
        .map(|((q, c), l)| q * c * l)
        .collect();
    ctx.from_hat_slices(&x)
}

/// Outer inverse `A^(2)_{R(W), N(W)}` via the M-QR factorization of `W`.
///
/// The existence condition `rank(W *_M A) = rank(W) <= rank(A)` is checked
/// before anything is factorized.
pub fn outer_inverse_qr(
    a: &Tensor3,
    w: &Tensor3,
    ctx: &MContext,
    tol: Option<f64>,
    variant: OuterVariant,
) -> Result<Tensor3> {
    check_pair(a, w, ctx)?;
    let tol = tol.unwrap_or_else(|| ctx.default_rank_tol(a.nrows(), a.ncols()));
    let a_hat = ctx.hat_slices(a)?;
    let w_hat = ctx.hat_slices(w)?;
    check_existence(&a_hat, &w_hat, tol)?;
    let f = mqr_factorize(w, ctx, Some(tol))?;
    outer_from_factors(&a_hat, &w_hat, &f, ctx, variant)
}

/// `B (C A B)^-1 C` for a full-rank pair `(B, C)`.
pub fn outer_inverse_full_rank(a: &Tensor3, b: &Tensor3, c: &Tensor3, ctx: &MContext) -> Result<Tensor3> {
    let (m, n, p) = a.dims();
    let s = b.ncols();
    if b.dims() != (n, s, p) || c.dims() != (s, m, p) {
        return Err(mismatch(
            "outer_inverse_full_rank",
            format!("B {}, C {}", fmt_dims((n, s, p)), fmt_dims((s, m, p))),
            format!("B {}, C {}", fmt_dims(b.dims()), fmt_dims(c.dims())),
        ));
    }
    let a_hat = ctx.hat_slices(a)?;
    let b_hat = ctx.hat_slices(b)?;
    let c_hat = ctx.hat_slices(c)?;
    let cores: Vec<CMat> = (0..p).map(|i| &c_hat[i] * &a_hat[i] * &b_hat[i]).collect();
    let inv = core_inverse(cores)?;
    let x: Vec<CMat> = (0..p).map(|i| &b_hat[i] * &inv[i] * &c_hat[i]).collect();
    ctx.from_hat_slices(&x)
}

/// [`outer_inverse_full_rank`] from an already computed pair.
pub fn outer_inverse_from_pair(a: &Tensor3, pair: &FullRankPair, ctx: &MContext) -> Result<Tensor3> {
    outer_inverse_full_rank(a, &pair.b, &pair.c, ctx)
}

/// `A^dagger` as the outer inverse with `W = A*`.
///
/// The zero tensor has no rank to factor and yields `EmptyRank`; its
/// pseudoinverse is the zero tensor of transposed shape.
pub fn moore_penrose_qr(a: &Tensor3, ctx: &MContext, tol: Option<f64>) -> Result<Tensor3> {
    moore_penrose_variant(a, ctx, tol, OuterVariant::QrB)
}

pub fn moore_penrose_variant(
    a: &Tensor3,
    ctx: &MContext,
    tol: Option<f64>,
    variant: OuterVariant,
) -> Result<Tensor3> {
    let w = ctx.conj_transpose(a)?;
    // rank(A* A) = rank(A*) holds for every A; no existence check needed
    let tol = tol.unwrap_or_else(|| ctx.default_rank_tol(a.nrows(), a.ncols()));
    let f = mqr_factorize(&w, ctx, Some(tol))?;
    outer_from_factors(&ctx.hat_slices(a)?, &ctx.hat_slices(&w)?, &f, ctx, variant)
}

/// `A^D` as the outer inverse with `W = A^k`, `k = index_M(A)`.
///
/// `k_override` may raise `k`; a value below the computed index is rejected.
pub fn drazin_qr(a: &Tensor3, ctx: &MContext, tol: Option<f64>, k_override: Option<usize>) -> Result<Tensor3> {
    drazin_variant(a, ctx, tol, k_override, OuterVariant::QrB)
}

pub fn drazin_variant(
    a: &Tensor3,
    ctx: &MContext,
    tol: Option<f64>,
    k_override: Option<usize>,
    variant: OuterVariant,
) -> Result<Tensor3> {
    let index = ctx.index(a, tol)?;
    let k = match k_override {
        Some(k) if k < index => {
            return Err(Error::InvalidParameter(format!(
                "k = {k} is below the index {index}"
            )))
        }
        Some(k) => k,
        None => index,
    };
    let w = ctx.power(a, k)?;
    let tol = tol.unwrap_or_else(|| ctx.default_rank_tol(a.nrows(), a.ncols()));
    let f = mqr_factorize(&w, ctx, Some(tol))?;
    outer_from_factors(&ctx.hat_slices(a)?, &ctx.hat_slices(&w)?, &f, ctx, variant)
}

/// Group inverse: the Drazin inverse of an index-one tensor.
pub fn group_inverse_qr(a: &Tensor3, ctx: &MContext, tol: Option<f64>) -> Result<Tensor3> {
    let index = ctx.index(a, tol)?;
    if index != 1 {
        return Err(Error::IndexNotOne { index });
    }
    drazin_qr(a, ctx, tol, Some(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InverseKind {
    Mp,
    Drazin,
    Outer,
}

/// Frobenius norms of the defining equations. Only the fields relevant to
/// the inverse kind are filled.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ResidualReport {
    /// `|A - A X A|`
    pub e1: Option<f64>,
    /// `|X - X A X|`
    pub e2: Option<f64>,
    /// `|A X - (A X)*|`
    pub e3: Option<f64>,
    /// `|X A - (X A)*|`
    pub e4: Option<f64>,
    /// `|A X - X A|`
    pub e5: Option<f64>,
    /// `|X A^(k+1) - A^k|`
    pub e1k: Option<f64>,
}

impl ResidualReport {
    /// Largest filled residual.
    pub fn max(&self) -> f64 {
        [self.e1, self.e2, self.e3, self.e4, self.e5, self.e1k]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

/// Residuals of `X` as a generalized inverse of `A`. Each product is formed
/// in the transform domain and only the difference is mapped back.
pub fn residual_report(a: &Tensor3, x: &Tensor3, kind: InverseKind, k: usize, ctx: &MContext) -> Result<ResidualReport> {
    let (m, n, p) = a.dims();
    if x.dims() != (n, m, p) {
        return Err(mismatch("residual_report", fmt_dims((n, m, p)), fmt_dims(x.dims())));
    }
    let ah = ctx.hat_slices(a)?;
    let xh = ctx.hat_slices(x)?;
    let norm = |slices: Vec<CMat>| -> Result<f64> { Ok(ctx.from_hat_slices(&slices)?.fro_norm()) };
    let ax: Vec<CMat> = (0..p).map(|i| &ah[i] * &xh[i]).collect();
    let xa: Vec<CMat> = (0..p).map(|i| &xh[i] * &ah[i]).collect();
    let e2 = norm((0..p).map(|i| &xh[i] - &xa[i] * &xh[i]).collect())?;
    let mut r = ResidualReport {
        e2: Some(e2),
        ..Default::default()
    };
    match kind {
        InverseKind::Mp => {
            r.e1 = Some(norm((0..p).map(|i| &ah[i] - &ax[i] * &ah[i]).collect())?);
            r.e3 = Some(norm(ax.iter().map(|s| s - s.adjoint()).collect())?);
            r.e4 = Some(norm(xa.iter().map(|s| s - s.adjoint()).collect())?);
        }
        InverseKind::Drazin => {
            if m != n {
                return Err(mismatch("residual_report", "square frontal slices", fmt_dims(a.dims())));
            }
            r.e5 = Some(norm((0..p).map(|i| &ax[i] - &xa[i]).collect())?);
            let e1k = (0..p)
                .map(|i| {
                    let ak = (0..k).fold(CMat::identity(m, m), |acc, _| acc * &ah[i]);
                    &xa[i] * &ak - &ak
                })
                .collect();
            r.e1k = Some(norm(e1k)?);
        }
        InverseKind::Outer => {}
    }
    Ok(r)
}
