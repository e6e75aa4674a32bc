//! M-product algebra: products, adjoints, identity, inverse, powers, rank and index.
//!
//! Every operation maps its operands to the hat domain, works slice by slice
//! there, and maps the result back.

use crate::error::{mismatch, Error, Result};
use crate::tensor::{fmt_dims, Tensor3};
use crate::transform::TransformSpec;
use crate::{CMat, C64};

/// Nonsingularity gate for hat slices: `sigma_min > INVERSE_GATE * sigma_max`.
pub const INVERSE_GATE: f64 = 1e-12;

/// The transform shared by all tensors combined in one computation.
#[derive(Clone, Debug)]
pub struct MContext {
    transform: TransformSpec,
}

impl MContext {
    pub fn new(transform: TransformSpec) -> Self {
        Self { transform }
    }

    pub fn transform(&self) -> &TransformSpec {
        &self.transform
    }

    pub fn depth(&self) -> usize {
        self.transform.size()
    }

    fn check_depth(&self, op: &'static str, a: &Tensor3) -> Result<()> {
        if a.depth() != self.depth() {
            return Err(mismatch(op, format!("third dimension {}", self.depth()), a.depth()));
        }
        Ok(())
    }

    pub fn to_hat(&self, a: &Tensor3) -> Result<Tensor3> {
        self.check_depth("to_hat", a)?;
        self.transform.to_hat(a)
    }

    pub fn from_hat(&self, a_hat: &Tensor3) -> Result<Tensor3> {
        self.check_depth("from_hat", a_hat)?;
        self.transform.from_hat(a_hat)
    }

    /// Frontal slices of `A x3 M`.
    pub fn hat_slices(&self, a: &Tensor3) -> Result<Vec<CMat>> {
        Ok(self.to_hat(a)?.slices())
    }

    /// Assembles hat-domain slices and maps them back to the spatial domain.
    pub fn from_hat_slices(&self, slices: &[CMat]) -> Result<Tensor3> {
        if slices.len() != self.depth() {
            return Err(mismatch("from_hat_slices", self.depth(), slices.len()));
        }
        self.from_hat(&Tensor3::from_slices(slices)?)
    }

    /// `A *_M B`.
    pub fn product(&self, a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
        self.check_depth("m_product", a)?;
        self.check_depth("m_product", b)?;
        if a.ncols() != b.nrows() {
            return Err(mismatch("m_product", fmt_dims(a.dims()), fmt_dims(b.dims())));
        }
        let a_hat = self.transform.to_hat(a)?;
        let b_hat = self.transform.to_hat(b)?;
        let slices: Vec<CMat> = (0..self.depth())
            .map(|i| a_hat.slice(i) * b_hat.slice(i))
            .collect();
        self.from_hat_slices(&slices)
    }

    /// Left-to-right product of a chain of tensors.
    pub fn chain(&self, factors: &[&Tensor3]) -> Result<Tensor3> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty product chain".into()))?;
        let mut hat = self.hat_slices(first)?;
        for f in rest {
            self.check_depth("m_product", f)?;
            if hat[0].ncols() != f.nrows() {
                return Err(mismatch(
                    "m_product",
                    format!("{} rows", hat[0].ncols()),
                    fmt_dims(f.dims()),
                ));
            }
            let f_hat = self.transform.to_hat(f)?;
            for (i, h) in hat.iter_mut().enumerate() {
                *h = &*h * f_hat.slice(i);
            }
        }
        self.from_hat_slices(&hat)
    }

    /// `A*`: the hat slices are conjugate-transposed.
    pub fn conj_transpose(&self, a: &Tensor3) -> Result<Tensor3> {
        let slices: Vec<CMat> = self.hat_slices(a)?.iter().map(|s| s.adjoint()).collect();
        self.from_hat_slices(&slices)
    }

    /// The tensor whose every hat slice is `I_m`.
    pub fn identity(&self, m: usize) -> Tensor3 {
        let slices = vec![CMat::identity(m, m); self.depth()];
        self.from_hat_slices(&slices)
            .expect("identity slices match the transform order")
    }

    /// `A^-1` by a dense solve per hat slice.
    pub fn inverse(&self, a: &Tensor3) -> Result<Tensor3> {
        if a.nrows() != a.ncols() {
            return Err(mismatch("m_inverse", "square frontal slices", fmt_dims(a.dims())));
        }
        let inv = invert_slices(self.hat_slices(a)?)?;
        self.from_hat_slices(&inv)
    }

    /// `A^k` by repeated squaring in the hat domain; `A^0` is the identity.
    pub fn power(&self, a: &Tensor3, k: usize) -> Result<Tensor3> {
        if a.nrows() != a.ncols() {
            return Err(mismatch("m_power", "square frontal slices", fmt_dims(a.dims())));
        }
        let hat = self.hat_slices(a)?;
        let slices: Vec<CMat> = hat.iter().map(|s| matrix_power(s, k)).collect();
        self.from_hat_slices(&slices)
    }

    /// Relative rank tolerance used when the caller supplies none:
    /// `max(m, n) * eps * max(1, cond(M))`.
    ///
    /// The condition factor bounds how much a spatial/hat roundtrip inflates
    /// rounding errors in the hat slices.
    pub fn default_rank_tol(&self, m: usize, n: usize) -> f64 {
        m.max(n).max(1) as f64 * f64::EPSILON * self.transform.condition().max(1.0)
    }

    /// Numerical rank of each hat slice. Singular values count when they
    /// exceed `tol` times the largest singular value of the whole tensor,
    /// which is the numerical rank of `mat(A)` split by blocks.
    pub fn slice_ranks(&self, a: &Tensor3, tol: Option<f64>) -> Result<Vec<usize>> {
        let tol = tol.unwrap_or_else(|| self.default_rank_tol(a.nrows(), a.ncols()));
        Ok(hat_ranks(&self.hat_slices(a)?, tol))
    }

    /// `rank_M(A)`: the sum of hat-slice ranks, equal to `rank(mat(A))`.
    pub fn rank(&self, a: &Tensor3, tol: Option<f64>) -> Result<usize> {
        Ok(self.slice_ranks(a, tol)?.iter().sum())
    }

    /// Smallest `k >= 0` with `rank_M(A^k) = rank_M(A^(k+1))`.
    ///
    /// The search is capped at `m * p`; the cap is returned if reached.
    pub fn index(&self, a: &Tensor3, tol: Option<f64>) -> Result<usize> {
        let (m, n, p) = a.dims();
        if m != n {
            return Err(mismatch("index_m", "square frontal slices", fmt_dims(a.dims())));
        }
        let tol = tol.unwrap_or_else(|| self.default_rank_tol(m, n));
        let hat = self.hat_slices(a)?;
        // with sigma_max = 1 overall, slice i of A^k is judged against
        // b_i^(k-1), b_i = sigma_max(A_i): rounding in A_i propagates into
        // A_i^k at that size, and a nilpotent part is not rescaled into
        // apparent full rank
        let base: Vec<f64> = hat.iter().map(|s| max_of(&singular_values(s))).collect();
        let global = max_of(&base);
        if global == 0.0 {
            // zero tensor: rank(A^0) = mp, rank(A) = 0 = rank(A^2)
            return Ok(1);
        }
        let unit: Vec<CMat> = hat.iter().map(|s| s / C64::new(global, 0.0)).collect();
        let base: Vec<f64> = base.iter().map(|b| b / global).collect();

        let mut power: Vec<CMat> = vec![CMat::identity(m, m); p];
        let mut prev_rank = m * p;
        let cap = m * p;
        for k in 0..cap {
            for (pw, u) in power.iter_mut().zip(&unit) {
                *pw = &*pw * u;
            }
            let svs: Vec<Vec<f64>> = power.iter().map(singular_values).collect();
            let scales: Vec<f64> = base.iter().map(|b| b.powi(k as i32)).collect();
            let rank: usize = ranks_with_scales(&svs, &scales, &base, tol).iter().sum();
            if rank == prev_rank {
                return Ok(k);
            }
            prev_rank = rank;
        }
        Ok(cap)
    }
}

pub fn fro_norm(a: &Tensor3) -> f64 {
    a.fro_norm()
}

pub(crate) fn singular_values(s: &CMat) -> Vec<f64> {
    if s.is_empty() {
        return Vec::new();
    }
    s.singular_values().iter().copied().collect()
}

/// Numerical ranks of hat slices at relative tolerance `tol`.
pub(crate) fn hat_ranks(slices: &[CMat], tol: f64) -> Vec<usize> {
    let svs: Vec<Vec<f64>> = slices.iter().map(singular_values).collect();
    let base: Vec<f64> = svs.iter().map(|sv| max_of(sv)).collect();
    let global = vec![max_of(&base); base.len()];
    ranks_with_scales(&svs, &global, &base, tol)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Counts singular values above `tol * scale[i]` in each slice. A slice
/// whose original magnitude `base[i]` is at most `tol` times the largest is
/// treated as numerically zero.
fn ranks_with_scales(svs: &[Vec<f64>], scales: &[f64], base: &[f64], tol: f64) -> Vec<usize> {
    let global = max_of(base);
    svs.iter()
        .zip(scales.iter().zip(base))
        .map(|(sv, (&scale, &b))| {
            if b == 0.0 || b <= tol * global {
                0
            } else {
                sv.iter().filter(|&&s| s > tol * scale).count()
            }
        })
        .collect()
}

/// Inverts every hat slice. A slice fails the gate when its smallest
/// singular value is not above `INVERSE_GATE` times its largest, or when the
/// whole slice is negligible against the largest slice of the tensor.
pub(crate) fn invert_slices(slices: Vec<CMat>) -> Result<Vec<CMat>> {
    let svs: Vec<Vec<f64>> = slices.iter().map(singular_values).collect();
    let global = svs.iter().map(|sv| max_of(sv)).fold(0.0, f64::max);
    slices
        .into_iter()
        .zip(svs)
        .enumerate()
        .map(|(i, (s, sv))| {
            if s.is_empty() {
                return Ok(s);
            }
            let max = max_of(&sv);
            let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min > INVERSE_GATE * max && max > INVERSE_GATE * global) {
                return Err(Error::SingularSlice { slice: i });
            }
            s.lu().try_inverse().ok_or(Error::SingularSlice { slice: i })
        })
        .collect()
}

fn matrix_power(s: &CMat, mut k: usize) -> CMat {
    let mut result = CMat::identity(s.nrows(), s.ncols());
    let mut base = s.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}
