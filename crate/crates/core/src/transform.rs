//! The invertible transform `M` that defines the M-product, and the mode-3
//! product used to move tensors between the spatial and the hat domain.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DMatrixView};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{mismatch, Error, Result};
use crate::tensor::Tensor3;
use crate::{CMat, C64};

/// Condition-number gate for randomly drawn transforms.
pub const RANDOM_CONDITION_LIMIT: f64 = 1e6;

/// Default condition-number gate for user-supplied transforms.
pub const CUSTOM_CONDITION_LIMIT: f64 = 1e12;

const RANDOM_MAX_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Dft,
    DctDerived,
    RandomInvertible,
    Custom,
}

impl TransformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Dft => "dft",
            TransformKind::DctDerived => "m1",
            TransformKind::RandomInvertible => "random",
            TransformKind::Custom => "custom",
        }
    }
}

/// An invertible `p x p` matrix together with its inverse.
#[derive(Clone, Debug)]
pub struct TransformSpec {
    matrix: CMat,
    inverse: CMat,
    kind: TransformKind,
    condition: f64,
}

impl TransformSpec {
    /// Unnormalized DFT matrix, `M[j,k] = exp(-2 pi i jk / p)`. Gives the t-product.
    pub fn dft(p: usize) -> Result<Self> {
        check_order(p)?;
        let matrix = CMat::from_fn(p, p, |j, k| {
            // reduce jk mod p first so large orders keep full phase accuracy
            let e = ((j * k) % p) as f64;
            C64::from_polar(1.0, -2.0 * PI * e / p as f64)
        });
        // the inverse of the unnormalized DFT is its conjugate transpose over p
        let inverse = matrix.adjoint().map(|z| z / p as f64);
        Self::assemble(matrix, Some(inverse), TransformKind::Dft, f64::INFINITY)
    }

    /// `M1 = W^-1 C (I + Z)`: C the orthonormal DCT-II matrix, Z the unit
    /// superdiagonal, W the diagonal of the first column of C. Gives the c-product.
    pub fn m1(p: usize) -> Result<Self> {
        check_order(p)?;
        let c = dct2_matrix(p);
        let i_plus_z = DMatrix::<f64>::from_fn(p, p, |j, k| if j == k || k == j + 1 { 1.0 } else { 0.0 });
        let w_inv = DMatrix::<f64>::from_diagonal(&c.column(0).map(|x| 1.0 / x));
        let real = w_inv * c * i_plus_z;
        let matrix = real.map(|x| C64::new(x, 0.0));
        Self::assemble(matrix, None, TransformKind::DctDerived, f64::INFINITY)
    }

    /// Real Gaussian matrix from a seeded generator, redrawn until its
    /// condition number is at most [`RANDOM_CONDITION_LIMIT`].
    pub fn random_invertible(p: usize, seed: u64) -> Result<Self> {
        check_order(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RANDOM_MAX_ATTEMPTS {
            let real = DMatrix::<f64>::from_fn(p, p, |_, _| StandardNormal.sample(&mut rng));
            let matrix = real.map(|x| C64::new(x, 0.0));
            if condition_number(&matrix) <= RANDOM_CONDITION_LIMIT {
                return Self::assemble(matrix, None, TransformKind::RandomInvertible, RANDOM_CONDITION_LIMIT);
            }
        }
        Err(Error::TransformResampleExhausted {
            attempts: RANDOM_MAX_ATTEMPTS,
        })
    }

    pub fn custom(matrix: CMat) -> Result<Self> {
        Self::custom_with_bound(matrix, CUSTOM_CONDITION_LIMIT)
    }

    pub fn custom_with_bound(matrix: CMat, max_condition: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(mismatch("TransformSpec::custom", "square matrix", format!("{:?}", matrix.shape())));
        }
        check_order(matrix.nrows())?;
        Self::assemble(matrix, None, TransformKind::Custom, max_condition)
    }

    fn assemble(matrix: CMat, inverse: Option<CMat>, kind: TransformKind, max_condition: f64) -> Result<Self> {
        let p = matrix.nrows();
        let condition = condition_number(&matrix);
        if !(condition <= max_condition) {
            return Err(Error::SingularTransform {
                condition,
                bound: max_condition,
            });
        }
        let inverse = match inverse {
            Some(inv) => inv,
            None => matrix.clone().lu().try_inverse().ok_or(Error::SingularTransform {
                condition: f64::INFINITY,
                bound: max_condition,
            })?,
        };
        let residual = (&matrix * &inverse - CMat::identity(p, p)).norm();
        if residual > 1e-10 * p as f64 {
            return Err(Error::InconsistentInverse { residual });
        }
        Ok(Self {
            matrix,
            inverse,
            kind,
            condition,
        })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn inverse(&self) -> &CMat {
        &self.inverse
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// 2-norm condition number of `M`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn to_hat(&self, a: &Tensor3) -> Result<Tensor3> {
        mode3_product(a, &self.matrix)
    }

    pub fn from_hat(&self, a_hat: &Tensor3) -> Result<Tensor3> {
        mode3_product(a_hat, &self.inverse)
    }
}

fn check_order(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidParameter("transform order must be at least 1".into()));
    }
    Ok(())
}

/// Orthonormal DCT-II matrix of order `p`.
pub fn dct2_matrix(p: usize) -> DMatrix<f64> {
    let pf = p as f64;
    DMatrix::from_fn(p, p, |j, k| {
        let cj = if j == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        (2.0 / pf).sqrt() * cj * (PI * j as f64 * (2 * k + 1) as f64 / (2.0 * pf)).cos()
    })
}

fn condition_number(m: &CMat) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || !min.is_finite() || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Mode-3 product: `(A x3 B)[i,j,l] = sum_s A[i,j,s] B[l,s]`.
///
/// With slice-major storage the tensor data is an `mn x k` column-major
/// matrix, so the product is a single `(mn x k) * B^T` multiply.
pub fn mode3_product(a: &Tensor3, b: &CMat) -> Result<Tensor3> {
    let (m, n, k) = a.dims();
    if b.ncols() != k {
        return Err(mismatch("mode3_product", format!("matrix with {k} columns"), b.ncols()));
    }
    let unfolded = DMatrixView::from_slice(a.as_slice(), m * n, k);
    let out = unfolded * b.transpose();
    Tensor3::from_vec(m, n, b.nrows(), out.data.into())
}
