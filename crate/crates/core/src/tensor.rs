//! Dense third-order tensors of complex scalars.
//!
//! Entries are stored slice-major: the frontal slice index varies slowest and
//! each frontal slice is laid out column-major, so a slice can be borrowed as
//! an `m x n` nalgebra view without copying.

use std::ops::{Add, Neg, Sub};

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::error::{mismatch, Result};
use crate::{CMat, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    m: usize,
    n: usize,
    p: usize,
    data: Vec<C64>,
}

impl Tensor3 {
    pub fn zeros(m: usize, n: usize, p: usize) -> Self {
        Self {
            m,
            n,
            p,
            data: vec![C64::new(0.0, 0.0); m * n * p],
        }
    }

    pub fn from_vec(m: usize, n: usize, p: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != m * n * p {
            return Err(mismatch("Tensor3::from_vec", m * n * p, data.len()));
        }
        Ok(Self { m, n, p, data })
    }

    pub fn from_fn(m: usize, n: usize, p: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(m * n * p);
        for k in 0..p {
            for j in 0..n {
                for i in 0..m {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { m, n, p, data }
    }

    /// Stacks frontal slices. All slices must share one shape and at least one is required.
    pub fn from_slices(slices: &[CMat]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| mismatch("Tensor3::from_slices", "at least one slice", 0))?;
        let (m, n) = first.shape();
        let mut data = Vec::with_capacity(m * n * slices.len());
        for s in slices {
            if s.shape() != (m, n) {
                return Err(mismatch(
                    "Tensor3::from_slices",
                    format!("{m}x{n}"),
                    format!("{}x{}", s.nrows(), s.ncols()),
                ));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Self {
            m,
            n,
            p: slices.len(),
            data,
        })
    }

    pub fn from_real_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let complex: Vec<CMat> = slices.iter().map(|s| s.map(|x| C64::new(x, 0.0))).collect();
        Self::from_slices(&complex)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.p)
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.p
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.m && j < self.n && k < self.p);
        k * self.m * self.n + j * self.m + i
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[self.offset(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: C64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    /// Frontal slice `k` (zero-based) as an `m x n` view.
    pub fn slice(&self, k: usize) -> DMatrixView<'_, C64> {
        let len = self.m * self.n;
        DMatrixView::from_slice(&self.data[k * len..(k + 1) * len], self.m, self.n)
    }

    pub fn slice_mut(&mut self, k: usize) -> DMatrixViewMut<'_, C64> {
        let len = self.m * self.n;
        DMatrixViewMut::from_slice(&mut self.data[k * len..(k + 1) * len], self.m, self.n)
    }

    pub fn slices(&self) -> Vec<CMat> {
        (0..self.p).map(|k| self.slice(k).into_owned()).collect()
    }

    pub fn tube(&self, i: usize, j: usize) -> Vec<C64> {
        (0..self.p).map(|k| self.get(i, j, k)).collect()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn real_part_norm(&self) -> f64 {
        self.data.iter().map(|z| z.re * z.re).sum::<f64>().sqrt()
    }

    pub fn imag_part_norm(&self) -> f64 {
        self.data.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|z| z * alpha)
    }

    pub fn scale_c(&self, alpha: C64) -> Self {
        self.map(|z| z * alpha)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            p: self.p,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// `self + alpha * other`, shapes must agree.
    pub fn axpy(&self, alpha: f64, other: &Tensor3) -> Result<Self> {
        self.check_same_dims("Tensor3::axpy", other)?;
        Ok(Self {
            m: self.m,
            n: self.n,
            p: self.p,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b * alpha)
                .collect(),
        })
    }

    /// Frobenius distance `|self - other|_F`.
    pub fn distance(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_dims("Tensor3::distance", other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub(crate) fn check_same_dims(&self, op: &'static str, other: &Tensor3) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(mismatch(op, fmt_dims(self.dims()), fmt_dims(other.dims())));
        }
        Ok(())
    }
}

pub(crate) fn fmt_dims((m, n, p): (usize, usize, usize)) -> String {
    format!("{m}x{n}x{p}")
}

impl Add for &Tensor3 {
    type Output = Tensor3;

    /// Panics on shape mismatch, like the matrix operators of nalgebra.
    fn add(self, rhs: &Tensor3) -> Tensor3 {
        self.axpy(1.0, rhs).expect("tensor addition requires equal shapes")
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;

    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        self.axpy(-1.0, rhs).expect("tensor subtraction requires equal shapes")
    }
}

impl Neg for &Tensor3 {
    type Output = Tensor3;

    fn neg(self) -> Tensor3 {
        self.map(|z| -z)
    }
}
