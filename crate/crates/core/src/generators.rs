//! Deterministic construction of test tensors: gallery-style structured
//! frontal slices, random dense and random index-1 tensors, and the two
//! small worked examples.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::MContext;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::{CMat, C64};

const INDEX1_MAX_ATTEMPTS: usize = 10;
const INDEX1_CONDITION_LIMIT: f64 = 1e4;

/// Chow matrix: `a[i,j] = alpha^(i-j+1)` for `j <= i+1`, zero above the
/// first superdiagonal, plus `delta` on the diagonal.
pub fn chow(n: usize, alpha: f64, delta: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let mut v = if j <= i + 1 {
            alpha.powi(i as i32 - j as i32 + 1)
        } else {
            0.0
        };
        if i == j {
            v += delta;
        }
        v
    })
}

/// Gear matrix: ones on the sub- and superdiagonal, `sign(i)` at
/// `(1, |i|)` and `sign(j)` at `(n, n+1-|j|)` (one-based), corner writes last.
pub fn gearmat(n: usize, i: i64, j: i64) -> Result<DMatrix<f64>> {
    let valid = |v: i64| v != 0 && v.unsigned_abs() as usize <= n;
    if n == 0 || !valid(i) || !valid(j) {
        return Err(Error::InvalidParameter(format!(
            "gearmat requires 1 <= |i|, |j| <= n (n={n}, i={i}, j={j})"
        )));
    }
    let mut a = DMatrix::from_fn(n, n, |r, c| if r + 1 == c || c + 1 == r { 1.0 } else { 0.0 });
    a[(0, i.unsigned_abs() as usize - 1)] = i.signum() as f64;
    a[(n - 1, n - j.unsigned_abs() as usize)] = j.signum() as f64;
    Ok(a)
}

pub fn gearmat_default(n: usize) -> DMatrix<f64> {
    gearmat(n, n as i64, -(n as i64)).expect("default gearmat parameters are in range")
}

/// `m x n` matrix whose columns repeat with period `k`; the first `k`
/// columns are standard normal draws.
pub fn cycol(m: usize, n: usize, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("cycol period must satisfy 1 <= k <= n (k={k}, n={n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = DMatrix::<f64>::from_fn(m, k, |_, _| StandardNormal.sample(&mut rng));
    Ok(DMatrix::from_fn(m, n, |r, c| base[(r, c % k)]))
}

pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
}

/// Real tensor with i.i.d. standard normal entries; slice `i` is drawn from seed `seed + i`.
pub fn random_dense(m: usize, n: usize, p: usize, seed: u64) -> Tensor3 {
    let slices: Vec<DMatrix<f64>> = (0..p)
        .map(|i| gaussian_matrix(m, n, seed.wrapping_add(i as u64)))
        .collect();
    Tensor3::from_real_slices(&slices).expect("equal slice shapes")
}

/// Tensor of index one with hat-slice rank `s`: each hat slice is
/// `X diag(d_1..d_s, 0..0) X^-1` with `X` well conditioned and `d_i != 0`.
///
/// `s >= n` would give an invertible tensor (index zero); it is lowered to `n - 1`.
pub fn random_index1(n: usize, s: usize, seed: u64, ctx: &MContext) -> Result<Tensor3> {
    if n < 2 || s == 0 {
        return Err(Error::InvalidParameter(format!(
            "random index-1 tensor needs n >= 2 and s >= 1 (n={n}, s={s})"
        )));
    }
    let s = s.min(n - 1);
    let p = ctx.depth();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..INDEX1_MAX_ATTEMPTS {
        let mut slices = Vec::with_capacity(p);
        for _ in 0..p {
            slices.push(index1_slice(n, s, &mut rng)?);
        }
        let a = ctx.from_hat_slices(&slices)?;
        if ctx.index(&a, None)? == 1 && ctx.slice_ranks(&a, None)?.iter().all(|&r| r == s) {
            return Ok(a);
        }
    }
    Err(Error::GeneratorExhausted {
        attempts: INDEX1_MAX_ATTEMPTS,
    })
}

fn index1_slice(n: usize, s: usize, rng: &mut ChaCha8Rng) -> Result<CMat> {
    for _ in 0..INDEX1_MAX_ATTEMPTS {
        let x = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        let sv = x.singular_values();
        if sv.min() <= 0.0 || sv.max() / sv.min() > INDEX1_CONDITION_LIMIT {
            continue;
        }
        let x_inv = x.clone().try_inverse().expect("conditioning gate passed");
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j && i < s {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * rng.random_range(0.5..2.0)
            } else {
                0.0
            }
        });
        return Ok((x * d * x_inv).map(|v| C64::new(v, 0.0)));
    }
    Err(Error::GeneratorExhausted {
        attempts: INDEX1_MAX_ATTEMPTS,
    })
}

fn real(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v)
}

/// The 2x2x4 Moore-Penrose worked example.
pub fn example_4_1() -> Tensor3 {
    Tensor3::from_real_slices(&[
        real(2, 2, &[-1.0, -1.0, 0.0, 1.0]),
        real(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        real(2, 2, &[1.0, -1.0, -1.0, 0.0]),
        real(2, 2, &[-1.0, 1.0, 1.0, 1.0]),
    ])
    .expect("fixed shapes")
}

/// The 3x3x3 index-one Drazin worked example.
pub fn example_4_2() -> Tensor3 {
    Tensor3::from_real_slices(&[
        real(3, 3, &[1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0]),
        real(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        real(3, 3, &[1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 0.0, 0.0, 0.0]),
    ])
    .expect("fixed shapes")
}

/// Generator family with its family-specific parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Chow { alpha: f64, delta: f64 },
    Gearmat { i: Option<i64>, j: Option<i64> },
    Cycol { period: usize },
    RandomDense,
    RandomIndex1 { slice_rank: usize },
    Example41,
    Example42,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Chow { .. } => "chow",
            Family::Gearmat { .. } => "gearmat",
            Family::Cycol { .. } => "cycol",
            Family::RandomDense => "random",
            Family::RandomIndex1 { .. } => "index1",
            Family::Example41 => "example_4_1",
            Family::Example42 => "example_4_2",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full description of a generated tensor; equal specs give identical tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Shape of the generated tensor. Square families ignore `m`.
    pub fn dims(&self) -> (usize, usize, usize) {
        match self.family {
            Family::Cycol { .. } | Family::RandomDense => (self.m, self.n, self.p),
            Family::Example41 => (2, 2, 4),
            Family::Example42 => (3, 3, 3),
            _ => (self.n, self.n, self.p),
        }
    }

    pub fn build(&self, ctx: &MContext) -> Result<Tensor3> {
        let (m, n, p) = self.dims();
        if ctx.depth() != p {
            return Err(crate::error::mismatch("GeneratorSpec::build", p, ctx.depth()));
        }
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter("tensor dimensions must be positive".into()));
        }
        let stacked = |slice: DMatrix<f64>| Tensor3::from_real_slices(&vec![slice; p]);
        match &self.family {
            Family::Chow { alpha, delta } => stacked(chow(n, *alpha, *delta)),
            Family::Gearmat { i, j } => stacked(gearmat(n, i.unwrap_or(n as i64), j.unwrap_or(-(n as i64)))?),
            Family::Cycol { period } => {
                let slices = (0..p)
                    .map(|i| cycol(m, n, *period, self.seed.wrapping_add(i as u64)))
                    .collect::<Result<Vec<_>>>()?;
                Tensor3::from_real_slices(&slices)
            }
            Family::RandomDense => Ok(random_dense(m, n, p, self.seed)),
            Family::RandomIndex1 { slice_rank } => random_index1(n, *slice_rank, self.seed, ctx),
            Family::Example41 => Ok(example_4_1()),
            Family::Example42 => Ok(example_4_2()),
        }
    }
}
