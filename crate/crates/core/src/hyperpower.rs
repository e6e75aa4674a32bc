//! Hyperpower iterations for outer inverses.
//!
//! One step of order `p` maps `Z` to `Z (I + R + R^2 + ... + R^(p-1))` with
//! `R = I - A Z`. The order-19 and order-9 schemes evaluate the same
//! polynomial with 7 and 5 tensor-tensor products (TTP) instead of `p`.
//!
//! Iterates are kept in the transform domain, where every M-product is a
//! batch of independent matrix products; each one counts as one TTP.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::algebra::{hat_ranks, MContext};
use crate::error::{mismatch, Error, Result};
use crate::tensor::{fmt_dims, Tensor3};
use crate::{CMat, C64};

/// Constants of the order-19 factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hpi19Coefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub xi1: f64,
    pub xi2: f64,
}

impl Hpi19Coefficients {
    pub fn standard() -> Self {
        let s93 = 93f64.sqrt();
        let root = (27.0 - 2.0 * s93).sqrt();
        Self {
            alpha1: 5.0 / 496.0 * (31.0 + s93),
            alpha2: (3.0 + s93) / 8.0,
            alpha3: 0.5,
            beta1: -5.0 / 496.0 * (s93 - 31.0),
            beta2: (3.0 - s93) / 8.0,
            beta3: 0.5,
            zeta1: 3.0 / 8.0,
            zeta2: 321.0 / 1984.0,
            tau1: (root + 1.0) / 4.0,
            tau2: (1.0 - root) / 4.0,
            tau3: (5.0 * s93 - 93.0) / 496.0,
            xi1: (-93.0 - 5.0 * s93) / 496.0,
            xi2: -s93 / 4.0,
        }
    }

    /// Residuals of the seven equations obtained by matching powers of `R^2`
    /// in `(I + a1 X + a2 X^2 + a3 X^3 + X^4)(I + b1 X + b2 X^2 + b3 X^3 + X^4)
    /// + z1 X + z2 X^2 = I + X + ... + X^7 + X^8`.
    pub fn product_residuals(&self) -> [f64; 7] {
        let Self {
            alpha1: a1,
            alpha2: a2,
            alpha3: a3,
            beta1: b1,
            beta2: b2,
            beta3: b3,
            zeta1: z1,
            zeta2: z2,
            ..
        } = *self;
        [
            a1 + b1 + z1 - 1.0,
            a2 + a1 * b1 + b2 + z2 - 1.0,
            a3 + a2 * b1 + a1 * b2 + b3 - 1.0,
            2.0 + a3 * b1 + a2 * b2 + a1 * b3 - 1.0,
            a1 + b1 + a3 * b2 + a2 * b3 - 1.0,
            a2 + b2 + a3 * b3 - 1.0,
            a3 + b3 - 1.0,
        ]
    }

    /// `(I + t1 X + X^2)(I + t2 X + X^2) + t3 X` against the alpha factor.
    pub fn tau_residuals(&self) -> [f64; 3] {
        [
            self.tau1 + self.tau2 + self.tau3 - self.alpha1,
            2.0 + self.tau1 * self.tau2 - self.alpha2,
            self.tau1 + self.tau2 - self.alpha3,
        ]
    }

    /// `(I + t1 X + X^2)(I + t2 X + X^2) + x1 X + x2 X^2` against the beta factor.
    pub fn xi_residuals(&self) -> [f64; 3] {
        [
            self.tau1 + self.tau2 + self.xi1 - self.beta1,
            2.0 + self.tau1 * self.tau2 + self.xi2 - self.beta2,
            self.tau1 + self.tau2 - self.beta3,
        ]
    }
}

impl Default for Hpi19Coefficients {
    fn default() -> Self {
        Self::standard()
    }
}

/// Shared count of tensor-tensor products. Clones share the count.
#[derive(Clone, Debug, Default)]
pub struct TtpCounter(Arc<AtomicU64>);

impl TtpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Plain Horner evaluation of the order-`p` polynomial, `p >= 2`.
    Standard(usize),
    Hpi9,
    Hpi19,
}

impl Method {
    pub fn order(self) -> usize {
        match self {
            Method::Standard(p) => p,
            Method::Hpi9 => 9,
            Method::Hpi19 => 19,
        }
    }

    pub fn ttp_per_step(self) -> u64 {
        match self {
            Method::Standard(p) => p as u64,
            Method::Hpi9 => 5,
            Method::Hpi19 => 7,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Standard(p) => write!(f, "hpi-std:{p}"),
            Method::Hpi9 => f.write_str("hpi9"),
            Method::Hpi19 => f.write_str("hpi19"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hpi9" => Ok(Method::Hpi9),
            "hpi19" => Ok(Method::Hpi19),
            _ => {
                let p = s
                    .strip_prefix("hpi-std:")
                    .and_then(|p| p.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))?;
                if p < 2 {
                    return Err(Error::InvalidParameter(format!("order {p} is below 2")));
                }
                Ok(Method::Standard(p))
            }
        }
    }
}

type Hat = Vec<CMat>;

fn mul(a: &[CMat], b: &[CMat], ttp: &TtpCounter) -> Hat {
    ttp.add(1);
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `c0 I + sum c_k X_k`, slice by slice.
fn combo(c0: f64, terms: &[(f64, &[CMat])]) -> Hat {
    let (rows, cols) = terms[0].1[0].shape();
    (0..terms[0].1.len())
        .map(|i| {
            let mut out = CMat::identity(rows, cols) * C64::new(c0, 0.0);
            for (c, x) in terms {
                out += &x[i] * C64::new(*c, 0.0);
            }
            out
        })
        .collect()
}

fn add(a: &[CMat], b: &[CMat]) -> Hat {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `R = I - A Z`; one TTP.
fn residual(a: &[CMat], z: &[CMat], ttp: &TtpCounter) -> Hat {
    let az = mul(a, z, ttp);
    combo(1.0, &[(-1.0, &az)])
}

fn standard_hat(a: &[CMat], z: &[CMat], order: usize, ttp: &TtpCounter) -> Hat {
    let r = residual(a, z, ttp);
    let mut s = combo(1.0, &[(1.0, &r)]);
    for _ in 2..order {
        let rs = mul(&r, &s, ttp);
        s = combo(1.0, &[(1.0, &rs)]);
    }
    mul(z, &s, ttp)
}

fn hpi19_hat(a: &[CMat], z: &[CMat], c: &Hpi19Coefficients, ttp: &TtpCounter) -> Hat {
    let r = residual(a, z, ttp);
    let r2 = mul(&r, &r, ttp);
    let r4 = mul(&r2, &r2, ttp);
    let f1 = combo(1.0, &[(c.tau1, &r2), (1.0, &r4)]);
    let f2 = combo(1.0, &[(c.tau2, &r2), (1.0, &r4)]);
    let u = mul(&f1, &f2, ttp);
    let v = combo(0.0, &[(1.0, &u), (c.tau3, &r2)]);
    let w = combo(0.0, &[(1.0, &u), (c.xi1, &r2), (c.xi2, &r4)]);
    let vw = mul(&v, &w, ttp);
    let t = combo(0.0, &[(1.0, &vw), (c.zeta1, &r2), (c.zeta2, &r4)]);
    let s = combo(0.0, &[(1.0, &r), (1.0, &r2)]);
    let inner = mul(&s, &t, ttp);
    add(z, &mul(z, &inner, ttp))
}

fn hpi9_hat(a: &[CMat], z: &[CMat], ttp: &TtpCounter) -> Hat {
    let r = residual(a, z, ttp);
    let r2 = mul(&r, &r, ttp);
    let half = combo(0.0, &[(0.5, &r), (1.0, &r2)]);
    let u = add(&combo(0.0, &[(7.0 / 8.0, &r)]), &mul(&r2, &half, ttp));
    let v = combo(11.0 / 16.0, &[(-9.0 / 8.0, &r), (0.75, &r2), (1.0, &u)]);
    let uv = mul(&u, &v, ttp);
    let tail = combo(0.0, &[(51.0 / 128.0, &r), (39.0 / 32.0, &r2), (1.0, &uv)]);
    add(z, &mul(z, &tail, ttp))
}

fn step_hat(method: Method, coeffs: &Hpi19Coefficients, a: &[CMat], z: &[CMat], ttp: &TtpCounter) -> Hat {
    match method {
        Method::Standard(p) => standard_hat(a, z, p, ttp),
        Method::Hpi9 => hpi9_hat(a, z, ttp),
        Method::Hpi19 => hpi19_hat(a, z, coeffs, ttp),
    }
}

fn check_conformable(op: &'static str, a: &Tensor3, z: &Tensor3, ctx: &MContext) -> Result<()> {
    let (m, n, p) = a.dims();
    if z.dims() != (n, m, p) {
        return Err(mismatch(op, fmt_dims((n, m, p)), fmt_dims(z.dims())));
    }
    if p != ctx.depth() {
        return Err(mismatch(op, ctx.depth(), p));
    }
    Ok(())
}

fn one_step(
    op: &'static str,
    a: &Tensor3,
    z: &Tensor3,
    ctx: &MContext,
    method: Method,
    coeffs: &Hpi19Coefficients,
    ttp: &TtpCounter,
) -> Result<Tensor3> {
    check_conformable(op, a, z, ctx)?;
    let next = step_hat(method, coeffs, &ctx.hat_slices(a)?, &ctx.hat_slices(z)?, ttp);
    ctx.from_hat_slices(&next)
}

/// `Z (I + R + ... + R^(p-1))` by Horner's rule; `p` TTP.
pub fn hpi_standard_step(a: &Tensor3, z: &Tensor3, order: usize, ctx: &MContext, ttp: &TtpCounter) -> Result<Tensor3> {
    if order < 2 {
        return Err(Error::InvalidParameter(format!("order {order} is below 2")));
    }
    one_step("hpi_standard_step", a, z, ctx, Method::Standard(order), &Hpi19Coefficients::standard(), ttp)
}

/// Order-19 step in factorized form; 7 TTP.
pub fn hpi19_step(a: &Tensor3, z: &Tensor3, ctx: &MContext, coeffs: &Hpi19Coefficients, ttp: &TtpCounter) -> Result<Tensor3> {
    one_step("hpi19_step", a, z, ctx, Method::Hpi19, coeffs, ttp)
}

/// Order-9 step in factorized form; 5 TTP.
pub fn hpi9_step(a: &Tensor3, z: &Tensor3, ctx: &MContext, ttp: &TtpCounter) -> Result<Tensor3> {
    one_step("hpi9_step", a, z, ctx, Method::Hpi9, &Hpi19Coefficients::standard(), ttp)
}

/// Which generalized inverse the starting point aims at.
#[derive(Clone, Debug)]
pub enum GuessKind {
    /// `Z0 = gamma A*`, default `gamma = 1 / |A|_F^2`.
    Mp,
    /// `Z0 = gamma A^k`, default `gamma = 1 / |A^(k+1)|_F`.
    Drazin(usize),
    /// `Z0 = gamma W`, default `gamma = 1 / (|W|_F |A|_F)`.
    Outer(Tensor3),
}

/// The scale `gamma` that [`initial_guess`] uses when none is given.
pub fn default_gamma(a: &Tensor3, ctx: &MContext, kind: &GuessKind) -> Result<f64> {
    let norm_a = a.fro_norm();
    if norm_a == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(match kind {
        GuessKind::Mp => 1.0 / (norm_a * norm_a),
        GuessKind::Drazin(k) => {
            let next = ctx.power(a, k + 1)?.fro_norm();
            if next > 0.0 {
                1.0 / next
            } else {
                1.0
            }
        }
        GuessKind::Outer(w) => {
            let nw = w.fro_norm();
            if nw == 0.0 {
                return Err(Error::ZeroTensor);
            }
            1.0 / (nw * norm_a)
        }
    })
}

/// `Z0 = gamma W` with `W` chosen by `kind`.
pub fn initial_guess(a: &Tensor3, ctx: &MContext, kind: &GuessKind, gamma: Option<f64>) -> Result<Tensor3> {
    let w = match kind {
        GuessKind::Mp => ctx.conj_transpose(a)?,
        GuessKind::Drazin(k) => ctx.power(a, *k)?,
        GuessKind::Outer(w) => {
            check_conformable("initial_guess", a, w, ctx)?;
            w.clone()
        }
    };
    let gamma = match gamma {
        Some(g) => {
            if a.fro_norm() == 0.0 {
                return Err(Error::ZeroTensor);
            }
            g
        }
        None => default_gamma(a, ctx, kind)?,
    };
    Ok(w.scale(gamma))
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Stop once `|Z_(j+1) - Z_j|_F < tol`.
    pub tol: f64,
    pub max_iters: usize,
    pub method: Method,
    pub coeffs: Hpi19Coefficients,
    pub ttp: TtpCounter,
    /// Check `rank(Z0 A) = rank(Z0)` before iterating.
    pub check_existence: bool,
}

impl SolverConfig {
    pub fn new(method: Method, tol: f64, max_iters: usize) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
        }
        if max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if let Method::Standard(p) = method {
            if p < 2 {
                return Err(Error::InvalidParameter(format!("order {p} is below 2")));
            }
        }
        Ok(Self {
            tol,
            max_iters,
            method,
            coeffs: Hpi19Coefficients::standard(),
            ttp: TtpCounter::new(),
            check_existence: true,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub z: Tensor3,
    pub iterations: usize,
    /// TTP spent by this solve.
    pub ttp_count: u64,
    pub converged: bool,
    /// `|Z_(j+1) - Z_j|_F` per step.
    pub residual_history: Vec<f64>,
}

/// Growth over three steps above which the step difference is diverging.
const DIVERGENCE_FACTOR: f64 = 1e3;

/// Strict growth over the last three steps by more than [`DIVERGENCE_FACTOR`].
/// A run that starts far below the limit grows by up to `order` per step
/// without ever having decreased, so such a window needs `order^3` as well.
fn diverging(history: &[f64], order: usize) -> bool {
    let n = history.len();
    if n < 4 {
        return false;
    }
    let w = &history[n - 4..];
    if !w.windows(2).all(|p| p[1] > p[0]) {
        return false;
    }
    let growth = w[3] / w[0];
    let descended = history[..n - 3].windows(2).any(|p| p[1] < p[0]);
    growth > DIVERGENCE_FACTOR && (descended || growth > (order as f64).powi(3))
}

/// Iterates the configured step from `Z0` until the step difference drops
/// below `tol` or `max_iters` steps are spent.
pub fn hpi_solve(a: &Tensor3, z0: &Tensor3, ctx: &MContext, config: &SolverConfig) -> Result<SolveOutcome> {
    check_conformable("hpi_solve", a, z0, ctx)?;
    let a_hat = ctx.hat_slices(a)?;
    let mut z = ctx.hat_slices(z0)?;
    if config.check_existence {
        let tol = ctx.default_rank_tol(a.nrows(), a.ncols());
        let za: Hat = z.iter().zip(&a_hat).map(|(z, a)| z * a).collect();
        let (rz, rza): (usize, usize) = (hat_ranks(&z, tol).iter().sum(), hat_ranks(&za, tol).iter().sum());
        if rz != rza {
            return Err(Error::OuterInverseNotExist {
                reason: format!("rank(Z0*A) = {rza} differs from rank(Z0) = {rz}"),
            });
        }
    }
    let start = config.ttp.get();
    let mut history = Vec::new();
    let mut converged = false;
    for j in 1..=config.max_iters {
        let next = step_hat(config.method, &config.coeffs, &a_hat, &z, &config.ttp);
        let diff: Hat = next.iter().zip(&z).map(|(x, y)| x - y).collect();
        let d = ctx.from_hat_slices(&diff)?.fro_norm();
        history.push(d);
        if !d.is_finite() || diverging(&history, config.method.order()) {
            return Err(Error::Diverged { iteration: j });
        }
        z = next;
        if d < config.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveOutcome {
        z: ctx.from_hat_slices(&z)?,
        iterations: history.len(),
        ttp_count: config.ttp.get() - start,
        converged,
        residual_history: history,
    })
}

/// Computational efficiency index `p^(1/n)` of an order-`p` method with `n` TTP.
pub fn cei(p: u32, n: u32) -> f64 {
    (p as f64).powf(1.0 / n as f64)
}

/// Informational efficiency index `p / n`.
pub fn iei(p: u32, n: u32) -> f64 {
    p as f64 / n as f64
}
