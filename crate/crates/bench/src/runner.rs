use std::time::Instant;

use mprod_core::generators::{random_dense, Family, GeneratorSpec};
use mprod_core::hyperpower::{default_gamma, hpi_solve, initial_guess, GuessKind, Hpi19Coefficients, SolverConfig};
use mprod_core::outer::{
    drazin_qr, group_inverse_qr, moore_penrose_qr, outer_inverse_qr, residual_report, InverseKind, OuterVariant,
    ResidualReport,
};
use mprod_core::{Error, MContext, Tensor3, TransformSpec};

use crate::cli::{Args, ExampleArg, FamilyArg, InverseArg, MKind, MethodArg};
use crate::record::RunRecord;

/// Scale of the Drazin starting guess used with the 3x3x3 example.
pub const EXAMPLE_42_GAMMA: f64 = 0.1624;

/// Times a diverged hyperpower run is restarted with half the scale.
const GAMMA_HALVINGS: usize = 5;

pub fn transform(kind: MKind, p: usize, m_seed: u64) -> mprod_core::Result<TransformSpec> {
    match kind {
        MKind::Dft => TransformSpec::dft(p),
        MKind::M1 => TransformSpec::m1(p),
        MKind::Random => TransformSpec::random_invertible(p, m_seed),
    }
}

/// Everything that identifies one row except the outcome.
#[derive(Clone, Debug)]
pub struct Case {
    pub spec: GeneratorSpec,
    pub m_kind: MKind,
    pub method: MethodArg,
    pub inverse: InverseArg,
    pub trial: usize,
}

struct Outcome {
    x: Tensor3,
    iterations: Option<usize>,
    ttp: Option<u64>,
    converged: bool,
    /// Power used by the Drazin residuals.
    k: usize,
}

fn family(args: &Args, n: usize) -> Family {
    let half = (n / 2).max(1);
    match (args.example, args.family) {
        (Some(ExampleArg::E41), _) => Family::Example41,
        (Some(ExampleArg::E42), _) => Family::Example42,
        (None, Some(FamilyArg::Chow)) => Family::Chow { alpha: 1.0, delta: 0.0 },
        (None, Some(FamilyArg::Gearmat)) => Family::Gearmat { i: None, j: None },
        (None, Some(FamilyArg::Cycol)) => Family::Cycol {
            period: args.slice_rank.unwrap_or(half),
        },
        (None, Some(FamilyArg::Index1)) => Family::RandomIndex1 {
            slice_rank: args.slice_rank.unwrap_or(half),
        },
        (None, Some(FamilyArg::Random) | None) => Family::RandomDense,
    }
}

/// Cross product of sizes, transforms, methods and trials, in emission order.
pub fn cases(args: &Args) -> Vec<Case> {
    let (ns, ps) = if args.example.is_some() {
        (vec![0], vec![0])
    } else {
        (
            args.n.clone().unwrap_or_else(|| vec![10, 20, 40]),
            args.p.clone().unwrap_or_else(|| vec![2, 4, 8]),
        )
    };
    let mut out = Vec::new();
    for &n in &ns {
        for &p in &ps {
            for m_kind in args.m_kinds() {
                for method in args.methods() {
                    for trial in 0..args.trials {
                        let mut spec = GeneratorSpec {
                            family: family(args, n),
                            m: args.m.unwrap_or(n),
                            n,
                            p,
                            seed: args.seed.wrapping_add(trial as u64),
                        };
                        let (m, n, p) = spec.dims();
                        (spec.m, spec.n, spec.p) = (m, n, p);
                        out.push(Case {
                            spec,
                            m_kind,
                            method,
                            inverse: args.inverse_kind(),
                            trial,
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn run_experiment(args: &Args) -> Vec<RunRecord> {
    cases(args).iter().map(|c| run_case(args, c)).collect()
}

pub fn run_case(args: &Args, case: &Case) -> RunRecord {
    let mut record = RunRecord {
        family: case.spec.family.name().to_string(),
        n: case.spec.n,
        m: case.spec.m,
        p: case.spec.p,
        m_kind: case.m_kind.as_str().to_string(),
        method: case.method.to_string(),
        inverse: case.inverse.as_str().to_string(),
        tol: args.tol,
        seed: case.spec.seed,
        trial: case.trial,
        iterations: None,
        ttp: None,
        converged: false,
        e1: None,
        e2: None,
        e3: None,
        e4: None,
        e5: None,
        e1k: None,
        wall_ms: 0.0,
    };
    let result = (|| {
        let ctx = MContext::new(transform(case.m_kind, case.spec.p, args.m_seed)?);
        let a = case.spec.build(&ctx)?;
        let w = match case.inverse {
            InverseArg::Outer => Some(outer_target(&a, args, &ctx, case.spec.seed)?),
            _ => None,
        };
        let start = Instant::now();
        let out = solve(&a, w.as_ref(), &ctx, args, case)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let kind = match case.inverse {
            InverseArg::Mp => InverseKind::Mp,
            InverseArg::Drazin | InverseArg::Group => InverseKind::Drazin,
            InverseArg::Outer => InverseKind::Outer,
        };
        let report = residual_report(&a, &out.x, kind, out.k, &ctx)?;
        Ok::<_, Error>((out, report, wall_ms))
    })();
    match result {
        Ok((out, report, wall_ms)) => {
            fill_residuals(&mut record, &report);
            record.iterations = out.iterations;
            record.ttp = out.ttp;
            record.converged = out.converged;
            record.wall_ms = wall_ms;
        }
        Err(e) => eprintln!(
            "error: family={} n={} p={} m_kind={} method={} inverse={} trial={}: {e}",
            record.family, record.n, record.p, record.m_kind, record.method, record.inverse, record.trial
        ),
    }
    record
}

fn fill_residuals(record: &mut RunRecord, r: &ResidualReport) {
    record.e1 = r.e1;
    record.e2 = r.e2;
    record.e3 = r.e3;
    record.e4 = r.e4;
    record.e5 = r.e5;
    record.e1k = r.e1k;
}

/// `W = B * (A * B)^*` with `B` random of width `--slice-rank` (default half
/// the short side). The nonzero eigenvalues of `W * A` are then positive in
/// every hat slice, so a small enough scale of `Z0 = gamma W` converges. A
/// random `C` in place of `(A * B)^*` can put them in the left half plane.
fn outer_target(a: &Tensor3, args: &Args, ctx: &MContext, seed: u64) -> mprod_core::Result<Tensor3> {
    let (m, n, p) = a.dims();
    let s = args.slice_rank.unwrap_or((m.min(n) / 2).max(1));
    let b = random_dense(n, s, p, seed.wrapping_add(1000));
    let ab = ctx.product(a, &b)?;
    ctx.product(&b, &ctx.conj_transpose(&ab)?)
}

fn solve(a: &Tensor3, w: Option<&Tensor3>, ctx: &MContext, args: &Args, case: &Case) -> mprod_core::Result<Outcome> {
    let (m, n, p) = a.dims();
    if case.inverse == InverseArg::Mp && a.fro_norm() == 0.0 {
        return Ok(Outcome {
            x: Tensor3::zeros(n, m, p),
            iterations: matches!(case.method, MethodArg::Hpi(_)).then_some(0),
            ttp: matches!(case.method, MethodArg::Hpi(_)).then_some(0),
            converged: true,
            k: 0,
        });
    }
    let k = match case.inverse {
        InverseArg::Drazin => ctx.index(a, None)?,
        InverseArg::Group => 1,
        _ => 0,
    };
    let method = match case.method {
        MethodArg::Mqr => {
            let x = match case.inverse {
                InverseArg::Mp => moore_penrose_qr(a, ctx, None)?,
                InverseArg::Drazin => drazin_qr(a, ctx, None, None)?,
                InverseArg::Group => group_inverse_qr(a, ctx, None)?,
                InverseArg::Outer => outer_inverse_qr(a, w.expect("outer target"), ctx, None, OuterVariant::QrB)?,
            };
            return Ok(Outcome {
                x,
                iterations: None,
                ttp: None,
                converged: true,
                k,
            });
        }
        MethodArg::Hpi(method) => method,
    };
    if case.inverse == InverseArg::Group {
        let index = ctx.index(a, None)?;
        if index != 1 {
            return Err(Error::IndexNotOne { index });
        }
    }
    let guess = match case.inverse {
        InverseArg::Mp => GuessKind::Mp,
        InverseArg::Drazin | InverseArg::Group => GuessKind::Drazin(k),
        InverseArg::Outer => GuessKind::Outer(w.expect("outer target").clone()),
    };
    let base = match (args.gamma, args.example) {
        (Some(g), _) => g,
        (None, Some(ExampleArg::E42)) if case.inverse == InverseArg::Drazin => EXAMPLE_42_GAMMA,
        _ => default_gamma(a, ctx, &guess)?,
    };
    let mut config = SolverConfig::new(method, args.tol, args.max_iters)?;
    config.coeffs = coefficients(args.perturb_coefficients);
    let mut last = Error::Diverged { iteration: 0 };
    for attempt in 0..=GAMMA_HALVINGS {
        let gamma = base / f64::powi(2.0, attempt as i32);
        let z0 = initial_guess(a, ctx, &guess, Some(gamma))?;
        match hpi_solve(a, &z0, ctx, &config) {
            Ok(out) => {
                return Ok(Outcome {
                    x: out.z,
                    iterations: Some(out.iterations),
                    ttp: Some(out.ttp_count),
                    converged: out.converged,
                    k,
                })
            }
            Err(e @ Error::Diverged { .. }) => {
                eprintln!("note: {method} diverged with gamma = {gamma:.6e}, halving");
                last = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

pub fn coefficients(perturb: f64) -> Hpi19Coefficients {
    let mut c = Hpi19Coefficients::standard();
    c.zeta2 += perturb;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;
    use mprod_core::hyperpower::Method;

    fn args(list: &[&str]) -> Args {
        let a = Args::try_parse_from(std::iter::once("mprod-bench").chain(list.iter().copied())).unwrap();
        a.validate().unwrap();
        a
    }

    #[test]
    fn cross_product_order() {
        let a = args(&["--family", "random", "--n", "3,4", "--m", "2", "--p", "2", "--m-kind", "dft,m1", "--method", "mqr,hpi9", "--trials", "2"]);
        let cs = cases(&a);
        assert_eq!(cs.len(), 2 * 2 * 2 * 2);
        assert_eq!((cs[0].spec.m, cs[0].spec.n, cs[0].spec.seed), (2, 3, 0));
        assert_eq!(cs[1].trial, 1);
        assert_eq!(cs[1].spec.seed, 1);
        assert_eq!(cs[2].method, MethodArg::Hpi(Method::Hpi9));
        assert_eq!(cs[4].m_kind, MKind::M1);
        assert_eq!(cs[8].spec.n, 4);
    }

    #[test]
    fn square_families_report_square_shape() {
        let a = args(&["--family", "chow", "--n", "5", "--m", "3", "--p", "2"]);
        let c = &cases(&a)[0];
        assert_eq!((c.spec.m, c.spec.n), (5, 5));
        let a = args(&["--example", "4.1"]);
        let c = &cases(&a)[0];
        assert_eq!((c.spec.m, c.spec.n, c.spec.p), (2, 2, 4));
    }

    #[test]
    fn mqr_mp_row() {
        let a = args(&["--family", "random", "--n", "5", "--m", "4", "--p", "3", "--m-kind", "m1"]);
        let r = &run_experiment(&a)[0];
        assert!(r.converged);
        assert_eq!((r.iterations, r.ttp), (None, None));
        assert!(r.e1.unwrap() < 1e-10 && r.e4.unwrap() < 1e-10);
        assert!(r.e5.is_none() && r.e1k.is_none());
    }

    #[test]
    fn failures_stay_in_row() {
        // Identical slices have uneven hat ranks under the DFT.
        let a = args(&["--family", "gearmat", "--n", "6", "--p", "2", "--m-kind", "dft", "--inverse", "drazin"]);
        let r = &run_experiment(&a)[0];
        assert!(!r.converged);
        assert!(r.e1.is_none() && r.e2.is_none());
    }

    #[test]
    fn group_needs_index_one() {
        let a = args(&["--family", "chow", "--n", "4", "--p", "2", "--m-kind", "m1", "--inverse", "group", "--method", "mqr,hpi19"]);
        assert!(run_experiment(&a).iter().all(|r| !r.converged));
        let a = args(&["--family", "index1", "--n", "5", "--p", "2", "--inverse", "group", "--method", "hpi19,mqr", "--tol", "1e-9"]);
        for r in run_experiment(&a) {
            assert!(r.converged, "{r:?}");
            assert!(r.e5.unwrap() < 1e-8 && r.e1k.unwrap() < 1e-8);
        }
    }

    #[test]
    fn outer_rows() {
        let a = args(&["--family", "random", "--n", "6", "--p", "2", "--inverse", "outer", "--slice-rank", "2", "--method", "mqr,hpi19", "--tol", "1e-9"]);
        for r in run_experiment(&a) {
            assert!(r.converged, "{r:?}");
            assert!(r.e2.unwrap() < 1e-8);
            assert!(r.e1.is_none());
        }
    }

    #[test]
    fn zero_tensor_mp() {
        let a = args(&["--family", "cycol", "--n", "3", "--p", "1"]);
        let c = cases(&a)[0].clone();
        let ctx = MContext::new(transform(MKind::Dft, 1, 0).unwrap());
        let z = Tensor3::zeros(3, 3, 1);
        let out = solve(&z, None, &ctx, &a, &c).unwrap();
        assert_eq!(out.x.fro_norm(), 0.0);
    }
}
