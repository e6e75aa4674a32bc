//! Cross-checks of the main paths against the reference implementation.

use std::fmt::Write as _;

use mprod_core::generators::{random_dense, random_index1};
use mprod_core::hyperpower::{hpi19_step, hpi9_step, hpi_standard_step, initial_guess, GuessKind, TtpCounter};
use mprod_core::oracle::{oracle_drazin, oracle_pinv, outer_via_mat, t_product_direct};
use mprod_core::outer::{drazin_qr, moore_penrose_qr, outer_inverse_qr, OuterVariant};
use mprod_core::{MContext, Tensor3, TransformSpec};

use crate::cli::{Args, MKind};
use crate::runner::{coefficients, transform};

pub const MAX_SIDE: usize = 12;
pub const MAX_DEPTH: usize = 4;

#[derive(Clone, Debug)]
pub struct CheckRow {
    pub check: String,
    pub m_kind: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

fn rel(x: &Tensor3, reference: &Tensor3) -> f64 {
    x.distance(reference).map_or(f64::INFINITY, |d| d / reference.fro_norm().max(f64::MIN_POSITIVE))
}

pub struct Plan {
    pub ns: Vec<usize>,
    pub ps: Vec<usize>,
    pub m: Option<usize>,
    pub kinds: Vec<MKind>,
}

/// Sizes to check, or a usage error when a request exceeds the small-size limits.
pub fn plan(args: &Args) -> Result<Plan, String> {
    let ns = args.n.clone().unwrap_or_else(|| vec![6]);
    let ps = args.p.clone().unwrap_or_else(|| vec![2, 3]);
    if let Some(&n) = ns.iter().find(|&&n| n > MAX_SIDE) {
        return Err(format!("--verify needs n <= {MAX_SIDE}, got {n}"));
    }
    if let Some(m) = args.m.filter(|&m| m > MAX_SIDE) {
        return Err(format!("--verify needs m <= {MAX_SIDE}, got {m}"));
    }
    if let Some(&p) = ps.iter().find(|&&p| p > MAX_DEPTH) {
        return Err(format!("--verify needs p <= {MAX_DEPTH}, got {p}"));
    }
    if args.example.is_some() {
        return Err("--verify does not take --example".into());
    }
    let kinds = args.m_kind.clone().unwrap_or_else(|| vec![MKind::Dft, MKind::M1, MKind::Random]);
    Ok(Plan { ns, ps, m: args.m, kinds })
}

pub fn verify_mode(args: &Args) -> Result<Vec<CheckRow>, String> {
    let plan = plan(args)?;
    let mut rows = Vec::new();
    for &n in &plan.ns {
        let m = plan.m.unwrap_or(n);
        for &p in &plan.ps {
            for &kind in &plan.kinds {
                let spec = transform(kind, p, args.m_seed).map_err(|e| e.to_string())?;
                let ctx = MContext::new(spec.clone());
                for (name, value, bound) in checks(&ctx, &spec, m, n, args) {
                    rows.push(CheckRow {
                        check: name.to_string(),
                        m_kind: kind.as_str().to_string(),
                        m,
                        n,
                        p,
                        value,
                        bound,
                        passed: value <= bound,
                    });
                }
            }
        }
    }
    for (name, value, bound) in global_checks(args) {
        rows.push(CheckRow {
            check: name.to_string(),
            m_kind: "-".into(),
            m: 0,
            n: 0,
            p: 0,
            value,
            bound,
            passed: value <= bound,
        });
    }
    Ok(rows)
}

fn checks(ctx: &MContext, spec: &TransformSpec, m: usize, n: usize, args: &Args) -> Vec<(&'static str, f64, f64)> {
    let p = ctx.depth();
    let seed = args.seed;
    let mut out = Vec::new();
    let a = random_dense(m, n, p, seed);
    let err = f64::INFINITY;

    let value = match (moore_penrose_qr(&a, ctx, None), oracle_pinv(&a, spec, None)) {
        (Ok(x), Ok(o)) => rel(&x, &o),
        _ => err,
    };
    out.push(("pinv_vs_oracle", value, 1e-9));

    let s = (m.min(n) / 2).max(1);
    let w = ctx
        .product(&random_dense(n, s, p, seed + 1), &random_dense(s, m, p, seed + 2))
        .expect("conformable");
    let reference = outer_via_mat(&a, &w, spec);
    let xb = outer_inverse_qr(&a, &w, ctx, None, OuterVariant::QrB);
    let xd = outer_inverse_qr(&a, &w, ctx, None, OuterVariant::QrD);
    let pair = |x: &Result<Tensor3, _>, y: &Result<Tensor3, _>| match (x, y) {
        (Ok(x), Ok(y)) => rel(x, y),
        _ => err,
    };
    out.push(("outer_qr_b_vs_oracle", pair(&xb, &reference), 1e-9));
    out.push(("outer_qr_d_vs_oracle", pair(&xd, &reference), 1e-9));
    out.push(("outer_qr_b_vs_qr_d", pair(&xd, &xb), 1e-9));

    if n >= 2 {
        let value = match random_index1(n, (n / 2).max(1), seed, ctx) {
            Ok(b) => pair(&drazin_qr(&b, ctx, None, None), &oracle_drazin(&b, spec)),
            Err(_) => err,
        };
        out.push(("drazin_vs_oracle", value, 1e-8));
    }

    let sq = random_dense(n, n, p, seed + 3);
    let z = initial_guess(&sq, ctx, &GuessKind::Mp, None).expect("nonzero");
    let ttp = TtpCounter::new();
    let value = match (
        hpi19_step(&sq, &z, ctx, &coefficients(args.perturb_coefficients), &ttp),
        hpi_standard_step(&sq, &z, 19, ctx, &ttp),
    ) {
        (Ok(f), Ok(s)) => rel(&f, &s),
        _ => err,
    };
    out.push(("hpi19_factorized_vs_plain", value, 1e-10));
    let value = match (hpi9_step(&sq, &z, ctx, &ttp), hpi_standard_step(&sq, &z, 9, ctx, &ttp)) {
        (Ok(f), Ok(s)) => rel(&f, &s),
        _ => err,
    };
    out.push(("hpi9_factorized_vs_plain", value, 1e-10));
    out.push(("ttp_count", (ttp.get() as f64 - (7 + 19 + 5 + 9) as f64).abs(), 0.0));

    if spec.kind() == mprod_core::TransformKind::Dft {
        let b = random_dense(n, m, p, seed + 4);
        let value = match (ctx.product(&a, &b), t_product_direct(&a, &b)) {
            (Ok(x), Ok(y)) => x.distance(&y).unwrap_or(err) / (a.fro_norm() * b.fro_norm()),
            _ => err,
        };
        out.push(("t_product_vs_direct", value, 1e-10));
    }
    out
}

fn global_checks(args: &Args) -> Vec<(&'static str, f64, f64)> {
    let c = coefficients(args.perturb_coefficients);
    let worst = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    vec![
        ("coefficient_products", worst(&c.product_residuals()), 1e-14),
        ("coefficient_tau", worst(&c.tau_residuals()), 1e-14),
        ("coefficient_xi", worst(&c.xi_residuals()), 1e-14),
    ]
}

pub fn format_table(rows: &[CheckRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:<7} {:>3} {:>3} {:>2} {:>11} {:>9}  result", "check", "m_kind", "m", "n", "p", "value", "bound");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<28} {:<7} {:>3} {:>3} {:>2} {:>11.3e} {:>9.1e}  {}",
            r.check,
            r.m_kind,
            r.m,
            r.n,
            r.p,
            r.value,
            r.bound,
            if r.passed { "ok" } else { "FAIL" }
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn args(list: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("mprod-bench").chain(list.iter().copied())).unwrap()
    }

    #[test]
    fn default_run_passes() {
        let rows = verify_mode(&args(&["--verify"])).unwrap();
        let failed: Vec<_> = rows.iter().filter(|r| !r.passed).collect();
        assert!(failed.is_empty(), "{}", format_table(&rows));
        assert!(rows.iter().any(|r| r.check == "t_product_vs_direct"));
    }

    #[test]
    fn perturbation_is_caught() {
        let rows = verify_mode(&args(&["--verify", "--perturb-coefficients", "1e-6", "--p", "2"])).unwrap();
        let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.check.as_str()).collect();
        assert!(failed.contains(&"hpi19_factorized_vs_plain"));
        assert!(failed.contains(&"coefficient_products"));
        assert!(!failed.contains(&"hpi9_factorized_vs_plain"));
    }

    #[test]
    fn size_limits() {
        assert!(verify_mode(&args(&["--verify", "--n", "13"])).is_err());
        assert!(verify_mode(&args(&["--verify", "--p", "5"])).is_err());
        assert!(verify_mode(&args(&["--verify", "--n", "4", "--m", "20"])).is_err());
        assert!(verify_mode(&args(&["--verify", "--n", "12", "--p", "4", "--m-kind", "m1"])).is_ok());
    }
}
