use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use mprod_core::hyperpower::Method;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Chow,
    Gearmat,
    Cycol,
    Random,
    Index1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExampleArg {
    #[value(name = "4.1")]
    E41,
    #[value(name = "4.2")]
    E42,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum MKind {
    Dft,
    M1,
    Random,
}

impl MKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MKind::Dft => "dft",
            MKind::M1 => "m1",
            MKind::Random => "random",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InverseArg {
    Mp,
    Drazin,
    Group,
    Outer,
}

impl InverseArg {
    pub fn as_str(self) -> &'static str {
        match self {
            InverseArg::Mp => "mp",
            InverseArg::Drazin => "drazin",
            InverseArg::Group => "group",
            InverseArg::Outer => "outer",
        }
    }
}

/// Direct QR path or one of the hyperpower iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodArg {
    Mqr,
    Hpi(Method),
}

impl FromStr for MethodArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "mqr" {
            return Ok(MethodArg::Mqr);
        }
        s.parse::<Method>().map(MethodArg::Hpi).map_err(|e| e.to_string())
    }
}

impl fmt::Display for MethodArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodArg::Mqr => f.write_str("mqr"),
            MethodArg::Hpi(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser, Debug, Clone)]
#[command(name = "mprod-bench", version, about = "Generalized tensor inverses under the M-product: residual, iteration and TTP sweeps")]
pub struct Args {
    /// Generator family.
    #[arg(long, value_enum, conflicts_with = "example")]
    pub family: Option<FamilyArg>,

    /// One of the two fixed small examples instead of a family.
    #[arg(long, value_enum)]
    pub example: Option<ExampleArg>,

    /// Column counts (comma separated). Square families use n for both sides.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,

    /// Row count for rectangular families; defaults to n.
    #[arg(long)]
    pub m: Option<usize>,

    /// Tube lengths (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,

    /// Rank per hat slice for index1, cycol period, or rank of W for outer.
    #[arg(long)]
    pub slice_rank: Option<usize>,

    #[arg(long, value_enum, value_delimiter = ',')]
    pub m_kind: Option<Vec<MKind>>,

    /// Seed of the random transform.
    #[arg(long, default_value_t = 0)]
    pub m_seed: u64,

    /// mqr, hpi9, hpi19 or hpi-std:<p> (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<MethodArg>>,

    #[arg(long, value_enum)]
    pub inverse: Option<InverseArg>,

    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,

    /// Scale of the initial guess; defaults depend on the inverse.
    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long, default_value_t = 1)]
    pub trials: usize,

    /// Base seed of the generated tensors. Trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// CSV output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub json: Option<PathBuf>,

    /// Cross-check against the reference implementation and exit.
    #[arg(long)]
    pub verify: bool,

    /// Mean wall time per (method, m_kind, n).
    #[arg(long)]
    pub plot_data: Option<PathBuf>,

    /// Added to zeta2 of the order-19 coefficients. Test hook.
    #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub perturb_coefficients: f64,
}

impl Args {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0) {
            return Err(format!("--tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return Err("--max-iters must be at least 1".into());
        }
        if self.trials == 0 {
            return Err("--trials must be at least 1".into());
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(format!("--gamma must be positive, got {g}"));
            }
        }
        if !self.perturb_coefficients.is_finite() {
            return Err("--perturb-coefficients must be finite".into());
        }
        if self.n.as_ref().is_some_and(|v| v.is_empty() || v.contains(&0)) {
            return Err("--n values must be positive".into());
        }
        if self.p.as_ref().is_some_and(|v| v.is_empty() || v.contains(&0)) {
            return Err("--p values must be positive".into());
        }
        if self.m == Some(0) {
            return Err("--m must be positive".into());
        }
        if self.slice_rank == Some(0) {
            return Err("--slice-rank must be positive".into());
        }
        if self.example.is_some() && (self.n.is_some() || self.m.is_some() || self.p.is_some()) {
            return Err("--example fixes the shape; --n, --m and --p do not apply".into());
        }
        if !self.verify && self.family.is_none() && self.example.is_none() {
            return Err("one of --family or --example is required".into());
        }
        Ok(())
    }

    pub fn m_kinds(&self) -> Vec<MKind> {
        let mut kinds = self.m_kind.clone().unwrap_or_else(|| vec![MKind::Random]);
        kinds.dedup();
        kinds
    }

    pub fn methods(&self) -> Vec<MethodArg> {
        self.method.clone().unwrap_or_else(|| vec![MethodArg::Mqr])
    }

    pub fn inverse_kind(&self) -> InverseArg {
        match (self.inverse, self.example) {
            (Some(i), _) => i,
            (None, Some(ExampleArg::E42)) => InverseArg::Drazin,
            _ => InverseArg::Mp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Args, clap::Error> {
        Args::try_parse_from(std::iter::once("mprod-bench").chain(args.iter().copied()))
    }

    #[test]
    fn lists_and_methods() {
        let a = parse(&["--family", "chow", "--n", "4,8", "--p", "2", "--method", "mqr,hpi19,hpi-std:3"]).unwrap();
        assert_eq!(a.n, Some(vec![4, 8]));
        assert_eq!(
            a.methods(),
            vec![MethodArg::Mqr, MethodArg::Hpi(Method::Hpi19), MethodArg::Hpi(Method::Standard(3))]
        );
        assert_eq!(a.methods()[2].to_string(), "hpi-std:3");
        assert!(a.validate().is_ok());
        assert_eq!(a.m_kinds(), vec![MKind::Random]);
        assert_eq!(a.inverse_kind(), InverseArg::Mp);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse(&["--family", "chow", "--example", "4.1"]).is_err());
        assert!(parse(&["--family", "nope"]).is_err());
        assert!(parse(&["--family", "chow", "--method", "hpi-std:1"]).is_err());
        assert!(parse(&["--family", "chow", "--tol", "0"]).unwrap().validate().is_err());
        assert!(parse(&["--family", "chow", "--n", "0"]).unwrap().validate().is_err());
        assert!(parse(&["--example", "4.1", "--n", "3"]).unwrap().validate().is_err());
        assert!(parse(&[]).unwrap().validate().is_err());
    }

    #[test]
    fn example_defaults() {
        let a = parse(&["--example", "4.2"]).unwrap();
        assert_eq!(a.example, Some(ExampleArg::E42));
        assert_eq!(a.inverse_kind(), InverseArg::Drazin);
        let a = parse(&["--example", "4.2", "--inverse", "group"]).unwrap();
        assert_eq!(a.inverse_kind(), InverseArg::Group);
    }
}
