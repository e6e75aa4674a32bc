//! Sweep harness for the `mprod-core` inverses: residuals, iteration and TTP
//! counts and timings as CSV or JSON.

pub mod cli;
pub mod plot;
pub mod record;
pub mod runner;
pub mod verify;

use std::fs::File;
use std::io::{self, BufWriter};
use std::process::ExitCode;

use clap::Parser;

pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

/// Entry point of the binary.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match cli::Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = args.validate() {
        return usage(msg);
    }
    if args.verify {
        return match verify::verify_mode(&args) {
            Err(msg) => usage(msg),
            Ok(rows) => {
                print!("{}", verify::format_table(&rows));
                let failed = rows.iter().filter(|r| !r.passed).count();
                if failed == 0 {
                    println!("all {} checks passed", rows.len());
                    ExitCode::SUCCESS
                } else {
                    println!("{failed} of {} checks failed", rows.len());
                    ExitCode::from(EXIT_VERIFY_FAILED)
                }
            }
        };
    }
    let records = runner::run_experiment(&args);
    let written = match &args.out {
        Some(path) => File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| record::write_csv(BufWriter::new(f), &records)),
        None => record::write_csv(io::stdout().lock(), &records),
    };
    if let Err(e) = written {
        return usage(format!("cannot write CSV: {e}"));
    }
    if let Some(path) = &args.json {
        let res = File::create(path)
            .map_err(serde_json::Error::io)
            .and_then(|f| record::write_json(BufWriter::new(f), &records));
        if let Err(e) = res {
            return usage(format!("cannot write {}: {e}", path.display()));
        }
    }
    if let Some(path) = &args.plot_data {
        if let Err(e) = File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| plot::emit_plot_data(BufWriter::new(f), &records))
        {
            return usage(format!("cannot write {}: {e}", path.display()));
        }
    }
    ExitCode::SUCCESS
}
