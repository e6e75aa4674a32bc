use std::collections::BTreeMap;
use std::io::Write;

use crate::record::RunRecord;

pub const PLOT_HEADER: [&str; 5] = ["method", "m_kind", "n", "mean_ms", "runs"];

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub method: String,
    pub m_kind: String,
    pub n: usize,
    pub mean_ms: f64,
    pub runs: usize,
}

/// Mean wall time of the converged runs per (method, m_kind, n), sorted by key.
pub fn series(records: &[RunRecord]) -> Vec<SeriesPoint> {
    let mut groups: BTreeMap<(String, String, usize), (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.converged) {
        let e = groups.entry((r.method.clone(), r.m_kind.clone(), r.n)).or_default();
        e.0 += r.wall_ms;
        e.1 += 1;
    }
    groups
        .into_iter()
        .map(|((method, m_kind, n), (total, runs))| SeriesPoint {
            method,
            m_kind,
            n,
            mean_ms: total / runs as f64,
            runs,
        })
        .collect()
}

pub fn emit_plot_data<W: Write>(out: W, records: &[RunRecord]) -> csv::Result<usize> {
    let points = series(records);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for p in &points {
        w.write_record([p.method.clone(), p.m_kind.clone(), p.n.to_string(), p.mean_ms.to_string(), p.runs.to_string()])?;
    }
    w.flush()?;
    Ok(points.len())
}
