use std::io::Write;

use serde::{Deserialize, Serialize};

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 20] = [
    "family", "n", "m", "p", "m_kind", "method", "inverse", "tol", "seed", "trial", "iterations", "ttp",
    "converged", "E1", "E2", "E3", "E4", "E5", "E1k", "wall_ms",
];

/// One run of one inverse computation. Residuals that do not apply to the
/// inverse kind, and every residual of a failed run, are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub m_kind: String,
    pub method: String,
    pub inverse: String,
    pub tol: f64,
    pub seed: u64,
    pub trial: usize,
    pub iterations: Option<usize>,
    pub ttp: Option<u64>,
    pub converged: bool,
    #[serde(rename = "E1")]
    pub e1: Option<f64>,
    #[serde(rename = "E2")]
    pub e2: Option<f64>,
    #[serde(rename = "E3")]
    pub e3: Option<f64>,
    #[serde(rename = "E4")]
    pub e4: Option<f64>,
    #[serde(rename = "E5")]
    pub e5: Option<f64>,
    #[serde(rename = "E1k")]
    pub e1k: Option<f64>,
    pub wall_ms: f64,
}

pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> csv::Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn write_json<W: Write>(out: W, records: &[RunRecord]) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        RunRecord {
            family: "chow".into(),
            n: 4,
            m: 4,
            p: 2,
            m_kind: "random".into(),
            method: "hpi19".into(),
            inverse: "mp".into(),
            tol: 1e-12,
            seed: 3,
            trial: 0,
            iterations: Some(5),
            ttp: Some(35),
            converged: true,
            e1: Some(1.5e-14),
            e2: Some(2.0e-13),
            e3: Some(0.0),
            e4: Some(3.25e-15),
            e5: None,
            e1k: None,
            wall_ms: 0.125,
        }
    }

    #[test]
    fn csv_roundtrip_keeps_column_order() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[sample()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert!(text.lines().nth(1).unwrap().contains(",true,1.5e-14,2e-13,0.0,3.25e-15,,,0.125"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![sample()]);
    }

    #[test]
    fn json_uses_csv_names() {
        let mut buf = Vec::new();
        write_json(&mut buf, &[sample()]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let obj = v[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut expected = CSV_HEADER.to_vec();
        expected.sort_unstable();
        let mut got = keys.clone();
        got.sort_unstable();
        assert_eq!(got, expected);
        assert!(obj["E5"].is_null());
    }

    #[test]
    fn empty_output_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");
    }
}
