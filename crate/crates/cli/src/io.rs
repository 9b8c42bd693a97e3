//! CSV input parsing and all-or-nothing output writing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use edpcgrl_core::session::{SessionTrace, TraceRow, TRACE_HEADER};
use edpcgrl_core::signals::SignalSeries;
use sha2::{Digest, Sha256};

/// Relative jitter tolerated between consecutive timestamps.
pub const MAX_JITTER: f64 = 0.01;

/// Reads a `t_s,value` CSV, inferring the sample rate from the timestamps.
pub fn read_signal_csv(path: &Path) -> Result<SignalSeries> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_signal_csv(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_signal_csv(text: &str) -> Result<SignalSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| anyhow!("schema error: file is empty, expected header `t_s,value`"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["t_s", "value"] {
        bail!("schema error: header is `{header}`, expected `t_s,value`");
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    let mut line_numbers = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            bail!("line {n}: expected 2 fields, found {}", fields.len());
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| anyhow!("line {n}: {what} `{s}` is not a finite number"))
        };
        t.push(parse(fields[0], "timestamp")?);
        v.push(parse(fields[1], "value")?);
        line_numbers.push(n);
    }
    if t.len() < 2 {
        bail!("schema error: need at least 2 data rows, found {}", t.len());
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if dt <= 0.0 {
        bail!("sampling error: timestamps do not increase");
    }
    for k in 1..t.len() {
        let step = t[k] - t[k - 1];
        if ((step - dt) / dt).abs() > MAX_JITTER {
            bail!(
                "sampling error: line {}: interval {step} s deviates more than 1% from the nominal {dt} s",
                line_numbers[k]
            );
        }
    }
    Ok(SignalSeries::new(1.0 / dt, v, t[0])?)
}

pub fn csv_bytes(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    comment: Option<&str>,
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    if let Some(c) = comment {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

pub fn trace_bytes(trace: &SessionTrace) -> Result<Vec<u8>> {
    csv_bytes(
        &TRACE_HEADER,
        trace.rows.iter().map(|r| r.to_record()),
        None,
    )
}

/// Parses a trace CSV; the subject id comes from the file name digits.
pub fn read_trace(path: &Path, fallback_id: usize) -> Result<SessionTrace> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        bail!("{}: unexpected trace header", path.display());
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), i + 1))?;
        let fields: Vec<&str> = rec.iter().collect();
        rows.push(
            TraceRow::from_record(&fields)
                .with_context(|| format!("{}: line {}", path.display(), i + 2))?,
        );
    }
    let order = match rows.iter().find_map(|r| r.agent) {
        Some(edpcgrl_core::session::SessionAgent::Rl) => edpcgrl_core::session::AgentOrder::RlFirst,
        Some(_) => edpcgrl_core::session::AgentOrder::RulesFirst,
        None => bail!("{}: trace has no adaptive rows", path.display()),
    };
    let digits: String = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("")
        .chars()
        .filter(|c| c.is_ascii_digit())
        .collect();
    Ok(SessionTrace {
        subject_id: digits.parse().unwrap_or(fallback_id),
        order,
        rows,
    })
}

/// Output files collected in memory and written together; if any write
/// fails, the files already written are removed.
#[derive(Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn add(&mut self, relative: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((relative.into(), bytes));
    }

    pub fn hashes(&self) -> Vec<(String, String)> {
        self.files
            .iter()
            .map(|(p, b)| {
                (
                    p.to_string_lossy().replace('\\', "/"),
                    hex::encode(Sha256::digest(b)),
                )
            })
            .collect()
    }

    pub fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written: Vec<PathBuf> = Vec::new();
        let result = (|| -> Result<()> {
            for (rel, bytes) in &self.files {
                let path = dir.join(rel);
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent)
                        .with_context(|| format!("cannot create {}", parent.display()))?;
                }
                fs::write(&path, bytes)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                written.push(path);
            }
            Ok(())
        })();
        match result {
            Ok(()) => Ok(written),
            Err(e) => {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                Err(e)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_uniform_signal() {
        let s = parse_signal_csv("t_s,value\n0.0,1\n0.5,2\n1.0,3\n").unwrap();
        assert_eq!(s.sample_rate_hz, 2.0);
        assert_eq!(s.samples, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn reports_problems() {
        let err = parse_signal_csv("").unwrap_err().to_string();
        assert!(err.contains("schema"), "{err}");
        let err = parse_signal_csv("t_s,value\n0,1\n1,x\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = parse_signal_csv("t_s,value\n0,1\n1,1\n2.5,1\n3,1\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("sampling"), "{err}");
        assert!(parse_signal_csv("time,value\n0,1\n1,1\n").is_err());
    }
}
