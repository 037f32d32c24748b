//! Report envelopes, table output and run-directory consolidation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

/// Envelope files end with this suffix; nothing else in a run directory is read back.
pub const REPORT_SUFFIX: &str = ".report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Provenance wrapper around every machine-readable output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub check: Option<String>,
    /// `PASS`, `FAIL`, `INCONCLUSIVE`, or absent for dumps.
    pub verdict: Option<String>,
    pub config_hash: String,
    pub seed: u64,
    /// Table files written next to the envelope.
    pub tables: Vec<String>,
    pub body: Value,
}

impl Envelope {
    pub fn new(command: &str, check: Option<&str>, config_hash: &str, seed: u64, body: Value) -> Self {
        Self {
            tool: "semiwalk".into(),
            version: crate::version().into(),
            command: command.into(),
            check: check.map(Into::into),
            verdict: None,
            config_hash: config_hash.into(),
            seed,
            tables: Vec::new(),
            body,
        }
    }

    /// Writes `<dir>/<stem>.report.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}{REPORT_SUFFIX}"));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// Renders a CSV writer's output in `format`; JSON turns rows into objects keyed by the header.
pub fn render_table(format: Format, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    match format {
        Format::Csv => Ok(buf),
        Format::Json => {
            let mut rdr = csv::Reader::from_reader(buf.as_slice());
            let header = rdr.headers()?.clone();
            let mut rows = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                let obj: serde_json::Map<String, Value> = header.iter().zip(rec.iter()).map(|(k, v)| (k.to_string(), cell(v))).collect();
                rows.push(Value::Object(obj));
            }
            let mut out = serde_json::to_vec_pretty(&rows)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

fn cell(v: &str) -> Value {
    if let Ok(i) = v.parse::<i64>() {
        return Value::from(i);
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Value::from(x),
        _ if v.is_empty() => Value::Null,
        _ => Value::from(v),
    }
}

/// Writes a table as `<dir>/<stem>.<ext>` and returns the file name.
pub fn write_table(dir: &Path, stem: &str, format: Format, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let name = format!("{stem}.{}", format.extension());
    std::fs::write(dir.join(&name), render_table(format, fill)?)?;
    Ok(name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub file: String,
    /// `ok` or `corrupt`.
    pub status: String,
    pub command: String,
    pub check: String,
    pub verdict: String,
    pub config_hash: String,
    pub seed: String,
    pub version: String,
    /// Set on every readable row when the directory mixes config hashes.
    pub mixed_config: bool,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub distinct_hashes: usize,
    pub corrupt: usize,
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(REPORT_SUFFIX)) {
            out.push(p);
        }
    }
    Ok(())
}

/// One row per envelope under `dir` (recursively), sorted by path.
pub fn summarize(dir: &Path) -> Result<Summary> {
    if !dir.is_dir() {
        return Err(Error::Io(format!("{} is not a directory", dir.display())));
    }
    let mut files = Vec::new();
    collect(dir, &mut files)?;
    let mut rows = Vec::new();
    for f in files {
        let file = f.strip_prefix(dir).unwrap_or(&f).to_string_lossy().replace('\\', "/");
        let parsed = std::fs::read_to_string(&f)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<Envelope>(&t).map_err(|e| e.to_string()));
        rows.push(match parsed {
            Ok(e) => SummaryRow {
                file,
                status: "ok".into(),
                command: e.command,
                check: e.check.unwrap_or_default(),
                verdict: e.verdict.unwrap_or_default(),
                config_hash: e.config_hash,
                seed: e.seed.to_string(),
                version: e.version,
                mixed_config: false,
                error: String::new(),
            },
            Err(msg) => SummaryRow {
                file,
                status: "corrupt".into(),
                command: String::new(),
                check: String::new(),
                verdict: String::new(),
                config_hash: String::new(),
                seed: String::new(),
                version: String::new(),
                mixed_config: false,
                error: msg,
            },
        });
    }
    let hashes: BTreeSet<&str> = rows.iter().filter(|r| r.status == "ok").map(|r| r.config_hash.as_str()).collect();
    let distinct_hashes = hashes.len();
    for r in rows.iter_mut().filter(|r| r.status == "ok") {
        r.mixed_config = distinct_hashes > 1;
    }
    let corrupt = rows.iter().filter(|r| r.status != "ok").count();
    Ok(Summary { rows, distinct_hashes, corrupt })
}

/// CSV with a fixed header even when there are no rows.
pub fn write_summary_csv<W: std::io::Write>(summary: &Summary, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).has_headers(false).from_writer(out);
    w.write_record(["file", "status", "command", "check", "verdict", "config_hash", "seed", "version", "mixed_config", "error"])?;
    for r in &summary.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_table_keeps_types() {
        let out = render_table(Format::Json, |b| {
            b.extend_from_slice(b"a,b,c\n1,0.5,x\n2,,inf\n");
            Ok(())
        })
        .unwrap();
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v[0]["a"], Value::from(1));
        assert_eq!(v[0]["b"], Value::from(0.5));
        assert_eq!(v[1]["b"], Value::Null);
        assert_eq!(v[1]["c"], Value::from("inf"));
    }

    #[test]
    fn summary_flags_mixed_hashes_and_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        Envelope::new("verify", Some("index"), "aa", 1, Value::Null).write(dir.path(), "one").unwrap();
        let sub = dir.path().join("sub");
        std::fs::create_dir(&sub).unwrap();
        Envelope::new("verify", Some("index"), "bb", 2, Value::Null).write(&sub, "two").unwrap();
        std::fs::write(dir.path().join(format!("bad{REPORT_SUFFIX}")), "{").unwrap();
        std::fs::write(dir.path().join("paths.json"), "[]").unwrap();
        let s = summarize(dir.path()).unwrap();
        assert_eq!(s.rows.len(), 3);
        assert_eq!(s.corrupt, 1);
        assert_eq!(s.distinct_hashes, 2);
        assert!(s.rows.iter().filter(|r| r.status == "ok").all(|r| r.mixed_config));
        assert_eq!(s.rows[2].file, "sub/two.report.json");
    }

    #[test]
    fn empty_summary_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let s = summarize(dir.path()).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }
}
