//! Delimited text export and import of per-setting counts.
//!
//! ```text
//! # cnotsim-counts v1
//! setting_id,qwp1_rad,hwp1_rad,qwp2_rad,hwp2_rad,total,accidental,singles1,singles2
//! 0,0,0,0,0,812,31,40112,1999871
//! ```
//!
//! Angles use Rust's shortest round-trip float formatting so import after
//! export reproduces every field exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::detection::CountRecord;
use crate::error::{Error, Result};
use crate::tomography::AnalyzerSetting;

pub const SCHEMA_LINE: &str = "# cnotsim-counts v1";
pub const HEADER: [&str; 9] = [
    "setting_id",
    "qwp1_rad",
    "hwp1_rad",
    "qwp2_rad",
    "hwp2_rad",
    "total",
    "accidental",
    "singles1",
    "singles2",
];

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::CountFile(e.to_string()),
    }
}

pub fn write_counts(mut out: impl Write, records: &[CountRecord]) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for r in records {
        let s = &r.setting;
        w.write_record([
            s.id.to_string(),
            s.qwp[0].to_string(),
            s.hwp[0].to_string(),
            s.qwp[1].to_string(),
            s.hwp[1].to_string(),
            r.total.to_string(),
            r.accidental.to_string(),
            r.singles1.to_string(),
            r.singles2.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts(mut input: impl Read) -> Result<Vec<CountRecord>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (first, rest) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    if first.trim_end_matches('\r') != SCHEMA_LINE {
        return Err(Error::CountFile(format!(
            "first line must be `{SCHEMA_LINE}`, found `{first}`"
        )));
    }
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(HEADER) {
        return Err(Error::CountFile(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = row + 3;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let float = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| Error::CountFile(format!("line {line}, `{}`: {e}", HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse::<u64>()
                .map_err(|e| Error::CountFile(format!("line {line}, `{}`: {e}", HEADER[i])))
        };
        let id = int(0)? as usize;
        if out.iter().any(|o: &CountRecord| o.setting.id == id) {
            return Err(Error::CountFile(format!("line {line}: duplicate setting id {id}")));
        }
        out.push(CountRecord {
            setting: AnalyzerSetting::new(id, [float(1)?, float(3)?], [float(2)?, float(4)?]),
            total: int(5)?,
            accidental: int(6)?,
            singles1: int(7)?,
            singles2: int(8)?,
        });
    }
    Ok(out)
}

pub fn export_counts(path: &Path, records: &[CountRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_counts(&mut buf, records)?;
    fs::write(path, buf).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn import_counts(path: &Path) -> Result<Vec<CountRecord>> {
    let f = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_counts(f)
}
