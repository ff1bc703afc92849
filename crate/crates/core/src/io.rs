//! Stable CSV/JSON artifact formats and atomic file output.
//!
//! Every CSV starts with `# schema-version: 1`, may carry further `#` note
//! lines, then a header row. Exact integer counts are written as decimal
//! strings so JSON consumers never round them.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::theory::PartitionTable;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(crate::error::Error::invalid(format!(
                "unknown format {other:?}; expected csv or json"
            ))),
        }
    }
}

/// Serializes `rows` as CSV under a fixed header.
pub fn to_csv<T: Serialize>(header: &[&str], rows: &[T], notes: &[String]) -> Result<String> {
    let mut buf = Vec::new();
    writeln!(buf, "# schema-version: {SCHEMA_VERSION}")?;
    for note in notes {
        writeln!(buf, "# {note}")?;
    }
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Parses CSV produced by [`to_csv`], skipping `#` lines.
pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

mod u128_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub k1: usize,
    pub k2: usize,
    #[serde(rename = "N", with = "u128_string")]
    pub n: u128,
}

pub const PARTITION_HEADER: [&str; 3] = ["k1", "k2", "N"];

pub fn partition_rows(table: &PartitionTable) -> Vec<PartitionRow> {
    table
        .counts
        .iter()
        .map(|(&(k1, k2), &n)| PartitionRow { k1, k2, n })
        .collect()
}

pub const FLUX_THEORY_HEADER: [&str; 6] = ["L", "m1", "m110", "alpha", "Q_v", "Q_u"];

pub const SWEEP_HEADER: [&str; 12] = [
    "L", "m1", "m110", "alpha", "rho1", "rho110", "Q_u_hat", "stderr", "n_max", "n_burn",
    "replicates", "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryRow {
    pub omega_id: usize,
    pub class: String,
    pub orbit_size: usize,
    pub m1110: usize,
    pub m010: usize,
    pub alpha: f64,
    pub probability: f64,
    pub conjecture: f64,
}

pub const STATIONARY_HEADER: [&str; 8] = [
    "omega_id", "class", "orbit_size", "m1110", "m010", "alpha", "probability", "conjecture",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRow {
    #[serde(rename = "L")]
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    pub omega_id: usize,
    pub size: usize,
    pub alpha: f64,
    pub max_rel_error: f64,
    pub residual: f64,
    pub passed: bool,
}

pub const CONJECTURE_HEADER: [&str; 9] = [
    "L", "m1", "m110", "omega_id", "size", "alpha", "max_rel_error", "residual", "passed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRow {
    pub class: String,
    pub orbit_size: usize,
    pub m1110: usize,
    pub m010: usize,
    /// Irreducible set index, or `transient`.
    pub membership: String,
}

pub const SECTOR_HEADER: [&str; 5] = ["class", "orbit_size", "m1110", "m010", "membership"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCsvRow {
    pub alpha: f64,
    pub q_u: f64,
    pub target: f64,
    pub deviation: f64,
}

pub const LIMIT_HEADER: [&str; 4] = ["alpha", "q_u", "target", "deviation"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{PartitionTable, Scope};

    #[test]
    fn empty_table_is_header_only() {
        let t = PartitionTable::new(Scope::Sector, 10, 8, 3);
        let s = to_csv(&PARTITION_HEADER, &partition_rows(&t), &[]).unwrap();
        assert_eq!(s, "# schema-version: 1\nk1,k2,N\n");
        assert!(from_csv::<PartitionRow>(&s).unwrap().is_empty());
    }

    #[test]
    fn big_counts_survive_json() {
        let row = PartitionRow { k1: 1, k2: 2, n: u128::MAX };
        let js = to_json(&row).unwrap();
        assert!(js.contains(&format!("\"{}\"", u128::MAX)));
        let back: PartitionRow = serde_json::from_str(&js).unwrap();
        assert_eq!(back, row);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
    }
}
