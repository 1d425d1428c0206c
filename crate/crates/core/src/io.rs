//! Matrix files and atomic output.
//!
//! Two input formats are accepted for data and covariance matrices:
//!
//! * CSV, one row per line, with an optional header line;
//! * a binary format: the 4-byte magic `EIGS`, `u16` rows, `u16` columns,
//!   then `rows·cols` IEEE-754 doubles in column-major order. All integers
//!   and floats are little-endian.
//!
//! [`read_matrix`] sniffs the magic and picks the right reader.
//! Every writer goes through a temporary file in the destination directory
//! followed by a rename, so an output is either complete or absent.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::DataMatrix;

pub const MAGIC: &[u8; 4] = b"EIGS";
const HEADER_LEN: usize = 8;

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_csv(text: &str, has_header: bool) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("CSV: {e}")))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("CSV row {}, column {}: '{cell}' is not a number", i + 1, j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(Error::EmptyMatrix { rows: n, cols: p });
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

pub fn read_csv(path: &Path, has_header: bool) -> Result<DMatrix<f64>> {
    parse_csv(&fs::read_to_string(path)?, has_header)
}

pub fn decode_eigs(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Parse("missing EIGS header".into()));
    }
    let n = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let p = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * n * p {
        return Err(Error::Parse(format!(
            "EIGS body has {} bytes, header promises {}x{} doubles",
            body.len(),
            n,
            p
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(DMatrix::from_vec(n, p, data))
}

pub fn encode_eigs(m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let (n, p) = m.shape();
    let (n16, p16) = match (u16::try_from(n), u16::try_from(p)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{n}x{p} matrix does not fit the EIGS header"
            )))
        }
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * p);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&n16.to_le_bytes());
    out.extend_from_slice(&p16.to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Reads a CSV or EIGS matrix, chosen by the leading bytes.
pub fn read_matrix(path: &Path, has_header: bool) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        decode_eigs(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{} is neither EIGS nor UTF-8 CSV", path.display())))?;
        parse_csv(&text, has_header)
    }
}

pub fn read_data(path: &Path, has_header: bool) -> Result<DataMatrix> {
    DataMatrix::new(read_matrix(path, has_header)?)
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Writes a matrix in the format implied by the extension: `.bin`/`.eigs`
/// for EIGS, anything else as CSV.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let binary = matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("bin" | "eigs")
    );
    if binary {
        write_atomic(path, &encode_eigs(m)?)
    } else {
        write_atomic(path, matrix_to_csv(m).as_bytes())
    }
}
