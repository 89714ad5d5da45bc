//! Sample file formats.
//!
//! * CSV: one sample per line, comma-separated decimal numbers, no header.
//!   Blank lines and lines starting with `#` are skipped. Written with 17
//!   significant digits so every `f64` round-trips exactly.
//! * RAW: little-endian IEEE-754 `f64`, row-major, no header. The dimension
//!   is supplied out of band.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use meantest_core::SampleBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Raw,
}

impl Format {
    /// Explicit choice wins; otherwise `.bin`, `.raw` and `.f64` mean RAW and
    /// anything else CSV.
    pub fn resolve(explicit: Option<Format>, path: &Path) -> Format {
        explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some("bin" | "raw" | "f64") => Format::Raw,
            _ => Format::Csv,
        })
    }
}

pub fn read_batch(path: &Path, format: Format, dim: Option<usize>) -> Result<SampleBatch> {
    match format {
        Format::Csv => {
            let batch = read_csv(path)?;
            if let Some(d) = dim {
                if d != batch.dim() {
                    bail!("{}: rows have {} columns but --dim is {d}", path.display(), batch.dim());
                }
            }
            Ok(batch)
        }
        Format::Raw => {
            let dim = dim.context("--dim is required for raw input")?;
            read_raw(path, dim)
        }
    }
}

pub fn read_csv(path: &Path) -> Result<SampleBatch> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);

    let mut data = Vec::new();
    let mut dim = None;
    let mut row = 0usize;
    for record in reader.records() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            bail!(
                "{}: line {line} (row {}): expected {expected} fields, found {}",
                path.display(),
                row + 1,
                record.len()
            );
        }
        for (col, token) in record.iter().enumerate() {
            let value: f64 = token.parse().map_err(|_| {
                anyhow::anyhow!(
                    "{}: line {line} (row {}), column {}: cannot parse {token:?} as a number",
                    path.display(),
                    row + 1,
                    col + 1
                )
            })?;
            if !value.is_finite() {
                bail!(
                    "{}: line {line} (row {}), column {}: non-finite value {token:?}",
                    path.display(),
                    row + 1,
                    col + 1
                );
            }
            data.push(value);
        }
        row += 1;
    }
    let Some(dim) = dim else {
        bail!("{}: no data rows", path.display());
    };
    SampleBatch::new(dim, data).with_context(|| format!("{}: invalid batch", path.display()))
}

pub fn read_raw(path: &Path, dim: usize) -> Result<SampleBatch> {
    if dim == 0 {
        bail!("--dim must be >= 1");
    }
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .with_context(|| format!("cannot read {}", path.display()))?;
    let row_bytes = 8 * dim;
    if bytes.len() % row_bytes != 0 {
        bail!(
            "{}: length {} bytes is not a multiple of 8*dim = {row_bytes}; partial row starts at byte offset {}",
            path.display(),
            bytes.len(),
            bytes.len() / row_bytes * row_bytes
        );
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        bail!(
            "{}: non-finite value at row {}, column {} (byte offset {})",
            path.display(),
            pos / dim + 1,
            pos % dim + 1,
            pos * 8
        );
    }
    Ok(SampleBatch::new(dim, data)?)
}

pub fn write_batch(path: &Path, format: Format, batch: &SampleBatch) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => {
            for row in batch.rows() {
                let mut first = true;
                for v in row {
                    if !first {
                        out.write_all(b",")?;
                    }
                    first = false;
                    write!(out, "{v:.16e}")?;
                }
                out.write_all(b"\n")?;
            }
        }
        Format::Raw => {
            for v in batch.as_slice() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let values = vec![0.1, -1e-300, 1.0 / 3.0, 123456789.123456789, f64::MAX, -0.0];
        let batch = SampleBatch::new(3, values).unwrap();
        write_batch(&path, Format::Csv, &batch).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.as_slice(), batch.as_slice());
    }

    #[test]
    fn raw_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let batch = SampleBatch::new(2, vec![1.5, -2.25, 3.0e10, 4.0]).unwrap();
        write_batch(&path, Format::Raw, &batch).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = read_raw(&path, 2).unwrap();
        assert_eq!(back, batch);
        let again = dir.path().join("y.bin");
        write_batch(&again, Format::Raw, &back).unwrap();
        assert_eq!(std::fs::read(&again).unwrap(), bytes);
    }

    #[test]
    fn csv_errors_name_the_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1,2\n3,abc\n").unwrap();
        let msg = format!("{:#}", read_csv(&path).unwrap_err());
        assert!(msg.contains("row 2") && msg.contains("column 2") && msg.contains("abc"), "{msg}");

        std::fs::write(&path, "1,2\n3\n").unwrap();
        let msg = format!("{:#}", read_csv(&path).unwrap_err());
        assert!(msg.contains("expected 2 fields"), "{msg}");

        std::fs::write(&path, "1,2\n3,4\nNaN,1\n").unwrap();
        let msg = format!("{:#}", read_csv(&path).unwrap_err());
        assert!(msg.contains("row 3") && msg.contains("non-finite"), "{msg}");

        std::fs::write(&path, "# only a comment\n").unwrap();
        assert!(read_csv(&path).is_err());
    }

    #[test]
    fn csv_skips_comments_and_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ok.csv");
        std::fs::write(&path, "# header comment\n1, 2\n\n3,4\n").unwrap();
        assert_eq!(read_csv(&path).unwrap().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn raw_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, [0u8; 20]).unwrap();
        let msg = format!("{:#}", read_raw(&path, 2).unwrap_err());
        assert!(msg.contains("offset 16"), "{msg}");

        let mut bytes = Vec::new();
        for v in [1.0f64, 2.0, 3.0, f64::INFINITY] {
            bytes.extend(v.to_le_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        let msg = format!("{:#}", read_raw(&path, 2).unwrap_err());
        assert!(msg.contains("row 2, column 2"), "{msg}");
        assert!(read_batch(&path, Format::Raw, None).is_err());
    }

    #[test]
    fn format_resolution() {
        assert_eq!(Format::resolve(None, Path::new("a.bin")), Format::Raw);
        assert_eq!(Format::resolve(None, Path::new("a.csv")), Format::Csv);
        assert_eq!(Format::resolve(None, Path::new("a")), Format::Csv);
        assert_eq!(Format::resolve(Some(Format::Raw), Path::new("a.csv")), Format::Raw);
    }
}
