use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{is_csv, ByteCursor, DataError, FORMAT_VERSION};

pub const SNPE_MAGIC: &[u8; 4] = b"SNPE";
pub const SNPE_HEADER_LEN: usize = 32;
const DTYPE_F32: u8 = 0;

/// Dense row-major `f32` feature matrix produced by one transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    transformation_id: String,
    n_rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(
        transformation_id: impl Into<String>,
        n_rows: usize,
        dim: usize,
        values: Vec<f32>,
    ) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::Malformed("feature dimension must be >= 1".into()));
        }
        let expected = n_rows
            .checked_mul(dim)
            .ok_or_else(|| DataError::Malformed("n_rows * dim overflows".into()))?;
        if values.len() != expected {
            return Err(DataError::Malformed(format!(
                "expected {expected} values for {n_rows}x{dim}, got {}",
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteValue(idx));
        }
        Ok(EmbeddingMatrix {
            transformation_id: transformation_id.into(),
            n_rows,
            dim,
            values,
        })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows(transformation_id: impl Into<String>, rows: &[Vec<f32>]) -> Result<Self, DataError> {
        let dim = rows.first().map(Vec::len).unwrap_or(1);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(DataError::Malformed(format!(
                    "row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(transformation_id, rows.len(), dim, values)
    }

    pub fn transformation_id(&self) -> &str {
        &self.transformation_id
    }

    pub fn with_transformation_id(mut self, id: impl Into<String>) -> Self {
        self.transformation_id = id.into();
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Returns a new matrix containing the given rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, DataError> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n_rows {
                return Err(DataError::IndexOutOfRange {
                    index: i,
                    len: self.n_rows,
                });
            }
            values.extend_from_slice(self.row(i));
        }
        Ok(EmbeddingMatrix {
            transformation_id: self.transformation_id.clone(),
            n_rows: indices.len(),
            dim: self.dim,
            values,
        })
    }

    /// Decodes an SNPE buffer.
    pub fn from_snpe_bytes(bytes: &[u8], transformation_id: impl Into<String>) -> Result<Self, DataError> {
        let (n_rows, dim) = parse_header(bytes)?;
        let payload = &bytes[SNPE_HEADER_LEN..];
        let expected_payload = payload_len(n_rows, dim)?;
        let expected_total = expected_payload + SNPE_HEADER_LEN as u64;
        if (payload.len() as u64) < expected_payload {
            return Err(DataError::TruncatedFile {
                expected: expected_total,
                found: bytes.len() as u64,
            });
        }
        if payload.len() as u64 > expected_payload {
            return Err(DataError::TrailingBytes(payload.len() as u64 - expected_payload));
        }
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(transformation_id, n_rows as usize, dim as usize, values)
    }

    pub fn read_snpe<R: Read>(mut reader: R, transformation_id: impl Into<String>) -> Result<Self, DataError> {
        let mut bytes = Vec::new();
        reader
            .read_to_end(&mut bytes)
            .map_err(|e| DataError::io("<reader>", e))?;
        Self::from_snpe_bytes(&bytes, transformation_id)
    }

    pub fn to_snpe_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SNPE_HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(SNPE_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.push(DTYPE_F32);
        out.extend_from_slice(&[0u8; 7]);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn write_snpe<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writer.write_all(&self.to_snpe_bytes())?;
        writer.flush()
    }

    /// Parses header-less CSV, one row per line.
    pub fn from_csv_str(text: &str, transformation_id: impl Into<String>) -> Result<Self, DataError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows: Vec<Vec<f32>> = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| DataError::Malformed(format!("csv: {e}")))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let row = record
                .iter()
                .map(|field| {
                    field
                        .parse::<f32>()
                        .map_err(|_| DataError::Malformed(format!("csv line {}: cannot parse {field:?}", line + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(DataError::Malformed("csv matrix has no rows".into()));
        }
        Self::from_rows(transformation_id, &rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn parse_header(bytes: &[u8]) -> Result<(u64, u64), DataError> {
    let mut cur = ByteCursor::new(bytes);
    let hdr = SNPE_HEADER_LEN as u64;
    if bytes.len() >= 4 && &bytes[..4] != SNPE_MAGIC {
        return Err(DataError::BadMagic { expected: "SNPE" });
    }
    let _magic = cur.take(4, hdr)?;
    let version = cur.u32(hdr)?;
    if version != FORMAT_VERSION {
        return Err(DataError::VersionUnsupported(version));
    }
    let n_rows = cur.u64(hdr)?;
    let dim = cur.u64(hdr)?;
    let dtype = cur.u8(hdr)?;
    if dtype != DTYPE_F32 {
        return Err(DataError::UnsupportedDtype(dtype));
    }
    let reserved = cur.take(7, hdr)?;
    if reserved.iter().any(|&b| b != 0) {
        return Err(DataError::Malformed("reserved header bytes must be zero".into()));
    }
    if dim == 0 {
        return Err(DataError::Malformed("feature dimension must be >= 1".into()));
    }
    Ok((n_rows, dim))
}

fn payload_len(n_rows: u64, dim: u64) -> Result<u64, DataError> {
    n_rows
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(4))
        .filter(|&v| usize::try_from(v).is_ok())
        .ok_or_else(|| DataError::Malformed("n_rows * dim overflows".into()))
}

/// Reads an embedding file, dispatching on the `.csv` extension. The
/// transformation id defaults to the file stem.
pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, DataError> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if is_csv(path) {
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        return EmbeddingMatrix::from_csv_str(&text, id);
    }
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    EmbeddingMatrix::from_snpe_bytes(&bytes, id)
}

pub fn write_embedding_file(path: impl AsRef<Path>, matrix: &EmbeddingMatrix) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    if is_csv(path) {
        writer
            .write_all(matrix.to_csv_string().as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| DataError::io(path, e))
    } else {
        matrix.write_snpe(writer).map_err(|e| DataError::io(path, e))
    }
}

/// Returns `(n_rows, dim)` without decoding the payload of an SNPE file.
/// The file length is checked against the header.
pub fn probe_embedding_shape(path: impl AsRef<Path>) -> Result<(usize, usize), DataError> {
    let path = path.as_ref();
    if is_csv(path) {
        let m = read_embedding_file(path)?;
        return Ok((m.n_rows(), m.dim()));
    }
    let mut file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut header = Vec::with_capacity(SNPE_HEADER_LEN);
    (&mut file)
        .take(SNPE_HEADER_LEN as u64)
        .read_to_end(&mut header)
        .map_err(|e| DataError::io(path, e))?;
    let (n_rows, dim) = parse_header(&header)?;
    let expected = payload_len(n_rows, dim)? + SNPE_HEADER_LEN as u64;
    let found = file.metadata().map_err(|e| DataError::io(path, e))?.len();
    if found < expected {
        return Err(DataError::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(DataError::TrailingBytes(found - expected));
    }
    Ok((n_rows as usize, dim as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(n: u64, d: u64) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"SNPE");
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&n.to_le_bytes());
        b.extend_from_slice(&d.to_le_bytes());
        b.push(0);
        b.extend_from_slice(&[0; 7]);
        b
    }

    #[test]
    fn smallest_well_formed_file() {
        let mut bytes = header(2, 3);
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let m = EmbeddingMatrix::from_snpe_bytes(&bytes, "t").unwrap();
        assert_eq!((m.n_rows(), m.dim()), (2, 3));
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn five_floats_for_two_by_three_is_truncated() {
        let mut bytes = header(2, 3);
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(
            EmbeddingMatrix::from_snpe_bytes(&bytes, "t"),
            Err(DataError::TruncatedFile {
                expected: 56,
                found: 52
            })
        ));
    }

    #[test]
    fn header_errors() {
        let mut bad = header(1, 1);
        bad[0] = b'X';
        bad.extend_from_slice(&0f32.to_le_bytes());
        assert!(matches!(
            EmbeddingMatrix::from_snpe_bytes(&bad, "t"),
            Err(DataError::BadMagic { .. })
        ));

        let mut v2 = header(1, 1);
        v2[4] = 2;
        assert!(matches!(
            EmbeddingMatrix::from_snpe_bytes(&v2, "t"),
            Err(DataError::VersionUnsupported(2))
        ));

        assert!(matches!(
            EmbeddingMatrix::from_snpe_bytes(&header(1, 1)[..10], "t"),
            Err(DataError::TruncatedFile { .. })
        ));

        let huge = header(u64::MAX, 2);
        assert!(matches!(
            EmbeddingMatrix::from_snpe_bytes(&huge, "t"),
            Err(DataError::Malformed(_))
        ));
    }

    #[test]
    fn non_finite_value_reports_index() {
        let mut bytes = header(1, 3);
        for v in [0.0f32, f32::NAN, 1.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(
            EmbeddingMatrix::from_snpe_bytes(&bytes, "t"),
            Err(DataError::NonFiniteValue(1))
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = header(1, 1);
        bytes.extend_from_slice(&[0; 5]);
        assert!(matches!(
            EmbeddingMatrix::from_snpe_bytes(&bytes, "t"),
            Err(DataError::TrailingBytes(1))
        ));
    }

    #[test]
    fn csv_rows() {
        let m = EmbeddingMatrix::from_csv_str("0.0, 1.5\n2,3\n\n", "c").unwrap();
        assert_eq!((m.n_rows(), m.dim()), (2, 2));
        assert_eq!(m.row(0), &[0.0, 1.5]);
        assert!(EmbeddingMatrix::from_csv_str("1,2\n3\n", "c").is_err());
        assert!(EmbeddingMatrix::from_csv_str("1,nan\n", "c").is_err());
    }

    #[test]
    fn select_rows_reorders() {
        let m = EmbeddingMatrix::from_rows("r", &[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let s = m.select_rows(&[2, 0]).unwrap();
        assert_eq!(s.values(), &[2.0, 0.0]);
        assert!(m.select_rows(&[3]).is_err());
    }
}
