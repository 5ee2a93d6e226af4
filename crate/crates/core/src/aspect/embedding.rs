//! Embedding matrix file format: one JSON header line
//! `{"rows":M,"dim":d,"dtype":"f32le"}` followed by M·d little-endian f32
//! values, row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AspectError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    rows: usize,
    dim: usize,
    dtype: String,
}

/// Dense row-major M×d matrix of sentence embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, AspectError> {
        let m = rows.len();
        if m == 0 {
            return Err(AspectError::EmptyInput);
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(AspectError::EmptyInput);
        }
        let mut data = Vec::with_capacity(m * dim);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(AspectError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                    row: i,
                });
            }
            data.extend(r);
        }
        Self::from_flat(m, dim, data)
    }

    pub fn from_flat(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self, AspectError> {
        if rows == 0 || dim == 0 {
            return Err(AspectError::EmptyInput);
        }
        if data.len() != rows * dim {
            return Err(AspectError::DimensionMismatch {
                expected: rows * dim,
                found: data.len(),
                row: 0,
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(AspectError::NonFinite { row: pos / dim });
        }
        Ok(Self {
            rows,
            dim,
            data,
            normalized: false,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Scales every row to unit ℓ2 norm.
    pub fn normalize(mut self) -> Result<Self, AspectError> {
        for (i, row) in self.data.chunks_exact_mut(self.dim).enumerate() {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(AspectError::ZeroRow { row: i });
            }
            row.iter_mut().for_each(|x| *x /= norm);
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn read_from<R: BufRead>(mut reader: R) -> Result<Self, AspectError> {
        let mut header_line = String::new();
        reader
            .read_line(&mut header_line)
            .map_err(|e| AspectError::Format(format!("reading header: {e}")))?;
        let header: Header = serde_json::from_str(header_line.trim_end())
            .map_err(|e| AspectError::Format(format!("bad header: {e}")))?;
        if header.dtype != "f32le" {
            return Err(AspectError::Format(format!(
                "unsupported dtype {:?}, expected \"f32le\"",
                header.dtype
            )));
        }
        let n = header.rows * header.dim;
        let mut bytes = vec![0u8; n * 4];
        reader.read_exact(&mut bytes).map_err(|e| {
            AspectError::Format(format!(
                "payload shorter than {} rows × {} dims: {e}",
                header.rows, header.dim
            ))
        })?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        Self::from_flat(header.rows, header.dim, data)
    }

    pub fn write_to<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        let header = Header {
            rows: self.rows,
            dim: self.dim,
            dtype: "f32le".into(),
        };
        serde_json::to_writer(&mut *writer, &header)?;
        writer.write_all(b"\n")?;
        for &x in &self.data {
            writer.write_all(&(x as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AspectError> {
        let file = File::open(path)
            .map_err(|e| AspectError::Format(format!("{}: {e}", path.display())))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn save(&self, path: &Path) -> Result<(), AspectError> {
        let mut file = std::io::BufWriter::new(
            File::create(path).map_err(|e| AspectError::Format(format!("{}: {e}", path.display())))?,
        );
        self.write_to(&mut file)
            .and_then(|_| file.flush())
            .map_err(|e| AspectError::Format(format!("{}: {e}", path.display())))
    }
}
