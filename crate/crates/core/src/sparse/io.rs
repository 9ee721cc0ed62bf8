//! Matrix Market text files and the little-endian binary dump.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! magic   b"AMGF"
//! version u32      (= 1)
//! nrows   u64
//! ncols   u64
//! nnz     u64
//! offsets u64 x (nrows + 1)
//! indices u32 x nnz
//! values  f64 x nnz
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::csr::{Idx, SparseMatrix};
use super::multivector::MultiVector;
use crate::error::{AmgError, Result};
use crate::scalar::Scalar;

pub const BINARY_MAGIC: &[u8; 4] = b"AMGF";
pub const BINARY_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> AmgError {
    AmgError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a coordinate Matrix Market file; symmetric storage is expanded.
pub fn read_matrix_market<T: Scalar, R: Read>(reader: R) -> Result<SparseMatrix<T>> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format '{}'", tokens[2])));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut next_num = |what: &str| -> Result<&str> {
            it.next()
                .ok_or_else(|| parse_err(lineno, format!("missing {what}")))
        };
        match size {
            None => {
                let r: usize = next_num("rows")?
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad row count"))?;
                let c: usize = next_num("cols")?
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad column count"))?;
                let z: usize = next_num("nnz")?
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad entry count"))?;
                if symmetry == Symmetry::Symmetric && r != c {
                    return Err(parse_err(lineno, "symmetric matrix must be square"));
                }
                triplets.reserve(if symmetry == Symmetry::Symmetric { 2 * z } else { z });
                size = Some((r, c, z));
            }
            Some((nr, nc, _)) => {
                let i: usize = next_num("row index")?
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad row index"))?;
                let j: usize = next_num("column index")?
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad column index"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err(lineno, format!("index ({i},{j}) out of range")));
                }
                let v = if pattern {
                    1.0
                } else {
                    next_num("value")?
                        .parse::<f64>()
                        .map_err(|_| parse_err(lineno, "bad value"))?
                };
                let v = T::of(v);
                triplets.push((i - 1, j - 1, v));
                if symmetry == Symmetry::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    let stored = if symmetry == Symmetry::Symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nz {
        return Err(parse_err(
            0,
            format!("header declares {nz} entries, found {stored}"),
        ));
    }
    SparseMatrix::from_triplets(nr, nc, &triplets)
}

pub fn read_matrix_market_file<T: Scalar>(path: impl AsRef<Path>) -> Result<SparseMatrix<T>> {
    read_matrix_market(std::fs::File::open(path)?)
}

/// Writes coordinate format; `symmetric` stores the lower triangle only.
pub fn write_matrix_market<T: Scalar, W: Write>(
    a: &SparseMatrix<T>,
    symmetric: bool,
    mut w: W,
) -> Result<()> {
    if symmetric && !a.is_square() {
        return Err(AmgError::InvalidParameter(
            "symmetric output requires a square matrix".into(),
        ));
    }
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let entries: Vec<(usize, usize, T)> = (0..a.nrows())
        .flat_map(|i| a.row_iter(i).map(move |(j, v)| (i, j, v)))
        .filter(|&(i, j, _)| !symmetric || j <= i)
        .collect();
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v.as_f64())?;
    }
    Ok(())
}

pub fn write_matrix_market_file<T: Scalar>(
    a: &SparseMatrix<T>,
    symmetric: bool,
    path: impl AsRef<Path>,
) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_matrix_market(a, symmetric, f)
}

/// Reads a dense Matrix Market `array` file (column-major values).
pub fn read_matrix_market_array<T: Scalar, R: Read>(reader: R) -> Result<MultiVector<T>> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?.to_lowercase();
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 4 || tokens[0] != "%%matrixmarket" || tokens[2] != "array" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix array' header"));
    }
    let mut dims: Option<(usize, usize)> = None;
    let mut data = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if dims.is_none() {
            let mut it = t.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next()) {
                (Some(Ok(r)), Some(Ok(c))) => dims = Some((r, c)),
                _ => return Err(parse_err(lineno, "bad array size line")),
            }
            continue;
        }
        for tok in t.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value '{tok}'")))?;
            data.push(T::of(v));
        }
    }
    let (r, c) = dims.ok_or_else(|| parse_err(1, "missing size line"))?;
    if data.len() != r * c {
        return Err(parse_err(0, format!("expected {} values, found {}", r * c, data.len())));
    }
    let mut mv = MultiVector::zeros(r, c);
    for j in 0..c {
        for i in 0..r {
            mv.set(i, j, data[j * r + i]);
        }
    }
    Ok(mv)
}

pub fn write_matrix_market_array<T: Scalar, W: Write>(v: &MultiVector<T>, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", v.nrows(), v.ncols())?;
    for j in 0..v.ncols() {
        for i in 0..v.nrows() {
            writeln!(w, "{:.17e}", v.get(i, j).as_f64())?;
        }
    }
    Ok(())
}

pub fn write_binary<T: Scalar, W: Write>(a: &SparseMatrix<T>, mut w: W) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    for d in [a.nrows(), a.ncols(), a.nnz()] {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &o in a.row_offsets() {
        w.write_all(&(o as u64).to_le_bytes())?;
    }
    for &c in a.col_indices() {
        w.write_all(&c.to_le_bytes())?;
    }
    for &v in a.values() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<T: Scalar, R: Read>(r: R) -> Result<SparseMatrix<T>> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(AmgError::InvalidStructure("bad magic, not an AMGF dump".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != BINARY_VERSION {
        return Err(AmgError::InvalidStructure(format!(
            "unsupported dump version {version}"
        )));
    }
    let mut read_u64 = |r: &mut BufReader<R>| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let nrows = read_u64(&mut r)? as usize;
    let ncols = read_u64(&mut r)? as usize;
    let nnz = read_u64(&mut r)? as usize;
    let mut offsets = Vec::with_capacity(nrows + 1);
    for _ in 0..=nrows {
        offsets.push(read_u64(&mut r)? as usize);
    }
    let mut cols = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        r.read_exact(&mut b4)?;
        cols.push(Idx::from_le_bytes(b4));
    }
    let mut vals = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        r.read_exact(&mut b8)?;
        vals.push(T::of(f64::from_le_bytes(b8)));
    }
    SparseMatrix::try_new(nrows, ncols, offsets, cols, vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_file_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2\n2 1 -1\n2 2 2\n3 3 1.5\n";
        let a: SparseMatrix<f64> = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(2, 2), 1.5);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 3.0\n";
        let e = read_matrix_market::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(e, AmgError::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn text_roundtrip_general_and_symmetric() {
        let a = SparseMatrix::from_dense(3, 3, &[4.0, -1.0, 0.0, -1.0, 4.0, 0.25, 0.0, 0.25, 3.0])
            .unwrap();
        for sym in [false, true] {
            let mut buf = Vec::new();
            write_matrix_market(&a, sym, &mut buf).unwrap();
            let b: SparseMatrix<f64> = read_matrix_market(buf.as_slice()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn binary_roundtrip_and_header() {
        let a = SparseMatrix::from_dense(2, 3, &[1.5, 0.0, -2.0, 0.0, 3.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_binary(&a, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"AMGF");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 3);
        assert_eq!(buf.len(), 4 + 4 + 24 + 3 * 8 + 3 * 4 + 3 * 8);
        let b: SparseMatrix<f64> = read_binary(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn array_roundtrip() {
        let v = MultiVector::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market_array(&v, &mut buf).unwrap();
        let w: MultiVector<f64> = read_matrix_market_array(buf.as_slice()).unwrap();
        assert_eq!(v, w);
    }
}
