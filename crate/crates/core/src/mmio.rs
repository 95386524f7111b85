//! Matrix Market input for symmetric matrices, plus a plain reader for
//! gradient vectors.
//!
//! Supported headers: `matrix coordinate real|integer symmetric|general` and
//! `matrix array real|integer symmetric|general`. General inputs must be
//! numerically symmetric.

use std::io::BufRead;

use thiserror::Error;

use crate::linalg::{
    DenseMatrix, DenseOperator, LinalgError, SparseSymmetric, Storage, SymmetricLinearOperator,
};

#[derive(Debug, Error)]
pub enum MatrixMarketError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(LinalgError),
}

fn parse_err(line: usize, message: impl Into<String>) -> MatrixMarketError {
    MatrixMarketError::Parse {
        line,
        message: message.into(),
    }
}

/// A symmetric matrix read from disk.
#[derive(Debug, Clone)]
pub enum SymmetricMatrix {
    Sparse(SparseSymmetric),
    Dense(DenseOperator),
}

impl SymmetricLinearOperator for SymmetricMatrix {
    fn dim(&self) -> usize {
        match self {
            SymmetricMatrix::Sparse(a) => a.dim(),
            SymmetricMatrix::Dense(a) => a.dim(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            SymmetricMatrix::Sparse(a) => a.apply(x, y),
            SymmetricMatrix::Dense(a) => a.apply(x, y),
        }
    }

    fn storage(&self) -> Storage<'_> {
        match self {
            SymmetricMatrix::Sparse(a) => a.storage(),
            SymmetricMatrix::Dense(a) => a.storage(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String), MatrixMarketError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)).map_err(MatrixMarketError::from))
        .filter(|r| match r {
            Ok((_, s)) => {
                let t = s.trim();
                !t.is_empty() && !t.starts_with('%')
            }
            Err(_) => true,
        })
}

fn parse_num<T: std::str::FromStr>(
    tok: &str,
    line: usize,
    what: &str,
) -> Result<T, MatrixMarketError> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {tok:?}")))
}

fn parse_real(tok: &str, line: usize) -> Result<f64, MatrixMarketError> {
    let v: f64 = parse_num(tok, line, "a real value")?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

pub fn read_matrix_market<R: BufRead>(mut reader: R) -> Result<SymmetricMatrix, MatrixMarketError> {
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let words: Vec<String> = header
        .split_whitespace()
        .map(|w| w.to_ascii_lowercase())
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(
            1,
            "expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    let format = match words[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(parse_err(1, format!("unsupported format {other:?}"))),
    };
    if words[3] != "real" && words[3] != "integer" {
        return Err(parse_err(
            1,
            format!("unsupported field {:?}; only real and integer", words[3]),
        ));
    }
    let symmetric = match words[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry {other:?}"))),
    };

    // Line numbers below are offset by the header line already consumed.
    let mut lines = content_lines(reader).map(|r| r.map(|(l, s)| (l + 1, s)));
    let (size_line, size) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))??;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| parse_num(t, size_line, "a size"))
        .collect::<Result<_, _>>()?;
    let expected_dims = if format == Format::Coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(parse_err(
            size_line,
            format!("expected {expected_dims} sizes, found {}", dims.len()),
        ));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows != cols || rows == 0 {
        return Err(parse_err(
            size_line,
            format!("matrix must be square and nonempty, got {rows}x{cols}"),
        ));
    }
    let n = rows;

    match format {
        Format::Coordinate => {
            let nnz = dims[2];
            let mut triplets = Vec::with_capacity(nnz);
            for entry in lines.by_ref() {
                let (ln, s) = entry?;
                let toks: Vec<&str> = s.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(
                        ln,
                        format!("expected 'row col value', found {} fields", toks.len()),
                    ));
                }
                let i: usize = parse_num(toks[0], ln, "a row index")?;
                let j: usize = parse_num(toks[1], ln, "a column index")?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(ln, format!("index ({i}, {j}) outside 1..={n}")));
                }
                if symmetric && j > i {
                    return Err(parse_err(
                        ln,
                        format!("symmetric storage expects the lower triangle, got ({i}, {j})"),
                    ));
                }
                triplets.push((i - 1, j - 1, parse_real(toks[2], ln)?));
                if triplets.len() > nnz {
                    return Err(parse_err(
                        ln,
                        format!("more entries than the declared {nnz}"),
                    ));
                }
            }
            if triplets.len() != nnz {
                return Err(parse_err(
                    size_line,
                    format!("declared {nnz} entries, found {}", triplets.len()),
                ));
            }
            let a =
                SparseSymmetric::from_triplets(n, &triplets, symmetric).map_err(|e| match e {
                    LinalgError::NotSymmetric { .. } => MatrixMarketError::NotSymmetric(e),
                    other => parse_err(size_line, other.to_string()),
                })?;
            Ok(SymmetricMatrix::Sparse(a))
        }
        Format::Array => {
            let mut values = Vec::new();
            let mut last_line = size_line;
            for entry in lines.by_ref() {
                let (ln, s) = entry?;
                last_line = ln;
                for tok in s.split_whitespace() {
                    values.push(parse_real(tok, ln)?);
                }
            }
            let expected = if symmetric { n * (n + 1) / 2 } else { n * n };
            if values.len() != expected {
                return Err(parse_err(
                    last_line,
                    format!("expected {expected} array values, found {}", values.len()),
                ));
            }
            let mut m = DenseMatrix::zeros(n, n);
            let mut it = values.into_iter();
            // Column-major; the symmetric variant stores the lower triangle.
            for j in 0..n {
                let start = if symmetric { j } else { 0 };
                for i in start..n {
                    let v = it.next().expect("count checked above");
                    m[(i, j)] = v;
                    if symmetric {
                        m[(j, i)] = v;
                    }
                }
            }
            DenseOperator::new(m)
                .map(SymmetricMatrix::Dense)
                .map_err(MatrixMarketError::NotSymmetric)
        }
    }
}

/// Whitespace-separated reals. A leading Matrix Market `array` header and
/// its size line are accepted and skipped; `%` lines are comments.
pub fn read_vector<R: BufRead>(reader: R) -> Result<Vec<f64>, MatrixMarketError> {
    let mut values = Vec::new();
    let mut declared: Option<(usize, usize)> = None;
    let mut header_seen = false;
    for raw in reader.lines().enumerate() {
        let (i, s) = raw;
        let s = s?;
        let ln = i + 1;
        let t = s.trim();
        if ln == 1 && t.to_ascii_lowercase().starts_with("%%matrixmarket") {
            header_seen = true;
            continue;
        }
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if header_seen && declared.is_none() {
            let dims: Vec<usize> = t
                .split_whitespace()
                .map(|tok| parse_num(tok, ln, "a size"))
                .collect::<Result<_, _>>()?;
            if dims.len() != 2 || dims[1] != 1 {
                return Err(parse_err(ln, "vector file must declare an n x 1 array"));
            }
            declared = Some((ln, dims[0]));
            continue;
        }
        for tok in t.split_whitespace() {
            values.push(parse_real(tok, ln)?);
        }
    }
    if let Some((ln, n)) = declared {
        if values.len() != n {
            return Err(parse_err(
                ln,
                format!("declared {n} entries, found {}", values.len()),
            ));
        }
    }
    if values.is_empty() {
        return Err(parse_err(1, "vector file contains no values"));
    }
    Ok(values)
}

pub fn read_matrix_market_file(
    path: &std::path::Path,
) -> Result<SymmetricMatrix, MatrixMarketError> {
    let f = std::fs::File::open(path)?;
    read_matrix_market(std::io::BufReader::new(f))
}

pub fn read_vector_file(path: &std::path::Path) -> Result<Vec<f64>, MatrixMarketError> {
    let f = std::fs::File::open(path)?;
    read_vector(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<SymmetricMatrix, MatrixMarketError> {
        read_matrix_market(s.as_bytes())
    }

    #[test]
    fn coordinate_symmetric() {
        let a = read(
            "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 3\n1 1 2\n3 1 -1\n2 2 4\n",
        )
        .unwrap();
        assert_eq!(a.apply_vec(&[1.0, 1.0, 1.0]), vec![1.0, 4.0, -1.0]);
        assert!(matches!(a.storage(), Storage::Sparse(_)));
    }

    #[test]
    fn array_symmetric_lower_column_major() {
        let a = read("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n").unwrap();
        assert_eq!(a.apply_vec(&[1.0, 0.0]), vec![1.0, 2.0]);
        assert_eq!(a.apply_vec(&[0.0, 1.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn general_must_be_symmetric() {
        let r = read("%%MatrixMarket matrix array real general\n2 2\n1\n2\n5\n3\n");
        assert!(matches!(r, Err(MatrixMarketError::NotSymmetric(_))));
    }

    #[test]
    fn bad_value_reports_line() {
        let e = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 x\n")
            .unwrap_err();
        match e {
            MatrixMarketError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        let e = read("hello\n").unwrap_err();
        assert!(matches!(e, MatrixMarketError::Parse { line: 1, .. }));
    }

    #[test]
    fn entry_count_mismatch() {
        let e =
            read("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1.0\n").unwrap_err();
        assert!(matches!(e, MatrixMarketError::Parse { line: 2, .. }));
    }

    #[test]
    fn vector_plain_and_headed() {
        assert_eq!(
            read_vector("1 2\n3e0\n".as_bytes()).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let v = read_vector("%%MatrixMarket matrix array real general\n2 1\n4\n5\n".as_bytes())
            .unwrap();
        assert_eq!(v, vec![4.0, 5.0]);
        assert!(read_vector("1 nope\n".as_bytes()).is_err());
    }
}
