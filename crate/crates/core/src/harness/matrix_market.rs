//! Matrix Market (real, general/symmetric/skew-symmetric; coordinate or
//! array) reading and writing, with a dense delimited-text fallback.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{MorError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

struct Cursor<'a> {
    source: &'a str,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Cursor<'a> {
    fn new(source: &'a str, text: &'a str) -> Self {
        Cursor {
            source,
            lines: text.lines().enumerate().peekable(),
        }
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> MorError {
        MorError::Parse {
            path: self.source.to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    /// Next non-blank, non-comment line as (1-based line number, text).
    fn next_data(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('%') {
                return Some((i + 1, line));
            }
        }
        None
    }
}

/// Splits a line into (1-based column, token) pairs on whitespace or commas.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        let sep = ch.is_whitespace() || ch == ',' || ch == ';';
        match (sep, start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_f64(cur: &Cursor<'_>, line: usize, (col, tok): (usize, &str)) -> Result<f64> {
    // Fortran-style exponents ("1.0D+03") appear in older benchmark files.
    let value: f64 = tok
        .replace(['D', 'd'], "e")
        .parse()
        .map_err(|_| cur.error(line, col, format!("expected a real number, found '{tok}'")))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(cur.error(line, col, format!("non-finite value '{tok}'")))
    }
}

fn parse_usize(cur: &Cursor<'_>, line: usize, (col, tok): (usize, &str)) -> Result<usize> {
    tok.parse()
        .map_err(|_| cur.error(line, col, format!("expected a non-negative integer, found '{tok}'")))
}

/// Parses Matrix Market text; `source` names the input in error messages.
pub fn parse_matrix_market(source: &str, text: &str) -> Result<DMatrix<f64>> {
    let mut cur = Cursor::new(source, text);
    let Some((_, banner)) = cur.lines.next() else {
        return Err(cur.error(1, 1, "empty file"));
    };
    let words: Vec<String> = banner.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() < 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(cur.error(1, 1, "missing '%%MatrixMarket matrix' banner"));
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(cur.error(1, 1, format!("unsupported layout '{other}'"))),
    };
    match words[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(cur.error(1, 1, format!("unsupported field '{other}' (real only)"))),
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(cur.error(1, 1, format!("unsupported symmetry '{other}'"))),
    };

    let Some((size_line, size_text)) = cur.next_data() else {
        return Err(cur.error(2, 1, "missing size line"));
    };
    let size = tokens(size_text);
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if size.len() != want {
        return Err(cur.error(
            size_line,
            1,
            format!("size line needs {want} integers, found {}", size.len()),
        ));
    }
    let rows = parse_usize(&cur, size_line, size[0])?;
    let cols = parse_usize(&cur, size_line, size[1])?;
    if symmetry != Symmetry::General && rows != cols {
        return Err(cur.error(size_line, 1, "symmetric storage requires a square matrix"));
    }
    let mut m = DMatrix::<f64>::zeros(rows, cols);

    match layout {
        Layout::Coordinate => {
            let nnz = parse_usize(&cur, size_line, size[2])?;
            for _ in 0..nnz {
                let Some((ln, text)) = cur.next_data() else {
                    return Err(cur.error(size_line, 1, format!("expected {nnz} entries, file ended early")));
                };
                let t = tokens(text);
                if t.len() != 3 {
                    return Err(cur.error(ln, 1, format!("expected 'row col value', found {} fields", t.len())));
                }
                let i = parse_usize(&cur, ln, t[0])?;
                let j = parse_usize(&cur, ln, t[1])?;
                if i == 0 || i > rows {
                    return Err(cur.error(ln, t[0].0, format!("row index {i} outside 1..={rows}")));
                }
                if j == 0 || j > cols {
                    return Err(cur.error(ln, t[1].0, format!("column index {j} outside 1..={cols}")));
                }
                let v = parse_f64(&cur, ln, t[2])?;
                m[(i - 1, j - 1)] += v;
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => m[(j - 1, i - 1)] += v,
                        Symmetry::SkewSymmetric => m[(j - 1, i - 1)] -= v,
                    }
                }
            }
        }
        Layout::Array => {
            // Column-major; symmetric variants store the lower triangle only.
            let mut positions = Vec::new();
            for j in 0..cols {
                let first = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                positions.extend((first..rows).map(|i| (i, j)));
            }
            let mut pending: Vec<(usize, (usize, String))> = Vec::new();
            let mut k = 0;
            while k < positions.len() {
                if pending.is_empty() {
                    let Some((ln, text)) = cur.next_data() else {
                        return Err(cur.error(
                            size_line,
                            1,
                            format!("expected {} values, file ended after {k}", positions.len()),
                        ));
                    };
                    pending = tokens(text)
                        .into_iter()
                        .rev()
                        .map(|(c, t)| (ln, (c, t.to_string())))
                        .collect();
                    continue;
                }
                let (ln, (col, tok)) = pending.pop().expect("non-empty");
                let v = parse_f64(&cur, ln, (col, &tok))?;
                let (i, j) = positions[k];
                m[(i, j)] = v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => m[(j, i)] = v,
                    Symmetry::SkewSymmetric => m[(j, i)] = -v,
                }
                k += 1;
            }
            if let Some((ln, (col, _))) = pending.pop() {
                return Err(cur.error(ln, col, "more values than the declared size"));
            }
        }
    }
    if let Some((ln, _)) = cur.next_data() {
        return Err(cur.error(ln, 1, "unexpected data after the last entry"));
    }
    Ok(m)
}

/// Dense rows of numbers separated by whitespace, commas or semicolons;
/// `%` and `#` start comment lines.
pub fn parse_dense_text(source: &str, text: &str) -> Result<DMatrix<f64>> {
    let cur = Cursor::new(source, text);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let fields = tokens(line);
        let row = fields
            .iter()
            .map(|&f| parse_f64(&cur, i + 1, f))
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(cur.error(
                    i + 1,
                    1,
                    format!("row has {} values but earlier rows have {w}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    let Some(w) = width else {
        return Err(cur.error(1, 1, "no numeric rows"));
    };
    Ok(DMatrix::from_fn(rows.len(), w, |i, j| rows[i][j]))
}

/// Reads a matrix file: Matrix Market when the first line carries the
/// banner, dense delimited text otherwise.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| MorError::io(&name, e))?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(&name, &text)
    } else {
        parse_dense_text(&name, &text)
    }
}

/// Matrix Market coordinate text listing the nonzero entries.
pub fn to_matrix_market(m: &DMatrix<f64>) -> String {
    let nonzeros: Vec<(usize, usize, f64)> = (0..m.ncols())
        .flat_map(|j| (0..m.nrows()).map(move |i| (i, j)))
        .filter_map(|(i, j)| (m[(i, j)] != 0.0).then(|| (i, j, m[(i, j)])))
        .collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nonzeros.len());
    for (i, j, v) in nonzeros {
        // `{:e}` prints the shortest representation that round-trips.
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

pub fn write_matrix_market(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, to_matrix_market(m)).map_err(|e| MorError::io(path.display().to_string(), e))
}
