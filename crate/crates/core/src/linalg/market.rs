use std::io::{BufRead, Write};

use super::{LinalgError, SparseMatrix};

/// Writes `coordinate real general` MatrixMarket, 1-based.
pub fn write_matrix_market<W: Write>(m: &SparseMatrix<f64>, mut w: W) -> Result<(), LinalgError> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (r, c, v) in m.triplets() {
        writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

/// Reads `coordinate real|integer general` MatrixMarket.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseMatrix<f64>, LinalgError> {
    let bad = |s: &str| LinalgError::Format(s.to_string());
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))??;
    let h: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(bad("expected a coordinate matrix header"));
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(bad("only real or integer fields are supported"));
    }
    if h[4] != "general" {
        return Err(bad("only general symmetry is supported"));
    }
    let mut size = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if f.len() != 3 {
                    return Err(bad("size line needs three fields"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad("bad size line"));
                size = Some((p(f[0])?, p(f[1])?, p(f[2])?));
            }
            Some(_) => {
                if f.len() != 3 {
                    return Err(bad("entry line needs three fields"));
                }
                let r: usize = f[0].parse().map_err(|_| bad("bad row index"))?;
                let c: usize = f[1].parse().map_err(|_| bad("bad column index"))?;
                let v: f64 = f[2].parse().map_err(|_| bad("bad value"))?;
                if r == 0 || c == 0 {
                    return Err(bad("indices are 1-based"));
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| bad("missing size line"))?;
    if triplets.len() != nnz {
        return Err(bad("entry count does not match size line"));
    }
    SparseMatrix::from_triplets(nr, nc, triplets)
}
