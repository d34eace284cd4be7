//! alist reading and writing.
//!
//! Layout: `n m`, then the maximum column and row degrees, the column degree
//! list, the row degree list, `n` lines of 1-based row indices (one line per
//! column) and `m` lines of 1-based column indices (one line per row). Index
//! lines are zero-padded to the maximum degree on output; padding is optional
//! on input.

use super::sparse::SparseMatrix;
use super::LdpcError;
use std::fmt::Write as _;

pub fn write_alist(h: &SparseMatrix) -> String {
    let n = h.num_cols();
    let m = h.num_rows();
    let max_col = (0..n).map(|c| h.col_weight(c)).max().unwrap_or(0);
    let max_row = (0..m).map(|r| h.row_weight(r)).max().unwrap_or(0);
    let mut out = String::new();
    writeln!(out, "{n} {m}").unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    let join = |it: &mut dyn Iterator<Item = usize>| {
        it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "{}", join(&mut (0..n).map(|c| h.col_weight(c)))).unwrap();
    writeln!(out, "{}", join(&mut (0..m).map(|r| h.row_weight(r)))).unwrap();
    let padded = |list: &[usize], width: usize| {
        let mut idx: Vec<usize> = list.iter().map(|&x| x + 1).collect();
        idx.sort_unstable();
        idx.resize(width, 0);
        idx.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for c in 0..n {
        writeln!(out, "{}", padded(h.col(c), max_col)).unwrap();
    }
    for r in 0..m {
        writeln!(out, "{}", padded(h.row(r), max_row)).unwrap();
    }
    out
}

pub fn read_alist(text: &str) -> Result<SparseMatrix, LdpcError> {
    let err = |line: usize, msg: &str| LdpcError::Alist {
        line: line + 1,
        message: msg.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let mut numbers = |what: &str| -> Result<(usize, Vec<usize>), LdpcError> {
        let (i, l) = lines.next().ok_or_else(|| LdpcError::Alist {
            line: 0,
            message: format!("unexpected end of input: {what}"),
        })?;
        let v = l
            .split_whitespace()
            .map(|x| x.parse::<usize>().map_err(|_| err(i, what)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((i, v))
    };
    let (i, dims) = numbers("expected `n m`")?;
    let [n, m] = dims[..] else {
        return Err(err(i, "expected `n m`"));
    };
    numbers("expected maximum degrees")?;
    let (i, col_deg) = numbers("expected column degrees")?;
    if col_deg.len() != n {
        return Err(err(i, "column degree count does not match n"));
    }
    let (i, row_deg) = numbers("expected row degrees")?;
    if row_deg.len() != m {
        return Err(err(i, "row degree count does not match m"));
    }
    let mut h = SparseMatrix::new(m, n);
    for (c, &deg) in col_deg.iter().enumerate() {
        let (i, idx) = numbers("expected column index list")?;
        let idx: Vec<usize> = idx.into_iter().filter(|&x| x != 0).collect();
        if idx.len() != deg {
            return Err(err(i, "column index list does not match its degree"));
        }
        for r in idx {
            if r > m || !h.insert(r - 1, c) {
                return Err(err(i, "row index out of range or repeated"));
            }
        }
    }
    // Row lists must describe the same matrix.
    for (r, &deg) in row_deg.iter().enumerate() {
        let (i, idx) = numbers("expected row index list")?;
        let mut idx: Vec<usize> = idx.into_iter().filter(|&x| x != 0).map(|x| x - 1).collect();
        idx.sort_unstable();
        let mut have = h.row(r).to_vec();
        have.sort_unstable();
        if idx.len() != deg || idx != have {
            return Err(err(i, "row index list disagrees with column lists"));
        }
    }
    h.normalize();
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HAMMING: &str = "7 3
3 4
1 1 2 1 2 2 3
4 4 4
1 0 0
2 0 0
1 2 0
3 0 0
1 3 0
2 3 0
1 2 3
1 3 5 7
2 3 6 7
4 5 6 7
";

    #[test]
    fn parses_and_writes_hamming() {
        let h = read_alist(HAMMING).unwrap();
        assert_eq!((h.num_rows(), h.num_cols()), (3, 7));
        assert_eq!(h.row(0), &[0, 2, 4, 6]);
        assert_eq!(write_alist(&h), HAMMING);
    }

    #[test]
    fn accepts_unpadded_input() {
        let unpadded = HAMMING.replace(" 0", "");
        assert_eq!(read_alist(&unpadded).unwrap(), read_alist(HAMMING).unwrap());
    }

    #[test]
    fn rejects_inconsistent_files() {
        let bad = HAMMING.replace("1 3 5 7", "1 3 5 6");
        assert!(matches!(read_alist(&bad), Err(LdpcError::Alist { .. })));
        assert!(read_alist("7 3\n").is_err());
        assert!(read_alist("x y\n").is_err());
    }
}
