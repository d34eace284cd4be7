//! Systematic encoding through a Gauss-Jordan reduced parity-check matrix.
//!
//! `H` is reduced once to `[I | A]` up to a column permutation. Pivot
//! columns carry parity, the remaining columns (in increasing order) carry
//! the message, and parity bit `r` is the inner product of reduced row `r`
//! with the message part of the codeword.

use super::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitRows {
    words: usize,
    data: Vec<u64>,
}

impl BitRows {
    pub(crate) fn from_sparse(h: &SparseMatrix) -> Self {
        let words = h.num_cols().div_ceil(64);
        let mut data = vec![0u64; words * h.num_rows()];
        for r in 0..h.num_rows() {
            for &c in h.row(r) {
                data[r * words + c / 64] |= 1 << (c % 64);
            }
        }
        BitRows { words, data }
    }

    fn rows(&self) -> usize {
        self.data.len() / self.words.max(1)
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        let w = self.words;
        for i in 0..w {
            let s = self.data[src * w + i];
            self.data[dst * w + i] ^= s;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            let w = self.words;
            for i in 0..w {
                self.data.swap(a * w + i, b * w + i);
            }
        }
    }
}

/// Rank of `h` over GF(2).
pub fn gf2_rank(h: &SparseMatrix) -> usize {
    reduce(BitRows::from_sparse(h), h.num_cols()).1.len()
}

/// Row-reduces in place, pivoting on columns from right to left. Returns the
/// reduced rows and the pivot column of each leading row.
fn reduce(mut m: BitRows, ncols: usize) -> (BitRows, Vec<usize>) {
    let nrows = m.rows();
    let mut pivots = Vec::new();
    for c in (0..ncols).rev() {
        let r = pivots.len();
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| m.get(i, c)) else {
            continue;
        };
        m.swap_rows(r, p);
        for i in 0..nrows {
            if i != r && m.get(i, c) {
                m.xor_rows(i, r);
            }
        }
        pivots.push(c);
    }
    (m, pivots)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoder {
    n: usize,
    reduced: BitRows,
    parity_cols: Vec<usize>,
    message_cols: Vec<usize>,
}

impl Encoder {
    /// Fails with the GF(2) rank if `h` has dependent rows.
    pub fn from_h(h: &SparseMatrix) -> Result<Self, usize> {
        let n = h.num_cols();
        let (reduced, parity_cols) = reduce(BitRows::from_sparse(h), n);
        if parity_cols.len() < h.num_rows() {
            return Err(parity_cols.len());
        }
        let mut is_parity = vec![false; n];
        parity_cols.iter().for_each(|&c| is_parity[c] = true);
        let message_cols = (0..n).filter(|&c| !is_parity[c]).collect();
        Ok(Encoder {
            n,
            reduced,
            parity_cols,
            message_cols,
        })
    }

    /// Codeword positions holding the message bits, in message order.
    pub fn message_positions(&self) -> &[usize] {
        &self.message_cols
    }

    pub fn k(&self) -> usize {
        self.message_cols.len()
    }

    pub fn encode(&self, message: &[u8]) -> Vec<u8> {
        assert_eq!(message.len(), self.k(), "message length must equal k");
        let mut word = vec![0u64; self.reduced.words];
        let mut codeword = vec![0u8; self.n];
        for (&c, &b) in self.message_cols.iter().zip(message) {
            debug_assert!(b <= 1);
            if b & 1 == 1 {
                word[c / 64] |= 1 << (c % 64);
                codeword[c] = 1;
            }
        }
        for (r, &c) in self.parity_cols.iter().enumerate() {
            let ones: u32 = self
                .reduced
                .row(r)
                .iter()
                .zip(&word)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            codeword[c] = (ones & 1) as u8;
        }
        codeword
    }

    /// Message bits read back from a codeword.
    pub fn extract_message(&self, codeword: &[u8]) -> Vec<u8> {
        self.message_cols.iter().map(|&c| codeword[c]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> SparseMatrix {
        let mut h = SparseMatrix::new(3, 7);
        for c in 0..7 {
            for r in 0..3 {
                if (c + 1) >> r & 1 == 1 {
                    h.insert(r, c);
                }
            }
        }
        h
    }

    #[test]
    fn rank_and_deficiency() {
        assert_eq!(gf2_rank(&hamming()), 3);
        let dup = SparseMatrix::from_entries(2, 3, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert_eq!(gf2_rank(&dup), 1);
        assert_eq!(Encoder::from_h(&dup), Err(1));
    }

    #[test]
    fn zero_message_and_syndrome() {
        let h = hamming();
        let enc = Encoder::from_h(&h).unwrap();
        assert_eq!(enc.k(), 4);
        assert_eq!(enc.encode(&[0; 4]), vec![0; 7]);
        for m in 0..16u8 {
            let msg: Vec<u8> = (0..4).map(|i| m >> i & 1).collect();
            let cw = enc.encode(&msg);
            assert!(h.syndrome_is_zero(&cw));
            assert_eq!(enc.extract_message(&cw), msg);
        }
    }
}
