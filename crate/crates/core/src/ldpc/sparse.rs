//! Sparse binary matrix stored as row and column adjacency lists.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl SparseMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            rows: vec![Vec::new(); nrows],
            cols: vec![Vec::new(); ncols],
        }
    }

    /// Builds from `(row, col)` entries; duplicates are rejected.
    pub fn from_entries(
        nrows: usize,
        ncols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, (usize, usize)> {
        let mut h = SparseMatrix::new(nrows, ncols);
        for (r, c) in entries {
            if r >= nrows || c >= ncols || !h.insert(r, c) {
                return Err((r, c));
            }
        }
        Ok(h)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Inserts a one; returns false if it was already present.
    pub fn insert(&mut self, r: usize, c: usize) -> bool {
        if self.contains(r, c) {
            return false;
        }
        self.rows[r].push(c);
        self.cols[c].push(r);
        true
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        // Columns are short, so scan the column list.
        self.cols[c].contains(&r)
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.cols[c]
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.rows[r].len()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        self.cols[c].len()
    }

    /// Sorts every adjacency list so equal matrices compare equal.
    pub fn normalize(&mut self) {
        self.rows.iter_mut().for_each(|r| r.sort_unstable());
        self.cols.iter_mut().for_each(|c| c.sort_unstable());
    }

    /// `H x` over GF(2) is zero.
    pub fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
    }

    /// Length of the shortest cycle of the Tanner graph, `None` if acyclic.
    pub fn girth(&self) -> Option<usize> {
        let n = self.num_cols();
        let m = self.num_rows();
        let mut best = usize::MAX;
        // Nodes: variables 0..n, checks n..n+m.
        let mut dist = vec![usize::MAX; n + m];
        let mut parent = vec![usize::MAX; n + m];
        let mut queue = VecDeque::new();
        for start in 0..n {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[start] = 0;
            parent[start] = usize::MAX;
            queue.clear();
            queue.push_back(start);
            'bfs: while let Some(u) = queue.pop_front() {
                if 2 * dist[u] + 1 >= best {
                    break;
                }
                let neighbours: Box<dyn Iterator<Item = usize>> = if u < n {
                    Box::new(self.cols[u].iter().map(|&r| r + n))
                } else {
                    Box::new(self.rows[u - n].iter().copied())
                };
                for w in neighbours {
                    if w == parent[u] {
                        continue;
                    }
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else {
                        best = best.min(dist[u] + dist[w] + 1);
                        if best == 4 {
                            break 'bfs;
                        }
                    }
                }
            }
            if best == 4 {
                break;
            }
        }
        (best != usize::MAX).then_some(best)
    }
}
