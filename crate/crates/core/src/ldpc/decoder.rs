//! Belief-propagation decoding.
//!
//! [`LayeredDecoder`] processes check rows one at a time and updates the
//! variable posteriors immediately after each row, so later rows in the same
//! iteration already see the new values. [`FloodingDecoder`] is the
//! two-phase schedule, kept as a reference.

use super::sparse::SparseMatrix;

/// Check-node arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckRule {
    /// Exact sum-product via pairwise box-plus.
    #[default]
    SumProduct,
    MinSum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub hard_bits: Vec<u8>,
    pub converged: bool,
    pub iterations_used: usize,
}

/// `a ⊞ b = 2 atanh(tanh(a/2) tanh(b/2))`, in the log domain.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    let s = if (a < 0.0) != (b < 0.0) { -m } else { m };
    s + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Extrinsic check-to-variable messages for one check: output `i` combines
/// every input except `i`.
pub fn check_update(rule: CheckRule, incoming: &[f64], out: &mut [f64]) {
    let d = incoming.len();
    debug_assert_eq!(out.len(), d);
    match d {
        0 => {}
        1 => out[0] = 0.0,
        _ => match rule {
            CheckRule::SumProduct => {
                // out[i] = fwd(0..i) ⊞ bwd(i+1..d), with fwd stored in `out`.
                out[0] = incoming[0];
                for i in 1..d - 1 {
                    out[i] = boxplus(out[i - 1], incoming[i]);
                }
                let mut bwd = incoming[d - 1];
                out[d - 1] = out[d - 2];
                for i in (1..d - 1).rev() {
                    let fwd = out[i - 1];
                    out[i] = boxplus(fwd, bwd);
                    bwd = boxplus(bwd, incoming[i]);
                }
                out[0] = bwd;
            }
            CheckRule::MinSum => {
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, 0);
                let mut negative = false;
                for (i, &x) in incoming.iter().enumerate() {
                    let a = x.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = i;
                    } else if a < min2 {
                        min2 = a;
                    }
                    negative ^= x < 0.0;
                }
                for (i, (o, &x)) in out.iter_mut().zip(incoming).enumerate() {
                    let mag = if i == arg { min2 } else { min1 };
                    *o = if negative != (x < 0.0) { -mag } else { mag };
                }
            }
        },
    }
}

fn hard_decision(llrs: &[f64], bits: &mut Vec<u8>) {
    bits.clear();
    bits.extend(llrs.iter().map(|&l| u8::from(l < 0.0)));
}

/// Row-major edge layout shared by both schedules.
#[derive(Debug, Clone)]
struct Edges {
    row_start: Vec<usize>,
    var: Vec<usize>,
}

impl Edges {
    fn new(h: &SparseMatrix) -> Self {
        let mut row_start = Vec::with_capacity(h.num_rows() + 1);
        let mut var = Vec::with_capacity(h.num_edges());
        row_start.push(0);
        for r in 0..h.num_rows() {
            var.extend_from_slice(h.row(r));
            row_start.push(var.len());
        }
        Edges { row_start, var }
    }

    fn rows(&self) -> usize {
        self.row_start.len() - 1
    }

    fn range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_start[r]..self.row_start[r + 1]
    }

    fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        (0..self.rows()).all(|r| self.var[self.range(r)].iter().fold(0, |a, &v| a ^ bits[v]) == 0)
    }
}

/// Layered (row-sequential) belief-propagation decoder. Holds per-frame
/// scratch state; use one instance per thread.
#[derive(Debug, Clone)]
pub struct LayeredDecoder {
    edges: Edges,
    rule: CheckRule,
    posterior: Vec<f64>,
    messages: Vec<f64>,
    incoming: Vec<f64>,
    outgoing: Vec<f64>,
    bits: Vec<u8>,
}

impl LayeredDecoder {
    pub fn new(h: &SparseMatrix, rule: CheckRule) -> Self {
        let edges = Edges::new(h);
        let max_row = (0..edges.rows())
            .map(|r| edges.range(r).len())
            .max()
            .unwrap_or(0);
        LayeredDecoder {
            posterior: vec![0.0; h.num_cols()],
            messages: vec![0.0; edges.var.len()],
            incoming: vec![0.0; max_row],
            outgoing: vec![0.0; max_row],
            bits: Vec::with_capacity(h.num_cols()),
            edges,
            rule,
        }
    }

    pub fn decode(&mut self, llrs: &[f64], max_iters: usize) -> DecodeResult {
        assert_eq!(llrs.len(), self.posterior.len(), "one LLR per code bit");
        self.posterior.copy_from_slice(llrs);
        self.messages.iter_mut().for_each(|m| *m = 0.0);
        hard_decision(&self.posterior, &mut self.bits);
        if self.edges.syndrome_is_zero(&self.bits) {
            return self.result(true, 0);
        }
        for iter in 1..=max_iters {
            for r in 0..self.edges.rows() {
                let range = self.edges.range(r);
                let d = range.len();
                for (k, e) in range.clone().enumerate() {
                    self.incoming[k] = self.posterior[self.edges.var[e]] - self.messages[e];
                }
                check_update(self.rule, &self.incoming[..d], &mut self.outgoing[..d]);
                for (k, e) in range.enumerate() {
                    self.messages[e] = self.outgoing[k];
                    self.posterior[self.edges.var[e]] = self.incoming[k] + self.outgoing[k];
                }
            }
            hard_decision(&self.posterior, &mut self.bits);
            if self.edges.syndrome_is_zero(&self.bits) {
                return self.result(true, iter);
            }
        }
        self.result(false, max_iters)
    }

    fn result(&self, converged: bool, iterations_used: usize) -> DecodeResult {
        DecodeResult {
            hard_bits: self.bits.clone(),
            converged,
            iterations_used,
        }
    }
}

/// Two-phase (flooding) belief propagation: all checks update from the same
/// variable messages, then all variables update.
#[derive(Debug, Clone)]
pub struct FloodingDecoder {
    edges: Edges,
    rule: CheckRule,
    messages: Vec<f64>,
}

impl FloodingDecoder {
    pub fn new(h: &SparseMatrix, rule: CheckRule) -> Self {
        let edges = Edges::new(h);
        FloodingDecoder {
            messages: vec![0.0; edges.var.len()],
            edges,
            rule,
        }
    }

    pub fn decode(&mut self, llrs: &[f64], max_iters: usize) -> DecodeResult {
        let mut posterior = llrs.to_vec();
        let mut bits = Vec::new();
        self.messages.iter_mut().for_each(|m| *m = 0.0);
        hard_decision(&posterior, &mut bits);
        if self.edges.syndrome_is_zero(&bits) {
            return DecodeResult {
                hard_bits: bits,
                converged: true,
                iterations_used: 0,
            };
        }
        let mut incoming = Vec::new();
        let mut outgoing = Vec::new();
        for iter in 1..=max_iters {
            let frozen = posterior.clone();
            let mut next = llrs.to_vec();
            for r in 0..self.edges.rows() {
                let range = self.edges.range(r);
                incoming.clear();
                incoming.extend(
                    range
                        .clone()
                        .map(|e| frozen[self.edges.var[e]] - self.messages[e]),
                );
                outgoing.resize(incoming.len(), 0.0);
                check_update(self.rule, &incoming, &mut outgoing);
                for (k, e) in range.enumerate() {
                    self.messages[e] = outgoing[k];
                    next[self.edges.var[e]] += outgoing[k];
                }
            }
            posterior = next;
            hard_decision(&posterior, &mut bits);
            if self.edges.syndrome_is_zero(&bits) {
                return DecodeResult {
                    hard_bits: bits,
                    converged: true,
                    iterations_used: iter,
                };
            }
        }
        DecodeResult {
            hard_bits: bits,
            converged: false,
            iterations_used: max_iters,
        }
    }
}
