//! LDPC codes: degree distributions, PEG/ACE construction, systematic
//! encoding and belief-propagation decoding.

use thiserror::Error;

mod alist;
mod construct;
mod decoder;
mod degree;
mod encoder;
mod sparse;

pub use alist::{read_alist, write_alist};
pub use construct::{
    apportion, construct_peg_ace, min_cycle_ace, ConstructParams, ConstructionReport,
};
pub use decoder::{
    boxplus, check_update, CheckRule, DecodeResult, FloodingDecoder, LayeredDecoder,
};
pub use degree::{DegreeDistribution, PRESETS};
pub use encoder::{gf2_rank, Encoder};
pub use sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdpcError {
    #[error("invalid degree distribution: {0}")]
    Degree(String),
    #[error("code construction failed: {reason}")]
    Construction {
        column: Option<usize>,
        reason: String,
    },
    #[error("parity-check matrix has rank {rank}, expected {rows}")]
    RankDeficient { rank: usize, rows: usize },
    #[error("alist line {line}: {message}")]
    Alist { line: usize, message: String },
    #[error("message has {got} bits, code dimension is {k}")]
    MessageLength { got: usize, k: usize },
}

/// A binary LDPC code with its cached systematic encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    h: SparseMatrix,
    encoder: Encoder,
}

impl LdpcCode {
    /// Wraps a full-rank parity-check matrix.
    pub fn from_h(mut h: SparseMatrix) -> Result<Self, LdpcError> {
        h.normalize();
        let encoder = Encoder::from_h(&h).map_err(|rank| LdpcError::RankDeficient {
            rank,
            rows: h.num_rows(),
        })?;
        Ok(LdpcCode { h, encoder })
    }

    pub fn from_alist(text: &str) -> Result<Self, LdpcError> {
        Self::from_h(read_alist(text)?)
    }

    pub fn to_alist(&self) -> String {
        write_alist(&self.h)
    }

    pub fn h(&self) -> &SparseMatrix {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.num_cols()
    }

    pub fn k(&self) -> usize {
        self.encoder.k()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    /// Codeword positions that carry the message, in message order.
    pub fn message_positions(&self) -> &[usize] {
        self.encoder.message_positions()
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>, LdpcError> {
        if message.len() != self.k() {
            return Err(LdpcError::MessageLength {
                got: message.len(),
                k: self.k(),
            });
        }
        Ok(self.encoder.encode(message))
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n() && self.h.syndrome_is_zero(bits)
    }

    pub fn girth(&self) -> Option<usize> {
        self.h.girth()
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|c| self.h.col_weight(c)).collect()
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        (0..self.h.num_rows())
            .map(|r| self.h.row_weight(r))
            .collect()
    }
}
