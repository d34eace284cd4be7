//! Read-threshold optimization for multi-level NAND flash and end-to-end
//! LDPC simulation of the resulting quantized read channel.
//!
//! - [`channel`]: per-level threshold-voltage distributions and the retention
//!   surrogate.
//! - [`quantizer`]: the discrete channel induced by a set of word-line
//!   voltages, its mutual information, and the MMI, constant-ratio and hard
//!   threshold placements.
//! - [`mapping`]: Gray labeling and bit-LLR demapping.
//! - [`ldpc`]: code construction, encoding and layered BP decoding.
//! - [`config`]: layered TOML configuration used by the CLI.
//! - [`sim`]: Monte Carlo frame-error simulation over retention or noise
//!   sweeps.

pub mod channel;
pub mod config;
pub mod ldpc;
pub mod mapping;
pub mod quantizer;
pub mod sim;
