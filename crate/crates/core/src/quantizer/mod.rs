//! Read-threshold quantization of the flash channel.
//!
//! A set of word-line voltages partitions the threshold-voltage axis into
//! `M + 1` regions. Together with the level distributions this induces an
//! `N`-input, `(M + 1)`-output discrete memoryless channel, whose mutual
//! information is the figure of merit for choosing the voltages.

use crate::channel::{ChannelError, FlashChannelModel};
use std::fmt::Write as _;
use thiserror::Error;

mod mmi;
mod ratio;

pub use mmi::{optimize_mmi, MmiResult, SearchConfig};
pub use ratio::{constant_ratio_thresholds, hard_thresholds, log_ratio_crossing};

/// Row sums of a transition matrix may deviate from one by at most this.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizerError {
    #[error("word-line voltages must be finite and strictly increasing")]
    NotIncreasing,
    #[error("at least one word-line voltage is required")]
    NoThresholds,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid read count {reads} for a {levels}-level model: {reason}")]
    InvalidReadCount {
        reads: usize,
        levels: usize,
        reason: &'static str,
    },
    #[error("ratio must be finite and >= 1, got {0}")]
    InvalidRatio(f64),
    #[error("search bracket [{lo}, {hi}] cannot hold {reads} ordered thresholds")]
    InfeasibleBracket { lo: f64, hi: f64, reads: usize },
    #[error(
        "coordinate ascent did not converge in {sweeps} sweeps (last gain {last_gain:e} bits)"
    )]
    NotConverged { sweeps: usize, last_gain: f64 },
    #[error(
        "no voltage between levels {lower} and {upper} where the pdf log-ratio equals {target}"
    )]
    NoRatioSolution {
        lower: usize,
        upper: usize,
        target: f64,
    },
    #[error("ratio thresholds are not strictly increasing (R = {0}); adjacent pairs overlap")]
    NonMonotone(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Strictly increasing read thresholds `q_1 < ... < q_M` in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct WordLineVoltages(Vec<f64>);

impl WordLineVoltages {
    pub fn new(thresholds: Vec<f64>) -> Result<Self, QuantizerError> {
        if thresholds.is_empty() {
            return Err(QuantizerError::NoThresholds);
        }
        if thresholds.iter().any(|q| !q.is_finite()) || thresholds.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(QuantizerError::NotIncreasing);
        }
        Ok(WordLineVoltages(thresholds))
    }

    /// No reads at all: the whole axis is one output region.
    pub fn empty() -> Self {
        WordLineVoltages(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_regions(&self) -> usize {
        self.0.len() + 1
    }

    /// Output region of a sensed voltage: the number of thresholds strictly
    /// below it.
    pub fn region(&self, v: f64) -> usize {
        self.0.partition_point(|&q| q < v)
    }
}

/// Row-stochastic `N x (M+1)` matrix, `p[i][j] = P(region j | level i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, QuantizerError> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if n == 0 || cols == 0 {
            return Err(QuantizerError::DimensionMismatch("empty matrix".into()));
        }
        let mut p = Vec::with_capacity(n * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(QuantizerError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            check_probabilities(&row, &format!("row {i}"))?;
            p.extend(row);
        }
        Ok(TransitionMatrix { rows: n, cols, p })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.cols..(i + 1) * self.cols]
    }

    /// Plain-text export: one row per line, space separated, 17 significant
    /// digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|&x| fmt_sig17(x)).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }
}

/// Decimal with 17 significant digits, `.` separator, no locale.
pub fn fmt_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Prior over the written levels.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution(Vec<f64>);

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, QuantizerError> {
        if probs.is_empty() {
            return Err(QuantizerError::InvalidDistribution("no entries".into()));
        }
        check_probabilities(&probs, "input distribution")?;
        Ok(InputDistribution(probs))
    }

    pub fn uniform(n: usize) -> Self {
        InputDistribution(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

fn check_probabilities(p: &[f64], what: &str) -> Result<(), QuantizerError> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(QuantizerError::InvalidDistribution(format!(
            "{what} has an entry outside [0, 1]"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(QuantizerError::InvalidDistribution(format!(
            "{what} sums to {sum}"
        )));
    }
    Ok(())
}

/// Equivalent discrete channel of `model` read with thresholds `wl`.
pub fn build_transition_matrix(
    model: &FlashChannelModel,
    wl: &WordLineVoltages,
) -> TransitionMatrix {
    let q = wl.as_slice();
    let cols = q.len() + 1;
    let mut p = Vec::with_capacity(model.num_levels() * cols);
    for level in model.levels() {
        let start = p.len();
        for j in 0..cols {
            let lo = if j == 0 { f64::NEG_INFINITY } else { q[j - 1] };
            let hi = if j == q.len() { f64::INFINITY } else { q[j] };
            p.push(level.interval_mass(lo, hi));
        }
        // Each interval mass is accurate to a few ulps; spread the leftover
        // onto the largest entry so the row is stochastic to rounding.
        let row = &mut p[start..];
        let sum: f64 = row.iter().sum();
        let (jmax, _) =
            row.iter().enumerate().fold(
                (0, f64::MIN),
                |acc, (j, &x)| if x > acc.1 { (j, x) } else { acc },
            );
        row[jmax] = (row[jmax] + (1.0 - sum)).clamp(0.0, 1.0);
    }
    TransitionMatrix {
        rows: model.num_levels(),
        cols,
        p,
    }
}

/// Entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// `I(X;Y) = H(Y) - H(Y|X)` in bits.
pub fn mutual_information(
    t: &TransitionMatrix,
    px: &InputDistribution,
) -> Result<f64, QuantizerError> {
    let px = px.probs();
    if px.len() != t.rows {
        return Err(QuantizerError::DimensionMismatch(format!(
            "{} input probabilities for a {}-row matrix",
            px.len(),
            t.rows
        )));
    }
    let mut py = vec![0.0; t.cols];
    let mut h_cond = 0.0;
    for (i, &w) in px.iter().enumerate() {
        let row = t.row(i);
        for (acc, &x) in py.iter_mut().zip(row) {
            *acc += w * x;
        }
        h_cond += w * entropy_bits(row);
    }
    Ok((entropy_bits(&py) - h_cond).max(0.0))
}

/// Mutual information of `model` read at `wl` under uniform inputs.
pub fn model_mutual_information(model: &FlashChannelModel, wl: &WordLineVoltages) -> f64 {
    let t = build_transition_matrix(model, wl);
    mutual_information(&t, &InputDistribution::uniform(model.num_levels()))
        .expect("dimensions agree by construction")
}
