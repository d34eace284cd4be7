//! Monte Carlo frame-error simulation of a coded, quantized flash read
//! channel.
//!
//! Each frame draws a random message, encodes it, writes codeword bits
//! `2j, 2j+1` to cell `j` through the Gray labeling, samples a threshold
//! voltage per cell, quantizes it with the word-line voltages, demaps bit
//! LLRs from the transition matrix and decodes with layered BP.
//!
//! Every frame has its own RNG keyed by `(seed, point, frame)`, and frames
//! are accumulated in index order, so results do not depend on how many
//! threads run the frames or in which order they finish.

use crate::channel::{ChannelError, FlashChannelModel, RetentionParams};
use crate::ldpc::{CheckRule, LayeredDecoder, LdpcCode};
use crate::mapping::{llr_table, GrayLabeling, MappingError};
use crate::quantizer::{
    build_transition_matrix, constant_ratio_thresholds, hard_thresholds, model_mutual_information,
    optimize_mmi, QuantizerError, SearchConfig, WordLineVoltages,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

/// How read thresholds are chosen at each operating point.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantMethod {
    Mmi,
    ConstantRatio(f64),
    Hard,
    Explicit(WordLineVoltages),
}

impl QuantMethod {
    pub fn name(&self) -> &'static str {
        match self {
            QuantMethod::Mmi => "mmi",
            QuantMethod::ConstantRatio(_) => "constant_ratio",
            QuantMethod::Hard => "hard",
            QuantMethod::Explicit(_) => "explicit",
        }
    }

    pub fn ratio(&self) -> Option<f64> {
        match *self {
            QuantMethod::ConstantRatio(r) => Some(r),
            _ => None,
        }
    }

    /// Thresholds and their mutual information for `model`.
    pub fn quantize(
        &self,
        model: &FlashChannelModel,
        reads: usize,
        search: &SearchConfig,
    ) -> Result<(WordLineVoltages, f64), QuantizerError> {
        let wl = match self {
            QuantMethod::Mmi => {
                return optimize_mmi(model, reads, search).map(|r| (r.voltages, r.mi_bits))
            }
            QuantMethod::ConstantRatio(r) => constant_ratio_thresholds(model, *r, reads)?,
            QuantMethod::Hard => {
                let wl = hard_thresholds(model)?;
                if wl.len() != reads {
                    return Err(QuantizerError::InvalidReadCount {
                        reads,
                        levels: model.num_levels(),
                        reason: "hard quantization uses one read per adjacent level pair",
                    });
                }
                wl
            }
            QuantMethod::Explicit(wl) => {
                if wl.len() != reads {
                    return Err(QuantizerError::InvalidReadCount {
                        reads,
                        levels: model.num_levels(),
                        reason: "explicit voltage count differs from the read count",
                    });
                }
                wl.clone()
            }
        };
        let mi = model_mutual_information(model, &wl);
        Ok((wl, mi))
    }
}

/// Where the per-point channel comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    /// Retention surrogate evaluated at each sweep value (months).
    Retention(RetentionParams),
    /// Fixed model with all sigmas multiplied by each sweep value.
    SigmaScale(FlashChannelModel),
}

impl ModelSource {
    pub fn model_at(&self, x: f64) -> Result<FlashChannelModel, ChannelError> {
        match self {
            ModelSource::Retention(p) => p.retention_model(x),
            ModelSource::SigmaScale(m) => m.with_sigma_scale(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub reads: usize,
    pub max_frames: u64,
    /// Stop a point once this many frame errors are seen.
    pub stop_errors: u64,
    pub max_iters: usize,
    pub rule: CheckRule,
    pub seed: u64,
    pub search: SearchConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            reads: 6,
            max_frames: 10_000,
            stop_errors: 100,
            max_iters: 50,
            rule: CheckRule::SumProduct,
            seed: 1,
            search: SearchConfig::default(),
        }
    }
}

/// Statistics for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub point_id: u64,
    pub method: &'static str,
    pub ratio: Option<f64>,
    pub reads: usize,
    /// Retention time or sigma scale of the point.
    pub x: f64,
    pub thresholds: WordLineVoltages,
    pub mi_bits: f64,
    pub frames: u64,
    pub frame_errors: u64,
    /// Frame errors where the decoder reached a codeword other than the one
    /// sent. Included in `frame_errors`.
    pub undetected_errors: u64,
    /// Codeword bit errors.
    pub bit_errors: u64,
    pub n: usize,
    pub total_iterations: u64,
}

impl SimResult {
    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.frames * self.n as u64)
    }

    pub fn fer_ci(&self) -> (f64, f64) {
        wilson_interval(self.frame_errors, self.frames)
    }

    pub fn mean_iters(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.frames as f64
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Wilson score 95% interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (kf, nf) = (k as f64, n as f64);
    let p = kf / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // The bounds are exactly 0 and 1 at the extremes; pin them there
    // instead of leaving rounding residue.
    let lo = if k == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

pub const CSV_HEADER: &str = "point_id,method,R,M,t_months_or_sigma_scale,mi_bits,frames,frame_errors,fer,fer_ci_lo,fer_ci_hi,ber,mean_iters";

impl SimResult {
    pub fn csv_row(&self) -> String {
        use crate::quantizer::fmt_sig17 as f;
        let (lo, hi) = self.fer_ci();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.point_id,
            self.method,
            self.ratio.map(f).unwrap_or_default(),
            self.reads,
            f(self.x),
            f(self.mi_bits),
            self.frames,
            self.frame_errors,
            f(self.fer()),
            f(lo),
            f(hi),
            f(self.ber()),
            f(self.mean_iters()),
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameOutcome {
    error: bool,
    undetected: bool,
    bit_errors: u32,
    iterations: u32,
}

/// RNG for one frame. The key packs the master seed, point and frame index,
/// so every frame gets an independent ChaCha stream.
pub fn frame_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&frame.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Frames simulated between early-stop checks.
const BATCH: u64 = 256;

/// Simulates one operating point with fixed thresholds. The result is
/// labelled `explicit` with `x = 0`; [`run_sweep`] fills in the method and
/// sweep value.
pub fn run_point(
    code: &LdpcCode,
    model: &FlashChannelModel,
    wl: &WordLineVoltages,
    cfg: &SimConfig,
    point_id: u64,
) -> Result<SimResult, SimError> {
    let labeling = GrayLabeling::new(model.num_levels())?;
    let bits = labeling.bits_per_level();
    if !code.n().is_multiple_of(bits) {
        return Err(SimError::Config(format!(
            "code length {} is not a multiple of {bits} bits per cell",
            code.n()
        )));
    }
    if cfg.max_frames == 0 {
        return Err(SimError::Config("at least one frame is required".into()));
    }
    let table = llr_table(&build_transition_matrix(model, wl), &labeling)?;
    let decoder = LayeredDecoder::new(code.h(), cfg.rule);
    let frame = |dec: &mut LayeredDecoder, index: u64| {
        simulate_frame(
            code, model, wl, &labeling, &table, dec, cfg, point_id, index,
        )
    };

    let mut res = SimResult {
        point_id,
        method: "explicit",
        ratio: None,
        reads: wl.len(),
        x: 0.0,
        thresholds: wl.clone(),
        mi_bits: model_mutual_information(model, wl),
        frames: 0,
        frame_errors: 0,
        undetected_errors: 0,
        bit_errors: 0,
        n: code.n(),
        total_iterations: 0,
    };
    'batches: while res.frames < cfg.max_frames {
        let start = res.frames;
        let end = (start + BATCH).min(cfg.max_frames);
        let outcomes: Vec<FrameOutcome> = (start..end)
            .into_par_iter()
            .map_init(|| decoder.clone(), frame)
            .collect();
        for o in outcomes {
            res.frames += 1;
            res.total_iterations += u64::from(o.iterations);
            res.bit_errors += u64::from(o.bit_errors);
            if o.error {
                res.frame_errors += 1;
                res.undetected_errors += u64::from(o.undetected);
                if res.frame_errors >= cfg.stop_errors {
                    break 'batches;
                }
            }
        }
    }
    Ok(res)
}

#[allow(clippy::too_many_arguments)]
fn simulate_frame(
    code: &LdpcCode,
    model: &FlashChannelModel,
    wl: &WordLineVoltages,
    labeling: &GrayLabeling,
    table: &[Vec<f64>],
    decoder: &mut LayeredDecoder,
    cfg: &SimConfig,
    point_id: u64,
    index: u64,
) -> FrameOutcome {
    let mut rng = frame_rng(cfg.seed, point_id, index);
    let message: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
    let codeword = code.encode(&message).expect("message has length k");
    let bits = labeling.bits_per_level();
    let mut llrs = vec![0.0; code.n()];
    for (cell, chunk) in codeword.chunks_exact(bits).enumerate() {
        let level = labeling.bits_to_level(chunk).expect("valid label");
        let v = model.levels()[level].sample(&mut rng);
        let region = wl.region(v);
        llrs[cell * bits..(cell + 1) * bits].copy_from_slice(&table[region]);
    }
    let out = decoder.decode(&llrs, cfg.max_iters);
    debug_assert!(!out.converged || code.is_codeword(&out.hard_bits));
    let bit_errors = out
        .hard_bits
        .iter()
        .zip(&codeword)
        .filter(|(a, b)| a != b)
        .count() as u32;
    FrameOutcome {
        error: bit_errors > 0,
        undetected: bit_errors > 0 && out.converged,
        bit_errors,
        iterations: out.iterations_used as u32,
    }
}

/// Runs every method at every sweep value, method-major. Point ids count up
/// from zero in output order.
pub fn run_sweep(
    code: &LdpcCode,
    source: &ModelSource,
    xs: &[f64],
    methods: &[QuantMethod],
    cfg: &SimConfig,
    mut progress: impl FnMut(&SimResult),
) -> Result<Vec<SimResult>, SimError> {
    if xs.is_empty() || methods.is_empty() {
        return Err(SimError::Config(
            "sweep needs at least one point and one method".into(),
        ));
    }
    let mut out = Vec::with_capacity(xs.len() * methods.len());
    for method in methods {
        for &x in xs {
            let model = source.model_at(x)?;
            let (wl, mi) = method.quantize(&model, cfg.reads, &cfg.search)?;
            let mut r = run_point(code, &model, &wl, cfg, out.len() as u64)?;
            r.method = method.name();
            r.ratio = method.ratio();
            r.x = x;
            r.mi_bits = mi;
            progress(&r);
            out.push(r);
        }
    }
    Ok(out)
}
