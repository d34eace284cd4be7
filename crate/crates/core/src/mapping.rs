//! Gray labeling of cell levels and bit-LLR demapping of read regions.

use crate::quantizer::TransitionMatrix;
use thiserror::Error;

/// Saturation magnitude for channel LLRs (natural-log units).
pub const LLR_MAX: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("number of levels must be a power of two >= 2, got {0}")]
    NotPowerOfTwo(usize),
    #[error("level {level} out of range for {levels} levels")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("bit label {0:?} is not a valid label")]
    UnknownLabel(Vec<u8>),
    #[error("output region {region} out of range for {regions} regions")]
    RegionOutOfRange { region: usize, regions: usize },
    #[error("output region {0} has zero probability under every level")]
    UnreachableRegion(usize),
    #[error("transition matrix has {rows} rows, labeling has {levels} levels")]
    DimensionMismatch { rows: usize, levels: usize },
}

/// Binary-reflected Gray code over `N = 2^b` levels. Bit 0 is the leftmost
/// (most significant) bit of a label, so four levels read `00, 01, 11, 10`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayLabeling {
    bits: usize,
    labels: Vec<usize>,
    inverse: Vec<usize>,
}

impl GrayLabeling {
    pub fn new(levels: usize) -> Result<Self, MappingError> {
        if levels < 2 || !levels.is_power_of_two() {
            return Err(MappingError::NotPowerOfTwo(levels));
        }
        let labels: Vec<usize> = (0..levels).map(|l| l ^ (l >> 1)).collect();
        let mut inverse = vec![0; levels];
        for (l, &g) in labels.iter().enumerate() {
            inverse[g] = l;
        }
        Ok(GrayLabeling {
            bits: levels.trailing_zeros() as usize,
            labels,
            inverse,
        })
    }

    pub fn levels(&self) -> usize {
        self.labels.len()
    }

    pub fn bits_per_level(&self) -> usize {
        self.bits
    }

    /// Label of `level` as bits, most significant first.
    pub fn level_to_bits(&self, level: usize) -> Result<Vec<u8>, MappingError> {
        let g = *self
            .labels
            .get(level)
            .ok_or(MappingError::LevelOutOfRange {
                level,
                levels: self.levels(),
            })?;
        Ok((0..self.bits).map(|k| self.bit(g, k)).collect())
    }

    pub fn bits_to_level(&self, bits: &[u8]) -> Result<usize, MappingError> {
        if bits.len() != self.bits || bits.iter().any(|&b| b > 1) {
            return Err(MappingError::UnknownLabel(bits.to_vec()));
        }
        let g = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Ok(self.inverse[g])
    }

    /// Bit `k` (0 = most significant) of `level`'s label. `level` must be in
    /// range.
    pub fn label_bit(&self, level: usize, k: usize) -> u8 {
        self.bit(self.labels[level], k)
    }

    fn bit(&self, label: usize, k: usize) -> u8 {
        ((label >> (self.bits - 1 - k)) & 1) as u8
    }
}

/// Per-bit LLRs `ln P(b_k = 0 | y) / P(b_k = 1 | y)` for output region `y`,
/// assuming equiprobable levels, saturated at `±LLR_MAX`.
pub fn bit_llrs(
    t: &TransitionMatrix,
    lab: &GrayLabeling,
    region: usize,
) -> Result<Vec<f64>, MappingError> {
    if t.rows() != lab.levels() {
        return Err(MappingError::DimensionMismatch {
            rows: t.rows(),
            levels: lab.levels(),
        });
    }
    if region >= t.cols() {
        return Err(MappingError::RegionOutOfRange {
            region,
            regions: t.cols(),
        });
    }
    if (0..t.rows()).all(|l| t.get(l, region) == 0.0) {
        return Err(MappingError::UnreachableRegion(region));
    }
    Ok((0..lab.bits_per_level())
        .map(|k| {
            let (mut zero, mut one) = (0.0, 0.0);
            for l in 0..lab.levels() {
                let p = t.get(l, region);
                if lab.label_bit(l, k) == 0 {
                    zero += p;
                } else {
                    one += p;
                }
            }
            saturate_llr(zero, one)
        })
        .collect())
}

fn saturate_llr(zero: f64, one: f64) -> f64 {
    if one == 0.0 {
        LLR_MAX
    } else if zero == 0.0 {
        -LLR_MAX
    } else {
        (zero / one).ln().clamp(-LLR_MAX, LLR_MAX)
    }
}

/// LLR table indexed by `[region][bit]`, for every region of `t`. Regions no
/// level can reach get all-zero LLRs.
pub fn llr_table(t: &TransitionMatrix, lab: &GrayLabeling) -> Result<Vec<Vec<f64>>, MappingError> {
    (0..t.cols())
        .map(|y| match bit_llrs(t, lab, y) {
            Err(MappingError::UnreachableRegion(_)) => Ok(vec![0.0; lab.bits_per_level()]),
            other => other,
        })
        .collect()
}
