//! Conditional threshold-voltage distributions of a multi-level flash cell.
//!
//! Each written level is described by a [`LevelDistribution`]. A
//! [`FlashChannelModel`] is the ordered set of levels, lowest (erased) level
//! first. [`RetentionParams`] produces a model for a given retention time from
//! a logarithmic drift surrogate.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Longest retention time the surrogate is validated for.
pub const MAX_RETENTION_MONTHS: f64 = 120.0;

/// Errors produced while building or querying channel models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("level index {level} out of range for a {levels}-level model")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("uniform center must satisfy center_lo <= center_hi, got [{lo}, {hi}]")]
    InvalidCenter { lo: f64, hi: f64 },
    #[error("a flash channel needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("level means must be strictly increasing (level {0} is not above level {prev})", prev = .0 - 1)]
    MeansNotIncreasing(usize),
    #[error("retention time {0} months outside supported range [0, {MAX_RETENTION_MONTHS}]")]
    RetentionTimeOutOfRange(f64),
    #[error("invalid retention parameters: {0}")]
    InvalidRetention(String),
}

/// Threshold-voltage density of one written level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelDistribution {
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    /// Flat density on `[center_lo, center_hi]` with half-Gaussian tails of
    /// standard deviation `sigma` attached at both ends.
    GaussianTailsUniformCenter {
        center_lo: f64,
        center_hi: f64,
        sigma: f64,
    },
}

impl LevelDistribution {
    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self, ChannelError> {
        check_sigma(sigma)?;
        if !mean.is_finite() {
            return Err(ChannelError::InvalidCenter { lo: mean, hi: mean });
        }
        Ok(LevelDistribution::Gaussian { mean, sigma })
    }

    pub fn tails_uniform_center(
        center_lo: f64,
        center_hi: f64,
        sigma: f64,
    ) -> Result<Self, ChannelError> {
        check_sigma(sigma)?;
        if !(center_lo.is_finite() && center_hi.is_finite() && center_lo <= center_hi) {
            return Err(ChannelError::InvalidCenter {
                lo: center_lo,
                hi: center_hi,
            });
        }
        Ok(LevelDistribution::GaussianTailsUniformCenter {
            center_lo,
            center_hi,
            sigma,
        })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            LevelDistribution::Gaussian { mean, .. } => mean,
            LevelDistribution::GaussianTailsUniformCenter {
                center_lo,
                center_hi,
                ..
            } => 0.5 * (center_lo + center_hi),
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            LevelDistribution::Gaussian { sigma, .. }
            | LevelDistribution::GaussianTailsUniformCenter { sigma, .. } => sigma,
        }
    }

    /// Same shape moved by `shift` volts with `sigma` replaced.
    pub(crate) fn shifted(&self, shift: f64, sigma: f64) -> Self {
        match *self {
            LevelDistribution::Gaussian { mean, .. } => LevelDistribution::Gaussian {
                mean: mean + shift,
                sigma,
            },
            LevelDistribution::GaussianTailsUniformCenter {
                center_lo,
                center_hi,
                ..
            } => LevelDistribution::GaussianTailsUniformCenter {
                center_lo: center_lo + shift,
                center_hi: center_hi + shift,
                sigma,
            },
        }
    }

    /// Height of the flat region, which is also the peak of both tails.
    fn plateau(center_lo: f64, center_hi: f64, sigma: f64) -> f64 {
        1.0 / (sigma * SQRT_2PI + (center_hi - center_lo))
    }

    /// Probability mass of the flat center (zero for the Gaussian family).
    pub fn center_mass(&self) -> f64 {
        match *self {
            LevelDistribution::Gaussian { .. } => 0.0,
            LevelDistribution::GaussianTailsUniformCenter {
                center_lo,
                center_hi,
                sigma,
            } => (center_hi - center_lo) * Self::plateau(center_lo, center_hi, sigma),
        }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        self.ln_pdf(v).exp()
    }

    /// Natural log of the density; finite far into the tails where `pdf`
    /// underflows.
    pub fn ln_pdf(&self, v: f64) -> f64 {
        match *self {
            LevelDistribution::Gaussian { mean, sigma } => {
                let z = (v - mean) / sigma;
                -0.5 * z * z - (sigma * SQRT_2PI).ln()
            }
            LevelDistribution::GaussianTailsUniformCenter {
                center_lo,
                center_hi,
                sigma,
            } => {
                let c = Self::plateau(center_lo, center_hi, sigma).ln();
                let d = if v < center_lo {
                    center_lo - v
                } else if v > center_hi {
                    v - center_hi
                } else {
                    0.0
                };
                let z = d / sigma;
                c - 0.5 * z * z
            }
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        match *self {
            LevelDistribution::Gaussian { mean, sigma } => normal_cdf((v - mean) / sigma),
            LevelDistribution::GaussianTailsUniformCenter {
                center_lo,
                center_hi,
                sigma,
            } => {
                let c = Self::plateau(center_lo, center_hi, sigma);
                let tail = c * sigma * SQRT_2PI;
                if v < center_lo {
                    tail * normal_cdf((v - center_lo) / sigma)
                } else if v <= center_hi {
                    0.5 * tail + c * (v - center_lo)
                } else {
                    1.0 - tail * normal_cdf((center_hi - v) / sigma)
                }
            }
        }
    }

    /// Survival function `1 - cdf(v)`, computed without cancellation in the
    /// upper tail.
    pub fn sf(&self, v: f64) -> f64 {
        match *self {
            LevelDistribution::Gaussian { mean, sigma } => normal_cdf((mean - v) / sigma),
            LevelDistribution::GaussianTailsUniformCenter {
                center_lo,
                center_hi,
                sigma,
            } => {
                let c = Self::plateau(center_lo, center_hi, sigma);
                let tail = c * sigma * SQRT_2PI;
                if v > center_hi {
                    tail * normal_cdf((center_hi - v) / sigma)
                } else if v >= center_lo {
                    0.5 * tail + c * (center_hi - v)
                } else {
                    1.0 - tail * normal_cdf((v - center_lo) / sigma)
                }
            }
        }
    }

    /// Probability of the half-open interval `(lo, hi]`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        // Take the difference on whichever side of the median keeps both
        // terms small.
        let m = self.mean();
        let p = if lo >= m {
            self.sf(lo) - self.sf(hi)
        } else if hi <= m {
            self.cdf(hi) - self.cdf(lo)
        } else {
            1.0 - self.cdf(lo) - self.sf(hi)
        };
        p.max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            LevelDistribution::Gaussian { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
            LevelDistribution::GaussianTailsUniformCenter {
                center_lo,
                center_hi,
                sigma,
            } => {
                let center = self.center_mass();
                let u: f64 = rng.random();
                if u < center {
                    center_lo + (center_hi - center_lo) * rng.random::<f64>()
                } else {
                    let z: f64 = StandardNormal.sample(rng);
                    // Each tail carries half of the remaining mass.
                    if u < center + 0.5 * (1.0 - center) {
                        center_lo - sigma * z.abs()
                    } else {
                        center_hi + sigma * z.abs()
                    }
                }
            }
        }
    }
}

fn check_sigma(sigma: f64) -> Result<(), ChannelError> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(ChannelError::InvalidSigma(sigma))
    }
}

/// Standard normal CDF through `erfc`, accurate in relative terms in the
/// lower tail.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Ordered set of level distributions, erased level first.
#[derive(Debug, Clone, PartialEq)]
pub struct FlashChannelModel {
    levels: Vec<LevelDistribution>,
}

impl FlashChannelModel {
    pub fn new(levels: Vec<LevelDistribution>) -> Result<Self, ChannelError> {
        if levels.len() < 2 {
            return Err(ChannelError::TooFewLevels(levels.len()));
        }
        for i in 1..levels.len() {
            if levels[i].mean() <= levels[i - 1].mean() {
                return Err(ChannelError::MeansNotIncreasing(i));
            }
        }
        Ok(FlashChannelModel { levels })
    }

    /// Gaussian levels from `(mean, sigma)` pairs.
    pub fn gaussian(params: &[(f64, f64)]) -> Result<Self, ChannelError> {
        let levels = params
            .iter()
            .map(|&(m, s)| LevelDistribution::gaussian(m, s))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(levels)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[LevelDistribution] {
        &self.levels
    }

    pub fn level(&self, level: usize) -> Result<&LevelDistribution, ChannelError> {
        self.levels.get(level).ok_or(ChannelError::LevelOutOfRange {
            level,
            levels: self.levels.len(),
        })
    }

    pub fn pdf_eval(&self, level: usize, v: f64) -> Result<f64, ChannelError> {
        Ok(self.level(level)?.pdf(v))
    }

    pub fn cdf_eval(&self, level: usize, v: f64) -> Result<f64, ChannelError> {
        Ok(self.level(level)?.cdf(v))
    }

    pub fn sample<R: Rng + ?Sized>(&self, level: usize, rng: &mut R) -> Result<f64, ChannelError> {
        Ok(self.level(level)?.sample(rng))
    }

    /// Every sigma multiplied by `scale`, locations unchanged.
    pub fn with_sigma_scale(&self, scale: f64) -> Result<Self, ChannelError> {
        check_sigma(scale)?;
        let levels = self
            .levels
            .iter()
            .map(|l| l.shifted(0.0, l.sigma() * scale))
            .collect();
        Self::new(levels)
    }

    /// Interval `[lo, hi]` holding all but a negligible amount of every
    /// level's mass.
    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .levels
            .iter()
            .map(|l| match *l {
                LevelDistribution::Gaussian { mean, sigma } => mean - 9.0 * sigma,
                LevelDistribution::GaussianTailsUniformCenter {
                    center_lo, sigma, ..
                } => center_lo - 9.0 * sigma,
            })
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .levels
            .iter()
            .map(|l| match *l {
                LevelDistribution::Gaussian { mean, sigma } => mean + 9.0 * sigma,
                LevelDistribution::GaussianTailsUniformCenter {
                    center_hi, sigma, ..
                } => center_hi + 9.0 * sigma,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Logarithmic-in-time retention surrogate.
///
/// Level `i` at time `t` is the initial level shifted down by
/// `mean_drift[i] * ln(1 + t/t0)` with sigma grown by
/// `sigma_growth[i] * ln(1 + t/t0)`. The coefficients are illustrative, not
/// measured device data.
#[derive(Debug, Clone, PartialEq)]
pub struct RetentionParams {
    initial: FlashChannelModel,
    mean_drift: Vec<f64>,
    sigma_growth: Vec<f64>,
    t0_months: f64,
}

impl RetentionParams {
    pub fn new(
        initial: FlashChannelModel,
        mean_drift: Vec<f64>,
        sigma_growth: Vec<f64>,
        t0_months: f64,
    ) -> Result<Self, ChannelError> {
        let n = initial.num_levels();
        if mean_drift.len() != n || sigma_growth.len() != n {
            return Err(ChannelError::InvalidRetention(format!(
                "expected {n} drift and growth coefficients, got {} and {}",
                mean_drift.len(),
                sigma_growth.len()
            )));
        }
        if mean_drift
            .iter()
            .chain(&sigma_growth)
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(ChannelError::InvalidRetention(
                "drift and growth coefficients must be finite and nonnegative".into(),
            ));
        }
        if !(t0_months.is_finite() && t0_months > 0.0) {
            return Err(ChannelError::InvalidRetention(format!(
                "t0 must be positive, got {t0_months}"
            )));
        }
        let params = RetentionParams {
            initial,
            mean_drift,
            sigma_growth,
            t0_months,
        };
        // Means and sigmas are affine in ln(1 + t/t0), so checking both ends
        // of the supported range covers every t in between.
        for t in [0.0, MAX_RETENTION_MONTHS] {
            let model = params.at(t).map_err(|e| {
                ChannelError::InvalidRetention(format!("model at t={t} months is invalid: {e}"))
            })?;
            let s0 = model.levels[0].sigma();
            if model.levels[1..].iter().any(|l| l.sigma() >= s0) {
                return Err(ChannelError::InvalidRetention(format!(
                    "erased level must have the largest sigma (violated at t={t} months)"
                )));
            }
        }
        Ok(params)
    }

    /// Default four-level surrogate: wide erased level, narrow programmed
    /// levels. Illustrative values only.
    pub fn default_mlc() -> Self {
        let initial =
            FlashChannelModel::gaussian(&[(1.0, 0.35), (2.6, 0.09), (3.3, 0.09), (4.0, 0.09)])
                .expect("default levels are valid");
        RetentionParams::new(
            initial,
            DEFAULT_MEAN_DRIFT.to_vec(),
            DEFAULT_SIGMA_GROWTH.to_vec(),
            DEFAULT_T0_MONTHS,
        )
        .expect("default retention parameters are valid")
    }

    pub fn initial(&self) -> &FlashChannelModel {
        &self.initial
    }

    pub fn mean_drift(&self) -> &[f64] {
        &self.mean_drift
    }

    pub fn sigma_growth(&self) -> &[f64] {
        &self.sigma_growth
    }

    pub fn t0_months(&self) -> f64 {
        self.t0_months
    }

    /// Channel model after `t` months of retention.
    pub fn retention_model(&self, t: f64) -> Result<FlashChannelModel, ChannelError> {
        if !(0.0..=MAX_RETENTION_MONTHS).contains(&t) {
            return Err(ChannelError::RetentionTimeOutOfRange(t));
        }
        self.at(t)
    }

    fn at(&self, t: f64) -> Result<FlashChannelModel, ChannelError> {
        let x = (t / self.t0_months).ln_1p();
        let levels = self
            .initial
            .levels
            .iter()
            .zip(self.mean_drift.iter().zip(&self.sigma_growth))
            .map(|(l, (&a, &b))| l.shifted(-a * x, l.sigma() + b * x))
            .collect();
        FlashChannelModel::new(levels)
    }
}

pub const DEFAULT_MEAN_DRIFT: [f64; 4] = [0.0, 0.06, 0.09, 0.12];
pub const DEFAULT_SIGMA_GROWTH: [f64; 4] = [0.0, 0.02, 0.025, 0.03];
pub const DEFAULT_T0_MONTHS: f64 = 1.0;
