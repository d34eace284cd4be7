//! Maximum mutual-information threshold search.
//!
//! Cyclic coordinate ascent: each threshold in turn is moved to the best
//! position between its neighbours while the others stay fixed. The 1-D
//! maximization is a coarse scan followed by golden-section refinement of the
//! best scan cell. Several starting points are run and the best result kept.

use super::{model_mutual_information, QuantizerError, WordLineVoltages};
use crate::channel::FlashChannelModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Thresholds are kept at least this far apart inside a coordinate search.
const SEPARATION: f64 = 1e-6;
/// Gaps below this count as a collapsed pair.
const COLLAPSE: f64 = 1e-9;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Search interval; `None` uses the model's effective support.
    pub bracket: Option<(f64, f64)>,
    /// Number of starting points (the first is deterministic, the rest random).
    pub starts: usize,
    pub max_sweeps: usize,
    /// Stop once a full sweep gains less than this many bits.
    pub gain_tol: f64,
    /// Golden-section interval width at which a coordinate is considered
    /// settled (volts).
    pub x_tol: f64,
    /// Points in the coarse scan preceding each golden-section search.
    pub scan_points: usize,
    pub seed: u64,
    /// Fail with [`QuantizerError::NotConverged`] instead of returning the
    /// best unconverged point.
    pub require_convergence: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            bracket: None,
            starts: 8,
            max_sweeps: 200,
            gain_tol: 1e-9,
            x_tol: 1e-9,
            scan_points: 16,
            seed: 0x5eed,
            require_convergence: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmiResult {
    pub voltages: WordLineVoltages,
    pub mi_bits: f64,
    /// Sweeps used by the winning start.
    pub sweeps: usize,
    pub converged: bool,
    /// Adjacent threshold pairs that ended up pinned together.
    pub collapsed_pairs: usize,
}

/// Word-line voltages maximizing the uniform-input mutual information of the
/// `reads`-threshold channel.
pub fn optimize_mmi(
    model: &FlashChannelModel,
    reads: usize,
    search: &SearchConfig,
) -> Result<MmiResult, QuantizerError> {
    if reads == 0 {
        return Err(QuantizerError::InvalidReadCount {
            reads,
            levels: model.num_levels(),
            reason: "at least one read is required",
        });
    }
    let (lo, hi) = search.bracket.unwrap_or_else(|| model.support());
    if !(lo.is_finite() && hi.is_finite()) || hi - lo <= 2.0 * SEPARATION * (reads + 1) as f64 {
        return Err(QuantizerError::InfeasibleBracket { lo, hi, reads });
    }

    let starts = starting_points(model, reads, lo, hi, search);
    let runs: Vec<Run> = starts
        .into_par_iter()
        .map(|q| ascend(model, q, lo, hi, search))
        .collect();

    // Max MI, ties broken lexicographically on the thresholds, so the result
    // does not depend on the order the starts finish in.
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
        .expect("at least one start");

    if search.require_convergence && !best.converged {
        return Err(QuantizerError::NotConverged {
            sweeps: best.sweeps,
            last_gain: best.last_gain,
        });
    }
    let collapsed_pairs = best
        .q
        .windows(2)
        .filter(|w| w[1] - w[0] <= 2.0 * SEPARATION)
        .count();
    let voltages = WordLineVoltages::new(best.q)?;
    let mi_bits = model_mutual_information(model, &voltages);
    Ok(MmiResult {
        voltages,
        mi_bits,
        sweeps: best.sweeps,
        converged: best.converged,
        collapsed_pairs,
    })
}

struct Run {
    q: Vec<f64>,
    mi: f64,
    sweeps: usize,
    converged: bool,
    last_gain: f64,
}

impl Run {
    fn better_than(&self, other: &Run) -> bool {
        match self.mi.partial_cmp(&other.mi) {
            Some(std::cmp::Ordering::Greater) => true,
            Some(std::cmp::Ordering::Less) => false,
            _ => self
                .q
                .iter()
                .zip(&other.q)
                .find(|(a, b)| a != b)
                .is_some_and(|(a, b)| a < b),
        }
    }
}

fn starting_points(
    model: &FlashChannelModel,
    reads: usize,
    lo: f64,
    hi: f64,
    search: &SearchConfig,
) -> Vec<Vec<f64>> {
    let levels = model.levels();
    let first = &levels[0];
    let last = &levels[levels.len() - 1];
    let span_lo = (first.mean() - first.sigma()).max(lo + SEPARATION);
    let span_hi = (last.mean() + last.sigma()).min(hi - SEPARATION);

    let mut starts = Vec::with_capacity(search.starts.max(1));
    // Deterministic start: evenly spaced between the outer level means.
    let a = first.mean().max(lo + SEPARATION);
    let b = last.mean().min(hi - SEPARATION);
    starts.push(
        (1..=reads)
            .map(|j| a + (b - a) * j as f64 / (reads + 1) as f64)
            .collect(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    while starts.len() < search.starts.max(1) {
        let mut q: Vec<f64> = (0..reads)
            .map(|_| span_lo + (span_hi - span_lo) * rng.random::<f64>())
            .collect();
        q.sort_by(f64::total_cmp);
        separate(&mut q, lo, hi);
        starts.push(q);
    }
    starts
}

/// Pushes apart thresholds closer than `COLLAPSE`. Returns whether anything
/// moved.
fn separate(q: &mut [f64], lo: f64, hi: f64) -> bool {
    let mut moved = false;
    for j in 1..q.len() {
        if q[j] - q[j - 1] < COLLAPSE {
            q[j] = q[j - 1] + SEPARATION;
            moved = true;
        }
    }
    // Anything pushed past the upper end is folded back down.
    if let Some(&top) = q.last() {
        if top > hi - SEPARATION {
            let n = q.len();
            for j in (0..n).rev() {
                let cap = hi - SEPARATION * (n - j) as f64;
                if q[j] > cap {
                    q[j] = cap;
                    moved = true;
                }
            }
        }
    }
    debug_assert!(q.first().is_none_or(|&x| x > lo));
    moved
}

fn ascend(model: &FlashChannelModel, mut q: Vec<f64>, lo: f64, hi: f64, cfg: &SearchConfig) -> Run {
    let mut mi = eval(model, &q);
    let mut last_gain = f64::INFINITY;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let before = mi;
        for j in 0..q.len() {
            let left = if j == 0 { lo } else { q[j - 1] } + SEPARATION;
            let right = if j + 1 == q.len() { hi } else { q[j + 1] } - SEPARATION;
            if right <= left {
                continue;
            }
            let mut trial = q.clone();
            let (x, f) = maximize_coordinate(
                |x| {
                    trial[j] = x;
                    eval(model, &trial)
                },
                left,
                right,
                cfg,
            );
            if f > mi {
                q[j] = x;
                mi = f;
            }
        }
        separate(&mut q, lo, hi);
        mi = eval(model, &q);
        last_gain = mi - before;
        if last_gain < cfg.gain_tol {
            converged = true;
            break;
        }
    }
    Run {
        q,
        mi,
        sweeps,
        converged,
        last_gain,
    }
}

fn eval(model: &FlashChannelModel, q: &[f64]) -> f64 {
    model_mutual_information(model, &WordLineVoltages(q.to_vec()))
}

/// Maximizes `f` on `[a, b]`: coarse scan, then golden-section search inside
/// the scan cells adjacent to the best sample.
fn maximize_coordinate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    cfg: &SearchConfig,
) -> (f64, f64) {
    let n = cfg.scan_points.max(2);
    let step = (b - a) / (n - 1) as f64;
    let (mut best_i, mut best_f) = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let fx = f(a + step * i as f64);
        if fx > best_f {
            best_i = i;
            best_f = fx;
        }
    }
    let best_x = a + step * best_i as f64;
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = (a + step * (best_i + 1) as f64).min(b);
    let (x, fx) = golden_section_max(&mut f, lo, hi, cfg.x_tol);
    if fx >= best_f {
        (x, fx)
    } else {
        (best_x, best_f)
    }
}

fn golden_section_max(
    f: &mut impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(&mut |x: f64| -(x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn coordinate_search_escapes_local_peak() {
        // Two bumps; the coarse scan must land on the taller one.
        let f =
            |x: f64| (-(x - 0.2).powi(2) / 0.001).exp() + 2.0 * (-(x - 0.8).powi(2) / 0.001).exp();
        let (x, _) = maximize_coordinate(f, 0.0, 1.0, &SearchConfig::default());
        assert!((x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn two_equal_gaussians_midpoint() {
        let m = FlashChannelModel::gaussian(&[(0.3, 0.4), (1.7, 0.4)]).unwrap();
        let r = optimize_mmi(&m, 1, &SearchConfig::default()).unwrap();
        assert!((r.voltages.as_slice()[0] - 1.0).abs() < 1e-4);
        assert!(r.converged);
        assert_eq!(r.mi_bits, model_mutual_information(&m, &r.voltages));
    }

    #[test]
    fn zero_reads_and_bad_bracket_rejected() {
        let m = FlashChannelModel::gaussian(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            optimize_mmi(&m, 0, &SearchConfig::default()),
            Err(QuantizerError::InvalidReadCount { .. })
        ));
        let cfg = SearchConfig {
            bracket: Some((1.0, 1.0)),
            ..SearchConfig::default()
        };
        assert!(matches!(
            optimize_mmi(&m, 2, &cfg),
            Err(QuantizerError::InfeasibleBracket { .. })
        ));
    }

    #[test]
    fn non_convergence_is_reported() {
        let m = FlashChannelModel::gaussian(&[(0.0, 0.35), (1.0, 0.35), (2.0, 0.35), (3.0, 0.35)])
            .unwrap();
        let cfg = SearchConfig {
            max_sweeps: 1,
            gain_tol: 0.0,
            ..SearchConfig::default()
        };
        assert!(matches!(
            optimize_mmi(&m, 3, &cfg),
            Err(QuantizerError::NotConverged { sweeps: 1, .. })
        ));
        let relaxed = SearchConfig {
            require_convergence: false,
            ..cfg
        };
        let r = optimize_mmi(&m, 3, &relaxed).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn separation_unpins_collapsed_thresholds() {
        let mut q = vec![0.0, 0.0, 0.0];
        assert!(separate(&mut q, -1.0, 1.0));
        assert!(q.windows(2).all(|w| w[1] > w[0]));
        let mut top = vec![1.0, 1.0];
        separate(&mut top, -1.0, 1.0);
        assert!(top[0] < top[1] && top[1] < 1.0);
    }
}
