use flashmmi::channel::{FlashChannelModel, LevelDistribution, RetentionParams};
use flashmmi::quantizer::{build_transition_matrix, hard_thresholds, optimize_mmi, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Kolmogorov-Smirnov distance between `n` draws and the analytic CDF.
fn ks_statistic(dist: &LevelDistribution, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn ks_gaussian() {
    let d = LevelDistribution::gaussian(2.0, 0.1).unwrap();
    assert!(ks_statistic(&d, 1_000_000, 11) < 0.002);
}

#[test]
fn ks_tails_uniform_center() {
    let d = LevelDistribution::tails_uniform_center(1.0, 2.0, 0.1).unwrap();
    assert!(ks_statistic(&d, 1_000_000, 12) < 0.002);
}

/// Largest per-row total-variation distance between empirical region
/// frequencies of `cells` draws per level and the analytic matrix.
fn max_row_tv(
    model: &FlashChannelModel,
    wl: &flashmmi::quantizer::WordLineVoltages,
    cells: usize,
) -> f64 {
    let t = build_transition_matrix(model, wl);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..model.num_levels())
        .map(|level| {
            let mut counts = vec![0usize; wl.num_regions()];
            for _ in 0..cells {
                counts[wl.region(model.sample(level, &mut rng).unwrap())] += 1;
            }
            0.5 * counts
                .iter()
                .zip(t.row(level))
                .map(|(&c, &p)| (c as f64 / cells as f64 - p).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[test]
fn empirical_regions_match_transition_matrix() {
    let params = RetentionParams::default_mlc();
    for t in [1.0, 6.0] {
        let model = params.retention_model(t).unwrap();
        let mmi = optimize_mmi(&model, 6, &SearchConfig::default()).unwrap();
        assert!(max_row_tv(&model, &mmi.voltages, 1_000_000) < 0.005);
        let hard = hard_thresholds(&model).unwrap();
        assert!(max_row_tv(&model, &hard, 1_000_000) < 0.005);
    }
}

#[test]
fn retention_ordering_holds_over_supported_range() {
    let params = RetentionParams::default_mlc();
    let mut prev_sigmas = [0.0; 4];
    for i in 0..=240 {
        let t = i as f64 * 0.5;
        let model = params.retention_model(t).unwrap();
        let means: Vec<f64> = model.levels().iter().map(|l| l.mean()).collect();
        assert!(means.windows(2).all(|w| w[0] < w[1]), "t={t}");
        for (s, l) in prev_sigmas.iter_mut().zip(model.levels()) {
            assert!(l.sigma() >= *s);
            *s = l.sigma();
        }
    }
    assert!(params.retention_model(120.5).is_err());
    assert!(params.retention_model(-1.0).is_err());
}

#[test]
fn erased_level_is_twice_as_wide_at_six_months() {
    let m = RetentionParams::default_mlc().retention_model(6.0).unwrap();
    assert!(m.levels()[0].sigma() > 2.0 * m.levels()[3].sigma());
}
