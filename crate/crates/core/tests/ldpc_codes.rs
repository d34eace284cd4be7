use flashmmi::ldpc::{
    check_update, construct_peg_ace, CheckRule, ConstructParams, DegreeDistribution,
    FloodingDecoder, LayeredDecoder, LdpcCode, SparseMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Column `c` is the binary expansion of `c + 1`.
fn hamming_code() -> LdpcCode {
    let entries = (0..7).flat_map(|c| {
        (0..3)
            .filter(move |r| (c + 1) >> r & 1 == 1)
            .map(move |r| (r, c))
    });
    LdpcCode::from_h(SparseMatrix::from_entries(3, 7, entries).unwrap()).unwrap()
}

/// Textbook systematic generator for that parity-check matrix: data at
/// 1-based positions 3, 5, 6, 7 and parity at 1, 2, 4.
fn textbook_codeword(d: [u8; 4]) -> Vec<u8> {
    let [d3, d5, d6, d7] = d;
    let p1 = d3 ^ d5 ^ d7;
    let p2 = d3 ^ d6 ^ d7;
    let p4 = d5 ^ d6 ^ d7;
    vec![p1, p2, d3, p4, d5, d6, d7]
}

fn all_codewords() -> Vec<Vec<u8>> {
    (0..16u8)
        .map(|m| textbook_codeword([m & 1, m >> 1 & 1, m >> 2 & 1, m >> 3 & 1]))
        .collect()
}

/// Maximum-likelihood codeword by enumeration: minimizes the sum of the
/// LLRs over positions set to one.
fn ml_decode(llrs: &[f64]) -> Vec<u8> {
    all_codewords()
        .into_iter()
        .min_by(|a, b| {
            let cost = |c: &Vec<u8>| {
                c.iter()
                    .zip(llrs)
                    .filter(|(&b, _)| b == 1)
                    .map(|(_, l)| l)
                    .sum::<f64>()
            };
            cost(a).partial_cmp(&cost(b)).unwrap()
        })
        .unwrap()
}

fn llrs_for(codeword: &[u8], magnitude: f64) -> Vec<f64> {
    codeword
        .iter()
        .map(|&b| if b == 0 { magnitude } else { -magnitude })
        .collect()
}

#[test]
fn hamming_encoder_matches_textbook_generator() {
    let code = hamming_code();
    assert_eq!((code.n(), code.k()), (7, 4));
    let words = all_codewords();
    for w in &words {
        assert!(code.is_codeword(w));
        let msg: Vec<u8> = code.message_positions().iter().map(|&p| w[p]).collect();
        assert_eq!(&code.encode(&msg).unwrap(), w);
    }
    let mut encoded: Vec<Vec<u8>> = (0..16u8)
        .map(|m| {
            code.encode(&(0..4).map(|i| m >> i & 1).collect::<Vec<_>>())
                .unwrap()
        })
        .collect();
    encoded.sort();
    let mut sorted = words.clone();
    sorted.sort();
    assert_eq!(encoded, sorted);
}

#[test]
fn layered_bp_corrects_every_single_flip() {
    let code = hamming_code();
    let mut dec = LayeredDecoder::new(code.h(), CheckRule::SumProduct);
    for sent in all_codewords() {
        for flip in 0..7 {
            let mut llrs = llrs_for(&sent, 2.0);
            llrs[flip] *= -0.5;
            assert_eq!(ml_decode(&llrs), sent);
            let out = dec.decode(&llrs, 50);
            assert!(out.converged, "flip {flip}");
            assert_eq!(out.hard_bits, sent, "flip {flip}");
        }
    }
}

#[test]
fn converged_bp_rarely_departs_from_ml_on_noisy_hamming_frames() {
    let code = hamming_code();
    let mut dec = LayeredDecoder::new(code.h(), CheckRule::SumProduct);
    let words = all_codewords();
    let sigma: f64 = 0.6;
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut converged, mut differ) = (0, 0);
    for _ in 0..20_000 {
        let sent = &words[rng.random_range(0..16)];
        let llrs: Vec<f64> = sent
            .iter()
            .map(|&b| {
                let y = if b == 0 { 1.0 } else { -1.0 } + noise.sample(&mut rng);
                2.0 * y / (sigma * sigma)
            })
            .collect();
        let out = dec.decode(&llrs, 50);
        if out.converged {
            converged += 1;
            assert!(code.is_codeword(&out.hard_bits));
            differ += usize::from(out.hard_bits != ml_decode(&llrs));
        }
    }
    assert!(converged > 19_000);
    // The Hamming graph is full of 4-cycles, so BP is not ML; it departs on
    // a small fraction of frames.
    assert!(differ * 100 < converged, "{differ} of {converged}");
}

#[test]
fn bp_can_settle_on_a_non_ml_codeword() {
    let llrs = [
        5.543259734014643,
        -2.216926833309766,
        3.0412276536713727,
        3.0646300056311797,
        -2.228351774533735,
        -4.962821365617062,
        3.1609783531063544,
    ];
    let code = hamming_code();
    let layered = LayeredDecoder::new(code.h(), CheckRule::SumProduct).decode(&llrs, 50);
    let flooding = FloodingDecoder::new(code.h(), CheckRule::SumProduct).decode(&llrs, 50);
    assert!(layered.converged && flooding.converged);
    assert_eq!(layered.hard_bits, flooding.hard_bits);
    assert_ne!(layered.hard_bits, ml_decode(&llrs));
}

#[test]
fn noiseless_round_trip_on_a_constructed_code() {
    let dd = DegreeDistribution::preset("code1").unwrap();
    let params = ConstructParams {
        ace_depth: 3,
        ace_eta: 1,
        ..ConstructParams::default()
    };
    let (code, _) = construct_peg_ace(&dd, 2048, 1848, &params).unwrap();
    let mut dec = LayeredDecoder::new(code.h(), CheckRule::SumProduct);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let msg: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
        let cw = code.encode(&msg).unwrap();
        assert!(code.is_codeword(&cw));
        let out = dec.decode(&llrs_for(&cw, 5.0), 50);
        assert!(out.converged && out.iterations_used <= 1);
        assert_eq!(out.hard_bits, cw);
        let back: Vec<u8> = code
            .message_positions()
            .iter()
            .map(|&p| out.hard_bits[p])
            .collect();
        assert_eq!(back, msg);
    }
}

#[test]
fn code2_preset_has_no_degree_three_columns() {
    let dd = DegreeDistribution::preset("code2").unwrap();
    let params = ConstructParams {
        ace_depth: 4,
        ace_eta: 2,
        seed: 1,
        max_retries: 4,
    };
    let (code, report) = construct_peg_ace(&dd, 2048, 1848, &params).unwrap();
    assert!(code.girth().unwrap() >= 6);
    assert_eq!(code.h().num_rows(), 200);
    assert!(code.column_degrees().iter().all(|&d| d != 3));
    assert_eq!(report.max_degree_deviation(), 0);
    assert!(report.min_cycle_ace.unwrap_or(u32::MAX) >= 2);
    let again = LdpcCode::from_alist(&code.to_alist()).unwrap();
    assert_eq!(again.h(), code.h());
}

#[test]
fn full_scale_parameters_are_accepted() {
    // Only the argument checks: the full construction is too slow for a
    // unit test.
    let dd = DegreeDistribution::preset("code1").unwrap();
    let m = 9118 - 8225;
    let counts = flashmmi::ldpc::apportion(dd.variable(), 9118);
    assert_eq!(counts.values().sum::<usize>(), 9118);
    assert!(counts.keys().all(|&d| d <= m));
}

fn small_code(seed: u64) -> LdpcCode {
    let dd = DegreeDistribution::new(
        [(2, 0.2), (3, 0.8)].into_iter().collect(),
        [(7, 0.4), (8, 0.6)].into_iter().collect(),
        1.0 - 2.8 / 7.6,
    )
    .unwrap();
    let params = ConstructParams {
        ace_depth: 3,
        ace_eta: 0,
        seed,
        max_retries: 8,
    };
    construct_peg_ace(&dd, 96, 60, &params).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codeword_sums_are_codewords(seed in 0u64..1000) {
        let code = small_code(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || (0..code.k()).map(|_| rng.random::<bool>() as u8).collect::<Vec<u8>>();
        let (a, b) = (draw(), draw());
        let sum: Vec<u8> = code.encode(&a).unwrap().iter().zip(code.encode(&b).unwrap()).map(|(x, y)| x ^ y).collect();
        prop_assert!(code.is_codeword(&sum));
        let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(code.encode(&ab).unwrap(), sum);
    }

    #[test]
    fn layered_and_flooding_agree_when_both_converge(seed in 0u64..10_000, sigma in 0.5f64..0.9) {
        let code = small_code(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msg: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
        let cw = code.encode(&msg).unwrap();
        let noise = Normal::new(0.0, sigma).unwrap();
        let llrs: Vec<f64> = cw
            .iter()
            .map(|&b| 2.0 * (if b == 0 { 1.0 } else { -1.0 } + noise.sample(&mut rng)) / (sigma * sigma))
            .collect();
        let a = LayeredDecoder::new(code.h(), CheckRule::SumProduct).decode(&llrs, 100);
        let b = FloodingDecoder::new(code.h(), CheckRule::SumProduct).decode(&llrs, 200);
        if a.converged {
            prop_assert!(code.is_codeword(&a.hard_bits));
        }
        if a.converged && b.converged {
            prop_assert_eq!(a.hard_bits, b.hard_bits);
        }
    }

    #[test]
    fn check_update_commutes_with_permutation(
        inputs in prop::collection::vec(-20.0f64..20.0, 2..12),
        seed in any::<u64>(),
        min_sum in any::<bool>(),
    ) {
        let rule = if min_sum { CheckRule::MinSum } else { CheckRule::SumProduct };
        let d = inputs.len();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..d).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<f64> = perm.iter().map(|&p| inputs[p]).collect();
        let mut out = vec![0.0; d];
        let mut out_p = vec![0.0; d];
        check_update(rule, &inputs, &mut out);
        check_update(rule, &permuted, &mut out_p);
        for (i, &p) in perm.iter().enumerate() {
            prop_assert!((out_p[i] - out[p]).abs() <= 1e-9 * (1.0 + out[p].abs()));
        }
    }
}
