//! Constant pdf-ratio and hard (pdf-crossing) threshold placement.

use super::{QuantizerError, WordLineVoltages};
use crate::channel::FlashChannelModel;

/// Residual bound on `ln f_i(q) - ln f_{i+1}(q) - target` at a solution.
const LOG_RATIO_TOL: f64 = 1e-6;

/// Voltage between the means of `lower` and `lower + 1` where
/// `ln f_lower(q) - ln f_{lower+1}(q) = target`, by bisection.
pub fn log_ratio_crossing(
    model: &FlashChannelModel,
    lower: usize,
    target: f64,
) -> Result<f64, QuantizerError> {
    let upper = lower + 1;
    let f = model.level(lower)?;
    let g = model.level(upper)?;
    let residual = |q: f64| f.ln_pdf(q) - g.ln_pdf(q) - target;
    let no_solution = QuantizerError::NoRatioSolution {
        lower,
        upper,
        target,
    };

    // The log-ratio decreases from the lower mean to the upper mean.
    let (mut a, mut b) = (f.mean(), g.mean());
    let (ra, rb) = (residual(a), residual(b));
    if ra < 0.0 || rb > 0.0 {
        return Err(no_solution);
    }
    if ra == 0.0 {
        return Ok(a);
    }
    if rb == 0.0 {
        return Ok(b);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let r = residual(mid);
        if r == 0.0 {
            return Ok(mid);
        }
        if r > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (q, r) = if residual(a).abs() <= residual(b).abs() {
        (a, residual(a))
    } else {
        (b, residual(b))
    };
    // A sign change between adjacent doubles is as close as f64 gets; for
    // extremely narrow levels that can still leave a residual above the
    // tolerance.
    let collapsed = 0.5 * (a + b) <= a || 0.5 * (a + b) >= b;
    if r.abs() > LOG_RATIO_TOL && !collapsed {
        return Err(no_solution);
    }
    Ok(q)
}

/// Thresholds where adjacent level densities have ratio `ratio` or `1/ratio`.
///
/// With `reads == N - 1` only the crossings (`ratio = 1`) are returned. With
/// `reads == 2(N - 1)` each adjacent pair `(i, i+1)` contributes
/// `q- < q+` with `f_i(q-)/f_{i+1}(q-) = ratio` and `f_i(q+)/f_{i+1}(q+) = 1/ratio`.
pub fn constant_ratio_thresholds(
    model: &FlashChannelModel,
    ratio: f64,
    reads: usize,
) -> Result<WordLineVoltages, QuantizerError> {
    if !(ratio.is_finite() && ratio >= 1.0) {
        return Err(QuantizerError::InvalidRatio(ratio));
    }
    let pairs = model.num_levels() - 1;
    let q = if reads == pairs {
        (0..pairs)
            .map(|i| log_ratio_crossing(model, i, 0.0))
            .collect::<Result<Vec<_>, _>>()?
    } else if reads == 2 * pairs {
        let ln_r = ratio.ln();
        let mut q = Vec::with_capacity(reads);
        for i in 0..pairs {
            q.push(log_ratio_crossing(model, i, ln_r)?);
            q.push(log_ratio_crossing(model, i, -ln_r)?);
        }
        q
    } else {
        return Err(QuantizerError::InvalidReadCount {
            reads,
            levels: model.num_levels(),
            reason: "constant-ratio placement needs N-1 or 2(N-1) reads",
        });
    };
    WordLineVoltages::new(q).map_err(|_| QuantizerError::NonMonotone(ratio))
}

/// Conventional hard read: one threshold at each adjacent-pdf crossing.
pub fn hard_thresholds(model: &FlashChannelModel) -> Result<WordLineVoltages, QuantizerError> {
    constant_ratio_thresholds(model, 1.0, model.num_levels() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RetentionParams;

    #[test]
    fn equal_sigma_closed_form() {
        let (m1, m2, s) = (1.0, 2.2, 0.3);
        let model = FlashChannelModel::gaussian(&[(m1, s), (m2, s)]).unwrap();
        for r in [1.5, 2.0, 7.0, 15.0] {
            let wl = constant_ratio_thresholds(&model, r, 2).unwrap();
            let offset = s * s * f64::ln(r) / (m2 - m1);
            let mid = 0.5 * (m1 + m2);
            assert!((wl.as_slice()[0] - (mid - offset)).abs() < 1e-6);
            assert!((wl.as_slice()[1] - (mid + offset)).abs() < 1e-6);
        }
    }

    #[test]
    fn hard_is_symmetric_crossing() {
        let model = FlashChannelModel::gaussian(&[(0.0, 0.2), (1.0, 0.2)]).unwrap();
        let wl = hard_thresholds(&model).unwrap();
        assert!((wl.as_slice()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hard_equals_ratio_one() {
        let model = RetentionParams::default_mlc().retention_model(6.0).unwrap();
        let hard = hard_thresholds(&model).unwrap();
        let r1 = constant_ratio_thresholds(&model, 1.0, 3).unwrap();
        assert_eq!(hard, r1);
        for (i, q) in hard.as_slice().iter().enumerate() {
            assert!(*q > model.levels()[i].mean() && *q < model.levels()[i + 1].mean());
        }
    }

    #[test]
    fn residuals_within_tolerance() {
        let model = RetentionParams::default_mlc().retention_model(3.0).unwrap();
        for r in [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 15.0] {
            let wl = constant_ratio_thresholds(&model, r, 6).unwrap();
            for (k, &q) in wl.as_slice().iter().enumerate() {
                let i = k / 2;
                let want = if k % 2 == 0 { r.ln() } else { -r.ln() };
                let lr = model.levels()[i].ln_pdf(q) - model.levels()[i + 1].ln_pdf(q);
                assert!((lr - want).abs() <= 1e-6, "R={r} k={k}");
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let model = RetentionParams::default_mlc().initial().clone();
        assert_eq!(
            constant_ratio_thresholds(&model, 0.5, 6),
            Err(QuantizerError::InvalidRatio(0.5))
        );
        assert!(matches!(
            constant_ratio_thresholds(&model, 2.0, 4),
            Err(QuantizerError::InvalidReadCount { .. })
        ));
        // Pairs collapse at R = 1 with two reads per crossing.
        assert_eq!(
            constant_ratio_thresholds(&model, 1.0, 6),
            Err(QuantizerError::NonMonotone(1.0))
        );
        // Ratio too extreme to be reached between the means.
        assert!(matches!(
            constant_ratio_thresholds(&model, 1e300, 6),
            Err(QuantizerError::NoRatioSolution { .. })
        ));
    }
}
