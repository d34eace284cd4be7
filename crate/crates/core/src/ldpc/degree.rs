//! Node-perspective degree distributions.

use super::LdpcError;
use serde::Deserialize;
use std::collections::BTreeMap;

const SUM_TOL: f64 = 1e-9;
/// Allowed gap between the stated design rate and the rate implied by the
/// average degrees.
pub const RATE_TOL: f64 = 0.005;

/// Built-in rate-0.9021 distributions, by name: `code1` (maximum variable
/// degree 19), `code2` (`code1` after [`DegreeDistribution::adjust_for_quantization`])
/// and `code3` (maximum variable degree 24).
pub const PRESETS: [(&str, &str); 3] = [
    (
        "code1",
        include_str!("../../../../configs/degrees/code1.toml"),
    ),
    (
        "code2",
        include_str!("../../../../configs/degrees/code2.toml"),
    ),
    (
        "code3",
        include_str!("../../../../configs/degrees/code3.toml"),
    ),
];

/// Fractions of variable and check nodes of each degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    variable: BTreeMap<usize, f64>,
    check: BTreeMap<usize, f64>,
    design_rate: f64,
}

impl DegreeDistribution {
    pub fn new(
        variable: BTreeMap<usize, f64>,
        check: BTreeMap<usize, f64>,
        design_rate: f64,
    ) -> Result<Self, LdpcError> {
        let strip = |m: BTreeMap<usize, f64>| -> BTreeMap<usize, f64> {
            m.into_iter().filter(|&(_, f)| f != 0.0).collect()
        };
        let dd = DegreeDistribution {
            variable: strip(variable),
            check: strip(check),
            design_rate,
        };
        for (name, map) in [("variable", &dd.variable), ("check", &dd.check)] {
            if map.is_empty() {
                return Err(LdpcError::Degree(format!("{name} distribution is empty")));
            }
            if map
                .iter()
                .any(|(&d, &f)| d == 0 || !(f.is_finite() && f >= 0.0))
            {
                return Err(LdpcError::Degree(format!(
                    "{name} distribution has a zero degree or an invalid fraction"
                )));
            }
            let sum: f64 = map.values().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(LdpcError::Degree(format!(
                    "{name} fractions sum to {sum}, expected 1"
                )));
            }
        }
        let implied = dd.implied_rate();
        if !(design_rate > 0.0 && design_rate < 1.0) || (implied - design_rate).abs() > RATE_TOL {
            return Err(LdpcError::Degree(format!(
                "design rate {design_rate} inconsistent with implied rate {implied:.5}"
            )));
        }
        Ok(dd)
    }

    /// Parses the config form:
    ///
    /// ```toml
    /// design_rate = 0.9021
    /// [variable]
    /// 2 = 0.08
    /// 3 = 0.92
    /// [check]
    /// 30 = 1.0
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, LdpcError> {
        let raw: RawDegrees =
            toml::from_str(text).map_err(|e| LdpcError::Degree(format!("bad degree file: {e}")))?;
        raw.into_distribution()
    }

    pub fn preset(name: &str) -> Result<Self, LdpcError> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| LdpcError::Degree(format!("unknown preset `{name}`")))?;
        Self::from_toml(text)
    }

    pub fn variable(&self) -> &BTreeMap<usize, f64> {
        &self.variable
    }

    pub fn check(&self) -> &BTreeMap<usize, f64> {
        &self.check
    }

    pub fn design_rate(&self) -> f64 {
        self.design_rate
    }

    pub fn max_variable_degree(&self) -> usize {
        *self.variable.keys().next_back().expect("nonempty")
    }

    pub fn avg_variable_degree(&self) -> f64 {
        average(&self.variable)
    }

    pub fn avg_check_degree(&self) -> f64 {
        average(&self.check)
    }

    /// `1 - avg_var / avg_check`.
    pub fn implied_rate(&self) -> f64 {
        1.0 - self.avg_variable_degree() / self.avg_check_degree()
    }

    /// Fraction of edges attached to variable nodes of each degree.
    pub fn variable_edge_fractions(&self) -> BTreeMap<usize, f64> {
        edge_perspective(&self.variable)
    }

    pub fn check_edge_fractions(&self) -> BTreeMap<usize, f64> {
        edge_perspective(&self.check)
    }

    /// Moves all degree-3 variable nodes to degree 4. The check degrees are
    /// all raised by the same (possibly fractional) amount so that the rate
    /// implied by the averages is unchanged; a fractional increment is
    /// realized by splitting each check degree between its floor and ceiling.
    pub fn adjust_for_quantization(&self) -> DegreeDistribution {
        let Some(&moved) = self.variable.get(&3) else {
            return self.clone();
        };
        let mut variable = self.variable.clone();
        variable.remove(&3);
        *variable.entry(4).or_insert(0.0) += moved;

        let scale = average(&variable) / self.avg_variable_degree();
        let delta = self.avg_check_degree() * (scale - 1.0);
        let whole = delta.floor();
        let frac = delta - whole;
        let mut check = BTreeMap::new();
        for (&d, &f) in &self.check {
            let base = d + whole as usize;
            *check.entry(base).or_insert(0.0) += f * (1.0 - frac);
            if frac > 0.0 {
                *check.entry(base + 1).or_insert(0.0) += f * frac;
            }
        }
        check.retain(|_, f| *f > 0.0);
        DegreeDistribution {
            variable,
            check,
            design_rate: self.design_rate,
        }
    }

    pub fn to_toml(&self) -> String {
        let mut out = format!("design_rate = {}\n\n[variable]\n", self.design_rate);
        for (d, f) in &self.variable {
            out.push_str(&format!("{d} = {f}\n"));
        }
        out.push_str("\n[check]\n");
        for (d, f) in &self.check {
            out.push_str(&format!("{d} = {f}\n"));
        }
        out
    }
}

fn average(m: &BTreeMap<usize, f64>) -> f64 {
    m.iter().map(|(&d, &f)| d as f64 * f).sum()
}

fn edge_perspective(m: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let total = average(m);
    m.iter().map(|(&d, &f)| (d, d as f64 * f / total)).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDegrees {
    design_rate: f64,
    variable: BTreeMap<String, f64>,
    check: BTreeMap<String, f64>,
}

impl RawDegrees {
    fn into_distribution(self) -> Result<DegreeDistribution, LdpcError> {
        let keyed = |m: BTreeMap<String, f64>| -> Result<BTreeMap<usize, f64>, LdpcError> {
            m.into_iter()
                .map(|(k, v)| {
                    k.trim().parse::<usize>().map(|d| (d, v)).map_err(|_| {
                        LdpcError::Degree(format!("degree key `{k}` is not an integer"))
                    })
                })
                .collect()
        };
        DegreeDistribution::new(keyed(self.variable)?, keyed(self.check)?, self.design_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        pairs.iter().copied().collect()
    }

    fn example() -> DegreeDistribution {
        // avg var = 0.4 + 1.5 + 5.7 = 7.6; pick a check degree giving rate 0.8.
        DegreeDistribution::new(
            map(&[(2, 0.2), (3, 0.5), (19, 0.3)]),
            map(&[(38, 1.0)]),
            0.8,
        )
        .unwrap()
    }

    #[test]
    fn degree_three_moves_to_four() {
        let adj = example().adjust_for_quantization();
        assert_eq!(adj.variable(), &map(&[(2, 0.2), (4, 0.5), (19, 0.3)]));
        assert!((adj.implied_rate() - example().implied_rate()).abs() < 1e-12);
        assert_eq!(
            adj.check().keys().copied().collect::<Vec<_>>(),
            vec![40, 41]
        );
        let sum: f64 = adj.check().values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_degree_three_passes_through() {
        let dd =
            DegreeDistribution::new(map(&[(2, 0.5), (4, 0.5)]), map(&[(30, 1.0)]), 0.9).unwrap();
        assert_eq!(dd.adjust_for_quantization(), dd);
    }

    #[test]
    fn edge_fractions_match_node_conversion() {
        let adj = example().adjust_for_quantization();
        let lambda = adj.variable_edge_fractions();
        // lambda_d is proportional to d * v_d.
        let norm: f64 = adj.variable().iter().map(|(&d, &f)| d as f64 * f).sum();
        for (&d, &f) in adj.variable() {
            assert!((lambda[&d] - d as f64 * f / norm).abs() < 1e-15);
        }
        // Edge count seen from both sides agrees: sum_d lambda_d / d = 1/avg.
        let inv: f64 = lambda.iter().map(|(&d, &l)| l / d as f64).sum();
        assert!((inv - 1.0 / adj.avg_variable_degree()).abs() < 1e-12);
        let rho = adj.check_edge_fractions();
        let inv_c: f64 = rho.iter().map(|(&d, &r)| r / d as f64).sum();
        assert!((inv_c - 1.0 / adj.avg_check_degree()).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(DegreeDistribution::new(map(&[(3, 0.5)]), map(&[(30, 1.0)]), 0.9).is_err());
        assert!(DegreeDistribution::new(map(&[(3, 1.0)]), map(&[(30, 1.0)]), 0.5).is_err());
        assert!(DegreeDistribution::new(map(&[(3, 1.0)]), map(&[(30, 1.0)]), 0.9).is_ok());
    }

    #[test]
    fn presets() {
        let code1 = DegreeDistribution::preset("code1").unwrap();
        let code2 = DegreeDistribution::preset("code2").unwrap();
        let code3 = DegreeDistribution::preset("code3").unwrap();
        assert_eq!(code1.max_variable_degree(), 19);
        assert_eq!(code3.max_variable_degree(), 24);
        let adjusted = code1.adjust_for_quantization();
        assert_eq!(adjusted.variable(), code2.variable());
        assert_eq!(
            adjusted.check().keys().collect::<Vec<_>>(),
            code2.check().keys().collect::<Vec<_>>()
        );
        for (a, b) in adjusted.check().values().zip(code2.check().values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(DegreeDistribution::preset("code4").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let dd = example();
        assert_eq!(DegreeDistribution::from_toml(&dd.to_toml()).unwrap(), dd);
        assert!(DegreeDistribution::from_toml(
            "design_rate = 0.9\n[variable]\nx = 1.0\n[check]\n30 = 1.0\n"
        )
        .is_err());
    }
}
