//! TOML run configuration shared by every CLI subcommand.
//!
//! A config is resolved in three layers: built-in defaults, then a config
//! file, then `key=value` overrides. Defaults are serialized to a TOML tree,
//! the file is merged into it table by table (arrays are replaced whole),
//! overrides are applied by dotted path, and the result is deserialized with
//! unknown keys rejected. An override must name a key that exists after the
//! first two layers; numeric path segments index into arrays, e.g.
//! `channel.levels.0.sigma=0.4`.

use crate::channel::{ChannelError, FlashChannelModel, LevelDistribution, RetentionParams};
use crate::ldpc::{CheckRule, ConstructParams, DegreeDistribution, LdpcError};
use crate::quantizer::{QuantizerError, SearchConfig, WordLineVoltages};
use crate::sim::{ModelSource, QuantMethod, SimConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("malformed override `{0}`, expected key=value")]
    MalformedOverride(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Degree(#[from] LdpcError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Master seed for MMI multi-starts, code construction and simulation.
    pub seed: u64,
    pub channel: ChannelConfig,
    pub quantize: QuantizeConfig,
    pub code: CodeConfig,
    pub sim: SimSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Retention surrogate; sweep points are months.
    Retention,
    /// The initial levels as given; sweep points scale every sigma.
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub source: SourceKind,
    /// Levels at t = 0, erased level first.
    pub levels: Vec<LevelConfig>,
    pub retention: RetentionConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    TailsUniformCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionConfig {
    pub mean_drift: Vec<f64>,
    pub sigma_growth: Vec<f64>,
    pub t0_months: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizeConfig {
    pub reads: usize,
    /// Retention months or sigma scales, depending on `channel.source`.
    pub points: Vec<f64>,
    /// Constant-ratio rows to emit next to the MMI row.
    pub ratios: Vec<f64>,
    /// Also emit the hard (pdf-crossing) thresholds.
    pub hard: bool,
    pub search: SearchSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    /// `[lo, hi]`, or empty for the model support.
    pub bracket: Vec<f64>,
    pub starts: usize,
    pub max_sweeps: usize,
    pub gain_tol: f64,
    pub x_tol: f64,
    pub scan_points: usize,
    pub require_convergence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// Built-in degree distribution: `code1`, `code2` or `code3`.
    pub preset: String,
    /// Degree distribution file; overrides `preset` when non-empty.
    pub degree_file: String,
    /// Parity-check matrix used by `simulate`; when empty the code is
    /// constructed from the degree distribution.
    pub alist: String,
    pub n: usize,
    pub k: usize,
    pub ace_depth: usize,
    pub ace_eta: u32,
    pub max_retries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Mmi,
    Hard,
    ConstantRatio,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    SumProduct,
    MinSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub method: MethodKind,
    pub reads: usize,
    /// Ratios swept when `method = "constant_ratio"`.
    pub ratios: Vec<f64>,
    /// Word-line voltages when `method = "explicit"`.
    pub thresholds: Vec<f64>,
    /// Retention months or sigma scales, depending on `channel.source`.
    pub points: Vec<f64>,
    pub max_frames: u64,
    pub stop_errors: u64,
    pub max_iters: usize,
    pub check_rule: RuleKind,
}

impl Default for Config {
    fn default() -> Self {
        let initial = RetentionParams::default_mlc();
        let levels = initial
            .initial()
            .levels()
            .iter()
            .map(|l| LevelConfig {
                family: Family::Gaussian,
                mean: Some(l.mean()),
                sigma: l.sigma(),
                center_lo: None,
                center_hi: None,
            })
            .collect();
        let search = SearchConfig::default();
        Config {
            seed: 1,
            channel: ChannelConfig {
                source: SourceKind::Retention,
                levels,
                retention: RetentionConfig {
                    mean_drift: initial.mean_drift().to_vec(),
                    sigma_growth: initial.sigma_growth().to_vec(),
                    t0_months: initial.t0_months(),
                },
            },
            quantize: QuantizeConfig {
                reads: 6,
                points: vec![6.0],
                ratios: vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 15.0],
                hard: true,
                search: SearchSection {
                    bracket: Vec::new(),
                    starts: search.starts,
                    max_sweeps: search.max_sweeps,
                    gain_tol: search.gain_tol,
                    x_tol: search.x_tol,
                    scan_points: search.scan_points,
                    require_convergence: search.require_convergence,
                },
            },
            code: CodeConfig {
                preset: "code2".into(),
                degree_file: String::new(),
                alist: String::new(),
                n: 2048,
                k: 1848,
                ace_depth: 4,
                ace_eta: 2,
                max_retries: 4,
            },
            sim: SimSection {
                method: MethodKind::Mmi,
                reads: 6,
                ratios: vec![7.0],
                thresholds: Vec::new(),
                points: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                max_frames: 10_000,
                stop_errors: 100,
                max_iters: 50,
                check_rule: RuleKind::SumProduct,
            },
        }
    }
}

impl Config {
    /// Resolves defaults, then `file` (TOML text), then `overrides`.
    pub fn resolve(file: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut tree = Table::try_from(Config::default()).expect("defaults serialize");
        if let Some(text) = file {
            let parsed: Table =
                toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
            merge(&mut tree, parsed);
        }
        for ov in overrides {
            apply_override(&mut tree, ov)?;
        }
        let cfg: Config = tree
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.model_source()?;
        if !self.code.n.is_multiple_of(2) {
            return Err(ConfigError::Invalid(format!(
                "code.n = {} is odd; each cell stores two code bits",
                self.code.n
            )));
        }
        if self.quantize.reads == 0 || self.sim.reads == 0 {
            return Err(ConfigError::Invalid("read count must be at least 1".into()));
        }
        if self.sim.max_frames == 0 {
            return Err(ConfigError::Invalid(
                "sim.max_frames must be at least 1".into(),
            ));
        }
        if !matches!(self.quantize.search.bracket.len(), 0 | 2) {
            return Err(ConfigError::Invalid(
                "quantize.search.bracket must be empty or [lo, hi]".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_model(&self) -> Result<FlashChannelModel, ConfigError> {
        let levels = self
            .channel
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| level_distribution(i, l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FlashChannelModel::new(levels)?)
    }

    pub fn model_source(&self) -> Result<ModelSource, ConfigError> {
        let initial = self.initial_model()?;
        Ok(match self.channel.source {
            SourceKind::Static => ModelSource::SigmaScale(initial),
            SourceKind::Retention => {
                let r = &self.channel.retention;
                ModelSource::Retention(RetentionParams::new(
                    initial,
                    r.mean_drift.clone(),
                    r.sigma_growth.clone(),
                    r.t0_months,
                )?)
            }
        })
    }

    pub fn search_config(&self) -> SearchConfig {
        let s = &self.quantize.search;
        SearchConfig {
            bracket: match s.bracket[..] {
                [lo, hi] => Some((lo, hi)),
                _ => None,
            },
            starts: s.starts,
            max_sweeps: s.max_sweeps,
            gain_tol: s.gain_tol,
            x_tol: s.x_tol,
            scan_points: s.scan_points,
            seed: self.seed,
            require_convergence: s.require_convergence,
        }
    }

    /// The degree distribution named by `code`, resolving `degree_file`
    /// relative to `base`.
    pub fn degree_distribution(&self, base: &Path) -> Result<DegreeDistribution, ConfigError> {
        if self.code.degree_file.is_empty() {
            return Ok(DegreeDistribution::preset(&self.code.preset)?);
        }
        let path = base.join(&self.code.degree_file);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Ok(DegreeDistribution::from_toml(&text)?)
    }

    pub fn construct_params(&self) -> ConstructParams {
        ConstructParams {
            ace_depth: self.code.ace_depth,
            ace_eta: self.code.ace_eta,
            seed: self.seed,
            max_retries: self.code.max_retries,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            reads: self.sim.reads,
            max_frames: self.sim.max_frames,
            stop_errors: self.sim.stop_errors,
            max_iters: self.sim.max_iters,
            rule: match self.sim.check_rule {
                RuleKind::SumProduct => CheckRule::SumProduct,
                RuleKind::MinSum => CheckRule::MinSum,
            },
            seed: self.seed,
            search: self.search_config(),
        }
    }

    /// Methods swept by `simulate`; constant-ratio expands to one method per
    /// ratio.
    pub fn sim_methods(&self) -> Result<Vec<QuantMethod>, ConfigError> {
        Ok(match self.sim.method {
            MethodKind::Mmi => vec![QuantMethod::Mmi],
            MethodKind::Hard => vec![QuantMethod::Hard],
            MethodKind::ConstantRatio => {
                if self.sim.ratios.is_empty() {
                    return Err(ConfigError::Invalid("sim.ratios is empty".into()));
                }
                self.sim
                    .ratios
                    .iter()
                    .map(|&r| QuantMethod::ConstantRatio(r))
                    .collect()
            }
            MethodKind::Explicit => vec![QuantMethod::Explicit(WordLineVoltages::new(
                self.sim.thresholds.clone(),
            )?)],
        })
    }
}

fn level_distribution(i: usize, l: &LevelConfig) -> Result<LevelDistribution, ConfigError> {
    let missing = |field: &str| {
        ConfigError::Invalid(format!("channel.levels.{i} needs `{field}` for its family"))
    };
    let stray = |field: &str| {
        ConfigError::Invalid(format!(
            "channel.levels.{i}: `{field}` does not apply to its family"
        ))
    };
    Ok(match l.family {
        Family::Gaussian => {
            if l.center_lo.is_some() {
                return Err(stray("center_lo"));
            }
            if l.center_hi.is_some() {
                return Err(stray("center_hi"));
            }
            LevelDistribution::gaussian(l.mean.ok_or_else(|| missing("mean"))?, l.sigma)?
        }
        Family::TailsUniformCenter => {
            if l.mean.is_some() {
                return Err(stray("mean"));
            }
            LevelDistribution::tails_uniform_center(
                l.center_lo.ok_or_else(|| missing("center_lo"))?,
                l.center_hi.ok_or_else(|| missing("center_hi"))?,
                l.sigma,
            )?
        }
    })
}

/// Deep-merges `top` into `base`; tables merge key by key, everything else
/// is replaced.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_override(tree: &mut Table, ov: &str) -> Result<(), ConfigError> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| ConfigError::MalformedOverride(ov.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::MalformedOverride(ov.to_string()));
    }
    let value = parse_value(raw.trim());
    let unknown = || ConfigError::UnknownKey(key.to_string());

    let segments: Vec<&str> = key.split('.').collect();
    let (last, path) = segments.split_last().expect("nonempty key");
    let mut node: &mut Value = tree
        .get_mut(path.first().copied().unwrap_or(last))
        .ok_or_else(unknown)?;
    if path.is_empty() {
        *node = value;
        return Ok(());
    }
    for seg in path[1..].iter().chain(std::iter::once(last)) {
        node = match node {
            Value::Table(t) => t.get_mut(*seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(unknown)?;
    }
    *node = value;
    Ok(())
}

/// A TOML value, or the raw text as a string when it does not parse as one
/// (so `--set sim.method=hard` works without quoting).
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = Config::default();
        assert_eq!(Config::resolve(None, &[]).unwrap(), cfg);
        assert_eq!(Config::resolve(Some(&cfg.to_toml()), &[]).unwrap(), cfg);
    }

    #[test]
    fn precedence_override_over_file_over_default() {
        let file = "seed = 5\n[sim]\nmax_frames = 20\n";
        let cfg = Config::resolve(Some(file), &[]).unwrap();
        assert_eq!((cfg.seed, cfg.sim.max_frames), (5, 20));
        assert_eq!(cfg.sim.stop_errors, 100);
        let cfg = Config::resolve(Some(file), &["sim.max_frames=7".into()]).unwrap();
        assert_eq!((cfg.seed, cfg.sim.max_frames), (5, 7));
    }

    #[test]
    fn overrides_reach_into_arrays_and_enums() {
        let cfg = Config::resolve(
            None,
            &[
                "channel.levels.0.sigma=0.4".into(),
                "sim.method=hard".into(),
                "sim.points=[1, 2]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.channel.levels[0].sigma, 0.4);
        assert_eq!(cfg.sim.method, MethodKind::Hard);
        assert_eq!(cfg.sim.points, vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(matches!(
            Config::resolve(None, &["sim.max_frame=3".into()]),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            Config::resolve(None, &["channel.levels.9.sigma=3".into()]),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            Config::resolve(Some("[sim]\nframes = 3\n"), &[]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            Config::resolve(None, &["seed".into()]),
            Err(ConfigError::MalformedOverride(_))
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::resolve(None, &["code.n=2047".into()]).is_err());
        assert!(Config::resolve(None, &["quantize.reads=0".into()]).is_err());
        assert!(Config::resolve(None, &["channel.levels.1.mean=0.5".into()]).is_err());
        assert!(Config::resolve(None, &["sim.method=bogus".into()]).is_err());
    }

    #[test]
    fn tails_uniform_center_levels() {
        let file = r#"
            [channel]
            source = "static"
            [[channel.levels]]
            family = "tails_uniform_center"
            center_lo = 0.5
            center_hi = 1.5
            sigma = 0.2
            [[channel.levels]]
            family = "gaussian"
            mean = 3.0
            sigma = 0.1
        "#;
        let cfg = Config::resolve(Some(file), &[]).unwrap();
        let model = cfg.initial_model().unwrap();
        assert_eq!(model.num_levels(), 2);
        assert!((model.levels()[0].mean() - 1.0).abs() < 1e-12);
        let bad = file.replace("center_lo = 0.5", "mean = 0.5");
        assert!(Config::resolve(Some(&bad), &[]).is_err());
    }
}
