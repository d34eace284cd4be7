use crate::Common;
use flashmmi::channel::FlashChannelModel;
use flashmmi::config::{Config, ConfigError};
use flashmmi::ldpc::{construct_peg_ace, LdpcCode, LdpcError};
use flashmmi::quantizer::{
    constant_ratio_thresholds, fmt_sig17, hard_thresholds, model_mutual_information, optimize_mmi,
    QuantizerError, WordLineVoltages,
};
use flashmmi::sim::{run_sweep, SimError, CSV_HEADER};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Construction(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<QuantizerError> for Failure {
    fn from(e: QuantizerError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<LdpcError> for Failure {
    fn from(e: LdpcError) -> Self {
        Failure::Construction(e.to_string())
    }
}

/// Resolved config plus the directory relative paths in it refer to.
struct Setup {
    cfg: Config,
    base: PathBuf,
}

fn setup(c: &Common) -> Result<Setup, Failure> {
    let text = match &c.config {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let mut overrides = c.overrides.clone();
    if let Some(seed) = c.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = Config::resolve(text.as_deref(), &overrides)?;
    // A pool built earlier in the process is kept as is.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(c.threads)
        .build_global();
    let base = c
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok(Setup { cfg, base })
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so an interrupted run never leaves a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn model_at(cfg: &Config, x: f64) -> Result<FlashChannelModel, Failure> {
    Ok(cfg.model_source()?.model_at(x).map_err(ConfigError::from)?)
}

struct QuantRow {
    method: &'static str,
    ratio: Option<f64>,
    x: f64,
    wl: WordLineVoltages,
    mi: f64,
}

fn quant_rows(cfg: &Config) -> Result<Vec<QuantRow>, Failure> {
    let search = cfg.search_config();
    let reads = cfg.quantize.reads;
    let mut rows = Vec::new();
    for &x in &cfg.quantize.points {
        let model = model_at(cfg, x)?;
        let mmi = optimize_mmi(&model, reads, &search)?;
        rows.push(QuantRow {
            method: "mmi",
            ratio: None,
            x,
            wl: mmi.voltages,
            mi: mmi.mi_bits,
        });
        for &r in &cfg.quantize.ratios {
            let wl = constant_ratio_thresholds(&model, r, reads)?;
            let mi = model_mutual_information(&model, &wl);
            rows.push(QuantRow {
                method: "constant_ratio",
                ratio: Some(r),
                x,
                wl,
                mi,
            });
        }
        if cfg.quantize.hard {
            let wl = hard_thresholds(&model)?;
            let mi = model_mutual_information(&model, &wl);
            rows.push(QuantRow {
                method: "hard",
                ratio: None,
                x,
                wl,
                mi,
            });
        }
    }
    Ok(rows)
}

pub fn quantize(c: &Common) -> Result<(), Failure> {
    let Setup { cfg, .. } = setup(c)?;
    let rows = quant_rows(&cfg)?;
    let width = rows.iter().map(|r| r.wl.len()).max().unwrap_or(0);
    let mut csv = String::from("method,R,M,t_months");
    for j in 1..=width {
        csv.push_str(&format!(",q_{j}"));
    }
    csv.push_str(",mi_bits\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}",
            r.method,
            r.ratio.map(fmt_sig17).unwrap_or_default(),
            r.wl.len(),
            fmt_sig17(r.x)
        ));
        for j in 0..width {
            csv.push(',');
            if let Some(&q) = r.wl.as_slice().get(j) {
                csv.push_str(&fmt_sig17(q));
            }
        }
        csv.push_str(&format!(",{}\n", fmt_sig17(r.mi)));
    }
    emit(c.out.as_deref(), &csv)
}

/// Every constant-ratio and hard row next to the MMI optimum for the same
/// read count.
pub fn compare_mi(c: &Common) -> Result<(), Failure> {
    let Setup { cfg, .. } = setup(c)?;
    let search = cfg.search_config();
    let rows = quant_rows(&cfg)?;
    let mut csv = String::from("t_months,method,R,M,mi_bits,mmi_mi_bits,gap_bits\n");
    let mut mmi_cache: Vec<(f64, usize, f64)> = Vec::new();
    for r in &rows {
        let m = r.wl.len();
        let best = match mmi_cache.iter().find(|&&(x, mm, _)| x == r.x && mm == m) {
            Some(&(_, _, mi)) => mi,
            None => {
                let mi = if r.method == "mmi" {
                    r.mi
                } else {
                    optimize_mmi(&model_at(&cfg, r.x)?, m, &search)?.mi_bits
                };
                mmi_cache.push((r.x, m, mi));
                mi
            }
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_sig17(r.x),
            r.method,
            r.ratio.map(fmt_sig17).unwrap_or_default(),
            m,
            fmt_sig17(r.mi),
            fmt_sig17(best),
            fmt_sig17(best - r.mi),
        ));
    }
    emit(c.out.as_deref(), &csv)
}

fn build_code(cfg: &Config, base: &Path) -> Result<(LdpcCode, String), Failure> {
    let dd = cfg.degree_distribution(base)?;
    let (code, report) = construct_peg_ace(&dd, cfg.code.n, cfg.code.k, &cfg.construct_params())?;
    let mut text = report.to_text();
    text.push_str(&format!("seed = {}\n", cfg.seed));
    Ok((code, text))
}

pub fn construct(c: &Common) -> Result<(), Failure> {
    let Setup { cfg, base } = setup(c)?;
    let out = c
        .out
        .as_deref()
        .ok_or_else(|| Failure::Config("construct needs --out for the alist file".into()))?;
    let (code, report) = build_code(&cfg, &base)?;
    write_atomic(out, &code.to_alist())?;
    let mut report_path = out.as_os_str().to_owned();
    report_path.push(".report.txt");
    write_atomic(Path::new(&report_path), &report)?;
    eprint!("{report}");
    Ok(())
}

pub fn simulate(c: &Common) -> Result<(), Failure> {
    let Setup { cfg, base } = setup(c)?;
    let code = if cfg.code.alist.is_empty() {
        let (code, report) = build_code(&cfg, &base)?;
        eprint!("{report}");
        code
    } else {
        let path = base.join(&cfg.code.alist);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        LdpcCode::from_alist(&text)?
    };
    if code.n() % 2 != 0 {
        return Err(Failure::Config(format!(
            "code length {} is odd; each cell stores two code bits",
            code.n()
        )));
    }
    let source = cfg.model_source()?;
    let methods = cfg.sim_methods()?;
    let results = run_sweep(
        &code,
        &source,
        &cfg.sim.points,
        &methods,
        &cfg.sim_config(),
        |r| {
            let (lo, hi) = r.fer_ci();
            eprintln!(
                "point {} {} R={} x={} frames={} errors={} fer={:.3e} [{:.3e}, {:.3e}]",
                r.point_id,
                r.method,
                r.ratio.map(|v| v.to_string()).unwrap_or_default(),
                r.x,
                r.frames,
                r.frame_errors,
                r.fer(),
                lo,
                hi
            );
        },
    )?;
    let mut csv = format!("{CSV_HEADER}\n");
    for r in &results {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    emit(c.out.as_deref(), &csv)
}
