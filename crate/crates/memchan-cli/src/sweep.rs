//! Attenuation-protocol parameter sweeps and their file outputs.
//!
//! All times are in units of the environment relaxation time, which is
//! pinned to 1 internally. Output files are byte-identical for identical
//! configurations: the searches are deterministic grids and numbers are
//! serialized with 12 significant digits.

use memchan::attenuation::{gbar, optimize_gbar, AttenuationProtocol};
use memchan::rates::dephasing_quantum_capacity;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("failed to write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("failed to parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Compute(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Tau grid in units of the relaxation time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TauGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl TauGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Sweep configuration; a JSON document on disk, with command-line flags
/// taking precedence field by field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub tau_over_tau_e: TauGrid,
    #[serde(default = "default_true")]
    pub optimize_p: bool,
    /// Population used when `optimize_p` is off.
    #[serde(default = "default_one")]
    pub p: f64,
    pub output_path: String,
    pub format: OutputFormat,
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.lambda_values.is_empty() || self.n_values.is_empty() {
            return Err(SweepError::InvalidConfig("lambda and n grids must be non-empty".into()));
        }
        if self.lambda_values.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(SweepError::InvalidConfig("lambda values must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(SweepError::InvalidConfig("p must lie in [0, 1]".into()));
        }
        let g = &self.tau_over_tau_e;
        if g.steps == 0 || !(g.start > 0.0) || g.stop < g.start {
            return Err(SweepError::InvalidConfig(
                "tau grid needs steps >= 1 and 0 < start <= stop".into(),
            ));
        }
        if self.output_path.is_empty() {
            return Err(SweepError::InvalidConfig("output_path must be set".into()));
        }
        Ok(())
    }
}

/// One sweep row; `gamma` is the quantum-rate gain over the memoryless line.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub n: usize,
    pub tau_over_tau_e: f64,
    pub p_star: f64,
    pub gbar: f64,
    pub g0: f64,
    pub gamma: f64,
    pub rq_bar: f64,
    pub rq_s0: f64,
}

pub const CSV_HEADER: [&str; 9] =
    ["lambda", "n", "tau_over_tau_e", "p_star", "gbar", "g0", "gamma", "rq_bar", "rq_s0"];

fn compute_row(lambda: f64, n: usize, tau: f64, optimize_p: bool, p: f64) -> Result<SweepRow, SweepError> {
    let g0 = lambda.sqrt();
    let (p_star, g_star) = if n == 0 {
        (if optimize_p { 1.0 } else { p }, g0)
    } else if optimize_p {
        optimize_gbar(lambda, n, tau, 1.0).map_err(|e| SweepError::Compute(e.to_string()))?
    } else {
        let proto = AttenuationProtocol::new(n, tau, p, lambda, 1.0)
            .map_err(|e| SweepError::Compute(e.to_string()))?;
        (p, gbar(&proto))
    };
    let q_bar = dephasing_quantum_capacity(g_star).map_err(|e| SweepError::Compute(e.to_string()))?;
    let q_0 = dephasing_quantum_capacity(g0).map_err(|e| SweepError::Compute(e.to_string()))?;
    let cycle = n as f64 * tau + 1.0;
    let gamma = if n == 0 {
        1.0
    } else if q_0 > 0.0 {
        (1.0 / cycle) * q_bar / q_0
    } else {
        f64::NAN
    };
    Ok(SweepRow {
        lambda,
        n,
        tau_over_tau_e: tau,
        p_star,
        gbar: g_star,
        g0,
        gamma,
        rq_bar: q_bar / cycle,
        rq_s0: q_0,
    })
}

/// Runs the sweep over the full (lambda, n, tau) grid in configuration
/// order. `jobs > 1` evaluates rows in parallel; results are assembled in
/// grid order regardless of execution order.
pub fn run_sweep(config: &SweepConfig, jobs: usize) -> Result<Vec<SweepRow>, SweepError> {
    config.validate()?;
    let taus = config.tau_over_tau_e.values();
    let mut points = Vec::new();
    for &lambda in &config.lambda_values {
        for &n in &config.n_values {
            for &tau in &taus {
                points.push((lambda, n, tau));
            }
        }
    }
    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| SweepError::Compute(e.to_string()))?;
        pool.install(|| {
            points
                .par_iter()
                .map(|&(l, n, t)| compute_row(l, n, t, config.optimize_p, config.p))
                .collect()
        })
    } else {
        points
            .iter()
            .map(|&(l, n, t)| compute_row(l, n, t, config.optimize_p, config.p))
            .collect()
    }
}

/// 12-significant-digit representation used in every output file.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.11e}")
}

/// Same rounding as [`fmt_sig`], as a number (for JSON payloads).
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

pub fn write_output(config: &SweepConfig, rows: &[SweepRow]) -> Result<(), SweepError> {
    let path = Path::new(&config.output_path);
    let bytes = match config.format {
        OutputFormat::Csv => render_csv(rows)?,
        OutputFormat::Json => render_json(config, rows)?,
    };
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|source| SweepError::Io { path: config.output_path.clone(), source })
}

fn render_csv(rows: &[SweepRow]) -> Result<Vec<u8>, SweepError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| SweepError::Compute(e.to_string()))?;
    for r in rows {
        writer
            .write_record([
                fmt_sig(r.lambda),
                r.n.to_string(),
                fmt_sig(r.tau_over_tau_e),
                fmt_sig(r.p_star),
                fmt_sig(r.gbar),
                fmt_sig(r.g0),
                fmt_sig(r.gamma),
                fmt_sig(r.rq_bar),
                fmt_sig(r.rq_s0),
            ])
            .map_err(|e| SweepError::Compute(e.to_string()))?;
    }
    writer.into_inner().map_err(|e| SweepError::Compute(e.to_string()))
}

/// JSON output embeds the effective config, so the file round-trips through
/// the config parser.
fn render_json(config: &SweepConfig, rows: &[SweepRow]) -> Result<Vec<u8>, SweepError> {
    let rows_json: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "lambda": round_sig(r.lambda),
                "n": r.n,
                "tau_over_tau_e": round_sig(r.tau_over_tau_e),
                "p_star": round_sig(r.p_star),
                "gbar": round_sig(r.gbar),
                "g0": round_sig(r.g0),
                "gamma": round_sig(r.gamma),
                "rq_bar": round_sig(r.rq_bar),
                "rq_s0": round_sig(r.rq_s0),
            })
        })
        .collect();
    let doc = serde_json::json!({ "config": config, "rows": rows_json });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}
