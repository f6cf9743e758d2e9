//! Monte Carlo SNR sweeps, high-SNR slope fitting and result files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{Scheme, Signal};
use crate::detection::{RatePoint, UserGains};
use crate::error::{IaError, Result};
use crate::exec::Execution;
use crate::pipeline::Link;
use crate::{seed, Complex64};

/// Inclusive SNR grid in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl SnrGrid {
    pub fn new(start_db: f64, stop_db: f64, step_db: f64) -> Result<Self> {
        let ok = start_db.is_finite() && stop_db.is_finite() && step_db.is_finite();
        if !ok || start_db > stop_db || step_db <= 0.0 {
            return Err(IaError::InvalidArgument(format!(
                "SNR grid needs start ≤ stop and step > 0, got {start_db}:{stop_db}:{step_db}"
            )));
        }
        Ok(SnrGrid {
            start_db,
            stop_db,
            step_db,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start_db + k as f64 * self.step_db).collect()
    }
}

impl Default for SnrGrid {
    fn default() -> Self {
        SnrGrid {
            start_db: 0.0,
            stop_db: 100.0,
            step_db: 5.0,
        }
    }
}

impl FromStr for SnrGrid {
    type Err = IaError;

    /// `start:stop:step` in dB, e.g. `0:100:5`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || IaError::InvalidArgument(format!("SNR grid must be start:stop:step, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        SnrGrid::new(v[0], v[1], v[2])
    }
}

/// `lo:hi` dB window for slope fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeWindow {
    pub lo_db: f64,
    pub hi_db: f64,
}

impl Default for SlopeWindow {
    fn default() -> Self {
        SlopeWindow {
            lo_db: 80.0,
            hi_db: 100.0,
        }
    }
}

impl FromStr for SlopeWindow {
    type Err = IaError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || IaError::InvalidArgument(format!("slope window must be lo:hi, got {s:?}"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo < hi) {
            return Err(bad());
        }
        Ok(SlopeWindow { lo_db: lo, hi_db: hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = IaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(IaError::InvalidArgument(format!("unknown output format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: usize,
    pub schemes: Vec<Scheme>,
    pub snr: SnrGrid,
    pub drops: usize,
    pub seed: u64,
    pub slope_window: SlopeWindow,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    #[serde(default)]
    pub execution: Execution,
}

impl SimConfig {
    /// Both schemes, 0–100 dB in 5 dB steps, 50 drops, slope over 80–100 dB.
    pub fn new(p: usize, seed: u64) -> Self {
        SimConfig {
            p,
            schemes: vec![Scheme::Acs, Scheme::TimeOnly],
            snr: SnrGrid::default(),
            drops: 50,
            seed,
            slope_window: SlopeWindow::default(),
            output_path: None,
            output_format: OutputFormat::Csv,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(IaError::InvalidArgument(format!("p must be at least 2, got {}", self.p)));
        }
        if self.drops == 0 {
            return Err(IaError::InvalidArgument("drops must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(IaError::InvalidArgument("at least one scheme is required".into()));
        }
        SnrGrid::new(self.snr.start_db, self.snr.stop_db, self.snr.step_db)?;
        Ok(())
    }
}

/// Statistics at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub sum_rate_mean: f64,
    pub sum_rate_std: f64,
    pub user_rate_mean: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub points: Vec<SweepPoint>,
    /// Sum-rate slope over the configured window, bits per log2(ρ).
    pub slope: Option<f64>,
    /// `slope / 3`.
    pub dof_per_user: Option<f64>,
    /// Draws that were degenerate and replaced.
    pub degenerate_draws: usize,
    pub degenerate_seeds: Vec<u64>,
}

impl SchemeResult {
    pub fn slope_over(&self, lo_db: f64, hi_db: f64) -> Result<f64> {
        dof_slope(&self.points, lo_db, hi_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub p: usize,
    pub drops: usize,
    pub seed: u64,
    pub slope_window: SlopeWindow,
    pub schemes: Vec<SchemeResult>,
}

impl SimResult {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeResult> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

/// Least-squares slope of the mean sum rate against `log2 ρ` over grid
/// points inside `[lo_db, hi_db]`.
pub fn dof_slope(points: &[SweepPoint], lo_db: f64, hi_db: f64) -> Result<f64> {
    let tol = 1e-9;
    let sel: Vec<(f64, f64)> = points
        .iter()
        .filter(|pt| pt.snr_db >= lo_db - tol && pt.snr_db <= hi_db + tol)
        .map(|pt| (pt.snr_db / 10.0 * 10f64.log2(), pt.sum_rate_mean))
        .collect();
    if sel.len() < 2 {
        return Err(IaError::InvalidArgument(format!(
            "slope window {lo_db}–{hi_db} dB holds {} grid points, need at least 2",
            sel.len()
        )));
    }
    let n = sel.len() as f64;
    let mx = sel.iter().map(|s| s.0).sum::<f64>() / n;
    let my = sel.iter().map(|s| s.1).sum::<f64>() / n;
    let sxy: f64 = sel.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = sel.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Upper bound on redraws for a single drop before the sweep gives up.
const MAX_ATTEMPTS_PER_DROP: u64 = 20;

struct DropOutcome {
    gains: [UserGains; 3],
    degenerate: Vec<u64>,
}

fn link_gains<S: Signal>(p: usize, draw_seed: u64) -> Result<[UserGains; 3]> {
    Link::<S>::establish(p, draw_seed)?.gains()
}

fn run_drop(p: usize, scheme: Scheme, base: u64, drop: usize) -> Result<DropOutcome> {
    let mut degenerate = Vec::new();
    for attempt in 0..MAX_ATTEMPTS_PER_DROP {
        let s = seed::drop_seed(base, drop as u64, attempt);
        let res = match scheme {
            Scheme::Acs => link_gains::<f64>(p, s),
            Scheme::TimeOnly => link_gains::<Complex64>(p, s),
        };
        match res {
            Ok(gains) => return Ok(DropOutcome { gains, degenerate }),
            Err(e) if e.is_degenerate_draw() => degenerate.push(s),
            Err(e) => {
                return Err(IaError::Draw {
                    seed: s,
                    source: Box::new(e),
                })
            }
        }
    }
    Err(IaError::TooManyDegenerate {
        degenerate: degenerate.len(),
        attempted: degenerate.len(),
        seeds: degenerate,
    })
}

fn aggregate(outcomes: &[DropOutcome], grid: &[f64]) -> Vec<SweepPoint> {
    let n = outcomes.len() as f64;
    grid.iter()
        .map(|&snr| {
            let pts: Vec<RatePoint> = outcomes
                .iter()
                .map(|o| RatePoint::from_gains(&o.gains, snr))
                .collect();
            let mean = pts.iter().map(|pt| pt.sum_rate).sum::<f64>() / n;
            let var = if pts.len() > 1 {
                pts.iter().map(|pt| (pt.sum_rate - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let user_rate_mean =
                std::array::from_fn(|j| pts.iter().map(|pt| pt.rate[j]).sum::<f64>() / n);
            SweepPoint {
                snr_db: snr,
                sum_rate_mean: mean,
                sum_rate_std: var.sqrt(),
                user_rate_mean,
            }
        })
        .collect()
}

/// Run the sweep: per drop, build the scheme once and evaluate the whole SNR
/// grid from the SNR-independent stream gains. Drops run under
/// `cfg.execution`; results are combined in drop order.
pub fn run_sweep(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let grid = cfg.snr.points();
    let mut schemes = Vec::with_capacity(cfg.schemes.len());
    for &scheme in &cfg.schemes {
        let outcomes: Vec<DropOutcome> = cfg
            .execution
            .map(cfg.drops, |d| run_drop(cfg.p, scheme, cfg.seed, d))
            .into_iter()
            .collect::<Result<_>>()?;
        let degenerate_seeds: Vec<u64> = outcomes.iter().flat_map(|o| o.degenerate.iter().copied()).collect();
        let attempted = cfg.drops + degenerate_seeds.len();
        if degenerate_seeds.len() * 100 > attempted {
            return Err(IaError::TooManyDegenerate {
                degenerate: degenerate_seeds.len(),
                attempted,
                seeds: degenerate_seeds,
            });
        }
        let points = aggregate(&outcomes, &grid);
        let slope = dof_slope(&points, cfg.slope_window.lo_db, cfg.slope_window.hi_db).ok();
        schemes.push(SchemeResult {
            scheme,
            points,
            slope,
            dof_per_user: slope.map(|s| s / 3.0),
            degenerate_draws: degenerate_seeds.len(),
            degenerate_seeds,
        });
    }
    Ok(SimResult {
        p: cfg.p,
        drops: cfg.drops,
        seed: cfg.seed,
        slope_window: cfg.slope_window,
        schemes,
    })
}

pub const CSV_HEADER: [&str; 9] = [
    "scheme",
    "p",
    "snr_db",
    "drops",
    "sum_rate_mean_bpcu",
    "sum_rate_std",
    "rate_u1",
    "rate_u2",
    "rate_u3",
];

pub fn write_csv<W: Write>(result: &SimResult, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in &result.schemes {
        for pt in &s.points {
            w.write_record([
                s.scheme.name().to_string(),
                result.p.to_string(),
                pt.snr_db.to_string(),
                result.drops.to_string(),
                pt.sum_rate_mean.to_string(),
                pt.sum_rate_std.to_string(),
                pt.user_rate_mean[0].to_string(),
                pt.user_rate_mean[1].to_string(),
                pt.user_rate_mean[2].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON document: library version, config echo and the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub version: String,
    pub config: SimConfig,
    pub result: SimResult,
}

pub fn json_report(result: &SimResult, cfg: &SimConfig) -> JsonReport {
    JsonReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        result: result.clone(),
    }
}

/// Write `result` to `path` in `format`.
pub fn emit(result: &SimResult, cfg: &SimConfig, format: OutputFormat, path: &Path) -> Result<()> {
    let io = |source| IaError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(result, &mut out).map_err(|e| IaError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &json_report(result, cfg)).map_err(|e| IaError::Output {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: SnrGrid = "0:100:5".parse().unwrap();
        assert_eq!(g.points().len(), 21);
        assert_eq!(g.points()[20], 100.0);
        assert_eq!("60:100:10".parse::<SnrGrid>().unwrap().points(), vec![60.0, 70.0, 80.0, 90.0, 100.0]);
        assert!("10:0:5".parse::<SnrGrid>().is_err());
        assert!("0:10:0".parse::<SnrGrid>().is_err());
        assert!("0:10".parse::<SnrGrid>().is_err());
        assert_eq!("5:5:1".parse::<SnrGrid>().unwrap().points(), vec![5.0]);
    }

    #[test]
    fn slope_of_exact_line() {
        let points: Vec<SweepPoint> = SnrGrid::default()
            .points()
            .into_iter()
            .map(|db| SweepPoint {
                snr_db: db,
                sum_rate_mean: 3.6 * (db / 10.0 * 10f64.log2()) + 1.7,
                sum_rate_std: 0.0,
                user_rate_mean: [0.0; 3],
            })
            .collect();
        let s = dof_slope(&points, 80.0, 100.0).unwrap();
        assert!((s - 3.6).abs() < 1e-9);
        assert!(dof_slope(&points, 81.0, 84.0).is_err());
    }

    #[test]
    fn window_and_format_parsing() {
        let w: SlopeWindow = "60:100".parse().unwrap();
        assert_eq!((w.lo_db, w.hi_db), (60.0, 100.0));
        assert!("100:60".parse::<SlopeWindow>().is_err());
        assert_eq!("JSON".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!("xml".parse::<OutputFormat>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(2, 1);
        assert!(cfg.validate().is_ok());
        cfg.drops = 0;
        assert!(cfg.validate().is_err());
        cfg.drops = 1;
        cfg.p = 1;
        assert!(cfg.validate().is_err());
    }
}
