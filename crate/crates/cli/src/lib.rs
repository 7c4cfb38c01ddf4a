//! Sweep driver for the bidirectional relay simulator.
//!
//! A [`RunSpec`] names the channel statistics, the power sweep and the
//! protocols to compare. [`run_sweep`] calibrates and simulates every
//! (protocol, power) pair on one shared channel trace and [`emit`] writes the
//! resulting table as CSV or JSON.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use birelay_core::benchmarks::{benchmark_policy, BenchmarkConfig, BenchmarkKind, BenchmarkPolicy};
use birelay_core::calibrate::{CalibrationConfig, CalibrationResult, Calibrator};
use birelay_core::channel::{sample_trace, ChannelTrace, FadingStatistics};
use birelay_core::engine::{run, RateReport};
use birelay_core::policy::OptimalPolicy;
use birelay_core::{db_to_linear, Error as CoreError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The run specification itself is unusable.
    #[error("invalid run spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn spec_err(msg: impl Into<String>) -> CliError {
    CliError::Spec(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Proposed,
    TdbcNoPa,
    TdbcPa,
    FixedPowerSixMode,
    FixedPowerThreeMode,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Proposed,
        Protocol::TdbcNoPa,
        Protocol::TdbcPa,
        Protocol::FixedPowerSixMode,
        Protocol::FixedPowerThreeMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Proposed => "proposed",
            Protocol::TdbcNoPa => "tdbc_no_pa",
            Protocol::TdbcPa => "tdbc_pa",
            Protocol::FixedPowerSixMode => "fixed_power_six_mode",
            Protocol::FixedPowerThreeMode => "fixed_power_three_mode",
        }
    }

    pub fn benchmark(self) -> Option<BenchmarkKind> {
        match self {
            Protocol::Proposed => None,
            Protocol::TdbcNoPa => Some(BenchmarkKind::TdbcNoPa),
            Protocol::TdbcPa => Some(BenchmarkKind::TdbcPa),
            Protocol::FixedPowerSixMode => Some(BenchmarkKind::FixedPowerSixMode),
            Protocol::FixedPowerThreeMode => Some(BenchmarkKind::FixedPowerThreeMode),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| spec_err(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(spec_err(format!("unknown format {s:?}, expected csv or json"))),
        }
    }
}

/// Everything that determines a sweep. Identical specs give byte-identical
/// output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub omega1: f64,
    pub omega2: f64,
    /// total power budgets in dB relative to the unit noise power
    pub pt_db_sweep: Vec<f64>,
    pub n_slots: usize,
    pub seed: u64,
    pub protocols: Vec<Protocol>,
    pub format: Format,
    /// `None` writes to stdout
    pub out: Option<PathBuf>,
    pub tol_rate: f64,
    pub tol_power: f64,
    pub max_iters: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            omega1: 1.0,
            omega2: 1.0,
            pt_db_sweep: db_range(-20.0, 20.0, 5.0).expect("valid default sweep"),
            n_slots: CalibrationConfig::DEFAULT_SLOTS,
            seed: CalibrationConfig::DEFAULT_SEED,
            protocols: Protocol::ALL.to_vec(),
            format: Format::Csv,
            out: None,
            tol_rate: CalibrationConfig::DEFAULT_TOL,
            tol_power: CalibrationConfig::DEFAULT_TOL,
            max_iters: CalibrationConfig::DEFAULT_MAX_ITERS,
        }
    }
}

/// `start, start + step, ...` up to and including `stop` (with a little slack
/// for accumulated rounding).
pub fn db_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(spec_err(format!("bad sweep {start}:{step}:{stop}")));
    }
    if stop < start {
        return Err(spec_err(format!("sweep stop {stop} is below start {start}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| spec_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| spec_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn stats(&self) -> Result<FadingStatistics> {
        FadingStatistics::new(self.omega1, self.omega2).map_err(|e| spec_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.stats()?;
        if self.pt_db_sweep.is_empty() {
            return Err(spec_err("power sweep is empty"));
        }
        if let Some(db) = self.pt_db_sweep.iter().find(|db| !db.is_finite()) {
            return Err(spec_err(format!("power {db} dB is not finite")));
        }
        if self.protocols.is_empty() {
            return Err(spec_err("no protocols selected"));
        }
        // the calibration config carries the remaining checks
        let mut cfg = CalibrationConfig::new(self.stats()?, 1.0).map_err(|e| spec_err(e.to_string()))?;
        cfg.n_slots = self.n_slots;
        cfg.tol_rate = self.tol_rate;
        cfg.tol_power = self.tol_power;
        cfg.max_iters = self.max_iters;
        cfg.validate().map_err(|e| spec_err(e.to_string()))
    }

    fn calibration_config(&self, p_total: f64) -> Result<CalibrationConfig> {
        let mut cfg = CalibrationConfig::new(self.stats()?, p_total)?;
        cfg.n_slots = self.n_slots;
        cfg.seed = self.seed;
        cfg.tol_rate = self.tol_rate;
        cfg.tol_power = self.tol_power;
        cfg.max_iters = self.max_iters;
        cfg.validate()?;
        Ok(cfg)
    }

    fn benchmark_config(&self, kind: BenchmarkKind, p_total: f64) -> Result<BenchmarkConfig> {
        let mut cfg = BenchmarkConfig::new(kind, p_total)?;
        cfg.tol_rate = self.tol_rate;
        cfg.tol_power = self.tol_power;
        cfg.max_iters = self.max_iters;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One (protocol, power) point. Field order is the output column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub protocol: Protocol,
    pub pt_db: f64,
    pub sum_rate: f64,
    pub r1r: f64,
    pub r2r: f64,
    pub rr1: f64,
    pub rr2: f64,
    pub avg_power: f64,
    pub freq_m1: f64,
    pub freq_m2: f64,
    pub freq_m3: f64,
    pub freq_m4: f64,
    pub freq_m5: f64,
    pub freq_m6: f64,
    /// thresholds of the protocols that have them
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub gamma: Option<f64>,
    pub converged: bool,
    /// calibration residuals on the calibration trace; kept out of the files
    #[serde(skip)]
    pub residuals: [f64; 3],
}

impl SweepRow {
    fn new(protocol: Protocol, pt_db: f64, r: &RateReport) -> Self {
        let f = r.mode_freq;
        Self {
            protocol,
            pt_db,
            sum_rate: r.sum_rate,
            r1r: r.r_1r,
            r2r: r.r_2r,
            rr1: r.r_r1,
            rr2: r.r_r2,
            avg_power: r.avg_power,
            freq_m1: f[0],
            freq_m2: f[1],
            freq_m3: f[2],
            freq_m4: f[3],
            freq_m5: f[4],
            freq_m6: f[5],
            mu1: None,
            mu2: None,
            gamma: None,
            converged: true,
            residuals: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn get(&self, protocol: Protocol, pt_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.protocol == protocol && r.pt_db == pt_db)
    }
}

/// Calibrated thresholds keyed by `(Ω1, Ω2, Pt, seed, n_slots)`, so repeated
/// operating points are calibrated once.
#[derive(Debug, Default)]
pub struct ThresholdCache {
    entries: HashMap<(u64, u64, u64, u64, usize), CalibrationResult>,
}

impl ThresholdCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cached calibration for `cfg`, computed on `trace` if missing. `trace`
    /// must be the one `cfg` describes.
    pub fn calibrate(&mut self, cfg: &CalibrationConfig, trace: &ChannelTrace) -> Result<CalibrationResult> {
        let key = (
            cfg.stats.omega1().to_bits(),
            cfg.stats.omega2().to_bits(),
            cfg.p_total.to_bits(),
            cfg.seed,
            cfg.n_slots,
        );
        if let Some(hit) = self.entries.get(&key) {
            return Ok(hit.clone());
        }
        let result = Calibrator::with_trace(*cfg, trace.clone())?.calibrate()?;
        self.entries.insert(key, result.clone());
        Ok(result)
    }
}

/// Calibrates and simulates the proposed protocol at one power.
pub fn run_proposed(spec: &RunSpec, pt_db: f64, trace: &ChannelTrace, cache: &mut ThresholdCache) -> Result<SweepRow> {
    let cfg = spec.calibration_config(db_to_linear(pt_db))?;
    let cal = cache.calibrate(&cfg, trace)?;
    let report = run(trace, &OptimalPolicy::new(cal.thresholds, cfg.stats))?;
    let mut row = SweepRow::new(Protocol::Proposed, pt_db, &report);
    let th = cal.thresholds;
    (row.mu1, row.mu2, row.gamma) = (Some(th.mu1()), Some(th.mu2()), Some(th.gamma()));
    row.converged = cal.converged;
    row.residuals = [cal.residual_c1, cal.residual_c2, cal.residual_c3];
    Ok(row)
}

/// Fits and simulates one benchmark at one power.
pub fn run_benchmark(spec: &RunSpec, kind: BenchmarkKind, pt_db: f64, trace: &ChannelTrace) -> Result<SweepRow> {
    let cfg = spec.benchmark_config(kind, db_to_linear(pt_db))?;
    let policy = benchmark_policy(&cfg, trace)?;
    let report = run(trace, &policy)?;
    let protocol = Protocol::ALL
        .into_iter()
        .find(|p| p.benchmark() == Some(kind))
        .expect("every kind has a protocol");
    let mut row = SweepRow::new(protocol, pt_db, &report);
    match &policy {
        BenchmarkPolicy::Tdbc(p) => row.gamma = p.gamma,
        BenchmarkPolicy::FixedPower(p) => (row.mu1, row.mu2) = (Some(p.mu1), Some(p.mu2)),
    }
    let fit = policy.fit();
    row.converged = fit.converged;
    row.residuals = [fit.residual_c1, fit.residual_c2, fit.residual_c3];
    Ok(row)
}

/// Runs every protocol at every power on one trace drawn from `spec`. Rows
/// come out grouped by protocol, in sweep order.
pub fn run_sweep(spec: &RunSpec) -> Result<SweepTable> {
    run_sweep_with(spec, &mut ThresholdCache::default(), |_| ())
}

/// Like [`run_sweep`], reusing `cache` and calling `progress` after each row.
pub fn run_sweep_with(
    spec: &RunSpec,
    cache: &mut ThresholdCache,
    mut progress: impl FnMut(&SweepRow),
) -> Result<SweepTable> {
    spec.validate()?;
    let trace = sample_trace(spec.stats()?, spec.n_slots, spec.seed)?;
    let mut table = SweepTable::default();
    for &protocol in &spec.protocols {
        for &pt_db in &spec.pt_db_sweep {
            let row = match protocol.benchmark() {
                None => run_proposed(spec, pt_db, &trace, cache)?,
                Some(kind) => run_benchmark(spec, kind, pt_db, &trace)?,
            };
            progress(&row);
            table.rows.push(row);
        }
    }
    Ok(table)
}

/// Writes `table` to `out`.
pub fn emit<W: Write>(table: &SweepTable, format: Format, out: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(spec_err("nothing to emit: the table is empty"));
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in &table.rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &table.rows)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Writes `table` to the file at `path`.
pub fn emit_to_path(table: &SweepTable, format: Format, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    emit(table, format, BufWriter::new(file))
}

/// Reads back a JSON table written by [`emit`].
pub fn read_json(text: &str) -> Result<SweepTable> {
    Ok(SweepTable {
        rows: serde_json::from_str(text)?,
    })
}
