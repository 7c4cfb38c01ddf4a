//! Threshold calibration.
//!
//! The thresholds are the dual variables of the two rate-balance constraints
//! and the power budget. On a fixed trace the dual function
//! `D(μ1, μ2, γ) = mean_i max_k Λk(i) + γ·Pt` is convex, with gradient
//! `(R̄r2 − R̄1r, R̄r1 − R̄2r, Pt − P̄)`. Hence average power is nonincreasing in
//! `γ`, and after minimizing over `γ` (and then over `μ1`) each remaining
//! balance residual is nonincreasing in its own threshold. [`calibrate`] uses
//! this to solve three nested one-dimensional monotone root problems: `γ`
//! innermost (in log scale), then `μ1`, then `μ2`.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::channel::{sample_trace, ChannelTrace, FadingStatistics};
use crate::engine::{Accumulator, QueueState, RateReport};
use crate::error::{param, Result};
use crate::policy::{decide_slot, Thresholds};
use crate::search::{find_root, RootSearch};

/// Floor for residual denominators.
pub const RESIDUAL_EPS: f64 = 1e-12;

const MU_MIN: f64 = 1e-6;
const MU_MAX: f64 = 1.0 - 1e-6;
const LN_GAMMA_MIN: f64 = -60.0;
const LN_GAMMA_MAX: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub stats: FadingStatistics,
    /// total average power budget (linear)
    pub p_total: f64,
    pub n_slots: usize,
    pub seed: u64,
    /// relative tolerance on both rate-balance residuals
    pub tol_rate: f64,
    /// relative tolerance on the power residual
    pub tol_power: f64,
    /// evaluation cap for each of the three nested searches
    pub max_iters: usize,
}

impl CalibrationConfig {
    pub const DEFAULT_SLOTS: usize = 10_000;
    pub const DEFAULT_SEED: u64 = 1;
    pub const DEFAULT_TOL: f64 = 1e-3;
    pub const DEFAULT_MAX_ITERS: usize = 200;

    /// Configuration with default horizon, seed, tolerances and iteration cap.
    pub fn new(stats: FadingStatistics, p_total: f64) -> Result<Self> {
        let cfg = Self {
            stats,
            p_total,
            n_slots: Self::DEFAULT_SLOTS,
            seed: Self::DEFAULT_SEED,
            tol_rate: Self::DEFAULT_TOL,
            tol_power: Self::DEFAULT_TOL,
            max_iters: Self::DEFAULT_MAX_ITERS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_total > 0.0 && self.p_total.is_finite()) {
            return Err(param(format!(
                "p_total must be positive and finite, got {}",
                self.p_total
            )));
        }
        for (name, tol) in [("tol_rate", self.tol_rate), ("tol_power", self.tol_power)] {
            if !(tol > 0.0 && tol <= 0.1) {
                return Err(param(format!("{name} must lie in (0, 0.1], got {tol}")));
            }
        }
        if self.n_slots < 1000 {
            return Err(param(format!("n_slots must be at least 1000, got {}", self.n_slots)));
        }
        if self.max_iters == 0 {
            return Err(param("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Constraint residuals of one threshold triple, without queue clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEvaluation {
    /// `(R̄1r − R̄r2) / max(R̄r2, ε)`; positive means buffer 1 fills faster than it drains
    pub residual_c1: f64,
    /// `(R̄2r − R̄r1) / max(R̄r1, ε)`
    pub residual_c2: f64,
    /// `(P̄ − Pt) / Pt`
    pub residual_c3: f64,
    pub report: RateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub thresholds: Thresholds,
    pub residual_c1: f64,
    pub residual_c2: f64,
    pub residual_c3: f64,
    /// evaluations of the outermost (`μ2`) search
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the optimal policy over the whole trace, counting relay rates at full
/// capacity in every slot that uses them.
pub fn evaluate_on_trace(trace: &ChannelTrace, th: &Thresholds, p_total: f64) -> Result<ThresholdEvaluation> {
    if trace.is_empty() {
        return Err(param("cannot evaluate thresholds on an empty trace"));
    }
    let stats = trace.stats();
    let mut acc = Accumulator::default();
    for ch in trace {
        acc.add_unclipped(&decide_slot(ch, th, &stats)?);
    }
    let report = acc.report(QueueState::default());
    Ok(ThresholdEvaluation {
        residual_c1: (report.r_1r - report.r_r2) / report.r_r2.max(RESIDUAL_EPS),
        residual_c2: (report.r_2r - report.r_r1) / report.r_r1.max(RESIDUAL_EPS),
        residual_c3: (report.avg_power - p_total) / p_total,
        report,
    })
}

/// Evaluates `th` on the calibration trace described by `cfg`.
pub fn evaluate_thresholds(th: &Thresholds, cfg: &CalibrationConfig) -> Result<ThresholdEvaluation> {
    Calibrator::new(*cfg)?.evaluate(th)
}

/// Calibrates the thresholds for `cfg`. Non-convergence is reported through
/// [`CalibrationResult::converged`], with the best thresholds found.
pub fn calibrate(cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    Calibrator::new(*cfg)?.calibrate()
}

/// Holds the sampled calibration trace so several searches can share it.
#[derive(Debug, Clone)]
pub struct Calibrator {
    cfg: CalibrationConfig,
    trace: ChannelTrace,
}

/// Maps a balance `a − b` into `[-1, 1]` with the sign of `a/b − 1`.
fn balance(a: f64, b: f64) -> f64 {
    (a - b) / (a + b + RESIDUAL_EPS)
}

type Point = (Thresholds, ThresholdEvaluation);

impl Calibrator {
    pub fn new(cfg: CalibrationConfig) -> Result<Self> {
        cfg.validate()?;
        let trace = sample_trace(cfg.stats, cfg.n_slots, cfg.seed)?;
        Ok(Self { cfg, trace })
    }

    /// Uses a caller-supplied trace instead of sampling one. The trace's own
    /// statistics take precedence over `cfg.stats`.
    pub fn with_trace(mut cfg: CalibrationConfig, trace: ChannelTrace) -> Result<Self> {
        if trace.is_empty() {
            return Err(param("calibration trace is empty"));
        }
        cfg.stats = trace.stats();
        cfg.n_slots = trace.len();
        cfg.validate()?;
        Ok(Self { cfg, trace })
    }

    pub fn config(&self) -> &CalibrationConfig {
        &self.cfg
    }

    pub fn trace(&self) -> &ChannelTrace {
        &self.trace
    }

    pub fn evaluate(&self, th: &Thresholds) -> Result<ThresholdEvaluation> {
        evaluate_on_trace(&self.trace, th, self.cfg.p_total)
    }

    fn gamma_tol(&self) -> f64 {
        self.cfg.tol_power / 4.0
    }

    fn rate_tol(&self) -> f64 {
        self.cfg.tol_rate / 2.0
    }

    /// Solves for the `γ` that spends the budget at fixed rate thresholds,
    /// starting the search at `gamma0`. Works for boundary values of `μ` too.
    pub fn solve_gamma(&self, mu1: f64, mu2: f64, gamma0: f64) -> Result<(Thresholds, ThresholdEvaluation)> {
        let out = self.gamma_search(mu1, mu2, gamma0)?;
        Ok(out.value)
    }

    fn gamma_search(&self, mu1: f64, mu2: f64, gamma0: f64) -> Result<crate::search::RootOutcome<Point>> {
        let opts = RootSearch {
            x0: gamma0.max(1e-300).ln(),
            step: 4f64.ln(),
            max_step: f64::INFINITY,
            x_min: LN_GAMMA_MIN,
            x_max: LN_GAMMA_MAX,
            x_tol: 1e-12,
            max_evals: self.cfg.max_iters,
        };
        let tol = self.gamma_tol();
        find_root(
            opts,
            |u| {
                let th = Thresholds::new_closed(mu1, mu2, u.exp())?;
                let ev = self.evaluate(&th)?;
                Ok((ev.residual_c3, (th, ev)))
            },
            |_, (_, ev)| ev.residual_c3.abs() / tol,
        )
    }

    /// Initial guess for `γ`: the water level of a single link spending the
    /// whole budget.
    fn gamma_guess(&self) -> f64 {
        1.0 / (std::f64::consts::LN_2 * (self.cfg.p_total + 1.0))
    }

    pub fn calibrate(&self) -> Result<CalibrationResult> {
        let gamma_warm = Cell::new(self.gamma_guess());
        let mu1_warm = Cell::new(0.5);
        let (rt, pt) = (self.rate_tol(), self.gamma_tol());
        let mu_opts = |x0: f64| RootSearch {
            x0,
            step: 0.05,
            max_step: 0.1,
            x_min: MU_MIN,
            x_max: MU_MAX,
            x_tol: 1e-12,
            max_evals: self.cfg.max_iters,
        };

        let inner = |mu2: f64| {
            find_root(
                mu_opts(mu1_warm.get()),
                |mu1| {
                    let out = self.gamma_search(mu1, mu2, gamma_warm.get())?;
                    let (th, ev) = out.value;
                    gamma_warm.set(th.gamma());
                    let f = balance(ev.report.r_1r, ev.report.r_r2);
                    Ok((f, (th, ev)))
                },
                |_, (_, ev): &Point| (ev.residual_c1.abs() / rt).max(ev.residual_c3.abs() / pt),
            )
        };

        let outer = find_root(
            mu_opts(0.5),
            |mu2| {
                let out = inner(mu2)?;
                let (th, ev) = out.value;
                mu1_warm.set(th.mu1());
                gamma_warm.set(th.gamma());
                let f = balance(ev.report.r_2r, ev.report.r_r1);
                Ok((f, (th, ev)))
            },
            |_, (_, ev): &Point| {
                (ev.residual_c1.abs() / rt)
                    .max(ev.residual_c2.abs() / rt)
                    .max(ev.residual_c3.abs() / pt)
            },
        )?;

        let (thresholds, ev) = outer.value;
        let (c1, c2, c3) = (ev.residual_c1.abs(), ev.residual_c2.abs(), ev.residual_c3.abs());
        let interior =
            thresholds.mu1() > 0.0 && thresholds.mu1() < 1.0 && thresholds.mu2() > 0.0 && thresholds.mu2() < 1.0;
        Ok(CalibrationResult {
            thresholds,
            residual_c1: c1,
            residual_c2: c2,
            residual_c3: c3,
            iterations: outer.evals,
            converged: interior && c1 <= self.cfg.tol_rate && c2 <= self.cfg.tol_rate && c3 <= self.cfg.tol_power,
        })
    }
}
