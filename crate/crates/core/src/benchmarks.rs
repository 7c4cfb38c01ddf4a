//! Reference protocols.
//!
//! * TDBC: a fixed three-slot cycle of user 1 uplink, user 2 uplink and relay
//!   broadcast with no buffering from one cycle to the next, either with every
//!   node at `Pt` or with per-cycle power allocation sharing one power dual.
//! * Fixed-power adaptive selection: every node transmits at the same fixed
//!   power `P`, and each slot goes to the mode with the largest dual-weighted
//!   capacity, from all six modes or from {M1, M2, M6} only. The weights are
//!   calibrated for rate balance and `P` is scaled to spend the budget.

use std::cell::Cell;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibrate::RESIDUAL_EPS;
use crate::channel::{ChannelState, ChannelTrace};
use crate::engine::{Accumulator, ProtocolPolicy, QueueState};
use crate::error::{param, Result};
use crate::policy::{broadcast_power, select_mode_among, Mode, SelectionMetrics, SlotDecision};
use crate::rate::{c, link_capacities, PowerTriple};
use crate::search::{find_root, RootSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    TdbcNoPa,
    TdbcPa,
    FixedPowerSixMode,
    FixedPowerThreeMode,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 4] = [
        Self::TdbcNoPa,
        Self::TdbcPa,
        Self::FixedPowerSixMode,
        Self::FixedPowerThreeMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::TdbcNoPa => "tdbc_no_pa",
            Self::TdbcPa => "tdbc_pa",
            Self::FixedPowerSixMode => "fixed_power_six_mode",
            Self::FixedPowerThreeMode => "fixed_power_three_mode",
        }
    }

    fn candidates(self) -> &'static [Mode] {
        match self {
            Self::FixedPowerSixMode => &Mode::ALL,
            _ => &[Mode::M1, Mode::M2, Mode::M6],
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| param(format!("unknown benchmark {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub kind: BenchmarkKind,
    /// total average power budget (linear)
    pub p_total: f64,
    /// per-node power of the fixed-power protocols; found from the budget when absent
    pub fixed_power: Option<f64>,
    /// `(μ1, μ2)` of the fixed-power protocols; calibrated when absent
    pub thresholds: Option<(f64, f64)>,
    pub tol_rate: f64,
    pub tol_power: f64,
    pub max_iters: usize,
}

impl BenchmarkConfig {
    pub fn new(kind: BenchmarkKind, p_total: f64) -> Result<Self> {
        let cfg = Self {
            kind,
            p_total,
            fixed_power: None,
            thresholds: None,
            tol_rate: 1e-3,
            tol_power: 1e-3,
            max_iters: 200,
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
        if let Some(p) = self.fixed_power {
            if !(p > 0.0 && p.is_finite()) {
                return Err(param(format!("fixed_power must be positive and finite, got {p}")));
            }
        }
        if let Some((m1, m2)) = self.thresholds {
            if !((0.0..=1.0).contains(&m1) && (0.0..=1.0).contains(&m2)) {
                return Err(param(format!("thresholds ({m1}, {m2}) must lie in [0, 1]")));
            }
        }
        for (name, tol) in [("tol_rate", self.tol_rate), ("tol_power", self.tol_power)] {
            if !(tol > 0.0 && tol <= 0.1) {
                return Err(param(format!("{name} must lie in (0, 0.1], got {tol}")));
            }
        }
        if self.max_iters == 0 {
            return Err(param("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of fitting a benchmark's free parameters to a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFit {
    /// `(R̄1r − R̄r2) / R̄r2` without queue clipping (0 for TDBC)
    pub residual_c1: f64,
    pub residual_c2: f64,
    /// `(P̄ − Pt) / Pt`
    pub residual_c3: f64,
    pub converged: bool,
}

/// TDBC mode of a slot: 1, 2, 0 (mod 3) map to M1, M2, M6.
pub fn tdbc_mode(slot: u64) -> Mode {
    match slot % 3 {
        1 => Mode::M1,
        2 => Mode::M2,
        _ => Mode::M6,
    }
}

/// Gains seen by one TDBC cycle: user 1's uplink, user 2's uplink, and both
/// downlinks of the broadcast slot. Missing slots (a trace that ends
/// mid-cycle) are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CycleGains {
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
}

impl CycleGains {
    fn complete(&self) -> bool {
        [self.a1, self.a2, self.b1, self.b2].iter().all(|g| !g.is_nan())
    }
}

/// Powers and end-to-end rates of one cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct CyclePlan {
    p1: f64,
    p2: f64,
    pr: f64,
    /// user 1 to user 2
    r12: f64,
    /// user 2 to user 1
    r21: f64,
}

impl CyclePlan {
    fn power(&self) -> f64 {
        self.p1 + self.p2 + self.pr
    }
}

fn fixed_cycle(p: f64, g: &CycleGains) -> CyclePlan {
    let (r12, r21) = if g.complete() {
        (c(p * g.a1).min(c(p * g.b2)), c(p * g.a2).min(c(p * g.b1)))
    } else {
        (0.0, 0.0)
    };
    CyclePlan {
        p1: p,
        p2: p,
        pr: p,
        r12,
        r21,
    }
}

/// Maximizes `R12 + R21 − γ·(p1 + p2 + pr)` for one cycle.
///
/// Each direction runs at a common SNR `x` on both of its hops, so
/// `p1 = x/a1` and the relay needs `x/b2`; the relay power is the larger of
/// the two directions' needs. The optimum either has one direction setting the
/// relay power (the other then only pays for its uplink) or both needing the
/// same relay power, which is a weighted broadcast problem.
fn allocated_cycle(gamma: f64, g: &CycleGains) -> CyclePlan {
    if !g.complete() {
        return CyclePlan::default();
    }
    let lg = gamma * LN_2;
    let inv = |s: f64| if s > 0.0 { 1.0 / s } else { f64::INFINITY };
    let over = |x: f64, s: f64| if x > 0.0 { x / s } else { 0.0 };
    // SNR where one more unit stops paying for `cost` power per unit SNR
    let level = |cost: f64| (1.0 / (lg * cost) - 1.0).max(0.0);
    let build = |x: f64, y: f64| CyclePlan {
        p1: over(x, g.a1),
        p2: over(y, g.a2),
        pr: over(x, g.b2).max(over(y, g.b1)),
        r12: c(x),
        r21: c(y),
    };
    let value = |p: &CyclePlan| {
        let v = p.r12 + p.r21 - gamma * p.power();
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut candidates = vec![
        CyclePlan::default(),
        build(level(inv(g.a1) + inv(g.b2)), level(inv(g.a2))),
        build(level(inv(g.a1)), level(inv(g.a2) + inv(g.b1))),
    ];
    if g.a1 > 0.0 && g.a2 > 0.0 {
        let pr = broadcast_power(g.b1, g.b2, 1.0, 1.0, lg * (1.0 + g.b2 / g.a1 + g.b1 / g.a2));
        candidates.push(build(pr * g.b2, pr * g.b1));
    }
    candidates
        .into_iter()
        .max_by(|p, q| value(p).total_cmp(&value(q)))
        .expect("non-empty candidate list")
}

/// Time-division broadcast without buffering across cycles.
///
/// Slots `3k+1`, `3k+2` and `3k+3` form a cycle: user 1 uplink, user 2
/// uplink, relay broadcast. The relay forwards in the broadcast slot what it
/// received during the same cycle, so each user sends at the rate its cycle's
/// broadcast can carry, e.g. `min(C(p1·a1), C(pr·b2))` for user 1. Users
/// therefore know the gains of their own cycle, and the policy is built for
/// one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdbcPolicy {
    pub p_total: f64,
    /// power dual of the allocating variant; `None` means every active node
    /// transmits at `p_total`
    pub gamma: Option<f64>,
    pub fit: BenchmarkFit,
    #[serde(skip)]
    cycles: Vec<(CycleGains, CyclePlan)>,
}

fn cycle_gains(trace: &ChannelTrace) -> Result<Vec<CycleGains>> {
    let mut cycles: Vec<CycleGains> = Vec::with_capacity(trace.len().div_ceil(3));
    for ch in trace {
        let k = ((ch.slot - 1) / 3) as usize;
        if cycles.len() <= k {
            cycles.resize(
                k + 1,
                CycleGains {
                    a1: f64::NAN,
                    a2: f64::NAN,
                    b1: f64::NAN,
                    b2: f64::NAN,
                },
            );
        }
        let g = &mut cycles[k];
        match tdbc_mode(ch.slot) {
            Mode::M1 => g.a1 = ch.s1,
            Mode::M2 => g.a2 = ch.s2,
            _ => (g.b1, g.b2) = (ch.s1, ch.s2),
        }
    }
    Ok(cycles)
}

fn check_budget(p_total: f64) -> Result<()> {
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(param(format!("p_total must be positive and finite, got {p_total}")));
    }
    Ok(())
}

impl TdbcPolicy {
    /// Every active node transmits at `p_total`.
    pub fn without_power_allocation(p_total: f64, trace: &ChannelTrace) -> Result<Self> {
        check_budget(p_total)?;
        let cycles = cycle_gains(trace)?
            .into_iter()
            .map(|g| (g, fixed_cycle(p_total, &g)))
            .collect();
        Ok(Self {
            p_total,
            gamma: None,
            fit: BenchmarkFit {
                converged: true,
                ..Default::default()
            },
            cycles,
        })
    }

    /// Per-cycle power allocation at a given power dual.
    pub fn with_dual(p_total: f64, gamma: f64, trace: &ChannelTrace) -> Result<Self> {
        check_budget(p_total)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(param(format!("gamma must be positive and finite, got {gamma}")));
        }
        let cycles: Vec<_> = cycle_gains(trace)?
            .into_iter()
            .map(|g| (g, allocated_cycle(gamma, &g)))
            .collect();
        let spent: f64 = cycles.iter().map(|(_, p)| p.power()).sum();
        let residual = (spent / trace.len().max(1) as f64 - p_total) / p_total;
        Ok(Self {
            p_total,
            gamma: Some(gamma),
            fit: BenchmarkFit {
                residual_c3: residual,
                ..Default::default()
            },
            cycles,
        })
    }

    /// Per-cycle power allocation with the dual fitted so that the average
    /// power over `trace` equals `p_total`.
    pub fn with_power_allocation(p_total: f64, trace: &ChannelTrace, tol_power: f64, max_iters: usize) -> Result<Self> {
        check_budget(p_total)?;
        if trace.is_empty() {
            return Err(param("cannot fit TDBC power allocation on an empty trace"));
        }
        let opts = RootSearch {
            x0: (1.0 / (LN_2 * (p_total + 1.0))).ln(),
            step: 4f64.ln(),
            max_step: f64::INFINITY,
            x_min: -60.0,
            x_max: 60.0,
            x_tol: 1e-12,
            max_evals: max_iters,
        };
        let out = find_root(
            opts,
            |u| {
                let policy = Self::with_dual(p_total, u.exp(), trace)?;
                Ok((policy.fit.residual_c3, policy))
            },
            |_, p| p.fit.residual_c3.abs() / tol_power,
        )?;
        let converged = out.converged();
        let mut policy = out.value;
        policy.fit.converged = converged;
        Ok(policy)
    }

    fn decide_slot(&self, ch: &ChannelState) -> Result<SlotDecision> {
        let mode = tdbc_mode(ch.slot);
        let foreign = || {
            param(format!(
                "slot {} is not part of the trace this TDBC policy was built for",
                ch.slot
            ))
        };
        let (g, plan) = self
            .cycles
            .get(((ch.slot.max(1) - 1) / 3) as usize)
            .ok_or_else(foreign)?;
        let mut d = match mode {
            Mode::M1 if ch.s1 == g.a1 => SlotDecision::new(ch, mode, PowerTriple::new(plan.p1, 0.0, 0.0)?, 0.0)?,
            Mode::M2 if ch.s2 == g.a2 => SlotDecision::new(ch, mode, PowerTriple::new(0.0, plan.p2, 0.0)?, 0.0)?,
            Mode::M6 if ch.s1 == g.b1 && ch.s2 == g.b2 => {
                return SlotDecision::new(ch, mode, PowerTriple::new(0.0, 0.0, plan.pr)?, 0.0)
            }
            _ => return Err(foreign()),
        };
        // users send at the end-to-end rate of their cycle, never above capacity
        d.rates.c1r = d.rates.c1r.min(plan.r12);
        d.rates.c2r = d.rates.c2r.min(plan.r21);
        Ok(d)
    }
}

impl ProtocolPolicy for TdbcPolicy {
    fn decide(&self, ch: &ChannelState, _queues: &QueueState) -> Result<SlotDecision> {
        self.decide_slot(ch)
    }
}

/// Adaptive mode selection with all nodes at one fixed power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPowerPolicy {
    pub kind: BenchmarkKind,
    pub power: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// multiple-access time share
    pub t: f64,
    pub fit: BenchmarkFit,
}

/// Smallest rate threshold tried by the calibration.
const MU_FLOOR: f64 = 1e-6;

impl FixedPowerPolicy {
    /// Policy with the metric-maximizing decoding order: the user with the
    /// larger threshold is decoded first.
    pub fn new(kind: BenchmarkKind, power: f64, mu1: f64, mu2: f64) -> Result<Self> {
        if !matches!(
            kind,
            BenchmarkKind::FixedPowerSixMode | BenchmarkKind::FixedPowerThreeMode
        ) {
            return Err(param(format!("{kind} is not a fixed-power protocol")));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(param(format!("fixed power must be positive and finite, got {power}")));
        }
        if !((0.0..=1.0).contains(&mu1) && (0.0..=1.0).contains(&mu2)) {
            return Err(param(format!("thresholds ({mu1}, {mu2}) must lie in [0, 1]")));
        }
        let t = if mu1 >= mu2 { 0.0 } else { 1.0 };
        Ok(Self {
            kind,
            power,
            mu1,
            mu2,
            t,
            fit: BenchmarkFit::default(),
        })
    }

    /// Overrides the time share. Any value is metric-optimal when `μ1 = μ2`.
    pub fn with_time_share(mut self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(param(format!("time share {t} outside [0, 1]")));
        }
        self.t = t;
        Ok(self)
    }

    /// Dual-weighted capacities of the six modes at the fixed power.
    pub fn metrics(&self, ch: &ChannelState) -> Result<SelectionMetrics> {
        let p = self.power;
        let caps = link_capacities(ch, &PowerTriple::new(p, p, p)?, self.t)?;
        let (mu1, mu2) = (self.mu1, self.mu2);
        Ok(SelectionMetrics {
            lambda: [
                (1.0 - mu1) * caps.c1r,
                (1.0 - mu2) * caps.c2r,
                (1.0 - mu1) * caps.c12r + (1.0 - mu2) * caps.c21r,
                mu2 * caps.cr1,
                mu1 * caps.cr2,
                mu1 * caps.cr2 + mu2 * caps.cr1,
            ],
        })
    }

    fn decide_slot(&self, ch: &ChannelState) -> Result<SlotDecision> {
        let mode = select_mode_among(&self.metrics(ch)?, self.kind.candidates())?;
        let p = self.power;
        SlotDecision::new(ch, mode, PowerTriple::new(p, p, p)?, self.t)
    }

    /// Residuals over `trace` without queue clipping.
    pub fn evaluate(&self, trace: &ChannelTrace, p_total: f64) -> Result<BenchmarkFit> {
        let mut acc = Accumulator::default();
        for ch in trace {
            acc.add_unclipped(&self.decide_slot(ch)?);
        }
        let r = acc.report(QueueState::default());
        Ok(BenchmarkFit {
            residual_c1: (r.r_1r - r.r_r2) / r.r_r2.max(RESIDUAL_EPS),
            residual_c2: (r.r_2r - r.r_r1) / r.r_r1.max(RESIDUAL_EPS),
            residual_c3: (r.avg_power - p_total) / p_total,
            converged: false,
        })
    }

    fn with_fit(mut self, trace: &ChannelTrace, p_total: f64) -> Result<Self> {
        self.fit = self.evaluate(trace, p_total)?;
        Ok(self)
    }

    /// Grades a balance residual against `tol`; `<= 1` is acceptable. A
    /// negative residual with the threshold at its floor is slack: the relay
    /// could forward more than the opposite uplink supplies, and the buffer
    /// caps delivery.
    fn balance_score(residual: f64, mu: f64, tol: f64) -> f64 {
        if residual < 0.0 && mu <= MU_FLOOR {
            0.0
        } else {
            residual.abs() / tol
        }
    }

    fn score(&self, tol: f64) -> f64 {
        Self::balance_score(self.fit.residual_c1, self.mu1, tol).max(Self::balance_score(
            self.fit.residual_c2,
            self.mu2,
            tol,
        ))
    }

    /// Calibrates `(μ1, μ2)` for rate balance at a given power, by the same
    /// nested monotone search as the optimal protocol with the power dual
    /// removed.
    fn balance_thresholds(
        kind: BenchmarkKind,
        power: f64,
        trace: &ChannelTrace,
        cfg: &BenchmarkConfig,
    ) -> Result<Self> {
        let tol = cfg.tol_rate / 2.0;
        let pt = cfg.p_total;
        let mu1_warm = Cell::new(0.5);
        let opts = |x0: f64, x_min: f64, x_max: f64, step: f64| RootSearch {
            x0,
            step,
            max_step: 0.1,
            x_min,
            x_max,
            x_tol: 1e-12,
            max_evals: cfg.max_iters,
        };
        let c1_score = |p: &Self| Self::balance_score(p.fit.residual_c1, p.mu1, tol);

        let inner = |mu2: f64| -> Result<Self> {
            let ordered = find_root(
                opts(mu1_warm.get(), MU_FLOOR, 1.0 - MU_FLOOR, 0.05),
                |mu1| {
                    let p = Self::new(kind, power, mu1, mu2)?.with_fit(trace, pt)?;
                    Ok((squash(p.fit.residual_c1), p))
                },
                |_, p| c1_score(p),
            )?;
            if ordered.converged() || !kind.candidates().contains(&Mode::M3) {
                return Ok(ordered.value);
            }
            // The best decoding order flips at μ1 = μ2, where the rates jump.
            // Balance there with the time share instead; user 1's rate grows with t.
            let tie = find_root(
                opts(0.5, 0.0, 1.0, 0.25),
                |t| {
                    let p = Self::new(kind, power, mu2, mu2)?
                        .with_time_share(t)?
                        .with_fit(trace, pt)?;
                    Ok((-squash(p.fit.residual_c1), p))
                },
                |_, p| c1_score(p),
            )?;
            Ok(if tie.score < ordered.score {
                tie.value
            } else {
                ordered.value
            })
        };

        let out = find_root(
            opts(0.5, MU_FLOOR, 1.0 - MU_FLOOR, 0.05),
            |mu2| {
                let p = inner(mu2)?;
                mu1_warm.set(p.mu1);
                Ok((squash(p.fit.residual_c2), p))
            },
            |_, p| p.score(tol),
        )?;
        Ok(out.value)
    }

    /// Builds the policy for `cfg`, calibrating whatever `cfg` leaves open on `trace`.
    pub fn fitted(cfg: &BenchmarkConfig, trace: &ChannelTrace) -> Result<Self> {
        cfg.validate()?;
        if trace.is_empty() {
            return Err(param("cannot fit a benchmark on an empty trace"));
        }
        let kind = cfg.kind;
        let at_power = |power: f64| -> Result<Self> {
            match cfg.thresholds {
                Some((mu1, mu2)) => Self::new(kind, power, mu1, mu2)?.with_fit(trace, cfg.p_total),
                None => Self::balance_thresholds(kind, power, trace, cfg),
            }
        };

        let mut policy = match cfg.fixed_power {
            Some(p) => at_power(p)?,
            None if kind == BenchmarkKind::FixedPowerThreeMode => at_power(cfg.p_total)?,
            None => {
                // one node per slot except in M3, so the power lies in [Pt/2, Pt]
                let pt = cfg.p_total;
                let opts = RootSearch {
                    x0: pt,
                    step: pt / 4.0,
                    max_step: f64::INFINITY,
                    x_min: pt / 2.0,
                    x_max: pt,
                    x_tol: pt * 1e-12,
                    max_evals: cfg.max_iters,
                };
                let tol = cfg.tol_power;
                find_root(
                    opts,
                    |p| {
                        let policy = at_power(p)?;
                        Ok((-policy.fit.residual_c3, policy))
                    },
                    |_, policy: &Self| policy.fit.residual_c3.abs() / tol,
                )?
                .value
            }
        };
        let balanced = cfg.thresholds.is_some() || policy.score(cfg.tol_rate) <= 1.0;
        let spends_budget = cfg.fixed_power.is_some() || policy.fit.residual_c3.abs() <= cfg.tol_power;
        policy.fit.converged = balanced && spends_budget;
        Ok(policy)
    }
}

impl ProtocolPolicy for FixedPowerPolicy {
    fn decide(&self, ch: &ChannelState, _queues: &QueueState) -> Result<SlotDecision> {
        self.decide_slot(ch)
    }
}

/// Maps a relative residual `r = a/b − 1` into `(-1, 1)`, keeping its sign.
fn squash(r: f64) -> f64 {
    r / (2.0 + r.abs())
}

/// Any benchmark protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BenchmarkPolicy {
    Tdbc(TdbcPolicy),
    FixedPower(FixedPowerPolicy),
}

impl BenchmarkPolicy {
    pub fn fit(&self) -> &BenchmarkFit {
        match self {
            Self::Tdbc(p) => &p.fit,
            Self::FixedPower(p) => &p.fit,
        }
    }
}

impl ProtocolPolicy for BenchmarkPolicy {
    fn decide(&self, ch: &ChannelState, queues: &QueueState) -> Result<SlotDecision> {
        match self {
            Self::Tdbc(p) => p.decide(ch, queues),
            Self::FixedPower(p) => p.decide(ch, queues),
        }
    }
}

/// TDBC policy for `cfg` built for `trace`, fitting the power dual of the
/// allocating variant on it.
pub fn tdbc_policy(cfg: &BenchmarkConfig, trace: &ChannelTrace) -> Result<TdbcPolicy> {
    cfg.validate()?;
    match cfg.kind {
        BenchmarkKind::TdbcNoPa => TdbcPolicy::without_power_allocation(cfg.p_total, trace),
        BenchmarkKind::TdbcPa => TdbcPolicy::with_power_allocation(cfg.p_total, trace, cfg.tol_power, cfg.max_iters),
        k => Err(param(format!("{k} is not a TDBC variant"))),
    }
}

/// Fixed-power selective policy for `cfg`, calibrated on `trace`.
pub fn fixed_power_policy(cfg: &BenchmarkConfig, trace: &ChannelTrace) -> Result<FixedPowerPolicy> {
    FixedPowerPolicy::fitted(cfg, trace)
}

pub fn benchmark_policy(cfg: &BenchmarkConfig, trace: &ChannelTrace) -> Result<BenchmarkPolicy> {
    match cfg.kind {
        BenchmarkKind::TdbcNoPa | BenchmarkKind::TdbcPa => tdbc_policy(cfg, trace).map(BenchmarkPolicy::Tdbc),
        _ => fixed_power_policy(cfg, trace).map(BenchmarkPolicy::FixedPower),
    }
}
