//! Per-slot optimal mode selection and power allocation.
//!
//! Each mode `k` has a selection metric `Λk`: its dual-weighted capacity minus
//! `γ` times the power it spends, evaluated at the power that maximizes it.
//! The slot goes to the mode with the largest metric among M1, M2, M3 and M6;
//! M4 and M5 are dominated by M6 and only computed for diagnostics.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelState, FadingStatistics};
use crate::engine::{ProtocolPolicy, QueueState};
use crate::error::{param, Error, Result};
use crate::rate::{c, link_capacities, LinkCapacities, PowerTriple};

/// One of the six transmission modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// user 1 to relay
    M1,
    /// user 2 to relay
    M2,
    /// multiple access, both users to relay
    M3,
    /// relay to user 1
    M4,
    /// relay to user 2
    M5,
    /// broadcast, relay to both users
    M6,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::M1, Mode::M2, Mode::M3, Mode::M4, Mode::M5, Mode::M6];

    /// 1-based mode number.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(k: usize) -> Result<Self> {
        k.checked_sub(1)
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or_else(|| param(format!("mode index {k} outside 1..=6")))
    }

    /// Keeps only the powers of the nodes that transmit in this mode.
    pub fn restrict(self, p: PowerTriple) -> PowerTriple {
        match self {
            Mode::M1 => PowerTriple {
                p1: p.p1,
                ..PowerTriple::ZERO
            },
            Mode::M2 => PowerTriple {
                p2: p.p2,
                ..PowerTriple::ZERO
            },
            Mode::M3 => PowerTriple {
                p1: p.p1,
                p2: p.p2,
                pr: 0.0,
            },
            Mode::M4 | Mode::M5 | Mode::M6 => PowerTriple {
                pr: p.pr,
                ..PowerTriple::ZERO
            },
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.index())
    }
}

/// Modes the optimal policy chooses from.
pub const OPTIMAL_CANDIDATES: [Mode; 4] = [Mode::M1, Mode::M2, Mode::M3, Mode::M6];

/// Dual variables of the two rate-balance constraints and the power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    mu1: f64,
    mu2: f64,
    gamma: f64,
}

impl Thresholds {
    /// Interior thresholds: `0 < mu1, mu2 < 1` and `gamma > 0`.
    pub fn new(mu1: f64, mu2: f64, gamma: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu1 < 1.0 && mu2 > 0.0 && mu2 < 1.0) {
            return Err(param(format!("thresholds ({mu1}, {mu2}) must lie in (0, 1)")));
        }
        Self::new_closed(mu1, mu2, gamma)
    }

    /// Like [`Thresholds::new`] but admits the boundary values 0 and 1 for the
    /// rate thresholds. Only useful for scanning the threshold region.
    pub fn new_closed(mu1: f64, mu2: f64, gamma: f64) -> Result<Self> {
        if !((0.0..=1.0).contains(&mu1) && (0.0..=1.0).contains(&mu2)) {
            return Err(param(format!("thresholds ({mu1}, {mu2}) must lie in [0, 1]")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(param(format!("gamma must be positive and finite, got {gamma}")));
        }
        Ok(Self { mu1, mu2, gamma })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new_closed(self.mu1, self.mu2, gamma)
    }
}

/// Metric-maximizing power of every mode for one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModePowers {
    pub p1_m1: f64,
    pub p2_m2: f64,
    pub p1_m3: f64,
    pub p2_m3: f64,
    pub pr_m4: f64,
    pub pr_m5: f64,
    pub pr_m6: f64,
}

impl ModePowers {
    /// Powers the nodes use if `mode` is selected.
    pub fn for_mode(&self, mode: Mode) -> PowerTriple {
        let z = PowerTriple::ZERO;
        match mode {
            Mode::M1 => PowerTriple { p1: self.p1_m1, ..z },
            Mode::M2 => PowerTriple { p2: self.p2_m2, ..z },
            Mode::M3 => PowerTriple {
                p1: self.p1_m3,
                p2: self.p2_m3,
                ..z
            },
            Mode::M4 => PowerTriple { pr: self.pr_m4, ..z },
            Mode::M5 => PowerTriple { pr: self.pr_m5, ..z },
            Mode::M6 => PowerTriple { pr: self.pr_m6, ..z },
        }
    }
}

/// Selection metrics `Λ1..Λ6` of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub lambda: [f64; 6],
}

impl SelectionMetrics {
    pub fn get(&self, mode: Mode) -> f64 {
        self.lambda[mode as usize]
    }
}

/// What one slot does: the mode, the powers actually transmitted, the
/// multiple-access time share and the capacities at those powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    pub mode: Mode,
    pub powers: PowerTriple,
    pub t: f64,
    pub rates: LinkCapacities,
}

impl SlotDecision {
    /// Builds a decision, zeroing the powers of nodes that are silent in `mode`.
    pub fn new(ch: &ChannelState, mode: Mode, powers: PowerTriple, t: f64) -> Result<Self> {
        let powers = mode.restrict(PowerTriple::new(powers.p1, powers.p2, powers.pr)?);
        let rates = link_capacities(ch, &powers, t)?;
        Ok(Self { mode, powers, t, rates })
    }

    /// Total power spent in the slot.
    pub fn power(&self) -> f64 {
        self.powers.total()
    }
}

/// Multiple-access time share. Constant over all slots: 0 when `Ω1 >= Ω2`
/// (user 1 decoded first), 1 otherwise.
pub fn optimal_time_share(stats: &FadingStatistics) -> f64 {
    if stats.omega1() >= stats.omega2() {
        0.0
    } else {
        1.0
    }
}

#[inline]
fn inv(s: f64) -> f64 {
    if s > 0.0 {
        1.0 / s
    } else {
        f64::INFINITY
    }
}

#[inline]
fn pos(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Relay power maximizing `w_r1·C(p·s1) + w_r2·C(p·s2) − g·p / ln 2`.
///
/// The positive root of `w_r1·s1/(1 + p·s1) + w_r2·s2/(1 + p·s2) = g`, or 0
/// when the left side is already `<= g` at `p = 0`. `g` is `γ·ln 2`.
pub fn broadcast_power(s1: f64, s2: f64, w_r1: f64, w_r2: f64, g: f64) -> f64 {
    let c0 = g - w_r1 * s1 - w_r2 * s2;
    if c0 >= 0.0 {
        return 0.0;
    }
    let a = g * s1 * s2;
    let b = g * (s1 + s2) - (w_r1 + w_r2) * s1 * s2;
    if a == 0.0 {
        // one gain is zero: the balance is linear in p
        return pos(-c0 / b);
    }
    // a > 0 and c0 < 0, so the discriminant exceeds b^2 and exactly one root
    // is positive. Pick the cancellation-free form of it.
    let sq = (b * b - 4.0 * a * c0).sqrt();
    let root = if b >= 0.0 {
        2.0 * c0 / (-b - sq)
    } else {
        (-b + sq) / (2.0 * a)
    };
    pos(root)
}

/// Closed-form optimal powers of all six modes, with the multiple-access
/// decoding order fixed by the statistics.
pub fn mode_powers(ch: &ChannelState, th: &Thresholds, stats: &FadingStatistics) -> ModePowers {
    mode_powers_at(ch, th, optimal_time_share(stats))
}

pub(crate) fn mode_powers_at(ch: &ChannelState, th: &Thresholds, t: f64) -> ModePowers {
    let (s1, s2) = (ch.s1, ch.s2);
    let g = th.gamma * LN_2;
    let p1_m1 = pos((1.0 - th.mu1) / g - inv(s1));
    let p2_m2 = pos((1.0 - th.mu2) / g - inv(s2));
    let (p1_m3, p2_m3) = multiple_access_powers(ch, th, t, p1_m1, p2_m2);
    ModePowers {
        p1_m1,
        p2_m2,
        p1_m3,
        p2_m3,
        pr_m4: pos(th.mu2 / g - inv(s1)),
        pr_m5: pos(th.mu1 / g - inv(s2)),
        pr_m6: broadcast_power(s1, s2, th.mu2, th.mu1, g),
    }
}

/// Multiple-access powers for decoding order `t` (0 or 1).
///
/// Call the user decoded first (against interference) `a` and the other `b`.
/// The metric is `(1 − μa)·C(pa·sa + pb·sb) + (μa − μb)·C(pb·sb) − γ(pa + pb)`,
/// concave when `μa >= μb`. Both users transmit only if the stationary point
/// has two positive powers, which needs `sa > sb`; otherwise one user is
/// silent and the mode reduces to M1 or M2 with that mode's power.
fn multiple_access_powers(ch: &ChannelState, th: &Thresholds, t: f64, p1_m1: f64, p2_m2: f64) -> (f64, f64) {
    let user1_first = t < 0.5;
    let (sa, sb, mua, mub, pa_alone, pb_alone) = if user1_first {
        (ch.s1, ch.s2, th.mu1, th.mu2, p1_m1, p2_m2)
    } else {
        (ch.s2, ch.s1, th.mu2, th.mu1, p2_m2, p1_m1)
    };
    let g = th.gamma * LN_2;
    let d = mua - mub;
    let (pa, pb) = 'pick: {
        if d > 0.0 && sb > 0.0 && sa > sb {
            let pa = (1.0 - mua) / g - d / g / (sa / sb - 1.0);
            let pb = d / g / (1.0 - sb / sa) - 1.0 / sb;
            if pa > 0.0 && pb > 0.0 {
                break 'pick (pa, pb);
            }
        }
        let va = (1.0 - mua) * c(pa_alone * sa) - th.gamma * pa_alone;
        let vb = (1.0 - mub) * c(pb_alone * sb) - th.gamma * pb_alone;
        if va >= vb {
            (pa_alone, 0.0)
        } else {
            (0.0, pb_alone)
        }
    };
    if user1_first {
        (pa, pb)
    } else {
        (pb, pa)
    }
}

/// Evaluates `Λ1..Λ6` at the given mode powers and time share.
pub fn selection_metrics(ch: &ChannelState, th: &Thresholds, mp: &ModePowers, t: f64) -> Result<SelectionMetrics> {
    let (mu1, mu2, gamma) = (th.mu1, th.mu2, th.gamma);
    let ma = link_capacities(
        ch,
        &PowerTriple {
            p1: mp.p1_m3,
            p2: mp.p2_m3,
            pr: 0.0,
        },
        t,
    )?;
    let lambda = [
        (1.0 - mu1) * c(mp.p1_m1 * ch.s1) - gamma * mp.p1_m1,
        (1.0 - mu2) * c(mp.p2_m2 * ch.s2) - gamma * mp.p2_m2,
        (1.0 - mu1) * ma.c12r + (1.0 - mu2) * ma.c21r - gamma * (mp.p1_m3 + mp.p2_m3),
        mu2 * c(mp.pr_m4 * ch.s1) - gamma * mp.pr_m4,
        mu1 * c(mp.pr_m5 * ch.s2) - gamma * mp.pr_m5,
        mu1 * c(mp.pr_m6 * ch.s2) + mu2 * c(mp.pr_m6 * ch.s1) - gamma * mp.pr_m6,
    ];
    Ok(SelectionMetrics { lambda })
}

/// Argmax of the metrics over [`OPTIMAL_CANDIDATES`].
pub fn select_mode(metrics: &SelectionMetrics) -> Result<Mode> {
    select_mode_among(metrics, &OPTIMAL_CANDIDATES)
}

/// Argmax of the metrics over `candidates`; ties go to the lowest mode index.
pub fn select_mode_among(metrics: &SelectionMetrics, candidates: &[Mode]) -> Result<Mode> {
    if metrics.lambda.iter().any(|l| l.is_nan()) {
        return Err(Error::Computation(format!(
            "NaN selection metric in {:?}",
            metrics.lambda
        )));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    let mut best: Option<Mode> = None;
    for m in sorted {
        if best.is_none_or(|b| metrics.get(m) > metrics.get(b)) {
            best = Some(m);
        }
    }
    best.ok_or_else(|| param("empty candidate set"))
}

/// Full optimal decision for one slot.
pub fn decide_slot(ch: &ChannelState, th: &Thresholds, stats: &FadingStatistics) -> Result<SlotDecision> {
    let t = optimal_time_share(stats);
    let mp = mode_powers_at(ch, th, t);
    let metrics = selection_metrics(ch, th, &mp, t)?;
    let mode = select_mode(&metrics)?;
    SlotDecision::new(ch, mode, mp.for_mode(mode), t)
}

/// The optimal protocol at fixed thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPolicy {
    pub thresholds: Thresholds,
    pub stats: FadingStatistics,
}

impl OptimalPolicy {
    pub fn new(thresholds: Thresholds, stats: FadingStatistics) -> Self {
        Self { thresholds, stats }
    }
}

impl ProtocolPolicy for OptimalPolicy {
    fn decide(&self, ch: &ChannelState, _queues: &QueueState) -> Result<SlotDecision> {
        decide_slot(ch, &self.thresholds, &self.stats)
    }
}
