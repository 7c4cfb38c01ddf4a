//! Slot-by-slot simulation with the relay's two buffers.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelState, ChannelTrace};
use crate::error::{param, Error, Result};
use crate::policy::{Mode, SlotDecision};

/// Buffer contents at the relay in bits/symbol. `q1` holds data from user 1
/// (destined to user 2), `q2` data from user 2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    pub q1: f64,
    pub q2: f64,
}

impl QueueState {
    pub fn new(q1: f64, q2: f64) -> Result<Self> {
        if !(q1 >= 0.0 && q2 >= 0.0 && q1.is_finite() && q2.is_finite()) {
            return Err(param(format!(
                "queue contents must be finite and >= 0, got ({q1}, {q2})"
            )));
        }
        Ok(Self { q1, q2 })
    }
}

/// Rates realized in a single slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotRates {
    pub r1r: f64,
    pub r2r: f64,
    pub rr1: f64,
    pub rr2: f64,
}

/// A transmission protocol evaluated one slot at a time.
///
/// Implementations must be deterministic in their configuration and inputs.
pub trait ProtocolPolicy {
    fn decide(&self, ch: &ChannelState, queues: &QueueState) -> Result<SlotDecision>;
}

impl<P: ProtocolPolicy + ?Sized> ProtocolPolicy for &P {
    fn decide(&self, ch: &ChannelState, queues: &QueueState) -> Result<SlotDecision> {
        (**self).decide(ch, queues)
    }
}

impl<P: ProtocolPolicy + ?Sized> ProtocolPolicy for Box<P> {
    fn decide(&self, ch: &ChannelState, queues: &QueueState) -> Result<SlotDecision> {
        (**self).decide(ch, queues)
    }
}

/// Applies one slot's decision to the buffers.
///
/// The relay never forwards more than its buffer holds: `Rr1 = min(Cr1, Q2)`
/// and `Rr2 = min(Cr2, Q1)`.
pub fn step(queues: QueueState, decision: &SlotDecision) -> Result<(QueueState, SlotRates)> {
    let c = &decision.rates;
    let QueueState { mut q1, mut q2 } = queues;
    let mut r = SlotRates::default();
    match decision.mode {
        Mode::M1 => r.r1r = c.c1r,
        Mode::M2 => r.r2r = c.c2r,
        Mode::M3 => {
            r.r1r = c.c12r;
            r.r2r = c.c21r;
        }
        Mode::M4 => r.rr1 = c.cr1.min(q2),
        Mode::M5 => r.rr2 = c.cr2.min(q1),
        Mode::M6 => {
            r.rr1 = c.cr1.min(q2);
            r.rr2 = c.cr2.min(q1);
        }
    }
    q1 = q1 + r.r1r - r.rr2;
    q2 = q2 + r.r2r - r.rr1;
    if !(q1 >= 0.0 && q2 >= 0.0) {
        return Err(Error::Invariant(format!(
            "negative queue ({q1}, {q2}) after {:?}",
            decision.mode
        )));
    }
    Ok((QueueState { q1, q2 }, r))
}

/// Long-run averages of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// ingress rate user 1 to relay
    pub r_1r: f64,
    /// ingress rate user 2 to relay
    pub r_2r: f64,
    /// delivered rate relay to user 1
    pub r_r1: f64,
    /// delivered rate relay to user 2
    pub r_r2: f64,
    /// relay to user 1 rate if buffers were never short (capacity of every
    /// M4/M6 slot counted in full)
    pub r_r1_unclipped: f64,
    /// relay to user 2 rate if buffers were never short
    pub r_r2_unclipped: f64,
    /// `r_r1 + r_r2`
    pub sum_rate: f64,
    pub avg_power: f64,
    /// fraction of slots spent in M1..M6
    pub mode_freq: [f64; 6],
    pub final_queues: QueueState,
    pub n_slots: usize,
}

impl RateReport {
    pub fn freq(&self, mode: Mode) -> f64 {
        self.mode_freq[mode as usize]
    }
}

/// Running sums behind a [`RateReport`].
#[derive(Debug, Clone, Default)]
pub(crate) struct Accumulator {
    r1r: f64,
    r2r: f64,
    rr1: f64,
    rr2: f64,
    rr1_full: f64,
    rr2_full: f64,
    power: f64,
    counts: [usize; 6],
    n: usize,
}

impl Accumulator {
    pub(crate) fn add(&mut self, d: &SlotDecision, delivered: &SlotRates) {
        self.r1r += delivered.r1r;
        self.r2r += delivered.r2r;
        self.rr1 += delivered.rr1;
        self.rr2 += delivered.rr2;
        if matches!(d.mode, Mode::M4 | Mode::M6) {
            self.rr1_full += d.rates.cr1;
        }
        if matches!(d.mode, Mode::M5 | Mode::M6) {
            self.rr2_full += d.rates.cr2;
        }
        self.power += d.power();
        self.counts[d.mode as usize] += 1;
        self.n += 1;
    }

    /// Adds a slot as if buffers were always full enough.
    pub(crate) fn add_unclipped(&mut self, d: &SlotDecision) {
        let c = &d.rates;
        let full = match d.mode {
            Mode::M1 => SlotRates {
                r1r: c.c1r,
                ..Default::default()
            },
            Mode::M2 => SlotRates {
                r2r: c.c2r,
                ..Default::default()
            },
            Mode::M3 => SlotRates {
                r1r: c.c12r,
                r2r: c.c21r,
                ..Default::default()
            },
            Mode::M4 => SlotRates {
                rr1: c.cr1,
                ..Default::default()
            },
            Mode::M5 => SlotRates {
                rr2: c.cr2,
                ..Default::default()
            },
            Mode::M6 => SlotRates {
                rr1: c.cr1,
                rr2: c.cr2,
                ..Default::default()
            },
        };
        self.add(d, &full);
    }

    pub(crate) fn report(&self, final_queues: QueueState) -> RateReport {
        let n = self.n.max(1) as f64;
        let (rr1, rr2) = (self.rr1 / n, self.rr2 / n);
        RateReport {
            r_1r: self.r1r / n,
            r_2r: self.r2r / n,
            r_r1: rr1,
            r_r2: rr2,
            r_r1_unclipped: self.rr1_full / n,
            r_r2_unclipped: self.rr2_full / n,
            sum_rate: rr1 + rr2,
            avg_power: self.power / n,
            mode_freq: self.counts.map(|k| k as f64 / n),
            final_queues,
            n_slots: self.n,
        }
    }
}

/// Bits ingested and delivered per direction over a run.
///
/// Queues are derived as ingested minus delivered, and a delivery that drains
/// a buffer sets the delivered total to the ingested one, so delivered never
/// exceeds ingested even after rounding.
#[derive(Debug, Clone, Copy, Default)]
struct Ledger {
    in1: f64,
    in2: f64,
    /// delivered to user 1, taken from user 2's buffer
    out1: f64,
    /// delivered to user 2
    out2: f64,
}

fn settle(out: f64, delivered: f64, ingested: f64) -> f64 {
    if delivered <= 0.0 {
        out
    } else if delivered >= ingested - out {
        ingested
    } else {
        (out + delivered).min(ingested)
    }
}

impl Ledger {
    fn queues(&self) -> QueueState {
        QueueState {
            q1: self.in1 - self.out2,
            q2: self.in2 - self.out1,
        }
    }

    fn apply(&mut self, r: &SlotRates) {
        self.in1 += r.r1r;
        self.in2 += r.r2r;
        self.out1 = settle(self.out1, r.rr1, self.in2);
        self.out2 = settle(self.out2, r.rr2, self.in1);
    }

    fn write_rates(&self, report: &mut RateReport) {
        let n = report.n_slots.max(1) as f64;
        report.r_1r = self.in1 / n;
        report.r_2r = self.in2 / n;
        report.r_r1 = self.out1 / n;
        report.r_r2 = self.out2 / n;
        report.sum_rate = report.r_r1 + report.r_r2;
    }
}

/// Runs `policy` over every slot of `trace`, starting from empty buffers.
pub fn run<P: ProtocolPolicy + ?Sized>(trace: &ChannelTrace, policy: &P) -> Result<RateReport> {
    run_with(trace, policy, |_, _, _| ())
}

/// Like [`run`], calling `observe(decision, delivered, queues_after)` after each slot.
pub fn run_with<P, F>(trace: &ChannelTrace, policy: &P, mut observe: F) -> Result<RateReport>
where
    P: ProtocolPolicy + ?Sized,
    F: FnMut(&SlotDecision, &SlotRates, &QueueState),
{
    if trace.is_empty() {
        return Err(param("cannot run an empty trace"));
    }
    let mut ledger = Ledger::default();
    let mut acc = Accumulator::default();
    for ch in trace {
        let queues = ledger.queues();
        let decision = policy.decide(ch, &queues)?;
        let (_, delivered) = step(queues, &decision)?;
        ledger.apply(&delivered);
        acc.add(&decision, &delivered);
        observe(&decision, &delivered, &ledger.queues());
    }
    let mut report = acc.report(ledger.queues());
    ledger.write_rates(&mut report);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingStatistics;
    use crate::rate::{LinkCapacities, PowerTriple};
    use proptest::prelude::*;

    fn decision(mode: Mode, rates: LinkCapacities) -> SlotDecision {
        SlotDecision {
            mode,
            powers: PowerTriple::ZERO,
            t: 0.0,
            rates,
        }
    }

    fn q(q1: f64, q2: f64) -> QueueState {
        QueueState::new(q1, q2).unwrap()
    }

    #[test]
    fn empty_buffer_delivers_nothing() {
        let d = decision(
            Mode::M4,
            LinkCapacities {
                cr1: 2.0,
                ..Default::default()
            },
        );
        let (next, r) = step(q(0.0, 0.0), &d).unwrap();
        assert_eq!(r.rr1, 0.0);
        assert_eq!(next, q(0.0, 0.0));
    }

    #[test]
    fn downlink_takes_min_of_capacity_and_buffer() {
        let d = decision(
            Mode::M5,
            LinkCapacities {
                cr2: 2.0,
                ..Default::default()
            },
        );
        let (next, r) = step(q(5.0, 0.0), &d).unwrap();
        assert_eq!(r.rr2, 2.0);
        assert_eq!(next, q(3.0, 0.0));
    }

    #[test]
    fn broadcast_applies_both_min_rules() {
        let d = decision(
            Mode::M6,
            LinkCapacities {
                cr1: 2.0,
                cr2: 2.0,
                ..Default::default()
            },
        );
        let (next, r) = step(q(1.0, 3.0), &d).unwrap();
        assert_eq!((r.rr1, r.rr2), (2.0, 1.0));
        assert_eq!(next, q(0.0, 1.0));
    }

    #[test]
    fn uplinks_fill_buffers() {
        let caps = LinkCapacities {
            c1r: 1.5,
            c2r: 0.5,
            c12r: 0.7,
            c21r: 0.9,
            ..Default::default()
        };
        let (a, _) = step(q(0.0, 0.0), &decision(Mode::M1, caps)).unwrap();
        let (b, _) = step(a, &decision(Mode::M2, caps)).unwrap();
        let (c, r) = step(b, &decision(Mode::M3, caps)).unwrap();
        assert_eq!(c, q(2.2, 1.4));
        assert_eq!((r.r1r, r.r2r), (0.7, 0.9));
    }

    #[test]
    fn queue_state_validation() {
        assert!(QueueState::new(-1.0, 0.0).is_err());
        assert!(QueueState::new(0.0, f64::NAN).is_err());
    }

    struct AlwaysUplinkOne;

    impl ProtocolPolicy for AlwaysUplinkOne {
        fn decide(&self, ch: &ChannelState, _: &QueueState) -> Result<SlotDecision> {
            SlotDecision::new(ch, Mode::M1, PowerTriple::new(1.0, 0.0, 0.0)?, 0.0)
        }
    }

    #[test]
    fn uplink_only_delivers_nothing() {
        let stats = FadingStatistics::new(1.0, 1.0).unwrap();
        let trace = crate::channel::sample_trace(stats, 200, 4).unwrap();
        let report = run(&trace, &AlwaysUplinkOne).unwrap();
        assert_eq!((report.r_r1, report.r_r2, report.sum_rate), (0.0, 0.0, 0.0));
        assert!(report.final_queues.q1 > 0.0);
        assert_eq!(report.mode_freq, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(report.avg_power, 1.0);
        assert_eq!(report.n_slots, 200);
    }

    #[test]
    fn empty_trace_is_rejected() {
        let stats = FadingStatistics::new(1.0, 1.0).unwrap();
        let trace = ChannelTrace::from_gains(stats, &[]).unwrap();
        assert!(run(&trace, &AlwaysUplinkOne).is_err());
    }

    #[test]
    fn identical_inputs_give_identical_reports() {
        let stats = FadingStatistics::new(1.0, 2.0).unwrap();
        let trace = crate::channel::sample_trace(stats, 500, 9).unwrap();
        let th = crate::policy::Thresholds::new(0.4, 0.6, 0.3).unwrap();
        let policy = crate::policy::OptimalPolicy::new(th, stats);
        let a = run(&trace, &policy).unwrap();
        let b = run(&trace, &policy).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    fn any_slot() -> impl Strategy<Value = SlotDecision> {
        (0usize..6, proptest::array::uniform6(0.0f64..5.0)).prop_map(|(m, c)| {
            let rates = LinkCapacities {
                c1r: c[0],
                c2r: c[1],
                cr1: c[2],
                cr2: c[3],
                cr_sum: 0.0,
                c12r: c[4],
                c21r: c[5],
            };
            decision(Mode::ALL[m], rates)
        })
    }

    struct Replay(Vec<SlotDecision>);

    impl ProtocolPolicy for Replay {
        fn decide(&self, ch: &ChannelState, _: &QueueState) -> Result<SlotDecision> {
            Ok(self.0[ch.slot as usize - 1])
        }
    }

    proptest! {
        #[test]
        fn step_never_overdraws(slots in proptest::collection::vec(any_slot(), 1..300)) {
            let mut queues = QueueState::default();
            for d in &slots {
                let (next, r) = step(queues, d).unwrap();
                prop_assert!(r.rr1 <= queues.q2 && r.rr2 <= queues.q1);
                prop_assert!(next.q1 >= 0.0 && next.q2 >= 0.0);
                queues = next;
            }
        }

        #[test]
        fn delivered_never_exceeds_ingested(slots in proptest::collection::vec(any_slot(), 1..300)) {
            let stats = FadingStatistics::new(1.0, 1.0).unwrap();
            let trace = ChannelTrace::from_gains(stats, &vec![(1.0, 1.0); slots.len()]).unwrap();
            let mut in1 = 0.0;
            let report = run_with(&trace, &Replay(slots), |_, r, q| {
                in1 += r.r1r;
                assert!(q.q1 >= 0.0 && q.q2 >= 0.0);
            })
            .unwrap();
            prop_assert!(report.r_r1 <= report.r_2r && report.r_r2 <= report.r_1r);
            prop_assert!((report.r_1r * report.n_slots as f64 - in1).abs() <= 1e-9 * in1.max(1.0));
            let total: f64 = report.mode_freq.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
