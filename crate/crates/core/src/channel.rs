//! Block-fading channel realizations.
//!
//! Gains are squared amplitudes of Rayleigh-faded coefficients, so each slot
//! draws `S1` and `S2` independently from exponential distributions. Sampling
//! is done by inverse CDF on uniforms from a ChaCha8 stream seeded with a
//! 64-bit seed, which makes traces bit-identical across runs and platforms.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Means of the two squared channel gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingStatistics {
    omega1: f64,
    omega2: f64,
}

impl FadingStatistics {
    pub fn new(omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega1 > 0.0 && omega1.is_finite()) || !(omega2 > 0.0 && omega2.is_finite()) {
            return Err(param(format!(
                "fading means must be positive and finite, got ({omega1}, {omega2})"
            )));
        }
        Ok(Self { omega1, omega2 })
    }

    /// Mean of `S1`, the user 1 to relay gain.
    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    /// Mean of `S2`, the user 2 to relay gain.
    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    /// Same statistics with the two users swapped.
    pub fn swapped(&self) -> Self {
        Self {
            omega1: self.omega2,
            omega2: self.omega1,
        }
    }
}

/// Squared channel gains of one slot. Links are reciprocal, so `s1` serves
/// both user 1 to relay and relay to user 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    /// 1-based slot index.
    pub slot: u64,
    pub s1: f64,
    pub s2: f64,
}

impl ChannelState {
    pub fn new(slot: u64, s1: f64, s2: f64) -> Result<Self> {
        if slot == 0 {
            return Err(param("slot indices start at 1"));
        }
        if !(s1 >= 0.0 && s1.is_finite()) || !(s2 >= 0.0 && s2.is_finite()) {
            return Err(param(format!(
                "channel gains must be finite and >= 0, got ({s1}, {s2})"
            )));
        }
        Ok(Self { slot, s1, s2 })
    }
}

/// A materialized sequence of channel states for slots `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    stats: FadingStatistics,
    seed: u64,
    states: Vec<ChannelState>,
}

impl ChannelTrace {
    /// Builds a trace from explicit `(s1, s2)` pairs, numbering slots from 1.
    /// The seed is recorded as 0.
    pub fn from_gains(stats: FadingStatistics, gains: &[(f64, f64)]) -> Result<Self> {
        let states = gains
            .iter()
            .enumerate()
            .map(|(i, &(s1, s2))| ChannelState::new(i as u64 + 1, s1, s2))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { stats, seed: 0, states })
    }

    pub fn stats(&self) -> FadingStatistics {
        self.stats
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn states(&self) -> &[ChannelState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ChannelState> {
        self.states.iter()
    }

    /// Dumps the trace as CSV with columns `slot,s1,s2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "slot,s1,s2")?;
        for st in &self.states {
            writeln!(out, "{},{},{}", st.slot, st.s1, st.s2)?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a ChannelTrace {
    type Item = &'a ChannelState;
    type IntoIter = std::slice::Iter<'a, ChannelState>;

    fn into_iter(self) -> Self::IntoIter {
        self.states.iter()
    }
}

/// Lazily generated channel states. Yields exactly what [`sample_trace`]
/// materializes for the same statistics and seed.
#[derive(Debug, Clone)]
pub struct TraceStream {
    stats: FadingStatistics,
    rng: ChaCha8Rng,
    next_slot: u64,
    remaining: usize,
}

impl TraceStream {
    pub fn new(stats: FadingStatistics, n_slots: usize, seed: u64) -> Self {
        Self {
            stats,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_slot: 1,
            remaining: n_slots,
        }
    }
}

impl Iterator for TraceStream {
    type Item = ChannelState;

    fn next(&mut self) -> Option<ChannelState> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        // s1 is always drawn before s2 within a slot.
        let s1 = exponential(&mut self.rng, self.stats.omega1);
        let s2 = exponential(&mut self.rng, self.stats.omega2);
        let slot = self.next_slot;
        self.next_slot += 1;
        Some(ChannelState { slot, s1, s2 })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for TraceStream {}

fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let u: f64 = rng.random();
    // u in [0, 1), so -ln(1 - u) is finite and >= 0.
    -mean * (-u).ln_1p()
}

/// Draws `n_slots` independent Rayleigh-fading slots.
pub fn sample_trace(stats: FadingStatistics, n_slots: usize, seed: u64) -> Result<ChannelTrace> {
    if n_slots == 0 {
        return Err(param("a trace needs at least one slot"));
    }
    let states = TraceStream::new(stats, n_slots, seed).collect();
    Ok(ChannelTrace { stats, seed, states })
}

/// Arithmetic means of `s1` and `s2` over the trace.
pub fn empirical_means(trace: &ChannelTrace) -> Result<(f64, f64)> {
    if trace.is_empty() {
        return Err(param("empirical means of an empty trace"));
    }
    let n = trace.len() as f64;
    let (a, b) = trace.iter().fold((0.0, 0.0), |(a, b), st| (a + st.s1, b + st.s2));
    Ok((a / n, b / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> FadingStatistics {
        FadingStatistics::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_non_positive_means() {
        assert!(FadingStatistics::new(0.0, 1.0).is_err());
        assert!(FadingStatistics::new(1.0, -2.0).is_err());
        assert!(FadingStatistics::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn rejects_empty_trace() {
        assert!(sample_trace(unit(), 0, 1).is_err());
        let empty = ChannelTrace::from_gains(unit(), &[]).unwrap();
        assert!(empirical_means(&empty).is_err());
    }

    #[test]
    fn same_seed_same_trace() {
        let a = sample_trace(unit(), 500, 42).unwrap();
        let b = sample_trace(unit(), 500, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_trace(unit(), 500, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn stream_matches_materialized() {
        let stats = FadingStatistics::new(2.0, 0.5).unwrap();
        let trace = sample_trace(stats, 1000, 9).unwrap();
        let streamed: Vec<_> = TraceStream::new(stats, 1000, 9).collect();
        assert_eq!(trace.states(), &streamed[..]);
        // a longer stream starts with the shorter trace
        let longer: Vec<_> = TraceStream::new(stats, 1500, 9).take(1000).collect();
        assert_eq!(trace.states(), &longer[..]);
    }

    #[test]
    fn slots_are_contiguous() {
        let trace = sample_trace(unit(), 300, 5).unwrap();
        for (i, st) in trace.iter().enumerate() {
            assert_eq!(st.slot, i as u64 + 1);
            assert!(st.s1 >= 0.0 && st.s2 >= 0.0);
        }
    }

    #[test]
    fn constant_and_single_slot_means() {
        let t = ChannelTrace::from_gains(unit(), &[(2.0, 1.0); 7]).unwrap();
        assert_eq!(empirical_means(&t).unwrap().0, 2.0);
        let t = ChannelTrace::from_gains(unit(), &[(3.0, 5.0)]).unwrap();
        assert_eq!(empirical_means(&t).unwrap(), (3.0, 5.0));
    }

    #[test]
    fn sample_means_near_omega() {
        let trace = sample_trace(unit(), 10_000, 11).unwrap();
        let (m1, m2) = empirical_means(&trace).unwrap();
        assert!((m1 - 1.0).abs() < 0.05, "{m1}");
        assert!((m2 - 1.0).abs() < 0.05, "{m2}");

        let stats = FadingStatistics::new(5.0, 1.0).unwrap();
        let trace = sample_trace(stats, 10_000, 12).unwrap();
        let (m1, _) = empirical_means(&trace).unwrap();
        assert!((m1 - 5.0).abs() < 0.25, "{m1}");
    }

    #[test]
    fn kolmogorov_smirnov_against_exponential() {
        let n = 10_000;
        let omega = 1.7;
        let stats = FadingStatistics::new(omega, 1.0).unwrap();
        let mut xs: Vec<f64> = sample_trace(stats, n, 3).unwrap().iter().map(|s| s.s1).collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-x / omega).exp();
                let hi = (i + 1) as f64 / n as f64 - cdf;
                let lo = cdf - i as f64 / n as f64;
                hi.max(lo)
            })
            .fold(0.0, f64::max);
        // asymptotic 1% critical value
        let crit = 1.628 / (n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} >= {crit}");
    }

    #[test]
    fn lag_one_autocorrelation_small() {
        let trace = sample_trace(unit(), 10_000, 21).unwrap();
        let xs: Vec<f64> = trace.iter().map(|s| s.s1).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((cov / var).abs() < 0.05, "{}", cov / var);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let t = ChannelTrace::from_gains(unit(), &[(0.5, 1.5), (2.0, 0.25)]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "slot,s1,s2\n1,0.5,1.5\n2,2,0.25\n");
    }
}
