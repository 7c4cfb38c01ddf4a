//! Brute-force checks of the closed-form policy.
//!
//! Everything here recomputes the selection metrics from scratch (with
//! `log2` rather than the library's capacity helper) and searches over grids,
//! so agreement with [`crate::policy`] is independent evidence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibrationConfig, Calibrator};
use crate::channel::{ChannelState, FadingStatistics};
use crate::error::{param, Result};
use crate::policy::{mode_powers_at, Mode, Thresholds};
use crate::rate::PowerTriple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(param(format!(
                "grid bounds must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        if points < 100 {
            return Err(param(format!("grid needs at least 100 points, got {points}")));
        }
        Ok(Self { lo, hi, points })
    }

    /// Bounds beyond which the power penalty outweighs any capacity gain.
    pub fn for_slot(ch: &ChannelState, gamma: f64, points: usize) -> Result<Self> {
        let weakest = ch.s1.min(ch.s2);
        let scale = if weakest > 0.0 {
            (1.0 / weakest).max(1.0)
        } else {
            f64::INFINITY
        };
        Self::new(0.0, (10.0 / gamma * scale).min(1e6), points)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn at(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }
}

fn log2_1p(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// `Λk` written out directly from its definition.
pub fn metric(mode: Mode, ch: &ChannelState, th: &Thresholds, t: f64, p: &PowerTriple) -> f64 {
    let (s1, s2) = (ch.s1, ch.s2);
    let (mu1, mu2, gamma) = (th.mu1(), th.mu2(), th.gamma());
    match mode {
        Mode::M1 => (1.0 - mu1) * log2_1p(p.p1 * s1) - gamma * p.p1,
        Mode::M2 => (1.0 - mu2) * log2_1p(p.p2 * s2) - gamma * p.p2,
        Mode::M3 => {
            let (x1, x2) = (p.p1 * s1, p.p2 * s2);
            let user2_first = (1.0 - mu1) * log2_1p(x1) + (1.0 - mu2) * log2_1p(x2 / (1.0 + x1));
            let user1_first = (1.0 - mu1) * log2_1p(x1 / (1.0 + x2)) + (1.0 - mu2) * log2_1p(x2);
            t * user2_first + (1.0 - t) * user1_first - gamma * (p.p1 + p.p2)
        }
        Mode::M4 => mu2 * log2_1p(p.pr * s1) - gamma * p.pr,
        Mode::M5 => mu1 * log2_1p(p.pr * s2) - gamma * p.pr,
        Mode::M6 => mu1 * log2_1p(p.pr * s2) + mu2 * log2_1p(p.pr * s1) - gamma * p.pr,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMax {
    pub powers: PowerTriple,
    pub metric: f64,
}

/// Exhaustive grid maximization of `Λk` over the powers of the nodes active in
/// `mode`. Mode 3 searches the square grid over `(p1, p2)`.
pub fn grid_max_metric(mode: Mode, ch: &ChannelState, th: &Thresholds, t: f64, grid: &GridSpec) -> GridMax {
    let place = |x: f64, y: f64| match mode {
        Mode::M1 => PowerTriple {
            p1: x,
            ..PowerTriple::ZERO
        },
        Mode::M2 => PowerTriple {
            p2: x,
            ..PowerTriple::ZERO
        },
        Mode::M3 => PowerTriple { p1: x, p2: y, pr: 0.0 },
        _ => PowerTriple {
            pr: x,
            ..PowerTriple::ZERO
        },
    };
    let inner = if mode == Mode::M3 { grid.points } else { 1 };
    let mut best = GridMax {
        powers: PowerTriple::ZERO,
        metric: f64::NEG_INFINITY,
    };
    for i in 0..grid.points {
        for j in 0..inner {
            let p = place(grid.at(i), grid.at(j));
            let v = metric(mode, ch, th, t, &p);
            if v > best.metric {
                best = GridMax { powers: p, metric: v };
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSweep {
    pub ts: Vec<f64>,
    pub profile: Vec<f64>,
    pub argmax_t: f64,
}

/// `Λ3` over a uniform grid of time shares at fixed powers.
pub fn t_sweep(ch: &ChannelState, th: &Thresholds, powers: (f64, f64), points: usize) -> Result<TSweep> {
    if points < 3 {
        return Err(param(format!("t sweep needs at least 3 points, got {points}")));
    }
    let p = PowerTriple::new(powers.0, powers.1, 0.0)?;
    let ts: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let profile: Vec<f64> = ts.iter().map(|&t| metric(Mode::M3, ch, th, t, &p)).collect();
    let mut arg = 0;
    for (k, v) in profile.iter().enumerate() {
        if *v > profile[arg] {
            arg = k;
        }
    }
    Ok(TSweep {
        argmax_t: ts[arg],
        ts,
        profile,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub mu1: f64,
    pub mu2: f64,
    /// power dual that spends the budget at this point
    pub gamma: f64,
    pub residual_c1: f64,
    pub residual_c2: f64,
    /// unclipped `R̄r1 + R̄r2`
    pub sum_rate: f64,
    pub feasible: bool,
}

impl RegionPoint {
    pub fn on_boundary(&self) -> bool {
        [self.mu1, self.mu2].iter().any(|&m| m == 0.0 || m == 1.0)
    }
}

/// Evaluates the balance residuals over a grid of `(μ1, μ2)`, each with the
/// power dual solved to spend `p_total`. A point is feasible when both
/// residuals are within `tol`.
pub fn threshold_region_scan(
    stats: FadingStatistics,
    p_total: f64,
    mu_grid: &[f64],
    n_slots: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<RegionPoint>> {
    if mu_grid.is_empty() || mu_grid.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(param("threshold grid must be non-empty and inside [0, 1]"));
    }
    let mut cfg = CalibrationConfig::new(stats, p_total)?;
    cfg.n_slots = n_slots;
    cfg.seed = seed;
    let cal = Calibrator::new(cfg)?;
    let mut gamma = 1.0 / (std::f64::consts::LN_2 * (p_total + 1.0));
    let mut out = Vec::with_capacity(mu_grid.len() * mu_grid.len());
    for &mu1 in mu_grid {
        for &mu2 in mu_grid {
            let (th, ev) = cal.solve_gamma(mu1, mu2, gamma)?;
            gamma = th.gamma();
            let r = &ev.report;
            out.push(RegionPoint {
                mu1,
                mu2,
                gamma,
                residual_c1: ev.residual_c1,
                residual_c2: ev.residual_c2,
                sum_rate: r.r_r1_unclipped + r.r_r2_unclipped,
                feasible: ev.residual_c1.abs() <= tol && ev.residual_c2.abs() <= tol,
            });
        }
    }
    Ok(out)
}

/// Random slot and thresholds for property checks.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub ch: ChannelState,
    pub th: Thresholds,
}

/// Gains exponential with unit mean, `μ` uniform on `[0.01, 0.99]`, `γ`
/// log-uniform on `[0.01, 10]`.
pub fn random_draw(rng: &mut impl Rng) -> Draw {
    let mut exp = || -(1.0 - rng.random::<f64>()).ln();
    let (s1, s2) = (exp(), exp());
    let mu1 = 0.01 + 0.98 * rng.random::<f64>();
    let mu2 = 0.01 + 0.98 * rng.random::<f64>();
    let gamma = 10f64.powf(-2.0 + 3.0 * rng.random::<f64>());
    Draw {
        ch: ChannelState::new(1, s1, s2).expect("finite gains"),
        th: Thresholds::new(mu1, mu2, gamma).expect("interior thresholds"),
    }
}

/// Decoding order under which the multiple-access metric is concave.
fn concave_time_share(th: &Thresholds) -> f64 {
    if th.mu1() >= th.mu2() {
        0.0
    } else {
        1.0
    }
}

/// Outcome of one verified property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    /// worst observed value of the checked quantity
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl PropertyCheck {
    fn new(name: impl Into<String>, worst: f64, tolerance: f64, samples: usize) -> Self {
        Self {
            name: name.into(),
            passed: worst <= tolerance,
            worst,
            tolerance,
            samples,
        }
    }
}

/// Closed form against the grid for one mode. Returns the metric check
/// (grid max minus closed-form metric, must stay `<= 1e-6`) and the argmax
/// check (distance in grid steps, must stay `<= 1`).
pub fn check_closed_form(mode: Mode, draws: usize, points: usize, seed: u64) -> Result<(PropertyCheck, PropertyCheck)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gap, mut steps) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..draws {
        let Draw { ch, th } = random_draw(&mut rng);
        let t = concave_time_share(&th);
        let mp = mode_powers_at(&ch, &th, t);
        let closed = mode.restrict(mp.for_mode(mode));
        let closed_metric = metric(mode, &ch, &th, t, &closed);
        let grid = GridSpec::for_slot(&ch, th.gamma(), points)?;
        let best = grid_max_metric(mode, &ch, &th, t, &grid);
        gap = gap.max(best.metric - closed_metric);
        let d = match mode {
            Mode::M1 => (best.powers.p1 - closed.p1).abs(),
            Mode::M2 => (best.powers.p2 - closed.p2).abs(),
            Mode::M3 => (best.powers.p1 - closed.p1)
                .abs()
                .max((best.powers.p2 - closed.p2).abs()),
            _ => (best.powers.pr - closed.pr).abs(),
        };
        steps = steps.max(d / grid.step());
    }
    Ok((
        PropertyCheck::new(format!("{mode} grid metric gap"), gap, 1e-6, draws),
        PropertyCheck::new(format!("{mode} argmax distance (grid steps)"), steps, 1.0 + 1e-9, draws),
    ))
}

/// Relative residual of the broadcast power balance whenever that power is positive.
pub fn check_broadcast_root(draws: usize, seed: u64) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let Draw { ch, th } = random_draw(&mut rng);
        let p = mode_powers_at(&ch, &th, 0.0).pr_m6;
        if p > 0.0 {
            let g = th.gamma() * std::f64::consts::LN_2;
            let lhs = th.mu2() * ch.s1 / (1.0 + p * ch.s1) + th.mu1() * ch.s2 / (1.0 + p * ch.s2);
            worst = worst.max(((lhs - g) / g).abs());
        }
    }
    PropertyCheck::new("broadcast power balance residual", worst, 1e-8, draws)
}

/// Counts draws where the best time share is not the boundary picked by the
/// threshold ordering.
pub fn check_t_boundary(draws: usize, seed: u64) -> Result<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut misses = 0usize;
    for _ in 0..draws {
        let Draw { ch, th } = random_draw(&mut rng);
        let p1 = 0.1 + 9.9 * rng.random::<f64>();
        let p2 = 0.1 + 9.9 * rng.random::<f64>();
        let sweep = t_sweep(&ch, &th, (p1, p2), 101)?;
        let want = concave_time_share(&th);
        if sweep.argmax_t != want {
            misses += 1;
        }
    }
    Ok(PropertyCheck::new(
        "time share at the boundary",
        misses as f64,
        0.0,
        draws,
    ))
}

/// Worst `max(Λ4, Λ5) − Λ6` at the respective optimal powers.
pub fn check_broadcast_dominance(draws: usize, seed: u64) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..draws {
        let Draw { ch, th } = random_draw(&mut rng);
        let mp = mode_powers_at(&ch, &th, 0.0);
        let at = |mode: Mode| metric(mode, &ch, &th, 0.0, &mode.restrict(mp.for_mode(mode)));
        worst = worst.max(at(Mode::M4).max(at(Mode::M5)) - at(Mode::M6));
    }
    PropertyCheck::new("broadcast dominates single downlinks", worst, 1e-12, draws)
}

/// Number of boundary points of the region scan that balance both buffers.
pub fn check_region_boundary(stats: FadingStatistics, p_total: f64, seed: u64) -> Result<PropertyCheck> {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let scan = threshold_region_scan(stats, p_total, &grid, 1000, seed, 0.02)?;
    let feasible = scan.iter().filter(|p| p.on_boundary() && p.feasible).count();
    Ok(PropertyCheck::new(
        "no feasible boundary thresholds",
        feasible as f64,
        0.0,
        scan.len(),
    ))
}

/// The full property suite behind the `verify` command.
pub fn verify_all(seed: u64) -> Result<Vec<PropertyCheck>> {
    let mut checks = Vec::new();
    for mode in [Mode::M1, Mode::M2, Mode::M3, Mode::M6] {
        let points = if mode == Mode::M3 { 401 } else { 2001 };
        let (gap, steps) = check_closed_form(mode, 1000, points, seed)?;
        checks.push(gap);
        checks.push(steps);
    }
    checks.push(check_broadcast_root(10_000, seed));
    checks.push(check_t_boundary(1000, seed)?);
    checks.push(check_broadcast_dominance(10_000, seed));
    for pt_db in [-10.0, 10.0] {
        let stats = FadingStatistics::new(1.0, 1.0)?;
        let mut c = check_region_boundary(stats, crate::db_to_linear(pt_db), seed)?;
        c.name = format!("{} at {pt_db} dB", c.name);
        checks.push(c);
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(s1: f64, s2: f64) -> ChannelState {
        ChannelState::new(1, s1, s2).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 1.0, 99).is_err());
        assert!(GridSpec::new(1.0, 1.0, 100).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 100).is_err());
        let g = GridSpec::new(0.0, 1.0, 101).unwrap();
        assert_eq!(g.at(100), 1.0);
        assert!((g.step() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn uplink_grid_matches_water_filling() {
        let th = Thresholds::new(0.5, 0.5, 0.5).unwrap();
        let grid = GridSpec::new(0.0, 5.0, 5001).unwrap();
        let best = grid_max_metric(Mode::M1, &ch(2.0, 1.0), &th, 0.0, &grid);
        assert!((best.powers.p1 - 0.94270).abs() <= grid.step());
    }

    #[test]
    fn symmetric_broadcast_grid() {
        let (mu, gamma, s) = (0.4, 0.3, 1.7);
        let th = Thresholds::new(mu, mu, gamma).unwrap();
        let grid = GridSpec::new(0.0, 20.0, 4001).unwrap();
        let best = grid_max_metric(Mode::M6, &ch(s, s), &th, 0.0, &grid);
        let expect = (2.0 * mu / (gamma * std::f64::consts::LN_2) - 1.0 / s).max(0.0);
        assert!((best.powers.pr - expect).abs() <= grid.step());
    }

    #[test]
    fn huge_gamma_grid_picks_zero() {
        let th = Thresholds::new(0.5, 0.5, 1e6).unwrap();
        let grid = GridSpec::new(0.0, 10.0, 101).unwrap();
        for mode in Mode::ALL {
            let best = grid_max_metric(mode, &ch(1.0, 1.0), &th, 0.0, &grid);
            assert_eq!(best.powers, PowerTriple::ZERO);
        }
    }

    #[test]
    fn t_sweep_follows_threshold_order() {
        let c = ch(1.3, 0.8);
        let hi1 = Thresholds::new(0.7, 0.3, 0.1).unwrap();
        let hi2 = Thresholds::new(0.3, 0.7, 0.1).unwrap();
        assert_eq!(t_sweep(&c, &hi1, (1.0, 2.0), 11).unwrap().argmax_t, 0.0);
        assert_eq!(t_sweep(&c, &hi2, (1.0, 2.0), 11).unwrap().argmax_t, 1.0);
        let eq = Thresholds::new(0.4, 0.4, 0.1).unwrap();
        let sweep = t_sweep(&c, &eq, (1.0, 2.0), 11).unwrap();
        let (lo, hi) = sweep
            .profile
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo <= 1e-12);
        assert!(t_sweep(&c, &eq, (1.0, 2.0), 2).is_err());
    }

    #[test]
    fn region_scan_extremes() {
        let stats = FadingStatistics::new(1.0, 1.0).unwrap();
        let scan = threshold_region_scan(stats, 10.0, &[0.0, 1.0], 1000, 3, 0.02).unwrap();
        let get = |m1: f64, m2: f64| scan.iter().find(|p| p.mu1 == m1 && p.mu2 == m2).unwrap();
        // user 1 never transmits
        assert_eq!(get(1.0, 0.0).residual_c1, -1.0);
        // relay never transmits
        let zero = get(0.0, 0.0);
        assert_eq!(zero.sum_rate, 0.0);
        assert!(!zero.feasible);
        assert!(scan.iter().all(|p| p.on_boundary() && !p.feasible));
    }

    #[test]
    fn zero_thresholds_by_hand() {
        // one slot: with both rate thresholds at zero the relay metric vanishes
        // while the uplink metric is positive
        let th = Thresholds::new_closed(0.0, 0.0, 0.2).unwrap();
        let c = ch(1.5, 0.5);
        let mp = mode_powers_at(&c, &th, 0.0);
        assert_eq!(mp.pr_m6, 0.0);
        assert!(metric(Mode::M1, &c, &th, 0.0, &mode_restricted(Mode::M1, &mp)) > 0.0);
    }

    fn mode_restricted(mode: Mode, mp: &crate::policy::ModePowers) -> PowerTriple {
        mode.restrict(mp.for_mode(mode))
    }

    #[test]
    fn interior_point_beats_boundary() {
        let stats = FadingStatistics::new(1.0, 1.0).unwrap();
        let mut cfg = CalibrationConfig::new(stats, 10.0).unwrap();
        cfg.n_slots = 2000;
        cfg.tol_rate = 0.01;
        cfg.tol_power = 0.01;
        let res = crate::calibrate::calibrate(&cfg).unwrap();
        let th = res.thresholds;
        let scan = threshold_region_scan(stats, 10.0, &[0.0, 0.5, 1.0], 2000, cfg.seed, 0.01).unwrap();
        let near = solved_point(stats, th.mu1(), th.mu2(), cfg.seed);
        let score = |p: &RegionPoint| p.residual_c1.abs().max(p.residual_c2.abs());
        for p in scan.iter().filter(|p| p.on_boundary()) {
            assert!(score(&near) < score(p), "{near:?} vs {p:?}");
        }
    }

    fn solved_point(stats: FadingStatistics, mu1: f64, mu2: f64, seed: u64) -> RegionPoint {
        let mut cfg = CalibrationConfig::new(stats, 10.0).unwrap();
        cfg.n_slots = 2000;
        cfg.seed = seed;
        let cal = Calibrator::new(cfg).unwrap();
        let (th, ev) = cal.solve_gamma(mu1, mu2, 0.1).unwrap();
        RegionPoint {
            mu1,
            mu2,
            gamma: th.gamma(),
            residual_c1: ev.residual_c1,
            residual_c2: ev.residual_c2,
            sum_rate: ev.report.r_r1_unclipped + ev.report.r_r2_unclipped,
            feasible: true,
        }
    }

    #[test]
    fn small_property_suite_passes() {
        for mode in [Mode::M1, Mode::M2, Mode::M6] {
            let (gap, steps) = check_closed_form(mode, 100, 1001, 7).unwrap();
            assert!(gap.passed && steps.passed, "{gap:?} {steps:?}");
        }
        let (gap, steps) = check_closed_form(Mode::M3, 30, 201, 7).unwrap();
        assert!(gap.passed && steps.passed, "{gap:?} {steps:?}");
        assert!(check_broadcast_root(1000, 7).passed);
        assert!(check_t_boundary(200, 7).unwrap().passed);
        assert!(check_broadcast_dominance(1000, 7).passed);
    }
}
