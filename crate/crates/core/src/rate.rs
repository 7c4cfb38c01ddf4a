//! Capacities of the six transmission modes, in bits/symbol.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{param, Error, Result};

/// `log2(1 + x)` without argument checks.
#[inline]
pub(crate) fn c(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// AWGN capacity `log2(1 + x)` for a non-negative SNR `x`.
pub fn cap(x: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(c(x))
    } else {
        Err(Error::Domain(format!("capacity of negative SNR {x}")))
    }
}

/// Linear transmit powers of user 1, user 2 and the relay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerTriple {
    pub p1: f64,
    pub p2: f64,
    pub pr: f64,
}

impl PowerTriple {
    pub fn new(p1: f64, p2: f64, pr: f64) -> Result<Self> {
        for (name, p) in [("p1", p1), ("p2", p2), ("pr", pr)] {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(param(format!("{name} must be finite and >= 0, got {p}")));
            }
        }
        Ok(Self { p1, p2, pr })
    }

    pub const ZERO: Self = Self {
        p1: 0.0,
        p2: 0.0,
        pr: 0.0,
    };

    pub fn total(&self) -> f64 {
        self.p1 + self.p2 + self.pr
    }
}

/// Link capacities of one slot for a given power triple and multiple-access
/// time share.
///
/// `c12r`/`c21r` split the multiple-access sum capacity `cr_sum` between the
/// users: for the fraction `t` of the slot the relay decodes user 2 first
/// (user 1 then sees a clean channel), for `1 - t` it decodes user 1 first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkCapacities {
    pub c1r: f64,
    pub c2r: f64,
    pub cr1: f64,
    pub cr2: f64,
    pub cr_sum: f64,
    pub c12r: f64,
    pub c21r: f64,
}

/// All capacities of a slot. `t` must lie in `[0, 1]`.
pub fn link_capacities(ch: &ChannelState, powers: &PowerTriple, t: f64) -> Result<LinkCapacities> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("time share {t} outside [0, 1]")));
    }
    let snr1 = powers.p1 * ch.s1;
    let snr2 = powers.p2 * ch.s2;
    let c1r = c(snr1);
    let c2r = c(snr2);
    Ok(LinkCapacities {
        c1r,
        c2r,
        cr1: c(powers.pr * ch.s1),
        cr2: c(powers.pr * ch.s2),
        cr_sum: c(snr1 + snr2),
        c12r: t * c1r + (1.0 - t) * c(snr1 / (1.0 + snr2)),
        c21r: (1.0 - t) * c2r + t * c(snr2 / (1.0 + snr1)),
    })
}
