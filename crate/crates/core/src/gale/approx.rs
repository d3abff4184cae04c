//! Computable lower approximations of a martingale.
//!
//! `d̂(w, t) = max_{t' ≤ t} ⌊d(w)·(1 − 2^{-t'})⌋_{t'}` where `⌊x⌋_t` keeps `t`
//! fractional bits. It is nondecreasing in `t`, strictly below `d(w)` for
//! positive capital, and converges to `d(w)`. The block codec uses the round
//! at which `d̂` first exceeds a threshold as the discovery time of a string.

use crate::bitio::BitString;
use crate::dyadic::Dyadic;

use super::MartingaleModel;

fn round_value(d: &Dyadic, t: u32) -> Dyadic {
    let shaved = d.checked_sub(&d.shl(-(t as i64))).expect("d·2^-t ≤ d");
    shaved.floor_to(t)
}

/// `d̂` for a capital value `d` at round `t`.
pub fn approx_value(d: &Dyadic, t: u32) -> Dyadic {
    (0..=t).map(|r| round_value(d, r)).max().expect("nonempty range")
}

/// The first round `t` with `d̂(t) > c`, or `None` when `d ≤ c` (never).
pub fn first_admission(d: &Dyadic, c: &Dyadic) -> Option<u32> {
    if d <= c {
        return None;
    }
    // t_lo: least t with d·(1 − 2^{-t}) > c, i.e. (d − c)·2^t > d
    let gap = d.checked_sub(c).expect("d > c");
    let dl = d.floor_log2().expect("d > 0");
    let gl = gap.floor_log2().expect("gap > 0");
    let mut t = (dl - gl - 1).max(0) as u32;
    while gap.shl(t as i64) <= *d {
        t += 1;
    }
    // rounds below t_lo cannot clear c even before truncation
    while round_value(d, t) <= *c {
        t += 1;
    }
    Some(t)
}

/// Lower approximation oracle for a model.
#[derive(Clone, Debug)]
pub struct Approximator {
    model: MartingaleModel,
}

impl Approximator {
    pub fn new(model: MartingaleModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &MartingaleModel {
        &self.model
    }

    /// `d̂(w, t)`.
    pub fn approximate(&self, w: &BitString, t: u32) -> Dyadic {
        approx_value(&self.model.eval(w), t)
    }

    /// First round at which `d̂(w, ·)` exceeds `c`.
    pub fn admission_round(&self, w: &BitString, c: &Dyadic) -> Option<u32> {
        first_admission(&self.model.eval(w), c)
    }
}
