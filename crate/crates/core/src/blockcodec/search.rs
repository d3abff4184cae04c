//! Successful-extension sets and their rank/unrank maps.
//!
//! `A = {u ∈ {0,1}^k : d(su) > c}`. Counting walks the tree of extensions
//! and skips a subtree at `v` when even the best remaining bets (at most a
//! doubling per bit) cannot clear the threshold, or counts it whole when
//! even the worst remaining bets clear it.

use crate::bitio::BitString;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::gale::{first_admission, Cursor, MartingaleModel};

/// Widest block any search will walk; counts must fit in a `u64`.
pub const MAX_WIDTH: usize = 63;

/// Default cap on approximation rounds for the discovery-order maps.
pub const DEFAULT_ROUND_CAP: u32 = 1 << 16;

#[derive(Clone, Copy, Debug)]
enum Rule {
    /// `d > c`
    Above,
    /// admitted by round `t`: `d̂(·, t) > c`
    ByRound(u32),
}

type Budget = Option<u64>;

enum Stop {
    Budget,
    Fail(Error),
}

type Walk<T> = std::result::Result<T, Stop>;

fn unbounded<T>(w: Walk<T>) -> Result<T> {
    match w {
        Ok(v) => Ok(v),
        Err(Stop::Fail(e)) => Err(e),
        Err(Stop::Budget) => unreachable!("walk ran without a budget"),
    }
}

/// The set `A^{(k)}_{d,c,s}` with lazy counting.
#[derive(Clone, Debug)]
pub struct ExtensionSet<'a> {
    model: &'a MartingaleModel,
    base: Cursor,
    k: usize,
    c: Dyadic,
    fmin_pows: Vec<Dyadic>,
    fmax_pows: Vec<Dyadic>,
    log_c: f64,
    log_fmin: f64,
    log_fmax: f64,
}

/// Slack on `log₂` comparisons before falling back to exact arithmetic.
/// Far above the `f64` error of `log2_f64` on any value the codec meets.
const LOG_SLACK: f64 = 1e-6;

impl<'a> ExtensionSet<'a> {
    pub fn new(model: &'a MartingaleModel, s: &BitString, k: usize, c: Dyadic) -> Result<Self> {
        Self::from_cursor(model, model.cursor_at(s), k, c)
    }

    /// Set rooted at an already-advanced cursor.
    pub fn from_cursor(model: &'a MartingaleModel, base: Cursor, k: usize, c: Dyadic) -> Result<Self> {
        if k > MAX_WIDTH {
            return Err(Error::BlockTooWide {
                width: k,
                budget: MAX_WIDTH,
            });
        }
        let powers = |f: Dyadic| {
            let mut out = Vec::with_capacity(k + 1);
            let mut p = Dyadic::one();
            for _ in 0..=k {
                out.push(p.clone());
                p = &p * &f;
            }
            out
        };
        let (fmin, fmax) = (model.min_step_factor(), model.max_step_factor());
        Ok(Self {
            model,
            base,
            k,
            log_c: c.log2_f64(),
            c,
            log_fmin: fmin.log2_f64(),
            log_fmax: fmax.log2_f64(),
            fmin_pows: powers(fmin),
            fmax_pows: powers(fmax),
        })
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn threshold(&self) -> &Dyadic {
        &self.c
    }

    fn admits(&self, rule: Rule, d: &Dyadic) -> bool {
        match rule {
            Rule::Above => *d > self.c,
            Rule::ByRound(t) => first_admission(d, &self.c).is_some_and(|a| a <= t),
        }
    }

    /// Decides `admits(rule, v)` from `x ≈ log₂ v` when the answer is clear.
    fn admits_quick(&self, rule: Rule, x: f64) -> Option<bool> {
        if self.c.is_zero() || x.is_nan() {
            return None;
        }
        if x == f64::NEG_INFINITY {
            return Some(false);
        }
        match rule {
            Rule::Above => {
                if x > self.log_c + LOG_SLACK {
                    Some(true)
                } else if x < self.log_c - LOG_SLACK {
                    Some(false)
                } else {
                    None
                }
            }
            Rule::ByRound(0) => Some(false),
            Rule::ByRound(t) => {
                // d̂(v, t) lies in (v(1 − 2^{-t}) − 2^{-t}, v(1 − 2^{-t})]
                let t = t as f64;
                let top = x + (-(-t).exp2()).ln_1p() / std::f64::consts::LN_2;
                if top < self.log_c - LOG_SLACK {
                    Some(false)
                } else if top > self.log_c + LOG_SLACK + 2e-3 && top + t >= 10.0 {
                    // the 2^{-t} term costs at most a factor 1 − 2^{-10}
                    Some(true)
                } else {
                    None
                }
            }
        }
    }

    /// `admits(rule, d·f^rem)` with `pows[rem] = f^rem` and `log_f = log₂ f`.
    fn admits_scaled(&self, rule: Rule, d: &Dyadic, log_d: f64, pows: &[Dyadic], log_f: f64, rem: usize) -> bool {
        let x = if rem == 0 { log_d } else { log_d + rem as f64 * log_f };
        match self.admits_quick(rule, x) {
            Some(v) => v,
            None => self.admits(rule, &(d * &pows[rem])),
        }
    }

    fn count_rule(&self, rule: Rule, cur: &Cursor, rem: usize, budget: &mut Budget) -> Walk<u64> {
        if let Some(b) = budget {
            if *b == 0 {
                return Err(Stop::Budget);
            }
            *b -= 1;
        }
        let d = cur.capital();
        let log_d = d.log2_f64();
        if !self.admits_scaled(rule, d, log_d, &self.fmax_pows, self.log_fmax, rem) {
            return Ok(0);
        }
        if rem == 0 {
            return Ok(1);
        }
        if !self.fmin_pows[rem].is_zero()
            && self.admits_scaled(rule, d, log_d, &self.fmin_pows, self.log_fmin, rem)
        {
            return Ok(1u64 << rem);
        }
        let left = self.count_rule(rule, &self.model.step(cur, false), rem - 1, budget)?;
        let right = self.count_rule(rule, &self.model.step(cur, true), rem - 1, budget)?;
        Ok(left + right)
    }

    /// `|A|`.
    pub fn size(&self) -> u64 {
        unbounded(self.count_rule(Rule::Above, &self.base, self.k, &mut None)).expect("no errors")
    }

    /// `|A|`, or `None` when the walk needs more than `budget` nodes.
    pub fn size_within(&self, budget: u64) -> Option<u64> {
        self.count_rule(Rule::Above, &self.base, self.k, &mut Some(budget)).ok()
    }

    /// `|A|` by scanning every extension; a reference for tests.
    pub fn size_naive(&self) -> u64 {
        (0..1u64 << self.k)
            .filter(|&x| self.contains(&BitString::from_u64(x, self.k)))
            .count() as u64
    }

    /// Capital `d(su)`.
    pub fn capital(&self, u: &BitString) -> Dyadic {
        self.model.advance(&self.base, u).capital().clone()
    }

    pub fn contains(&self, u: &BitString) -> bool {
        u.len() == self.k && self.capital(u) > self.c
    }

    /// Members in lexicographic order. Exponential; meant for small `k`.
    pub fn members(&self) -> Vec<BitString> {
        let mut out = Vec::new();
        let mut path = BitString::new();
        self.collect(&self.base, &mut path, &mut out);
        out
    }

    fn collect(&self, cur: &Cursor, path: &mut BitString, out: &mut Vec<BitString>) {
        let rem = self.k - path.len();
        if !self.admits(Rule::Above, &(cur.capital() * &self.fmax_pows[rem])) {
            return;
        }
        if rem == 0 {
            out.push(path.clone());
            return;
        }
        for bit in [false, true] {
            path.push(bit);
            self.collect(&self.model.step(cur, bit), path, out);
            path.pop();
        }
    }

    /// Number of members lexicographically before `u` under `rule`; also
    /// returns the cursor at `su`.
    fn rank_before(&self, rule: Rule, u: &BitString, budget: &mut Budget) -> Walk<(u64, Cursor)> {
        let mut cur = self.base.clone();
        let mut rank = 0;
        for (j, bit) in u.iter().enumerate() {
            let rem = self.k - j - 1;
            if bit {
                let left = self.model.step(&cur, false);
                rank += self.count_rule(rule, &left, rem, budget)?;
                cur = self.model.step(&cur, true);
            } else {
                cur = self.model.step(&cur, false);
            }
        }
        Ok((rank, cur))
    }

    fn check_width(&self, u: &BitString) -> Walk<()> {
        if u.len() != self.k {
            return Err(Stop::Fail(Error::OutOfRange(format!(
                "extension has length {}, block width is {}",
                u.len(),
                self.k
            ))));
        }
        Ok(())
    }

    fn ind_lex_walk(&self, u: &BitString, budget: &mut Budget) -> Walk<u64> {
        self.check_width(u)?;
        let (rank, cur) = self.rank_before(Rule::Above, u, budget)?;
        if *cur.capital() > self.c {
            Ok(rank)
        } else {
            Err(Stop::Fail(Error::NotMember))
        }
    }

    /// 0-based lexicographic rank of `u` in `A`.
    pub fn ind_lex(&self, u: &BitString) -> Result<u64> {
        unbounded(self.ind_lex_walk(u, &mut None))
    }

    /// Member of lexicographic rank `rank`.
    pub fn str_lex(&self, rank: u64) -> Result<BitString> {
        unbounded(self.unrank(Rule::Above, rank, None, &mut None))
    }

    fn unrank(&self, rule: Rule, mut rank: u64, exclude: Option<Rule>, budget: &mut Budget) -> Walk<BitString> {
        let mut count = |cur: &Cursor, rem: usize| -> Walk<u64> {
            let all = self.count_rule(rule, cur, rem, budget)?;
            Ok(match exclude {
                Some(ex) => all - self.count_rule(ex, cur, rem, budget)?,
                None => all,
            })
        };
        let size = count(&self.base, self.k)?;
        if rank >= size {
            return Err(Stop::Fail(Error::RankOutOfRange { rank, size }));
        }
        let mut cur = self.base.clone();
        let mut u = BitString::with_capacity(self.k);
        for j in 0..self.k {
            let rem = self.k - j - 1;
            let left = self.model.step(&cur, false);
            let n_left = count(&left, rem)?;
            if rank < n_left {
                u.push(false);
                cur = left;
            } else {
                rank -= n_left;
                u.push(true);
                cur = self.model.step(&cur, true);
            }
        }
        Ok(u)
    }

    /// Members admitted by the end of round `t`.
    pub fn admitted_by(&self, t: u32) -> u64 {
        unbounded(self.count_rule(Rule::ByRound(t), &self.base, self.k, &mut None)).expect("no errors")
    }

    /// 1-based position of `u` in discovery order: round by round, each
    /// round admitting the newly qualifying strings in lexicographic order.
    pub fn ind_enum(&self, u: &BitString, round_cap: u32) -> Result<u64> {
        unbounded(self.ind_enum_walk(u, round_cap, &mut None))
    }

    fn ind_enum_walk(&self, u: &BitString, round_cap: u32, budget: &mut Budget) -> Walk<u64> {
        self.check_width(u)?;
        let d = self.capital(u);
        let t = first_admission(&d, &self.c).ok_or(Stop::Fail(Error::NotMember))?;
        if t > round_cap {
            return Err(Stop::Fail(Error::RoundCapExceeded(round_cap as u64)));
        }
        if t == 0 {
            return Ok(self.rank_before(Rule::ByRound(0), u, budget)?.0 + 1);
        }
        let earlier_rounds = self.count_rule(Rule::ByRound(t - 1), &self.base, self.k, budget)?;
        let (by_t, _) = self.rank_before(Rule::ByRound(t), u, budget)?;
        let (by_prev, _) = self.rank_before(Rule::ByRound(t - 1), u, budget)?;
        Ok(earlier_rounds + (by_t - by_prev) + 1)
    }

    /// Inverse of [`ind_enum`](Self::ind_enum).
    pub fn str_enum(&self, p: u64, round_cap: u32) -> Result<BitString> {
        unbounded(self.str_enum_walk(p, round_cap, &mut None))
    }

    fn str_enum_walk(&self, p: u64, round_cap: u32, budget: &mut Budget) -> Walk<BitString> {
        if p == 0 {
            return Err(Stop::Fail(Error::RankOutOfRange { rank: 0, size: 0 }));
        }
        let admitted = |t: u32, budget: &mut Budget| self.count_rule(Rule::ByRound(t), &self.base, self.k, budget);
        // least t with admitted(t) ≥ p: double, then bisect
        let (mut lo, mut hi) = if admitted(0, budget)? >= p {
            (0, 0)
        } else {
            let mut hi = 1u32;
            loop {
                let capped = hi.min(round_cap);
                if admitted(capped, budget)? >= p {
                    break (hi / 2, capped);
                }
                if capped == round_cap {
                    return Err(Stop::Fail(Error::RoundCapExceeded(round_cap as u64)));
                }
                hi = hi.saturating_mul(2);
            }
        };
        // admitted(lo) < p ≤ admitted(hi) unless hi = 0
        while hi > 0 && hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if admitted(mid, budget)? >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t = hi;
        let before = if t == 0 { 0 } else { admitted(t - 1, budget)? };
        let exclude = (t > 0).then(|| Rule::ByRound(t - 1));
        self.unrank(Rule::ByRound(t), p - 1 - before, exclude, budget)
    }

    /// The encoder's view of one block: rank of `u` (lexicographic or
    /// discovery order) and `|A|`, provided ranking, counting and the
    /// decoder's unranking all fit in `budget` nodes together. `Ok(None)`
    /// when they do not.
    pub fn rank_for_stream(&self, u: &BitString, order: RankOrder, budget: u64) -> Result<Option<(u64, u64)>> {
        let mut b = Some(budget);
        let run = |b: &mut Budget| -> Walk<(u64, u64)> {
            let rank = match order {
                RankOrder::Lex => self.ind_lex_walk(u, b)?,
                RankOrder::Discovery { round_cap } => self.ind_enum_walk(u, round_cap, b)?,
            };
            let size = self.count_rule(Rule::Above, &self.base, self.k, b)?;
            let back = match order {
                RankOrder::Lex => self.unrank(Rule::Above, rank, None, b)?,
                RankOrder::Discovery { round_cap } => self.str_enum_walk(rank, round_cap, b)?,
            };
            debug_assert_eq!(&back, u);
            Ok((rank, size))
        };
        match run(&mut b) {
            Ok(v) => Ok(Some(v)),
            Err(Stop::Budget) => Ok(None),
            Err(Stop::Fail(e)) => Err(e),
        }
    }
}

/// Which rank map a stream uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankOrder {
    Lex,
    Discovery { round_cap: u32 },
}

/// 0-based lexicographic rank of `u` among the length-`k` extensions of `s`
/// with `d(su) > c`.
pub fn ind_lex(model: &MartingaleModel, c: &Dyadic, s: &BitString, k: usize, u: &BitString) -> Result<u64> {
    ExtensionSet::new(model, s, k, c.clone())?.ind_lex(u)
}

/// Inverse of [`ind_lex`].
pub fn str_lex(model: &MartingaleModel, c: &Dyadic, s: &BitString, k: usize, rank: u64) -> Result<BitString> {
    ExtensionSet::new(model, s, k, c.clone())?.str_lex(rank)
}

/// 1-based discovery-order index of `u`.
pub fn ind_enum(model: &MartingaleModel, c: &Dyadic, s: &BitString, k: usize, u: &BitString) -> Result<u64> {
    ExtensionSet::new(model, s, k, c.clone())?.ind_enum(u, DEFAULT_ROUND_CAP)
}

/// Inverse of [`ind_enum`].
pub fn str_enum(model: &MartingaleModel, c: &Dyadic, s: &BitString, k: usize, p: u64) -> Result<BitString> {
    ExtensionSet::new(model, s, k, c.clone())?.str_enum(p, DEFAULT_ROUND_CAP)
}
