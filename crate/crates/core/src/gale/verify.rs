//! Exhaustive checks of the martingale laws on small depths.

use crate::bitio::BitString;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

use super::{Cursor, MartingaleModel};

/// Deepest tree [`verify_fairness`] will walk.
pub const MAX_FAIRNESS_DEPTH: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FairnessViolation {
    /// `d(w0) + d(w1) ≠ 2·d(w)`.
    Node {
        w: BitString,
        parent: Dyadic,
        left: Dyadic,
        right: Dyadic,
    },
    /// `Σ_{|w| = level} d(w) ≠ 2^level·d(λ)`.
    Level {
        level: usize,
        sum: Dyadic,
        expected: Dyadic,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fairness {
    Pass,
    Fail(FairnessViolation),
}

impl Fairness {
    pub fn passed(&self) -> bool {
        matches!(self, Fairness::Pass)
    }
}

/// Checks the fairness law at every node of depth `< depth` and the level
/// sums up to `depth`.
pub fn verify_fairness(model: &MartingaleModel, depth: usize) -> Result<Fairness> {
    if depth > MAX_FAIRNESS_DEPTH {
        return Err(Error::OutOfRange(format!(
            "fairness depth {depth} above {MAX_FAIRNESS_DEPTH}"
        )));
    }
    let mut sums = vec![Dyadic::zero(); depth + 1];
    let mut w = BitString::new();
    if let Some(v) = walk(model, &model.start(), &mut w, depth, &mut sums) {
        return Ok(Fairness::Fail(v));
    }
    let root = model.initial_capital();
    for (level, sum) in sums.into_iter().enumerate() {
        let expected = root.shl(level as i64);
        if sum != expected {
            return Ok(Fairness::Fail(FairnessViolation::Level {
                level,
                sum,
                expected,
            }));
        }
    }
    Ok(Fairness::Pass)
}

fn walk(
    model: &MartingaleModel,
    cur: &Cursor,
    w: &mut BitString,
    depth: usize,
    sums: &mut [Dyadic],
) -> Option<FairnessViolation> {
    let level = w.len();
    sums[level] = &sums[level] + cur.capital();
    if level == depth {
        return None;
    }
    let c0 = model.step(cur, false);
    let c1 = model.step(cur, true);
    if c0.capital() + c1.capital() != cur.capital().shl(1) {
        return Some(FairnessViolation::Node {
            w: w.clone(),
            parent: cur.capital().clone(),
            left: c0.capital().clone(),
            right: c1.capital().clone(),
        });
    }
    for (bit, child) in [(false, c0), (true, c1)] {
        w.push(bit);
        let r = walk(model, &child, w, depth, sums);
        w.pop();
        if r.is_some() {
            return r;
        }
    }
    None
}

/// Result of [`counting_bound_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountingReport {
    /// Number of `u ∈ {0,1}^k` with `d(wu) ≥ α·2^{k−l}·d(w)`.
    pub count: u64,
    /// Whether `count ≤ 2^l / α`.
    pub holds: bool,
}

/// Counts the extensions `u` of length `k` on which `d` grows by at least
/// `α·2^{k−l}`, for rational `l = l_num/l_den`, and checks the bound
/// `2^l/α` on their number. All comparisons are exact.
pub fn counting_bound_check(
    model: &MartingaleModel,
    w: &BitString,
    k: usize,
    alpha: &Dyadic,
    l_num: i64,
    l_den: u64,
) -> Result<CountingReport> {
    if k > MAX_FAIRNESS_DEPTH {
        return Err(Error::OutOfRange(format!("k = {k} above {MAX_FAIRNESS_DEPTH}")));
    }
    if l_den == 0 || l_den > u32::MAX as u64 {
        return Err(Error::OutOfRange("l denominator must be in 1..2^32".into()));
    }
    if alpha.is_zero() {
        return Err(Error::OutOfRange("alpha must be positive".into()));
    }
    let base = model.cursor_at(w);
    if base.capital().is_zero() {
        return Err(Error::ZeroCapital);
    }
    let b = l_den as u32;
    // d(wu)^b ≥ (α·d(w))^b · 2^{kb − a}
    let target = (alpha * base.capital()).pow(b).shl(k as i64 * b as i64 - l_num);
    let mut count = 0u64;
    let mut stack = vec![base];
    while let Some(cur) = stack.pop() {
        if cur.len() - w.len() == k {
            if cur.capital().pow(b) >= target {
                count += 1;
            }
            continue;
        }
        stack.push(model.step(&cur, true));
        stack.push(model.step(&cur, false));
    }
    // (count·α)^b ≤ 2^a
    let lhs = (&Dyadic::from_u64(count) * alpha).pow(b);
    let holds = lhs <= Dyadic::pow2(l_num);
    Ok(CountingReport { count, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn q(s: &str) -> Dyadic {
        Dyadic::parse(s).unwrap()
    }

    #[test]
    fn built_in_models_are_fair() {
        for d in ["fixed:p0=3/4", "markov:k=2,g=6", "phase:period=3,g=2", "allin:1", "uniform"] {
            let m = MartingaleModel::parse(d).unwrap();
            assert!(verify_fairness(&m, 10).unwrap().passed(), "{d}");
            assert!(verify_fairness(&m.with_side_account().unwrap(), 8).unwrap().passed(), "{d}");
        }
    }

    #[test]
    fn unfair_table_is_caught() {
        let mut t = BTreeMap::new();
        t.insert(BitString::from("0"), q("2"));
        t.insert(BitString::from("1"), q("1"));
        let m = MartingaleModel::table(t);
        match verify_fairness(&m, 3).unwrap() {
            Fairness::Fail(FairnessViolation::Node { w, .. }) => assert!(w.is_empty()),
            other => panic!("expected failure at the root, got {other:?}"),
        }
        assert!(verify_fairness(&m, 21).is_err());
    }

    #[test]
    fn counting_examples() {
        let m = MartingaleModel::all_in(false);
        let r = counting_bound_check(&m, &BitString::new(), 3, &q("1"), 0, 1).unwrap();
        assert_eq!(r, CountingReport { count: 1, holds: true });
        let u = MartingaleModel::uniform();
        // every extension has d = 1 ≥ 2^{-1}·2^{2−1}: four strings, bound 2^1/(1/2) = 4
        let r = counting_bound_check(&u, &BitString::new(), 2, &q("1/2"), 1, 1).unwrap();
        assert_eq!(r, CountingReport { count: 4, holds: true });
        let z = MartingaleModel::all_in(true);
        assert_eq!(
            counting_bound_check(&z, &BitString::from("0"), 2, &q("1"), 0, 1),
            Err(Error::ZeroCapital)
        );
    }

    #[test]
    fn counting_bound_with_rational_l() {
        let m = MartingaleModel::fixed_bias(q("7/8")).unwrap();
        for k in 1..8 {
            let r = counting_bound_check(&m, &BitString::from("01"), k, &q("1/2"), 3, 2).unwrap();
            assert!(r.holds, "k = {k}: {r:?}");
        }
    }
}
