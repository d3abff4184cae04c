//! Streaming inverse of an IL transducer.

use super::Fst;
use crate::bitio::BitString;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlDecoded {
    /// Input bits forced by `y`.
    pub x: BitString,
    /// Input bits some reading of `y` still has beyond `x`.
    pub pending: usize,
}

struct Hyp {
    state: usize,
    pos: usize,
    suffix: Vec<bool>,
}

/// Recovers `x` from `y = T(x)`. Each input bit is emitted once every
/// reading of `y` still alive agrees on it; a reading stops growing once it
/// has accounted for all of `y`.
///
/// Two readings that reach the same state at the same output position can
/// never be told apart, so that case is reported as `DelayExceeded`. It
/// does not arise for IL machines.
pub fn il_decode(fst: &Fst, y: &BitString, lookahead: usize) -> Result<IlDecoded> {
    let lookahead = lookahead.max(1);
    let ys = y.as_slice();
    let mut x = BitString::with_capacity(y.len());
    let mut hyps = vec![Hyp {
        state: fst.start(),
        pos: 0,
        suffix: Vec::new(),
    }];

    while hyps.iter().any(|h| h.pos < ys.len()) {
        let mut next: Vec<Hyp> = Vec::with_capacity(hyps.len() * 2);
        let mut keys: Vec<(usize, usize)> = hyps
            .iter()
            .filter(|h| h.pos == ys.len())
            .map(|h| (h.state, h.pos))
            .collect();
        for h in hyps {
            if h.pos == ys.len() {
                next.push(h);
                continue;
            }
            for b in [false, true] {
                let o = fst.emission(h.state, b).as_slice();
                let end = h.pos + o.len();
                if end > ys.len() || ys[h.pos..end] != *o {
                    continue;
                }
                let state = fst.next_state(h.state, b);
                if keys.contains(&(state, end)) {
                    return Err(Error::DelayExceeded(lookahead));
                }
                keys.push((state, end));
                let mut suffix = h.suffix.clone();
                suffix.push(b);
                next.push(Hyp { state, pos: end, suffix });
            }
        }
        if next.is_empty() {
            return Err(Error::Inconsistent);
        }
        let common = next
            .iter()
            .map(|h| common_len(&h.suffix, &next[0].suffix))
            .min()
            .unwrap_or(0);
        if common > 0 {
            for &b in &next[0].suffix[..common] {
                x.push(b);
            }
            for h in &mut next {
                h.suffix.drain(..common);
            }
        }
        if next.iter().any(|h| h.suffix.len() > lookahead) {
            return Err(Error::DelayExceeded(lookahead));
        }
        hyps = next;
    }

    if hyps.len() == 1 {
        for &b in &hyps[0].suffix {
            x.push(b);
        }
        return Ok(IlDecoded { x, pending: 0 });
    }
    let pending = hyps.iter().map(|h| h.suffix.len()).max().unwrap_or(0);
    Ok(IlDecoded { x, pending })
}

fn common_len(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).take_while(|(p, q)| p == q).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::lcg_bits;

    fn b(s: &str) -> BitString {
        BitString::from(s)
    }

    #[test]
    fn examples() {
        let y = b("0110100");
        assert_eq!(il_decode(&Fst::identity(), &y, 8).unwrap(), IlDecoded { x: y, pending: 0 });
        assert_eq!(il_decode(&Fst::doubling(), &b("0011"), 8).unwrap().x, b("01"));
        let d = il_decode(&Fst::block_coder(3), &b("0001"), 8).unwrap();
        assert_eq!(d, IlDecoded { x: b("000111"), pending: 0 });
    }

    #[test]
    fn errors() {
        assert!(matches!(il_decode(&Fst::doubling(), &b("01"), 8), Err(Error::Inconsistent)));
        // `0` and `1` both emit `0` and land in the same state
        assert!(matches!(
            il_decode(&Fst::constant_zero(), &BitString::repeat(false, 40), 8),
            Err(Error::DelayExceeded(8))
        ));
    }

    #[test]
    fn inverts_il_machines() {
        let machines = [
            Fst::identity(),
            Fst::doubling(),
            Fst::delay(),
            Fst::block_coder(3),
            Fst::block_coder(6),
            crate::ilfst::compose_fst(&Fst::block_coder(6), &Fst::block_coder(3)),
        ];
        for fst in &machines {
            for seed in 0..4 {
                let x = lcg_bits(seed, 3000 + seed as usize);
                let d = il_decode(fst, &fst.run(&x).0, 64).unwrap();
                assert!(d.x.is_prefix_of(&x));
                assert!(x.len() - d.x.len() < 8, "{fst:?}");
            }
        }
    }
}
