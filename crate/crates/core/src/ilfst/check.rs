//! Information-losslessness test.
//!
//! Two distinct inputs with equal output and equal end state either share a
//! prefix and then split on one bit, or one extends the other by a nonempty
//! path that emits nothing and returns to its start state. The second case
//! is a λ-cycle search; the first is a breadth-first search over pairs of
//! runs in which the run whose output is behind always moves next, with `z`
//! holding the part of the leading run's output not yet matched.

use std::collections::{HashSet, VecDeque};

use super::Fst;
use crate::bitio::BitString;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IlVerdict {
    Il,
    /// `x ≠ y` with `T(x) = T(y)` and `δ̂(x) = δ̂(y)`.
    NotIl { x: BitString, y: BitString },
    /// The search stopped early: too many configurations, or `|z|` passed
    /// `|Q|²·(Lmax+1)`.
    Unknown { explored: usize, buffer_overflow: bool },
}

impl IlVerdict {
    pub fn is_il(&self) -> bool {
        matches!(self, IlVerdict::Il)
    }

    pub fn label(&self) -> &'static str {
        match self {
            IlVerdict::Il => "IL",
            IlVerdict::NotIl { .. } => "NotIL",
            IlVerdict::Unknown { .. } => "Unknown",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Config {
    left: usize,
    right: usize,
    z: BitString,
    // which run owns `z`; false when `z` is empty
    right_ahead: bool,
}

struct Node {
    config: Config,
    // parent index, or the split state's shortest input for roots
    parent: Result<usize, BitString>,
    right_moved: bool,
    bit: bool,
}

/// Decides whether `x ↦ (T(x), δ̂(x))` is one-to-one, exploring at most
/// `bound` configurations.
pub fn il_check(fst: &Fst, bound: usize) -> IlVerdict {
    let reach = fst.reachable();

    for (p, w) in &reach {
        if let Some(v) = lambda_cycle(fst, *p) {
            if let Some(verdict) = witness(fst, w.clone(), w.concat(&v)) {
                return verdict;
            }
        }
    }

    let limit = fst.states() * fst.states() * (fst.lmax() + 1);
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: HashSet<Config> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut overflow = false;

    for (p, w) in &reach {
        let (o0, o1) = (fst.emission(*p, false), fst.emission(*p, true));
        let Some((z, right_ahead)) = align(o0, o1) else { continue };
        let config = Config {
            left: fst.next_state(*p, false),
            right: fst.next_state(*p, true),
            z,
            right_ahead,
        };
        if seen.contains(&config) {
            continue;
        }
        seen.insert(config.clone());
        queue.push_back(nodes.len());
        nodes.push(Node {
            config,
            parent: Err(w.clone()),
            right_moved: false,
            bit: false,
        });
    }

    while let Some(i) = queue.pop_front() {
        let c = nodes[i].config.clone();
        if c.z.is_empty() && c.left == c.right {
            let (x, y) = reconstruct(&nodes, i);
            if let Some(v) = witness(fst, x, y) {
                return v;
            }
            continue;
        }
        // run that moves: the one behind, or either when level
        let movers: &[bool] = if c.z.is_empty() {
            &[false, true]
        } else if c.right_ahead {
            &[false]
        } else {
            &[true]
        };
        for &right_moves in movers {
            for bit in [false, true] {
                let q = if right_moves { c.right } else { c.left };
                let o = fst.emission(q, bit);
                let next = fst.next_state(q, bit);
                let (z, right_ahead) = if c.z.is_empty() {
                    (o.clone(), right_moves && !o.is_empty())
                } else if o.is_prefix_of(&c.z) {
                    let z = c.z.slice(o.len(), c.z.len());
                    let ra = c.right_ahead && !z.is_empty();
                    (z, ra)
                } else if c.z.is_prefix_of(o) {
                    let z = o.slice(c.z.len(), o.len());
                    (z.clone(), right_moves && !z.is_empty())
                } else {
                    continue;
                };
                if z.len() > limit {
                    overflow = true;
                    continue;
                }
                let (left, right) = if right_moves { (c.left, next) } else { (next, c.right) };
                let config = Config {
                    left,
                    right,
                    z,
                    right_ahead,
                };
                if seen.contains(&config) {
                    continue;
                }
                if nodes.len() >= bound {
                    return IlVerdict::Unknown {
                        explored: nodes.len(),
                        buffer_overflow: overflow,
                    };
                }
                seen.insert(config.clone());
                queue.push_back(nodes.len());
                nodes.push(Node {
                    config,
                    parent: Ok(i),
                    right_moved: right_moves,
                    bit,
                });
            }
        }
    }
    if overflow {
        IlVerdict::Unknown {
            explored: nodes.len(),
            buffer_overflow: true,
        }
    } else {
        IlVerdict::Il
    }
}

// Unmatched tail of the longer string and whether it belongs to `b`.
fn align(a: &BitString, b: &BitString) -> Option<(BitString, bool)> {
    if a.is_prefix_of(b) {
        let z = b.slice(a.len(), b.len());
        let ahead = !z.is_empty();
        Some((z, ahead))
    } else if b.is_prefix_of(a) {
        Some((a.slice(b.len(), a.len()), false))
    } else {
        None
    }
}

// Nonempty input from `p` back to `p` emitting nothing.
fn lambda_cycle(fst: &Fst, p: usize) -> Option<BitString> {
    let mut prev: Vec<Option<(usize, bool)>> = vec![None; fst.states()];
    let mut queue = VecDeque::new();
    for bit in [false, true] {
        if fst.emission(p, bit).is_empty() {
            let r = fst.next_state(p, bit);
            if r == p {
                return Some(BitString::from_bits(vec![bit]));
            }
            if prev[r].is_none() {
                prev[r] = Some((p, bit));
                queue.push_back(r);
            }
        }
    }
    while let Some(q) = queue.pop_front() {
        for bit in [false, true] {
            if !fst.emission(q, bit).is_empty() {
                continue;
            }
            let r = fst.next_state(q, bit);
            if r == p {
                let mut path = vec![bit];
                let mut s = q;
                while s != p {
                    let (from, b) = prev[s].expect("visited");
                    path.push(b);
                    s = from;
                }
                path.reverse();
                return Some(BitString::from_bits(path));
            }
            if prev[r].is_none() {
                prev[r] = Some((q, bit));
                queue.push_back(r);
            }
        }
    }
    None
}

fn reconstruct(nodes: &[Node], mut i: usize) -> (BitString, BitString) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let prefix = loop {
        match &nodes[i].parent {
            Ok(p) => {
                if nodes[i].right_moved {
                    right.push(nodes[i].bit);
                } else {
                    left.push(nodes[i].bit);
                }
                i = *p;
            }
            Err(w) => break w.clone(),
        }
    };
    left.push(false);
    right.push(true);
    left.reverse();
    right.reverse();
    (
        prefix.concat(&BitString::from_bits(left)),
        prefix.concat(&BitString::from_bits(right)),
    )
}

fn witness(fst: &Fst, x: BitString, y: BitString) -> Option<IlVerdict> {
    (x != y && fst.run(&x) == fst.run(&y)).then_some(IlVerdict::NotIl { x, y })
}
