//! Binary finite-state transducers.
//!
//! A transducer reads one input bit per step, moves along `δ` and appends
//! `ν(q, b)` to its output. It is information lossless (IL) when the pair
//! (output, final state) determines the input.

mod check;
mod extract;
mod invert;

pub use check::{il_check, IlVerdict};
pub use extract::{extract_fs, ratio_fst, tail_window, ExtractReport, MemberReport, RatioSeries};
pub use invert::{il_decode, IlDecoded};

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use crate::bitio::BitString;
use crate::error::{Error, Result};

/// A transducer with states `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Fst {
    delta: Vec<[usize; 2]>,
    nu: Vec<[BitString; 2]>,
    start: usize,
}

impl Fst {
    pub fn new(delta: Vec<[usize; 2]>, nu: Vec<[BitString; 2]>, start: usize) -> Result<Self> {
        let n = delta.len();
        if n == 0 {
            return Err(Error::OutOfRange("a transducer needs at least one state".into()));
        }
        if nu.len() != n {
            return Err(Error::OutOfRange(format!("{n} transitions but {} output pairs", nu.len())));
        }
        if start >= n || delta.iter().flatten().any(|&q| q >= n) {
            return Err(Error::OutOfRange("state index out of range".into()));
        }
        Ok(Self { delta, nu, start })
    }

    pub fn states(&self) -> usize {
        self.delta.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Longest single-step output.
    pub fn lmax(&self) -> usize {
        self.nu.iter().flatten().map(BitString::len).max().unwrap_or(0)
    }

    pub fn next_state(&self, q: usize, b: bool) -> usize {
        self.delta[q][b as usize]
    }

    pub fn emission(&self, q: usize, b: bool) -> &BitString {
        &self.nu[q][b as usize]
    }

    /// `T(x)` and `δ̂(x)`.
    pub fn run(&self, x: &BitString) -> (BitString, usize) {
        self.run_from(self.start, x)
    }

    pub fn run_from(&self, mut q: usize, x: &BitString) -> (BitString, usize) {
        let mut out = BitString::new();
        for b in x.iter() {
            out.extend_from(self.emission(q, b));
            q = self.next_state(q, b);
        }
        (out, q)
    }

    /// `|T(x↾n)|` for `n = 0..=|x|`.
    pub fn output_lengths(&self, x: &BitString) -> Vec<usize> {
        let mut q = self.start;
        let mut len = 0;
        let mut out = Vec::with_capacity(x.len() + 1);
        out.push(0);
        for b in x.iter() {
            len += self.emission(q, b).len();
            q = self.next_state(q, b);
            out.push(len);
        }
        out
    }

    /// States reachable from the start, each with a shortest input reaching it.
    pub fn reachable(&self) -> Vec<(usize, BitString)> {
        let mut seen = vec![false; self.states()];
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(self.start, BitString::new())]);
        seen[self.start] = true;
        while let Some((q, w)) = queue.pop_front() {
            for b in [false, true] {
                let r = self.next_state(q, b);
                if !seen[r] {
                    seen[r] = true;
                    let mut wb = w.clone();
                    wb.push(b);
                    queue.push_back((r, wb));
                }
            }
            out.push((q, w));
        }
        out
    }

    /// Parses the `fst v1` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| Error::Parse(format!("line {}: {msg}", line + 1));
        let (ln, header) = lines.next().ok_or_else(|| Error::Parse("empty transducer file".into()))?;
        if header != "fst v1" {
            return Err(err(ln, "expected header `fst v1`"));
        }
        let (ln, dims) = lines.next().ok_or_else(|| Error::Parse("missing `states` line".into()))?;
        let f: Vec<&str> = dims.split_whitespace().collect();
        let (count, start, lmax) = match f.as_slice() {
            ["states", c, "start", s, "lmax", l] => (
                c.parse::<usize>().map_err(|_| err(ln, "bad state count"))?,
                s.parse::<usize>().map_err(|_| err(ln, "bad start state"))?,
                l.parse::<usize>().map_err(|_| err(ln, "bad lmax"))?,
            ),
            _ => return Err(err(ln, "expected `states <count> start <id> lmax <n>`")),
        };
        if count == 0 {
            return Err(err(ln, "state count must be positive"));
        }
        let mut delta = vec![[usize::MAX; 2]; count];
        let mut nu = vec![[BitString::new(), BitString::new()]; count];
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let [q, b, "->", r, "emit", o] = f.as_slice() else {
                return Err(err(ln, "expected `<state> <bit> -> <state> emit <bits|->`"));
            };
            let q: usize = q.parse().map_err(|_| err(ln, "bad state"))?;
            let r: usize = r.parse().map_err(|_| err(ln, "bad target state"))?;
            let b = match *b {
                "0" => 0,
                "1" => 1,
                _ => return Err(err(ln, "input must be 0 or 1")),
            };
            if q >= count || r >= count {
                return Err(err(ln, "state out of range"));
            }
            if delta[q][b] != usize::MAX {
                return Err(err(ln, "duplicate transition"));
            }
            delta[q][b] = r;
            nu[q][b] = if *o == "-" {
                BitString::new()
            } else {
                BitString::parse(o).map_err(|_| err(ln, "output must be a bit string or -"))?
            };
        }
        if let Some(q) = delta.iter().position(|d| d.contains(&usize::MAX)) {
            return Err(Error::Parse(format!("state {q} lacks a transition")));
        }
        let fst = Fst::new(delta, nu, start).map_err(|e| Error::Parse(e.to_string()))?;
        if fst.lmax() != lmax {
            return Err(Error::Parse(format!("declared lmax {lmax}, actual {}", fst.lmax())));
        }
        Ok(fst)
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileMissing(path.display().to_string()));
        }
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The `fst v1` text form.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "fst v1\nstates {} start {} lmax {}\n",
            self.states(),
            self.start,
            self.lmax()
        );
        for q in 0..self.states() {
            for b in [false, true] {
                let o = self.emission(q, b);
                let o = if o.is_empty() { "-".to_string() } else { o.to_string() };
                s.push_str(&format!("{q} {} -> {} emit {o}\n", b as u8, self.next_state(q, b)));
            }
        }
        s
    }

    // built-in machines

    pub fn identity() -> Self {
        Self::single_state(BitString::from("0"), BitString::from("1"))
    }

    /// `b ↦ bb`.
    pub fn doubling() -> Self {
        Self::single_state(BitString::from("00"), BitString::from("11"))
    }

    /// `b ↦ ¬b`.
    pub fn complement() -> Self {
        Self::single_state(BitString::from("1"), BitString::from("0"))
    }

    /// Emits every input bit one step late.
    pub fn delay() -> Self {
        // 0: nothing read, 1: last bit 0, 2: last bit 1
        let o = |s: &str| BitString::from(s);
        Fst::new(
            vec![[1, 2], [1, 2], [1, 2]],
            vec![[o(""), o("")], [o("0"), o("0")], [o("1"), o("1")]],
            0,
        )
        .expect("valid machine")
    }

    /// Emits the first bit of each 2-block. Not IL.
    pub fn pair_halver() -> Self {
        let o = |s: &str| BitString::from(s);
        Fst::new(vec![[1, 1], [0, 0]], vec![[o("0"), o("1")], [o(""), o("")]], 0).expect("valid machine")
    }

    /// Emits the parity of each 2-block. Not IL.
    pub fn pair_parity() -> Self {
        let o = |s: &str| BitString::from(s);
        Fst::new(
            vec![[1, 2], [0, 0], [0, 0]],
            vec![[o(""), o("")], [o("0"), o("1")], [o("1"), o("0")]],
            0,
        )
        .expect("valid machine")
    }

    /// Erases zeros, copies ones. Not IL.
    pub fn zero_eraser() -> Self {
        Self::single_state(BitString::new(), BitString::from("1"))
    }

    /// Emits `0` for every input. Not IL.
    pub fn constant_zero() -> Self {
        Self::single_state(BitString::from("0"), BitString::from("0"))
    }

    /// Emits the OR of each 2-block. Not IL.
    pub fn pair_or() -> Self {
        let o = |s: &str| BitString::from(s);
        Fst::new(
            vec![[1, 2], [0, 0], [0, 0]],
            vec![[o(""), o("")], [o("0"), o("1")], [o("1"), o("1")]],
            0,
        )
        .expect("valid machine")
    }

    /// Block coder: `0^b ↦ 00`, `1^b ↦ 01`, any other `b`-block `u ↦ 1u`.
    pub fn block_coder(b: usize) -> Self {
        assert!((1..=16).contains(&b), "block size 1..=16");
        // state for a partial block of length l and value v: 2^l − 1 + v
        let n = (1usize << b) - 1;
        let mut delta = vec![[0; 2]; n];
        let mut nu = vec![[BitString::new(), BitString::new()]; n];
        for l in 0..b {
            for v in 0..1usize << l {
                let q = (1 << l) - 1 + v;
                for bit in [false, true] {
                    let v2 = (v << 1) | bit as usize;
                    if l + 1 < b {
                        delta[q][bit as usize] = (1 << (l + 1)) - 1 + v2;
                    } else {
                        let block = BitString::from_u64(v2 as u64, b);
                        nu[q][bit as usize] = if v2 == 0 {
                            BitString::from("00")
                        } else if v2 == (1 << b) - 1 {
                            BitString::from("01")
                        } else {
                            BitString::from("1").concat(&block)
                        };
                    }
                }
            }
        }
        Fst::new(delta, nu, 0).expect("valid machine")
    }

    fn single_state(zero: BitString, one: BitString) -> Self {
        Fst::new(vec![[0, 0]], vec![[zero, one]], 0).expect("valid machine")
    }
}

impl fmt::Debug for Fst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fst({} states, lmax {})", self.states(), self.lmax())
    }
}

/// `outer ∘ inner`: feeds each emission of `inner` through `outer`.
pub fn compose_fst(outer: &Fst, inner: &Fst) -> Fst {
    let mut index = HashMap::new();
    let mut pairs = vec![(inner.start, outer.start)];
    index.insert((inner.start, outer.start), 0usize);
    let mut delta = Vec::new();
    let mut nu = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let (qi, qo) = pairs[i];
        let mut d = [0; 2];
        let mut e = [BitString::new(), BitString::new()];
        for b in [false, true] {
            let mid = inner.emission(qi, b);
            let (out, qo2) = outer.run_from(qo, mid);
            let key = (inner.next_state(qi, b), qo2);
            let next = *index.entry(key).or_insert_with(|| {
                pairs.push(key);
                pairs.len() - 1
            });
            d[b as usize] = next;
            e[b as usize] = out;
        }
        delta.push(d);
        nu.push(e);
        i += 1;
    }
    Fst::new(delta, nu, 0).expect("product of valid machines")
}

/// A transducer with a display name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Named {
    pub name: String,
    pub fst: Fst,
}

impl Named {
    pub fn new(name: impl Into<String>, fst: Fst) -> Self {
        Self {
            name: name.into(),
            fst,
        }
    }
}

/// Version tag of [`default_battery`].
pub const BATTERY_VERSION: u32 = 1;

/// The default battery: identity, doubling, pair-halver (not IL, kept for
/// negative checks), the 3- and 6-block coders, and two compositions.
pub fn default_battery() -> Vec<Named> {
    let b3 = Fst::block_coder(3);
    let b6 = Fst::block_coder(6);
    vec![
        Named::new("identity", Fst::identity()),
        Named::new("doubling", Fst::doubling()),
        Named::new("pair-halver", Fst::pair_halver()),
        Named::new("block3", b3.clone()),
        Named::new("block6", b6.clone()),
        Named::new("block3∘doubling", compose_fst(&b3, &Fst::doubling())),
        Named::new("block6∘block3", compose_fst(&b6, &b3)),
    ]
}

/// Ten machines with known IL status: five IL, five not.
pub fn labeled_suite() -> Vec<(Named, bool)> {
    vec![
        (Named::new("identity", Fst::identity()), true),
        (Named::new("doubling", Fst::doubling()), true),
        (Named::new("block3", Fst::block_coder(3)), true),
        (Named::new("block6", Fst::block_coder(6)), true),
        (Named::new("delay", Fst::delay()), true),
        (Named::new("pair-halver", Fst::pair_halver()), false),
        (Named::new("pair-parity", Fst::pair_parity()), false),
        (Named::new("zero-eraser", Fst::zero_eraser()), false),
        (Named::new("constant-zero", Fst::constant_zero()), false),
        (Named::new("pair-or", Fst::pair_or()), false),
    ]
}

/// Looks up a built-in machine by name: `identity`, `doubling`,
/// `complement`, `delay`, `pair-halver`, `pair-parity`, `zero-eraser`,
/// `constant-zero`, `pair-or`, `block<k>`.
pub fn builtin(name: &str) -> Option<Fst> {
    Some(match name {
        "identity" => Fst::identity(),
        "doubling" => Fst::doubling(),
        "complement" => Fst::complement(),
        "delay" => Fst::delay(),
        "pair-halver" => Fst::pair_halver(),
        "pair-parity" => Fst::pair_parity(),
        "zero-eraser" => Fst::zero_eraser(),
        "constant-zero" => Fst::constant_zero(),
        "pair-or" => Fst::pair_or(),
        _ => {
            let k: usize = name.strip_prefix("block")?.parse().ok()?;
            if !(1..=16).contains(&k) {
                return None;
            }
            Fst::block_coder(k)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(s: &str) -> BitString {
        BitString::from(s)
    }

    #[test]
    fn run_examples() {
        assert_eq!(Fst::identity().run(&b("0110")), (b("0110"), 0));
        assert_eq!(Fst::doubling().run(&b("01")).0, b("0011"));
        assert_eq!(Fst::block_coder(3).run(&b("000111")).0, b("0001"));
        assert_eq!(Fst::block_coder(3).run(&b("010")).0, b("1010"));
        assert_eq!(Fst::block_coder(3).states(), 7);
        assert_eq!(Fst::block_coder(6).states(), 63);
        assert_eq!(Fst::delay().run(&b("011")).0, b("01"));
    }

    #[test]
    fn recursion_matches_folding() {
        for fst in [Fst::block_coder(3), Fst::pair_halver(), Fst::delay()] {
            for len in 0..=10 {
                for v in 0..1u64 << len {
                    let x = BitString::from_u64(v, len);
                    let (out, q) = fst.run(&x);
                    for bit in [false, true] {
                        let mut xb = x.clone();
                        xb.push(bit);
                        let expect = out.concat(fst.emission(q, bit));
                        assert_eq!(fst.run(&xb), (expect, fst.next_state(q, bit)));
                    }
                }
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        for fst in [Fst::identity(), Fst::block_coder(3), Fst::delay()] {
            let text = fst.to_text();
            assert_eq!(Fst::parse(&text).unwrap(), fst);
        }
        let text = "fst v1\n# comment\nstates 1 start 0 lmax 1\n0 0 -> 0 emit -\n0 1 -> 0 emit 1\n";
        assert_eq!(Fst::parse(text).unwrap(), Fst::zero_eraser());
        assert!(Fst::parse("fst v2\n").is_err());
        assert!(Fst::parse("fst v1\nstates 1 start 0 lmax 1\n0 0 -> 0 emit 0\n").is_err());
        assert!(Fst::parse("fst v1\nstates 1 start 0 lmax 2\n0 0 -> 0 emit 0\n0 1 -> 0 emit 1\n").is_err());
        assert!(Fst::parse("fst v1\nstates 1 start 0 lmax 1\n0 0 -> 1 emit 0\n0 1 -> 0 emit 1\n").is_err());
    }

    #[test]
    fn composition_examples() {
        let x = b("0110100111");
        let d = Fst::doubling();
        assert_eq!(compose_fst(&Fst::identity(), &d).run(&x).0, d.run(&x).0);
        assert_eq!(compose_fst(&Fst::pair_halver(), &d).run(&x).0, x);
    }

    #[test]
    fn builtins_by_name() {
        assert_eq!(builtin("block3"), Some(Fst::block_coder(3)));
        assert!(builtin("block0").is_none());
        assert!(builtin("nope").is_none());
        assert_eq!(labeled_suite().len(), 10);
    }

    fn machine() -> impl Strategy<Value = Fst> {
        prop_oneof![
            Just(Fst::identity()),
            Just(Fst::doubling()),
            Just(Fst::pair_halver()),
            Just(Fst::delay()),
            Just(Fst::block_coder(3)),
            Just(Fst::block_coder(2)),
            Just(Fst::pair_or()),
        ]
    }

    proptest! {
        #[test]
        fn composition_is_function_composition(
            outer in machine(),
            inner in machine(),
            x in prop::collection::vec(any::<bool>(), 0..200),
        ) {
            let x = BitString::from_bits(x);
            let c = compose_fst(&outer, &inner);
            prop_assert_eq!(c.run(&x).0, outer.run(&inner.run(&x).0).0);
        }
    }
}
