use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

/// How block widths grow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockSchedule {
    /// `k_0 = n_0 = 2`, `k_i = ⌈N·log₂ n_{i−1}⌉`, `n_i = n_{i−1} + k_i`.
    A { n: u32 },
    /// `k_i = i + 1`, `n_i = (i+1)(i+2)/2`.
    B,
}

/// One block: bits `[end − width, end)` of the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub width: usize,
    pub end: usize,
}

impl Block {
    pub fn start(&self) -> usize {
        self.end - self.width
    }
}

/// `⌈log₂ x⌉` for `x ≥ 1`.
fn ceil_log2(x: &BigUint) -> u64 {
    if x.is_one() {
        0
    } else {
        (x - 1u32).bits()
    }
}

impl BlockSchedule {
    pub fn a(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("schedule A needs N ≥ 1".into()));
        }
        Ok(BlockSchedule::A { n })
    }

    /// Parses `A:N=<k>` (or `A:<k>`) and `B`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("b") {
            return Ok(BlockSchedule::B);
        }
        let bad = || Error::Parse(format!("schedule must be A:N=<k> or B, got {s:?}"));
        let rest = s
            .strip_prefix("A:")
            .or_else(|| s.strip_prefix("a:"))
            .ok_or_else(bad)?;
        let v = rest.strip_prefix("N=").unwrap_or(rest);
        let n: u32 = v.trim().parse().map_err(|_| bad())?;
        Self::a(n)
    }

    /// The block sequence, without end.
    pub fn blocks(&self) -> Blocks {
        Blocks {
            schedule: *self,
            next: 0,
            end: 0,
        }
    }

    /// Blocks that fit completely inside `n` bits.
    pub fn full_blocks(&self, n: usize) -> impl Iterator<Item = Block> {
        self.blocks().take_while(move |b| b.end <= n)
    }

    /// Block containing bit `pos`.
    pub fn block_containing(&self, pos: usize) -> Block {
        self.blocks()
            .find(|b| b.end > pos)
            .expect("schedule is unbounded")
    }
}

impl fmt::Display for BlockSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockSchedule::A { n } => write!(f, "A:N={n}"),
            BlockSchedule::B => write!(f, "B"),
        }
    }
}

impl std::str::FromStr for BlockSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Iterator over the blocks of a schedule.
#[derive(Clone, Debug)]
pub struct Blocks {
    schedule: BlockSchedule,
    next: u64,
    end: usize,
}

impl Iterator for Blocks {
    type Item = Block;

    fn next(&mut self) -> Option<Block> {
        let i = self.next;
        let width = match self.schedule {
            BlockSchedule::A { .. } if i == 0 => 2,
            BlockSchedule::A { n } => {
                let p = num_traits::pow(BigUint::from(self.end), n as usize);
                ceil_log2(&p) as usize
            }
            BlockSchedule::B => i as usize + 1,
        };
        self.next += 1;
        self.end += width;
        Some(Block {
            index: i,
            width,
            end: self.end,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: BlockSchedule, n: usize) -> Vec<(usize, usize)> {
        s.blocks().take(n).map(|b| (b.width, b.end)).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(pairs(BlockSchedule::B, 4), [(1, 1), (2, 3), (3, 6), (4, 10)]);
        assert_eq!(
            pairs(BlockSchedule::a(2).unwrap(), 5),
            [(2, 2), (2, 4), (4, 8), (6, 14), (8, 22)]
        );
        assert_eq!(pairs(BlockSchedule::a(1).unwrap(), 4), [(2, 2), (1, 3), (2, 5), (3, 8)]);
        assert!(BlockSchedule::a(0).is_err());
    }

    #[test]
    fn widths_match_float_log() {
        for n in 1..4 {
            for b in BlockSchedule::a(n).unwrap().blocks().skip(1).take(200) {
                let prev = (b.end - b.width) as f64;
                assert_eq!(b.width, (n as f64 * prev.log2()).ceil() as usize);
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["A:N=1", "A:N=2", "B"] {
            assert_eq!(BlockSchedule::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(BlockSchedule::parse("A:3").unwrap(), BlockSchedule::A { n: 3 });
        assert!(BlockSchedule::parse("C").is_err());
        assert!(BlockSchedule::parse("A:N=0").is_err());
    }

    #[test]
    fn containing_block() {
        let s = BlockSchedule::B;
        assert_eq!(s.block_containing(0).index, 0);
        assert_eq!(s.block_containing(1).index, 1);
        assert_eq!(s.block_containing(5).index, 2);
        assert_eq!(s.block_containing(6).index, 3);
    }
}
