//! Deterministic test sequences.
//!
//! Descriptor grammar:
//!
//! ```text
//! lcg | champernowne | zeros | periodic(<bits>) | file(<path>)
//! tripled(<spec>) | diluted(<spec>,<rho>)
//! ```
//!
//! `rho` is a fraction such as `1/3` or a decimal such as `0.25`. The seed
//! only affects `lcg`, wherever it sits in the tree.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::bitio::{read_bits_file, BitString};
use crate::error::{Error, Result};

const LCG_MUL: u64 = 6364136223846793005;
const LCG_INC: u64 = 1442695040888963407;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeqKind {
    Lcg,
    Tripled(Box<SeqKind>),
    /// Source bits at positions `≡ 0 (mod stride)`, zeros elsewhere.
    Diluted { source: Box<SeqKind>, stride: u64 },
    Champernowne,
    Periodic(BitString),
    Zeros,
    File(PathBuf),
}

/// A reproducible sequence: kind, seed and length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub kind: SeqKind,
    pub seed: u64,
    pub n: usize,
}

impl GenSpec {
    pub fn new(kind: SeqKind, seed: u64, n: usize) -> Self {
        Self { kind, seed, n }
    }

    pub fn generate(&self) -> Result<BitString> {
        gen_sequence(self)
    }
}

/// Bits `x_1, x_2, …` of the LCG started at `x_0 = seed`, each the top bit
/// of the new state.
pub fn lcg_bits(seed: u64, n: usize) -> BitString {
    let mut x = seed;
    (0..n)
        .map(|_| {
            x = x.wrapping_mul(LCG_MUL).wrapping_add(LCG_INC);
            x >> 63 == 1
        })
        .collect()
}

/// `1 10 11 100 101 …` truncated to `n` bits.
pub fn champernowne(n: usize) -> BitString {
    let mut out = BitString::with_capacity(n);
    let mut i = 1u64;
    while out.len() < n {
        let width = 64 - i.leading_zeros() as usize;
        out.extend_from(&BitString::from_u64(i, width));
        i += 1;
    }
    out.truncate(n);
    out
}

pub fn gen_sequence(spec: &GenSpec) -> Result<BitString> {
    generate(&spec.kind, spec.seed, spec.n)
}

fn generate(kind: &SeqKind, seed: u64, n: usize) -> Result<BitString> {
    Ok(match kind {
        SeqKind::Lcg => lcg_bits(seed, n),
        SeqKind::Tripled(src) => {
            let s = generate(src, seed, n.div_ceil(3))?;
            let mut out: BitString = s.iter().flat_map(|b| [b, b, b]).collect();
            out.truncate(n);
            out
        }
        SeqKind::Diluted { source, stride } => {
            let stride = *stride as usize;
            let s = generate(source, seed, n.div_ceil(stride))?;
            (0..n)
                .map(|i| i % stride == 0 && s.bit(i / stride))
                .collect()
        }
        SeqKind::Champernowne => champernowne(n),
        SeqKind::Periodic(p) => {
            if p.is_empty() {
                return Err(Error::OutOfRange("empty period".into()));
            }
            (0..n).map(|i| p.bit(i % p.len())).collect()
        }
        SeqKind::Zeros => BitString::repeat(false, n),
        SeqKind::File(path) => {
            if !path.exists() {
                return Err(Error::FileMissing(path.display().to_string()));
            }
            let bits = read_bits_file(path, is_text_path(path))?;
            if bits.len() < n {
                return Err(Error::OutOfRange(format!(
                    "{} holds {} bits, {n} requested",
                    path.display(),
                    bits.len()
                )));
            }
            bits.prefix(n)
        }
    })
}

fn is_text_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "txt")
}

/// `⌈1/ρ⌉` for `ρ` given as `a/b` or a decimal in `(0, 1]`.
fn stride_for_rate(rho: &str) -> Result<u64> {
    let bad = || Error::Parse(format!("rate must be in (0, 1], got {rho:?}"));
    let (num, den) = match rho.split_once('/') {
        Some((a, b)) => (
            a.trim().parse::<u64>().map_err(|_| bad())?,
            b.trim().parse::<u64>().map_err(|_| bad())?,
        ),
        None => {
            let (int, frac) = rho.trim().split_once('.').unwrap_or((rho.trim(), ""));
            if frac.len() > 18 {
                return Err(bad());
            }
            let den = 10u64.pow(frac.len() as u32);
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            (int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?, den)
        }
    };
    if num == 0 || den == 0 || num > den {
        return Err(bad());
    }
    Ok(den.div_ceil(num))
}

impl SeqKind {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad sequence descriptor {s:?}"));
        let Some(open) = s.find('(') else {
            return match s {
                "lcg" => Ok(SeqKind::Lcg),
                "champernowne" => Ok(SeqKind::Champernowne),
                "zeros" => Ok(SeqKind::Zeros),
                _ => Err(bad()),
            };
        };
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        match &s[..open] {
            "tripled" => Ok(SeqKind::Tripled(Box::new(SeqKind::parse(inner)?))),
            "diluted" => {
                let (src, rho) = inner.rsplit_once(',').ok_or_else(bad)?;
                Ok(SeqKind::Diluted {
                    source: Box::new(SeqKind::parse(src)?),
                    stride: stride_for_rate(rho)?,
                })
            }
            "periodic" => Ok(SeqKind::Periodic(BitString::parse(inner)?)),
            "file" => Ok(SeqKind::File(PathBuf::from(inner))),
            _ => Err(bad()),
        }
    }
}

impl std::str::FromStr for SeqKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for SeqKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqKind::Lcg => write!(f, "lcg"),
            SeqKind::Tripled(s) => write!(f, "tripled({s})"),
            SeqKind::Diluted { source, stride } => write!(f, "diluted({source},1/{stride})"),
            SeqKind::Champernowne => write!(f, "champernowne"),
            SeqKind::Periodic(p) => write!(f, "periodic({p})"),
            SeqKind::Zeros => write!(f, "zeros"),
            SeqKind::File(p) => write!(f, "file({})", p.display()),
        }
    }
}
