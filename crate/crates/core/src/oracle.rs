//! Oracle machines: decoders that rebuild a sequence from queries to an
//! oracle bit string, with exact query accounting.
//!
//! Every decoder here produces output in chunks and reads the oracle in a
//! growing prefix, so the number of distinct bits queried equals the
//! largest index queried plus one. The count charged to `S↾n` is the count
//! once the chunk holding bit `n − 1` has been produced.

use std::fmt;

use crate::bitio::{BitSource, BitString};
use crate::blockcodec::{BlockCodec, BlockDecoder};
use crate::error::{Error, Result};
use crate::ilfst::Fst;

/// Random access to oracle bits.
pub trait Tape {
    fn query(&mut self, index: usize) -> Result<bool>;
}

/// The real oracle. Counts distinct indices queried.
pub struct OracleTape<'a> {
    bits: &'a BitString,
    seen: Vec<bool>,
    distinct: usize,
    max_plus_one: usize,
}

impl<'a> OracleTape<'a> {
    pub fn new(bits: &'a BitString) -> Self {
        Self {
            bits,
            seen: vec![false; bits.len()],
            distinct: 0,
            max_plus_one: 0,
        }
    }

    pub fn distinct(&self) -> usize {
        self.distinct
    }

    pub fn max_index_plus_one(&self) -> usize {
        self.max_plus_one
    }
}

impl Tape for OracleTape<'_> {
    fn query(&mut self, index: usize) -> Result<bool> {
        let b = self.bits.get(index).ok_or(Error::OracleExhausted {
            index,
            len: self.bits.len(),
        })?;
        if !self.seen[index] {
            self.seen[index] = true;
            self.distinct += 1;
        }
        self.max_plus_one = self.max_plus_one.max(index + 1);
        Ok(b)
    }
}

/// Reads a tape front to back as a [`BitSource`].
pub struct TapeReader<'t> {
    tape: &'t mut dyn Tape,
    pos: &'t mut usize,
}

impl<'t> TapeReader<'t> {
    pub fn new(tape: &'t mut dyn Tape, pos: &'t mut usize) -> Self {
        Self { tape, pos }
    }
}

impl BitSource for TapeReader<'_> {
    fn read_bit(&mut self) -> Result<bool> {
        let b = self.tape.query(*self.pos)?;
        *self.pos += 1;
        Ok(b)
    }
}

/// A running decoder.
pub trait Decoder {
    /// Next piece of output, or `None` when the decoder has nothing more.
    fn next_chunk(&mut self, tape: &mut dyn Tape) -> Result<Option<BitString>>;
}

/// Copies the oracle one bit at a time.
pub struct BitCopier {
    pos: usize,
}

impl Decoder for BitCopier {
    fn next_chunk(&mut self, tape: &mut dyn Tape) -> Result<Option<BitString>> {
        let b = tape.query(self.pos)?;
        self.pos += 1;
        Ok(Some(BitString::from_bits(vec![b])))
    }
}

/// Repeats a fixed pattern and never queries.
pub struct Constant {
    pattern: BitString,
}

impl Decoder for Constant {
    fn next_chunk(&mut self, _: &mut dyn Tape) -> Result<Option<BitString>> {
        Ok(Some(self.pattern.clone()))
    }
}

/// Decodes a block-codec stream read from the oracle.
pub struct BlockStream {
    inner: BlockDecoder,
    pos: usize,
}

impl Decoder for BlockStream {
    fn next_chunk(&mut self, tape: &mut dyn Tape) -> Result<Option<BitString>> {
        let mut reader = TapeReader::new(tape, &mut self.pos);
        self.inner.next_block(&mut reader)
    }
}

/// Feeds oracle bits through a transducer and emits its output.
pub struct FstRunner {
    fst: Fst,
    state: usize,
    pos: usize,
}

impl Decoder for FstRunner {
    fn next_chunk(&mut self, tape: &mut dyn Tape) -> Result<Option<BitString>> {
        let b = tape.query(self.pos)?;
        self.pos += 1;
        let out = self.fst.emission(self.state, b).clone();
        self.state = self.fst.next_state(self.state, b);
        Ok(Some(out))
    }
}

/// Outer decoder whose oracle is the inner decoder's output, produced only
/// as far as the outer decoder asks.
pub struct Composed {
    outer: Box<dyn Decoder>,
    inner: Box<dyn Decoder>,
    produced: BitString,
}

struct VirtualTape<'a> {
    inner: &'a mut dyn Decoder,
    produced: &'a mut BitString,
    real: &'a mut dyn Tape,
}

impl Tape for VirtualTape<'_> {
    fn query(&mut self, index: usize) -> Result<bool> {
        while self.produced.len() <= index {
            match self.inner.next_chunk(self.real)? {
                Some(chunk) => self.produced.extend_from(&chunk),
                None => {
                    return Err(Error::OracleExhausted {
                        index,
                        len: self.produced.len(),
                    })
                }
            }
        }
        Ok(self.produced.bit(index))
    }
}

impl Decoder for Composed {
    fn next_chunk(&mut self, tape: &mut dyn Tape) -> Result<Option<BitString>> {
        let mut vt = VirtualTape {
            inner: self.inner.as_mut(),
            produced: &mut self.produced,
            real: tape,
        };
        self.outer.next_chunk(&mut vt)
    }
}

/// A decoder description; [`DecoderSpec::build`] makes a fresh instance.
#[derive(Clone, Debug)]
pub enum DecoderSpec {
    BitCopier,
    /// Repeats a nonempty pattern.
    Constant(BitString),
    /// Block-codec stream encoding `len` bits.
    BlockCodec { codec: BlockCodec, len: usize },
    FstRunner(Fst),
    Composed { outer: Box<DecoderSpec>, inner: Box<DecoderSpec> },
}

impl DecoderSpec {
    pub fn build(&self) -> Box<dyn Decoder> {
        match self {
            DecoderSpec::BitCopier => Box::new(BitCopier { pos: 0 }),
            DecoderSpec::Constant(p) => {
                let pattern = if p.is_empty() { BitString::from("0") } else { p.clone() };
                Box::new(Constant { pattern })
            }
            DecoderSpec::BlockCodec { codec, len } => Box::new(BlockStream {
                inner: codec.decoder(*len),
                pos: 0,
            }),
            DecoderSpec::FstRunner(fst) => Box::new(FstRunner {
                fst: fst.clone(),
                state: fst.start(),
                pos: 0,
            }),
            DecoderSpec::Composed { outer, inner } => Box::new(Composed {
                outer: outer.build(),
                inner: inner.build(),
                produced: BitString::new(),
            }),
        }
    }

    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DecoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderSpec::BitCopier => write!(f, "bit_copier"),
            DecoderSpec::Constant(p) => write!(f, "constant({p})"),
            DecoderSpec::BlockCodec { codec, .. } => {
                write!(f, "blockcodec({}, {})", codec.model(), codec.schedule())
            }
            DecoderSpec::FstRunner(_) => write!(f, "fst_runner"),
            DecoderSpec::Composed { outer, inner } => write!(f, "composed({outer}, {inner})"),
        }
    }
}

/// `outer` reading the output of `inner` as its oracle.
pub fn compose(outer: DecoderSpec, inner: DecoderSpec) -> DecoderSpec {
    DecoderSpec::Composed {
        outer: Box::new(outer),
        inner: Box::new(inner),
    }
}

/// Query counts per output prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryTrace {
    /// `counts[n]` = distinct oracle bits queried to produce `S↾n`.
    pub counts: Vec<usize>,
    pub max_index_plus_one: usize,
}

/// Runs a fresh decoder until it has produced `n` bits.
pub fn run_decoder(spec: &DecoderSpec, oracle: &BitString, n: usize) -> Result<(BitString, QueryTrace)> {
    let mut dec = spec.build();
    let mut tape = OracleTape::new(oracle);
    let mut out = BitString::with_capacity(n);
    let mut counts = Vec::with_capacity(n + 1);
    counts.push(0);
    while out.len() < n {
        let Some(chunk) = dec.next_chunk(&mut tape)? else {
            return Err(Error::OutOfRange(format!(
                "decoder stopped after {} of {n} bits",
                out.len()
            )));
        };
        let take = chunk.len().min(n - out.len());
        out.extend_from(&chunk.prefix(take));
        counts.extend(std::iter::repeat_n(tape.distinct(), take));
    }
    Ok((
        out,
        QueryTrace {
            counts,
            max_index_plus_one: tape.max_index_plus_one(),
        },
    ))
}

/// Ratio series `#(S↾n)/n` with its extremes over `[n_max/2, n_max]`.
///
/// The extremes estimate the liminf and limsup of the series from a
/// finite prefix. Nothing here shows they are close to the limits.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioProfile {
    pub trace: QueryTrace,
    /// `series[n − 1] = #(S↾n)/n`.
    pub series: Vec<f64>,
    pub window: (usize, usize),
    pub rho_minus_hat: f64,
    pub rho_plus_hat: f64,
}

pub fn ratio_profile(spec: &DecoderSpec, oracle: &BitString, n_max: usize) -> Result<RatioProfile> {
    if n_max < 16 {
        return Err(Error::OutOfRange(format!("n_max must be at least 16, got {n_max}")));
    }
    let (_, trace) = run_decoder(spec, oracle, n_max)?;
    let series: Vec<f64> = (1..=n_max).map(|n| trace.counts[n] as f64 / n as f64).collect();
    let window = (n_max / 2, n_max);
    let tail = &series[window.0 - 1..];
    let rho_minus_hat = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_plus_hat = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioProfile {
        trace,
        series,
        window,
        rho_minus_hat,
        rho_plus_hat,
    })
}

/// Outcome of checking `#(S↾n, outer∘inner) = #(P↾m, inner)` with
/// `m = #(S↾n, outer)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionCheck {
    pub composed: QueryTrace,
    /// `P`, produced by `inner` from the oracle as far as needed.
    pub intermediate: BitString,
    /// First `n` where the identity fails.
    pub first_mismatch: Option<usize>,
}

/// Runs the composed decoder and both factors separately for `n` output
/// bits and compares counts at every prefix.
pub fn check_composition(
    outer: &DecoderSpec,
    inner: &DecoderSpec,
    oracle: &BitString,
    n: usize,
) -> Result<CompositionCheck> {
    let composed = compose(outer.clone(), inner.clone());
    let (s, ctrace) = run_decoder(&composed, oracle, n)?;

    // materialize enough of P for the outer decoder on its own
    let mut p_len = n.max(1);
    let (p, itrace, otrace) = loop {
        let (p, itrace) = run_decoder(inner, oracle, p_len)?;
        match run_decoder(outer, &p, n) {
            Ok((s2, otrace)) => {
                if s2 != s {
                    return Err(Error::Inconsistent);
                }
                break (p, itrace, otrace);
            }
            Err(Error::OracleExhausted { .. }) => p_len *= 2,
            Err(e) => return Err(e),
        }
    };
    let first_mismatch = (1..=n).find(|&k| ctrace.counts[k] != itrace.counts[otrace.counts[k]]);
    let m = otrace.max_index_plus_one;
    Ok(CompositionCheck {
        composed: ctrace,
        intermediate: p.prefix(m),
        first_mismatch,
    })
}
