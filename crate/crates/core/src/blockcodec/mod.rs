//! The block-coding compressor.
//!
//! The input is cut into blocks by a [`BlockSchedule`]. For each full block
//! the encoder looks at the capital `r = d(S↾n_i)` the model holds after the
//! block, picks a short threshold `c < r` and sends the rank of the block
//! among all extensions that would also have beaten `c`. The decoder knows
//! the previous prefix, recovers `c`, and unranks.
//!
//! Stream layout, per full block:
//!
//! ```text
//! 0 enc(rank) threshold      coded block
//! 1 b_0 … b_{k−1}            raw block
//! ```
//!
//! followed by the trailing partial block as literal bits. The length `n` is
//! passed out of band, as are model and schedule.

mod nsfs;
mod schedule;
mod search;

pub use nsfs::{nsfs_check, NsfsReport};
pub use schedule::{Block, BlockSchedule, Blocks};
pub use search::{
    ind_enum, ind_lex, str_enum, str_lex, ExtensionSet, RankOrder, DEFAULT_ROUND_CAP, MAX_WIDTH,
};

use crate::bitio::{enc_nat, read_enc_nat, BitReader, BitSource, BitString};
use crate::dyadic::{Dyadic, ThresholdCodec, ThresholdScheme};
use crate::error::{Error, Result};
use crate::gale::{Cursor, MartingaleModel};

/// Default widest block the encoder will enumerate.
pub const DEFAULT_K_MAX: usize = 24;

/// Default node budget per block search.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 15;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodecOptions {
    /// Widest block the encoder will try to code; wider blocks with enough
    /// capital fail with [`Error::BlockTooWide`].
    pub k_max: usize,
    /// Search nodes one block may cost, counting the encoder's ranking and
    /// the decoder's unranking together; over budget, the block goes raw.
    /// `None` means unlimited.
    pub node_budget: Option<u64>,
    /// Send threshold fill lengths as differences from the previous block.
    pub delta_z: bool,
    /// Round cap for discovery-order ranks.
    pub round_cap: u32,
}

impl Default for CodecOptions {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
            node_budget: Some(DEFAULT_NODE_BUDGET),
            delta_z: false,
            round_cap: DEFAULT_ROUND_CAP,
        }
    }
}

/// Why a full block went out raw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RawReason {
    /// `d(S↾n_i) < 1`.
    LowCapital,
    /// Scheme B blocks 0 and 1.
    EarlyBlock,
    /// The search ran past the node budget.
    Budget,
}

/// What the encoder did with one full block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockReport {
    pub block: Block,
    /// `d(S↾n_{i−1})`.
    pub capital_before: Dyadic,
    /// `d(S↾n_i)`.
    pub capital: Dyadic,
    pub raw: Option<RawReason>,
    /// `(rank, |A|, c)` for coded blocks.
    pub coded: Option<CodedBlock>,
    /// Stream bits spent on this block, flag included.
    pub stream_bits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedBlock {
    pub rank: u64,
    pub set_size: u64,
    pub threshold: Dyadic,
}

/// Output of [`BlockCodec::encode_with_report`].
#[derive(Clone, Debug)]
pub struct Encoding {
    pub stream: BitString,
    pub blocks: Vec<BlockReport>,
    pub tail_bits: usize,
}

/// Model, schedule and options: everything both ends must agree on.
#[derive(Clone, Debug)]
pub struct BlockCodec {
    model: MartingaleModel,
    schedule: BlockSchedule,
    opts: CodecOptions,
}

impl BlockCodec {
    pub fn new(model: MartingaleModel, schedule: BlockSchedule) -> Self {
        Self::with_options(model, schedule, CodecOptions::default())
    }

    pub fn with_options(model: MartingaleModel, schedule: BlockSchedule, opts: CodecOptions) -> Self {
        Self { model, schedule, opts }
    }

    pub fn model(&self) -> &MartingaleModel {
        &self.model
    }

    pub fn schedule(&self) -> BlockSchedule {
        self.schedule
    }

    pub fn options(&self) -> &CodecOptions {
        &self.opts
    }

    fn threshold_codec(&self) -> ThresholdCodec {
        let scheme = match self.schedule {
            BlockSchedule::A { .. } => ThresholdScheme::A,
            BlockSchedule::B => ThresholdScheme::B,
        };
        ThresholdCodec::new(scheme, self.opts.delta_z)
    }

    fn rank_order(&self) -> RankOrder {
        match self.schedule {
            BlockSchedule::A { .. } => RankOrder::Lex,
            BlockSchedule::B => RankOrder::Discovery {
                round_cap: self.opts.round_cap,
            },
        }
    }

    fn threshold_ctx(&self, block: &Block) -> u64 {
        match self.schedule {
            BlockSchedule::A { .. } => block.width as u64,
            BlockSchedule::B => block.index,
        }
    }

    pub fn encode(&self, s: &BitString) -> Result<BitString> {
        Ok(self.encode_with_report(s)?.stream)
    }

    pub fn encode_with_report(&self, s: &BitString) -> Result<Encoding> {
        let mut stream = BitString::new();
        let mut reports = Vec::new();
        let mut thresholds = self.threshold_codec();
        let mut cursor = self.model.start();
        let mut pos = 0;
        for block in self.schedule.full_blocks(s.len()) {
            let u = s.slice(block.start(), block.end);
            let next = self.model.advance(&cursor, &u);
            let before = stream.len();
            let outcome = self.code_block(&block, &cursor, &next, &u, &mut thresholds)?;
            let (raw, coded) = match outcome {
                Ok((coded, bits)) => {
                    stream.push(false);
                    stream.extend_from(&bits);
                    (None, Some(coded))
                }
                Err(reason) => {
                    stream.push(true);
                    stream.extend_from(&u);
                    (Some(reason), None)
                }
            };
            reports.push(BlockReport {
                block,
                capital_before: cursor.capital().clone(),
                capital: next.capital().clone(),
                raw,
                coded,
                stream_bits: stream.len() - before,
            });
            cursor = next;
            pos = block.end;
        }
        let tail = s.slice(pos, s.len());
        stream.extend_from(&tail);
        Ok(Encoding {
            stream,
            blocks: reports,
            tail_bits: tail.len(),
        })
    }

    /// Payload for one block, or the reason it goes raw. The threshold codec
    /// state only advances for coded blocks.
    #[allow(clippy::type_complexity)]
    fn code_block(
        &self,
        block: &Block,
        before: &Cursor,
        after: &Cursor,
        u: &BitString,
        thresholds: &mut ThresholdCodec,
    ) -> Result<std::result::Result<(CodedBlock, BitString), RawReason>> {
        if self.schedule == BlockSchedule::B && block.index < 2 {
            return Ok(Err(RawReason::EarlyBlock));
        }
        let r = after.capital();
        if *r < Dyadic::one() {
            return Ok(Err(RawReason::LowCapital));
        }
        if block.width > self.opts.k_max.min(MAX_WIDTH) {
            return Err(Error::BlockTooWide {
                width: block.width,
                budget: self.opts.k_max.min(MAX_WIDTH),
            });
        }
        let mut trial = thresholds.clone();
        let code = trial.encode(r, self.threshold_ctx(block))?;
        let set = ExtensionSet::from_cursor(&self.model, before.clone(), block.width, code.value.clone())?;
        let budget = self.opts.node_budget.unwrap_or(u64::MAX);
        let found = set.rank_for_stream(u, self.rank_order(), budget)?;
        let Some((rank, set_size)) = found else {
            return Ok(Err(RawReason::Budget));
        };
        *thresholds = trial;
        let mut bits = enc_nat(rank);
        bits.extend_from(&code.payload);
        Ok(Ok((
            CodedBlock {
                rank,
                set_size,
                threshold: code.value,
            },
            bits,
        )))
    }

    /// Decodes `n` bits; the stream must be consumed exactly.
    pub fn decode(&self, stream: &BitString, n: usize) -> Result<BitString> {
        let mut reader = BitReader::new(stream);
        let mut dec = self.decoder(n);
        let mut out = BitString::with_capacity(n);
        while let Some(chunk) = dec.next_block(&mut reader)? {
            out.extend_from(&chunk);
        }
        if reader.remaining() != 0 {
            return Err(Error::MalformedCode(format!(
                "{} trailing bits after the last block",
                reader.remaining()
            )));
        }
        Ok(out)
    }

    /// Incremental decoder for a stream that encodes `n` bits.
    pub fn decoder(&self, n: usize) -> BlockDecoder {
        BlockDecoder {
            codec: self.clone(),
            blocks: self.schedule.blocks(),
            n,
            pos: 0,
            cursor: self.model.start(),
            thresholds: self.threshold_codec(),
            done: false,
        }
    }

    /// Per-block index mass and counting-bound diagnostics.
    pub fn index_mass_profile(&self, s: &BitString) -> Result<MassProfile> {
        let enc = self.encode_with_report(s)?;
        Ok(Self::mass_profile_of(&enc, s.len()))
    }

    /// [`BlockCodec::index_mass_profile`] for an encoding of `n` bits already
    /// in hand.
    pub fn mass_profile_of(enc: &Encoding, n: usize) -> MassProfile {
        let mut rows = Vec::with_capacity(enc.blocks.len());
        let mut mass = 0.0;
        for rep in &enc.blocks {
            let k = rep.block.width;
            let row = match &rep.coded {
                Some(cb) => {
                    let a = Dyadic::from_u64(cb.set_size);
                    // |A|·c ≤ 2^k·d(S↾n_{j−1}) is |A| ≤ 2^{l_j}/g_j with both sides scaled
                    let bound_holds = &a * &cb.threshold <= rep.capital_before.shl(k as i64);
                    let growth = rep.capital.log2_f64() - rep.capital_before.log2_f64();
                    let m = (cb.set_size as f64).log2();
                    mass += m;
                    MassRow {
                        block: rep.block,
                        set_size: Some(cb.set_size),
                        mass: m,
                        l: Some(k as f64 - growth),
                        g: Some((cb.threshold.log2_f64() - rep.capital.log2_f64()).exp2()),
                        bound_holds: Some(bound_holds),
                        cumulative: 0.0,
                    }
                }
                None => {
                    mass += k as f64;
                    MassRow {
                        block: rep.block,
                        set_size: None,
                        mass: k as f64,
                        l: None,
                        g: None,
                        bound_holds: None,
                        cumulative: 0.0,
                    }
                }
            };
            rows.push(MassRow {
                cumulative: mass / rep.block.end as f64,
                ..row
            });
        }
        let total = mass + enc.tail_bits as f64;
        MassProfile {
            rows,
            tail_bits: enc.tail_bits,
            ratio: if n == 0 { 0.0 } else { total / n as f64 },
            stream_bits: enc.stream.len(),
        }
    }
}

/// One row of [`MassProfile`].
#[derive(Clone, Debug, PartialEq)]
pub struct MassRow {
    pub block: Block,
    /// `|A_j|` for coded blocks.
    pub set_size: Option<u64>,
    /// `log₂|A_j|`, or the width for a raw block.
    pub mass: f64,
    /// `l_j` with `d(S↾n_j) = 2^{k_j − l_j}·d(S↾n_{j−1})`.
    pub l: Option<f64>,
    /// `g_j = c_j / d(S↾n_j)`.
    pub g: Option<f64>,
    /// Exact check of `|A_j| ≤ 2^{l_j}/g_j`.
    pub bound_holds: Option<bool>,
    /// Mass so far over `n_j`.
    pub cumulative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassProfile {
    pub rows: Vec<MassRow>,
    pub tail_bits: usize,
    /// Total mass, tail included, over `n`.
    pub ratio: f64,
    pub stream_bits: usize,
}

impl MassProfile {
    pub fn coded_blocks(&self) -> usize {
        self.rows.iter().filter(|r| r.set_size.is_some()).count()
    }

    pub fn bound_violations(&self) -> usize {
        self.rows.iter().filter(|r| r.bound_holds == Some(false)).count()
    }
}

/// Index-mass profile with default options.
pub fn index_mass_profile(s: &BitString, model: &MartingaleModel, schedule: BlockSchedule) -> Result<MassProfile> {
    BlockCodec::new(model.clone(), schedule).index_mass_profile(s)
}

/// Decodes one block at a time, pulling stream bits from any [`BitSource`].
#[derive(Clone, Debug)]
pub struct BlockDecoder {
    codec: BlockCodec,
    blocks: Blocks,
    n: usize,
    pos: usize,
    cursor: Cursor,
    thresholds: ThresholdCodec,
    done: bool,
}

impl BlockDecoder {
    /// Output bits produced so far.
    pub fn position(&self) -> usize {
        self.pos
    }

    /// The next block of output, or `None` once all `n` bits are out.
    pub fn next_block<S: BitSource + ?Sized>(&mut self, src: &mut S) -> Result<Option<BitString>> {
        if self.done {
            return Ok(None);
        }
        let block = self.blocks.next().expect("schedule is unbounded");
        if block.end > self.n {
            self.done = true;
            let tail = src.read_bits(self.n - self.pos)?;
            self.pos = self.n;
            return Ok((!tail.is_empty()).then_some(tail));
        }
        let codec = &self.codec;
        let u = if src.read_bit()? {
            src.read_bits(block.width)?
        } else {
            let rank = read_enc_nat(src)?;
            let ctx = codec.threshold_ctx(&block);
            let c = self.thresholds.decode(src, ctx)?;
            let set = ExtensionSet::from_cursor(&codec.model, self.cursor.clone(), block.width, c)?;
            let found = match codec.schedule {
                BlockSchedule::A { .. } => set.str_lex(rank),
                BlockSchedule::B => set.str_enum(rank, codec.opts.round_cap),
            };
            found.map_err(|e| match e {
                Error::RankOutOfRange { .. } | Error::RoundCapExceeded(_) => {
                    Error::MalformedCode(format!("block {}: {e}", block.index))
                }
                other => other,
            })?
        };
        self.cursor = codec.model.advance(&self.cursor, &u);
        self.pos = block.end;
        if self.pos == self.n {
            self.done = true;
        }
        Ok(Some(u))
    }
}
