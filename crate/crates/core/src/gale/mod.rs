//! Martingales over `{0,1}*` with exact dyadic capital.
//!
//! A martingale `d` obeys the fairness law `d(w0) + d(w1) = 2·d(w)`. Every
//! built-in model is a betting strategy: before each bit it splits its
//! capital between the outcomes in proportions `p0 + p1 = 1`, with the `p`
//! on a `2^{-g}` grid so that capital stays dyadic.
//!
//! Models are evaluated through a [`Cursor`], the state after reading some
//! prefix. Stepping a cursor by one bit costs one multiplication, which is
//! what the block codec's pruned searches rely on.

mod approx;
mod verify;

pub use approx::{approx_value, first_admission, Approximator};
pub use verify::{
    counting_bound_check, verify_fairness, CountingReport, Fairness, FairnessViolation,
};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::bitio::BitString;
use crate::dyadic::{cmp_pow, Dyadic};
use crate::error::{Error, Result};

/// Grammar version of model descriptors accepted by [`MartingaleModel::parse`].
pub const DESCRIPTOR_VERSION: u32 = 1;

const MAX_MARKOV_ORDER: u32 = 16;
const MAX_GRID: u32 = 62;

#[derive(Clone, PartialEq, Eq)]
enum Kind {
    /// Bets `p0` on zero at every position.
    FixedBias { p0: Dyadic },
    /// Order-`order` context model: add-half counts per context, rounded to
    /// the `2^{-g}` grid.
    Markov { order: u32, g: u32 },
    /// Even bet at phase 0 of each period; elsewhere probability
    /// `q = 1 − 2^{-g}` on repeating the period's phase-0 bit.
    PhaseCopy { period: u32, g: u32 },
    AllIn(bool),
    Uniform,
    /// Explicit values; strings absent from the table keep the value of
    /// their longest listed prefix.
    Table(BTreeMap<BitString, Dyadic>),
    Scaled { inner: Box<MartingaleModel>, shift: i64 },
    Combined { a: Box<MartingaleModel>, b: Box<MartingaleModel>, weight: Dyadic },
    SideAccount(Box<MartingaleModel>),
}

/// An evaluatable betting strategy `d: {0,1}* → Q₂`.
#[derive(Clone, PartialEq, Eq)]
pub struct MartingaleModel {
    kind: Kind,
    initial: Dyadic,
}

/// State of a model after reading a prefix.
#[derive(Clone, Debug)]
pub struct Cursor {
    capital: Dyadic,
    len: usize,
    mem: Memory,
}

#[derive(Clone, Debug)]
enum Memory {
    Stateless,
    Markov { history: u32, counts: Vec<[u32; 2]> },
    Phase { anchor: bool },
    Table { path: BitString },
    Scaled(Box<Cursor>),
    Combined(Box<Cursor>, Box<Cursor>),
    Side { main: Dyadic, side: Dyadic, inner: Box<Cursor> },
}

impl Cursor {
    /// `d(w)` for the prefix this cursor has read.
    pub fn capital(&self) -> &Dyadic {
        &self.capital
    }

    /// Number of bits read.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Side-account balance, for models built by
    /// [`MartingaleModel::with_side_account`].
    pub fn side_balance(&self) -> Option<&Dyadic> {
        match &self.mem {
            Memory::Side { side, .. } => Some(side),
            _ => None,
        }
    }
}

fn grid_prob(num: u64, g: u32) -> Dyadic {
    Dyadic::from_frac(num, g)
}

impl MartingaleModel {
    fn base(kind: Kind) -> Self {
        Self {
            kind,
            initial: Dyadic::one(),
        }
    }

    /// Constant bet: probability `p0 ∈ [0, 1]` on zero.
    pub fn fixed_bias(p0: Dyadic) -> Result<Self> {
        if p0 > Dyadic::one() {
            return Err(Error::OutOfRange(format!("p0 = {p0} exceeds 1")));
        }
        Ok(Self::base(Kind::FixedBias { p0 }))
    }

    pub fn markov(order: u32, g: u32) -> Result<Self> {
        if order > MAX_MARKOV_ORDER {
            return Err(Error::OutOfRange(format!("markov order {order} above {MAX_MARKOV_ORDER}")));
        }
        if !(1..=MAX_GRID).contains(&g) {
            return Err(Error::OutOfRange(format!("grid g = {g} outside 1..={MAX_GRID}")));
        }
        Ok(Self::base(Kind::Markov { order, g }))
    }

    pub fn phase_copy(period: u32, g: u32) -> Result<Self> {
        if period == 0 {
            return Err(Error::OutOfRange("period must be positive".into()));
        }
        if !(1..=MAX_GRID).contains(&g) {
            return Err(Error::OutOfRange(format!("grid g = {g} outside 1..={MAX_GRID}")));
        }
        Ok(Self::base(Kind::PhaseCopy { period, g }))
    }

    pub fn all_in(bit: bool) -> Self {
        Self::base(Kind::AllIn(bit))
    }

    pub fn uniform() -> Self {
        Self::base(Kind::Uniform)
    }

    /// Explicit table; `d(λ)` is the entry for the empty string, or 1.
    pub fn table(entries: BTreeMap<BitString, Dyadic>) -> Self {
        let initial = entries.get(&BitString::new()).cloned().unwrap_or_else(Dyadic::one);
        Self {
            kind: Kind::Table(entries),
            initial,
        }
    }

    /// Same strategy with a different starting capital. Only meaningful for
    /// the built-in betting models; tables and transforms keep their own.
    pub fn with_initial_capital(mut self, initial: Dyadic) -> Result<Self> {
        match self.kind {
            Kind::Table(_) | Kind::Scaled { .. } | Kind::Combined { .. } | Kind::SideAccount(_) => {
                Err(Error::Unsupported("initial capital of a derived model".into()))
            }
            _ => {
                self.initial = initial;
                Ok(self)
            }
        }
    }

    /// `d(λ)`.
    pub fn initial_capital(&self) -> &Dyadic {
        &self.initial
    }

    /// Divides by the largest power of two not exceeding `d(λ)`, giving
    /// `d'(λ) ∈ [1, 2)`. Scaling by a positive constant leaves the success
    /// sets unchanged.
    pub fn normalize(&self) -> Result<Self> {
        let j = self.initial.floor_log2().ok_or(Error::ZeroCapital)?;
        if j == 0 {
            return Ok(self.clone());
        }
        Ok(match &self.kind {
            Kind::Table(_) | Kind::Combined { .. } | Kind::SideAccount(_) => Self {
                initial: self.initial.shl(-j),
                kind: Kind::Scaled {
                    inner: Box::new(self.clone()),
                    shift: -j,
                },
            },
            Kind::Scaled { inner, shift } => Self {
                initial: self.initial.shl(-j),
                kind: Kind::Scaled {
                    inner: inner.clone(),
                    shift: shift - j,
                },
            },
            _ => Self {
                kind: self.kind.clone(),
                initial: self.initial.shl(-j),
            },
        })
    }

    /// Separate accounts: `d(w) = weight·d1(w) + (1 − weight)·d2(w)`.
    pub fn combine_accounts(d1: &Self, d2: &Self, weight: Dyadic) -> Result<Self> {
        if weight.is_zero() || weight >= Dyadic::one() {
            return Err(Error::OutOfRange(format!("weight {weight} not in (0, 1)")));
        }
        let rest = Dyadic::one().checked_sub(&weight)?;
        let initial = &(&weight * &d1.initial) + &(&rest * &d2.initial);
        Ok(Self {
            kind: Kind::Combined {
                a: Box::new(d1.clone()),
                b: Box::new(d2.clone()),
                weight,
            },
            initial,
        })
    }

    /// Keeps a side account that is never bet: after each bit, while the main
    /// account holds at least 2, one unit moves to the side. The returned
    /// capital is main + side.
    ///
    /// The main account replays the inner model's bets, so the inner model
    /// must have dyadic per-bit factors (built-in betting models and their
    /// rescalings).
    pub fn with_side_account(&self) -> Result<Self> {
        if !self.is_multiplicative() {
            return Err(Error::Unsupported(
                "side account needs a model with dyadic per-bit factors".into(),
            ));
        }
        Ok(Self {
            kind: Kind::SideAccount(Box::new(self.clone())),
            initial: self.initial.clone(),
        })
    }

    fn is_multiplicative(&self) -> bool {
        match &self.kind {
            Kind::Table(_) | Kind::Combined { .. } | Kind::SideAccount(_) => false,
            Kind::Scaled { inner, .. } => inner.is_multiplicative(),
            _ => true,
        }
    }

    /// A lower bound on `d(wb)/d(w)` over all `w` and `b`.
    pub fn min_step_factor(&self) -> Dyadic {
        match &self.kind {
            Kind::FixedBias { p0 } => {
                let p1 = Dyadic::one().checked_sub(p0).expect("p0 ≤ 1");
                p0.min(&p1).clone().shl(1)
            }
            Kind::Markov { g, .. } | Kind::PhaseCopy { g, .. } => Dyadic::pow2(1 - *g as i64),
            Kind::AllIn(_) | Kind::Table(_) => Dyadic::zero(),
            Kind::Uniform => Dyadic::one(),
            Kind::Scaled { inner, .. } => inner.min_step_factor(),
            Kind::Combined { a, b, .. } => a.min_step_factor().min(b.min_step_factor()),
            Kind::SideAccount(inner) => inner.min_step_factor().min(Dyadic::one()),
        }
    }

    /// An upper bound on `d(wb)/d(w)`; at most 2 for any martingale.
    pub fn max_step_factor(&self) -> Dyadic {
        match &self.kind {
            Kind::FixedBias { p0 } => {
                let p1 = Dyadic::one().checked_sub(p0).expect("p0 ≤ 1");
                p0.max(&p1).clone().shl(1)
            }
            Kind::Markov { g, .. } | Kind::PhaseCopy { g, .. } => {
                grid_prob((1u64 << g) - 1, *g).shl(1).max(Dyadic::one())
            }
            Kind::AllIn(_) | Kind::Table(_) => Dyadic::from_u64(2),
            Kind::Uniform => Dyadic::one(),
            Kind::Scaled { inner, .. } => inner.max_step_factor(),
            Kind::Combined { a, b, .. } => a.max_step_factor().max(b.max_step_factor()),
            Kind::SideAccount(inner) => inner.max_step_factor().max(Dyadic::one()),
        }
    }

    /// Cursor at the empty string.
    pub fn start(&self) -> Cursor {
        let mem = match &self.kind {
            Kind::Markov { order, .. } => Memory::Markov {
                history: 0,
                counts: vec![[0, 0]; 1 << order],
            },
            Kind::PhaseCopy { .. } => Memory::Phase { anchor: false },
            Kind::Table(_) => Memory::Table {
                path: BitString::new(),
            },
            Kind::Scaled { inner, .. } => Memory::Scaled(Box::new(inner.start())),
            Kind::Combined { a, b, .. } => Memory::Combined(Box::new(a.start()), Box::new(b.start())),
            Kind::SideAccount(inner) => Memory::Side {
                main: self.initial.clone(),
                side: Dyadic::zero(),
                inner: Box::new(inner.start()),
            },
            _ => Memory::Stateless,
        };
        Cursor {
            capital: self.initial.clone(),
            len: 0,
            mem,
        }
    }

    /// `d(wb)/d(w)` for multiplicative models, `None` otherwise.
    fn factor(&self, cursor: &Cursor, bit: bool) -> Option<Dyadic> {
        Some(match (&self.kind, &cursor.mem) {
            (Kind::FixedBias { p0 }, _) => {
                let p = if bit {
                    Dyadic::one().checked_sub(p0).expect("p0 ≤ 1")
                } else {
                    p0.clone()
                };
                p.shl(1)
            }
            (Kind::Markov { order, g }, Memory::Markov { history, counts }) => {
                let ctx = (*history & ((1u32 << order) - 1)) as usize;
                let n0 = markov_numerator(counts[ctx], *g);
                let nb = if bit { (1u64 << g) - n0 } else { n0 };
                grid_prob(nb, *g).shl(1)
            }
            (Kind::PhaseCopy { period, g }, Memory::Phase { anchor }) => {
                if cursor.len % *period as usize == 0 {
                    Dyadic::one()
                } else if bit == *anchor {
                    // 2q = 2 − 2^{1−g}
                    grid_prob((1u64 << g) - 1, *g).shl(1)
                } else {
                    Dyadic::pow2(1 - *g as i64)
                }
            }
            (Kind::AllIn(b), _) => {
                if bit == *b {
                    Dyadic::from_u64(2)
                } else {
                    Dyadic::zero()
                }
            }
            (Kind::Uniform, _) => Dyadic::one(),
            (Kind::Scaled { inner, .. }, Memory::Scaled(ic)) => inner.factor(ic, bit)?,
            _ => return None,
        })
    }

    /// Advances `cursor` by one bit.
    pub fn step(&self, cursor: &Cursor, bit: bool) -> Cursor {
        let len = cursor.len + 1;
        match (&self.kind, &cursor.mem) {
            (Kind::Table(entries), Memory::Table { path }) => {
                let mut path = path.clone();
                path.push(bit);
                let capital = entries.get(&path).cloned().unwrap_or_else(|| cursor.capital.clone());
                Cursor {
                    capital,
                    len,
                    mem: Memory::Table { path },
                }
            }
            (Kind::Scaled { inner, shift }, Memory::Scaled(ic)) => {
                let next = inner.step(ic, bit);
                Cursor {
                    capital: next.capital.shl(*shift),
                    len,
                    mem: Memory::Scaled(Box::new(next)),
                }
            }
            (Kind::Combined { a, b, weight }, Memory::Combined(ca, cb)) => {
                let na = a.step(ca, bit);
                let nb = b.step(cb, bit);
                let rest = Dyadic::one().checked_sub(weight).expect("weight < 1");
                let capital = &(weight * &na.capital) + &(&rest * &nb.capital);
                Cursor {
                    capital,
                    len,
                    mem: Memory::Combined(Box::new(na), Box::new(nb)),
                }
            }
            (Kind::SideAccount(inner), Memory::Side { main, side, inner: ic }) => {
                let f = inner.factor(ic, bit).expect("side account over multiplicative model");
                let next_inner = inner.step(ic, bit);
                let mut main = main * &f;
                let mut side = side.clone();
                if main >= Dyadic::from_u64(2) {
                    // while main ≥ 2 { main −= 1; side += 1 } in one move
                    let moves = Dyadic::from_int(main.floor() - 1u32);
                    main = main.checked_sub(&moves).expect("moves ≤ main");
                    side = &side + &moves;
                }
                Cursor {
                    capital: &main + &side,
                    len,
                    mem: Memory::Side {
                        main,
                        side,
                        inner: Box::new(next_inner),
                    },
                }
            }
            _ => {
                let f = self.factor(cursor, bit).expect("multiplicative model");
                let capital = &cursor.capital * &f;
                let mem = match (&self.kind, &cursor.mem) {
                    (Kind::Markov { order, .. }, Memory::Markov { history, counts }) => {
                        let mask = (1u32 << order) - 1;
                        let ctx = (*history & mask) as usize;
                        let mut counts = counts.clone();
                        counts[ctx][bit as usize] = counts[ctx][bit as usize].saturating_add(1);
                        Memory::Markov {
                            history: ((*history << 1) | bit as u32) & mask,
                            counts,
                        }
                    }
                    (Kind::PhaseCopy { period, .. }, Memory::Phase { anchor }) => {
                        let anchor = if cursor.len % *period as usize == 0 {
                            bit
                        } else {
                            *anchor
                        };
                        Memory::Phase { anchor }
                    }
                    _ => Memory::Stateless,
                };
                Cursor { capital, len, mem }
            }
        }
    }

    /// Cursor after reading all of `w`.
    pub fn advance(&self, cursor: &Cursor, w: &BitString) -> Cursor {
        w.iter().fold(cursor.clone(), |c, b| self.step(&c, b))
    }

    pub fn cursor_at(&self, w: &BitString) -> Cursor {
        self.advance(&self.start(), w)
    }

    /// `d(w)`.
    pub fn eval(&self, w: &BitString) -> Dyadic {
        self.cursor_at(w).capital
    }

    /// `d(S↾1), …, d(S↾n)` in one pass.
    pub fn capital_profile(&self, s: &BitString) -> Vec<Dyadic> {
        let mut c = self.start();
        let mut out = Vec::with_capacity(s.len());
        for b in s.iter() {
            c = self.step(&c, b);
            out.push(c.capital.clone());
        }
        out
    }

    /// `d^{(s)}(w)` for rational `s = num/den`, kept symbolic.
    pub fn sgale_eval(&self, w: &BitString, s_num: i64, s_den: u64) -> SGaleValue {
        SGaleValue {
            capital: self.eval(w),
            s_num,
            s_den,
            len: w.len() as u64,
        }
    }

    /// Parses a descriptor: `fixed:p0=3/4`, `markov:k=2,g=8`,
    /// `phase:period=3,g=8`, `allin:0`, `uniform`. Every kind accepts an
    /// extra `init=<dyadic>` parameter for the starting capital.
    pub fn parse(desc: &str) -> Result<Self> {
        let desc = desc.trim();
        let (name, args) = desc.split_once(':').unwrap_or((desc, ""));
        let mut params = BTreeMap::new();
        let mut positional = Vec::new();
        for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => {
                    params.insert(k.trim().to_string(), v.trim().to_string());
                }
                None => positional.push(part.to_string()),
            }
        }
        let take = |params: &mut BTreeMap<String, String>, key: &str| params.remove(key);
        let int = |v: Option<String>, key: &str, default: Option<u32>| -> Result<u32> {
            match v {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Parse(format!("{key} must be a natural number, got {v:?}"))),
                None => default.ok_or_else(|| Error::Parse(format!("missing parameter {key}"))),
            }
        };
        let init = take(&mut params, "init").map(|v| Dyadic::parse(&v)).transpose()?;
        let model = match name {
            "fixed" => {
                let p0 = take(&mut params, "p0")
                    .ok_or_else(|| Error::Parse("fixed needs p0".into()))?;
                let p0 = Dyadic::parse(&p0)?;
                if let Some(g) = take(&mut params, "g") {
                    let g: u32 = g.parse().map_err(|_| Error::Parse("bad g".into()))?;
                    if p0.shl(g as i64).is_integer() {
                        // fine: p0 already on the 2^{-g} grid
                    } else {
                        return Err(Error::Parse(format!("p0 = {p0} is not a multiple of 2^-{g}")));
                    }
                }
                Self::fixed_bias(p0)?
            }
            "markov" => {
                let k = int(take(&mut params, "k"), "k", None)?;
                let g = int(take(&mut params, "g"), "g", Some(8))?;
                Self::markov(k, g)?
            }
            "phase" => {
                let period = int(take(&mut params, "period"), "period", None)?;
                let g = int(take(&mut params, "g"), "g", Some(8))?;
                Self::phase_copy(period, g)?
            }
            "allin" => {
                let bit = positional
                    .pop()
                    .or_else(|| take(&mut params, "bit"))
                    .ok_or_else(|| Error::Parse("allin needs a bit".into()))?;
                match bit.as_str() {
                    "0" => Self::all_in(false),
                    "1" => Self::all_in(true),
                    other => return Err(Error::Parse(format!("allin bit must be 0 or 1, got {other:?}"))),
                }
            }
            "uniform" => Self::uniform(),
            other => return Err(Error::Parse(format!("unknown model kind {other:?}"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(Error::Parse(format!("unknown parameter {extra:?} for {name}")));
        }
        if name != "allin" && !positional.is_empty() {
            return Err(Error::Parse(format!("unexpected argument {:?}", positional[0])));
        }
        match init {
            Some(init) => model.with_initial_capital(init),
            None => Ok(model),
        }
    }
}

/// Add-half estimate of `P(0)` on the `2^{-g}` grid, clamped to
/// `[2^{-g}, 1 − 2^{-g}]`; returns the numerator over `2^g`.
fn markov_numerator(counts: [u32; 2], g: u32) -> u64 {
    let scale = 1u128 << g;
    let num = (2 * counts[0] as u128 + 1) * scale;
    let den = 2 * (counts[0] as u128 + counts[1] as u128 + 1);
    // round half up
    let rounded = (2 * num + den) / (2 * den);
    rounded.clamp(1, scale - 1) as u64
}

impl fmt::Display for MartingaleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::FixedBias { p0 } => write!(f, "fixed:p0={p0}")?,
            Kind::Markov { order, g } => write!(f, "markov:k={order},g={g}")?,
            Kind::PhaseCopy { period, g } => write!(f, "phase:period={period},g={g}")?,
            Kind::AllIn(b) => write!(f, "allin:{}", *b as u8)?,
            Kind::Uniform => write!(f, "uniform")?,
            Kind::Table(t) => return write!(f, "table[{} entries]", t.len()),
            Kind::Scaled { inner, shift } => return write!(f, "scaled({inner}, 2^{shift})"),
            Kind::Combined { a, b, weight } => return write!(f, "combine({a}, {b}, {weight})"),
            Kind::SideAccount(inner) => return write!(f, "side({inner})"),
        }
        if self.initial != Dyadic::one() {
            let sep = if matches!(self.kind, Kind::Uniform) { ":" } else { "," };
            write!(f, "{sep}init={}", self.initial)?;
        }
        Ok(())
    }
}

impl fmt::Debug for MartingaleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MartingaleModel({self})")
    }
}

/// `d^{(s)}(w) = 2^{(s−1)|w|}·d(w)` held symbolically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SGaleValue {
    pub capital: Dyadic,
    pub s_num: i64,
    pub s_den: u64,
    pub len: u64,
}

impl SGaleValue {
    /// Exact comparison of `d^{(s)}(w)` with 1.
    pub fn cmp_one(&self) -> Ordering {
        cmp_pow(&self.capital, self.s_num, self.s_den, self.len)
    }
}

/// Convenience for tests and docs: `d(w)` given a descriptor.
pub fn eval(model: &MartingaleModel, w: &BitString) -> Dyadic {
    model.eval(w)
}
