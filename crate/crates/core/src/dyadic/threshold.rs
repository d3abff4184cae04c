//! Short threshold codes: a dyadic `c` with `r(1 − 1/k²) ≤ c < r` whose
//! description is much shorter than `r` itself.
//!
//! Wire format (all fields MSB-first):
//!
//! ```text
//! 00 x[m] enc(z)          zero fill:  c = x · 2^z
//! 01 p[m] enc(z)          one fill:   c = (p + 1) · 2^z − 1 = r − 1
//! 1  enc(x) enc(y)        fractional: c = x.y
//! ```
//!
//! `m` is derived from the schedule context (`k` for scheme A, the block
//! index `i` for scheme B) and never transmitted. With delta-z enabled the
//! integer cases carry `enc(zigzag(z − z_prev))` instead of `enc(z)`.

use num_bigint::BigUint;
use num_traits::Zero;

use super::Dyadic;
use crate::bitio::{enc, enc_nat, read_enc, read_enc_nat, BitReader, BitSource, BitString};
use crate::error::{Error, Result};

/// Which bracket the code targets: `1/k²` (scheme A) or `1/i²` (scheme B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdScheme {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdCase {
    ZeroFill,
    MinusOne,
    Fractional,
}

/// A serialized threshold together with the value it decodes to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdCode {
    pub scheme: ThresholdScheme,
    pub case: ThresholdCase,
    pub payload: BitString,
    pub value: Dyadic,
    /// Fill length of the integer cases.
    pub z: Option<u64>,
}

// Guards shifts driven by corrupt streams.
const MAX_FILL: u64 = 1 << 32;

/// Number of leading bits kept in the integer case: the least `m` with
/// `k² ≤ 2^{m−1}`.
fn lead_bits(ctx: u64) -> usize {
    let sq = ctx as u128 * ctx as u128;
    let ceil_log = 128 - (sq - 1).leading_zeros() as usize;
    ceil_log + 1
}

pub fn zigzag(delta: i64) -> u64 {
    ((delta << 1) ^ (delta >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

fn biguint_bits(v: &BigUint, width: usize) -> BitString {
    (0..width).rev().map(|i| v.bit(i as u64)).collect()
}

fn bits_biguint(bits: &BitString) -> BigUint {
    let mut v = BigUint::zero();
    for b in bits.iter() {
        v <<= 1;
        if b {
            v += 1u32;
        }
    }
    v
}

/// Stateful encoder/decoder; carries the previous fill length when delta-z
/// is on.
#[derive(Debug, Clone)]
pub struct ThresholdCodec {
    scheme: ThresholdScheme,
    delta_z: bool,
    prev_z: u64,
}

impl ThresholdCodec {
    pub fn new(scheme: ThresholdScheme, delta_z: bool) -> Self {
        Self {
            scheme,
            delta_z,
            prev_z: 0,
        }
    }

    pub fn scheme(&self) -> ThresholdScheme {
        self.scheme
    }

    fn check_ctx(&self, ctx: u64) -> Result<()> {
        match self.scheme {
            ThresholdScheme::A if ctx < 1 => Err(Error::OutOfRange("k must be at least 1".into())),
            ThresholdScheme::B if ctx < 2 => Err(Error::OutOfRange("i must be at least 2".into())),
            _ => Ok(()),
        }
    }

    fn fill_field(&self, z: u64) -> BitString {
        if self.delta_z {
            enc_nat(zigzag(z as i64 - self.prev_z as i64))
        } else {
            enc_nat(z)
        }
    }

    /// Encodes the threshold for `r` in context `ctx` (`k` or `i`).
    pub fn encode(&mut self, r: &Dyadic, ctx: u64) -> Result<ThresholdCode> {
        self.check_ctx(ctx)?;
        if *r < Dyadic::one() {
            return Err(Error::OutOfRange(format!("threshold source {r} is below 1")));
        }
        let sq = Dyadic::from_int(BigUint::from(ctx) * BigUint::from(ctx));
        if *r >= sq {
            let m = lead_bits(ctx);
            let whole = r.floor();
            let len = whole.bits() as usize;
            let (x, z) = if len <= m {
                (whole, 0u64)
            } else {
                let z = len - m;
                (&whole >> z, z as u64)
            };
            let padded = Dyadic::new(x.clone(), z as i64);
            let mut payload = BitString::new();
            let (case, value) = if padded == *r {
                payload.push(false);
                payload.push(true);
                payload.extend_from(&biguint_bits(&(&x - 1u32), m));
                (ThresholdCase::MinusOne, r.checked_sub(&Dyadic::one())?)
            } else {
                payload.push(false);
                payload.push(false);
                payload.extend_from(&biguint_bits(&x, m));
                (ThresholdCase::ZeroFill, padded)
            };
            payload.extend_from(&self.fill_field(z));
            self.prev_z = z;
            return Ok(ThresholdCode {
                scheme: self.scheme,
                case,
                payload,
                value,
                z: Some(z),
            });
        }

        // r < ctx²: keep |y| = ⌈log(ctx²/r)⌉ fractional bits
        let mut ylen = 0u32;
        while &r.shl(ylen as i64) < &sq {
            ylen += 1;
        }
        let mut value = r.floor_to(ylen);
        if value == *r {
            value = r.checked_sub(&Dyadic::pow2(-(ylen as i64)))?;
        }
        let scaled = value.shl(ylen as i64).floor();
        let int_part = &scaled >> ylen as usize;
        let frac_part = &scaled - (&int_part << ylen as usize);
        let x = biguint_bits(&int_part, int_part.bits() as usize);
        let y = biguint_bits(&frac_part, ylen as usize);
        let mut payload = BitString::from_bits(vec![true]);
        payload.extend_from(&enc(&x));
        payload.extend_from(&enc(&y));
        Ok(ThresholdCode {
            scheme: self.scheme,
            case: ThresholdCase::Fractional,
            payload,
            value,
            z: None,
        })
    }

    /// Reads one threshold code from `src`.
    pub fn decode<S: BitSource + ?Sized>(&mut self, src: &mut S, ctx: u64) -> Result<Dyadic> {
        self.check_ctx(ctx)?;
        if src.read_bit()? {
            let x = read_enc(src)?;
            let y = read_enc(src)?;
            let int_part = bits_biguint(&x);
            let frac_part = bits_biguint(&y);
            let scaled = (int_part << y.len()) + frac_part;
            return Ok(Dyadic::new(scaled, -(y.len() as i64)));
        }
        let minus_one = src.read_bit()?;
        let m = lead_bits(ctx);
        let lead = bits_biguint(&src.read_bits(m)?);
        let field = read_enc_nat(src)?;
        let z = if self.delta_z {
            let z = self.prev_z as i128 + unzigzag(field) as i128;
            u64::try_from(z).map_err(|_| Error::MalformedCode("negative fill length".into()))?
        } else {
            field
        };
        if z > MAX_FILL {
            return Err(Error::MalformedCode(format!("fill length {z} is implausible")));
        }
        self.prev_z = z;
        if minus_one {
            let x = lead + 1u32;
            let r = Dyadic::new(x, z as i64);
            r.checked_sub(&Dyadic::one())
                .map_err(|_| Error::MalformedCode("one-fill below zero".into()))
        } else {
            if lead.is_zero() {
                return Err(Error::MalformedCode("zero-fill lead is zero".into()));
            }
            Ok(Dyadic::new(lead, z as i64))
        }
    }
}

/// Scheme A threshold for `r ≥ 1` and block width `k ≥ 1`:
/// `r(1 − 1/k²) ≤ c < r`.
/// `k = 1` is accepted (schedule A with `N = 1` produces width-1 blocks);
/// its bracket is the vacuous `0 ≤ c < r`.
pub fn approx_threshold_a(r: &Dyadic, k: u64) -> Result<ThresholdCode> {
    ThresholdCodec::new(ThresholdScheme::A, false).encode(r, k)
}

/// Scheme B threshold for `r ≥ 1` and block index `i ≥ 2`:
/// `r(1 − 1/i²) ≤ c < r`.
pub fn approx_threshold_b(r: &Dyadic, i: u64) -> Result<ThresholdCode> {
    ThresholdCodec::new(ThresholdScheme::B, false).encode(r, i)
}

/// Decodes a standalone payload; the payload must be consumed exactly.
/// `prev_z` switches on delta-z decoding relative to the given fill length.
pub fn threshold_decode(
    payload: &BitString,
    scheme: ThresholdScheme,
    ctx: u64,
    prev_z: Option<u64>,
) -> Result<Dyadic> {
    let mut reader = BitReader::new(payload);
    let value = threshold_decode_from(&mut reader, scheme, ctx, prev_z)?;
    if reader.remaining() != 0 {
        return Err(Error::MalformedCode(format!(
            "{} trailing bits after threshold code",
            reader.remaining()
        )));
    }
    Ok(value)
}

/// Decodes one threshold code from a bit source.
pub fn threshold_decode_from<S: BitSource + ?Sized>(
    src: &mut S,
    scheme: ThresholdScheme,
    ctx: u64,
    prev_z: Option<u64>,
) -> Result<Dyadic> {
    let mut codec = ThresholdCodec::new(scheme, prev_z.is_some());
    codec.prev_z = prev_z.unwrap_or(0);
    codec.decode(src, ctx)
}

/// `true` iff `r(1 − 1/ctx²) ≤ c < r`, decided exactly.
pub fn bracket_holds(r: &Dyadic, c: &Dyadic, ctx: u64) -> bool {
    if c >= r {
        return false;
    }
    let sq = Dyadic::from_int(BigUint::from(ctx) * BigUint::from(ctx));
    // c·ctx² ≥ r·(ctx² − 1)
    let lhs = c * &sq;
    let rhs = r * &sq.checked_sub(&Dyadic::one()).unwrap_or_default();
    lhs >= rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Dyadic {
        Dyadic::parse(s).unwrap()
    }

    #[test]
    fn lead_bits_is_one_past_ceil_log() {
        assert_eq!(lead_bits(1), 1);
        assert_eq!(lead_bits(2), 3);
        assert_eq!(lead_bits(3), 5);
        assert_eq!(lead_bits(4), 5);
        assert_eq!(lead_bits(5), 6);
        assert_eq!(lead_bits(32), 11);
    }

    #[test]
    fn scheme_a_examples() {
        // 13 ≥ 9: fits in m = 5 bits, padding reproduces r, one-fill gives 12
        let code = approx_threshold_a(&q("13"), 3).unwrap();
        assert_eq!(code.value, q("12"));
        assert_eq!(code.case, ThresholdCase::MinusOne);
        // 200 = 11001000: x = 11001, z = 3 reproduces r, so 199
        let code = approx_threshold_a(&q("200"), 3).unwrap();
        assert_eq!(code.value, q("199"));
        // 11/2 < 16: |y| = ⌈log(16/5.5)⌉ = 2 gives c = r, decrement by 1/4
        let code = approx_threshold_a(&q("11/2"), 4).unwrap();
        assert_eq!(code.value, q("21/4"));
        assert_eq!(code.case, ThresholdCase::Fractional);
        assert_eq!(code.payload, BitString::from("1 00100101 01101"));
    }

    #[test]
    fn scheme_b_examples() {
        let code = approx_threshold_b(&q("100"), 5).unwrap();
        assert_eq!(code.value, q("99"));
        // 107 = 1101011: x = 110101, z = 1 -> 1101010
        let code = approx_threshold_b(&q("107"), 5).unwrap();
        assert_eq!(code.value, q("106"));
        assert_eq!(code.case, ThresholdCase::ZeroFill);
        let code = approx_threshold_b(&q("1"), 5).unwrap();
        assert_eq!(code.value, q("31/32"));
    }

    #[test]
    fn narrower_lead_width_would_break_the_bracket() {
        // first four bits of 143 = 10001111 give 128 < 143·15/16
        assert!(!bracket_holds(&q("143"), &q("128"), 4));
        let code = approx_threshold_a(&q("143"), 4).unwrap();
        assert!(bracket_holds(&q("143"), &code.value, 4));
        let code = approx_threshold_b(&q("67"), 5).unwrap();
        assert!(bracket_holds(&q("67"), &code.value, 5));
    }

    #[test]
    fn decode_inverts_examples() {
        for (r, k) in [("13", 3), ("200", 3), ("11/2", 4), ("1", 2), ("65536", 7)] {
            let code = approx_threshold_a(&q(r), k).unwrap();
            let back = threshold_decode(&code.payload, ThresholdScheme::A, k, None).unwrap();
            assert_eq!(back, code.value);
        }
        for (r, i) in [("100", 5), ("107", 5), ("1", 5)] {
            let code = approx_threshold_b(&q(r), i).unwrap();
            let back = threshold_decode(&code.payload, ThresholdScheme::B, i, None).unwrap();
            assert_eq!(back, code.value);
        }
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let code = approx_threshold_b(&q("100"), 5).unwrap();
        let cut = code.payload.prefix(code.payload.len() - 1);
        assert!(matches!(
            threshold_decode(&cut, ThresholdScheme::B, 5, None),
            Err(Error::MalformedCode(_))
        ));
    }

    #[test]
    fn out_of_range_inputs() {
        assert!(matches!(approx_threshold_a(&q("1/2"), 3), Err(Error::OutOfRange(_))));
        assert!(matches!(approx_threshold_b(&q("5"), 1), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn delta_z_round_trip() {
        let values = ["1000", "4000", "70000", "3", "123456789", "99999"];
        let mut enc_codec = ThresholdCodec::new(ThresholdScheme::A, true);
        let mut stream = BitString::new();
        let mut expect = Vec::new();
        for v in values {
            let code = enc_codec.encode(&q(v), 4).unwrap();
            stream.extend_from(&code.payload);
            expect.push(code.value);
        }
        let mut dec_codec = ThresholdCodec::new(ThresholdScheme::A, true);
        let mut reader = BitReader::new(&stream);
        for e in expect {
            assert_eq!(dec_codec.decode(&mut reader, 4).unwrap(), e);
        }
        assert_eq!(reader.remaining(), 0);
    }

    #[test]
    fn zigzag_round_trip() {
        for d in [-5i64, -1, 0, 1, 7, 1 << 40, -(1 << 40)] {
            assert_eq!(unzigzag(zigzag(d)), d);
        }
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
    }
}
