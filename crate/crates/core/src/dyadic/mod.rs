//! Exact nonnegative dyadic rationals `m · 2^e` and the threshold codes that
//! approximate a capital value from below with a short description.

mod threshold;

pub use threshold::{
    approx_threshold_a, approx_threshold_b, bracket_holds, threshold_decode, threshold_decode_from,
    zigzag, ThresholdCase, ThresholdCode, ThresholdCodec, ThresholdScheme,
};

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A nonnegative dyadic rational `mantissa · 2^exponent`.
///
/// Always canonical: the mantissa is odd, or zero with exponent zero. Two
/// equal values therefore have identical representations, and the derived
/// `Eq`/`Hash` are value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigUint,
    exponent: i64,
}

impl Dyadic {
    pub fn new(mantissa: BigUint, exponent: i64) -> Self {
        let mut d = Self { mantissa, exponent };
        d.canonicalize();
        d
    }

    pub fn zero() -> Self {
        Self {
            mantissa: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            mantissa: BigUint::one(),
            exponent: 0,
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::new(BigUint::from(v), 0)
    }

    pub fn from_int(v: BigUint) -> Self {
        Self::new(v, 0)
    }

    /// `num / 2^shift`.
    pub fn from_frac(num: u64, shift: u32) -> Self {
        Self::new(BigUint::from(num), -(shift as i64))
    }

    pub fn pow2(e: i64) -> Self {
        Self {
            mantissa: BigUint::one(),
            exponent: e,
        }
    }

    fn canonicalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exponent += tz as i64;
        }
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.is_zero() || self.exponent >= 0
    }

    /// Multiplies by `2^e`.
    pub fn shl(&self, e: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Self {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + e,
        }
    }

    /// `self − other`, or [`Error::NegativeResult`] if that would be negative.
    pub fn checked_sub(&self, other: &Dyadic) -> Result<Dyadic> {
        match self.cmp(other) {
            Ordering::Less => Err(Error::NegativeResult),
            Ordering::Equal => Ok(Dyadic::zero()),
            Ordering::Greater => {
                if other.is_zero() {
                    return Ok(self.clone());
                }
                let e = self.exponent.min(other.exponent);
                let a = &self.mantissa << (self.exponent - e) as usize;
                let b = &other.mantissa << (other.exponent - e) as usize;
                Ok(Dyadic::new(a - b, e))
            }
        }
    }

    pub fn pow(&self, k: u32) -> Dyadic {
        if self.is_zero() {
            return if k == 0 { Dyadic::one() } else { Dyadic::zero() };
        }
        Self {
            mantissa: num_traits::pow(self.mantissa.clone(), k as usize),
            exponent: self.exponent * k as i64,
        }
    }

    /// `⌊self⌋`.
    pub fn floor(&self) -> BigUint {
        if self.exponent >= 0 {
            &self.mantissa << self.exponent as usize
        } else {
            &self.mantissa >> (-self.exponent) as usize
        }
    }

    /// `⌊self · 2^t⌋ / 2^t`: truncation to `t` fractional bits.
    pub fn floor_to(&self, t: u32) -> Dyadic {
        if self.is_zero() || self.exponent >= -(t as i64) {
            return self.clone();
        }
        Dyadic::new(self.shl(t as i64).floor(), -(t as i64))
    }

    /// `⌊log₂ self⌋` for positive values.
    pub fn floor_log2(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mantissa.bits() as i64 - 1 + self.exponent)
        }
    }

    /// `⌈log₂ self⌉` for positive values.
    pub fn ceil_log2(&self) -> Option<i64> {
        let f = self.floor_log2()?;
        Some(if self.mantissa.is_one() { f } else { f + 1 })
    }

    /// Approximate base-2 logarithm; `-inf` for zero. Usable for values far
    /// outside the `f64` range.
    pub fn log2_f64(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mantissa.bits();
        let drop = bits.saturating_sub(60);
        let top = (&self.mantissa >> drop).to_f64().unwrap_or(f64::MAX);
        top.log2() + drop as f64 + self.exponent as f64
    }

    /// Nearest `f64`; saturates to infinity or zero outside its range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.log2_f64().exp2()
    }

    /// Parses `a`, `a/b` (with `b` a power of two) or a decimal with a binary
    /// terminating expansion such as `0.75`.
    pub fn parse(s: &str) -> Result<Dyadic> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a nonnegative dyadic rational: {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: BigUint = num.trim().parse().map_err(|_| bad())?;
            let den: BigUint = den.trim().parse().map_err(|_| bad())?;
            if den.is_zero() || den.count_ones() != 1 {
                return Err(bad());
            }
            let shift = den.trailing_zeros().unwrap_or(0) as i64;
            return Ok(Dyadic::new(num, -shift));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let digits = format!("{int}{frac}");
            let num: BigUint = digits.parse().map_err(|_| bad())?;
            let den = num_traits::pow(BigUint::from(10u32), frac.len());
            // num / 10^f is dyadic iff 5^f divides num
            let five_f = num_traits::pow(BigUint::from(5u32), frac.len());
            let (q, r) = num.div_rem(&five_f);
            if !r.is_zero() {
                return Err(bad());
            }
            debug_assert_eq!(&den, &(&five_f << frac.len()));
            return Ok(Dyadic::new(q, -(frac.len() as i64)));
        }
        let num: BigUint = s.parse().map_err(|_| bad())?;
        Ok(Dyadic::from_int(num))
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let top_a = self.mantissa.bits() as i64 + self.exponent;
        let top_b = other.mantissa.bits() as i64 + other.exponent;
        if top_a != top_b {
            return top_a.cmp(&top_b);
        }
        match self.exponent.cmp(&other.exponent) {
            Ordering::Equal => self.mantissa.cmp(&other.mantissa),
            Ordering::Greater => {
                let a = &self.mantissa << (self.exponent - other.exponent) as usize;
                a.cmp(&other.mantissa)
            }
            Ordering::Less => {
                let b = &other.mantissa << (other.exponent - self.exponent) as usize;
                self.mantissa.cmp(&b)
            }
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let a = &self.mantissa << (self.exponent - e) as usize;
        let b = &rhs.mantissa << (rhs.exponent - e) as usize;
        Dyadic::new(a + b, e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        // product of odd mantissas is odd: already canonical
        Dyadic {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dyadic::parse(s)
    }
}

impl fmt::Display for Dyadic {
    /// Lowest terms: `9/4`, `12`, `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent >= 0 {
            write!(f, "{}", self.floor())
        } else {
            write!(
                f,
                "{}/{}",
                self.mantissa,
                BigUint::one() << (-self.exponent) as usize
            )
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({self})")
    }
}

/// Compares `d` with `2^{(1−s)n}` for the rational `s = num/den`, exactly.
///
/// Both sides are raised to the power `den`, turning the comparison into
/// `d^den` versus `2^{(den−num)·n}`.
pub fn cmp_pow(d: &Dyadic, num: i64, den: u64, n: u64) -> Ordering {
    assert!(den >= 1, "denominator must be positive");
    let lhs = d.pow(u32::try_from(den).expect("denominator too large"));
    let e = (den as i128 - num as i128) * n as i128;
    let rhs = Dyadic::pow2(i64::try_from(e).expect("exponent overflow"));
    lhs.cmp(&rhs)
}
