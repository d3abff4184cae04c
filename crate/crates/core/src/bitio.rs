//! Bit strings, the standard enumeration of `{0,1}*`, the self-delimiting
//! code `enc`, and the `BSTR` on-disk container.
//!
//! The standard enumeration lists strings by length, then lexicographically:
//! `λ, 0, 1, 00, 01, 10, 11, 000, …`. The string at position `n` is the
//! binary expansion of `n + 1` with its leading `1` removed.
//!
//! `enc(w) = 0^{|s_{|w|}|} 1 s_{|w|} w` prefixes `w` with its length written
//! in the standard enumeration, itself prefixed by a unary length. The result
//! can be followed by arbitrary bits and still be parsed unambiguously.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// A finite binary string with an exact length.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            bits: Vec::with_capacity(n),
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// `n` copies of `bit`.
    pub fn repeat(bit: bool, n: usize) -> Self {
        Self { bits: vec![bit; n] }
    }

    /// The low `width` bits of `value`, most significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64);
        let bits = (0..width).rev().map(|i| (value >> i) & 1 == 1).collect();
        Self { bits }
    }

    /// Parses ASCII `0`/`1`, ignoring whitespace. `λ` and the empty string
    /// both denote the empty string.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "λ" {
            return Ok(Self::new());
        }
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() => {}
                c => return Err(Error::Parse(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn pop(&mut self) -> Option<bool> {
        self.bits.pop()
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn truncate(&mut self, n: usize) {
        self.bits.truncate(n);
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = bool> + ExactSizeIterator + '_ {
        self.bits.iter().copied()
    }

    /// `S↾n`, the first `n` bits.
    ///
    /// Panics if `n > len`.
    pub fn prefix(&self, n: usize) -> BitString {
        Self {
            bits: self.bits[..n].to_vec(),
        }
    }

    /// Bits `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> BitString {
        Self {
            bits: self.bits[start..end].to_vec(),
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = Vec::with_capacity(self.len() + other.len());
        bits.extend_from_slice(&self.bits);
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    pub fn common_prefix_len(&self, other: &BitString) -> usize {
        self.iter()
            .zip(other.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn reversed(&self) -> BitString {
        Self {
            bits: self.bits.iter().rev().copied().collect(),
        }
    }

    /// Big-endian value of the string. Panics past 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64, "bit string too long for u64");
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Number of one bits.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("BitString(λ)")
        } else {
            write!(f, "BitString({self})")
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

impl From<&str> for BitString {
    /// Panics on characters other than `0`, `1` and whitespace; meant for
    /// literals in tests and examples.
    fn from(s: &str) -> Self {
        BitString::parse(s).expect("invalid bit string literal")
    }
}

/// `s_n`: binary expansion of `n + 1` with the leading one dropped.
pub fn std_enum(n: u64) -> BitString {
    let v = n as u128 + 1;
    let width = 127 - v.leading_zeros() as usize;
    (0..width).rev().map(|i| (v >> i) & 1 == 1).collect()
}

/// Inverse of [`std_enum`]: `2^|x| + value(x) − 1`.
///
/// Returns `None` when the index does not fit in a `u64`.
pub fn std_enum_index(x: &BitString) -> Option<u64> {
    if x.len() >= 64 {
        return None;
    }
    let v = (1u128 << x.len()) + x.to_u64() as u128 - 1;
    u64::try_from(v).ok()
}

/// Self-delimiting encoding `enc(w) = 0^{|s_{|w|}|} 1 s_{|w|} w`.
pub fn enc(w: &BitString) -> BitString {
    let len_code = std_enum(w.len() as u64);
    let mut out = BitString::with_capacity(2 * len_code.len() + 1 + w.len());
    for _ in 0..len_code.len() {
        out.push(false);
    }
    out.push(true);
    out.extend_from(&len_code);
    out.extend_from(w);
    out
}

/// `enc(n) = enc(s_n)`.
pub fn enc_nat(n: u64) -> BitString {
    enc(&std_enum(n))
}

/// Length of `enc(w)` for `|w| = len`, without building it.
pub fn enc_len(len: usize) -> usize {
    2 * std_enum(len as u64).len() + 1 + len
}

/// Anything bits can be pulled from one at a time.
pub trait BitSource {
    fn read_bit(&mut self) -> Result<bool>;

    fn read_bits(&mut self, n: usize) -> Result<BitString> {
        let mut out = BitString::with_capacity(n);
        for _ in 0..n {
            out.push(self.read_bit()?);
        }
        Ok(out)
    }
}

/// Sequential reader over a bit slice. Running off the end is a
/// [`Error::MalformedCode`].
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitString) -> Self {
        Self {
            bits: bits.as_slice(),
            pos: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

impl BitSource for BitReader<'_> {
    fn read_bit(&mut self) -> Result<bool> {
        let b = self
            .bits
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::MalformedCode(format!("stream truncated at bit {}", self.pos)))?;
        self.pos += 1;
        Ok(b)
    }
}

/// Reads one `enc` image from `src` and returns the encoded string.
pub fn read_enc<S: BitSource + ?Sized>(src: &mut S) -> Result<BitString> {
    let mut zeros = 0usize;
    while !src.read_bit()? {
        zeros += 1;
        if zeros >= 64 {
            return Err(Error::MalformedCode("length prefix too long".into()));
        }
    }
    let len_code = src.read_bits(zeros)?;
    let len = std_enum_index(&len_code)
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| Error::MalformedCode("encoded length overflows".into()))?;
    src.read_bits(len)
}

/// Reads one `enc(n)` image and returns `n`.
pub fn read_enc_nat<S: BitSource + ?Sized>(src: &mut S) -> Result<u64> {
    let w = read_enc(src)?;
    std_enum_index(&w).ok_or_else(|| Error::MalformedCode("encoded natural overflows".into()))
}

/// Decodes the `enc` image at the start of `stream`, returning the payload
/// and the number of bits consumed.
pub fn dec_enc(stream: &BitString) -> Result<(BitString, usize)> {
    let mut reader = BitReader::new(stream);
    let w = read_enc(&mut reader)?;
    Ok((w, reader.position()))
}

const BSTR_MAGIC: &[u8; 4] = b"BSTR";
const BSTR_VERSION: u8 = 0x01;
const BSTR_HEADER: usize = 4 + 1 + 8;

/// Serializes `bits` as a `BSTR` container: magic, version byte, 64-bit
/// little-endian bit count, then MSB-first packed payload with zero padding.
pub fn write_bstr(bits: &BitString) -> Vec<u8> {
    let mut out = Vec::with_capacity(BSTR_HEADER + bits.len().div_ceil(8));
    out.extend_from_slice(BSTR_MAGIC);
    out.push(BSTR_VERSION);
    out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
    for chunk in bits.as_slice().chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            if b {
                byte |= 0x80 >> i;
            }
        }
        out.push(byte);
    }
    out
}

/// Parses a `BSTR` container, rejecting bad magic, unknown versions, length
/// mismatches and nonzero padding.
pub fn read_bstr(bytes: &[u8]) -> Result<BitString> {
    if bytes.len() < BSTR_HEADER {
        return Err(Error::MalformedCode("BSTR header truncated".into()));
    }
    if &bytes[..4] != BSTR_MAGIC {
        return Err(Error::MalformedCode("bad BSTR magic".into()));
    }
    if bytes[4] != BSTR_VERSION {
        return Err(Error::MalformedCode(format!(
            "unsupported BSTR version {:#04x}",
            bytes[4]
        )));
    }
    let count = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
    let count = usize::try_from(count)
        .map_err(|_| Error::MalformedCode("BSTR bit count too large".into()))?;
    let payload = &bytes[BSTR_HEADER..];
    if payload.len() != count.div_ceil(8) {
        return Err(Error::MalformedCode(format!(
            "BSTR payload is {} bytes, expected {}",
            payload.len(),
            count.div_ceil(8)
        )));
    }
    let mut bits = BitString::with_capacity(count);
    for i in 0..count {
        bits.push(payload[i / 8] & (0x80 >> (i % 8)) != 0);
    }
    if count % 8 != 0 {
        let last = payload[payload.len() - 1];
        let pad_mask = 0xffu8 >> (count % 8);
        if last & pad_mask != 0 {
            return Err(Error::MalformedCode("BSTR padding bits are not zero".into()));
        }
    }
    Ok(bits)
}

/// Reads a bit string from disk, either as `BSTR` or as ASCII `0`/`1` text.
pub fn read_bits_file(path: &Path, text: bool) -> Result<BitString> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileMissing(path.display().to_string()),
        _ => Error::from(e),
    })?;
    if text {
        let s = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        BitString::parse(&s)
    } else {
        read_bstr(&bytes)
    }
}

/// Writes a bit string to disk as `BSTR`, or as a single line of ASCII text.
pub fn write_bits_file(path: &Path, bits: &BitString, text: bool) -> Result<()> {
    if text {
        std::fs::write(path, format!("{bits}\n"))?;
    } else {
        std::fs::write(path, write_bstr(bits))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        BitString::from(s)
    }

    #[test]
    fn standard_enumeration_examples() {
        assert_eq!(std_enum(0), BitString::new());
        assert_eq!(std_enum(1), b("0"));
        assert_eq!(std_enum(2), b("1"));
        assert_eq!(std_enum(3), b("00"));
        // binary(6) = 110, drop the leading one
        assert_eq!(std_enum(5), b("10"));
    }

    #[test]
    fn standard_enumeration_round_trips() {
        for n in 0..5000u64 {
            assert_eq!(std_enum_index(&std_enum(n)), Some(n));
        }
        assert_eq!(std_enum(u64::MAX).len(), 64);
        assert_eq!(std_enum_index(&std_enum(u64::MAX)), None);
    }

    #[test]
    fn enc_examples() {
        assert_eq!(enc(&BitString::new()), b("1"));
        assert_eq!(enc(&b("101")), b("00100101"));
        assert_eq!(enc_nat(5), b("01110"));
    }

    #[test]
    fn dec_enc_examples() {
        assert_eq!(dec_enc(&b("10110")).unwrap(), (BitString::new(), 1));
        assert_eq!(dec_enc(&b("00100101")).unwrap(), (b("101"), 8));
        assert!(matches!(dec_enc(&b("0000")), Err(Error::MalformedCode(_))));
        assert!(matches!(dec_enc(&b("001001")), Err(Error::MalformedCode(_))));
    }

    #[test]
    fn enc_len_matches() {
        for n in 0..300 {
            assert_eq!(enc_len(n), enc(&BitString::repeat(true, n)).len());
        }
    }

    #[test]
    fn bstr_layout_is_msb_first() {
        let bytes = write_bstr(&b("1010000011"));
        assert_eq!(&bytes[..5], b"BSTR\x01");
        assert_eq!(&bytes[5..13], &10u64.to_le_bytes());
        assert_eq!(&bytes[13..], &[0b1010_0000, 0b1100_0000]);
        assert_eq!(read_bstr(&bytes).unwrap(), b("1010000011"));
    }

    #[test]
    fn bstr_rejects_bad_input() {
        let mut bytes = write_bstr(&b("101"));
        *bytes.last_mut().unwrap() |= 1;
        assert!(read_bstr(&bytes).is_err(), "nonzero padding");
        let mut bytes = write_bstr(&b("101"));
        bytes[0] = b'X';
        assert!(read_bstr(&bytes).is_err(), "magic");
        let mut bytes = write_bstr(&b("101"));
        bytes[4] = 2;
        assert!(read_bstr(&bytes).is_err(), "version");
        let mut bytes = write_bstr(&b("101101101"));
        bytes.pop();
        assert!(read_bstr(&bytes).is_err(), "short payload");
        assert!(read_bstr(b"BST").is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(BitString::parse("01 10\n11").unwrap().to_string(), "011011");
        assert!(BitString::parse("λ").unwrap().is_empty());
        assert!(BitString::parse("012").is_err());
    }
}
