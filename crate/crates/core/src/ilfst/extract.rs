//! Compression ratios of transducers and the extraction workflow.
//!
//! All figures are finite-prefix estimates taken over the tail window
//! `[N/2, N]`. They bound the finite-state dimensions from above only
//! through the machines actually tried.

use super::{compose_fst, il_check, Fst, IlVerdict, Named};
use crate::bitio::BitString;
use crate::error::{Error, Result};

/// `|T(S↾n)|` for every `n`, with tail-window extremes of `|T(S↾n)|/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSeries {
    /// `lengths[n] = |T(S↾n)|`.
    pub lengths: Vec<usize>,
    /// Window `[lo, hi]` the extremes are taken over.
    pub window: (usize, usize),
    pub min: f64,
    pub max: f64,
}

impl RatioSeries {
    pub fn ratio(&self, n: usize) -> f64 {
        self.lengths[n] as f64 / n as f64
    }
}

/// Tail-window bounds for a prefix of length `n`.
pub fn tail_window(n: usize) -> (usize, usize) {
    ((n / 2).max(1), n)
}

/// Min and max of `num[i] / den[i]` over `i` in `lo..=hi` with `den[i] > 0`.
fn extremes(num: &[usize], den: impl Fn(usize) -> usize, (lo, hi): (usize, usize)) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in lo..=hi.min(num.len().saturating_sub(1)) {
        let d = den(i);
        if d == 0 {
            continue;
        }
        let r = num[i] as f64 / d as f64;
        min = min.min(r);
        max = max.max(r);
    }
    if min > max {
        (f64::NAN, f64::NAN)
    } else {
        (min, max)
    }
}

/// Ratio series of `fst` on the prefix `s`. The extremes are NaN for an
/// empty prefix.
pub fn ratio_fst(fst: &Fst, s: &BitString) -> RatioSeries {
    let lengths = fst.output_lengths(s);
    let window = tail_window(s.len());
    let (min, max) = extremes(&lengths, |n| n, window);
    RatioSeries {
        lengths,
        window,
        min,
        max,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberReport {
    pub name: String,
    pub verdict: IlVerdict,
    /// Extremes of `|C₂(P↾m)|/m`; `None` for members that are not IL.
    pub on_output: Option<(f64, f64)>,
    /// Extremes of `|(C₂∘C)(S↾n)| / |C(S↾n)|`; `None` for members that are not IL.
    pub composed: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractReport {
    /// `P = C(S↾N)`.
    pub output: BitString,
    /// Extremes of `|C(S↾n)|/n`.
    pub compressor: (f64, f64),
    pub members: Vec<MemberReport>,
    /// Smallest minimum over all IL members, both measurements.
    pub quality: f64,
}

/// Runs `C` over `s` and measures every IL battery member on the result.
/// Members failing the IL check are listed with their verdict and skipped.
pub fn extract_fs(s: &BitString, c: &Fst, battery: &[Named], bound: usize) -> Result<ExtractReport> {
    match il_check(c, bound) {
        IlVerdict::Il => {}
        v => {
            return Err(Error::Unsupported(format!(
                "the compressor must be information lossless (verdict {})",
                v.label()
            )))
        }
    }
    let c_lengths = c.output_lengths(s);
    let compressor = extremes(&c_lengths, |n| n, tail_window(s.len()));
    let output = c.run(s).0;
    let mut members = Vec::with_capacity(battery.len());
    let mut quality = f64::INFINITY;
    for m in battery {
        let verdict = il_check(&m.fst, bound);
        let (on_output, composed) = if verdict.is_il() {
            let on = ratio_fst(&m.fst, &output);
            let comp = compose_fst(&m.fst, c).output_lengths(s);
            let comp = extremes(&comp, |n| c_lengths[n], tail_window(s.len()));
            for v in [on.min, comp.0] {
                if !v.is_nan() {
                    quality = quality.min(v);
                }
            }
            (Some((on.min, on.max)), Some(comp))
        } else {
            (None, None)
        };
        members.push(MemberReport {
            name: m.name.clone(),
            verdict,
            on_output,
            composed,
        });
    }
    if quality.is_infinite() {
        quality = f64::NAN;
    }
    Ok(ExtractReport {
        output,
        compressor,
        members,
        quality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{lcg_bits, GenSpec, SeqKind};
    use crate::ilfst::default_battery;

    #[test]
    fn ratio_examples() {
        let s = lcg_bits(3, 500);
        let id = ratio_fst(&Fst::identity(), &s);
        assert!((1..=500).all(|n| id.ratio(n) == 1.0));
        assert_eq!((id.min, id.max), (1.0, 1.0));
        let d = ratio_fst(&Fst::doubling(), &s);
        assert_eq!((d.min, d.max), (2.0, 2.0));
        let b3 = ratio_fst(&Fst::block_coder(3), &BitString::from("000111000"));
        assert_eq!(b3.ratio(9), 2.0 / 3.0);
        assert_eq!(b3.window, (4, 9));
    }

    #[test]
    fn identity_compressor_leaves_battery_unchanged() {
        let s = lcg_bits(1, 2000);
        let battery = default_battery();
        let r = extract_fs(&s, &Fst::identity(), &battery, 1 << 20).unwrap();
        assert_eq!(r.output, s);
        for (m, rep) in battery.iter().zip(&r.members) {
            if let Some(on) = rep.on_output {
                let direct = ratio_fst(&m.fst, &s);
                assert_eq!(on, (direct.min, direct.max));
                assert_eq!(rep.composed, Some(on));
            }
        }
        let pair = r.members.iter().find(|m| m.name == "pair-halver").unwrap();
        assert!(pair.on_output.is_none());
        let id = r.members.iter().find(|m| m.name == "identity").unwrap();
        assert_eq!(id.on_output, Some((1.0, 1.0)));
    }

    #[test]
    fn block_coder_on_tripled_source() {
        let s = GenSpec::new(SeqKind::parse("tripled(lcg)").unwrap(), 7, 6000).generate().unwrap();
        let r = extract_fs(&s, &Fst::block_coder(3), &default_battery(), 1 << 20).unwrap();
        assert!(r.compressor.1 <= 0.70, "{:?}", r.compressor);
        assert!(r.quality >= 0.85, "{}", r.quality);
    }

    #[test]
    fn rejects_lossy_compressor() {
        let s = lcg_bits(1, 100);
        assert!(extract_fs(&s, &Fst::pair_halver(), &default_battery(), 1 << 20).is_err());
    }
}
