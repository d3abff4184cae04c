//! Checks that a compressor "does not start from scratch" on one prefix.

use num_bigint::BigUint;

use crate::bitio::BitString;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// Largest extension length [`nsfs_check`] enumerates.
pub const MAX_NSFS_K: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct NsfsReport {
    /// `Σ_u 2^{−|C(wu)|} ≤ 2^{k/log k}·2^{−|C(w)|}`; this is the verdict.
    pub sum_holds: bool,
    /// `log₂(Σ_u 2^{−|C(wu)|}) + |C(w)|`.
    pub sum_log2: f64,
    /// `k / log₂ k` (infinite for `k < 2`).
    pub allowance: f64,
    /// Extensions `u` whose image shares fewer than
    /// `|C(w)| − k/log k + log k` leading bits with `C(w)`.
    pub prefix_failures: usize,
    pub checked: usize,
}

impl NsfsReport {
    pub fn passed(&self) -> bool {
        self.sum_holds
    }

    pub fn prefix_holds(&self) -> bool {
        self.prefix_failures == 0
    }
}

/// Enumerates all `u ∈ {0,1}^k` and checks the sum condition exactly, plus
/// the common-prefix condition on every `u`.
pub fn nsfs_check<F>(compressor: F, w: &BitString, k: usize) -> Result<NsfsReport>
where
    F: Fn(&BitString) -> BitString,
{
    if k > MAX_NSFS_K {
        return Err(Error::OutOfRange(format!("k = {k} above {MAX_NSFS_K}")));
    }
    let cw = compressor(w);
    let lw = cw.len() as i64;
    let allowance = if k < 2 {
        f64::INFINITY
    } else {
        k as f64 / (k as f64).log2()
    };
    let need_prefix = lw as f64 - allowance + (k.max(1) as f64).log2();
    let mut sum = Dyadic::zero();
    let mut prefix_failures = 0;
    for x in 0..1u64 << k {
        let u = BitString::from_u64(x, k);
        let cwu = compressor(&w.concat(&u));
        sum = &sum + &Dyadic::pow2(-(cwu.len() as i64));
        if k >= 2 && (cw.common_prefix_len(&cwu) as f64) < need_prefix {
            prefix_failures += 1;
        }
    }
    let scaled = sum.shl(lw);
    let sum_log2 = scaled.log2_f64();
    let sum_holds = if k < 2 {
        true
    } else if scaled.mantissa() == &BigUint::from(1u32) {
        // 2^a ≤ 2^{k/log k}  ⇔  a·log k ≤ k  ⇔  k^a ≤ 2^k
        let a = scaled.exponent();
        a <= 0 || num_traits::pow(BigUint::from(k), a as usize) <= (BigUint::from(1u32) << k)
    } else {
        sum_log2 <= allowance
    };
    Ok(NsfsReport {
        sum_holds,
        sum_log2,
        allowance,
        prefix_failures,
        checked: 1 << k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_the_sum() {
        let w = BitString::from("0110");
        let r = nsfs_check(|x| x.clone(), &w, 8).unwrap();
        assert!(r.passed());
        assert!(r.sum_log2.abs() < 1e-12);
    }

    #[test]
    fn reversal_breaks_the_prefix_condition() {
        let w = BitString::from("0110100110010110");
        let r = nsfs_check(|x| x.reversed(), &w, 8).unwrap();
        assert!(!r.prefix_holds());
    }

    #[test]
    fn constant_output_fails_the_sum() {
        let w = BitString::from("01");
        // every extension maps to the empty string: sum 2^k
        let r = nsfs_check(|_| BitString::new(), &w, 8).unwrap();
        assert!(!r.passed());
        assert!(nsfs_check(|x| x.clone(), &w, 13).is_err());
    }
}
