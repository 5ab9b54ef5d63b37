//! Exact sums of signed finite `f64` terms.
//!
//! Every term is placed into a wide fixed-point integer made of 32-bit
//! digits held in `i64` slots, so additions never carry until the end.
//! After normalization the sum converts to a correctly rounded `f64` and to
//! a double-double whose `(hi, lo)` order never contradicts the exact order.

use std::cmp::Ordering;

use crate::dd::Dd;

const DIGIT_BITS: u32 = 32;
const DIGIT_MASK: i64 = (1 << DIGIT_BITS) - 1;

/// Precomputed digit placement of each term of a fixed sum.
#[derive(Clone, Debug)]
pub(crate) struct ExactSum {
    base_exp: i32,
    width: usize,
    parts: Vec<(usize, [i64; 3])>,
}

/// `(mantissa, exponent)` with `value = mantissa * 2^exponent`.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.abs().to_bits();
    let biased = (bits >> 52) as i32;
    let frac = bits & ((1 << 52) - 1);
    if biased == 0 {
        (frac, -1074)
    } else {
        (frac | 1 << 52, biased - 1075)
    }
}

impl ExactSum {
    /// `terms` must be finite and non-negative; signs are chosen per call.
    pub(crate) fn new(terms: &[f64]) -> Self {
        let decomposed: Vec<(u64, i32)> = terms.iter().map(|&t| decompose(t)).collect();
        let base_exp = decomposed
            .iter()
            .filter(|d| d.0 != 0)
            .map(|d| d.1)
            .min()
            .unwrap_or(0);
        let mut top = 0usize;
        let parts = decomposed
            .iter()
            .map(|&(m, e)| {
                if m == 0 {
                    return (0, [0; 3]);
                }
                let p = (e - base_exp) as u32;
                let digit = (p / DIGIT_BITS) as usize;
                let v = u128::from(m) << (p % DIGIT_BITS);
                top = top.max(digit);
                let chunk = |k: u32| ((v >> (k * DIGIT_BITS)) as i64) & DIGIT_MASK;
                (digit, [chunk(0), chunk(1), chunk(2)])
            })
            .collect();
        // Three digits per term, one for the carries of up to 2^32 terms,
        // one for the sign.
        Self {
            base_exp,
            width: top + 5,
            parts,
        }
    }

    /// Writes the normalized exact sum `sum_k ±terms[k]` into `acc`, where
    /// term `k` is subtracted when `negative(k)` holds.
    pub(crate) fn accumulate(&self, negative: impl Fn(usize) -> bool, acc: &mut Vec<i64>) {
        acc.clear();
        acc.resize(self.width, 0);
        for (k, (digit, chunks)) in self.parts.iter().enumerate() {
            let slot = &mut acc[*digit..*digit + 3];
            if negative(k) {
                slot.iter_mut().zip(chunks).for_each(|(a, c)| *a -= c);
            } else {
                slot.iter_mut().zip(chunks).for_each(|(a, c)| *a += c);
            }
        }
        normalize(acc);
    }

    /// `hi` is the nearest `f64` to the exact sum and `lo` the nearest `f64`
    /// to the remainder.
    pub(crate) fn to_dd(&self, acc: &[i64]) -> Dd {
        let mut digits = acc.to_vec();
        let negative = digits.last().is_some_and(|&d| d < 0);
        if negative {
            digits.iter_mut().for_each(|d| *d = -*d);
            normalize(&mut digits);
        }
        let hi = round_magnitude(&digits, self.base_exp);
        let Some((mantissa, lsb)) = hi else {
            return Dd::default();
        };
        // Remainder digits minus the rounded leading part, exactly. A value
        // narrower than 53 bits has its mantissa placed below bit 0, where
        // it only carries zeros.
        let (placed, p) = if lsb < 0 {
            (mantissa >> -lsb, 0)
        } else {
            (mantissa, lsb as u32)
        };
        let v = u128::from(placed) << (p % DIGIT_BITS);
        let d = (p / DIGIT_BITS) as usize;
        for k in 0..3 {
            if d + k < digits.len() {
                digits[d + k] -= ((v >> (k as u32 * DIGIT_BITS)) as i64) & DIGIT_MASK;
            }
        }
        normalize(&mut digits);
        let rem_negative = digits.last().is_some_and(|&x| x < 0);
        if rem_negative {
            digits.iter_mut().for_each(|x| *x = -*x);
            normalize(&mut digits);
        }
        let lo = round_magnitude(&digits, self.base_exp)
            .map(|(m, e)| scale(m, e + self.base_exp))
            .unwrap_or(0.0);
        let lo = if rem_negative { -lo } else { lo };
        let hi = scale(mantissa, lsb + self.base_exp);
        if negative {
            Dd::from_parts(-hi, -lo)
        } else {
            Dd::from_parts(hi, lo)
        }
    }
}

/// Order of two normalized accumulators of the same [`ExactSum`].
pub(crate) fn cmp(a: &[i64], b: &[i64]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Propagates carries so every digit but the last lies in `[0, 2^32)`; the
/// last digit carries the sign.
fn normalize(acc: &mut [i64]) {
    let last = acc.len() - 1;
    for i in 0..last {
        let carry = acc[i] >> DIGIT_BITS;
        acc[i] -= carry << DIGIT_BITS;
        acc[i + 1] += carry;
    }
}

/// Rounds a non-negative normalized integer to 53 bits, ties to even.
/// Returns the mantissa and the bit position of its least significant bit.
fn round_magnitude(digits: &[i64], base_exp: i32) -> Option<(u64, i32)> {
    let top = digits.iter().rposition(|&d| d != 0)?;
    let digit = |i: isize| if i < 0 { 0 } else { digits[i as usize] as u128 };
    let t = top as isize;
    let window = digit(t) << 64 | digit(t - 1) << 32 | digit(t - 2);
    let width = 128 - window.leading_zeros() as i32;
    let window_lsb = 32 * (t as i32 - 2);
    // Keep no more bits than the subnormal floor allows.
    let floor = -1074 - base_exp;
    let keep = 54.min(width + window_lsb - floor + 1).max(1);
    let shift = width - keep;
    let below_window = (0..(t - 2).max(0)).any(|i| digits[i as usize] != 0);
    let (kept, sticky) = if shift >= 0 {
        let kept = window >> shift;
        (kept, window & ((1u128 << shift) - 1) != 0 || below_window)
    } else {
        (window << -shift, below_window)
    };
    let round_bit = kept & 1;
    let mut mantissa = (kept >> 1) as u64;
    let mut lsb = window_lsb + shift + 1;
    if round_bit == 1 && (sticky || mantissa & 1 == 1) {
        mantissa += 1;
        if mantissa == 1 << 53 {
            mantissa >>= 1;
            lsb += 1;
        }
    }
    Some((mantissa, lsb))
}

fn scale(mantissa: u64, exp: i32) -> f64 {
    let m = mantissa as f64;
    if exp >= -1022 {
        m * pow2(exp)
    } else {
        // The rounding above already limited the mantissa to the subnormal
        // grid, so both steps are exact.
        m * pow2(exp + 600) * pow2(-600)
    }
}

fn pow2(exp: i32) -> f64 {
    f64::from_bits(((exp + 1023) as u64) << 52)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(terms: &[f64], signs: &[bool]) -> Dd {
        let s = ExactSum::new(terms);
        let mut acc = Vec::new();
        s.accumulate(|k| signs[k], &mut acc);
        s.to_dd(&acc)
    }

    #[test]
    fn sums_terms_far_below_double_precision() {
        let d = exact(&[1.0, 1e-30], &[false, false]);
        assert_eq!(d.hi(), 1.0);
        assert_eq!(d.lo(), 1e-30);
        let d = exact(&[1.0, 1e-30], &[false, true]);
        assert_eq!(d.hi(), 1.0);
        assert_eq!(d.lo(), -1e-30);
    }

    #[test]
    fn cancellation_is_exact() {
        let d = exact(&[0.1, 0.1, 1e-300], &[false, true, false]);
        assert_eq!(d.hi(), 1e-300);
        let d = exact(&[0.5, 0.5], &[false, true]);
        assert_eq!(d.hi(), 0.0);
        assert_eq!(d.lo(), 0.0);
    }

    #[test]
    fn hi_is_correctly_rounded() {
        // 1 + 2^-53 is a tie and rounds to even; adding 2^-100 breaks it.
        let eps = 2f64.powi(-53);
        assert_eq!(exact(&[1.0, eps], &[false, false]).hi(), 1.0);
        let d = exact(&[1.0, eps, 2f64.powi(-100)], &[false, false, false]);
        assert_eq!(d.hi(), 1.0 + 2.0 * eps);
        assert_eq!(d.lo(), -eps + 2f64.powi(-100));
        assert_eq!(exact(&[0.1, 0.2], &[false, false]).hi(), 0.30000000000000004);
    }

    #[test]
    fn negative_sums_mirror_positive_ones() {
        let terms = [0.75, 1e-20, 3.0];
        let pos = exact(&terms, &[false, true, true]);
        let neg = exact(&terms, &[true, false, false]);
        assert_eq!(pos.hi(), -neg.hi());
        assert_eq!(pos.lo(), -neg.lo());
    }

    #[test]
    fn narrow_values_have_zero_remainder() {
        let d = exact(&[0.75, 0.5], &[false, true]);
        assert_eq!((d.hi(), d.lo()), (0.25, 0.0));
        let d = exact(&[3.0, 0.125], &[true, false]);
        assert_eq!((d.hi(), d.lo()), (-2.875, 0.0));
    }

    #[test]
    fn subnormal_terms() {
        let tiny = f64::from_bits(1);
        assert_eq!(exact(&[tiny, tiny], &[false, false]).hi(), 2.0 * tiny);
        assert_eq!(exact(&[1.0, tiny], &[false, true]).lo(), -tiny);
    }

    #[test]
    fn comparison_follows_exact_value() {
        let s = ExactSum::new(&[1.0, 1e-40, 1e-41]);
        let mut a = Vec::new();
        let mut b = Vec::new();
        s.accumulate(|k| k == 1, &mut a);
        s.accumulate(|k| k == 2, &mut b);
        assert_eq!(cmp(&a, &b), Ordering::Less);
        assert_eq!(cmp(&b, &a), Ordering::Greater);
        assert_eq!(cmp(&a, &a.clone()), Ordering::Equal);
        s.accumulate(|_| true, &mut b);
        assert_eq!(cmp(&b, &a), Ordering::Less);
    }

    #[test]
    fn matches_naive_sum_when_exact() {
        let terms = [0.5, 0.25, 0.125, 2.0];
        for mask in 0..16u32 {
            let signs: Vec<bool> = (0..4).map(|k| mask >> k & 1 == 1).collect();
            let naive: f64 = terms
                .iter()
                .zip(&signs)
                .map(|(t, &n)| if n { -t } else { *t })
                .sum();
            assert_eq!(exact(&terms, &signs).hi(), naive);
        }
    }

    #[test]
    fn random_sums_agree_with_naive_summation() {
        let mut rng = crate::rng::SeededStream::new(9);
        for _ in 0..2000 {
            let n = 1 + (rng.next_u64() % 12) as usize;
            let terms: Vec<f64> = (0..n)
                .map(|_| (-(rng.uniform() * 40.0)).exp() * rng.uniform())
                .collect();
            let signs: Vec<bool> = (0..n).map(|_| rng.next_u64() & 1 == 1).collect();
            let naive: f64 = terms
                .iter()
                .zip(&signs)
                .map(|(t, &neg)| if neg { -t } else { *t })
                .sum();
            let bound = n as f64 * f64::EPSILON * terms.iter().sum::<f64>();
            let d = exact(&terms, &signs);
            assert!((d.hi() - naive).abs() <= bound, "{terms:?} {signs:?} {d:?} {naive}");
            let compensated: Dd = terms
                .iter()
                .zip(&signs)
                .map(|(t, &neg)| Dd::from(if neg { -t } else { *t }))
                .sum();
            let gap = (compensated - d).hi().abs();
            assert!(gap <= 1e-30 * terms.iter().sum::<f64>(), "{terms:?} {signs:?} {d:?}");
            assert!(d.lo().abs() <= d.hi().abs() * f64::EPSILON / 2.0);
        }
    }
}
