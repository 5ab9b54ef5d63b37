//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64`
//! with `|lo| <= ulp(hi) / 2`, giving roughly 106 bits of precision.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: e }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub(crate) const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    /// `hi + lo`, which must already satisfy `|lo| <= ulp(hi) / 2`.
    pub(crate) fn from_parts(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub(crate) fn hi(self) -> f64 {
        self.hi
    }

    #[cfg(test)]
    pub(crate) fn lo(self) -> f64 {
        self.lo
    }

    /// Numeric order; both parts must be finite.
    pub(crate) fn cmp_value(&self, other: &Dd) -> Ordering {
        let by = |a: f64, b: f64| a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        by(self.hi, other.hi).then(by(self.lo, other.lo))
    }

    fn ldexp(self, k: i32) -> Dd {
        let f = |x: f64| {
            let mut x = x;
            let mut k = k;
            while k < -1000 {
                x *= 2f64.powi(-1000);
                k += 1000;
            }
            x * 2f64.powi(k)
        };
        Dd { hi: f(self.hi), lo: f(self.lo) }
    }

    /// `e^self`, accurate to roughly 100 bits for arguments of moderate size.
    pub(crate) fn exp(self) -> Dd {
        if self.hi < -746.0 {
            return Dd::default();
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::from(k)).ldexp(-SQUARINGS);
        let mut t = Dd::ONE;
        for n in (2..=11).rev() {
            t = Dd::ONE + r * t / Dd::from(f64::from(n));
        }
        let mut s = r * t;
        for _ in 0..SQUARINGS {
            s = s * Dd::from(2.0) + s * s;
        }
        (Dd::ONE + s).ldexp(k as i32)
    }
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
const SQUARINGS: i32 = 10;

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let s = two_sum(self.hi, rhs.hi);
        let t = two_sum(self.lo, rhs.lo);
        let s = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(s.hi, s.lo + t.lo)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + Dd { hi: -rhs.hi, lo: -rhs.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let p = self.hi * rhs.hi;
        let e = self.hi.mul_add(rhs.hi, -p);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        quick_two_sum(p, e)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from(q2);
        let q3 = r.hi / rhs.hi;
        quick_two_sum(q1, q2) + Dd::from(q3)
    }
}

impl std::iter::Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::default(), Add::add)
    }
}

impl std::iter::Product for Dd {
    fn product<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ONE, Mul::mul)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_bits_below_double_precision() {
        let tiny = Dd::from(1e-20);
        let x = Dd::ONE + tiny;
        assert_eq!(x.hi(), 1.0);
        assert_eq!((x - Dd::ONE).hi(), 1e-20);
        assert_eq!(x.cmp_value(&Dd::ONE), Ordering::Greater);
    }

    #[test]
    fn division_round_trips() {
        let a = Dd::from(1.0) + Dd::from(3e-18);
        let b = Dd::from(3.0);
        let back = (a / b) * b - a;
        assert!(back.hi().abs() < 1e-31);
        assert_eq!((Dd::from(1.0) / Dd::from(4.0)).hi(), 0.25);
    }

    #[test]
    fn exp_agrees_with_libm_and_beyond() {
        for &x in &[0.0, -1e-20, -0.3, -1.0, -7.5, -100.0, 2.0] {
            let e = Dd::from(x).exp();
            assert!((e.hi() - x.exp()).abs() <= 2.0 * f64::EPSILON * x.exp(), "{x}");
        }
        assert_eq!(Dd::from(0.0).exp(), Dd::ONE);
        let tiny = Dd::from(-1e-20).exp();
        assert_eq!(tiny.hi(), 1.0);
        assert!((tiny.lo() + 1e-20).abs() < 1e-35);
        // e^1 to 32 digits: 2.71828182845904523536028747135266
        let e = Dd::ONE.exp();
        let err = e - Dd::from(std::f64::consts::E) - Dd::from(1.445_646_891_729_250_1e-16);
        assert!(err.hi().abs() < 1e-31, "{err:?}");
        assert_eq!(Dd::from(-800.0).exp().hi(), 0.0);
    }

    #[test]
    fn value_order_ignores_zero_sign() {
        let a = Dd::from_parts(1.0, 0.0);
        let b = Dd::from_parts(1.0, -0.0);
        assert_eq!(a.cmp_value(&b), Ordering::Equal);
        assert_eq!(Dd::from_parts(1.0, -1e-20).cmp_value(&a), Ordering::Less);
    }

    #[test]
    fn product_is_exact_for_two_factors() {
        let a = 1.0 + f64::EPSILON;
        let p = Dd::from(a) * Dd::from(a);
        assert_eq!(p.hi(), 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(p.lo, f64::EPSILON * f64::EPSILON);
    }
}
