//! Certified values and comparisons.
//!
//! Every quantity this crate compares has the shape `c · x^α` with `c`, `x`
//! exact rationals and `α = log_s p`. A [`PowerTerm`] keeps that shape so a
//! comparison can first try exact reasoning and only then fall back to
//! outward-rounded f64 intervals and the big-integer log-domain tier.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::digits::CantorSystem;
use crate::hiprec::{self, Fixed};

/// Bits used by the high tier, in escalation order.
pub const HIGH_LADDER: [u32; 2] = [256, 1024];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precision {
    /// f64 intervals only.
    Double,
    /// f64 first, then the big-integer ladder.
    #[default]
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Less,
    Equal,
    Greater,
    Indeterminate,
}

impl Cmp {
    pub fn from_ordering(o: Ordering) -> Cmp {
        match o {
            Ordering::Less => Cmp::Less,
            Ordering::Equal => Cmp::Equal,
            Ordering::Greater => Cmp::Greater,
        }
    }

    pub fn reverse(self) -> Cmp {
        match self {
            Cmp::Less => Cmp::Greater,
            Cmp::Greater => Cmp::Less,
            c => c,
        }
    }

    pub fn is_le(self) -> Truth {
        match self {
            Cmp::Less | Cmp::Equal => Truth::True,
            Cmp::Greater => Truth::False,
            Cmp::Indeterminate => Truth::Indeterminate,
        }
    }

    pub fn is_lt(self) -> Truth {
        match self {
            Cmp::Less => Truth::True,
            Cmp::Equal | Cmp::Greater => Truth::False,
            Cmp::Indeterminate => Truth::Indeterminate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Indeterminate,
}

impl Truth {
    pub fn from_bool(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    /// Kleene conjunction: any false wins, otherwise any unknown wins.
    pub fn and(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Indeterminate,
        }
    }

    pub fn is_true(self) -> bool {
        self == Truth::True
    }
}

/// A closed f64 interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    x.next_down()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

// Directed-rounding operations; not the std operator traits.
#[allow(clippy::should_implement_trait)]
impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi, "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn add(self, o: Interval) -> Interval {
        if self.is_point() && o.is_point() && o.lo == 0.0 {
            return self;
        }
        Interval { lo: down(self.lo + o.lo), hi: up(self.hi + o.hi) }
    }

    pub fn sub(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo - o.hi), hi: up(self.hi - o.lo) }
    }

    /// Product of two non-negative intervals.
    pub fn mul(self, o: Interval) -> Interval {
        debug_assert!(self.lo >= 0.0 && o.lo >= 0.0);
        if o.is_point() && o.lo == 1.0 {
            return self;
        }
        if self.is_point() && self.lo == 1.0 {
            return o;
        }
        if self.is_point() && o.is_point() {
            let prod = self.lo * o.lo;
            if self.lo.mul_add(o.lo, -prod) == 0.0 {
                return Interval::point(prod);
            }
        }
        Interval { lo: down(self.lo * o.lo).max(0.0), hi: up(self.hi * o.hi) }
    }

    /// Quotient of a non-negative interval by a positive one.
    pub fn div(self, o: Interval) -> Interval {
        debug_assert!(self.lo >= 0.0 && o.lo > 0.0);
        if o.is_point() && o.lo == 1.0 {
            return self;
        }
        if self.is_point() && o.is_point() {
            let quot = self.lo / o.lo;
            if quot.mul_add(o.lo, -self.lo) == 0.0 {
                return Interval::point(quot);
            }
        }
        Interval { lo: down(self.lo / o.hi).max(0.0), hi: up(self.hi / o.lo) }
    }

    pub fn mul_f64(self, c: f64) -> Interval {
        self.mul(Interval::point(c))
    }

    /// `base^e` for a base known to be at least 1 and `e > 0`, assuming
    /// `powf` is within one ulp. A lower endpoint rounded below 1 is clamped.
    pub fn pow_ge1(self, e: Interval) -> Interval {
        debug_assert!(self.hi >= 1.0 && e.lo > 0.0);
        if self.hi == 1.0 {
            return Interval::point(1.0);
        }
        let lo = self.lo.max(1.0).powf(e.lo);
        let hi = self.hi.powf(e.hi);
        Interval { lo: down(down(lo)).max(1.0), hi: up(up(hi)) }
    }

    /// Interval order: strict when disjoint, equal only for identical points.
    pub fn cmp(&self, o: &Interval) -> Cmp {
        if self.hi < o.lo {
            Cmp::Less
        } else if self.lo > o.hi {
            Cmp::Greater
        } else if self.is_point() && o.is_point() && self.lo == o.lo {
            Cmp::Equal
        } else {
            Cmp::Indeterminate
        }
    }
}

/// A floating approximation with a rigorous absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedValue {
    pub value: f64,
    pub abs_error: f64,
}

impl CertifiedValue {
    pub fn exact(value: f64) -> CertifiedValue {
        CertifiedValue { value, abs_error: 0.0 }
    }

    pub fn new(value: f64, abs_error: f64) -> CertifiedValue {
        debug_assert!(abs_error >= 0.0 && abs_error.is_finite());
        CertifiedValue { value, abs_error }
    }

    pub fn from_interval(iv: Interval) -> CertifiedValue {
        if iv.is_point() {
            return CertifiedValue::exact(iv.lo);
        }
        let mid = iv.lo + (iv.hi - iv.lo) / 2.0;
        let err = up(iv.hi - mid).max(up(mid - iv.lo));
        CertifiedValue { value: mid, abs_error: err }
    }

    pub fn interval(&self) -> Interval {
        if self.abs_error == 0.0 {
            return Interval::point(self.value);
        }
        Interval { lo: down(self.value - self.abs_error), hi: up(self.value + self.abs_error) }
    }

    pub fn lo(&self) -> f64 {
        self.interval().lo
    }

    pub fn hi(&self) -> f64 {
        self.interval().hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval().contains(x)
    }
}

pub(crate) fn big(n: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, n.clone())
}

pub(crate) fn int_pow(b: u32, e: u32) -> BigUint {
    BigUint::from(b).pow(e)
}

/// Exact rational value of a finite f64.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Directed f64 bounds of a non-negative rational.
pub fn rational_interval(q: &BigRational) -> Interval {
    debug_assert!(!q.is_negative());
    let (n, d) = (q.numer().magnitude(), q.denom().magnitude());
    let lo = hiprec::ratio_to_f64(n, d, false);
    let hi = hiprec::ratio_to_f64(n, d, true);
    Interval { lo, hi }
}

/// Nearest-ish f64 with an enclosure-derived error bound.
pub fn rational_certified(q: &BigRational) -> CertifiedValue {
    let iv = rational_interval(q);
    if iv.is_point() {
        return CertifiedValue::exact(iv.lo);
    }
    CertifiedValue::from_interval(iv)
}

/// `coeff · base^α` with `coeff >= 0` and `base > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerTerm {
    coeff: BigRational,
    base: BigRational,
}

/// Normal form `A · B^α` with `B ∈ [1, s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub a: BigRational,
    pub b: BigRational,
}

impl PowerTerm {
    pub fn new(coeff: BigRational, base: BigRational) -> PowerTerm {
        assert!(!coeff.is_negative(), "coefficient must be non-negative");
        assert!(base.is_positive(), "base must be positive");
        PowerTerm { coeff, base }
    }

    pub fn rational(q: BigRational) -> PowerTerm {
        PowerTerm::new(q, BigRational::one())
    }

    /// `num / den^α`, the shape of `b_n` and of `λ` at a point.
    pub fn over_power(num: BigRational, den: BigRational) -> PowerTerm {
        PowerTerm::new(num, den.recip())
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn base(&self) -> &BigRational {
        &self.base
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// Rewrites `coeff·base^α` as `A·B^α`, `B ∈ [1, s)`, using `s^α = p`.
    pub fn normalize(&self, sys: &CantorSystem) -> Normalized {
        let (s, p) = (sys.s(), sys.p());
        let bits = self.base.numer().bits() as i64 - self.base.denom().bits() as i64;
        let mut t: i64 = -((bits as f64) / (s as f64).log2()).floor() as i64;
        let scale = |t: i64| -> BigRational {
            let m = BigRational::from_integer(big(&int_pow(s, t.unsigned_abs() as u32)));
            if t >= 0 {
                m
            } else {
                m.recip()
            }
        };
        let mut b = &self.base * scale(t);
        let one = BigRational::one();
        let s_r = BigRational::from_integer(BigInt::from(s));
        while b < one {
            b *= &s_r;
            t += 1;
        }
        while b >= s_r {
            b /= &s_r;
            t -= 1;
        }
        let pt = BigRational::from_integer(big(&int_pow(p, t.unsigned_abs() as u32)));
        let a = if t >= 0 { &self.coeff / pt } else { &self.coeff * pt };
        Normalized { a, b }
    }

    /// Outward-rounded f64 enclosure.
    pub fn enclose_double(&self, sys: &CantorSystem) -> Interval {
        if self.is_zero() {
            return Interval::point(0.0);
        }
        let nf = self.normalize(sys);
        let (alo, ahi) = sys.alpha_bounds();
        let bpow = rational_interval(&nf.b).pow_ge1(Interval::new(alo, ahi));
        rational_interval(&nf.a).mul(bpow)
    }

    /// Enclosure of `ln(value)` at `prec` fractional bits.
    pub fn ln_enclosure(&self, sys: &CantorSystem, prec: u32) -> Fixed {
        let nf = self.normalize(sys);
        ln_normalized(sys, &nf, prec)
    }

    /// Enclosure from the big-integer tier at `prec` bits.
    pub fn enclose_high(&self, sys: &CantorSystem, prec: u32) -> Interval {
        if self.is_zero() {
            return Interval::point(0.0);
        }
        let nf = self.normalize(sys);
        if nf.b.is_one() {
            return rational_interval(&nf.a);
        }
        let (lo, hi) = hiprec::exp_bounds(&ln_normalized(sys, &nf, prec));
        Interval { lo: hiprec::bin_to_f64(&lo, false), hi: hiprec::bin_to_f64(&hi, true) }
    }

    /// Certified value whose error is at most `rel · value`, escalating
    /// from f64 to the ladder. The last tier is returned if none meets `rel`.
    pub fn certify(&self, sys: &CantorSystem, rel: f64, precision: Precision) -> CertifiedValue {
        let cv = CertifiedValue::from_interval(self.enclose_double(sys));
        if cv.abs_error <= rel * cv.value.abs() || precision == Precision::Double {
            return cv;
        }
        let mut last = cv;
        for &w in &[128, HIGH_LADDER[0]] {
            last = CertifiedValue::from_interval(self.enclose_high(sys, w));
            if last.abs_error <= rel * last.value.abs() {
                break;
            }
        }
        last
    }
}

fn ln_normalized(sys: &CantorSystem, nf: &Normalized, prec: u32) -> Fixed {
    let mag = |q: &BigRational| (q.numer().magnitude().clone(), q.denom().magnitude().clone());
    let (an, ad) = mag(&nf.a);
    let (bn, bd) = mag(&nf.b);
    let ln_a = hiprec::ln_ratio(&an, &ad, prec);
    if nf.b.is_one() {
        return ln_a;
    }
    let ln_b = hiprec::ln_ratio(&bn, &bd, prec);
    ln_a.add(&ln_b.mul(&alpha_fixed(sys, prec)))
}

fn alpha_fixed(sys: &CantorSystem, prec: u32) -> Fixed {
    let lp = hiprec::ln_biguint(&BigUint::from(sys.p()), prec);
    let ls = hiprec::ln_biguint(&BigUint::from(sys.s()), prec);
    lp.div(&ls).expect("ln s > 0")
}

fn exact_cmp(sys: &CantorSystem, x: &Normalized, y: &Normalized) -> Option<Cmp> {
    if x.b == y.b {
        return Some(Cmp::from_ordering(x.a.cmp(&y.a)));
    }
    if let Some((u, v)) = sys.alpha_ratio() {
        // value^v = A^v · B^u when α = u/v
        let lhs = num_traits::pow(x.a.clone(), v as usize) * num_traits::pow(x.b.clone(), u as usize);
        let rhs = num_traits::pow(y.a.clone(), v as usize) * num_traits::pow(y.b.clone(), u as usize);
        return Some(Cmp::from_ordering(lhs.cmp(&rhs)));
    }
    None
}

/// Certified comparison of two power terms.
pub fn compare(sys: &CantorSystem, x: &PowerTerm, y: &PowerTerm, precision: Precision) -> Cmp {
    match (x.is_zero(), y.is_zero()) {
        (true, true) => return Cmp::Equal,
        (true, false) => return Cmp::Less,
        (false, true) => return Cmp::Greater,
        _ => {}
    }
    let (nx, ny) = (x.normalize(sys), y.normalize(sys));
    if let Some(c) = exact_cmp(sys, &nx, &ny) {
        return c;
    }
    let (alo, ahi) = sys.alpha_bounds();
    let alpha = Interval::new(alo, ahi);
    let ix = rational_interval(&nx.a).mul(rational_interval(&nx.b).pow_ge1(alpha));
    let iy = rational_interval(&ny.a).mul(rational_interval(&ny.b).pow_ge1(alpha));
    let c = ix.cmp(&iy);
    if c != Cmp::Indeterminate || precision == Precision::Double {
        return c;
    }
    for &w in &HIGH_LADDER {
        let d = ln_normalized(sys, &nx, w).sub(&ln_normalized(sys, &ny, w));
        if let Some(o) = d.sign() {
            if o != Ordering::Equal {
                return Cmp::from_ordering(o);
            }
        }
    }
    Cmp::Indeterminate
}

/// Certified comparison of a power term with an f64 threshold.
pub fn compare_f64(sys: &CantorSystem, x: &PowerTerm, gamma: f64, precision: Precision) -> Cmp {
    if gamma.is_nan() {
        return Cmp::Indeterminate;
    }
    if gamma == f64::INFINITY {
        return Cmp::Less;
    }
    if gamma < 0.0 {
        return Cmp::Greater;
    }
    let g = rational_from_f64(gamma).expect("finite threshold");
    compare(sys, x, &PowerTerm::rational(g), precision)
}

/// Fast-path verdict for an enclosure against `gamma`, escalating to `slow`
/// only when the f64 interval straddles the threshold.
pub fn compare_interval_or(iv: Interval, gamma: f64, slow: impl FnOnce() -> Cmp) -> Cmp {
    match iv.cmp(&Interval::point(gamma)) {
        Cmp::Indeterminate | Cmp::Equal => slow(),
        c => c,
    }
}

/// f64 bounds of `num/den` for u128 operands.
pub fn u128_ratio_interval(num: u128, den: u128) -> Interval {
    let n = Interval::new(hiprec::u128_to_f64_down(num), hiprec::u128_to_f64_up(num));
    let d = Interval::new(hiprec::u128_to_f64_down(den), hiprec::u128_to_f64_up(den));
    if d.is_point() && d.lo == 1.0 {
        return n;
    }
    n.div(d)
}

pub(crate) fn to_f64_lossy(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(s: &str) -> CantorSystem {
        s.parse().unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn normalization_puts_base_in_range() {
        let s = sys("p=3;A=0,2");
        let t = PowerTerm::over_power(q(26, 1), q(7, 1));
        let nf = t.normalize(&s);
        // 26/7^α = (26/27)·(8/7)^α
        assert_eq!(nf.a, q(26, 27));
        assert_eq!(nf.b, q(8, 7));
        let big = PowerTerm::over_power(q(1, 1), q(1 << 40, 3));
        let nf = big.normalize(&s);
        assert!(nf.b >= q(1, 1) && nf.b < q(2, 1));
    }

    #[test]
    fn tiers_agree_on_b7() {
        let s = sys("p=3;A=0,2");
        let t = PowerTerm::over_power(q(26, 1), q(7, 1));
        let truth = 26.0 / 7f64.powf(3f64.log2());
        let d = t.enclose_double(&s);
        let h = t.enclose_high(&s, 256);
        assert!(d.contains(truth) || (d.lo - truth).abs() < 1e-15);
        assert!(h.width() <= d.width());
        assert!(h.lo <= d.hi && d.lo <= h.hi);
        let cv = t.certify(&s, 2f64.powi(-50), Precision::High);
        assert!(cv.abs_error <= 2f64.powi(-50) * cv.value);
        assert!((cv.value - 1.189_938_853_269_491_4).abs() < 1e-15);
    }

    #[test]
    fn exact_paths() {
        let s = sys("p=3;A=0,2");
        // b_2 = 6/2^α = 2 exactly
        let b2 = PowerTerm::over_power(q(6, 1), q(2, 1));
        assert_eq!(compare_f64(&s, &b2, 2.0, Precision::Double), Cmp::Equal);
        assert_eq!(b2.enclose_double(&s), Interval::point(2.0));
        // rational α: p=4, s=2, α=2
        let r = sys("p=4;A=0,2");
        let x = PowerTerm::over_power(q(9, 1), q(3, 2));
        assert_eq!(compare_f64(&r, &x, 4.0, Precision::Double), Cmp::Equal);
    }

    #[test]
    fn ladder_resolves_near_ties() {
        let s = sys("p=3;A=0,2");
        let t = PowerTerm::over_power(q(26, 1), q(7, 1));
        let v = t.certify(&s, 1e-17, Precision::High);
        let c = compare_f64(&s, &t, v.value.next_up().next_up(), Precision::High);
        assert_eq!(c, Cmp::Less);
        let c = compare_f64(&s, &t, v.value.next_down().next_down(), Precision::High);
        assert_eq!(c, Cmp::Greater);
    }

    #[test]
    fn zero_and_sign_cases() {
        let s = sys("p=3;A=0,2");
        let z = PowerTerm::rational(q(0, 1));
        let one = PowerTerm::rational(q(1, 1));
        assert_eq!(compare(&s, &z, &one, Precision::Double), Cmp::Less);
        assert_eq!(compare_f64(&s, &one, -1.0, Precision::Double), Cmp::Greater);
        assert_eq!(compare_f64(&s, &one, f64::INFINITY, Precision::Double), Cmp::Less);
    }

    #[test]
    fn truth_logic() {
        assert_eq!(Truth::True.and(Truth::Indeterminate), Truth::Indeterminate);
        assert_eq!(Truth::Indeterminate.and(Truth::False), Truth::False);
        assert_eq!(Cmp::Equal.is_le(), Truth::True);
        assert_eq!(Cmp::Equal.is_lt(), Truth::False);
    }
}
