//! Fixed-point interval arithmetic over big integers.
//!
//! A [`Fixed`] holds two integers `lo <= hi` read as `lo·2^-prec` and
//! `hi·2^-prec`. Lower endpoints round toward -inf, upper endpoints toward
//! +inf, and the series kernels widen by their own truncation bounds, so the
//! true value is always enclosed.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixed {
    lo: BigInt,
    hi: BigInt,
    prec: u32,
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(b.is_positive());
    -((-a).div_floor(b))
}

impl Fixed {
    pub fn exact_int(v: &BigInt, prec: u32) -> Self {
        let x = v << prec;
        Fixed { lo: x.clone(), hi: x, prec }
    }

    pub fn from_bounds(lo: BigInt, hi: BigInt, prec: u32) -> Self {
        debug_assert!(lo <= hi);
        Fixed { lo, hi, prec }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn lo(&self) -> &BigInt {
        &self.lo
    }

    pub fn hi(&self) -> &BigInt {
        &self.hi
    }

    /// Width of the enclosure in units of `2^-prec`.
    pub fn width(&self) -> BigInt {
        &self.hi - &self.lo
    }

    /// `Some(Greater)` when the whole interval is positive, `Some(Less)` when
    /// it is negative, `Some(Equal)` for the exact zero, `None` otherwise.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn add(&self, o: &Fixed) -> Fixed {
        debug_assert_eq!(self.prec, o.prec);
        Fixed { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, prec: self.prec }
    }

    pub fn sub(&self, o: &Fixed) -> Fixed {
        debug_assert_eq!(self.prec, o.prec);
        Fixed { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo, prec: self.prec }
    }

    pub fn neg(&self) -> Fixed {
        Fixed { lo: -&self.hi, hi: -&self.lo, prec: self.prec }
    }

    pub fn mul_int(&self, k: &BigInt) -> Fixed {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Fixed { lo: a, hi: b, prec: self.prec }
        } else {
            Fixed { lo: b, hi: a, prec: self.prec }
        }
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        debug_assert_eq!(self.prec, o.prec);
        let products = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let min = products.iter().min().unwrap();
        let max = products.iter().max().unwrap();
        let scale = pow2(self.prec);
        Fixed { lo: min.div_floor(&scale), hi: ceil_div(max, &scale), prec: self.prec }
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, o: &Fixed) -> Option<Fixed> {
        debug_assert_eq!(self.prec, o.prec);
        if !o.lo.is_positive() && !o.hi.is_negative() {
            return None;
        }
        let (lo_n, hi_n) = (&self.lo << self.prec, &self.hi << self.prec);
        let mut lows = Vec::with_capacity(4);
        let mut highs = Vec::with_capacity(4);
        for n in [&lo_n, &hi_n] {
            for d in [&o.lo, &o.hi] {
                // floor/ceil for a positive divisor; flip signs otherwise
                let (n, d) = if d.is_negative() { (-n, -d) } else { (n.clone(), d.clone()) };
                lows.push(n.div_floor(&d));
                highs.push(ceil_div(&n, &d));
            }
        }
        Some(Fixed {
            lo: lows.into_iter().min().unwrap(),
            hi: highs.into_iter().max().unwrap(),
            prec: self.prec,
        })
    }
}

/// Natural log of a mantissa `m·2^-w` with `m ∈ [2^w, 2^(w+1)]`, through
/// `ln m = 2·atanh((m-1)/(m+1))`. Returns the truncated sum and a bound on its
/// error in units of `2^-w`.
fn ln_mantissa(m: &BigInt, w: u32) -> (BigInt, BigInt) {
    let one = pow2(w);
    let z = ((m - &one) << w).div_floor(&(m + &one));
    let z2 = (&z * &z) >> w;
    let mut term = z;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !term.is_zero() {
        sum += &term / BigInt::from(2 * k + 1);
        term = (&term * &z2) >> w;
        k += 1;
    }
    // z <= 1/3: each term carries at most 4 ulps of accumulated truncation,
    // and the dropped tail is below 4 ulps times 9/8.
    (sum << 1u32, BigInt::from(8 * k + 16))
}

thread_local! {
    static LN2_CACHE: RefCell<HashMap<u32, Fixed>> = RefCell::new(HashMap::new());
}

/// Enclosure of `ln 2` at `prec` fractional bits.
pub fn ln2(prec: u32) -> Fixed {
    if let Some(hit) = LN2_CACHE.with(|c| c.borrow().get(&prec).cloned()) {
        return hit;
    }
    let (v, e) = ln_mantissa(&pow2(prec + 1), prec);
    let out = Fixed { lo: &v - &e, hi: &v + &e, prec };
    LN2_CACHE.with(|c| c.borrow_mut().insert(prec, out.clone()));
    out
}

/// Enclosure of `ln u` for a positive integer `u`.
pub fn ln_biguint(u: &BigUint, prec: u32) -> Fixed {
    assert!(!u.is_zero(), "ln of zero");
    let e = u.bits() - 1;
    let ui = BigInt::from_biguint(Sign::Plus, u.clone());
    let (m_lo, m_hi) = if e <= prec as u64 {
        let m = ui << (prec as u64 - e);
        (m.clone(), m)
    } else {
        let shift = e - prec as u64;
        let m = &ui >> shift;
        let exact = (&m << shift) == ui;
        let hi = if exact { m.clone() } else { &m + 1 };
        (m, hi)
    };
    let (v_lo, e_lo) = ln_mantissa(&m_lo, prec);
    let (v_hi, e_hi) = if m_hi == m_lo { (v_lo.clone(), e_lo.clone()) } else { ln_mantissa(&m_hi, prec) };
    let l2 = ln2(prec);
    let e = BigInt::from(e);
    Fixed {
        lo: &l2.lo * &e + v_lo - e_lo,
        hi: &l2.hi * &e + v_hi + e_hi,
        prec,
    }
}

/// Enclosure of `ln(num/den)`.
pub fn ln_ratio(num: &BigUint, den: &BigUint, prec: u32) -> Fixed {
    ln_biguint(num, prec).sub(&ln_biguint(den, prec))
}

/// A positive binary float `mant · 2^exp2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinFloat {
    pub mant: BigUint,
    pub exp2: i64,
}

fn exp_directed(t: &BigInt, w: u32, up: bool) -> BinFloat {
    let l2 = ln2(w);
    let k = t.div_floor(&l2.lo);
    let (r_low, r_high) = if k.is_negative() {
        (t - &k * &l2.lo, t - &k * &l2.hi)
    } else {
        (t - &k * &l2.hi, t - &k * &l2.lo)
    };
    let r = if up { r_high } else { r_low };
    let one = pow2(w);
    let mut sum = one.clone();
    let mut term = one;
    let mut n: u64 = 1;
    loop {
        term = (&term * &r) / (BigInt::from(n) << w);
        if term.is_zero() {
            break;
        }
        sum += &term;
        n += 1;
    }
    // |r| < 0.7 keeps the propagated truncation below 4 ulps per term
    let err = BigInt::from(4 * n + 12);
    let mant = if up { sum + err } else { sum - err };
    BinFloat {
        mant: mant.to_biguint().expect("exp mantissa is positive"),
        exp2: k.to_i64().expect("exp argument out of range") - w as i64,
    }
}

/// Lower and upper binary-float bounds of `exp(t)` over the interval `t`.
pub fn exp_bounds(t: &Fixed) -> (BinFloat, BinFloat) {
    (exp_directed(&t.lo, t.prec, false), exp_directed(&t.hi, t.prec, true))
}

/// `2^e` as an exact f64 multiplier, clamped to the normal range.
fn scale_by_pow2(x: f64, mut e: i64) -> f64 {
    let mut x = x;
    while e > 1000 {
        x *= f64::from_bits(((1000 + 1023) as u64) << 52);
        e -= 1000;
    }
    while e < -1000 {
        x *= f64::from_bits(((-1000 + 1023) as u64) << 52);
        e += 1000;
    }
    x * f64::from_bits(((e + 1023) as u64) << 52)
}

pub(crate) fn u128_to_f64_down(x: u128) -> f64 {
    let f = x as f64;
    if f >= 2f64.powi(127) * 2.0 || (f as u128) > x {
        f.next_down()
    } else {
        f
    }
}

pub(crate) fn u128_to_f64_up(x: u128) -> f64 {
    let f = x as f64;
    if f < 2f64.powi(127) * 2.0 && (f as u128) < x {
        f.next_up()
    } else {
        f
    }
}

/// Rounds `mant · 2^exp2` down (or up) to an f64.
pub fn bin_to_f64(v: &BinFloat, up: bool) -> f64 {
    if v.mant.is_zero() {
        return if up { f64::MIN_POSITIVE } else { 0.0 };
    }
    let bits = v.mant.bits();
    let (q, exact, shift) = if bits > 64 {
        let shift = bits - 64;
        let q = &v.mant >> shift;
        let exact = (&q << shift) == v.mant;
        (q.to_u128().unwrap(), exact, shift as i64)
    } else {
        (v.mant.to_u128().unwrap(), true, 0)
    };
    let e = v.exp2 + shift;
    let r = if up {
        let q = if exact { q } else { q + 1 };
        scale_by_pow2(u128_to_f64_up(q), e)
    } else {
        scale_by_pow2(u128_to_f64_down(q), e)
    };
    if up {
        if r == 0.0 || !r.is_normal() && r.is_finite() {
            f64::MIN_POSITIVE
        } else {
            r
        }
    } else if !r.is_normal() {
        if r.is_infinite() {
            f64::MAX
        } else {
            0.0
        }
    } else {
        r
    }
}

/// Directed f64 bounds for a positive rational `num/den`.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint, up: bool) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let e = num.bits() as i64 - den.bits() as i64;
    let sh = 66 - e;
    let (q, r_zero) = if sh >= 0 {
        let n = num << sh as u64;
        let (q, r) = n.div_rem(den);
        (q, r.is_zero())
    } else {
        let d = den << (-sh) as u64;
        let (q, r) = num.div_rem(&d);
        (q, r.is_zero())
    };
    let mant = if up && !r_zero { q + 1u32 } else { q };
    bin_to_f64(&BinFloat { mant, exp2: -sh }, up)
}

/// Directed f64 bound of a fixed-point endpoint.
pub fn fixed_endpoint_to_f64(x: &BigInt, prec: u32, up: bool) -> f64 {
    let neg = x.is_negative();
    let mag = BinFloat { mant: x.magnitude().clone(), exp2: -(prec as i64) };
    if mag.mant.is_zero() {
        return 0.0;
    }
    // rounding the magnitude the opposite way flips the direction for negatives
    let r = bin_to_f64(&mag, up != neg);
    if neg {
        -r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enclose(f: &Fixed, truth: f64, tol: f64) {
        let lo = fixed_endpoint_to_f64(f.lo(), f.prec(), false);
        let hi = fixed_endpoint_to_f64(f.hi(), f.prec(), true);
        assert!(lo <= truth + tol && truth - tol <= hi, "{lo} {hi} vs {truth}");
        assert!(hi - lo < 1e-15, "too wide: {lo} {hi}");
    }

    #[test]
    fn ln_of_small_integers() {
        for n in 1u32..40 {
            let f = ln_biguint(&BigUint::from(n), 128);
            enclose(&f, (n as f64).ln(), 4e-16 * (n as f64).ln().max(1.0));
        }
    }

    #[test]
    fn ln2_matches_known_digits() {
        let f = ln2(200);
        // ln 2 = 0.69314718055994530941723212145817656807550013436025...
        let digits = BigInt::parse_bytes(b"69314718055994530941723212145817656807550013436025", 10).unwrap();
        let scale = BigInt::from(10u32).pow(50);
        let lo = (f.lo() * &scale) >> 200u32;
        let hi = ((f.hi() * &scale) >> 200u32) + 1;
        assert!(lo <= digits && digits <= hi);
        assert!(f.width() < pow2(20));
    }

    #[test]
    fn exp_inverts_ln() {
        for n in [2u32, 3, 7, 1000, 123_456] {
            let l = ln_biguint(&BigUint::from(n), 160);
            let (lo, hi) = exp_bounds(&l);
            let lo = bin_to_f64(&lo, false);
            let hi = bin_to_f64(&hi, true);
            assert!(lo <= n as f64 && n as f64 <= hi, "{n}: [{lo}, {hi}]");
            assert!((hi - lo) / (n as f64) < 1e-15);
        }
    }

    #[test]
    fn exp_of_negative_argument() {
        let prec = 128;
        let t = ln_biguint(&BigUint::from(3u32), prec).neg();
        let (lo, hi) = exp_bounds(&t);
        let (lo, hi) = (bin_to_f64(&lo, false), bin_to_f64(&hi, true));
        assert!(lo <= 1.0 / 3.0 && 1.0 / 3.0 <= hi);
    }

    #[test]
    fn ratio_bounds_are_adjacent_and_enclosing() {
        let (n, d) = (BigUint::from(2u32), BigUint::from(3u32));
        let lo = ratio_to_f64(&n, &d, false);
        let hi = ratio_to_f64(&n, &d, true);
        assert!(lo < hi && lo.next_up() == hi);
        assert!(lo <= 2.0 / 3.0 && 2.0 / 3.0 <= hi);
        let exact = ratio_to_f64(&BigUint::from(3u32), &BigUint::from(4u32), true);
        assert_eq!(exact, 0.75);
        assert_eq!(ratio_to_f64(&BigUint::from(3u32), &BigUint::from(4u32), false), 0.75);
    }

    #[test]
    fn interval_ops_enclose() {
        let prec = 96;
        let a = ln_biguint(&BigUint::from(5u32), prec);
        let b = ln_biguint(&BigUint::from(3u32), prec);
        let q = a.div(&b).unwrap();
        enclose(&q, 5f64.ln() / 3f64.ln(), 5e-16);
        let p = a.mul(&b);
        enclose(&p, 5f64.ln() * 3f64.ln(), 1e-15);
        assert_eq!(a.sub(&a).sign(), None);
        assert_eq!(a.sub(&b).sign(), Some(Ordering::Greater));
    }
}
