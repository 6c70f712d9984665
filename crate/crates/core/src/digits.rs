//! Radix machinery: digit expansions, the digit map `h`, and Cantor integers.
//!
//! A Cantor system is a radix `p` together with an allowed digit set `A`
//! of size `s`. The map `h` sends `i ∈ {0..s-1}` to the `i`-th element of `A`,
//! and the `n`-th term `a_n` rewrites the base-`s` digits of `n` through `h`
//! and reads the result in base `p`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::hiprec;

pub type BigNat = BigUint;

/// Largest supported radix; digits are stored as bytes.
pub const MAX_RADIX: u32 = 256;

#[derive(Clone, Debug)]
pub struct CantorSystem {
    p: u32,
    digits: Vec<u32>,
    /// `index_of[d] = Some(i)` when `h(i) = d`.
    index_of: Vec<Option<u32>>,
    alpha: f64,
    alpha_lo: f64,
    alpha_hi: f64,
    alpha_ratio: Option<(u32, u32)>,
}

impl PartialEq for CantorSystem {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.digits == other.digits
    }
}

impl Eq for CantorSystem {}

/// Smallest `b` with `n = b^e`, returned as `(b, e)`.
fn perfect_power_root(n: u32) -> (u32, u32) {
    for e in (2..=32u32).rev() {
        let guess = (n as f64).powf(1.0 / e as f64).round() as u64;
        for b in guess.saturating_sub(1).max(2)..=guess + 1 {
            if b.checked_pow(e) == Some(n as u64) {
                return (b as u32, e);
            }
        }
    }
    (n, 1)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl CantorSystem {
    pub fn new(p: u32, digits: Vec<u32>) -> Result<Self> {
        if p < 3 {
            return Err(Error::InvalidSystem(format!("radix p = {p} must be at least 3")));
        }
        if p > MAX_RADIX {
            return Err(Error::InvalidSystem(format!("radix p = {p} exceeds {MAX_RADIX}")));
        }
        if digits.len() < 2 {
            return Err(Error::InvalidSystem("digit set needs at least two digits".into()));
        }
        if digits.len() >= p as usize {
            return Err(Error::InvalidSystem(format!(
                "digit set must be a proper subset of 0..{}",
                p - 1
            )));
        }
        for w in digits.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidSystem("digits must be strictly increasing".into()));
            }
        }
        if let Some(&d) = digits.iter().find(|&&d| d >= p) {
            return Err(Error::InvalidSystem(format!("digit {d} must be at most p-1 = {}", p - 1)));
        }
        let s = digits.len() as u32;
        let mut index_of = vec![None; p as usize];
        for (i, &d) in digits.iter().enumerate() {
            index_of[d as usize] = Some(i as u32);
        }

        let prec = 160;
        let lp = hiprec::ln_biguint(&BigUint::from(p), prec);
        let ls = hiprec::ln_biguint(&BigUint::from(s), prec);
        let a = lp.div(&ls).expect("ln s > 0");
        let alpha_lo = hiprec::fixed_endpoint_to_f64(a.lo(), prec, false);
        let alpha_hi = hiprec::fixed_endpoint_to_f64(a.hi(), prec, true);

        let (bp, ep) = perfect_power_root(p);
        let (bs, es) = perfect_power_root(s);
        let alpha_ratio = if bp == bs {
            let g = gcd(ep, es);
            Some((ep / g, es / g))
        } else {
            None
        };

        Ok(CantorSystem {
            p,
            digits,
            index_of,
            alpha: (p as f64).ln() / (s as f64).ln(),
            alpha_lo,
            alpha_hi,
            alpha_ratio,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn s(&self) -> u32 {
        self.digits.len() as u32
    }

    /// The digit set `A`, ascending.
    pub fn digit_set(&self) -> &[u32] {
        &self.digits
    }

    /// The digit map `h(i) = A[i]`.
    pub fn h(&self, i: u32) -> u32 {
        self.digits[i as usize]
    }

    /// `h⁻¹(d)` when `d ∈ A`.
    pub fn h_inv(&self, d: u32) -> Option<u32> {
        self.index_of.get(d as usize).copied().flatten()
    }

    pub fn contains_digit(&self, d: u32) -> bool {
        self.h_inv(d).is_some()
    }

    /// `log_s p`, rounded to nearest.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Directed f64 bounds enclosing `log_s p`.
    pub fn alpha_bounds(&self) -> (f64, f64) {
        (self.alpha_lo, self.alpha_hi)
    }

    /// `Some((u, v))` when `log_s p = u/v` exactly, i.e. `p^v = s^u`.
    pub fn alpha_ratio(&self) -> Option<(u32, u32)> {
        self.alpha_ratio
    }

    /// `a_n` for machine-word `n`, when `p^(digits of n)` fits in 128 bits.
    pub fn a_u128(&self, n: u64) -> Option<u128> {
        let (s, p) = (self.s() as u64, self.p as u128);
        let mut digits = [0u8; 64];
        let mut len = 0;
        let mut m = n;
        while m > 0 {
            digits[len] = (m % s) as u8;
            m /= s;
            len += 1;
        }
        p.checked_pow(len as u32)?;
        let mut a: u128 = 0;
        for &d in digits[..len].iter().rev() {
            a = a * p + self.h(d as u32) as u128;
        }
        Some(a)
    }
}

impl fmt::Display for CantorSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={};A=", self.p)?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for CantorSystem {
    type Err = Error;

    /// Parses `p=<int>;A=<d0>,<d1>,...`, ignoring whitespace.
    fn from_str(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = None;
        let mut a = None;
        for part in compact.split(';').filter(|s| !s.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            match key {
                "p" => {
                    p = Some(value.parse::<u32>().map_err(|e| Error::Parse(format!("p: {e}")))?)
                }
                "A" => {
                    let ds = value
                        .split(',')
                        .map(|d| d.parse::<u32>().map_err(|e| Error::Parse(format!("A: {d:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    a = Some(ds);
                }
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        match (p, a) {
            (Some(p), Some(a)) => CantorSystem::new(p, a),
            _ => Err(Error::Parse("a system needs both p= and A=".into())),
        }
    }
}

/// A most-significant-first digit expansion with no leading zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitString {
    base: u32,
    digits: Vec<u8>,
}

fn check_base(base: u32) -> Result<()> {
    if !(2..=MAX_RADIX).contains(&base) {
        return Err(Error::arg(format!("base {base} outside 2..={MAX_RADIX}")));
    }
    Ok(())
}

impl DigitString {
    /// Validates digits against `base` and strips leading zeros.
    pub fn new(base: u32, digits: Vec<u8>) -> Result<Self> {
        check_base(base)?;
        if let Some(&d) = digits.iter().find(|&&d| d as u32 >= base) {
            return Err(Error::arg(format!("digit {d} is not below base {base}")));
        }
        let start = digits.iter().position(|&d| d != 0).unwrap_or(digits.len());
        Ok(DigitString { base, digits: digits[start..].to_vec() })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

pub fn to_digits(n: &BigNat, base: u32) -> Result<DigitString> {
    check_base(base)?;
    if n.is_zero() {
        return Ok(DigitString { base, digits: Vec::new() });
    }
    Ok(DigitString { base, digits: n.to_radix_be(base) })
}

pub fn from_digits(d: &DigitString) -> Result<BigNat> {
    if d.digits.is_empty() {
        return Ok(BigNat::zero());
    }
    BigNat::from_radix_be(&d.digits, d.base)
        .ok_or_else(|| Error::arg(format!("digit out of range for base {}", d.base)))
}

/// `a_n = [h(ε_k) ⋯ h(ε_0)]_p` for `n = [ε_k ⋯ ε_0]_s`, `n ≥ 1`.
pub fn cantor_integer(sys: &CantorSystem, n: &BigNat) -> Result<BigNat> {
    if n.is_zero() {
        return Err(Error::arg("Cantor integers are indexed from n = 1"));
    }
    let mapped: Vec<u8> = n.to_radix_be(sys.s()).into_iter().map(|d| sys.h(d as u32) as u8).collect();
    Ok(BigNat::from_radix_be(&mapped, sys.p()).expect("h(i) < p"))
}

/// The opt-in zeroth term `a_0 = h(0)`.
pub fn cantor_integer_zero(sys: &CantorSystem) -> BigNat {
    BigNat::from(sys.h(0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Membership {
    /// Every base-`p` digit lies in `A`.
    pub member: bool,
    /// The `n ≥ 1` with `a_n = m`. Absent when `m` is not a term of the
    /// digit-map sequence, which happens when its leading digit is `h(0)`.
    pub index: Option<BigNat>,
}

pub fn is_cantor_integer(sys: &CantorSystem, m: &BigNat) -> Membership {
    if m.is_zero() {
        return Membership { member: sys.contains_digit(0), index: None };
    }
    let mut pre = Vec::new();
    for d in m.to_radix_be(sys.p()) {
        match sys.h_inv(d as u32) {
            Some(i) => pre.push(i as u8),
            None => return Membership { member: false, index: None },
        }
    }
    let index = if pre[0] == 0 { None } else { BigNat::from_radix_be(&pre, sys.s()) };
    Membership { member: true, index }
}

fn all_digits_in(sys: &CantorSystem, mut m: u64) -> bool {
    let p = sys.p() as u64;
    while m > 0 {
        if !sys.contains_digit((m % p) as u32) {
            return false;
        }
        m /= p;
    }
    true
}

/// Every `m ∈ [1, limit]` whose base-`p` digits lie in `A`, by direct digit test.
pub fn enumerate_by_filter(sys: &CantorSystem, limit: &BigNat) -> Result<Vec<BigNat>> {
    let limit = limit
        .to_u64()
        .ok_or_else(|| Error::budget("filter enumeration limit exceeds 64 bits"))?;
    Ok(enumerate_by_filter_u64(sys, limit).into_iter().map(BigNat::from).collect())
}

pub fn enumerate_by_filter_u64(sys: &CantorSystem, limit: u64) -> Vec<u64> {
    (1..=limit).filter(|&m| all_digits_in(sys, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(t: &str) -> CantorSystem {
        t.parse().unwrap()
    }

    fn n(v: u64) -> BigNat {
        BigNat::from(v)
    }

    #[test]
    fn to_digits_examples() {
        assert_eq!(to_digits(&n(5), 2).unwrap().digits(), &[1, 0, 1]);
        assert!(to_digits(&n(0), 3).unwrap().is_empty());
        assert_eq!(to_digits(&n(12), 2).unwrap().digits(), &[1, 1, 0, 0]);
        assert!(to_digits(&n(3), 1).is_err());
    }

    #[test]
    fn from_digits_examples() {
        let d = |b, v: Vec<u8>| from_digits(&DigitString::new(b, v).unwrap()).unwrap();
        assert_eq!(d(3, vec![2, 2]), n(8));
        assert_eq!(d(2, vec![]), n(0));
        assert_eq!(d(3, vec![2, 0, 2]), n(20));
        assert!(DigitString::new(3, vec![1, 3]).is_err());
    }

    #[test]
    fn digit_string_strips_leading_zeros() {
        let d = DigitString::new(4, vec![0, 0, 3, 1]).unwrap();
        assert_eq!(d.digits(), &[3, 1]);
    }

    #[test]
    fn cantor_integer_examples() {
        let mid = sys("p=3;A=0,2");
        assert_eq!(cantor_integer(&mid, &n(3)).unwrap(), n(8));
        assert_eq!(cantor_integer(&mid, &n(1)).unwrap(), n(2));
        assert_eq!(cantor_integer(&sys("p=3;A=1,2"), &n(2)).unwrap(), n(7));
        assert!(cantor_integer(&mid, &n(0)).is_err());
        assert_eq!(cantor_integer_zero(&sys("p=3;A=1,2")), n(1));
    }

    #[test]
    fn membership_examples() {
        let mid = sys("p=3;A=0,2");
        assert_eq!(is_cantor_integer(&mid, &n(6)), Membership { member: true, index: Some(n(2)) });
        assert!(!is_cantor_integer(&mid, &n(5)).member);
        assert_eq!(is_cantor_integer(&mid, &n(8)).index, Some(n(3)));
        // leading digit h(0) = 1: a Cantor integer, but not a term
        let shifted = sys("p=3;A=1,2");
        assert_eq!(is_cantor_integer(&shifted, &n(4)), Membership { member: true, index: None });
        assert_eq!(is_cantor_integer(&shifted, &n(7)).index, Some(n(2)));
    }

    #[test]
    fn filter_examples() {
        let f = |s: &str, l| enumerate_by_filter_u64(&sys(s), l);
        assert_eq!(f("p=3;A=0,2", 10), vec![2, 6, 8]);
        assert_eq!(f("p=3;A=1,2", 8), vec![1, 2, 4, 5, 7, 8]);
        assert_eq!(f("p=4;A=0,2", 11), vec![2, 8, 10]);
    }

    #[test]
    fn system_parsing() {
        let s = sys(" p = 5 ; A = 0, 1 ,3 ");
        assert_eq!(s.p(), 5);
        assert_eq!(s.digit_set(), &[0, 1, 3]);
        assert_eq!(s.to_string(), "p=5;A=0,1,3");
        assert!("p=3;A=0,3".parse::<CantorSystem>().is_err());
        assert!("p=3;A=2,0".parse::<CantorSystem>().is_err());
        assert!("p=3;A=0,1,2".parse::<CantorSystem>().is_err());
        assert!("p=3".parse::<CantorSystem>().is_err());
        assert!("p=x;A=0,1".parse::<CantorSystem>().is_err());
    }

    #[test]
    fn alpha_is_rational_only_for_common_roots() {
        assert_eq!(sys("p=4;A=0,2").alpha_ratio(), Some((2, 1)));
        assert_eq!(sys("p=8;A=0,1,2,3").alpha_ratio(), Some((3, 2)));
        assert_eq!(sys("p=3;A=0,2").alpha_ratio(), None);
        let (lo, hi) = sys("p=3;A=0,2").alpha_bounds();
        assert!(lo <= 3f64.log2() && 3f64.log2() <= hi && hi - lo <= 2.3e-16);
    }

    #[test]
    fn machine_word_fast_path_matches() {
        let s = sys("p=5;A=0,1,3");
        for v in 1..2000u64 {
            assert_eq!(BigNat::from(s.a_u128(v).unwrap()), cantor_integer(&s, &n(v)).unwrap());
        }
        assert!(sys("p=256;A=0,1").a_u128(u64::MAX).is_none());
    }
}
