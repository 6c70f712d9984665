//! Positive reals in base `s`: an integer part plus a finite or eventually
//! periodic digit string, normalized so that equal values compare equal.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::certified::big;
use crate::digits::BigNat;
use crate::error::{Error, Result};

/// Default bound on the preperiod plus period of a rational's expansion.
pub const DEFAULT_EXPANSION_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SAryReal {
    base: u32,
    int_part: BigNat,
    frac: Vec<u8>,
    repeat: Vec<u8>,
    /// False when only the listed digits are known: the true value lies in
    /// `[x, x + s^-len]`.
    exact: bool,
}

/// Digits up to 35 print as `0-9a-z`; larger ones as `{d}`.
fn write_digit(f: &mut fmt::Formatter<'_>, d: u8) -> fmt::Result {
    match std::char::from_digit(d as u32, 36) {
        Some(c) => write!(f, "{c}"),
        None => write!(f, "{{{d}}}"),
    }
}

impl SAryReal {
    /// Builds and normalizes `int_part.frac(repeat)` in base `base`.
    pub fn new(base: u32, int_part: BigNat, frac: Vec<u8>, repeat: Vec<u8>) -> Result<Self> {
        Self::build(base, int_part, frac, repeat, true)
    }

    /// A value known only through its leading digits.
    pub fn truncated(base: u32, int_part: BigNat, frac: Vec<u8>) -> Result<Self> {
        Self::build(base, int_part, frac, Vec::new(), false)
    }

    fn build(base: u32, int_part: BigNat, frac: Vec<u8>, repeat: Vec<u8>, exact: bool) -> Result<Self> {
        if !(2..=255).contains(&base) {
            return Err(Error::arg(format!("base {base} outside 2..=255")));
        }
        if let Some(&d) = frac.iter().chain(&repeat).find(|&&d| d as u32 >= base) {
            return Err(Error::arg(format!("digit {d} is not below base {base}")));
        }
        let mut x = SAryReal { base, int_part, frac, repeat, exact };
        x.normalize();
        Ok(x)
    }

    pub fn from_integer(base: u32, n: BigNat) -> Result<Self> {
        Self::new(base, n, Vec::new(), Vec::new())
    }

    fn normalize(&mut self) {
        let top = (self.base - 1) as u8;
        if !self.exact {
            self.repeat.clear();
            return;
        }
        // minimal period
        let t = self.repeat.len();
        if let Some(d) = (1..=t).find(|d| t.is_multiple_of(*d) && (0..t).all(|i| self.repeat[i] == self.repeat[i % d])) {
            self.repeat.truncate(d);
        }
        // pull the period left over matching preperiod digits
        while let (Some(&last), Some(&rlast)) = (self.frac.last(), self.repeat.last()) {
            if last != rlast {
                break;
            }
            self.frac.pop();
            self.repeat.rotate_right(1);
        }
        if self.repeat.iter().all(|&d| d == 0) {
            self.repeat.clear();
        } else if self.repeat.iter().all(|&d| d == top) {
            // ...d(s-1)^∞ = ...(d+1)
            self.repeat.clear();
            loop {
                match self.frac.pop() {
                    Some(d) if d == top => continue,
                    Some(d) => {
                        self.frac.push(d + 1);
                        break;
                    }
                    None => {
                        self.int_part += 1u32;
                        break;
                    }
                }
            }
        }
        if self.repeat.is_empty() {
            while self.frac.last() == Some(&0) {
                self.frac.pop();
            }
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn int_part(&self) -> &BigNat {
        &self.int_part
    }

    pub fn frac_digits(&self) -> &[u8] {
        &self.frac
    }

    pub fn repeat_digits(&self) -> &[u8] {
        &self.repeat
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Finite expansion with no repeating block.
    pub fn is_terminating(&self) -> bool {
        self.exact && self.repeat.is_empty()
    }

    /// The `j`-th fractional digit, `j ≥ 1`; `None` past the known digits of
    /// an inexact value.
    pub fn digit(&self, j: usize) -> Option<u8> {
        debug_assert!(j >= 1);
        let i = j - 1;
        if i < self.frac.len() {
            return Some(self.frac[i]);
        }
        if !self.exact {
            return None;
        }
        if self.repeat.is_empty() {
            return Some(0);
        }
        Some(self.repeat[(i - self.frac.len()) % self.repeat.len()])
    }

    /// Number of known fractional digits of an inexact value.
    pub fn known_digits(&self) -> Option<usize> {
        (!self.exact).then_some(self.frac.len())
    }

    pub fn is_zero(&self) -> bool {
        self.int_part.is_zero() && self.frac.iter().all(|&d| d == 0) && self.repeat.is_empty()
    }

    /// Exact value, for exact representations.
    pub fn to_rational(&self) -> Option<BigRational> {
        if !self.exact {
            return None;
        }
        Some(self.lower_rational_bound())
    }

    /// Exact value of the listed digits (the lower end for inexact values).
    pub fn lower_rational_bound(&self) -> BigRational {
        let s = BigInt::from(self.base);
        let fold = |ds: &[u8]| ds.iter().fold(BigInt::zero(), |acc, &d| acc * &s + d);
        let l = self.frac.len() as u32;
        let pre = BigRational::new(fold(&self.frac), num_traits::pow(s.clone(), l as usize));
        let mut v = BigRational::from_integer(big(&self.int_part)) + pre;
        if self.exact && !self.repeat.is_empty() {
            let t = self.repeat.len();
            let den = (num_traits::pow(s.clone(), t) - 1) * num_traits::pow(s.clone(), l as usize);
            v += BigRational::new(fold(&self.repeat), den);
        }
        v
    }

    /// Upper end of the enclosure.
    pub fn upper_rational_bound(&self) -> BigRational {
        let lo = self.lower_rational_bound();
        if self.exact {
            return lo;
        }
        lo + BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(self.base), self.frac.len()))
    }

    pub fn to_f64(&self) -> f64 {
        self.lower_rational_bound().to_f64().unwrap_or(f64::NAN)
    }

    /// Expansion of a non-negative rational, with cycle detection.
    pub fn from_rational(base: u32, q: &BigRational, cap: usize) -> Result<Self> {
        if q.is_negative() {
            return Err(Error::arg("value must be non-negative"));
        }
        let (ip, mut rem) = q.numer().div_mod_floor(q.denom());
        let den = q.denom();
        let b = BigInt::from(base);
        let mut seen: HashMap<BigInt, usize> = HashMap::new();
        let mut digits = Vec::new();
        while !rem.is_zero() {
            if let Some(&start) = seen.get(&rem) {
                let repeat = digits.split_off(start);
                return Self::new(base, ip.to_biguint().expect("non-negative"), digits, repeat);
            }
            if digits.len() >= cap {
                return Err(Error::budget(format!("expansion longer than {cap} digits")));
            }
            seen.insert(rem.clone(), digits.len());
            let (d, r) = (&rem * &b).div_rem(den);
            digits.push(d.to_u8().expect("digit below base"));
            rem = r;
        }
        Self::new(base, ip.to_biguint().expect("non-negative"), digits, Vec::new())
    }

    /// `⌊s^k x⌋` for `k` within the known digits.
    pub fn floor_scaled(&self, k: usize) -> Option<BigNat> {
        let mut n = self.int_part.clone();
        for j in 1..=k {
            n = n * self.base + self.digit(j)? as u32;
        }
        Some(n)
    }

    /// `[int].d_1⋯d_n` as an exact value.
    pub fn truncate(&self, n: usize) -> SAryReal {
        let frac: Vec<u8> = (1..=n).map_while(|j| self.digit(j)).collect();
        SAryReal::new(self.base, self.int_part.clone(), frac, Vec::new()).expect("digits are valid")
    }

    /// `s^j · x` for any integer `j`. An inexact value cannot be scaled
    /// past its known digits.
    pub fn scale(&self, j: i64) -> Result<SAryReal> {
        let s = self.base;
        if j >= 0 {
            let j = j as usize;
            if !self.exact && j > self.frac.len() {
                return Err(Error::arg(format!("only {} digits are known", self.frac.len())));
            }
            let int_part = self.floor_scaled(j).expect("digits known");
            let (frac, repeat) = if j <= self.frac.len() {
                (self.frac[j..].to_vec(), self.repeat.clone())
            } else {
                let mut r = self.repeat.clone();
                if !r.is_empty() {
                    let t = r.len();
                    r.rotate_left((j - self.frac.len()) % t);
                }
                (Vec::new(), r)
            };
            return SAryReal::build(s, int_part, frac, repeat, self.exact);
        }
        let j = j.unsigned_abs() as usize;
        let mut lead = if self.int_part.is_zero() { Vec::new() } else { self.int_part.to_radix_be(s) };
        let mut shifted = vec![0u8; j.saturating_sub(lead.len())];
        shifted.append(&mut lead);
        let cut = shifted.len() - j;
        let int_part = if cut == 0 {
            BigNat::zero()
        } else {
            BigNat::from_radix_be(&shifted[..cut], s).expect("digits below base")
        };
        let mut frac = shifted[cut..].to_vec();
        frac.extend_from_slice(&self.frac);
        SAryReal::build(s, int_part, frac, self.repeat.clone(), self.exact)
    }

    /// Parses `int.digits(repeat)`, `int`, `.digits`, or `num/den`. Digits
    /// beyond 9 are written `a`–`z`.
    pub fn parse(base: u32, text: &str) -> Result<Self> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.parse().map_err(|e| Error::Parse(format!("numerator {n:?}: {e}")))?;
            let d: BigInt = d.parse().map_err(|e| Error::Parse(format!("denominator {d:?}: {e}")))?;
            if d.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            return Self::from_rational(base, &BigRational::new(n, d), DEFAULT_EXPANSION_CAP);
        }
        let digits = |s: &str| -> Result<Vec<u8>> {
            s.chars()
                .map(|c| match c.to_digit(36) {
                    Some(d) if d < base => Ok(d as u8),
                    _ => Err(Error::Parse(format!("{c:?} is not a base-{base} digit"))),
                })
                .collect()
        };
        let (ip, rest) = t.split_once('.').unwrap_or((&t, ""));
        let (fr, rep) = match rest.split_once('(') {
            Some((f, r)) => {
                let r = r.strip_suffix(')').ok_or_else(|| Error::Parse("unclosed repeat block".into()))?;
                if r.is_empty() {
                    return Err(Error::Parse("empty repeat block".into()));
                }
                (f, r)
            }
            None => (rest, ""),
        };
        if ip.is_empty() && fr.is_empty() && rep.is_empty() {
            return Err(Error::Parse("empty literal".into()));
        }
        let ipd = digits(ip)?;
        let int_part = if ipd.is_empty() { BigNat::zero() } else { BigNat::from_radix_be(&ipd, base).expect("checked") };
        Self::new(base, int_part, digits(fr)?, digits(rep)?)
    }
}

impl fmt::Display for SAryReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.int_part.is_zero() {
            f.write_str("0")?;
        } else {
            for d in self.int_part.to_radix_be(self.base) {
                write_digit(f, d)?;
            }
        }
        if !self.frac.is_empty() || !self.repeat.is_empty() {
            f.write_str(".")?;
            for &d in &self.frac {
                write_digit(f, d)?;
            }
            if !self.repeat.is_empty() {
                f.write_str("(")?;
                for &d in &self.repeat {
                    write_digit(f, d)?;
                }
                f.write_str(")")?;
            }
        }
        if !self.exact {
            f.write_str("…")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn parse(s: &str) -> SAryReal {
        SAryReal::parse(2, s).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(parse("0.0(1)"), parse("0.1"));
        assert_eq!(parse("0.(1)"), parse("1"));
        assert_eq!(parse("0.1(01)"), parse("0.(10)"));
        assert_eq!(parse("0.(1010)"), parse("0.(10)"));
        assert_eq!(parse("0.1000"), parse("0.1"));
        assert_eq!(parse("0.1(0)"), parse("0.1"));
        assert_eq!(parse("1/3").to_string(), "0.(01)");
        assert_eq!(SAryReal::parse(3, "1/2").unwrap().to_string(), "0.(1)");
    }

    #[test]
    fn rational_round_trip() {
        for (n, d) in [(3, 4), (1, 3), (5, 7), (22, 7), (1, 1), (0, 5), (7, 96)] {
            for base in [2, 3, 5, 10] {
                let x = SAryReal::from_rational(base, &q(n, d), 1000).unwrap();
                assert_eq!(x.to_rational().unwrap(), q(n, d), "{n}/{d} base {base}");
            }
        }
    }

    #[test]
    fn scaling() {
        let x = parse("0.1(10)");
        let v = x.to_rational().unwrap();
        assert_eq!(x.scale(1).unwrap().to_rational().unwrap(), &v * q(2, 1));
        assert_eq!(x.scale(5).unwrap().to_rational().unwrap(), &v * q(32, 1));
        assert_eq!(x.scale(-3).unwrap().to_rational().unwrap(), &v / q(8, 1));
        let y = parse("101.011");
        assert_eq!(y.scale(-4).unwrap().scale(4).unwrap(), y);
        let t = SAryReal::truncated(2, BigNat::zero(), vec![1, 1]).unwrap();
        assert!(t.scale(3).is_err());
        assert_eq!(t.scale(2).unwrap().int_part(), &BigNat::from(3u32));
    }

    #[test]
    fn floor_and_digits() {
        let x = parse("0.11");
        assert_eq!(x.floor_scaled(2), Some(BigNat::from(3u32)));
        assert_eq!(x.floor_scaled(5), Some(BigNat::from(24u32)));
        let t = SAryReal::truncated(2, BigNat::zero(), vec![1, 0, 1]).unwrap();
        assert_eq!(t.digit(4), None);
        assert_eq!(t.upper_rational_bound(), q(3, 4));
    }

    #[test]
    fn parse_errors() {
        assert!(SAryReal::parse(2, "0.12").is_err());
        assert!(SAryReal::parse(2, "0.1(").is_err());
        assert!(SAryReal::parse(2, "1/0").is_err());
        assert!(SAryReal::parse(2, "").is_err());
        assert!(SAryReal::parse(2, "-1/3").is_err());
    }
}
