//! The self-similar measure `μ_C = Σ (1/s) μ_C∘S_i^-1` with
//! `S_i(x) = (x + h(i))/p`: its distribution function, the atomic
//! iterates `F^k(δ_0)`, and the map `x ↦ x/μ_C([0,x])^α` on `C`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::certified::{rational_certified, CertifiedValue, Interval, PowerTerm};
use crate::digits::{cantor_integer, BigNat, CantorSystem};
use crate::error::{Error, Result};
use crate::hiprec;
use crate::limitfn::certify_abs;
use crate::sary::SAryReal;
use crate::sequence::{b_term, B_REL_ERROR};
use crate::Precision;

/// Default cap on the number of atoms of `F^k(δ_0)`.
pub const DEFAULT_ATOM_CAP: u64 = 14_348_907; // 3^15

/// The contractions `S_i(x) = (x + h(i))/p`, `0 ≤ i < s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IfsSystem {
    sys: CantorSystem,
}

impl IfsSystem {
    pub fn new(sys: &CantorSystem) -> Self {
        IfsSystem { sys: sys.clone() }
    }

    pub fn sys(&self) -> &CantorSystem {
        &self.sys
    }

    pub fn len(&self) -> usize {
        self.sys.s() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn apply(&self, i: u32, x: &BigRational) -> BigRational {
        assert!(i < self.sys.s(), "map index out of range");
        (x + BigInt::from(self.sys.h(i))) / BigInt::from(self.sys.p())
    }

    /// `S_i([0,1]) = [h(i)/p, (h(i)+1)/p]`.
    pub fn image(&self, i: u32) -> (BigRational, BigRational) {
        (self.apply(i, &BigRational::zero()), self.apply(i, &BigRational::one()))
    }
}

/// `F^k(δ_0)`: the `s^k` points `S_{i_1}∘⋯∘S_{i_k}(0)`, each of weight
/// `s^-k`, stored as numerators over `p^k` in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    p: u32,
    s: u32,
    k: u32,
    numerators: Vec<u128>,
}

impl AtomicMeasure {
    pub fn level(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn denominator(&self) -> u128 {
        (self.p as u128).pow(self.k)
    }

    /// Atom numerators over [`denominator`](Self::denominator), increasing.
    pub fn numerators(&self) -> &[u128] {
        &self.numerators
    }

    pub fn weight(&self) -> f64 {
        (self.s as f64).powi(-(self.k as i32))
    }

    pub fn location(&self, i: usize) -> BigRational {
        BigRational::new(BigInt::from(self.numerators[i]), BigInt::from(self.denominator()))
    }

    /// `(location, weight)` pairs in f64.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let den = self.denominator();
        let w = self.weight();
        self.numerators.iter().map(move |&n| (hiprec::u128_to_f64_down(n) / hiprec::u128_to_f64_down(den), w))
    }

    /// Compensated sum of the weights.
    pub fn total_weight(&self) -> f64 {
        let mut sum = crate::distribution::Neumaier::default();
        for (_, w) in self.atoms() {
            sum.add(w);
        }
        sum.value()
    }

    /// Number of atoms at or below `x`.
    pub fn count_le(&self, x: &BigRational) -> usize {
        if x.is_negative() {
            return 0;
        }
        let t = (x * BigInt::from(self.denominator())).floor().to_integer();
        match t.to_u128() {
            Some(t) => self.numerators.partition_point(|&n| n <= t),
            None => self.numerators.len(),
        }
    }
}

/// The iterate `F^k(δ_0)`, refusing more than `cap` atoms.
pub fn ifs_iterate(sys: &CantorSystem, k: u32, cap: u64) -> Result<AtomicMeasure> {
    let (s, p) = (sys.s(), sys.p());
    let count = (s as u64).checked_pow(k).filter(|&c| c <= cap);
    let count = count.ok_or_else(|| Error::budget(format!("s^{k} atoms exceed the cap of {cap}")))?;
    if (p as u128).checked_pow(k).is_none() {
        return Err(Error::budget(format!("p^{k} exceeds 128 bits")));
    }
    let mut numerators = Vec::with_capacity(count as usize);
    numerators.push(0u128);
    // appending a map on the outside: S_i(y) = (y + h(i))/p = h(i)/p + y/p,
    // so level j+1 numerators are h(i)·p^j + old, ordered by i then old
    let mut scale: u128 = 1;
    for _ in 0..k {
        let mut next = Vec::with_capacity(numerators.len() * s as usize);
        for i in 0..s {
            let off = sys.h(i) as u128 * scale;
            next.extend(numerators.iter().map(|&n| n + off));
        }
        numerators = next;
        scale *= p as u128;
    }
    Ok(AtomicMeasure { p, s, k, numerators })
}

/// Mass of the atoms at or below `x`.
pub fn empirical_cdf(m: &AtomicMeasure, x: &BigRational) -> f64 {
    m.count_le(x) as f64 * m.weight()
}

fn check_unit(x: &BigRational) -> Result<()> {
    if x.is_negative() || x > &BigRational::one() {
        return Err(Error::arg("x must lie in [0, 1]"));
    }
    Ok(())
}

/// `μ_C([0,x])` read off the base-`p` digits of `x`: each digit adds
/// `#{a ∈ A : a < d_j}·s^-j` and the walk stops at the first digit outside
/// `A`. Returns the exact value when the walk stops or cycles within
/// `max_levels` digits, otherwise the partial sum and the level reached.
pub fn mu_cdf_walk(sys: &CantorSystem, x: &BigRational, max_levels: usize) -> Result<(BigRational, Option<usize>)> {
    check_unit(x)?;
    if x.is_one() {
        return Ok((BigRational::one(), None));
    }
    let (p, s) = (BigInt::from(sys.p()), BigInt::from(sys.s()));
    let den = x.denom().clone();
    let mut rem = x.numer().clone();
    let below = |d: u32| sys.digit_set().iter().filter(|&&a| a < d).count() as u32;
    // partial sums numerators over s^j, indexed by the remainder seen at level j
    let mut seen: HashMap<BigInt, (usize, BigInt)> = HashMap::new();
    let mut acc = BigInt::zero();
    let mut sj = BigInt::one();
    for j in 0..max_levels {
        if rem.is_zero() {
            // remaining digits are 0: no further mass below them
            return Ok((BigRational::new(acc, sj), None));
        }
        if let Some((j0, acc0)) = seen.get(&rem) {
            // the t digits since level j0 repeat forever
            let t = (j - j0) as u32;
            let st = num_traits::pow(s.clone(), t as usize);
            let sj0 = num_traits::pow(s.clone(), *j0);
            let block = &acc - acc0 * &st;
            let v = BigRational::new(acc0.clone(), sj0.clone()) + BigRational::new(block, sj0 * (&st - 1));
            // block/(s^j0 · s^t) / (1 - s^-t) = block/(s^j0 (s^t - 1))
            return Ok((v, None));
        }
        seen.insert(rem.clone(), (j, acc.clone()));
        let (d, r) = (&rem * &p).div_rem(&den);
        let d = d.to_u32().expect("digit below p");
        acc = acc * &s + below(d);
        sj *= &s;
        if !sys.contains_digit(d) {
            return Ok((BigRational::new(acc, sj), None));
        }
        rem = r;
    }
    Ok((BigRational::new(acc, sj), Some(max_levels)))
}

/// Exact `μ_C([0,x])` for rational `x` whose digit walk settles within
/// `max_levels` digits.
pub fn mu_cdf_exact(sys: &CantorSystem, x: &BigRational, max_levels: usize) -> Result<Option<BigRational>> {
    let (v, cut) = mu_cdf_walk(sys, x, max_levels)?;
    Ok(cut.is_none().then_some(v))
}

/// `μ_C([0,x])` with absolute error at most `tol`.
pub fn mu_cdf(sys: &CantorSystem, x: &BigRational, tol: f64) -> Result<CertifiedValue> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::arg("tolerance must be positive and finite"));
    }
    // s^-J ≤ tol/2 leaves room for rounding
    let levels = ((2.0 / tol).ln() / (sys.s() as f64).ln()).ceil().max(1.0) as usize;
    let (v, cut) = mu_cdf_walk(sys, x, levels)?;
    match cut {
        None => Ok(rational_certified(&v)),
        Some(j) => {
            let tail = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(sys.s()), j));
            let lo = crate::certified::rational_interval(&v).lo;
            let hi = crate::certified::rational_interval(&(&v + tail)).hi;
            Ok(CertifiedValue::from_interval(Interval::new(lo, hi)))
        }
    }
}

/// A point of `C` written in base `p` with every digit in `A`: a finite
/// prefix and an optional repeating block. A finite string stands for the
/// prefix followed by `h(0)^∞`, which equals the terminating value when
/// `0 ∈ A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CPoint {
    pub p: u32,
    pub digits: Vec<u8>,
    pub repeat: Vec<u8>,
}

impl CPoint {
    pub fn new(sys: &CantorSystem, digits: Vec<u8>, repeat: Vec<u8>) -> Result<Self> {
        if let Some(&d) = digits.iter().chain(&repeat).find(|&&d| !sys.contains_digit(d as u32)) {
            return Err(Error::arg(format!("digit {d} is not in A")));
        }
        let first = digits.first().or(repeat.first()).copied().unwrap_or(0) as u32;
        if first < sys.h(1) {
            return Err(Error::arg(format!("the first digit must be at least h(1) = {}", sys.h(1))));
        }
        Ok(CPoint { p: sys.p(), digits, repeat })
    }

    fn tail(&self, sys: &CantorSystem) -> Vec<u8> {
        if self.repeat.is_empty() {
            vec![sys.h(0) as u8]
        } else {
            self.repeat.clone()
        }
    }

    /// The exact value in `[h(1)/p, 1]`.
    pub fn value(&self, sys: &CantorSystem) -> BigRational {
        let p = BigInt::from(self.p);
        let fold = |ds: &[u8]| ds.iter().fold(BigInt::zero(), |acc, &d| acc * &p + d);
        let l = self.digits.len();
        let rep = self.tail(sys);
        let pl = num_traits::pow(p.clone(), l);
        let pt = num_traits::pow(p.clone(), rep.len());
        BigRational::new(fold(&self.digits), pl.clone()) + BigRational::new(fold(&rep), pl * (pt - 1))
    }

    /// The base-`s` point `y` with digits `h⁻¹(d_j)`; `μ_C([0,x]) = y`.
    pub fn preimage(&self, sys: &CantorSystem) -> Result<SAryReal> {
        let inv = |ds: &[u8]| -> Vec<u8> { ds.iter().map(|&d| sys.h_inv(d as u32).expect("validated") as u8).collect() };
        SAryReal::new(sys.s(), BigNat::zero(), inv(&self.digits), inv(&self.tail(sys)))
    }

    /// Parses `p-ary:0.d1d2…` with an optional `(repeat)` block.
    pub fn parse(sys: &CantorSystem, text: &str) -> Result<Self> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let body = t.strip_prefix("p-ary:").ok_or_else(|| Error::Parse("C-points are written p-ary:0.d1d2…".into()))?;
        let frac = body.strip_prefix("0.").ok_or_else(|| Error::Parse("C-points are written p-ary:0.d1d2…".into()))?;
        let p = sys.p();
        let digits = |s: &str| -> Result<Vec<u8>> {
            s.chars()
                .map(|c| match c.to_digit(36) {
                    Some(d) if d < p => Ok(d as u8),
                    _ => Err(Error::Parse(format!("{c:?} is not a base-{p} digit"))),
                })
                .collect()
        };
        let (pre, rep) = match frac.split_once('(') {
            Some((f, r)) => {
                let r = r.strip_suffix(')').ok_or_else(|| Error::Parse("unclosed repeat block".into()))?;
                if r.is_empty() {
                    return Err(Error::Parse("empty repeat block".into()));
                }
                (f, r)
            }
            None => (frac, ""),
        };
        if pre.is_empty() && rep.is_empty() {
            return Err(Error::Parse("no digits".into()));
        }
        CPoint::new(sys, digits(pre)?, digits(rep)?)
    }
}

impl fmt::Display for CPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dig = |d: u8| std::char::from_digit(d as u32, 36).unwrap_or('?');
        f.write_str("p-ary:0.")?;
        for &d in &self.digits {
            write!(f, "{}", dig(d))?;
        }
        if !self.repeat.is_empty() {
            f.write_str("(")?;
            for &d in &self.repeat {
                write!(f, "{}", dig(d))?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// `x / μ_C([0,x])^α`, the accumulation point of `b_n` attached to `x ∈ C`.
pub fn accumulation_map(sys: &CantorSystem, x: &CPoint, tol: f64) -> Result<CertifiedValue> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::arg("tolerance must be positive and finite"));
    }
    let mu = x.preimage(sys)?.to_rational().expect("exact");
    certify_abs(sys, &PowerTerm::over_power(x.value(sys), mu), tol)
}

/// `b_{n_k}` for the truncation `n_k = ⌊s^k y⌋` of the preimage `y`.
pub fn accumulation_approximant(sys: &CantorSystem, x: &CPoint, k: usize) -> Result<(BigNat, CertifiedValue)> {
    let y = x.preimage(sys)?;
    let n = y.floor_scaled(k).expect("exact");
    if n.is_zero() {
        return Err(Error::arg("k must be at least 1"));
    }
    let a = cantor_integer(sys, &n)?;
    let v = b_term(&a, &n).certify(sys, B_REL_ERROR, Precision::High);
    Ok((n, v))
}

/// Exact value of `μ_C([0, S_i(x)])`, used by the recursion check.
pub fn mu_cdf_image(sys: &CantorSystem, i: u32, x: &BigRational, max_levels: usize) -> Result<Option<BigRational>> {
    let y = IfsSystem::new(sys).apply(i, x);
    mu_cdf_exact(sys, &y, max_levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(t: &str) -> CantorSystem {
        t.parse().unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn cdf_examples() {
        let c = sys("p=3;A=0,2");
        assert_eq!(mu_cdf_exact(&c, &q(2, 3), 100).unwrap(), Some(q(1, 2)));
        assert_eq!(mu_cdf_exact(&c, &q(1, 2), 100).unwrap(), Some(q(1, 2)));
        assert_eq!(mu_cdf_exact(&c, &q(1, 1), 100).unwrap(), Some(q(1, 1)));
        assert_eq!(mu_cdf_exact(&c, &q(0, 1), 100).unwrap(), Some(q(0, 1)));
        // 1/4 = 0.(02)_3 lies in C and maps to 0.(01)_2 = 1/3
        assert_eq!(mu_cdf_exact(&c, &q(1, 4), 100).unwrap(), Some(q(1, 3)));
        assert!(mu_cdf(&c, &q(3, 2), 1e-9).is_err());
    }

    #[test]
    fn cdf_tolerance() {
        let c = sys("p=3;A=0,2");
        let x = BigRational::from_float(0.3).unwrap();
        let v = mu_cdf(&c, &x, 1e-6).unwrap();
        assert!(v.abs_error <= 1e-6);
    }

    #[test]
    fn iterate_examples() {
        let c = sys("p=3;A=0,2");
        let m0 = ifs_iterate(&c, 0, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(m0.numerators(), &[0]);
        let m1 = ifs_iterate(&c, 1, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(m1.numerators(), &[0, 2]);
        let m2 = ifs_iterate(&c, 2, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(m2.numerators(), &[0, 2, 6, 8]);
        assert_eq!(empirical_cdf(&m2, &q(1, 2)), 0.5);
        assert_eq!(empirical_cdf(&m2, &q(1, 10)), 0.25);
        assert_eq!(empirical_cdf(&m2, &q(1, 1)), 1.0);
        assert!(ifs_iterate(&c, 20, 1000).is_err());
    }

    #[test]
    fn cpoint_parse_and_map() {
        let c = sys("p=3;A=0,2");
        let x = CPoint::parse(&c, "p-ary:0.2").unwrap();
        assert_eq!(x.value(&c), q(2, 3));
        assert!(accumulation_map(&c, &x, 1e-13).unwrap().contains(2.0));
        let one = CPoint::parse(&c, "p-ary:0.(2)").unwrap();
        assert_eq!(one.value(&c), q(1, 1));
        assert!(accumulation_map(&c, &one, 1e-13).unwrap().contains(1.0));
        let x = CPoint::parse(&c, "p-ary:0.22").unwrap();
        let v = accumulation_map(&c, &x, 1e-13).unwrap();
        assert!((v.value - 1.4023960826598818).abs() < 1e-13);
        assert_eq!(x.to_string(), "p-ary:0.22");
        assert!(CPoint::parse(&c, "p-ary:0.12").is_err());
        assert!(CPoint::parse(&c, "p-ary:0.02").is_err());
        assert!(CPoint::parse(&c, "0.2").is_err());
    }

    #[test]
    fn finite_string_without_zero_digit() {
        let c = sys("p=3;A=1,2");
        let x = CPoint::parse(&c, "p-ary:0.2").unwrap();
        // 0.2(1)_3 = 2/3 + 1/6
        assert_eq!(x.value(&c), q(5, 6));
        let (_, b) = accumulation_approximant(&c, &x, 30).unwrap();
        let v = accumulation_map(&c, &x, 1e-12).unwrap();
        assert!((b.value - v.value).abs() < 1e-6);
    }
}
