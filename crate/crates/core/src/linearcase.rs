//! Linear digit maps `h(i) = q·i + r`: exact extrema, the `b̃` split, and the
//! monotonicity checks that pin the extrema down.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::certified::{big, compare, CertifiedValue, Cmp, PowerTerm, Precision, Truth};
use crate::digits::{cantor_integer, from_digits, BigNat, CantorSystem, DigitString};
use crate::error::{Error, Result};
use crate::sequence::{self, b_term, compare_b, FastB};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSystem {
    q: u32,
    r: u32,
    sys: CantorSystem,
}

impl LinearSystem {
    /// `A = {q·i + r : 0 ≤ i < s}` with `s` as large as fits below `p`.
    pub fn new(q: u32, r: u32, p: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidSystem("q must be at least 1".into()));
        }
        if p < 3 || q.checked_add(r).is_none_or(|qr| qr > p - 1) {
            return Err(Error::InvalidSystem(format!("need p > q + r, got q={q}, r={r}, p={p}")));
        }
        let s = (p - 1 - r) / q + 1;
        if s >= p {
            return Err(Error::InvalidSystem(format!("q={q}, r={r} allows every digit of base {p}")));
        }
        let digits = (0..s).map(|i| q * i + r).collect();
        Ok(LinearSystem { q, r, sys: CantorSystem::new(p, digits)? })
    }

    /// Recognizes a digit set that is a whole residue class below `p`.
    pub fn from_cantor(sys: &CantorSystem) -> Option<Self> {
        let a = sys.digit_set();
        let (r, q) = (a[0], a[1] - a[0]);
        let ls = LinearSystem::new(q, r, sys.p()).ok()?;
        (ls.sys.digit_set() == a).then_some(ls)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn p(&self) -> u32 {
        self.sys.p()
    }

    pub fn s(&self) -> u32 {
        self.sys.s()
    }

    pub fn system(&self) -> &CantorSystem {
        &self.sys
    }

    /// `q ≥ 2` and `r < q`, the range where the closed forms are proven.
    pub fn within_proven_range(&self) -> bool {
        self.q >= 2 && self.r < self.q
    }
}

fn rat(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `m = (q(s-1)+r)/(p-1)` and `M = (q(p-1)+pr)/(p-1)`.
pub fn exact_bounds(ls: &LinearSystem) -> (BigRational, BigRational) {
    let (q, r, p, s) = (ls.q as u64, ls.r as u64, ls.p() as u64, ls.s() as u64);
    (rat(q * (s - 1) + r, p - 1), rat(q * (p - 1) + p * r, p - 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    /// `k` with `s^k ≤ n < s^(k+1)`.
    pub k: u32,
    /// `ã_n`, the base-`p` reading of the digits `q·ε_i`.
    pub a_tilde: BigNat,
    /// `r·(p^(k+1)-1)/(p-1)`, so that `a_n = ã_n + correction_numerator`.
    pub correction_numerator: BigNat,
    pub b_tilde: CertifiedValue,
    pub correction: CertifiedValue,
}

/// `b_n = b̃_n + r·(p^(k+1)-1)/(p-1)·n^-α`, exact in the numerators.
pub fn b_tilde_decompose(ls: &LinearSystem, n: &BigNat) -> Result<Decomposition> {
    if n.is_zero() {
        return Err(Error::arg("the sequence is indexed from n = 1"));
    }
    let (p, s) = (ls.p(), ls.s());
    let eps = n.to_radix_be(s);
    let k = eps.len() as u32 - 1;
    let a_tilde = eps.iter().fold(BigNat::zero(), |acc, &e| acc * p + ls.q * e as u32);
    let correction_numerator = (BigNat::from(p).pow(k + 1) - 1u32) / (p - 1) * ls.r;
    let sys = ls.system();
    let rel = sequence::B_REL_ERROR;
    Ok(Decomposition {
        k,
        b_tilde: b_term(&a_tilde, n).certify(sys, rel, Precision::High),
        correction: b_term(&correction_numerator, n).certify(sys, rel, Precision::High),
        a_tilde,
        correction_numerator,
    })
}

fn index(prefix: &[u8], digit: u8, tail: u32, s: u32) -> BigNat {
    let mut ds = prefix.to_vec();
    ds.push(digit);
    ds.extend(std::iter::repeat_n((s - 1) as u8, tail as usize));
    from_digits(&DigitString::new(s, ds).expect("digits below s")).expect("valid digits")
}

/// Whether `b` at `[prefix ε (s-1)^l]_s` strictly decreases as `ε` runs `0..s`.
pub fn check_block_descent(ls: &LinearSystem, prefix: &DigitString, l: u32) -> Result<Truth> {
    let s = ls.s();
    if prefix.base() != s {
        return Err(Error::arg(format!("prefix must be in base s = {s}")));
    }
    if prefix.is_empty() {
        return Err(Error::arg("prefix must be a nonempty digit string with nonzero lead"));
    }
    let sys = ls.system();
    let mut verdict = Truth::True;
    let mut prev = index(prefix.digits(), 0, l, s);
    for e in 1..s as u8 {
        let cur = index(prefix.digits(), e, l, s);
        verdict = verdict.and(compare_b(sys, &cur, &prev, Precision::High)?.is_lt());
        prev = cur;
    }
    Ok(verdict)
}

/// Whether `min_{1≤ε<s} b_{[ε (s-1)^k]_s}` is attained at `ε = s-1`.
pub fn check_top_digit_min(ls: &LinearSystem, k: u32) -> Result<Truth> {
    let s = ls.s();
    let sys = ls.system();
    let last = index(&[], (s - 1) as u8, k, s);
    let mut verdict = Truth::True;
    for e in 1..(s - 1) as u8 {
        let cur = index(&[], e, k, s);
        verdict = verdict.and(compare_b(sys, &last, &cur, Precision::High)?.is_le());
    }
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeReport {
    pub k: u32,
    /// `b_{s^k}`, the upper envelope.
    pub upper: CertifiedValue,
    /// `b_{s^(k+1)-1}`, the lower envelope.
    pub lower: CertifiedValue,
    pub scanned: u64,
    pub violations: u64,
    pub indeterminate: u64,
    /// `b_{s^k} = M - r/((p-1)p^k)`, checked exactly.
    pub upper_closed_form: bool,
    /// `b_{s^(k+1)-1} = m·(p^(k+1)-1)/(s^(k+1)-1)^α`, checked exactly.
    pub lower_closed_form: bool,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.indeterminate == 0 && self.upper_closed_form && self.lower_closed_form
    }
}

/// `b_{s^k}` as an exact rational: `a_{s^k} / p^k`.
pub fn b_at_power(ls: &LinearSystem, k: u32) -> BigRational {
    let sk = BigNat::from(ls.s()).pow(k);
    let a = cantor_integer(ls.system(), &sk).expect("s^k >= 1");
    BigRational::new(big(&a), big(&BigNat::from(ls.p()).pow(k)))
}

/// `b_{s^(k+1)-1}` as an exact power term.
pub fn lower_envelope_term(ls: &LinearSystem, k: u32) -> PowerTerm {
    let idx = BigNat::from(ls.s()).pow(k + 1) - 1u32;
    b_term(&cantor_integer(ls.system(), &idx).expect("index >= 1"), &idx)
}

/// Checks `b_{s^(k+1)-1} ≤ b_n ≤ b_{s^k}` on `[s^k, s^(k+1))` and the closed
/// forms of both envelopes.
pub fn check_dyadic_envelope(ls: &LinearSystem, k: u32, cap: u64) -> Result<EnvelopeReport> {
    let sys = ls.system();
    let s = ls.s() as u64;
    let lo = s.checked_pow(k).ok_or_else(|| Error::budget("s^k exceeds 64 bits"))?;
    let hi = s.checked_pow(k + 1).ok_or_else(|| Error::budget("s^(k+1) exceeds 64 bits"))? - 1;
    if hi - lo + 1 > cap {
        return Err(Error::budget(format!("envelope at k = {k} needs {} terms, cap is {cap}", hi - lo + 1)));
    }
    let (m, mm) = exact_bounds(ls);
    let p = ls.p();

    let upper_exact = b_at_power(ls, k);
    let upper_closed = &mm - BigRational::new(BigInt::from(ls.r), big(&(BigNat::from(p).pow(k) * (p - 1))));
    let lower = lower_envelope_term(ls, k);
    let lower_closed = PowerTerm::over_power(
        &m * BigRational::from_integer(big(&(BigNat::from(p).pow(k + 1) - 1u32))),
        BigRational::from_integer(BigInt::from(hi)),
    );
    let upper_term = PowerTerm::rational(upper_exact.clone());

    let fb = FastB::new(sys);
    let (mut violations, mut indeterminate) = (0u64, 0u64);
    let mut tally = |t: Truth| match t {
        Truth::True => {}
        Truth::False => violations += 1,
        Truth::Indeterminate => indeterminate += 1,
    };
    let lower_iv = lower.enclose_double(sys);
    let upper_iv = upper_term.enclose_double(sys);
    match fb.iter(lo, hi) {
        Some(it) => {
            for smp in it {
                let below = match smp.b.cmp(&upper_iv) {
                    Cmp::Less => Truth::True,
                    _ => compare(sys, &smp.term(), &upper_term, Precision::High).is_le(),
                };
                let above = match lower_iv.cmp(&smp.b) {
                    Cmp::Less => Truth::True,
                    _ => compare(sys, &lower, &smp.term(), Precision::High).is_le(),
                };
                tally(below.and(above));
            }
        }
        None => {
            for n in lo..=hi {
                let t = b_term(&cantor_integer(sys, &BigNat::from(n))?, &BigNat::from(n));
                let below = compare(sys, &t, &upper_term, Precision::High).is_le();
                let above = compare(sys, &lower, &t, Precision::High).is_le();
                tally(below.and(above));
            }
        }
    }

    let rel = sequence::B_REL_ERROR;
    Ok(EnvelopeReport {
        k,
        upper: upper_term.certify(sys, rel, Precision::High),
        lower: lower.certify(sys, rel, Precision::High),
        scanned: hi - lo + 1,
        violations,
        indeterminate,
        upper_closed_form: upper_exact == upper_closed,
        lower_closed_form: compare(sys, &lower, &lower_closed, Precision::High) == Cmp::Equal,
    })
}

/// `a_n ≥ (q + r/(s-1))·n`, exact.
pub fn check_growth_lower_bound(ls: &LinearSystem, n: &BigNat) -> Result<bool> {
    let a = cantor_integer(ls.system(), n)?;
    let s1 = ls.s() - 1;
    // a_n·(s-1) ≥ (q(s-1) + r)·n
    Ok(a * s1 >= n * (ls.q * s1 + ls.r))
}
