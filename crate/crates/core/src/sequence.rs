//! The normalized sequence `b_n = a_n / n^α`: evaluation, extrema scans,
//! the descent chain, and the constructive density subsequence.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::certified::{self, big, compare, compare_f64, CertifiedValue, Cmp, Interval, PowerTerm, Precision, Truth};
use crate::digits::{cantor_integer, BigNat, CantorSystem};
use crate::error::{Error, Result};
use crate::linearcase::{exact_bounds, LinearSystem};

/// Error budget of [`b`], relative to the value.
pub const B_REL_ERROR: f64 = 1.0 / (1u64 << 50) as f64;

/// Default cap on linear scans.
pub const DEFAULT_SCAN_CAP: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedTerm {
    pub n: BigNat,
    pub a_n: BigNat,
    pub b_n: CertifiedValue,
}

/// `b_n` as an exact power term `a_n · (1/n)^α`.
pub fn b_term(a_n: &BigNat, n: &BigNat) -> PowerTerm {
    PowerTerm::over_power(BigRational::from_integer(big(a_n)), BigRational::from_integer(big(n)))
}

/// `λ(n) = (a_n + h(0)/(p-1)) / n^α` at an integer point.
pub fn lambda_int_term(sys: &CantorSystem, a_n: &BigNat, n: &BigNat) -> PowerTerm {
    let p1 = BigInt::from(sys.p() - 1);
    let num = BigRational::new(big(a_n) * &p1 + BigInt::from(sys.h(0)), p1);
    PowerTerm::over_power(num, BigRational::from_integer(big(n)))
}

pub(crate) fn b_term_u(a_n: u128, n: u64) -> PowerTerm {
    PowerTerm::over_power(BigRational::from_integer(BigInt::from(a_n)), BigRational::from_integer(BigInt::from(n)))
}

fn check_index(n: &BigNat) -> Result<()> {
    if n.is_zero() {
        return Err(Error::arg("the sequence is indexed from n = 1"));
    }
    Ok(())
}

/// `b_n` with absolute error at most `2^-50 · b_n`.
pub fn b(sys: &CantorSystem, n: &BigNat) -> Result<CertifiedValue> {
    check_index(n)?;
    let a = cantor_integer(sys, n)?;
    Ok(b_term(&a, n).certify(sys, B_REL_ERROR, Precision::High))
}

pub fn term(sys: &CantorSystem, n: &BigNat) -> Result<NormalizedTerm> {
    check_index(n)?;
    let a_n = cantor_integer(sys, n)?;
    let b_n = b_term(&a_n, n).certify(sys, B_REL_ERROR, Precision::High);
    Ok(NormalizedTerm { n: n.clone(), a_n, b_n })
}

/// Certified order of `b_x` against `b_y`.
pub fn compare_b(sys: &CantorSystem, x: &BigNat, y: &BigNat, precision: Precision) -> Result<Cmp> {
    check_index(x)?;
    check_index(y)?;
    let tx = b_term(&cantor_integer(sys, x)?, x);
    let ty = b_term(&cantor_integer(sys, y)?, y);
    Ok(compare(sys, &tx, &ty, precision))
}

/// Certified order of `b_n` against a threshold.
pub fn compare_b_f64(sys: &CantorSystem, n: &BigNat, gamma: f64, precision: Precision) -> Result<Cmp> {
    check_index(n)?;
    Ok(compare_f64(sys, &b_term(&cantor_integer(sys, n)?, n), gamma, precision))
}

/// Machine-word evaluation of `b_n = (a_n/p^k) / (n/s^k)^α` with
/// `s^k ≤ n < s^(k+1)`, valid while `p^k` fits in 128 bits.
#[derive(Clone, Debug)]
pub struct FastB<'a> {
    sys: &'a CantorSystem,
    ppow: Vec<u128>,
    spow: Vec<u64>,
    alpha: Interval,
}

impl<'a> FastB<'a> {
    pub fn new(sys: &'a CantorSystem) -> Self {
        let mut ppow = vec![1u128];
        while let Some(next) = ppow.last().unwrap().checked_mul(sys.p() as u128) {
            ppow.push(next);
        }
        let mut spow = vec![1u64];
        while let Some(next) = spow.last().unwrap().checked_mul(sys.s() as u64) {
            spow.push(next);
        }
        let (lo, hi) = sys.alpha_bounds();
        FastB { sys, ppow, spow, alpha: Interval::new(lo, hi) }
    }

    pub fn sys(&self) -> &'a CantorSystem {
        self.sys
    }

    /// `k` with `s^k ≤ n < s^(k+1)`.
    pub fn level(&self, n: u64) -> usize {
        debug_assert!(n >= 1);
        self.spow.partition_point(|&sk| sk <= n) - 1
    }

    /// Whether every `n ≤ end` has `a_n` and `p^k` representable.
    pub fn covers(&self, end: u64) -> bool {
        end >= 1 && self.level(end) + 1 < self.ppow.len()
    }

    pub fn a(&self, n: u64) -> Option<u128> {
        self.sys.a_u128(n)
    }

    pub fn enclose(&self, n: u64, a: u128) -> Interval {
        let k = self.level(n);
        let mant_a = certified::u128_ratio_interval(a, self.ppow[k]);
        let mant_n = certified::u128_ratio_interval(n as u128, self.spow[k] as u128);
        mant_a.div(mant_n.pow_ge1(self.alpha))
    }

    pub fn b(&self, n: u64) -> Option<(u128, Interval)> {
        let a = self.a(n)?;
        if self.level(n) >= self.ppow.len() {
            return None;
        }
        Some((a, self.enclose(n, a)))
    }

    /// `λ(n) = ((p-1)·a_n + h(0)) / ((p-1)·n^α)` as an f64 enclosure.
    pub fn enclose_lambda(&self, n: u64, a: u128) -> Option<Interval> {
        let p1 = (self.sys.p() - 1) as u128;
        let num = a.checked_mul(p1)?.checked_add(self.sys.h(0) as u128)?;
        let k = self.level(n);
        let den = self.ppow.get(k)?.checked_mul(p1)?;
        let mant_a = certified::u128_ratio_interval(num, den);
        let mant_n = certified::u128_ratio_interval(n as u128, self.spow[k] as u128);
        Some(mant_a.div(mant_n.pow_ge1(self.alpha)))
    }

    /// Certified order of `λ(n)` against `gamma`, f64 first.
    pub fn cmp_lambda_gamma(&self, n: u64, a: u128, gamma: f64, precision: Precision) -> Cmp {
        let slow = || compare_f64(self.sys, &lambda_int_term(self.sys, &BigNat::from(a), &BigNat::from(n)), gamma, precision);
        match self.enclose_lambda(n, a) {
            Some(iv) => certified::compare_interval_or(iv, gamma, slow),
            None => slow(),
        }
    }

    /// Certified order of `b_n` against `gamma`, f64 first.
    pub fn cmp_gamma(&self, n: u64, gamma: f64, precision: Precision) -> Cmp {
        match self.b(n) {
            Some((a, iv)) => certified::compare_interval_or(iv, gamma, || {
                compare_f64(self.sys, &b_term_u(a, n), gamma, precision)
            }),
            None => {
                let n = BigNat::from(n);
                compare_b_f64(self.sys, &n, gamma, precision).expect("n >= 1")
            }
        }
    }

    /// Certified order of `b_x` against `b_y`, f64 first.
    pub fn cmp_pair(&self, x: u64, y: u64, precision: Precision) -> Cmp {
        if let (Some((ax, ix)), Some((ay, iy))) = (self.b(x), self.b(y)) {
            match ix.cmp(&iy) {
                Cmp::Less => return Cmp::Less,
                Cmp::Greater => return Cmp::Greater,
                _ => return compare(self.sys, &b_term_u(ax, x), &b_term_u(ay, y), precision),
            }
        }
        compare_b(self.sys, &BigNat::from(x), &BigNat::from(y), precision).expect("indices >= 1")
    }

    pub fn iter(&self, start: u64, end: u64) -> Option<FastRange<'_, 'a>> {
        FastRange::new(self, start, end)
    }
}

/// Incremental walk over `n ∈ [start, end]`, updating `a_n` digit by digit.
pub struct FastRange<'f, 'a> {
    fb: &'f FastB<'a>,
    n: u64,
    end: u64,
    /// Base-s digits of `n`, least significant first.
    digits: Vec<u32>,
    a: u128,
    done: bool,
}

impl<'f, 'a> FastRange<'f, 'a> {
    fn new(fb: &'f FastB<'a>, start: u64, end: u64) -> Option<Self> {
        let start = start.max(1);
        if end >= start && !fb.covers(end) {
            return None;
        }
        let s = fb.sys.s() as u64;
        let mut digits = Vec::new();
        let mut m = start;
        while m > 0 {
            digits.push((m % s) as u32);
            m /= s;
        }
        let a = if end >= start { fb.a(start)? } else { 0 };
        Some(FastRange { fb, n: start, end, digits, a, done: end < start })
    }

    fn advance(&mut self) {
        let sys = self.fb.sys;
        let s = sys.s();
        let mut i = 0;
        loop {
            if i == self.digits.len() {
                self.digits.push(1);
                self.a += sys.h(1) as u128 * self.fb.ppow[i];
                break;
            }
            let d = self.digits[i];
            if d + 1 < s {
                self.a += (sys.h(d + 1) - sys.h(d)) as u128 * self.fb.ppow[i];
                self.digits[i] = d + 1;
                break;
            }
            self.a -= (sys.h(s - 1) - sys.h(0)) as u128 * self.fb.ppow[i];
            self.digits[i] = 0;
            i += 1;
        }
        self.n += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub n: u64,
    pub a: u128,
    pub b: Interval,
}

impl Sample {
    pub fn term(&self) -> PowerTerm {
        b_term_u(self.a, self.n)
    }
}

impl Iterator for FastRange<'_, '_> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        if self.done {
            return None;
        }
        let out = Sample { n: self.n, a: self.a, b: self.fb.enclose(self.n, self.a) };
        if self.n == self.end {
            self.done = true;
        } else {
            self.advance();
        }
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremaReport {
    pub limit: u64,
    pub min_n: u64,
    pub min: CertifiedValue,
    pub max_n: u64,
    pub max: CertifiedValue,
    /// Comparisons the ladder could not decide; the earlier index was kept.
    pub unresolved: u64,
    /// Exact `(m, M)` when the digit map is linear.
    pub exact: Option<(BigRational, BigRational)>,
    /// `M` is attained exactly when `h(0) = 0`.
    pub sup_attained: bool,
    /// `m` is never attained.
    pub inf_attained: bool,
}

/// Min and max of `b_n` over `1 ≤ n ≤ limit`, ties to the smaller index.
pub fn scan_extrema(sys: &CantorSystem, limit: u64) -> Result<ExtremaReport> {
    if limit == 0 {
        return Err(Error::arg("scan limit must be at least 1"));
    }
    let fb = FastB::new(sys);
    let mut unresolved = 0u64;
    let (min_n, max_n) = match fb.iter(1, limit) {
        Some(it) => {
            let mut min: Option<Sample> = None;
            let mut max: Option<Sample> = None;
            for smp in it {
                match min {
                    None => min = Some(smp),
                    Some(cur) => match smp.b.cmp(&cur.b) {
                        Cmp::Less => min = Some(smp),
                        Cmp::Greater => {}
                        _ => match compare(sys, &smp.term(), &cur.term(), Precision::High) {
                            Cmp::Less => min = Some(smp),
                            Cmp::Indeterminate => unresolved += 1,
                            _ => {}
                        },
                    },
                }
                match max {
                    None => max = Some(smp),
                    Some(cur) => match smp.b.cmp(&cur.b) {
                        Cmp::Greater => max = Some(smp),
                        Cmp::Less => {}
                        _ => match compare(sys, &smp.term(), &cur.term(), Precision::High) {
                            Cmp::Greater => max = Some(smp),
                            Cmp::Indeterminate => unresolved += 1,
                            _ => {}
                        },
                    },
                }
            }
            (min.unwrap().n, max.unwrap().n)
        }
        None => {
            let (mut lo, mut hi) = (1u64, 1u64);
            for n in 2..=limit {
                match fb.cmp_pair(n, lo, Precision::High) {
                    Cmp::Less => lo = n,
                    Cmp::Indeterminate => unresolved += 1,
                    _ => {}
                }
                match fb.cmp_pair(n, hi, Precision::High) {
                    Cmp::Greater => hi = n,
                    Cmp::Indeterminate => unresolved += 1,
                    _ => {}
                }
            }
            (lo, hi)
        }
    };
    let exact = LinearSystem::from_cantor(sys).map(|ls| exact_bounds(&ls));
    Ok(ExtremaReport {
        limit,
        min_n,
        min: b(sys, &BigNat::from(min_n))?,
        max_n,
        max: b(sys, &BigNat::from(max_n))?,
        unresolved,
        exact,
        sup_attained: sys.h(0) == 0,
        inf_attained: false,
    })
}

/// `b_{sn+s-1} < ⋯ < b_{sn+1} < b_n ≤ b_{sn}`, certified.
pub fn check_descent(sys: &CantorSystem, n: &BigNat) -> Result<Truth> {
    check_index(n)?;
    let s = sys.s();
    let sn = n * s;
    let idx = |i: u32| -> BigNat { &sn + i };
    let mut verdict = compare_b(sys, n, &sn, Precision::High)?.is_le();
    let mut upper = n.clone();
    for i in 1..s {
        let c = compare_b(sys, &idx(i), &upper, Precision::High)?;
        verdict = verdict.and(c.is_lt());
        upper = idx(i);
    }
    Ok(verdict)
}

fn descent_fast(fb: &FastB<'_>, n: u64) -> Truth {
    let s = fb.sys.s() as u64;
    let sn = n * s;
    let mut verdict = fb.cmp_pair(n, sn, Precision::High).is_le();
    let mut upper = n;
    for i in 1..s {
        verdict = verdict.and(fb.cmp_pair(sn + i, upper, Precision::High).is_lt());
        upper = sn + i;
    }
    verdict
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescentScan {
    pub limit: u64,
    /// Descent holds for every `n` in `(n0, limit]`.
    pub n0: u64,
    pub failures: u64,
    pub indeterminate: u64,
}

/// Finds the threshold past which the descent chain holds, up to `limit`.
pub fn scan_descent(sys: &CantorSystem, limit: u64) -> Result<DescentScan> {
    if limit == 0 {
        return Err(Error::arg("scan limit must be at least 1"));
    }
    let fb = FastB::new(sys);
    let (mut n0, mut failures, mut indeterminate) = (0, 0, 0);
    for n in 1..=limit {
        match descent_fast(&fb, n) {
            Truth::True => {}
            Truth::False => {
                n0 = n;
                failures += 1;
            }
            Truth::Indeterminate => {
                n0 = n;
                indeterminate += 1;
            }
        }
    }
    Ok(DescentScan { limit, n0, failures, indeterminate })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRun {
    pub gamma: f64,
    /// The descent threshold used to place `n_1`.
    pub n0: u64,
    /// `(n_k, b_{n_k})` for `k = 1..=K`.
    pub terms: Vec<(BigNat, CertifiedValue)>,
    /// The `C` of the step bound `|b_{n_k} - b_{n_{k+1}}| < C·s^-k`.
    pub step_constant: f64,
}

impl DensityRun {
    /// Steps whose size is not certified below `C·s^-k`.
    pub fn step_violations(&self, s: u32) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, w) in self.terms.windows(2).enumerate() {
            let diff = (w[0].1.value - w[1].1.value).abs() + w[0].1.abs_error + w[1].1.abs_error;
            let bound = self.step_constant * (s as f64).powi(-(k as i32 + 1));
            if diff.partial_cmp(&bound) != Some(std::cmp::Ordering::Less) {
                out.push(k + 1);
            }
        }
        out
    }

    pub fn last_error(&self) -> f64 {
        let (_, v) = self.terms.last().expect("at least one term");
        (v.value - self.gamma).abs() + v.abs_error
    }
}

/// Proxy extrema for the density construction: exact for linear digit
/// maps, otherwise a scan over `n < s^depth` (the max attains `M` when
/// `h(0) = 0`; the min only bounds `m` from above).
pub fn extrema_proxy(sys: &CantorSystem, depth: u32) -> Result<(f64, f64)> {
    if let Some(ls) = LinearSystem::from_cantor(sys) {
        let (m, mm) = exact_bounds(&ls);
        return Ok((certified::to_f64_lossy(&m), certified::to_f64_lossy(&mm)));
    }
    let lim = (sys.s() as u64).checked_pow(depth).ok_or_else(|| Error::budget("proxy depth"))? - 1;
    let r = scan_extrema(sys, lim.max(1))?;
    Ok((r.min.value, r.max.value))
}

/// Constructs `n_1 < n_2 < ⋯ < n_K` with `b_{n_k} → γ`: `n_1` is the first
/// index above the descent threshold with `b_{n_1+1} < γ ≤ b_{n_1}`, and
/// `n_{k+1} = s·n_k + i` for the largest digit `i` with `b_{s n_k + i} ≥ γ`.
pub fn density_subsequence(sys: &CantorSystem, gamma: f64, k: usize, cap: u64) -> Result<DensityRun> {
    if k == 0 {
        return Err(Error::arg("K must be at least 1"));
    }
    let (m, mm) = extrema_proxy(sys, 14)?;
    if gamma.is_nan() || gamma <= m || gamma >= mm {
        return Err(Error::arg(format!("gamma {gamma} must lie strictly inside ({m}, {mm})")));
    }
    let descent = scan_descent(sys, cap.min(1 << 14))?;
    let s = sys.s() as u64;
    let mut start = 1u64;
    while start <= descent.n0 {
        start *= s;
    }
    let fb = FastB::new(sys);
    let mut n1 = None;
    let mut n = start;
    let mut below_next = fb.cmp_gamma(n, gamma, Precision::High);
    while n < start.saturating_add(cap) {
        let here = below_next;
        below_next = fb.cmp_gamma(n + 1, gamma, Precision::High);
        if here.is_lt() == Truth::False && below_next == Cmp::Less {
            n1 = Some(n);
            break;
        }
        n += 1;
    }
    let n1 = n1.ok_or_else(|| {
        Error::budget(format!("no n_1 with b(n_1 + 1) < {gamma} <= b(n_1) in [{start}, {})", start + cap))
    })?;

    let mut cur = BigNat::from(n1);
    let mut terms = vec![(cur.clone(), b(sys, &cur)?)];
    for _ in 1..k {
        let base = &cur * sys.s();
        let mut pick = BigNat::zero();
        for i in (0..sys.s()).rev() {
            let idx = &base + i;
            if compare_b_f64(sys, &idx, gamma, Precision::High)?.is_lt() == Truth::False {
                pick = idx;
                break;
            }
        }
        if pick.is_zero() {
            // b_{sn} ≥ b_n ≥ γ, so digit 0 always qualifies past the threshold
            pick = base;
        }
        cur = pick;
        terms.push((cur.clone(), b(sys, &cur)?));
    }
    Ok(DensityRun { gamma, n0: descent.n0, terms, step_constant: mm * sys.p() as f64 * sys.alpha() })
}

/// Whether `1 - s^-l > log_p s`, i.e. `p^(s^l - 1) > s^(s^l)`.
fn prop_m_precondition(sys: &CantorSystem, l: u32) -> bool {
    let (p, s) = (sys.p(), sys.s());
    match (s as u64).checked_pow(l) {
        Some(sl) if sl <= 4096 => {
            let sl = sl as u32;
            BigUint::from(p).pow(sl - 1) > BigUint::from(s).pow(sl)
        }
        // s^-l is negligible next to the gap 1 - 1/α
        _ => 1.0 - 1.0 / sys.alpha() > 1e-9,
    }
}

/// `b_{s^l n + s^l - 1} < b_n` for `l` with `1 - s^-l > log_p s`.
pub fn check_prop_m(sys: &CantorSystem, n: &BigNat, l: u32) -> Result<Truth> {
    check_index(n)?;
    if l == 0 || !prop_m_precondition(sys, l) {
        return Err(Error::arg(format!("l = {l} does not satisfy 1 - s^-l > log_p s")));
    }
    let sl = BigNat::from(sys.s()).pow(l);
    let idx = n * &sl + &sl - BigNat::one();
    Ok(compare_b(sys, &idx, n, Precision::High)?.is_lt())
}
