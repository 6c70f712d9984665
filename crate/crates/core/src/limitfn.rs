//! The limit function `λ(x) = lim a(⌊s^k x⌋)/(s^k x)^α`: its closed form
//! `(a([x]) + φ(x))/x^α`, finite-stage bounds, one-sided continuity probes
//! and the level grid `λ(n)`, `s^(k-1) ≤ n < s^k`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::certified::{big, rational_certified, CertifiedValue, Interval, PowerTerm, Truth};
use crate::digits::{cantor_integer, BigNat, CantorSystem};
use crate::error::{Error, Result};
use crate::hiprec;
use crate::sary::{SAryReal, DEFAULT_EXPANSION_CAP};
use crate::sequence::{lambda_int_term, FastB, B_REL_ERROR};
use crate::Precision;

/// Tolerance used where callers do not pick one.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Default number of approach points in a continuity probe.
pub const DEFAULT_PROBE_DEPTH: usize = 30;

const LADDER: [u32; 3] = [128, 256, 1024];

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn p_pow(sys: &CantorSystem, k: usize) -> BigRational {
    BigRational::from_integer(num_traits::pow(BigInt::from(sys.p()), k))
}

fn check_base(sys: &CantorSystem, x: &SAryReal) -> Result<()> {
    if x.base() != sys.s() {
        return Err(Error::arg(format!("x is written in base {}, the system needs base {}", x.base(), sys.s())));
    }
    Ok(())
}

/// `a(m)` with `a(0) = 0`, the convention of the closed form below 1.
fn a_of(sys: &CantorSystem, m: &BigNat) -> Result<BigNat> {
    if m.is_zero() {
        return Ok(BigNat::zero());
    }
    cantor_integer(sys, m)
}

fn geometric_tail(sys: &CantorSystem, digit_value: u32, len: usize) -> BigRational {
    rat(digit_value, sys.p() - 1) / p_pow(sys, len)
}

fn digit_sum(sys: &CantorSystem, ds: &[u8]) -> BigRational {
    let p = BigInt::from(sys.p());
    let num = ds.iter().fold(BigInt::zero(), |acc, &d| acc * &p + sys.h(d as u32));
    BigRational::new(num, num_traits::pow(p, ds.len()))
}

/// Exact `φ(x) = Σ h(d_j) p^-j` for an exact (terminating or periodic) `x`.
pub fn phi_exact(sys: &CantorSystem, x: &SAryReal) -> Result<BigRational> {
    check_base(sys, x)?;
    if !x.is_exact() {
        return Err(Error::arg("φ has no closed form for a truncated expansion"));
    }
    let pre = x.frac_digits();
    let mut v = digit_sum(sys, pre);
    let rep = x.repeat_digits();
    if rep.is_empty() {
        v += geometric_tail(sys, sys.h(0), pre.len());
    } else {
        let block = digit_sum(sys, rep);
        let pt = p_pow(sys, rep.len());
        v += block * &pt / (pt - BigRational::one()) / p_pow(sys, pre.len());
    }
    Ok(v)
}

/// `φ(x)` from its first `K` digits with tail bound `h(s-1)p^-K/(p-1)`;
/// exact expansions are summed in closed form.
pub fn phi(sys: &CantorSystem, x: &SAryReal, k: usize) -> Result<CertifiedValue> {
    if k == 0 {
        return Err(Error::arg("K must be at least 1"));
    }
    check_base(sys, x)?;
    if x.is_exact() {
        return Ok(rational_certified(&phi_exact(sys, x)?));
    }
    let k = k.min(x.frac_digits().len());
    let partial = rational_certified(&digit_sum(sys, &x.frac_digits()[..k]));
    let tail = geometric_tail(sys, sys.h(sys.s() - 1), k);
    let tail_up = hiprec::ratio_to_f64(tail.numer().magnitude(), tail.denom().magnitude(), true);
    Ok(CertifiedValue::new(partial.value, up(partial.abs_error + tail_up)))
}

fn up(x: f64) -> f64 {
    x * (1.0 + f64::EPSILON)
}

/// Shifts `x` by a power of `s` so the closed form applies (`x ≥ 1/s`);
/// returns the shifted value and the shift.
fn lift(x: &SAryReal) -> Result<(SAryReal, usize)> {
    if x.is_zero() {
        return Err(Error::arg("λ is defined for x > 0"));
    }
    if !x.int_part().is_zero() {
        return Ok((x.clone(), 0));
    }
    let mut j = 1;
    loop {
        match x.digit(j) {
            Some(0) => j += 1,
            Some(_) => break,
            None => return Err(Error::arg("no nonzero digit among the known digits")),
        }
    }
    Ok((x.scale(j as i64 - 1)?, j - 1))
}

/// Numerator `a([x]) + φ(x)` of the closed form at a lifted exact point.
fn lambda_numerator(sys: &CantorSystem, x: &SAryReal) -> Result<BigRational> {
    Ok(BigRational::from_integer(big(&a_of(sys, x.int_part())?)) + phi_exact(sys, x)?)
}

/// `λ(x)` as an exact power term, for exact `x > 0`.
pub fn lambda_term(sys: &CantorSystem, x: &SAryReal) -> Result<PowerTerm> {
    check_base(sys, x)?;
    if !x.is_exact() {
        return Err(Error::arg("a truncated expansion has no exact λ term"));
    }
    let (xl, _) = lift(x)?;
    let num = lambda_numerator(sys, &xl)?;
    Ok(PowerTerm::over_power(num, xl.to_rational().expect("exact")))
}

/// Enclosure of `λ` over every value that a truncated `x` may take.
fn lambda_enclosure(sys: &CantorSystem, x: &SAryReal, prec: Option<u32>) -> Result<Interval> {
    let (xl, _) = lift(x)?;
    let ds = xl.frac_digits();
    let a = BigRational::from_integer(big(&a_of(sys, xl.int_part())?)) + digit_sum(sys, ds);
    let lo_num = &a + geometric_tail(sys, sys.h(0), ds.len());
    let hi_num = &a + geometric_tail(sys, sys.h(sys.s() - 1), ds.len());
    let lo = PowerTerm::over_power(lo_num, xl.upper_rational_bound());
    let hi = PowerTerm::over_power(hi_num, xl.lower_rational_bound());
    let enc = |t: &PowerTerm| match prec {
        None => t.enclose_double(sys),
        Some(w) => t.enclose_high(sys, w),
    };
    Ok(Interval::new(enc(&lo).lo, enc(&hi).hi))
}

/// Certifies a power term to absolute error `tol`, escalating precision.
pub fn certify_abs(sys: &CantorSystem, t: &PowerTerm, tol: f64) -> Result<CertifiedValue> {
    certify_abs_with(sys, t, tol, Precision::High)
}

/// As [`certify_abs`]; `Precision::Double` stops after the f64 tier.
pub fn certify_abs_with(sys: &CantorSystem, t: &PowerTerm, tol: f64, precision: Precision) -> Result<CertifiedValue> {
    let mut cv = CertifiedValue::from_interval(t.enclose_double(sys));
    if cv.abs_error <= tol {
        return Ok(cv);
    }
    let ladder: &[u32] = if precision == Precision::Double { &[] } else { &LADDER };
    for &w in ladder {
        cv = CertifiedValue::from_interval(t.enclose_high(sys, w));
        if cv.abs_error <= tol {
            return Ok(cv);
        }
    }
    Err(Error::Tolerance { requested: tol, attainable: cv.abs_error })
}

fn check_attained(cv: CertifiedValue, tol: f64) -> Result<CertifiedValue> {
    if cv.abs_error <= tol {
        Ok(cv)
    } else {
        Err(Error::Tolerance { requested: tol, attainable: cv.abs_error })
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::arg("tolerance must be positive and finite"));
    }
    Ok(())
}

/// `λ(x)` with absolute error at most `tol`.
pub fn lambda(sys: &CantorSystem, x: &SAryReal, tol: f64) -> Result<CertifiedValue> {
    lambda_with(sys, x, tol, Precision::High)
}

/// As [`lambda`]; `Precision::Double` never leaves the f64 tier.
pub fn lambda_with(sys: &CantorSystem, x: &SAryReal, tol: f64, precision: Precision) -> Result<CertifiedValue> {
    check_tol(tol)?;
    check_base(sys, x)?;
    if x.is_exact() {
        return certify_abs_with(sys, &lambda_term(sys, x)?, tol, precision);
    }
    let mut cv = CertifiedValue::from_interval(lambda_enclosure(sys, x, None)?);
    if cv.abs_error <= tol || precision == Precision::Double {
        return check_attained(cv, tol);
    }
    cv = CertifiedValue::from_interval(lambda_enclosure(sys, x, Some(LADDER[0]))?);
    if cv.abs_error <= tol {
        return Ok(cv);
    }
    Err(Error::Tolerance { requested: tol, attainable: cv.abs_error })
}

/// `λ(n) = (a_n + h(0)/(p-1))/n^α` at a positive integer.
pub fn lambda_at_integer(sys: &CantorSystem, n: &BigNat) -> Result<CertifiedValue> {
    if n.is_zero() {
        return Err(Error::arg("λ is defined for x > 0"));
    }
    let a = cantor_integer(sys, n)?;
    Ok(lambda_int_term(sys, &a, n).certify(sys, B_REL_ERROR, Precision::High))
}

/// The stage-`k` approximant, the bound `p^-k x^-α`, and whether
/// `|λ(x) - approx| ≤ bound` holds.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub k: usize,
    pub n_k: BigNat,
    pub approx: CertifiedValue,
    pub bound: CertifiedValue,
    /// Decided on exact coefficients: all three quantities share the factor `x^-α`.
    pub holds: Truth,
}

pub fn lambda_truncation_error(sys: &CantorSystem, x: &SAryReal, k: usize) -> Result<Truncation> {
    check_base(sys, x)?;
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if x.is_zero() {
        return Err(Error::arg("x must be positive"));
    }
    let n_k = x.floor_scaled(k).ok_or_else(|| Error::arg("k exceeds the known digits of x"))?;
    if n_k.is_zero() {
        return Err(Error::arg("s^k·x < 1: the stage is below the first Cantor integer"));
    }
    let pk = p_pow(sys, k);
    let c_approx = BigRational::from_integer(big(&cantor_integer(sys, &n_k)?)) / &pk;
    let c_bound = pk.recip();
    // λ(x) = N·p^-j·x^-α where x' = s^j x is the lifted point
    let (xl, j) = lift(x)?;
    let pj = p_pow(sys, j);
    let (c_lo, c_hi) = if x.is_exact() {
        let c = lambda_numerator(sys, &xl)? / &pj;
        (c.clone(), c)
    } else {
        let ds = xl.frac_digits();
        let a = BigRational::from_integer(big(&a_of(sys, xl.int_part())?)) + digit_sum(sys, ds);
        let lo = (&a + geometric_tail(sys, sys.h(0), ds.len())) / &pj;
        let hi = (&a + geometric_tail(sys, sys.h(sys.s() - 1), ds.len())) / &pj;
        (lo, hi)
    };
    let fits = |c: &BigRational| (c - &c_approx).abs() <= c_bound;
    let holds = match (fits(&c_lo), fits(&c_hi)) {
        (true, true) => Truth::True,
        // the coefficient range is an interval and fits is convex in it
        (false, false) if (&c_lo - &c_approx).signum() == (&c_hi - &c_approx).signum() => Truth::False,
        _ => Truth::Indeterminate,
    };
    let value_of = |c: BigRational| -> CertifiedValue {
        if x.is_exact() {
            let t = PowerTerm::over_power(c, x.to_rational().expect("exact"));
            t.certify(sys, B_REL_ERROR, Precision::High)
        } else {
            let lo = PowerTerm::over_power(c.clone(), x.upper_rational_bound()).enclose_double(sys);
            let hi = PowerTerm::over_power(c, x.lower_rational_bound()).enclose_double(sys);
            CertifiedValue::from_interval(Interval::new(lo.lo, hi.hi))
        }
    };
    Ok(Truncation { k, n_k, approx: value_of(c_approx.clone()), bound: value_of(c_bound.clone()), holds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    /// The one-sided jump is at most `jump_bound`.
    Continuous { jump_bound: f64 },
    /// The one-sided jump is at least `lower_bound > 0`.
    Jump { lower_bound: f64 },
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeStep {
    pub n: usize,
    pub y: SAryReal,
    pub lambda: CertifiedValue,
    /// Bound on `|λ(y) - λ(x±)|`.
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub side: Side,
    pub target: CertifiedValue,
    pub steps: Vec<ProbeStep>,
    pub verdict: Verdict,
    /// Classification from the digit criterion.
    pub predicted_continuous: bool,
}

fn check_unit_range(sys: &CantorSystem, x: &SAryReal) -> Result<()> {
    check_base(sys, x)?;
    if !x.int_part().is_zero() || x.digit(1).unwrap_or(0) == 0 {
        return Err(Error::arg("x must lie in [1/s, 1)"));
    }
    Ok(())
}

/// Whether `λ` is left-continuous at `x ∈ [1/s, 1)`. At `x = [0.d_1⋯d_N]`
/// this holds iff `h(0) = 0`, `h(s-1) = p-1` and `h(d_N) - h(d_N - 1) = 1`;
/// every other point is a point of left continuity. Right continuity holds
/// everywhere.
pub fn left_continuity_predicted(sys: &CantorSystem, x: &SAryReal) -> Result<bool> {
    check_unit_range(sys, x)?;
    if !x.is_exact() {
        return Err(Error::arg("the criterion needs an exact point"));
    }
    if !x.is_terminating() {
        return Ok(true);
    }
    let d = *x.frac_digits().last().expect("x ≥ 1/s has a digit") as u32;
    Ok(sys.h(0) == 0 && sys.h(sys.s() - 1) == sys.p() - 1 && sys.h(d) - sys.h(d - 1) == 1)
}

fn f64_up(q: &BigRational) -> f64 {
    hiprec::ratio_to_f64(q.numer().magnitude(), q.denom().magnitude(), true)
}

/// Evaluates `λ` along a one-sided approach sequence to `x` and bounds the
/// one-sided jump `λ(x±) - λ(x)`.
///
/// Each approach point `y_n` shares its first `n'` digits with the limit
/// (after lifting to `[1/s, 1)`), which gives
/// `|λ(y_n) - λ(x±)| ≤ p^(1-n') + α·p·s·|y_n - x|`.
pub fn continuity_probe(sys: &CantorSystem, x: &SAryReal, side: Side, depth: usize) -> Result<ContinuityReport> {
    check_unit_range(sys, x)?;
    if !x.is_exact() {
        return Err(Error::arg("continuity probes need an exact point"));
    }
    let predicted_continuous = match side {
        Side::Right => true,
        Side::Left => left_continuity_predicted(sys, x)?,
    };
    let xr = x.to_rational().expect("exact");
    let s = sys.s();
    let last_digit = if x.is_terminating() { x.frac_digits().len() } else { 0 };
    let first = match side {
        Side::Left if x.is_terminating() => last_digit + 1,
        _ => 1,
    };
    if depth < first {
        return Err(Error::arg(format!("depth must be at least {first}")));
    }
    let target = lambda(sys, x, 1e-14)?;
    let alpha_hi = sys.alpha_bounds().1;
    let one_over_s = rat(1, s);
    let mut steps = Vec::new();
    for n in first..=depth {
        let cell = rat(1, num_traits::pow(BigInt::from(s), n));
        let trunc = x.truncate(n).to_rational().expect("exact");
        let y = match side {
            Side::Right => (&xr + &trunc + &cell) / BigInt::from(2),
            Side::Left if x.is_terminating() => &xr - &cell,
            Side::Left => (&xr + &trunc) / BigInt::from(2),
        };
        // below 1/s the shared cell is that of s·y against s·x
        let (shift, lifted_gap) = if y < one_over_s {
            (1, (&xr - &y) * BigInt::from(s))
        } else {
            (0, (&xr - &y).abs())
        };
        let yd = SAryReal::from_rational(s, &y, DEFAULT_EXPANSION_CAP)?;
        let lambda_y = lambda(sys, &yd, 1e-14)?;
        let shared = (n - shift) as i32;
        let envelope = up(up((sys.p() as f64).powi(1 - shared)) + up(alpha_hi * (sys.p() * s) as f64 * f64_up(&lifted_gap)));
        steps.push(ProbeStep { n, y: yd, lambda: lambda_y, envelope });
    }
    let last = steps.last().expect("depth ≥ first");
    let g = last.lambda.interval().sub(target.interval());
    let e = last.envelope;
    let (j_lo, j_hi) = (g.lo - e, g.hi + e);
    // a true limit within the envelope leaves |J| ≤ 2E plus both rounding errors
    let resolution = e + last.lambda.abs_error + target.abs_error;
    let verdict = if j_lo > 0.0 {
        Verdict::Jump { lower_bound: j_lo }
    } else if j_hi < 0.0 {
        Verdict::Jump { lower_bound: -j_hi }
    } else if j_lo.abs().max(j_hi.abs()) <= 2.0 * resolution {
        Verdict::Continuous { jump_bound: up(j_lo.abs().max(j_hi.abs())) }
    } else {
        Verdict::Indeterminate
    };
    Ok(ContinuityReport { side, target, steps, verdict, predicted_continuous })
}

/// `0.[digits of n](01)^∞` in base `s`: a point of continuity whose `λ` is
/// within `O(1/n)` of `b_n`.
pub fn continuity_witness(s: u32, n: &BigNat) -> Result<SAryReal> {
    if n.is_zero() {
        return Err(Error::arg("n must be positive"));
    }
    SAryReal::new(s, BigNat::zero(), n.to_radix_be(s), vec![0, 1])
}

/// `λ(n)` for every `n ∈ [s^(k-1), s^k)`; by self-similarity these are the
/// values of `λ` on the grid `n/s^k`.
pub fn grid_lambda(sys: &CantorSystem, k: u32) -> Result<Vec<(u64, CertifiedValue)>> {
    let (start, end) = grid_range(sys, k)?;
    let fast = FastB::new(sys);
    let it = fast.iter(start, end - 1).ok_or_else(|| Error::budget(format!("level {k} exceeds machine-word evaluation")))?;
    Ok(it
        .map(|smp| {
            let v = match fast.enclose_lambda(smp.n, smp.a) {
                Some(iv) => CertifiedValue::from_interval(iv),
                None => lambda_int_term(sys, &BigNat::from(smp.a), &BigNat::from(smp.n)).certify(sys, B_REL_ERROR, Precision::High),
            };
            (smp.n, v)
        })
        .collect())
}

/// `[s^(k-1), s^k)` as machine words.
pub fn grid_range(sys: &CantorSystem, k: u32) -> Result<(u64, u64)> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    let s = sys.s() as u64;
    let end = s.checked_pow(k).ok_or_else(|| Error::budget(format!("s^{k} exceeds 64 bits")))?;
    if !FastB::new(sys).covers(end) {
        return Err(Error::budget(format!("level {k} exceeds machine-word evaluation")));
    }
    Ok((end / s, end))
}

/// f64 view of a rational, for reporting.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
