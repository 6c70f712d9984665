//! One function per subcommand.

use std::io::Write;

use cantor_core::digits::cantor_integer;
use cantor_core::distribution::{cdf_oscillation, distribution_report, level_set_probe, Window};
use cantor_core::limitfn::{lambda_with, rational_to_f64};
use cantor_core::linearcase::{check_dyadic_envelope, exact_bounds, LinearSystem};
use cantor_core::measure::{accumulation_map, ifs_iterate, mu_cdf, CPoint};
use cantor_core::sary::SAryReal;
use cantor_core::sequence::{b_term, density_subsequence, scan_descent, scan_extrema, FastB};
use cantor_core::{BigNat, BigRational, CertifiedValue, Error, Precision};

use crate::output::{record, scalar, Cell, Table};
use crate::{Command, Ctx, Failure};

type Out = Box<dyn Write>;
type Res = Result<(), Failure>;

/// Relative error requested for `b_n` in `seq`.
const SEQ_REL: f64 = 8.881784197001252e-16; // 2^-50

pub fn dispatch(ctx: &Ctx, cmd: Command, out: Out) -> Res {
    match cmd {
        Command::Seq { count, start } => seq(ctx, out, count, &start),
        Command::Extrema { limit } => extrema(ctx, out, limit),
        Command::Descent { limit } => descent(ctx, out, limit),
        Command::Dense { gamma, k } => dense(ctx, out, gamma, k),
        Command::Lambda { x, tol } => lambda_cmd(ctx, out, &x, tol),
        Command::Measure { x, grid, tol } => measure(ctx, out, x.as_deref(), grid, tol),
        Command::Ifs { k } => ifs(ctx, out, k),
        Command::Accpoint { digits, tol } => accpoint(ctx, out, &digits, tol),
        Command::Cdf { alpha, x1, eta1, x2, eta2, kmin, kmax } => cdf(ctx, out, alpha, [&x1, &eta1, &x2, &eta2], kmin..=kmax),
        Command::Ldf { alpha, kmin, kmax } => ldf(ctx, out, alpha, kmin, kmax),
        Command::Levelset { alpha, k, eps } => levelset(ctx, out, alpha, k, &eps),
        Command::Bounds => bounds(ctx, out),
        Command::Envelope { kmin, kmax } => envelope(ctx, out, kmin, kmax),
    }
}

fn budget(ctx: &Ctx, terms: u64, what: &str) -> Result<(), Error> {
    if terms > ctx.cap_scan {
        return Err(Error::Budget(format!("{what} needs {terms} terms, --cap-scan is {}", ctx.cap_scan)));
    }
    Ok(())
}

/// `s^k` checked against 64 bits and the scan cap.
fn level_size(ctx: &Ctx, k: u32) -> Result<u64, Error> {
    let n = (ctx.sys.s() as u64).checked_pow(k).ok_or_else(|| Error::Budget(format!("s^{k} exceeds 64 bits")))?;
    budget(ctx, n, &format!("level {k}"))?;
    Ok(n)
}

/// `num/den` or a decimal literal.
fn rational(text: &str) -> Result<BigRational, Error> {
    SAryReal::parse(10, text)?.to_rational().ok_or_else(|| Error::Parse(format!("{text:?} is not an exact rational")))
}

fn linear(ctx: &Ctx) -> Result<&LinearSystem, Error> {
    ctx.linear.as_ref().ok_or_else(|| Error::InvalidArgument(format!("{} has no linear digit map q·i + r", ctx.sys)))
}

fn certified_b(ctx: &Ctx, a: &BigNat, n: &BigNat) -> CertifiedValue {
    b_term(a, n).certify(&ctx.sys, SEQ_REL, ctx.precision)
}

fn seq(ctx: &Ctx, out: Out, count: u64, start: &str) -> Res {
    let start: BigNat = start.parse().map_err(|e| Error::Parse(format!("start: {e}")))?;
    if start == BigNat::from(0u32) {
        return Err(Error::InvalidArgument("start must be at least 1".into()).into());
    }
    budget(ctx, count, "seq")?;
    let mut t = Table::new(out, ctx.format, &["n", "a_n", "b_n", "err"])?;
    let fast = FastB::new(&ctx.sys);
    let last = &start + count.saturating_sub(1);
    let range = match (u64::try_from(&start), u64::try_from(&last)) {
        (Ok(s), Ok(e)) if count > 0 => fast.iter(s, e),
        _ => None,
    };
    if let Some(it) = range {
        for smp in it {
            let mut v = CertifiedValue::from_interval(smp.b);
            if ctx.precision == Precision::High && v.abs_error > SEQ_REL * v.value {
                v = certified_b(ctx, &BigNat::from(smp.a), &BigNat::from(smp.n));
            }
            t.row(&[Cell::int(smp.n), Cell::int(smp.a), Cell::Float(v.value), Cell::Float(v.abs_error)])?;
        }
    } else {
        let mut n = start;
        for _ in 0..count {
            let a = cantor_integer(&ctx.sys, &n)?;
            let v = certified_b(ctx, &a, &n);
            t.row(&[Cell::int(&n), Cell::int(&a), Cell::Float(v.value), Cell::Float(v.abs_error)])?;
            n += 1u32;
        }
    }
    Ok(t.finish()?)
}

fn extrema(ctx: &Ctx, out: Out, limit: u64) -> Res {
    budget(ctx, limit, "extrema")?;
    let r = scan_extrema(&ctx.sys, limit)?;
    let (m, mm) = match &r.exact {
        Some((m, mm)) => (Cell::text(m), Cell::text(mm)),
        None => (Cell::text(""), Cell::text("")),
    };
    record(
        out,
        ctx.format,
        &[
            ("limit", Cell::int(r.limit)),
            ("min_n", Cell::int(r.min_n)),
            ("min", Cell::Float(r.min.value)),
            ("min_err", Cell::Float(r.min.abs_error)),
            ("max_n", Cell::int(r.max_n)),
            ("max", Cell::Float(r.max.value)),
            ("max_err", Cell::Float(r.max.abs_error)),
            ("m", m),
            ("M", mm),
            ("unresolved", Cell::int(r.unresolved)),
        ],
    )?;
    Ok(())
}

fn descent(ctx: &Ctx, out: Out, limit: u64) -> Res {
    budget(ctx, limit.saturating_mul(ctx.sys.s() as u64), "descent")?;
    let r = scan_descent(&ctx.sys, limit)?;
    record(
        out,
        ctx.format,
        &[("limit", Cell::int(r.limit)), ("n0", Cell::int(r.n0)), ("failures", Cell::int(r.failures)), ("indeterminate", Cell::int(r.indeterminate))],
    )?;
    Ok(())
}

fn dense(ctx: &Ctx, out: Out, gamma: f64, k: usize) -> Res {
    let run = density_subsequence(&ctx.sys, gamma, k, ctx.cap_scan)?;
    let mut t = Table::new(out, ctx.format, &["step", "n", "b_n", "err", "dist"])?;
    for (i, (n, v)) in run.terms.iter().enumerate() {
        t.row(&[Cell::int(i + 1), Cell::int(n), Cell::Float(v.value), Cell::Float(v.abs_error), Cell::Float((v.value - gamma).abs())])?;
    }
    Ok(t.finish()?)
}

fn lambda_cmd(ctx: &Ctx, out: Out, x: &str, tol: f64) -> Res {
    let xs = SAryReal::parse(ctx.sys.s(), x)?;
    let v = lambda_with(&ctx.sys, &xs, tol, ctx.precision)?;
    scalar(out, ctx.format, &[("x", Cell::text(&xs))], &v)?;
    Ok(())
}

fn measure(ctx: &Ctx, out: Out, x: Option<&str>, grid: Option<u32>, tol: f64) -> Res {
    if let Some(x) = x {
        let q = rational(x)?;
        let v = mu_cdf(&ctx.sys, &q, tol)?;
        scalar(out, ctx.format, &[("x", Cell::text(&q))], &v)?;
        return Ok(());
    }
    let n = grid.expect("clap requires --x or --grid");
    if n == 0 {
        return Err(Error::InvalidArgument("grid must be at least 1".into()).into());
    }
    let mut t = Table::new(out, ctx.format, &["x", "mu_cdf", "err"])?;
    for i in 0..=n {
        let q = BigRational::new(i.into(), n.into());
        let v = mu_cdf(&ctx.sys, &q, tol)?;
        t.row(&[Cell::text(&q), Cell::Float(v.value), Cell::Float(v.abs_error)])?;
    }
    Ok(t.finish()?)
}

fn ifs(ctx: &Ctx, out: Out, k: u32) -> Res {
    let m = ifs_iterate(&ctx.sys, k, ctx.cap_atoms)?;
    let den = m.denominator();
    let w = m.weight();
    let mut t = Table::new(out, ctx.format, &["x", "x_float", "weight"])?;
    for &num in m.numerators() {
        let q = BigRational::new(num.into(), den.into());
        t.row(&[Cell::text(&q), Cell::Float(rational_to_f64(&q)), Cell::Float(w)])?;
    }
    Ok(t.finish()?)
}

fn accpoint(ctx: &Ctx, out: Out, digits: &str, tol: f64) -> Res {
    let text = if digits.trim_start().starts_with("p-ary:") { digits.to_string() } else { format!("p-ary:{digits}") };
    let x = CPoint::parse(&ctx.sys, &text)?;
    let v = accumulation_map(&ctx.sys, &x, tol)?;
    let mu = x.preimage(&ctx.sys)?.to_rational().expect("exact preimage");
    scalar(out, ctx.format, &[("x", Cell::text(&x)), ("x_exact", Cell::text(x.value(&ctx.sys))), ("mu", Cell::text(mu))], &v)?;
    Ok(())
}

fn cdf(ctx: &Ctx, out: Out, alpha: f64, w: [&String; 4], ks: std::ops::RangeInclusive<u32>) -> Res {
    let window = |c: &str, e: &str| -> Result<Window, Error> {
        let (c, e) = (rational(c)?, rational(e)?);
        Window::new(&c - &e, c + e)
    };
    let (w1, w2) = (window(w[0], w[1])?, window(w[2], w[3])?);
    let top = level_size(ctx, *ks.end())?;
    let hi = w1.hi.clone().max(w2.hi.clone());
    budget(ctx, (rational_to_f64(&hi) * top as f64).ceil() as u64, "cdf")?;
    let r = cdf_oscillation(&ctx.sys, alpha, &w1, &w2, ks)?;
    let cols = ["k", "x1", "ratio_below", "x2", "ratio_above", "gap", "w1_sup", "w2_inf"];
    let mut t = Table::new(out, ctx.format, &cols)?;
    for row in &r.rows {
        t.row(&[
            Cell::int(row.k),
            Cell::int(row.below.x),
            Cell::Float(row.ratio_below()),
            Cell::int(row.above.x),
            Cell::Float(row.ratio_above()),
            Cell::Float(row.gap()),
            Cell::Float(r.window_sup.sup),
            Cell::Float(r.window_inf.inf),
        ])?;
    }
    Ok(t.finish()?)
}

fn ldf(ctx: &Ctx, out: Out, alpha: f64, kmin: u32, kmax: u32) -> Res {
    if kmin < 2 || kmin > kmax {
        return Err(Error::InvalidArgument("need 2 ≤ kmin ≤ kmax".into()).into());
    }
    level_size(ctx, kmax)?;
    let r = distribution_report(&ctx.sys, alpha, kmin..=kmax)?;
    let cols = ["k", "x", "alpha", "D_ratio", "L_empirical", "L_analytic", "L_err", "L_window"];
    let mut t = Table::new(out, ctx.format, &cols)?;
    for row in &r.rows {
        t.row(&[
            Cell::int(row.k),
            Cell::int(row.x),
            Cell::Float(row.alpha),
            Cell::Float(row.d_ratio),
            Cell::Float(row.l_empirical),
            Cell::Float(row.l_analytic.value),
            Cell::Float(row.l_analytic.abs_error),
            Cell::Float(row.l_window),
        ])?;
    }
    Ok(t.finish()?)
}

fn levelset(ctx: &Ctx, out: Out, alpha: f64, k: u32, eps: &[f64]) -> Res {
    level_size(ctx, k)?;
    let mut t = Table::new(out, ctx.format, &["k", "alpha", "eps", "hits", "undecided", "estimate"])?;
    for &e in eps {
        let r = level_set_probe(&ctx.sys, alpha, k, e)?;
        t.row(&[Cell::int(r.k), Cell::Float(alpha), Cell::Float(r.eps), Cell::int(r.hits), Cell::int(r.undecided), Cell::Float(r.estimate)])?;
    }
    Ok(t.finish()?)
}

fn bounds(ctx: &Ctx, out: Out) -> Res {
    let ls = linear(ctx)?;
    let (m, mm) = exact_bounds(ls);
    record(
        out,
        ctx.format,
        &[("m", Cell::text(m)), ("M", Cell::text(mm)), ("s", Cell::int(ls.s())), ("A", Cell::List(ctx.sys.digit_set().to_vec()))],
    )?;
    Ok(())
}

fn envelope(ctx: &Ctx, out: Out, kmin: u32, kmax: u32) -> Res {
    let ls = linear(ctx)?;
    if kmin > kmax {
        return Err(Error::InvalidArgument("need kmin ≤ kmax".into()).into());
    }
    let cols = ["k", "upper", "upper_err", "lower", "lower_err", "scanned", "violations", "indeterminate", "holds"];
    let mut t = Table::new(out, ctx.format, &cols)?;
    for k in kmin..=kmax {
        let r = check_dyadic_envelope(ls, k, ctx.cap_scan)?;
        t.row(&[
            Cell::int(r.k),
            Cell::Float(r.upper.value),
            Cell::Float(r.upper.abs_error),
            Cell::Float(r.lower.value),
            Cell::Float(r.lower.abs_error),
            Cell::int(r.scanned),
            Cell::int(r.violations),
            Cell::int(r.indeterminate),
            Cell::Bool(r.holds()),
        ])?;
    }
    Ok(t.finish()?)
}
