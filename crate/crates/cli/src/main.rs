//! `cantor`: experiments on generalized Cantor integers and the
//! distribution of `b_n = a_n / n^(log_s p)`.

mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use cantor_core::linearcase::LinearSystem;
use cantor_core::measure::DEFAULT_ATOM_CAP;
use cantor_core::{CantorSystem, Error, Precision};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "cantor", version, about = "Generalized Cantor integers and the distribution of b_n")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Digit system `p=<p>;A=<d0>,<d1>,...`.
    #[arg(long, global = true, conflicts_with_all = ["q", "r", "p"])]
    sys: Option<String>,
    /// Linear system slope: digits `q·i + r`.
    #[arg(long, global = true, requires_all = ["r", "p"])]
    q: Option<u32>,
    #[arg(long, global = true, requires_all = ["q", "p"])]
    r: Option<u32>,
    #[arg(long, global = true, requires_all = ["q", "r"])]
    p: Option<u32>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Arithmetic tier for `seq` and `lambda`.
    #[arg(long, global = true, value_enum, default_value_t = Tier::High)]
    precision: Tier,
    /// Largest atom count for `ifs`.
    #[arg(long, global = true, default_value_t = DEFAULT_ATOM_CAP)]
    cap_atoms: u64,
    /// Largest number of sequence terms any scan may touch.
    #[arg(long, global = true, default_value_t = 100_000_000)]
    cap_scan: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Tier {
    Double,
    High,
}

impl From<Tier> for Precision {
    fn from(t: Tier) -> Precision {
        match t {
            Tier::Double => Precision::Double,
            Tier::High => Precision::High,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Terms `(n, a_n, b_n)` for `n = start, ..., start + count - 1`.
    Seq {
        #[arg(long)]
        count: u64,
        #[arg(long, default_value = "1")]
        start: String,
    },
    /// Certified extrema of `b_n` over `1 ≤ n ≤ limit`.
    Extrema {
        #[arg(long)]
        limit: u64,
    },
    /// Checks `b_{sn+s-1} < b_n` for `n ≤ limit`.
    Descent {
        #[arg(long)]
        limit: u64,
    },
    /// A subsequence `b_{n_k} → γ`.
    Dense {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// `λ(x)`; `x` is `num/den` or an s-ary literal such as `0.1(01)`.
    Lambda {
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = cantor_core::limitfn::DEFAULT_TOL)]
        tol: f64,
    },
    /// The distribution function of the Cantor measure, at a point or on a grid.
    Measure {
        /// `num/den` or a decimal in `[0, 1]`.
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        x: Option<String>,
        /// Tabulate at `i/grid` for `i = 0, ..., grid`.
        #[arg(long)]
        grid: Option<u32>,
        #[arg(long, default_value_t = cantor_core::limitfn::DEFAULT_TOL)]
        tol: f64,
    },
    /// Atoms of the level-`k` iterate of the digit IFS.
    Ifs {
        #[arg(long)]
        k: u32,
    },
    /// The accumulation point `x / y^α` for a p-ary point `x` of the Cantor set.
    Accpoint {
        /// p-ary digits such as `0.2` or `p-ary:0.2(02)`.
        #[arg(long)]
        digits: String,
        #[arg(long, default_value_t = cantor_core::limitfn::DEFAULT_TOL)]
        tol: f64,
    },
    /// `D(X, α)/X` along `X = s^k·hi` for two windows on either side of `α`.
    Cdf {
        #[arg(long)]
        alpha: f64,
        /// Centre of the window where `λ < α`.
        #[arg(long)]
        x1: String,
        #[arg(long)]
        eta1: String,
        /// Centre of the window where `λ > α`.
        #[arg(long)]
        x2: String,
        #[arg(long)]
        eta2: String,
        #[arg(long, default_value_t = 8)]
        kmin: u32,
        #[arg(long, default_value_t = 14)]
        kmax: u32,
    },
    /// Empirical and grid values of the logarithmic distribution.
    Ldf {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 2)]
        kmin: u32,
        #[arg(long)]
        kmax: u32,
    },
    /// Grid measure of `{|λ - α| < ε}`.
    Levelset {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        k: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Exact `m = liminf b_n` and `M = limsup b_n` of a linear system.
    Bounds,
    /// Checks `b_{s^(k+1)-1} ≤ b_n ≤ b_{s^k}` on each dyadic block.
    Envelope {
        #[arg(long, default_value_t = 1)]
        kmin: u32,
        #[arg(long)]
        kmax: u32,
    },
}

/// Everything a command needs besides its own arguments.
pub struct Ctx {
    pub sys: CantorSystem,
    pub linear: Option<LinearSystem>,
    pub format: Format,
    pub precision: Precision,
    pub cap_atoms: u64,
    pub cap_scan: u64,
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn context(g: &Global) -> Result<Ctx, Error> {
    let (sys, linear) = match (&g.sys, g.q, g.r, g.p) {
        (Some(text), ..) => {
            let sys: CantorSystem = text.parse()?;
            let linear = LinearSystem::from_cantor(&sys);
            (sys, linear)
        }
        (None, Some(q), Some(r), Some(p)) => {
            let ls = LinearSystem::new(q, r, p)?;
            (ls.system().clone(), Some(ls))
        }
        _ => return Err(Error::InvalidArgument("give --sys or all of --q, --r, --p".into())),
    };
    Ok(Ctx { sys, linear, format: g.format, precision: g.precision.into(), cap_atoms: g.cap_atoms, cap_scan: g.cap_scan })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = context(&cli.global)?;
    let out: Box<dyn Write> = match &cli.global.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    commands::dispatch(&ctx, cli.command, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("cantor: {e}");
            match e {
                Error::Budget(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("cantor: {e}");
            ExitCode::from(1)
        }
    }
}
