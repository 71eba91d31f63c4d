//! The `nttkit` command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | verification failure |
//! | 2 | usage or range error |
//! | 3 | not enough primes in the requested range |
//! | 4 | malformed input file |
//! | 5 | transform configuration does not parse or is invalid |
//! | 6 | input files do not match the parameters or each other |
//! | 7 | I/O error |

mod bench;
mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::NttError;
use crate::modarith::{find_ntt_primes, Prime};
use crate::rns::{
    batch_ntt_forward_in_place, batch_ntt_inverse_in_place, rns_polymul, Domain, ModulusChain,
    ParamFile, RnsPolynomial, DEFAULT_PRIME_BITS,
};
use crate::traffic;
use crate::transform::{OtConfig, TransformConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRIMES: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;
pub const EXIT_MISMATCH: i32 = 6;
pub const EXIT_IO: i32 = 7;

#[derive(Debug)]
enum CliError {
    Usage(String),
    VerifyFailed(usize),
    Ntt(NttError),
}

impl From<NttError> for CliError {
    fn from(e: NttError) -> Self {
        CliError::Ntt(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Ntt(NttError::Io(e))
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::VerifyFailed(_) => EXIT_VERIFY,
            CliError::Ntt(e) => match e {
                NttError::RangeExhausted { .. } => EXIT_PRIMES,
                NttError::Format(_) => EXIT_FORMAT,
                NttError::Config(_) => EXIT_CONFIG,
                NttError::ChainMismatch(_) => EXIT_MISMATCH,
                NttError::Io(_) => EXIT_IO,
                NttError::Internal(_) => EXIT_VERIFY,
                NttError::Domain(_) | NttError::SizeMismatch { .. } | NttError::Length(_) => {
                    EXIT_USAGE
                }
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(msg) => msg.clone(),
            CliError::VerifyFailed(n) => format!("{n} verification check(s) failed"),
            CliError::Ntt(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "nttkit", version, about = "Negacyclic NTT and RNS polynomial toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct Threads {
    /// Worker threads for per-prime rows.
    #[arg(long, env = "NTT_THREADS", default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a parameter file: NTT-friendly primes in [2^59, 2^60) and their roots.
    GenParams {
        #[arg(long)]
        logn: u32,
        #[arg(long)]
        np: usize,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forward or inverse transform of every row of a polynomial file.
    Ntt {
        #[arg(long)]
        params: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// radix2 | stockham | highradix:R | twopass:N1xN2:PT[+ot:B:S]
        #[arg(long, default_value = "radix2")]
        algo: String,
        #[arg(long)]
        inverse: bool,
        /// On-the-fly twiddling as BASE:STAGES.
        #[arg(long)]
        ot: Option<String>,
        #[command(flatten)]
        threads: Threads,
    },
    /// Negacyclic product of two coefficient-domain polynomial files.
    Polymul {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "radix2")]
        algo: String,
        #[command(flatten)]
        threads: Threads,
    },
    /// Run the built-in correctness suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        /// Corrupts one twiddle companion before running (self-test of the suite).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Time forward transforms over a seeded random input.
    Bench {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "radix2,stockham,highradix:16,twopass:auto:8")]
        algos: Vec<String>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        threads: Threads,
    },
    /// Modeled memory traffic per configuration.
    Traffic {
        /// A single log2(N) or an inclusive range such as 14..17.
        #[arg(long, default_value = "17")]
        logn: String,
        #[arg(long, default_value_t = 21)]
        np: usize,
        #[arg(long, value_delimiter = ',', default_value = "twopass:auto:8+ot:1024:2")]
        config: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Count twiddles without their Shoup companions.
        #[arg(long)]
        no_companions: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum Level {
    Quick,
    Full,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::GenParams { logn, np, out } => gen_params(logn, np, out.as_deref()),
        Command::Ntt {
            params,
            input,
            out,
            algo,
            inverse,
            ot,
            threads,
        } => ntt(&params, &input, &out, &algo, inverse, ot.as_deref(), workers(threads)?),
        Command::Polymul {
            params,
            a,
            b,
            out,
            algo,
            threads,
        } => polymul(&params, &a, &b, &out, &algo, workers(threads)?),
        Command::Verify {
            level,
            inject_fault,
        } => {
            let failed = verify::run(level, inject_fault, &mut io::stdout().lock())?;
            if failed > 0 {
                return Err(CliError::VerifyFailed(failed));
            }
            Ok(())
        }
        Command::Bench {
            params,
            algos,
            reps,
            csv,
            seed,
            threads,
        } => {
            if reps == 0 {
                return Err(CliError::Usage("--reps must be at least 1".into()));
            }
            let chain = load_params(&params)?;
            let configs = algos
                .iter()
                .map(|token| resolve_config(token, chain.n()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let records = bench::run(&chain, &configs, reps, seed, workers(threads)?)?;
            write_output(csv.as_deref(), |w| bench::write_csv(&records, w))
        }
        Command::Traffic {
            logn,
            np,
            config,
            csv,
            no_companions,
        } => {
            let (lo, hi) = parse_logn_range(&logn)?;
            let mut reports = Vec::new();
            for l in lo..=hi {
                let n = 1usize << l;
                for token in &config {
                    let cfg = resolve_config(token, n)?;
                    reports.push(traffic::model(&cfg, n, np, !no_companions)?);
                }
            }
            write_output(csv.as_deref(), |w| traffic::write_csv(&reports, w))
        }
    }
}

fn workers(threads: Threads) -> CliResult<usize> {
    if threads.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(threads.threads)
}

/// Parses a config token for size `n`. `twopass:auto:PT` picks the split
/// `2^⌊L/2⌋ x 2^⌈L/2⌉`.
fn resolve_config(token: &str, n: usize) -> CliResult<TransformConfig> {
    let token = if token.contains(":auto:") {
        let l = n.trailing_zeros();
        let n1 = 1usize << (l / 2);
        token.replacen(":auto:", &format!(":{n1}x{}:", n / n1), 1)
    } else {
        token.to_string()
    };
    let config: TransformConfig = token.parse()?;
    config.validate(n)?;
    Ok(config)
}

fn parse_logn_range(text: &str) -> CliResult<(u32, u32)> {
    let bad = || CliError::Usage(format!("--logn expects L or LO..HI with 1 <= L <= 17, got {text:?}"));
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let l = text.trim().parse().map_err(|_| bad())?;
            (l, l)
        }
    };
    if lo < 1 || hi > 17 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn write_output<F>(path: Option<&Path>, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> crate::Result<()>,
{
    match path {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            body(&mut file)?;
            file.flush()?;
        }
        None => body(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn gen_params(logn: u32, np: usize, out: Option<&Path>) -> CliResult<()> {
    if !(2..=17).contains(&logn) {
        return Err(CliError::Usage(format!("--logn must be in 2..=17, got {logn}")));
    }
    if !(1..=64).contains(&np) {
        return Err(CliError::Usage(format!("--np must be in 1..=64, got {np}")));
    }
    let n = 1usize << logn;
    let (lo, hi) = DEFAULT_PRIME_BITS;
    let primes = find_ntt_primes(n, np, lo, hi)?;
    let params = ParamFile {
        n,
        primes: primes.iter().map(Prime::p).collect(),
        psi: primes.iter().map(Prime::psi).collect(),
    };
    write_output(out, |w| Ok(w.write_all(params.to_json().as_bytes())?))
}

fn load_params(path: &Path) -> CliResult<ModulusChain> {
    let text = fs::read_to_string(path)?;
    Ok(ParamFile::from_json(&text)?.to_chain()?)
}

fn load_poly(path: &Path, chain: &ModulusChain) -> CliResult<RnsPolynomial> {
    let bytes = fs::read(path)?;
    let poly = RnsPolynomial::read_from(bytes.as_slice())?;
    poly.check_chain(chain)?;
    Ok(poly)
}

fn save_poly(path: &Path, poly: &RnsPolynomial) -> CliResult<()> {
    let mut bytes = Vec::new();
    poly.write_to(&mut bytes)?;
    fs::write(path, bytes)?;
    Ok(())
}

fn parse_ot(text: &str) -> CliResult<OtConfig> {
    let bad = || NttError::Config(format!("--ot expects BASE:STAGES, got {text:?}"));
    let (base, stages) = text.split_once(':').ok_or_else(bad)?;
    Ok(OtConfig {
        base: base.parse().map_err(|_| bad())?,
        stages: stages.parse().map_err(|_| bad())?,
    })
}

fn ntt(
    params: &Path,
    input: &Path,
    out: &Path,
    algo: &str,
    inverse: bool,
    ot: Option<&str>,
    workers: usize,
) -> CliResult<()> {
    let chain = load_params(params)?;
    let mut config = resolve_config(algo, chain.n())?;
    if let Some(ot) = ot {
        config.ot = Some(parse_ot(ot)?);
        config.validate(chain.n())?;
    }
    let mut poly = load_poly(input, &chain)?;
    if inverse {
        batch_ntt_inverse_in_place(&mut poly, &chain, workers)?;
    } else {
        if poly.domain() != Domain::Coefficient {
            return Err(CliError::Usage("input is already in the NTT domain".into()));
        }
        let chain = match config.ot {
            Some(o) => chain.with_ot(o.base, o.stages)?,
            None => chain,
        };
        batch_ntt_forward_in_place(&mut poly, &chain, &config, workers)?;
    }
    save_poly(out, &poly)
}

fn polymul(
    params: &Path,
    a: &Path,
    b: &Path,
    out: &Path,
    algo: &str,
    workers: usize,
) -> CliResult<()> {
    let chain = load_params(params)?;
    let config = resolve_config(algo, chain.n())?;
    let a = load_poly(a, &chain)?;
    let b = load_poly(b, &chain)?;
    let c = rns_polymul(&a, &b, &chain, &config, workers)?;
    save_poly(out, &c)
}
