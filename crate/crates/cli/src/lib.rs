//! Command line front end: parameter parsing, dispatch and CSV/PGM output.
//!
//! Exit codes: 0 on success, 2 on argument errors (including out-of-range
//! values and unwritable output paths), 1 on internal failures and on a
//! failed `compare` tolerance gate.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use entrain::dynamics::{rotation_number_with, LiftedMap};
use entrain::forcing::{FourierSeries, SeasonalForcing};
use entrain::normalform::{map_to_general, predicted_boundaries};
use entrain::scanner::{
    format_float, measure_width, scan, AxisSpec, Param, ScanGrid, ScanSpec,
};
use entrain::{OscillatorParams64, Result as CoreResult};

/// Inclusive axis specification `lo:hi:n`.
#[derive(Debug, Clone, Copy)]
pub struct AxisArg {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FromStr for AxisArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got `{s}`"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("bad lo in `{s}`: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("bad hi in `{s}`: {e}"))?;
        let n: usize = parts[2].parse().map_err(|e| format!("bad n in `{s}`: {e}"))?;
        Ok(AxisArg { lo, hi, n })
    }
}

/// One Fourier coefficient of the oscillator nonlinearity, `k:re:im`.
/// The conjugate partner at `-k` is implied.
#[derive(Debug, Clone, Copy)]
pub struct FCoefArg {
    pub k: i32,
    pub re: f64,
    pub im: f64,
}

impl FromStr for FCoefArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected k:re:im, got `{s}`"));
        }
        Ok(FCoefArg {
            k: parts[0].parse().map_err(|e| format!("bad k in `{s}`: {e}"))?,
            re: parts[1].parse().map_err(|e| format!("bad re in `{s}`: {e}"))?,
            im: parts[2].parse().map_err(|e| format!("bad im in `{s}`: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Pgm,
}

/// Oscillator and forcing parameters shared by every subcommand.
#[derive(Debug, Args)]
struct CommonArgs {
    /// Resonance numerator of omega = p/q + sigma
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Resonance denominator
    #[arg(long, default_value_t = 1)]
    q: u32,
    /// Oscillator nonlinearity strength
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Gaussian smoothing width of the block forcing
    #[arg(long, default_value_t = 50.0)]
    alpha: f64,
    /// Perturbation amplitude of the forcing family (0 = pure block)
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Fourier truncation order of the forcing
    #[arg(long, default_value_t = 64)]
    kmax: u32,
    /// RK4 steps per forcing period
    #[arg(long, default_value_t = 512)]
    steps: u32,
    /// Nonlinearity coefficient k:re:im (repeatable; conjugate at -k
    /// implied; default f = sin(2 pi psi))
    #[arg(long = "fcoef", value_name = "K:RE:IM", allow_hyphen_values = true)]
    fcoef: Vec<FCoefArg>,
    /// Output path (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn f_series(&self) -> CoreResult<FourierSeries<f64>> {
        if self.fcoef.is_empty() {
            return Ok(FourierSeries::sin());
        }
        let mut terms = Vec::new();
        for c in &self.fcoef {
            let z = Complex64::new(c.re, c.im);
            terms.push((c.k, z));
            if c.k != 0 {
                terms.push((-c.k, z.conj()));
            }
        }
        FourierSeries::new(terms, true)
    }

    fn params(&self, sigma: f64, eps: f64, lambda: f64) -> CoreResult<OscillatorParams64> {
        let forcing = SeasonalForcing::new(lambda, self.alpha, self.kmax, self.beta)?;
        OscillatorParams64::new(
            self.p,
            self.q,
            sigma,
            self.eta,
            eps,
            forcing,
            self.f_series()?,
            self.steps,
        )
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "entrain",
    about = "Entrainment ranges and stability pockets of a seasonally forced phase oscillator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the forcing Fourier coefficients as CSV rows (k, re, im, modulus)
    Coeffs {
        #[command(flatten)]
        common: CommonArgs,
        /// Daylight fraction in [0, 1]
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
    },
    /// Tabulate one Poincare map lift x0 -> F(x0)
    Map {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        /// Sample grid for the initial phase
        #[arg(long, default_value = "0:1:129", allow_hyphen_values = true)]
        x0: AxisArg,
    },
    /// Print the rotation number at one parameter point
    Rotation {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        /// Initial phase of the iteration
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        /// Iterates in the rotation average
        #[arg(long, default_value_t = 4096)]
        iters: u32,
    },
    /// Raster scan of the (sigma, eps) plane
    ScanTongues {
        #[command(flatten)]
        common: CommonArgs,
        /// Detuning axis lo:hi:n
        #[arg(long, default_value = "-0.1:0.1:201", allow_hyphen_values = true)]
        sigma: AxisArg,
        /// Forcing-strength axis lo:hi:n
        #[arg(long, default_value = "0:0.2:201")]
        eps: AxisArg,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 4096)]
        iters: u32,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Worker threads (defaults to the rayon global pool)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Raster scan of the (omega, lambda) plane
    ScanPockets {
        #[command(flatten)]
        common: CommonArgs,
        /// Frequency axis lo:hi:n
        #[arg(long, default_value = "0.9:1.1:201", allow_hyphen_values = true)]
        omega: AxisArg,
        /// Seasonal axis lo:hi:n (clamped to [0, 1])
        #[arg(long, default_value = "0:1:201")]
        lambda: AxisArg,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 4096)]
        iters: u32,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Normal-form boundary prediction per season: CSV rows
    /// (lambda, sigma_lo, sigma_hi, mu, delta)
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        /// Seasonal axis lo:hi:n
        #[arg(long, default_value = "0:1:101")]
        lambda: AxisArg,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Predicted vs measured widths with a scriptable tolerance gate
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Seasonal axis lo:hi:n
        #[arg(long, default_value = "0.1:0.9:9")]
        lambda: AxisArg,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Maximum allowed relative width error
        #[arg(long, default_value_t = 0.15)]
        tol: f64,
    },
}

/// Parses `argv` and runs one subcommand, returning the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; keep clap's exit semantics.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("entrain: {e}");
            2
        }
    }
}

enum Output {
    Text(String),
    Binary(Vec<u8>),
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Coeffs { common, lambda } => {
            let forcing = SeasonalForcing::new(lambda, common.alpha, common.kmax, common.beta)?;
            let mut csv = String::from("k,re,im,modulus\n");
            let kmax = common.kmax as i32;
            for k in -kmax..=kmax {
                let c = forcing.coeff(k);
                let _ = writeln!(
                    csv,
                    "{k},{},{},{}",
                    format_float(c.re),
                    format_float(c.im),
                    format_float(c.norm())
                );
            }
            emit(&common.out, Output::Text(csv))
        }
        Command::Map { common, sigma, eps, lambda, x0 } => {
            let params = common.params(sigma, eps, lambda)?;
            let map = LiftedMap::new(&params);
            let mut csv = String::from("x0,fx\n");
            for i in 0..x0.n {
                let x = x0.lo + (x0.hi - x0.lo) * i as f64 / (x0.n - 1).max(1) as f64;
                let _ = writeln!(csv, "{},{}", format_float(x), format_float(map.map(x)));
            }
            emit(&common.out, Output::Text(csv))
        }
        Command::Rotation { common, sigma, eps, lambda, x0, iters } => {
            let params = common.params(sigma, eps, lambda)?;
            let map = LiftedMap::new(&params);
            let rho = rotation_number_with(&map, x0, iters);
            emit(&common.out, Output::Text(format!("rho\n{}\n", format_float(rho))))
        }
        Command::ScanTongues { common, sigma, eps, lambda, iters, format, jobs } => {
            let base = common.params(0.0, 0.1, lambda)?;
            let spec = ScanSpec::new(
                AxisSpec::new(Param::Sigma, sigma.lo, sigma.hi, sigma.n)?,
                AxisSpec::new(Param::Eps, eps.lo, eps.hi, eps.n)?,
                iters,
            )?;
            let grid = run_scan(&spec, &base, jobs)?;
            emit_grid(&common.out, &grid, format)
        }
        Command::ScanPockets { common, omega, lambda, eps, iters, format, jobs } => {
            let base = common.params(0.0, eps, 0.5)?;
            let spec = ScanSpec::new(
                AxisSpec::new(Param::Omega, omega.lo, omega.hi, omega.n)?,
                AxisSpec::new(Param::Lambda, lambda.lo, lambda.hi, lambda.n)?,
                iters,
            )?;
            let grid = run_scan(&spec, &base, jobs)?;
            emit_grid(&common.out, &grid, format)
        }
        Command::Predict { common, lambda, eps } => {
            let base = common.params(0.0, eps, 0.5)?;
            let mut csv = String::from("lambda,sigma_lo,sigma_hi,mu,delta\n");
            for i in 0..lambda.n {
                let l = axis_value(&lambda, i).clamp(0.0, 1.0);
                let (lo, hi) = predicted_boundaries(&base, l);
                let (delta, mu) = map_to_general(&base.with_lambda(l)?);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    format_float(l),
                    format_float(lo),
                    format_float(hi),
                    format_float(mu),
                    format_float(delta)
                );
            }
            emit(&common.out, Output::Text(csv))
        }
        Command::Compare { common, lambda, eps, tol } => {
            let base = common.params(0.0, eps, 0.5)?;
            let mut csv = String::from("lambda,predicted_width,measured_width,rel_err\n");
            let mut max_rel: f64 = 0.0;
            for i in 0..lambda.n {
                let l = axis_value(&lambda, i).clamp(0.0, 1.0);
                let (plo, phi) = predicted_boundaries(&base, l);
                let predicted = phi - plo;
                let measured = measure_width(l, &base)?.width();
                let rel = if measured > 0.0 {
                    (predicted - measured).abs() / measured
                } else if predicted.abs() < 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_rel = max_rel.max(rel);
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    format_float(l),
                    format_float(predicted),
                    format_float(measured),
                    format_float(rel)
                );
            }
            let code = emit(&common.out, Output::Text(csv))?;
            if code != 0 {
                return Ok(code);
            }
            if max_rel > tol {
                eprintln!("entrain: max relative width error {max_rel:.3e} exceeds tolerance {tol:.3e}");
                return Ok(1);
            }
            Ok(0)
        }
    }
}

fn axis_value(axis: &AxisArg, i: usize) -> f64 {
    axis.lo + (axis.hi - axis.lo) * i as f64 / (axis.n - 1).max(1) as f64
}

fn run_scan(
    spec: &ScanSpec<f64>,
    base: &OscillatorParams64,
    jobs: Option<usize>,
) -> anyhow::Result<ScanGrid<f64>> {
    let grid = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()?
            .install(|| scan(spec, base))?,
        None => scan(spec, base)?,
    };
    Ok(grid)
}

fn emit_grid(
    out: &Option<PathBuf>,
    grid: &ScanGrid<f64>,
    format: OutputFormat,
) -> anyhow::Result<i32> {
    match format {
        OutputFormat::Csv => emit(out, Output::Text(grid.to_csv())),
        OutputFormat::Pgm => emit(out, Output::Binary(grid.to_pgm())),
    }
}

fn emit(out: &Option<PathBuf>, output: Output) -> anyhow::Result<i32> {
    let bytes = match &output {
        Output::Text(s) => s.as_bytes(),
        Output::Binary(b) => b.as_slice(),
    };
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, bytes) {
                eprintln!("entrain: cannot write {}: {e}", path.display());
                return Ok(2);
            }
        }
        None => io::stdout().write_all(bytes)?,
    }
    Ok(0)
}
