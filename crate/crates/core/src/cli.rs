//! Command-line front end.
//!
//! Tabular output is CSV with one header row on stdout or `--output`;
//! summaries go to the diagnostic stream so the table stays machine-readable.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;

use crate::approx::{self, grid, ApproxOptions, Target, TargetKind};
use crate::hb::{choose_alpha, AlphaMode, HbFunction};
use crate::polyfact::{factorize, validate_measure, PositivePolynomialMeasure};
use crate::quad::QuadSpec;
use crate::verify;
use crate::{Error, Result};

pub const THREADS_ENV: &str = "HBAPPROX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hbapprox", version, about = "Extremal signatures and best L1 approximation by entire functions of exponential type")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the scale and roots of U with M = U U*.
    Factorize(CommonArgs),
    /// Tabulate A, B and sgn(AB) and list the sign changes.
    Signature(CommonArgs),
    /// Tabulate the reproducing kernel K(w, x).
    Kernel(KernelArgs),
    /// Tabulate the best approximation and report its error.
    Approx(ApproxArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Coefficients of M, lowest degree first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub measure: Option<Vec<f64>>,
    /// Exponential type.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Phase shift: `even`, `texp` or a number.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Table range `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub range: Option<Vec<f64>>,
    /// Number of table rows.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// TOML file with the same keys; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Kernel pole `re,im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// texp, absexp, gauss, poisson or conj-poisson.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// `all`, or a comma-separated list of criterion names or numbers.
    #[arg(long, default_value = "all")]
    pub suite: String,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub measure: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub alpha: Option<toml::Value>,
    pub target: Option<String>,
    pub lambda: Option<f64>,
    pub range: Option<[f64; 2]>,
    pub points: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub w: Option<[f64; 2]>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    AutoEven,
    AutoTexp,
    Explicit(f64),
}

impl FromStr for AlphaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "even" | "auto-even" => Ok(Self::AutoEven),
            "texp" | "auto-texp" => Ok(Self::AutoTexp),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|a| a.is_finite())
                .map(Self::Explicit)
                .ok_or_else(|| Error::Config(format!("alpha must be even, texp or a number, got {v:?}"))),
        }
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub measure: PositivePolynomialMeasure,
    pub tau: f64,
    pub alpha: Option<AlphaChoice>,
    pub target: Target,
    pub grid: (f64, f64, usize),
    pub spec: QuadSpec,
    pub w: Complex64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(common: &CommonArgs, target: Option<&str>, lambda: Option<f64>, w: Option<&[f64]>) -> Result<Self> {
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let coeffs = common.measure.clone().or(file.measure).unwrap_or_else(|| vec![1.0]);
        let measure = validate_measure(&coeffs)?;
        let tau = common.tau.or(file.tau).unwrap_or(1.0);
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {tau}")));
        }
        let alpha = match (&common.alpha, file.alpha) {
            (Some(s), _) => Some(s.parse()?),
            (None, Some(toml::Value::String(s))) => Some(s.parse()?),
            (None, Some(toml::Value::Float(v))) => Some(AlphaChoice::Explicit(v)),
            (None, Some(toml::Value::Integer(v))) => Some(AlphaChoice::Explicit(v as f64)),
            (None, Some(v)) => return Err(Error::Config(format!("alpha: unsupported value {v}"))),
            (None, None) => None,
        };
        let kind: TargetKind = target
            .map(str::to_owned)
            .or(file.target)
            .unwrap_or_else(|| "texp".into())
            .parse()?;
        let target = Target::new(kind, lambda.or(file.lambda).unwrap_or(1.0))?;
        let (lo, hi) = match (&common.range, file.range) {
            (Some(r), _) if r.len() == 2 => (r[0], r[1]),
            (Some(r), _) => return Err(Error::Config(format!("range needs two values, got {}", r.len()))),
            (None, Some([lo, hi])) => (lo, hi),
            (None, None) => (-10.0, 10.0),
        };
        let n = common.points.or(file.points).unwrap_or(201);
        if !(lo < hi && lo.is_finite() && hi.is_finite()) || n < 2 {
            return Err(Error::Config(format!("grid needs lo < hi and n >= 2, got ({lo}, {hi}, {n})")));
        }
        let mut spec = QuadSpec::default();
        if let Some(t) = common.rel_tol.or(file.rel_tol) {
            spec.rel_tol = t;
        }
        if let Some(t) = common.abs_tol.or(file.abs_tol) {
            spec.abs_tol = t;
        }
        if !(spec.rel_tol > 0.0 && spec.abs_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let w = match (w, file.w) {
            (Some([re, im]), _) => Complex64::new(*re, *im),
            (Some(v), _) => return Err(Error::Config(format!("w needs two values, got {}", v.len()))),
            (None, Some([re, im])) => Complex64::new(re, im),
            (None, None) => Complex64::new(0.0, 1.0),
        };
        Ok(Self {
            measure,
            tau,
            alpha,
            target,
            grid: (lo, hi, n),
            spec,
            w,
            output: common.output.clone().or(file.output),
        })
    }

    /// `E` with the requested phase shift; defaults to the choice with
    /// `B(0) = 0`, which gives the classical `sgn sin 2 tau x` for `M = 1`.
    pub fn hb(&self) -> Result<HbFunction> {
        let u = factorize(&self.measure)?;
        let choice = self.alpha.unwrap_or(AlphaChoice::AutoTexp);
        let alpha = match choice {
            AlphaChoice::AutoEven => choose_alpha(&u, self.tau, AlphaMode::Even)?,
            AlphaChoice::AutoTexp => choose_alpha(&u, self.tau, AlphaMode::TruncatedExp)?,
            AlphaChoice::Explicit(a) => a,
        };
        HbFunction::build(u, self.tau, alpha)
    }

    fn xs(&self) -> Vec<f64> {
        let (lo, hi, n) = self.grid;
        grid(lo, hi, n)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn open_output<'a>(path: &Option<PathBuf>, out: &'a mut (dyn Write + Send)) -> Result<Box<dyn Write + 'a>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(out)),
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Config(format!("write failed: {e}"))
}

fn factorize_cmd(args: &CommonArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = RunConfig::resolve(args, None, None, None)?;
    let u = factorize(&cfg.measure)?;
    let mut table = open_output(&cfg.output, out)?;
    let mut rows = vec!["kind,re,im".to_string()];
    rows.push(format!("scale,{},{}", num(u.scale()), num(0.0)));
    rows.extend(u.roots().iter().map(|r| format!("root,{},{}", num(r.re), num(r.im))));
    writeln!(table, "{}", rows.join("\n")).map_err(io_err)?;
    table.flush().map_err(io_err)
}

fn signature_cmd(args: &CommonArgs, out: &mut (dyn Write + Send), diag: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = RunConfig::resolve(args, None, None, None)?;
    let hb = cfg.hb()?;
    let (lo, hi, _) = cfg.grid;
    let changes = hb.sign_changes(lo, hi)?;
    let mut table = open_output(&cfg.output, out)?;
    writeln!(table, "x,A,B,psi").map_err(io_err)?;
    for x in cfg.xs() {
        let (a, b) = hb.ab_real(x);
        writeln!(table, "{},{},{},{}", num(x), num(a), num(b), hb.signature(x)).map_err(io_err)?;
    }
    table.flush().map_err(io_err)?;
    let list: Vec<String> = changes.iter().map(|&x| num(x)).collect();
    writeln!(diag, "alpha = {}", num(hb.alpha())).map_err(io_err)?;
    writeln!(diag, "sign changes ({}): {}", changes.len(), list.join(" ")).map_err(io_err)
}

fn kernel_cmd(args: &KernelArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common, None, None, args.w.as_deref())?;
    let hb = cfg.hb()?;
    let mut table = open_output(&cfg.output, out)?;
    writeln!(table, "x,re,im").map_err(io_err)?;
    for x in cfg.xs() {
        let k = hb.kernel(cfg.w, Complex64::new(x, 0.0));
        writeln!(table, "{},{},{}", num(x), num(k.re), num(k.im)).map_err(io_err)?;
    }
    table.flush().map_err(io_err)
}

fn approx_cmd(args: &ApproxArgs, out: &mut (dyn Write + Send), diag: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common, args.target.as_deref(), args.lambda, None)?;
    let opts = ApproxOptions {
        spec: cfg.spec.clone(),
        ..ApproxOptions::default()
    };
    let res = approx::approximate(&cfg.measure, cfg.tau, cfg.target, &opts)?;
    let mut table = open_output(&cfg.output, out)?;
    writeln!(table, "x,f,F,err,psi").map_err(io_err)?;
    for x in cfg.xs() {
        let f = res.target.eval(x);
        let big = res.approximant.eval_real(x);
        writeln!(table, "{},{},{},{},{}", num(x), num(f), num(big), num(f - big), res.psi(x)).map_err(io_err)?;
    }
    table.flush().map_err(io_err)?;
    let reference = match res.error_closed_form {
        Some(c) => format!("error_closed_form = {}", num(c)),
        None => format!("error_signed = {}", num(res.error_signed.value)),
    };
    let gap = res.relative_gap();
    writeln!(
        diag,
        "target = {} lambda = {} tau = {} error_quadrature = {} {reference} relative_gap = {gap:.3e} agreement = {}",
        res.target.kind(),
        res.target.lambda(),
        res.tau,
        num(res.error_quadrature.value),
        gap <= verify::ERROR_REL_TOL,
    )
    .map_err(io_err)?;
    writeln!(
        diag,
        "node_residual = {:.3e} sign_violations = {}/{}",
        res.node_residual, res.sign_check.violations, res.sign_check.checked
    )
    .map_err(io_err)
}

fn verify_cmd(args: &VerifyArgs, out: &mut (dyn Write + Send)) -> Result<bool> {
    let ids = verify::select(&args.suite)?;
    let mut failed = 0;
    for id in &ids {
        let report = verify::run(*id);
        writeln!(out, "{report}").map_err(io_err)?;
        failed += usize::from(!report.passed);
    }
    writeln!(out, "verify: {} passed, {failed} failed", ids.len() - failed).map_err(io_err)?;
    Ok(failed == 0)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn dispatch(cli: &Cli, out: &mut (dyn Write + Send), diag: &mut (dyn Write + Send)) -> Result<i32> {
    match &cli.command {
        Command::Factorize(a) => factorize_cmd(a, out).map(|_| 0),
        Command::Signature(a) => signature_cmd(a, out, diag).map(|_| 0),
        Command::Kernel(a) => kernel_cmd(a, out).map(|_| 0),
        Command::Approx(a) => approx_cmd(a, out, diag).map(|_| 0),
        Command::Verify(a) => verify_cmd(a, out).map(|ok| if ok { 0 } else { 2 }),
    }
}

/// Worker count from `HBAPPROX_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_with<I, S>(args: I, out: &mut (dyn Write + Send), diag: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(diag, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, out, diag)),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli, out, diag),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(diag, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut io::stdout(), &mut io::stderr())
}
