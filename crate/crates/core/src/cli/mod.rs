//! Command-line front end.

mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::coefficients::{coefficients, CoefficientSource, CoefficientTable};
use crate::error::{Error, Result};
use crate::math::{ModelClass, ModelParams};
use crate::series::{SeriesFunction, DEFAULT_TOL};
use crate::verify::{run_conjecture, run_suite, Status, SuiteConfig, SuiteReport, SCHEMA_VERSION};
use crate::zeros::{find_zeros, summability_diagnostic, ScanConfig, SummabilityReport};

pub use config::{parse_list, parse_perturb, ConfigFile, KEYS};
pub use output::{fmt_f64, to_csv, to_json};

/// Exit code when a check fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for usage, validation and numerical errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "jbessel", version, about = "Bessel-type entire functions from Beta recurrences")]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Coefficient table `n, c_n, |c_n / c_{n-1}|`
    Coeffs,
    /// `F`, `F'` and `f` at the points given by --z
    Eval,
    /// Positive zeros with `f'` at each
    Zeros,
    /// Full verification suite; exits 1 if any check fails
    Verify,
    /// Gram matrix over the zeros (8 x 8, 96 nodes by default)
    Conjecture,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Options {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, value_parser = parse_class)]
    pub class: Option<ModelClass>,
    /// Number of coefficients
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of zeros
    #[arg(long, global = true)]
    pub zeros: Option<usize>,
    #[arg(long, global = true)]
    pub gram_size: Option<usize>,
    #[arg(long, global = true)]
    pub kernel_terms: Option<usize>,
    /// Gauss–Jacobi node count (doubled for the error estimate)
    #[arg(long, global = true)]
    pub quad_m: Option<usize>,
    /// Series tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key=value file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Evaluation points, comma separated
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub source: Option<Source>,
    /// Scale coefficients before use, `k:factor[,k:factor...]`
    #[arg(long, global = true)]
    pub perturb: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Recurrence,
    ClosedForm,
    Hyperbessel,
}

fn parse_class(s: &str) -> std::result::Result<ModelClass, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub n: usize,
    pub zeros: usize,
    pub gram_size: usize,
    pub kernel_terms: usize,
    pub quad_m: usize,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub z: Vec<f64>,
    pub source: CoefficientSource,
    pub perturb: Vec<(usize, f64)>,
}

impl RunConfig {
    /// Merges flags over the config file and validates the parameters.
    pub fn resolve(command: Command, o: &Options) -> Result<Self> {
        let file = match &o.config {
            Some(p) => ConfigFile::read(p)?,
            None => ConfigFile::default(),
        };
        let num = |flag: Option<f64>, key: &str| -> Result<Option<f64>> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => file.get(key),
            }
        };
        let count = |flag: Option<usize>, key: &str| -> Result<Option<usize>> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => file.get(key),
            }
        };
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("missing parameter `{key}`")));
        let class = match o.class {
            Some(c) => c,
            None => match file.raw("class") {
                Some(s) => s.parse()?,
                None => ModelClass::B,
            },
        };
        let params = ModelParams::validate(
            need(num(o.nu, "nu")?, "nu")?,
            need(num(o.alpha, "alpha")?, "alpha")?,
            need(num(o.beta, "beta")?, "beta")?,
            need(num(o.a, "a")?, "a")?,
            class,
        )?;
        let conj = command == Command::Conjecture;
        let format = match o.format {
            Some(f) => f,
            None => match file.raw("format") {
                None => Format::Json,
                Some(s) => Format::from_str(s, true).map_err(|_| Error::Config(format!("unknown format `{s}`")))?,
            },
        };
        let source = match o.source {
            Some(s) => s,
            None => match file.raw("source") {
                None => Source::Recurrence,
                Some(s) => Source::from_str(s, true).map_err(|_| Error::Config(format!("unknown source `{s}`")))?,
            },
        };
        let z = match o.z.as_deref().or(file.raw("z")) {
            Some(s) => parse_list(s)?,
            None => Vec::new(),
        };
        let perturb = match o.perturb.as_deref().or(file.raw("perturb")) {
            Some(s) => parse_perturb(s)?,
            None => Vec::new(),
        };
        let cfg = RunConfig {
            command,
            params,
            n: count(o.n, "n")?.unwrap_or(100),
            zeros: count(o.zeros, "zeros")?.unwrap_or(if command == Command::Zeros { 10 } else { 40 }),
            gram_size: count(o.gram_size, "gram_size")?.unwrap_or(if conj { 8 } else { 6 }),
            kernel_terms: count(o.kernel_terms, "kernel_terms")?.unwrap_or(40),
            quad_m: count(o.quad_m, "quad_m")?.unwrap_or(if conj { 96 } else { 48 }),
            tol: num(o.tol, "tol")?.unwrap_or(DEFAULT_TOL),
            format,
            out: o.out.clone().or_else(|| file.raw("out").map(PathBuf::from)),
            z,
            source: match source {
                Source::Recurrence => CoefficientSource::Recurrence,
                Source::ClosedForm => CoefficientSource::ClosedForm,
                Source::Hyperbessel => CoefficientSource::Hyperbessel,
            },
            perturb,
        };
        if cfg.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if cfg.zeros == 0 && matches!(command, Command::Zeros) {
            return Err(Error::Config("zeros must be at least 1".into()));
        }
        if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {}", cfg.tol)));
        }
        if command == Command::Eval && cfg.z.is_empty() {
            return Err(Error::Config("eval needs --z".into()));
        }
        Ok(cfg)
    }

    fn suite(&self) -> SuiteConfig {
        let mut s = SuiteConfig::new(self.params);
        s.n_coeffs = self.n;
        s.zeros = self.zeros;
        s.gram_size = self.gram_size;
        s.kernel_terms = self.kernel_terms;
        s.quad_m = self.quad_m;
        s.tol = self.tol;
        s.perturb = self.perturb.clone();
        s
    }

    fn table(&self, n: usize) -> Result<CoefficientTable> {
        let mut t = coefficients(&self.params, n, self.source)?;
        for &(k, f) in &self.perturb {
            t.scale_coefficient(k, f)?;
        }
        Ok(t)
    }
}

/// Rendered output and exit code of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema_version: u32,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

/// Machine-readable error document, written to stderr.
pub fn error_json(kind: &str, message: String) -> String {
    to_json(&ErrorReport {
        schema_version: SCHEMA_VERSION,
        error: ErrorBody { kind, message },
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: EXIT_ERROR,
                    stdout: String::new(),
                    stderr: error_json("usage", e.to_string().trim_end().to_string()),
                },
            };
        }
    };
    match execute(cli.command, &cli.opts) {
        Ok(o) => o,
        Err(e) => Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: error_json(e.kind(), e.to_string()),
        },
    }
}

fn execute(command: Command, opts: &Options) -> Result<Outcome> {
    let cfg = RunConfig::resolve(command, opts)?;
    let (body, code) = match command {
        Command::Coeffs => (cmd_coeffs(&cfg)?, 0),
        Command::Eval => (cmd_eval(&cfg)?, 0),
        Command::Zeros => (cmd_zeros(&cfg)?, 0),
        Command::Verify | Command::Conjecture => {
            let rep = if command == Command::Verify {
                run_suite(&cfg.suite())
            } else {
                run_conjecture(&cfg.suite())
            };
            let code = if rep.any_failed() { EXIT_FAIL } else { 0 };
            (render_report(&cfg, &rep), code)
        }
    };
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &body).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
            Ok(Outcome {
                code,
                stdout: String::new(),
                stderr: String::new(),
            })
        }
        None => Ok(Outcome {
            code,
            stdout: body,
            stderr: String::new(),
        }),
    }
}

#[derive(Serialize)]
struct CoeffRow {
    n: usize,
    c: f64,
    ratio: f64,
    ln_abs: f64,
}

#[derive(Serialize)]
struct CoeffDoc<'a> {
    schema_version: u32,
    command: &'static str,
    params: &'a ModelParams,
    source: CoefficientSource,
    coefficients: Vec<CoeffRow>,
}

pub fn cmd_coeffs(cfg: &RunConfig) -> Result<String> {
    let t = cfg.table(cfg.n)?;
    let rows: Vec<CoeffRow> = (0..=cfg.n)
        .map(|n| CoeffRow {
            n,
            c: t.values()[n],
            ratio: t.ratios()[n].abs(),
            ln_abs: t.ln_abs()[n],
        })
        .collect();
    Ok(match cfg.format {
        Format::Json => to_json(&CoeffDoc {
            schema_version: SCHEMA_VERSION,
            command: "coeffs",
            params: &cfg.params,
            source: t.source(),
            coefficients: rows,
        }),
        Format::Csv => to_csv(
            &["n", "c_n", "abs_ratio", "ln_abs_c_n"],
            &rows
                .iter()
                .map(|r| vec![r.n.to_string(), fmt_f64(r.c), fmt_f64(r.ratio), fmt_f64(r.ln_abs)])
                .collect::<Vec<_>>(),
        ),
    })
}

#[derive(Serialize)]
struct EvalRow {
    z: f64,
    #[serde(rename = "F")]
    big_f: f64,
    error_bound: f64,
    terms_used: usize,
    #[serde(rename = "F_prime")]
    big_f_prime: f64,
    /// `z^nu F(z)`; absent where `z^nu` is undefined.
    f: Option<f64>,
}

#[derive(Serialize)]
struct EvalDoc<'a> {
    schema_version: u32,
    command: &'static str,
    params: &'a ModelParams,
    tol: f64,
    values: Vec<EvalRow>,
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<String> {
    let sf = SeriesFunction::new(cfg.table(cfg.n.max(32))?);
    let rows = cfg
        .z
        .iter()
        .map(|&z| {
            let e = sf.eval_F(z, cfg.tol)?;
            let d = sf.eval_F_prime(z, cfg.tol)?;
            let f = sf.prefactor(z).ok().map(|p| p * e.value);
            Ok(EvalRow {
                z,
                big_f: e.value,
                error_bound: e.error_bound,
                terms_used: e.terms_used,
                big_f_prime: d.value,
                f,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match cfg.format {
        Format::Json => to_json(&EvalDoc {
            schema_version: SCHEMA_VERSION,
            command: "eval",
            params: &cfg.params,
            tol: cfg.tol,
            values: rows,
        }),
        Format::Csv => to_csv(
            &["z", "F", "error_bound", "terms_used", "F_prime", "f"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.z),
                        fmt_f64(r.big_f),
                        fmt_f64(r.error_bound),
                        r.terms_used.to_string(),
                        fmt_f64(r.big_f_prime),
                        r.f.map(fmt_f64).unwrap_or_default(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    })
}

#[derive(Serialize)]
struct ZeroRow {
    n: usize,
    lambda: f64,
    f_prime: f64,
}

#[derive(Serialize)]
struct ZeroDoc<'a> {
    schema_version: u32,
    command: &'static str,
    params: &'a ModelParams,
    refine_tol: f64,
    zeros: Vec<ZeroRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summability: Option<SummabilityReport>,
}

pub fn cmd_zeros(cfg: &RunConfig) -> Result<String> {
    let sf = SeriesFunction::new(cfg.table(cfg.n.max(32))?);
    let zs = find_zeros(&sf, cfg.zeros, &ScanConfig::default())?;
    let rows: Vec<ZeroRow> = zs
        .lambdas
        .iter()
        .zip(&zs.derivative_at_zero)
        .enumerate()
        .map(|(i, (&lambda, &f_prime))| ZeroRow {
            n: i + 1,
            lambda,
            f_prime,
        })
        .collect();
    Ok(match cfg.format {
        Format::Json => to_json(&ZeroDoc {
            schema_version: SCHEMA_VERSION,
            command: "zeros",
            params: &cfg.params,
            refine_tol: zs.refine_tol,
            zeros: rows,
            summability: summability_diagnostic(&zs).ok(),
        }),
        Format::Csv => to_csv(
            &["n", "lambda", "f_prime"],
            &rows
                .iter()
                .map(|r| vec![r.n.to_string(), fmt_f64(r.lambda), fmt_f64(r.f_prime)])
                .collect::<Vec<_>>(),
        ),
    })
}

fn render_report(cfg: &RunConfig, rep: &SuiteReport) -> String {
    match cfg.format {
        Format::Json => to_json(rep),
        Format::Csv => to_csv(
            &["name", "residual", "error_estimate", "tolerance", "status", "error"],
            &rep.checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.residual.map(fmt_f64).unwrap_or_default(),
                        c.error_estimate.map(fmt_f64).unwrap_or_default(),
                        c.tolerance.map(fmt_f64).unwrap_or_default(),
                        status_str(c.status).to_string(),
                        c.error.as_ref().map(|e| format!("{}: {}", e.kind, e.message)).unwrap_or_default(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    }
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Evidence => "evidence",
    }
}
