//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{
    analyze, default_corpus, explain, load_corpus, run_corpus, Conclusion, CorpusReport, EngineConfig, EngineError,
    Verdict, MAX_K,
};
use crate::expr::{Expr, PsiFunction};
use crate::extrange::ExtReal;
use crate::stats::{Family, SeriesSpec};

/// Environment variable that replaces the default precision.
pub const PRECISION_ENV: &str = "SERIESJUDGE_PRECISION";

pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CONTRADICTION: i32 = 3;

const MIN_PRECISION: usize = 64;
const MAX_CLI_PRECISION: usize = 1024;

#[derive(Debug, Parser)]
#[command(name = "seriesjudge", version, about = "Convergence tests for positive series on iterated-logarithm scales")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide convergence of the series with the given term a_n.
    Classify(ClassifyArgs),
    /// Work with the corpus of series of known behaviour.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CorpusAction {
    /// Classify every entry and compare with its known behaviour.
    Run(CorpusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Test families to try, comma separated (L, S, Omega, Ptilde, P, J).
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    /// Deepest iterated-log level tried.
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    /// Working precision in bits [64, 1024]; defaults to $SERIESJUDGE_PRECISION or 128.
    #[arg(long)]
    pub precision: Option<usize>,
    /// Drop statistic probes above this n (decimal, e.g. 1e12).
    #[arg(long)]
    pub n_max: Option<String>,
    /// Extend the statistic grid past 2^64 in log space.
    #[arg(long)]
    pub deep_probe: bool,
    /// Grid points per octave.
    #[arg(long, default_value_t = 1)]
    pub density: u32,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
    #[arg(long, value_enum)]
    pub output: Option<Output>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// The term a_n as an expression in n, e.g. "1/(n*log(n)^2)".
    #[arg(long)]
    pub term: String,
    /// Scale factor f of the P, Ptilde and J statistics [default: n]
    #[arg(long)]
    pub f: Option<String>,
    /// Scale divisor g [default: 1 for P and Ptilde, log(n) for J]
    #[arg(long)]
    pub g: Option<String>,
    /// Root order phi of the J statistic [default: n]
    #[arg(long)]
    pub phi: Option<String>,
    /// Ratio root order zeta of the P statistic [default: 1]
    #[arg(long)]
    pub zeta: Option<String>,
    /// Reparameterization for the psi forms of the tests.
    #[arg(long)]
    pub psi: Option<String>,
    /// Derivative of psi; derived symbolically when omitted.
    #[arg(long, requires = "psi")]
    pub psi_prime: Option<String>,
    /// Point from which psi is increasing with positive derivative.
    #[arg(long, requires = "psi", default_value_t = 1.0)]
    pub sigma: f64,
    /// Write the deciding samples as CSV to this file.
    #[arg(long)]
    pub dump_samples: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file; the bundled corpus when omitted.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

/// Error already worded for the user.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn parse_expr(flag: &str, text: &str) -> Result<Expr, Failure> {
    Expr::parse(text).map_err(|e| Failure(format!("--{flag} {text:?}: syntax error at {e}")))
}

fn parse_families(names: &[String]) -> Result<Vec<Family>, Failure> {
    if names.is_empty() {
        return Ok(Family::ORDER.to_vec());
    }
    names
        .iter()
        .map(|n| Family::parse(n).ok_or_else(|| Failure(format!("unknown family {n:?}; expected one of L, S, Omega, Ptilde, P, J"))))
        .collect()
}

fn precision_from(flag: Option<usize>, env: Option<String>) -> Result<usize, Failure> {
    let p = match (flag, env) {
        (Some(p), _) => p,
        (None, Some(text)) => text
            .trim()
            .parse()
            .map_err(|_| Failure(format!("{PRECISION_ENV}={text:?} is not a bit count")))?,
        (None, None) => crate::extrange::DEFAULT_PRECISION,
    };
    if !(MIN_PRECISION..=MAX_CLI_PRECISION).contains(&p) {
        return Err(Failure(format!("precision {p} outside [{MIN_PRECISION}, {MAX_CLI_PRECISION}]")));
    }
    Ok(p)
}

impl EngineArgs {
    fn config(&self, env_precision: Option<String>) -> Result<EngineConfig, Failure> {
        if self.k_max > MAX_K {
            return Err(Failure(format!("--k-max {} exceeds {MAX_K}", self.k_max)));
        }
        if self.density == 0 {
            return Err(Failure("--density must be at least 1".into()));
        }
        let precision = precision_from(self.precision, env_precision)?;
        let n_max = self
            .n_max
            .as_deref()
            .map(|t| ExtReal::parse_with_precision(t, precision).map_err(|e| Failure(format!("--n-max {t:?}: {e}"))))
            .transpose()?;
        Ok(EngineConfig {
            k_max: self.k_max,
            precision,
            families: parse_families(&self.families)?,
            deep_probe: self.deep_probe,
            density: self.density,
            n_max,
            ..EngineConfig::default()
        })
    }

    fn output(&self) -> Output {
        match (self.json, self.output) {
            (true, _) => Output::Json,
            (false, Some(o)) => o,
            (false, None) => Output::Table,
        }
    }
}

fn build_spec(args: &ClassifyArgs, warnings: &mut Vec<String>) -> Result<SeriesSpec, Failure> {
    let mut spec = SeriesSpec::new(args.term.clone(), parse_expr("term", &args.term)?);
    let opt = |flag: &str, v: &Option<String>| v.as_deref().map(|t| parse_expr(flag, t)).transpose();
    spec.f = opt("f", &args.f)?;
    spec.g = opt("g", &args.g)?;
    spec.phi = opt("phi", &args.phi)?;
    spec.zeta = opt("zeta", &args.zeta)?;
    if let Some(psi) = opt("psi", &args.psi)? {
        let sigma = ExtReal::from_f64(args.sigma, 64)?;
        spec.psi = Some(match opt("psi-prime", &args.psi_prime)? {
            Some(prime) => {
                let (f, w) = PsiFunction::with_derivative(psi, prime, sigma);
                warnings.extend(w);
                f
            }
            None => PsiFunction::new(psi, sigma)?,
        });
    }
    Ok(spec)
}

/// CSV of the samples behind a verdict.
pub fn samples_csv(v: &Verdict) -> String {
    let mut out = String::from("family,psi,k,n,value,precision\n");
    for s in &v.evidence {
        out.push_str(&format!("{},{},{},{},{},{}\n", s.family, s.psi_generalized, s.k, s.n, s.value, s.precision_used));
    }
    out
}

fn exit_for(c: Conclusion) -> i32 {
    match c {
        Conclusion::Inconclusive => EXIT_INCONCLUSIVE,
        _ => EXIT_DECIDED,
    }
}

fn classify(args: &ClassifyArgs, env: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let config = args.engine.config(env)?;
    let mut warnings = Vec::new();
    let spec = build_spec(args, &mut warnings)?;
    let mut verdict = match analyze(&spec, &config) {
        Ok(v) => v,
        Err(e @ EngineError::Contradiction { .. }) => return Err(Failure(format!("internal contradiction: {e}"))),
        Err(e) => return Err(e.into()),
    };
    verdict.warnings.splice(0..0, warnings);
    if let Some(path) = &args.dump_samples {
        std::fs::write(path, samples_csv(&verdict)).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    }
    match args.engine.output() {
        Output::Json => writeln!(out, "{}", verdict.to_json())?,
        Output::Table => write!(out, "{}", explain(&verdict))?,
    }
    for w in &verdict.warnings {
        writeln!(err, "warning: {w}")?;
    }
    Ok(exit_for(verdict.conclusion))
}

fn corpus_table(report: &CorpusReport) -> String {
    let mut s = format!(
        "{:<36} {:<10} {:<13} {:<14} {:>2} {:>12}\n",
        "entry", "truth", "verdict", "theorem", "k", "margin"
    );
    for r in &report.rows {
        let verdict = r.conclusion.map(|c| c.to_string()).unwrap_or_else(|| "error".into());
        s.push_str(&format!(
            "{:<36} {:<10} {:<13} {:<14} {:>2} {:>12}{}{}\n",
            r.name,
            format!("{:?}", r.truth),
            verdict,
            r.theorem.as_deref().unwrap_or("-"),
            r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            r.margin.as_deref().unwrap_or("-"),
            if r.contradiction { "  CONTRADICTION" } else { "" },
            r.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default(),
        ));
    }
    s.push_str(&format!(
        "decided {}/{} ({:.0}%), contradictions {}\n",
        report.decided,
        report.rows.len(),
        100.0 * report.decided_fraction(),
        report.contradictions.len()
    ));
    s
}

fn corpus(args: &CorpusArgs, env: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let config = args.engine.config(env)?;
    let entries = match &args.path {
        Some(p) => load_corpus(p)?,
        None => default_corpus(),
    };
    let report = run_corpus(&entries, &config);
    match args.engine.output() {
        Output::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Output::Table => write!(out, "{}", corpus_table(&report))?,
    }
    if report.contradictions.is_empty() {
        Ok(EXIT_DECIDED)
    } else {
        writeln!(err, "verdicts contradict known behaviour for: {}", report.contradictions.join(", "))?;
        Ok(EXIT_CONTRADICTION)
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code.
/// `env_precision` is the value of the precision variable, if set.
pub fn run<I, T>(args: I, env_precision: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_DECIDED,
                _ => EXIT_ERROR,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_DECIDED { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => classify(a, env_precision, out, err),
        Command::Corpus { action: CorpusAction::Run(a) } => corpus(a, env_precision, out, err),
    };
    result.unwrap_or_else(|Failure(msg)| {
        let _ = writeln!(err, "error: {msg}");
        EXIT_ERROR
    })
}
