//! Command-line front end: instance files, norm and summing-norm
//! computation, domination constants, the property suite and instance
//! generation.
//!
//! Exit codes: 0 success (for `suite`, no failed check), 1 usage or parse
//! error, 2 degenerate parameter regime, 3 numerical failure.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::Error;
use crate::opnorms::{
    aniso_summing_norm, operator_norm, pi_qp, weakly_aniso_norm, LinearOperator, OpNormEstimate,
};
use crate::optimize::rng_for;
use crate::pietsch::{
    build_dual_grid, build_family_grid, domination_lp_aniso, domination_lp_weak, standard_tests,
    DominationOptions, DominationWitness,
};
use crate::seqnorms::{
    aniso_norm, maurey_norm, mixed_norm, strong_norm, weak_norm, EstimatorConfig, SequenceFamily,
    Witness,
};
use crate::spaces::{NormKind, Space};
use crate::suite::{run_suite, CheckStatus, SuiteConfig};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_TESTS: usize = 64;
/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "ANISUM_THREADS";

/// An exponent in `[1, ∞]`, written as a JSON number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExpVisitor;
        impl Visitor<'_> for ExpVisitor {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number >= 1 or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exponent, E> {
                parse_exponent(v).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(ExpVisitor)
    }
}

/// Parses `"inf"` or a number.
pub fn parse_exponent(text: &str) -> Result<Exponent, String> {
    match text.trim() {
        "inf" | "infinity" | "∞" => Ok(Exponent(f64::INFINITY)),
        t => t
            .parse::<f64>()
            .map(Exponent)
            .map_err(|_| format!("`{t}` is neither a number nor \"inf\"")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dim: usize,
    pub kind: String,
    pub p: Exponent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl SpaceSpec {
    pub fn from_space(space: &Space) -> Self {
        SpaceSpec {
            dim: space.dim(),
            kind: "lp".into(),
            p: Exponent(space.exponent()),
            weights: (!space.is_unweighted()).then(|| space.weights().to_vec()),
        }
    }

    pub fn to_space(&self, field: &str) -> Result<Space, Error> {
        if self.kind != "lp" {
            return Err(Error::Infeasible(format!(
                "{field}.kind: unsupported space kind `{}`, expected \"lp\"",
                self.kind
            )));
        }
        let kind = NormKind::from_exponent(self.p.0)?;
        match &self.weights {
            None => Space::new(self.dim, kind),
            Some(w) => Space::weighted(self.dim, kind, w.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    /// One row per codomain coordinate.
    pub matrix: Vec<Vec<f64>>,
    pub domain: SpaceSpec,
    pub codomain: SpaceSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
}

/// Instance file: a space with a finite sequence, an operator, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub params: ParamsSpec,
}

impl InstanceFile {
    /// Parses and validates; messages name the offending line or field.
    pub fn parse(text: &str) -> Result<Self, String> {
        let inst: InstanceFile = serde_json::from_str(text)
            .map_err(|e| format!("line {} column {}: {e}", e.line(), e.column()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<(), String> {
        if self.version != FORMAT_VERSION {
            return Err(format!(
                "version: unsupported version {}, expected {FORMAT_VERSION}",
                self.version
            ));
        }
        if self.sequence.is_some() {
            self.sequence().map_err(|e| e.to_string())?;
        } else if let Some(s) = &self.space {
            s.to_space("space").map_err(|e| e.to_string())?;
        }
        if self.operator.is_some() {
            self.operator().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn sequence(&self) -> Result<SequenceFamily, Error> {
        let space = self
            .space
            .as_ref()
            .ok_or_else(|| Error::Infeasible("space: missing".into()))?
            .to_space("space")?;
        let rows = self
            .sequence
            .clone()
            .ok_or_else(|| Error::Infeasible("sequence: missing".into()))?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != space.dim() {
                return Err(Error::Infeasible(format!(
                    "sequence[{i}]: {} coordinates, space has dim {}",
                    row.len(),
                    space.dim()
                )));
            }
        }
        SequenceFamily::from_rows(space, rows)
    }

    pub fn operator(&self) -> Result<LinearOperator, Error> {
        let op = self
            .operator
            .as_ref()
            .ok_or_else(|| Error::Infeasible("operator: missing".into()))?;
        let dom = op.domain.to_space("operator.domain")?;
        let cod = op.codomain.to_space("operator.codomain")?;
        if op.matrix.len() != cod.dim() {
            return Err(Error::Infeasible(format!(
                "operator.matrix: {} rows, codomain has dim {}",
                op.matrix.len(),
                cod.dim()
            )));
        }
        for (i, row) in op.matrix.iter().enumerate() {
            if row.len() != dom.dim() {
                return Err(Error::Infeasible(format!(
                    "operator.matrix[{i}]: {} columns, domain has dim {}",
                    row.len(),
                    dom.dim()
                )));
            }
        }
        LinearOperator::new(dom, cod, op.matrix.clone())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "anisum",
    version,
    about = "Anisotropic sequence norms, summing norms and domination constants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Norm of the instance's finite sequence.
    Norm(NormArgs),
    /// Summing norm of the instance's operator.
    Opnorm(OpnormArgs),
    /// Minimal domination constant of the instance's operator.
    Pietsch(PietschArgs),
    /// Run the property suite and print its JSON report.
    Suite(SuiteArgs),
    /// Write a random instance file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

impl SearchArgs {
    fn config(&self) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::default()
            .with_restarts(self.restarts)
            .with_seed(self.seed);
        cfg.tol = self.tol;
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    #[arg(long, value_parser = parse_exponent)]
    pub s: Option<Exponent>,
    #[arg(long, value_parser = parse_exponent)]
    pub q: Option<Exponent>,
    #[arg(long, value_parser = parse_exponent)]
    pub r: Option<Exponent>,
    #[arg(long, value_parser = parse_exponent)]
    pub p: Option<Exponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormWhich {
    Strong,
    Weak,
    Aniso,
    Mixed,
    Maurey,
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub which: NormWhich,
    #[command(flatten)]
    pub exponents: ExponentArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpnormWhich {
    /// Operator norm.
    Op,
    /// `(q;p)`-summing norm.
    Piqp,
    /// Weakly anisotropic `(s,q,r;p)` norm.
    #[value(name = "wA")]
    WA,
    /// Anisotropic `(p;s,q,r)`-summing norm.
    #[value(name = "piA")]
    PiA,
}

#[derive(Debug, Clone, Args)]
pub struct OpnormArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub which: OpnormWhich,
    #[command(flatten)]
    pub exponents: ExponentArgs,
    /// Vectors per searched family.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Functionals per searched family.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PietschWhich {
    Weak,
    Aniso,
}

#[derive(Debug, Clone, Args)]
pub struct PietschArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub which: PietschWhich,
    #[command(flatten)]
    pub exponents: ExponentArgs,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_TESTS)]
    pub tests: usize,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    /// Check id to run; repeat for several, omit for all.
    #[arg(long = "check")]
    pub checks: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_TESTS)]
    pub tests: usize,
    /// Replace every check's tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub dim: usize,
    /// Number of sequence vectors.
    #[arg(long)]
    pub count: usize,
    /// Space kind as `lp:P`, e.g. `lp:2` or `lp:inf`.
    #[arg(long, value_parser = parse_kind)]
    pub kind: Exponent,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a random operator into a space of this dimension.
    #[arg(long)]
    pub codim: Option<usize>,
    /// Codomain kind, defaulting to `--kind`.
    #[arg(long, value_parser = parse_kind)]
    pub cokind: Option<Exponent>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_kind(text: &str) -> Result<Exponent, String> {
    let p = text
        .strip_prefix("lp:")
        .ok_or_else(|| format!("`{text}` must look like lp:P"))?;
    let e = parse_exponent(p)?;
    NormKind::from_exponent(e.0).map_err(|e| e.to_string())?;
    Ok(e)
}

/// Failure of a command with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Regime { .. } => 2,
            Error::Numeric(_) => 3,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

type CliResult = Result<i32, CliError>;

/// Header listing every default, printed at the top of each text report.
pub fn defaults_header() -> String {
    format!(
        "# defaults: restarts {DEFAULT_RESTARTS}, tol {DEFAULT_TOL:e}, grid {DEFAULT_GRID}, tests {DEFAULT_TESTS}, seed 0"
    )
}

/// Parses `args` (including the program name) and runs the command,
/// writing reports to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {}", e.message);
        return e.code;
    }
    let result = match cli.command {
        Command::Norm(a) => cmd_norm(&a, out),
        Command::Opnorm(a) => cmd_opnorm(&a, out),
        Command::Pietsch(a) => cmd_pietsch(&a, out),
        Command::Suite(a) => cmd_suite(&a, out, err),
        Command::Gen(a) => cmd_gen(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| usage(format!("{THREADS_ENV}: `{v}` is not a thread count")))?;
    // A pool built earlier in the same process is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn read_instance(path: &Path) -> Result<InstanceFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    InstanceFile::parse(&text).map_err(|m| usage(format!("{}: {m}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: 3,
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> CliError {
    usage(e.to_string())
}

fn exponent(
    flag: Option<Exponent>,
    file: Option<Exponent>,
    name: &str,
    default: Option<f64>,
) -> Result<f64, CliError> {
    flag.or(file)
        .map(|e| e.0)
        .or(default)
        .ok_or_else(|| usage(format!("missing exponent --{name} (flag or params.{name})")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDefaults {
    pub restarts: usize,
    pub tol: f64,
    pub grid: usize,
    pub tests: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub version: u32,
    pub command: String,
    pub which: String,
    pub defaults: ReportDefaults,
    pub settings: ReportDefaults,
    pub params: ParamsSpec,
}

fn header(
    command: &str,
    which: &str,
    search: &SearchArgs,
    grid: usize,
    tests: usize,
    params: ParamsSpec,
) -> ReportHeader {
    ReportHeader {
        version: FORMAT_VERSION,
        command: command.into(),
        which: which.into(),
        defaults: ReportDefaults {
            restarts: DEFAULT_RESTARTS,
            tol: DEFAULT_TOL,
            grid: DEFAULT_GRID,
            tests: DEFAULT_TESTS,
            seed: 0,
        },
        settings: ReportDefaults {
            restarts: search.restarts,
            tol: search.tol,
            grid,
            tests,
            seed: search.seed,
        },
        params,
    }
}

fn write_settings(out: &mut dyn Write, h: &ReportHeader) -> Result<(), CliError> {
    writeln!(out, "{}", defaults_header()).map_err(io)?;
    let s = &h.settings;
    writeln!(
        out,
        "# run: {} {}, restarts {}, tol {:e}, seed {}",
        h.command, h.which, s.restarts, s.tol, s.seed
    )
    .map_err(io)
}

fn witness_summary(w: &Witness) -> String {
    match w {
        Witness::Closed => "closed form".into(),
        Witness::Functional { .. } => "norming functional".into(),
        Witness::Family { family } => format!("functional family of {} atoms", family.len()),
        Witness::Factorization { factorization } => {
            format!("factorization of {} items", factorization.tau.len())
        }
        Witness::Measure { measure } => {
            format!("discrete measure on {} atoms", measure.support_size())
        }
    }
}

fn cmd_norm(a: &NormArgs, out: &mut dyn Write) -> CliResult {
    let inst = read_instance(&a.input)?;
    let seq = inst.sequence()?;
    let cfg = a.search.config();
    let e = &a.exponents;
    let f = &inst.params;
    let q = exponent(e.q, f.q, "q", None)?;
    let mut params = ParamsSpec {
        q: Some(Exponent(q)),
        ..ParamsSpec::default()
    };
    let (estimate, bracket) = match a.which {
        NormWhich::Strong => (strong_norm(&seq, q)?, None),
        NormWhich::Weak => (weak_norm(&seq, q, &cfg)?, None),
        NormWhich::Aniso => {
            let s = exponent(e.s, f.s, "s", None)?;
            let r = exponent(e.r, f.r, "r", None)?;
            params.s = Some(Exponent(s));
            params.r = Some(Exponent(r));
            (aniso_norm(&seq, s, q, r, &cfg)?, None)
        }
        NormWhich::Maurey => {
            let s = exponent(e.s, f.s, "s", None)?;
            params.s = Some(Exponent(s));
            (maurey_norm(&seq, s, q, &cfg)?, None)
        }
        NormWhich::Mixed => {
            let s = exponent(e.s, f.s, "s", None)?;
            params.s = Some(Exponent(s));
            let b = mixed_norm(&seq, s, q, &cfg)?;
            (b.upper.clone(), Some(b))
        }
    };
    let which = format!("{:?}", a.which).to_lowercase();
    let h = header(
        "norm",
        &which,
        &a.search,
        DEFAULT_GRID,
        DEFAULT_TESTS,
        params,
    );
    write_settings(out, &h)?;
    writeln!(out, "value {}", estimate.value).map_err(io)?;
    writeln!(out, "bound {:?}", estimate.bound).map_err(io)?;
    writeln!(out, "converged {}", estimate.meta.converged).map_err(io)?;
    if let Some(mode) = &estimate.meta.exact_mode {
        writeln!(out, "exact mode {mode}").map_err(io)?;
    }
    if let Some(b) = &bracket {
        writeln!(
            out,
            "bracket [{}, {}], relative gap {:e}",
            b.lower.value, b.upper.value, b.relative_gap
        )
        .map_err(io)?;
    }
    writeln!(out, "certificate {}", witness_summary(&estimate.witness)).map_err(io)?;
    if let Some(path) = &a.out {
        #[derive(Serialize)]
        struct Report<'a> {
            #[serde(flatten)]
            header: &'a ReportHeader,
            estimate: &'a crate::seqnorms::NormEstimate,
            #[serde(skip_serializing_if = "Option::is_none")]
            bracket: Option<&'a crate::seqnorms::MixedBracket>,
        }
        write_json(
            path,
            &Report {
                header: &h,
                estimate: &estimate,
                bracket: bracket.as_ref(),
            },
        )?;
    }
    Ok(0)
}

fn cmd_opnorm(a: &OpnormArgs, out: &mut dyn Write) -> CliResult {
    let inst = read_instance(&a.input)?;
    let t = inst.operator()?;
    let cfg = a.search.config();
    let e = &a.exponents;
    let f = &inst.params;
    let mut params = ParamsSpec::default();
    let estimate: OpNormEstimate = match a.which {
        OpnormWhich::Op => {
            let n = operator_norm(&t, &cfg)?;
            let mut v = vec![0.0; t.domain().dim()];
            if let Witness::Functional { functional } = &n.witness {
                v = t.adjoint_apply(functional)?.0;
                t.domain().project_sphere(&mut v);
            }
            OpNormEstimate {
                value: n.value,
                bound: n.bound,
                witness_vectors: SequenceFamily::from_rows(t.domain().clone(), vec![v])?,
                witness_functionals: None,
                m: 1,
                n: 0,
                converged: n.meta.converged,
                denominator_exact: true,
            }
        }
        OpnormWhich::Piqp => {
            let q = exponent(e.q, f.q, "q", None)?;
            let p = exponent(e.p, f.p, "p", None)?;
            params.q = Some(Exponent(q));
            params.p = Some(Exponent(p));
            pi_qp(&t, q, p, a.m, &cfg)?
        }
        OpnormWhich::WA => {
            let s = exponent(e.s, f.s, "s", None)?;
            let q = exponent(e.q, f.q, "q", None)?;
            let r = exponent(e.r, f.r, "r", None)?;
            let p = exponent(e.p, f.p, "p", None)?;
            params = ParamsSpec {
                s: Some(Exponent(s)),
                q: Some(Exponent(q)),
                r: Some(Exponent(r)),
                p: Some(Exponent(p)),
            };
            weakly_aniso_norm(&t, s, q, r, p, a.m, a.n, &cfg)?
        }
        OpnormWhich::PiA => {
            let s = exponent(e.s, f.s, "s", None)?;
            let q = exponent(e.q, f.q, "q", None)?;
            let r = exponent(e.r, f.r, "r", None)?;
            let p = exponent(e.p, f.p, "p", None)?;
            params = ParamsSpec {
                s: Some(Exponent(s)),
                q: Some(Exponent(q)),
                r: Some(Exponent(r)),
                p: Some(Exponent(p)),
            };
            aniso_summing_norm(&t, p, s, q, r, a.m, &cfg)?
        }
    };
    let which = match a.which {
        OpnormWhich::Op => "op",
        OpnormWhich::Piqp => "piqp",
        OpnormWhich::WA => "wA",
        OpnormWhich::PiA => "piA",
    };
    let h = header(
        "opnorm",
        which,
        &a.search,
        DEFAULT_GRID,
        DEFAULT_TESTS,
        params,
    );
    write_settings(out, &h)?;
    writeln!(out, "value {}", estimate.value).map_err(io)?;
    writeln!(out, "bound {:?}", estimate.bound).map_err(io)?;
    writeln!(out, "converged {}", estimate.converged).map_err(io)?;
    writeln!(out, "denominator exact {}", estimate.denominator_exact).map_err(io)?;
    writeln!(
        out,
        "certificate {} vectors, {} functionals",
        estimate.witness_vectors.len(),
        estimate.witness_functionals.as_ref().map_or(0, |f| f.len())
    )
    .map_err(io)?;
    if let Some(path) = &a.out {
        #[derive(Serialize)]
        struct Report<'a> {
            #[serde(flatten)]
            header: &'a ReportHeader,
            estimate: &'a OpNormEstimate,
        }
        write_json(
            path,
            &Report {
                header: &h,
                estimate: &estimate,
            },
        )?;
    }
    Ok(0)
}

fn cmd_pietsch(a: &PietschArgs, out: &mut dyn Write) -> CliResult {
    let inst = read_instance(&a.input)?;
    let t = inst.operator()?;
    let cfg = a.search.config();
    let e = &a.exponents;
    let f = &inst.params;
    let s = exponent(e.s, f.s, "s", None)?;
    let r = exponent(e.r, f.r, "r", None)?;
    let p = exponent(e.p, f.p, "p", None)?;
    let params = ParamsSpec {
        s: Some(Exponent(s)),
        q: Some(Exponent(p)),
        r: Some(Exponent(r)),
        p: Some(Exponent(p)),
    };
    let opts = DominationOptions {
        seed: a.search.seed,
        ..DominationOptions::default()
    };
    let dom = t.domain();
    let (witness, search): (DominationWitness, OpNormEstimate) = match a.which {
        PietschWhich::Weak => {
            let w = weakly_aniso_norm(&t, s, p, r, p, a.m, a.n, &cfg)?;
            let fam = w
                .witness_functionals
                .clone()
                .ok_or_else(|| Error::Numeric("search returned no family".into()))?;
            let grid = build_dual_grid(dom, a.grid, a.search.seed)?;
            let tests = standard_tests(dom, a.tests, a.search.seed, &w.witness_vectors.rows());
            (
                domination_lp_weak(&t, s, p, r, &grid, &[fam], &tests, &opts)?,
                w,
            )
        }
        PietschWhich::Aniso => {
            let w = aniso_summing_norm(&t, p, s, p, r, a.m, &cfg)?;
            let mut fams = build_family_grid(dom, r, a.grid, a.search.seed)?;
            if let Some(fam) = w.witness_functionals.clone() {
                fams.push(fam);
            }
            let tests = standard_tests(dom, a.tests, a.search.seed, &w.witness_vectors.rows());
            (domination_lp_aniso(&t, p, s, r, &fams, &tests, &opts)?, w)
        }
    };
    let which = format!("{:?}", a.which).to_lowercase();
    let h = header("pietsch", &which, &a.search, a.grid, a.tests, params);
    write_settings(out, &h)?;
    writeln!(out, "C {}", witness.c).map_err(io)?;
    writeln!(out, "support size {}", witness.measure.support_size()).map_err(io)?;
    writeln!(out, "train residual {:e}", witness.train_residual).map_err(io)?;
    writeln!(out, "holdout residual {:e}", witness.holdout_residual).map_err(io)?;
    writeln!(out, "search estimate {} (q = p)", search.value).map_err(io)?;
    if let Some(path) = &a.out {
        #[derive(Serialize)]
        struct Report<'a> {
            #[serde(flatten)]
            header: &'a ReportHeader,
            witness: &'a DominationWitness,
            search: &'a OpNormEstimate,
        }
        write_json(
            path,
            &Report {
                header: &h,
                witness: &witness,
                search: &search,
            },
        )?;
    }
    Ok(0)
}

fn cmd_suite(a: &SuiteArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = SuiteConfig {
        seed: a.seed,
        restarts: a.restarts,
        tol: a.tol,
        grid: a.grid,
        tests: a.tests,
        checks: a.checks.clone(),
        tolerance: a.tolerance,
    };
    let report = run_suite(&config)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError {
        code: 3,
        message: e.to_string(),
    })?;
    text.push('\n');
    out.write_all(text.as_bytes()).map_err(io)?;
    if let Some(path) = &a.out {
        std::fs::write(path, &text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    for c in &report.checks {
        writeln!(
            err,
            "{:<20} {:<12} max gap {:.3e} (tolerance {:e})",
            c.id,
            format!("{:?}", c.status).to_lowercase(),
            c.max_gap,
            c.tolerance
        )
        .map_err(io)?;
    }
    let failed = report.checks.iter().any(|c| c.status == CheckStatus::Fail);
    Ok(if failed { 1 } else { 0 })
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> CliResult {
    if a.dim == 0 {
        return Err(usage("--dim must be at least 1"));
    }
    let mut rng = rng_for(a.seed, 0x6E6);
    let mut draw = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let space = SpaceSpec {
        dim: a.dim,
        kind: "lp".into(),
        p: a.kind,
        weights: None,
    };
    let sequence = draw(a.count, a.dim);
    let operator = a.codim.map(|codim| OperatorSpec {
        matrix: draw(codim, a.dim),
        domain: space.clone(),
        codomain: SpaceSpec {
            dim: codim,
            kind: "lp".into(),
            p: a.cokind.unwrap_or(a.kind),
            weights: None,
        },
    });
    let inst = InstanceFile {
        version: FORMAT_VERSION,
        space: Some(space),
        sequence: Some(sequence),
        operator,
        params: ParamsSpec::default(),
    };
    inst.validate().map_err(usage)?;
    std::fs::write(&a.out, inst.to_json())
        .map_err(|e| usage(format!("{}: {e}", a.out.display())))?;
    writeln!(out, "wrote {}", a.out.display()).map_err(io)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["anisum"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn write_instance(dir: &Path, name: &str, text: &str) -> String {
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path.to_string_lossy().into_owned()
    }

    const BASIS2: &str = r#"{"version": 1, "space": {"dim": 2, "kind": "lp", "p": 2}, "sequence": [[1, 0], [0, 1]]}"#;

    #[test]
    fn exponent_json_forms() {
        let e: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.0.is_infinite());
        let e: Exponent = serde_json::from_str("1.5").unwrap();
        assert_eq!(e.0, 1.5);
        assert_eq!(
            serde_json::to_string(&Exponent(f64::INFINITY)).unwrap(),
            "\"inf\""
        );
        assert!(serde_json::from_str::<Exponent>("\"x\"").is_err());
    }

    #[test]
    fn parse_errors_name_the_field() {
        let e = InstanceFile::parse(r#"{"version": 1, "space": {"dim": 2, "kind": "lp", "p": 2}, "sequence": [[1, 0], [0]]}"#)
            .unwrap_err();
        assert!(e.contains("sequence[1]"), "{e}");
        let e = InstanceFile::parse("{\n\"version\": 1,\n\"space\": 3}").unwrap_err();
        assert!(e.starts_with("line 3"), "{e}");
        let e = InstanceFile::parse(r#"{"version": 2}"#).unwrap_err();
        assert!(e.contains("version"), "{e}");
    }

    #[test]
    fn aniso_basis_value() {
        let dir = tempfile::tempdir().unwrap();
        let f = write_instance(dir.path(), "b.json", BASIS2);
        let (code, out, _) = run_args(&[
            "norm", "--in", &f, "--which", "aniso", "--s", "2", "--q", "1", "--r", "2",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("# defaults: restarts 32"));
        let v: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("value "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-6);
        assert!(out.contains("bound Lower"));
        assert!(out.contains("converged true"));
    }

    #[test]
    fn strong_norm_exact() {
        let dir = tempfile::tempdir().unwrap();
        let f = write_instance(dir.path(), "b.json", BASIS2);
        let (code, out, _) = run_args(&["norm", "--in", &f, "--which", "strong", "--q", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("value 1.414213562373095"));
        assert!(out.contains("bound Exact"));
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let f = write_instance(dir.path(), "b.json", BASIS2);
        let (code, _, err) = run_args(&[
            "norm", "--in", &f, "--which", "aniso", "--s", "2", "--q", "1", "--r", "3",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("degenerate regime: s < r"), "{err}");
        let (code, _, _) = run_args(&["frobnicate"]);
        assert_eq!(code, 1);
        let (code, _, _) = run_args(&["norm", "--in", &f, "--which", "aniso", "--bogus"]);
        assert_eq!(code, 1);
        let bad = write_instance(dir.path(), "bad.json", "{");
        let (code, _, err) = run_args(&["norm", "--in", &bad, "--which", "strong", "--q", "1"]);
        assert_eq!(code, 1);
        assert!(err.contains("line 1"), "{err}");
        let (code, _, _) = run_args(&["suite", "--check", "nope"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn pietsch_scalar_identity() {
        let dir = tempfile::tempdir().unwrap();
        let f = write_instance(
            dir.path(),
            "id.json",
            r#"{"version": 1, "operator": {"matrix": [[1]], "domain": {"dim": 1, "kind": "lp", "p": 2}, "codomain": {"dim": 1, "kind": "lp", "p": 2}}, "params": {"s": 2, "r": 2, "p": 1}}"#,
        );
        let (code, out, err) = run_args(&["pietsch", "--in", &f, "--which", "weak"]);
        assert_eq!(code, 0, "{err}");
        let c: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("C "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((c - 1.0).abs() < 1e-9);
        assert!(out.contains("train residual 0e0"));
    }

    #[test]
    fn gen_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let a_str = a.to_string_lossy().into_owned();
        let (code, _, _) = run_args(&[
            "gen", "--dim", "2", "--count", "3", "--kind", "lp:2", "--seed", "1", "--codim", "3",
            "--cokind", "lp:inf", "--out", &a_str,
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(InstanceFile::parse(&text).unwrap().to_json(), text);
        assert!(text.contains("\"inf\""));
        let b = dir.path().join("b.json");
        let b_str = b.to_string_lossy().into_owned();
        run_args(&[
            "gen", "--dim", "2", "--count", "3", "--kind", "lp:2", "--seed", "1", "--codim", "3",
            "--cokind", "lp:inf", "--out", &b_str,
        ]);
        assert_eq!(std::fs::read_to_string(&b).unwrap(), text);
        let (code, out, _) = run_args(&["norm", "--in", &a_str, "--which", "weak", "--q", "2"]);
        assert_eq!(code, 0);
        let (code2, out2, _) = run_args(&["norm", "--in", &a_str, "--which", "weak", "--q", "2"]);
        assert_eq!((code, &out), (code2, &out2));
        let (code, _, _) = run_args(&["opnorm", "--in", &a_str, "--which", "op"]);
        assert_eq!(code, 0);
    }
}
