//! The `eigenshrink` command line.
//!
//! Exit codes: 0 success, 2 bad usage or input, 3 numerical failure,
//! 64 unknown subcommand. `EIGENSHRINK_THREADS` caps the worker pool.
//! Files are written atomically; without an output path the primary
//! artifact goes to stdout.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classify::{evaluate, fit_lda, PluginSpec, Priors};
use crate::error::{Error, Result};
use crate::hciz::{approximation_gap, SpectralProfile};
use crate::io::{fmt_f64, read_data, read_matrix, to_json, write_atomic, write_matrix};
use crate::losses::LossKind;
use crate::seed;
use crate::selection::{
    bootstrap_select, cv_select, Folds, KappaGrid, RiskCurve, DEFAULT_BOOTSTRAP_REPLICATES, DEFAULT_GRID_STEP,
};
use crate::shrinkage::{assemble, check_kappa, lambda_kappa};
use crate::simbench::{
    bench_prial, mc_risk_with_sigma, make_sigma, sigma_from_matrix, BenchResult, EstimatorSpec, ReferenceSpec,
    ScenarioKind, ScenarioSpec, DEFAULT_ORACLE_REPS, DEFAULT_REPS,
};
use crate::spectra::{center, decompose, DataMatrix, SpectrumJson, DEFAULT_RANK_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_UNKNOWN_COMMAND: i32 = 64;
pub const THREADS_ENV: &str = "EIGENSHRINK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "eigenshrink", version, about = "Equivariant covariance shrinkage for p > n")]
struct Cli {
    /// Report written files on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample eigenvalues (and optionally the frame) of a data matrix.
    Decompose(DecomposeArgs),
    /// Shrinkage eigenvalues for a fixed or selected kappa.
    Estimate(EstimateArgs),
    /// Risk curve over the kappa grid by bootstrap or cross-validation.
    SelectKappa(SelectKappaArgs),
    /// Monte-Carlo risk of estimators on a simulated scenario.
    Simulate(SimulateArgs),
    /// Paired Monte-Carlo comparison with a PRIAL column.
    Benchmark(BenchmarkArgs),
    /// Large-p HCIZ approximation against the Monte-Carlo oracle.
    ValidateHciz(HcizArgs),
    /// Linear discriminant analysis with a shrinkage plug-in.
    Lda(LdaArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Data matrix, CSV or EIGS binary.
    #[arg(long, short)]
    input: PathBuf,
    /// The CSV input has a header line.
    #[arg(long)]
    header: bool,
    /// Subtract column means before decomposing.
    #[arg(long)]
    center: bool,
}

impl InputArgs {
    fn load(&self) -> Result<DataMatrix> {
        let x = read_data(&self.input, self.header)?;
        if self.center {
            center(&x)
        } else {
            Ok(x)
        }
    }
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    with_frame: bool,
    /// JSON output path.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Boot,
    Cv,
}

/// Options shared by every command that selects kappa.
#[derive(Debug, Args)]
struct SelectionArgs {
    #[arg(long, default_value = "frob")]
    loss: LossKind,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = DEFAULT_BOOTSTRAP_REPLICATES)]
    b: usize,
    /// `loo` or a fold count.
    #[arg(long, default_value = "loo")]
    folds: Folds,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `ns`, `sample`, or a path to a covariance matrix.
    #[arg(long, default_value = "ns")]
    reference: String,
    /// Evaluate the loss as L(reference, estimate).
    #[arg(long)]
    invert_roles: bool,
}

impl SelectionArgs {
    fn grid(&self) -> Result<KappaGrid> {
        KappaGrid::with_step(self.grid_step)
    }

    fn reference(&self, p: usize) -> Result<ReferenceSpec> {
        Ok(match self.reference.to_ascii_lowercase().as_str() {
            "ns" | "lambda-one-ns" => ReferenceSpec::LambdaOneNs,
            "sample" => ReferenceSpec::Sample,
            _ => ReferenceSpec::Fixed(sigma_from_matrix(read_matrix(Path::new(&self.reference), false)?, p)?),
        })
    }

    fn select(&self, method: MethodArg, x: &DataMatrix) -> Result<RiskCurve> {
        let grid = self.grid()?;
        match method {
            MethodArg::Boot => {
                let r = self.reference(x.cols())?.build(x)?;
                bootstrap_select(x, self.loss, &r, self.b, &grid, self.seed, self.invert_roles)
            }
            MethodArg::Cv => cv_select(x, self.loss, self.folds, &grid, self.seed),
        }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fixed kappa in [0, 1).
    #[arg(long, conflicts_with = "method")]
    kappa: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[command(flatten)]
    selection: SelectionArgs,
    /// JSON output path.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the dense estimate (`.bin`/`.eigs` for EIGS, else CSV).
    #[arg(long)]
    matrix_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectKappaArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[command(flatten)]
    selection: SelectionArgs,
    /// JSON output path.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// CSV output path with columns kappa,risk.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// s1..s5 or `file`.
    #[arg(long)]
    scenario: ScenarioKind,
    /// Population covariance for `--scenario file`.
    #[arg(long, required_if_eq("scenario", "file"))]
    sigma_file: Option<PathBuf>,
    #[arg(long)]
    p: usize,
    /// p / n.
    #[arg(long)]
    gamma: f64,
    /// Comma-separated loss names, or `all`.
    #[arg(long, default_value = "frob")]
    loss: String,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ORACLE_REPS)]
    oracle_reps: usize,
    /// Bootstrap replicates for kappa-boot.
    #[arg(long = "B", default_value_t = DEFAULT_BOOTSTRAP_REPLICATES)]
    b: usize,
    #[arg(long, default_value = "loo")]
    folds: Folds,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    /// Bootstrap reference: `ns` or `sample`.
    #[arg(long, default_value = "ns")]
    reference: String,
    #[arg(long)]
    invert_roles: bool,
    /// CSV output path.
    #[arg(long, short, alias = "csv")]
    out: Option<PathBuf>,
    /// JSON output path.
    #[arg(long)]
    json: Option<PathBuf>,
}

impl ScenarioArgs {
    fn spec(&self) -> Result<ScenarioSpec> {
        let s = match self.scenario {
            ScenarioKind::File => {
                let path = self
                    .sigma_file
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("--scenario file needs --sigma-file".into()))?;
                ScenarioSpec::from_file(path, self.p, self.gamma)?
            }
            k => ScenarioSpec::new(k, self.p, self.gamma)?,
        };
        Ok(s.with_seed(self.seed))
    }

    fn losses(&self) -> Result<Vec<LossKind>> {
        LossKind::parse_list(&self.loss)
    }

    fn estimator(&self, tag: &str) -> Result<EstimatorSpec> {
        let grid = KappaGrid::with_step(self.grid_step)?;
        let reference = match self.reference.to_ascii_lowercase().as_str() {
            "ns" | "lambda-one-ns" => ReferenceSpec::LambdaOneNs,
            "sample" => ReferenceSpec::Sample,
            other => return Err(Error::Parse(format!("unknown bootstrap reference '{other}'"))),
        };
        Ok(match EstimatorSpec::parse(tag)? {
            EstimatorSpec::KappaOracle { .. } => EstimatorSpec::KappaOracle {
                grid,
                reps: self.oracle_reps,
            },
            EstimatorSpec::KappaBoot { select_loss, .. } => EstimatorSpec::KappaBoot {
                grid,
                replicates: self.b,
                reference,
                invert_roles: self.invert_roles,
                select_loss,
            },
            EstimatorSpec::KappaCv { select_loss, .. } => EstimatorSpec::KappaCv {
                grid,
                folds: self.folds,
                select_loss,
            },
            other => other,
        })
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated estimator tags.
    #[arg(long, default_value = "kappa-oracle")]
    estimator: String,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Candidate estimator.
    #[arg(long, default_value = "kappa-boot")]
    estimator: String,
    /// Estimator the PRIAL is measured against.
    #[arg(long, default_value = "sample")]
    baseline: String,
}

#[derive(Debug, Args)]
struct HcizArgs {
    /// Number of sample eigenvalues.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Sample eigenvalues; defaults to the odd numbers 2n−1, …, 3, 1.
    #[arg(long, value_delimiter = ',')]
    ell: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "10,30,100")]
    p_list: Vec<usize>,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "linspace:0.5:2")]
    profile: SpectralProfile,
    /// CSV output path.
    #[arg(long, short, alias = "csv")]
    out: Option<PathBuf>,
    /// JSON output path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LdaArgs {
    #[arg(long)]
    train0: PathBuf,
    #[arg(long)]
    train1: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// One 0/1 label per test row.
    #[arg(long)]
    labels: PathBuf,
    /// CSV inputs have a header line.
    #[arg(long)]
    header: bool,
    /// `kappa-boot`, `kappa-cv` or `kappa-fixed:<k>`.
    #[arg(long, default_value = "kappa-boot")]
    estimator: String,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long)]
    uniform_priors: bool,
    /// JSON output path.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Provenance attached to every output.
#[derive(Debug, Serialize)]
struct Meta {
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    seed_scheme: &'static str,
}

impl Meta {
    fn new(command: &'static str, seed: Option<u64>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            seed_scheme: seed::SCHEME,
        }
    }

    fn csv_comment(&self) -> String {
        let mut s = format!("# eigenshrink {} {}", self.version, self.command);
        if let Some(seed) = self.seed {
            let _ = write!(s, " seed={seed}");
        }
        let _ = writeln!(s, " seeds={}", self.seed_scheme);
        s
    }
}

#[derive(Serialize)]
struct WithMeta<'a, T: Serialize> {
    meta: Meta,
    #[serde(flatten)]
    body: &'a T,
}

/// Output buffered until the command finishes.
#[derive(Default)]
struct Ctx {
    stdout: Vec<u8>,
    stderr: Vec<u8>,
    verbose: bool,
}

impl Ctx {
    fn emit(&mut self, path: Option<&Path>, content: &str) -> Result<()> {
        match path {
            Some(p) => {
                write_atomic(p, content.as_bytes())?;
                if self.verbose {
                    let _ = writeln!(self.stderr, "wrote {}", p.display());
                }
            }
            None => self.stdout.write_all(content.as_bytes())?,
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, path: Option<&Path>, meta: Meta, body: &T) -> Result<()> {
        self.emit(path, &to_json(&WithMeta { meta, body }))
    }
}

fn csv_table(meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = meta.csv_comment();
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn decompose_cmd(a: &DecomposeArgs, ctx: &mut Ctx) -> Result<()> {
    let spec = decompose(&a.input.load()?, DEFAULT_RANK_TOL)?;
    let body: SpectrumJson = spec.to_json(a.with_frame);
    ctx.json(a.out.as_deref(), Meta::new("decompose", None), &body)
}

#[derive(Serialize)]
struct EstimateOut {
    kappa: f64,
    p: usize,
    q: usize,
    lambda_hat: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<RiskCurve>,
}

fn estimate_cmd(a: &EstimateArgs, ctx: &mut Ctx) -> Result<()> {
    if let Some(k) = a.kappa {
        check_kappa(k)?;
    }
    let x = a.input.load()?;
    let spec = decompose(&x, DEFAULT_RANK_TOL)?;
    let (kappa, selection) = match (a.kappa, a.method) {
        (Some(k), _) => (k, None),
        (None, Some(m)) => {
            let curve = a.selection.select(m, &x)?;
            (curve.kappa_hat(), Some(curve))
        }
        (None, None) => return Err(Error::InvalidArgument("give --kappa or --method".into())),
    };
    let lam = lambda_kappa(&spec, kappa)?;
    if let Some(path) = &a.matrix_out {
        write_matrix(path, assemble(&spec, &lam)?.dense())?;
        if ctx.verbose {
            let _ = writeln!(ctx.stderr, "wrote {}", path.display());
        }
    }
    let body = EstimateOut {
        kappa,
        p: lam.p,
        q: lam.q,
        lambda_hat: lam.lambda_hat,
        selection,
    };
    let seed = a.method.map(|_| a.selection.seed);
    ctx.json(a.out.as_deref(), Meta::new("estimate", seed), &body)
}

fn select_kappa_cmd(a: &SelectKappaArgs, ctx: &mut Ctx) -> Result<()> {
    let x = a.input.load()?;
    let curve = a.selection.select(a.method, &x)?;
    let meta = || Meta::new("select-kappa", Some(a.selection.seed));
    if let Some(path) = &a.csv {
        let rows: Vec<Vec<String>> = curve
            .grid
            .values()
            .iter()
            .zip(&curve.risk)
            .map(|(&k, &r)| vec![fmt_f64(k), fmt_f64(r)])
            .collect();
        ctx.emit(Some(path), &csv_table(&meta(), &["kappa", "risk"], &rows))?;
        if a.out.is_none() {
            return Ok(());
        }
    }
    ctx.json(a.out.as_deref(), meta(), &curve)
}

/// One line of `simulate`/`benchmark` output.
#[derive(Debug, Serialize)]
struct ResultRow {
    scenario: String,
    p: usize,
    n: usize,
    loss: LossKind,
    estimator: String,
    mean: f64,
    se: f64,
    reps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    prial: Option<f64>,
}

#[derive(Serialize)]
struct Rows<'a> {
    results: &'a [ResultRow],
}

fn write_results(a: &ScenarioArgs, command: &'static str, rows: &[ResultRow], ctx: &mut Ctx) -> Result<()> {
    let with_prial = rows.iter().any(|r| r.prial.is_some());
    let mut header = vec!["scenario", "p", "n", "loss", "estimator", "mean", "se", "reps"];
    if with_prial {
        header.push("prial");
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.scenario.clone(),
                r.p.to_string(),
                r.n.to_string(),
                r.loss.tag().to_string(),
                r.estimator.clone(),
                fmt_f64(r.mean),
                fmt_f64(r.se),
                r.reps.to_string(),
            ];
            if let Some(pr) = r.prial {
                v.push(fmt_f64(pr));
            }
            v
        })
        .collect();
    let meta = || Meta::new(command, Some(a.seed));
    if let Some(path) = &a.json {
        ctx.json(Some(path), meta(), &Rows { results: rows })?;
        if a.out.is_none() {
            return Ok(());
        }
    }
    ctx.emit(a.out.as_deref(), &csv_table(&meta(), &header, &cells))
}

fn rows_of<'a>(scenario: &str, r: &'a BenchResult) -> impl Iterator<Item = ResultRow> + 'a {
    let scenario = scenario.to_string();
    r.estimates.iter().map(move |e| ResultRow {
        scenario: scenario.clone(),
        p: r.p,
        n: r.n,
        loss: r.loss,
        estimator: e.estimator.clone(),
        mean: e.mean,
        se: e.se,
        reps: e.reps,
        prial: None,
    })
}

fn simulate_cmd(a: &SimulateArgs, ctx: &mut Ctx) -> Result<()> {
    let s = &a.scenario;
    let spec = s.spec()?;
    let sigma = make_sigma(&spec)?;
    let losses = s.losses()?;
    let estimators = a
        .estimator
        .split(',')
        .map(|t| s.estimator(t.trim()))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &loss in &losses {
        for est in &estimators {
            let r = mc_risk_with_sigma(&spec, &sigma, est, loss, s.reps, s.seed)?;
            rows.extend(rows_of(spec.kind.tag(), &r));
        }
    }
    write_results(s, "simulate", &rows, ctx)
}

fn benchmark_cmd(a: &BenchmarkArgs, ctx: &mut Ctx) -> Result<()> {
    let s = &a.scenario;
    let spec = s.spec()?;
    let cand = s.estimator(&a.estimator)?;
    let base = s.estimator(&a.baseline)?;
    let results = bench_prial(&spec, &s.losses()?, (&cand, &base), s.reps, s.seed)?;
    let mut rows = Vec::new();
    for r in &results {
        let mut pair: Vec<ResultRow> = rows_of(spec.kind.tag(), r).collect();
        pair[0].prial = r.prial;
        pair[1].prial = Some(0.0);
        rows.extend(pair);
    }
    write_results(s, "benchmark", &rows, ctx)
}

#[derive(Serialize)]
struct GapOut<'a> {
    profile: String,
    ell: &'a [f64],
    samples: usize,
    rows: &'a [crate::hciz::GapRow],
}

fn hciz_cmd(a: &HcizArgs, ctx: &mut Ctx) -> Result<()> {
    let ell = match &a.ell {
        Some(e) if e.len() != a.n => {
            return Err(Error::DimensionMismatch {
                expected: a.n,
                got: e.len(),
            })
        }
        Some(e) => e.clone(),
        None => (0..a.n).map(|i| (2 * (a.n - i) - 1) as f64).collect(),
    };
    let gap = approximation_gap(&a.profile, &ell, &a.p_list, a.samples, a.seed)?;
    let meta = || Meta::new("validate-hciz", Some(a.seed));
    if let Some(path) = &a.json {
        let body = GapOut {
            profile: a.profile.to_string(),
            ell: &ell,
            samples: a.samples,
            rows: &gap,
        };
        ctx.json(Some(path), meta(), &body)?;
        if a.out.is_none() {
            return Ok(());
        }
    }
    let header = ["p", "n", "mc", "mc_iso", "approx", "approx_iso", "delta", "abs_delta", "mc_se"];
    let rows: Vec<Vec<String>> = gap
        .iter()
        .map(|g| {
            let mut v = vec![g.p.to_string(), g.n.to_string()];
            v.extend([g.mc, g.mc_iso, g.approx, g.approx_iso, g.delta, g.abs_delta, g.mc_se].map(fmt_f64));
            v
        })
        .collect();
    ctx.emit(a.out.as_deref(), &csv_table(&meta(), &header, &rows))
}

#[derive(Serialize)]
struct LdaOut {
    estimator: String,
    kappa: f64,
    priors: Priors,
    #[serde(flatten)]
    report: crate::classify::ClassificationReport,
}

fn read_labels(path: &Path, header: bool) -> Result<Vec<u8>> {
    let m = read_matrix(path, header)?;
    m.iter()
        .map(|&v| match v {
            0.0 => Ok(0),
            1.0 => Ok(1),
            _ => Err(Error::Parse(format!("label {v} in {} is not 0 or 1", path.display()))),
        })
        .collect()
}

fn lda_cmd(a: &LdaArgs, ctx: &mut Ctx) -> Result<()> {
    let x0 = read_data(&a.train0, a.header)?;
    let x1 = read_data(&a.train1, a.header)?;
    let test = read_data(&a.test, a.header)?;
    let labels = read_labels(&a.labels, a.header)?;
    let sel = &a.selection;
    let grid = sel.grid()?;
    let plugin = match EstimatorSpec::parse(&a.estimator)? {
        EstimatorSpec::KappaFixed(k) => PluginSpec::Fixed(k),
        EstimatorSpec::KappaBoot { .. } => PluginSpec::Boot {
            loss: sel.loss,
            reference: sel.reference(x0.cols())?,
            replicates: sel.b,
            grid,
            invert_roles: sel.invert_roles,
        },
        EstimatorSpec::KappaCv { .. } => PluginSpec::Cv {
            loss: sel.loss,
            folds: sel.folds,
            grid,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "estimator '{}' cannot be a discriminant plug-in",
                other.tag()
            )))
        }
    };
    let priors = if a.uniform_priors { Priors::Uniform } else { Priors::Proportions };
    let model = fit_lda(&x0, &x1, &plugin, priors, sel.seed)?;
    let body = LdaOut {
        estimator: a.estimator.clone(),
        kappa: model.kappa,
        priors,
        report: evaluate(&model, &test, &labels)?,
    };
    ctx.json(a.out.as_deref(), Meta::new("lda", Some(sel.seed)), &body)
}

fn dispatch(cli: &Cli, ctx: &mut Ctx) -> Result<()> {
    match &cli.command {
        Command::Decompose(a) => decompose_cmd(a, ctx),
        Command::Estimate(a) => estimate_cmd(a, ctx),
        Command::SelectKappa(a) => select_kappa_cmd(a, ctx),
        Command::Simulate(a) => simulate_cmd(a, ctx),
        Command::Benchmark(a) => benchmark_cmd(a, ctx),
        Command::ValidateHciz(a) => hciz_cmd(a, ctx),
        Command::Lda(a) => lda_cmd(a, ctx),
    }
}

/// Parses `EIGENSHRINK_THREADS`; unset or empty means the rayon default.
fn thread_count(value: Option<OsString>) -> std::result::Result<Option<usize>, String> {
    let Some(v) = value else { return Ok(None) };
    let s = v.to_string_lossy();
    if s.trim().is_empty() {
        return Ok(None);
    }
    match s.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(Some(n)),
        _ => Err(format!("{THREADS_ENV}='{s}' is not a positive integer")),
    }
}

/// Runs the CLI against the process environment and standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let threads = match thread_count(std::env::var_os(THREADS_ENV)) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("eigenshrink: error: {msg}");
            return EXIT_INPUT;
        }
    };
    run_with(args, threads, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// [`run`] with an explicit thread count and output streams.
pub fn run_with<I, T>(args: I, threads: Option<usize>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return EXIT_OK;
                }
                ErrorKind::InvalidSubcommand => EXIT_UNKNOWN_COMMAND,
                _ => EXIT_INPUT,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "eigenshrink: error: thread pool: {e}");
            return EXIT_NUMERIC;
        }
    };
    let mut ctx = Ctx {
        verbose: cli.verbose,
        ..Ctx::default()
    };
    let result = pool.install(|| dispatch(&cli, &mut ctx));
    if result.is_ok() {
        let _ = stdout.write_all(&ctx.stdout);
    }
    let _ = stderr.write_all(&ctx.stderr);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "eigenshrink: error: {e}");
            if e.is_numeric() {
                EXIT_NUMERIC
            } else {
                EXIT_INPUT
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("eigenshrink").chain(args.iter().copied());
        let code = run_with(argv, Some(1), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn parse_json(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    fn data_file(dir: &Path) -> PathBuf {
        let path = dir.join("x.csv");
        std::fs::write(&path, "1,0,0\n0,2,0\n").unwrap();
        path
    }

    #[test]
    fn estimate_kappa_zero() {
        let dir = tempfile::tempdir().unwrap();
        let x = data_file(dir.path());
        let (code, out, _) = call(&["estimate", "-i", x.to_str().unwrap(), "--kappa", "0"]);
        assert_eq!(code, 0);
        let v = parse_json(&out);
        let lam: Vec<f64> = serde_json::from_value(v["lambda_hat"].clone()).unwrap();
        assert_eq!(lam.len(), 3);
        for l in lam {
            assert!((l - 5.0 / 6.0).abs() < 1e-15);
        }
        assert_eq!(v["q"], 2);
        assert_eq!(v["meta"]["seed_scheme"], seed::SCHEME);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let x = data_file(dir.path());
        let xs = x.to_str().unwrap();
        let (code, _, err) = call(&["estimate", "-i", xs, "--kappa", "1"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("outside [0, 1)"));
        assert_eq!(err.lines().count(), 1);
        let (code, _, err) = call(&["frobnicate"]);
        assert_eq!(code, EXIT_UNKNOWN_COMMAND);
        assert!(err.contains("Usage"));
        assert_eq!(call(&["estimate", "-i", "/nonexistent.csv", "--kappa", "0"]).0, EXIT_INPUT);
        assert_eq!(call(&["simulate", "--scenario", "s9", "--p", "4", "--gamma", "1"]).0, EXIT_INPUT);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
        let zeros = dir.path().join("z.csv");
        std::fs::write(&zeros, "0,0\n0,0\n").unwrap();
        assert_eq!(call(&["decompose", "-i", zeros.to_str().unwrap()]).0, EXIT_NUMERIC);
    }

    #[test]
    fn failed_runs_leave_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let x = data_file(dir.path());
        let out = dir.path().join("est.json");
        let code = call(&["estimate", "-i", x.to_str().unwrap(), "--kappa", "2", "-o", out.to_str().unwrap()]).0;
        assert_eq!(code, EXIT_INPUT);
        assert!(!out.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn decompose_frame_toggle() {
        let dir = tempfile::tempdir().unwrap();
        let x = data_file(dir.path());
        let (_, plain, _) = call(&["decompose", "-i", x.to_str().unwrap()]);
        let (_, framed, _) = call(&["decompose", "-i", x.to_str().unwrap(), "--with-frame"]);
        assert!(parse_json(&plain).get("frame").is_none());
        assert!(parse_json(&framed).get("frame").is_some());
        assert_eq!(parse_json(&plain)["ell"][0], 4.0);
    }

    #[test]
    fn simulate_csv_matches_json() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("r.csv");
        let json = dir.path().join("r.json");
        let code = call(&[
            "simulate", "--scenario", "s5", "--p", "8", "--gamma", "2", "--loss", "frob,q", "--estimator",
            "kappa-fixed:0.5,sample", "--reps", "20", "--seed", "3", "--out", csv.to_str().unwrap(), "--json",
            json.to_str().unwrap(),
        ])
        .0;
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&csv).unwrap();
        let v = parse_json(&std::fs::read_to_string(&json).unwrap());
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 4);
        for (line, j) in rows.iter().zip(v["results"].as_array().unwrap()) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells[4], j["estimator"].as_str().unwrap());
            assert_eq!(cells[5].parse::<f64>().unwrap(), j["mean"].as_f64().unwrap());
            assert_eq!(cells[6].parse::<f64>().unwrap(), j["se"].as_f64().unwrap());
        }
    }

    #[test]
    fn threads_env_parsing() {
        assert_eq!(thread_count(None), Ok(None));
        assert_eq!(thread_count(Some("4".into())), Ok(Some(4)));
        assert!(thread_count(Some("0".into())).is_err());
        assert!(thread_count(Some("x".into())).is_err());
    }
}
