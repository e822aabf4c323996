//! Command-line front end: `mesh gen`, `analyze <kind>` and `verify <target>`.
//!
//! Every command prints one summary line `STATUS name key=value ...` as its last
//! line of output. Reports go to `--out-dir` when given, otherwise to stdout
//! before the summary. Exit codes: 0 pass, 1 identity failure, 2 usage or
//! input error, 3 ill-conditioned decision.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::assembly::{assemble, sign_audit, AssembledSystem};
use crate::graph::{build_graph, forcing_closure, restricted_zf_excess, GraphFile, ZfExcess};
use crate::io::{self, IoError};
use crate::mesh::{self, Mesh};
use crate::rng;
use crate::spectra::studies::{self, interlace_random, interlace_sweep};
use crate::spectra::{DtnSummary, Spectra, Tolerances};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ucp-fem",
    version,
    about = "Unique continuation checks for P1/Q1 Laplacian discretizations"
)]
pub struct Cli {
    /// Relative singular-value threshold for numerical kernels.
    #[arg(long, global = true, env = "UCP_FEM_TOL_RANK", default_value_t = 1e-9)]
    pub rank_tol: f64,
    /// Relative gap below which eigenvalues share a cluster.
    #[arg(
        long,
        global = true,
        env = "UCP_FEM_TOL_CLUSTER",
        default_value_t = 1e-8
    )]
    pub cluster_tol: f64,
    /// Inertia zero threshold relative to ||A|| + |lambda| ||M||.
    #[arg(long, global = true, env = "UCP_FEM_TOL_ZERO", default_value_t = 1e-9)]
    pub zero_tol: f64,
    /// Directory for report files; reports go to stdout when absent.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for every randomized trial.
    #[arg(long, global = true, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh generation.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Run one analysis on a mesh file.
    Analyze(AnalyzeArgs),
    /// Check a result end to end.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
}

#[derive(Debug, Subcommand)]
pub enum MeshAction {
    /// Generate a fixture mesh.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    HexRing,
    HexSplit,
    Ring,
    Annulus,
    AnnulusFilled,
    HexPatch,
    AnisoStrip,
    Tensor,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,
    /// Outer radius.
    #[arg(long, default_value_t = 3.0)]
    pub d: f64,
    /// Number of sides of a ring mesh.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Comma-separated x coordinates of a tensor mesh.
    #[arg(long, value_delimiter = ',')]
    pub xs: Vec<f64>,
    /// Comma-separated y coordinates of a tensor mesh.
    #[arg(long, value_delimiter = ',')]
    pub ys: Vec<f64>,
    /// Output mesh file; the mesh JSON goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeKind {
    Assemble,
    Signs,
    Zf,
    LeakyZf,
    Zfnumber,
    Inner,
    Dtn,
    Eigs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub kind: AnalyzeKind,
    #[arg(long)]
    pub mesh: PathBuf,
    /// Forcing seed: `boundary` or a comma-separated node list.
    #[arg(long, default_value = "boundary")]
    pub seed: String,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Largest excess tried by `zfnumber`.
    #[arg(long, default_value_t = 2)]
    pub cap: usize,
    /// Neumann eigenvector exported as CSV by `eigs`.
    #[arg(long)]
    pub vector: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyTarget {
    /// Inner solution of the hexagon ring and interlacing at it.
    Hexagon {
        #[arg(long, default_value_t = 3.0)]
        d: f64,
    },
    /// Random deformations of the hexagon ring.
    Perturb {
        #[arg(long, default_value_t = 3.0)]
        d: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Unique continuation and the leaky forcing certificate on a tensor grid.
    Tensor {
        #[arg(long, default_value_t = 5)]
        nx: usize,
        #[arg(long, default_value_t = 4)]
        ny: usize,
        #[arg(long)]
        random_spacing: bool,
    },
    /// Interlacing identities on a mesh file or fixture.
    Interlace {
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// One of hex-ring, hex-split, heptagon-ring, annulus, tensor-0, tensor-1, tensor-2.
        #[arg(long, default_value = "hex-ring")]
        fixture: String,
        /// `a:b:n` evenly spaced lambdas; eigenvalue locations are always added.
        #[arg(long)]
        sweep: Option<String>,
        /// Seeded uniform lambdas in (0, max eigenvalue).
        #[arg(long, default_value_t = 50)]
        random: usize,
    },
    /// Inner solution of the annulus and its zero extension.
    Annulus {
        #[arg(long, default_value_t = 3.0)]
        d: f64,
    },
    /// Parity argument and unique continuation on the heptagon ring.
    Heptagon {
        #[arg(long, default_value_t = 3.0)]
        d: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Flag,
    Error,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => EXIT_PASS,
            Status::Fail => EXIT_FAIL,
            Status::Error => EXIT_USAGE,
            Status::Flag => EXIT_FLAGGED,
        }
    }

    fn word(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Flag => "FLAG",
            Status::Error => "ERROR",
        }
    }

    /// Failure outranks a conditioning flag.
    fn judge(ok: bool, flagged: bool) -> Status {
        match (ok, flagged) {
            (false, _) => Status::Fail,
            (true, true) => Status::Flag,
            (true, false) => Status::Pass,
        }
    }
}

/// Result of one command: the summary line plus an optional report.
pub struct Outcome {
    pub status: Status,
    pub name: String,
    pub fields: Vec<(String, String)>,
    pub report: Option<(String, String)>,
}

impl Outcome {
    fn new(name: &str) -> Self {
        Outcome {
            status: Status::Pass,
            name: name.into(),
            fields: vec![],
            report: None,
        }
    }

    fn kv(mut self, key: &str, value: impl Display) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    fn status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    fn report<T: Serialize + ?Sized>(mut self, file: &str, value: &T) -> Result<Self, CliError> {
        self.report = Some((file.into(), io::to_json(value)?));
        Ok(self)
    }

    pub fn summary_line(&self) -> String {
        let mut line = format!("{} {}", self.status.word(), self.name);
        for (k, v) in &self.fields {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Spectra(#[from] crate::spectra::SpectraError),
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Assembly(#[from] crate::assembly::AssemblyError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("{0}")]
    Usage(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(IoError::Io(e))
    }
}

/// Parses `args` and runs the command, writing to `out`. Returns the exit code.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = execute(&cli).unwrap_or_else(|e| {
        Outcome::new(&command_name(&cli))
            .status(Status::Error)
            .kv("message", quote(&e))
    });
    emit(&cli, &outcome, out)
}

fn command_name(cli: &Cli) -> String {
    match &cli.command {
        Command::Mesh { .. } => "mesh-gen".into(),
        Command::Analyze(args) => format!("analyze-{}", kind_name(args.kind)),
        Command::Verify { target } => format!("verify-{}", target_name(target)),
    }
}

fn target_name(target: &VerifyTarget) -> &'static str {
    match target {
        VerifyTarget::Hexagon { .. } => "hexagon",
        VerifyTarget::Perturb { .. } => "perturb",
        VerifyTarget::Tensor { .. } => "tensor",
        VerifyTarget::Interlace { .. } => "interlace",
        VerifyTarget::Annulus { .. } => "annulus",
        VerifyTarget::Heptagon { .. } => "heptagon",
    }
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn quote(e: &impl Display) -> String {
    format!("{:?}", e.to_string())
}

fn emit<W: Write>(cli: &Cli, outcome: &Outcome, out: &mut W) -> i32 {
    if let Some((file, text)) = &outcome.report {
        match &cli.out_dir {
            Some(dir) => {
                if let Err(e) =
                    std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(file), text))
                {
                    let _ = writeln!(out, "ERROR {} message={}", outcome.name, quote(&e));
                    return EXIT_USAGE;
                }
            }
            None => {
                let _ = out.write_all(text.as_bytes());
            }
        }
    }
    let _ = writeln!(out, "{}", outcome.summary_line());
    outcome.status.code()
}

pub fn tolerances(cli: &Cli) -> Result<Tolerances, CliError> {
    let tol = Tolerances {
        rank: cli.rank_tol,
        cluster: cli.cluster_tol,
        zero: cli.zero_tol,
    };
    tol.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(tol)
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = tolerances(cli)?;
    match &cli.command {
        Command::Mesh {
            action: MeshAction::Gen(args),
        } => mesh_gen(cli, args),
        Command::Analyze(args) => analyze(cli, args, &tol),
        Command::Verify { target } => verify(cli, target, &tol),
    }
}

pub fn generate(args: &GenArgs) -> Result<Mesh, CliError> {
    Ok(match args.shape {
        Shape::HexRing => mesh::gen_polygon_ring(6, args.d)?,
        Shape::HexSplit => mesh::gen_hexagon_split(args.d)?,
        Shape::Ring => mesh::gen_polygon_ring(args.k, args.d)?,
        Shape::Annulus => mesh::gen_annulus(args.d)?,
        Shape::AnnulusFilled => {
            let host = mesh::gen_annulus(args.d)?;
            let patch = mesh::inner_hexagon_patch();
            let shared = mesh::match_boundary(&host, &patch)?;
            mesh::embed(&host, &patch, &shared)?
        }
        Shape::HexPatch => mesh::inner_hexagon_patch(),
        Shape::AnisoStrip => mesh::gen_aniso_strip(),
        Shape::Tensor => mesh::gen_tensor_product(&args.xs, &args.ys)?,
    })
}

fn mesh_gen(cli: &Cli, args: &GenArgs) -> Result<Outcome, CliError> {
    let m = generate(args)?;
    let boundary = mesh::boundary_partition(&m)?.n_boundary();
    let mut outcome = Outcome::new("mesh-gen")
        .kv("nodes", m.n_nodes())
        .kv("elements", m.n_elements())
        .kv("boundary", boundary);
    match &args.out {
        Some(path) => {
            let path = resolve(cli, path);
            io::write_mesh(&path, &m)?;
            outcome = outcome.kv("out", path.display());
        }
        None => outcome.report = Some(("mesh.json".into(), io::mesh_to_json(&m)?)),
    }
    Ok(outcome)
}

/// Relative output paths land in `--out-dir` when one is given.
fn resolve(cli: &Cli, path: &Path) -> PathBuf {
    match &cli.out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn parse_seed(spec: &str, sys: &AssembledSystem) -> Result<Vec<usize>, CliError> {
    if spec == "boundary" {
        return Ok(sys.partition.boundary.clone());
    }
    spec.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad seed vertex {s:?}")))
        })
        .collect()
}

#[derive(Serialize)]
struct ForcingReport<'a> {
    seed: &'a [usize],
    leaky: bool,
    forced_all: bool,
    final_blue: Vec<usize>,
    chronicle: &'a [crate::graph::ForceStep],
    graph: GraphFile,
}

#[derive(Serialize)]
struct AssembleReport {
    n: usize,
    nnz_a: usize,
    nnz_m: usize,
    n_interior: usize,
    n_boundary: usize,
    area: f64,
    mass_total: f64,
    max_row_sum: f64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct EigsReport<'a> {
    neumann: &'a [f64],
    dirichlet: &'a [f64],
}

fn analyze(cli: &Cli, args: &AnalyzeArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let m = io::read_mesh(&args.mesh)?;
    let sys = assemble(&m)?;
    let name = format!("analyze-{}", kind_name(args.kind));
    let out = Outcome::new(&name);
    match args.kind {
        AnalyzeKind::Assemble => {
            let files = match &cli.out_dir {
                Some(dir) => io::export_system(dir, &sys)?,
                None => vec![],
            };
            let max_row_sum = sys.a.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max);
            let report = AssembleReport {
                n: sys.n(),
                nnz_a: sys.stiffness.entries.len(),
                nnz_m: sys.mass.entries.len(),
                n_interior: sys.partition.n_interior(),
                n_boundary: sys.partition.n_boundary(),
                area: m.area(),
                mass_total: sys.m.sum(),
                max_row_sum,
                files,
            };
            out.kv("n", report.n)
                .kv("nnz_a", report.nnz_a)
                .kv("nnz_m", report.nnz_m)
                .kv("n_interior", report.n_interior)
                .kv("n_boundary", report.n_boundary)
                .kv("mass_total", num(report.mass_total))
                .report("assemble.json", &report)
        }
        AnalyzeKind::Signs => {
            let audit = sign_audit(&sys);
            out.kv("offdiag_nonpositive", audit.offdiag_nonpositive)
                .kv("positive", audit.positive_entries.len())
                .report("signs.json", &audit)
        }
        AnalyzeKind::Zf | AnalyzeKind::LeakyZf => {
            let leaky = args.kind == AnalyzeKind::LeakyZf;
            let seed = parse_seed(&args.seed, &sys)?;
            let g = build_graph(&sys);
            let r = forcing_closure(&g, &seed, leaky)?;
            let report = ForcingReport {
                seed: &seed,
                leaky,
                forced_all: r.forced_all,
                final_blue: r.final_blue.iter().copied().collect(),
                chronicle: &r.chronicle,
                graph: GraphFile::from(&g),
            };
            out.kv("forced_all", r.forced_all)
                .kv("blue", r.final_blue.len())
                .kv("steps", r.chronicle.len())
                .report(if leaky { "leaky-zf.json" } else { "zf.json" }, &report)
        }
        AnalyzeKind::Zfnumber => {
            let g = build_graph(&sys);
            let excess = restricted_zf_excess(&g, &sys.partition.boundary, args.cap)?;
            let shown = match excess {
                ZfExcess::Exact(k) => k.to_string(),
                ZfExcess::ExceedsCap(c) => format!(">{c}"),
            };
            out.kv("excess", shown).report("zfnumber.json", &excess)
        }
        AnalyzeKind::Inner => {
            let sp = Spectra::new(&sys, *tol)?;
            let report = sp.inner_scan();
            if let Some(dir) = &cli.out_dir {
                for (t, e) in report.nontrivial().enumerate() {
                    for (b, v) in e.basis.iter().enumerate() {
                        let mut full = DVector::zeros(sys.n());
                        for (&node, &x) in sys.partition.interior.iter().zip(v) {
                            full[node] = x;
                        }
                        std::fs::create_dir_all(dir)?;
                        let file = std::fs::File::create(dir.join(format!("inner-{t}-{b}.csv")))?;
                        io::write_eigenvector_csv(file, &m, &full)?;
                    }
                }
            }
            let mut o = out
                .kv("ucp", report.ucp)
                .kv("nontrivial", report.nontrivial().count());
            for e in report.nontrivial() {
                o = o.kv("lambda", num(e.lambda)).kv("dim", e.dim_inner);
            }
            o.status(Status::judge(true, report.flagged))
                .report("inner.json", &report)
        }
        AnalyzeKind::Dtn => {
            let sp = Spectra::new(&sys, *tol)?;
            let s = DtnSummary::new(&sp.dtn(args.lambda), sp.zero_tol(args.lambda));
            out.kv("lambda", num(s.lambda))
                .kv("dim_q", s.dim_q)
                .kv("i_infinity", s.i_infinity)
                .kv("n_minus", s.n_minus)
                .kv("n_zero", s.n_zero)
                .kv("n_plus", s.n_plus)
                .status(Status::judge(true, s.flagged))
                .report("dtn.json", &s)
        }
        AnalyzeKind::Eigs => {
            let sp = Spectra::new(&sys, *tol)?;
            if let Some(k) = args.vector {
                if k >= sys.n() {
                    return Err(CliError::Usage(format!("vector index {k} out of range")));
                }
                let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
                std::fs::create_dir_all(&dir)?;
                let file = std::fs::File::create(dir.join(format!("neumann-{k}.csv")))?;
                io::write_eigenvector_csv(file, &m, &sp.neumann.vectors.column(k).into_owned())?;
            }
            let report = EigsReport {
                neumann: &sp.neumann.values,
                dirichlet: &sp.dirichlet.values,
            };
            out.kv("neumann", sp.neumann.values.len())
                .kv("dirichlet", sp.dirichlet.values.len())
                .kv(
                    "dirichlet_min",
                    num(sp.dirichlet.values.first().copied().unwrap_or(f64::NAN)),
                )
                .report("eigs.json", &report)
        }
    }
}

fn kind_name(kind: AnalyzeKind) -> String {
    kind.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn parse_sweep(spec: &str) -> Result<(f64, f64, usize), CliError> {
    let bad = || CliError::Usage(format!("sweep must be a:b:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) || n == 0 {
        return Err(bad());
    }
    Ok((a, b, n))
}

#[derive(Serialize)]
struct InterlaceReport<'a> {
    mesh: String,
    records: &'a [crate::spectra::InterlaceRecord],
}

fn verify(cli: &Cli, target: &VerifyTarget, tol: &Tolerances) -> Result<Outcome, CliError> {
    match target {
        VerifyTarget::Hexagon { d } => {
            let r = studies::hexagon_study(*d, tol)?;
            Outcome::new("verify-hexagon")
                .kv("d", num(*d))
                .kv("lambda_star", num(r.lambda_star))
                .kv("lambda_found", r.lambda_found.map_or("none".into(), num))
                .kv("vector_error", num(r.vector_error))
                .kv(
                    "interlace",
                    r.interlace.identity_holds && r.interlace.codim_holds,
                )
                .status(Status::judge(r.passed, r.interlace.flagged))
                .report("hexagon.json", &r)
        }
        VerifyTarget::Perturb { d, trials, step } => {
            let t = studies::perturbation_trials(*d, *trials, *step, cli.rng_seed, tol)?;
            let ok = t.both * 20 >= 19 * t.trials && t.forms_agree == t.trials;
            let flagged = t.records.iter().any(|r| r.flagged);
            Outcome::new("verify-perturb")
                .kv("trials", t.trials)
                .kv("condition_met", t.condition_met)
                .kv("ucp_after", t.ucp_after)
                .kv("both", t.both)
                .kv("forms_agree", t.forms_agree)
                .kv("seed", t.seed)
                .status(Status::judge(ok, flagged))
                .report("perturb.json", &t)
        }
        VerifyTarget::Tensor {
            nx,
            ny,
            random_spacing,
        } => {
            if *nx < 2 || *ny < 2 {
                return Err(CliError::Usage(
                    "tensor grids need at least 2x2 nodes".into(),
                ));
            }
            let (xs, ys) = if *random_spacing {
                let mut r = rng::seeded(cli.rng_seed);
                (
                    rng::random_spacing(&mut r, *nx),
                    rng::random_spacing(&mut r, *ny),
                )
            } else {
                (
                    (0..*nx).map(|i| i as f64).collect(),
                    (0..*ny).map(|j| j as f64).collect(),
                )
            };
            let r = studies::tensor_study(&xs, &ys, tol)?;
            Outcome::new("verify-tensor")
                .kv("nx", nx)
                .kv("ny", ny)
                .kv("ucp", r.ucp)
                .kv("certificate", r.certificate)
                .kv("leaked", r.leaked_edges)
                .status(Status::judge(r.ucp && r.certificate, r.flagged))
                .report("tensor.json", &r)
        }
        VerifyTarget::Interlace {
            mesh,
            fixture,
            sweep,
            random,
        } => {
            let (label, m) = match mesh {
                Some(path) => (path.display().to_string(), io::read_mesh(path)?),
                None => studies::fixtures(cli.rng_seed)?
                    .into_iter()
                    .find(|(n, _)| n == fixture)
                    .ok_or_else(|| CliError::Usage(format!("unknown fixture {fixture:?}")))?,
            };
            let sys = assemble(&m)?;
            let sp = Spectra::new(&sys, *tol)?;
            let (a, b, n) = match sweep {
                Some(s) => parse_sweep(s)?,
                None => (0.0, 0.0, 1),
            };
            let mut records = interlace_sweep(&sp, a, b, n);
            records.extend(interlace_random(&sp, *random, cli.rng_seed));
            records.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
            let failing = records
                .iter()
                .filter(|r| !(r.identity_holds && r.codim_holds))
                .count();
            let flagged = records.iter().filter(|r| r.flagged).count();
            let mut o = Outcome::new("verify-interlace")
                .kv("mesh", quote(&label))
                .kv("records", records.len())
                .kv("failing", failing)
                .kv("flagged", flagged);
            if let Some(r) = records
                .iter()
                .find(|r| !(r.identity_holds && r.codim_holds))
            {
                o = o.kv("first_failure", num(r.lambda));
            }
            o.status(Status::judge(failing == 0, flagged > 0)).report(
                "interlace.json",
                &InterlaceReport {
                    mesh: label,
                    records: &records,
                },
            )
        }
        VerifyTarget::Annulus { d } => {
            let r = studies::annulus_study(*d, tol)?;
            let ok = r.nontrivial.len() == 1
                && r.nontrivial[0].1 == 1
                && r.magnitude_spread <= 1e-8
                && r.alternating
                && r.extended_check;
            Outcome::new("verify-annulus")
                .kv("d", num(*d))
                .kv("lambda_in", r.lambda_in.map_or("none".into(), num))
                .kv("spread", num(r.magnitude_spread))
                .kv("alternating", r.alternating)
                .kv("extended_residual", num(r.extended_residual))
                .kv("extended_check", r.extended_check)
                .status(Status::judge(ok, false))
                .report("annulus.json", &r)
        }
        VerifyTarget::Heptagon { d } => {
            let r = studies::heptagon_study(*d, tol)?;
            let parity = r.sign_pattern_trace.iter().all(|t| t.contradiction);
            let ok = r.angle_ok && r.signs.offdiag_nonpositive && r.ucp && parity;
            Outcome::new("verify-heptagon")
                .kv("d", num(*d))
                .kv("angle_ok", r.angle_ok)
                .kv("offdiag_nonpositive", r.signs.offdiag_nonpositive)
                .kv("ucp", r.ucp)
                .kv("parity_contradiction", parity)
                .status(Status::judge(ok, r.inner.flagged))
                .report("heptagon.json", &r)
        }
    }
}
