//! Command-line front end: `mesh generate`, `solve` and `convergence`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{AssemblyError, Discretization};
use crate::element::ElementError;
use crate::mesh::{self, Domain, MeshError, MeshFamily, MeshRequest, PolygonalMesh, DEFAULT_LLOYD_ITERS};
use crate::problems::ManufacturedProblem;
use crate::report::{self, ConvergenceRecord, TableFormat};
use crate::solver::{newton_solve, NewtonLog, NewtonOptions, SolverError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("level {level} (n = {n}): {source}")]
    Level {
        level: usize,
        n: usize,
        #[source]
        source: Box<CliError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for usage errors, 3 for Newton failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(SolverError::NotConverged { .. }) => 3,
            CliError::Level { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Triangular,
    Square,
    Concave,
    VoronoiStructured,
    VoronoiRandom,
}

impl From<FamilyArg> for MeshFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Triangular => MeshFamily::Triangular,
            FamilyArg::Square => MeshFamily::Square,
            FamilyArg::Concave => MeshFamily::Concave,
            FamilyArg::VoronoiStructured => MeshFamily::VoronoiStructured,
            FamilyArg::VoronoiRandom => MeshFamily::VoronoiRandom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    UnitSquare,
    LShape,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::UnitSquare => Domain::UnitSquare,
            DomainArg::LShape => Domain::LShape,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Square,
    Lshape,
}

impl ProblemArg {
    pub fn build(self) -> ManufacturedProblem {
        match self {
            ProblemArg::Square => ManufacturedProblem::square(),
            ProblemArg::Lshape => ManufacturedProblem::lshape(),
        }
    }

    fn domain(self) -> Domain {
        match self {
            ProblemArg::Square => Domain::UnitSquare,
            ProblemArg::Lshape => Domain::LShape,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Markdown,
    Dat,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Markdown => TableFormat::Markdown,
            FormatArg::Dat => TableFormat::Dat,
        }
    }
}

/// Validated run configuration.
#[derive(Debug, Parser)]
#[command(name = "vkplate", version, about = "Morley-type virtual elements for the clamped von Kármán plate")]
pub struct RunConfig {
    /// Worker threads for per-cell loops.
    #[arg(long, global = true, env = "VKPLATE_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshCommand,
    },
    /// Solve one manufactured problem with Newton's method.
    Solve(SolveArgs),
    /// Run a refinement study and write the error table.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Subcommand)]
pub enum MeshCommand {
    /// Generate a mesh and write it as JSON.
    Generate(MeshArgs),
}

#[derive(Debug, Args)]
pub struct MeshSpec {
    #[arg(long, value_enum, default_value = "triangular")]
    pub family: FamilyArg,
    /// Seed for the random Voronoi family.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_LLOYD_ITERS)]
    pub lloyd_iters: usize,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[command(flatten)]
    pub spec: MeshSpec,
    #[arg(long, value_enum, default_value = "unit-square")]
    pub domain: DomainArg,
    #[arg(long)]
    pub n: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct NewtonArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 20)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub problem: ProblemArg,
    /// Mesh file; if absent the mesh is generated from --family and --n.
    #[arg(long, conflicts_with = "n")]
    pub mesh: Option<PathBuf>,
    #[command(flatten)]
    pub spec: MeshSpec,
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub newton: NewtonArgs,
    /// Include per-iteration wall time in the output (makes it non-reproducible).
    #[arg(long)]
    pub timings: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub problem: ProblemArg,
    #[command(flatten)]
    pub spec: MeshSpec,
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Subdivision count of the first level; each level doubles it.
    #[arg(long, default_value_t = 4)]
    pub base_n: usize,
    #[command(flatten)]
    pub newton: NewtonArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(short, long)]
    pub output: PathBuf,
}

impl NewtonArgs {
    fn options(&self) -> Result<NewtonOptions, CliError> {
        if !(self.tol > 0.0) {
            return Err(CliError::Usage(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(CliError::Usage("--max-iter must be at least 1".into()));
        }
        Ok(NewtonOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        })
    }
}

impl MeshSpec {
    fn request(&self, domain: Domain, n: usize) -> Result<MeshRequest, CliError> {
        let mut req = MeshRequest::new(self.family.into(), domain, n).with_lloyd_iters(self.lloyd_iters);
        if let Some(seed) = self.seed {
            req = req.with_seed(seed);
        }
        req.check().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(req)
    }
}

impl RunConfig {
    /// Checks every argument combination before any work is done.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        match &self.command {
            Command::Mesh {
                action: MeshCommand::Generate(a),
            } => a.spec.request(a.domain.into(), a.n).map(|_| ()),
            Command::Solve(a) => {
                a.newton.options()?;
                match (&a.mesh, a.n) {
                    (Some(_), _) => Ok(()),
                    (None, Some(n)) => a.spec.request(a.problem.domain(), n).map(|_| ()),
                    (None, None) => Err(CliError::Usage("solve needs --mesh or --n".into())),
                }
            }
            Command::Convergence(a) => {
                a.newton.options()?;
                if a.levels < 2 {
                    return Err(CliError::Usage(format!("--levels must be at least 2, got {}", a.levels)));
                }
                a.spec.request(a.problem.domain(), a.base_n).map(|_| ())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Serialize)]
struct StepOut {
    iteration: usize,
    update_norm: f64,
    residual_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SolveOutput<'a> {
    problem: &'a str,
    n_dof: usize,
    h_max: f64,
    converged: bool,
    iterations: usize,
    final_residual: f64,
    log: Vec<StepOut>,
    u: &'a [f64],
    v: &'a [f64],
}

fn log_out(log: &NewtonLog, timings: bool) -> Vec<StepOut> {
    log.iterations
        .iter()
        .map(|s| StepOut {
            iteration: s.iteration,
            update_norm: s.update_norm,
            residual_norm: s.residual_norm,
            wall_seconds: timings.then_some(s.wall_seconds),
        })
        .collect()
}

/// Outcome of one Newton solve on a mesh.
pub struct SolveOutcome {
    pub disc: Discretization,
    pub result: Result<(crate::assembly::StateVector, NewtonLog), SolverError>,
}

pub fn solve_on_mesh(
    mesh: PolygonalMesh,
    problem: &ManufacturedProblem,
    opts: NewtonOptions,
    threads: usize,
) -> Result<SolveOutcome, CliError> {
    let disc = Discretization::with_threads(mesh, threads)?;
    let load = disc.assemble_load(|p| problem.f(p), |p| problem.g(p))?;
    let result = newton_solve(&disc, &load, opts);
    Ok(SolveOutcome { disc, result })
}

fn cmd_mesh(a: &MeshArgs) -> Result<String, CliError> {
    let mesh = mesh::generate_mesh(&a.spec.request(a.domain.into(), a.n)?)?;
    mesh::save_mesh(&mesh, &a.output)?;
    Ok(format!(
        "wrote {} cells, {} vertices to {}",
        mesh.num_cells(),
        mesh.vertices().len(),
        a.output.display()
    ))
}

fn cmd_solve(a: &SolveArgs, threads: usize) -> Result<String, CliError> {
    let opts = a.newton.options()?;
    let mesh = match (&a.mesh, a.n) {
        (Some(path), _) => mesh::load_mesh(path)?,
        (None, Some(n)) => mesh::generate_mesh(&a.spec.request(a.problem.domain(), n)?)?,
        (None, None) => return Err(CliError::Usage("solve needs --mesh or --n".into())),
    };
    let problem = a.problem.build();
    let h_max = mesh.h_max();
    let SolveOutcome { disc, result } = solve_on_mesh(mesh, &problem, opts, threads)?;
    let (state, log, failure) = match result {
        Ok((x, log)) => (x, log, None),
        Err(SolverError::NotConverged { state, log }) => {
            let err = SolverError::NotConverged {
                state: state.clone(),
                log: log.clone(),
            };
            (state, log, Some(err))
        }
        Err(e) => return Err(e.into()),
    };
    let out = SolveOutput {
        problem: match a.problem {
            ProblemArg::Square => "square",
            ProblemArg::Lshape => "lshape",
        },
        n_dof: disc.n_dof(),
        h_max,
        converged: log.converged,
        iterations: log.iterations.len(),
        final_residual: log.last_residual(),
        log: log_out(&log, a.timings),
        u: state.u(),
        v: state.v(),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("solution serialisation cannot fail");
    text.push('\n');
    write_file(&a.output, &text)?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    Ok(format!(
        "converged in {} iterations, final residual {:.3e}, n_dof {}",
        log.iterations.len(),
        log.last_residual(),
        disc.n_dof()
    ))
}

/// Generate, solve and measure errors for `levels` meshes with n doubling.
pub fn run_convergence(
    problem: &ManufacturedProblem,
    spec: &MeshSpec,
    base_n: usize,
    levels: usize,
    opts: NewtonOptions,
    threads: usize,
) -> Result<Vec<ConvergenceRecord>, CliError> {
    let mut records = Vec::with_capacity(levels);
    for level in 1..=levels {
        let n = base_n << (level - 1);
        let run = || -> Result<ConvergenceRecord, CliError> {
            let mesh = mesh::generate_mesh(&spec.request(problem.domain(), n)?)?;
            let h = mesh.h_max();
            let SolveOutcome { disc, result } = solve_on_mesh(mesh, problem, opts, threads)?;
            let (x, log) = result?;
            let errors = report::compute_errors(&disc, &x, problem)?;
            Ok(ConvergenceRecord {
                level,
                h,
                n_dof: disc.n_dof(),
                errors,
                newton_iters: log.iterations.len(),
                orders: None,
            })
        };
        let rec = run().map_err(|e| CliError::Level {
            level,
            n,
            source: Box::new(e),
        })?;
        records.push(rec);
    }
    report::convergence_orders(&mut records);
    Ok(records)
}

fn cmd_convergence(a: &ConvergenceArgs, threads: usize) -> Result<String, CliError> {
    let records = run_convergence(
        &a.problem.build(),
        &a.spec,
        a.base_n,
        a.levels,
        a.newton.options()?,
        threads,
    )?;
    write_file(&a.output, &report::render(&records, a.format.into()))?;
    Ok(format!("wrote {} levels to {}", records.len(), a.output.display()))
}

/// Runs a parsed configuration; the returned string is the summary line.
pub fn run(config: &RunConfig) -> Result<String, CliError> {
    config.validate()?;
    match &config.command {
        Command::Mesh {
            action: MeshCommand::Generate(a),
        } => cmd_mesh(a),
        Command::Solve(a) => cmd_solve(a, config.threads),
        Command::Convergence(a) => cmd_convergence(a, config.threads),
    }
}
