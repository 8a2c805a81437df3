//! The `qwalk` command line.
//!
//! Every command reads an optional JSON config (or a manifest written by an
//! earlier run), applies flag overrides, and writes its outputs plus
//! `manifest.json` into the output directory. Exit codes: 0 success,
//! 1 numerical failure, 2 configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{grover_torus_sequence, rejection_sample};
use crate::config::{CoinSpec, GraphSpec, InitialSpec, InteractionSpec, RunConfig, ShiftSpec};
use crate::equivalence::{
    build_sequence, locality_violations, verify_theorem_properties, Materialize, TransitionMatrixSeq,
    CONSISTENCY_TOL,
};
use crate::error::Error;
use crate::graph::PortGraph;
use crate::io::{
    create_file, load_sequence, parse_json, save_sequence, write_json, write_rho_csv,
    write_trajectories_csv, write_tvd_csv, IoError, MatrixFormat, RunManifest, MANIFEST_FILE,
};
use crate::qw::WaveFunction;
use crate::trajectory::{convergence_report, count_non_edges, sample_ensemble_with, SamplerKind};

pub const OUT_DIR_ENV: &str = "QWALK_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "qwalk-out";

#[derive(Debug, Parser)]
#[command(name = "qwalk", version, about = "Coined quantum walks and their equivalent random walks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the walk and write ρ(0..T).
    Evolve(Common),
    /// Build P(0..T), verify it and write the sequence directory.
    Equivalence {
        #[command(flatten)]
        common: Common,
        /// Write matrices in the compact binary format.
        #[arg(long)]
        binary: bool,
    },
    /// Sample trajectories, from a config or a saved sequence directory.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Directory written by `equivalence`.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// TVD between ensemble and quantum distributions per size and instant.
    Tvd {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Rejection sampling of independent measurements.
    Rejection(Common),
    /// Grover torus recursion; writes the same files as `equivalence`.
    TorusDp(Common),
    /// Check a saved sequence directory.
    Verify {
        dir: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoinArg {
    Hadamard,
    Grover,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShiftArg {
    Moving,
    Arc,
    Identity,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run config or a manifest from a previous run.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N", group = "graph_source")]
    pub cycle: Option<usize>,
    /// Torus side lengths, e.g. `10,10`.
    #[arg(long, value_delimiter = ',', group = "graph_source")]
    pub torus: Option<Vec<usize>>,
    #[arg(long, value_name = "N", group = "graph_source")]
    pub complete: Option<usize>,
    /// JSON graph document.
    #[arg(long, value_name = "PATH", group = "graph_source")]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub coin: Option<CoinArg>,
    /// Random unitary coin blocks from this seed.
    #[arg(long, conflicts_with = "coin")]
    pub random_coin: Option<u64>,
    #[arg(long, value_enum)]
    pub shift: Option<ShiftArg>,
    #[arg(long, short = 'k')]
    pub walkers: Option<usize>,
    /// Coincidence phase for several walkers.
    #[arg(long)]
    pub phase: Option<f64>,
    /// Initial state `vertex,port`, localized, copied to every walker.
    #[arg(long, value_delimiter = ',', value_name = "V,C")]
    pub start: Option<Vec<usize>>,
    /// Steps `T`.
    #[arg(long, short = 'T')]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub zero_threshold: Option<f64>,
    /// Keep inconsistent columns instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[arg(long, value_enum)]
    pub materialize: Option<MaterializeArg>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Ensemble size `M` for `sample`.
    #[arg(long, short = 'M')]
    pub trajectories: Option<usize>,
    /// Trajectory steps for `sample`.
    #[arg(long, short = 'L')]
    pub length: Option<usize>,
    #[arg(long)]
    pub alias: bool,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub attempts: Option<u64>,
    /// Instants per rejection-sampled sequence.
    #[arg(long)]
    pub rejection_length: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaterializeArg {
    Support,
    Halo,
    Full,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ColumnSum { .. } | Error::ColumnNotMaterialized { .. } | Error::NotNormalized(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Model(inner) => inner.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Evolve(c) => evolve(&c),
        Command::Equivalence { common, binary } => equivalence(&common, binary),
        Command::Sample { common, from } => sample(&common, from.as_deref()),
        Command::Tvd { common, from } => tvd(&common, from.as_deref()),
        Command::Rejection(c) => rejection(&c),
        Command::TorusDp(c) => torus_dp(&c),
        Command::Verify { dir, tol } => verify(&dir, tol),
    }
}

/// Reads a config or manifest file; syntax and schema errors carry the line and column.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = parse_json(path, &text)?;
    if value.get("tool").is_some() && value.get("config").is_some() {
        let manifest: RunManifest = parse_json(path, &text)?;
        return Ok(manifest.config);
    }
    Ok(parse_json(path, &text)?)
}

fn resolve(c: &Common, base: Option<RunConfig>) -> CliResult<RunConfig> {
    let graph = if let Some(n) = c.cycle {
        Some(GraphSpec::Cycle { n })
    } else if let Some(dims) = &c.torus {
        Some(GraphSpec::Torus { dims: dims.clone() })
    } else if let Some(n) = c.complete {
        Some(GraphSpec::Complete { n })
    } else {
        c.graph.as_ref().map(|p| GraphSpec::File {
            path: p.display().to_string(),
        })
    };
    let mut cfg = match (base, &c.config) {
        (Some(cfg), _) => cfg,
        (None, Some(path)) => load_config(path)?,
        (None, None) => RunConfig::new(graph.clone().ok_or_else(|| {
            CliError::Config("no graph given: pass --config or one of --cycle, --torus, --complete, --graph".into())
        })?),
    };
    if let Some(g) = graph {
        cfg.graph = g;
    }
    if let Some(coin) = c.coin {
        cfg.coin = match coin {
            CoinArg::Hadamard => CoinSpec::Hadamard,
            CoinArg::Grover => CoinSpec::Grover,
            CoinArg::Identity => CoinSpec::Identity,
        };
    }
    if let Some(seed) = c.random_coin {
        cfg.coin = CoinSpec::RandomUnitary { seed };
    }
    if let Some(shift) = c.shift {
        cfg.shift = match shift {
            ShiftArg::Moving => ShiftSpec::Moving,
            ShiftArg::Arc => ShiftSpec::Arc,
            ShiftArg::Identity => ShiftSpec::Identity,
        };
    }
    if let Some(phi) = c.phase {
        cfg.interaction = InteractionSpec::CoincidencePhase { phi };
    }
    if let Some(s) = &c.start {
        if s.len() != 2 {
            return Err(CliError::Config("--start takes vertex,port".into()));
        }
        cfg.initial = InitialSpec::Localized {
            vertex: s[0],
            port: s[1],
        };
    }
    if c.lenient {
        cfg.strict = false;
    }
    if let Some(m) = c.materialize {
        cfg.materialize = match m {
            MaterializeArg::Support => Materialize::Support,
            MaterializeArg::Halo => Materialize::Halo,
            MaterializeArg::Full => Materialize::Full,
        };
    }
    if c.alias {
        cfg.sampler = SamplerKind::Alias;
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(x) = &c.$field { cfg.$field = x.clone(); } )* };
    }
    set!(walkers, seed, horizon, zero_threshold, budget, trajectories, sizes, t_grid, attempts);
    if c.length.is_some() {
        cfg.length = c.length;
    }
    if c.rejection_length.is_some() {
        cfg.rejection_length = c.rejection_length;
    }
    cfg.check()?;
    Ok(cfg)
}

struct Prepared {
    cfg: RunConfig,
    graph: Arc<PortGraph>,
}

fn prepare(c: &Common) -> CliResult<Prepared> {
    let cfg = resolve(c, None)?;
    let graph = Arc::new(cfg.graph.build()?);
    std::fs::create_dir_all(&c.out_dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", c.out_dir.display())))?;
    Ok(Prepared { cfg, graph })
}

fn walk_sequence(p: &Prepared, horizon: usize) -> CliResult<TransitionMatrixSeq> {
    let walk = p.cfg.build_walk(p.graph.clone())?;
    let psi0 = p.cfg.build_initial(&p.graph)?;
    Ok(build_sequence(&walk, &psi0, horizon, &p.cfg.build_options())?)
}

fn finish(dir: &Path, mut manifest: RunManifest, outputs: Vec<String>) -> CliResult<()> {
    manifest.outputs = outputs;
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(())
}

fn manifest_for(command: &str, p: &Prepared, walkers: usize) -> RunManifest {
    RunManifest::new(
        command,
        p.graph.fingerprint(),
        crate::equivalence::StateSpace {
            vertices: p.graph.num_vertices(),
            walkers,
        },
        &p.cfg,
    )
}

#[derive(Serialize)]
struct RhoJson<'a> {
    state_space: crate::equivalence::StateSpace,
    rho: &'a [Vec<f64>],
}

fn write_rho(dir: &Path, format: OutputFormat, space: crate::equivalence::StateSpace, rho: &[Vec<f64>]) -> CliResult<String> {
    Ok(match format {
        OutputFormat::Csv => {
            write_rho_csv(create_file(&dir.join("rho.csv"))?, space, rho)?;
            "rho.csv".into()
        }
        OutputFormat::Json => {
            write_json(&dir.join("rho.json"), &RhoJson { state_space: space, rho })?;
            "rho.json".into()
        }
    })
}

fn check_mass(rho: &[Vec<f64>]) -> CliResult<()> {
    for (t, dist) in rho.iter().enumerate() {
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > CONSISTENCY_TOL {
            return Err(CliError::Numerical(format!(
                "total probability at t={t} is {total}; operators are not unitary"
            )));
        }
    }
    Ok(())
}

fn evolve(c: &Common) -> CliResult<()> {
    let p = prepare(c)?;
    let walk = p.cfg.build_walk(p.graph.clone())?;
    let psi0: WaveFunction = p.cfg.build_initial(&p.graph)?;
    let rho = walk.distributions(&psi0, p.cfg.horizon)?;
    let manifest = manifest_for("evolve", &p, p.cfg.walkers);
    let name = write_rho(&c.out_dir, c.format, manifest.state_space, &rho)?;
    finish(&c.out_dir, manifest, vec![name])?;
    println!("evolve: {} distributions over {} states", rho.len(), rho[0].len());
    check_mass(&rho)
}

fn save_with_report(
    command: &str,
    c: &Common,
    p: &Prepared,
    seq: &TransitionMatrixSeq,
    format: MatrixFormat,
) -> CliResult<()> {
    let report = verify_theorem_properties(seq);
    let violations = locality_violations(seq, &p.graph);
    let mut outputs = save_sequence(&c.out_dir, seq, format)?;
    write_json(
        &c.out_dir.join("report.json"),
        &serde_json::json!({ "theorem": report, "locality_violations": violations }),
    )?;
    outputs.push("report.json".into());
    let mut manifest = manifest_for(command, p, seq.space.walkers);
    manifest.matrix_format = Some(format);
    finish(&c.out_dir, manifest, outputs)?;
    println!(
        "{command}: {} matrices; max entry violation {:e}, max column-sum deviation {:e}, max propagation residual {:e}",
        report.steps,
        report.max_entry_violation,
        report.max_column_sum_deviation,
        report.max_propagation_residual
    );
    if !report.holds(CONSISTENCY_TOL) {
        return Err(CliError::Numerical(format!(
            "matrix properties fail (worst column {:?})",
            report.worst_column
        )));
    }
    Ok(())
}

fn equivalence(c: &Common, binary: bool) -> CliResult<()> {
    let p = prepare(c)?;
    let seq = walk_sequence(&p, p.cfg.horizon)?;
    let format = match (binary, c.format) {
        (true, _) => MatrixFormat::Bin,
        (false, OutputFormat::Csv) => MatrixFormat::Csv,
        (false, OutputFormat::Json) => MatrixFormat::Json,
    };
    save_with_report("equivalence", c, &p, &seq, format)
}

fn torus_dp(c: &Common) -> CliResult<()> {
    let p = prepare(c)?;
    if p.cfg.coin != CoinSpec::Grover || p.cfg.shift != ShiftSpec::Moving || p.cfg.walkers != 1 {
        return Err(Error::NotApplicable(
            "the torus recursion needs one walker, the Grover coin and the moving shift".into(),
        )
        .into());
    }
    let psi0 = p.cfg.build_initial(&p.graph)?;
    let seq = grover_torus_sequence(&p.graph, &psi0, p.cfg.horizon, &p.cfg.build_options())?;
    let format = match c.format {
        OutputFormat::Csv => MatrixFormat::Csv,
        OutputFormat::Json => MatrixFormat::Json,
    };
    save_with_report("torus-dp", c, &p, &seq, format)
}

/// Sequence for sampling commands: loaded from `from`, or built from the config.
fn sequence_for(c: &Common, from: Option<&Path>, horizon: impl Fn(&RunConfig) -> usize) -> CliResult<(Prepared, TransitionMatrixSeq)> {
    match from {
        Some(dir) => {
            let (manifest, seq) = load_sequence(dir)?;
            let cfg = resolve(c, Some(manifest.config))?;
            let graph = Arc::new(cfg.graph.build()?);
            if graph.fingerprint() != manifest.graph_fingerprint {
                return Err(CliError::Config(format!(
                    "graph does not match the one recorded in {}",
                    dir.display()
                )));
            }
            std::fs::create_dir_all(&c.out_dir)
                .map_err(|e| CliError::Config(format!("{}: {e}", c.out_dir.display())))?;
            Ok((Prepared { cfg, graph }, seq))
        }
        None => {
            let p = prepare(c)?;
            let seq = walk_sequence(&p, horizon(&p.cfg))?;
            Ok((p, seq))
        }
    }
}

fn sample(c: &Common, from: Option<&Path>) -> CliResult<()> {
    let (p, seq) = sequence_for(c, from, |cfg| cfg.length.unwrap_or(cfg.horizon))?;
    let steps = p.cfg.length.unwrap_or(seq.horizon());
    let ens = sample_ensemble_with(&seq, p.cfg.trajectories, p.cfg.seed, steps, p.cfg.sampler)?;
    let name = match c.format {
        OutputFormat::Csv => {
            write_trajectories_csv(create_file(&c.out_dir.join("trajectories.csv"))?, &ens)?;
            "trajectories.csv"
        }
        OutputFormat::Json => {
            let labels: Vec<Vec<String>> = ens
                .trajectories
                .iter()
                .map(|t| t.states.iter().map(|&s| ens.space.label(s)).collect())
                .collect();
            write_json(&c.out_dir.join("trajectories.json"), &labels)?;
            "trajectories.json"
        }
    };
    let mut manifest = manifest_for("sample", &p, seq.space.walkers);
    manifest.horizon = steps;
    finish(&c.out_dir, manifest, vec![name.into()])?;
    let non_edges = count_non_edges(&ens, &p.graph);
    println!("sample: {} trajectories of {steps} steps, {non_edges} non-edge moves", ens.len());
    if non_edges > 0 && p.cfg.shift != ShiftSpec::Identity {
        return Err(CliError::Numerical(format!("{non_edges} sampled moves leave the graph")));
    }
    Ok(())
}

fn tvd(c: &Common, from: Option<&Path>) -> CliResult<()> {
    let (p, seq) = sequence_for(c, from, |cfg| cfg.t_grid.iter().copied().max().unwrap_or(0))?;
    let rows = convergence_report(&seq, &p.cfg.sizes, &p.cfg.t_grid, p.cfg.seed)?;
    let name = match c.format {
        OutputFormat::Csv => {
            write_tvd_csv(create_file(&c.out_dir.join("tvd.csv"))?, &rows)?;
            "tvd.csv"
        }
        OutputFormat::Json => {
            write_json(&c.out_dir.join("tvd.json"), &rows)?;
            "tvd.json"
        }
    };
    finish(&c.out_dir, manifest_for("tvd", &p, seq.space.walkers), vec![name.into()])?;
    println!("tvd: {} rows", rows.len());
    Ok(())
}

fn rejection(c: &Common) -> CliResult<()> {
    let p = prepare(c)?;
    if p.cfg.walkers != 1 {
        return Err(Error::NotApplicable("rejection sampling is single-walker".into()).into());
    }
    let length = p.cfg.rejection_length.unwrap_or(p.cfg.horizon + 1);
    if length == 0 {
        return Err(CliError::Config("rejection length must be at least 1".into()));
    }
    let walk = p.cfg.build_walk(p.graph.clone())?;
    let psi0 = p.cfg.build_initial(&p.graph)?;
    let rho = walk.distributions(&psi0, length - 1)?;
    check_mass(&rho)?;
    let report = rejection_sample(&rho, &p.graph, length, p.cfg.attempts, p.cfg.seed)?;
    write_json(&c.out_dir.join("rejection.json"), &report)?;
    if c.format == OutputFormat::Csv && !report.no_acceptance {
        let space = crate::equivalence::StateSpace {
            vertices: p.graph.num_vertices(),
            walkers: 1,
        };
        write_rho_csv(create_file(&c.out_dir.join("rejection_marginals.csv"))?, space, &report.marginals)?;
    }
    let mut outputs = vec!["rejection.json".to_string()];
    if c.format == OutputFormat::Csv && !report.no_acceptance {
        outputs.push("rejection_marginals.csv".into());
    }
    finish(&c.out_dir, manifest_for("rejection", &p, 1), outputs)?;
    println!(
        "rejection: accepted {} of {} (rate {}), max TVD vs rho {}",
        report.accepted, report.attempts, report.acceptance_rate, report.max_tvd_vs_rho
    );
    Ok(())
}

fn verify(dir: &Path, tol: f64) -> CliResult<()> {
    let (manifest, seq) = load_sequence(dir)?;
    let graph = manifest.config.graph.build()?;
    if graph.fingerprint() != manifest.graph_fingerprint {
        return Err(CliError::Config("graph does not match the recorded fingerprint".into()));
    }
    let report = verify_theorem_properties(&seq);
    let violations = locality_violations(&seq, &graph);
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    println!("locality violations: {violations}");
    let local_ok = violations == 0 || manifest.config.shift == ShiftSpec::Identity;
    if !report.holds(tol) || !local_ok {
        return Err(CliError::Numerical(format!("sequence in {} fails at tolerance {tol:e}", dir.display())));
    }
    println!("ok");
    Ok(())
}
