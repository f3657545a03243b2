//! Experiment runner: reproduces the transfer-protocol figures as CSV files
//! with a JSON manifest per run.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use bbchain::basis::SectorBasis;
use bbchain::control::{
    perturbative_excitation, synthesize_optimized_path, OptimizedPath, SHOOTING_TARGET,
};
use bbchain::error::Error as ChainError;
use bbchain::evolve::{evolve, EvolveOptions, NORM_DRIFT_LIMIT};
use bbchain::lattice::{
    hubbard_to_bb, scattering_to_ctilde, superlattice_potential, timescale_estimate,
    DurationEntry, HubbardParams, LatticeStage, ScheduleKind,
};
use bbchain::params::{BBParams, SiteState};
use bbchain::profile::{default_x_grid, linear_fit, min_gap_scaling, spectral_profile, SpectralProfile};
use bbchain::schedule::CouplingSchedule;
use bbchain::state::{dimer_state, FreeSide, FreeSpin};

const MAX_DYNAMICS_SITES: usize = 9;
const MAX_SPECTRA_SITES: usize = 11;

#[derive(Parser)]
#[command(name = "bbchain", version, about = "Adiabatic state transfer in spin-1 chains")]
struct Cli {
    /// Output directory for CSV files and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Optional TOML config file supplying defaults; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps (default: machine parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Coupling strength alpha; energies are reported in units of alpha and
    /// times in 1/alpha.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Linear,
    Optimized,
}

impl ScheduleArg {
    fn name(self) -> &'static str {
        match self {
            ScheduleArg::Linear => "linear",
            ScheduleArg::Optimized => "optimized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    A,
    B,
    C,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Gap and coupling profiles over x for one chain.
    Profiles(ProfilesArgs),
    /// Propagate one transfer and record per-site populations.
    Transfer(TransferArgs),
    /// Transfer error versus velocity for several chain lengths.
    SweepVelocity(SweepArgs),
    /// First-order excited-state population estimate versus duration.
    Pplus(PplusArgs),
    /// Synthesize the window-shaped coupling path for one duration.
    OptimizePath(OptimizePathArgs),
    /// Superlattice potential profiles for the protocol stages.
    Potential(PotentialArgs),
    /// Minimal sector gap versus chain length, with the 1/N fit.
    GapScaling(GapScalingArgs),
    /// Physical duration estimate from the bundled simulation table.
    Timescale(TimescaleArgs),
}

#[derive(Args)]
struct ProfilesArgs {
    /// Chain length (odd).
    #[arg(long)]
    n: usize,
    /// Magnetization sector.
    #[arg(long, default_value_t = 1)]
    m: i32,
    /// Mixing angle; accepts radians or multiples of pi like "-0.5pi".
    #[arg(long, default_value = "-0.5pi")]
    theta: String,
    /// Use a uniform grid with this many points instead of the default
    /// refined grid.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    n: usize,
    /// Total duration T in units of 1/alpha.
    #[arg(long)]
    t: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Linear)]
    schedule: ScheduleArg,
    /// Mixing angle; the protocol runs at -0.5pi.
    #[arg(long, default_value = "-0.5pi")]
    theta: String,
    /// Transported Jz eigenstate: 1, 0 or -1.
    #[arg(long, default_value = "1")]
    phi: String,
    /// Dimensionless global field h.
    #[arg(long, default_value_t = 0.0)]
    h: f64,
    /// Number of sub-steps (default 10 T alpha, at least 1000).
    #[arg(long)]
    steps: Option<usize>,
    /// Output samples on the uniform time grid.
    #[arg(long, default_value_t = 201)]
    samples: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated odd chain lengths, e.g. 5,7,9.
    #[arg(long)]
    n: String,
    /// Comma-separated durations T alpha.
    #[arg(long, conflicts_with = "velocities")]
    t_list: Option<String>,
    /// Comma-separated mean velocities T/(N-1); T scales with each N.
    #[arg(long)]
    velocities: Option<String>,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Linear)]
    schedule: ScheduleArg,
    #[arg(long, default_value = "-0.5pi")]
    theta: String,
}

#[derive(Args)]
struct PplusArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Comma-separated durations T alpha.
    #[arg(long)]
    t_list: String,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Linear)]
    schedule: ScheduleArg,
    #[arg(long, default_value = "-0.5pi")]
    theta: String,
}

#[derive(Args)]
struct OptimizePathArgs {
    #[arg(long)]
    n: usize,
    /// Total duration T in units of 1/alpha.
    #[arg(long)]
    t: f64,
    #[arg(long, default_value = "-0.5pi")]
    theta: String,
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long, value_enum, default_value_t = StageArg::All)]
    stage: StageArg,
    /// Intensity of the half-wavelength lattice.
    #[arg(long, default_value_t = 1.0)]
    half: f64,
    /// Intensity of the full-wavelength lattice.
    #[arg(long, default_value_t = 4.0)]
    full: f64,
    /// Sample count over the span.
    #[arg(long, default_value_t = 801)]
    points: usize,
    /// Span in units of the wavelength.
    #[arg(long, default_value_t = 2.0)]
    span: f64,
}

#[derive(Args)]
struct GapScalingArgs {
    /// Comma-separated odd chain lengths up to 11.
    #[arg(long, default_value = "3,5,7,9,11")]
    n: String,
    #[arg(long, default_value = "-0.5pi")]
    theta: String,
}

#[derive(Args)]
struct TimescaleArgs {
    #[arg(long, default_value_t = 9)]
    n: usize,
    #[arg(long, default_value_t = 1e-2)]
    target_error: f64,
    /// Comma-separated coupling rates J in 1/s (alpha = hbar J).
    #[arg(long, default_value = "100,200")]
    j: String,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Optimized)]
    schedule: ScheduleArg,
    /// Optional duration table (CSV n,schedule,t_alpha,error) replacing the
    /// bundled one, e.g. a fresh sweep-velocity durations.csv.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Also map Bose-Hubbard parameters (t, c0, c2) onto (alpha, theta).
    #[arg(long, num_args = 3, value_names = ["T", "C0", "C2"])]
    hubbard: Option<Vec<f64>>,
    /// Scattering lengths (a0, a2) for the c2/c0 ratio.
    #[arg(long, num_args = 2, value_names = ["A0", "A2"])]
    scattering: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
struct FileConfig {
    out: Option<PathBuf>,
    jobs: Option<usize>,
    alpha: Option<f64>,
}

struct Resolved {
    out: PathBuf,
    alpha: f64,
}

#[derive(Serialize)]
struct Tolerances {
    eigensolver_relative_residual: f64,
    norm_drift_limit: f64,
    shooting_boundary_target: f64,
    quadrature_relative: f64,
    assembly_drop: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eigensolver_relative_residual: 1e-10,
            norm_drift_limit: NORM_DRIFT_LIMIT,
            shooting_boundary_target: SHOOTING_TARGET,
            quadrature_relative: 1e-8,
            assembly_drop: bbchain::sparse::ASSEMBLY_DROP_TOL,
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    version: String,
    inputs: serde_json::Value,
    tolerances: Tolerances,
    lanczos_seed: String,
    outputs: Vec<String>,
}

fn write_manifest(out: &Path, command: &str, inputs: serde_json::Value, outputs: &[String]) -> anyhow::Result<()> {
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs,
        tolerances: Tolerances::default(),
        lanczos_seed: format!("{:#x}", bbchain::eigen::LANCZOS_SEED),
        outputs: outputs.to_vec(),
    };
    let mut file = fs::File::create(out.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    writeln!(file)?;
    Ok(())
}

fn parse_theta(s: &str) -> Result<f64, ChainError> {
    let trimmed = s.trim();
    if let Some(mult) = trimmed.strip_suffix("pi") {
        let factor: f64 = if mult.is_empty() || mult == "+" {
            1.0
        } else if mult == "-" {
            -1.0
        } else {
            mult.parse()
                .map_err(|_| ChainError::config(format!("cannot parse theta '{s}'")))?
        };
        Ok(factor * std::f64::consts::PI)
    } else {
        trimmed
            .parse()
            .map_err(|_| ChainError::config(format!("cannot parse theta '{s}'")))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, ChainError> {
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| ChainError::config(format!("cannot parse {what} entry '{p}'")))
        })
        .collect()
}

fn parse_phi(s: &str) -> Result<SiteState, ChainError> {
    match s.trim() {
        "1" | "+1" => Ok(SiteState::Plus),
        "0" => Ok(SiteState::Zero),
        "-1" => Ok(SiteState::Minus),
        other => Err(ChainError::config(format!("phi must be 1, 0 or -1, got '{other}'"))),
    }
}

/// Capability guard: explicit error when a request exceeds the exact-method
/// size limits.
fn check_capability(n: usize, limit: usize, what: &str) -> Result<(), CliFailure> {
    if n > limit {
        return Err(CliFailure::Capability(format!(
            "{what} is limited to N <= {limit} (exact methods); got N = {n}"
        )));
    }
    Ok(())
}

enum CliFailure {
    Config(String),
    Numerical(String),
    Capability(String),
    Other(anyhow::Error),
}

impl CliFailure {
    fn code(&self) -> u8 {
        match self {
            CliFailure::Config(_) => 2,
            CliFailure::Numerical(_) => 3,
            CliFailure::Capability(_) => 4,
            CliFailure::Other(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliFailure::Config(m) | CliFailure::Numerical(m) | CliFailure::Capability(m) => {
                m.clone()
            }
            CliFailure::Other(e) => format!("{e:#}"),
        }
    }
}

impl From<ChainError> for CliFailure {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::Domain(_) | ChainError::Config(_) => CliFailure::Config(e.to_string()),
            ChainError::Convergence { .. } => CliFailure::Numerical(e.to_string()),
            ChainError::Io(_) => CliFailure::Other(anyhow::anyhow!(e.to_string())),
        }
    }
}

impl From<anyhow::Error> for CliFailure {
    fn from(e: anyhow::Error) -> Self {
        CliFailure::Other(e)
    }
}

impl From<std::io::Error> for CliFailure {
    fn from(e: std::io::Error) -> Self {
        CliFailure::Other(anyhow::anyhow!(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliFailure> {
    let file_cfg: FileConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliFailure::Config(format!("cannot read config {path:?}: {e}")))?;
            toml::from_str(&text)
                .map_err(|e| CliFailure::Config(format!("invalid config {path:?}: {e}")))?
        }
        None => FileConfig::default(),
    };
    let resolved = Resolved {
        out: cli.out.or(file_cfg.out).unwrap_or_else(|| PathBuf::from("out")),
        alpha: cli.alpha.or(file_cfg.alpha).unwrap_or(1.0),
    };
    if let Some(jobs) = cli.jobs.or(file_cfg.jobs) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliFailure::Config(format!("worker pool: {e}")))?;
    }
    fs::create_dir_all(&resolved.out)?;

    match cli.command {
        Command::Profiles(args) => cmd_profiles(&resolved, args),
        Command::Transfer(args) => cmd_transfer(&resolved, args),
        Command::SweepVelocity(args) => cmd_sweep(&resolved, args),
        Command::Pplus(args) => cmd_pplus(&resolved, args),
        Command::OptimizePath(args) => cmd_optimize_path(&resolved, args),
        Command::Potential(args) => cmd_potential(&resolved, args),
        Command::GapScaling(args) => cmd_gap_scaling(&resolved, args),
        Command::Timescale(args) => cmd_timescale(&resolved, args),
    }
}

fn protocol_params(n: usize, theta_arg: &str, alpha: f64, h: f64) -> Result<BBParams, CliFailure> {
    let theta = parse_theta(theta_arg)?;
    let params = BBParams::new(n, theta, alpha, h)?;
    params.require_protocol()?;
    Ok(params)
}

fn n_profile(params: &BBParams, grid: &[f64]) -> Result<SpectralProfile, CliFailure> {
    Ok(spectral_profile(params, grid, 1)?)
}

fn cmd_profiles(res: &Resolved, args: ProfilesArgs) -> Result<(), CliFailure> {
    check_capability(args.n, MAX_SPECTRA_SITES, "spectral profiling")?;
    let params = protocol_params(args.n, &args.theta, res.alpha, 0.0)?;
    let grid = match args.grid_points {
        Some(k) if k >= 2 => (0..k).map(|i| -1.0 + 2.0 * i as f64 / (k - 1) as f64).collect(),
        Some(k) => {
            return Err(CliFailure::Config(format!("grid needs at least 2 points, got {k}")));
        }
        None => default_x_grid(),
    };
    let profile = spectral_profile(&params, &grid, args.m)?;
    let name = format!("profile_n{}.csv", args.n);
    let mut file = fs::File::create(res.out.join(&name))?;
    profile.write_csv(&mut file)?;
    let threshold = bbchain::control::adiabatic_threshold(&profile)?;
    write_manifest(
        &res.out,
        "profiles",
        serde_json::json!({
            "n": args.n, "m": args.m, "theta": params.theta, "alpha": params.alpha,
            "grid_points": grid.len(), "adiabatic_threshold": threshold,
        }),
        &[name],
    )?;
    println!(
        "N = {}: gap_min = {:.6e}, c_max = {:.6e}, adiabatic threshold = {:.6e}/alpha",
        args.n,
        profile.min_gap(),
        profile.max_coupling(),
        threshold
    );
    Ok(())
}

fn build_schedule(
    kind: ScheduleArg,
    params: &BBParams,
    duration: f64,
    profile: Option<&SpectralProfile>,
) -> Result<(CouplingSchedule, Option<OptimizedPath>), CliFailure> {
    match kind {
        ScheduleArg::Linear => Ok((CouplingSchedule::linear(duration)?, None)),
        ScheduleArg::Optimized => {
            let owned;
            let profile = match profile {
                Some(p) => p,
                None => {
                    owned = n_profile(params, &default_x_grid())?;
                    &owned
                }
            };
            let path = synthesize_optimized_path(profile, duration)?;
            Ok((path.to_schedule()?, Some(path)))
        }
    }
}

fn cmd_transfer(res: &Resolved, args: TransferArgs) -> Result<(), CliFailure> {
    check_capability(args.n, MAX_DYNAMICS_SITES, "time propagation")?;
    let params = protocol_params(args.n, &args.theta, res.alpha, args.h)?;
    let phi = parse_phi(&args.phi)?;
    let (schedule, path) = build_schedule(args.schedule, &params, args.t, None)?;
    let basis = Arc::new(SectorBasis::new(args.n, phi.m())?);
    let psi0 = dimer_state(&basis, FreeSide::LeftFree, &FreeSpin::Pure(phi))?;
    let opts = EvolveOptions {
        n_steps: args.steps,
        output_samples: args.samples,
        tracked: phi,
        ..Default::default()
    };
    let record = evolve(&params, &schedule, &psi0, &opts)?;

    let stem = format!("transfer_n{}_t{}_{}", args.n, args.t, args.schedule.name());
    let csv_name = format!("{stem}.csv");
    let mut file = fs::File::create(res.out.join(&csv_name))?;
    record.write_csv(&mut file)?;
    let sidecar_name = format!("{stem}.json");
    let mut side = fs::File::create(res.out.join(&sidecar_name))?;
    serde_json::to_writer_pretty(&mut side, &record.sidecar())
        .map_err(|e| CliFailure::Other(anyhow::anyhow!(e)))?;
    writeln!(side)?;
    let mut outputs = vec![csv_name, sidecar_name];
    if let Some(path) = path {
        let path_name = format!("{stem}_path.csv");
        let mut pf = fs::File::create(res.out.join(&path_name))?;
        path.write_csv(&mut pf)?;
        outputs.push(path_name);
    }
    write_manifest(
        &res.out,
        "transfer",
        serde_json::json!({
            "n": args.n, "t_alpha": args.t, "schedule": args.schedule.name(),
            "phi": phi.m(), "h": args.h, "alpha": params.alpha,
            "steps": args.steps, "samples": args.samples,
        }),
        &outputs,
    )?;
    println!(
        "N = {} T = {}/alpha ({}): F = {:.8}, error = {:.3e}, norm drift = {:.1e}",
        args.n,
        args.t,
        args.schedule.name(),
        record.fidelity,
        record.error,
        record.norm_drift
    );
    Ok(())
}

fn cmd_sweep(res: &Resolved, args: SweepArgs) -> Result<(), CliFailure> {
    use rayon::prelude::*;

    let ns: Vec<usize> = parse_list(&args.n, "chain length")?;
    for &n in &ns {
        check_capability(n, MAX_DYNAMICS_SITES, "time propagation")?;
    }
    let mut outputs = Vec::new();
    let mut duration_rows: Vec<(usize, f64, f64)> = Vec::new();
    for &n in &ns {
        let params = protocol_params(n, &args.theta, res.alpha, 0.0)?;
        let durations: Vec<f64> = match (&args.t_list, &args.velocities) {
            (Some(ts), _) => parse_list(ts, "duration")?,
            (None, Some(vs)) => parse_list::<f64>(vs, "velocity")?
                .into_iter()
                .map(|v| v * (n as f64 - 1.0))
                .collect(),
            (None, None) => {
                return Err(CliFailure::Config(
                    "provide --t-list or --velocities".to_string(),
                ));
            }
        };
        let profile = match args.schedule {
            ScheduleArg::Optimized => Some(n_profile(&params, &default_x_grid())?),
            ScheduleArg::Linear => None,
        };
        let basis = Arc::new(SectorBasis::new(n, 1)?);
        let psi0 = dimer_state(&basis, FreeSide::LeftFree, &FreeSpin::Pure(SiteState::Plus))?;
        // sweep points are independent; gathered in input order
        let rows: Result<Vec<(f64, f64, f64)>, CliFailure> = durations
            .par_iter()
            .map(|&t| {
                let (schedule, _) = build_schedule(args.schedule, &params, t, profile.as_ref())?;
                let record = evolve(&params, &schedule, &psi0, &EvolveOptions::default())?;
                Ok((t / (n as f64 - 1.0), t, record.error))
            })
            .collect();
        let rows = rows?;
        let name = format!("sweep_{}_n{}.csv", args.schedule.name(), n);
        let mut file = fs::File::create(res.out.join(&name))?;
        writeln!(file, "velocity,t_alpha,error,fidelity")?;
        for &(v, t, err) in &rows {
            writeln!(file, "{:.16e},{:.16e},{:.16e},{:.16e}", v, t, err, 1.0 - err)?;
            duration_rows.push((n, t, err));
        }
        outputs.push(name);
    }
    // combined table in the schema consumed by the timescale estimate
    let table_name = "durations.csv".to_string();
    let mut table = fs::File::create(res.out.join(&table_name))?;
    writeln!(table, "n,schedule,t_alpha,error")?;
    for &(n, t, err) in &duration_rows {
        writeln!(table, "{},{},{:.16e},{:.16e}", n, args.schedule.name(), t, err)?;
    }
    outputs.push(table_name);
    write_manifest(
        &res.out,
        "sweep-velocity",
        serde_json::json!({
            "n": ns, "schedule": args.schedule.name(), "alpha": res.alpha,
            "t_list": args.t_list, "velocities": args.velocities,
        }),
        &outputs,
    )?;
    println!("swept {} chain lengths, {} runs total", ns.len(), duration_rows.len());
    Ok(())
}

fn cmd_pplus(res: &Resolved, args: PplusArgs) -> Result<(), CliFailure> {
    check_capability(args.n, MAX_SPECTRA_SITES, "spectral profiling")?;
    let params = protocol_params(args.n, &args.theta, res.alpha, 0.0)?;
    let durations: Vec<f64> = parse_list(&args.t_list, "duration")?;
    let profile = n_profile(&params, &default_x_grid())?;
    let name = format!("pplus_n{}_{}.csv", args.n, args.schedule.name());
    let mut file = fs::File::create(res.out.join(&name))?;
    writeln!(file, "t_alpha,probability,first_order_valid,nodes")?;
    for &t in &durations {
        let (schedule, _) = build_schedule(args.schedule, &params, t, Some(&profile))?;
        let est = perturbative_excitation(&profile, &schedule)?;
        writeln!(
            file,
            "{:.16e},{:.16e},{},{}",
            t, est.probability, est.first_order_valid, est.nodes
        )?;
    }
    write_manifest(
        &res.out,
        "pplus",
        serde_json::json!({
            "n": args.n, "schedule": args.schedule.name(), "alpha": res.alpha,
            "t_list": durations,
        }),
        &[name],
    )?;
    Ok(())
}

fn cmd_optimize_path(res: &Resolved, args: OptimizePathArgs) -> Result<(), CliFailure> {
    check_capability(args.n, MAX_SPECTRA_SITES, "spectral profiling")?;
    let params = protocol_params(args.n, &args.theta, res.alpha, 0.0)?;
    let profile = n_profile(&params, &default_x_grid())?;
    let path = synthesize_optimized_path(&profile, args.t)?;
    let name = format!("path_n{}_t{}.csv", args.n, args.t);
    let mut file = fs::File::create(res.out.join(&name))?;
    path.write_csv(&mut file)?;
    write_manifest(
        &res.out,
        "optimize-path",
        serde_json::json!({
            "n": args.n, "t_alpha": args.t, "alpha": res.alpha, "knots": path.times.len(),
        }),
        std::slice::from_ref(&name),
    )?;
    println!("path with {} knots written to {}", path.times.len(), name);
    Ok(())
}

fn cmd_potential(res: &Resolved, args: PotentialArgs) -> Result<(), CliFailure> {
    let stages: Vec<(LatticeStage, &str)> = match args.stage {
        StageArg::A => vec![(LatticeStage::A, "a")],
        StageArg::B => vec![(LatticeStage::B, "b")],
        StageArg::C => vec![(LatticeStage::C, "c")],
        StageArg::All => vec![
            (LatticeStage::A, "a"),
            (LatticeStage::B, "b"),
            (LatticeStage::C, "c"),
        ],
    };
    if args.points < 2 {
        return Err(CliFailure::Config("need at least 2 sample points".to_string()));
    }
    let positions: Vec<f64> = (0..args.points)
        .map(|k| args.span * k as f64 / (args.points - 1) as f64)
        .collect();
    let mut outputs = Vec::new();
    for (stage, tag) in &stages {
        let cfg = stage.config(args.half, args.full)?;
        let values = superlattice_potential(&cfg, &positions);
        let name = format!("potential_{tag}.csv");
        let mut file = fs::File::create(res.out.join(&name))?;
        bbchain::lattice::write_potential_csv(&mut file, &positions, &values)?;
        outputs.push(name);
    }
    write_manifest(
        &res.out,
        "potential",
        serde_json::json!({
            "stage": format!("{:?}", args.stage), "half": args.half, "full": args.full,
            "points": args.points, "span": args.span,
        }),
        &outputs,
    )?;
    Ok(())
}

fn cmd_gap_scaling(res: &Resolved, args: GapScalingArgs) -> Result<(), CliFailure> {
    let ns: Vec<usize> = parse_list(&args.n, "chain length")?;
    for &n in &ns {
        check_capability(n, MAX_SPECTRA_SITES, "spectral profiling")?;
    }
    let theta = parse_theta(&args.theta)?;
    let scaling = min_gap_scaling(&ns, theta)?;
    let name = "gap_scaling.csv".to_string();
    let mut file = fs::File::create(res.out.join(&name))?;
    writeln!(file, "n,gap_min")?;
    for &(n, g) in &scaling {
        writeln!(file, "{},{:.16e}", n, g * res.alpha)?;
    }
    let inv_n: Vec<f64> = scaling.iter().map(|(n, _)| 1.0 / *n as f64).collect();
    let gaps: Vec<f64> = scaling.iter().map(|(_, g)| *g).collect();
    let (a, b, r2) = linear_fit(&inv_n, &gaps);
    write_manifest(
        &res.out,
        "gap-scaling",
        serde_json::json!({
            "n": ns, "theta": theta, "alpha": res.alpha,
            "fit": { "slope": a, "intercept": b, "r_squared": r2 },
        }),
        &[name],
    )?;
    println!("gap_min ~ {a:.4}/N {b:+.4} (R^2 = {r2:.5})");
    Ok(())
}

fn load_table(path: &Path) -> Result<Vec<DurationEntry>, CliFailure> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliFailure::Config(format!("bad table row: '{line}'")));
        }
        out.push(DurationEntry {
            n_sites: fields[0]
                .trim()
                .parse()
                .map_err(|_| CliFailure::Config(format!("bad n in '{line}'")))?,
            schedule: fields[1]
                .trim()
                .parse::<ScheduleKind>()
                .map_err(|e| CliFailure::Config(e.to_string()))?,
            t_alpha: fields[2]
                .trim()
                .parse()
                .map_err(|_| CliFailure::Config(format!("bad t_alpha in '{line}'")))?,
            error: fields[3]
                .trim()
                .parse()
                .map_err(|_| CliFailure::Config(format!("bad error in '{line}'")))?,
        });
    }
    Ok(out)
}

fn cmd_timescale(res: &Resolved, args: TimescaleArgs) -> Result<(), CliFailure> {
    let js: Vec<f64> = parse_list(&args.j, "coupling rate")?;
    let kind = match args.schedule {
        ScheduleArg::Linear => ScheduleKind::Linear,
        ScheduleArg::Optimized => ScheduleKind::Optimized,
    };
    let mut rows = Vec::new();
    for &j in &js {
        let est = match &args.table {
            None => timescale_estimate(j, args.n, args.target_error, kind)?,
            Some(path) => {
                let table = load_table(path)?;
                let best = table
                    .iter()
                    .filter(|e| {
                        e.n_sites == args.n && e.schedule == kind && e.error < args.target_error
                    })
                    .min_by(|a, b| a.t_alpha.total_cmp(&b.t_alpha))
                    .ok_or_else(|| {
                        CliFailure::Config(format!(
                            "table has no N = {} run with error < {:.2e}",
                            args.n, args.target_error
                        ))
                    })?;
                bbchain::lattice::TimescaleEstimate {
                    seconds: best.t_alpha / j,
                    t_alpha: best.t_alpha,
                    error: best.error,
                    n_sites: args.n,
                }
            }
        };
        println!(
            "J = {j} 1/s: T = {:.4} s (T alpha = {}, error = {:.2e})",
            est.seconds, est.t_alpha, est.error
        );
        rows.push(serde_json::json!({
            "j_per_second": j, "seconds": est.seconds,
            "t_alpha": est.t_alpha, "error": est.error,
        }));
    }
    let mut extra = serde_json::Map::new();
    if let Some(h) = &args.hubbard {
        let hp = HubbardParams::new(h[0], h[1], h[2])?;
        let map = hubbard_to_bb(&hp)?;
        let name = "hubbard_mapping.txt".to_string();
        let mut file = fs::File::create(res.out.join(&name))?;
        map.write_text(&mut file)?;
        println!(
            "hubbard mapping: alpha = {:.6e}, theta = {:.6} pi, c2/c0 = {:.4}",
            map.alpha,
            map.theta / std::f64::consts::PI,
            map.ctilde2
        );
        extra.insert("hubbard_mapping".to_string(), serde_json::json!(map));
    }
    if let Some(sc) = &args.scattering {
        let ct = scattering_to_ctilde(sc[0], sc[1])?;
        println!("c2/c0 from scattering lengths ({}, {}): {ct}", sc[0], sc[1]);
        extra.insert("ctilde2_from_scattering".to_string(), serde_json::json!(ct));
    }
    let name = "timescale.json".to_string();
    let mut file = fs::File::create(res.out.join(&name))?;
    serde_json::to_writer_pretty(
        &mut file,
        &serde_json::json!({
            "n": args.n, "target_error": args.target_error,
            "schedule": args.schedule.name(), "estimates": rows, "extra": extra,
        }),
    )
    .map_err(|e| CliFailure::Other(anyhow::anyhow!(e)))?;
    writeln!(file)?;
    write_manifest(
        &res.out,
        "timescale",
        serde_json::json!({
            "n": args.n, "target_error": args.target_error,
            "schedule": args.schedule.name(), "j": js,
        }),
        &[name],
    )?;
    Ok(())
}
