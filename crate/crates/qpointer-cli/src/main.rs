//! `qpointer` — command-line front end for the weak-to-strong measurement
//! transition simulator.
//!
//! Subcommands:
//!
//! * `point` — evaluate one working point (θ, Γ) and print its closed-form
//!   observables, optionally cross-checked against the Fock engine.
//! * `sweep` — run a sweep specification from a JSON file and write the
//!   per-row CSV plus run metadata.
//! * `transition` — convenience sweep over Γ at fixed θ (the transition
//!   curve), with optional simulated tomography.
//! * `reconstruct` — simulate characteristic-function tomography for one
//!   working point and reconstruct the conditioned position density.
//! * `wigner` — tabulate the closed-form Wigner function and position
//!   density, for one working point or the whole panel catalogue.
//! * `check` — compare the Fock engine against the closed forms on a fixed
//!   grid; exits non-zero when any point disagrees beyond tolerance.
//!
//! Exit codes: 0 success, 1 failed check or I/O problem, 2 invalid
//! parameters or input files, 3 a physics/numerics engine refused to run.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qpointer_core::analytic::{
    expectation_value, make_cat_state, pointer_shift, probability_density, success_probability,
    transition_factor, uncoupled_success_probability, weak_value, PhaseSpaceGrid,
};
use qpointer_core::artifact::{
    config_hash, write_density_csv, write_json, write_sweep_csv, write_wigner_csv,
};
use qpointer_core::config::Units;
use qpointer_core::fock::{expectation_z, run_protocol, DEFAULT_DIM};
use qpointer_core::sweep::{
    figure3_panels, run_sweep, Engine, SweepError, SweepResult, SweepSpec, TomographySettings,
};
use qpointer_core::tomography::{
    default_k_grid, default_z_grid, reconstruct_fourier, reconstruct_least_squares, ShotCount,
    TomographyEngine, TomographyError,
};
use qpointer_core::MeasurementConfig;

// ── Error / exit-code plumbing ──────────────────────────────────────────────

/// CLI failure classes, each with a fixed exit code. Parameter and input-file
/// problems (2) are the user's to fix; engine refusals (3) mean the requested
/// configuration is beyond what the numerics will certify; everything else
/// (I/O, serialization) is 1.
#[derive(Debug)]
enum CliError {
    Config(String),
    Physics(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Physics(m) | CliError::Other(m) => m,
        }
    }
}

fn cfg<E: Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn phys<E: Display>(e: E) -> CliError {
    CliError::Physics(e.to_string())
}

fn other<E: Display>(e: E) -> CliError {
    CliError::Other(e.to_string())
}

fn sweep_err(e: SweepError) -> CliError {
    match e {
        SweepError::InvalidSpec { .. } => cfg(e),
        _ => phys(e),
    }
}

/// Tomography failures split by who can fix them: malformed grids, shot
/// counts, and coverage are parameter problems; solver and protocol failures
/// are runtime physics.
fn tomo_err(e: TomographyError) -> CliError {
    match e {
        TomographyError::InvalidK { .. }
        | TomographyError::InvalidGrid { .. }
        | TomographyError::InvalidShots
        | TomographyError::InvalidInput { .. }
        | TomographyError::MissingBasisPair { .. }
        | TomographyError::InsufficientKRange { .. }
        | TomographyError::RankDeficient { .. } => cfg(e),
        TomographyError::Engine(_)
        | TomographyError::SolverFailure { .. }
        | TomographyError::LinearRegimeViolated { .. } => phys(e),
    }
}

// ── Command-line surface ────────────────────────────────────────────────────

#[derive(Parser)]
#[command(
    name = "qpointer",
    version,
    about = "Weak-to-strong measurement transition of a qubit with an oscillator pointer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form observables of one working point.
    Point(PointArgs),
    /// Run a sweep specification (JSON) and write CSV + metadata.
    Sweep(SweepArgs),
    /// Sweep Γ at fixed θ: the weak-to-strong transition curve.
    Transition(TransitionArgs),
    /// Simulate tomography and reconstruct the position density.
    Reconstruct(ReconstructArgs),
    /// Tabulate the Wigner function and position density as CSV.
    Wigner(WignerArgs),
    /// Compare the Fock engine against the closed forms on a fixed grid.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum UnitsArg {
    /// Lengths in wavepacket widths (Δ_z = 1).
    Natural,
    /// Trapped-ion preset: metres and seconds.
    Physical,
}

impl From<UnitsArg> for Units {
    fn from(value: UnitsArg) -> Self {
        match value {
            UnitsArg::Natural => Units::Natural,
            UnitsArg::Physical => Units::Physical,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Analytic,
    Fock,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(value: EngineArg) -> Self {
        match value {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Fock => Engine::Fock,
            EngineArg::Both => Engine::Both,
        }
    }
}

#[derive(Args)]
struct PointArgs {
    /// Post-selection angle θ in radians, 0 < θ ≤ π/2.
    #[arg(long)]
    theta: f64,
    /// Dimensionless interaction strength Γ = γ₀t/Δ_z.
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = UnitsArg::Natural)]
    units: UnitsArg,
    /// Also run the Fock engine at this truncation and print the deviation.
    #[arg(long)]
    fock_dim: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Path to a sweep specification (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory [default: out/<spec hash>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransitionArgs {
    /// Post-selection angle θ in radians. The default is a weak angle with a
    /// clearly visible transition (weak value ≈ −3.23 vs expectation ≈ −0.56);
    /// at θ = π/4 the two asymptotes coincide and the curve is flat.
    #[arg(long, default_value_t = 0.3)]
    theta: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma_min: f64,
    #[arg(long, default_value_t = 3.0)]
    gamma_max: f64,
    /// Number of Γ grid points.
    #[arg(long, default_value_t = 31)]
    points: usize,
    #[arg(long, value_enum, default_value_t = EngineArg::Both)]
    engine: EngineArg,
    /// Tomography shots per probe record; 0 disables the tomography rows.
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    fock_dim: usize,
    #[arg(long, value_enum, default_value_t = UnitsArg::Natural)]
    units: UnitsArg,
    /// Output directory [default: out/<spec hash>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Path to a reconstruction job (JSON).
    #[arg(long)]
    job: PathBuf,
    /// Output directory [default: out/<job hash>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WignerArgs {
    /// Post-selection angle θ in radians (natural units).
    #[arg(long, conflicts_with = "catalogue", requires = "gamma")]
    theta: Option<f64>,
    /// Dimensionless interaction strength Γ.
    #[arg(long, conflicts_with = "catalogue", requires = "theta")]
    gamma: Option<f64>,
    /// Tabulate all eight catalogued panels instead of one point.
    #[arg(long)]
    catalogue: bool,
    /// Output directory [default: out/<parameter hash>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckGrid {
    /// 3 × 3 working points.
    Quick,
    /// 6 × 6 working points.
    Standard,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value_t = CheckGrid::Quick)]
    grid: CheckGrid,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    fock_dim: usize,
    /// Maximum allowed |Fock − closed form| per observable.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

// ── Entry point ─────────────────────────────────────────────────────────────

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Point(args) => run_point(args)?,
        Command::Sweep(args) => run_sweep_file(args)?,
        Command::Transition(args) => run_transition(args)?,
        Command::Reconstruct(args) => run_reconstruct(args)?,
        Command::Wigner(args) => run_wigner(args)?,
        Command::Check(args) => return run_check(args),
    }
    Ok(ExitCode::SUCCESS)
}

// ── point ───────────────────────────────────────────────────────────────────

fn run_point(args: PointArgs) -> Result<(), CliError> {
    let units: Units = args.units.into();
    let config = MeasurementConfig::for_units(units, args.theta, args.gamma).map_err(cfg)?;
    // A single-point report exists to show the weak value and its
    // interpolation; every failure of the closed forms here means the
    // parameters are outside that diagnostic's domain.
    let weak = weak_value(config.theta).map_err(cfg)?;
    let expectation = expectation_value(config.theta).map_err(cfg)?;
    let overlap = transition_factor(config.gamma_big).map_err(cfg)?;
    let shift = pointer_shift(&config).map_err(cfg)?;
    let success = success_probability(&config).map_err(cfg)?;
    let uncoupled = uncoupled_success_probability(config.theta).map_err(cfg)?;
    let g0t = config.gamma0_t();

    println!("theta = {:.6}", config.theta);
    println!("gamma_big = {:.6}", config.gamma_big);
    println!(
        "units = {}",
        match units {
            Units::Natural => "natural",
            Units::Physical => "physical",
        }
    );
    println!("gamma0t = {:.6e}", g0t);
    println!("weak_value = {weak:.6}");
    println!("expectation_sigma_z = {expectation:.6}");
    println!("branch_overlap = {overlap:.6}");
    if g0t > 0.0 {
        println!("shift/gamma0t = {:.6}", shift / g0t);
    } else {
        println!("shift/gamma0t = undefined (gamma = 0)");
    }
    println!("pointer_shift = {shift:.6e}");
    println!("success_probability = {success:.6}");
    println!("uncoupled_success_probability = {uncoupled:.6}");

    if let Some(dim) = args.fock_dim {
        let (motional, probability) = run_protocol(&config, dim).map_err(phys)?;
        let fock_shift = expectation_z(&motional, config.delta_z);
        println!("fock_dim = {dim}");
        println!("fock_pointer_shift = {fock_shift:.6e}");
        if g0t > 0.0 {
            println!("fock_shift/gamma0t = {:.6}", fock_shift / g0t);
            println!(
                "fock_delta_vs_analytic = {:.3e}",
                (fock_shift - shift) / g0t
            );
        } else {
            println!("fock_shift/gamma0t = undefined (gamma = 0)");
        }
        println!("fock_success_probability = {probability:.6}");
        println!("fock_delta_success = {:.3e}", probability - success);
    }
    Ok(())
}

// ── sweep / transition ──────────────────────────────────────────────────────

fn run_sweep_file(args: SweepArgs) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec: SweepSpec = serde_json::from_str(&raw).map_err(|e| {
        CliError::Config(format!("invalid sweep spec {}: {e}", args.spec.display()))
    })?;
    spec.validate().map_err(cfg)?;
    let result = run_sweep(&spec).map_err(sweep_err)?;
    let out = resolve_out(args.out, &spec)?;
    write_sweep_artifacts(&out, &result)
}

fn run_transition(args: TransitionArgs) -> Result<(), CliError> {
    if args.points == 0 {
        return Err(CliError::Config("--points must be at least 1".to_string()));
    }
    let spec = SweepSpec {
        theta_values: vec![args.theta],
        gamma_values: linspace(args.gamma_min, args.gamma_max, args.points),
        engine: args.engine.into(),
        tomography: (args.shots > 0).then_some(TomographySettings {
            shots: args.shots,
            seed: args.seed,
        }),
        fock_dim: args.fock_dim,
        units: args.units.into(),
        tolerance: None,
    };
    spec.validate().map_err(cfg)?;
    let result = run_sweep(&spec).map_err(sweep_err)?;
    println!(
        "transition: theta = {:.6}, {} gamma points in [{:.6}, {:.6}]",
        args.theta, args.points, args.gamma_min, args.gamma_max
    );
    let out = resolve_out(args.out, &spec)?;
    write_sweep_artifacts(&out, &result)
}

fn write_sweep_artifacts(out: &Path, result: &SweepResult) -> Result<(), CliError> {
    let csv_path = out.join("sweep.csv");
    write_sweep_csv(&csv_path, &result.rows).map_err(other)?;
    let meta_path = out.join("metadata.json");
    write_json(&meta_path, &result.metadata).map_err(other)?;
    let errors = result.rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "sweep: {} rows ({} with per-point errors)",
        result.rows.len(),
        errors
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", meta_path.display());
    Ok(())
}

// ── reconstruct ─────────────────────────────────────────────────────────────

/// One density-reconstruction job. `shots = 0` records exact expectation
/// values; `k_grid` defaults to the standard 0…5 probe ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReconstructJob {
    theta: f64,
    gamma_big: f64,
    #[serde(default)]
    units: Units,
    #[serde(default = "default_dim")]
    fock_dim: usize,
    shots: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    method: Method,
    #[serde(default)]
    k_grid: Option<Vec<f64>>,
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Fourier,
    LeastSquares,
    #[default]
    Both,
}

#[derive(Serialize)]
struct EstimateSummary {
    method: &'static str,
    file: String,
    residual: f64,
    negative_excursion: f64,
    mass: f64,
}

#[derive(Serialize)]
struct ReconstructSummary {
    job: ReconstructJob,
    job_hash: String,
    records: usize,
    estimates: Vec<EstimateSummary>,
}

fn run_reconstruct(args: ReconstructArgs) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(&args.job)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.job.display())))?;
    let job: ReconstructJob = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("invalid job file {}: {e}", args.job.display())))?;

    let config = MeasurementConfig::for_units(job.units, job.theta, job.gamma_big).map_err(cfg)?;
    let engine = TomographyEngine::new(job.fock_dim).map_err(cfg)?;
    let shot_count = match job.shots {
        0 => ShotCount::Exact,
        n => ShotCount::Finite(n),
    };
    let k_grid = job.k_grid.clone().unwrap_or_else(default_k_grid);
    let dataset = engine
        .sample_dataset(&config, &k_grid, shot_count, job.seed)
        .map_err(tomo_err)?;

    let out = resolve_out(args.out, &job)?;
    let dataset_path = out.join("dataset.json");
    write_json(&dataset_path, &dataset).map_err(other)?;
    println!(
        "reconstruct: {} records, fock_dim = {}, shots = {}",
        dataset.records.len(),
        job.fock_dim,
        match shot_count {
            ShotCount::Exact => "exact".to_string(),
            ShotCount::Finite(n) => n.to_string(),
        }
    );
    println!("wrote {}", dataset_path.display());

    let z_grid = default_z_grid(config.gamma_big);
    let mut estimates = Vec::new();
    let wants = |m: Method| job.method == m || job.method == Method::Both;
    if wants(Method::Fourier) {
        let estimate = reconstruct_fourier(&dataset, &z_grid).map_err(tomo_err)?;
        estimates.push(write_density_estimate(
            &out,
            "fourier",
            &estimate.z_grid,
            &estimate.density,
            estimate.residual,
            estimate.negative_excursion,
        )?);
    }
    if wants(Method::LeastSquares) {
        let estimate = reconstruct_least_squares(&dataset, &z_grid).map_err(tomo_err)?;
        estimates.push(write_density_estimate(
            &out,
            "least_squares",
            &estimate.z_grid,
            &estimate.density,
            estimate.residual,
            estimate.negative_excursion,
        )?);
    }

    let summary = ReconstructSummary {
        job_hash: config_hash(&job).map_err(other)?,
        job,
        records: dataset.records.len(),
        estimates,
    };
    let summary_path = out.join("summary.json");
    write_json(&summary_path, &summary).map_err(other)?;
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn write_density_estimate(
    out: &Path,
    method: &'static str,
    z_grid: &[f64],
    density: &[f64],
    residual: f64,
    negative_excursion: f64,
) -> Result<EstimateSummary, CliError> {
    let path = out.join(format!("density_{method}.csv"));
    write_density_csv(&path, z_grid, density).map_err(other)?;
    let mass = trapz(z_grid, density);
    println!(
        "{method}: residual = {residual:.3e}, negative_excursion = {negative_excursion:.3e}, \
         mass = {mass:.6}"
    );
    println!("wrote {}", path.display());
    Ok(EstimateSummary {
        method,
        file: path.display().to_string(),
        residual,
        negative_excursion,
        mass,
    })
}

// ── wigner ──────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct PanelDescriptor {
    theta: f64,
    gamma_big: f64,
    z_min: f64,
    z_max: f64,
    n_z: usize,
    p_min: f64,
    p_max: f64,
    n_p: usize,
}

fn run_wigner(args: WignerArgs) -> Result<(), CliError> {
    if args.catalogue {
        return run_wigner_catalogue(args.out);
    }
    let (theta, gamma) = match (args.theta, args.gamma) {
        (Some(t), Some(g)) => (t, g),
        _ => {
            return Err(CliError::Config(
                "provide --theta and --gamma, or --catalogue".to_string(),
            ))
        }
    };
    // Phase-space tables are natural-units only: the grid spans are chosen
    // in wavepacket widths.
    let config = MeasurementConfig::new(theta, gamma).map_err(cfg)?;
    let grid = PhaseSpaceGrid::span_for(gamma).map_err(cfg)?;
    let w = qpointer_core::analytic::wigner(&config, &grid).map_err(cfg)?;
    let cat = make_cat_state(&config).map_err(cfg)?;
    let z_grid = grid.z_values();
    let density: Vec<f64> = z_grid
        .iter()
        .map(|&z| probability_density(&cat, z))
        .collect();

    let descriptor = panel_descriptor(theta, gamma, &grid);
    let out = resolve_out(args.out, &descriptor)?;
    println!(
        "wigner: theta = {:.6}, gamma_big = {:.6}, grid {} x {}",
        theta, gamma, grid.n_z, grid.n_p
    );
    write_panel(&out, &descriptor, &grid, &w, &z_grid, &density)?;
    Ok(())
}

fn run_wigner_catalogue(out: Option<PathBuf>) -> Result<(), CliError> {
    let panels = figure3_panels().map_err(sweep_err)?;
    #[derive(Serialize)]
    struct CatalogueKey {
        catalogue: &'static str,
    }
    let out = resolve_out(
        out,
        &CatalogueKey {
            catalogue: "figure3",
        },
    )?;
    println!("catalogue: {} panels", panels.len());

    let mut descriptors = Vec::new();
    for (index, panel) in panels.iter().enumerate() {
        let grid = PhaseSpaceGrid::span_for(panel.gamma_big).map_err(cfg)?;
        let descriptor = panel_descriptor(panel.theta, panel.gamma_big, &grid);
        println!(
            "panel {index}: gamma_big = {:.6}, theta = {:.6}, grid {} x {}",
            panel.gamma_big, panel.theta, grid.n_z, grid.n_p
        );
        write_panel(
            &out.join(format!("panel_{index}")),
            &descriptor,
            &grid,
            &panel.wigner,
            &panel.z_grid,
            &panel.density,
        )?;
        descriptors.push(descriptor);
    }
    let manifest_path = out.join("panels.json");
    write_json(&manifest_path, &descriptors).map_err(other)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn panel_descriptor(theta: f64, gamma_big: f64, grid: &PhaseSpaceGrid) -> PanelDescriptor {
    PanelDescriptor {
        theta,
        gamma_big,
        z_min: grid.z_min,
        z_max: grid.z_max,
        n_z: grid.n_z,
        p_min: grid.p_min,
        p_max: grid.p_max,
        n_p: grid.n_p,
    }
}

fn write_panel(
    dir: &Path,
    descriptor: &PanelDescriptor,
    grid: &PhaseSpaceGrid,
    w: &nalgebra::DMatrix<f64>,
    z_grid: &[f64],
    density: &[f64],
) -> Result<(), CliError> {
    let wigner_path = dir.join("wigner.csv");
    write_wigner_csv(&wigner_path, grid, w).map_err(other)?;
    let density_path = dir.join("density.csv");
    write_density_csv(&density_path, z_grid, density).map_err(other)?;
    let meta_path = dir.join("panel.json");
    write_json(&meta_path, descriptor).map_err(other)?;
    println!("wrote {}", wigner_path.display());
    println!("wrote {}", density_path.display());
    println!("wrote {}", meta_path.display());
    Ok(())
}

// ── check ───────────────────────────────────────────────────────────────────

fn run_check(args: CheckArgs) -> Result<ExitCode, CliError> {
    let (theta_values, gamma_values): (Vec<f64>, Vec<f64>) = match args.grid {
        CheckGrid::Quick => (vec![0.3, FRAC_PI_4, 1.2], vec![0.1, 1.0, 2.9]),
        CheckGrid::Standard => (
            vec![0.05, 0.3, 0.7, FRAC_PI_4, 1.2, 1.5],
            vec![0.02, 0.1, 0.5, 1.0, 2.0, 2.9],
        ),
    };
    let spec = SweepSpec {
        theta_values,
        gamma_values,
        engine: Engine::Both,
        tomography: None,
        fock_dim: args.fock_dim,
        units: Units::Natural,
        tolerance: Some(args.tolerance),
    };
    spec.validate().map_err(cfg)?;
    let result = run_sweep(&spec).map_err(sweep_err)?;

    // Engine::Both without tomography emits exactly one analytic row and one
    // Fock row per working point, in that order.
    let mut passed = 0usize;
    let mut total = 0usize;
    for pair in result.rows.chunks(2) {
        let (analytic, fock) = (&pair[0], &pair[1]);
        total += 1;
        let mut reasons = Vec::new();
        if let Some(e) = &analytic.error {
            reasons.push(format!("analytic: {e}"));
        }
        if let Some(e) = &fock.error {
            reasons.push(format!("fock: {e}"));
        }
        let shift_delta = fock
            .delta_vs_analytic
            .map(f64::abs)
            .unwrap_or(f64::INFINITY);
        let prob_delta = match (analytic.success_probability, fock.success_probability) {
            (Some(a), Some(f)) => (f - a).abs(),
            _ => f64::INFINITY,
        };
        let ok =
            reasons.is_empty() && shift_delta <= args.tolerance && prob_delta <= args.tolerance;
        println!(
            "theta={:.6} gamma={:.6} shift_delta={:.3e} prob_delta={:.3e} {}",
            analytic.theta,
            analytic.gamma_big,
            shift_delta,
            prob_delta,
            if ok { "ok" } else { "FAIL" }
        );
        for reason in reasons {
            println!("  {reason}");
        }
        if ok {
            passed += 1;
        }
    }

    if passed == total {
        println!(
            "check: {passed}/{total} points agree within {:.1e} (fock_dim = {})",
            args.tolerance, args.fock_dim
        );
        Ok(ExitCode::SUCCESS)
    } else {
        println!(
            "check: {passed}/{total} points agree within {:.1e} (fock_dim = {}); {} exceed tolerance",
            args.tolerance,
            args.fock_dim,
            total - passed
        );
        Ok(ExitCode::from(1))
    }
}

// ── Shared helpers ──────────────────────────────────────────────────────────

/// Output directory: explicit `--out`, or `out/<first 8 hex of the SHA-256
/// of the run's parameters>` so identical runs land in the same place.
fn resolve_out<T: Serialize>(out: Option<PathBuf>, key: &T) -> Result<PathBuf, CliError> {
    match out {
        Some(dir) => Ok(dir),
        None => Ok(PathBuf::from("out").join(config_hash(key).map_err(other)?)),
    }
}

fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (end - start) / (n - 1) as f64;
    (0..n).map(|i| start + step * i as f64).collect()
}

fn trapz(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}
