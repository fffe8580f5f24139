//! Batch experiment driver for the kicked harmonic oscillator library.
//!
//! Subcommands cover the standard numerical experiments: quantum and
//! classical heating curves, overlap-filtered level dynamics along η,
//! avoided-crossing detection with Husimi classification, Husimi maps of
//! single eigenstates, long η scans of the energy after a fixed kick count,
//! and basis-size convergence reports. Exit codes: 0 success, 1 invalid
//! configuration, 2 numeric or I/O failure.

mod config;
mod output;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use kickho::classical::{
    ensemble_heating_curve, iterate_trajectory, occupancy_histogram, sample_vacuum_ensemble,
    HistogramSpec, PhasePoint,
};
use kickho::fock::{floquet_operator, FockBasis};
use kickho::husimi::{classify_with, husimi_grid, HusimiGridSpec};
use kickho::params::SystemParams;
use kickho::propagate::{
    converged_heating_curve, heating_curve, CenterConvention, InitialState, StateVector,
};
use kickho::spectral::{
    circular_distance, classify_crossing, convergence_report, diagonalize, eta_sweep,
    find_avoided_crossings, track_bands, CrossingSearch, QuasienergySpectrum,
};
use kickho::KhoError;

use output::{fmt_float, write_csv, write_plot_script, write_sidecar, PlotKind, ResolvedConfig};

#[derive(Parser)]
#[command(
    name = "kickho",
    version,
    about = "Kicked harmonic oscillator: stochastic-web and Floquet simulations"
)]
struct Cli {
    /// Worker threads (falls back to KICKHO_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat key=value defaults file; explicit flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files
    #[arg(long = "out-dir", global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Also emit a matplotlib script next to each CSV
    #[arg(long = "plot-script", global = true)]
    plot_script: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum heating curve: mean energy and leakage per kick
    Heat(HeatArgs),
    /// Classical ensemble heating curve and a single-trajectory web histogram
    Classical(ClassicalArgs),
    /// Overlap-filtered quasienergy spectrum along an eta grid
    Sweep(SweepArgs),
    /// Avoided crossings of the level dynamics, refined and classified
    Crossings(CrossingsArgs),
    /// Husimi distribution of one Floquet eigenstate
    Husimi(HusimiArgs),
    /// Mean energy after a fixed kick count, scanned over eta
    Etascan(EtascanArgs),
    /// Eigenphase drift across increasing basis sizes
    Converge(ConvergeArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Stochasticity parameter K
    #[arg(long = "K", default_value_t = 2.0)]
    kick_strength: f64,
    /// Kicks per oscillator period (integer q >= 3)
    #[arg(long, default_value_t = 6)]
    q: u32,
}

#[derive(Args, Clone)]
struct InitialArgs {
    /// Initial state: "vacuum" or "displaced:X1,X2"
    #[arg(long, default_value = "vacuum")]
    initial: String,
    /// Displacement coordinates: "husimi" (v/2eta, u/2eta) or "phase" (v, u)
    #[arg(long = "displaced-coords", default_value = "husimi")]
    displaced_coords: String,
}

impl InitialArgs {
    fn parse(&self) -> Result<InitialState> {
        let convention = match self.displaced_coords.as_str() {
            "husimi" => CenterConvention::HusimiAxes,
            "phase" => CenterConvention::ScaledPhaseSpace,
            other => {
                return Err(config_err(format!(
                    "displaced-coords must be 'husimi' or 'phase', got {other:?}"
                )))
            }
        };
        if self.initial == "vacuum" {
            return Ok(InitialState::Vacuum);
        }
        if let Some(rest) = self.initial.strip_prefix("displaced:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() == 2 {
                let x1: f64 = parts[0]
                    .trim()
                    .parse()
                    .map_err(|_| config_err(format!("bad displacement {rest:?}")))?;
                let x2: f64 = parts[1]
                    .trim()
                    .parse()
                    .map_err(|_| config_err(format!("bad displacement {rest:?}")))?;
                return Ok(InitialState::Displaced {
                    center: (x1, x2),
                    convention,
                });
            }
        }
        Err(config_err(format!(
            "initial must be 'vacuum' or 'displaced:X1,X2', got {:?}",
            self.initial
        )))
    }
}

#[derive(Args, Clone)]
struct HeatArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Lamb-Dicke parameter eta
    #[arg(long)]
    eta: f64,
    /// Number of kicks
    #[arg(long, default_value_t = 100)]
    kicks: usize,
    #[command(flatten)]
    initial: InitialArgs,
    /// Basis size: an integer, or "auto" for the doubling policy
    #[arg(long, default_value = "auto")]
    basis: String,
    /// Largest basis size the auto policy may use
    #[arg(long = "basis-cap", default_value_t = 2048)]
    basis_cap: usize,
}

#[derive(Args, Clone)]
struct ClassicalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    eta: f64,
    /// Kicks for the ensemble heating curve
    #[arg(long, default_value_t = 100)]
    kicks: usize,
    #[arg(long = "ensemble-size", default_value_t = 10_000)]
    ensemble_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Kicks for the single web trajectory
    #[arg(long = "traj-kicks", default_value_t = 40_000)]
    traj_kicks: usize,
    /// Web trajectory start point
    #[arg(long = "start-v", default_value_t = 0.01)]
    start_v: f64,
    #[arg(long = "start-u", default_value_t = 0.0)]
    start_u: f64,
    /// Histogram half-width and bins per axis
    #[arg(long = "grid-half", default_value_t = 15.0)]
    grid_half: f64,
    #[arg(long = "grid-bins", default_value_t = 101)]
    grid_bins: usize,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "eta-from")]
    eta_from: f64,
    #[arg(long = "eta-to")]
    eta_to: f64,
    #[arg(long = "eta-step")]
    eta_step: f64,
    /// Basis size for the Floquet operators
    #[arg(long, default_value = "300")]
    basis: String,
    #[command(flatten)]
    initial: InitialArgs,
    /// Overlap retention threshold
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
}

#[derive(Args, Clone)]
struct CrossingsArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Golden-section bracket width in eta at which refinement stops
    #[arg(long = "refine-tol", default_value_t = 1e-4)]
    refine_tol: f64,
    /// Minimum psi0 overlap for a crossing to be reported
    #[arg(long, default_value_t = 1e-2)]
    marker: f64,
    /// Grid-level gap above which a local minimum is ignored
    #[arg(long = "max-grid-gap", default_value_t = 0.3)]
    max_grid_gap: f64,
    /// Disc radius of the localization classifier
    #[arg(long = "classify-radius", default_value_t = 1.5)]
    classify_radius: f64,
}

#[derive(Args, Clone)]
struct HusimiArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value = "300")]
    basis: String,
    /// Eigenstate selector: "overlap:RANK" (by psi0 overlap, 0 = largest)
    /// or "phase:VALUE" (nearest quasienergy)
    #[arg(long, default_value = "overlap:0")]
    select: String,
    #[command(flatten)]
    initial: InitialArgs,
    /// Grid half-width and nodes per axis in (v/2eta, u/2eta)
    #[arg(long, default_value_t = 8.0)]
    half: f64,
    #[arg(long, default_value_t = 201)]
    nodes: usize,
}

#[derive(Args, Clone)]
struct EtascanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 600)]
    kicks: usize,
    #[arg(long = "eta-from", default_value_t = 0.40)]
    eta_from: f64,
    #[arg(long = "eta-to", default_value_t = 0.70)]
    eta_to: f64,
    #[arg(long = "eta-step", default_value_t = 0.002)]
    eta_step: f64,
    #[command(flatten)]
    initial: InitialArgs,
    /// Basis size: an integer, or "auto"
    #[arg(long, default_value = "auto")]
    basis: String,
    #[arg(long = "basis-cap", default_value_t = 1024)]
    basis_cap: usize,
}

#[derive(Args, Clone)]
struct ConvergeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    eta: f64,
    /// Comma-separated increasing basis sizes
    #[arg(long = "basis-list", default_value = "200,300,400")]
    basis_list: String,
    #[command(flatten)]
    initial: InitialArgs,
    #[arg(long, default_value_t = 1e-2)]
    threshold: f64,
}

/// Entry point: returns the process exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let raw: Vec<String> = args.into_iter().collect();
    match try_run(raw) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("kickho: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> i32 {
    if let Some(kho) = e.downcast_ref::<KhoError>() {
        return match kho {
            KhoError::Domain(_) | KhoError::NonResonant { .. } => 1,
            _ => 2,
        };
    }
    if e.is::<ConfigError>() {
        1
    } else {
        2
    }
}

#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl ToString) -> anyhow::Error {
    anyhow!(ConfigError(msg.to_string()))
}

fn try_run(mut raw: Vec<String>) -> Result<()> {
    // resolve a --config file before clap sees the final argument list
    if let Some(pos) = raw.iter().position(|a| a == "--config") {
        let path = raw
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| config_err("--config needs a path"))?;
        let pairs =
            config::parse_config(Path::new(&path)).map_err(|e| config_err(format!("{e:#}")))?;
        raw = config::merge_into_args(raw, &pairs);
    }
    let mut argv = vec!["kickho".to_string()];
    argv.extend(raw);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => return Err(config_err(e.to_string())),
        Err(e) => {
            // --help or --version
            print!("{e}");
            return Ok(());
        }
    };

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("KICKHO_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(num_threads_default);
    // the global pool can only be installed once per process; keep the first
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();

    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("cannot create {}", cli.out_dir.display()))?;

    match &cli.command {
        Command::Heat(args) => cmd_heat(&cli, args, threads),
        Command::Classical(args) => cmd_classical(&cli, args, threads),
        Command::Sweep(args) => cmd_sweep(&cli, args, threads),
        Command::Crossings(args) => cmd_crossings(&cli, args, threads),
        Command::Husimi(args) => cmd_husimi(&cli, args, threads),
        Command::Etascan(args) => cmd_etascan(&cli, args, threads),
        Command::Converge(args) => cmd_converge(&cli, args, threads),
    }
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn parse_basis(basis: &str) -> Result<Option<usize>> {
    if basis == "auto" {
        return Ok(None);
    }
    let n: usize = basis
        .parse()
        .map_err(|_| config_err(format!("basis must be an integer or \"auto\", got {basis:?}")))?;
    Ok(Some(n))
}

fn eta_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(to > from) || !(from > 0.0) {
        return Err(config_err(format!(
            "eta grid needs 0 < eta-from < eta-to and eta-step > 0 (got {from}, {to}, {step})"
        )));
    }
    let count = ((to - from) / step).round() as usize;
    Ok((0..=count).map(|i| from + step * i as f64).collect())
}

fn base_config(cli: &Cli, command: &str, model: &ModelArgs, threads: usize) -> ResolvedConfig {
    let mut cfg = ResolvedConfig::new(command);
    cfg.push("K", model.kick_strength);
    cfg.push("q", model.q);
    cfg.push("threads", threads);
    cfg.push("out_dir", cli.out_dir.display());
    cfg
}

fn cmd_heat(cli: &Cli, args: &HeatArgs, threads: usize) -> Result<()> {
    let params = SystemParams::new(args.model.kick_strength, args.model.q, args.eta)?;
    let initial = args.initial.parse()?;
    let fixed = parse_basis(&args.basis)?;

    let (curve, info) = match fixed {
        Some(n) => {
            let basis = FockBasis::new(n)?;
            let state = initial.build(basis, params.eta())?;
            (heating_curve(&params, basis, args.kicks, &state)?, None)
        }
        None => {
            let (curve, info) =
                converged_heating_curve(&params, args.kicks, &initial, 128, args.basis_cap)?;
            (curve, Some(info))
        }
    };

    let mut cfg = base_config(cli, "heat", &args.model, threads);
    cfg.push("eta", args.eta);
    cfg.push("kicks", args.kicks);
    cfg.push("initial", initial.describe());
    cfg.push("basis", &args.basis);
    cfg.push("N", curve.basis_size);

    let rows: Vec<Vec<String>> = (0..=args.kicks)
        .map(|k| {
            vec![
                k.to_string(),
                fmt_float(curve.energies[k]),
                fmt_float(curve.leakage[k]),
            ]
        })
        .collect();
    write_csv(
        &cli.out_dir.join("heat.csv"),
        &cfg,
        &["kick", "energy", "leakage"],
        &rows,
    )?;
    write_sidecar(
        &cli.out_dir.join("heat.json"),
        &cfg,
        json!({
            "basis_size": curve.basis_size,
            "converged": curve.converged,
            "auto_basis": info.as_ref().map(|i| json!({
                "accepted_n": i.accepted_n,
                "doubling_drift": i.doubling_drift,
                "validated": i.validated,
            })),
            "final_energy": curve.energies[args.kicks],
        }),
    )?;
    if cli.plot_script {
        write_plot_script(
            &cli.out_dir.join("heat.py"),
            "heat.csv",
            "kick",
            "energy (hbar nu)",
            PlotKind::Series {
                x_col: 0,
                y_cols: vec![(1, "energy")],
            },
        )?;
    }
    Ok(())
}

fn cmd_classical(cli: &Cli, args: &ClassicalArgs, threads: usize) -> Result<()> {
    let params = SystemParams::new(args.model.kick_strength, args.model.q, args.eta)?;
    let ensemble = sample_vacuum_ensemble(args.eta, args.ensemble_size, args.seed)?;
    let curve = ensemble_heating_curve(&ensemble, &params, args.kicks);

    let start = PhasePoint::new(args.start_v, args.start_u)?;
    let traj = iterate_trajectory(start, &params, args.traj_kicks);
    let spec = HistogramSpec::centered(args.grid_half, args.grid_bins)?;
    let hist = occupancy_histogram(&traj.points, &spec)?;

    let mut cfg = base_config(cli, "classical", &args.model, threads);
    cfg.push("eta", args.eta);
    cfg.push("kicks", args.kicks);
    cfg.push("ensemble_size", args.ensemble_size);
    cfg.push("seed", args.seed);
    cfg.push("traj_kicks", args.traj_kicks);
    cfg.push("start", format!("({}, {})", args.start_v, args.start_u));
    cfg.push("grid_half", args.grid_half);
    cfg.push("grid_bins", args.grid_bins);

    let rows: Vec<Vec<String>> = curve
        .energies
        .iter()
        .enumerate()
        .map(|(k, &e)| vec![k.to_string(), fmt_float(e)])
        .collect();
    write_csv(
        &cli.out_dir.join("classical_curve.csv"),
        &cfg,
        &["kick", "energy"],
        &rows,
    )?;

    let cell_v = (spec.v_max - spec.v_min) / spec.nv as f64;
    let cell_u = (spec.u_max - spec.u_min) / spec.nu as f64;
    let mut grid_rows = Vec::with_capacity(spec.nv * spec.nu);
    for iv in 0..spec.nv {
        for iu in 0..spec.nu {
            let v = spec.v_min + (iv as f64 + 0.5) * cell_v;
            let u = spec.u_min + (iu as f64 + 0.5) * cell_u;
            grid_rows.push(vec![
                fmt_float(v),
                fmt_float(u),
                hist.counts[iv][iu].to_string(),
            ]);
        }
    }
    write_csv(
        &cli.out_dir.join("classical_web.csv"),
        &cfg,
        &["v", "u", "count"],
        &grid_rows,
    )?;
    write_sidecar(
        &cli.out_dir.join("classical.json"),
        &cfg,
        json!({
            "escaped_points": curve.escaped,
            "trajectory_escaped_at": traj.escaped_at,
            "histogram_overflow": hist.overflow,
            "final_energy": curve.energies[args.kicks],
        }),
    )?;
    if cli.plot_script {
        write_plot_script(
            &cli.out_dir.join("classical_curve.py"),
            "classical_curve.csv",
            "kick",
            "energy (hbar nu)",
            PlotKind::Series {
                x_col: 0,
                y_cols: vec![(1, "classical energy")],
            },
        )?;
        write_plot_script(
            &cli.out_dir.join("classical_web.py"),
            "classical_web.csv",
            "v",
            "u",
            PlotKind::Grid,
        )?;
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs, threads: usize) -> Result<()> {
    let grid = eta_grid(args.eta_from, args.eta_to, args.eta_step)?;
    let n =
        parse_basis(&args.basis)?.ok_or_else(|| config_err("sweep needs an explicit basis size"))?;
    let basis = FockBasis::new(n)?;
    let initial = args.initial.parse()?;
    let ld = eta_sweep(
        args.model.kick_strength,
        args.model.q,
        basis,
        &grid,
        &initial,
        args.threshold,
    )?;
    if !ld.failures.is_empty() {
        bail!(KhoError::Numeric {
            context: "eta sweep".to_string(),
            message: format!("{} grid points failed: {:?}", ld.failures.len(), ld.failures),
        });
    }

    let mut cfg = base_config(cli, "sweep", &args.model, threads);
    cfg.push("eta_from", args.eta_from);
    cfg.push("eta_to", args.eta_to);
    cfg.push("eta_step", args.eta_step);
    cfg.push("N", n);
    cfg.push("initial", initial.describe());
    cfg.push("threshold", args.threshold);
    cfg.push("phase_convention", "U|e> = exp(+i phi)|e>, phi in (-pi, pi]");

    let mut rows = Vec::new();
    for slice in &ld.slices {
        for level in &slice.levels {
            rows.push(vec![
                fmt_float(slice.eta),
                fmt_float(level.phase),
                fmt_float(level.overlap),
            ]);
        }
    }
    write_csv(
        &cli.out_dir.join("sweep.csv"),
        &cfg,
        &["eta", "phase", "overlap"],
        &rows,
    )?;
    let max_defect = ld
        .slices
        .iter()
        .map(|s| s.completeness_defect)
        .fold(0.0f64, f64::max);
    write_sidecar(
        &cli.out_dir.join("sweep.json"),
        &cfg,
        json!({
            "grid_points": ld.slices.len(),
            "filtered_levels": rows.len(),
            "max_completeness_defect": max_defect,
        }),
    )?;
    if cli.plot_script {
        write_plot_script(
            &cli.out_dir.join("sweep.py"),
            "sweep.csv",
            "eta",
            "quasienergy phase",
            PlotKind::Scatter { x_col: 0, y_col: 1 },
        )?;
    }
    Ok(())
}

fn cmd_crossings(cli: &Cli, args: &CrossingsArgs, threads: usize) -> Result<()> {
    let sweep_args = &args.sweep;
    let grid = eta_grid(sweep_args.eta_from, sweep_args.eta_to, sweep_args.eta_step)?;
    let n = parse_basis(&sweep_args.basis)?
        .ok_or_else(|| config_err("crossings needs an explicit basis size"))?;
    let basis = FockBasis::new(n)?;
    let initial = sweep_args.initial.parse()?;
    let k = sweep_args.model.kick_strength;
    let q = sweep_args.model.q;

    let ld = eta_sweep(k, q, basis, &grid, &initial, sweep_args.threshold)?;
    if !ld.failures.is_empty() {
        bail!(KhoError::Numeric {
            context: "eta sweep".to_string(),
            message: format!("{} grid points failed: {:?}", ld.failures.len(), ld.failures),
        });
    }
    let branches = track_bands(&ld);
    let search = CrossingSearch {
        refine_tol: args.refine_tol,
        max_grid_gap: args.max_grid_gap,
        min_overlap: args.marker,
    };
    let crossings = find_avoided_crossings(&ld, &branches, search, |eta| {
        let params = SystemParams::new(k, q, eta)?;
        let u = floquet_operator(&params, basis)?;
        diagonalize(&u)
    })?;

    let husimi_spec = HusimiGridSpec::centered(4.0f64.max(3.0 * args.classify_radius), 161)?;
    let mut rows = Vec::new();
    for x in &crossings {
        let classes = classify_crossing(&ld, &branches, x, &husimi_spec)?;
        rows.push(vec![
            fmt_float(x.eta_center),
            fmt_float(x.phase_center),
            fmt_float(x.min_gap),
            fmt_float(x.max_overlap),
            x.branches.0.to_string(),
            x.branches.1.to_string(),
            (x.refined as u8).to_string(),
            format!("{}", classes.left.0),
            format!("{}", classes.left.1),
            format!("{}", classes.right.0),
            format!("{}", classes.right.1),
        ]);
    }

    let mut cfg = base_config(cli, "crossings", &sweep_args.model, threads);
    cfg.push("eta_from", sweep_args.eta_from);
    cfg.push("eta_to", sweep_args.eta_to);
    cfg.push("eta_step", sweep_args.eta_step);
    cfg.push("N", n);
    cfg.push("initial", initial.describe());
    cfg.push("threshold", sweep_args.threshold);
    cfg.push("marker", args.marker);
    cfg.push("refine_tol", args.refine_tol);
    cfg.push("max_grid_gap", args.max_grid_gap);
    cfg.push("classify_radius", args.classify_radius);
    cfg.push("phase_convention", "U|e> = exp(+i phi)|e>, phi in (-pi, pi]");

    write_csv(
        &cli.out_dir.join("crossings.csv"),
        &cfg,
        &[
            "eta_center",
            "phase_center",
            "min_gap",
            "max_overlap",
            "branch_a",
            "branch_b",
            "refined",
            "class_left_a",
            "class_left_b",
            "class_right_a",
            "class_right_b",
        ],
        &rows,
    )?;
    write_sidecar(
        &cli.out_dir.join("crossings.json"),
        &cfg,
        json!({
            "branches": branches.len(),
            "crossings": crossings.len(),
        }),
    )?;
    if cli.plot_script {
        write_plot_script(
            &cli.out_dir.join("crossings.py"),
            "crossings.csv",
            "eta",
            "quasienergy phase",
            PlotKind::Scatter { x_col: 0, y_col: 1 },
        )?;
    }
    Ok(())
}

fn cmd_husimi(cli: &Cli, args: &HusimiArgs, threads: usize) -> Result<()> {
    let params = SystemParams::new(args.model.kick_strength, args.model.q, args.eta)?;
    let n = parse_basis(&args.basis)?
        .ok_or_else(|| config_err("husimi needs an explicit basis size"))?;
    let basis = FockBasis::new(n)?;
    let initial = args.initial.parse()?;
    let u = floquet_operator(&params, basis)?;
    let spectrum = diagonalize(&u)?;

    let j = select_eigenstate(&spectrum, &initial, basis, params.eta(), &args.select)?;
    let state = StateVector::new(basis, spectrum.eigenvector(j).to_owned())?;
    let spec = HusimiGridSpec::centered(args.half, args.nodes)?;
    let field = husimi_grid(&state, &spec)?;
    let class = classify_with(&field, 1.5, 0.5)?;

    let mut cfg = base_config(cli, "husimi", &args.model, threads);
    cfg.push("eta", args.eta);
    cfg.push("N", n);
    cfg.push("select", &args.select);
    cfg.push("initial", initial.describe());
    cfg.push("half", args.half);
    cfg.push("nodes", args.nodes);

    let x1 = spec.x1_nodes();
    let x2 = spec.x2_nodes();
    let mut rows = Vec::with_capacity(args.nodes * args.nodes);
    for (i, &a) in x1.iter().enumerate() {
        for (jj, &b) in x2.iter().enumerate() {
            rows.push(vec![
                fmt_float(a),
                fmt_float(b),
                fmt_float(field.values[(i, jj)]),
            ]);
        }
    }
    write_csv(
        &cli.out_dir.join("husimi.csv"),
        &cfg,
        &["x1", "x2", "q"],
        &rows,
    )?;
    write_sidecar(
        &cli.out_dir.join("husimi.json"),
        &cfg,
        json!({
            "selected_level": j,
            "selected_phase": spectrum.phases()[j],
            "classification": format!("{class}"),
            "total_mass": field.total_mass(),
        }),
    )?;
    if cli.plot_script {
        write_plot_script(
            &cli.out_dir.join("husimi.py"),
            "husimi.csv",
            "v / 2 eta",
            "u / 2 eta",
            PlotKind::Grid,
        )?;
    }
    Ok(())
}

fn select_eigenstate(
    spectrum: &QuasienergySpectrum,
    initial: &InitialState,
    basis: FockBasis,
    eta: f64,
    select: &str,
) -> Result<usize> {
    if let Some(rank) = select.strip_prefix("overlap:") {
        let rank: usize = rank
            .parse()
            .map_err(|_| config_err(format!("bad select {select:?}")))?;
        let psi0 = initial.build(basis, eta)?;
        let overlaps = spectrum.overlaps(&psi0)?;
        let mut order: Vec<usize> = (0..overlaps.len()).collect();
        order.sort_by(|&a, &b| overlaps[b].total_cmp(&overlaps[a]));
        return order
            .get(rank)
            .copied()
            .ok_or_else(|| config_err(format!("overlap rank {rank} out of range")));
    }
    if let Some(phase) = select.strip_prefix("phase:") {
        let target: f64 = phase
            .parse()
            .map_err(|_| config_err(format!("bad select {select:?}")))?;
        return Ok((0..spectrum.len())
            .min_by(|&a, &b| {
                circular_distance(spectrum.phases()[a], target)
                    .total_cmp(&circular_distance(spectrum.phases()[b], target))
            })
            .expect("non-empty spectrum"));
    }
    Err(config_err(format!(
        "select must be \"overlap:RANK\" or \"phase:VALUE\", got {select:?}"
    )))
}

fn cmd_etascan(cli: &Cli, args: &EtascanArgs, threads: usize) -> Result<()> {
    use rayon::prelude::*;

    let grid = eta_grid(args.eta_from, args.eta_to, args.eta_step)?;
    let initial = args.initial.parse()?;
    let fixed = parse_basis(&args.basis)?;
    let k = args.model.kick_strength;
    let q = args.model.q;

    let results: Vec<kickho::Result<(f64, usize, bool)>> = grid
        .par_iter()
        .map(|&eta| {
            let params = SystemParams::new(k, q, eta)?;
            match fixed {
                Some(n) => {
                    let basis = FockBasis::new(n)?;
                    let state = initial.build(basis, eta)?;
                    let curve = heating_curve(&params, basis, args.kicks, &state)?;
                    Ok((curve.energies[args.kicks], n, curve.converged))
                }
                None => {
                    let (curve, info) =
                        converged_heating_curve(&params, args.kicks, &initial, 128, args.basis_cap)?;
                    Ok((
                        curve.energies[args.kicks],
                        info.accepted_n,
                        curve.converged && info.validated,
                    ))
                }
            }
        })
        .collect();

    let mut cfg = base_config(cli, "etascan", &args.model, threads);
    cfg.push("kicks", args.kicks);
    cfg.push("eta_from", args.eta_from);
    cfg.push("eta_to", args.eta_to);
    cfg.push("eta_step", args.eta_step);
    cfg.push("initial", initial.describe());
    cfg.push("basis", &args.basis);
    cfg.push("basis_cap", args.basis_cap);

    let energy_col = format!("energy_after_{}", args.kicks);
    let mut rows = Vec::with_capacity(grid.len());
    let mut unconverged = Vec::new();
    for (eta, outcome) in grid.iter().zip(results) {
        let (energy, basis_used, converged) =
            outcome.map_err(|e| anyhow!(e).context(format!("etascan at eta = {eta}")))?;
        if !converged {
            unconverged.push(json!({ "eta": eta, "basis": basis_used }));
        }
        rows.push(vec![fmt_float(*eta), fmt_float(energy)]);
    }
    write_csv(
        &cli.out_dir.join("etascan.csv"),
        &cfg,
        &["eta", &energy_col],
        &rows,
    )?;
    write_sidecar(
        &cli.out_dir.join("etascan.json"),
        &cfg,
        json!({
            "grid_points": grid.len(),
            "unconverged": unconverged,
        }),
    )?;
    if cli.plot_script {
        write_plot_script(
            &cli.out_dir.join("etascan.py"),
            "etascan.csv",
            "eta",
            "energy (hbar nu)",
            PlotKind::Series {
                x_col: 0,
                y_cols: vec![(1, "energy")],
            },
        )?;
    }
    Ok(())
}

fn cmd_converge(cli: &Cli, args: &ConvergeArgs, threads: usize) -> Result<()> {
    let sizes: Vec<usize> = args
        .basis_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| config_err(format!("bad basis-list entry {s:?}")))
        })
        .collect::<Result<_>>()?;
    let initial = args.initial.parse()?;
    let report = convergence_report(
        args.model.kick_strength,
        args.model.q,
        args.eta,
        &sizes,
        &initial,
        args.threshold,
    )?;

    let mut cfg = base_config(cli, "converge", &args.model, threads);
    cfg.push("eta", args.eta);
    cfg.push("basis_list", &args.basis_list);
    cfg.push("initial", initial.describe());
    cfg.push("threshold", args.threshold);

    let rows: Vec<Vec<String>> = report
        .pairs
        .iter()
        .map(|p| {
            vec![
                p.n_from.to_string(),
                p.n_to.to_string(),
                fmt_float(p.max_drift),
                p.matched.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cli.out_dir.join("converge.csv"),
        &cfg,
        &["n_from", "n_to", "max_drift", "matched"],
        &rows,
    )?;
    write_sidecar(
        &cli.out_dir.join("converge.json"),
        &cfg,
        json!({ "saturated_at": report.saturated_at }),
    )?;
    Ok(())
}
