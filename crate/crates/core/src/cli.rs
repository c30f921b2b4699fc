//! `steerlab` command-line front end.
//!
//! Every command is a pure function of its [`RunConfig`]; numeric output is
//! written with `{:.12e}` so files are locale-independent and reproducible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::lindblad::{build_liouvillian, evolve_master, spectral_gap, Liouvillian};
use crate::metrics::{
    concurrence_family, discord_family, family_probabilities, family_state, family_target,
    is_ppt_separable, FamilyParams,
};
use crate::protocol::{
    assign_couplings, diagonalize_target, tau_for_max_angle, ProtocolSchedule, TargetSpec,
    DEFAULT_MAX_COUPLING, WEAK_COUPLING_WARN,
};
use crate::state::{DensityMatrix, PureState};
use crate::trajectory::{ensemble_with_clicks, steady_click_rate, write_click_log};

#[derive(Debug, Parser)]
#[command(
    name = "steerlab",
    version,
    about = "Design and simulate measurement-based steering of two-qubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the measurement schedule for a target state
    Design(RunArgs),
    /// Master-equation evolution towards the target (fidelity time series)
    Steer(RunArgs),
    /// Discord, concurrence, separability and Liouvillian gap over the (α, β) family
    Sweep(RunArgs),
    /// Ensemble of recorded-readout trajectories
    Trajectory(RunArgs),
    /// Liouvillian eigenvalues and gap
    Spectrum(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialState {
    /// ¼ Σ_ij |B_i⟩⟨B_j|
    Coherent,
    /// ½ (|B_1⟩⟨B_1| + |B_4⟩⟨B_4|)
    Mixed,
    /// The target itself
    Target,
    /// I/4
    MaximallyMixed,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// α of the example family (needs --beta)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// β of the example family (needs --alpha)
    #[arg(long)]
    pub beta: Option<f64>,
    /// JSON target density matrix {"dim":4,"re":[[..]],"im":[[..]]}
    #[arg(long = "target", value_name = "FILE")]
    pub target_file: Option<PathBuf>,
    /// Total measurement strength ḡ
    #[arg(long, default_value_t = 1.0)]
    pub gbar: f64,
    /// Step duration τ (default: max Jτ = 0.1)
    #[arg(long)]
    pub tau: Option<f64>,
    /// Final time in units of 1/ḡ
    #[arg(long = "tmax", default_value_t = 10.0)]
    pub tmax_gbar: f64,
    /// Number of output time points
    #[arg(long = "points", default_value_t = 101)]
    pub n_points: usize,
    /// Number of trajectories
    #[arg(long = "ntraj", default_value_t = 1000)]
    pub n_traj: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweep resolution per axis (endpoints included)
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run both initial states of the convergence figure
    #[arg(long)]
    pub fig3: bool,
    /// Initial state for steer/trajectory
    #[arg(long, value_enum, default_value_t = InitialState::Coherent)]
    pub initial: InitialState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Design,
    Steer,
    Sweep,
    Trajectory,
    Spectrum,
}

#[derive(Debug, Clone)]
pub enum TargetSource {
    Family(FamilyParams),
    File(PathBuf),
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub target: Option<TargetSource>,
    pub gbar: f64,
    pub tau: Option<f64>,
    pub tmax_gbar: f64,
    pub n_points: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub grid: usize,
    pub out: Option<PathBuf>,
    pub fig3: bool,
    pub initial: InitialState,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl RunConfig {
    pub fn new(command: CommandKind, args: RunArgs) -> Result<Self> {
        let target = match (args.alpha, args.beta, &args.target_file) {
            (Some(a), Some(b), None) => Some(TargetSource::Family(FamilyParams::new(a, b)?)),
            (None, None, Some(p)) => Some(TargetSource::File(p.clone())),
            (None, None, None) => None,
            (Some(_), None, None) | (None, Some(_), None) => {
                return Err(config_err("--alpha and --beta must be given together"))
            }
            _ => {
                return Err(config_err(
                    "give either --alpha/--beta or --target, not both",
                ))
            }
        };
        if target.is_none() && command != CommandKind::Sweep {
            return Err(config_err(
                "a target is required: --alpha A --beta B or --target FILE",
            ));
        }
        if !(args.gbar > 0.0) || !args.gbar.is_finite() {
            return Err(config_err(format!(
                "--gbar must be positive, got {}",
                args.gbar
            )));
        }
        if let Some(t) = args.tau {
            if !(t > 0.0) || !t.is_finite() {
                return Err(config_err(format!("--tau must be positive, got {t}")));
            }
        }
        if !(args.tmax_gbar > 0.0) || !args.tmax_gbar.is_finite() {
            return Err(config_err(format!(
                "--tmax must be positive, got {}",
                args.tmax_gbar
            )));
        }
        if args.n_points < 2 {
            return Err(config_err("--points must be at least 2"));
        }
        if args.n_traj < 1 {
            return Err(config_err("--ntraj must be at least 1"));
        }
        if command == CommandKind::Sweep && args.grid < 2 {
            return Err(config_err("--grid must be at least 2"));
        }
        Ok(Self {
            command,
            target,
            gbar: args.gbar,
            tau: args.tau,
            tmax_gbar: args.tmax_gbar,
            n_points: args.n_points,
            n_traj: args.n_traj,
            seed: args.seed,
            grid: args.grid,
            out: args.out,
            fig3: args.fig3,
            initial: args.initial,
        })
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let (kind, args) = match cli.command {
        Command::Design(a) => (CommandKind::Design, a),
        Command::Steer(a) => (CommandKind::Steer, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
        Command::Trajectory(a) => (CommandKind::Trajectory, a),
        Command::Spectrum(a) => (CommandKind::Spectrum, a),
    };
    let config = RunConfig::new(kind, args)?;
    match kind {
        CommandKind::Design => cmd_design(&config, stdout),
        CommandKind::Steer => cmd_steer(&config, stdout),
        CommandKind::Sweep => cmd_sweep(&config, stdout),
        CommandKind::Trajectory => cmd_trajectory(&config, stdout),
        CommandKind::Spectrum => cmd_spectrum(&config, stdout),
    }
}

/// Locale-independent number formatting used in every output file.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Deserialize)]
struct TargetFile {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Reads `{"dim": 4, "re": [[..]], "im": [[..]]}` and validates the state.
pub fn parse_target_file(path: &Path) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path)?;
    parse_target_json(&text)
}

pub fn parse_target_json(text: &str) -> Result<DensityMatrix> {
    let file: TargetFile = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "target JSON at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    if file.dim != 4 {
        return Err(Error::dims("dim 4", format!("dim {}", file.dim)));
    }
    let shape_ok = |m: &Vec<Vec<f64>>| m.len() == 4 && m.iter().all(|r| r.len() == 4);
    if !shape_ok(&file.re) || !shape_ok(&file.im) {
        return Err(Error::dims("4x4 re and im arrays", "other shape"));
    }
    let m = ComplexMatrix::from_fn(4, 4, |r, c| C64::new(file.re[r][c], file.im[r][c]));
    DensityMatrix::new(m)
}

/// JSON encoding accepted by [`parse_target_json`].
pub fn target_json(rho: &DensityMatrix) -> String {
    let m = rho.matrix();
    let part = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
        (0..4)
            .map(|r| (0..4).map(|c| f(&m[(r, c)])).collect())
            .collect()
    };
    serde_json::json!({ "dim": 4, "re": part(|z| z.re), "im": part(|z| z.im) }).to_string()
}

struct Resolved {
    label: String,
    spec: TargetSpec,
    rho: DensityMatrix,
}

fn resolve_target(config: &RunConfig) -> Result<Resolved> {
    match config.target.as_ref() {
        Some(TargetSource::Family(p)) => Ok(Resolved {
            label: format!("family alpha={} beta={}", p.alpha(), p.beta()),
            spec: family_target(*p),
            rho: family_state(*p),
        }),
        Some(TargetSource::File(path)) => {
            let rho = parse_target_file(path)?;
            Ok(Resolved {
                label: format!("file {}", path.display()),
                spec: diagonalize_target(&rho)?,
                rho,
            })
        }
        None => Err(config_err("no target given")),
    }
}

fn schedule_for(config: &RunConfig, spec: &TargetSpec) -> Result<ProtocolSchedule> {
    let tau = match config.tau {
        Some(t) => t,
        None => tau_for_max_angle(spec, config.gbar, DEFAULT_MAX_COUPLING)?,
    };
    assign_couplings(spec, config.gbar, tau)
}

fn initial_state(kind: InitialState, target: &Resolved) -> Result<DensityMatrix> {
    let basis = &target.spec.basis;
    match kind {
        InitialState::Coherent => {
            let mut amps = vec![C64::new(0.0, 0.0); 4];
            for s in basis.states() {
                for (a, b) in amps.iter_mut().zip(s.amplitudes()) {
                    *a += b * 0.5;
                }
            }
            Ok(DensityMatrix::from_pure(&PureState::normalized(amps)?))
        }
        InitialState::Mixed => DensityMatrix::mixture(
            &[0.5, 0.5],
            &[basis.state(0).clone(), basis.state(3).clone()],
        ),
        InitialState::Target => Ok(target.rho.clone()),
        InitialState::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(4)),
    }
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn cmd_design(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let target = resolve_target(config)?;
    let schedule = schedule_for(config, &target.spec)?;
    let mut report = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(report, "target: {}", target.label);
    let _ = writeln!(report, "gbar: {}", fmt_num(schedule.gbar()));
    let _ = writeln!(report, "tau: {}", fmt_num(schedule.tau()));
    let _ = writeln!(report, "cycle: {}", fmt_num(schedule.cycle_duration()));
    let _ = writeln!(report, "max_J_tau: {}", fmt_num(schedule.max_angle()));
    let _ = writeln!(report, "active_detectors: {}", schedule.active_detectors());
    for i in 0..4 {
        let amps: Vec<String> = schedule
            .basis()
            .state(i)
            .amplitudes()
            .iter()
            .map(|z| format!("({},{})", fmt_num(z.re), fmt_num(z.im)))
            .collect();
        let _ = writeln!(
            report,
            "detector {}: p={} g={} J={} B=[{}]",
            i + 1,
            fmt_num(target.spec.probabilities[i]),
            fmt_num(schedule.rates()[i]),
            fmt_num(schedule.couplings()[i]),
            amps.join(", ")
        );
    }
    if let Some(x) = schedule.weak_regime_violation() {
        let _ = writeln!(
            report,
            "warning: max J*tau = {x:.4} exceeds {WEAK_COUPLING_WARN}; outside the weak-measurement regime"
        );
    }
    stdout.write_all(report.as_bytes())?;
    let json = schedule.to_json() + "\n";
    match &config.out {
        Some(p) => fs::write(p, json)?,
        None => stdout.write_all(json.as_bytes())?,
    }
    Ok(())
}

pub const STEER_HEADER: &str = "gbar_t,Fbar,p1,p2,p3,p4,purity";

fn steer_csv(
    l: &Liouvillian,
    target: &Resolved,
    rho0: &DensityMatrix,
    grid: &[f64],
) -> Result<String> {
    let evo = evolve_master(l, rho0, grid, &target.rho)?;
    let pops = evo.populations(&target.spec.basis);
    let mut out = String::from(STEER_HEADER);
    out.push('\n');
    for (k, t) in evo.times.iter().enumerate() {
        let row = [
            fmt_num(*t),
            fmt_num(evo.fidelity_deviation[k]),
            fmt_num(pops[k][0]),
            fmt_num(pops[k][1]),
            fmt_num(pops[k][2]),
            fmt_num(pops[k][3]),
            fmt_num(evo.states[k].purity()),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn time_grid(tmax: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| tmax * k as f64 / (points - 1) as f64)
        .collect()
}

pub fn cmd_steer(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let target = resolve_target(config)?;
    let schedule = schedule_for(config, &target.spec)?;
    let l = build_liouvillian(&schedule);
    let grid = time_grid(config.tmax_gbar, config.n_points);
    if config.fig3 {
        for (kind, suffix) in [
            (InitialState::Coherent, "_pure.csv"),
            (InitialState::Mixed, "_mixed.csv"),
        ] {
            let csv = steer_csv(&l, &target, &initial_state(kind, &target)?, &grid)?;
            let path = config.out.as_deref().map(|p| sibling(p, suffix));
            write_output(path.as_deref(), &csv, stdout)?;
        }
        Ok(())
    } else {
        let csv = steer_csv(&l, &target, &initial_state(config.initial, &target)?, &grid)?;
        write_output(config.out.as_deref(), &csv, stdout)
    }
}

pub const SWEEP_HEADER: &str =
    "alpha,beta,p1,p2,p3,p4,discord,concurrence,ppt_separable,gap_over_gbar";

/// One row of the (α, β) sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub p: [f64; 4],
    pub discord: f64,
    pub concurrence: f64,
    pub ppt_separable: bool,
    pub gap_over_gbar: f64,
}

/// Equally spaced grid over `[0, 1]²`, rows ordered by `(α, β)`.
pub fn sweep_rows(grid: usize, gbar: f64) -> Result<Vec<SweepRow>> {
    let axis: Vec<f64> = (0..grid).map(|k| k as f64 / (grid - 1) as f64).collect();
    let cells: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| (a, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(alpha, beta)| {
            let params = FamilyParams::new(alpha, beta)?;
            let spec = family_target(params);
            let l = Liouvillian::from_rates(&spec.basis, spec.probabilities.map(|p| gbar * p));
            Ok(SweepRow {
                alpha,
                beta,
                p: family_probabilities(params),
                discord: discord_family(params),
                concurrence: concurrence_family(params),
                ppt_separable: is_ppt_separable(&family_state(params)),
                gap_over_gbar: spectral_gap(&l)? / gbar,
            })
        })
        .collect()
}

pub fn cmd_sweep(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let rows = sweep_rows(config.grid, config.gbar)?;
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &rows {
        let fields = [
            fmt_num(r.alpha),
            fmt_num(r.beta),
            fmt_num(r.p[0]),
            fmt_num(r.p[1]),
            fmt_num(r.p[2]),
            fmt_num(r.p[3]),
            fmt_num(r.discord),
            fmt_num(r.concurrence),
            r.ppt_separable.to_string(),
            fmt_num(r.gap_over_gbar),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_output(config.out.as_deref(), &out, stdout)
}

pub const TRAJECTORY_HEADER: &str = "gbar_t,p1,p2,p3,p4,p1_se,p2_se,p3_se,p4_se";

pub fn cmd_trajectory(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let target = resolve_target(config)?;
    let schedule = schedule_for(config, &target.spec)?;
    let rho0 = initial_state(config.initial, &target)?;
    let cycle = schedule.gbar() * schedule.cycle_duration();
    let n_cycles = ((config.tmax_gbar / cycle).ceil() as usize).max(2);
    let (stats, clicks) =
        ensemble_with_clicks(&schedule, &rho0, n_cycles, config.n_traj, config.seed)?;

    let mut csv = String::from(TRAJECTORY_HEADER);
    csv.push('\n');
    for (k, t) in stats.times.iter().enumerate() {
        let mut fields = vec![fmt_num(*t)];
        fields.extend((0..4).map(|i| fmt_num(stats.population_mean[i][k])));
        fields.extend((0..4).map(|i| fmt_num(stats.population_stderr[i][k])));
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    write_output(config.out.as_deref(), &csv, stdout)?;
    if let Some(p) = &config.out {
        let mut log = Vec::new();
        write_click_log(&mut log, &clicks)?;
        fs::write(sibling(p, ".clicks.csv"), log)?;
    }
    let summary = format!(
        "n_traj={} cycles={} tau={} total_clicks={} click_rate={} click_rate_se={} expected_click_rate={} window_start={}",
        stats.n_traj,
        n_cycles,
        fmt_num(schedule.tau()),
        stats.total_clicks,
        fmt_num(stats.click_rate),
        fmt_num(stats.click_rate_stderr),
        fmt_num(steady_click_rate(&schedule)),
        fmt_num(stats.click_window_start),
    );
    // keep stdout a clean CSV when the series itself goes there
    if config.out.is_some() {
        writeln!(stdout, "{summary}")?;
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

pub fn cmd_spectrum(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let target = resolve_target(config)?;
    let schedule = schedule_for(config, &target.spec)?;
    let l = build_liouvillian(&schedule);
    let spectrum = l.spectrum()?;
    let gap = spectral_gap(&l)?;
    let thr = l.zero_threshold();

    let mut csv = String::from("re,im\n");
    for z in &spectrum {
        csv.push_str(&format!("{},{}\n", fmt_num(z.re), fmt_num(z.im)));
    }
    write_output(config.out.as_deref(), &csv, stdout)?;
    for z in spectrum.iter().filter(|z| z.norm() < thr) {
        writeln!(stdout, "zero_mode: {},{}", fmt_num(z.re), fmt_num(z.im))?;
    }
    writeln!(stdout, "gap_over_gbar: {}", fmt_num(gap / config.gbar))?;
    Ok(())
}
