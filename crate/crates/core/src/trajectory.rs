//! Stochastic unraveling with recorded detector readouts.
//!
//! Each step couples a fresh `|↑⟩` detector, evolves with `U = exp(-iHτ)` and
//! reads the detector. The Kraus operators are the detector blocks of `U`:
//! `M_↑ = ⟨↑|U|↑⟩`, `M_↓ = ⟨↓|U|↑⟩`. In the target eigenbasis they reduce to
//!
//! ```text
//! M_↑ = 1 - (1 - cos Jτ) |B_j⟩⟨B_j|      M_↓ = -i sin Jτ |B_i⟩⟨B_j|
//! ```
//!
//! which is what the trajectory kernel applies. A click (`↓`) moves the
//! system to `|B_i⟩`; no click damps the `|B_j⟩` components by `cos Jτ`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::lindblad::step_unitary;
use crate::protocol::{MeasurementStep, OrthonormalBasis, ProtocolSchedule, STEPS_PER_CYCLE};
use crate::state::DensityMatrix;

/// Probabilities this far outside `[0, 1]` are clamped; further is an error.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// Trajectories per work unit in ensemble runs. Reduction order is fixed by
/// chunk index, so results do not depend on the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Readout {
    Up,
    Down,
}

impl Readout {
    pub fn as_str(&self) -> &'static str {
        match self {
            Readout::Up => "up",
            Readout::Down => "down",
        }
    }
}

/// Readout of one step. `cycle` counts from 1; `step` is the index in the cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutEvent {
    pub cycle: usize,
    pub step: usize,
    pub detector: usize,
    pub source: usize,
    pub readout: Readout,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub seed: u64,
    /// Snapshot times in units of `1/ḡ`, starting at 0.
    pub cycle_times: Vec<f64>,
    pub readouts: Vec<ReadoutEvent>,
    /// One snapshot per cycle, including the initial state.
    pub states: Vec<DensityMatrix>,
    pub click_count: usize,
}

/// Detector blocks of the joint step unitary.
#[derive(Debug, Clone)]
pub struct KrausPair {
    pub up: ComplexMatrix,
    pub down: ComplexMatrix,
}

impl KrausPair {
    pub fn for_step(step: &MeasurementStep, basis: &OrthonormalBasis) -> Self {
        let u = step_unitary(step, basis);
        // joint index = 2 * system + detector, detector ↑ = 0, ↓ = 1
        let up = ComplexMatrix::from_fn(4, 4, |r, c| u[(2 * r, 2 * c)]);
        let down = ComplexMatrix::from_fn(4, 4, |r, c| u[(2 * r + 1, 2 * c)]);
        Self { up, down }
    }

    /// `max |M_↑†M_↑ + M_↓†M_↓ - 1|`
    pub fn completeness_error(&self) -> f64 {
        let s = &self.up.adjoint().matmul(&self.up) + &self.down.adjoint().matmul(&self.down);
        s.max_abs_diff(&ComplexMatrix::identity(4))
    }

    pub fn probability(&self, rho: &ComplexMatrix, readout: Readout) -> f64 {
        let k = match readout {
            Readout::Up => &self.up,
            Readout::Down => &self.down,
        };
        k.sandwich(rho).trace().re
    }
}

/// Probabilities within `PROBABILITY_SLACK` of 0 or 1 are round-off and snap
/// to the endpoint, so a vanishing branch is never sampled.
fn checked_probability(p: f64) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::Probability(p));
    }
    Ok(if p <= PROBABILITY_SLACK {
        0.0
    } else if p >= 1.0 - PROBABILITY_SLACK {
        1.0
    } else {
        p
    })
}

/// Sample one readout and apply the corresponding back-action.
pub fn stochastic_step<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    step: &MeasurementStep,
    basis: &OrthonormalBasis,
    rng: &mut R,
) -> Result<(DensityMatrix, Readout)> {
    let kraus = KrausPair::for_step(step, basis);
    let p_down = checked_probability(kraus.probability(rho.matrix(), Readout::Down))?;
    let readout = if rng.random::<f64>() < p_down {
        Readout::Down
    } else {
        Readout::Up
    };
    let k = match readout {
        Readout::Up => &kraus.up,
        Readout::Down => &kraus.down,
    };
    let post = k.sandwich(rho.matrix());
    let norm = post.trace().re;
    if !(norm > 0.0) {
        return Err(Error::Probability(norm));
    }
    Ok((
        DensityMatrix::repaired(post.scale_real(1.0 / norm))?,
        readout,
    ))
}

/// Per-trajectory seed: output number `index + 1` of a SplitMix64 stream
/// started at `master_seed`.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type Block = [[C64; 4]; 4];

#[derive(Clone, Copy)]
struct KernelStep {
    target: usize,
    source: usize,
    cos: f64,
    sin2: f64,
}

/// The schedule's steps, specialized to the target eigenbasis.
struct Kernel {
    steps: Vec<KernelStep>,
}

impl Kernel {
    fn new(schedule: &ProtocolSchedule) -> Self {
        let steps = schedule
            .steps()
            .iter()
            .map(|s| {
                let (sin, cos) = s.angle().sin_cos();
                KernelStep {
                    target: s.target,
                    source: s.source,
                    cos,
                    sin2: sin * sin,
                }
            })
            .collect();
        Self { steps }
    }

    /// Run one cycle in place, reporting every readout.
    fn cycle<R: Rng>(
        &self,
        rho: &mut Block,
        rng: &mut R,
        mut on_readout: impl FnMut(usize, &KernelStep, Readout),
    ) -> Result<()> {
        for (k, st) in self.steps.iter().enumerate() {
            let j = st.source;
            let p_down = checked_probability(st.sin2 * rho[j][j].re)?;
            let u: f64 = rng.random();
            if u < p_down {
                *rho = [[ZERO; 4]; 4];
                rho[st.target][st.target] = C64::new(1.0, 0.0);
                on_readout(k, st, Readout::Down);
            } else {
                if st.sin2 != 0.0 {
                    for c in 0..4 {
                        rho[j][c] *= st.cos;
                        rho[c][j] *= st.cos;
                    }
                    let tr: f64 = (0..4).map(|d| rho[d][d].re).sum();
                    let inv = 1.0 / tr;
                    for row in rho.iter_mut() {
                        for z in row.iter_mut() {
                            *z *= inv;
                        }
                    }
                }
                on_readout(k, st, Readout::Up);
            }
        }
        Ok(())
    }
}

fn to_block(m: &ComplexMatrix) -> Block {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

fn from_block(b: &Block) -> ComplexMatrix {
    ComplexMatrix::from_fn(4, 4, |r, c| b[r][c])
}

fn check_inputs(schedule: &ProtocolSchedule, rho0: &DensityMatrix, n_cycles: usize) -> Result<()> {
    if !(schedule.gbar() > 0.0) {
        return Err(Error::NoMeasurements);
    }
    if rho0.dim() != 4 {
        return Err(Error::dims("4x4 initial state", format!("{}", rho0.dim())));
    }
    if n_cycles == 0 {
        return Err(Error::InvalidParameter(
            "n_cycles must be at least 1".into(),
        ));
    }
    Ok(())
}

fn cycle_times(schedule: &ProtocolSchedule, n_cycles: usize) -> Vec<f64> {
    let dt = schedule.gbar() * schedule.cycle_duration();
    (0..=n_cycles).map(|n| dt * n as f64).collect()
}

/// One seeded trajectory with its full readout record.
pub fn run_trajectory(
    schedule: &ProtocolSchedule,
    rho0: &DensityMatrix,
    n_cycles: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    check_inputs(schedule, rho0, n_cycles)?;
    let basis = schedule.basis();
    let kernel = Kernel::new(schedule);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho = to_block(&basis.to_basis(rho0.matrix()));

    let mut states = Vec::with_capacity(n_cycles + 1);
    states.push(rho0.clone());
    let mut readouts = Vec::with_capacity(n_cycles * STEPS_PER_CYCLE);
    for cycle in 1..=n_cycles {
        kernel.cycle(&mut rho, &mut rng, |step, st, readout| {
            readouts.push(ReadoutEvent {
                cycle,
                step,
                detector: st.target,
                source: st.source,
                readout,
            })
        })?;
        states.push(DensityMatrix::repaired(
            basis.from_basis(&from_block(&rho)),
        )?);
    }
    let click_count = readouts
        .iter()
        .filter(|r| r.readout == Readout::Down)
        .count();
    Ok(TrajectoryRecord {
        seed,
        cycle_times: cycle_times(schedule, n_cycles),
        readouts,
        states,
        click_count,
    })
}

/// A recorded `↓` readout inside an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickEvent {
    pub trajectory: usize,
    pub cycle: usize,
    pub step: usize,
    pub detector: usize,
    pub source: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub n_traj: usize,
    /// Snapshot times in units of `1/ḡ`.
    pub times: Vec<f64>,
    pub mean_state: Vec<DensityMatrix>,
    /// Mean population of each `|B_k⟩` per snapshot.
    pub population_mean: [Vec<f64>; 4],
    /// Sample standard error of the population means.
    pub population_stderr: [Vec<f64>; 4],
    /// Clicks per unit `ḡt`, measured over the second half of the run.
    pub click_rate: f64,
    pub click_rate_stderr: f64,
    /// Start of the click-rate window (units of `1/ḡ`).
    pub click_window_start: f64,
    pub total_clicks: usize,
}

#[derive(Clone)]
struct Accumulator {
    sum_rho: Vec<Block>,
    sum_pop_sq: Vec<[f64; 4]>,
    window_clicks: f64,
    window_clicks_sq: f64,
    total_clicks: usize,
    clicks: Vec<ClickEvent>,
}

impl Accumulator {
    fn new(snapshots: usize) -> Self {
        Self {
            sum_rho: vec![[[ZERO; 4]; 4]; snapshots],
            sum_pop_sq: vec![[0.0; 4]; snapshots],
            window_clicks: 0.0,
            window_clicks_sq: 0.0,
            total_clicks: 0,
            clicks: Vec::new(),
        }
    }

    fn add_snapshot(&mut self, t: usize, rho: &Block) {
        for r in 0..4 {
            for c in 0..4 {
                self.sum_rho[t][r][c] += rho[r][c];
            }
            let p = rho[r][r].re;
            self.sum_pop_sq[t][r] += p * p;
        }
    }

    fn merge(&mut self, other: Accumulator) {
        for (a, b) in self.sum_rho.iter_mut().zip(&other.sum_rho) {
            for r in 0..4 {
                for c in 0..4 {
                    a[r][c] += b[r][c];
                }
            }
        }
        for (a, b) in self.sum_pop_sq.iter_mut().zip(&other.sum_pop_sq) {
            for k in 0..4 {
                a[k] += b[k];
            }
        }
        self.window_clicks += other.window_clicks;
        self.window_clicks_sq += other.window_clicks_sq;
        self.total_clicks += other.total_clicks;
        self.clicks.extend(other.clicks);
    }
}

/// Ensemble average over `n_traj` seeded trajectories.
pub fn ensemble_average(
    schedule: &ProtocolSchedule,
    rho0: &DensityMatrix,
    n_cycles: usize,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleStats> {
    ensemble_run(schedule, rho0, n_cycles, n_traj, master_seed, false).map(|(s, _)| s)
}

/// Like [`ensemble_average`], also returning every click in trajectory order.
pub fn ensemble_with_clicks(
    schedule: &ProtocolSchedule,
    rho0: &DensityMatrix,
    n_cycles: usize,
    n_traj: usize,
    master_seed: u64,
) -> Result<(EnsembleStats, Vec<ClickEvent>)> {
    ensemble_run(schedule, rho0, n_cycles, n_traj, master_seed, true)
}

fn ensemble_run(
    schedule: &ProtocolSchedule,
    rho0: &DensityMatrix,
    n_cycles: usize,
    n_traj: usize,
    master_seed: u64,
    keep_clicks: bool,
) -> Result<(EnsembleStats, Vec<ClickEvent>)> {
    check_inputs(schedule, rho0, n_cycles)?;
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be at least 1".into()));
    }
    let basis = schedule.basis();
    let kernel = Kernel::new(schedule);
    let start = to_block(&basis.to_basis(rho0.matrix()));
    let window_from = n_cycles / 2 + 1;
    let snapshots = n_cycles + 1;

    let n_chunks = n_traj.div_ceil(CHUNK);
    let partials: Vec<Result<Accumulator>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = Accumulator::new(snapshots);
            for traj in chunk * CHUNK..((chunk + 1) * CHUNK).min(n_traj) {
                let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(master_seed, traj as u64));
                let mut rho = start;
                acc.add_snapshot(0, &rho);
                let mut window = 0usize;
                for cycle in 1..=n_cycles {
                    kernel.cycle(&mut rho, &mut rng, |step, st, readout| {
                        if readout == Readout::Down {
                            acc.total_clicks += 1;
                            if cycle >= window_from {
                                window += 1;
                            }
                            if keep_clicks {
                                acc.clicks.push(ClickEvent {
                                    trajectory: traj,
                                    cycle,
                                    step,
                                    detector: st.target,
                                    source: st.source,
                                });
                            }
                        }
                    })?;
                    acc.add_snapshot(cycle, &rho);
                }
                acc.window_clicks += window as f64;
                acc.window_clicks_sq += (window * window) as f64;
            }
            Ok(acc)
        })
        .collect();

    let mut total = Accumulator::new(snapshots);
    for p in partials {
        total.merge(p?);
    }

    let n = n_traj as f64;
    let times = cycle_times(schedule, n_cycles);
    let mut mean_state = Vec::with_capacity(snapshots);
    let mut population_mean: [Vec<f64>; 4] = Default::default();
    let mut population_stderr: [Vec<f64>; 4] = Default::default();
    for t in 0..snapshots {
        let mean: Block =
            std::array::from_fn(|r| std::array::from_fn(|c| total.sum_rho[t][r][c] / n));
        for k in 0..4 {
            let m = mean[k][k].re;
            let var = if n_traj > 1 {
                ((total.sum_pop_sq[t][k] / n - m * m) * n / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            population_mean[k].push(m);
            population_stderr[k].push((var / n).sqrt());
        }
        mean_state.push(DensityMatrix::new(basis.from_basis(&from_block(&mean)))?);
    }

    let window_cycles = (n_cycles + 1 - window_from) as f64;
    let window_len = window_cycles * schedule.cycle_duration() * schedule.gbar();
    let mean_clicks = total.window_clicks / n;
    let click_rate = mean_clicks / window_len;
    let click_rate_stderr = if n_traj > 1 {
        let var =
            ((total.window_clicks_sq / n - mean_clicks * mean_clicks) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt() / window_len
    } else {
        f64::NAN
    };

    Ok((
        EnsembleStats {
            n_traj,
            times: times.clone(),
            mean_state,
            population_mean,
            population_stderr,
            click_rate,
            click_rate_stderr,
            click_window_start: times[window_from - 1],
            total_clicks: total.total_clicks,
        },
        total.clicks,
    ))
}

/// Long-time click rate per unit `ḡt` when the designed target is reached:
/// `Σ_i g_i (1 - p_i) / ḡ` with `p = g/ḡ`.
pub fn steady_click_rate(schedule: &ProtocolSchedule) -> f64 {
    let g = schedule.rates();
    let gbar = schedule.gbar();
    if gbar <= 0.0 {
        return 0.0;
    }
    g.iter().map(|gi| gi / gbar * (1.0 - gi / gbar)).sum()
}

pub const CLICK_LOG_HEADER: &str = "trajectory,cycle,step,detector,readout";

/// Click log rows (`↓` readouts only).
pub fn write_click_log<W: Write>(out: &mut W, clicks: &[ClickEvent]) -> Result<()> {
    writeln!(out, "{CLICK_LOG_HEADER}")?;
    for c in clicks {
        writeln!(
            out,
            "{},{},{},{},down",
            c.trajectory, c.cycle, c.step, c.detector
        )?;
    }
    Ok(())
}

/// Every readout of a single trajectory, labelled with `trajectory`.
pub fn write_readout_log<W: Write>(
    out: &mut W,
    trajectory: usize,
    record: &TrajectoryRecord,
) -> Result<()> {
    writeln!(out, "{CLICK_LOG_HEADER}")?;
    for r in &record.readouts {
        writeln!(
            out,
            "{trajectory},{},{},{},{}",
            r.cycle,
            r.step,
            r.detector,
            r.readout.as_str()
        )?;
    }
    Ok(())
}
