//! Measurement schedules that stabilize a chosen two-qubit state.
//!
//! A target `ρ_T = Σ p_i |B_i⟩⟨B_i|` is realized by four detectors. Detector
//! `i` runs three weak measurements per cycle, one for each source state
//! `|B_j⟩, j ≠ i`, with interaction `J_i (|B_i⟩⟨B_j| ⊗ σ⁻ + h.c.)`. Each
//! measurement lasts `τ`, so one cycle lasts `12τ`, and the effective rate
//! of detector `i` is `g_i = J_i² τ / 12`. Choosing `g_i = ḡ p_i` makes
//! `ρ_T` the unique steady state.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, ComplexMatrix, C64, ZERO};
use crate::state::{sigma_minus, validate, DensityMatrix, PureState, SYSTEM_DIM};

/// Steps per cycle: four targets times three sources.
pub const STEPS_PER_CYCLE: usize = 12;

/// `J τ` above this value leaves the weak-measurement regime; reported, not refused.
pub const WEAK_COUPLING_WARN: f64 = 0.3;

/// Default `max J τ` when the step duration is not given explicitly.
pub const DEFAULT_MAX_COUPLING: f64 = 0.1;

const ORTHONORMAL_TOL: f64 = 1e-10;
const PROBABILITY_TOL: f64 = 1e-12;

/// Four orthonormal two-qubit states `|B_1⟩ … |B_4⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    states: [PureState; 4],
}

impl OrthonormalBasis {
    pub fn new(states: [PureState; 4]) -> Result<Self> {
        for s in &states {
            if s.dim() != SYSTEM_DIM {
                return Err(Error::dims("4-dimensional states", format!("{}", s.dim())));
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { 1.0 } else { 0.0 };
                let got = states[a].inner(&states[b]);
                if (got - C64::new(want, 0.0)).norm() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "basis states {a} and {b} have overlap {got}"
                    )));
                }
            }
        }
        Ok(Self { states })
    }

    pub fn computational() -> Self {
        Self {
            states: std::array::from_fn(|k| PureState::basis(SYSTEM_DIM, k)),
        }
    }

    /// Columns of a 4×4 unitary.
    pub fn from_columns(u: &ComplexMatrix) -> Result<Self> {
        if u.shape() != (4, 4) {
            return Err(Error::dims("4x4", format!("{:?}", u.shape())));
        }
        let states = [0, 1, 2, 3].map(|c| PureState::normalized(u.column(c)));
        let [a, b, c, d] = states;
        Self::new([a?, b?, c?, d?])
    }

    pub fn state(&self, i: usize) -> &PureState {
        &self.states[i]
    }

    pub fn states(&self) -> &[PureState; 4] {
        &self.states
    }

    /// Unitary whose columns are the basis states.
    pub fn unitary(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(4, 4, |r, c| self.states[c].amplitudes()[r])
    }

    /// `|B_i⟩⟨B_j|`
    pub fn transition(&self, i: usize, j: usize) -> ComplexMatrix {
        ComplexMatrix::outer(self.states[i].amplitudes(), self.states[j].amplitudes())
    }

    pub fn projector(&self, i: usize) -> ComplexMatrix {
        self.transition(i, i)
    }

    /// `Σ w_i |B_i⟩⟨B_i|`
    pub fn diagonal_operator(&self, weights: &[f64; 4]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                m = &m + &self.projector(i).scale_real(*w);
            }
        }
        m
    }

    /// Express `m` in this basis: `V† m V`.
    pub fn to_basis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let v = self.unitary();
        v.adjoint().matmul(m).matmul(&v)
    }

    /// Inverse of [`Self::to_basis`].
    pub fn from_basis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.unitary().sandwich(m)
    }
}

/// Spectral data of a target state: eigenbasis and eigenvalue weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub basis: OrthonormalBasis,
    pub probabilities: [f64; 4],
}

impl TargetSpec {
    pub fn new(basis: OrthonormalBasis, probabilities: [f64; 4]) -> Result<Self> {
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "probabilities must be nonnegative: {probabilities:?}"
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self {
            basis,
            probabilities,
        })
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.basis.diagonal_operator(&self.probabilities))
    }
}

/// Spectral decomposition of a target state, weights sorted descending.
///
/// Within a degenerate eigenspace any orthonormal basis is returned; the
/// resulting protocol does not depend on that choice.
pub fn diagonalize_target(rho_target: &DensityMatrix) -> Result<TargetSpec> {
    validate(rho_target.matrix())?;
    if rho_target.dim() != SYSTEM_DIM {
        return Err(Error::dims("4x4 target", format!("{}", rho_target.dim())));
    }
    let e = herm_eig(rho_target.matrix())?;
    let mut p = [0.0; 4];
    for (dst, v) in p.iter_mut().zip(&e.values) {
        *dst = v.max(0.0);
    }
    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    let [a, b, c, d]: [PureState; 4] = e
        .vectors
        .try_into()
        .map_err(|_| Error::Numerical("eigendecomposition size".into()))?;
    TargetSpec::new(OrthonormalBasis::new([a, b, c, d])?, p)
}

/// One weak measurement: detector `target` pulls `|B_source⟩` towards `|B_target⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementStep {
    pub target: usize,
    pub source: usize,
    /// Coupling `J` (1/time).
    pub coupling: f64,
    /// Interaction time `τ`.
    pub tau: f64,
}

impl MeasurementStep {
    pub fn new(target: usize, source: usize, coupling: f64, tau: f64) -> Result<Self> {
        if target >= 4 || source >= 4 || target == source {
            return Err(Error::InvalidParameter(format!(
                "invalid step indices target={target} source={source}"
            )));
        }
        if !(coupling >= 0.0) || !coupling.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling {coupling}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau {tau}")));
        }
        Ok(Self {
            target,
            source,
            coupling,
            tau,
        })
    }

    /// Rotation angle `J τ`.
    pub fn angle(&self) -> f64 {
        self.coupling * self.tau
    }
}

/// Full cycle of twelve measurement steps with their couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSchedule {
    basis: OrthonormalBasis,
    tau: f64,
    rates: [f64; 4],
    couplings: [f64; 4],
    steps: Vec<MeasurementStep>,
}

impl ProtocolSchedule {
    /// Schedule with detector rates `g_i` given directly (`J_i = √(12 g_i / τ)`).
    pub fn from_rates(basis: OrthonormalBasis, rates: [f64; 4], tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        if rates.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rates must be nonnegative: {rates:?}"
            )));
        }
        let couplings = rates.map(|g| (STEPS_PER_CYCLE as f64 * g / tau).sqrt());
        let mut steps = Vec::with_capacity(STEPS_PER_CYCLE);
        for target in 0..4 {
            for source in (0..4).filter(|&s| s != target) {
                steps.push(MeasurementStep::new(
                    target,
                    source,
                    couplings[target],
                    tau,
                )?);
            }
        }
        let schedule = Self {
            basis,
            tau,
            rates,
            couplings,
            steps,
        };
        if let Some(x) = schedule.weak_regime_violation() {
            warn!("max J·τ = {x:.3} exceeds {WEAK_COUPLING_WARN}; outside the weak-measurement regime");
        }
        Ok(schedule)
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rates(&self) -> [f64; 4] {
        self.rates
    }

    pub fn couplings(&self) -> [f64; 4] {
        self.couplings
    }

    pub fn steps(&self) -> &[MeasurementStep] {
        &self.steps
    }

    /// Total measurement strength `ḡ = Σ g_i`.
    pub fn gbar(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn cycle_duration(&self) -> f64 {
        STEPS_PER_CYCLE as f64 * self.tau
    }

    pub fn max_angle(&self) -> f64 {
        self.couplings
            .iter()
            .fold(0.0f64, |m, j| m.max(j * self.tau))
    }

    /// `Some(max Jτ)` if it exceeds [`WEAK_COUPLING_WARN`].
    pub fn weak_regime_violation(&self) -> Option<f64> {
        let x = self.max_angle();
        (x > WEAK_COUPLING_WARN).then_some(x)
    }

    /// Number of detectors with nonzero coupling.
    pub fn active_detectors(&self) -> usize {
        self.rates.iter().filter(|g| **g > 0.0).count()
    }

    /// The state this schedule stabilizes, `Σ g_j |B_j⟩⟨B_j| / ḡ`.
    pub fn designed_target(&self) -> Result<DensityMatrix> {
        let gbar = self.gbar();
        if gbar <= 0.0 {
            return Err(Error::NoMeasurements);
        }
        let p = self.rates.map(|g| g / gbar);
        Ok(DensityMatrix::from_trusted(
            self.basis.diagonal_operator(&p),
        ))
    }

    /// Same schedule with the steps applied in a different order.
    pub fn with_step_order(&self, order: &[usize]) -> Result<Self> {
        let mut seen = [false; STEPS_PER_CYCLE];
        if order.len() != STEPS_PER_CYCLE {
            return Err(Error::InvalidParameter(
                "order must list all 12 steps".into(),
            ));
        }
        for &k in order {
            if k >= STEPS_PER_CYCLE || seen[k] {
                return Err(Error::InvalidParameter(format!("bad step order {order:?}")));
            }
            seen[k] = true;
        }
        let mut out = self.clone();
        out.steps = order.iter().map(|&k| self.steps[k]).collect();
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = ScheduleFile {
            tau: self.tau,
            gbar: self.gbar(),
            basis: self
                .basis
                .states()
                .iter()
                .map(|s| s.amplitudes().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            g: self.rates.to_vec(),
            j: self.couplings.to_vec(),
            steps: self
                .steps
                .iter()
                .map(|s| StepEntry {
                    target: s.target,
                    source: s.source,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("schedule serializes")
    }

    /// Reads a schedule written by [`Self::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScheduleFile = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!(
                "schedule JSON at line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        if file.basis.len() != 4 || file.basis.iter().any(|s| s.len() != 4) {
            return Err(Error::Parse(
                "basis must hold four 4-component states".into(),
            ));
        }
        if file.g.len() != 4 || file.j.len() != 4 {
            return Err(Error::Parse("g and J must have four entries".into()));
        }
        let states: Vec<PureState> = file
            .basis
            .iter()
            .map(|s| PureState::new(s.iter().map(|[re, im]| C64::new(*re, *im)).collect()))
            .collect::<Result<_>>()?;
        let [a, b, c, d]: [PureState; 4] = states.try_into().expect("length checked");
        let basis = OrthonormalBasis::new([a, b, c, d])?;
        let rates = [file.g[0], file.g[1], file.g[2], file.g[3]];
        let schedule = Self::from_rates(basis, rates, file.tau)?;
        for (k, (want, got)) in schedule.couplings.iter().zip(&file.j).enumerate() {
            if (want - got).abs() > 1e-9 * want.max(1.0) {
                return Err(Error::Parse(format!(
                    "J[{k}] = {got} inconsistent with g[{k}] = J²τ/12 (expected {want})"
                )));
            }
        }
        let order: Vec<usize> = file
            .steps
            .iter()
            .map(|e| {
                schedule
                    .steps
                    .iter()
                    .position(|s| s.target == e.target && s.source == e.source)
                    .ok_or_else(|| Error::Parse(format!("invalid step {}->{}", e.source, e.target)))
            })
            .collect::<Result<_>>()?;
        schedule.with_step_order(&order)
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    tau: f64,
    #[serde(default)]
    gbar: f64,
    basis: Vec<Vec<[f64; 2]>>,
    g: Vec<f64>,
    #[serde(rename = "J")]
    j: Vec<f64>,
    steps: Vec<StepEntry>,
}

#[derive(Serialize, Deserialize)]
struct StepEntry {
    target: usize,
    source: usize,
}

/// `g_i = ḡ p_i`, `J_i = √(12 g_i / τ)`.
pub fn assign_couplings(spec: &TargetSpec, gbar: f64, tau: f64) -> Result<ProtocolSchedule> {
    if !(gbar > 0.0) || !gbar.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gbar must be positive, got {gbar}"
        )));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let rates = spec.probabilities.map(|p| gbar * p);
    ProtocolSchedule::from_rates(spec.basis.clone(), rates, tau)
}

/// Step duration giving `max_i J_i τ = max_angle` for total strength `gbar`.
pub fn tau_for_max_angle(spec: &TargetSpec, gbar: f64, max_angle: f64) -> Result<f64> {
    let pmax = spec.probabilities.iter().fold(0.0f64, |m, p| m.max(*p));
    if !(gbar > 0.0) || !(max_angle > 0.0) || pmax <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cannot derive tau from gbar={gbar}, max angle={max_angle}"
        )));
    }
    // (J τ)² = 12 g τ
    Ok(max_angle * max_angle / (STEPS_PER_CYCLE as f64 * gbar * pmax))
}

/// `J (|B_i⟩⟨B_j| ⊗ σ⁻ + h.c.)` on the joint system–detector space.
pub fn interaction_hamiltonian(step: &MeasurementStep, basis: &OrthonormalBasis) -> ComplexMatrix {
    let half = basis
        .transition(step.target, step.source)
        .kron(&sigma_minus())
        .scale_real(step.coupling);
    &half + &half.adjoint()
}

/// `L_j^{(i)} = (1 - δ_ij) |B_i⟩⟨B_j|` for `j = 0..4`.
pub fn jump_operators(basis: &OrthonormalBasis, target: usize) -> [ComplexMatrix; 4] {
    assert!(target < 4, "target index {target} out of range");
    std::array::from_fn(|j| {
        if j == target {
            ComplexMatrix::from_fn(4, 4, |_, _| ZERO)
        } else {
            basis.transition(target, j)
        }
    })
}
