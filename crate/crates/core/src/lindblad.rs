//! Liouvillian of the averaged (blind) measurement dynamics.
//!
//! For `J_i τ ≪ 1` one cycle of twelve blind measurements acts on the system
//! as `exp(12τ ℒ)` with
//!
//! ```text
//! ℒ[ρ] = -½ Σ_i g_i Σ_j ({L_j^(i)† L_j^(i), ρ} - 2 L_j^(i) ρ L_j^(i)†)
//! ```
//!
//! and no Hamiltonian part: the first-order term `i Tr_d[ρ ⊗ |↑⟩⟨↑|, H]`
//! vanishes because `⟨↑|σ^±|↑⟩ = 0`. Superoperators act on column-stacked
//! density matrices (see [`crate::linalg::vectorize`]).

use crate::error::{Error, Result};
use crate::linalg::{
    devectorize, eigenvalues, expm, expm_hermitian_generator, solve, trace_functional, vectorize,
    ComplexMatrix, C64, ZERO,
};
use crate::metrics::fidelity_deviation;
use crate::protocol::{
    interaction_hamiltonian, jump_operators, MeasurementStep, OrthonormalBasis, ProtocolSchedule,
};
use crate::state::{detector_up, partial_trace_second, DensityMatrix, DETECTOR_DIM, SYSTEM_DIM};

/// Eigenvalues with `|λ| < ZERO_MODE_REL · ḡ` count as zero modes.
pub const ZERO_MODE_REL: f64 = 1e-9;

const SUPER_DIM: usize = SYSTEM_DIM * SYSTEM_DIM;

/// 16×16 generator acting on `vec(ρ_s)`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: ComplexMatrix,
    rates: [f64; 4],
    basis: OrthonormalBasis,
}

impl Liouvillian {
    /// `Σ_i g_i ℒ_i` for explicit rates.
    pub fn from_rates(basis: &OrthonormalBasis, rates: [f64; 4]) -> Self {
        let mut m = ComplexMatrix::zeros(SUPER_DIM, SUPER_DIM);
        for (i, g) in rates.iter().enumerate() {
            if *g != 0.0 {
                m = &m + &detector_superoperator(basis, i).scale_real(*g);
            }
        }
        Self {
            matrix: m,
            rates,
            basis: basis.clone(),
        }
    }

    #[cfg(test)]
    pub(crate) fn from_matrix(
        matrix: ComplexMatrix,
        basis: OrthonormalBasis,
        rates: [f64; 4],
    ) -> Self {
        Self {
            matrix,
            rates,
            basis,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rates(&self) -> [f64; 4] {
        self.rates
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn gbar(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `ℒ[ρ]`
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let v = vectorize(rho).expect("square operand");
        devectorize(&self.matrix.matvec(&v)).expect("16 entries")
    }

    /// All 16 eigenvalues, descending by real part.
    pub fn spectrum(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.matrix)
    }

    /// Threshold below which `|λ|` is a zero mode.
    pub fn zero_threshold(&self) -> f64 {
        ZERO_MODE_REL * self.gbar()
    }

    fn checked_spectrum(&self) -> Result<Vec<C64>> {
        if !(self.gbar() > 0.0) {
            return Err(Error::NoMeasurements);
        }
        let spec = self.spectrum()?;
        let thr = self.zero_threshold();
        let zero: Vec<f64> = spec.iter().map(|z| z.norm()).filter(|m| *m < thr).collect();
        if zero.len() != 1 {
            let mut magnitudes: Vec<f64> = spec.iter().map(|z| z.norm()).collect();
            magnitudes.sort_by(f64::total_cmp);
            magnitudes.truncate(zero.len().max(2) + 1);
            return Err(Error::DegenerateNullSpace {
                multiplicity: zero.len(),
                threshold: thr,
                magnitudes,
            });
        }
        Ok(spec)
    }
}

/// Unit-rate dissipator of detector `i`: `Σ_j D[L_j^(i)]` as a 16×16 matrix.
pub fn detector_superoperator(basis: &OrthonormalBasis, i: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(SYSTEM_DIM);
    let mut m = ComplexMatrix::zeros(SUPER_DIM, SUPER_DIM);
    for (j, l) in jump_operators(basis, i).iter().enumerate() {
        if j == i {
            continue;
        }
        let ldl = l.adjoint().matmul(l);
        // vec(L ρ L†) = (L̄ ⊗ L) vec ρ ; vec(X ρ) = (I ⊗ X) vec ρ ; vec(ρ X) = (Xᵀ ⊗ I) vec ρ
        let jump = l.conj().kron(l);
        let left = id.kron(&ldl);
        let right = ldl.transpose().kron(&id);
        m = &m + &jump;
        m = &m - &(&left + &right).scale_real(0.5);
    }
    m
}

pub fn build_liouvillian(schedule: &ProtocolSchedule) -> Liouvillian {
    Liouvillian::from_rates(schedule.basis(), schedule.rates())
}

/// Unique unit-trace null vector of the Liouvillian.
pub fn steady_state(liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    liouvillian.checked_spectrum()?;

    // Replace one population row by the trace functional: M' x = e_0.
    let mut a = liouvillian.matrix.clone();
    let t = trace_functional(SYSTEM_DIM);
    for (k, v) in t.iter().enumerate() {
        a[(0, k)] = *v;
    }
    let mut b = vec![ZERO; SUPER_DIM];
    b[0] = C64::new(1.0, 0.0);
    let x = solve(&a, &b)?;
    let rho = DensityMatrix::repaired(devectorize(&x)?)?;

    let residual = liouvillian.apply(rho.matrix()).max_abs();
    if residual > 1e-10 * liouvillian.gbar().max(1.0) {
        return Err(Error::Numerical(format!(
            "steady-state residual {residual:e} too large"
        )));
    }
    Ok(rho)
}

/// Smallest `|Re λ|` over the nonzero eigenvalues.
pub fn spectral_gap(liouvillian: &Liouvillian) -> Result<f64> {
    let spec = liouvillian.checked_spectrum()?;
    let thr = liouvillian.zero_threshold();
    spec.iter()
        .filter(|z| z.norm() >= thr)
        .map(|z| z.re.abs())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Numerical("no nonzero eigenvalues".into()))
}

/// Sampled evolution. `times` are in units of `1/ḡ`.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub fidelity_deviation: Vec<f64>,
}

impl EvolutionResult {
    /// Diagonal of each state in `basis`.
    pub fn populations(&self, basis: &OrthonormalBasis) -> Vec<[f64; 4]> {
        self.states
            .iter()
            .map(|s| std::array::from_fn(|k| s.expectation(basis.state(k))))
            .collect()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("non-empty evolution")
    }
}

/// Exact propagation `vec ρ(t) = exp(M t) vec ρ(0)` on a grid of `ḡt` values.
pub fn evolve_master(
    liouvillian: &Liouvillian,
    rho0: &DensityMatrix,
    gbar_times: &[f64],
    rho_target: &DensityMatrix,
) -> Result<EvolutionResult> {
    let gbar = liouvillian.gbar();
    if !(gbar > 0.0) {
        return Err(Error::NoMeasurements);
    }
    check_grid(gbar_times)?;
    if rho0.dim() != SYSTEM_DIM || rho_target.dim() != SYSTEM_DIM {
        return Err(Error::dims(
            "4x4 states",
            format!("{} / {}", rho0.dim(), rho_target.dim()),
        ));
    }
    let v0 = vectorize(rho0.matrix())?;
    let mut states = Vec::with_capacity(gbar_times.len());
    let mut fid = Vec::with_capacity(gbar_times.len());
    for &s in gbar_times {
        let prop = expm(&liouvillian.matrix.scale_real(s / gbar));
        let rho = DensityMatrix::repaired(devectorize(&prop.matvec(&v0))?)?;
        fid.push(fidelity_deviation(&rho, rho_target));
        states.push(rho);
    }
    Ok(EvolutionResult {
        times: gbar_times.to_vec(),
        states,
        fidelity_deviation: fid,
    })
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if !(times[0] >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time grid starts at {}",
            times[0]
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Joint unitary `exp(-i H τ)` of one measurement step.
pub fn step_unitary(step: &MeasurementStep, basis: &OrthonormalBasis) -> ComplexMatrix {
    let h = interaction_hamiltonian(step, basis);
    expm_hermitian_generator(&h, step.tau).expect("interaction Hamiltonian is Hermitian")
}

/// One blind measurement: couple to a fresh `|↑⟩` detector, evolve, trace it out.
pub fn blind_measurement(rho: &ComplexMatrix, unitary: &ComplexMatrix) -> ComplexMatrix {
    let joint = rho.kron(&detector_up().projector());
    let evolved = unitary.sandwich(&joint);
    partial_trace_second(&evolved, SYSTEM_DIM, DETECTOR_DIM).expect("8x8 joint state")
}

/// Step-by-step blind-measurement evolution, one snapshot per 12-step cycle.
pub fn evolve_discrete(
    schedule: &ProtocolSchedule,
    rho0: &DensityMatrix,
    n_cycles: usize,
) -> Result<EvolutionResult> {
    if n_cycles == 0 {
        return Err(Error::InvalidParameter(
            "n_cycles must be at least 1".into(),
        ));
    }
    let target = schedule.designed_target()?;
    let gbar = schedule.gbar();
    let unitaries: Vec<ComplexMatrix> = schedule
        .steps()
        .iter()
        .map(|s| step_unitary(s, schedule.basis()))
        .collect();

    let mut rho = rho0.matrix().clone();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut fid = vec![fidelity_deviation(rho0, &target)];
    for cycle in 1..=n_cycles {
        for u in &unitaries {
            rho = blind_measurement(&rho, u);
        }
        let snap = DensityMatrix::repaired(rho.clone())?;
        times.push(gbar * schedule.cycle_duration() * cycle as f64);
        fid.push(fidelity_deviation(&snap, &target));
        states.push(snap);
    }
    Ok(EvolutionResult {
        times,
        states,
        fidelity_deviation: fid,
    })
}
