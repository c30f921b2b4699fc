//! Pure and mixed states, detector qubit conventions, partial traces.
//!
//! Joint system–detector operators are ordered `system ⊗ detector`; the
//! detector basis is `{|↑⟩, |↓⟩}` with `|↑⟩` first. Two-qubit system states
//! use the computational order `{↑↑, ↑↓, ↓↑, ↓↓}`.

use crate::error::{Error, Result, StateCheck};
use crate::linalg::{herm_eig, ComplexMatrix, C64, ONE, ZERO};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;

/// Dimension of the two-qubit system.
pub const SYSTEM_DIM: usize = 4;
/// Dimension of the detector qubit.
pub const DETECTOR_DIM: usize = 2;

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Accepts amplitudes whose norm is within `NORM_TOL` of one.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::dims("non-empty vector", "empty"));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if amplitudes.is_empty() || n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter(
                "cannot normalize zero vector".into(),
            ));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / n).collect(),
        })
    }

    pub(crate) fn from_unit_vector(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim);
        let mut a = vec![ZERO; dim];
        a[k] = ONE;
        Self { amplitudes: a }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates the density-matrix invariants and stores the Hermitian part.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        validate(&matrix)?;
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Hermitizes, clamps round-off negative eigenvalues and renormalizes,
    /// then validates. For outputs of long numerical evolutions.
    pub fn repaired(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState {
                check: StateCheck::Shape,
                detail: format!("{:?}", matrix.shape()),
            });
        }
        let herr = matrix.hermiticity_error();
        if herr > 1e-8 {
            return Err(Error::InvalidState {
                check: StateCheck::Hermiticity,
                detail: format!("max |ρ - ρ†| = {herr:e}"),
            });
        }
        let h = matrix.hermitian_part();
        let e = herm_eig(&h)?;
        let min = e.values.last().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState {
                check: StateCheck::Positivity,
                detail: format!("smallest eigenvalue {min:e}"),
            });
        }
        let clamped = if min < 0.0 {
            e.apply(|x| x.max(0.0))
        } else {
            h
        };
        let tr = clamped.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState {
                check: StateCheck::Trace,
                detail: format!("trace {tr}"),
            });
        }
        Self::new(clamped.scale_real(1.0 / tr))
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(
            validate(&matrix).is_ok(),
            "untrusted state: {:?}",
            validate(&matrix)
        );
        Self { matrix }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: psi.projector(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// `Σ w_k |ψ_k⟩⟨ψ_k|` for nonnegative weights summing to one.
    pub fn mixture(weights: &[f64], states: &[PureState]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::dims(
                format!("{} weights", states.len()),
                format!("{}", weights.len()),
            ));
        }
        let d = states[0].dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            m = &m + &s.projector().scale_real(*w);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let a = psi.amplitudes();
        let mut acc = ZERO;
        for r in 0..a.len() {
            for c in 0..a.len() {
                acc += a[r].conj() * self.matrix[(r, c)] * a[c];
            }
        }
        acc.re
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
        }
    }
}

/// Checks the three density-matrix invariants, naming the first that fails.
pub fn validate(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidState {
            check: StateCheck::Shape,
            detail: format!("{:?}", m.shape()),
        });
    }
    let herr = m.hermiticity_error();
    if herr > HERMITICITY_TOL {
        return Err(Error::InvalidState {
            check: StateCheck::Hermiticity,
            detail: format!("max |ρ - ρ†| = {herr:e}"),
        });
    }
    let tr = m.trace();
    if (tr - ONE).norm() > TRACE_TOL {
        return Err(Error::InvalidState {
            check: StateCheck::Trace,
            detail: format!("trace = {}", tr.re),
        });
    }
    let e = herm_eig(&m.hermitian_part())?;
    let min = e.values.last().copied().unwrap_or(0.0);
    if min < -POSITIVITY_TOL {
        return Err(Error::InvalidState {
            check: StateCheck::Positivity,
            detail: format!("smallest eigenvalue {min:e}"),
        });
    }
    Ok(())
}

pub fn detector_up() -> PureState {
    PureState::basis(DETECTOR_DIM, 0)
}

pub fn detector_down() -> PureState {
    PureState::basis(DETECTOR_DIM, 1)
}

/// `σ⁻ = |↓⟩⟨↑|`
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]])
}

/// `σ⁺ = |↑⟩⟨↓|`
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
}

/// Trace out the second factor of a `(d1·d2)`-dimensional operator.
pub fn partial_trace_second(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    if m.shape() != (d1 * d2, d1 * d2) {
        return Err(Error::dims(
            format!("{0}x{0}", d1 * d2),
            format!("{:?}", m.shape()),
        ));
    }
    Ok(ComplexMatrix::from_fn(d1, d1, |i, j| {
        (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
    }))
}

/// Trace out the first factor of a `(d1·d2)`-dimensional operator.
pub fn partial_trace_first(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    if m.shape() != (d1 * d2, d1 * d2) {
        return Err(Error::dims(
            format!("{0}x{0}", d1 * d2),
            format!("{:?}", m.shape()),
        ));
    }
    Ok(ComplexMatrix::from_fn(d2, d2, |i, j| {
        (0..d1).map(|k| m[(k * d2 + i, k * d2 + j)]).sum()
    }))
}

/// `ρ_s = Tr_d ρ` for a joint 8×8 system–detector state.
pub fn partial_trace_detector(joint: &DensityMatrix) -> Result<DensityMatrix> {
    let reduced = partial_trace_second(joint.matrix(), SYSTEM_DIM, DETECTOR_DIM)?;
    Ok(DensityMatrix::from_trusted(reduced))
}
