//! Eigendecompositions.
//!
//! Hermitian matrices go through a cyclic complex Jacobi sweep, which is
//! robust and accurate at the sizes used here (≤ 16). General (non-normal)
//! spectra, needed for Liouvillians, come from a complex Schur form.

use nalgebra::DMatrix;

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::state::PureState;

/// Tolerance on `max |m - m†|` accepted by [`herm_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `m = Σ λ_k v_k v_k†` with eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: Vec<PureState>,
}

impl HermEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            let p = ComplexMatrix::outer(v.amplitudes(), v.amplitudes());
            out = &out + &p.scale_real(*lam);
        }
        out
    }

    /// Columns are the eigenvectors, in eigenvalue order.
    pub fn vector_matrix(&self) -> ComplexMatrix {
        let n = self.values.len();
        ComplexMatrix::from_fn(n, n, |r, c| self.vectors[c].amplitudes()[r])
    }

    /// Rebuild `Σ f(λ_k) v_k v_k†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            let w = f(*lam);
            if w == 0.0 {
                continue;
            }
            let a = v.amplitudes();
            for r in 0..n {
                for c in 0..n {
                    out[(r, c)] += a[r] * a[c].conj() * w;
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::dims("square matrix", format!("{:?}", m.shape())));
    }
    let herr = m.hermiticity_error();
    if herr > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herr));
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));

    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = order
        .iter()
        .map(|&k| PureState::from_unit_vector(canonical_phase(v.column(k))))
        .collect();
    Ok(HermEig { values, vectors })
}

/// Zero the (p, q) element with a unitary plane rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let n = a.rows();
    let phase = apq / mag;
    let theta = 0.5 * (a[(q, q)].re - a[(p, p)].re) / mag;
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // W = diag(.., 1, .., conj(phase), ..) · R(c, s) restricted to (p, q)
    let wpp = C64::new(c, 0.0);
    let wpq = C64::new(s, 0.0);
    let wqp = -phase.conj() * s;
    let wqq = phase.conj() * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * wpp + akq * wqp;
        a[(k, q)] = akp * wpq + akq * wqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = wpp.conj() * apk + wqp.conj() * aqk;
        a[(q, k)] = wpq.conj() * apk + wqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * wpp + vkq * wqp;
        v[(k, q)] = vkp * wpq + vkq * wqq;
    }
}

/// Rotate the global phase so the largest component is real and positive.
fn canonical_phase(mut col: Vec<C64>) -> Vec<C64> {
    let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = col
        .iter()
        .copied()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap_or(ZERO);
    if pivot.norm() > 0.0 {
        let ph = pivot.conj() / pivot.norm() / norm;
        for z in &mut col {
            *z *= ph;
        }
    }
    col
}

/// All eigenvalues of a general square complex matrix, via complex Schur.
/// Sorted by descending real part, ties by imaginary part.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::dims("square matrix", format!("{:?}", m.shape())));
    }
    let n = m.rows();
    let dm = DMatrix::from_row_slice(n, n, m.as_slice());
    // the QR iteration can stall at the tightest tolerance on exactly
    // degenerate spectra; a few ulps of slack is enough
    let schur = [4.0, 64.0]
        .iter()
        .find_map(|k| nalgebra::linalg::Schur::try_new(dm.clone(), k * f64::EPSILON, 10_000))
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut vals: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    vals.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(vals)
}
