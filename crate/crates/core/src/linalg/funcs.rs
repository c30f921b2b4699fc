use super::eig::herm_eig;
use super::matrix::{ComplexMatrix, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues in `[-PSD_TOL, 0)` are treated as round-off and clamped.
pub const PSD_TOL: f64 = 1e-10;

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = herm_eig(m)?;
    let min = e.values.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    let floor = roundoff_floor(&e.values);
    Ok(e.apply(|x| if x <= floor { 0.0 } else { x.sqrt() }))
}

/// Eigenvalues at or below this are indistinguishable from zero; their square
/// roots (~1e-8) would otherwise leak into fidelities and concurrences.
pub(crate) fn roundoff_floor(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    4.0 * f64::EPSILON * values.len() as f64 * scale
}

/// `exp(-i h t)` for Hermitian `h`, via its spectral decomposition.
pub fn expm_hermitian_generator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let e = herm_eig(h)?;
    let n = h.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (lam, v) in e.values.iter().zip(&e.vectors) {
        let phase = (-I * lam * t).exp();
        let a = v.amplitudes();
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += a[r] * a[c].conj() * phase;
            }
        }
    }
    Ok(out)
}

/// Matrix exponential of a general square matrix by scaling and squaring
/// around a truncated Taylor series.
///
/// Works for defective matrices, so no eigenvector basis is needed.
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(m.is_square(), "expm of non-square matrix");
    let n = m.rows();
    let norm = m.norm_one();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let a = m.scale_real(0.5f64.powi(squarings as i32));

    // ||a|| <= 1/2, so 30 terms is far below machine precision
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=30 {
        term = term.matmul(&a).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.max_abs() < 1e-18 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Solve `a x = b` by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if !a.is_square() || a.rows() != b.len() {
        return Err(Error::dims(
            format!("square system of size {}", b.len()),
            format!("{:?}", a.shape()),
        ));
    }
    let n = b.len();
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = lu.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| lu[(r, col)].norm().total_cmp(&lu[(s, col)].norm()))
            .unwrap();
        if lu[(piv, col)].norm() <= 1e-14 * scale {
            return Err(Error::Numerical(format!(
                "singular system (pivot {:e} in column {col})",
                lu[(piv, col)].norm()
            )));
        }
        if piv != col {
            for k in 0..n {
                let tmp = lu[(col, k)];
                lu[(col, k)] = lu[(piv, k)];
                lu[(piv, k)] = tmp;
            }
            x.swap(col, piv);
        }
        let d = lu[(col, col)];
        for r in (col + 1)..n {
            let f = lu[(r, col)] / d;
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let v = lu[(col, k)];
                lu[(r, k)] -= f * v;
            }
            let xc = x[col];
            x[r] -= f * xc;
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for k in (r + 1)..n {
            acc -= lu[(r, k)] * x[k];
        }
        x[r] = acc / lu[(r, r)];
    }
    Ok(x)
}

/// Column-stacking vectorization: entry `(r, c)` lands at index `c * n + r`.
///
/// With this convention `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.
pub fn vectorize(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::dims("square matrix", format!("{:?}", m.shape())));
    }
    let n = m.rows();
    let mut out = vec![ZERO; n * n];
    for c in 0..n {
        for r in 0..n {
            out[c * n + r] = m[(r, c)];
        }
    }
    Ok(out)
}

pub fn devectorize(v: &[C64]) -> Result<ComplexMatrix> {
    let n = (v.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != v.len() {
        return Err(Error::dims("square length", format!("{}", v.len())));
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| v[c * n + r]))
}

/// Row functional `t` with `t · vec(ρ) = Tr ρ`.
pub fn trace_functional(n: usize) -> Vec<C64> {
    let mut t = vec![ZERO; n * n];
    for k in 0..n {
        t[k * n + k] = ONE;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let id = ComplexMatrix::identity(3);
        assert!(sqrt_psd(&id).unwrap().max_abs_diff(&id) < 1e-15);
        let d = ComplexMatrix::real_diagonal(&[4.0, 9.0]);
        let s = sqrt_psd(&d).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::real_diagonal(&[2.0, 3.0])) < 1e-14);
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        let v = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let p = ComplexMatrix::outer(&v, &v);
        let s = sqrt_psd(&p).unwrap();
        assert!(s.max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn sqrt_clamps_tiny_negative_and_rejects_large() {
        let d = ComplexMatrix::real_diagonal(&[1.0, -1e-12]);
        let s = sqrt_psd(&d).unwrap();
        assert_eq!(s[(1, 1)], ZERO);
        let bad = ComplexMatrix::real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(sqrt_psd(&bad), Err(Error::NotPositive(_))));
    }

    #[test]
    fn zero_generator_gives_identity() {
        let u = expm_hermitian_generator(&ComplexMatrix::zeros(4, 4), 3.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn sigma_x_for_time_pi_is_minus_identity() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let u = expm_hermitian_generator(&x, std::f64::consts::PI).unwrap();
        let minus_id = ComplexMatrix::identity(2).scale_real(-1.0);
        assert!(u.max_abs_diff(&minus_id) < 1e-14);
    }

    #[test]
    fn general_expm_of_nilpotent() {
        // exp([[0, 1], [0, 0]]) = [[1, 1], [0, 1]]
        let n = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = expm(&n);
        let want = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(e.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn general_expm_of_large_diagonal() {
        let d = ComplexMatrix::real_diagonal(&[-30.0, 2.0]);
        let e = expm(&d);
        assert!((e[(0, 0)].re - (-30.0f64).exp()).abs() < 1e-25);
        assert!((e[(1, 1)].re - 2.0f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn solve_small_system() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 2.0], &[1.0, 1.0]]);
        let x = solve(&a, &[C64::new(4.0, 0.0), C64::new(3.0, 0.0)]).unwrap();
        assert!((x[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - C64::new(2.0, 0.0)).norm() < 1e-15);
        let sing = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(solve(&sing, &[ONE, ONE]).is_err());
    }

    #[test]
    fn vectorize_zero_and_layout() {
        assert!(vectorize(&ComplexMatrix::zeros(4, 4))
            .unwrap()
            .iter()
            .all(|z| *z == ZERO));
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let v: Vec<f64> = vectorize(&m).unwrap().iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
        assert!(devectorize(&[ONE; 3]).is_err());
        assert!(vectorize(&ComplexMatrix::zeros(2, 3)).is_err());
    }
}
