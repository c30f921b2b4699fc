//! Correlation measures for two-qubit states and the `ρ̃(α, β)` family.
//!
//! Entropies are in bits and use `0 log 0 = 0`. Qubit order is
//! `{↑↑, ↑↓, ↓↑, ↓↓}`; "second qubit" is the fast index.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, roundoff_floor, sqrt_psd, ComplexMatrix, C64, I, ZERO};
use crate::protocol::{OrthonormalBasis, TargetSpec};
use crate::state::{partial_trace_first, partial_trace_second, DensityMatrix, PureState};

/// PPT verdict tolerance on the smallest partial-transpose eigenvalue.
pub const PPT_TOL: f64 = 1e-10;

/// Smallest allowed grid size for [`discord_numeric`].
pub const MIN_ANGULAR_RESOLUTION: usize = 64;

/// Parameters of the example family, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    alpha: f64,
    beta: f64,
}

impl FamilyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `α` on the separable/entangled boundary for this `β`.
    pub fn separability_boundary(&self) -> f64 {
        (3.0 * self.beta - 1.0) / (3.0 * self.beta + 1.0)
    }
}

/// Weights on `(|↑↑⟩, |ψ⁺⟩, |ψ⁻⟩, |↓↓⟩)`.
pub fn family_probabilities(params: FamilyParams) -> [f64; 4] {
    let (a, b) = (params.alpha, params.beta);
    let p1 = (1.0 - b + a * (1.0 + b)) / 4.0;
    let p2 = (1.0 - a) * (1.0 - b) / 4.0;
    let p3 = (1.0 - a) * (1.0 + 3.0 * b) / 4.0;
    let p4 = (1.0 - b + a * (1.0 + b)) / 4.0;
    [p1, p2, p3, p4]
}

/// `|↑↑⟩, |ψ⁺⟩, |ψ⁻⟩, |↓↓⟩` with `|ψ±⟩ = (|↑↓⟩ ± |↓↑⟩)/√2`.
pub fn family_basis() -> OrthonormalBasis {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let states = [
        PureState::from_real(&[1.0, 0.0, 0.0, 0.0]),
        PureState::from_real(&[0.0, h, h, 0.0]),
        PureState::from_real(&[0.0, h, -h, 0.0]),
        PureState::from_real(&[0.0, 0.0, 0.0, 1.0]),
    ]
    .map(|s| s.expect("unit vectors"));
    OrthonormalBasis::new(states).expect("Bell-type basis is orthonormal")
}

pub fn family_target(params: FamilyParams) -> TargetSpec {
    let mut p = family_probabilities(params);
    // absorb the last-ulp rounding so the weights sum to one
    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    TargetSpec::new(family_basis(), p).expect("family weights are a distribution")
}

pub fn family_state(params: FamilyParams) -> DensityMatrix {
    family_target(params).density_matrix()
}

/// `1 - (Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn fidelity_deviation(rho: &DensityMatrix, target: &DensityMatrix) -> f64 {
    let s = sqrt_psd(rho.matrix()).expect("density matrices are PSD");
    let inner = s.matmul(target.matrix()).matmul(&s).hermitian_part();
    let root_trace = sqrt_psd(&inner).expect("PSD by construction").trace().re;
    (1.0 - root_trace * root_trace).clamp(0.0, 1.0)
}

fn sigma_y_sigma_y() -> ComplexMatrix {
    let y = ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).expect("2x2");
    y.kron(&y)
}

fn assert_two_qubit(rho: &DensityMatrix) {
    assert_eq!(rho.dim(), 4, "two-qubit state required");
}

/// Wootters concurrence.
///
/// The `λ_k` are computed as eigenvalues of the Hermitian
/// `√(√ρ ρ̃ √ρ)`, which share the spectrum of `√(ρ ρ̃)`.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    assert_two_qubit(rho);
    let yy = sigma_y_sigma_y();
    let flipped = yy.matmul(&rho.matrix().conj()).matmul(&yy);
    let s = sqrt_psd(rho.matrix()).expect("density matrices are PSD");
    let r = s.matmul(&flipped).matmul(&s).hermitian_part();
    let e = herm_eig(&r).expect("Hermitian by construction");
    let floor = roundoff_floor(&e.values);
    let l: Vec<f64> = e
        .values
        .iter()
        .map(|&x| if x <= floor { 0.0 } else { x.sqrt() })
        .collect();
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Closed-form concurrence of `ρ̃(α, β)`.
pub fn concurrence_family(params: FamilyParams) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    if a < params.separability_boundary() {
        (3.0 * b * (1.0 - a) - (1.0 + a)) / 2.0
    } else {
        0.0
    }
}

/// Closed-form discord expression for `ρ̃(α, β)`, evaluated term by term.
///
/// The `α = 1` singularity is removable (the prefactor vanishes) and returns 0.
///
/// This expression is the discord obtained with a σ_z measurement. It equals the
/// optimized discord only where `|2p₁ - p₂ - p₃| ≥ |p₂ - p₃|`; elsewhere it is an
/// upper bound (compare [`discord_numeric`]).
pub fn discord_family(params: FamilyParams) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    if a >= 1.0 {
        return 0.0;
    }
    // c · log2(c' · x) with the convention 0 · log 0 = 0
    let term = |coef: f64, arg: f64| if coef == 0.0 { 0.0 } else { coef * arg.log2() };
    let s = term(1.0 - b, (1.0 - a) * (1.0 - b)) - term(2.0 * (1.0 + b), (1.0 - a) * (1.0 + b))
        + term(1.0 + 3.0 * b, (1.0 - a) * (1.0 + 3.0 * b));
    (1.0 - a) / 4.0 * s
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

fn entropy_of_spectrum(values: &[f64]) -> f64 {
    -values.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// Von Neumann entropy in bits of a Hermitian PSD matrix.
pub fn von_neumann_entropy(m: &ComplexMatrix) -> f64 {
    let e = herm_eig(&m.hermitian_part()).expect("Hermitian input");
    entropy_of_spectrum(&e.values)
}

/// Entropy of a 2×2 Hermitian PSD matrix from its closed-form eigenvalues.
fn qubit_entropy(m: &ComplexMatrix) -> f64 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    entropy_of_spectrum(&[mean + rad, mean - rad])
}

/// `S(ρ_A) + S(ρ_B) - S(ρ_AB)`.
pub fn mutual_information(rho: &DensityMatrix) -> f64 {
    assert_two_qubit(rho);
    let m = rho.matrix();
    let ra = partial_trace_second(m, 2, 2).expect("4x4");
    let rb = partial_trace_first(m, 2, 2).expect("4x4");
    qubit_entropy(&ra) + qubit_entropy(&rb) - von_neumann_entropy(m)
}

/// `Σ_k p_k S(ρ_A|k)` after a projective measurement of the second qubit
/// along the Bloch direction `(θ, φ)`.
fn measured_conditional_entropy(rho: &ComplexMatrix, theta: f64, phi: f64) -> f64 {
    let (s, c) = (0.5 * theta).sin_cos();
    let e = C64::from_polar(1.0, phi);
    let dirs = [[C64::new(c, 0.0), e * s], [-e.conj() * s, C64::new(c, 0.0)]];
    let mut total = 0.0;
    for n in dirs {
        // (ρ_A|k)[a, a'] = Σ_{b,b'} n̄_b ρ[(a,b),(a',b')] n_b'
        let mut cond = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for ap in 0..2 {
                let mut acc = ZERO;
                for b in 0..2 {
                    for bp in 0..2 {
                        acc += n[b].conj() * rho[(2 * a + b, 2 * ap + bp)] * n[bp];
                    }
                }
                cond[(a, ap)] = acc;
            }
        }
        let p = (cond[(0, 0)] + cond[(1, 1)]).re;
        if p > 1e-15 {
            total += p * qubit_entropy(&cond.scale_real(1.0 / p));
        }
    }
    total
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Quantum discord by direct optimization over projective measurements on
/// the second qubit: `I(ρ) - max_Π J(ρ|Π)`.
///
/// The measurement direction is searched on a `θ × φ` grid of about
/// `angular_resolution` points, then refined by alternating golden-section
/// line searches in the best cell.
pub fn discord_numeric(rho: &DensityMatrix, angular_resolution: usize) -> f64 {
    assert_two_qubit(rho);
    let m = rho.matrix();
    let res = angular_resolution.max(MIN_ANGULAR_RESOLUTION);
    let n_theta = ((res as f64 / 2.0).sqrt().ceil() as usize).max(4);
    let n_phi = (res / n_theta).max(4);

    let f = |t: f64, p: f64| measured_conditional_entropy(m, t, p);
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..n_theta {
        let t = PI * i as f64 / (n_theta - 1) as f64;
        for k in 0..n_phi {
            let p = 2.0 * PI * k as f64 / n_phi as f64;
            let v = f(t, p);
            if v < best.2 {
                best = (t, p, v);
            }
        }
    }

    let (mut t, mut p, mut v) = best;
    let dt = PI / (n_theta - 1) as f64;
    let dp = 2.0 * PI / n_phi as f64;
    for _ in 0..6 {
        let (nt, vt) = golden_section_min(|x| f(x, p), (t - dt).max(0.0), (t + dt).min(PI), 1e-9);
        if vt < v {
            t = nt;
            v = vt;
        }
        let (np, vp) = golden_section_min(|x| f(t, x), p - dp, p + dp, 1e-9);
        if vp < v {
            p = np;
            v = vp;
        }
    }

    let rb = partial_trace_first(m, 2, 2).expect("4x4");
    // D = I - (S_A - min Σ p S_A|k) = S_B - S_AB + min Σ p S_A|k
    (qubit_entropy(&rb) - von_neumann_entropy(m) + v).max(0.0)
}

/// Transpose of the second qubit's indices.
pub fn partial_transpose(m: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(m.shape(), (4, 4));
    ComplexMatrix::from_fn(4, 4, |r, c| {
        let (a, b) = (r / 2, r % 2);
        let (ap, bp) = (c / 2, c % 2);
        m[(2 * a + bp, 2 * ap + b)]
    })
}

/// Peres–Horodecki test; exact for two qubits.
pub fn is_ppt_separable(rho: &DensityMatrix) -> bool {
    assert_two_qubit(rho);
    let pt = partial_transpose(rho.matrix());
    let e = herm_eig(&pt).expect("partial transpose stays Hermitian");
    e.values.last().copied().unwrap_or(0.0) >= -PPT_TOL
}
