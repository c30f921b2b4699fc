#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use steerlab::linalg::{ComplexMatrix, C64};
use steerlab::metrics::{family_probabilities, FamilyParams};
use steerlab::protocol::OrthonormalBasis;
use steerlab::{DensityMatrix, PureState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| gaussian_c64(rng))
}

/// Q factor of a Gaussian complex matrix (modified Gram-Schmidt).
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| a.column(c)).collect();
    for k in 0..n {
        for j in 0..k {
            let (done, rest) = cols.split_at_mut(k);
            let q = &done[j];
            let proj: C64 = q.iter().zip(&rest[0]).map(|(x, y)| x.conj() * y).sum();
            for (x, y) in rest[0].iter_mut().zip(q) {
                *x -= proj * y;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut cols[k] {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}

pub fn random_basis<R: Rng>(rng: &mut R) -> OrthonormalBasis {
    OrthonormalBasis::from_columns(&random_unitary(rng, 4)).unwrap()
}

pub fn random_pure<R: Rng>(rng: &mut R, n: usize) -> PureState {
    PureState::normalized((0..n).map(|_| gaussian_c64(rng)).collect()).unwrap()
}

/// Uniform point on the simplex with every weight above `floor`.
pub fn random_simplex<R: Rng>(rng: &mut R, floor: f64) -> [f64; 4] {
    loop {
        let e: [f64; 4] = std::array::from_fn(|_| -rng.random::<f64>().max(1e-300).ln());
        let s: f64 = e.iter().sum();
        let p = e.map(|x| x / s);
        if p.iter().all(|&x| x > floor) {
            return p;
        }
    }
}

/// Random full-rank-ish mixed state `A A† / Tr`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> DensityMatrix {
    let a = random_matrix(rng, n);
    let m = a.matmul(&a.adjoint());
    let t = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / t).hermitian_part()).unwrap()
}

/// Luo's closed form for Bell-diagonal states, an independent discord route.
///
/// With `p₁ = p₄` the family is Bell-diagonal with weights `(p₁, p₁, p₂, p₃)` on
/// `(Φ⁺, Φ⁻, Ψ⁺, Ψ⁻)`.
pub fn luo_discord(params: FamilyParams) -> f64 {
    let [p1, p2, p3, p4] = family_probabilities(params);
    let cz = p1 + p4 - p2 - p3;
    let cx = p2 - p3;
    let cy = p2 - p3;
    let lam = [
        (1.0 - cx - cy - cz) / 4.0,
        (1.0 - cx + cy + cz) / 4.0,
        (1.0 + cx - cy + cz) / 4.0,
        (1.0 + cx + cy - cz) / 4.0,
    ];
    let xlog = |x: f64| if x <= 0.0 { 0.0 } else { x * x.log2() };
    let c = cx.abs().max(cy.abs()).max(cz.abs());
    let mutual = 2.0 + lam.iter().map(|&l| xlog(l)).sum::<f64>();
    let classical = (xlog(1.0 - c) + xlog(1.0 + c)) / 2.0;
    mutual - classical
}
