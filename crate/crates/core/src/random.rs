//! Seeded random objects for tests, sweeps and demos.
//!
//! Every generator takes an explicit RNG; [`rng`] and [`rng_stream`] build the
//! counter-based ChaCha generator used throughout, so a `(seed, stream)` pair
//! reproduces a run bit for bit on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channels::KrausChannel;
use crate::matcore::{c, hermitian_eig, normalize, CMatrix, C64, HERM_TOL};
use crate::states::{DensityMatrix, PureState};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_stream(seed: u64, stream: u64) -> Rng64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gauss<R: Rng + ?Sized>(r: &mut R) -> f64 {
    r.sample(StandardNormal)
}

/// Complex Gaussian entry with unit variance.
pub fn complex_gauss<R: Rng + ?Sized>(r: &mut R) -> C64 {
    c(gauss(r), gauss(r)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix: i.i.d. complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, r: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gauss(r))
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, r: &mut R) -> CMatrix {
    random_matrix(n, n, r).hermitian_part()
}

/// Haar-random unitary via Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, r: &mut R) -> CMatrix {
    random_isometry(n, n, r)
}

/// Random `rows x cols` isometry (`cols <= rows`), orthonormal columns.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, r: &mut R) -> CMatrix {
    assert!(cols <= rows);
    let g = random_matrix(rows, cols, r);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = g.col(j);
        for _ in 0..2 {
            for u in &q {
                let p = crate::matcore::inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        q.push(normalize(&v).expect("Ginibre column is almost surely nonzero"));
    }
    CMatrix::from_fn(rows, cols, |i, j| q[j][i])
}

pub fn random_pure<R: Rng + ?Sized>(n: usize, r: &mut R) -> PureState {
    let v: Vec<C64> = (0..n).map(|_| complex_gauss(r)).collect();
    PureState::new(v).expect("Gaussian vector is almost surely nonzero")
}

/// Random density of the given rank (`G G† / tr`, `G` an `n x rank` Ginibre matrix).
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, r: &mut R) -> DensityMatrix {
    let g = random_matrix(n, rank.max(1), r);
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / t)).expect("Wishart matrix is a valid density")
}

/// Random point of the closed unit ball in R^3.
pub fn random_ball<R: Rng + ?Sized>(r: &mut R) -> [f64; 3] {
    loop {
        let p = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return p;
        }
    }
}

/// Random CPTP channel with `kraus` operators, from a random isometry
/// `C^in -> C^(kraus·out)` cut into blocks.
pub fn random_channel<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, kraus: usize, r: &mut R) -> KrausChannel {
    assert!(kraus * out_dim >= in_dim, "too few Kraus operators for an isometry");
    let v = random_isometry(kraus * out_dim, in_dim, r);
    let ops = (0..kraus).map(|k| v.block(k * out_dim, 0, out_dim, in_dim)).collect();
    KrausChannel::new(ops).expect("blocks of an isometry form a valid channel")
}

/// Random POVM on `C^dim` with `outcomes` effects: `E_x = S^{-1/2} G_x S^{-1/2}`
/// with `G_x` random PSD and `S = Σ G_x`.
pub fn random_povm_effects<R: Rng + ?Sized>(dim: usize, outcomes: usize, r: &mut R) -> Vec<CMatrix> {
    let gs: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = random_matrix(dim, dim, r);
            &g * &g.adjoint()
        })
        .collect();
    let mut s = CMatrix::zeros(dim, dim);
    for g in &gs {
        s += g;
    }
    let inv_sqrt = hermitian_eig(&s, HERM_TOL).expect("sum of PSD is Hermitian").apply_fn(|l| 1.0 / l.sqrt());
    gs.iter().map(|g| (&(&inv_sqrt * g) * &inv_sqrt).hermitian_part()).collect()
}
