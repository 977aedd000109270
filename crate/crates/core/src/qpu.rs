//! n-qubit quantum computer.
//!
//! Basis states are big-endian: `|k⟩ = |x₀⟩ ⊗ … ⊗ |x_{n-1}⟩` with `x₀` the most
//! significant bit of `k`. A quantum code is a sequence of unitaries applied to
//! an initial density; the outcome law is the diagonal of the final density.
//! Grover search is built from dense `2ⁿ x 2ⁿ` reflections.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{gates, kron_all, CMatrix, C64, ONE, ZERO};
use crate::measure::{DiscreteLaw, Outcome};
use crate::random::rng_stream;
use crate::states::{DensityMatrix, PureState};

/// Tolerance for `U†U = I` on code members.
pub const UNITARY_TOL: f64 = 1e-9;
/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 12;

fn check_qubits(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Domain(format!("number of qubits must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(1 << n)
}

/// Computational basis vector `|k⟩` of `n` qubits.
pub fn basis_ket(n: usize, k: usize) -> Result<PureState> {
    let dim = check_qubits(n)?;
    if k >= dim {
        return Err(Error::Domain(format!("basis index {k} out of range for {n} qubits")));
    }
    let mut v = vec![ZERO; dim];
    v[k] = ONE;
    PureState::new(v)
}

/// Bits of `k`, most significant first.
pub fn bits(n: usize, k: usize) -> Vec<u8> {
    (0..n).rev().map(|s| ((k >> s) & 1) as u8).collect()
}

/// `H^{⊗n}`.
pub fn hadamard_layer(n: usize) -> Result<CMatrix> {
    check_qubits(n)?;
    Ok(kron_all(&vec![gates::hadamard(); n]))
}

/// Finite sequence `U₀ = I, U₁, …, U_ℓ` of unitaries on `n` qubits.
#[derive(Debug, Clone)]
pub struct QuantumCode {
    n_qubits: usize,
    unitaries: Vec<CMatrix>,
}

impl QuantumCode {
    pub fn new(n_qubits: usize, unitaries: Vec<CMatrix>) -> Result<Self> {
        let dim = check_qubits(n_qubits)?;
        if unitaries.is_empty() {
            return Err(Error::Configuration("a quantum code needs at least U₀ = I".into()));
        }
        for (index, u) in unitaries.iter().enumerate() {
            if u.shape() != (dim, dim) {
                return Err(Error::Shape(format!("member {index} is {}x{}, expected {dim}x{dim}", u.rows(), u.cols())));
            }
            let defect = u.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary { index, defect });
            }
        }
        let d0 = unitaries[0].max_abs_diff(&CMatrix::identity(dim));
        if d0 > UNITARY_TOL {
            return Err(Error::Configuration(format!("U₀ must be the identity (defect {d0:.3e})")));
        }
        Ok(QuantumCode { n_qubits, unitaries })
    }

    /// `U₀ = I` followed by the given members.
    pub fn from_steps(n_qubits: usize, steps: Vec<CMatrix>) -> Result<Self> {
        let dim = check_qubits(n_qubits)?;
        let mut us = vec![CMatrix::identity(dim)];
        us.extend(steps);
        Self::new(n_qubits, us)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }
}

/// `ρ_ℓ = U_ℓ ⋯ U₀ ρ₀ U₀† ⋯ U_ℓ†`.
pub fn run_code(code: &QuantumCode, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let dim = 1 << code.n_qubits;
    if rho0.dim() != dim {
        return Err(Error::Shape(format!("{}-qubit code on a state of dimension {}", code.n_qubits, rho0.dim())));
    }
    let mut rho = rho0.matrix().clone();
    for u in &code.unitaries[1..] {
        rho = rho.conjugate_by(u);
    }
    DensityMatrix::new(rho)
}

/// `p_k = ⟨k|ρ|k⟩` over `k ∈ 0..2ⁿ`.
pub fn measure_law(rho: &DensityMatrix) -> Result<DiscreteLaw> {
    let dim = rho.dim();
    if !dim.is_power_of_two() {
        return Err(Error::Shape(format!("dimension {dim} is not a power of two")));
    }
    let probs = rho.matrix().diagonal().iter().map(|z| z.re.max(0.0)).collect();
    DiscreteLaw::new((0..dim).map(Outcome::Index).collect(), probs)
}

/// Counts per outcome position of a sampled law.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    pub counts: BTreeMap<usize, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotResult {
    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn frequency(&self, k: usize) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.count(k) as f64 / self.shots as f64
        }
    }

    /// Pearson statistic `Σ (c_k - N p_k)² / (N p_k)` over outcomes with `p_k > 0`.
    pub fn chi_squared(&self, law: &DiscreteLaw) -> f64 {
        let n = self.shots as f64;
        law.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| {
                let e = n * p;
                (self.count(k) as f64 - e).powi(2) / e
            })
            .sum()
    }
}

/// Inverse-CDF sampling from the stream `(seed, 0)`.
pub fn sample(law: &DiscreteLaw, shots: u64, seed: u64) -> ShotResult {
    let mut r = rng_stream(seed, 0);
    let counts = sample_with(law, shots, &mut r);
    ShotResult { counts, shots, seed }
}

pub fn sample_with<R: Rng + ?Sized>(law: &DiscreteLaw, shots: u64, r: &mut R) -> BTreeMap<usize, u64> {
    let mut cdf = Vec::with_capacity(law.len());
    let mut acc = 0.0;
    for p in &law.probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let last = law.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = r.random::<f64>() * acc;
        let k = cdf.partition_point(|c| *c <= u).min(last);
        *counts.entry(k).or_insert(0) += 1;
    }
    counts
}

/// Grover search for the marked element `a` among `2ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroverSpec {
    pub n_qubits: usize,
    pub marked: usize,
}

impl GroverSpec {
    pub fn new(n_qubits: usize, marked: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::Domain(format!("Grover search needs n >= 2, got {n_qubits}")));
        }
        let dim = check_qubits(n_qubits)?;
        if marked >= dim {
            return Err(Error::Domain(format!("marked element {marked} out of range for {n_qubits} qubits")));
        }
        Ok(GroverSpec { n_qubits, marked })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `θ` with `sin θ = 2^{-n/2}`.
    pub fn theta(&self) -> f64 {
        (self.dim() as f64).sqrt().recip().asin()
    }

    /// `sin²((2j+1)θ)`.
    pub fn closed_form(&self, j: usize) -> f64 {
        ((2 * j + 1) as f64 * self.theta()).sin().powi(2)
    }
}

/// `W₁ = I - 2|a⟩⟨a|`, `W₂ = 2|Ψ₁⟩⟨Ψ₁| - I` and `U₂ = W₂ W₁`.
#[derive(Debug, Clone)]
pub struct GroverOperators {
    pub w1: CMatrix,
    pub w2: CMatrix,
    pub u2: CMatrix,
}

/// Uniform superposition `Ψ₁ = H^{⊗n}|0…0⟩`.
pub fn uniform_ket(n: usize) -> Vec<C64> {
    let dim = 1usize << n;
    vec![ONE / (dim as f64).sqrt(); dim]
}

pub fn grover_operators(spec: &GroverSpec) -> GroverOperators {
    let n = spec.dim();
    let a = spec.marked;
    let psi = 1.0 / (n as f64).sqrt();
    let mut w1 = CMatrix::identity(n);
    w1[(a, a)] = -ONE;
    let w2 = CMatrix::from_fn(n, n, |i, j| C64::from(2.0 * psi * psi - if i == j { 1.0 } else { 0.0 }));
    // W₂W₁ = W₂ - 2 W₂|a⟩⟨a|: only column a changes sign
    let mut u2 = w2.clone();
    for i in 0..n {
        u2[(i, a)] = -u2[(i, a)];
    }
    GroverOperators { w1, w2, u2 }
}

/// Success probabilities `p_j = |⟨a|U₂^j H^{⊗n}|0…0⟩|²` for `j = 0..=k`.
///
/// The state stays pure, so `ρ_j = |ψ_j⟩⟨ψ_j|` is carried as its ket and
/// advanced by the dense `U₂`.
pub fn grover_run(spec: &GroverSpec, k: usize) -> Vec<f64> {
    grover_kets(spec, k).iter().map(|psi| psi[spec.marked].norm_sqr()).collect()
}

/// Kets `ψ_0 … ψ_k` of the Grover iteration, starting from `ψ_0 = Ψ₁`.
pub fn grover_kets(spec: &GroverSpec, k: usize) -> Vec<Vec<C64>> {
    let ops = grover_operators(spec);
    let mut psi = uniform_ket(spec.n_qubits);
    let mut out = Vec::with_capacity(k + 1);
    out.push(psi.clone());
    for _ in 0..k {
        psi = ops.u2.matvec(&psi);
        out.push(psi.clone());
    }
    out
}

/// The code `I, H^{⊗n}, U₂, …, U₂` (`k` copies of `U₂`).
pub fn grover_code(spec: &GroverSpec, k: usize) -> QuantumCode {
    let ops = grover_operators(spec);
    let mut steps = vec![hadamard_layer(spec.n_qubits).expect("validated spec")];
    steps.extend(std::iter::repeat_n(ops.u2, k));
    QuantumCode::from_steps(spec.n_qubits, steps).expect("Grover operators are unitary")
}

/// `round(π/(4θ) - ½)`, the iteration count maximizing `sin²((2k+1)θ)`.
pub fn grover_optimal_k(n: usize) -> Result<usize> {
    let spec = GroverSpec::new(n, 0)?;
    Ok((std::f64::consts::PI / (4.0 * spec.theta()) - 0.5).round().max(0.0) as usize)
}

/// Growth claim `p_k > 2^{2k} p_0` at `k = ⌈n/2⌉`, compared with simulation.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthClaim {
    pub n: usize,
    pub k: usize,
    pub claimed_bound: f64,
    pub simulated: f64,
    pub holds: bool,
}

pub fn growth_claim(n: usize) -> Result<GrowthClaim> {
    let spec = GroverSpec::new(n, 0)?;
    let k = n.div_ceil(2);
    let simulated = *grover_run(&spec, k).last().expect("k + 1 entries");
    let claimed_bound = 4f64.powi(k as i32) / spec.dim() as f64;
    Ok(GrowthClaim { n, k, claimed_bound, simulated, holds: simulated > claimed_bound })
}
