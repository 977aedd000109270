//! One-mode interacting Fock space and orthogonal polynomials.
//!
//! A Jacobi sequence `(ω_n, α_n)` defines creation, annihilation and
//! preservation operators on the levels `e₀, e₁, …`; the field operator
//! `Z = B⁺ + B° + B⁻` has vacuum moments equal to the moments of the measure
//! whose orthogonal polynomials obey `x P_n = P_{n+1} + α_{n+1} P_n + ω_n P_{n-1}`.
//!
//! `ω₁` is the first recurrence coefficient; the normalization `ω₀ = 1` never
//! enters a matrix.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, CMatrix, C64, HERM_TOL};

/// Largest measure accepted by [`jacobi_from_measure`].
pub const MAX_ATOMS: usize = 64;

/// `ω₁, ω₂, …` and `α₁, α₂, …` with an optional finite-type cutoff `m₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiSequence {
    omega: Vec<f64>,
    alpha: Vec<f64>,
    m0: Option<usize>,
}

impl JacobiSequence {
    /// Validates `ω ≥ 0` and that a zero `ω_{m+1}` is followed by zeros only;
    /// `m₀` is then the index `m`.
    pub fn new(omega: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if let Some(w) = omega.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!("Jacobi sequence has entry ω = {w}")));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("Jacobi sequence has a non-finite α".into()));
        }
        let m0 = omega.iter().position(|w| *w == 0.0);
        if let Some(m) = m0 {
            if omega[m..].iter().any(|w| *w != 0.0) {
                return Err(Error::Domain(format!("ω_{} = 0 but a later ω is positive", m + 1)));
            }
            if alpha.iter().skip(m + 1).any(|a| *a != 0.0) {
                return Err(Error::Domain(format!("finite type m₀ = {m} but α_j ≠ 0 for some j > {}", m + 1)));
            }
        }
        Ok(JacobiSequence { omega, alpha, m0 })
    }

    /// Sequence of a measure with `atoms` support points: `m₀ = atoms - 1`,
    /// known even if the stored entries stop earlier.
    fn of_finite_measure(omega: Vec<f64>, alpha: Vec<f64>, atoms: usize) -> Self {
        let m0 = if omega.len() >= atoms - 1 { Some(atoms - 1) } else { None };
        JacobiSequence { omega, alpha, m0 }
    }

    /// `ω₁, ω₂, …` as stored.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// `α₁, α₂, …` as stored.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Finite-type cutoff, when the stored entries reach it.
    pub fn m0(&self) -> Option<usize> {
        self.m0
    }

    /// `ω_n` for `n >= 1`; zero past a finite-type cutoff.
    pub fn omega_at(&self, n: usize) -> Result<f64> {
        assert!(n >= 1);
        match self.omega.get(n - 1) {
            Some(w) => Ok(*w),
            None if self.m0.is_some() => Ok(0.0),
            None => Err(Error::Domain(format!("Jacobi sequence has no ω_{n} (only {} entries)", self.omega.len()))),
        }
    }

    /// `α_n` for `n >= 1`; zero past `m₀ + 1`.
    pub fn alpha_at(&self, n: usize) -> Result<f64> {
        assert!(n >= 1);
        match (self.alpha.get(n - 1), self.m0) {
            (Some(a), _) => Ok(*a),
            (None, Some(m)) if n > m + 1 => Ok(0.0),
            _ => Err(Error::Domain(format!("Jacobi sequence has no α_{n} (only {} entries)", self.alpha.len()))),
        }
    }

    /// `λ_n = ω₁ ⋯ ω_n`.
    pub fn lambda(&self, n: usize) -> Result<f64> {
        (1..=n).map(|k| self.omega_at(k)).product()
    }
}

/// `ω_n = Σ_{k<n} q^k` (Gauss q-numbers), `α ≡ 0`, for `n = 1..=len`.
///
/// A Jacobi sequence stays zero after its first zero, so `q = -1` gives
/// `(1, 0, 0, …)` although the q-numbers themselves alternate.
pub fn q_jacobi(q: f64, len: usize) -> Result<JacobiSequence> {
    if !(-1.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [-1, 1], got {q}")));
    }
    let mut omega: Vec<f64> = (1..=len).map(|n| (0..n).map(|k| q.powi(k as i32)).sum::<f64>()).collect();
    if let Some(m) = omega.iter().position(|w| *w == 0.0) {
        omega[m..].iter_mut().for_each(|w| *w = 0.0);
    }
    let mut js = JacobiSequence::new(omega, vec![0.0; len + 1])?;
    if q == -1.0 {
        js.m0 = Some(1);
    }
    Ok(js)
}

/// Truncated ladder operators on `e₀ … e_{N-1}`.
#[derive(Debug, Clone)]
pub struct LadderOps {
    pub create: CMatrix,
    pub annihilate: CMatrix,
    pub preserve: CMatrix,
    pub number: CMatrix,
}

impl LadderOps {
    pub fn trunc(&self) -> usize {
        self.number.rows()
    }

    /// `B⁺ + B° + B⁻`.
    pub fn field(&self) -> CMatrix {
        &(&self.create + &self.preserve) + &self.annihilate
    }
}

/// `B⁺ e_n = √ω_{n+1} e_{n+1}`, `B° e_n = α_{n+1} e_n`, `N e_n = n e_n`.
/// The top level `e_{N-1}` has no outgoing creation entry.
pub fn ladder_matrices(js: &JacobiSequence, trunc: usize) -> Result<LadderOps> {
    if trunc == 0 {
        return Err(Error::Domain("truncation must be at least 1".into()));
    }
    let mut create = CMatrix::zeros(trunc, trunc);
    for n in 0..trunc - 1 {
        create[(n + 1, n)] = C64::from(js.omega_at(n + 1)?.sqrt());
    }
    let alpha = (1..=trunc).map(|n| js.alpha_at(n)).collect::<Result<Vec<_>>>()?;
    let number: Vec<f64> = (0..trunc).map(|n| n as f64).collect();
    Ok(LadderOps {
        annihilate: create.adjoint(),
        create,
        preserve: CMatrix::diag_real(&alpha),
        number: CMatrix::diag_real(&number),
    })
}

/// Vacuum moments `m_k = ⟨e₀|Z^k|e₀⟩`, `k = 1..=max_order`, computed at
/// truncation `⌈max_order/2⌉ + 1` where they are exact.
pub fn field_moments(js: &JacobiSequence, max_order: usize) -> Result<Vec<f64>> {
    let trunc = max_order.div_ceil(2) + 1;
    let z = ladder_matrices(js, trunc)?.field();
    let mut v = vec![C64::from(0.0); trunc];
    v[0] = C64::from(1.0);
    let mut out = Vec::with_capacity(max_order);
    for _ in 0..max_order {
        v = z.matvec(&v);
        out.push(v[0].re);
    }
    Ok(out)
}

/// Finitely supported probability measure with distinct, ascending atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson")]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct MeasureJson {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<MeasureJson> for DiscreteMeasure {
    type Error = Error;

    fn try_from(j: MeasureJson) -> Result<Self> {
        DiscreteMeasure::new(j.atoms, j.weights)
    }
}

impl DiscreteMeasure {
    /// Sorts the atoms, rejects duplicates and non-positive weights, and
    /// requires the weights to sum to 1 within `1e-9` (then renormalizes).
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Shape(format!("{} atoms with {} weights", atoms.len(), weights.len())));
        }
        if atoms.iter().chain(&weights).any(|x| !x.is_finite()) {
            return Err(Error::Domain("measure has non-finite entries".into()));
        }
        if let Some(w) = weights.iter().find(|w| **w <= 0.0) {
            return Err(Error::Domain(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}")));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain(format!("duplicate atom {}", w[0].0)));
        }
        Ok(DiscreteMeasure {
            atoms: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn dirac(c: f64) -> Self {
        DiscreteMeasure { atoms: vec![c], weights: vec![1.0] }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `E_ν(x^k)`.
    pub fn moment(&self, k: usize) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(x, w)| w * x.powi(k as i32)).sum()
    }

    /// `max(max |Δatom|, max |Δweight|)` against another measure with the
    /// same number of atoms; infinite otherwise.
    pub fn distance(&self, other: &DiscreteMeasure) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.atoms
            .iter()
            .zip(&other.atoms)
            .chain(self.weights.iter().zip(&other.weights))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn wdot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Lanczos on `diag(atoms)` from `√weights`, with full reorthogonalization.
/// Returns `(α₁…α_{n+1}, ω₁…ω_n)`.
fn lanczos(nu: &DiscreteMeasure, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x = &nu.atoms;
    let mut qs: Vec<Vec<f64>> = vec![nu.weights.iter().map(|w| w.sqrt()).collect()];
    let mut alpha = Vec::with_capacity(n + 1);
    let mut omega = Vec::with_capacity(n);
    for k in 0..=n {
        let q = &qs[k];
        let mut r: Vec<f64> = q.iter().zip(x).map(|(a, b)| a * b).collect();
        let a = wdot(q, &r);
        alpha.push(a);
        if k == n {
            break;
        }
        for _ in 0..2 {
            for prev in &qs {
                let c = wdot(prev, &r);
                r.iter_mut().zip(prev).for_each(|(ri, pi)| *ri -= c * pi);
            }
        }
        let beta = wdot(&r, &r).sqrt();
        omega.push(beta * beta);
        qs.push(r.iter().map(|v| v / beta).collect());
    }
    (alpha, omega)
}

/// Recurrence coefficients `α₁…α_{n+1}`, `ω₁…ω_n` of the monic orthogonal
/// polynomials of `ν`. A measure on `m` atoms has finite type `m₀ = m - 1`,
/// so `n` may not exceed it.
pub fn jacobi_from_measure(nu: &DiscreteMeasure, n: usize) -> Result<JacobiSequence> {
    if nu.len() > MAX_ATOMS {
        return Err(Error::Domain(format!("measures are limited to {MAX_ATOMS} atoms, got {}", nu.len())));
    }
    let m0 = nu.len() - 1;
    if n > m0 {
        return Err(Error::FiniteType { m0, requested: n });
    }
    let (alpha, omega) = lanczos(nu, n);
    Ok(JacobiSequence::of_finite_measure(omega, alpha, nu.len()))
}

/// Real symmetric tridiagonal matrix with diagonal `α` and off-diagonal `√ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::Shape(format!("{} diagonal and {} off-diagonal entries", diag.len(), offdiag.len())));
        }
        if offdiag.iter().any(|b| !(*b >= 0.0)) || diag.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("Jacobi matrix needs finite α and √ω >= 0".into()));
        }
        Ok(JacobiMatrix { diag, offdiag })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.size();
        CMatrix::from_fn(n, n, |i, j| {
            C64::from(if i == j {
                self.diag[i]
            } else if i == j + 1 {
                self.offdiag[j]
            } else if j == i + 1 {
                self.offdiag[i]
            } else {
                0.0
            })
        })
    }
}

/// The leading `size x size` block: diagonal `α₁…α_size`, off-diagonal
/// `√ω₁…√ω_{size-1}`.
pub fn jacobi_matrix(js: &JacobiSequence, size: usize) -> Result<JacobiMatrix> {
    if size == 0 {
        return Err(Error::Domain("Jacobi matrix size must be at least 1".into()));
    }
    let diag = (1..=size).map(|n| js.alpha_at(n)).collect::<Result<_>>()?;
    let offdiag = (1..size).map(|n| js.omega_at(n).map(f64::sqrt)).collect::<Result<_>>()?;
    JacobiMatrix::new(diag, offdiag)
}

/// Spectral measure of `e₀`: atoms are eigenvalues, weights `|⟨e₀|v⟩|²`.
/// Atoms not seen from `e₀` (zero weight) are dropped.
pub fn measure_from_jacobi(jm: &JacobiMatrix) -> Result<DiscreteMeasure> {
    let e = hermitian_eig(&jm.to_matrix(), HERM_TOL)?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (k, l) in e.eigenvalues.iter().enumerate() {
        let w = e.eigenvectors[(0, k)].norm_sqr();
        if w > 1e-14 {
            atoms.push(*l);
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    DiscreteMeasure::new(atoms, weights)
        .map_err(|err| Error::Numerical(format!("spectral measure is degenerate: {err}")))
}

/// Orthonormal polynomials `Q_0 … Q_n` of `ν` at its atoms, from a
/// reorthogonalized Stieltjes procedure in double-double arithmetic. Pointwise
/// evaluation is ill-conditioned for clustered atoms (rounding the recurrence
/// data to f64 alone can cost 1e-7 in orthonormality), so it runs in extended
/// precision.
fn orthonormal_at_atoms(nu: &DiscreteMeasure, n: usize) -> Vec<Vec<TwoFloat>> {
    let x: Vec<TwoFloat> = nu.atoms().iter().map(|&a| TwoFloat::from(a)).collect();
    let w: Vec<TwoFloat> = nu.weights().iter().map(|&a| TwoFloat::from(a)).collect();
    let m = x.len();
    let dot = |a: &[TwoFloat], b: &[TwoFloat]| {
        (0..m).fold(TwoFloat::from(0.0), |s, i| s + w[i] * a[i] * b[i])
    };
    let first: Vec<TwoFloat> = vec![TwoFloat::from(1.0); m];
    let norm = dot(&first, &first).sqrt();
    let mut q: Vec<Vec<TwoFloat>> = vec![first.iter().map(|v| *v / norm).collect()];
    for k in 0..n {
        let mut r: Vec<TwoFloat> = (0..m).map(|i| x[i] * q[k][i]).collect();
        for _ in 0..2 {
            for prev in &q {
                let c = dot(&r, prev);
                for i in 0..m {
                    r[i] -= c * prev[i];
                }
            }
        }
        let norm = dot(&r, &r).sqrt();
        q.push(r.iter().map(|v| *v / norm).collect());
    }
    q
}

/// `‖M_x - (C⁺ + C° + C⁻)‖_F` where `M_x[i,j] = ⟨Q_i, x Q_j⟩_ν` on the
/// orthonormal polynomials `Q_0 … Q_n` of `ν` (computed independently in
/// extended precision) and the C-parts are the ladder matrices of the
/// extracted Jacobi sequence.
pub fn quantum_decomposition_check(nu: &DiscreteMeasure, n: usize) -> Result<f64> {
    let js = jacobi_from_measure(nu, n)?;
    let q = orthonormal_at_atoms(nu, n);
    let x = nu.atoms();
    let w = nu.weights();
    let mx = CMatrix::from_fn(n + 1, n + 1, |i, j| {
        let s = (0..x.len()).fold(TwoFloat::from(0.0), |s, a| s + TwoFloat::from(w[a]) * x[a] * q[i][a] * q[j][a]);
        C64::from(f64::from(s))
    });
    let z = ladder_matrices(&js, n + 1)?.field();
    Ok((&mx - &z).frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;
    use rand::Rng;

    /// Weighted Motzkin path sum: up steps `e_h → e_{h+1}` and down steps
    /// weigh `√ω_{h+1}` each, level steps weigh `α_{h+1}`.
    fn path_moment(js: &JacobiSequence, k: usize) -> f64 {
        fn walk(js: &JacobiSequence, h: usize, left: usize) -> f64 {
            if left == 0 {
                return if h == 0 { 1.0 } else { 0.0 };
            }
            if h > left {
                return 0.0;
            }
            let mut s = js.alpha_at(h + 1).unwrap() * walk(js, h, left - 1);
            s += js.omega_at(h + 1).unwrap().sqrt() * walk(js, h + 1, left - 1) * if h < left { 1.0 } else { 0.0 };
            if h > 0 {
                s += js.omega_at(h).unwrap().sqrt() * walk(js, h - 1, left - 1);
            }
            s
        }
        walk(js, 0, k)
    }

    fn double_factorial(n: i64) -> f64 {
        (1..=n).rev().step_by(2).map(|k| k as f64).product()
    }

    fn catalan(n: u64) -> f64 {
        let mut c = 1.0;
        for k in 0..n {
            c = c * 2.0 * (2 * k + 1) as f64 / (k + 2) as f64;
        }
        c
    }

    fn random_measure(r: &mut impl Rng, atoms: usize) -> DiscreteMeasure {
        let mut xs: Vec<f64> = Vec::new();
        while xs.len() < atoms {
            let x: f64 = r.random_range(-3.0..3.0);
            if xs.iter().all(|y| (x - y).abs() > 0.05) {
                xs.push(x);
            }
        }
        let w: Vec<f64> = (0..atoms).map(|_| r.random_range(0.1..1.0)).collect();
        let t: f64 = w.iter().sum();
        DiscreteMeasure::new(xs, w.iter().map(|v| v / t).collect()).unwrap()
    }

    #[test]
    fn q_jacobi_examples() {
        assert_eq!(q_jacobi(1.0, 4).unwrap().omega(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(q_jacobi(0.0, 4).unwrap().omega(), &[1.0, 1.0, 1.0, 1.0]);
        let f = q_jacobi(-1.0, 4).unwrap();
        assert_eq!(f.omega(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.m0(), Some(1));
        assert_eq!(f.omega_at(9).unwrap(), 0.0);
        let h = q_jacobi(0.5, 3).unwrap();
        assert_eq!(h.omega(), &[1.0, 1.5, 1.75]);
        assert_eq!(q_jacobi(1.0, 4).unwrap().lambda(3).unwrap(), 6.0);
        assert!(q_jacobi(1.5, 3).is_err());
        assert!(JacobiSequence::new(vec![1.0, 0.0, 2.0], vec![]).is_err());
        assert!(JacobiSequence::new(vec![-1.0], vec![]).is_err());
    }

    #[test]
    fn ladder_examples() {
        let free = ladder_matrices(&q_jacobi(0.0, 3).unwrap(), 3).unwrap();
        let shift = CMatrix::from_real_rows(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(free.create, shift);
        assert_eq!(free.annihilate, shift.transpose());
        assert_eq!(free.number, CMatrix::diag_real(&[0.0, 1.0, 2.0]));

        let fermi = ladder_matrices(&q_jacobi(-1.0, 1).unwrap(), 2).unwrap();
        assert_eq!(fermi.create, CMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]));
        // the paper's qubit form uses the reversed level order: swap conjugation
        let paper = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let swap = crate::matcore::gates::pauli_x();
        assert_eq!(fermi.create.conjugate_by(&swap), paper);

        let bose = ladder_matrices(&q_jacobi(1.0, 4).unwrap(), 5).unwrap();
        for n in 0..4 {
            assert!((bose.create[(n + 1, n)].re - ((n + 1) as f64).sqrt()).abs() < 1e-15);
        }
        assert!(ladder_matrices(&q_jacobi(1.0, 2).unwrap(), 5).is_err());
    }

    #[test]
    fn ladder_relations() {
        for q in [-1.0, -0.5, 0.0, 0.3, 1.0] {
            let js = q_jacobi(q, 8).unwrap();
            let t = 6;
            let l = ladder_matrices(&js, t).unwrap();
            let pm = &l.create * &l.annihilate;
            let mp = &l.annihilate * &l.create;
            let mut up = vec![0.0];
            up.extend((1..t).map(|n| js.omega_at(n).unwrap()));
            assert!(pm.max_abs_diff(&CMatrix::diag_real(&up)) < 1e-14);
            // B⁻B⁺ = diag(ω₁, ω₂, …) except at the truncated top level
            for n in 0..t - 1 {
                assert!((mp[(n, n)].re - js.omega_at(n + 1).unwrap()).abs() < 1e-14);
            }
            // [B⁻, B⁺] = diag(ω_{n+1} - ω_n) and the q-relation B⁻B⁺ - qB⁺B⁻ = I
            let comm = &mp - &pm;
            let qrel = &mp - &pm.scale_real(q);
            let top = js.m0().map_or(t - 1, |m| m.min(t - 1));
            for n in 0..top {
                let gamma = js.omega_at(n + 1).unwrap() - if n == 0 { 0.0 } else { js.omega_at(n).unwrap() };
                assert!((comm[(n, n)].re - gamma).abs() < 1e-14);
                assert!((qrel[(n, n)].re - 1.0).abs() < 1e-14);
            }
            // (B⁺)ⁿ e₀ = √λ_n e_n
            let mut v = vec![C64::from(0.0); t];
            v[0] = C64::from(1.0);
            for n in 1..t {
                v = l.create.matvec(&v);
                assert!((v[n].re - js.lambda(n).unwrap().sqrt()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn moment_examples() {
        let close = |m: Vec<f64>, e: [f64; 8]| m.iter().zip(e).all(|(a, b)| (a - b).abs() < 1e-10);
        let m = field_moments(&q_jacobi(1.0, 8).unwrap(), 8).unwrap();
        assert!(close(m, [0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0]));
        let m = field_moments(&q_jacobi(0.0, 8).unwrap(), 8).unwrap();
        assert!(close(m, [0.0, 1.0, 0.0, 2.0, 0.0, 5.0, 0.0, 14.0]));
        let m = field_moments(&q_jacobi(-1.0, 1).unwrap(), 8).unwrap();
        assert_eq!(m, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn moments_match_path_oracle() {
        for q in [-1.0, 0.0, 1.0] {
            let js = q_jacobi(q, 8).unwrap();
            let m = field_moments(&js, 12).unwrap();
            for k in 1..=12 {
                let oracle = path_moment(&js, k);
                assert!((m[k - 1] - oracle).abs() < 1e-10);
                let closed = match (q as i32, k % 2) {
                    (_, 1) => 0.0,
                    (1, _) => double_factorial(k as i64 - 1),
                    (0, _) => catalan(k as u64 / 2),
                    _ => 1.0,
                };
                assert!((m[k - 1] - closed).abs() < 1e-10 * closed.max(1.0), "q={q} k={k}");
            }
        }
        let js = JacobiSequence::new(vec![0.7, 1.3, 2.0, 0.4, 1.1], vec![0.2, -0.5, 0.3, 0.0, 1.0, -0.2]).unwrap();
        let m = field_moments(&js, 9).unwrap();
        for k in 1..=9 {
            assert!((m[k - 1] - path_moment(&js, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_from_measure_examples() {
        let b = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let js = jacobi_from_measure(&b, 1).unwrap();
        assert!(js.alpha()[0].abs() < 1e-15 && (js.omega()[0] - 1.0).abs() < 1e-15);
        assert_eq!(js.m0(), Some(1));
        assert_eq!(jacobi_from_measure(&b, 2), Err(Error::FiniteType { m0: 1, requested: 2 }));

        let d = jacobi_from_measure(&DiscreteMeasure::dirac(2.5), 0).unwrap();
        assert_eq!(d.alpha(), &[2.5]);
        assert_eq!(d.m0(), Some(0));

        let u = DiscreteMeasure::new(vec![-1.0, 0.0, 1.0], vec![1.0 / 3.0; 3]).unwrap();
        let js = jacobi_from_measure(&u, 2).unwrap();
        assert!(js.alpha().iter().all(|a| a.abs() < 1e-15));
        assert!((js.omega()[0] - 2.0 / 3.0).abs() < 1e-15);
        // monic oracle: P₂ = x² - 2/3, ‖P₂‖² = 2/9 · ... ω₂ = ‖P₂‖²/‖P₁‖²
        let p2: Vec<f64> = u.atoms().iter().map(|x| x * x - 2.0 / 3.0).collect();
        let n2: f64 = p2.iter().zip(u.weights()).map(|(p, w)| w * p * p).sum();
        assert!((js.omega()[1] - n2 / (2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn first_coefficients_are_mean_and_variance() {
        let mut r = rng(70);
        for _ in 0..20 {
            let nu = random_measure(&mut r, 6);
            let js = jacobi_from_measure(&nu, 3).unwrap();
            let mean = nu.moment(1);
            assert!((js.alpha()[0] - mean).abs() < 1e-12);
            assert!((js.omega()[0] - (nu.moment(2) - mean * mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_measures_have_zero_alpha() {
        let mut r = rng(71);
        for _ in 0..10 {
            let half = random_measure(&mut r, 4);
            let mut atoms: Vec<f64> = half.atoms().iter().map(|x| x.abs() + 0.1).collect();
            let mut w: Vec<f64> = half.weights().iter().map(|w| w / 2.0).collect();
            atoms.extend(atoms.clone().iter().map(|x| -x));
            w.extend(w.clone());
            let Ok(nu) = DiscreteMeasure::new(atoms, w) else { continue };
            let js = jacobi_from_measure(&nu, 7).unwrap();
            assert!(js.alpha().iter().all(|a| a.abs() < 1e-10));
            let m = field_moments(&js, 9).unwrap();
            assert!(m.iter().step_by(2).all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn moment_matching() {
        let mut r = rng(72);
        for atoms in 1..=8 {
            let nu = random_measure(&mut r, atoms);
            let n = atoms - 1;
            let js = jacobi_from_measure(&nu, n).unwrap();
            let m = field_moments(&js, 2 * n + 1).unwrap();
            for k in 1..=2 * n + 1 {
                let e = nu.moment(k);
                assert!((m[k - 1] - e).abs() < 1e-9 * e.abs().max(1.0), "atoms={atoms} k={k}");
            }
        }
    }

    #[test]
    fn jacobi_matrix_examples() {
        let jm = jacobi_matrix(&q_jacobi(0.0, 3).unwrap(), 2).unwrap();
        assert_eq!(jm.to_matrix(), CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let jm = jacobi_matrix(&q_jacobi(-1.0, 1).unwrap(), 2).unwrap();
        let e = hermitian_eig(&jm.to_matrix(), HERM_TOL).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15 && (e.eigenvalues[1] - 1.0).abs() < 1e-15);
        let js = JacobiSequence::new(vec![0.5, 2.0, 1.5], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = jacobi_matrix(&js, 4).unwrap().to_matrix();
        assert_eq!(m, m.transpose());
        assert_eq!(m[(3, 2)].re, 1.5f64.sqrt());
    }

    #[test]
    fn jacobi_matrix_is_multiplication_by_x() {
        let mut r = rng(73);
        let nu = random_measure(&mut r, 5);
        for n in 0..5 {
            assert!(quantum_decomposition_check(&nu, n).unwrap() < 1e-9);
        }
    }

    #[test]
    fn measure_from_jacobi_examples() {
        let d = measure_from_jacobi(&JacobiMatrix::new(vec![1.5], vec![]).unwrap()).unwrap();
        assert_eq!(d, DiscreteMeasure::dirac(1.5));
        let b = measure_from_jacobi(&JacobiMatrix::new(vec![0.0, 0.0], vec![1.0]).unwrap()).unwrap();
        assert!(b.distance(&DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()) < 1e-15);

        let mut r = rng(74);
        let diag: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
        let off: Vec<f64> = (0..4).map(|_| r.random_range(0.3..1.5)).collect();
        let jm = JacobiMatrix::new(diag, off).unwrap();
        let nu = measure_from_jacobi(&jm).unwrap();
        let back = jacobi_matrix(&jacobi_from_measure(&nu, 4).unwrap(), 5).unwrap();
        for (a, b) in back.diag.iter().chain(&back.offdiag).zip(jm.diag.iter().chain(&jm.offdiag)) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn favard_roundtrip() {
        let mut r = rng(75);
        for _ in 0..20 {
            let atoms = r.random_range(1..=16);
            let nu = random_measure(&mut r, atoms);
            let js = jacobi_from_measure(&nu, atoms - 1).unwrap();
            let back = measure_from_jacobi(&jacobi_matrix(&js, atoms).unwrap()).unwrap();
            assert!(nu.distance(&back) < 1e-8, "{atoms}: {}", nu.distance(&back));
        }
    }

    #[test]
    fn decomposition_examples() {
        let b = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(quantum_decomposition_check(&b, 1).unwrap() < 1e-12);
        let u = DiscreteMeasure::new(vec![-1.0, 0.0, 1.0], vec![1.0 / 3.0; 3]).unwrap();
        assert!(quantum_decomposition_check(&u, 2).unwrap() < 1e-10);
        assert_eq!(quantum_decomposition_check(&DiscreteMeasure::dirac(0.3), 0).unwrap(), 0.0);
    }

    #[test]
    fn measure_validation_and_json() {
        assert!(DiscreteMeasure::new(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        let nu: DiscreteMeasure = serde_json::from_str(r#"{"atoms":[1.0,-1.0],"weights":[0.25,0.75]}"#).unwrap();
        assert_eq!(nu.atoms(), &[-1.0, 1.0]);
        assert_eq!(nu.weights(), &[0.75, 0.25]);
        assert_eq!(serde_json::to_string(&nu).unwrap(), r#"{"atoms":[-1.0,1.0],"weights":[0.75,0.25]}"#);
    }
}
