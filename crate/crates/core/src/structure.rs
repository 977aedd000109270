//! Structure of finite-dimensional *-algebras of matrices.
//!
//! Algebras are stored as Frobenius-orthonormal bases of Hermitian matrices;
//! since every algebra here is *-closed, such a basis always exists and real
//! combinations of it are Hermitian elements. On top of that: closure from
//! generators, commutants and centers, the factor decomposition into blocks
//! `M_m ⊗ I_ℓ`, the regular representation, GNS inner products and densities
//! of functionals.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{frobenius_inner, gram_nullspace, hermitian_eig, singular_values, CMatrix, C64, HERM_TOL};
use crate::measure::{spectral_decompose, Observable, CLUSTER_TOL};

/// Relative tolerance for span membership.
pub const SPAN_TOL: f64 = 1e-9;
/// Acceptance threshold for the block form produced by [`factor_decompose`].
pub const BLOCK_TOL: f64 = 1e-8;
const MAX_RETRIES: usize = 8;

/// Unital *-subalgebra of `M_n` given by an orthonormal Hermitian basis.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    n: usize,
    basis: Vec<CMatrix>,
}

/// Adds the Hermitian and anti-Hermitian parts of `x` to an orthonormal
/// Hermitian basis when they are not yet in its span. Returns whether the
/// basis grew.
fn extend(basis: &mut Vec<CMatrix>, x: &CMatrix) -> bool {
    let mut grew = false;
    for h in [x.hermitian_part(), x.scale(C64::new(0.0, -1.0)).hermitian_part()] {
        let scale = h.frobenius_norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = h;
        for _ in 0..2 {
            for b in basis.iter() {
                let c = frobenius_inner(b, &v).expect("same shape").re;
                v = &v - &b.scale_real(c);
            }
        }
        let norm = v.frobenius_norm();
        if norm > SPAN_TOL * scale.max(1.0) {
            basis.push(v.scale_real(1.0 / norm).hermitian_part());
            grew = true;
        }
    }
    grew
}

fn check_square(ms: &[CMatrix], n: usize) -> Result<()> {
    match ms.iter().find(|m| m.shape() != (n, n)) {
        Some(m) => Err(Error::Shape(format!("expected {n}x{n} matrices, got {}x{}", m.rows(), m.cols()))),
        None => Ok(()),
    }
}

impl AlgebraBasis {
    /// Orthonormal Hermitian basis of the span of `elements` (not closed
    /// under products; use [`generate_algebra`] for that).
    fn span(n: usize, elements: &[CMatrix]) -> Self {
        let mut basis = Vec::new();
        for x in elements {
            extend(&mut basis, x);
        }
        AlgebraBasis { n, basis }
    }

    /// `M_n`.
    pub fn full(n: usize) -> Self {
        let units: Vec<CMatrix> = (0..n * n).map(|k| CMatrix::unit(n, k / n, k % n)).collect();
        Self::span(n, &units)
    }

    /// Diagonal matrices `D_n`.
    pub fn diagonal(n: usize) -> Self {
        Self::span(n, &(0..n).map(|k| CMatrix::unit(n, k, k)).collect::<Vec<_>>())
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Coefficients `⟨b_i, x⟩` and the residual `‖x - Σ c_i b_i‖_F`.
    pub fn project(&self, x: &CMatrix) -> Result<(Vec<C64>, f64)> {
        check_square(std::slice::from_ref(x), self.n)?;
        let coeffs: Vec<C64> = self.basis.iter().map(|b| frobenius_inner(b, x).expect("same shape")).collect();
        let mut r = x.clone();
        for (b, c) in self.basis.iter().zip(&coeffs) {
            r = &r - &b.scale(*c);
        }
        Ok((coeffs, r.frobenius_norm()))
    }

    pub fn contains(&self, x: &CMatrix) -> bool {
        match self.project(x) {
            Ok((_, r)) => r <= SPAN_TOL * x.frobenius_norm().max(1.0),
            Err(_) => false,
        }
    }

    fn coefficients(&self, x: &CMatrix) -> Result<Vec<C64>> {
        let (c, r) = self.project(x)?;
        if r > SPAN_TOL * x.frobenius_norm().max(1.0) {
            return Err(Error::OutsideSpan { residual: r });
        }
        Ok(c)
    }

    pub fn is_commutative(&self) -> bool {
        self.basis
            .iter()
            .enumerate()
            .all(|(i, a)| self.basis[i + 1..].iter().all(|b| a.commutator(b).max_abs() <= SPAN_TOL))
    }

    /// Largest `‖b_i b_j - P(b_i b_j)‖_F` over basis pairs; zero for an algebra.
    pub fn closure_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in &self.basis {
            for b in &self.basis {
                worst = worst.max(self.project(&(a * b)).expect("same shape").1);
            }
        }
        worst
    }

    /// `vec` of the basis as the columns of an `n² x dim` matrix.
    fn stacked(&self) -> CMatrix {
        let n2 = self.n * self.n;
        CMatrix::from_fn(n2, self.dim(), |r, k| self.basis[k].as_slice()[r])
    }
}

/// Smallest unital *-closed algebra containing the generators.
pub fn generate_algebra(generators: &[CMatrix], n: usize) -> Result<AlgebraBasis> {
    if n == 0 {
        return Err(Error::Shape("ambient dimension must be positive".into()));
    }
    check_square(generators, n)?;
    let mut basis = Vec::new();
    extend(&mut basis, &CMatrix::identity(n));
    for g in generators {
        extend(&mut basis, g);
    }
    // products of every pair until the span stops growing
    let mut done = 0;
    while done < basis.len() && basis.len() < n * n {
        let upto = basis.len();
        for i in 0..upto {
            for j in 0..upto {
                if i < done && j < done {
                    continue;
                }
                let p = &basis[i] * &basis[j];
                extend(&mut basis, &p);
            }
        }
        done = upto;
    }
    Ok(AlgebraBasis { n, basis })
}

/// `{X : [X, b] = 0 for all b in alg}`, from the null space of
/// `Σ L_b† L_b` with `L_b vec(X) = vec(X b - b X)`.
pub fn commutant(alg: &AlgebraBasis) -> Result<AlgebraBasis> {
    let n = alg.n;
    let n2 = n * n;
    let mut gram = CMatrix::zeros(n2, n2);
    let id = CMatrix::identity(n);
    for b in &alg.basis {
        // row-major vec: vec(X b) = (I ⊗ bᵀ) vec(X), vec(b X) = (b ⊗ I) vec(X)
        let l = &crate::matcore::kron(&id, &b.transpose()) - &crate::matcore::kron(b, &id);
        gram += &(&l.adjoint() * &l);
    }
    let null = gram_nullspace(&gram, 1e-10)?;
    let elements: Vec<CMatrix> = null.into_iter().map(|v| CMatrix::from_vec(n, n, v)).collect::<Result<_>>()?;
    Ok(AlgebraBasis::span(n, &elements))
}

/// `alg ∩ alg'`, solved in the coefficient space of `alg`.
pub fn center(alg: &AlgebraBasis) -> Result<AlgebraBasis> {
    let d = alg.dim();
    let mut gram = CMatrix::zeros(d, d);
    for bj in &alg.basis {
        let cols: Vec<CMatrix> = alg.basis.iter().map(|bi| bi.commutator(bj)).collect();
        for i in 0..d {
            for k in 0..d {
                gram[(i, k)] += frobenius_inner(&cols[i], &cols[k]).expect("same shape");
            }
        }
    }
    let null = gram_nullspace(&gram, 1e-10)?;
    let elements: Vec<CMatrix> = null
        .iter()
        .map(|c| {
            let mut x = CMatrix::zeros(alg.n, alg.n);
            for (b, ci) in alg.basis.iter().zip(c) {
                x += &b.scale(*ci);
            }
            x
        })
        .collect();
    Ok(AlgebraBasis::span(alg.n, &elements))
}

/// Maximal abelian: commutative and equal to its commutant.
pub fn is_masa(alg: &AlgebraBasis) -> Result<bool> {
    Ok(alg.is_commutative() && commutant(alg)?.dim() == alg.dim())
}

/// Largest sine of the principal angles between two algebras as subspaces of
/// `M_n`; `1` when the dimensions differ.
pub fn subspace_distance(a: &AlgebraBasis, b: &AlgebraBasis) -> f64 {
    if a.n != b.n || a.dim() != b.dim() {
        return 1.0;
    }
    let qa = a.stacked();
    let qb = b.stacked();
    let residual = &qb - &(&qa * &(&qa.adjoint() * &qb));
    singular_values(&residual).first().copied().unwrap_or(0.0)
}

/// Block `M_m ⊗ I_ℓ` acting on an `n = m·ℓ` dimensional range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

/// Minimal central projections and the unitary putting the algebra in block
/// form.
#[derive(Debug, Clone)]
pub struct CenterDecomp {
    pub central_projections: Vec<CMatrix>,
    pub blocks: Vec<Block>,
    /// `U` with `U a U†` block diagonal, block `k` equal to `diag(Â_k, …, Â_k)`
    /// (`ℓ_k` copies) for every `a` in the algebra.
    pub transform: CMatrix,
    pub algebra_dim: usize,
    pub center_dim: usize,
}

impl CenterDecomp {
    /// `‖U a U† - ⊕_k diag(Â_k, …, Â_k)‖_F` with `Â_k` read off the first copy.
    pub fn block_residual(&self, a: &CMatrix) -> f64 {
        let t = a.conjugate_by(&self.transform);
        let mut ideal = CMatrix::zeros(t.rows(), t.cols());
        let mut off = 0;
        for b in &self.blocks {
            let hat = t.block(off, off, b.m, b.m);
            for r in 0..b.l {
                let s = off + r * b.m;
                for i in 0..b.m {
                    for j in 0..b.m {
                        ideal[(s + i, s + j)] = hat[(i, j)];
                    }
                }
            }
            off += b.n;
        }
        (&t - &ideal).frobenius_norm()
    }
}

fn random_hermitian_element<R: Rng + ?Sized>(basis: &[CMatrix], n: usize, r: &mut R) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    for b in basis {
        h += &b.scale_real(r.random_range(-1.0..1.0));
    }
    h
}

/// Orthonormal eigenvectors of a projector with eigenvalue ≈ 1, as columns.
fn range_isometry(p: &CMatrix) -> Result<CMatrix> {
    let e = hermitian_eig(p, 1e-8)?;
    let cols: Vec<usize> = (0..p.rows()).filter(|&k| e.eigenvalues[k] > 0.5).collect();
    Ok(CMatrix::from_fn(p.rows(), cols.len(), |i, j| e.eigenvectors[(i, cols[j])]))
}

/// Orthonormal basis of `C^{n_k}` adapted to a factor `≅ M_m ⊗ I_ℓ`:
/// columns `e_{j1} f_r` at position `r·m + j`.
fn factor_basis<R: Rng + ?Sized>(reduced: &AlgebraBasis, m: usize, l: usize, r: &mut R) -> Result<CMatrix> {
    let nk = reduced.n;
    for _ in 0..MAX_RETRIES {
        let h = random_hermitian_element(&reduced.basis, nk, r);
        let sd = spectral_decompose(&Observable::new(h)?, CLUSTER_TOL);
        if sd.projectors.len() != m || sd.projectors.iter().any(|p| (p.trace().re - l as f64).abs() > 1e-6) {
            continue;
        }
        let e1 = &sd.projectors[0];
        let f = range_isometry(e1)?;
        let mut units = vec![e1.clone()];
        for ej in &sd.projectors[1..] {
            let best = reduced
                .basis
                .iter()
                .map(|b| &(ej * b) * e1)
                .max_by(|x, y| x.frobenius_norm().total_cmp(&y.frobenius_norm()))
                .expect("nonempty basis");
            let norm = ((&best.adjoint() * &best).trace().re / l as f64).sqrt();
            if norm <= SPAN_TOL {
                return Err(Error::Numerical("minimal projections are not equivalent in the factor".into()));
            }
            units.push(best.scale_real(1.0 / norm));
        }
        let mut v = CMatrix::zeros(nk, nk);
        for rr in 0..l {
            let fr = f.col(rr);
            for (j, e) in units.iter().enumerate() {
                let col = e.matvec(&fr);
                for i in 0..nk {
                    v[(i, rr * m + j)] = col[i];
                }
            }
        }
        return Ok(v);
    }
    Err(Error::Numerical(format!("no generic element with {m} clusters of size {l} after {MAX_RETRIES} tries")))
}

/// Minimal central projections, block sizes `(n_k, m_k, ℓ_k)` and the
/// block-diagonalizing unitary.
///
/// Central projections come from the spectral decomposition of a random real
/// combination of the center basis (retried up to 8 times until the number of
/// clusters equals the center dimension). Inside each factor a minimal
/// projection is taken from a generic Hermitian element and the matrix units
/// `e_{j1}` are the normalized compressions `E_j b E_1`.
pub fn factor_decompose<R: Rng + ?Sized>(alg: &AlgebraBasis, r: &mut R) -> Result<CenterDecomp> {
    let n = alg.n;
    let z = center(alg)?;
    let k = z.dim();
    let mut projections = None;
    for _ in 0..MAX_RETRIES {
        let h = random_hermitian_element(&z.basis, n, r);
        let sd = spectral_decompose(&Observable::new(h)?, CLUSTER_TOL);
        if sd.projectors.len() == k && sd.projectors.iter().all(|p| z.contains(p)) {
            projections = Some(sd.projectors);
            break;
        }
    }
    let Some(mut projections) = projections else {
        return Err(Error::Numerical(format!("no generic central element after {MAX_RETRIES} tries")));
    };
    let first_support = |p: &CMatrix| (0..n).find(|&i| p[(i, i)].re > 1e-8).unwrap_or(n);
    projections.sort_by_key(first_support);

    let mut blocks = Vec::with_capacity(k);
    let mut v = CMatrix::zeros(n, n);
    let mut off = 0;
    for p in &projections {
        let w = range_isometry(p)?;
        let nk = w.cols();
        let wd = w.adjoint();
        let compressed: Vec<CMatrix> = alg.basis.iter().map(|b| &(&wd * b) * &w).collect();
        let reduced = AlgebraBasis::span(nk, &compressed);
        let dk = reduced.dim();
        let m = (dk as f64).sqrt().round() as usize;
        if m * m != dk || m == 0 || nk % m != 0 {
            return Err(Error::Numerical(format!("compressed algebra of dimension {dk} on C^{nk} is not a factor")));
        }
        let l = nk / m;
        let local = factor_basis(&reduced, m, l, r)?;
        let cols = &w * &local;
        for i in 0..n {
            for j in 0..nk {
                v[(i, off + j)] = cols[(i, j)];
            }
        }
        blocks.push(Block { n: nk, m, l });
        off += nk;
    }
    let decomp = CenterDecomp {
        central_projections: projections,
        blocks,
        transform: v.adjoint(),
        algebra_dim: alg.dim(),
        center_dim: k,
    };
    let worst = alg.basis.iter().map(|b| decomp.block_residual(b)).fold(0.0, f64::max);
    if worst > BLOCK_TOL || decomp.transform.unitarity_defect() > BLOCK_TOL {
        return Err(Error::Numerical(format!("block form residual {worst:.3e}")));
    }
    Ok(decomp)
}

/// `(Υ_a)_{ij} = ⟨b_i, a b_j⟩` in the orthonormal basis.
pub fn regular_representation(alg: &AlgebraBasis, a: &CMatrix) -> Result<CMatrix> {
    alg.coefficients(a)?;
    let d = alg.dim();
    let images: Vec<CMatrix> = alg.basis.iter().map(|b| a * b).collect();
    Ok(CMatrix::from_fn(d, d, |i, j| frobenius_inner(&alg.basis[i], &images[j]).expect("same shape")))
}

/// `φ(a†b)` for a functional given by its values `φ(b_i)` on the basis.
pub fn gns_inner(alg: &AlgebraBasis, a: &CMatrix, b: &CMatrix, phi: &[C64]) -> Result<C64> {
    if phi.len() != alg.dim() {
        return Err(Error::Shape(format!("{} functional values for an algebra of dimension {}", phi.len(), alg.dim())));
    }
    alg.coefficients(a)?;
    alg.coefficients(b)?;
    let c = alg.coefficients(&(&a.adjoint() * b))?;
    Ok(c.iter().zip(phi).map(|(ci, p)| ci * p).sum())
}

/// Values `φ(b_i) = tr(ρ b_i)` of a state on the basis.
pub fn state_values(alg: &AlgebraBasis, rho: &CMatrix) -> Result<Vec<C64>> {
    check_square(std::slice::from_ref(rho), alg.n)?;
    Ok(alg.basis.iter().map(|b| (rho * b).trace()).collect())
}

/// The unique `r` in the span with `tr(r b_i) = φ(b_i)`, from the Gram
/// system `Σ_j x_j tr(b_j b_i) = φ(b_i)`. The functional must be
/// *-consistent, `φ(b†) = conj φ(b)`, which on a Hermitian basis means real
/// values.
pub fn density_of_state(alg: &AlgebraBasis, phi: &[C64]) -> Result<CMatrix> {
    let d = alg.dim();
    if phi.len() != d {
        return Err(Error::Shape(format!("{} functional values for an algebra of dimension {d}", phi.len())));
    }
    let star = phi.iter().map(|p| p.im.abs()).fold(0.0, f64::max);
    if star > SPAN_TOL * phi.iter().map(|p| p.norm()).fold(1.0, f64::max) {
        return Err(Error::InconsistentFunctional { residual: star });
    }
    let gram = nalgebra::DMatrix::from_fn(d, d, |i, j| (&alg.basis[j] * &alg.basis[i]).trace());
    let rhs = nalgebra::DVector::from_iterator(d, phi.iter().copied());
    let x = gram
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Gram matrix".into()))?;
    let residual = (&gram * &x - &rhs).norm();
    if residual > 1e-9 * rhs.norm().max(1.0) {
        return Err(Error::InconsistentFunctional { residual });
    }
    let mut r = CMatrix::zeros(alg.n, alg.n);
    for (b, c) in alg.basis.iter().zip(x.iter()) {
        r += &b.scale(*c);
    }
    Ok(r.hermitian_part())
}

/// Whether every basis element is Hermitian.
pub fn is_hermitian_basis(alg: &AlgebraBasis) -> bool {
    alg.basis.iter().all(|b| b.hermiticity_defect() <= HERM_TOL)
}
