//! States: density matrices, pure states and the qubit Bloch ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    gates, hermitian_eig, kron, normalize, partial_trace, vec_norm, CMatrix, MatrixJson, C64, HERM_TOL, PSD_TOL,
};

/// Positive, unit-trace matrix. Validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    repaired: bool,
}

impl DensityMatrix {
    /// Validates with the default tolerance [`PSD_TOL`].
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tol(mat, PSD_TOL)
    }

    pub fn with_tol(mat: CMatrix, tol: f64) -> Result<Self> {
        check_density(&mat, tol)?;
        Ok(DensityMatrix { mat: mat.hermitian_part(), repaired: false })
    }

    /// Accepts an almost-density: eigenvalues in `[-tol, 0)` are clipped to
    /// zero and the trace renormalized. Anything worse is rejected. The
    /// result carries [`DensityMatrix::is_repaired`] when a change was made.
    pub fn repair(mat: CMatrix, tol: f64) -> Result<Self> {
        let e = hermitian_eig(&mat, tol.max(HERM_TOL))
            .map_err(|_| Error::InvalidDensity(format!("not Hermitian (defect {:.3e})", mat.hermiticity_defect())))?;
        let scale = mat.max_abs().max(1.0);
        if e.min() < -tol * scale {
            return Err(Error::InvalidDensity(format!("eigenvalue {:.3e} is beyond repair", e.min())));
        }
        if e.min() >= 0.0 {
            return Self::with_tol(mat, tol);
        }
        let clipped = e.apply_fn(|l| l.max(0.0));
        let t = clipped.trace().re;
        if !(t > 0.0) {
            return Err(Error::InvalidDensity("zero trace after clipping".into()));
        }
        let fixed = clipped.scale_real(1.0 / t);
        check_density(&fixed, tol)?;
        Ok(DensityMatrix { mat: fixed, repaired: true })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn is_repaired(&self) -> bool {
        self.repaired
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        crate::matcore::frobenius_inner(&self.mat, &self.mat).unwrap().re
    }

    /// Maximally mixed state `I/n`.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix { mat: CMatrix::identity(n).scale_real(1.0 / n as f64), repaired: false }
    }

    /// Computational basis projector `|k><k|` in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Self {
        DensityMatrix { mat: CMatrix::unit(n, k, k), repaired: false }
    }
}

fn check_density(mat: &CMatrix, tol: f64) -> Result<()> {
    if !mat.is_square() {
        return Err(Error::Shape(format!("density must be square, got {}x{}", mat.rows(), mat.cols())));
    }
    let scale = mat.max_abs().max(1.0);
    let defect = mat.hermiticity_defect();
    if defect > tol.max(HERM_TOL) * scale {
        return Err(Error::InvalidDensity(format!("not Hermitian (defect {defect:.3e})")));
    }
    let tr = mat.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::InvalidDensity(format!("trace is {:.12} (expected 1)", tr.re)));
    }
    let e = hermitian_eig(mat, tol.max(HERM_TOL))?;
    if e.min() < -tol * scale {
        return Err(Error::InvalidDensity(format!("negative eigenvalue {:.3e}", e.min())));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    kind: String,
    #[serde(flatten)]
    matrix: MatrixJson,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityJson { kind: "density".into(), matrix: self.mat.to_json() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = DensityJson::deserialize(d)?;
        if j.kind != "density" {
            return Err(D::Error::custom(format!("expected kind \"density\", got \"{}\"", j.kind)));
        }
        let m = CMatrix::try_from(j.matrix).map_err(D::Error::custom)?;
        DensityMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    ket: Vec<C64>,
}

impl PureState {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(v: Vec<C64>) -> Result<Self> {
        Ok(PureState { ket: normalize(&v)? })
    }

    /// Wraps a vector that must already have unit norm within `tol`.
    pub fn from_unit(v: Vec<C64>, tol: f64) -> Result<Self> {
        let n = vec_norm(&v);
        if (n - 1.0).abs() > tol {
            return Err(Error::Domain(format!("state vector has norm {n}")));
        }
        Ok(PureState { ket: v })
    }

    pub fn ket(&self) -> &[C64] {
        &self.ket
    }

    pub fn dim(&self) -> usize {
        self.ket.len()
    }
}

/// `|ψ><ψ|`.
pub fn density_from_vector(psi: &PureState) -> DensityMatrix {
    DensityMatrix { mat: CMatrix::outer(psi.ket(), psi.ket()), repaired: false }
}

/// Bloch coordinates `(u, v, w)` of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochVector {
    pub fn new(u: f64, v: f64, w: f64) -> Result<Self> {
        let b = BlochVector { u, v, w };
        if b.norm() > 1.0 + PSD_TOL {
            return Err(Error::Domain(format!("Bloch vector norm {} exceeds 1", b.norm())));
        }
        Ok(b)
    }

    pub fn norm(&self) -> f64 {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }
}

/// `ρ = ½(I + uX + vY + wZ)`.
pub fn bloch_to_density(b: &BlochVector) -> DensityMatrix {
    let m = &(&CMatrix::identity(2) + &gates::pauli_x().scale_real(b.u))
        + &(&gates::pauli_y().scale_real(b.v) + &gates::pauli_z().scale_real(b.w));
    DensityMatrix::new(m.scale_real(0.5)).expect("Bloch ball maps to densities")
}

/// `(u, v, w) = (tr ρX, tr ρY, tr ρZ)`.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::Shape(format!("Bloch vector needs a 2x2 density, got {}", rho.dim())));
    }
    let m = rho.matrix();
    let ev = |p: &CMatrix| (m * p).trace().re;
    BlochVector::new(ev(&gates::pauli_x()), ev(&gates::pauli_y()), ev(&gates::pauli_z()))
}

/// Number of eigenvalues above `tol`.
pub fn rank_class(rho: &DensityMatrix, tol: f64) -> usize {
    let e = hermitian_eig(rho.matrix(), HERM_TOL).expect("densities are Hermitian");
    e.eigenvalues.iter().filter(|&&l| l > tol).count().max(1)
}

/// Convex combination `Σ w_i ρ_i`.
pub fn mix(terms: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::Domain("mixture of zero states".into()));
    };
    let n = first.dim();
    let mut total = 0.0;
    let mut acc = CMatrix::zeros(n, n);
    for (w, rho) in terms {
        if !(*w >= 0.0) {
            return Err(Error::Domain(format!("negative mixture weight {w}")));
        }
        if rho.dim() != n {
            return Err(Error::Shape(format!("mixing dimensions {n} and {}", rho.dim())));
        }
        total += w;
        acc += &rho.matrix().scale_real(*w);
    }
    if (total - 1.0).abs() > PSD_TOL {
        return Err(Error::Domain(format!("mixture weights sum to {total}")));
    }
    DensityMatrix::new(acc)
}

/// Product state `a ⊗ b`.
pub fn product_density(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix { mat: kron(a.matrix(), b.matrix()), repaired: false }
}

/// Marginal on the kept tensor factors.
pub fn reduced_density(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    DensityMatrix::new(partial_trace(rho.matrix(), dims, keep)?)
}
