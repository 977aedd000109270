//! Observables and measurements.
//!
//! Spectral decompositions into projection valued measures (PVMs), Born-rule
//! laws and moments, the uncertainty relation, positive operator valued
//! measures (POVMs) and their Neumark dilation to a PVM.
//!
//! Degenerate spectra are only ever exposed through cluster projectors; the
//! individual eigenvectors inside a cluster are not meaningful.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eig, inner, is_psd, kron, psd_sqrt, CMatrix, C64, HERM_TOL, PSD_TOL,
};
use crate::states::{DensityMatrix, PureState};

/// Relative clustering tolerance for eigenvalues.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Tolerance used when validating measurement families.
pub const MEASURE_TOL: f64 = 1e-9;

/// A self-adjoint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    mat: CMatrix,
}

impl Observable {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Shape(format!("observable must be square, got {}x{}", mat.rows(), mat.cols())));
        }
        let defect = mat.hermiticity_defect();
        if defect > HERM_TOL * mat.max_abs().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Observable { mat: mat.hermitian_part() })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }
}

/// Outcome label of a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Index(usize),
    Value(f64),
    Label(String),
}

impl Outcome {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Outcome::Index(k) => Some(*k as f64),
            Outcome::Value(x) => Some(*x),
            Outcome::Label(_) => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Index(k) => write!(f, "{k}"),
            Outcome::Value(x) => write!(f, "{}", fmt_sig(*x)),
            Outcome::Label(s) => write!(f, "{s}"),
        }
    }
}

/// Formats with 12 significant digits, trimming trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Finite probability law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    pub outcomes: Vec<Outcome>,
    pub probs: Vec<f64>,
}

impl DiscreteLaw {
    /// Validates `p >= -tol` and `|Σp - 1| <= tol` with `tol = MEASURE_TOL`.
    pub fn new(outcomes: Vec<Outcome>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() || probs.is_empty() {
            return Err(Error::Shape(format!("{} outcomes for {} probabilities", outcomes.len(), probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= -MEASURE_TOL)) {
            return Err(Error::Domain(format!("negative probability {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > MEASURE_TOL {
            return Err(Error::Domain(format!("probabilities sum to {s}")));
        }
        Ok(DiscreteLaw { outcomes, probs })
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, outcome: &Outcome) -> f64 {
        self.outcomes.iter().zip(&self.probs).filter(|(o, _)| *o == outcome).map(|(_, p)| p).sum()
    }

    /// `Σ x p(x)`; `None` for labelled outcomes.
    pub fn mean(&self) -> Option<f64> {
        self.outcomes
            .iter()
            .zip(&self.probs)
            .map(|(o, p)| o.as_f64().map(|x| x * p))
            .sum::<Option<f64>>()
    }

    /// `outcome,probability` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("outcome,probability\n");
        for (o, p) in self.outcomes.iter().zip(&self.probs) {
            let _ = writeln!(s, "{o},{}", fmt_sig(*p));
        }
        s
    }
}

/// Distinct eigenvalues (ascending) and their spectral projectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<CMatrix>,
}

impl SpectralDecomp {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.projectors[0].rows();
        let mut m = CMatrix::zeros(n, n);
        for (l, p) in self.eigenvalues.iter().zip(&self.projectors) {
            m += &p.scale_real(*l);
        }
        m
    }

    pub fn to_pvm(&self) -> Pvm {
        Pvm {
            outcomes: self.eigenvalues.iter().map(|&l| Outcome::Value(l)).collect(),
            projectors: self.projectors.clone(),
        }
    }

    fn sum_where(&self, pred: impl Fn(f64) -> bool) -> CMatrix {
        let n = self.projectors[0].rows();
        let mut m = CMatrix::zeros(n, n);
        for (l, p) in self.eigenvalues.iter().zip(&self.projectors) {
            if pred(*l) {
                m += p;
            }
        }
        m
    }

    /// Projector of the event `{A = x}` (zero if `x` is not an eigenvalue).
    pub fn event_eq(&self, x: f64, tol: f64) -> CMatrix {
        self.sum_where(|l| (l - x).abs() <= tol)
    }

    /// Projector of the event `{A <= x}`.
    pub fn event_leq(&self, x: f64) -> CMatrix {
        self.sum_where(|l| l <= x)
    }

    /// Projector of the event `{A < x}`.
    pub fn event_lt(&self, x: f64) -> CMatrix {
        self.sum_where(|l| l < x)
    }
}

/// Spectral decomposition with eigenvalues merged when they differ by at most
/// `cluster_tol · max|λ|`.
pub fn spectral_decompose(a: &Observable, cluster_tol: f64) -> SpectralDecomp {
    let e = hermitian_eig(a.matrix(), HERM_TOL).expect("observables are Hermitian");
    let scale = e.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let thr = cluster_tol * scale;
    let n = a.dim();
    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || e.eigenvalues[k] - e.eigenvalues[k - 1] > thr {
            let members = start..k;
            let mean = members.clone().map(|i| e.eigenvalues[i]).sum::<f64>() / (k - start) as f64;
            let mut p = CMatrix::zeros(n, n);
            for i in members {
                let v = e.vector(i);
                p += &CMatrix::outer(&v, &v);
            }
            eigenvalues.push(mean);
            projectors.push(p);
            start = k;
        }
    }
    SpectralDecomp { eigenvalues, projectors }
}

fn check_dims(a: usize, rho: &DensityMatrix) -> Result<()> {
    if a != rho.dim() {
        return Err(Error::Shape(format!("operator of dimension {a} against a state of dimension {}", rho.dim())));
    }
    Ok(())
}

/// Born probability `tr(ρ E)`.
pub fn born(rho: &DensityMatrix, e: &CMatrix) -> f64 {
    crate::matcore::frobenius_inner(rho.matrix(), e).expect("shape checked by caller").re
}

/// Law of `a` in the state `ρ`: `p_k = tr(ρ P_k)` over the distinct eigenvalues.
pub fn law(a: &Observable, rho: &DensityMatrix) -> Result<DiscreteLaw> {
    check_dims(a.dim(), rho)?;
    law_of_pvm(&spectral_decompose(a, CLUSTER_TOL).to_pvm(), rho)
}

pub fn law_of_pvm(pvm: &Pvm, rho: &DensityMatrix) -> Result<DiscreteLaw> {
    check_dims(pvm.dim(), rho)?;
    let probs = pvm.projectors.iter().map(|p| born(rho, p)).collect();
    DiscreteLaw::new(pvm.outcomes.clone(), probs)
}

/// `tr(ρ a)`.
pub fn expectation(a: &Observable, rho: &DensityMatrix) -> Result<f64> {
    check_dims(a.dim(), rho)?;
    Ok(born(rho, a.matrix()))
}

/// `E(a²) - E(a)²`.
pub fn variance(a: &Observable, rho: &DensityMatrix) -> Result<f64> {
    let m = expectation(a, rho)?;
    Ok(born(rho, &(a.matrix() * a.matrix())) - m * m)
}

fn centred(a: &Observable, rho: &DensityMatrix) -> Result<CMatrix> {
    let m = expectation(a, rho)?;
    Ok(a.matrix() - &CMatrix::identity(a.dim()).scale_real(m))
}

/// `tr(ρ ã† b̃)` with `ã = a - E(a)`.
pub fn covariance(a: &Observable, b: &Observable, rho: &DensityMatrix) -> Result<C64> {
    let at = centred(a, rho)?;
    let bt = centred(b, rho)?;
    Ok((rho.matrix() * &(&at.adjoint() * &bt)).trace())
}

/// Left minus right side of the uncertainty relation:
/// `var(a)var(b) - |ϖ([a,b])/2|² - (Re cov(a,b))²`. Never below `-tol`.
pub fn uncertainty_gap(a: &Observable, b: &Observable, rho: &DensityMatrix) -> Result<f64> {
    let (lhs, rhs) = uncertainty_sides(a, b, rho)?;
    Ok(lhs - rhs)
}

/// Both sides of the uncertainty relation.
pub fn uncertainty_sides(a: &Observable, b: &Observable, rho: &DensityMatrix) -> Result<(f64, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::Shape("observables of different dimension".into()));
    }
    let lhs = variance(a, rho)? * variance(b, rho)?;
    let comm = (rho.matrix() * &a.matrix().commutator(b.matrix())).trace();
    let cov = covariance(a, b, rho)?;
    Ok((lhs, (comm.norm() / 2.0).powi(2) + cov.re.powi(2)))
}

/// Law of `A = tI + xX + yY + zZ` under `ρ = ½(I + uX + vY + wZ)`:
/// `P(t ± ‖x⃗‖) = ½(1 ± (ux + vy + wz)/‖x⃗‖)`.
pub fn bernoulli_law(t: f64, x: f64, y: f64, z: f64, u: f64, v: f64, w: f64) -> Result<DiscreteLaw> {
    let r = (x * x + y * y + z * z).sqrt();
    if r == 0.0 {
        return Err(Error::Domain(format!("degenerate observable: law is a point mass at {t}")));
    }
    let b = (u * u + v * v + w * w).sqrt();
    if b > 1.0 + PSD_TOL {
        return Err(Error::Domain(format!("Bloch vector norm {b} exceeds 1")));
    }
    let s = (u * x + v * y + w * z) / r;
    DiscreteLaw::new(
        vec![Outcome::Value(t - r), Outcome::Value(t + r)],
        vec![0.5 * (1.0 - s), 0.5 * (1.0 + s)],
    )
}

/// `(p1, p0) = (|<ψ|u>|², 1 - |<ψ|u>|²)`.
pub fn rank_one_law(psi: &PureState, u: &PureState) -> Result<(f64, f64)> {
    if psi.dim() != u.dim() {
        return Err(Error::Shape("vectors of different dimension".into()));
    }
    let p1 = inner(psi.ket(), u.ket()).norm_sqr().min(1.0);
    Ok((p1, 1.0 - p1))
}

/// Projection valued measure: orthogonal projectors summing to `I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pvm {
    pub outcomes: Vec<Outcome>,
    pub projectors: Vec<CMatrix>,
}

impl Pvm {
    pub fn new(outcomes: Vec<Outcome>, projectors: Vec<CMatrix>) -> Result<Self> {
        let p = Pvm { outcomes, projectors };
        p.validate(MEASURE_TOL)?;
        Ok(p)
    }

    /// Computational basis PVM `{|k><k|}` with index outcomes.
    pub fn computational(n: usize) -> Self {
        Pvm {
            outcomes: (0..n).map(Outcome::Index).collect(),
            projectors: (0..n).map(|k| CMatrix::unit(n, k, k)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].rows()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.projectors.is_empty() || self.outcomes.len() != self.projectors.len() {
            return Err(Error::InvalidPvm("outcome and projector counts differ or are zero".into()));
        }
        let n = self.projectors[0].rows();
        let mut sum = CMatrix::zeros(n, n);
        for (k, p) in self.projectors.iter().enumerate() {
            if p.shape() != (n, n) {
                return Err(Error::InvalidPvm(format!("projector {k} has shape {:?}", p.shape())));
            }
            if p.hermiticity_defect() > tol {
                return Err(Error::InvalidPvm(format!("projector {k} is not Hermitian")));
            }
            if (p * p).max_abs_diff(p) > tol {
                return Err(Error::InvalidPvm(format!("projector {k} is not idempotent")));
            }
            for (j, q) in self.projectors.iter().enumerate().skip(k + 1) {
                if (p * q).max_abs() > tol {
                    return Err(Error::InvalidPvm(format!("projectors {k} and {j} are not orthogonal")));
                }
            }
            sum += p;
        }
        let d = sum.max_abs_diff(&CMatrix::identity(n));
        if d > tol {
            return Err(Error::InvalidPvm(format!("projectors sum to I only within {d:.3e}")));
        }
        Ok(())
    }
}

/// Positive operator valued measure: effects `0 <= E <= I` summing to `I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Povm {
    pub outcomes: Vec<Outcome>,
    pub effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(outcomes: Vec<Outcome>, effects: Vec<CMatrix>) -> Result<Self> {
        let p = Povm { outcomes, effects };
        p.validate(MEASURE_TOL)?;
        Ok(p)
    }

    /// Effects labelled `0..k`.
    pub fn from_effects(effects: Vec<CMatrix>) -> Result<Self> {
        Self::new((0..effects.len()).map(Outcome::Index).collect(), effects)
    }

    pub fn from_pvm(p: &Pvm) -> Self {
        Povm { outcomes: p.outcomes.clone(), effects: p.projectors.clone() }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.effects.is_empty() || self.outcomes.len() != self.effects.len() {
            return Err(Error::InvalidPovm("outcome and effect counts differ or are zero".into()));
        }
        let n = self.effects[0].rows();
        let id = CMatrix::identity(n);
        let mut sum = CMatrix::zeros(n, n);
        for (k, e) in self.effects.iter().enumerate() {
            if e.shape() != (n, n) {
                return Err(Error::InvalidPovm(format!("effect {k} has shape {:?}", e.shape())));
            }
            if e.hermiticity_defect() > tol {
                return Err(Error::InvalidPovm(format!("effect {k} is not Hermitian")));
            }
            if !is_psd(e, tol) {
                return Err(Error::InvalidPovm(format!("effect {k} violates E >= 0")));
            }
            if !is_psd(&(&id - e), tol) {
                return Err(Error::InvalidPovm(format!("effect {k} violates E <= I")));
            }
            sum += e;
        }
        let d = sum.max_abs_diff(&id);
        if d > tol {
            return Err(Error::InvalidPovm(format!("effects sum to I only within {d:.3e}")));
        }
        Ok(())
    }
}

/// Extended Born rule `p_x = tr(ρ E_x)`.
pub fn povm_probabilities(m: &Povm, rho: &DensityMatrix) -> Result<DiscreteLaw> {
    m.validate(MEASURE_TOL)?;
    check_dims(m.dim(), rho)?;
    DiscreteLaw::new(m.outcomes.clone(), m.effects.iter().map(|e| born(rho, e)).collect())
}

/// Neumark dilation of a POVM on `C^d` with `k` outcomes.
///
/// `isometry` is the `(k·d) x d` stack of blocks `E_x^{1/2}`; `pvm` consists of
/// the block projectors `|x><x| ⊗ I_d` on `C^k ⊗ C^d`.
#[derive(Debug, Clone)]
pub struct NeumarkDilation {
    pub isometry: CMatrix,
    pub pvm: Pvm,
}

impl NeumarkDilation {
    /// `max_x ‖V† P_x V - E_x‖_F`.
    pub fn compression_residual(&self, povm: &Povm) -> f64 {
        let vd = self.isometry.adjoint();
        self.pvm
            .projectors
            .iter()
            .zip(&povm.effects)
            .map(|(p, e)| (&(&(&vd * p) * &self.isometry) - e).frobenius_norm())
            .fold(0.0, f64::max)
    }

    /// `‖V†V - I‖` in the max-entry norm.
    pub fn isometry_defect(&self) -> f64 {
        let d = self.isometry.cols();
        (&self.isometry.adjoint() * &self.isometry).max_abs_diff(&CMatrix::identity(d))
    }
}

pub fn neumark_dilate(m: &Povm) -> Result<NeumarkDilation> {
    m.validate(MEASURE_TOL)?;
    let d = m.dim();
    let k = m.effects.len();
    let mut v = CMatrix::zeros(k * d, d);
    for (x, e) in m.effects.iter().enumerate() {
        let root = psd_sqrt(e, MEASURE_TOL)?;
        for i in 0..d {
            for j in 0..d {
                v[(x * d + i, j)] = root[(i, j)];
            }
        }
    }
    let projectors = (0..k).map(|x| kron(&CMatrix::unit(k, x, x), &CMatrix::identity(d))).collect();
    Ok(NeumarkDilation { isometry: v, pvm: Pvm { outcomes: m.outcomes.clone(), projectors } })
}
