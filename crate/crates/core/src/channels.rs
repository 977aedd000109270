//! Completely positive maps.
//!
//! Kraus and Choi representations, the Choi test for complete positivity,
//! Kraus extraction, composition and tensoring, Jamiołkowski duality,
//! superoperator spectra and fixed points, and the conditioning operations:
//! conditional expectation onto a PVM block algebra, the Lüders update,
//! conditional probabilities and instruments.
//!
//! Choi matrices use the block convention `C = Σ_ij E_ij ⊗ Φ(E_ij)`, so the
//! entry `Φ(E_ij)[o,p]` sits at `(i·out + o, j·out + p)`. Superoperators act on
//! column-major vectorizations, `vec(X)[i + j·n] = X[i,j]`, where
//! `vec(K X K†) = (conj(K) ⊗ K) vec(X)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    eigenvalues, gates, gram_nullspace, hermitian_eig, is_psd, kron, schatten_norm, CMatrix, C64, HERM_TOL, ONE,
    PSD_TOL, ZERO,
};
use crate::measure::{Observable, Outcome, Pvm, MEASURE_TOL};
use crate::states::DensityMatrix;

/// Tolerance for the `Σ K†K = I` and `Σ KK† = I` checks.
pub const TP_TOL: f64 = 1e-9;
/// Default threshold for conditioning on an event.
pub const PROB_TOL: f64 = 1e-12;
/// Relative eigenvalue cut for Kraus extraction, times `tr(choi)`.
pub const KRAUS_RANK_TOL: f64 = 1e-10;
/// Acceptance threshold for a fixed point, `‖Φ(r) - r‖_S1`.
pub const FIXED_POINT_TOL: f64 = 1e-8;

/// CP map `X ↦ Σ K X K†` with Kraus operators of shape `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    kraus_ops: Vec<CMatrix>,
    in_dim: usize,
    out_dim: usize,
}

impl KrausChannel {
    /// Checks shapes only; TP is a property, not an invariant.
    pub fn new(kraus_ops: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = kraus_ops.first() else {
            return Err(Error::Shape("a channel needs at least one Kraus operator".into()));
        };
        let (out_dim, in_dim) = first.shape();
        if let Some((k, m)) = kraus_ops.iter().enumerate().find(|(_, m)| m.shape() != (out_dim, in_dim)) {
            return Err(Error::Shape(format!(
                "Kraus operator {k} is {}x{}, expected {out_dim}x{in_dim}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(KrausChannel { kraus_ops, in_dim, out_dim })
    }

    pub fn identity(n: usize) -> Self {
        KrausChannel { kraus_ops: vec![CMatrix::identity(n)], in_dim: n, out_dim: n }
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::Shape("unitary conjugation needs a square matrix".into()));
        }
        Self::new(vec![u])
    }

    /// Qubit depolarizing map `ρ ↦ λρ + (1-λ) tr(ρ) I/2`, CP for `λ ∈ [-1/3, 1]`.
    pub fn depolarizing(lambda: f64) -> Result<Self> {
        let a = (1.0 + 3.0 * lambda) / 4.0;
        let b = (1.0 - lambda) / 4.0;
        if a < -PSD_TOL || b < -PSD_TOL {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: a.min(b) });
        }
        let (a, b) = (a.max(0.0).sqrt(), b.max(0.0).sqrt());
        Self::new(vec![
            CMatrix::identity(2).scale_real(a),
            gates::pauli_x().scale_real(b),
            gates::pauli_y().scale_real(b),
            gates::pauli_z().scale_real(b),
        ])
    }

    /// Measure-and-prepare map `ρ ↦ tr(ρ) σ`.
    pub fn replacement(sigma: &DensityMatrix, in_dim: usize) -> Self {
        let e = hermitian_eig(sigma.matrix(), HERM_TOL).expect("densities are Hermitian");
        let out = sigma.dim();
        let mut ops = Vec::new();
        for (k, &l) in e.eigenvalues.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let v = e.vector(k);
            for j in 0..in_dim {
                ops.push(CMatrix::from_fn(out, in_dim, |o, i| if i == j { v[o] * l.sqrt() } else { ZERO }));
            }
        }
        KrausChannel { kraus_ops: ops, in_dim, out_dim: out }
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// `‖Σ K†K - I‖` (max-entry norm).
    pub fn tp_defect(&self) -> f64 {
        let mut s = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus_ops {
            s += &(&k.adjoint() * k);
        }
        s.max_abs_diff(&CMatrix::identity(self.in_dim))
    }

    /// `‖Σ KK† - I‖` (max-entry norm); infinite when `in != out`.
    pub fn unital_defect(&self) -> f64 {
        if self.in_dim != self.out_dim {
            return f64::INFINITY;
        }
        let mut s = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus_ops {
            s += &(k * &k.adjoint());
        }
        s.max_abs_diff(&CMatrix::identity(self.out_dim))
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.tp_defect() <= tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unital_defect() <= tol
    }

    /// `Σ K X K†` for an arbitrary `in x in` matrix.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::Shape(format!(
                "channel on C^{} applied to a {}x{} matrix",
                self.in_dim,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus_ops {
            out += &(&(k * x) * &k.adjoint());
        }
        Ok(out)
    }

    /// `Σ K ρ K†` for a TP channel.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let defect = self.tp_defect();
        if defect > TP_TOL {
            return Err(Error::NotTracePreserving { defect });
        }
        let out = self.apply_matrix(rho.matrix())?;
        DensityMatrix::new(out)
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson { kraus: self.kraus_ops.clone(), in_dim: self.in_dim, out_dim: self.out_dim }
    }
}

/// Serialized channel: `{ "kraus": [...], "in_dim", "out_dim" }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub kraus: Vec<CMatrix>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl TryFrom<ChannelJson> for KrausChannel {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Self> {
        let ch = KrausChannel::new(j.kraus)?;
        if (ch.in_dim, ch.out_dim) != (j.in_dim, j.out_dim) {
            return Err(Error::Shape(format!(
                "declared {}->{} but Kraus operators map {}->{}",
                j.in_dim, j.out_dim, ch.in_dim, ch.out_dim
            )));
        }
        Ok(ch)
    }
}

impl Serialize for KrausChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        KrausChannel::try_from(ChannelJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `Σ E_ij ⊗ Φ(E_ij)`.
    #[default]
    Raw,
    /// Raw divided by `in_dim`; a density for CPTP maps.
    Normalized,
}

/// Choi representative of a linear map `M_in -> M_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChoiJson", into = "ChoiJson")]
pub struct ChoiMatrix {
    mat: CMatrix,
    in_dim: usize,
    out_dim: usize,
    normalization: Normalization,
}

#[derive(Serialize, Deserialize)]
struct ChoiJson {
    choi: CMatrix,
    in_dim: usize,
    out_dim: usize,
    #[serde(default)]
    normalization: Normalization,
}

impl TryFrom<ChoiJson> for ChoiMatrix {
    type Error = Error;

    fn try_from(j: ChoiJson) -> Result<Self> {
        ChoiMatrix::new(j.choi, j.in_dim, j.out_dim, j.normalization)
    }
}

impl From<ChoiMatrix> for ChoiJson {
    fn from(c: ChoiMatrix) -> Self {
        ChoiJson { choi: c.mat, in_dim: c.in_dim, out_dim: c.out_dim, normalization: c.normalization }
    }
}

impl ChoiMatrix {
    pub fn new(mat: CMatrix, in_dim: usize, out_dim: usize, normalization: Normalization) -> Result<Self> {
        let n = in_dim * out_dim;
        if n == 0 || mat.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "Choi matrix of a {in_dim}->{out_dim} map must be {n}x{n}, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        Ok(ChoiMatrix { mat, in_dim, out_dim, normalization })
    }

    /// Choi matrix of the transpose map on `M_n`, which is the swap operator.
    pub fn transpose_map(n: usize) -> Self {
        let mut mat = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                mat[(i * n + j, j * n + i)] = ONE;
            }
        }
        ChoiMatrix { mat, in_dim: n, out_dim: n, normalization: Normalization::Raw }
    }

    /// Choi matrix of the qubit depolarizing map for any real `λ`.
    pub fn depolarizing(lambda: f64) -> Self {
        let mut c = Self::of_fn(2, 2, |x| {
            &x.scale_real(lambda) + &CMatrix::identity(2).scale(x.trace() * (1.0 - lambda) / 2.0)
        });
        c.normalization = Normalization::Raw;
        c
    }

    /// Raw Choi matrix of an arbitrary linear map given by its action.
    pub fn of_fn(in_dim: usize, out_dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut mat = CMatrix::zeros(in_dim * out_dim, in_dim * out_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let img = f(&CMatrix::unit(in_dim, i, j));
                for o in 0..out_dim {
                    for p in 0..out_dim {
                        mat[(i * out_dim + o, j * out_dim + p)] = img[(o, p)];
                    }
                }
            }
        }
        ChoiMatrix { mat, in_dim, out_dim, normalization: Normalization::Raw }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Raw-convention matrix regardless of the stored normalization.
    pub fn raw(&self) -> CMatrix {
        match self.normalization {
            Normalization::Raw => self.mat.clone(),
            Normalization::Normalized => self.mat.scale_real(self.in_dim as f64),
        }
    }

    pub fn with_normalization(&self, normalization: Normalization) -> Self {
        let raw = self.raw();
        let mat = match normalization {
            Normalization::Raw => raw,
            Normalization::Normalized => raw.scale_real(1.0 / self.in_dim as f64),
        };
        ChoiMatrix { mat, normalization, ..*self }
    }

    /// `Φ(X)[o,p] = Σ_ij X[i,j] C[(i,o),(j,p)]`.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::Shape(format!("map on C^{} applied to a {}x{} matrix", self.in_dim, x.rows(), x.cols())));
        }
        let raw = self.raw();
        let d = self.out_dim;
        Ok(CMatrix::from_fn(d, d, |o, p| {
            let mut s = ZERO;
            for i in 0..self.in_dim {
                for j in 0..self.in_dim {
                    s += x[(i, j)] * raw[(i * d + o, j * d + p)];
                }
            }
            s
        }))
    }

    /// Smallest eigenvalue of the raw Choi matrix (of its Hermitian part).
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eig(&self.raw().hermitian_part(), HERM_TOL).expect("Hermitian part").min()
    }

    /// Property table: CP via PSD Choi, TP via the output partial trace,
    /// unital via the input partial trace, Hermiticity preservation via a
    /// Hermitian Choi matrix.
    pub fn properties(&self, tol: f64) -> ChannelProperties {
        let raw = self.raw();
        let (n, d) = (self.in_dim, self.out_dim);
        let hermiticity = raw.hermiticity_defect() <= tol * raw.max_abs().max(1.0);
        let cp = hermiticity && is_psd(&raw, tol);
        let tr_out = CMatrix::from_fn(n, n, |i, j| (0..d).map(|o| raw[(i * d + o, j * d + o)]).sum());
        let tp = tr_out.max_abs_diff(&CMatrix::identity(n)) <= tol;
        let tr_in = CMatrix::from_fn(d, d, |o, p| (0..n).map(|i| raw[(i * d + o, i * d + p)]).sum());
        let unital = n == d && tr_in.max_abs_diff(&CMatrix::identity(d)) <= tol;
        ChannelProperties { cp, tp, unital, hermiticity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelProperties {
    pub cp: bool,
    pub tp: bool,
    pub unital: bool,
    pub hermiticity: bool,
}

/// A linear map in either representation, as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinearMap {
    Kraus(KrausChannel),
    Choi(ChoiMatrix),
}

impl LinearMap {
    pub fn choi(&self, normalization: Normalization) -> ChoiMatrix {
        match self {
            LinearMap::Kraus(k) => choi_of(k, normalization),
            LinearMap::Choi(c) => c.with_normalization(normalization),
        }
    }

    pub fn properties(&self, tol: f64) -> ChannelProperties {
        match self {
            LinearMap::Kraus(k) => channel_properties(k, tol),
            LinearMap::Choi(c) => c.properties(tol),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            LinearMap::Kraus(k) => k.in_dim(),
            LinearMap::Choi(c) => c.in_dim(),
        }
    }

    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        match self {
            LinearMap::Kraus(k) => k.apply_matrix(x),
            LinearMap::Choi(c) => c.apply_matrix(x),
        }
    }
}

pub fn choi_of(ch: &KrausChannel, normalization: Normalization) -> ChoiMatrix {
    let (n, d) = (ch.in_dim, ch.out_dim);
    let mut mat = CMatrix::zeros(n * d, n * d);
    for k in &ch.kraus_ops {
        // C = Σ_k vec(K) vec(K)† with vec(K)[i·d + o] = K[o,i]
        let v: Vec<C64> = (0..n * d).map(|r| k[(r % d, r / d)]).collect();
        for r in 0..n * d {
            for s in 0..n * d {
                mat[(r, s)] += v[r] * v[s].conj();
            }
        }
    }
    ChoiMatrix { mat, in_dim: n, out_dim: d, normalization: Normalization::Raw }.with_normalization(normalization)
}

/// CP/TP/unital/Hermiticity flags of a Kraus channel.
pub fn channel_properties(ch: &KrausChannel, tol: f64) -> ChannelProperties {
    let choi = choi_of(ch, Normalization::Raw);
    ChannelProperties {
        cp: is_psd(choi.matrix(), tol),
        tp: ch.is_tp(tol),
        unital: ch.is_unital(tol),
        hermiticity: choi.matrix().hermiticity_defect() <= tol * choi.matrix().max_abs().max(1.0),
    }
}

/// Kraus operators `√λ · unvec(v)` from the eigenpairs of the Choi matrix
/// with `λ > rank_tol · tr(choi)`.
pub fn kraus_from_choi(c: &ChoiMatrix, rank_tol: f64) -> Result<KrausChannel> {
    let raw = c.raw();
    let e = hermitian_eig(&raw, 1e-9)?;
    let scale = raw.trace().re.abs().max(raw.max_abs());
    if e.min() < -PSD_TOL * scale.max(1.0) {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: e.min() });
    }
    let (n, d) = (c.in_dim, c.out_dim);
    let cut = rank_tol * scale;
    let mut ops = Vec::new();
    for (k, &l) in e.eigenvalues.iter().enumerate().rev() {
        if l <= cut {
            continue;
        }
        let v = e.vector(k);
        let s = l.sqrt();
        ops.push(CMatrix::from_fn(d, n, |o, i| v[i * d + o] * s));
    }
    if ops.is_empty() {
        ops.push(CMatrix::zeros(d, n));
    }
    KrausChannel::new(ops)
}

/// `max_ij ‖Φ(E_ij) - Ψ(E_ij)‖_F`: channels compared by action on matrix units.
pub fn action_residual(a: &LinearMap, b: &LinearMap) -> Result<f64> {
    let n = a.in_dim();
    if n != b.in_dim() {
        return Err(Error::Shape("maps on different input spaces".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let e = CMatrix::unit(n, i, j);
            let x = a.apply_matrix(&e)?;
            let y = b.apply_matrix(&e)?;
            if x.shape() != y.shape() {
                return Err(Error::Shape("maps into different output spaces".into()));
            }
            worst = worst.max((&x - &y).frobenius_norm());
        }
    }
    Ok(worst)
}

pub fn kraus_action_residual(a: &KrausChannel, b: &KrausChannel) -> Result<f64> {
    action_residual(&LinearMap::Kraus(a.clone()), &LinearMap::Kraus(b.clone()))
}

/// `a ∘ b`: apply `b` first. Kraus set `{A_i B_j}`.
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if b.out_dim != a.in_dim {
        return Err(Error::Shape(format!("cannot compose {}->{} after {}->{}", a.in_dim, a.out_dim, b.in_dim, b.out_dim)));
    }
    let ops = a.kraus_ops.iter().flat_map(|ka| b.kraus_ops.iter().map(move |kb| ka * kb)).collect();
    KrausChannel::new(ops)
}

/// `a ⊗ b` with Kraus set `{A_i ⊗ B_j}`.
pub fn tensor(a: &KrausChannel, b: &KrausChannel) -> KrausChannel {
    let ops = a.kraus_ops.iter().flat_map(|ka| b.kraus_ops.iter().map(move |kb| kron(ka, kb))).collect();
    KrausChannel::new(ops).expect("Kronecker products share a shape")
}

/// Map → normalized Choi operator → Kraus form.
pub fn jamiolkowski_roundtrip(ch: &KrausChannel) -> Result<KrausChannel> {
    let c = choi_of(ch, Normalization::Normalized);
    kraus_from_choi(&c, KRAUS_RANK_TOL)
}

fn square_channel(ch: &KrausChannel) -> Result<usize> {
    if ch.in_dim != ch.out_dim {
        return Err(Error::Shape(format!("superoperator needs in = out, got {}->{}", ch.in_dim, ch.out_dim)));
    }
    Ok(ch.in_dim)
}

/// `Σ conj(K) ⊗ K`, acting on column-major vectorizations.
pub fn superoperator(ch: &KrausChannel) -> Result<CMatrix> {
    let n = square_channel(ch)?;
    let mut s = CMatrix::zeros(n * n, n * n);
    for k in &ch.kraus_ops {
        s += &kron(&k.conj(), k);
    }
    Ok(s)
}

pub fn spectral_radius(ch: &KrausChannel) -> Result<f64> {
    let s = superoperator(ch)?;
    Ok(eigenvalues(&s)?.iter().fold(0.0f64, |m, z| m.max(z.norm())))
}

fn unvec(v: &[C64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| v[i + j * n])
}

/// Invariant density of a TP channel, validated by `‖Φ(r) - r‖_S1 <= 1e-8`.
///
/// The eigenvalue-1 eigenspace of the superoperator is computed as a null
/// space; each basis element is split into Hermitian parts whose positive
/// and negative parts are candidate fixed points, and the best candidate
/// after renormalization is returned.
pub fn fixed_point(ch: &KrausChannel) -> Result<DensityMatrix> {
    let n = square_channel(ch)?;
    let defect = ch.tp_defect();
    if defect > TP_TOL {
        return Err(Error::NotTracePreserving { defect });
    }
    let mut m = superoperator(ch)?;
    for k in 0..n * n {
        m[(k, k)] -= ONE;
    }
    let gram = &m.adjoint() * &m;
    let null = gram_nullspace(&gram, 1e-14)?;
    let mut best: Option<(f64, CMatrix)> = None;
    for v in &null {
        let r = unvec(v, n);
        let parts = [r.hermitian_part(), r.scale(C64::new(0.0, -1.0)).hermitian_part()];
        for h in parts {
            let e = hermitian_eig(&h, HERM_TOL)?;
            for sign in [1.0, -1.0] {
                let p = e.apply_fn(|l| (sign * l).max(0.0));
                let t = p.trace().re;
                if t <= 1e-8 {
                    continue;
                }
                let cand = p.scale_real(1.0 / t);
                let res = schatten_norm(&(&ch.apply_matrix(&cand)? - &cand), 1.0)?;
                if best.as_ref().is_none_or(|(b, _)| res < *b) {
                    best = Some((res, cand));
                }
            }
        }
    }
    match best {
        Some((res, r)) if res <= FIXED_POINT_TOL => DensityMatrix::new(r),
        Some((res, _)) => Err(Error::Numerical(format!("fixed point residual {res:.3e}"))),
        None => Err(Error::Numerical("no eigenvalue within tolerance of 1".into())),
    }
}

/// `E(a|B) = Σ p_j a p_j` for the block algebra of a PVM.
pub fn conditional_expectation(a: &Observable, pvm: &Pvm) -> Result<Observable> {
    pvm.validate(MEASURE_TOL)?;
    if pvm.dim() != a.dim() {
        return Err(Error::Shape(format!("observable of dimension {} and PVM of dimension {}", a.dim(), pvm.dim())));
    }
    let mut out = CMatrix::zeros(a.dim(), a.dim());
    for p in &pvm.projectors {
        out += &(&(p * a.matrix()) * p);
    }
    Observable::new(out)
}

fn check_projector(p: &CMatrix, dim: usize) -> Result<()> {
    if p.shape() != (dim, dim) {
        return Err(Error::Shape(format!("projector is {}x{}, state is {dim}x{dim}", p.rows(), p.cols())));
    }
    if p.hermiticity_defect() > MEASURE_TOL || (p * p).max_abs_diff(p) > MEASURE_TOL {
        return Err(Error::Domain("event is not an orthogonal projection".into()));
    }
    Ok(())
}

/// Lüders update: `(tr(ρp), pρp / tr(ρp))`.
pub fn lueders_update(rho: &DensityMatrix, p: &CMatrix, prob_tol: f64) -> Result<(f64, DensityMatrix)> {
    check_projector(p, rho.dim())?;
    let post = &(p * rho.matrix()) * p;
    let prob = post.trace().re;
    if prob <= prob_tol {
        return Err(Error::ZeroProbability { prob });
    }
    Ok((prob, DensityMatrix::new(post.scale_real(1.0 / prob))?))
}

/// `tr(pρp q) / tr(ρp)`.
pub fn conditional_probability(q: &CMatrix, p: &CMatrix, rho: &DensityMatrix, prob_tol: f64) -> Result<f64> {
    check_projector(q, rho.dim())?;
    let (_, post) = lueders_update(rho, p, prob_tol)?;
    Ok((post.matrix() * q).trace().re)
}

/// Family of CP maps indexed by outcomes whose sum is trace preserving.
#[derive(Debug, Clone)]
pub struct Instrument {
    outcomes: Vec<Outcome>,
    cp_maps: Vec<KrausChannel>,
}

impl Instrument {
    pub fn new(outcomes: Vec<Outcome>, cp_maps: Vec<KrausChannel>) -> Result<Self> {
        if cp_maps.is_empty() || outcomes.len() != cp_maps.len() {
            return Err(Error::Shape("instrument needs one CP map per outcome".into()));
        }
        let (n, d) = (cp_maps[0].in_dim, cp_maps[0].out_dim);
        if cp_maps.iter().any(|m| (m.in_dim, m.out_dim) != (n, d)) {
            return Err(Error::Shape("instrument maps have different dimensions".into()));
        }
        let all: Vec<CMatrix> = cp_maps.iter().flat_map(|m| m.kraus_ops.iter().cloned()).collect();
        let defect = KrausChannel::new(all)?.tp_defect();
        if defect > TP_TOL {
            return Err(Error::NotTracePreserving { defect });
        }
        Ok(Instrument { outcomes, cp_maps })
    }

    /// Von Neumann instrument `ρ ↦ p_j ρ p_j`.
    pub fn von_neumann(pvm: &Pvm) -> Result<Self> {
        pvm.validate(MEASURE_TOL)?;
        let maps = pvm.projectors.iter().map(|p| KrausChannel::new(vec![p.clone()])).collect::<Result<_>>()?;
        Self::new(pvm.outcomes.clone(), maps)
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn cp_maps(&self) -> &[KrausChannel] {
        &self.cp_maps
    }
}

#[derive(Debug, Clone)]
pub struct InstrumentOutcome {
    pub outcome: Outcome,
    pub prob: f64,
    /// `None` when `prob <= prob_tol`.
    pub posterior: Option<DensityMatrix>,
}

/// Generalized Lüders rule: `prob_x = tr T_x(ρ)`, posterior `T_x(ρ)/prob_x`.
pub fn instrument_apply(ins: &Instrument, rho: &DensityMatrix, prob_tol: f64) -> Result<Vec<InstrumentOutcome>> {
    ins.outcomes
        .iter()
        .zip(&ins.cp_maps)
        .map(|(o, t)| {
            let out = t.apply_matrix(rho.matrix())?;
            let prob = out.trace().re;
            let posterior =
                if prob > prob_tol { Some(DensityMatrix::new(out.scale_real(1.0 / prob))?) } else { None };
            Ok(InstrumentOutcome { outcome: o.clone(), prob, posterior })
        })
        .collect()
}

/// `Σ_x T_x(ρ)`.
pub fn instrument_marginal(ins: &Instrument, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let d = ins.cp_maps[0].out_dim;
    let mut s = CMatrix::zeros(d, d);
    for t in &ins.cp_maps {
        s += &t.apply_matrix(rho.matrix())?;
    }
    DensityMatrix::new(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{frobenius_inner, schatten_norm};
    use crate::measure::{law_of_pvm, spectral_decompose, CLUSTER_TOL};
    use crate::random::{random_channel, random_density, random_hermitian, random_matrix, random_unitary, rng};

    fn sqrt_half() -> f64 {
        std::f64::consts::FRAC_1_SQRT_2
    }

    #[test]
    fn apply_examples() {
        let mut r = rng(40);
        let rho = random_density(2, 2, &mut r);
        let out = KrausChannel::identity(2).apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let u = random_unitary(2, &mut r);
        let out = KrausChannel::unitary(u.clone()).unwrap().apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(&rho.matrix().conjugate_by(&u)) < 1e-14);

        let out = KrausChannel::depolarizing(0.0).unwrap().apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);

        let not_tp = KrausChannel::new(vec![CMatrix::identity(2).scale_real(0.5)]).unwrap();
        assert!(matches!(not_tp.apply(&rho), Err(Error::NotTracePreserving { .. })));
        assert!(matches!(KrausChannel::identity(3).apply(&rho), Err(Error::Shape(_))));
    }

    #[test]
    fn choi_examples() {
        let c = choi_of(&KrausChannel::identity(2), Normalization::Raw);
        let w = [ONE * sqrt_half(), ZERO, ZERO, ONE * sqrt_half()];
        assert!(c.matrix().max_abs_diff(&CMatrix::outer(&w, &w).scale_real(2.0)) < 1e-15);
        let e = hermitian_eig(c.matrix(), HERM_TOL).unwrap();
        assert_eq!(e.eigenvalues.iter().filter(|l| l.abs() > 1e-12).count(), 1);

        // identity under the normalized convention is the projector onto |W>
        let cn = choi_of(&KrausChannel::identity(2), Normalization::Normalized);
        assert!((&(cn.matrix() * cn.matrix()) - cn.matrix()).max_abs() < 1e-15);

        let t = ChoiMatrix::transpose_map(2);
        assert_eq!(t.matrix(), &gates::swap());
        assert!((t.min_eigenvalue() + 1.0).abs() < 1e-12);
        let via_fn = ChoiMatrix::of_fn(2, 2, |x| x.transpose());
        assert_eq!(via_fn.matrix(), t.matrix());
    }

    #[test]
    fn depolarizing_choi_spectrum() {
        for lambda in [-0.6, -1.0 / 3.0, 0.0, 0.3, 0.5, 1.0, 1.2] {
            let c = ChoiMatrix::depolarizing(lambda).with_normalization(Normalization::Normalized);
            let e = hermitian_eig(c.matrix(), HERM_TOL).unwrap();
            let mut oracle = vec![(1.0 + 3.0 * lambda) / 4.0, (1.0 - lambda) / 4.0, (1.0 - lambda) / 4.0, (1.0 - lambda) / 4.0];
            oracle.sort_by(f64::total_cmp);
            for (a, b) in e.eigenvalues.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{lambda}: {a} vs {b}");
            }
            let props = c.properties(PSD_TOL);
            assert_eq!(props.cp, (-1.0 / 3.0..=1.0).contains(&lambda), "{lambda}");
            assert!(props.tp && props.unital && props.hermiticity);
            if props.cp {
                let k = KrausChannel::depolarizing(lambda).unwrap();
                let res = action_residual(&LinearMap::Kraus(k), &LinearMap::Choi(c.clone())).unwrap();
                assert!(res < 1e-12);
            } else {
                assert!(KrausChannel::depolarizing(lambda).is_err());
            }
        }
    }

    #[test]
    fn property_table() {
        let mut r = rng(41);
        let u = KrausChannel::unitary(random_unitary(3, &mut r)).unwrap();
        assert_eq!(
            channel_properties(&u, PSD_TOL),
            ChannelProperties { cp: true, tp: true, unital: true, hermiticity: true }
        );
        let mp = KrausChannel::replacement(&DensityMatrix::maximally_mixed(2), 2);
        let p = channel_properties(&mp, PSD_TOL);
        assert!(p.cp && p.tp && p.unital);
        // Choi oracle: replacement by σ has Choi I ⊗ σ
        let c = choi_of(&mp, Normalization::Raw);
        assert!(c.matrix().max_abs_diff(&CMatrix::identity(4).scale_real(0.5)) < 1e-15);
        assert_eq!(c.properties(PSD_TOL), p);

        let t = ChoiMatrix::transpose_map(2).properties(PSD_TOL);
        assert!(!t.cp && t.tp && t.unital && t.hermiticity);

        let amp = KrausChannel::new(vec![
            CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.6]]),
            CMatrix::from_real_rows(&[&[0.0, 0.8], &[0.0, 0.0]]),
        ])
        .unwrap();
        let p = channel_properties(&amp, PSD_TOL);
        assert!(p.cp && p.tp && !p.unital);
        assert_eq!(choi_of(&amp, Normalization::Raw).properties(PSD_TOL), p);
    }

    #[test]
    fn kraus_extraction() {
        let mut r = rng(42);
        let u = random_unitary(3, &mut r);
        let ch = KrausChannel::unitary(u).unwrap();
        let back = kraus_from_choi(&choi_of(&ch, Normalization::Raw), KRAUS_RANK_TOL).unwrap();
        assert_eq!(back.kraus_ops().len(), 1);
        assert!(kraus_action_residual(&ch, &back).unwrap() < 1e-12);

        let dep = KrausChannel::depolarizing(0.5).unwrap();
        let back = kraus_from_choi(&choi_of(&dep, Normalization::Normalized), KRAUS_RANK_TOL).unwrap();
        assert_eq!(back.kraus_ops().len(), 4);
        assert!(kraus_action_residual(&dep, &back).unwrap() < 1e-9);

        // rank-deficient: two Kraus operators on C^3
        let ch = random_channel(3, 3, 2, &mut r);
        let back = kraus_from_choi(&choi_of(&ch, Normalization::Raw), KRAUS_RANK_TOL).unwrap();
        assert_eq!(back.kraus_ops().len(), 2);
        assert!(kraus_action_residual(&ch, &back).unwrap() < 1e-9);

        match kraus_from_choi(&ChoiMatrix::transpose_map(2), KRAUS_RANK_TOL) {
            Err(Error::NotCompletelyPositive { min_eigenvalue }) => assert!((min_eigenvalue + 1.0).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn composition_and_tensor() {
        let mut r = rng(43);
        let ch = random_channel(2, 3, 3, &mut r);
        let id3 = KrausChannel::identity(3);
        assert!(kraus_action_residual(&compose(&id3, &ch).unwrap(), &ch).unwrap() < 1e-14);
        let other = random_channel(3, 2, 2, &mut r);
        let comp = compose(&other, &ch).unwrap();
        assert!(comp.tp_defect() < 1e-10);
        assert!(compose(&ch, &ch).is_err());

        let u = random_unitary(2, &mut r);
        let v = random_unitary(3, &mut r);
        let t = tensor(&KrausChannel::unitary(u.clone()).unwrap(), &KrausChannel::unitary(v.clone()).unwrap());
        let uv = KrausChannel::unitary(kron(&u, &v)).unwrap();
        assert!(kraus_action_residual(&t, &uv).unwrap() < 1e-13);

        let a = random_channel(2, 2, 2, &mut r);
        let b = random_channel(2, 2, 3, &mut r);
        let ab = tensor(&a, &b);
        assert!(ab.tp_defect() < 1e-10);
        let rho = random_density(2, 2, &mut r);
        let sigma = random_density(2, 2, &mut r);
        let lhs = ab.apply(&crate::states::product_density(&rho, &sigma)).unwrap();
        let rhs = kron(a.apply(&rho).unwrap().matrix(), b.apply(&sigma).unwrap().matrix());
        assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn jamiolkowski() {
        let mut r = rng(44);
        for ch in [KrausChannel::depolarizing(0.3).unwrap(), random_channel(3, 3, 4, &mut r), random_channel(2, 4, 2, &mut r)] {
            let back = jamiolkowski_roundtrip(&ch).unwrap();
            assert!(kraus_action_residual(&ch, &back).unwrap() < 1e-9);
        }
        // normalized Choi of a CPTP map is a density
        let c = choi_of(&random_channel(3, 2, 2, &mut r), Normalization::Normalized);
        DensityMatrix::new(c.matrix().clone()).unwrap();
    }

    #[test]
    fn superoperator_matches_action() {
        let mut r = rng(45);
        let ch = random_channel(3, 3, 2, &mut r);
        let s = superoperator(&ch).unwrap();
        let x = random_matrix(3, 3, &mut r);
        let vx: Vec<C64> = (0..9).map(|k| x[(k % 3, k / 3)]).collect();
        let img = unvec(&s.matvec(&vx), 3);
        assert!(img.max_abs_diff(&ch.apply_matrix(&x).unwrap()) < 1e-13);
    }

    #[test]
    fn perron_frobenius_examples() {
        let mut r = rng(46);
        let u = KrausChannel::unitary(random_unitary(3, &mut r)).unwrap();
        for z in eigenvalues(&superoperator(&u).unwrap()).unwrap() {
            assert!((z.norm() - 1.0).abs() < 1e-10);
        }

        let dep = KrausChannel::depolarizing(0.5).unwrap();
        let mut spec: Vec<f64> = eigenvalues(&superoperator(&dep).unwrap()).unwrap().iter().map(|z| z.re).collect();
        spec.sort_by(f64::total_cmp);
        for (a, b) in spec.iter().zip([0.5, 0.5, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let fp = fixed_point(&dep).unwrap();
        assert!(fp.matrix().max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-12);

        for _ in 0..10 {
            let ch = random_channel(3, 3, 3, &mut r);
            assert!((spectral_radius(&ch).unwrap() - 1.0).abs() < 1e-9);
            let fp = fixed_point(&ch).unwrap();
            let res = schatten_norm(&(ch.apply(&fp).unwrap().matrix() - fp.matrix()), 1.0).unwrap();
            assert!(res < FIXED_POINT_TOL);
        }

        // identity channel: every state is fixed, one is returned
        let fp = fixed_point(&KrausChannel::identity(2)).unwrap();
        assert!((fp.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_expectation_examples() {
        let z = Pvm::computational(2);
        let e = conditional_expectation(&Observable::new(gates::pauli_x()).unwrap(), &z).unwrap();
        assert!(e.matrix().max_abs() < 1e-15);

        let mut r = rng(47);
        let blocks = Pvm::new(
            vec![Outcome::Index(0), Outcome::Index(1)],
            vec![CMatrix::diag_real(&[1.0, 1.0, 0.0]), CMatrix::diag_real(&[0.0, 0.0, 1.0])],
        )
        .unwrap();
        let h = random_hermitian(2, &mut r);
        let bd = CMatrix::direct_sum(&[h, CMatrix::diag_real(&[0.7])]);
        let e = conditional_expectation(&Observable::new(bd.clone()).unwrap(), &blocks).unwrap();
        assert!(e.matrix().max_abs_diff(&bd) < 1e-15);

        let u = random_unitary(4, &mut r);
        let pvm = spectral_decompose(
            &Observable::new(CMatrix::diag_real(&[1.0, 1.0, 2.0, 3.0]).conjugate_by(&u)).unwrap(),
            CLUSTER_TOL,
        )
        .to_pvm();
        for _ in 0..10 {
            let a = Observable::new(random_hermitian(4, &mut r)).unwrap();
            let e = conditional_expectation(&a, &pvm).unwrap();
            for p in &pvm.projectors {
                assert!(e.matrix().commutator(p).max_abs() < 1e-12);
            }
            let ee = conditional_expectation(&e, &pvm).unwrap();
            assert!(ee.matrix().max_abs_diff(e.matrix()) < 1e-12);
            let diff = a.matrix() - e.matrix();
            let n2 = |m: &CMatrix| frobenius_inner(m, m).unwrap().re;
            assert!((n2(a.matrix()) - n2(&diff) - n2(e.matrix())).abs() < 1e-10);
            // Galerkin: orthogonal to every block-diagonal b
            let b = conditional_expectation(&Observable::new(random_hermitian(4, &mut r)).unwrap(), &pvm).unwrap();
            assert!(frobenius_inner(b.matrix(), &diff).unwrap().norm() < 1e-10);
        }
        let id = conditional_expectation(&Observable::new(CMatrix::identity(4)).unwrap(), &pvm).unwrap();
        assert!(id.matrix().max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn lueders_examples() {
        let p0 = CMatrix::unit(2, 0, 0);
        let (prob, post) = lueders_update(&DensityMatrix::basis(2, 0), &p0, PROB_TOL).unwrap();
        assert_eq!(prob, 1.0);
        assert_eq!(post.matrix(), &p0);
        let (prob, post) = lueders_update(&DensityMatrix::maximally_mixed(2), &p0, PROB_TOL).unwrap();
        assert_eq!(prob, 0.5);
        assert_eq!(post.matrix(), &p0);

        let rho = DensityMatrix::new(CMatrix::diag_real(&[0.5, 0.3, 0.2])).unwrap();
        let p = CMatrix::diag_real(&[1.0, 1.0, 0.0]);
        let (prob, post) = lueders_update(&rho, &p, PROB_TOL).unwrap();
        assert!((prob - 0.8).abs() < 1e-15);
        assert!(post.matrix().max_abs_diff(&CMatrix::diag_real(&[0.625, 0.375, 0.0])) < 1e-15);
        assert!(((post.matrix() * &p).trace().re - 1.0).abs() < 1e-15);

        let q = CMatrix::diag_real(&[1.0, 0.0, 1.0]);
        assert!((conditional_probability(&q, &p, &rho, PROB_TOL).unwrap() - 0.625).abs() < 1e-15);
        assert!((conditional_probability(&p, &p, &rho, PROB_TOL).unwrap() - 1.0).abs() < 1e-15);

        assert!(matches!(
            lueders_update(&DensityMatrix::basis(2, 1), &p0, PROB_TOL),
            Err(Error::ZeroProbability { .. })
        ));
        assert!(lueders_update(&rho, &CMatrix::diag_real(&[0.5, 1.0, 0.0]), PROB_TOL).is_err());
    }

    #[test]
    fn lueders_subevent_renormalizes() {
        let mut r = rng(48);
        for _ in 0..20 {
            let u = random_unitary(4, &mut r);
            let p = CMatrix::diag_real(&[1.0, 1.0, 1.0, 0.0]).conjugate_by(&u);
            let q = CMatrix::diag_real(&[1.0, 0.0, 0.0, 0.0]).conjugate_by(&u);
            let rho = random_density(4, 3, &mut r);
            let pq = (rho.matrix() * &q).trace().re;
            let pp = (rho.matrix() * &p).trace().re;
            assert!((conditional_probability(&q, &p, &rho, PROB_TOL).unwrap() - pq / pp).abs() < 1e-12);
        }
    }

    #[test]
    fn instrument_examples() {
        let mut r = rng(49);
        let pvm = Pvm::computational(3);
        let ins = Instrument::von_neumann(&pvm).unwrap();
        let rho = random_density(3, 3, &mut r);
        let res = instrument_apply(&ins, &rho, PROB_TOL).unwrap();
        let born = law_of_pvm(&pvm, &rho).unwrap();
        for (o, p) in res.iter().zip(&born.probs) {
            assert!((o.prob - p).abs() < 1e-14);
            // rank-one projector outcome: posterior is the basis state
            let k = match o.outcome {
                Outcome::Index(k) => k,
                _ => unreachable!(),
            };
            assert!(o.posterior.as_ref().unwrap().matrix().max_abs_diff(&CMatrix::unit(3, k, k)) < 1e-14);
        }
        let marg = instrument_marginal(&ins, &rho).unwrap();
        assert!(marg.matrix().max_abs_diff(&CMatrix::diag(&rho.matrix().diagonal())) < 1e-15);

        // random instrument: blocks of one channel's Kraus set
        let ch = random_channel(2, 2, 4, &mut r);
        let ops = ch.kraus_ops();
        let maps = vec![
            KrausChannel::new(ops[..1].to_vec()).unwrap(),
            KrausChannel::new(ops[1..].to_vec()).unwrap(),
        ];
        let ins = Instrument::new(vec![Outcome::Index(0), Outcome::Index(1)], maps).unwrap();
        let res = instrument_apply(&ins, &random_density(2, 2, &mut r), PROB_TOL).unwrap();
        assert!((res.iter().map(|o| o.prob).sum::<f64>() - 1.0).abs() < 1e-10);

        let zero_branch = instrument_apply(&Instrument::von_neumann(&Pvm::computational(2)).unwrap(), &DensityMatrix::basis(2, 0), PROB_TOL)
            .unwrap();
        assert!(zero_branch[1].posterior.is_none());

        let half = KrausChannel::new(vec![CMatrix::identity(2).scale_real(0.5)]).unwrap();
        assert!(Instrument::new(vec![Outcome::Index(0)], vec![half]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let ch = KrausChannel::depolarizing(0.5).unwrap();
        let s = serde_json::to_string(&ch).unwrap();
        assert!(s.starts_with(r#"{"kraus":["#) && s.contains(r#""in_dim":2,"out_dim":2"#));
        let back: KrausChannel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ch);

        let c = choi_of(&ch, Normalization::Normalized);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains(r#""normalization":"normalized""#));
        let back: ChoiMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);

        let m: LinearMap = serde_json::from_str(&serde_json::to_string(&ChoiMatrix::transpose_map(2)).unwrap()).unwrap();
        assert!(matches!(m, LinearMap::Choi(_)));
        let m: LinearMap = serde_json::from_str(&serde_json::to_string(&ch).unwrap()).unwrap();
        assert!(matches!(m, LinearMap::Kraus(_)));
        assert!(serde_json::from_str::<KrausChannel>(r#"{"kraus":[],"in_dim":2,"out_dim":2}"#).is_err());
    }
}
