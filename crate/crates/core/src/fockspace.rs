//! Truncated Fock-space kernel: ladder operators, elementary states,
//! gates, fidelity and the qubit-oscillator tensor structure.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use std::str::FromStr;

use crate::error::{arg, Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Tail mass allowed on the last two retained Fock levels.
pub const TAIL_TOL: f64 = 1e-8;
/// Eigenvalues below this are treated as zero inside matrix square roots.
pub const EIG_FLOOR: f64 = 1e-12;
/// Cap on the joint qubit-oscillator dimension.
pub const MAX_JOINT_DIM: usize = 1024;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `ceil(|a|^2 + 6|a| + 10)`.
pub fn default_dim(alpha_max: f64) -> usize {
    let a = alpha_max.abs();
    (a * a + 6.0 * a + 10.0).ceil() as usize
}

pub fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("dim {dim} < 2")));
    }
    Ok(())
}

/// ln k! for k = 0..=n, accumulated in log space so nothing overflows.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

pub fn ln_binomial(lf: &[f64], n: usize, k: usize) -> f64 {
    lf[n] - lf[k] - lf[n - k]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    Number,
    QuadX,
    QuadP,
    Unitary,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub mat: CMat,
    pub kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct Operators {
    pub a: OperatorMatrix,
    pub adag: OperatorMatrix,
    pub n: OperatorMatrix,
    pub x: OperatorMatrix,
    pub p: OperatorMatrix,
}

pub fn annihilation(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    a
}

pub fn number(dim: usize) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(dim, |k, _| c(k as f64)))
}

pub fn oscillator_operators(dim: usize) -> Result<Operators> {
    check_dim(dim)?;
    let a = annihilation(dim);
    let adag = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &adag) * c(s);
    let p = (&adag - &a) * C64::new(0.0, s);
    let op = |mat, kind| OperatorMatrix { mat, kind };
    Ok(Operators {
        n: op(number(dim), OperatorKind::Number),
        a: op(a, OperatorKind::Annihilation),
        adag: op(adag, OperatorKind::Creation),
        x: op(x, OperatorKind::QuadX),
        p: op(p, OperatorKind::QuadP),
    })
}

/// Eigen-decomposition of a Hermitian matrix. The input is symmetrised first.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5);
    let es = SymmetricEigen::new(h);
    (es.eigenvalues.iter().copied().collect(), es.eigenvectors)
}

/// exp(i t H) for Hermitian H, exactly unitary by construction.
pub fn expm_i_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let mut left = vecs.clone();
    for (j, l) in vals.iter().enumerate() {
        let ph = (I * (t * l)).exp();
        for z in left.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    left * vecs.adjoint()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).camax() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Displace,
    Squeeze,
    Rotate,
}

impl FromStr for Gate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "displace" => Ok(Gate::Displace),
            "squeeze" => Ok(Gate::Squeeze),
            "rotate" => Ok(Gate::Rotate),
            other => arg(format!("unknown gate kind '{other}'")),
        }
    }
}

/// Generator H of the gate written as exp(iH).
fn gate_generator(kind: Gate, param: C64, dim: usize) -> CMat {
    let a = annihilation(dim);
    let ad = a.adjoint();
    match kind {
        // alpha a† - alpha* a = i H
        Gate::Displace => (&ad * param - &a * param.conj()) * (-I),
        // -z/2 a†² + z*/2 a² = i H
        Gate::Squeeze => (&ad * &ad * (-param * 0.5) + &a * &a * (param.conj() * 0.5)) * (-I),
        Gate::Rotate => number(dim) * c(param.re),
    }
}

/// D[alpha], S[zeta] or R[theta] = exp(i theta n) on the truncated space.
pub fn gate_unitary(kind: Gate, param: C64, dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    let mat = match kind {
        Gate::Rotate => rotation(param.re, dim),
        _ => expm_i_hermitian(&gate_generator(kind, param, dim), 1.0),
    };
    Ok(OperatorMatrix { mat, kind: OperatorKind::Unitary })
}

pub fn rotation(theta: f64, dim: usize) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(dim, |k, _| (I * (theta * k as f64)).exp()))
}

#[derive(Debug, Clone)]
pub struct OscillatorState {
    amps: CVec,
    tail: f64,
}

impl OscillatorState {
    /// Normalises `amps` and records the mass on the last two levels.
    pub fn new(amps: CVec) -> Result<Self> {
        check_dim(amps.len())?;
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite amplitude vector".into()));
        }
        let amps = amps / c(norm);
        let d = amps.len();
        let tail = (d - 2..d).map(|k| amps[k].norm_sqr()).sum();
        Ok(Self { amps, tail })
    }

    /// Truncates a longer working vector to `dim`, failing if more than
    /// `tol` of its mass sits on or beyond level `dim - 2`.
    pub fn truncate_from(work: &CVec, dim: usize, tol: f64) -> Result<Self> {
        check_dim(dim)?;
        let total = work.norm_squared();
        if !(total > 0.0) {
            return Err(Error::InvalidState("zero amplitude vector".into()));
        }
        let cut = (dim - 2).min(work.len());
        let kept: f64 = (0..cut).map(|k| work[k].norm_sqr()).sum();
        let tail = (1.0 - kept / total).max(0.0);
        if tail > tol {
            return Err(Error::Truncation { tail, tol, dim });
        }
        let mut amps = CVec::zeros(dim);
        for k in 0..dim.min(work.len()) {
            amps[k] = work[k];
        }
        let mut s = Self::new(amps)?;
        s.tail = tail;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }
    pub fn amps(&self) -> &CVec {
        &self.amps
    }
    pub fn tail_mass(&self) -> f64 {
        self.tail
    }
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { mat: &self.amps * self.amps.adjoint() }
    }
    pub fn mean_photon(&self) -> f64 {
        self.amps.iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum()
    }
    pub fn photon_variance(&self) -> f64 {
        let m = self.mean_photon();
        let m2: f64 = self.amps.iter().enumerate().map(|(k, a)| (k * k) as f64 * a.norm_sqr()).sum();
        m2 - m * m
    }
    pub fn overlap(&self, other: &OscillatorState) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }
    pub fn apply(&self, u: &CMat) -> Result<Self> {
        same_dim(self.dim(), u.nrows())?;
        Self::new(u * &self.amps)
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidDimension(format!("dimension mismatch {a} vs {b}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian and unit trace within 1e-10,
    /// smallest eigenvalue above -1e-9.
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidState("not square".into()));
        }
        check_dim(mat.nrows())?;
        if !is_hermitian(&mat, 1e-10) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {}", tr.re)));
        }
        let (vals, _) = hermitian_eigen(&mat);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix produced by a trusted map (channels, rotations).
    pub(crate) fn from_raw(mat: CMat) -> Self {
        Self { mat }
    }

    pub fn pure(psi: &OscillatorState) -> Self {
        psi.density()
    }
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
    pub fn mat(&self) -> &CMat {
        &self.mat
    }
    pub fn into_mat(self) -> CMat {
        self.mat
    }
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }
    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }
    pub fn mean_photon(&self) -> f64 {
        (0..self.dim()).map(|k| k as f64 * self.mat[(k, k)].re).sum()
    }
    pub fn expect(&self, op: &CMat) -> Result<C64> {
        same_dim(self.dim(), op.nrows())?;
        Ok((&self.mat * op).trace())
    }
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self { mat: &self.mat * c(p) + &other.mat * c(1.0 - p) })
    }
    pub fn conjugate(&self, u: &CMat) -> Result<Self> {
        same_dim(self.dim(), u.nrows())?;
        Ok(Self { mat: u * &self.mat * u.adjoint() })
    }
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.mat).0.into_iter().fold(f64::INFINITY, f64::min)
    }
}

pub fn coherent_amplitudes(alpha: C64, len: usize) -> CVec {
    let mut v = CVec::zeros(len);
    v[0] = c((-alpha.norm_sqr() / 2.0).exp());
    for k in 1..len {
        v[k] = v[k - 1] * alpha / (k as f64).sqrt();
    }
    v
}

/// |alpha> with amplitudes e^{-|a|²/2} a^k / sqrt(k!).
pub fn coherent_state(alpha: C64, dim: usize) -> Result<OscillatorState> {
    check_dim(dim)?;
    let work = coherent_amplitudes(alpha, dim.max(default_dim(alpha.norm())) + 20);
    OscillatorState::truncate_from(&work, dim, TAIL_TOL)
}

pub fn fock_state(n: usize, dim: usize) -> Result<OscillatorState> {
    check_dim(dim)?;
    if n >= dim {
        return Err(Error::InvalidDimension(format!("Fock level {n} needs dim > {n}")));
    }
    let mut v = CVec::zeros(dim);
    v[n] = c(1.0);
    OscillatorState::new(v)
}

/// Square-root factor of `rho` restricted to its support: returns the
/// matrix V_r diag(sqrt(lambda_r)), so that rho = F F†.
pub fn support_factor(rho: &CMat) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(rho);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-9 {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
    }
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > EIG_FLOOR).collect();
    let mut f = vecs.select_columns(&idx);
    for (col, &i) in idx.iter().enumerate() {
        let s = c(vals[i].sqrt());
        for z in f.column_mut(col).iter_mut() {
            *z *= s;
        }
    }
    Ok(f)
}

/// Fidelity from square-root factors: (nuclear norm of F_rho† F_sigma)².
/// Singular values keep small contributions accurate, unlike square roots
/// of tiny eigenvalues.
pub fn fidelity_from_factors(f_rho: &CMat, f_sigma: &CMat) -> f64 {
    let m = f_rho.adjoint() * f_sigma;
    if m.is_empty() {
        return 0.0;
    }
    let t: f64 = m.singular_values().iter().sum();
    (t * t).clamp(0.0, 1.0)
}

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))².
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    let a = support_factor(rho.mat())?;
    let b = support_factor(sigma.mat())?;
    Ok(fidelity_from_factors(&a, &b))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Qubit basis index 0 is |g>, 1 is |e>; joint index = q * dim + k.
pub fn tensor_state(qubit: &CVec, osc: &CVec) -> Result<CVec> {
    check_joint(qubit.len(), osc.len())?;
    Ok(qubit.kronecker(osc))
}

pub fn tensor_density(qubit: &CMat, osc: &CMat) -> Result<CMat> {
    check_joint(qubit.nrows(), osc.nrows())?;
    Ok(qubit.kronecker(osc))
}

fn check_joint(q: usize, d: usize) -> Result<()> {
    if q != 2 {
        return Err(Error::InvalidDimension(format!("qubit part has dim {q}")));
    }
    if 2 * d > MAX_JOINT_DIM {
        return Err(Error::ResourceLimit(format!("joint dim {} above cap {MAX_JOINT_DIM}", 2 * d)));
    }
    Ok(())
}

/// Oscillator marginal of a joint qubit-oscillator matrix.
pub fn trace_out_qubit(joint: &CMat, dim: usize) -> CMat {
    joint.view((0, 0), (dim, dim)) + joint.view((dim, dim), (dim, dim))
}

/// Qubit marginal of a joint qubit-oscillator matrix.
pub fn trace_out_oscillator(joint: &CMat, dim: usize) -> CMat {
    let mut q = CMat::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            q[(i, j)] = joint.view((i * dim, j * dim), (dim, dim)).trace();
        }
    }
    q
}

/// Pauli matrices in the (g, e) basis with sigma_z|e> = |e>.
pub mod qubit {
    use super::{c, CMat, CVec, I};

    pub fn g() -> CVec {
        CVec::from_vec(vec![c(1.0), c(0.0)])
    }
    pub fn e() -> CVec {
        CVec::from_vec(vec![c(0.0), c(1.0)])
    }
    pub fn sigma_x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }
    pub fn sigma_y() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0), I, -I, c(0.0)])
    }
    pub fn sigma_z() -> CMat {
        CMat::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)])
    }
    /// (|e> + s i|g>)/sqrt 2, the sigma_y eigenstates for s = +1, -1.
    pub fn plus_i(s: f64) -> CVec {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        CVec::from_vec(vec![I * (s * r), c(r)])
    }
}
