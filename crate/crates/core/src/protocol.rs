//! Two-Rabi-gate qubit-oscillator protocol: preparation of an asymmetric
//! SCS, phase sensing under noise, inverse processing and qubit readout.
//!
//! Circuit on |g>|0>: qubit rotation exp[i(φ+π/2)σ_y], entangler
//! exp[i(α/√2)σ_z X], disentangler exp[i(β/√2)σ_y P] with β = π/(2α),
//! then frame operations D(−iα/2), R(π/2) on the oscillator and a qubit
//! rotation that parks the (ideally disentangled) qubit in |g>. Processing
//! is the exact inverse of the same circuit.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::channels::{oscillator_channel_on_joint, qubit_dephasing, NoiseSpec};
use crate::closedform::scs_projection_probability;
use crate::error::{arg, Error, Result};
use crate::fisher::{cfi_binary, FisherCurve};
use crate::fockspace::{
    c, default_dim, gate_unitary, kron, number, qubit, rotation, trace_out_oscillator, trace_out_qubit, CMat, CVec,
    DensityMatrix, Gate, C64, I, TAIL_TOL,
};
use crate::probes::scs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Outcome "plus" is |g>.
    SigmaZ,
    /// Outcome "plus" is |+_i> = (|e> + i|g>)/√2.
    #[default]
    SigmaY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DephasingPlacement {
    /// σ_z-flip mixture applied together with the phase rotation.
    #[default]
    Sensing,
    /// Applied after inverse processing, right before the qubit readout.
    BeforeReadout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub alpha: f64,
    pub phi_eps: f64,
    /// Oscillator truncation; `None` picks `default_dim(alpha)`.
    pub dim: Option<usize>,
    pub noise: NoiseSpec,
    pub basis: Basis,
    pub rabi_error: f64,
    pub dephasing_at: DephasingPlacement,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            alpha: 4.0,
            phi_eps: 0.172f64.atan(),
            dim: None,
            noise: NoiseSpec::ideal(),
            basis: Basis::SigmaY,
            rabi_error: 0.0,
            dephasing_at: DephasingPlacement::Sensing,
        }
    }
}

impl ProtocolConfig {
    /// Config targeting |0> + ε|α>.
    pub fn new(alpha: f64, epsilon: f64) -> Self {
        ProtocolConfig { alpha, phi_eps: epsilon.atan(), ..Default::default() }
    }
    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }
    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }
    pub fn with_rabi_error(mut self, r: f64) -> Self {
        self.rabi_error = r;
        self
    }
    pub fn epsilon(&self) -> f64 {
        self.phi_eps.tan()
    }
    pub fn dim(&self) -> usize {
        self.dim.unwrap_or_else(|| default_dim(self.alpha))
    }
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return arg(format!("protocol alpha {} must be positive", self.alpha));
        }
        if !(0.0..FRAC_PI_2).contains(&self.phi_eps) {
            return arg(format!("phi_eps {} outside [0, π/2)", self.phi_eps));
        }
        if !(self.rabi_error.abs() <= 0.1) {
            return arg(format!("rabi_error {} outside [-0.1, 0.1]", self.rabi_error));
        }
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Fidelity of the noiseless oscillator marginal to |0> + ε|α>.
    pub scs_fidelity: f64,
    pub qubit_purity: f64,
    /// Linear entropy 1 − tr ρ_q² of the prepared joint pure state.
    pub residual_entanglement: f64,
    /// Population of |g> after the parking rotation.
    pub qubit_ground_population: f64,
    pub tail_mass: f64,
    pub dim: usize,
    pub frames: Vec<String>,
}

/// exp[i(α/√2) σ_z X] = |g><g| ⊗ D(−iα/2) + |e><e| ⊗ D(iα/2).
pub fn entangler(alpha: f64, dim: usize) -> Result<CMat> {
    let dp = gate_unitary(Gate::Displace, C64::new(0.0, alpha / 2.0), dim)?.mat;
    let dm = gate_unitary(Gate::Displace, C64::new(0.0, -alpha / 2.0), dim)?.mat;
    let pg = kron(&(qubit::g() * qubit::g().adjoint()), &dm);
    let pe = kron(&(qubit::e() * qubit::e().adjoint()), &dp);
    Ok(pg + pe)
}

/// exp[i(β/√2) σ_y P] = Σ_s |s_i><s_i| ⊗ D(−sβ/2), with P = i(a† − a)/√2.
pub fn disentangler(beta: f64, dim: usize) -> Result<CMat> {
    let mut u = CMat::zeros(2 * dim, 2 * dim);
    for s in [1.0, -1.0] {
        let v = qubit::plus_i(s);
        let d = gate_unitary(Gate::Displace, c(-s * beta / 2.0), dim)?.mat;
        u += kron(&(&v * v.adjoint()), &d);
    }
    Ok(u)
}

/// exp(iχσ_y) on the qubit: rotates (cos a, sin a) in the (g, e) plane to angle a + χ.
fn qubit_rotation(chi: f64) -> CMat {
    CMat::identity(2, 2) * c(chi.cos()) + qubit::sigma_y() * (I * chi.sin())
}

fn lift_qubit(q: &CMat, dim: usize) -> CMat {
    kron(q, &CMat::identity(dim, dim))
}

fn lift_osc(o: &CMat) -> CMat {
    kron(&CMat::identity(2, 2), o)
}

/// Parking angle that maps the ideal post-disentangler qubit (|e> − |g>)/√2 to |g>.
const PARK: f64 = -3.0 * PI / 4.0;

/// Full preparation unitary for the given (possibly miscalibrated) strengths.
fn preparation_unitary(cfg: &ProtocolConfig, dim: usize) -> Result<CMat> {
    let scale = 1.0 + cfg.rabi_error;
    let a_gate = cfg.alpha * scale;
    let beta = PI / (2.0 * cfg.alpha) * scale;
    let rq = lift_qubit(&qubit_rotation(cfg.phi_eps + FRAC_PI_2), dim);
    let e = entangler(a_gate, dim)?;
    let d = disentangler(beta, dim)?;
    // frames use the nominal amplitude
    let shift = gate_unitary(Gate::Displace, C64::new(0.0, -cfg.alpha / 2.0), dim)?.mat;
    let frame = lift_osc(&(rotation(FRAC_PI_2, dim) * shift));
    let park = lift_qubit(&qubit_rotation(PARK), dim);
    Ok(park * frame * d * e * rq)
}

fn readout_projector(basis: Basis) -> CMat {
    let v = match basis {
        Basis::SigmaZ => qubit::g(),
        Basis::SigmaY => qubit::plus_i(1.0),
    };
    &v * v.adjoint()
}

/// A configured protocol with everything θ-independent precomputed.
///
/// P(θ) = tr[M R(θ) σ R(θ)†] with σ the noisy prepared state and M the
/// readout projector pulled back through the processing. Because R(θ) is
/// diagonal, P(θ) = Re Σ_Δ c_Δ e^{iΔθ} over photon-number differences Δ.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub config: ProtocolConfig,
    pub diagnostics: Diagnostics,
    coeffs: Vec<C64>,
    dim: usize,
    prepared: CMat,
}

impl Protocol {
    pub fn build(config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let dim = config.dim();
        let n2 = 2 * dim;
        let u = preparation_unitary(&config, dim)?;
        let mut psi0 = CVec::zeros(n2);
        psi0[0] = c(1.0);
        let psi = &u * &psi0;
        let pure = &psi * psi.adjoint();

        let tail: f64 = (0..2).map(|q| psi[q * dim + dim - 1].norm_sqr() + psi[q * dim + dim - 2].norm_sqr()).sum();
        if tail > TAIL_TOL {
            return Err(Error::Truncation { tail, tol: TAIL_TOL, dim });
        }

        let rho_q = trace_out_oscillator(&pure, dim);
        let qubit_purity = (&rho_q * &rho_q).trace().re;
        let rho_o = trace_out_qubit(&pure, dim);
        let target = scs(config.alpha, config.epsilon(), dim)?;
        let scs_fidelity = target.amps().dotc(&(&rho_o * target.amps())).re;
        let diagnostics = Diagnostics {
            scs_fidelity,
            qubit_purity,
            residual_entanglement: 1.0 - qubit_purity,
            qubit_ground_population: rho_q[(0, 0)].re,
            tail_mass: tail,
            dim,
            frames: vec![
                format!("oscillator displacement D(-i*{}/2)", config.alpha),
                "oscillator rotation R(pi/2)".into(),
                format!("qubit rotation exp(i*{PARK:.6}*sigma_y)"),
            ],
        };

        let mut sigma = oscillator_channel_on_joint(&pure, dim, &config.noise)?;
        let p = config.noise.dephasing_p;
        let mut proj = lift_qubit(&readout_projector(config.basis), dim);
        if p > 0.0 {
            match config.dephasing_at {
                DephasingPlacement::Sensing => sigma = qubit_dephasing(&sigma, dim, p)?,
                // the dephasing map is self-dual, so it can act on the projector
                DephasingPlacement::BeforeReadout => proj = qubit_dephasing(&proj, dim, p)?,
            }
        }
        let m = &u * proj * u.adjoint();

        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * dim - 1];
        for j in 0..n2 {
            for k in 0..n2 {
                let delta = (j % dim) as isize - (k % dim) as isize;
                coeffs[(delta + dim as isize - 1) as usize] += m[(k, j)] * sigma[(j, k)];
            }
        }
        Ok(Protocol { config, diagnostics, coeffs, dim, prepared: sigma })
    }

    fn eval(&self, theta: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        let off = self.dim as isize - 1;
        for (i, cd) in self.coeffs.iter().enumerate() {
            let delta = i as isize - off;
            let z = cd * (I * (theta * delta as f64)).exp();
            p += z.re;
            dp -= delta as f64 * z.im;
        }
        (p, dp)
    }

    /// Probability of the "plus" readout outcome.
    pub fn p_plus(&self, theta: f64) -> f64 {
        self.eval(theta).0.clamp(0.0, 1.0)
    }

    pub fn dp_plus(&self, theta: f64) -> f64 {
        self.eval(theta).1
    }

    pub fn cfi(&self, theta: f64) -> Result<f64> {
        let (p, dp) = self.eval(theta);
        cfi_binary(p.clamp(0.0, 1.0), dp)
    }

    pub fn readout(&self, thetas: &[f64]) -> ReadoutCurve {
        ReadoutCurve { thetas: thetas.to_vec(), p_plus: thetas.iter().map(|&t| self.p_plus(t)).collect() }
    }

    /// Noisy prepared joint state (before rotation), for QFI comparisons.
    pub fn prepared_state(&self) -> DensityMatrix {
        DensityMatrix::from_raw(self.prepared.clone())
    }

    /// QFI of the noisy prepared joint state for the generator 1 ⊗ n̂.
    pub fn probe_qfi(&self) -> Result<f64> {
        let g = lift_osc(&number(self.dim));
        Ok(crate::fisher::qfi_sld(&self.prepared_state(), &g)?.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadoutCurve {
    pub thetas: Vec<f64>,
    pub p_plus: Vec<f64>,
}

impl ReadoutCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,p_plus\n");
        for (t, p) in self.thetas.iter().zip(&self.p_plus) {
            s.push_str(&format!("{t:.12e},{p:.12e}\n"));
        }
        s
    }
}

/// Joint state after preparation, with diagnostics.
pub fn prepare(config: &ProtocolConfig) -> Result<(DensityMatrix, Diagnostics)> {
    let p = Protocol::build(*config)?;
    Ok((p.prepared_state(), p.diagnostics))
}

pub fn run(config: &ProtocolConfig, theta: f64) -> Result<f64> {
    Ok(Protocol::build(*config)?.p_plus(theta))
}

pub fn protocol_cfi(config: &ProtocolConfig, thetas: &[f64]) -> Result<FisherCurve> {
    let p = Protocol::build(*config)?;
    Ok(FisherCurve::from_fn(thetas.to_vec(), |t| p.cfi(t))?
        .with_meta("alpha", config.alpha)
        .with_meta("epsilon", config.epsilon())
        .with_meta("eta", config.noise.eta)
        .with_meta("dephasing_p", config.noise.dephasing_p)
        .with_meta("basis", format!("{:?}", config.basis)))
}

/// Large-amplitude detection probability of |+_i> as a closed expression
/// in α, ε, η (α' = α√η, f = e^{−α²(1−η)/2}).
pub fn p_plus_closed_form(theta: f64, alpha: f64, epsilon: f64, eta: f64) -> f64 {
    let a = alpha;
    let ap = alpha * eta.sqrt();
    let f = (-a * a * (1.0 - eta) / 2.0).exp();
    let e = epsilon;
    let base = -a * a - ap * ap;
    let eit = C64::from_polar(1.0, theta);
    let z = (C64::new(0.5 * a * a, 0.0) + eit * (a * ap) + base).exp();
    let w = (C64::new(0.5 * (a * a + ap * ap), 0.0) + eit * (a * ap) + base).exp();
    let v = (C64::new(0.5 * ap * ap, 0.0) + eit * (a * ap) + base).exp();
    let sum = e * e * (-ap * ap).exp()
        + e.powi(4) * (2.0 * a * ap * theta.cos() + base).exp()
        + 2.0 * e.powi(3) * z.im
        + e * e * (-a * a).exp()
        + 1.0
        + 2.0 * f * e * e * w.im
        + 2.0 * f * e.powi(3) * v.re
        + 2.0 * f * e * (-ap * ap / 2.0).exp();
    sum / (e * e + 1.0).powi(2)
}

/// Exact large-α limit of the σ_y readout: projection of the lossy probe
/// onto the balanced SCS (|0> − i|α>)/√2.
pub fn p_plus_balanced(theta: f64, alpha: f64, epsilon: f64, eta: f64) -> f64 {
    scs_projection_probability(alpha, epsilon, 1.0, -FRAC_PI_2, eta, theta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasCurve {
    pub thetas: Vec<f64>,
    /// ⟨θ − θ'⟩ with θ' the infinite-data estimate.
    pub bias: Vec<f64>,
}

impl BiasCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,bias\n");
        for (t, b) in self.thetas.iter().zip(&self.bias) {
            s.push_str(&format!("{t:.12e},{b:.12e}\n"));
        }
        s
    }
}

/// Systematic bias from miscalibrated Rabi strengths. The estimate θ' inverts
/// the calibrated (rabi_error = 0) readout curve on the monotone branch
/// around θ = 0 at the probability produced by the miscalibrated circuit.
pub fn bias_study(config: &ProtocolConfig, thetas: &[f64]) -> Result<BiasCurve> {
    if thetas.iter().any(|t| t.abs() > 0.05 + 1e-12) {
        return arg("bias study grid must lie within [-0.05, 0.05]");
    }
    let actual = Protocol::build(*config)?;
    let model = Protocol::build(ProtocolConfig { rabi_error: 0.0, ..*config })?;
    // monotone branch around 0, grown outward until the slope changes sign
    let step = 2.5e-4;
    let slope0 = model.eval(0.0).1;
    if slope0.abs() < 1e-9 {
        return Err(Error::EstimatorUndefined("calibrated readout is flat at 0".into()));
    }
    let sign = slope0.signum();
    let edge = |dir: f64| {
        let mut x = 0.0;
        while x < 0.2 && model.eval(dir * (x + step)).1 * sign > 0.0 {
            x += step;
        }
        dir * x
    };
    let (lo_t, hi_t) = (edge(-1.0), edge(1.0));
    let (pa, pb) = (model.eval(lo_t).0, model.eval(hi_t).0);
    let (lo, hi) = (pa.min(pb), pa.max(pb));
    let mut bias = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let target = actual.eval(t).0;
        if target < lo || target > hi {
            return Err(Error::EstimatorUndefined(format!("P = {target} outside the invertible window")));
        }
        let est = crate::closedform::bisect(|x| (model.eval(x).0 - target) * sign, lo_t, hi_t, 1e-14)?;
        bias.push(t - est);
    }
    Ok(BiasCurve { thetas: thetas.to_vec(), bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::coherent_state;

    #[test]
    fn entangler_displaces_conditionally() {
        let dim = 30;
        let e = entangler(2.0, dim).unwrap();
        let mut psi = CVec::zeros(2 * dim);
        psi[dim] = c(1.0);
        let out = &e * psi;
        let want = coherent_state(C64::new(0.0, 1.0), dim).unwrap();
        let ov = want.amps().dotc(&out.rows(dim, dim).into_owned());
        assert!((ov.norm_sqr() - 1.0).abs() < 1e-6);
        let id = entangler(0.0, dim).unwrap();
        assert!((id - CMat::identity(2 * dim, 2 * dim)).camax() < 1e-12);
    }

    #[test]
    fn disentangler_zero_is_identity() {
        let d = disentangler(0.0, 10).unwrap();
        assert!((d - CMat::identity(20, 20)).camax() < 1e-12);
    }

    #[test]
    fn preparation_quality_grows_with_alpha() {
        let small = Protocol::build(ProtocolConfig { phi_eps: PI / 4.0, ..ProtocolConfig::new(2.0, 1.0) }).unwrap();
        let big = Protocol::build(ProtocolConfig { phi_eps: PI / 4.0, ..ProtocolConfig::new(6.0, 1.0) }).unwrap();
        // the two σ_y branches stay displaced by ±β/2, so the marginal is a
        // two-component mixture whose top eigenvalue is (1 + e^{−β²/2})/2
        let beta: f64 = PI / 12.0;
        let ceiling = (1.0 + (-beta * beta / 2.0).exp()) / 2.0;
        assert!((big.diagnostics.scs_fidelity - ceiling).abs() < 1e-3, "{:?}", big.diagnostics);
        assert!(big.diagnostics.scs_fidelity > 0.98);
        assert!(small.diagnostics.residual_entanglement > big.diagnostics.residual_entanglement);
        let vac = Protocol::build(ProtocolConfig { phi_eps: 0.0, ..ProtocolConfig::new(4.0, 0.0) }).unwrap();
        // vacuum target: marginal is an even mixture of |±β/2>
        let b4: f64 = PI / 8.0;
        assert!((vac.diagnostics.scs_fidelity - (-b4 * b4 / 4.0).exp()).abs() < 1e-6, "{:?}", vac.diagnostics);
    }

    #[test]
    fn ideal_readout_values() {
        let z = Protocol::build(ProtocolConfig::new(6.0, 1.0).with_basis(Basis::SigmaZ)).unwrap();
        assert!(z.p_plus(0.0) >= 0.999);
        let y = Protocol::build(ProtocolConfig::new(6.0, 1.0)).unwrap();
        assert!((y.p_plus(0.0) - 0.5).abs() <= 0.01);
    }

    #[test]
    fn trig_form_matches_direct_evaluation() {
        let cfg = ProtocolConfig::new(3.0, 0.5).with_noise(NoiseSpec::loss(0.95)).with_dim(40);
        let p = Protocol::build(cfg).unwrap();
        let u = preparation_unitary(&cfg, 40).unwrap();
        let theta = 0.137;
        let rot = lift_osc(&rotation(theta, 40));
        let sig = &rot * &p.prepared * rot.adjoint();
        let back = u.adjoint() * sig * &u;
        let direct = (lift_qubit(&readout_projector(Basis::SigmaY), 40) * back).trace().re;
        assert!((direct - p.p_plus(theta)).abs() < 1e-12);
        let h = 1e-5;
        let fd = (p.p_plus(theta + h) - p.p_plus(theta - h)) / (2.0 * h);
        assert!((fd - p.dp_plus(theta)).abs() < 1e-7);
    }

    #[test]
    fn run_tracks_balanced_projection() {
        for (alpha, eps, eta) in [(4.0, 1.0, 1.0), (4.0, 0.3, 0.95), (5.0, 0.5, 0.99)] {
            let p = Protocol::build(ProtocolConfig::new(alpha, eps).with_noise(NoiseSpec::loss(eta))).unwrap();
            for t in [0.0, 0.02, -0.05, 0.05] {
                let sim = p.p_plus(t);
                let bal = p_plus_balanced(t, alpha, eps, eta);
                assert!((sim - bal).abs() < 0.02, "α={alpha} ε={eps} η={eta} θ={t}: {sim} vs {bal}");
            }
        }
    }

    #[test]
    fn closed_form_agrees_at_balanced_weight() {
        for t in [0.0, 0.03, 0.08] {
            // printed orientation projects onto |0> + i|α>, the mirror image
            let cf = p_plus_closed_form(-t, 4.0, 1.0, 0.97);
            let bal = p_plus_balanced(t, 4.0, 1.0, 0.97);
            assert!((cf - bal).abs() < 0.02 * bal, "{t}: {cf} vs {bal}");
        }
        let sim = Protocol::build(ProtocolConfig::new(4.0, 1.0).with_noise(NoiseSpec::loss(0.97))).unwrap();
        for t in [0.0, 0.01, 0.03] {
            let cf = p_plus_closed_form(-t, 4.0, 1.0, 0.97);
            assert!((sim.p_plus(t) - cf).abs() < 0.02 * cf);
        }
        let a = p_plus_closed_form(0.0, 3.0, 0.0, 0.9);
        let b = p_plus_closed_form(0.7, 3.0, 0.0, 0.9);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn loss_kills_sigma_z_center() {
        let noise = NoiseSpec::loss(0.99);
        let y = Protocol::build(ProtocolConfig::new(4.0, 0.172).with_noise(noise)).unwrap();
        let z = Protocol::build(ProtocolConfig::new(4.0, 0.172).with_noise(noise).with_basis(Basis::SigmaZ)).unwrap();
        assert!(y.cfi(0.0).unwrap() > 10.0 * z.cfi(0.0).unwrap());
        assert!(y.dp_plus(0.0).abs() > 1e-3);
    }

    #[test]
    fn ideal_peak_near_closed_form() {
        let p = Protocol::build(ProtocolConfig::new(6.0, 0.3)).unwrap();
        let n = crate::probes::scs_mean_photon(6.0, 0.3);
        let want = 4.0 * n * (1.0 + 36.0 - n);
        let grid = crate::fisher::uniform_grid(-0.02, 0.02, 81);
        let peak = grid.iter().map(|&t| p.cfi(t).unwrap()).fold(0.0, f64::max);
        assert!((peak - want).abs() < 0.1 * want, "{peak} vs {want}");
    }

    #[test]
    fn sensing_dephasing_is_milder_than_loss() {
        let base = ProtocolConfig::new(4.0, 0.172);
        let dep = NoiseSpec { dephasing_p: 0.1, ..NoiseSpec::ideal() };
        let at = |c: ProtocolConfig| Protocol::build(c).unwrap().cfi(1e-4).unwrap();
        let ideal = at(base);
        let lossy = at(base.with_noise(NoiseSpec::loss(0.99)));
        let dephased = at(base.with_noise(dep));
        assert!(ideal - dephased < ideal - lossy, "{ideal} {dephased} {lossy}");
        for noise in [NoiseSpec::loss(0.99), dep] {
            assert!(at(base.with_noise(noise)) > at(base.with_noise(noise).with_basis(Basis::SigmaZ)));
        }
        let mut late = base.with_noise(dep);
        late.dephasing_at = DephasingPlacement::BeforeReadout;
        assert!(at(late) < dephased);
    }

    #[test]
    fn bias_weakly_depends_on_state() {
        let mut vals = vec![];
        for a in [2.0, 3.0, 4.0] {
            for e in [1.0, 0.7] {
                let b = bias_study(&ProtocolConfig::new(a, e).with_rabi_error(0.01), &[-0.05, 0.05]).unwrap();
                assert!(b.bias[0] > 0.0 && b.bias[1] < 0.0);
                vals.push(b.bias[1].abs());
            }
        }
        let (lo, hi) = vals.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo < 1.3, "{vals:?}");
    }

    #[test]
    fn cfi_below_probe_qfi() {
        let p = Protocol::build(ProtocolConfig::new(3.0, 0.4).with_noise(NoiseSpec::loss(0.97)).with_dim(45)).unwrap();
        let q = p.probe_qfi().unwrap();
        for t in [0.0, 0.05, 0.1, 0.2] {
            assert!(p.cfi(t).unwrap() <= q * 1.02, "{t}");
        }
    }

    #[test]
    fn bias_study_behaviour() {
        let grid = [-0.05, -0.02, 0.0, 0.02, 0.05];
        let zero = bias_study(&ProtocolConfig::new(3.0, 1.0), &grid).unwrap();
        assert!(zero.bias.iter().all(|b| b.abs() < 1e-9));
        let b = bias_study(&ProtocolConfig::new(3.0, 1.0).with_rabi_error(0.01), &grid).unwrap();
        assert!(b.bias[2].abs() <= 1e-4);
        assert!(b.bias[4].abs() > 1e-4 && b.bias[4].abs() < 1e-2, "{:?}", b.bias);
        let z = bias_study(&ProtocolConfig::new(3.0, 1.0).with_basis(Basis::SigmaZ).with_rabi_error(0.01), &grid);
        assert!(matches!(z, Err(Error::EstimatorUndefined(_))));
    }
}
