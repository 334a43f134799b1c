//! Probe-state families with their closed-form mean photon numbers.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fockspace::{
    c, coherent_amplitudes, default_dim, fock_state, CVec, DensityMatrix,
    OscillatorState, C64, TAIL_TOL,
};

/// Displaced squeezed state parameters: D[alpha] S[zeta e^{i phase}] |0>.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GaussParams {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub zeta: f64,
    pub zeta_phase: f64,
}

impl GaussParams {
    pub fn alpha(&self) -> C64 {
        C64::new(self.alpha_re, self.alpha_im)
    }
    pub fn zeta_c(&self) -> C64 {
        C64::from_polar(self.zeta, self.zeta_phase)
    }
    pub fn mean_photon(&self) -> f64 {
        self.zeta.sinh().powi(2) + self.alpha().norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProbeSpec {
    Coherent {
        alpha: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    SqueezedVacuum {
        zeta: f64,
    },
    DisplacedSqueezed {
        alpha: f64,
        #[serde(default)]
        alpha_im: f64,
        zeta: f64,
        #[serde(default)]
        zeta_phase: f64,
    },
    Fock {
        n: usize,
    },
    DisplacedFock {
        alpha: f64,
        #[serde(default)]
        alpha_im: f64,
        n: usize,
    },
    OnState {
        n: usize,
        epsilon: f64,
    },
    Scs {
        alpha: f64,
        epsilon: f64,
    },
    GeneralScs {
        alpha0: f64,
        alpha: f64,
        epsilon: f64,
    },
    ClassicalMixture {
        p: f64,
        alpha: f64,
    },
    GaussianMixture {
        p: f64,
        g1: GaussParams,
        g2: GaussParams,
    },
}

/// A constructed probe: pure when the family is pure.
#[derive(Debug, Clone)]
pub enum ProbeState {
    Pure(OscillatorState),
    Mixed(DensityMatrix),
}

impl ProbeState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            ProbeState::Pure(s) => s.density(),
            ProbeState::Mixed(r) => r.clone(),
        }
    }
    pub fn dim(&self) -> usize {
        match self {
            ProbeState::Pure(s) => s.dim(),
            ProbeState::Mixed(r) => r.dim(),
        }
    }
    pub fn mean_photon(&self) -> f64 {
        match self {
            ProbeState::Pure(s) => s.mean_photon(),
            ProbeState::Mixed(r) => r.mean_photon(),
        }
    }
    pub fn as_pure(&self) -> Option<&OscillatorState> {
        match self {
            ProbeState::Pure(s) => Some(s),
            ProbeState::Mixed(_) => None,
        }
    }
}

impl ProbeSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProbeSpec::Coherent { .. } => "coherent",
            ProbeSpec::SqueezedVacuum { .. } => "squeezed_vacuum",
            ProbeSpec::DisplacedSqueezed { .. } => "displaced_squeezed",
            ProbeSpec::Fock { .. } => "fock",
            ProbeSpec::DisplacedFock { .. } => "displaced_fock",
            ProbeSpec::OnState { .. } => "on_state",
            ProbeSpec::Scs { .. } => "scs",
            ProbeSpec::GeneralScs { .. } => "general_scs",
            ProbeSpec::ClassicalMixture { .. } => "classical_mixture",
            ProbeSpec::GaussianMixture { .. } => "gaussian_mixture",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, name: &str| if x.is_finite() { Ok(()) } else { arg(format!("{name} not finite")) };
        match *self {
            ProbeSpec::Coherent { alpha, alpha_im } => {
                finite(alpha, "alpha")?;
                finite(alpha_im, "alpha_im")
            }
            ProbeSpec::SqueezedVacuum { zeta } => finite(zeta, "zeta"),
            ProbeSpec::DisplacedSqueezed { alpha, alpha_im, zeta, zeta_phase } => {
                finite(alpha + alpha_im + zeta + zeta_phase, "parameters")
            }
            ProbeSpec::Fock { .. } => Ok(()),
            ProbeSpec::DisplacedFock { alpha, alpha_im, .. } => finite(alpha + alpha_im, "alpha"),
            ProbeSpec::OnState { n, epsilon } => {
                if n < 1 {
                    return arg("ON state needs n >= 1");
                }
                finite(epsilon, "epsilon")
            }
            ProbeSpec::Scs { alpha, epsilon } => {
                if alpha < 0.0 {
                    return arg("SCS amplitude must be non-negative");
                }
                finite(epsilon, "epsilon")
            }
            ProbeSpec::GeneralScs { alpha0, alpha, epsilon } => {
                if alpha < 0.0 || alpha0 < 0.0 {
                    return arg("SCS amplitudes must be non-negative");
                }
                finite(epsilon, "epsilon")
            }
            ProbeSpec::ClassicalMixture { p, alpha } => {
                check_p(p)?;
                finite(alpha, "alpha")
            }
            ProbeSpec::GaussianMixture { p, .. } => check_p(p),
        }
    }

    /// Closed-form mean photon number of the family.
    pub fn mean_photon(&self) -> f64 {
        match *self {
            ProbeSpec::Coherent { alpha, alpha_im } => alpha * alpha + alpha_im * alpha_im,
            ProbeSpec::SqueezedVacuum { zeta } => zeta.sinh().powi(2),
            ProbeSpec::DisplacedSqueezed { alpha, alpha_im, zeta, .. } => {
                zeta.sinh().powi(2) + alpha * alpha + alpha_im * alpha_im
            }
            ProbeSpec::Fock { n } => n as f64,
            ProbeSpec::DisplacedFock { alpha, alpha_im, n } => n as f64 + alpha * alpha + alpha_im * alpha_im,
            ProbeSpec::OnState { n, epsilon } => on_mean_photon(n, epsilon),
            ProbeSpec::Scs { alpha, epsilon } => scs_mean_photon(alpha, epsilon),
            ProbeSpec::GeneralScs { alpha0, alpha, epsilon } => general_scs_mean_photon(alpha0, alpha, epsilon),
            ProbeSpec::ClassicalMixture { p, alpha } => (1.0 - p) * alpha * alpha,
            ProbeSpec::GaussianMixture { p, g1, g2 } => p * g1.mean_photon() + (1.0 - p) * g2.mean_photon(),
        }
    }

    /// Smallest dimension that keeps the truncation tail below tolerance
    /// with a small margin.
    pub fn suggested_dim(&self) -> usize {
        match *self {
            ProbeSpec::Coherent { alpha, alpha_im } => default_dim(alpha.hypot(alpha_im)),
            ProbeSpec::Fock { n } | ProbeSpec::OnState { n, .. } => n + 3,
            ProbeSpec::Scs { alpha, .. } => default_dim(alpha),
            ProbeSpec::GeneralScs { alpha0, alpha, .. } => default_dim(alpha.max(alpha0)),
            ProbeSpec::ClassicalMixture { alpha, .. } => default_dim(alpha),
            ProbeSpec::SqueezedVacuum { zeta } => squeezed_len(zeta.abs(), 1e-10) + 3,
            ProbeSpec::DisplacedFock { alpha, alpha_im, n } => {
                let work = displaced_fock_work(C64::new(alpha, alpha_im), n);
                adaptive_len(&work) + 3
            }
            ProbeSpec::DisplacedSqueezed { alpha, alpha_im, zeta, zeta_phase } => {
                let g = GaussParams { alpha_re: alpha, alpha_im, zeta, zeta_phase };
                adaptive_len(&displaced_squeezed_work(&g)) + 3
            }
            ProbeSpec::GaussianMixture { g1, g2, .. } => {
                adaptive_len(&displaced_squeezed_work(&g1)).max(adaptive_len(&displaced_squeezed_work(&g2))) + 3
            }
        }
    }

    pub fn state(&self, dim: usize) -> Result<ProbeState> {
        self.validate()?;
        Ok(match *self {
            ProbeSpec::Coherent { alpha, alpha_im } => {
                ProbeState::Pure(crate::fockspace::coherent_state(C64::new(alpha, alpha_im), dim)?)
            }
            ProbeSpec::SqueezedVacuum { zeta } => ProbeState::Pure(displaced_squeezed(c(0.0), c(zeta), dim)?),
            ProbeSpec::DisplacedSqueezed { alpha, alpha_im, zeta, zeta_phase } => ProbeState::Pure(
                displaced_squeezed(C64::new(alpha, alpha_im), C64::from_polar(zeta, zeta_phase), dim)?,
            ),
            ProbeSpec::Fock { n } => ProbeState::Pure(fock_state(n, dim)?),
            ProbeSpec::DisplacedFock { alpha, alpha_im, n } => {
                ProbeState::Pure(displaced_fock(C64::new(alpha, alpha_im), n, dim)?)
            }
            ProbeSpec::OnState { n, epsilon } => ProbeState::Pure(on_state(n, epsilon, dim)?),
            ProbeSpec::Scs { alpha, epsilon } => ProbeState::Pure(scs(alpha, epsilon, dim)?),
            ProbeSpec::GeneralScs { alpha0, alpha, epsilon } => {
                ProbeState::Pure(general_scs(alpha0, alpha, epsilon, dim)?)
            }
            ProbeSpec::ClassicalMixture { p, alpha } => ProbeState::Mixed(classical_mixture(p, alpha, dim)?),
            ProbeSpec::GaussianMixture { p, g1, g2 } => ProbeState::Mixed(gaussian_mixture(p, &g1, &g2, dim)?),
        })
    }

    /// Builds the state at its suggested dimension.
    pub fn build(&self) -> Result<ProbeState> {
        self.state(self.suggested_dim())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return arg(format!("mixture weight {p} outside [0, 1]"));
    }
    Ok(())
}

pub fn on_mean_photon(n: usize, epsilon: f64) -> f64 {
    let e2 = epsilon * epsilon;
    n as f64 * e2 / (1.0 + e2)
}

pub fn scs_mean_photon(alpha: f64, epsilon: f64) -> f64 {
    let a2 = alpha * alpha;
    a2 * epsilon * epsilon / (2.0 * (-a2 / 2.0).exp() * epsilon + epsilon * epsilon + 1.0)
}

/// Mean photon number of N(|alpha0> + eps |alpha>) for real amplitudes.
pub fn general_scs_mean_photon(alpha0: f64, alpha: f64, epsilon: f64) -> f64 {
    let g = ((alpha - alpha0).powi(2) / 2.0).exp();
    let num = g * (alpha * alpha * epsilon * epsilon + alpha0 * alpha0) + 2.0 * alpha * alpha0 * epsilon;
    let den = g * (epsilon * epsilon + 1.0) + 2.0 * epsilon;
    num / den
}

/// Amplitude weight epsilon for an SCS with amplitude alpha and mean photon n.
/// Solves the quadratic a² e² = n (e² + 2 e^{-a²/2} e + 1) for the positive root.
pub fn scs_epsilon_for(alpha: f64, nav: f64) -> Result<f64> {
    let a2 = alpha * alpha;
    if !(nav > 0.0) || nav >= a2 {
        return Err(Error::Infeasible(format!("SCS needs 0 < N ({nav}) < alpha² ({a2})")));
    }
    let q = (-a2 / 2.0).exp();
    let (qa, qb, qc) = (a2 - nav, -2.0 * nav * q, -nav);
    Ok((-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa))
}

pub fn on_epsilon_for(n: usize, nav: f64) -> Result<f64> {
    let nf = n as f64;
    if !(nav > 0.0) || nav >= nf {
        return Err(Error::Infeasible(format!("ON state needs 0 < N ({nav}) < n ({n})")));
    }
    Ok((nav / (nf - nav)).sqrt())
}

/// (|0> + eps|alpha>) normalised.
pub fn scs(alpha: f64, epsilon: f64, dim: usize) -> Result<OscillatorState> {
    general_scs(0.0, alpha, epsilon, dim)
}

pub fn general_scs(alpha0: f64, alpha: f64, epsilon: f64, dim: usize) -> Result<OscillatorState> {
    let len = dim.max(default_dim(alpha.max(alpha0))) + 20;
    let work = coherent_amplitudes(c(alpha0), len) + coherent_amplitudes(c(alpha), len) * c(epsilon);
    OscillatorState::truncate_from(&work, dim, TAIL_TOL)
}

pub fn on_state(n: usize, epsilon: f64, dim: usize) -> Result<OscillatorState> {
    if n >= dim {
        return Err(Error::InvalidDimension(format!("ON level {n} needs dim > {n}")));
    }
    let mut v = CVec::zeros(dim);
    v[0] = c(1.0);
    v[n] += c(epsilon);
    OscillatorState::new(v)
}

/// Squeezed-vacuum amplitudes for S[zeta]|0>, S = exp(-z/2 a†² + z*/2 a²).
pub fn squeezed_amplitudes(zeta: C64, len: usize) -> CVec {
    let r = zeta.norm();
    let t = r.tanh();
    let ph = if r > 0.0 { zeta / r } else { c(1.0) };
    let mut v = CVec::zeros(len);
    v[0] = c(1.0 / r.cosh().sqrt());
    let mut k = 2;
    while k < len {
        let ratio = ((k - 1) as f64 / k as f64).sqrt();
        v[k] = v[k - 2] * (-ph * t) * ratio;
        k += 2;
    }
    v
}

/// Length at which the squeezed vacuum photon distribution has tail below `tol`.
pub fn squeezed_len(r: f64, tol: f64) -> usize {
    let t2 = r.tanh().powi(2);
    let mut p = 1.0 / r.cosh();
    let mut acc = p;
    let mut k = 0usize;
    while 1.0 - acc > tol && k < 100_000 {
        k += 1;
        // p_k / p_{k-1} = t² (2k)(2k-1)/(4k²)
        p *= t2 * ((2 * k - 1) as f64) / ((2 * k) as f64);
        acc += p;
    }
    2 * k + 1
}

/// First index beyond which the remaining mass of `work` is below 1e-10.
fn adaptive_len(work: &CVec) -> usize {
    let total = work.norm_squared();
    let mut acc = 0.0;
    for k in 0..work.len() {
        acc += work[k].norm_sqr();
        if total - acc < 1e-10 * total {
            return k + 1;
        }
    }
    work.len()
}

/// D(α)v via stepped Taylor series of the tridiagonal generator αa† − α*a.
fn displace(alpha: C64, v: &CVec) -> CVec {
    let len = v.len();
    if alpha.norm() == 0.0 {
        return v.clone();
    }
    let apply = |x: &CVec, a: C64| {
        let mut y = CVec::zeros(len);
        for k in 0..len {
            if k + 1 < len {
                y[k + 1] += a * (((k + 1) as f64).sqrt()) * x[k];
                y[k] -= a.conj() * (((k + 1) as f64).sqrt()) * x[k + 1];
            }
        }
        y
    };
    let steps = (alpha.norm() * 2.0 * (len as f64).sqrt()).ceil().max(1.0) as usize;
    let h = alpha / steps as f64;
    let mut out = v.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut acc = out.clone();
        for j in 1..60 {
            term = apply(&term, h) / c(j as f64);
            acc += &term;
            if term.norm() < 1e-17 * acc.norm() {
                break;
            }
        }
        out = acc;
    }
    out
}

fn displaced_fock_work(alpha: C64, n: usize) -> CVec {
    let len = default_dim(alpha.norm() * (1.0 + (n as f64).sqrt())) + 2 * n + 30;
    let mut v = CVec::zeros(len);
    v[n] = c(1.0);
    displace(alpha, &v)
}

fn displaced_squeezed_work(g: &GaussParams) -> CVec {
    let r = g.zeta.abs();
    let a = g.alpha().norm();
    let len = squeezed_len(r, 1e-14) + default_dim(a * r.exp()) + 20;
    let v = squeezed_amplitudes(g.zeta_c(), len);
    if a == 0.0 {
        v
    } else {
        displace(g.alpha(), &v)
    }
}

pub fn displaced_fock(alpha: C64, n: usize, dim: usize) -> Result<OscillatorState> {
    if n >= dim {
        return Err(Error::InvalidDimension(format!("Fock level {n} needs dim > {n}")));
    }
    if alpha.norm() == 0.0 {
        return fock_state(n, dim);
    }
    let mut work = displaced_fock_work(alpha, n);
    if work.len() < dim + 20 {
        let len = dim + 20;
        let mut v = CVec::zeros(len);
        v[n] = c(1.0);
        work = displace(alpha, &v);
    }
    OscillatorState::truncate_from(&work, dim, TAIL_TOL)
}

/// D[alpha] S[zeta] |0>.
pub fn displaced_squeezed(alpha: C64, zeta: C64, dim: usize) -> Result<OscillatorState> {
    let g = GaussParams { alpha_re: alpha.re, alpha_im: alpha.im, zeta: zeta.norm(), zeta_phase: zeta.arg() };
    let mut work = displaced_squeezed_work(&g);
    if work.len() < dim + 20 {
        let len = dim + 20;
        let v = squeezed_amplitudes(g.zeta_c(), len);
        work = if alpha.norm() == 0.0 { v } else { displace(alpha, &v) };
    }
    OscillatorState::truncate_from(&work, dim, TAIL_TOL)
}

pub fn classical_mixture(p: f64, alpha: f64, dim: usize) -> Result<DensityMatrix> {
    check_p(p)?;
    let vac = fock_state(0, dim)?.density();
    let coh = crate::fockspace::coherent_state(c(alpha), dim)?.density();
    vac.mix(&coh, p)
}

pub fn gaussian_mixture(p: f64, g1: &GaussParams, g2: &GaussParams, dim: usize) -> Result<DensityMatrix> {
    check_p(p)?;
    let r1 = displaced_squeezed(g1.alpha(), g1.zeta_c(), dim)?.density();
    let r2 = displaced_squeezed(g2.alpha(), g2.zeta_c(), dim)?.density();
    r1.mix(&r2, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scs_examples() {
        let v = scs(2.0, 0.0, 20).unwrap();
        assert!((v.amps()[0] - c(1.0)).norm() < 1e-14);
        let n = scs_mean_photon(4.0, 0.172);
        let want = 16.0 * 0.172f64.powi(2) / (2.0 * (-8.0f64).exp() * 0.172 + 1.0 + 0.172f64.powi(2));
        assert!((n - want).abs() < 1e-14);
        assert!((n - 0.4596).abs() < 1e-4);
        let s = scs(4.0, 0.172, 60).unwrap();
        assert!((s.mean_photon() - n).abs() < 1e-8);
        assert!((scs_mean_photon(2.0, 0.5) - 0.72185).abs() < 1e-4);
    }

    #[test]
    fn scs_small_alpha_limit_is_on_like() {
        // (|0> + eps|a>) -> |0> + eps' |1> with eps' = a eps/(eps+1) for small a
        let (a, e) = (1e-3, 0.8);
        let s = scs(a, e, 10).unwrap();
        let ratio = s.amps()[1] / s.amps()[0];
        assert!((ratio.re - a * e / (e + 1.0)).abs() < 1e-8);
    }

    #[test]
    fn general_scs_reductions() {
        let a = general_scs(0.0, 2.0, 0.6, 40).unwrap();
        let b = scs(2.0, 0.6, 40).unwrap();
        assert!((a.amps() - b.amps()).camax() < 1e-14);
        let same = general_scs(1.5, 1.5, 0.6, 40).unwrap();
        assert!((same.mean_photon() - 2.25).abs() < 1e-8);
        let g = general_scs(1.0, 3.0, 1.0, 60).unwrap();
        assert!((g.mean_photon() - general_scs_mean_photon(1.0, 3.0, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn on_and_fock_family() {
        assert!((on_mean_photon(2, 1.0) - 1.0).abs() < 1e-15);
        assert!((on_mean_photon(10, (1.0f64 / 9.0).sqrt()) - 1.0).abs() < 1e-14);
        assert!((on_mean_photon(7, 1e8) - 7.0).abs() < 1e-9);
        assert!(on_state(10, 1.0, 10).is_err());
        let d = displaced_fock(c(0.0), 3, 10).unwrap();
        assert!((d.amps()[3] - c(1.0)).norm() < 1e-15);
        let d = displaced_fock(c(1.0), 2, 40).unwrap();
        assert!((d.mean_photon() - 3.0).abs() < 1e-6);
        let d0 = displaced_fock(c(1.2), 0, 40).unwrap();
        let coh = crate::fockspace::coherent_state(c(1.2), 40).unwrap();
        assert!((d0.amps() - coh.amps()).camax() < 1e-9);
    }

    #[test]
    fn squeezed_family() {
        let z = 1.0f64.asinh();
        let s = displaced_squeezed(c(0.0), c(z), 80).unwrap();
        assert!((s.mean_photon() - 1.0).abs() < 1e-8);
        let s = displaced_squeezed(c(1.0), c(0.5), 60).unwrap();
        assert!((s.mean_photon() - (1.0 + 0.5f64.sinh().powi(2))).abs() < 1e-8);
        assert!((1.0 + 0.5f64.sinh().powi(2) - 1.2715).abs() < 1e-4);
        let z0 = displaced_squeezed(c(0.8), c(0.0), 40).unwrap();
        let coh = crate::fockspace::coherent_state(c(0.8), 40).unwrap();
        assert!((z0.amps() - coh.amps()).camax() < 1e-9);
    }

    #[test]
    fn mixtures() {
        let v = classical_mixture(1.0, 2.0, 30).unwrap();
        assert!((v.mat()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((classical_mixture(0.5, 2.0, 30).unwrap().mean_photon() - 2.0).abs() < 1e-8);
        let g1 = GaussParams::default();
        let g2 = GaussParams { alpha_re: 1.0, ..Default::default() };
        let m = gaussian_mixture(0.5, &g1, &g2, 30).unwrap();
        assert!((m.purity() - 0.5 * (1.0 + (-1.0f64).exp())).abs() < 1e-9);
        assert!((gaussian_mixture(0.0, &g1, &g2, 30).unwrap().purity() - 1.0).abs() < 1e-9);
        assert!((gaussian_mixture(0.3, &g2, &g2, 30).unwrap().purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn epsilon_inversion() {
        let e = scs_epsilon_for(3.0, 1.0).unwrap();
        assert!((scs_mean_photon(3.0, e) - 1.0).abs() < 1e-12);
        let e = on_epsilon_for(10, 1.0).unwrap();
        assert!((e * e - 1.0 / 9.0).abs() < 1e-14);
        assert!(scs_epsilon_for(1.0, 2.0).is_err());
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        let p = ProbeSpec::Scs { alpha: 3.0, epsilon: 0.4 };
        let s = toml::to_string(&p).unwrap();
        assert!(s.contains("family = \"scs\""));
        let back: ProbeSpec = toml::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
