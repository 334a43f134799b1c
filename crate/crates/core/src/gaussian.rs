//! Single-mode Gaussian states in the covariance-matrix picture
//! (vacuum covariance = identity, displacement = √2 (Re α, Im α)).

use nalgebra::{Matrix2, Vector2};

use crate::channels::check_eta;
use crate::error::{arg, Error, Result};
use crate::fockspace::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub cov: Matrix2<f64>,
    pub disp: Vector2<f64>,
}

impl GaussianState {
    pub fn new(cov: Matrix2<f64>, disp: Vector2<f64>) -> Result<Self> {
        let g = GaussianState { cov, disp };
        g.check()?;
        Ok(g)
    }

    pub fn vacuum() -> Self {
        GaussianState { cov: Matrix2::identity(), disp: Vector2::zeros() }
    }

    pub fn thermal(n_th: f64) -> Self {
        GaussianState { cov: Matrix2::identity() * (2.0 * n_th + 1.0), disp: Vector2::zeros() }
    }

    /// Symmetry and the uncertainty relation cov + iΩ ⪰ 0, which for 2x2
    /// is tr > 0 and det ≥ 1.
    pub fn check(&self) -> Result<()> {
        let v = &self.cov;
        if (v[(0, 1)] - v[(1, 0)]).abs() > 1e-9 {
            return Err(Error::InvalidState("covariance not symmetric".into()));
        }
        if v.trace() <= 0.0 || v.determinant() < 1.0 - 1e-9 {
            return Err(Error::InvalidState(format!("unphysical covariance, det {:.6}", v.determinant())));
        }
        Ok(())
    }

    /// Mean photon number (tr V - 2)/4 + |d|²/2.
    pub fn mean_photon(&self) -> f64 {
        (self.cov.trace() - 2.0) / 4.0 + self.disp.norm_squared() / 2.0
    }

    pub fn purity(&self) -> f64 {
        1.0 / self.cov.determinant().sqrt()
    }
}

/// D[alpha] S[zeta]|0> with real zeta squeezing the X quadrature.
pub fn cm_displaced_squeezed(alpha: C64, zeta: f64) -> GaussianState {
    cm_displaced_squeezed_phase(alpha, zeta, 0.0)
}

/// Squeezing along the direction rotated by phase/2.
pub fn cm_displaced_squeezed_phase(alpha: C64, zeta: f64, phase: f64) -> GaussianState {
    let base = Matrix2::new((-2.0 * zeta).exp(), 0.0, 0.0, (2.0 * zeta).exp());
    let r = rot(phase / 2.0);
    GaussianState {
        cov: r * base * r.transpose(),
        disp: Vector2::new(alpha.re, alpha.im) * std::f64::consts::SQRT_2,
    }
}

fn rot(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

pub fn cm_loss(g: &GaussianState, eta: f64, n_th: f64) -> Result<GaussianState> {
    check_eta(eta)?;
    if !(n_th >= 0.0) {
        return arg("n_th must be non-negative");
    }
    Ok(GaussianState {
        cov: g.cov * eta + Matrix2::identity() * ((1.0 - eta) * (2.0 * n_th + 1.0)),
        disp: g.disp * eta.sqrt(),
    })
}

pub fn cm_rotate(g: &GaussianState, theta: f64) -> GaussianState {
    let r = rot(theta);
    GaussianState { cov: r * g.cov * r.transpose(), disp: r * g.disp }
}

/// Displacement factor exp(-δᵀ(V1+V2)⁻¹δ) shared by overlap and fidelity.
fn disp_factor(g1: &GaussianState, g2: &GaussianState) -> Result<f64> {
    let s = g1.cov + g2.cov;
    let inv = s.try_inverse().ok_or_else(|| Error::NumericalInstability("singular V1+V2".into()))?;
    let d = g1.disp - g2.disp;
    Ok((-(d.transpose() * inv * d)[(0, 0)]).exp())
}

/// Hilbert-Schmidt overlap tr(rho1 rho2).
pub fn cm_overlap(g1: &GaussianState, g2: &GaussianState) -> Result<f64> {
    let det = (g1.cov + g2.cov).determinant();
    Ok(2.0 / det.sqrt() * disp_factor(g1, g2)?)
}

/// Uhlmann fidelity of two single-mode Gaussian states:
/// 2/(√(Δ+Λ) − √Λ) times the displacement factor, with Δ = det(V1+V2)
/// and Λ = (det V1 − 1)(det V2 − 1).
pub fn cm_fidelity(g1: &GaussianState, g2: &GaussianState) -> Result<f64> {
    let delta = (g1.cov + g2.cov).determinant();
    let lambda = (g1.cov.determinant() - 1.0) * (g2.cov.determinant() - 1.0);
    if lambda < -1e-9 || delta + lambda < 0.0 {
        return Err(Error::NumericalInstability(format!("Δ = {delta:.6e}, Λ = {lambda:.6e}")));
    }
    let lambda = lambda.max(0.0);
    let f = 2.0 / ((delta + lambda).sqrt() - lambda.sqrt()) * disp_factor(g1, g2)?;
    Ok(f.clamp(0.0, 1.0))
}

/// Phase QFI of `g` after a loss/thermal channel, from the second
/// difference of the Gaussian fidelity with Richardson over {1e-3, 5e-4}.
pub fn cm_qfi(g: &GaussianState, eta: f64, n_th: f64) -> Result<f64> {
    let out = cm_loss(g, eta, n_th)?;
    let est = |h: f64| -> Result<f64> {
        let a = cm_rotate(&out, -h);
        let b = cm_rotate(&out, h);
        Ok(4.0 * (1.0 - cm_fidelity(&a, &b)?) / (2.0 * h).powi(2))
    };
    let (coarse, fine) = (est(1e-3)?, est(5e-4)?);
    if coarse.abs() < 1e-6 && fine.abs() < 1e-6 {
        return Ok(0.0);
    }
    Ok(((4.0 * fine - coarse) / 3.0).max(0.0))
}

/// Detection probability of a lossy, rotated squeezed vacuum projected onto
/// the ideal squeezed vacuum, and its theta derivative.
pub fn squeezed_binary_probability(nav: f64, eta: f64, n_th: f64, theta: f64) -> Result<(f64, f64)> {
    let r = nav.max(0.0).sqrt().asinh();
    let ideal = cm_displaced_squeezed(C64::new(0.0, 0.0), r);
    let lossy = cm_loss(&ideal, eta, n_th)?;
    let v = cm_rotate(&lossy, theta).cov;
    let m = v + ideal.cov;
    let det = m.determinant();
    let (s, c) = theta.sin_cos();
    let dr = Matrix2::new(-s, -c, c, -s);
    let r = rot(theta);
    let dv = dr * lossy.cov * r.transpose() + r * lossy.cov * dr.transpose();
    // d det M = tr(adj(M) dM)
    let adj = Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]);
    let ddet = (adj * dv).trace();
    let p = 2.0 / det.sqrt();
    let dp = -0.5 * p * ddet / det;
    Ok((p, dp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{c, uhlmann_fidelity};
    use crate::probes::displaced_squeezed;

    #[test]
    fn construction_examples() {
        let v = cm_displaced_squeezed(c(0.0), 0.0);
        assert_eq!(v.cov, Matrix2::identity());
        assert_eq!(v.disp, Vector2::zeros());
        let s = cm_displaced_squeezed(c(0.0), 1.0f64.asinh());
        let root2 = 2.0f64.sqrt();
        assert!((s.cov[(0, 0)] - (3.0 - 2.0 * root2)).abs() < 1e-12);
        assert!((s.cov[(1, 1)] - (3.0 + 2.0 * root2)).abs() < 1e-12);
        let g = cm_displaced_squeezed(c(1.0), 0.5);
        assert!((g.mean_photon() - 1.2715).abs() < 1e-4);
        assert!((g.mean_photon() - (1.0 + 0.5f64.sinh().powi(2))).abs() < 1e-12);
        assert!(GaussianState::new(Matrix2::identity() * 0.5, Vector2::zeros()).is_err());
    }

    #[test]
    fn channel_and_rotation() {
        let s = cm_displaced_squeezed(c(0.7), 0.4);
        assert_eq!(cm_loss(&s, 1.0, 0.0).unwrap(), s);
        let vac = cm_loss(&GaussianState::vacuum(), 0.5, 0.0).unwrap();
        assert!((vac.cov - Matrix2::identity()).amax() < 1e-15);
        let r = 0.3f64;
        let l = cm_loss(&cm_displaced_squeezed(c(0.0), r), 0.9, 0.0).unwrap();
        assert!((l.cov[(0, 0)] - (0.9 * (-2.0 * r).exp() + 0.1)).abs() < 1e-14);
        assert!((l.cov[(1, 1)] - (0.9 * (2.0 * r).exp() + 0.1)).abs() < 1e-14);
        let q = cm_rotate(&l, std::f64::consts::FRAC_PI_2);
        assert!((q.cov[(0, 0)] - l.cov[(1, 1)]).abs() < 1e-12);
        assert!((q.cov.determinant() - l.cov.determinant()).abs() < 1e-12);
        assert_eq!(cm_rotate(&l, 0.0), l);
    }

    #[test]
    fn fidelity_examples() {
        let s = cm_displaced_squeezed(c(0.3), 0.5);
        assert!((cm_fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        let f = cm_fidelity(&GaussianState::vacuum(), &cm_displaced_squeezed(c(1.0), 0.0)).unwrap();
        assert!((f - (-1.0f64).exp()).abs() < 1e-12);
        let a = cm_displaced_squeezed(c(0.0), 0.5);
        let b = cm_rotate(&a, 0.1);
        let fa = displaced_squeezed(c(0.0), c(0.5), 60).unwrap().density();
        let fb = displaced_squeezed(c(0.0), C64::from_polar(0.5, 0.2), 60).unwrap().density();
        let want = uhlmann_fidelity(&fa, &fb).unwrap();
        assert!((cm_fidelity(&a, &b).unwrap() - want).abs() < 1e-4, "{want}");
    }

    #[test]
    fn mixed_fidelity_matches_fock_engine() {
        let g1 = cm_loss(&cm_displaced_squeezed(c(0.5), 0.4), 0.8, 0.1).unwrap();
        let g2 = cm_loss(&cm_displaced_squeezed(C64::new(0.3, 0.2), 0.2), 0.7, 0.0).unwrap();
        let dim = 60;
        let r1 = crate::channels::thermal_loss_channel(&displaced_squeezed(c(0.5), c(0.4), dim).unwrap().density(), 0.8, 0.1)
            .unwrap();
        let r2 = crate::channels::loss_channel(
            &displaced_squeezed(C64::new(0.3, 0.2), c(0.2), dim).unwrap().density(),
            0.7,
        )
        .unwrap();
        let want = uhlmann_fidelity(&r1, &r2).unwrap();
        assert!((cm_fidelity(&g1, &g2).unwrap() - want).abs() < 1e-6, "{want}");
    }

    #[test]
    fn qfi_examples() {
        assert_eq!(cm_qfi(&GaussianState::vacuum(), 1.0, 0.0).unwrap(), 0.0);
        let s = cm_displaced_squeezed(c(0.0), 1.0f64.asinh());
        assert!((cm_qfi(&s, 1.0, 0.0).unwrap() - 16.0).abs() < 1e-3);
        let want = 8.0 * 0.81 * 2.0 / 1.18;
        assert!((cm_qfi(&s, 0.9, 0.0).unwrap() / want - 1.0).abs() < 5e-3);
    }

    #[test]
    fn binary_probability_derivative() {
        let (p0, _) = squeezed_binary_probability(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!((p0 - 1.0).abs() < 1e-12);
        let h = 1e-6;
        let (_, dp) = squeezed_binary_probability(2.0, 0.9, 0.1, 0.3).unwrap();
        let (pp, _) = squeezed_binary_probability(2.0, 0.9, 0.1, 0.3 + h).unwrap();
        let (pm, _) = squeezed_binary_probability(2.0, 0.9, 0.1, 0.3 - h).unwrap();
        assert!((dp - (pp - pm) / (2.0 * h)).abs() < 1e-7);
    }
}
