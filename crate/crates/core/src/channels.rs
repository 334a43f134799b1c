//! Bosonic loss, thermal-loss, phase rotation and qubit dephasing maps.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fockspace::{c, ln_binomial, ln_factorials, CMat, DensityMatrix, I, TAIL_TOL};

/// Largest thermal environment we are willing to dilate into.
pub const MAX_ENV_DIM: usize = 400;
const ENV_TAIL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub eta: f64,
    pub n_th: f64,
    pub dephasing_p: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseSpec {
    pub fn ideal() -> Self {
        Self { eta: 1.0, n_th: 0.0, dephasing_p: 0.0 }
    }
    pub fn loss(eta: f64) -> Self {
        Self { eta, ..Self::ideal() }
    }
    pub fn thermal(eta: f64, n_th: f64) -> Self {
        Self { eta, n_th, dephasing_p: 0.0 }
    }
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return arg(format!("eta {} outside (0, 1]", self.eta));
        }
        if !(self.n_th >= 0.0) {
            return arg(format!("n_th {} negative", self.n_th));
        }
        if !(0.0..=1.0).contains(&self.dephasing_p) {
            return arg(format!("dephasing p {} outside [0, 1]", self.dephasing_p));
        }
        Ok(())
    }
    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.n_th == 0.0 && self.dephasing_p == 0.0
    }
    /// The oscillator part of the noise: thermal loss, or plain loss if n_th = 0.
    pub fn apply_oscillator(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.validate()?;
        if self.n_th > 0.0 {
            thermal_loss_channel(rho, self.eta, self.n_th)
        } else {
            loss_channel(rho, self.eta)
        }
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return arg(format!("eta {eta} outside (0, 1]"));
    }
    Ok(())
}

/// Amplitude of a^l acting as the l-th loss Kraus operator: element (m-l, m).
fn loss_kraus_elements(dim: usize, eta: f64) -> Vec<Vec<f64>> {
    let lf = ln_factorials(dim);
    let (le, lg) = (eta.ln(), (1.0 - eta).ln());
    (0..dim)
        .map(|l| {
            (0..dim)
                .map(|m| {
                    if m < l {
                        return 0.0;
                    }
                    if l > 0 && eta == 1.0 {
                        return 0.0;
                    }
                    let mut x = ln_binomial(&lf, m, l) + (m - l) as f64 * le;
                    if l > 0 {
                        x += l as f64 * lg;
                    }
                    (0.5 * x).exp()
                })
                .collect()
        })
        .collect()
}

/// Pure loss: sum_l (1-eta)^l/l! eta^{n/2} a^l rho a†^l eta^{n/2}.
pub fn loss_channel(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    check_eta(eta)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let d = rho.dim();
    let r = rho.mat();
    let k = loss_kraus_elements(d, eta);
    let mut out = CMat::zeros(d, d);
    for l in 0..d {
        let kl = &k[l];
        for j in 0..d - l {
            let a = kl[j + l];
            if a == 0.0 {
                continue;
            }
            for m in 0..d - l {
                let b = kl[m + l];
                out[(j, m)] += r[(j + l, m + l)] * (a * b);
            }
        }
    }
    Ok(DensityMatrix::from_raw(out))
}

/// Thermal occupation distribution truncated where its tail drops below 1e-13.
pub fn thermal_weights(n_th: f64) -> Result<Vec<f64>> {
    if n_th == 0.0 {
        return Ok(vec![1.0]);
    }
    let q = n_th / (n_th + 1.0);
    // tail beyond K levels is q^K
    let k = (ENV_TAIL.ln() / q.ln()).ceil() as usize;
    if k > MAX_ENV_DIM {
        return Err(Error::Truncation { tail: q.powi(MAX_ENV_DIM as i32), tol: ENV_TAIL, dim: MAX_ENV_DIM });
    }
    let k = k.max(1);
    let mut w: Vec<f64> = (0..k).map(|j| q.powi(j as i32) / (n_th + 1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    Ok(w)
}

/// <j, N-j| U_BS |m, k> for a beamsplitter of transmissivity eta, N = m + k.
fn bs_amplitude(lf: &[f64], eta: f64, j: usize, m: usize, k: usize) -> f64 {
    let n = m + k;
    if j > n {
        return 0.0;
    }
    let (le, lg) = (eta.ln(), (1.0 - eta).ln());
    let pow = |e_pow: usize, g_pow: usize| -> Option<f64> {
        // 0.5 * (e_pow ln eta + g_pow ln(1-eta)), with 0^0 = 1
        if (g_pow > 0 && eta == 1.0) || (e_pow > 0 && eta == 0.0) {
            return None;
        }
        let mut x = 0.0;
        if e_pow > 0 {
            x += e_pow as f64 * le;
        }
        if g_pow > 0 {
            x += g_pow as f64 * lg;
        }
        Some(0.5 * x)
    };
    let norm = 0.5 * (lf[j] + lf[n - j] - lf[m] - lf[k]);
    let mut total = 0.0;
    let r_lo = j.saturating_sub(k);
    for r in r_lo..=m.min(j) {
        let jr = j - r;
        if jr > k {
            continue;
        }
        let e_pow = r + (k - jr);
        let g_pow = (m - r) + jr;
        let Some(p) = pow(e_pow, g_pow) else { continue };
        let x = ln_binomial(lf, m, r) + ln_binomial(lf, k, jr) + p + norm;
        let sign = if (m - r) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * x.exp();
    }
    total
}

/// Thermal loss by beamsplitter dilation with a thermal environment mode.
///
/// Each environment input level k and output level e gives one Kraus
/// operator sqrt(p_k) <e|U|k>, a single band j = m + k - e; output levels
/// at or above `dim` are dropped and must carry less than 1e-8 of the trace.
pub fn thermal_loss_channel(rho: &DensityMatrix, eta: f64, n_th: f64) -> Result<DensityMatrix> {
    check_eta(eta)?;
    if !(n_th >= 0.0) {
        return arg(format!("n_th {n_th} negative"));
    }
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let out = thermal_map(rho.mat(), eta, n_th)?;
    let lost = rho.trace() - out.trace().re;
    if lost > TAIL_TOL {
        return Err(Error::Truncation { tail: lost, tol: TAIL_TOL, dim: rho.dim() });
    }
    Ok(DensityMatrix::from_raw(out))
}

fn thermal_map(r: &CMat, eta: f64, n_th: f64) -> Result<CMat> {
    let w = thermal_weights(n_th)?;
    let d = r.nrows();
    let kenv = w.len();
    let lf = ln_factorials(d + kenv + 2);
    let mut out = CMat::zeros(d, d);
    for (k, &pk) in w.iter().enumerate() {
        // amp[m][j] = <j, m+k-j|U|m,k>
        let amp: Vec<Vec<f64>> = (0..d)
            .map(|m| (0..d.min(m + k + 1)).map(|j| bs_amplitude(&lf, eta, j, m, k)).collect())
            .collect();
        for e in 0..(d + k) {
            // j = m + k - e; m ranges where both j, m are in range
            let m_lo = e.saturating_sub(k);
            if m_lo >= d {
                continue;
            }
            let band: Vec<(usize, usize, f64)> = (m_lo..d)
                .filter_map(|m| {
                    let j = m + k - e;
                    (j < d).then(|| (m, j, amp[m].get(j).copied().unwrap_or(0.0)))
                })
                .collect();
            for &(m, j, a) in &band {
                if a == 0.0 {
                    continue;
                }
                for &(m2, j2, b) in &band {
                    out[(j, j2)] += r[(m, m2)] * (pk * a * b);
                }
            }
        }
    }
    Ok(out)
}

/// rho -> exp(i theta n) rho exp(-i theta n).
pub fn phase_rotation(rho: &DensityMatrix, theta: f64) -> DensityMatrix {
    let d = rho.dim();
    let ph: Vec<_> = (0..d).map(|k| (I * (theta * k as f64)).exp()).collect();
    let m = CMat::from_fn(d, d, |j, k| rho.mat()[(j, k)] * ph[j] * ph[k].conj());
    DensityMatrix::from_raw(m)
}

/// Same map on a raw matrix, used for joint qubit-oscillator states where
/// the rotation acts on each qubit block.
pub fn rotate_joint(joint: &CMat, dim: usize, theta: f64) -> CMat {
    let n = joint.nrows();
    let ph: Vec<_> = (0..n).map(|i| (I * (theta * (i % dim) as f64)).exp()).collect();
    CMat::from_fn(n, n, |j, k| joint[(j, k)] * ph[j] * ph[k].conj())
}

/// rho -> (1-p) rho + p (sigma_z x 1) rho (sigma_z x 1) on a 2*dim joint state.
pub fn qubit_dephasing(joint: &CMat, dim: usize, p: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&p) {
        return arg(format!("dephasing probability {p} outside [0, 1]"));
    }
    if joint.nrows() != 2 * dim {
        return Err(Error::InvalidDimension(format!("joint dim {} != 2*{dim}", joint.nrows())));
    }
    let mut out = joint.clone();
    let s = c(1.0 - 2.0 * p);
    for i in 0..dim {
        for j in 0..dim {
            out[(i, dim + j)] *= s;
            out[(dim + i, j)] *= s;
        }
    }
    Ok(out)
}

/// Applies the oscillator noise to each qubit block of a joint state. Loss
/// and thermal loss are linear maps, so off-diagonal blocks transform with
/// the same Kraus operators.
pub fn oscillator_channel_on_joint(joint: &CMat, dim: usize, noise: &NoiseSpec) -> Result<CMat> {
    noise.validate()?;
    if noise.eta == 1.0 {
        return Ok(joint.clone());
    }
    let mut out = CMat::zeros(2 * dim, 2 * dim);
    for qi in 0..2 {
        for qj in 0..2 {
            let block = joint.view((qi * dim, qj * dim), (dim, dim)).clone_owned();
            let mapped = if noise.n_th > 0.0 {
                thermal_map(&block, noise.eta, noise.n_th)?
            } else {
                loss_channel(&DensityMatrix::from_raw(block), noise.eta)?.into_mat()
            };
            out.view_mut((qi * dim, qj * dim), (dim, dim)).copy_from(&mapped);
        }
    }
    let lost = joint.trace().re - out.trace().re;
    if lost > TAIL_TOL {
        return Err(Error::Truncation { tail: lost, tol: TAIL_TOL, dim });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{coherent_state, fock_state, C64};

    #[test]
    fn coherent_closure_under_loss() {
        let rho = coherent_state(c(2.0), 40).unwrap().density();
        let out = loss_channel(&rho, 0.64).unwrap();
        let want = coherent_state(c(1.6), 40).unwrap().density();
        assert!((out.mat() - want.mat()).camax() < 1e-8);
        assert!((loss_channel(&rho, 1.0).unwrap().mat() - rho.mat()).camax() == 0.0);
        assert!(loss_channel(&rho, 0.0).is_err());
        assert!(loss_channel(&rho, 1.2).is_err());
    }

    #[test]
    fn thermal_reduces_to_loss() {
        let rho = coherent_state(C64::new(1.1, 0.4), 30).unwrap().density();
        let a = loss_channel(&rho, 0.8).unwrap();
        let b = thermal_loss_channel(&rho, 0.8, 0.0).unwrap();
        assert!((a.mat() - b.mat()).camax() < 1e-12);
    }

    #[test]
    fn vacuum_thermalisation() {
        let vac = fock_state(0, 30).unwrap().density();
        let out = thermal_loss_channel(&vac, 0.9, 0.1).unwrap();
        assert!((out.mean_photon() - 0.01).abs() < 1e-9, "{}", out.mean_photon());
        let full = thermal_loss_channel(&vac, 1e-12, 0.3).unwrap();
        for k in 0..10 {
            let want = 0.3f64.powi(k) / 1.3f64.powi(k + 1);
            assert!((full.mat()[(k as usize, k as usize)].re - want).abs() < 1e-9);
        }
    }

    #[test]
    fn dephasing_scales_coherence() {
        let plus = crate::fockspace::CVec::from_vec(vec![c(0.5f64.sqrt()), c(0.5f64.sqrt())]);
        let q = &plus * plus.adjoint();
        let vac = fock_state(0, 3).unwrap().density();
        let joint = crate::fockspace::tensor_density(&q, vac.mat()).unwrap();
        let out = qubit_dephasing(&joint, 3, 0.1).unwrap();
        let qm = crate::fockspace::trace_out_oscillator(&out, 3);
        let sx = (crate::fockspace::qubit::sigma_x() * qm).trace().re;
        assert!((sx - 0.8).abs() < 1e-12);
        let erased = qubit_dephasing(&joint, 3, 0.5).unwrap();
        assert!(crate::fockspace::trace_out_oscillator(&erased, 3)[(0, 1)].norm() < 1e-15);
        assert!(qubit_dephasing(&joint, 3, 1.5).is_err());
    }

    #[test]
    fn rotation_periodic_and_covariant() {
        let rho = coherent_state(c(1.3), 30).unwrap().density();
        let back = phase_rotation(&rho, 2.0 * std::f64::consts::PI);
        assert!((back.mat() - rho.mat()).camax() < 1e-12);
        let th = 0.37;
        let rot = phase_rotation(&rho, th);
        let want = coherent_state(c(1.3) * (I * th).exp(), 30).unwrap().density();
        assert!((rot.mat() - want.mat()).camax() < 1e-8);
    }
}
