//! Analytic QFI/CFI benchmarks, optima and thresholds used as oracles for
//! the numerical engine.

use std::f64::consts::{E, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fisher::cfi_binary;
use crate::fockspace::C64;
use crate::gaussian::squeezed_binary_probability;

/// Bisection on a sign change of `f` over [a, b].
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Infeasible(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) < tol {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section maximisation of a unimodal function on [a, b]: (x, f(x)).
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Grid scan followed by golden refinement around the best grid point.
pub fn scan_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let step = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    for i in 1..n {
        let x = a + step * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - step).max(a);
    let hi = (best.0 + step).min(b);
    let refined = golden_max(&f, lo, hi, step * 1e-6);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// Principal branch W0 by Halley iteration.
pub fn lambert_w0(z: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if z < branch - 1e-15 || !z.is_finite() {
        return arg(format!("Lambert W0 undefined at {z}"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z - branch < 1e-14 {
        return Ok(-1.0);
    }
    let mut w = if z < -0.3 {
        let p = (2.0 * (E * z + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0
    } else {
        (1.0 + z).ln()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - z;
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        if denom == 0.0 {
            break;
        }
        let next = w - f / denom;
        if (next - w).abs() <= 1e-12 * (1.0 + next.abs()) {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

fn need_eta_open(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::UndefinedLimit(format!("eta {eta} must lie in (0, 1)")));
    }
    Ok(())
}

fn need_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return arg(format!("eta {eta} outside (0, 1]"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Exact,
    SmallN,
    LargeN,
    WeakLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub eta: f64,
    pub n_th: f64,
    pub limit: Limit,
}

/// Coherent-state QFI 4 λ_C N with λ_C = η/(2(1-η)η n_th + 1).
pub fn sql_qfi(nav: f64, eta: f64, n_th: f64) -> f64 {
    4.0 * eta / (2.0 * (1.0 - eta) * eta * n_th + 1.0) * nav
}

/// Coherent branch of the Gaussian bound, 4ηN/(2(1-η)n_th + 1). This is
/// the exact displaced-thermal result.
pub fn coherent_branch(nav: f64, eta: f64, n_th: f64) -> f64 {
    4.0 * eta * nav / (2.0 * (1.0 - eta) * n_th + 1.0)
}

/// Squeezed-vacuum QFI under loss and thermal noise.
pub fn squeezed_branch(nav: f64, eta: f64, n_th: f64) -> f64 {
    let s = 1.0 - eta;
    8.0 * eta * eta * nav * (nav + 1.0)
        / (2.0 * s * eta * nav * (2.0 * n_th + 1.0) + 2.0 * s * n_th * (s * n_th + 1.0) + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianBranch {
    Squeezed,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianBound {
    pub value: f64,
    pub branch: GaussianBranch,
    pub eta_crit: f64,
}

/// Optimal Gaussian QFI at fixed N: the better of the squeezed and coherent branches.
pub fn gaussian_bound(nav: f64, eta: f64, n_th: f64) -> Result<GaussianBound> {
    if !(nav >= 0.0) || !(n_th >= 0.0) {
        return arg("N and n_th must be non-negative");
    }
    need_eta(eta)?;
    let (sq, co) = (squeezed_branch(nav, eta, n_th), coherent_branch(nav, eta, n_th));
    let eta_crit = if nav > 0.0 { eta_crit(nav, n_th)? } else { 0.5 };
    let (value, branch) = if sq >= co { (sq, GaussianBranch::Squeezed) } else { (co, GaussianBranch::Coherent) };
    Ok(GaussianBound { value, branch, eta_crit })
}

/// Ideal bound 8N² + 8N.
pub fn gaussian_ideal(nav: f64) -> f64 {
    8.0 * nav * nav + 8.0 * nav
}

/// Lossy branch switch (√(1+2N) − 1)/(2N).
pub fn eta_crit_lossy(nav: f64) -> f64 {
    ((1.0 + 2.0 * nav).sqrt() - 1.0) / (2.0 * nav)
}

/// Branch switch with thermal noise, by bisection on the branch crossing.
pub fn eta_crit(nav: f64, n_th: f64) -> Result<f64> {
    if nav <= 0.0 {
        return arg("eta_crit needs N > 0");
    }
    bisect(|e| squeezed_branch(nav, e, n_th) - coherent_branch(nav, e, n_th), 1e-9, 1.0, 1e-13)
}

/// Asymptotic Gaussian prefactor λ_G with F ≈ 4 λ_G N.
pub fn gaussian_lambda(regime: &Regime) -> Result<f64> {
    let (eta, nt) = (regime.eta, regime.n_th);
    need_eta(eta)?;
    let s = 1.0 - eta;
    match regime.limit {
        Limit::SmallN => Ok(2.0 * eta * eta / (2.0 * s * s * nt * nt + 2.0 * s * nt + 1.0)),
        Limit::LargeN => {
            need_eta_open(eta)?;
            Ok(eta / (s * (2.0 * nt + 1.0)))
        }
        _ => arg("gaussian_lambda needs the small_N or large_N limit"),
    }
}

pub fn nav_trans_gaussian(eta: f64) -> Result<f64> {
    need_eta_open(eta)?;
    Ok(1.0 / (2.0 * eta * (1.0 - eta)))
}

/// 4(1+2n)(N−n) for a displaced Fock state with Fock number n.
pub fn displaced_fock_qfi_n(nav: f64, n: usize) -> Result<f64> {
    if n as f64 > nav + 1e-12 {
        return arg(format!("Fock number {n} exceeds N = {nav}"));
    }
    Ok(4.0 * (1.0 + 2.0 * n as f64) * (nav - n as f64))
}

/// Optimal Fock number ⌊(2N+1)/4⌋ for the displaced-Fock family.
pub fn displaced_fock_opt_n(nav: f64) -> usize {
    ((2.0 * nav + 1.0) / 4.0).floor().clamp(0.0, nav.max(0.0).floor()) as usize
}

/// Floor-function optimum over the Fock number. Both brackets use the same
/// n; the variant with ⌊(3−2N)/4⌋ in the first bracket picks a different n
/// when (2N+1)/4 is an integer and overshoots there.
pub fn displaced_fock_qfi(nav: f64) -> f64 {
    let n = displaced_fock_opt_n(nav) as f64;
    4.0 * (nav - n) * (2.0 * n + 1.0)
}

/// Exhaustive optimum over integer n in [0, N]: (n, QFI).
pub fn displaced_fock_opt_scan(nav: f64) -> (usize, f64) {
    let mut best = (0, 4.0 * nav);
    for n in 1..=(nav.floor() as usize) {
        let v = 4.0 * (1.0 + 2.0 * n as f64) * (nav - n as f64);
        if v > best.1 {
            best = (n, v);
        }
    }
    best
}

/// ON-state QFI; exact at η = 1 and the large-n qutrit form under loss.
pub fn on_qfi(nav: f64, n: usize, eta: f64) -> Result<f64> {
    need_eta(eta)?;
    let nf = n as f64;
    if nf < nav || !(nav >= 0.0) {
        return arg(format!("ON state needs n ({n}) >= N ({nav})"));
    }
    if eta == 1.0 {
        return Ok(4.0 * nav * (nf - nav));
    }
    let en = eta.powi(n as i32);
    let den = nav * en + nf - nav;
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok(4.0 * nf * (nf - nav) * nav * en / den)
}

/// Integer argmax of `on_qfi` over n in [max(1, ⌈N⌉), N + 4/(1−η)].
pub fn on_n_opt(nav: f64, eta: f64) -> Result<usize> {
    need_eta_open(eta)?;
    let lo = (nav.ceil() as usize).max(1);
    let hi = (nav + 4.0 / (1.0 - eta)).ceil() as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for n in lo..=hi.max(lo) {
        let v = on_qfi(nav, n, eta)?;
        if v > best.1 {
            best = (n, v);
        }
    }
    Ok(best.0)
}

pub fn on_qfi_opt(nav: f64, eta: f64) -> Result<f64> {
    on_qfi(nav, on_n_opt(nav, eta)?, eta)
}

/// Large-N prediction ⌊N + 1/2 − 1/ln η⌋ for the optimal Fock number.
pub fn on_n_opt_predicted(nav: f64, eta: f64) -> Result<usize> {
    need_eta_open(eta)?;
    Ok((nav + 0.5 - 1.0 / eta.ln()).floor() as usize)
}

/// Continuous-n approximation of the optimum.
pub fn on_qfi_opt_approx(nav: f64, eta: f64) -> Result<f64> {
    need_eta_open(eta)?;
    let l = eta.ln();
    let en = eta.powf(nav);
    Ok(4.0 * nav * en * (nav * l - 1.0) / (l * (E - nav * en * l)))
}

/// Small-N linear form −4N/(e ln η).
pub fn on_qfi_small_n(nav: f64, eta: f64) -> Result<f64> {
    need_eta_open(eta)?;
    Ok(-4.0 * nav / (E * eta.ln()))
}

/// Symmetric ON state (n = 2N) under loss.
pub fn symmetric_on_qfi(nav: f64, eta: f64) -> f64 {
    let e2 = eta.powf(2.0 * nav);
    8.0 * nav * nav * e2 / (e2 + 1.0)
}

/// SCS QFI variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ScsQfi {
    IdealExact { alpha: f64, epsilon: f64 },
    IdealConstrained { nav: f64, alpha_max2: f64 },
    LossyLargeAlpha { nav: f64, alpha2: f64, eta: f64 },
    AlphaOpt { nav: f64, eta: f64 },
    LossyMax { nav: f64, eta: f64 },
}

/// Whether the large-amplitude approximations are in their validity regime.
pub fn scs_large_alpha_valid(alpha2: f64) -> bool {
    alpha2 >= 4.0
}

pub fn scs_qfi(v: ScsQfi) -> Result<f64> {
    match v {
        ScsQfi::IdealExact { alpha, epsilon } => Ok(scs_qfi_ideal_exact(alpha, epsilon)),
        ScsQfi::IdealConstrained { nav, alpha_max2 } => {
            if nav > alpha_max2 || nav < 0.0 {
                return arg("SCS needs 0 <= N <= alpha_max²");
            }
            Ok(4.0 * nav * (1.0 + alpha_max2 - nav))
        }
        ScsQfi::LossyLargeAlpha { nav, alpha2, eta } => {
            need_eta(eta)?;
            Ok(4.0 * eta * nav * (eta * (-alpha2 * (1.0 - eta)).exp() * (alpha2 - nav) + 1.0))
        }
        ScsQfi::AlphaOpt { nav, eta } => {
            need_eta_open(eta)?;
            Ok((nav * (1.0 - eta) + 1.0) / (1.0 - eta))
        }
        ScsQfi::LossyMax { nav, eta } => {
            need_eta(eta)?;
            if eta == 1.0 {
                // ideal branch: unbounded without an amplitude cap
                return Ok(f64::INFINITY);
            }
            Ok(4.0 * eta * nav * (1.0 + eta * (-(1.0 - eta) * nav - 1.0).exp() / (1.0 - eta)))
        }
    }
}

/// Exact ideal QFI of (|0> + ε|α>), real α and ε.
pub fn scs_qfi_ideal_exact(alpha: f64, epsilon: f64) -> f64 {
    let a2 = alpha * alpha;
    let (e, q) = (epsilon, (-a2 / 2.0).exp());
    let den = e * e + 1.0 + 2.0 * q * e;
    4.0 * a2 * e * e * ((a2 + e * e + 1.0) + 2.0 * q * (a2 + 1.0) * e) / (den * den)
}

/// Weak-loss asymptotes of the optimal SCS QFI: (small N, large N).
pub fn scs_qfi_asymptotes(nav: f64, eta: f64) -> Result<(f64, f64)> {
    need_eta_open(eta)?;
    Ok((4.0 * eta * nav * (1.0 + eta / (E * (1.0 - eta))), 4.0 * eta * nav))
}

/// Mean photon number of the symmetric SCS (ε = 1) and its inverse.
pub fn symmetric_scs_nav(alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    a2 / (2.0 * (1.0 + (-a2 / 2.0).exp()))
}

pub fn symmetric_scs_alpha(nav: f64) -> Result<f64> {
    if !(nav > 0.0) {
        return arg("symmetric SCS needs N > 0");
    }
    bisect(|a| symmetric_scs_nav(a) - nav, 0.0, (2.0 * nav + 2.0).sqrt() + 1.0, 1e-13)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// Exact crossing of the optimal lossy SCS QFI with the ideal bound.
    NavNgeScs,
    /// Leading weak-loss form u*/(1−η) with e^{−u−1} = 2u.
    NavNgeScsWeakLoss,
    NavMaxOn,
    EtaMinScs,
    EtaMinOn,
    EtaMinOnVsSql,
    NavTranScs,
}

impl ThresholdKind {
    pub fn needs_eta(self) -> bool {
        matches!(
            self,
            ThresholdKind::NavNgeScs | ThresholdKind::NavNgeScsWeakLoss | ThresholdKind::NavMaxOn | ThresholdKind::NavTranScs
        )
    }
}

impl std::str::FromStr for ThresholdKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "nav_nge_scs" => ThresholdKind::NavNgeScs,
            "nav_nge_scs_weak_loss" => ThresholdKind::NavNgeScsWeakLoss,
            "nav_max_on" => ThresholdKind::NavMaxOn,
            "eta_min_scs" => ThresholdKind::EtaMinScs,
            "eta_min_on" => ThresholdKind::EtaMinOn,
            "eta_min_on_vs_sql" => ThresholdKind::EtaMinOnVsSql,
            "nav_tran_scs" => ThresholdKind::NavTranScs,
            _ => return arg(format!("unknown threshold kind {s}")),
        })
    }
}

pub const THRESHOLD_KINDS: [&str; 7] = [
    "nav_nge_scs",
    "nav_nge_scs_weak_loss",
    "nav_max_on",
    "eta_min_scs",
    "eta_min_on",
    "eta_min_on_vs_sql",
    "nav_tran_scs",
];

/// Lambert-W form of the SCS enhancement threshold.
pub fn nav_nge_scs_lambert(eta: f64) -> Result<f64> {
    need_eta_open(eta)?;
    let w = lambert_w0(0.5 * eta * eta * (0.5 * eta * (eta - 3.0)).exp())?;
    Ok((-eta * eta + 3.0 * eta - 2.0 + 2.0 * w) / (2.0 * (1.0 - eta)))
}

/// The same crossing located by bisection.
pub fn nav_nge_scs_bisect(eta: f64) -> Result<f64> {
    need_eta_open(eta)?;
    let f = |n: f64| scs_qfi(ScsQfi::LossyMax { nav: n, eta }).unwrap_or(f64::NAN) - gaussian_ideal(n);
    let mut hi = 1.0;
    while f(hi) > 0.0 && hi < 1e9 {
        hi *= 2.0;
    }
    bisect(f, 1e-9, hi, 1e-9)
}

pub fn thresholds(kind: ThresholdKind, eta: Option<f64>) -> Result<f64> {
    let eta = match (kind.needs_eta(), eta) {
        (true, Some(e)) => {
            need_eta_open(e)?;
            e
        }
        (true, None) => return arg("this threshold needs eta"),
        (false, Some(_)) => return arg("this threshold takes no eta"),
        (false, None) => f64::NAN,
    };
    match kind {
        ThresholdKind::NavNgeScs => nav_nge_scs_lambert(eta),
        ThresholdKind::NavNgeScsWeakLoss => {
            let u = bisect(|u| (-u - 1.0).exp() - 2.0 * u, 0.0, 1.0, 1e-14)?;
            Ok(u / (1.0 - eta))
        }
        ThresholdKind::NavMaxOn => {
            let f = |n: f64| on_qfi_opt(n, eta).unwrap_or(f64::NAN) - gaussian_ideal(n);
            let lo = 1e-6;
            if f(lo) <= 0.0 {
                return Ok(0.0);
            }
            let mut hi = 1.0;
            while f(hi) > 0.0 && hi < 1e7 {
                hi *= 2.0;
            }
            bisect(f, lo, hi, 1e-6)
        }
        ThresholdKind::EtaMinScs => bisect(|e| e + e * e / (E * (1.0 - e)) - 2.0, 0.5, 0.999, 1e-12),
        ThresholdKind::EtaMinOn => bisect(|e| -1.0 / (E * e.ln()) - 2.0, 0.5, 0.999, 1e-12),
        // −1/(e ln η) = 2η² only touches: the ratio of the two slopes has its
        // minimum (exactly 1) where d(η² ln η)/dη = 0
        ThresholdKind::EtaMinOnVsSql => bisect(|e| 2.0 * e.ln() + 1.0, 0.3, 0.99, 1e-13),
        ThresholdKind::NavTranScs => Ok(LN_2 / (1.0 - eta)),
    }
}

/// ON-state CFI for projection onto the balanced ON state: exact at η = 1,
/// large-n form under loss.
pub fn on_cfi(nav: f64, n: usize, theta: f64, eta: f64) -> Result<f64> {
    need_eta(eta)?;
    let nf = n as f64;
    if nf < nav {
        return arg(format!("ON state needs n ({n}) >= N ({nav})"));
    }
    let (s, c) = (nf * theta).sin_cos();
    if eta == 1.0 {
        let den = nf * nf + 4.0 * nav * (nav - nf) * c * c;
        if den <= 0.0 {
            return Ok(4.0 * nav * (nf - nav));
        }
        return Ok(4.0 * nf * nf * nav * (nf - nav) * s * s / den);
    }
    Ok(4.0 * nav * eta.powi(n as i32) * (nf - nav) * s * s)
}

/// Projection probability of the lossy ON state (|0> + ε|n>) onto
/// (|0> + ε' e^{iφ}|n>), exact for pure loss: (A, B) with
/// P(θ) = A + B cos(nθ − φ).
pub fn on_projection_coeffs(n: usize, epsilon: f64, eps_meas: f64, eta: f64) -> (f64, f64) {
    let (e2, m2) = (epsilon * epsilon, eps_meas * eps_meas);
    let en = eta.powi(n as i32);
    let vac = 1.0 + e2 * (1.0 - eta).powi(n as i32);
    let a = (vac + e2 * m2 * en) / ((1.0 + e2) * (1.0 + m2));
    let b = 2.0 * epsilon * eps_meas * en.sqrt() / ((1.0 + e2) * (1.0 + m2));
    (a, b)
}

/// Maximum over θ of the symmetric ON CFI (n = 2N).
pub fn symmetric_on_cfi_max(nav: f64, eta: f64) -> f64 {
    let e2 = eta.powf(2.0 * nav);
    16.0 * nav * nav * e2 / (2.0 * e2 - e2 * e2 + 3.0)
}

/// Asymptotic SCS CFI for projection onto the balanced SCS |0> + i|α>.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScsCfiAsymptotic {
    pub nav: f64,
    pub alpha2: f64,
    pub eta: f64,
}

impl ScsCfiAsymptotic {
    pub fn valid(&self) -> bool {
        scs_large_alpha_valid(self.alpha2)
    }
    pub fn value(&self, theta: f64) -> f64 {
        let (a2, se) = (self.alpha2, self.eta.sqrt());
        4.0 * a2 * a2 * self.eta * self.nav * (-2.0 * a2 * (1.0 - se * theta.cos())).exp()
            * (a2 * se * theta.sin()).cos().powi(2)
            / (a2 + self.nav)
    }
    pub fn peak(&self) -> f64 {
        let (a2, se) = (self.alpha2, self.eta.sqrt());
        4.0 * a2 * a2 * self.eta * self.nav * (-2.0 * a2 * (1.0 - se)).exp() / (a2 + self.nav)
    }
    pub fn first_zero(&self) -> Result<f64> {
        let x = PI / (2.0 * self.alpha2 * self.eta.sqrt());
        if x > 1.0 {
            return Err(Error::UndefinedLimit("amplitude too small for a first zero".into()));
        }
        Ok(x.asin())
    }
    pub fn half_height(&self) -> Result<f64> {
        let x = PI / (4.0 * self.alpha2 * self.eta.sqrt());
        if x > 1.0 {
            return Err(Error::UndefinedLimit("amplitude too small for a half-height point".into()));
        }
        Ok(x.asin())
    }
}

pub fn scs_cfi_asymptotic(nav: f64, alpha2: f64, eta: f64, theta: f64) -> f64 {
    ScsCfiAsymptotic { nav, alpha2, eta }.value(theta)
}

/// Generalised Laguerre polynomial L_n^{(a)}(x) by upward recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// CFI of D[α]|n> projected back onto itself after rotation θ.
pub fn displaced_fock_cfi(alpha: f64, n: usize, theta: f64) -> f64 {
    let a2 = alpha * alpha;
    let x = 2.0 * a2 * (1.0 - theta.cos());
    let nf = n as f64;
    if x < 1e-12 {
        return 4.0 * a2 * (1.0 + 2.0 * nf);
    }
    let ln = laguerre(n, 0.0, x);
    let l1 = if n == 0 { 0.0 } else { laguerre(n - 1, 1.0, x) };
    // e^x − L_n² = expm1(x) + (1 − L_n)(1 + L_n), with 1 − L_n summed
    // directly for small x to avoid cancellation
    let one_minus_l = if x < 0.5 {
        let mut term = 1.0;
        let mut s = 0.0;
        for k in 1..=n {
            let kf = k as f64;
            term *= -(nf - kf + 1.0) / (kf * kf) * x;
            s -= term;
        }
        s
    } else {
        1.0 - ln
    };
    let den = x.exp_m1() + one_minus_l * (1.0 + ln);
    if den <= 0.0 {
        return 0.0;
    }
    4.0 * a2 * a2 * theta.sin().powi(2) * (ln + 2.0 * l1).powi(2) / den
}

/// CFI of a lossy squeezed vacuum measured by projection onto the ideal
/// squeezed vacuum, evaluated from the Gaussian overlap.
pub fn gaussian_cfi_binary(nav: f64, eta: f64, theta: f64) -> Result<f64> {
    gaussian_cfi_binary_thermal(nav, eta, 0.0, theta)
}

pub fn gaussian_cfi_binary_thermal(nav: f64, eta: f64, n_th: f64, theta: f64) -> Result<f64> {
    need_eta(eta)?;
    if theta == 0.0 && eta == 1.0 && n_th == 0.0 {
        // limit θ → 0 of a pure state projected onto itself
        return Ok(gaussian_ideal(nav));
    }
    let (p, dp) = squeezed_binary_probability(nav, eta, n_th, theta)?;
    let p = p.clamp(0.0, 1.0);
    if 1.0 - p < 1e-13 {
        return Ok(0.0);
    }
    cfi_binary(p, dp)
}

/// (θ_max, max F_C) of the binary Gaussian CFI over θ ∈ (0, π/2].
pub fn gaussian_cfi_binary_max(nav: f64, eta: f64) -> Result<(f64, f64)> {
    need_eta(eta)?;
    if eta == 1.0 {
        return Ok((0.0, gaussian_ideal(nav)));
    }
    let f = |t: f64| gaussian_cfi_binary(nav, eta, t).unwrap_or(0.0);
    // log-spaced scan resolves narrow peaks at small θ
    let mut best = (0.0, 0.0);
    let n = 400;
    for i in 0..n {
        let t = 10f64.powf(-6.0 + 6.0 * i as f64 / (n - 1) as f64) * PI / 2.0;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let (lo, hi) = (best.0 * 0.9, (best.0 * 1.1).min(PI / 2.0));
    let r = golden_max(f, lo, hi, best.0 * 1e-9);
    Ok(if r.1 > best.1 { r } else { best })
}

/// Projection probability of the lossy SCS N(|0> + ε|α>) (pure loss η,
/// rotation θ) onto N'(|0> + c|α>), c = ε' e^{iφ}. Exact for real α, ε.
pub fn scs_projection_probability(alpha: f64, epsilon: f64, eps_meas: f64, phase: f64, eta: f64, theta: f64) -> f64 {
    let a2 = alpha * alpha;
    let q = (-a2 / 2.0).exp();
    let k = 1.0 / (1.0 + epsilon * epsilon + 2.0 * epsilon * q);
    let cm = C64::from_polar(eps_meas, phase);
    let m = 1.0 / (1.0 + eps_meas * eps_meas + 2.0 * cm.re * q);
    let a = C64::from_polar(eta.sqrt() * alpha, theta);
    let f = (-a2 * (1.0 - eta) / 2.0).exp();
    let vac_a = (-a.norm_sqr() / 2.0).exp();
    let alpha_a = (C64::new(-a2 / 2.0 - a.norm_sqr() / 2.0, 0.0) + a * alpha).exp();
    let u = C64::new(1.0, 0.0) + cm.conj() * q;
    let v = C64::new(vac_a, 0.0) + cm.conj() * alpha_a;
    let p = k * m * (u.norm_sqr() + epsilon * epsilon * v.norm_sqr() + 2.0 * epsilon * f * (v * u.conj()).re);
    p.clamp(0.0, 1.0)
}

/// Binary CFI of the SCS projection with a five-point derivative.
pub fn scs_projection_cfi(alpha: f64, epsilon: f64, eps_meas: f64, phase: f64, eta: f64, theta: f64) -> Result<f64> {
    let p = |t: f64| scs_projection_probability(alpha, epsilon, eps_meas, phase, eta, t);
    let h = 1e-4 / (1.0 + alpha * alpha).sqrt();
    let dp = (-p(theta + 2.0 * h) + 8.0 * p(theta + h) - 8.0 * p(theta - h) + p(theta - 2.0 * h)) / (12.0 * h);
    cfi_binary(p(theta), dp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricFamily {
    On,
    Scs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricRatio {
    pub ratio: f64,
    pub probe_cfi_max: f64,
    pub gaussian_cfi_max: f64,
    /// Fock number used for ON states; `rounded` marks a non-integer 2N.
    pub n_used: Option<usize>,
    pub rounded: bool,
}

/// Peak CFI of a symmetric probe over the peak binary-Gaussian CFI at equal (N, η).
pub fn symmetric_cfi_ratio(nav: f64, eta: f64, family: SymmetricFamily) -> Result<SymmetricRatio> {
    if !(nav > 0.0) {
        return arg("symmetric ratio needs N > 0");
    }
    need_eta(eta)?;
    let (_, g) = gaussian_cfi_binary_max(nav, eta)?;
    let (probe, n_used, rounded) = match family {
        SymmetricFamily::On => {
            let n = (2.0 * nav).round().max(1.0) as usize;
            let rounded = ((2.0 * nav) - n as f64).abs() > 1e-9;
            (symmetric_on_cfi_max(n as f64 / 2.0, eta), Some(n), rounded)
        }
        SymmetricFamily::Scs => {
            let alpha = symmetric_scs_alpha(nav)?;
            let f = |t: f64| scs_projection_cfi(alpha, 1.0, 1.0, 0.0, eta, t).unwrap_or(0.0);
            let (_, v) = scan_max(f, 1e-6, PI, 4001);
            (v, None, false)
        }
    };
    Ok(SymmetricRatio { ratio: probe / g, probe_cfi_max: probe, gaussian_cfi_max: g, n_used, rounded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sql_and_gaussian_examples() {
        assert_eq!(sql_qfi(2.0, 1.0, 0.0), 8.0);
        assert!(close(sql_qfi(1.0, 0.9, 0.0), 3.6, 1e-12));
        assert!(close(sql_qfi(1.0, 0.9, 0.1), 3.6 / 1.018, 1e-12));
        let g = gaussian_bound(1.0, 1.0, 0.0).unwrap();
        assert_eq!(g.value, 16.0);
        let g = gaussian_bound(1.0, 0.9, 0.0).unwrap();
        assert!(close(g.value, 8.0 * 0.81 * 2.0 / 1.18, 1e-12));
        assert_eq!(g.branch, GaussianBranch::Squeezed);
        assert!(close(g.eta_crit, (3f64.sqrt() - 1.0) / 2.0, 1e-10));
        let g = gaussian_bound(1.0, 0.3, 0.0).unwrap();
        assert_eq!(g.branch, GaussianBranch::Coherent);
        assert!(close(g.value, 1.2, 1e-12));
    }

    #[test]
    fn thermal_branch_switch_reduces_to_lossy() {
        for n in [0.5, 1.0, 3.0, 10.0] {
            assert!(close(eta_crit(n, 0.0).unwrap(), eta_crit_lossy(n), 1e-10));
            assert!(eta_crit(n, 0.2).unwrap() > eta_crit(n, 0.0).unwrap());
        }
    }

    #[test]
    fn nav_trans_examples() {
        assert!(close(nav_trans_gaussian(0.99).unwrap(), 50.505, 1e-3));
        assert!(close(nav_trans_gaussian(0.5).unwrap(), 2.0, 1e-12));
        assert!(close(nav_trans_gaussian(0.9).unwrap(), 5.556, 1e-3));
        assert!(matches!(nav_trans_gaussian(1.0), Err(Error::UndefinedLimit(_))));
    }

    #[test]
    fn displaced_fock_examples() {
        assert_eq!(displaced_fock_qfi(2.0), 12.0);
        assert_eq!(displaced_fock_opt_scan(2.0), (1, 12.0));
        assert_eq!(displaced_fock_qfi_n(3.0, 0).unwrap(), 12.0);
        assert!(displaced_fock_qfi_n(1.0, 2).is_err());
        assert_eq!(displaced_fock_qfi(3.5), displaced_fock_opt_scan(3.5).1);
        for i in 0..=1000 {
            let n = i as f64 * 0.1;
            assert!((displaced_fock_qfi(n) - displaced_fock_opt_scan(n).1).abs() < 1e-9, "N = {n}");
        }
    }

    #[test]
    fn on_examples() {
        assert_eq!(on_qfi(1.0, 10, 1.0).unwrap(), 36.0);
        assert_eq!(on_qfi(1.0, 5, 1.0).unwrap(), 16.0);
        assert!(close(on_qfi(1.0, 10, 0.9).unwrap(), 13.43, 0.01));
        assert!(on_qfi(3.0, 2, 1.0).is_err());
        let n = on_n_opt(5.0, 0.99).unwrap();
        let pred = on_n_opt_predicted(5.0, 0.99).unwrap();
        assert!((n as i64 - pred as i64).abs() <= 2, "{n} vs {pred}");
    }

    #[test]
    fn scs_examples() {
        let ideal = |n, a| scs_qfi(ScsQfi::IdealConstrained { nav: n, alpha_max2: a }).unwrap();
        assert_eq!(ideal(1.0, 10.0), 40.0);
        assert_eq!(ideal(1.0, 4.0), 16.0);
        for i in 0..=40 {
            let a = i as f64 * 0.1;
            let n = symmetric_scs_nav(a);
            assert!(scs_qfi_ideal_exact(a, 1.0) <= gaussian_ideal(n) + 1e-9);
        }
        assert!(close(
            scs_qfi(ScsQfi::AlphaOpt { nav: 1.0, eta: 0.99 }).unwrap(),
            (0.01 + 1.0) / 0.01,
            1e-9
        ));
        assert_eq!(scs_qfi(ScsQfi::LossyMax { nav: 1.0, eta: 1.0 }).unwrap(), f64::INFINITY);
    }

    #[test]
    fn scs_exact_matches_numeric_variance() {
        let s = crate::probes::scs(3.0, 0.4, 60).unwrap();
        let num = crate::fisher::qfi_pure(&s, &crate::fockspace::number(60)).unwrap().value;
        assert!(close(scs_qfi_ideal_exact(3.0, 0.4), num, 1e-8));
    }

    #[test]
    fn lambert_identities() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!(close(lambert_w0(E).unwrap(), 1.0, 1e-12));
        assert!(close(lambert_w0(-1.0 / E).unwrap(), -1.0, 1e-6));
        for z in [-0.3, -0.1, 0.5, 3.0, 100.0] {
            let w = lambert_w0(z).unwrap();
            assert!(close(w * w.exp(), z, 1e-10 * z.abs().max(1.0)));
        }
        assert!(lambert_w0(-1.0).is_err());
    }

    #[test]
    fn threshold_values() {
        let t = |k, e| thresholds(k, e).unwrap();
        assert!(close(t(ThresholdKind::EtaMinScs, None), 0.802, 0.005));
        assert!(close(t(ThresholdKind::EtaMinOn, None), 0.832, 0.005));
        let e = t(ThresholdKind::EtaMinOnVsSql, None);
        assert!(close(e, (-0.5f64).exp(), 1e-9));
        assert!(close(-1.0 / (E * e.ln()), 2.0 * e * e, 1e-9));
        assert!(close(t(ThresholdKind::NavTranScs, Some(0.99)), 69.3, 0.1));
        let exact = t(ThresholdKind::NavNgeScs, Some(0.99));
        assert!(close(exact, nav_nge_scs_bisect(0.99).unwrap(), 1e-6));
        assert!(close(t(ThresholdKind::NavNgeScsWeakLoss, Some(0.99)), 15.72, 0.01));
        let on_max = t(ThresholdKind::NavMaxOn, Some(0.99));
        assert!(close(on_max, -0.172 / 0.99f64.ln() - 0.937, 1.0), "{on_max}");
        assert!(thresholds(ThresholdKind::EtaMinScs, Some(0.9)).is_err());
        assert!(thresholds(ThresholdKind::NavTranScs, None).is_err());
    }

    #[test]
    fn on_cfi_examples() {
        assert_eq!(on_cfi(1.0, 10, 0.0, 1.0).unwrap(), 0.0);
        assert!(close(on_cfi(1.0, 10, PI / 20.0, 1.0).unwrap(), 36.0, 1e-9));
        assert!(close(on_cfi(1.0, 10, PI / 20.0, 0.9).unwrap(), 36.0 * 0.9f64.powi(10), 1e-9));
        assert!(close(36.0 * 0.9f64.powi(10), 12.55, 0.01));
    }

    #[test]
    fn on_projection_reproduces_ideal_cfi() {
        let (n, nav) = (10usize, 1.0);
        let eps = crate::probes::on_epsilon_for(n, nav).unwrap();
        let (a, b) = on_projection_coeffs(n, eps, 1.0, 1.0);
        for t in [0.05, 0.1, 0.13] {
            let nf = n as f64;
            let p = a + b * (nf * t).cos();
            let dp = -b * nf * (nf * t).sin();
            let f = cfi_binary(p, dp).unwrap();
            assert!(close(f, on_cfi(nav, n, t, 1.0).unwrap(), 1e-9));
        }
    }

    #[test]
    fn scs_cfi_asymptotic_examples() {
        let s = ScsCfiAsymptotic { nav: 0.5, alpha2: 9.0, eta: 1.0 };
        assert!(close(s.value(0.0), 4.0 * 81.0 * 0.5 / 9.5, 1e-12));
        assert!(close(s.value(0.0), 17.05, 0.01));
        assert!(close(s.first_zero().unwrap(), (PI / 18.0).asin(), 1e-12));
        assert!(close(s.first_zero().unwrap(), 0.17543, 1e-4));
        assert!(s.value(s.first_zero().unwrap()) < 1e-20);
    }

    #[test]
    fn displaced_fock_cfi_examples() {
        for t in [0.1, 0.5, 2.0] {
            let want = 4.0 * 1.5f64.powi(4) * f64::sin(t).powi(2) / ((2.0 * 2.25 * (1.0 - f64::cos(t))).exp() - 1.0);
            assert!(close(displaced_fock_cfi(1.5, 0, t), want, 1e-9 * want.max(1.0)));
        }
        assert!(close(displaced_fock_cfi(1.0, 1, 1e-4), 12.0, 1e-3));
        assert!(close(displaced_fock_cfi(1.0, 1, 1e-7), 12.0, 1e-6));
        let v = displaced_fock_cfi(1.3, 3, PI);
        assert!(v.is_finite() && v >= 0.0);
        assert!(close(laguerre(2, 0.0, 1.0), -0.5, 1e-15));
        assert!(close(laguerre(3, 1.0, 2.0), (24.0 - 36.0 * 2.0 + 12.0 * 4.0 - 8.0) / 6.0 / 1.0, 1e-12));
    }

    #[test]
    fn gaussian_cfi_examples() {
        assert!(gaussian_cfi_binary(1.0, 0.9, 0.0).unwrap().abs() < 1e-9);
        assert!(close(gaussian_cfi_binary(1.0, 1.0, 1e-5).unwrap(), 16.0, 1e-3));
        let (_, m) = gaussian_cfi_binary_max(1.0, 0.9).unwrap();
        assert!(m < gaussian_bound(1.0, 0.9, 0.0).unwrap().value);
        let (_, m3) = gaussian_cfi_binary_max(3.0, 0.99).unwrap();
        assert!(close(m3, 48.89, 0.01), "{m3}");
    }

    #[test]
    fn symmetric_ratio_examples() {
        assert!(close(symmetric_on_cfi_max(1.0, 1.0), 4.0, 1e-12));
        let r = symmetric_cfi_ratio(1.0, 1.0, SymmetricFamily::On).unwrap();
        assert!(close(r.ratio, 0.25, 1e-9));
        assert!(!r.rounded);
        assert!(symmetric_cfi_ratio(1.3, 1.0, SymmetricFamily::On).unwrap().rounded);
        let s = symmetric_cfi_ratio(1.0, 1.0, SymmetricFamily::Scs).unwrap();
        assert!(s.ratio.is_finite() && s.ratio > 0.0);
        let found = [0.8, 0.85, 0.9].iter().any(|&eta| {
            (1..=12).any(|n| symmetric_cfi_ratio(n as f64, eta, SymmetricFamily::On).unwrap().ratio > 1.0)
        });
        assert!(found);
    }

    #[test]
    fn scs_projection_limits() {
        // ε = 0 is the vacuum: probability |<φ|0>|² independent of θ
        let p0 = scs_projection_probability(2.0, 0.0, 1.0, 0.0, 0.9, 0.0);
        let p1 = scs_projection_probability(2.0, 0.0, 1.0, 0.0, 0.9, 0.7);
        assert!(close(p0, p1, 1e-14));
        // ideal, θ = 0, projection onto the probe itself
        assert!(close(scs_projection_probability(1.7, 0.3, 0.3, 0.0, 1.0, 0.0), 1.0, 1e-12));
    }
}
