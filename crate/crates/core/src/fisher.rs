//! Quantum and classical Fisher information estimators and curve metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::fockspace::{
    c, fidelity_from_factors, hermitian_eigen, is_hermitian, number, support_factor, CMat, CVec, DensityMatrix,
    OscillatorState, C64, EIG_FLOOR,
};

pub const DEFAULT_DTHETA: f64 = 1e-3;
/// Richardson estimates whose magnitude is below this are reported as zero.
const FD_ZERO: f64 = 1e-6;
const P_ZERO: f64 = 1e-12;
const DP_ZERO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QfiMethod {
    PureVariance,
    FidelityFd,
    SldSpectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    pub coarse: f64,
    pub fine: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QfiResult {
    pub value: f64,
    pub method: QfiMethod,
    pub dtheta_used: f64,
    pub convergence: Option<Convergence>,
}

impl QfiResult {
    fn exact(value: f64, method: QfiMethod) -> Self {
        QfiResult { value: value.max(0.0), method, dtheta_used: 0.0, convergence: None }
    }
}

fn check_generator(g: &CMat, dim: usize) -> Result<()> {
    if g.nrows() != dim || !is_hermitian(g, 1e-10) {
        return arg("generator must be Hermitian and match the state dimension");
    }
    Ok(())
}

/// 4 Var(G) for a pure state.
pub fn qfi_pure(psi: &OscillatorState, g: &CMat) -> Result<QfiResult> {
    check_generator(g, psi.dim())?;
    let v = psi.amps();
    let gv = g * v;
    let m1 = v.dotc(&gv).re;
    let m2 = gv.norm_squared();
    Ok(QfiResult::exact(4.0 * (m2 - m1 * m1), QfiMethod::PureVariance))
}

/// Spectral (SLD) form 2 Σ (λi-λj)²/(λi+λj) |<i|G|j>|².
pub fn qfi_sld(rho: &DensityMatrix, g: &CMat) -> Result<QfiResult> {
    check_generator(g, rho.dim())?;
    let (vals, vecs) = hermitian_eigen(rho.mat());
    let gt = vecs.adjoint() * g * &vecs;
    let n = vals.len();
    let mut f = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (li, lj) = (vals[i].max(0.0), vals[j].max(0.0));
            let s = li + lj;
            if s > 1e-12 {
                f += 2.0 * 2.0 * (li - lj).powi(2) / s * gt[(i, j)].norm_sqr();
            }
        }
    }
    Ok(QfiResult::exact(f, QfiMethod::SldSpectral))
}

/// Fidelity-based QFI for the phase generator n̂ around theta = 0.
///
/// Uses F(h) = 4(1 - Fid[rho_{-h}, rho_{+h}])/(2h)² and Richardson over
/// {dtheta, dtheta/2}.
pub fn qfi_fidelity(rho: &DensityMatrix, dtheta: f64) -> Result<QfiResult> {
    if !(1e-5..=1e-2).contains(&dtheta) {
        return arg(format!("dtheta {dtheta} outside [1e-5, 1e-2]"));
    }
    let f = support_factor(rho.mat())?;
    let dim = rho.dim();
    // rho_{+h} factor is R(h) F, so the fidelity only needs F† R(2h) F.
    let estimate = |h: f64| -> f64 {
        let mut rf = f.clone();
        for k in 0..dim {
            let ph = C64::from_polar(1.0, -2.0 * h * k as f64);
            for z in rf.row_mut(k).iter_mut() {
                *z *= ph;
            }
        }
        let fid = fidelity_from_factors(&f, &rf);
        4.0 * (1.0 - fid) / (2.0 * h).powi(2)
    };
    let coarse = estimate(dtheta);
    let fine = estimate(dtheta / 2.0);
    let value = (4.0 * fine - coarse) / 3.0;
    let spread = (fine - coarse).abs();
    let conv = Convergence { coarse, fine, spread };
    if coarse.abs() < FD_ZERO && fine.abs() < FD_ZERO {
        return Ok(QfiResult { value: 0.0, method: QfiMethod::FidelityFd, dtheta_used: dtheta, convergence: Some(conv) });
    }
    if spread > 0.01 * value.abs() {
        return Err(Error::NumericalInstability(format!(
            "fidelity QFI not converged: estimates {coarse:.6e} and {fine:.6e}"
        )));
    }
    Ok(QfiResult { value: value.max(0.0), method: QfiMethod::FidelityFd, dtheta_used: dtheta, convergence: Some(conv) })
}

/// QFI of a phase-rotated state with generator n̂, choosing the cheapest exact route.
pub fn qfi_number(rho: &DensityMatrix) -> Result<f64> {
    Ok(qfi_sld(rho, &number(rho.dim()))?.value)
}

/// Classical Fisher information of a discrete outcome distribution by
/// central differences.
pub fn cfi<F>(prob: F, theta: f64, dtheta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    if !(dtheta > 0.0) {
        return arg("dtheta must be positive");
    }
    let p0 = checked(prob(theta)?, theta)?;
    let pp = checked(prob(theta + dtheta)?, theta + dtheta)?;
    let pm = checked(prob(theta - dtheta)?, theta - dtheta)?;
    if pp.len() != p0.len() || pm.len() != p0.len() {
        return Err(Error::InvalidDistribution("outcome count changes with theta".into()));
    }
    let mut f = 0.0;
    for k in 0..p0.len() {
        let dp = (pp[k] - pm[k]) / (2.0 * dtheta);
        f += outcome_term(p0[k], dp)?;
    }
    Ok(f.max(0.0))
}

/// Contribution dP²/P with the zero-probability rule.
pub fn outcome_term(p: f64, dp: f64) -> Result<f64> {
    if p < P_ZERO {
        if dp.abs() < DP_ZERO {
            return Ok(0.0);
        }
        return Err(Error::NumericalInstability(format!("P = {p:.3e} with dP = {dp:.3e}")));
    }
    Ok(dp * dp / p)
}

/// Binary-outcome CFI from P and dP/dtheta.
pub fn cfi_binary(p: f64, dp: f64) -> Result<f64> {
    Ok(outcome_term(p, dp)? + outcome_term(1.0 - p, -dp)?)
}

fn checked(p: Vec<f64>, theta: f64) -> Result<Vec<f64>> {
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 || p.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(Error::InvalidDistribution(format!("sum {s:.12} at theta {theta}")));
    }
    Ok(p)
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Default curve grid: 801 points over [-pi/2, pi/2].
pub fn default_grid() -> Vec<f64> {
    let h = std::f64::consts::FRAC_PI_2;
    uniform_grid(-h, h, 801)
}

/// Uniform grid plus a dense patch of `n_fine` points over [-w, w].
pub fn refined_grid(a: f64, b: f64, n: usize, w: f64, n_fine: usize) -> Vec<f64> {
    let mut g = uniform_grid(a, b, n);
    g.extend(uniform_grid(-w, w, n_fine).into_iter().filter(|t| *t > a && *t < b));
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    g
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl FisherCurve {
    pub fn new(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thetas.len() != values.len() || thetas.is_empty() {
            return arg("curve needs equal, non-empty grids");
        }
        if thetas.windows(2).any(|w| w[1] <= w[0]) {
            return arg("theta grid must be strictly increasing");
        }
        let mut vals = values;
        for v in vals.iter_mut() {
            if !v.is_finite() || *v < -1e-9 {
                return Err(Error::NumericalInstability(format!("curve value {v}")));
            }
            *v = v.max(0.0);
        }
        Ok(FisherCurve { thetas, values: vals, meta: BTreeMap::new() })
    }

    /// Evaluates `f` over the grid in parallel.
    pub fn from_fn<F>(thetas: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let values: Result<Vec<f64>> = thetas.par_iter().map(|&t| f(t)).collect();
        FisherCurve::new(thetas, values?)
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.values.len() {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// (theta_max, F_max).
    pub fn peak(&self) -> (f64, f64) {
        let i = self.peak_index();
        (self.thetas[i], self.values[i])
    }

    /// Linear interpolation; None outside the grid.
    pub fn value_at(&self, theta: f64) -> Option<f64> {
        let t = &self.thetas;
        if theta < t[0] || theta > t[t.len() - 1] {
            return None;
        }
        let i = t.partition_point(|x| *x <= theta).clamp(1, t.len() - 1);
        let (a, b) = (t[i - 1], t[i]);
        let w = if b > a { (theta - a) / (b - a) } else { 0.0 };
        Some(self.values[i - 1] * (1.0 - w) + self.values[i] * w)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str("theta,value\n");
        for (t, v) in self.thetas.iter().zip(&self.values) {
            let _ = writeln!(s, "{t:.12e},{v:.12e}");
        }
        s
    }
}

/// A union of disjoint intervals and its total length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSet {
    pub intervals: Vec<(f64, f64)>,
    pub total: f64,
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Self {
        let total = intervals.iter().map(|(a, b)| b - a).sum();
        IntervalSet { intervals, total }
    }
}

fn trapz_between(curve: &FisherCurve, a: f64, b: f64) -> f64 {
    let mut pts = vec![(a, curve.value_at(a).unwrap_or(0.0))];
    for (t, v) in curve.thetas.iter().zip(&curve.values) {
        if *t > a && *t < b {
            pts.push((*t, *v));
        }
    }
    pts.push((b, curve.value_at(b).unwrap_or(0.0)));
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Average of the curve over a set of intervals (trapezoidal rule).
pub fn mean_cfi(curve: &FisherCurve, range: &[(f64, f64)]) -> Result<f64> {
    let (lo, hi) = (curve.thetas[0], curve.thetas[curve.thetas.len() - 1]);
    let mut len = 0.0;
    let mut integral = 0.0;
    for &(a, b) in range {
        if b < a || a < lo - 1e-12 || b > hi + 1e-12 {
            return arg(format!("interval [{a}, {b}] outside curve span"));
        }
        len += b - a;
        integral += trapz_between(curve, a.max(lo), b.min(hi));
    }
    if !(len > 0.0) {
        return arg("empty averaging range");
    }
    Ok(integral / len)
}

fn crossing(t0: f64, v0: f64, t1: f64, v1: f64, level: f64) -> f64 {
    if v1 == v0 {
        return t0;
    }
    t0 + (level - v0) * (t1 - t0) / (v1 - v0)
}

/// Full width at half maximum of the peak containing the global maximum.
pub fn fwhm(curve: &FisherCurve) -> Result<f64> {
    let n = curve.values.len();
    let i = curve.peak_index();
    let (t, v) = (&curve.thetas, &curve.values);
    if i == 0 || i == n - 1 || v[i] <= v[0].min(v[n - 1]) {
        return Err(Error::PeakUnresolved(format!("maximum at grid index {i} of {n}")));
    }
    let half = v[i] / 2.0;
    let mut l = i;
    while l > 0 && v[l - 1] >= half {
        l -= 1;
    }
    let mut r = i;
    while r < n - 1 && v[r + 1] >= half {
        r += 1;
    }
    if l == 0 || r == n - 1 {
        return Err(Error::PeakUnresolved("half-maximum not reached inside the grid".into()));
    }
    let left = crossing(t[l - 1], v[l - 1], t[l], v[l], half);
    let right = crossing(t[r], v[r], t[r + 1], v[r + 1], half);
    Ok(right - left)
}

/// Maximal intervals where the curve exceeds `bound`.
pub fn nge_range(curve: &FisherCurve, bound: f64) -> Result<IntervalSet> {
    if !(bound >= 0.0) {
        return arg("bound must be non-negative");
    }
    let (t, v) = (&curve.thetas, &curve.values);
    let mut out = Vec::new();
    let mut start: Option<f64> = if v[0] > bound { Some(t[0]) } else { None };
    for k in 1..t.len() {
        let (above_prev, above) = (v[k - 1] > bound, v[k] > bound);
        if !above_prev && above {
            start = Some(crossing(t[k - 1], v[k - 1], t[k], v[k], bound));
        } else if above_prev && !above {
            let end = crossing(t[k - 1], v[k - 1], t[k], v[k], bound);
            out.push((start.take().unwrap_or(t[k - 1]), end));
        }
    }
    if let Some(s) = start {
        out.push((s, t[t.len() - 1]));
    }
    Ok(IntervalSet::new(out))
}

/// Phase QFI of ρ = Σ w_a |v_a><v_a| for a handful of pure components,
/// computed on the support of ρ only (generator n̂).
pub fn qfi_pure_mixture(components: &[(f64, &OscillatorState)]) -> Result<f64> {
    let k = components.len();
    if k == 0 {
        return arg("empty mixture");
    }
    let dim = components[0].1.dim();
    if components.iter().any(|(w, s)| s.dim() != dim || !(*w >= 0.0)) {
        return arg("mixture components need equal dims and non-negative weights");
    }
    let v = CMat::from_fn(dim, k, |i, a| components[a].1.amps()[i] * components[a].0.sqrt());
    let (lams, u) = hermitian_eigen(&(v.adjoint() * &v));
    let support: Vec<(f64, CVec)> = lams
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > EIG_FLOOR)
        .map(|(i, &l)| (l, (&v * u.column(i)) / c(l.sqrt())))
        .collect();
    let nvals = CVec::from_fn(dim, |i, _| c(i as f64));
    let gv: Vec<CVec> = support.iter().map(|(_, e)| e.component_mul(&nvals)).collect();
    let mut f = 0.0;
    for (i, (li, _)) in support.iter().enumerate() {
        f += 4.0 * li * gv[i].norm_squared();
        for (lj, ej) in support.iter() {
            f -= 8.0 * li * lj / (li + lj) * ej.dotc(&gv[i]).norm_sqr();
        }
    }
    Ok(f.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::loss_channel;
    use crate::fockspace::{c, coherent_state, fock_state};
    use crate::probes::{displaced_squeezed, on_state, scs};
    use std::f64::consts::PI;

    #[test]
    fn pure_qfi_examples() {
        let n = number(30);
        assert!(qfi_pure(&fock_state(4, 30).unwrap(), &n).unwrap().value.abs() < 1e-12);
        let a = coherent_state(c(1.3), 40).unwrap();
        assert!((qfi_pure(&a, &number(40)).unwrap().value - 4.0 * 1.69).abs() < 1e-7);
        let z = displaced_squeezed(c(0.0), c(1.0f64.asinh()), 90).unwrap();
        assert!((qfi_pure(&z, &number(90)).unwrap().value - 16.0).abs() < 1e-6);
        let bad = CMat::from_fn(30, 30, |i, j| if i + 1 == j { c(1.0) } else { c(0.0) });
        assert!(qfi_pure(&a, &bad).is_err());
    }

    #[test]
    fn fidelity_qfi_examples() {
        let fock_mix = fock_state(0, 10).unwrap().density().mix(&fock_state(3, 10).unwrap().density(), 0.3).unwrap();
        assert_eq!(qfi_fidelity(&fock_mix, DEFAULT_DTHETA).unwrap().value, 0.0);
        let a = coherent_state(c(1.0), 30).unwrap().density();
        assert!((qfi_fidelity(&a, DEFAULT_DTHETA).unwrap().value - 4.0).abs() < 1e-3);
        let on = on_state(10, (1.0f64 / 9.0).sqrt(), 13).unwrap().density();
        let lossy = loss_channel(&on, 0.9).unwrap();
        let want = {
            let (n, nav, e) = (10.0, 1.0, 0.9f64.powi(10));
            4.0 * n * (n - nav) * nav * e / (nav * e + n - nav)
        };
        assert!((want - 13.43).abs() < 0.01);
        let got = qfi_fidelity(&lossy, DEFAULT_DTHETA).unwrap().value;
        assert!((got / want - 1.0).abs() < 0.02, "{got} vs {want}");
        assert!(qfi_fidelity(&a, 0.5).is_err());
    }

    #[test]
    fn sld_agrees_with_other_methods() {
        let s = scs(2.0, 0.7, 40).unwrap();
        let n = number(40);
        let p = qfi_pure(&s, &n).unwrap().value;
        assert!((qfi_sld(&s.density(), &n).unwrap().value - p).abs() < 1e-8);
        let lossy = loss_channel(&scs(3.0, 0.3, 50).unwrap().density(), 0.95).unwrap();
        let a = qfi_sld(&lossy, &number(50)).unwrap().value;
        let b = qfi_fidelity(&lossy, DEFAULT_DTHETA).unwrap().value;
        assert!((a / b - 1.0).abs() < 0.01, "{a} vs {b}");
        let mixed = DensityMatrix::new(CMat::identity(6, 6) * c(1.0 / 6.0)).unwrap();
        assert_eq!(qfi_sld(&mixed, &number(6)).unwrap().value, 0.0);
    }

    #[test]
    fn cfi_examples() {
        let flat = |_t: f64| Ok(vec![0.25, 0.75]);
        assert!(cfi(flat, 0.3, 1e-4).unwrap().abs() < 1e-12);
        let cosine = |t: f64| Ok(vec![(1.0 + f64::cos(t)) / 2.0, (1.0 - f64::cos(t)) / 2.0]);
        assert!((cfi(cosine, PI / 2.0, 1e-4).unwrap() - 1.0).abs() < 1e-6);
        let broken = |_t: f64| Ok(vec![0.5, 0.6]);
        assert!(matches!(cfi(broken, 0.0, 1e-4), Err(Error::InvalidDistribution(_))));
        // zero probability with vanishing slope contributes nothing
        let dip = |t: f64| Ok(vec![t * t, 1.0 - t * t]);
        assert!(cfi(dip, 0.0, 1e-4).unwrap().abs() < 1e-6);
    }

    #[test]
    fn curve_metrics() {
        let g = uniform_grid(-1.0, 1.0, 201);
        let flat = FisherCurve::new(g.clone(), vec![3.0; 201]).unwrap();
        assert!((mean_cfi(&flat, &[(-0.5, 0.25)]).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(fwhm(&flat), Err(Error::PeakUnresolved(_))));
        assert!(mean_cfi(&flat, &[]).is_err());
        let tri: Vec<f64> = g.iter().map(|t| (1.0 - t.abs()) * 2.0).collect();
        let tri = FisherCurve::new(g.clone(), tri).unwrap();
        assert!((mean_cfi(&tri, &[(-1.0, 1.0)]).unwrap() - 1.0).abs() < 1e-9);
        let sigma = 0.1;
        let gauss: Vec<f64> = g.iter().map(|t| (-(t * t) / (2.0 * sigma * sigma)).exp()).collect();
        let gauss = FisherCurve::new(g.clone(), gauss).unwrap();
        assert!((fwhm(&gauss).unwrap() - 2.3548 * sigma).abs() < 1e-3);
        let gs = uniform_grid(0.0, PI / 10.0, 2001);
        let sin = FisherCurve::new(gs.clone(), gs.iter().map(|t| (10.0 * t).sin().powi(2)).collect()).unwrap();
        assert!((fwhm(&sin).unwrap() - PI / 20.0).abs() < 1e-5);
        assert_eq!(nge_range(&gauss, 2.0).unwrap().total, 0.0);
        assert!((nge_range(&tri, 0.0).unwrap().total - 2.0).abs() < 0.011);
        let r = nge_range(&tri, 1.0).unwrap();
        assert_eq!(r.intervals.len(), 1);
        assert!((r.total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn curve_validation_and_csv() {
        assert!(FisherCurve::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(FisherCurve::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        let c = FisherCurve::new(vec![0.0, 1.0], vec![-1e-10, 2.0]).unwrap().with_meta("probe", "scs");
        assert_eq!(c.values[0], 0.0);
        let csv = c.to_csv();
        assert!(csv.starts_with("# probe: scs\ntheta,value\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn low_rank_mixture_matches_sld() {
        use crate::probes::{displaced_squeezed, GaussParams};
        let g1 = GaussParams { alpha_re: 0.5, alpha_im: -0.3, zeta: 0.4, zeta_phase: 0.7 };
        let g2 = GaussParams { alpha_re: -0.2, alpha_im: 0.6, zeta: 0.2, zeta_phase: -1.0 };
        let dim = 40;
        let s1 = displaced_squeezed(g1.alpha(), g1.zeta_c(), dim).unwrap();
        let s2 = displaced_squeezed(g2.alpha(), g2.zeta_c(), dim).unwrap();
        let rho = crate::probes::gaussian_mixture(0.3, &g1, &g2, dim).unwrap();
        let want = qfi_sld(&rho, &number(dim)).unwrap().value;
        let got = qfi_pure_mixture(&[(0.3, &s1), (0.7, &s2)]).unwrap();
        assert!((want - got).abs() < 1e-9 * want.max(1.0), "{want} {got}");
        let pure = qfi_pure_mixture(&[(1.0, &s1)]).unwrap();
        assert!((pure - qfi_pure(&s1, &number(dim)).unwrap().value).abs() < 1e-9);
    }
}
