//! Study-level computations: constrained probe optimisation, CFI frontiers,
//! uncertainty versus loss, the Gaussian-mixture purity study and the
//! contrast/visibility trade-off of binary projections.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::NoiseSpec;
use crate::closedform::{
    gaussian_bound, gaussian_cfi_binary_max, golden_max, on_cfi, on_projection_coeffs, on_qfi, on_qfi_opt,
    scan_max, scs_projection_cfi, scs_projection_probability, sql_qfi,
};
use crate::error::{arg, Error, Result};
use crate::fisher::{
    cfi_binary, default_grid, mean_cfi, nge_range, qfi_pure, qfi_pure_mixture, qfi_sld, FisherCurve,
};
use crate::fockspace::{
    c, coherent_amplitudes, kron, number, CMat, CVec, DensityMatrix, OscillatorState, C64, I,
};
use crate::probes::{
    displaced_squeezed, on_epsilon_for, scs_epsilon_for, scs_mean_photon, GaussParams, ProbeSpec, ProbeState,
};

/// Binary projective measurement {|m><m|, 1 − |m><m|} after a phase rotation.
///
/// P(θ) = <m|R(θ) ρ R(θ)†|m> is a trigonometric polynomial in θ, stored by
/// photon-number difference so P and dP/dθ are exact and cheap.
#[derive(Debug, Clone)]
pub struct BinaryProjection {
    coeffs: Vec<C64>,
    dim: usize,
}

impl BinaryProjection {
    pub fn new(rho: &DensityMatrix, m: &CVec) -> Result<Self> {
        let dim = rho.dim();
        if m.len() != dim {
            return arg(format!("measurement vector has length {} for dim {dim}", m.len()));
        }
        let m = m / c(m.norm());
        let r = rho.mat();
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * dim - 1];
        for j in 0..dim {
            for k in 0..dim {
                coeffs[j + dim - 1 - k] += m[j].conj() * r[(j, k)] * m[k];
            }
        }
        Ok(BinaryProjection { coeffs, dim })
    }

    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let off = self.dim as isize - 1;
        let (mut p, mut dp) = (0.0, 0.0);
        for (i, cd) in self.coeffs.iter().enumerate() {
            let d = (i as isize - off) as f64;
            let z = cd * (I * (theta * d)).exp();
            p += z.re;
            dp -= d * z.im;
        }
        (p, dp)
    }

    pub fn p(&self, theta: f64) -> f64 {
        self.eval(theta).0.clamp(0.0, 1.0)
    }

    pub fn cfi(&self, theta: f64) -> Result<f64> {
        let (p, dp) = self.eval(theta);
        cfi_binary(p.clamp(0.0, 1.0), dp)
    }

    pub fn curve(&self, thetas: Vec<f64>) -> Result<FisherCurve> {
        FisherCurve::from_fn(thetas, |t| self.cfi(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Coherent,
    SqueezedVacuum,
    DisplacedFock,
    On,
    Scs,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "coherent" => Family::Coherent,
            "squeezed_vacuum" => Family::SqueezedVacuum,
            "displaced_fock" => Family::DisplacedFock,
            "on" => Family::On,
            "scs" => Family::Scs,
            _ => return arg(format!("unknown family {s}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    FixedN,
    FixedAlphaMax,
    FixedNMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Qfi,
    PeakCfi,
    MeanCfiOverNge,
}

/// Measurement used for CFI objectives: balanced SCS (|0> − i|α>) for SCS,
/// balanced ON (|0> + |n>) for ON states and the ideal probe itself otherwise.
pub fn measurement_vector(probe: &ProbeSpec, dim: usize) -> Result<CVec> {
    Ok(match *probe {
        ProbeSpec::Scs { alpha, .. } => {
            let len = dim + 20;
            let mut v = coherent_amplitudes(c(alpha), len) * (-I);
            v[0] += c(1.0);
            v.rows(0, dim).into_owned()
        }
        ProbeSpec::OnState { n, .. } => {
            let mut v = CVec::zeros(dim);
            v[0] = c(FRAC_1_SQRT_2);
            v[n] += c(FRAC_1_SQRT_2);
            v
        }
        _ => match probe.state(dim)? {
            ProbeState::Pure(s) => s.amps().clone(),
            ProbeState::Mixed(_) => return arg("self-projection needs a pure probe"),
        },
    })
}

fn noisy_state(probe: &ProbeSpec, noise: &NoiseSpec) -> Result<(ProbeState, usize)> {
    noise.validate()?;
    let dim = probe.suggested_dim() + if noise.n_th > 0.0 { 10 } else { 0 };
    let s = probe.state(dim)?;
    if noise.eta == 1.0 && noise.n_th == 0.0 {
        return Ok((s, dim));
    }
    Ok((ProbeState::Mixed(noise.apply_oscillator(&s.density())?), dim))
}

/// Phase QFI of the probe after the oscillator noise.
pub fn probe_qfi(probe: &ProbeSpec, noise: &NoiseSpec) -> Result<f64> {
    let (s, dim) = noisy_state(probe, noise)?;
    Ok(match s {
        ProbeState::Pure(p) => qfi_pure(&p, &number(dim))?.value,
        ProbeState::Mixed(r) => qfi_sld(&r, &number(dim))?.value,
    })
}

/// CFI curve of the noisy probe under its family measurement.
pub fn probe_cfi_curve(probe: &ProbeSpec, noise: &NoiseSpec, thetas: Vec<f64>) -> Result<FisherCurve> {
    let (s, dim) = noisy_state(probe, noise)?;
    let m = measurement_vector(probe, dim)?;
    BinaryProjection::new(&s.density(), &m)?.curve(thetas)
}

/// Objective value of one probe. `bound` is the Gaussian reference used for
/// the NGE range.
pub fn evaluate(probe: &ProbeSpec, noise: &NoiseSpec, objective: Objective) -> Result<f64> {
    match objective {
        Objective::Qfi => probe_qfi(probe, noise),
        Objective::PeakCfi => {
            let (s, dim) = noisy_state(probe, noise)?;
            let bp = BinaryProjection::new(&s.density(), &measurement_vector(probe, dim)?)?;
            let grid = default_grid();
            let step = grid[1] - grid[0];
            let curve = bp.curve(grid)?;
            let (t, v) = curve.peak();
            let f = |x: f64| bp.cfi(x).unwrap_or(0.0);
            let (_, r) = golden_max(f, t - step, t + step, 1e-9);
            Ok(v.max(r))
        }
        Objective::MeanCfiOverNge => {
            let nav = probe.mean_photon();
            let bound = gaussian_bound(nav, noise.eta, noise.n_th)?.value;
            let curve = probe_cfi_curve(probe, noise, default_grid())?;
            let nge = nge_range(&curve, bound)?;
            if nge.total == 0.0 {
                return Ok(0.0);
            }
            mean_cfi(&curve, &nge.intervals)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub probe: ProbeSpec,
    pub score: f64,
    /// Continuous or discrete scan coordinate of the optimum.
    pub coordinate: f64,
    /// Grid step of the scan in that coordinate (1 for discrete scans).
    pub step: f64,
    pub coordinate_name: String,
    pub scan: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRequest {
    pub family: Family,
    pub constraint: Constraint,
    pub value: f64,
    pub noise: NoiseSpec,
    pub objective: Objective,
    /// α² cap for SCS under fixed N, Fock-number cap for ON under fixed N.
    pub cap: Option<f64>,
}

enum Coord {
    Continuous { name: &'static str, lo: f64, hi: f64, build: Box<dyn Fn(f64) -> Result<ProbeSpec> + Sync> },
    Discrete { name: &'static str, values: Vec<usize>, build: Box<dyn Fn(usize) -> Result<ProbeSpec> + Sync> },
}

fn coordinate(req: &OptimizeRequest) -> Result<Coord> {
    let v = req.value;
    if !(v > 0.0) {
        return arg("constraint value must be positive");
    }
    Ok(match (req.family, req.constraint) {
        (Family::Scs, Constraint::FixedN) => {
            let cap = req.cap.unwrap_or(30.0);
            if cap <= v {
                return Err(Error::Infeasible(format!("α² cap {cap} not above N = {v}")));
            }
            Coord::Continuous {
                name: "alpha2",
                lo: v * 1.0001,
                hi: cap,
                build: Box::new(move |a2: f64| {
                    let alpha = a2.sqrt();
                    Ok(ProbeSpec::Scs { alpha, epsilon: scs_epsilon_for(alpha, v)? })
                }),
            }
        }
        (Family::Scs, Constraint::FixedAlphaMax) => Coord::Continuous {
            name: "ln_epsilon",
            lo: 1e-3f64.ln(),
            hi: 10f64.ln(),
            build: Box::new(move |le: f64| Ok(ProbeSpec::Scs { alpha: v.sqrt(), epsilon: le.exp() })),
        },
        (Family::On, Constraint::FixedN) => {
            let cap = req.cap.unwrap_or(50.0) as usize;
            let lo = v.floor() as usize + 1;
            if lo > cap {
                return Err(Error::Infeasible(format!("N = {v} not below the Fock cap {cap}")));
            }
            Coord::Discrete {
                name: "n",
                values: (lo..=cap).collect(),
                build: Box::new(move |n| Ok(ProbeSpec::OnState { n, epsilon: on_epsilon_for(n, v)? })),
            }
        }
        (Family::On, Constraint::FixedNMax) => {
            let n = v.round() as usize;
            Coord::Continuous {
                name: "ln_epsilon",
                lo: 1e-3f64.ln(),
                hi: 10f64.ln(),
                build: Box::new(move |le: f64| Ok(ProbeSpec::OnState { n, epsilon: le.exp() })),
            }
        }
        (Family::DisplacedFock, Constraint::FixedN) => Coord::Discrete {
            name: "n",
            values: (0..=v.floor() as usize).collect(),
            build: Box::new(move |n| Ok(ProbeSpec::DisplacedFock { alpha: (v - n as f64).sqrt(), alpha_im: 0.0, n })),
        },
        (Family::Coherent, Constraint::FixedN) => Coord::Discrete {
            name: "none",
            values: vec![0],
            build: Box::new(move |_| Ok(ProbeSpec::Coherent { alpha: v.sqrt(), alpha_im: 0.0 })),
        },
        (Family::SqueezedVacuum, Constraint::FixedN) => Coord::Discrete {
            name: "none",
            values: vec![0],
            build: Box::new(move |_| Ok(ProbeSpec::SqueezedVacuum { zeta: v.sqrt().asinh() })),
        },
        (f, k) => return arg(format!("family {f:?} does not support constraint {k:?}")),
    })
}

const SCAN_POINTS: usize = 48;

/// Grid search over the family's free coordinate, refined by golden section.
pub fn optimize_probe(req: &OptimizeRequest) -> Result<Optimum> {
    let score = |p: Result<ProbeSpec>| -> f64 {
        p.and_then(|p| evaluate(&p, &req.noise, req.objective)).unwrap_or(f64::NEG_INFINITY)
    };
    match coordinate(req)? {
        Coord::Discrete { name, values, build } => {
            let scan: Vec<(f64, f64)> = values.par_iter().map(|&n| (n as f64, score(build(n)))).collect();
            let best = scan.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
            if !best.1.is_finite() {
                return Err(Error::Infeasible("no feasible probe in the scan".into()));
            }
            Ok(Optimum {
                probe: build(best.0 as usize)?,
                score: best.1,
                coordinate: best.0,
                step: 1.0,
                coordinate_name: name.into(),
                scan,
            })
        }
        Coord::Continuous { name, lo, hi, build } => {
            let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
            let xs: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
            let scan: Vec<(f64, f64)> = xs.par_iter().map(|&x| (x, score(build(x)))).collect();
            let bi = (0..scan.len()).fold(0, |b, i| if scan[i].1 > scan[b].1 { i } else { b });
            if !scan[bi].1.is_finite() {
                return Err(Error::Infeasible("no feasible probe in the scan".into()));
            }
            let a = scan[bi.saturating_sub(1)].0;
            let b = scan[(bi + 1).min(scan.len() - 1)].0;
            let (x, v) = golden_max(|x| score(build(x)), a, b, step * 1e-4);
            let (x, v) = if v >= scan[bi].1 { (x, v) } else { scan[bi] };
            Ok(Optimum { probe: build(x)?, score: v, coordinate: x, step, coordinate_name: name.into(), scan })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub delta_theta: f64,
    pub mean_cfi: f64,
    pub params: ProbeSpec,
    pub regime: NoiseSpec,
}

/// Candidate probes at fixed N: SCS over a log-spaced α² grid up to
/// `cap` (default 40), ON over n up to `cap` (default 40).
fn frontier_candidates(family: Family, nav: f64, cap: Option<f64>) -> Result<Vec<ProbeSpec>> {
    match family {
        Family::Scs => {
            let hi = cap.unwrap_or(40.0);
            let lo = (nav * 1.05).max(0.5);
            if hi <= lo {
                return Err(Error::Infeasible("α² cap below N".into()));
            }
            (0..60)
                .map(|i| {
                    let a2 = lo * (hi / lo).powf(i as f64 / 59.0);
                    let alpha = a2.sqrt();
                    Ok(ProbeSpec::Scs { alpha, epsilon: scs_epsilon_for(alpha, nav)? })
                })
                .collect()
        }
        Family::On => {
            let hi = cap.unwrap_or(40.0) as usize;
            ((nav.floor() as usize + 1)..=hi)
                .map(|n| Ok(ProbeSpec::OnState { n, epsilon: on_epsilon_for(n, nav)? }))
                .collect()
        }
        f => arg(format!("frontier not defined for {f:?}")),
    }
}

/// Keeps points not dominated in (δθ, mean CFI), sorted by δθ.
pub fn nondominated(mut pts: Vec<FrontierPoint>) -> Vec<FrontierPoint> {
    pts.sort_by(|a, b| b.delta_theta.total_cmp(&a.delta_theta).then(b.mean_cfi.total_cmp(&a.mean_cfi)));
    let mut out: Vec<FrontierPoint> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for p in pts {
        if p.mean_cfi > best {
            best = p.mean_cfi;
            out.push(p);
        }
    }
    out.reverse();
    out
}

/// Precision/range trade-off: for each candidate, δθ is the measure of the
/// θ set where the CFI beats the Gaussian bound and the score is the mean
/// CFI over that set.
pub fn frontier(
    family: Family,
    nav: f64,
    noise: &NoiseSpec,
    thetas: &[f64],
    cap: Option<f64>,
) -> Result<Vec<FrontierPoint>> {
    if !(nav > 0.0) {
        return arg("frontier needs N > 0");
    }
    let bound = gaussian_bound(nav, noise.eta, noise.n_th)?.value;
    let cands = frontier_candidates(family, nav, cap)?;
    let pts: Result<Vec<Option<FrontierPoint>>> = cands
        .par_iter()
        .map(|p| {
            let curve = probe_cfi_curve(p, noise, thetas.to_vec())?;
            let nge = nge_range(&curve, bound)?;
            if nge.total == 0.0 {
                return Ok(None);
            }
            Ok(Some(FrontierPoint {
                delta_theta: nge.total,
                mean_cfi: mean_cfi(&curve, &nge.intervals)?,
                params: p.clone(),
                regime: *noise,
            }))
        })
        .collect();
    Ok(nondominated(pts?.into_iter().flatten().collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    Gaussian,
    Sql,
    Scs,
    On,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMode {
    Qfi,
    Cfi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyOptions {
    /// α² cap for the numerical SCS QFI optimum.
    pub scs_alpha2_cap_qfi: f64,
    /// α² cap for the SCS CFI scan.
    pub scs_alpha2_cap_cfi: f64,
    /// Fock-number cap for ideal ON states.
    pub on_n_cap: usize,
}

impl Default for UncertaintyOptions {
    fn default() -> Self {
        UncertaintyOptions { scs_alpha2_cap_qfi: 30.0, scs_alpha2_cap_cfi: 1e4, on_n_cap: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyRow {
    pub family: LossFamily,
    pub nav: f64,
    pub eta: f64,
    pub fisher: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyTable {
    pub mode: FisherMode,
    pub options: UncertaintyOptions,
    pub rows: Vec<UncertaintyRow>,
}

impl UncertaintyTable {
    pub fn get(&self, family: LossFamily, nav: f64, eta: f64) -> Option<&UncertaintyRow> {
        self.rows.iter().find(|r| r.family == family && r.nav == nav && r.eta == eta)
    }

    /// r(η) = dθ_Gauss / dθ_family.
    pub fn ratio(&self, family: LossFamily, nav: f64, eta: f64) -> Option<f64> {
        Some(self.get(LossFamily::Gaussian, nav, eta)?.dtheta / self.get(family, nav, eta)?.dtheta)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# mode: {:?}\n# scs_alpha2_cap_qfi: {}\n# scs_alpha2_cap_cfi: {}\n# on_n_cap: {}\nfamily,nav,eta,fisher,dtheta\n",
            self.mode, self.options.scs_alpha2_cap_qfi, self.options.scs_alpha2_cap_cfi, self.options.on_n_cap
        );
        for r in &self.rows {
            s.push_str(&format!("{:?},{},{},{:.10e},{:.10e}\n", r.family, r.nav, r.eta, r.fisher, r.dtheta));
        }
        s
    }
}

/// Best SCS CFI at fixed N under pure loss: balanced SCS projection, scanned
/// over α² on a log grid and over θ in the central peak.
pub fn scs_cfi_best(nav: f64, eta: f64, alpha2_cap: f64) -> Result<(f64, f64)> {
    let lo = (nav * 1.1).max(4.0);
    if alpha2_cap <= lo {
        return Err(Error::Infeasible("α² cap too small".into()));
    }
    let peak = |a2: f64| -> f64 {
        let alpha = a2.sqrt();
        let Ok(eps) = scs_epsilon_for(alpha, nav) else { return 0.0 };
        let w = PI / (4.0 * a2 * eta.sqrt());
        scan_max(|t| scs_projection_cfi(alpha, eps, 1.0, -PI / 2.0, eta, t).unwrap_or(0.0), -w, w, 21).1
    };
    let n = 240;
    let la = (alpha2_cap / lo).ln();
    let grid: Vec<f64> = (0..n).map(|i| lo * (la * i as f64 / (n - 1) as f64).exp()).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&a| peak(a)).collect();
    let bi = (0..n).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let (a, b) = (grid[bi.saturating_sub(1)], grid[(bi + 1).min(n - 1)]);
    let (x, v) = golden_max(peak, a, b, 1e-6 * grid[bi]);
    Ok(if v >= vals[bi] { (x, v) } else { (grid[bi], vals[bi]) })
}

fn fisher_for(family: LossFamily, nav: f64, eta: f64, mode: FisherMode, o: &UncertaintyOptions) -> Result<f64> {
    let noise = NoiseSpec::loss(eta);
    match (family, mode) {
        (LossFamily::Gaussian, FisherMode::Qfi) => Ok(gaussian_bound(nav, eta, 0.0)?.value),
        (LossFamily::Gaussian, FisherMode::Cfi) => Ok(gaussian_cfi_binary_max(nav, eta)?.1),
        // homodyne saturates the coherent-state QFI
        (LossFamily::Sql, _) => Ok(sql_qfi(nav, eta, 0.0)),
        (LossFamily::Scs, FisherMode::Qfi) => Ok(optimize_probe(&OptimizeRequest {
            family: Family::Scs,
            constraint: Constraint::FixedN,
            value: nav,
            noise,
            objective: Objective::Qfi,
            cap: Some(o.scs_alpha2_cap_qfi),
        })?
        .score),
        (LossFamily::Scs, FisherMode::Cfi) => Ok(scs_cfi_best(nav, eta, o.scs_alpha2_cap_cfi)?.1),
        (LossFamily::On, FisherMode::Qfi) => {
            if eta == 1.0 {
                on_qfi(nav, o.on_n_cap, 1.0)
            } else {
                on_qfi_opt(nav, eta)
            }
        }
        (LossFamily::On, FisherMode::Cfi) => {
            let lo = nav.floor() as usize + 1;
            let mut best: f64 = 0.0;
            for n in lo..=o.on_n_cap.max(lo) {
                // peak of sin²(nθ) at nθ = π/2
                best = best.max(on_cfi(nav, n, PI / (2.0 * n as f64), eta)?);
            }
            Ok(best)
        }
    }
}

/// dθ = 1/√F over families, mean photon numbers and transmissivities.
pub fn uncertainty_vs_loss(
    families: &[LossFamily],
    navs: &[f64],
    etas: &[f64],
    mode: FisherMode,
    options: UncertaintyOptions,
) -> Result<UncertaintyTable> {
    let mut jobs = vec![];
    for &f in families {
        for &n in navs {
            for &e in etas {
                jobs.push((f, n, e));
            }
        }
    }
    let rows: Result<Vec<UncertaintyRow>> = jobs
        .par_iter()
        .map(|&(family, nav, eta)| {
            let fisher = fisher_for(family, nav, eta, mode, &options)?;
            Ok(UncertaintyRow { family, nav, eta, fisher, dtheta: 1.0 / fisher.sqrt() })
        })
        .collect();
    Ok(UncertaintyTable { mode, options, rows: rows? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub n_range: (f64, f64),
    /// Fraction of samples whose second component is a small perturbation
    /// of the first.
    pub twin_fraction: f64,
    /// Fraction of first components whose |α| is log-uniform on
    /// [2·10⁻⁴, 2] instead of uniform in the disk.
    pub log_alpha_fraction: f64,
    pub bins: usize,
    pub min_per_bin: usize,
    pub rescale: Rescale,
}

/// How the two sampled components are brought to the target N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescale {
    /// Each component scaled to mean photon number N on its own.
    #[default]
    PerComponent,
    /// One common factor on both components so only the mixture has mean N.
    /// Admits unequal-energy mixtures, which can exceed 8N² + 8N.
    Shared,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig { n_samples: 2000, seed: 2024, n_range: (1.0, 4.0), twin_fraction: 0.5, log_alpha_fraction: 1.0, bins: 20, min_per_bin: 20, rescale: Rescale::PerComponent }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureSample {
    pub index: usize,
    pub p: f64,
    pub g1: GaussParams,
    pub g2: GaussParams,
    pub nav: f64,
    pub purity: f64,
    pub qfi_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub bins_used: usize,
    /// (ln(1 − purity), min ln(1 − ratio)) per retained bin.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureStudy {
    pub config: MixtureConfig,
    pub samples: Vec<MixtureSample>,
    pub fit: EnvelopeFit,
}

impl MixtureStudy {
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "# n_samples: {}\n# seed: {}\n# n_range: {}..{}\n# slope: {:.6}\n# intercept: {:.6}\nindex,p,nav,purity,qfi_ratio,ln_1m_purity,ln_1m_ratio\n",
            c.n_samples, c.seed, c.n_range.0, c.n_range.1, self.fit.slope, self.fit.intercept
        );
        for m in &self.samples {
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                m.index,
                m.p,
                m.nav,
                m.purity,
                m.qfi_ratio,
                (1.0 - m.purity).ln(),
                (1.0 - m.qfi_ratio).ln()
            ));
        }
        s
    }
}

fn random_gauss(rng: &mut ChaCha20Rng, log_alpha: bool) -> GaussParams {
    // α uniform in the disk |α| ≤ 2, |ζ| uniform on [0, 1], uniform phases
    let r = if log_alpha { 2.0 * 10f64.powf(rng.random_range(-4.0..0.0)) } else { 2.0 * rng.random::<f64>().sqrt() };
    let phi = rng.random_range(0.0..2.0 * PI);
    GaussParams {
        alpha_re: r * phi.cos(),
        alpha_im: r * phi.sin(),
        zeta: rng.random::<f64>(),
        zeta_phase: rng.random_range(0.0..2.0 * PI),
    }
}

fn twin_of(g: &GaussParams, rng: &mut ChaCha20Rng) -> GaussParams {
    let delta = 10f64.powf(rng.random_range(-3.0..0.0));
    let mut d = [0.0; 4];
    for x in d.iter_mut() {
        *x = rng.random_range(-1.0..1.0);
    }
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let s = delta / norm;
    GaussParams {
        alpha_re: g.alpha_re + s * d[0],
        alpha_im: g.alpha_im + s * d[1],
        zeta: (g.zeta + s * d[2]).abs(),
        zeta_phase: g.zeta_phase + s * d[3],
    }
}

fn scaled(g: &GaussParams, s: f64) -> GaussParams {
    GaussParams { alpha_re: g.alpha_re * s, alpha_im: g.alpha_im * s, zeta: g.zeta * s, zeta_phase: g.zeta_phase }
}

/// One sample; deterministic in (seed, index).
pub fn mixture_sample(cfg: &MixtureConfig, index: usize) -> Result<MixtureSample> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let target = rng.random_range(cfg.n_range.0..=cfg.n_range.1);
    let p = rng.random::<f64>();
    let log_alpha = rng.random::<f64>() < cfg.log_alpha_fraction;
    let g1 = random_gauss(&mut rng, log_alpha);
    let g2 = if rng.random::<f64>() < cfg.twin_fraction { twin_of(&g1, &mut rng) } else { random_gauss(&mut rng, false) };
    let scale_to = |nav_at: &dyn Fn(f64) -> f64| -> Result<f64> {
        let mut hi = 1.0;
        while nav_at(hi) < target {
            hi *= 2.0;
        }
        crate::closedform::bisect(|s| nav_at(s) - target, 0.0, hi, 1e-14)
    };
    let (g1, g2) = match cfg.rescale {
        Rescale::PerComponent => {
            let s1 = scale_to(&|s| scaled(&g1, s).mean_photon())?;
            let s2 = scale_to(&|s| scaled(&g2, s).mean_photon())?;
            (scaled(&g1, s1), scaled(&g2, s2))
        }
        Rescale::Shared => {
            let s = scale_to(&|s| p * scaled(&g1, s).mean_photon() + (1.0 - p) * scaled(&g2, s).mean_photon())?;
            (scaled(&g1, s), scaled(&g2, s))
        }
    };
    let dim = ProbeSpec::GaussianMixture { p, g1, g2 }.suggested_dim();
    let s1 = displaced_squeezed(g1.alpha(), g1.zeta_c(), dim)?;
    let s2 = displaced_squeezed(g2.alpha(), g2.zeta_c(), dim)?;
    let ov = s1.overlap(&s2)?.norm_sqr();
    let purity = p * p + (1.0 - p) * (1.0 - p) + 2.0 * p * (1.0 - p) * ov;
    let nav = p * g1.mean_photon() + (1.0 - p) * g2.mean_photon();
    let f = qfi_pure_mixture(&[(p, &s1), (1.0 - p, &s2)])?;
    let bound = 8.0 * nav * nav + 8.0 * nav;
    Ok(MixtureSample { index, p, g1, g2, nav, purity, qfi_ratio: f / bound })
}

/// Lower envelope of ln(1 − ratio) against ln(1 − purity): per-bin minima
/// over bins holding at least `min_per_bin` samples, then least squares.
pub fn envelope_fit(samples: &[MixtureSample], bins: usize, min_per_bin: usize) -> Result<EnvelopeFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| 1.0 - s.purity > 1e-13 && 1.0 - s.qfi_ratio > 1e-15)
        .map(|s| ((1.0 - s.purity).ln(), (1.0 - s.qfi_ratio).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Infeasible("too few impure samples to fit".into()));
    }
    let (xmin, xmax) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let w = (xmax - xmin) / bins as f64;
    let mut cells: Vec<Vec<(f64, f64)>> = vec![vec![]; bins];
    for &(x, y) in &pts {
        let k = (((x - xmin) / w) as usize).min(bins - 1);
        cells[k].push((x, y));
    }
    let env: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.len() >= min_per_bin)
        .map(|c| c.iter().copied().fold((0.0, f64::MAX), |m, p| if p.1 < m.1 { p } else { m }))
        .collect();
    if env.len() < 2 {
        return Err(Error::Infeasible("fewer than two populated purity bins".into()));
    }
    let n = env.len() as f64;
    let (sx, sy) = env.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = env.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = env.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(EnvelopeFit { slope, intercept: my - slope * mx, bins_used: env.len(), points: env })
}

/// Random two-component displaced-squeezed mixtures against the ideal
/// Gaussian bound at matched N. Any ratio above 1 + 1e-6 is an error.
pub fn mixture_study(cfg: &MixtureConfig) -> Result<MixtureStudy> {
    if cfg.n_samples < 100 {
        return arg("mixture study needs at least 100 samples");
    }
    if !(cfg.n_range.0 > 0.0 && cfg.n_range.1 >= cfg.n_range.0) {
        return arg("invalid N range");
    }
    let samples: Result<Vec<MixtureSample>> = (0..cfg.n_samples).into_par_iter().map(|i| mixture_sample(cfg, i)).collect();
    let samples = samples?;
    let bad: Vec<&MixtureSample> = samples.iter().filter(|s| s.qfi_ratio > 1.0 + 1e-6).collect();
    if let Some(first) = bad.first() {
        return Err(Error::ConjectureViolation(format!(
            "{} samples exceed the Gaussian bound; first: index {} ratio {}",
            bad.len(),
            first.index,
            first.qfi_ratio
        )));
    }
    let fit = envelope_fit(&samples, cfg.bins, cfg.min_per_bin)?;
    Ok(MixtureStudy { config: *cfg, samples, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastFamily {
    On,
    Scs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContrastRecord {
    pub a: f64,
    pub b: f64,
    /// B/A
    pub visibility: f64,
    /// 2B
    pub contrast: f64,
    pub max_slope: f64,
    /// Fock number used for ON states and whether it was rounded.
    pub n_used: Option<usize>,
    pub rounded: bool,
}

fn scs_alpha_for(nav: f64, epsilon: f64) -> Result<f64> {
    crate::closedform::bisect(|a| scs_mean_photon(a, epsilon) - nav, nav.sqrt(), 60.0, 1e-13)
}

/// Offset A, amplitude B, visibility, contrast and steepest slope of the
/// binary projection onto |0> + ε'|target>.
pub fn contrast_visibility(
    nav: f64,
    epsilon: f64,
    eps_prime: f64,
    eta: f64,
    family: ContrastFamily,
) -> Result<ContrastRecord> {
    if !(epsilon > 0.0 && eps_prime > 0.0 && nav > 0.0) {
        return arg("contrast needs N, ε, ε' > 0");
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return arg(format!("eta {eta} outside (0, 1]"));
    }
    match family {
        ContrastFamily::On => {
            let exact = nav * (1.0 + epsilon * epsilon) / (epsilon * epsilon);
            let n = exact.round().max(1.0) as usize;
            let (a, b) = on_projection_coeffs(n, epsilon, eps_prime, eta);
            Ok(ContrastRecord {
                a,
                b,
                visibility: b / a,
                contrast: 2.0 * b,
                max_slope: n as f64 * b,
                n_used: Some(n),
                rounded: (exact - n as f64).abs() > 1e-9,
            })
        }
        ContrastFamily::Scs => {
            let alpha = scs_alpha_for(nav, epsilon)?;
            let p = |t: f64| scs_projection_probability(alpha, epsilon, eps_prime, 0.0, eta, t);
            let n = 8001;
            let h = 2.0 * PI / (n - 1) as f64;
            let ps: Vec<f64> = (0..n).map(|i| p(-PI + h * i as f64)).collect();
            let (lo, hi) = ps.iter().fold((f64::MAX, f64::MIN), |(l, u), &v| (l.min(v), u.max(v)));
            let slope = ps.windows(3).map(|w| ((w[2] - w[0]) / (2.0 * h)).abs()).fold(0.0, f64::max);
            let (a, b) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
            Ok(ContrastRecord {
                a,
                b,
                visibility: b / a,
                contrast: 2.0 * b,
                max_slope: slope,
                n_used: None,
                rounded: false,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContrastOptima {
    pub argmax_visibility: f64,
    pub argmax_contrast: f64,
    pub argmax_slope: f64,
    pub grid_step_ln: f64,
}

/// Scans ε' on a log grid over [1e-2, 1e2] for the three optima.
pub fn contrast_optima(nav: f64, epsilon: f64, eta: f64, family: ContrastFamily, n: usize) -> Result<ContrastOptima> {
    let (l0, l1) = (1e-2f64.ln(), 1e2f64.ln());
    let step = (l1 - l0) / (n - 1) as f64;
    let recs: Result<Vec<(f64, ContrastRecord)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let e = (l0 + step * i as f64).exp();
            Ok((e, contrast_visibility(nav, epsilon, e, eta, family)?))
        })
        .collect();
    let recs = recs?;
    let arg_of = |f: &dyn Fn(&ContrastRecord) -> f64| {
        recs.iter().fold((0.0, f64::NEG_INFINITY), |b, (e, r)| if f(r) > b.1 { (*e, f(r)) } else { b }).0
    };
    Ok(ContrastOptima {
        argmax_visibility: arg_of(&|r| r.visibility),
        argmax_contrast: arg_of(&|r| r.contrast),
        argmax_slope: arg_of(&|r| r.max_slope),
        grid_step_ln: step,
    })
}

/// Cap on dim_small² for the two-copy check.
pub const ADDITIVITY_MAX_DIM: usize = 625;

/// QFI(ρ⊗ρ, n̂₁ + n̂₂) / (2 QFI(ρ)); 1 when both vanish.
pub fn qfi_additivity_check(probe: &ProbeSpec, dim_small: usize) -> Result<f64> {
    let d2 = dim_small * dim_small;
    if d2 > ADDITIVITY_MAX_DIM {
        return Err(Error::ResourceLimit(format!("two-copy dim {d2} above {ADDITIVITY_MAX_DIM}")));
    }
    let s = probe.state(dim_small)?;
    let n = number(dim_small);
    let id = CMat::identity(dim_small, dim_small);
    let g2 = kron(&n, &id) + kron(&id, &n);
    let (single, double) = match &s {
        ProbeState::Pure(p) => {
            let v = p.amps().kronecker(p.amps());
            // the Fock-space state type only cares about the vector here
            let two = OscillatorState::new(v)?;
            (qfi_pure(p, &n)?.value, qfi_pure(&two, &g2)?.value)
        }
        ProbeState::Mixed(r) => {
            let two = DensityMatrix::new(kron(r.mat(), r.mat()))?;
            (qfi_sld(r, &n)?.value, qfi_sld(&two, &g2)?.value)
        }
    };
    if single.abs() < 1e-10 && double.abs() < 1e-10 {
        return Ok(1.0);
    }
    Ok(double / (2.0 * single))
}
