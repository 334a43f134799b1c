//! Command-line driver: `qfi`, `curve` and `study` subcommands with CSV/JSON
//! output and an optional TOML config.
//!
//! Exit codes: 0 success, 1 error or failed `--check`, 2 usage error,
//! 3 infeasible study or conjecture violation.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    contrast_optima, contrast_visibility, frontier, measurement_vector, mixture_study, uncertainty_vs_loss,
    BinaryProjection, ContrastFamily, Family, FisherMode, LossFamily, MixtureConfig, UncertaintyOptions,
};
use crate::channels::NoiseSpec;
use crate::closedform::{
    displaced_fock_qfi_n, gaussian_cfi_binary, nav_trans_gaussian, on_qfi, scs_qfi, sql_qfi, squeezed_branch, thresholds, ScsQfi,
    ThresholdKind,
};
use crate::error::{Error, Result};
use crate::fisher::{qfi_pure, qfi_sld, uniform_grid, FisherCurve, QfiMethod};
use crate::fockspace::number;
use crate::probes::{on_epsilon_for, scs_epsilon_for, ProbeSpec, ProbeState};
use crate::protocol::{bias_study, protocol_cfi, Basis, DephasingPlacement, ProtocolConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ThetaGrid {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Grids {
    pub theta: ThetaGrid,
    pub eta: Option<Vec<f64>>,
    pub nav: Option<Vec<f64>>,
    pub alpha2: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
}

/// Everything a run depends on. Loaded from `--config`, overridden by flags
/// and echoed into every output header.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub command: Option<String>,
    pub probe: Option<ProbeSpec>,
    pub noise: NoiseSpec,
    pub grids: Grids,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn echo(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    fn thetas(&self, default: (f64, f64, usize)) -> Result<Vec<f64>> {
        let t = &self.grids.theta;
        let (a, b, n) = (t.min.unwrap_or(default.0), t.max.unwrap_or(default.1), t.points.unwrap_or(default.2));
        if !(b > a) || n < 2 {
            return Err(Error::InvalidArgument(format!("bad theta grid [{a}, {b}] with {n} points")));
        }
        Ok(uniform_grid(a, b, n))
    }
}

#[derive(Debug, Parser)]
#[command(name = "phasefisher", version, about = "Fisher information for bosonic phase estimation")]
pub struct Cli {
    /// TOML file with a StudyConfig; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase QFI of a probe after noise.
    Qfi {
        #[command(flatten)]
        probe: ProbeArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Also print the closed-form value and relative error.
        #[arg(long)]
        oracle: bool,
    },
    /// CFI curve over θ.
    Curve {
        #[arg(value_enum)]
        kind: CurveKind,
        #[command(flatten)]
        probe: ProbeArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        proto: ProtocolArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Study-level scans with CSV output and a JSON summary.
    Study {
        #[arg(value_enum)]
        kind: StudyKind,
        #[command(flatten)]
        study: StudyArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        proto: ProtocolArgs,
        /// Run the acceptance assertions for this study and set the exit code.
        #[arg(long)]
        check: bool,
        /// Where to write the JSON summary (CSV mode only).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    Cfi,
    Protocol,
    GaussianCfi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    Frontier,
    Uncertainty,
    Mixture,
    Bias,
    Contrast,
    Thresholds,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProbeArgs {
    /// coherent, squeezed_vacuum, displaced_squeezed, fock, displaced_fock,
    /// on_state, scs, general_scs, classical_mixture
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_im: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub nav: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub zeta_phase: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub n_th: Option<f64>,
    #[arg(long)]
    pub dephasing: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProtocolArgs {
    /// Readout basis for protocol curves: sigma-y or sigma-z.
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rabi_error: Option<f64>,
    /// Preparation angle φ_ε (ε = tan φ_ε).
    #[arg(long)]
    pub phi_eps: Option<f64>,
    /// Apply dephasing just before readout instead of during sensing.
    #[arg(long)]
    pub late_dephasing: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StudyArgs {
    /// Probe family for frontier (scs, on) or contrast (scs, on).
    #[arg(long)]
    pub family: Option<String>,
    /// Comma-separated mean photon numbers.
    #[arg(long, value_delimiter = ',')]
    pub nav: Option<Vec<f64>>,
    /// Comma-separated transmissivities (uncertainty study).
    #[arg(long = "eta-grid", value_delimiter = ',')]
    pub eta_grid: Option<Vec<f64>>,
    /// qfi or cfi (uncertainty study).
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threshold kind (thresholds study).
    #[arg(long = "kind", id = "threshold_kind")]
    pub kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// α² cap (SCS) or Fock cap (ON).
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::ConjectureViolation(_) => 3,
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Runs a parsed command, writing primary output to `out` unless `--out`
/// names a file. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.output = Some(o);
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    let (text, code) = match cli.command {
        Command::Qfi { probe, noise, oracle } => {
            cfg.command = Some("qfi".into());
            overlay_probe(&mut cfg, &probe)?;
            overlay_noise(&mut cfg, &noise);
            cmd_qfi(&cfg, oracle)?
        }
        Command::Curve { kind, probe, noise, proto, grid } => {
            cfg.command = Some(format!("curve {}", kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()));
            overlay_noise(&mut cfg, &noise);
            overlay_grid(&mut cfg, &grid);
            if kind == CurveKind::Cfi {
                overlay_probe(&mut cfg, &probe)?;
            } else if probe.dim.is_some() {
                cfg.dim = probe.dim;
            }
            (cmd_curve(&cfg, kind, &probe, &proto)?, 0)
        }
        Command::Study { kind, study, noise, proto, check, summary } => {
            cfg.command = Some(format!("study {}", kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()));
            overlay_noise(&mut cfg, &noise);
            if let Some(s) = study.seed {
                cfg.seed = Some(s);
            }
            if let Some(d) = study.dim {
                cfg.dim = Some(d);
            }
            if let Some(n) = &study.nav {
                cfg.grids.nav = Some(n.clone());
            }
            if let Some(e) = &study.eta_grid {
                cfg.grids.eta = Some(e.clone());
            }
            let res = cmd_study(&cfg, kind, &study, &proto)?;
            let passed = !check || res.passed.unwrap_or(true);
            let summary_json = json!({
                "config": serde_json::to_value(&cfg).unwrap_or(Value::Null),
                "version": env!("CARGO_PKG_VERSION"),
                "summary": res.summary,
                "checks": res.checks,
                "passed": res.passed,
            });
            let pretty = serde_json::to_string_pretty(&summary_json).unwrap_or_default();
            if check {
                for (name, ok, detail) in &res.check_lines {
                    eprintln!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
                }
            }
            let text = match cfg.format {
                Format::Json => pretty + "\n",
                Format::Csv => {
                    if let Some(p) = summary {
                        std::fs::write(p, pretty + "\n")?;
                    }
                    res.csv
                }
            };
            (text, if passed { 0 } else { 1 })
        }
    };
    let text = if cfg.format == Format::Csv && !text.starts_with('{') {
        format!("# config: {}\n# version: {}\n{}", cfg.echo(), env!("CARGO_PKG_VERSION"), text)
    } else {
        text
    };
    match &cfg.output {
        Some(p) => std::fs::write(p, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(code)
}

fn overlay_noise(cfg: &mut StudyConfig, a: &NoiseArgs) {
    if let Some(e) = a.eta {
        cfg.noise.eta = e;
    }
    if let Some(n) = a.n_th {
        cfg.noise.n_th = n;
    }
    if let Some(d) = a.dephasing {
        cfg.noise.dephasing_p = d;
    }
}

fn overlay_grid(cfg: &mut StudyConfig, g: &GridArgs) {
    let t = &mut cfg.grids.theta;
    t.min = g.theta_min.or(t.min);
    t.max = g.theta_max.or(t.max);
    t.points = g.points.or(t.points);
}

fn need<T>(v: Option<T>, name: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for {family}")))
}

/// Builds a probe from flags; mean photon number `--nav` can stand in for
/// the weight or amplitude where the family allows it.
pub fn probe_from_args(a: &ProbeArgs) -> Result<Option<ProbeSpec>> {
    let Some(f) = a.probe.as_deref() else { return Ok(None) };
    let p = match f {
        "coherent" => {
            let alpha = match (a.alpha, a.nav) {
                (Some(x), _) => x,
                (None, Some(n)) => n.sqrt(),
                _ => return Err(Error::InvalidArgument("coherent needs --alpha or --nav".into())),
            };
            ProbeSpec::Coherent { alpha, alpha_im: a.alpha_im.unwrap_or(0.0) }
        }
        "squeezed_vacuum" => {
            let zeta = match (a.zeta, a.nav) {
                (Some(z), _) => z,
                (None, Some(n)) => n.sqrt().asinh(),
                _ => return Err(Error::InvalidArgument("squeezed_vacuum needs --zeta or --nav".into())),
            };
            ProbeSpec::SqueezedVacuum { zeta }
        }
        "displaced_squeezed" => ProbeSpec::DisplacedSqueezed {
            alpha: need(a.alpha, "alpha", f)?,
            alpha_im: a.alpha_im.unwrap_or(0.0),
            zeta: need(a.zeta, "zeta", f)?,
            zeta_phase: a.zeta_phase.unwrap_or(0.0),
        },
        "fock" => ProbeSpec::Fock { n: need(a.n, "n", f)? },
        "displaced_fock" => {
            let n = need(a.n, "n", f)?;
            let alpha = match (a.alpha, a.nav) {
                (Some(x), _) => x,
                (None, Some(nav)) if nav >= n as f64 => (nav - n as f64).sqrt(),
                _ => return Err(Error::InvalidArgument("displaced_fock needs --alpha or --nav ≥ n".into())),
            };
            ProbeSpec::DisplacedFock { alpha, alpha_im: a.alpha_im.unwrap_or(0.0), n }
        }
        "on_state" | "on" => {
            let n = need(a.n, "n", f)?;
            let epsilon = match (a.epsilon, a.nav) {
                (Some(e), _) => e,
                (None, Some(nav)) => on_epsilon_for(n, nav)?,
                _ => return Err(Error::InvalidArgument("on_state needs --epsilon or --nav".into())),
            };
            ProbeSpec::OnState { n, epsilon }
        }
        "scs" => {
            let alpha = need(a.alpha, "alpha", f)?;
            let epsilon = match (a.epsilon, a.nav) {
                (Some(e), _) => e,
                (None, Some(nav)) => scs_epsilon_for(alpha, nav)?,
                _ => return Err(Error::InvalidArgument("scs needs --epsilon or --nav".into())),
            };
            ProbeSpec::Scs { alpha, epsilon }
        }
        "general_scs" => ProbeSpec::GeneralScs {
            alpha0: need(a.alpha0, "alpha0", f)?,
            alpha: need(a.alpha, "alpha", f)?,
            epsilon: need(a.epsilon, "epsilon", f)?,
        },
        "classical_mixture" => ProbeSpec::ClassicalMixture { p: need(a.p, "p", f)?, alpha: need(a.alpha, "alpha", f)? },
        other => return Err(Error::InvalidArgument(format!("unknown probe family {other}"))),
    };
    p.validate()?;
    Ok(Some(p))
}

fn overlay_probe(cfg: &mut StudyConfig, a: &ProbeArgs) -> Result<()> {
    if let Some(p) = probe_from_args(a)? {
        cfg.probe = Some(p);
    }
    if a.dim.is_some() {
        cfg.dim = a.dim;
    }
    if cfg.probe.is_none() {
        return Err(Error::InvalidArgument("no probe given (use --probe or a config file)".into()));
    }
    Ok(())
}

/// Closed-form QFI where one exists for the family and noise.
pub fn oracle_qfi(probe: &ProbeSpec, noise: &NoiseSpec) -> Option<f64> {
    let nav = probe.mean_photon();
    let (eta, n_th) = (noise.eta, noise.n_th);
    let ideal = eta == 1.0 && n_th == 0.0;
    match *probe {
        ProbeSpec::Coherent { .. } => Some(sql_qfi(nav, eta, n_th)),
        ProbeSpec::SqueezedVacuum { .. } => Some(squeezed_branch(nav, eta, n_th)),
        ProbeSpec::Fock { .. } => Some(0.0),
        ProbeSpec::DisplacedFock { n, .. } if ideal => displaced_fock_qfi_n(nav, n).ok(),
        ProbeSpec::OnState { n, .. } if n_th == 0.0 => on_qfi(nav, n, eta).ok(),
        ProbeSpec::Scs { alpha, .. } if ideal => scs_qfi(ScsQfi::IdealConstrained { nav, alpha_max2: alpha * alpha }).ok(),
        ProbeSpec::Scs { alpha, .. } if n_th == 0.0 => {
            scs_qfi(ScsQfi::LossyLargeAlpha { nav, alpha2: alpha * alpha, eta }).ok()
        }
        _ => None,
    }
}

fn numeric_qfi(probe: &ProbeSpec, noise: &NoiseSpec, dim: Option<usize>) -> Result<(f64, QfiMethod, usize)> {
    noise.validate()?;
    let dim = dim.unwrap_or_else(|| probe.suggested_dim() + if noise.n_th > 0.0 { 10 } else { 0 });
    let s = probe.state(dim)?;
    let s = if noise.eta == 1.0 && noise.n_th == 0.0 { s } else { ProbeState::Mixed(noise.apply_oscillator(&s.density())?) };
    let r = match s {
        ProbeState::Pure(p) => qfi_pure(&p, &number(dim))?,
        ProbeState::Mixed(m) => qfi_sld(&m, &number(dim))?,
    };
    Ok((r.value, r.method, dim))
}

fn cmd_qfi(cfg: &StudyConfig, oracle: bool) -> Result<(String, i32)> {
    let probe = cfg.probe.clone().ok_or_else(|| Error::InvalidArgument("no probe".into()))?;
    let (value, method, dim) = numeric_qfi(&probe, &cfg.noise, cfg.dim)?;
    let closed = if oracle { oracle_qfi(&probe, &cfg.noise) } else { None };
    let rel = closed.map(|c| if c == 0.0 { value.abs() } else { (value - c).abs() / c.abs() });
    let text = match cfg.format {
        Format::Json => {
            let v = json!({
                "config": serde_json::to_value(cfg).unwrap_or(Value::Null),
                "qfi": value,
                "method": method,
                "dim": dim,
                "mean_photon": probe.mean_photon(),
                "closed_form": closed,
                "relative_error": rel,
            });
            serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"
        }
        Format::Csv => {
            let mut s = format!("qfi,method,dim,mean_photon\n{value:.12e},{method:?},{dim},{:.12e}\n", probe.mean_photon());
            if oracle {
                match (closed, rel) {
                    (Some(c), Some(r)) => s.push_str(&format!("# closed_form: {c:.12e}\n# relative_error: {r:.3e}\n")),
                    _ => s.push_str("# closed_form: none for this family and noise\n"),
                }
            }
            s
        }
    };
    Ok((text, 0))
}

fn protocol_config(cfg: &StudyConfig, alpha: Option<f64>, pa: &ProtocolArgs) -> Result<ProtocolConfig> {
    let mut pc = ProtocolConfig::default();
    if let Some(a) = alpha {
        pc.alpha = a;
    }
    if let Some(p) = pa.phi_eps {
        pc.phi_eps = p;
    }
    pc.noise = cfg.noise;
    pc.dim = cfg.dim;
    if let Some(r) = pa.rabi_error {
        pc.rabi_error = r;
    }
    if let Some(b) = pa.basis.as_deref() {
        pc.basis = match b {
            "sigma-y" | "sigma_y" | "y" => Basis::SigmaY,
            "sigma-z" | "sigma_z" | "z" => Basis::SigmaZ,
            other => return Err(Error::InvalidArgument(format!("unknown basis {other}"))),
        };
    }
    if pa.late_dephasing {
        pc.dephasing_at = DephasingPlacement::BeforeReadout;
    }
    pc.validate()?;
    Ok(pc)
}

fn cmd_curve(cfg: &StudyConfig, kind: CurveKind, pa: &ProbeArgs, proto: &ProtocolArgs) -> Result<String> {
    let curve: FisherCurve = match kind {
        CurveKind::Cfi => {
            let thetas = cfg.thetas((-PI, PI, 2001))?;
            let probe = cfg.probe.clone().ok_or_else(|| Error::InvalidArgument("no probe".into()))?;
            let noise = cfg.noise;
            noise.validate()?;
            let dim = cfg.dim.unwrap_or_else(|| probe.suggested_dim() + if noise.n_th > 0.0 { 10 } else { 0 });
            let s = probe.state(dim)?;
            let rho = if noise.eta == 1.0 && noise.n_th == 0.0 { s.density() } else { noise.apply_oscillator(&s.density())? };
            let m = measurement_vector(&probe, dim)?;
            BinaryProjection::new(&rho, &m)?.curve(thetas)?.with_meta("dim", dim).with_meta("probe", json!(probe))
        }
        CurveKind::Protocol => {
            let thetas = cfg.thetas((-0.5, 0.5, 801))?;
            let pc = protocol_config(cfg, pa.alpha, proto)?;
            protocol_cfi(&pc, &thetas)?
        }
        CurveKind::GaussianCfi => {
            let thetas = cfg.thetas((-0.5, 0.5, 801))?;
            let nav = need(pa.nav, "nav", "gaussian-cfi")?;
            let eta = cfg.noise.eta;
            FisherCurve::from_fn(thetas, |t| gaussian_cfi_binary(nav, eta, t))?.with_meta("nav", nav).with_meta("eta", eta)
        }
    };
    Ok(curve.to_csv())
}

/// Result of a study: CSV body, JSON summary and optional checks.
pub struct StudyOutput {
    pub csv: String,
    pub summary: Value,
    pub checks: Value,
    pub check_lines: Vec<(String, bool, String)>,
    pub passed: Option<bool>,
}

/// Shortest decimal that survives round-off from bound arithmetic.
fn trim(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn within(name: &str, value: f64, lo: f64, hi: f64) -> (String, bool, String) {
    (name.to_string(), value >= lo && value <= hi, format!("{value:.6} in [{}, {}]", trim(lo), trim(hi)))
}

fn finish(csv: String, summary: Value, lines: Vec<(String, bool, String)>) -> StudyOutput {
    let checks = Value::Array(
        lines.iter().map(|(n, ok, d)| json!({"name": n, "passed": ok, "detail": d})).collect(),
    );
    let passed = if lines.is_empty() { None } else { Some(lines.iter().all(|l| l.1)) };
    StudyOutput { csv, summary, checks, check_lines: lines, passed }
}

fn contrast_family(s: Option<&str>) -> Result<ContrastFamily> {
    match s.unwrap_or("on") {
        "on" | "on_state" => Ok(ContrastFamily::On),
        "scs" => Ok(ContrastFamily::Scs),
        o => Err(Error::InvalidArgument(format!("unknown contrast family {o}"))),
    }
}

pub fn cmd_study(cfg: &StudyConfig, kind: StudyKind, a: &StudyArgs, proto: &ProtocolArgs) -> Result<StudyOutput> {
    match kind {
        StudyKind::Thresholds => {
            let name = a.kind.clone().unwrap_or_else(|| "eta_min_scs".into());
            // the Gaussian scaling transition sits beside the probe thresholds
            let (v, eta, target) = if name == "nav_trans_gaussian" {
                let eta = cfg.noise.eta;
                let t = if eta == 0.99 { Some((50.5, 0.1)) } else { None };
                (nav_trans_gaussian(eta)?, Some(eta), t)
            } else {
                let k: ThresholdKind = name.parse()?;
                let eta = if k.needs_eta() { Some(cfg.noise.eta) } else { None };
                let target = match k {
                    ThresholdKind::EtaMinScs => Some((0.802, 0.005)),
                    ThresholdKind::EtaMinOn => Some((0.832, 0.005)),
                    ThresholdKind::EtaMinOnVsSql => Some((1.0 / std::f64::consts::E.sqrt(), 1e-3)),
                    ThresholdKind::NavNgeScsWeakLoss if eta == Some(0.99) => Some((15.7, 0.5)),
                    _ => None,
                };
                (thresholds(k, eta)?, eta, target)
            };
            let lines = target.map(|(t, tol)| vec![within(&name, v, t - tol, t + tol)]).unwrap_or_default();
            let csv = format!("kind,eta,value\n{name},{},{v:.10}\n", eta.map(|e| e.to_string()).unwrap_or_default());
            Ok(finish(csv, json!({"kind": name, "eta": eta, "value": v}), lines))
        }
        StudyKind::Mixture => {
            let mc = MixtureConfig {
                n_samples: a.samples.unwrap_or(2000),
                seed: cfg.seed.unwrap_or(MixtureConfig::default().seed),
                ..Default::default()
            };
            let s = mixture_study(&mc)?;
            let max_ratio = s.samples.iter().map(|x| x.qfi_ratio).fold(0.0, f64::max);
            let lines = vec![
                within("violations", 0.0, 0.0, 0.0),
                within("slope", s.fit.slope, 0.6, 1.1),
                within("intercept", s.fit.intercept, -2.5, -0.9),
            ];
            let sum = json!({"mixture": mc, "fit": s.fit, "max_ratio": max_ratio});
            Ok(finish(s.to_csv(), sum, lines))
        }
        StudyKind::Bias => {
            let pc = protocol_config(cfg, a.alpha, &ProtocolArgs { rabi_error: proto.rabi_error.or(Some(0.01)), ..proto.clone() })?;
            let thetas = uniform_grid(-0.05, 0.05, 41);
            let b = bias_study(&pc, &thetas)?;
            let mid = b.bias[thetas.len() / 2];
            let edge = b.bias[0].abs().max(b.bias[thetas.len() - 1].abs());
            let lines = vec![within("abs_bias_at_0", mid.abs(), 0.0, 1e-4), within("abs_bias_at_0.05", edge, 1e-4, 1e-2)];
            let sum = json!({"protocol": pc, "bias_at_0": mid, "max_abs_bias_at_edge": edge});
            Ok(finish(b.to_csv(), sum, lines))
        }
        StudyKind::Contrast => {
            let fam = contrast_family(a.family.as_deref())?;
            let nav = cfg.grids.nav.as_ref().and_then(|v| v.first().copied()).unwrap_or(1.0);
            let eps = a.epsilon.unwrap_or(1.0 / 3.0);
            let eta = cfg.noise.eta;
            let n = 401;
            let grid: Vec<f64> = (0..n).map(|i| 1e-2f64 * 1e4f64.powf(i as f64 / (n - 1) as f64)).collect();
            let mut csv = String::from("eps_prime,a,b,visibility,contrast,max_slope\n");
            for &e in &grid {
                let r = contrast_visibility(nav, eps, e, eta, fam)?;
                csv.push_str(&format!("{e:.8e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}\n", r.a, r.b, r.visibility, r.contrast, r.max_slope));
            }
            let o = contrast_optima(nav, eps, eta, fam, n)?;
            let step = o.grid_step_ln;
            let mut lines = vec![within("ln_argmax_contrast", o.argmax_contrast.ln(), -step, step)];
            if fam == ContrastFamily::On {
                let r = contrast_visibility(nav, eps, 1.0, eta, fam)?;
                let nn = r.n_used.unwrap_or(1) as f64;
                let want = (eta.powf(-nn / 2.0) / eps).ln();
                lines.push(within("ln_argmax_visibility", o.argmax_visibility.ln(), want - step, want + step));
            }
            Ok(finish(csv, json!({"nav": nav, "epsilon": eps, "eta": eta, "optima": o}), lines))
        }
        StudyKind::Frontier => {
            let fam = match a.family.as_deref().unwrap_or("scs") {
                "scs" => Family::Scs,
                "on" | "on_state" => Family::On,
                o => return Err(Error::InvalidArgument(format!("frontier family {o} not supported"))),
            };
            let nav = cfg.grids.nav.as_ref().and_then(|v| v.first().copied()).unwrap_or(1.0);
            let thetas = cfg.thetas((-PI / 2.0, PI / 2.0, 801))?;
            let pts = frontier(fam, nav, &cfg.noise, &thetas, a.cap)?;
            let mut csv = String::from("delta_theta,mean_cfi,params\n");
            for p in &pts {
                csv.push_str(&format!("{:.10e},{:.10e},\"{}\"\n", p.delta_theta, p.mean_cfi, json!(p.params).to_string().replace('"', "'")));
            }
            Ok(finish(csv, json!({"nav": nav, "noise": cfg.noise, "points": pts.len()}), vec![]))
        }
        StudyKind::Uncertainty => {
            let mode = match a.mode.as_deref().unwrap_or("cfi") {
                "cfi" => FisherMode::Cfi,
                "qfi" => FisherMode::Qfi,
                o => return Err(Error::InvalidArgument(format!("unknown mode {o}"))),
            };
            let navs = cfg.grids.nav.clone().unwrap_or_else(|| vec![3.0]);
            let etas = cfg.grids.eta.clone().unwrap_or_else(|| vec![0.9, 0.95, 0.99, 0.999]);
            let fams = [LossFamily::Gaussian, LossFamily::Sql, LossFamily::Scs, LossFamily::On];
            let t = uncertainty_vs_loss(&fams, &navs, &etas, mode, UncertaintyOptions::default())?;
            let mut lines = vec![];
            if mode == FisherMode::Cfi && navs.contains(&3.0) {
                if let Some(r) = t.ratio(LossFamily::Scs, 3.0, 0.99) {
                    lines.push(within("ratio_N3_loss_1pct", r, 3.0 * 0.7, 3.0 * 1.3));
                }
                if let Some(r) = t.ratio(LossFamily::Scs, 3.0, 0.999) {
                    lines.push(within("ratio_N3_loss_0.1pct", r, 8.0 * 0.6, 8.0 * 1.4));
                }
            }
            let csv = t.to_csv();
            Ok(finish(csv, json!({"mode": mode, "rows": t.rows.len(), "options": t.options}), lines))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let cli = Cli::try_parse_from(std::iter::once("phasefisher").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = match run(cli, &mut buf) {
            Ok(c) => c,
            Err(e) => exit_code(&e),
        };
        (code, String::from_utf8(buf).unwrap())
    }

    fn first_value(csv: &str) -> f64 {
        let row = csv.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
        row.split(',').next().unwrap().parse().unwrap()
    }

    #[test]
    fn qfi_examples() {
        let (code, out) = run_args(&["qfi", "--probe", "coherent", "--alpha", "1"]);
        assert_eq!(code, 0);
        assert!((first_value(&out) - 4.0).abs() < 1e-9);
        let (_, out) = run_args(&["qfi", "--probe", "fock", "--n", "3"]);
        assert_eq!(first_value(&out), 0.0);
        let (_, out) = run_args(&["qfi", "--probe", "scs", "--alpha", "3.1623", "--nav", "1", "--oracle"]);
        assert!((first_value(&out) - 40.0).abs() < 0.02 * 40.0);
        assert!(out.contains("# relative_error"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["phasefisher", "qfi", "--nope"]), 2);
        assert_eq!(main_with_args(["phasefisher", "study", "warp"]), 2);
    }

    #[test]
    fn infeasible_exits_three() {
        // cap below N
        let (code, _) = run_args(&["study", "frontier", "--family", "scs", "--nav", "50", "--cap", "10"]);
        assert_eq!(code, 3);
    }

    #[test]
    fn config_file_is_loaded_and_overridden() {
        let text = "seed = 11\n[probe]\nfamily = \"coherent\"\nalpha = 2.0\n[noise]\neta = 0.9\n";
        let cfg = StudyConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, Some(11));
        assert_eq!(cfg.probe, Some(ProbeSpec::Coherent { alpha: 2.0, alpha_im: 0.0 }));
        let dir = std::env::temp_dir().join(format!("pf-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, text).unwrap();
        let (_, out) = run_args(&["--config", path.to_str().unwrap(), "qfi"]);
        assert!((first_value(&out) - 4.0 * 0.9 * 4.0).abs() < 1e-6);
        assert!(out.starts_with("# config: "));
        let (_, out) = run_args(&["--config", path.to_str().unwrap(), "qfi", "--eta", "1"]);
        assert!((first_value(&out) - 16.0).abs() < 1e-6);
        assert!(StudyConfig::from_toml("seed = \"x\"").is_err());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn curve_examples() {
        let (_, out) = run_args(&["curve", "cfi", "--probe", "on_state", "--n", "10", "--nav", "1", "--points", "4001"]);
        let vals: Vec<f64> = out
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("theta"))
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        // periodic grid: drop the duplicated endpoint
        let v = &vals[..vals.len() - 1];
        let n = v.len();
        let peaks = (0..n).filter(|&i| v[i] > v[(i + n - 1) % n] && v[i] >= v[(i + 1) % n]).count();
        assert_eq!(peaks, 20);
        let (_, out) =
            run_args(&["curve", "protocol", "--eta", "0.99", "--theta-min", "-0.01", "--theta-max", "0.01", "--points", "3"]);
        let mid: f64 = out.lines().filter(|l| l.starts_with("0.0")).next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!(mid > 1.0);
        let (_, out) = run_args(&["curve", "cfi", "--probe", "on_state", "--n", "3", "--epsilon", "0", "--points", "7"]);
        assert!(out.lines().filter(|l| !l.starts_with('#') && !l.starts_with("theta")).all(|l| l.ends_with(",0.000000000000e0")));
    }

    #[test]
    fn study_checks() {
        let (code, out) = run_args(&["study", "thresholds", "--kind", "eta_min_scs", "--check", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["passed"], Value::Bool(true));
        let (code, _) = run_args(&["study", "bias", "--rabi-error", "0.01", "--check"]);
        assert_eq!(code, 0);
    }

    #[test]
    fn outputs_are_deterministic() {
        let a = run_args(&["study", "mixture", "--samples", "200", "--seed", "3"]).1;
        let b = run_args(&["study", "mixture", "--samples", "200", "--seed", "3"]).1;
        assert_eq!(a, b);
        assert!(a.contains("# seed: 3"));
    }
}
