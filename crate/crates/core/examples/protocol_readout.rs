//! Two-gate qubit-oscillator preparation and readout: diagnostics, σ_y vs
//! σ_z readout under loss, and calibration bias.

use phasefisher::channels::NoiseSpec;
use phasefisher::fisher::uniform_grid;
use phasefisher::protocol::{bias_study, prepare, protocol_cfi, Basis, Protocol, ProtocolConfig};

fn main() -> phasefisher::Result<()> {
    let base = ProtocolConfig::new(4.0, 0.3);
    let (_, diag) = prepare(&base)?;
    println!(
        "α=4, ε=0.3: fidelity {:.4}, qubit in |g> {:.6}, residual entanglement {:.2e}, dim {}",
        diag.scs_fidelity, diag.qubit_ground_population, diag.residual_entanglement, diag.dim
    );
    println!("frames: {}", diag.frames.join("; "));

    let ideal = Protocol::build(base)?;
    println!("P(0) = {:.6}, CFI(0) = {:.3}, probe QFI = {:.3}", ideal.p_plus(0.0), ideal.cfi(0.0)?, ideal.probe_qfi()?);

    let lossy = base.with_noise(NoiseSpec::loss(0.99));
    for basis in [Basis::SigmaY, Basis::SigmaZ] {
        let p = Protocol::build(lossy.with_basis(basis))?;
        println!("1% loss, {basis:?}: CFI(1e-4) = {:.4}, CFI(0.05) = {:.4}", p.cfi(1e-4)?, p.cfi(0.05)?);
    }

    let thetas = uniform_grid(-0.05, 0.05, 5);
    let curve = protocol_cfi(&base, &thetas)?;
    println!("\nideal CFI curve:\n{}", curve.to_csv());
    let bias = bias_study(&base.with_rabi_error(0.01), &thetas)?;
    println!("bias with 1% Rabi error:\n{}", bias.to_csv());
    Ok(())
}
