//! Covariance-matrix engine cross-checked against the Fock-space engine.

use phasefisher::channels::thermal_loss_channel;
use phasefisher::closedform::squeezed_branch;
use phasefisher::fisher::qfi_sld;
use phasefisher::fockspace::{number, C64};
use phasefisher::gaussian::{cm_displaced_squeezed, cm_fidelity, cm_loss, cm_qfi, cm_rotate};
use phasefisher::probes::displaced_squeezed;

fn main() -> phasefisher::Result<()> {
    let (alpha, zeta) = (C64::new(0.8, 0.3), 0.5);
    let g = cm_displaced_squeezed(alpha, zeta);
    println!("CM state: N = {:.6}, purity = {:.6}", g.mean_photon(), g.purity());
    for (eta, nth) in [(1.0, 0.0), (0.9, 0.0), (0.9, 0.1)] {
        let cm = cm_qfi(&g, eta, nth)?;
        let psi = displaced_squeezed(alpha, C64::new(zeta, 0.0), 60)?;
        let rho = thermal_loss_channel(&psi.density(), eta, nth)?;
        let fock = qfi_sld(&rho, &number(60))?.value;
        println!("η={eta}, n_th={nth}: CM QFI {cm:.6}, Fock QFI {fock:.6}");
    }
    let nav: f64 = 2.0;
    let sq = cm_displaced_squeezed(C64::new(0.0, 0.0), nav.sqrt().asinh());
    println!(
        "squeezed vacuum N=2, η=0.9: CM {:.6} vs closed form {:.6}",
        cm_qfi(&sq, 0.9, 0.0)?,
        squeezed_branch(nav, 0.9, 0.0)
    );
    let lossy = cm_loss(&sq, 0.9, 0.0)?;
    println!("fidelity of lossy state to its θ=0.01 rotation: {:.10}", cm_fidelity(&lossy, &cm_rotate(&lossy, 0.01))?);
    Ok(())
}
