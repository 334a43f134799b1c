//! Probe families and the noise channels acting on them.

use phasefisher::channels::{loss_channel, thermal_loss_channel, NoiseSpec};
use phasefisher::probes::ProbeSpec;

fn main() -> phasefisher::Result<()> {
    let probes = [
        ProbeSpec::Coherent { alpha: 1.0, alpha_im: 0.0 },
        ProbeSpec::SqueezedVacuum { zeta: 1f64.asinh() },
        ProbeSpec::Fock { n: 3 },
        ProbeSpec::DisplacedFock { alpha: 1.0, alpha_im: 0.0, n: 1 },
        ProbeSpec::OnState { n: 4, epsilon: 0.5 },
        ProbeSpec::Scs { alpha: 2.0, epsilon: 0.6 },
        ProbeSpec::GeneralScs { alpha0: 0.5, alpha: 2.0, epsilon: 0.6 },
        ProbeSpec::ClassicalMixture { p: 0.5, alpha: 2.0 },
    ];
    println!("{:<20} {:>5} {:>10} {:>10} {:>12} {:>12}", "family", "dim", "N", "N (num)", "N after η=.9", "purity .9/.1");
    for p in &probes {
        // thermal noise populates levels above the probe's own support
        let s = p.state(p.suggested_dim() + 10)?;
        let rho = s.density();
        let lossy = loss_channel(&rho, 0.9)?;
        let thermal = thermal_loss_channel(&rho, 0.9, 0.1)?;
        println!(
            "{:<20} {:>5} {:>10.5} {:>10.5} {:>12.5} {:>12.5}",
            p.family(),
            s.dim(),
            p.mean_photon(),
            rho.mean_photon(),
            lossy.mean_photon(),
            thermal.purity()
        );
    }
    // thermal loss: N → ηN + (1 − η) n_th
    let spec = ProbeSpec::Scs { alpha: 2.0, epsilon: 0.6 };
    let s = spec.state(spec.suggested_dim() + 10)?;
    let out = NoiseSpec::thermal(0.8, 0.2).apply_oscillator(&s.density())?;
    println!("SCS through η=0.8, n_th=0.2: N = {:.6}, predicted {:.6}", out.mean_photon(), 0.8 * s.mean_photon() + 0.2 * 0.2);
    Ok(())
}
