//! Three QFI estimators on the same states: pure-state variance, SLD
//! spectral form and fidelity finite differences.

use phasefisher::channels::loss_channel;
use phasefisher::fisher::{qfi_fidelity, qfi_pure, qfi_sld, DEFAULT_DTHETA};
use phasefisher::fockspace::number;
use phasefisher::probes::ProbeSpec;

fn main() -> phasefisher::Result<()> {
    for p in [
        ProbeSpec::Coherent { alpha: 1.0, alpha_im: 0.0 },
        ProbeSpec::SqueezedVacuum { zeta: 1f64.asinh() },
        ProbeSpec::OnState { n: 5, epsilon: 0.5 },
        ProbeSpec::Scs { alpha: 2.0, epsilon: 0.6 },
    ] {
        let s = p.build()?;
        let dim = s.dim();
        let n = number(dim);
        let pure = qfi_pure(s.as_pure().expect("pure probe"), &n)?.value;
        let rho = s.density();
        let sld = qfi_sld(&rho, &n)?.value;
        let fid = qfi_fidelity(&rho, DEFAULT_DTHETA)?.value;
        let lossy = loss_channel(&rho, 0.9)?;
        let sld_l = qfi_sld(&lossy, &n)?.value;
        let fid_l = qfi_fidelity(&lossy, DEFAULT_DTHETA)?;
        println!("{:<16} pure {pure:9.5}  sld {sld:9.5}  fid {fid:9.5} | η=0.9: sld {sld_l:9.5}  fid {:9.5}", p.family(), fid_l.value);
    }
    Ok(())
}
