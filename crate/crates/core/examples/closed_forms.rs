//! Analytic benchmarks: Gaussian bound, displaced Fock, ON and SCS QFI,
//! loss thresholds and CFI asymptotics.

use phasefisher::closedform::*;

fn main() -> phasefisher::Result<()> {
    println!("N   8N²+8N   SQL   displaced-Fock   ON(n=3N+2)   SCS(α²=3N+1)");
    for n in [1.0, 2.0, 3.0, 5.0] {
        println!(
            "{n:<3} {:<8} {:<5} {:<16.4} {:<12.4} {:.4}",
            gaussian_ideal(n),
            sql_qfi(n, 1.0, 0.0),
            displaced_fock_qfi(n),
            on_qfi(n, (3.0 * n) as usize + 2, 1.0)?,
            scs_qfi(ScsQfi::IdealConstrained { nav: n, alpha_max2: 3.0 * n + 1.0 })?
        );
    }

    println!("\nlossy optima at N = 3");
    for eta in [0.9, 0.99, 0.999] {
        let gb = gaussian_bound(3.0, eta, 0.0)?;
        println!(
            "η={eta}: Gaussian {:.3} ({:?}), ON {:.3} (n={}), SCS {:.3} at α²={:.2}",
            gb.value,
            gb.branch,
            on_qfi_opt(3.0, eta)?,
            on_n_opt(3.0, eta)?,
            scs_qfi(ScsQfi::LossyMax { nav: 3.0, eta })?,
            scs_qfi(ScsQfi::AlphaOpt { nav: 3.0, eta })?
        );
    }

    println!("\nthresholds");
    for k in THRESHOLD_KINDS {
        let kind: ThresholdKind = k.parse()?;
        let eta = kind.needs_eta().then_some(0.99);
        println!("  {k:<24} {:.5}", thresholds(kind, eta)?);
    }
    println!("  nav_trans_gaussian(0.99) {:.5}", nav_trans_gaussian(0.99)?);

    let asym = ScsCfiAsymptotic { nav: 1.0, alpha2: 64.0, eta: 0.99 };
    println!(
        "\nSCS CFI asymptotic α²=64, η=0.99: peak {:.3}, first zero {:.5}, half height {:.5}",
        asym.peak(),
        asym.first_zero()?,
        asym.half_height()?
    );
    let (n, g) = gaussian_cfi_binary_max(3.0, 0.99)?;
    println!("binary Gaussian CFI max at N=3, η=0.99: {g:.3} (θ = {n:.4})");
    Ok(())
}
