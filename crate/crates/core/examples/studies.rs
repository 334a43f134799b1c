//! Study-level scans: probe optimisation, the NGE frontier, uncertainty
//! versus loss, the Gaussian-mixture study and contrast trade-offs.

use phasefisher::analysis::*;
use phasefisher::channels::NoiseSpec;
use phasefisher::fisher::default_grid;
use phasefisher::probes::ProbeSpec;

fn main() -> phasefisher::Result<()> {
    let opt = optimize_probe(&OptimizeRequest {
        family: Family::Scs,
        constraint: Constraint::FixedN,
        value: 1.0,
        noise: NoiseSpec::loss(0.9),
        objective: Objective::Qfi,
        cap: Some(20.0),
    })?;
    println!("lossy SCS optimum at N=1, η=0.9: {} = {:.3}, QFI {:.4}", opt.coordinate_name, opt.coordinate, opt.score);

    for eta in [1.0, 0.99, 0.97] {
        let f = frontier(Family::Scs, 1.0, &NoiseSpec::loss(eta), &default_grid(), None)?;
        let best = f.iter().map(|p| p.mean_cfi).fold(0.0, f64::max);
        println!("frontier η={eta}: {} points, best mean CFI {best:.2}", f.len());
    }

    let t = uncertainty_vs_loss(
        &[LossFamily::Gaussian, LossFamily::Scs],
        &[3.0],
        &[0.99, 0.999],
        FisherMode::Cfi,
        UncertaintyOptions::default(),
    )?;
    for eta in [0.99, 0.999] {
        println!("N=3, η={eta}: dθ_G/dθ_SCS = {:.3}", t.ratio(LossFamily::Scs, 3.0, eta).unwrap_or(f64::NAN));
    }

    let m = mixture_study(&MixtureConfig { n_samples: 2000, seed: 7, ..Default::default() })?;
    println!("mixture envelope: slope {:.3}, intercept {:.3} over {} bins", m.fit.slope, m.fit.intercept, m.fit.bins_used);

    let c = contrast_optima(1.0, 1.0 / 3.0, 0.9, ContrastFamily::On, 401)?;
    println!("ON contrast optima: argmax C at ε' = {:.3}, argmax V at ε' = {:.3}", c.argmax_contrast, c.argmax_visibility);

    let r = qfi_additivity_check(&ProbeSpec::Scs { alpha: 2.0, epsilon: 0.5 }, 22)?;
    println!("two-copy additivity ratio for SCS α=2, ε=0.5: {r:.6}");
    Ok(())
}
