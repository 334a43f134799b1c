//! Truncated Fock-space basics: ladder operators, gates, states, fidelity
//! and the qubit-oscillator tensor layout.

use phasefisher::fockspace::{
    annihilation, c, coherent_state, default_dim, fock_state, gate_unitary, number, qubit, tensor_state,
    trace_out_qubit, uhlmann_fidelity, Gate, C64,
};

fn main() -> phasefisher::Result<()> {
    let dim = default_dim(2.0);
    println!("default dim for |alpha| = 2: {dim}");

    let a = annihilation(dim);
    let comm = &a * a.adjoint() - a.adjoint() * &a;
    // [a, a†] = 1 except in the last diagonal slot
    println!("[a, a†] (0,0) = {:.3}, last = {:.3}", comm[(0, 0)].re, comm[(dim - 1, dim - 1)].re);

    let d = gate_unitary(Gate::Displace, c(1.5), dim)?;
    let vac = fock_state(0, dim)?;
    let displaced = vac.apply(&d.mat)?;
    let coh = coherent_state(c(1.5), dim)?;
    println!("|<D(1.5)0|1.5>|^2 = {:.12}", displaced.overlap(&coh)?.norm_sqr());
    println!("<n> = {:.6} (expected 2.25), tail mass {:.2e}", coh.mean_photon(), coh.tail_mass());

    let r = gate_unitary(Gate::Rotate, c(0.3), dim)?;
    let rotated = coh.apply(&r.mat)?;
    let target = coherent_state(C64::from_polar(1.5, 0.3), dim)?;
    println!("R(0.3)|1.5> vs |1.5 e^(0.3i)>: F = {:.12}", uhlmann_fidelity(&rotated.density(), &target.density())?);

    let joint = tensor_state(&qubit::g(), coh.amps())?;
    let reduced = trace_out_qubit(&(&joint * joint.adjoint()), dim);
    let n = number(dim);
    println!("oscillator <n> after tracing out the qubit: {:.6}", (reduced * n).trace().re);
    Ok(())
}
