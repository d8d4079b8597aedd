//! Build one gate of each family and print its operator entanglement.

use std::f64::consts::FRAC_PI_4;

use brickwork::gates::{
    dual_unitarity_residual, haar_gate, kak_gate_from_params, lossless_gate_from_params, max_linear_entropy,
    operator_schmidt, qutrit_gate_from_params, swap_gate,
};
use brickwork::linalg::RngStream;

fn main() -> brickwork::Result<()> {
    let mut rng = RngStream::new(1, 0);
    let gates = [
        ("swap d=2", swap_gate(2)?),
        (
            "kak J=(π/4, π/4, 0.3)",
            kak_gate_from_params(&[FRAC_PI_4, FRAC_PI_4, 0.3])?,
        ),
        ("kak J=(0.2, 0.1, 0)", kak_gate_from_params(&[0.2, 0.1, 0.0])?),
        (
            "lossless7",
            lossless_gate_from_params(&[0.4, 0.3, -0.2, 0.1, 0.5, -0.6])?,
        ),
        (
            "qutrit24 couplings only",
            qutrit_gate_from_params(&[0.3, -0.1, 0.5, 0.2, 0.0, 0.4, -0.3, 0.1])?,
        ),
        ("haar d=3", haar_gate(3, &mut rng)?),
    ];
    println!(
        "{:<26} {:>4} {:>10} {:>10} {:>12}",
        "gate", "d", "E", "E_max", "dual resid"
    );
    for (name, g) in &gates {
        let d = g.local_dim();
        let e = operator_schmidt(g)?.linear_entropy;
        println!(
            "{name:<26} {d:>4} {e:>10.6} {:>10.6} {:>12.3e}",
            max_linear_entropy(d),
            dual_unitarity_residual(g)
        );
    }
    Ok(())
}
