//! Transfer curves along the lightcone: a lossless encoding, a lossy one and a generic gate.

use brickwork::channel::build_phi;
use brickwork::gates::{haar_gate, local_unitary, lossless_gate_from_params};
use brickwork::lightcone::{eta_curves, Encoding, QfiOptions, StateFamily};
use brickwork::linalg::RngStream;

fn main() -> brickwork::Result<()> {
    let p = [0.4, 0.3, -0.2, 0.1, 0.5, -0.6];
    let g = lossless_gate_from_params(&p)?;
    let w = local_unitary(2, &p[3..6])?;
    let s = build_phi(&g, 1)?;
    let opts = QfiOptions::default();
    let fams = [
        ("peripheral7", StateFamily::peripheral7(&w, 0.3)?),
        ("lossy7", StateFamily::lossy7(&w, p[1] + p[2], 0.3)?),
    ];
    for (name, fam) in &fams {
        let c = eta_curves(Encoding::Family(fam), &s, 40, opts)?;
        println!(
            "{name}: eta_F at t = 0, 10, 20, 40: {:.3e} {:.3e} {:.3e} {:.3e}",
            c.eta[0], c.eta[10], c.eta[20], c.eta[40]
        );
    }
    let h = haar_gate(2, &mut RngStream::new(3, 0))?;
    for m in 1..=2 {
        let s = build_phi(&h, m)?;
        let fam = StateFamily::phase_plus(m, 0.3)?;
        let c = eta_curves(Encoding::Family(&fam), &s, 30, opts)?;
        let last = c.eta.len() - 1;
        println!(
            "haar M={m}: eta_F(t={}) = {:.3e}, bound |z_max|^k = {:.3e}",
            c.steps[last], c.eta[last], c.bound[last]
        );
    }
    Ok(())
}
