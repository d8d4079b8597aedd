//! Spectrum of the lightcone channel for a few gates and window sizes.

use brickwork::channel::{
    build_phi, channel_spectrum, spectrum_nesting_check, validate_channel, DEFAULT_PERIPHERAL_EPS,
};
use brickwork::gates::{haar_gate, kak_gate_from_params, lossless_gate_from_params};
use brickwork::linalg::RngStream;

fn main() -> brickwork::Result<()> {
    let mut rng = RngStream::new(7, 0);
    let gates = [
        ("kak (0.6, 0.3, 0.1)", kak_gate_from_params(&[0.6, 0.3, 0.1])?),
        (
            "lossless7",
            lossless_gate_from_params(&[0.4, 0.3, -0.2, 0.1, 0.5, -0.6])?,
        ),
        ("haar", haar_gate(2, &mut rng)?),
    ];
    for (name, g) in &gates {
        println!("{name}");
        for m in 1..=3 {
            let s = build_phi(g, m)?;
            let report = validate_channel(&s)?;
            let spec = channel_spectrum(&s, DEFAULT_PERIPHERAL_EPS)?;
            println!(
                "  M={m}: |z_max| = {:.10}  peripheral = {}  cond = {:.2e}  checks {}",
                spec.z_max().map_or(0.0, |z| z.norm()),
                spec.peripheral_indices().len(),
                spec.diagonalizability_condition(),
                if report.passed() { "ok" } else { "FAILED" }
            );
        }
        let nest = spectrum_nesting_check(g, 1)?;
        println!("  M=1 eigenvalues reappear at M=2 within {:.1e}", nest.max_distance);
    }
    Ok(())
}
