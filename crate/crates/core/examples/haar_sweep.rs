//! Distribution of |z_max| over Haar-random two-qubit gates.

use brickwork::linalg::RngStream;
use brickwork::search::{haar_sweep, SWEEP_PERIPHERAL_EPS};

fn main() -> brickwork::Result<()> {
    let rng = RngStream::new(2024, 0);
    for m in 1..=2 {
        let r = haar_sweep(2, m, 200, SWEEP_PERIPHERAL_EPS, &rng)?;
        let max = r.z_max_moduli.iter().copied().fold(0.0, f64::max);
        println!(
            "M={m}: mean |z_max| = {:.4}, max = {:.6}, peripheral {}/{}",
            r.mean(),
            max,
            r.peripheral_count,
            r.samples
        );
    }
    Ok(())
}
