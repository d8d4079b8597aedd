//! Coarse scan of the coupling plane at J_α = π/4 with locals optimised per point.

use brickwork::linalg::RngStream;
use brickwork::search::{conjecture_scan, scan_to_tsv, ScanOptions};

fn main() -> brickwork::Result<()> {
    let opts = ScanOptions {
        grid: 4,
        restarts_per_point: 2,
        evals_per_restart: 800,
        ..ScanOptions::default()
    };
    let r = conjecture_scan(2, &RngStream::new(8, 0), opts)?;
    print!("{}", scan_to_tsv(&r));
    Ok(())
}
