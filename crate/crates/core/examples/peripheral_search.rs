//! Multi-start search for gates with a peripheral lightcone eigenvalue.

use brickwork::linalg::RngStream;
use brickwork::search::{optimize_peripheral, SearchFamily, SearchOptions};

fn main() -> brickwork::Result<()> {
    let opts = SearchOptions {
        restarts: 12,
        ..SearchOptions::default()
    };
    let out = optimize_peripheral(SearchFamily::Kak, 2, &RngStream::new(5, 0), opts)?;
    println!("{} hits from {} restarts", out.hits.len(), out.restart_best.len());
    for h in out.hits.iter().take(8) {
        let p = h.pattern.as_ref().expect("kak hits carry a pattern");
        println!(
            "  1-|z| = {:.1e}  E = {:.6}  dual = {:<5}  J = [{:+.4}, {:+.4}, {:+.4}]  pattern = {}",
            h.one_minus_z_max,
            h.linear_entropy,
            h.dual_unitary,
            p.couplings[0],
            p.couplings[1],
            p.couplings[2],
            p.matches
        );
    }
    Ok(())
}
