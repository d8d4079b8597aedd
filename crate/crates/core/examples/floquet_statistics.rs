//! Quasienergy level statistics and eigenstate entanglement of a brickwork Floquet operator.

use brickwork::diagnostics::{eigenphase_statistics, floquet_spectrum, half_chain_entropy, CUE_GAP_RATIO_PILOT};
use brickwork::gates::haar_gate;
use brickwork::lightcone::LayerOrder;
use brickwork::linalg::RngStream;

fn main() -> brickwork::Result<()> {
    let g = haar_gate(2, &mut RngStream::new(4, 0))?;
    for n in [4, 6, 8] {
        let f = floquet_spectrum(&g, n, LayerOrder::EvenFirst)?;
        let stats = eigenphase_statistics(&f);
        let s = half_chain_entropy(&f)?;
        let mean_s = s.iter().sum::<f64>() / s.len() as f64;
        println!(
            "{} sites: {} levels, <r> = {:.4} (CUE {:.4}), mean half-chain entropy {:.4}",
            n + 1,
            stats.levels,
            stats.mean_gap_ratio,
            CUE_GAP_RATIO_PILOT,
            mean_s
        );
    }
    Ok(())
}
