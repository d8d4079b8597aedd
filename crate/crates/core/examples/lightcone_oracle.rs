//! Compare the lightcone pipeline against brute-force evolution of the full chain.

use brickwork::gates::haar_gate;
use brickwork::lightcone::{brute_force_reduced_state, lightcone_reduced_state, DensityMatrix};
use brickwork::linalg::{max_abs_diff, RngStream};

fn main() -> brickwork::Result<()> {
    let mut rng = RngStream::new(11, 0);
    for (n, m) in [(2, 1), (4, 1), (4, 2), (6, 3), (8, 2)] {
        let g = haar_gate(2, &mut rng)?;
        let rho = DensityMatrix::pure(2, m, &{
            let mut v = vec![brickwork::linalg::ZERO; 1 << m];
            v[0] = brickwork::linalg::ONE;
            v
        })?;
        let brute = brute_force_reduced_state(&g, n, m, &rho)?;
        let cone = lightcone_reduced_state(&g, n, m, &rho)?;
        println!(
            "N={n} M={m}: max |Δρ| = {:.2e}",
            max_abs_diff(brute.matrix(), cone.matrix())
        );
    }
    Ok(())
}
