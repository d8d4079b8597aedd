use serde::{Deserialize, Serialize};

use super::iterate_channel;
use super::state::{tensor_states, DensityMatrix};
use crate::channel::{build_phi, lambda_in_unitary, lambda_out_unitary};
use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::linalg::{adjoint, apply_two_site, partial_trace_first, Side};

/// Default size cap for full-chain simulation, in qubit-equivalents `(N+1)·log₂d`.
pub const DEFAULT_MAX_CHAIN_QUBITS: f64 = 12.0;

/// Which brickwork layer acts first within a Floquet period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerOrder {
    /// Gates on `(0,1), (2,3), …` first; the last site idles.
    EvenFirst,
    /// Gates on `(1,2), (3,4), …` first; site 0 idles.
    OddFirst,
}

impl LayerOrder {
    /// The ordering that places an `M`-site window on the lightcone: even-first for odd `M`.
    pub fn for_window(sites: usize) -> Self {
        if sites % 2 == 1 {
            LayerOrder::EvenFirst
        } else {
            LayerOrder::OddFirst
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            LayerOrder::EvenFirst => LayerOrder::OddFirst,
            LayerOrder::OddFirst => LayerOrder::EvenFirst,
        }
    }
}

pub(crate) fn check_chain(local_dim: usize, chain_len: usize, max_qubits: f64) -> Result<()> {
    let qubits = chain_len as f64 * (local_dim as f64).log2();
    if qubits > max_qubits + 1e-9 {
        return Err(Error::SizeLimit {
            what: "chain size in qubit-equivalents",
            requested: qubits.ceil() as usize,
            cap: max_qubits as usize,
        });
    }
    Ok(())
}

/// First sites of the gates in one brickwork layer of an `n_sites` chain.
pub(crate) fn layer_sites(n_sites: usize, even: bool) -> impl Iterator<Item = usize> {
    let start = if even { 0 } else { 1 };
    (start..n_sites.saturating_sub(1)).step_by(2)
}

/// Reduced state of the last `M` sites of an `N + 1` site chain after `N` brickwork layers.
///
/// The chain starts in `ρ_in ⊗ (I/d)^{⊗(N−M+1)}` with `ρ_in` on the first `M` sites.
pub fn brute_force_reduced_state(gate: &Gate, n: usize, sites: usize, rho_in: &DensityMatrix) -> Result<DensityMatrix> {
    brute_force_reduced_state_with(
        gate,
        n,
        sites,
        rho_in,
        LayerOrder::for_window(sites),
        DEFAULT_MAX_CHAIN_QUBITS,
    )
}

pub fn brute_force_reduced_state_with(
    gate: &Gate,
    n: usize,
    sites: usize,
    rho_in: &DensityMatrix,
    order: LayerOrder,
    max_qubits: f64,
) -> Result<DensityMatrix> {
    let d = gate.local_dim();
    check_window(gate, n, sites, rho_in)?;
    check_chain(d, n + 1, max_qubits)?;
    let n_sites = n + 1;
    let env = DensityMatrix::maximally_mixed(d, n_sites - sites);
    let mut rho = tensor_states(rho_in, &env)?.into_matrix();
    let u = gate.matrix().view();
    let mut even = order == LayerOrder::EvenFirst;
    for _ in 0..n {
        for first in layer_sites(n_sites, even) {
            apply_two_site(&mut rho, u, first, n_sites, d, Side::Left);
            apply_two_site(&mut rho, u, first, n_sites, d, Side::Right);
        }
        even = !even;
    }
    let reduced = partial_trace_first(&rho, d.pow((n_sites - sites) as u32))?;
    DensityMatrix::new(d, sites, reduced)
}

fn check_window(gate: &Gate, n: usize, sites: usize, rho_in: &DensityMatrix) -> Result<()> {
    if !n.is_multiple_of(2) {
        return Err(Error::validation("N", format!("chain parameter N = {n} must be even")));
    }
    if sites == 0 || sites > n + 1 {
        return Err(Error::validation(
            "M",
            format!("window of {sites} sites does not fit a chain of {}", n + 1),
        ));
    }
    if rho_in.sites() != sites || rho_in.local_dim() != gate.local_dim() {
        return Err(Error::Shape(format!(
            "input state on {} sites of dimension {}, expected {sites} of dimension {}",
            rho_in.sites(),
            rho_in.local_dim(),
            gate.local_dim()
        )));
    }
    Ok(())
}

/// `Λ_M^{out} ∘ Φ_M^{N−M+1} ∘ Λ_M^{in}` applied to `ρ_in`.
pub fn lightcone_reduced_state(gate: &Gate, n: usize, sites: usize, rho_in: &DensityMatrix) -> Result<DensityMatrix> {
    check_window(gate, n, sites, rho_in)?;
    let d = gate.local_dim();
    let conj = |u: &crate::linalg::ComplexMatrix, x: &crate::linalg::ComplexMatrix| u.dot(x).dot(&adjoint(u));
    let lin = lambda_in_unitary(gate, sites);
    let start = DensityMatrix::new(d, sites, conj(&lin, rho_in.matrix()))?;
    let phi = build_phi(gate, sites)?;
    let evolved = iterate_channel(&start, &phi, n + 1 - sites)?;
    let lout = lambda_out_unitary(gate, sites);
    DensityMatrix::new(d, sites, conj(&lout, evolved.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{explicit_gate, haar_gate, swap_gate};
    use crate::linalg::{identity, max_abs_diff, sample_cue, RngStream, C64};
    use ndarray::Array2;

    fn random_state(d: usize, m: usize, rng: &mut RngStream) -> DensityMatrix {
        let dim = d.pow(m as u32);
        let u = sample_cue(dim, rng);
        let p: Vec<f64> = (0..dim).map(|k| 1.0 + k as f64).collect();
        let total: f64 = p.iter().sum();
        let diag = Array2::from_shape_fn((dim, dim), |(i, j)| {
            if i == j {
                C64::new(p[i] / total, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        DensityMatrix::new(d, m, u.dot(&diag).dot(&adjoint(&u))).unwrap()
    }

    #[test]
    fn swap_chain_moves_state_to_the_end() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let rho = DensityMatrix::pure(2, 1, &psi).unwrap();
        let out = brute_force_reduced_state(&swap_gate(2).unwrap(), 4, 1, &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-14);
    }

    #[test]
    fn identity_gate_leaves_environment_at_the_end() {
        let rho = DensityMatrix::pure(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let out = brute_force_reduced_state(&explicit_gate(2, identity(4)).unwrap(), 2, 1, &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), &identity(2).mapv(|z| z * 0.5)) < 1e-15);
    }

    #[test]
    fn lightcone_matches_full_chain() {
        let mut rng = RngStream::new(41, 0);
        for (n, m) in [
            (2, 1),
            (2, 2),
            (2, 3),
            (4, 1),
            (4, 2),
            (4, 3),
            (6, 3),
            (6, 4),
            (6, 5),
            (8, 2),
            (8, 5),
            (10, 5),
        ] {
            let g = haar_gate(2, &mut rng).unwrap();
            let rho = random_state(2, m, &mut rng);
            let brute = brute_force_reduced_state(&g, n, m, &rho).unwrap();
            let cone = lightcone_reduced_state(&g, n, m, &rho).unwrap();
            let err = max_abs_diff(brute.matrix(), cone.matrix());
            assert!(err <= 1e-10, "N={n} M={m}: {err:e}");
        }
    }

    #[test]
    fn qutrit_lightcone_matches_full_chain() {
        let mut rng = RngStream::new(42, 0);
        let g = haar_gate(3, &mut rng).unwrap();
        for m in [1, 2] {
            let rho = random_state(3, m, &mut rng);
            let brute = brute_force_reduced_state(&g, 4, m, &rho).unwrap();
            let cone = lightcone_reduced_state(&g, 4, m, &rho).unwrap();
            assert!(max_abs_diff(brute.matrix(), cone.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn wrong_parity_breaks_equivalence() {
        let mut rng = RngStream::new(43, 0);
        let g = haar_gate(2, &mut rng).unwrap();
        let rho = random_state(2, 1, &mut rng);
        let order = LayerOrder::for_window(1).flipped();
        let brute = brute_force_reduced_state_with(&g, 4, 1, &rho, order, 12.0).unwrap();
        let cone = lightcone_reduced_state(&g, 4, 1, &rho).unwrap();
        assert!(max_abs_diff(brute.matrix(), cone.matrix()) > 1e-6);
    }

    #[test]
    fn argument_errors() {
        let g = swap_gate(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(2, 1);
        assert!(matches!(
            brute_force_reduced_state(&g, 3, 1, &rho),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(
            brute_force_reduced_state(&g, 12, 1, &rho),
            Err(Error::SizeLimit { .. })
        ));
        assert!(brute_force_reduced_state(&g, 2, 2, &rho).is_err());
    }
}
