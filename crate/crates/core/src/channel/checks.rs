use ndarray::Array2;
use serde::Serialize;

use super::{build_phi, channel_spectrum, nontrivial_eigenvalues, Superoperator, DEFAULT_PERIPHERAL_EPS};
use crate::error::Result;
use crate::gates::Gate;
use crate::linalg::{eigvalsh, identity, kron, max_abs_diff, C64, ZERO};

/// Tolerance on unitality and trace preservation.
pub const UNITALITY_TOL: f64 = 1e-10;

/// Most negative Choi eigenvalue accepted as completely positive.
pub const CHOI_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct ChannelReport {
    pub unitality_residual: f64,
    pub trace_preservation_residual: f64,
    pub imag_residual: f64,
    pub choi_min_eigenvalue: f64,
    pub failures: Vec<String>,
}

impl ChannelReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Unitality, trace preservation and complete positivity of a superoperator.
pub fn validate_channel(s: &Superoperator) -> Result<ChannelReport> {
    let m = s.matrix();
    let n = m.nrows();
    let e0 = |i: usize| if i == 0 { 1.0 } else { 0.0 };
    let unitality = (0..n).map(|i| (m[[i, 0]] - e0(i)).abs()).fold(0.0, f64::max);
    let trace_pres = (0..n).map(|j| (m[[0, j]] - e0(j)).abs()).fold(0.0, f64::max);

    // Choi matrix C[(i,a),(j,b)] = Φ(|i⟩⟨j|)[a,b]
    let basis = s.basis();
    let dim = basis.operator_dim();
    let mut choi = Array2::<C64>::zeros((dim * dim, dim * dim));
    let mut unit = Array2::<C64>::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            unit[[i, j]] = C64::new(1.0, 0.0);
            let out = s.apply(&unit)?;
            unit[[i, j]] = ZERO;
            for a in 0..dim {
                for b in 0..dim {
                    choi[[i * dim + a, j * dim + b]] = out[[a, b]];
                }
            }
        }
    }
    let choi_min = eigvalsh(&choi)?.first().copied().unwrap_or(0.0);

    let mut failures = Vec::new();
    if unitality > UNITALITY_TOL {
        failures.push(format!("not unital (residual {unitality:.2e})"));
    }
    if trace_pres > UNITALITY_TOL {
        failures.push(format!("not trace preserving (residual {trace_pres:.2e})"));
    }
    if choi_min < -CHOI_TOL {
        failures.push(format!("not completely positive (Choi eigenvalue {choi_min:.3e})"));
    }
    Ok(ChannelReport {
        unitality_residual: unitality,
        trace_preservation_residual: trace_pres,
        imag_residual: s.imag_residual(),
        choi_min_eigenvalue: choi_min,
        failures,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NestingReport {
    /// For each nontrivial eigenvalue of `Φ_M`, distance to the nearest eigenvalue of `Φ_{M+1}`.
    pub distances: Vec<f64>,
    pub max_distance: f64,
    /// `max_μ ‖Φ_{M+1}[Â_μ ⊗ I] − z_μ Â_μ ⊗ I‖_max`.
    pub eigenoperator_residual: f64,
}

impl NestingReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_distance <= tol && self.eigenoperator_residual <= tol
    }
}

const CLUSTER_RADIUS: f64 = 1e-6;

/// Means of groups of eigenvalues lying within `radius` of each other (single linkage).
pub fn cluster_means(vals: &[C64], radius: f64) -> Vec<C64> {
    let n = vals.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() <= radius {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, (C64, usize)> = Default::default();
    for (i, v) in vals.iter().enumerate() {
        let r = root(&mut label, i);
        let e = sums.entry(r).or_insert((ZERO, 0));
        e.0 += v;
        e.1 += 1;
    }
    sums.into_values().map(|(s, k)| s / k as f64).collect()
}

/// Compare the spectra of `Φ_M` and `Φ_{M+1}`, and check that `Â ⊗ I` is an eigenoperator
/// of the larger channel whenever `Â` is one of the smaller.
pub fn spectrum_nesting_check(gate: &Gate, sites: usize) -> Result<NestingReport> {
    let small = build_phi(gate, sites)?;
    let large = build_phi(gate, sites + 1)?;
    let spec = channel_spectrum(&small, DEFAULT_PERIPHERAL_EPS)?;
    let big_vals = nontrivial_eigenvalues(&large)?;
    // Inherited eigenvalues typically sit in Jordan blocks of Φ_{M+1}, where the computed
    // eigenvalues scatter by ~√ε_mach around the exact one; the cluster mean does not.
    let mut candidates = big_vals.clone();
    candidates.extend(cluster_means(&big_vals, CLUSTER_RADIUS));
    let id = identity(gate.local_dim());
    let mut distances = Vec::with_capacity(spec.len() - 1);
    let mut residual: f64 = 0.0;
    for i in 1..spec.len() {
        let z = spec.eigenvalues()[i];
        let dist = candidates.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
        distances.push(dist);
        let lifted = kron(&spec.eigenoperator(i)?, &id);
        let image = large.apply(&lifted)?;
        residual = residual.max(max_abs_diff(&image, &lifted.mapv(|x| x * z)));
    }
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(NestingReport {
        distances,
        max_distance,
        eigenoperator_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{haar_gate, lossless_gate_from_params, qutrit_gate_from_params, swap_gate};
    use crate::linalg::{HermitianBasis, RngStream};
    use rand::Rng;
    use std::sync::Arc;

    #[test]
    fn constructed_channels_are_cptp() {
        let mut rng = RngStream::new(31, 0);
        for (d, m) in [(2, 1), (2, 2), (2, 3), (3, 1)] {
            let phi = build_phi(&haar_gate(d, &mut rng).unwrap(), m).unwrap();
            let report = validate_channel(&phi).unwrap();
            assert!(report.passed(), "{:?}", report.failures);
            assert!(report.unitality_residual <= 1e-10);
        }
        let p: Vec<f64> = (0..24).map(|_| rng.random_range(-2.0..2.0)).collect();
        let phi = build_phi(&qutrit_gate_from_params(&p).unwrap(), 1).unwrap();
        assert!(validate_channel(&phi).unwrap().passed());
    }

    #[test]
    fn cluster_means_merge_only_close_values() {
        let vals = [C64::new(0.5, 1e-9), C64::new(0.5, -1e-9), C64::new(-0.2, 0.0)];
        let mut m = cluster_means(&vals, 1e-6);
        m.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(m.len(), 2);
        assert!((m[1] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(m[0], C64::new(-0.2, 0.0));
    }

    #[test]
    fn transpose_map_fails_complete_positivity() {
        let basis = Arc::new(HermitianBasis::new(2, 1).unwrap());
        let mut m = Array2::<f64>::eye(4);
        m[[2, 2]] = -1.0;
        let s = Superoperator::from_real(basis, m).unwrap();
        let report = validate_channel(&s).unwrap();
        assert!(!report.passed());
        assert!(report.choi_min_eigenvalue < -0.5);
        assert_eq!(report.unitality_residual, 0.0);
    }

    #[test]
    fn nesting_for_random_and_special_gates() {
        let mut rng = RngStream::new(32, 0);
        for _ in 0..5 {
            let r = spectrum_nesting_check(&haar_gate(2, &mut rng).unwrap(), 1).unwrap();
            assert!(r.passed(1e-8), "{r:?}");
        }
        let r = spectrum_nesting_check(&swap_gate(2).unwrap(), 2).unwrap();
        assert!(r.passed(1e-10));

        let p: Vec<f64> = (0..12)
            .map(|i| if i == 0 { 0.2 } else { rng.random_range(-3.0..3.0) })
            .collect();
        let g = lossless_gate_from_params(&p).unwrap();
        let big = nontrivial_eigenvalues(&build_phi(&g, 2).unwrap()).unwrap();
        assert!(big.iter().any(|z| (z + C64::new(1.0, 0.0)).norm() < 1e-9));
    }
}
