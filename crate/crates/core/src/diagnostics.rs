//! Floquet diagnostics on small chains: eigenphase statistics, local expectations and
//! half-chain entanglement of eigenstates.

use ndarray::{s, Array2, ArrayView1};
use ndarray_linalg::{Eig, EigVals, QR};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::lightcone::{check_chain, layer_sites, LayerOrder};
use crate::linalg::{
    apply_two_site, eigh, entropy_from_probabilities, identity, sample_cue, singular_values, unitarity_residual,
    ComplexMatrix, Side, C64,
};

/// Default cap on the Floquet dimension `d^{N+1}` for full diagonalisation.
pub const DEFAULT_MAX_FLOQUET_DIM: usize = 1 << 12;

/// Hard ceiling on the Floquet dimension, whatever cap is requested.
pub const MAX_FLOQUET_DIM: usize = 1 << 14;

/// Eigenvector unitarity tolerance.
pub const FLOQUET_UNITARITY_TOL: f64 = 1e-8;

/// Phases closer than this are treated as one degenerate level when orthonormalising.
const DEGENERACY_TOL: f64 = 1e-9;

/// Mean gap ratio of `sample_cue(512)` eigenphases, 100 draws from `RngStream::new(0, 0)`.
/// [`cue_reference_gap_ratio`] recomputes it.
pub const CUE_GAP_RATIO_PILOT: f64 = 0.599_724;

/// Default spacing histogram: 40 bins on `[0, 4]` in units of the mean spacing.
pub const DEFAULT_HISTOGRAM_BINS: usize = 40;
pub const DEFAULT_HISTOGRAM_MAX: f64 = 4.0;

/// One Floquet period `𝕌 = 𝕌_second 𝕌_first` of an `N + 1` site brickwork chain.
pub fn build_floquet(gate: &Gate, n: usize, order: LayerOrder) -> Result<ComplexMatrix> {
    build_floquet_with_cap(gate, n, order, DEFAULT_MAX_FLOQUET_DIM)
}

pub fn build_floquet_with_cap(gate: &Gate, n: usize, order: LayerOrder, max_dim: usize) -> Result<ComplexMatrix> {
    if !n.is_multiple_of(2) {
        return Err(Error::validation("N", format!("chain parameter N = {n} must be even")));
    }
    if n == 0 {
        return Err(Error::validation("N", "chain needs at least two sites"));
    }
    let d = gate.local_dim();
    let cap = max_dim.min(MAX_FLOQUET_DIM);
    check_chain(d, n + 1, (cap as f64).log2())?;
    let n_sites = n + 1;
    let mut u = identity(d.pow(n_sites as u32));
    let mut even = order == LayerOrder::EvenFirst;
    for _ in 0..2 {
        for first in layer_sites(n_sites, even) {
            apply_two_site(&mut u, gate.matrix().view(), first, n_sites, d, Side::Left);
        }
        even = !even;
    }
    Ok(u)
}

/// Eigenphases in `(−π, π]` (ascending) with an orthonormal eigenbasis.
#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    phases: Vec<f64>,
    vectors: ComplexMatrix,
    local_dim: usize,
    sites: usize,
}

fn wrap_phase(x: f64) -> f64 {
    let mut p = x.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    if p <= -PI {
        p + 2.0 * PI
    } else {
        p
    }
}

impl FloquetSpectrum {
    /// Diagonalise a unitary acting on `sites` qudits of dimension `local_dim`.
    pub fn from_unitary(u: &ComplexMatrix, local_dim: usize, sites: usize) -> Result<Self> {
        let dim = local_dim.pow(sites as u32);
        if u.dim() != (dim, dim) {
            return Err(Error::Shape(format!(
                "{:?} matrix for {sites} sites of dimension {local_dim}",
                u.dim()
            )));
        }
        let res = unitarity_residual(u);
        if res > FLOQUET_UNITARITY_TOL {
            return Err(Error::validation(
                "unitary",
                format!("not unitary (residual {res:.2e})"),
            ));
        }
        let (vals, vecs) = u.eig()?;
        let raw: Vec<f64> = vals.iter().map(|z| wrap_phase(z.arg())).collect();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
        let phases: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
        let mut vectors = Array2::<C64>::zeros((dim, dim));
        for (k, &i) in order.iter().enumerate() {
            vectors.column_mut(k).assign(&vecs.column(i));
        }
        orthonormalise_clusters(&phases, &mut vectors)?;
        let res = unitarity_residual(&vectors);
        if res > FLOQUET_UNITARITY_TOL {
            return Err(Error::Numerical(format!(
                "Floquet eigenbasis not unitary (residual {res:.2e})"
            )));
        }
        Ok(FloquetSpectrum {
            phases,
            vectors,
            local_dim,
            sites,
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Eigenvectors as columns, aligned with [`phases`](Self::phases).
    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Floquet spectrum of the chain `build_floquet(gate, n, order)`.
pub fn floquet_spectrum(gate: &Gate, n: usize, order: LayerOrder) -> Result<FloquetSpectrum> {
    FloquetSpectrum::from_unitary(&build_floquet(gate, n, order)?, gate.local_dim(), n + 1)
}

// Groups of consecutive (cyclically) near-equal phases, as index lists.
fn degenerate_clusters(phases: &[f64]) -> Vec<Vec<usize>> {
    let n = phases.len();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match clusters.last_mut() {
            Some(c) if phases[i] - phases[*c.last().expect("nonempty")] < DEGENERACY_TOL => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    if clusters.len() > 1 && phases[0] + 2.0 * PI - phases[n - 1] < DEGENERACY_TOL {
        let last = clusters.pop().expect("nonempty");
        clusters[0].extend(last);
    }
    clusters
}

fn orthonormalise_clusters(phases: &[f64], vectors: &mut ComplexMatrix) -> Result<()> {
    for cluster in degenerate_clusters(phases) {
        if cluster.len() == 1 {
            let mut col = vectors.column_mut(cluster[0]);
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            col.mapv_inplace(|z| z / norm);
            continue;
        }
        let mut block = Array2::<C64>::zeros((vectors.nrows(), cluster.len()));
        for (k, &i) in cluster.iter().enumerate() {
            block.column_mut(k).assign(&vectors.column(i));
        }
        let (q, _) = block.qr()?;
        for (k, &i) in cluster.iter().enumerate() {
            vectors.column_mut(i).assign(&q.column(k));
        }
    }
    Ok(())
}

/// Spacings of sorted phases on the circle, including the wrap from the last phase to the first.
pub fn circular_spacings(phases: &[f64]) -> Vec<f64> {
    let n = phases.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sorted = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut s: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    s.push(sorted[0] + 2.0 * PI - sorted[n - 1]);
    s
}

/// Mean of `min(s_n, s_{n+1}) / max(s_n, s_{n+1})` over cyclically consecutive spacings.
/// A pair of zero spacings contributes 0.
pub fn mean_gap_ratio(phases: &[f64]) -> f64 {
    let s = circular_spacings(phases);
    let n = s.len();
    if n < 2 {
        return f64::NAN;
    }
    let total: f64 = (0..n)
        .map(|i| {
            let (a, b) = (s[i], s[(i + 1) % n]);
            let hi = a.max(b);
            if hi > 0.0 {
                a.min(b) / hi
            } else {
                0.0
            }
        })
        .sum();
    total / n as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Samples beyond the last edge.
    pub overflow: usize,
}

pub fn histogram(values: &[f64], bins: usize, max: f64) -> Histogram {
    let edges: Vec<f64> = (0..=bins).map(|k| max * k as f64 / bins as f64).collect();
    let mut counts = vec![0; bins];
    let mut overflow = 0;
    for &v in values {
        let k = (v / max * bins as f64).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        } else if v >= max {
            overflow += 1;
        }
    }
    Histogram {
        edges,
        counts,
        overflow,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorStatistics {
    /// Symmetry eigenvalue labelling the sector.
    pub eigenvalue: f64,
    pub dim: usize,
    pub mean_gap_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenphaseReport {
    pub levels: usize,
    pub mean_gap_ratio: f64,
    /// Spacings rescaled to unit mean.
    pub unfolded_spacings: Vec<f64>,
    pub histogram: Histogram,
    pub sectors: Vec<SectorStatistics>,
}

/// Raw level statistics of a Floquet spectrum.
pub fn eigenphase_statistics(f: &FloquetSpectrum) -> EigenphaseReport {
    phase_statistics(f.phases(), DEFAULT_HISTOGRAM_BINS, DEFAULT_HISTOGRAM_MAX)
}

pub fn phase_statistics(phases: &[f64], bins: usize, max: f64) -> EigenphaseReport {
    let s = circular_spacings(phases);
    let mean = 2.0 * PI / s.len().max(1) as f64;
    let unfolded: Vec<f64> = s.iter().map(|x| x / mean).collect();
    EigenphaseReport {
        levels: phases.len(),
        mean_gap_ratio: mean_gap_ratio(phases),
        histogram: histogram(&unfolded, bins, max),
        unfolded_spacings: unfolded,
        sectors: Vec::new(),
    }
}

/// Statistics resolved by the eigenspaces of a Hermitian `symmetry` commuting with `u`.
pub fn sector_resolved_statistics(
    u: &ComplexMatrix,
    symmetry: &ComplexMatrix,
    sector_tol: f64,
) -> Result<EigenphaseReport> {
    if symmetry.dim() != u.dim() {
        return Err(Error::Shape("symmetry and unitary differ in shape".into()));
    }
    let comm = u.dot(symmetry) - symmetry.dot(u);
    let residual = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(Error::validation(
            "symmetry",
            format!("does not commute with the unitary ({residual:.2e})"),
        ));
    }
    let (vals, vecs) = eigh(symmetry)?;
    let mut sectors = Vec::new();
    let mut all = Vec::new();
    let mut start = 0;
    while start < vals.len() {
        let mut end = start + 1;
        while end < vals.len() && vals[end] - vals[end - 1] <= sector_tol {
            end += 1;
        }
        let p = vecs.slice(s![.., start..end]).to_owned();
        let block = crate::linalg::adjoint(&p).dot(u).dot(&p);
        let (ev, _) = block.eig()?;
        let phases: Vec<f64> = ev.iter().map(|z| wrap_phase(z.arg())).collect();
        sectors.push(SectorStatistics {
            eigenvalue: vals[start],
            dim: end - start,
            mean_gap_ratio: mean_gap_ratio(&phases),
        });
        all.extend(phases);
        start = end;
    }
    let mut report = phase_statistics(&all, DEFAULT_HISTOGRAM_BINS, DEFAULT_HISTOGRAM_MAX);
    report.sectors = sectors;
    Ok(report)
}

/// Mean gap ratio of `sample_cue(dim)` eigenphases, averaged over `draws`.
pub fn cue_reference_gap_ratio<R: Rng + ?Sized>(dim: usize, draws: usize, rng: &mut R) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..draws {
        let ev = sample_cue(dim, rng).eigvals()?;
        let phases: Vec<f64> = ev.iter().map(|z| z.arg()).collect();
        total += mean_gap_ratio(&phases);
    }
    Ok(total / draws as f64)
}

/// `(⟨σ^x⟩, ⟨σ^y⟩, ⟨σ^z⟩)` at `site` for every eigenstate, in phase order.
pub fn eigenstate_site_expectations(f: &FloquetSpectrum, site: usize) -> Result<Vec<[f64; 3]>> {
    if f.local_dim() != 2 {
        return Err(Error::validation("site", "Pauli expectations need qubits"));
    }
    if site >= f.sites() {
        return Err(Error::validation(
            "site",
            format!("site {site} outside a chain of {}", f.sites()),
        ));
    }
    let right = 1usize << (f.sites() - site - 1);
    let left = 1usize << site;
    let out = (0..f.len())
        .into_par_iter()
        .map(|k| {
            let psi = f.vectors().column(k);
            let (mut r00, mut r11, mut r01) = (0.0, 0.0, C64::new(0.0, 0.0));
            for l in 0..left {
                for r in 0..right {
                    let a = psi[l * 2 * right + r];
                    let b = psi[l * 2 * right + right + r];
                    r00 += a.norm_sqr();
                    r11 += b.norm_sqr();
                    r01 += a * b.conj();
                }
            }
            [2.0 * r01.re, -2.0 * r01.im, r00 - r11]
        })
        .collect();
    Ok(out)
}

/// Entanglement entropy of a pure state across the cut after the first `cut` sites.
pub fn bipartite_entropy(psi: ArrayView1<C64>, local_dim: usize, sites: usize, cut: usize) -> Result<f64> {
    let rows = local_dim.pow(cut as u32);
    let cols = local_dim.pow((sites - cut) as u32);
    if psi.len() != rows * cols {
        return Err(Error::Shape("state length does not match the chain".into()));
    }
    let m = Array2::from_shape_fn((rows, cols), |(i, j)| psi[i * cols + j]);
    let sv = singular_values(&m)?;
    Ok(entropy_from_probabilities(sv.iter().map(|x| x * x)))
}

/// Von Neumann entropy of the first `⌈(N+1)/2⌉` sites for every eigenstate, in phase order.
pub fn half_chain_entropy(f: &FloquetSpectrum) -> Result<Vec<f64>> {
    let cut = f.sites().div_ceil(2);
    (0..f.len())
        .into_par_iter()
        .map(|k| bipartite_entropy(f.vectors().column(k), f.local_dim(), f.sites(), cut))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{explicit_gate, haar_gate, lossless_gate_from_params, swap_gate};
    use crate::linalg::{kron_all, max_abs_diff, paulis, RngStream};
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;
    use ndarray_linalg::Determinant;
    use proptest::prelude::*;

    fn site_op(op: &ComplexMatrix, site: usize, sites: usize) -> ComplexMatrix {
        let id = identity(2);
        let factors: Vec<&ComplexMatrix> = (0..sites).map(|k| if k == site { op } else { &id }).collect();
        kron_all(factors)
    }

    #[test]
    fn swap_period_moves_site_zero_to_site_two() {
        let u = build_floquet(&swap_gate(2).unwrap(), 2, LayerOrder::EvenFirst).unwrap();
        let z = &paulis()[2];
        let moved = u.dot(&site_op(z, 0, 3)).dot(&crate::linalg::adjoint(&u));
        assert!(max_abs_diff(&moved, &site_op(z, 2, 3)) < 1e-14);
        let ident = build_floquet(&explicit_gate(2, identity(4)).unwrap(), 2, LayerOrder::OddFirst).unwrap();
        assert!(max_abs_diff(&ident, &identity(8)) == 0.0);
    }

    #[test]
    fn floquet_argument_errors() {
        let g = swap_gate(2).unwrap();
        assert!(matches!(
            build_floquet(&g, 3, LayerOrder::EvenFirst),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(
            build_floquet(&g, 12, LayerOrder::EvenFirst),
            Err(Error::SizeLimit { .. })
        ));
        assert!(matches!(
            build_floquet_with_cap(&g, 14, LayerOrder::EvenFirst, 1 << 20),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn spectrum_invariants_for_a_haar_chain() {
        let mut rng = RngStream::new(71, 0);
        let g = haar_gate(2, &mut rng).unwrap();
        let u = build_floquet(&g, 4, LayerOrder::EvenFirst).unwrap();
        assert!(unitarity_residual(&u) <= 1e-10);
        let f = FloquetSpectrum::from_unitary(&u, 2, 5).unwrap();
        assert!(f.phases().windows(2).all(|w| w[0] <= w[1]));
        assert!(f.phases().iter().all(|&p| p > -PI && p <= PI));
        assert!(unitarity_residual(f.vectors()) <= 1e-8);
        let prod: C64 = f.phases().iter().map(|&p| C64::from_polar(1.0, p)).product();
        assert!((prod - u.det().unwrap()).norm() < 1e-6);
        for k in 0..f.len() {
            let v = f.vectors().column(k).to_owned();
            let uv = u.dot(&v);
            let ev = v.mapv(|z| z * C64::from_polar(1.0, f.phases()[k]));
            assert!(uv.iter().zip(ev.iter()).all(|(a, b)| (a - b).norm() < 1e-9));
        }
        for e in eigenstate_site_expectations(&f, 4).unwrap() {
            assert!(e.iter().all(|x| x.abs() <= 1.0 + 1e-9));
        }
        let bound = 3.0 * 2f64.ln();
        for s in half_chain_entropy(&f).unwrap() {
            assert!((-1e-12..=bound + 1e-12).contains(&s));
        }
    }

    #[test]
    fn degenerate_spectra_get_orthonormal_vectors() {
        let f = floquet_spectrum(&swap_gate(2).unwrap(), 4, LayerOrder::EvenFirst).unwrap();
        assert!(unitarity_residual(f.vectors()) <= 1e-8);
    }

    #[test]
    fn identity_chain_has_product_eigenstates() {
        let f = floquet_spectrum(&explicit_gate(2, identity(4)).unwrap(), 2, LayerOrder::EvenFirst).unwrap();
        for e in eigenstate_site_expectations(&f, 1).unwrap() {
            assert!((e[2].abs() - 1.0).abs() < 1e-14);
        }
        assert!(half_chain_entropy(&f).unwrap().iter().all(|&s| s.abs() < 1e-12));
        assert!(eigenstate_site_expectations(&f, 3).is_err());
    }

    #[test]
    fn equally_spaced_phases_have_unit_ratio() {
        let n = 16;
        let phases: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64).collect();
        let u = Array2::from_diag(&Array1::from_iter(phases.iter().map(|&p| C64::from_polar(1.0, p))));
        let f = FloquetSpectrum::from_unitary(&u, 2, 4).unwrap();
        let report = eigenphase_statistics(&f);
        assert_abs_diff_eq!(report.mean_gap_ratio, 1.0, epsilon = 1e-12);
        assert!(report.unfolded_spacings.iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert_eq!(
            report.histogram.counts.iter().sum::<usize>() + report.histogram.overflow,
            n
        );
    }

    #[test]
    fn degenerate_levels_lower_the_ratio() {
        assert_eq!(
            mean_gap_ratio(&[0.1, 0.1, 0.1, 2.0]),
            mean_gap_ratio(&[0.1, 0.1, 0.1, 2.0])
        );
        let r = mean_gap_ratio(&[0.0, 0.0, 1.0, 2.0]);
        assert!(r < mean_gap_ratio(&[0.0, 0.5, 1.0, 2.0]));
    }

    #[test]
    fn maximally_entangled_vector() {
        // Bell pairs across the cut: sites (0,3), (1,4) for a 5-site chain cut after 3 sites.
        let d = 2;
        let mut psi = Array1::<C64>::zeros(32);
        for a in 0..2 {
            for b in 0..2 {
                // sites: s0=a, s1=b, s2=0, s3=a, s4=b
                let idx = a * 16 + b * 8 + a * 2 + b;
                psi[idx] = C64::new(0.5, 0.0);
            }
        }
        let s = bipartite_entropy(psi.view(), d, 5, 3).unwrap();
        assert_abs_diff_eq!(s, 2.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn sector_resolution_with_parity_symmetry() {
        // the bare interaction commutes with the global parity ⊗σ^z
        let g = explicit_gate(2, crate::gates::kak_interaction([0.31, 0.57, 0.12])).unwrap();
        let u = build_floquet(&g, 4, LayerOrder::EvenFirst).unwrap();
        let z = &paulis()[2];
        let parity = kron_all(std::iter::repeat_n(z, 5));
        let report = sector_resolved_statistics(&u, &parity, 1e-9).unwrap();
        assert_eq!(report.sectors.len(), 2);
        assert!(report.sectors.iter().all(|s| s.dim == 16));
        assert_eq!(report.levels, 32);
        let raw = FloquetSpectrum::from_unitary(&u, 2, 5).unwrap();
        let mut merged: Vec<f64> = raw.phases().to_vec();
        let mut resolved: Vec<f64> = report.unfolded_spacings.clone();
        merged.sort_by(f64::total_cmp);
        resolved.sort_by(f64::total_cmp);
        let raw_report = eigenphase_statistics(&raw);
        let mut raw_spacings = raw_report.unfolded_spacings.clone();
        raw_spacings.sort_by(f64::total_cmp);
        assert!(raw_spacings.iter().zip(&resolved).all(|(a, b)| (a - b).abs() < 1e-6));

        let bad = site_op(&paulis()[0], 0, 5);
        assert!(sector_resolved_statistics(&u, &bad, 1e-9).is_err());
    }

    #[test]
    fn lossless_chain_builds() {
        let p = [0.3, 0.4, -0.2, 0.1, 0.7, -1.2];
        let f = floquet_spectrum(&lossless_gate_from_params(&p).unwrap(), 4, LayerOrder::OddFirst).unwrap();
        assert_eq!(f.len(), 32);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn gap_ratio_is_scale_free(phases in proptest::collection::vec(-3.0f64..3.0, 3..40), shift in -0.1f64..0.1) {
            let r = mean_gap_ratio(&phases);
            prop_assert!((0.0..=1.0).contains(&r));
            let shifted: Vec<f64> = phases.iter().map(|p| p + shift).collect();
            prop_assert!((mean_gap_ratio(&shifted) - r).abs() < 1e-9);
        }
    }
}
