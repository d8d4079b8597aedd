//! Ensemble sweeps and derivative-free searches for peripheral eigenvalues.

mod simplex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use crate::channel::{build_phi, z_max_modulus};
use crate::error::{Error, Result};
use crate::gates::{
    haar_gate, is_dual_unitary, kak_gate_from_params, max_linear_entropy, operator_schmidt, qutrit_gate_from_params,
    wrap_coupling, Gate,
};
use crate::linalg::{HermitianBasis, RngStream};

pub use simplex::{minimize, SimplexOptions, SimplexResult};

/// Default peripheral tolerance for sweeps.
pub const SWEEP_PERIPHERAL_EPS: f64 = 1e-6;

/// A restart counts as a hit when `1 − |z_max|` is at or below this.
pub const HIT_THRESHOLD: f64 = 1e-6;

/// Hits are re-polished towards this before classification.
pub const POLISH_TARGET: f64 = 1e-9;

/// Tolerance on `|J| − kπ/4` in conjecture-pattern fits.
pub const PATTERN_TOL: f64 = 1e-3;

/// Hits below this operator linear entropy are flagged.
pub const LOW_ENTROPY_FLAG: f64 = 0.5;

// Hits sitting exactly on E = 1/2 come out of the polish within ~1e−10 of it.
const LOW_ENTROPY_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub sites: usize,
    pub local_dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub eps: f64,
    pub z_max_moduli: Vec<f64>,
    pub peripheral_count: usize,
}

impl SweepResult {
    pub fn mean(&self) -> f64 {
        self.z_max_moduli.iter().sum::<f64>() / self.samples as f64
    }
}

/// `|z_max|` of `Φ_M` for `samples` Haar gates; sample `i` draws from substream `i` of `rng`.
pub fn haar_sweep(local_dim: usize, sites: usize, samples: usize, eps: f64, rng: &RngStream) -> Result<SweepResult> {
    if samples == 0 {
        return Err(Error::validation("samples", "must be at least 1"));
    }
    HermitianBasis::new(local_dim, sites)?;
    let z_max_moduli: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.substream(i as u64);
            z_max_modulus(&build_phi(&haar_gate(local_dim, &mut r)?, sites)?)
        })
        .collect::<Result<_>>()?;
    let peripheral_count = z_max_moduli.iter().filter(|&&z| z >= 1.0 - eps).count();
    Ok(SweepResult {
        sites,
        local_dim,
        samples,
        seed: rng.master_seed(),
        eps,
        z_max_moduli,
        peripheral_count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchFamily {
    /// Two-qubit `[J(3), u, u′, v, v′]`, 15 parameters.
    Kak,
    /// Two-qutrit `[J(8), u, v]`, 24 parameters.
    Qutrit24,
}

impl SearchFamily {
    pub fn local_dim(self) -> usize {
        match self {
            SearchFamily::Kak => 2,
            SearchFamily::Qutrit24 => 3,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            SearchFamily::Kak => 15,
            SearchFamily::Qutrit24 => 24,
        }
    }

    fn couplings(self) -> usize {
        match self {
            SearchFamily::Kak => 3,
            SearchFamily::Qutrit24 => 8,
        }
    }

    /// Wrap couplings onto `[−π/2, π/2)`; locals are left alone.
    pub fn canonical(self, params: &[f64]) -> Vec<f64> {
        let mut p = params.to_vec();
        for x in p.iter_mut().take(self.couplings()) {
            *x = wrap_coupling(*x);
        }
        p
    }

    pub fn gate(self, params: &[f64]) -> Result<Gate> {
        let p = self.canonical(params);
        match self {
            SearchFamily::Kak => kak_gate_from_params(&p),
            SearchFamily::Qutrit24 => qutrit_gate_from_params(&p),
        }
    }
}

/// `1 − |z_max|` of `Φ_M` for a gate of `family` (`+∞` if the gate cannot be built).
pub fn peripheral_gap(family: SearchFamily, sites: usize, params: &[f64]) -> f64 {
    family
        .gate(params)
        .and_then(|g| build_phi(&g, sites))
        .and_then(|phi| z_max_modulus(&phi))
        .map_or(f64::INFINITY, |z| 1.0 - z)
}

/// Which couplings sit at `|J| = π/4` and, for another, `|J| = kπ/4`.
#[derive(Clone, Debug, Serialize)]
pub struct ConjecturePattern {
    /// Couplings wrapped onto `[−π/2, π/2)`.
    pub couplings: [f64; 3],
    /// Index of a coupling with `||J| − π/4| ≤ tol`.
    pub quarter_axis: Option<usize>,
    /// Index and `k` of another coupling with `||J| − kπ/4| ≤ tol`.
    pub second_axis: Option<(usize, u8)>,
    pub matches: bool,
}

fn quarter_multiple(x: f64, tol: f64) -> Option<u8> {
    let a = x.abs();
    (0..=2u8).find(|&k| (a - k as f64 * FRAC_PI_4).abs() <= tol)
}

pub fn conjecture_pattern(j: [f64; 3], tol: f64) -> ConjecturePattern {
    let couplings = j.map(wrap_coupling);
    let mut best: Option<(usize, Option<(usize, u8)>)> = None;
    for mu in 0..3 {
        if (couplings[mu].abs() - FRAC_PI_4).abs() > tol {
            continue;
        }
        let other = (0..3)
            .filter(|&b| b != mu)
            .find_map(|b| quarter_multiple(couplings[b], tol).map(|k| (b, k)));
        if best.is_none() || (best.is_some_and(|b| b.1.is_none()) && other.is_some()) {
            best = Some((mu, other));
        }
    }
    ConjecturePattern {
        couplings,
        quarter_axis: best.map(|b| b.0),
        second_axis: best.and_then(|b| b.1),
        matches: best.is_some_and(|b| b.1.is_some()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchHit {
    pub family: SearchFamily,
    pub sites: usize,
    pub params: Vec<f64>,
    pub one_minus_z_max: f64,
    pub linear_entropy: f64,
    pub dual_unitary: bool,
    /// Only for the two-qubit family.
    pub pattern: Option<ConjecturePattern>,
    pub restart: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub evals_per_restart: usize,
    pub polish_evals: usize,
    pub hit_threshold: f64,
    pub polish_target: f64,
    pub pattern_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 50,
            evals_per_restart: 2000,
            polish_evals: 4000,
            hit_threshold: HIT_THRESHOLD,
            polish_target: POLISH_TARGET,
            pattern_tol: PATTERN_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub family: SearchFamily,
    pub sites: usize,
    pub seed: u64,
    pub options: SearchOptions,
    /// Best `1 − |z_max|` reached by each restart, in restart order.
    pub restart_best: Vec<f64>,
    /// Sorted by `1 − |z_max|`, then parameters.
    pub hits: Vec<SearchHit>,
    /// Hits with operator linear entropy below [`LOW_ENTROPY_FLAG`] (less a `1e−6` slack).
    pub low_entropy_hits: usize,
}

fn random_start(family: SearchFamily, rng: &mut RngStream) -> Vec<f64> {
    let nc = family.couplings();
    (0..family.n_params())
        .map(|i| {
            if i < nc {
                rng.random_range(-FRAC_PI_2..FRAC_PI_2)
            } else {
                rng.random_range(-PI..PI)
            }
        })
        .collect()
}

fn annotate(
    family: SearchFamily,
    sites: usize,
    params: Vec<f64>,
    gap: f64,
    restart: usize,
    tol: f64,
) -> Result<SearchHit> {
    let gate = family.gate(&params)?;
    let schmidt = operator_schmidt(&gate)?;
    let pattern = match family {
        SearchFamily::Kak => Some(conjecture_pattern([params[0], params[1], params[2]], tol)),
        SearchFamily::Qutrit24 => None,
    };
    Ok(SearchHit {
        family,
        sites,
        params,
        one_minus_z_max: gap,
        linear_entropy: schmidt.linear_entropy,
        // a gap of ε leaves couplings O(√ε) from the dual-unitary point, so the flag uses `tol`
        dual_unitary: is_dual_unitary(&gate, tol),
        pattern,
        restart,
    })
}

fn sort_hits(hits: &mut [SearchHit]) {
    hits.sort_by(|a, b| {
        a.one_minus_z_max.total_cmp(&b.one_minus_z_max).then_with(|| {
            a.params
                .iter()
                .zip(&b.params)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
}

/// Multi-start simplex descent on `1 − |z_max(Φ_M)|`; restart `i` uses substream `i` of `rng`.
pub fn optimize_peripheral(
    family: SearchFamily,
    sites: usize,
    rng: &RngStream,
    opts: SearchOptions,
) -> Result<SearchOutcome> {
    if opts.restarts == 0 {
        return Err(Error::validation("restarts", "must be at least 1"));
    }
    HermitianBasis::new(family.local_dim(), sites)?;
    let runs: Vec<(f64, Option<SearchHit>)> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.substream(i as u64);
            let x0 = random_start(family, &mut r);
            let objective = |x: &[f64]| peripheral_gap(family, sites, x);
            let first = minimize(
                objective,
                &x0,
                SimplexOptions {
                    max_evals: opts.evals_per_restart,
                    target: opts.polish_target,
                    ..Default::default()
                },
            );
            if first.value > opts.hit_threshold {
                return Ok((first.value, None));
            }
            let polished = minimize(
                objective,
                &first.x,
                SimplexOptions {
                    max_evals: opts.polish_evals,
                    target: opts.polish_target,
                    initial_step: 1e-3,
                    ..Default::default()
                },
            );
            let best = if polished.value < first.value { polished } else { first };
            let params = family.canonical(&best.x);
            let gap = peripheral_gap(family, sites, &params);
            let hit = annotate(family, sites, params, gap, i, opts.pattern_tol)?;
            Ok((gap, Some(hit)))
        })
        .collect::<Result<_>>()?;
    let restart_best = runs.iter().map(|r| r.0).collect();
    let mut hits: Vec<SearchHit> = runs.into_iter().filter_map(|r| r.1).collect();
    sort_hits(&mut hits);
    let low_entropy_hits = hits
        .iter()
        .filter(|h| h.linear_entropy < LOW_ENTROPY_FLAG - LOW_ENTROPY_SLACK)
        .count();
    Ok(SearchOutcome {
        family,
        sites,
        seed: rng.master_seed(),
        options: opts,
        restart_best,
        hits,
        low_entropy_hits,
    })
}

/// One grid point of a conjecture scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanPoint {
    pub j_beta: f64,
    pub j_gamma: f64,
    pub one_minus_z_max: f64,
    pub linear_entropy: f64,
    pub peripheral: bool,
    /// `k` with `||J_β| − kπ/4|` or `||J_γ| − kπ/4|` within tolerance, when peripheral.
    pub conjecture_k: Option<u8>,
    /// Full 15-parameter vector of the best gate found.
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub fixed_axis: usize,
    pub sites: usize,
    pub seed: u64,
    pub restarts_per_point: usize,
    pub evals_per_restart: usize,
    /// Locals are optimised separately at every grid point.
    pub locals_optimised: bool,
    pub points: Vec<ScanPoint>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanOptions {
    pub fixed_axis: usize,
    pub grid: usize,
    pub restarts_per_point: usize,
    pub evals_per_restart: usize,
    pub hit_threshold: f64,
    pub pattern_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            fixed_axis: 0,
            grid: 9,
            restarts_per_point: 4,
            evals_per_restart: 2000,
            hit_threshold: HIT_THRESHOLD,
            pattern_tol: PATTERN_TOL,
        }
    }
}

fn insert_couplings(fixed_axis: usize, jb: f64, jg: f64) -> [f64; 3] {
    let mut j = [0.0; 3];
    let others: Vec<usize> = (0..3).filter(|&a| a != fixed_axis).collect();
    j[fixed_axis] = FRAC_PI_4;
    j[others[0]] = jb;
    j[others[1]] = jg;
    j
}

/// Best `1 − |z_max(Φ_2)|` over local unitaries at fixed couplings.
pub fn optimize_locals(j: [f64; 3], sites: usize, restarts: usize, evals: usize, rng: &RngStream) -> (f64, Vec<f64>) {
    (0..restarts)
        .map(|i| {
            let mut r = rng.substream(i as u64);
            let x0: Vec<f64> = (0..12).map(|_| r.random_range(-PI..PI)).collect();
            let full = |x: &[f64]| {
                let mut p = j.to_vec();
                p.extend_from_slice(x);
                p
            };
            let res = minimize(
                |x: &[f64]| peripheral_gap(SearchFamily::Kak, sites, &full(x)),
                &x0,
                SimplexOptions {
                    max_evals: evals,
                    target: POLISH_TARGET,
                    ..Default::default()
                },
            );
            (res.value, full(&res.x))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::INFINITY, Vec::new()))
}

/// Grid over `(J_β, J_γ) ∈ [−π/2, π/2]²` with `J_α = π/4` on `fixed_axis`.
pub fn conjecture_scan(sites: usize, rng: &RngStream, opts: ScanOptions) -> Result<ScanReport> {
    if opts.fixed_axis > 2 {
        return Err(Error::validation("fixed_axis", "must be 0, 1 or 2"));
    }
    if opts.grid < 2 {
        return Err(Error::validation("grid", "needs at least 2 points per axis"));
    }
    let axis = |k: usize| -FRAC_PI_2 + PI * k as f64 / (opts.grid - 1) as f64;
    let coords: Vec<(f64, f64)> = (0..opts.grid)
        .flat_map(|a| (0..opts.grid).map(move |b| (axis(a), axis(b))))
        .collect();
    let points = coords
        .par_iter()
        .enumerate()
        .map(|(idx, &(jb, jg))| {
            let j = insert_couplings(opts.fixed_axis, jb, jg);
            let point_rng = rng.substream(1 << 32 | idx as u64);
            let (gap, params) = optimize_locals(j, sites, opts.restarts_per_point, opts.evals_per_restart, &point_rng);
            let gate = SearchFamily::Kak.gate(&params)?;
            let entropy = operator_schmidt(&gate)?.linear_entropy;
            let peripheral = gap <= opts.hit_threshold;
            let conjecture_k = if peripheral {
                quarter_multiple(jb, opts.pattern_tol).or_else(|| quarter_multiple(jg, opts.pattern_tol))
            } else {
                None
            };
            Ok(ScanPoint {
                j_beta: jb,
                j_gamma: jg,
                one_minus_z_max: gap,
                linear_entropy: entropy,
                peripheral,
                conjecture_k,
                params,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        fixed_axis: opts.fixed_axis,
        sites,
        seed: rng.master_seed(),
        restarts_per_point: opts.restarts_per_point,
        evals_per_restart: opts.evals_per_restart,
        locals_optimised: true,
        points,
    })
}

/// Tab-separated scan table with a header row.
pub fn scan_to_tsv(report: &ScanReport) -> String {
    let mut out = String::from("J_beta\tJ_gamma\tone_minus_zmax\tentropy\tconjecture_k\n");
    for p in &report.points {
        let k = p.conjecture_k.map_or_else(|| "NA".to_string(), |k| k.to_string());
        let _ = writeln!(
            out,
            "{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{k}",
            p.j_beta, p.j_gamma, p.one_minus_z_max, p.linear_entropy
        );
    }
    out
}

/// `(d² − 1)/d² − E`: how far a hit is from dual-unitary entanglement.
pub fn entropy_deficit(hit: &SearchHit) -> f64 {
    max_linear_entropy(hit.family.local_dim()) - hit.linear_entropy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_is_deterministic_and_bounded() {
        let rng = RngStream::new(81, 0);
        let a = haar_sweep(2, 1, 40, 1e-6, &rng).unwrap();
        let b = haar_sweep(2, 1, 40, 1e-6, &rng).unwrap();
        assert_eq!(a.z_max_moduli, b.z_max_moduli);
        assert_eq!(a.z_max_moduli.len(), 40);
        assert!(a.z_max_moduli.iter().all(|&z| (0.0..=1.0 + 1e-9).contains(&z)));
        assert_eq!(a.peripheral_count, 0);
        assert!(haar_sweep(2, 1, 0, 1e-6, &rng).is_err());
        assert!(matches!(haar_sweep(2, 7, 1, 1e-6, &rng), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn pattern_classification() {
        let q = FRAC_PI_4;
        let p = conjecture_pattern([q, 0.0, 0.3], 1e-3);
        assert!(p.matches);
        assert_eq!(p.second_axis, Some((1, 0)));
        let p = conjecture_pattern([0.2, -q, q], 1e-3);
        assert!(p.matches && p.second_axis.unwrap().1 == 1);
        let p = conjecture_pattern([0.3, q + 5e-4, -FRAC_PI_2], 1e-3);
        assert!(p.matches && p.second_axis == Some((2, 2)));
        let p = conjecture_pattern([0.3, q, 0.5], 1e-3);
        assert!(!p.matches && p.quarter_axis == Some(1));
        assert!(conjecture_pattern([0.3, 0.2, 0.1], 1e-3).quarter_axis.is_none());
    }

    #[test]
    fn m1_qubit_hits_are_dual_unitary() {
        let opts = SearchOptions {
            restarts: 6,
            ..Default::default()
        };
        let out = optimize_peripheral(SearchFamily::Kak, 1, &RngStream::new(82, 0), opts).unwrap();
        assert_eq!(out.restart_best.len(), 6);
        assert!(!out.hits.is_empty());
        for h in &out.hits {
            assert!(h.dual_unitary, "{h:?}");
            assert!(h.one_minus_z_max <= HIT_THRESHOLD);
            let again = peripheral_gap(SearchFamily::Kak, 1, &h.params);
            assert!((again - h.one_minus_z_max).abs() <= 1e-8);
        }
    }

    #[test]
    fn scan_table_layout() {
        let opts = ScanOptions {
            grid: 2,
            restarts_per_point: 1,
            evals_per_restart: 50,
            ..Default::default()
        };
        let report = conjecture_scan(2, &RngStream::new(83, 0), opts).unwrap();
        assert_eq!(report.points.len(), 4);
        let tsv = scan_to_tsv(&report);
        assert_eq!(tsv.lines().count(), 5);
        assert!(tsv.starts_with("J_beta\tJ_gamma\tone_minus_zmax\tentropy\tconjecture_k\n"));
        assert!(conjecture_scan(2, &RngStream::new(83, 0), ScanOptions { fixed_axis: 3, ..opts }).is_err());
    }
}
