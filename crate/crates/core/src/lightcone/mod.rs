//! Propagation along the lightcone, information-transfer metrics and the full-chain oracle.

mod brute;
mod decompose;
mod state;

use ndarray::Array1;
use serde::Serialize;

use crate::channel::{nontrivial_eigenvalues, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, eigh, trace_norm_distance, ComplexMatrix, HermitianBasis};

pub use brute::{
    brute_force_reduced_state, brute_force_reduced_state_with, lightcone_reduced_state, LayerOrder,
    DEFAULT_MAX_CHAIN_QUBITS,
};
pub(crate) use brute::{check_chain, layer_sites};
pub use decompose::{eigenbasis_coefficients, EigenExpansion};
pub use state::{
    lossless_lossy_axes, tensor_states, DensityMatrix, StateFamily, StateKind, DEFAULT_LAMBDA0, POSITIVITY_TOL,
    STATE_TOL,
};

/// Default central-difference step for `∂_λ ρ`.
pub const DEFAULT_QFI_STEP: f64 = 1e-5;

/// Eigenvalue pairs with `p_i + p_j` at or below this are left out of the QFI sum.
pub const DEFAULT_P_FLOOR: f64 = 1e-12;

/// Largest relative disagreement between the `δ` and `δ/2` QFI estimates.
pub const RICHARDSON_TOL: f64 = 0.01;

// QFI values below this are treated as exactly zero in the step-size check.
const QFI_ZERO: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QfiOptions {
    pub delta: f64,
    pub p_floor: f64,
}

impl Default for QfiOptions {
    fn default() -> Self {
        QfiOptions {
            delta: DEFAULT_QFI_STEP,
            p_floor: DEFAULT_P_FLOOR,
        }
    }
}

fn to_coeffs(basis: &HermitianBasis, x: &ComplexMatrix) -> Result<Array1<f64>> {
    Ok(Array1::from(basis.real_coefficients(x)?))
}

fn check_state(rho: &ComplexMatrix, power: usize) -> Result<f64> {
    let tr: f64 = (0..rho.nrows()).map(|i| rho[[i, i]].re).sum();
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::Drift {
            power,
            reason: format!("trace drifted to {tr}"),
        });
    }
    let min = crate::linalg::eigvalsh(rho)?.first().copied().unwrap_or(0.0);
    if min < -POSITIVITY_TOL {
        return Err(Error::Drift {
            power,
            reason: format!("eigenvalue {min:.3e} below zero"),
        });
    }
    Ok(min)
}

fn check_dims(rho: &DensityMatrix, s: &Superoperator) -> Result<()> {
    if rho.local_dim() != s.local_dim() || rho.sites() != s.sites() {
        return Err(Error::Shape(format!(
            "state on {} sites (d={}) for a channel on {} sites (d={})",
            rho.sites(),
            rho.local_dim(),
            s.sites(),
            s.local_dim()
        )));
    }
    Ok(())
}

/// `Φ^k[ρ]`, applying the superoperator directly and checking the state after every power.
pub fn iterate_channel(rho: &DensityMatrix, s: &Superoperator, k: usize) -> Result<DensityMatrix> {
    check_dims(rho, s)?;
    let basis = s.basis();
    let mut v = to_coeffs(basis, rho.matrix())?;
    for power in 1..=k {
        v = s.matrix().dot(&v);
        check_state(&basis.operator_real(v.as_slice().expect("contiguous"))?, power)?;
    }
    DensityMatrix::new(
        rho.local_dim(),
        rho.sites(),
        basis.operator_real(v.as_slice().expect("contiguous"))?,
    )
}

/// `F = 2 Σ_{ij} |⟨i|∂ρ|j⟩|² / (p_i + p_j)` over pairs with `p_i + p_j > p_floor`.
pub fn qfi_from_derivative(rho: &ComplexMatrix, drho: &ComplexMatrix, p_floor: f64) -> Result<f64> {
    if rho.dim() != drho.dim() {
        return Err(Error::Shape("state and derivative differ in shape".into()));
    }
    let (p, v) = eigh(rho)?;
    let dv = adjoint(&v).dot(drho).dot(&v);
    let n = p.len();
    let mut f = 0.0;
    for i in 0..n {
        for j in 0..n {
            let denom = p[i] + p[j];
            if denom > p_floor {
                f += 2.0 * dv[[i, j]].norm_sqr() / denom;
            }
        }
    }
    Ok(f)
}

fn central_difference(fam: &StateFamily, lambda: f64, delta: f64) -> Result<ComplexMatrix> {
    let plus = fam.state(lambda + delta)?;
    let minus = fam.state(lambda - delta)?;
    Ok((plus.matrix() - minus.matrix()).mapv(|z| z / (2.0 * delta)))
}

/// `∂_λ ρ` at `λ`, accepted only if the QFI it implies agrees between steps `δ` and `δ/2`.
/// Returns the state, the `δ/2` derivative and the QFI.
pub fn verified_derivative(
    fam: &StateFamily,
    lambda: f64,
    opts: QfiOptions,
) -> Result<(DensityMatrix, ComplexMatrix, f64)> {
    if !(opts.delta > 0.0 && opts.delta.is_finite()) {
        return Err(Error::validation("qfi.delta", "step must be positive"));
    }
    let rho = fam.state(lambda)?;
    let coarse_d = central_difference(fam, lambda, opts.delta)?;
    let fine_d = central_difference(fam, lambda, opts.delta / 2.0)?;
    let coarse = qfi_from_derivative(rho.matrix(), &coarse_d, opts.p_floor)?;
    let fine = qfi_from_derivative(rho.matrix(), &fine_d, opts.p_floor)?;
    if coarse.abs().max(fine.abs()) <= QFI_ZERO {
        return Ok((rho, fine_d.mapv(|_| Default::default()), 0.0));
    }
    if (coarse - fine).abs() > RICHARDSON_TOL * coarse.abs().max(fine.abs()) {
        return Err(Error::StepSize {
            delta: opts.delta,
            coarse,
            fine,
        });
    }
    Ok((rho, fine_d, fine))
}

/// Quantum Fisher information of `fam` at `λ`.
pub fn quantum_fisher_information(fam: &StateFamily, lambda: f64, opts: QfiOptions) -> Result<f64> {
    Ok(verified_derivative(fam, lambda, opts)?.2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TraceDistance,
    Fisher,
}

/// `η(t)` along the lightcone with the `|z_max|^{t−M+1}` reference.
#[derive(Clone, Debug, Serialize)]
pub struct TransferCurve {
    pub metric: Metric,
    pub sites: usize,
    /// Layer counts `t`; the channel has been applied `t − M + 1` times.
    pub steps: Vec<usize>,
    pub eta: Vec<f64>,
    pub bound: Vec<f64>,
    pub z_max_modulus: f64,
}

impl TransferCurve {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Largest increase between consecutive points (≤ 0 for a monotone curve).
    pub fn max_increase(&self) -> f64 {
        self.eta
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// What is sent through the channel.
#[derive(Clone, Copy, Debug)]
pub enum Encoding<'a> {
    /// Continuous parameter, measured by the QFI at the family's `λ₀`.
    Family(&'a StateFamily),
    /// Discrete pair, measured by the trace distance.
    Pair(&'a DensityMatrix, &'a DensityMatrix),
}

fn applications(t: usize, sites: usize) -> Result<usize> {
    (t + 1)
        .checked_sub(sites)
        .ok_or_else(|| Error::validation("t", format!("layer count {t} is below the window offset {}", sites - 1)))
}

/// `η_D` or `η_F` for every layer count `t = M−1, …, t_max`.
pub fn eta_curves(enc: Encoding<'_>, s: &Superoperator, t_max: usize, opts: QfiOptions) -> Result<TransferCurve> {
    let sites = s.sites();
    if t_max < sites {
        return Err(Error::validation("t_max", format!("must be at least M = {sites}")));
    }
    let zmax = nontrivial_eigenvalues(s)?.first().map_or(0.0, |z| z.norm());
    let basis = s.basis();
    let first = sites - 1;
    let mut steps = Vec::new();
    let mut eta = Vec::new();
    let mut bound = Vec::new();
    let metric = match enc {
        Encoding::Family(fam) => {
            if fam.local_dim() != s.local_dim() || fam.sites() != sites {
                return Err(Error::Shape("state family does not match the channel".into()));
            }
            let (rho, drho, f_in) = verified_derivative(fam, fam.lambda0(), opts)?;
            if f_in.is_nan() || f_in <= QFI_ZERO {
                return Err(Error::UndefinedRatio("input QFI is zero".into()));
            }
            let mut v = to_coeffs(basis, rho.matrix())?;
            let mut dv = to_coeffs(basis, &drho)?;
            for t in first..=t_max {
                let k = t - first;
                if k > 0 {
                    v = s.matrix().dot(&v);
                    dv = s.matrix().dot(&dv);
                }
                let r = basis.operator_real(v.as_slice().expect("contiguous"))?;
                check_state(&r, k)?;
                let dr = basis.operator_real(dv.as_slice().expect("contiguous"))?;
                let f = qfi_from_derivative(&r, &dr, opts.p_floor)?;
                steps.push(t);
                eta.push((f / f_in).max(0.0).sqrt());
                bound.push(zmax.powi(k as i32));
            }
            Metric::Fisher
        }
        Encoding::Pair(a, b) => {
            check_dims(a, s)?;
            check_dims(b, s)?;
            let d_in = trace_norm_distance(a.matrix(), b.matrix())?;
            if d_in.is_nan() || d_in <= 0.0 {
                return Err(Error::UndefinedRatio("input states are identical".into()));
            }
            let mut va = to_coeffs(basis, a.matrix())?;
            let mut vb = to_coeffs(basis, b.matrix())?;
            for t in first..=t_max {
                let k = t - first;
                if k > 0 {
                    va = s.matrix().dot(&va);
                    vb = s.matrix().dot(&vb);
                }
                let ra = basis.operator_real(va.as_slice().expect("contiguous"))?;
                let rb = basis.operator_real(vb.as_slice().expect("contiguous"))?;
                check_state(&ra, k)?;
                check_state(&rb, k)?;
                steps.push(t);
                eta.push(trace_norm_distance(&ra, &rb)? / d_in);
                bound.push(zmax.powi(k as i32));
            }
            Metric::TraceDistance
        }
    };
    Ok(TransferCurve {
        metric,
        sites,
        steps,
        eta,
        bound,
        z_max_modulus: zmax,
    })
}

/// `η_D = D(Φ^k ρ₁, Φ^k ρ₂) / D(ρ₁, ρ₂)` at layer count `t` (`k = t − M + 1`).
pub fn trace_distance_eta(rho1: &DensityMatrix, rho2: &DensityMatrix, s: &Superoperator, t: usize) -> Result<f64> {
    check_dims(rho1, s)?;
    check_dims(rho2, s)?;
    let d_in = trace_norm_distance(rho1.matrix(), rho2.matrix())?;
    if d_in.is_nan() || d_in <= 0.0 {
        return Err(Error::UndefinedRatio("input states are identical".into()));
    }
    let k = applications(t, s.sites())?;
    let a = iterate_channel(rho1, s, k)?;
    let b = iterate_channel(rho2, s, k)?;
    Ok(trace_norm_distance(a.matrix(), b.matrix())? / d_in)
}
