use ndarray::Array1;
use ndarray_linalg::Solve;
use serde::Serialize;

use super::state::DensityMatrix;
use crate::channel::ChannelSpectrum;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, C64};

/// `ρ = Σ_μ f_μ Â_μ` in the (generally non-orthogonal) eigenoperator frame of a channel.
#[derive(Clone, Debug, Serialize)]
pub struct EigenExpansion {
    /// `f_μ`, indexed like the spectrum; `f_0 Â_0 = I/d^M` for every state.
    pub coefficients: Vec<C64>,
    /// `‖Σ_μ f_μ Â_μ − ρ‖_max`.
    pub residual: f64,
}

/// Expand `ρ` over the eigenoperators of `spec` (coefficients from the dual basis).
pub fn eigenbasis_coefficients(rho: &DensityMatrix, spec: &ChannelSpectrum) -> Result<EigenExpansion> {
    let basis = spec.basis();
    if rho.local_dim() != basis.local_dim() || rho.sites() != basis.sites() {
        return Err(Error::Shape("state does not match the channel".into()));
    }
    if spec.is_near_defective() {
        return Err(Error::NearDefective {
            condition: spec.diagonalizability_condition(),
        });
    }
    let r = Array1::from(basis.coefficients(rho.matrix())?);
    let v = spec.eigenvector_matrix();
    let f = v.solve(&r)?;
    let rebuilt = basis.operator(&v.dot(&f).to_vec())?;
    Ok(EigenExpansion {
        residual: max_abs_diff(&rebuilt, rho.matrix()),
        coefficients: f.to_vec(),
    })
}
