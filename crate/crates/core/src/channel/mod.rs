//! The lightcone channel `Φ_M`, the boundary channels `Λ_M^{in/out}`, and their spectra.

mod checks;
mod spectrum;

use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::linalg::{
    apply_two_site, identity, kron, singular_values_real, ComplexMatrix, HermitianBasis, Side, C64,
    DEFAULT_MAX_SUPEROPERATOR_DIM,
};

pub use checks::{
    cluster_means, spectrum_nesting_check, validate_channel, ChannelReport, NestingReport, CHOI_TOL, UNITALITY_TOL,
};
pub use spectrum::{
    channel_spectrum, nontrivial_eigenvalues, z_max_modulus, ChannelSpectrum, SpectrumEntry, DEFAULT_PERIPHERAL_EPS,
    NEAR_DEFECTIVE_CONDITION,
};

/// Largest imaginary part tolerated in a superoperator built from a Hermiticity-preserving map.
pub const REALITY_TOL: f64 = 1e-10;

/// Real matrix of a Hermiticity-preserving map on `M` qudits, `S[μ, ν] = Tr[Γ^μ Φ(Γ^ν)]`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    basis: Arc<HermitianBasis>,
    matrix: Array2<f64>,
    imag_residual: f64,
}

impl Superoperator {
    pub fn from_real(basis: Arc<HermitianBasis>, matrix: Array2<f64>) -> Result<Self> {
        let n = basis.len();
        if matrix.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "superoperator of shape {:?} for a basis of {n} elements",
                matrix.dim()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("superoperator has non-finite entries".into()));
        }
        Ok(Superoperator {
            basis,
            matrix,
            imag_residual: 0.0,
        })
    }

    fn from_complex(basis: Arc<HermitianBasis>, m: Array2<C64>) -> Result<Self> {
        let imag = m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
        if imag > REALITY_TOL {
            return Err(Error::Numerical(format!(
                "superoperator is not real in the Hermitian basis (max imaginary part {imag:.2e})"
            )));
        }
        let mut s = Self::from_real(basis, m.mapv(|z| z.re))?;
        s.imag_residual = imag;
        Ok(s)
    }

    /// Superoperator of `X ↦ Σ_k K_k X K_k†`.
    pub fn from_kraus(basis: Arc<HermitianBasis>, kraus: &[ComplexMatrix]) -> Result<Self> {
        let m = basis.represent_kraus(kraus)?;
        Self::from_complex(basis, m)
    }

    pub fn identity(local_dim: usize, sites: usize) -> Result<Self> {
        let basis = Arc::new(HermitianBasis::new(local_dim, sites)?);
        let n = basis.len();
        Self::from_real(basis, Array2::eye(n))
    }

    pub fn local_dim(&self) -> usize {
        self.basis.local_dim()
    }

    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn basis(&self) -> &Arc<HermitianBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Largest imaginary part discarded when the matrix was built.
    pub fn imag_residual(&self) -> f64 {
        self.imag_residual
    }

    /// Block acting on the traceless subspace (indices `1..`).
    pub fn nontrivial_block(&self) -> ArrayView2<'_, f64> {
        self.matrix.slice(s![1.., 1..])
    }

    /// Apply the map to the coefficient vector of an operator.
    pub fn apply_coefficients(&self, coeffs: &[C64]) -> Result<Vec<C64>> {
        if coeffs.len() != self.matrix.nrows() {
            return Err(Error::Shape(format!(
                "{} coefficients for a superoperator of size {}",
                coeffs.len(),
                self.matrix.nrows()
            )));
        }
        Ok(self
            .matrix
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(coeffs).map(|(s, c)| c * *s).sum())
            .collect())
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let coeffs = self.basis.coefficients(x)?;
        self.basis.operator(&self.apply_coefficients(&coeffs)?)
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.basis.local_dim() != other.basis.local_dim() || self.basis.sites() != other.basis.sites() {
            return Err(Error::Shape("composing superoperators on different spaces".into()));
        }
        Ok(Superoperator {
            basis: Arc::clone(&self.basis),
            matrix: self.matrix.dot(&other.matrix),
            imag_residual: self.imag_residual.max(other.imag_residual),
        })
    }
}

/// `W_{M+1} = U_{0,1} U_{1,2} ⋯ U_{M−1,M}`, the staircase unitary on `M + 1` sites.
pub fn staircase_unitary(gate: &Gate, sites: usize) -> ComplexMatrix {
    let d = gate.local_dim();
    let n_sites = sites + 1;
    let mut w = identity(d.pow(n_sites as u32));
    for first in (0..sites).rev() {
        apply_two_site(&mut w, gate.matrix().view(), first, n_sites, d, Side::Left);
    }
    w
}

/// `Φ_M[ρ] = Tr_{q₁}{W_{M+1} (ρ ⊗ I/d) W_{M+1}†}` in the Hermitian basis.
pub fn build_phi(gate: &Gate, sites: usize) -> Result<Superoperator> {
    build_phi_with_cap(gate, sites, DEFAULT_MAX_SUPEROPERATOR_DIM)
}

pub fn build_phi_with_cap(gate: &Gate, sites: usize, max_dim: usize) -> Result<Superoperator> {
    let basis = Arc::new(HermitianBasis::with_cap(gate.local_dim(), sites, max_dim)?);
    let d = gate.local_dim();
    let n = basis.operator_dim();
    let w = staircase_unitary(gate, sites);
    // K_{kl}[a, c] = ⟨k a| W |c l⟩ / √d
    let scale = 1.0 / (d as f64).sqrt();
    let kraus: Vec<ComplexMatrix> = (0..d)
        .flat_map(|k| (0..d).map(move |l| (k, l)))
        .map(|(k, l)| Array2::from_shape_fn((n, n), |(a, cc)| w[[k * n + a, cc * d + l]] * scale))
        .collect();
    Superoperator::from_kraus(basis, &kraus)
}

/// `Φ₁` diagonal `(xx, yy, zz)` for `V(J)`: `(sin2Jy·sin2Jz, sin2Jz·sin2Jx, sin2Jx·sin2Jy)`.
pub fn phi1_qubit_analytic(jx: f64, jy: f64, jz: f64) -> [f64; 3] {
    let (sx, sy, sz) = ((2.0 * jx).sin(), (2.0 * jy).sin(), (2.0 * jz).sin());
    [sy * sz, sz * sx, sx * sy]
}

/// Singular values of the nontrivial block, descending.
pub fn singular_values_phi(s: &Superoperator) -> Result<Vec<f64>> {
    singular_values_real(&s.nontrivial_block().to_owned())
}

// Layer inserted by the boundary recursions when going from M to M + 1 sites: gates on
// (1,2), (3,4), … for odd M and on (0,1), (2,3), … for even M, never touching site M.
fn boundary_layer(gate: &Gate, m: usize, mirrored: bool) -> ComplexMatrix {
    let d = gate.local_dim();
    let n_sites = m + 1;
    let mut l = identity(d.pow(n_sites as u32));
    // Gates on (1,2),(3,4),… for odd m and (0,1),(2,3),… for even m, never touching site m;
    // the outgoing layer is the mirror image.
    let mut first = if m % 2 == 1 { 1 } else { 0 };
    while first + 1 < m {
        let at = if mirrored { m - 1 - first } else { first };
        apply_two_site(&mut l, gate.matrix().view(), at, n_sites, d, Side::Left);
        first += 2;
    }
    l
}

/// Unitary of `Λ_M^{in}`; identity for `M < 3`.
pub fn lambda_in_unitary(gate: &Gate, sites: usize) -> ComplexMatrix {
    let d = gate.local_dim();
    if sites < 3 {
        return identity(d.pow(sites as u32));
    }
    let mut lam = kron(gate.matrix(), &identity(d));
    for m in 3..sites {
        lam = kron(&lam, &identity(d)).dot(&boundary_layer(gate, m, false));
    }
    lam
}

/// Unitary of `Λ_M^{out}`; identity for `M < 3`.
pub fn lambda_out_unitary(gate: &Gate, sites: usize) -> ComplexMatrix {
    let d = gate.local_dim();
    if sites < 3 {
        return identity(d.pow(sites as u32));
    }
    let mut lam = kron(&identity(d), gate.matrix());
    for m in 3..sites {
        lam = boundary_layer(gate, m, true).dot(&kron(&identity(d), &lam));
    }
    lam
}

pub fn lambda_in(gate: &Gate, sites: usize) -> Result<Superoperator> {
    let basis = Arc::new(HermitianBasis::new(gate.local_dim(), sites)?);
    Superoperator::from_kraus(basis, &[lambda_in_unitary(gate, sites)])
}

pub fn lambda_out(gate: &Gate, sites: usize) -> Result<Superoperator> {
    let basis = Arc::new(HermitianBasis::new(gate.local_dim(), sites)?);
    Superoperator::from_kraus(basis, &[lambda_out_unitary(gate, sites)])
}
