use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, c, eigvalsh, hermiticity_residual, identity, kron, kron_all, paulis, trace, ComplexMatrix, C64,
};

/// Hermiticity and trace tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// Most negative eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// A validated `M`-qudit density matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    local_dim: usize,
    sites: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(local_dim: usize, sites: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dim = local_dim.pow(sites as u32);
        if matrix.dim() != (dim, dim) {
            return Err(Error::Shape(format!(
                "density matrix of shape {:?} for {sites} sites of dimension {local_dim}",
                matrix.dim()
            )));
        }
        crate::linalg::ensure_finite(&matrix, "density matrix")?;
        let herm = hermiticity_residual(&matrix);
        if herm > STATE_TOL {
            return Err(Error::validation(
                "state",
                format!("not Hermitian (residual {herm:.2e})"),
            ));
        }
        let tr = trace(&matrix);
        if (tr - c(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::validation("state", format!("trace {tr} is not 1")));
        }
        let min = eigvalsh(&matrix)?.first().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(Error::validation("state", format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix {
            local_dim,
            sites,
            matrix,
        })
    }

    pub fn maximally_mixed(local_dim: usize, sites: usize) -> Self {
        let dim = local_dim.pow(sites as u32);
        DensityMatrix {
            local_dim,
            sites,
            matrix: identity(dim).mapv(|z| z / dim as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalised vector `ψ`.
    pub fn pure(local_dim: usize, sites: usize, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::validation("state", "zero vector"));
        }
        let n = psi.len();
        let m = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / (norm * norm));
        Self::new(local_dim, sites, m)
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Peripheral7,
    Lossy7,
    PhasePlus,
    Custom,
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateKind::Peripheral7 => "peripheral7",
            StateKind::Lossy7 => "lossy7",
            StateKind::PhasePlus => "phase_plus",
            StateKind::Custom => "custom",
        })
    }
}

type Generator = dyn Fn(f64) -> Result<ComplexMatrix> + Send + Sync;

/// A `λ`-parameterised family of density matrices.
#[derive(Clone)]
pub struct StateFamily {
    kind: StateKind,
    local_dim: usize,
    sites: usize,
    lambda0: f64,
    generator: Arc<Generator>,
}

impl fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateFamily")
            .field("kind", &self.kind)
            .field("local_dim", &self.local_dim)
            .field("sites", &self.sites)
            .field("lambda0", &self.lambda0)
            .finish()
    }
}

/// Default evaluation point `λ₀`.
pub const DEFAULT_LAMBDA0: f64 = 0.3;

/// The rotated Pauli triple `(wσ^x w†, wσ^y w†, wσ^z w†)`.
fn rotated_paulis(w: &ComplexMatrix) -> Result<[ComplexMatrix; 3]> {
    if w.dim() != (2, 2) {
        return Err(Error::Shape("w must be a 2x2 unitary".into()));
    }
    let wd = adjoint(w);
    Ok(paulis().map(|p| w.dot(&p).dot(&wd)))
}

/// Eigenoperators `Â₂`, `Â₃` of the `lossless7` channel for rotation `w` and `θ̄ = θ_Q + θ_R`.
pub fn lossless_lossy_axes(w: &ComplexMatrix, theta_bar: f64) -> Result<[ComplexMatrix; 2]> {
    let [x, y, _] = rotated_paulis(w)?;
    let (cs, sn) = ((theta_bar / 2.0).cos(), (theta_bar / 2.0).sin());
    Ok([
        x.mapv(|z| z * cs) + y.mapv(|z| z * sn),
        x.mapv(|z| z * -sn) + y.mapv(|z| z * cs),
    ])
}

impl StateFamily {
    /// Wrap an arbitrary generator. Every call is validated as a density matrix.
    pub fn custom<F>(local_dim: usize, sites: usize, lambda0: f64, generator: F) -> Self
    where
        F: Fn(f64) -> Result<ComplexMatrix> + Send + Sync + 'static,
    {
        StateFamily {
            kind: StateKind::Custom,
            local_dim,
            sites,
            lambda0,
            generator: Arc::new(generator),
        }
    }

    /// `ρ = ½[I + tanh λ · wσ^z w†]`, supported on the `z = −1` eigenoperator of `lossless7`.
    pub fn peripheral7(w: &ComplexMatrix, lambda0: f64) -> Result<Self> {
        let [_, _, a1] = rotated_paulis(w)?;
        let mut fam = Self::custom(2, 1, lambda0, move |l| {
            Ok((identity(2) + a1.mapv(|z| z * l.tanh())).mapv(|z| z * 0.5))
        });
        fam.kind = StateKind::Peripheral7;
        Ok(fam)
    }

    /// `ρ = ½[I + f(Â₂ + Â₃)]` with `f = tanh λ / √2`, supported on the contracting pair.
    pub fn lossy7(w: &ComplexMatrix, theta_bar: f64, lambda0: f64) -> Result<Self> {
        let [a2, a3] = lossless_lossy_axes(w, theta_bar)?;
        let axis = a2 + a3;
        let mut fam = Self::custom(2, 1, lambda0, move |l| {
            let f = l.tanh() / std::f64::consts::SQRT_2;
            Ok((identity(2) + axis.mapv(|z| z * f)).mapv(|z| z * 0.5))
        });
        fam.kind = StateKind::Lossy7;
        Ok(fam)
    }

    /// `(e^{iλσ^z}|+⟩⟨+|e^{−iλσ^z})^{⊗M}`.
    pub fn phase_plus(sites: usize, lambda0: f64) -> Result<Self> {
        if sites == 0 {
            return Err(Error::validation("M", "number of sites must be at least 1"));
        }
        let mut fam = Self::custom(2, sites, lambda0, move |l| {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let psi = [c(0.0, l).exp() * h, c(0.0, -l).exp() * h];
            let one = Array2::from_shape_fn((2, 2), |(i, j)| psi[i] * psi[j].conj());
            Ok(kron_all(std::iter::repeat_n(&one, sites)))
        });
        fam.kind = StateKind::PhasePlus;
        Ok(fam)
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Self {
        self.lambda0 = lambda0;
        self
    }

    pub fn state(&self, lambda: f64) -> Result<DensityMatrix> {
        DensityMatrix::new(self.local_dim, self.sites, (self.generator)(lambda)?)
    }
}

/// `ρ ⊗ σ` for validated states.
pub fn tensor_states(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    if a.local_dim != b.local_dim {
        return Err(Error::Shape("tensoring states of different local dimension".into()));
    }
    Ok(DensityMatrix {
        local_dim: a.local_dim,
        sites: a.sites + b.sites,
        matrix: kron(&a.matrix, &b.matrix),
    })
}
