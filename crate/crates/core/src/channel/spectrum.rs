use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals};
use serde::Serialize;

use super::Superoperator;
use crate::error::{Error, Result};
use crate::linalg::{singular_values, ComplexMatrix, HermitianBasis, C64, ONE, ZERO};

/// Default threshold `ε`: nontrivial eigenvalues with `|z| ≥ 1 − ε` are peripheral.
pub const DEFAULT_PERIPHERAL_EPS: f64 = 1e-9;

/// Eigenvector condition number above which a spectrum is treated as near-defective.
pub const NEAR_DEFECTIVE_CONDITION: f64 = 1e8;

/// Eigen-decomposition of a channel.
///
/// Index 0 is the trivial pair `(1, I/√(d^M))`. The remaining pairs come from the block on
/// the traceless subspace, so every nontrivial eigenoperator is traceless by construction,
/// including inside a degenerate `z = 1` eigenspace. They are sorted by decreasing modulus.
#[derive(Clone, Debug)]
pub struct ChannelSpectrum {
    basis: Arc<HermitianBasis>,
    eigenvalues: Vec<C64>,
    // column μ holds the basis coefficients of Â_μ
    vectors: Array2<C64>,
    peripheral: Vec<usize>,
    eps: f64,
    condition: f64,
}

/// One row of the spectrum export.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub is_trivial: bool,
    pub is_peripheral: bool,
}

fn sort_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    b.norm().total_cmp(&a.norm()).then(b.arg().total_cmp(&a.arg()))
}

fn dump_failed(m: &Array2<f64>) -> String {
    let path = std::env::temp_dir().join(format!("brickwork-eig-failure-{}.json", std::process::id()));
    let complex = m.mapv(|v| C64::new(v, 0.0));
    match crate::io::save_matrix(&path, &complex) {
        Ok(()) => format!("matrix dumped to {}", path.display()),
        Err(e) => format!("matrix dump failed: {e}"),
    }
}

/// Nontrivial eigenvalues only, sorted by decreasing modulus.
pub fn nontrivial_eigenvalues(s: &Superoperator) -> Result<Vec<C64>> {
    let block = s.nontrivial_block().to_owned();
    if block.is_empty() {
        return Ok(Vec::new());
    }
    let vals = block
        .eigvals()
        .map_err(|e| Error::Numerical(format!("eigensolver failed ({e}); {}", dump_failed(&block))))?;
    let mut vals = vals.to_vec();
    vals.sort_by(sort_key);
    Ok(vals)
}

/// `|z_max|`, the largest nontrivial eigenvalue modulus.
pub fn z_max_modulus(s: &Superoperator) -> Result<f64> {
    Ok(nontrivial_eigenvalues(s)?.first().map_or(0.0, |z| z.norm()))
}

pub fn channel_spectrum(s: &Superoperator, eps: f64) -> Result<ChannelSpectrum> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::validation(
            "eps",
            "peripheral tolerance must be a non-negative number",
        ));
    }
    let basis = Arc::clone(s.basis());
    let n = basis.len();
    let block = s.nontrivial_block().to_owned();
    let (vals, vecs) = if block.is_empty() {
        (Array1::zeros(0), Array2::zeros((0, 0)))
    } else {
        block
            .eig()
            .map_err(|e| Error::Numerical(format!("eigensolver failed ({e}); {}", dump_failed(&block))))?
    };
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| sort_key(&vals[a], &vals[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    eigenvalues.push(ONE);
    let mut vectors = Array2::<C64>::zeros((n, n));
    vectors[[0, 0]] = ONE;
    for (slot, &k) in order.iter().enumerate() {
        eigenvalues.push(vals[k]);
        let col = vecs.column(k);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut v: Vec<C64> = std::iter::once(ZERO).chain(col.iter().map(|z| z / norm)).collect();
        let op = basis.operator(&v)?;
        let phase = phase_of_largest(&op);
        for z in v.iter_mut() {
            *z *= phase.conj();
        }
        for (r, z) in v.into_iter().enumerate() {
            vectors[[r, slot + 1]] = z;
        }
    }
    let condition = if n > 1 {
        let sv = singular_values(&vectors.slice(ndarray::s![1.., 1..]).to_owned())?;
        let smin = *sv.last().unwrap_or(&0.0);
        if smin > 0.0 {
            sv[0] / smin
        } else {
            f64::INFINITY
        }
    } else {
        1.0
    };
    let peripheral = (1..n).filter(|&i| eigenvalues[i].norm() >= 1.0 - eps).collect();
    Ok(ChannelSpectrum {
        basis,
        eigenvalues,
        vectors,
        peripheral,
        eps,
        condition,
    })
}

// Unit phase of the largest-magnitude entry (first one on near-ties).
fn phase_of_largest(op: &ComplexMatrix) -> C64 {
    let max = op.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let pick = op
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(ONE);
    if pick.norm() > 0.0 {
        pick / pick.norm()
    } else {
        ONE
    }
}

impl ChannelSpectrum {
    pub fn basis(&self) -> &Arc<HermitianBasis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn trivial_index(&self) -> usize {
        0
    }

    pub fn peripheral_indices(&self) -> &[usize] {
        &self.peripheral
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Condition number of the eigenvector matrix.
    pub fn diagonalizability_condition(&self) -> f64 {
        self.condition
    }

    pub fn is_near_defective(&self) -> bool {
        self.condition.is_nan() || self.condition > NEAR_DEFECTIVE_CONDITION
    }

    /// Nontrivial eigenvalue of largest modulus.
    pub fn z_max(&self) -> Option<C64> {
        self.eigenvalues.get(1).copied()
    }

    pub fn one_minus_z_max(&self) -> f64 {
        1.0 - self.z_max().map_or(0.0, |z| z.norm())
    }

    /// Basis coefficients of eigenoperator `i` (unit norm).
    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i).to_vec()
    }

    pub fn eigenvector_matrix(&self) -> &Array2<C64> {
        &self.vectors
    }

    /// Eigenoperator `Â_i`, Frobenius norm 1, largest entry real positive.
    pub fn eigenoperator(&self, i: usize) -> Result<ComplexMatrix> {
        self.basis.operator(&self.eigenvector(i))
    }

    pub fn eigenoperators(&self) -> Result<Vec<ComplexMatrix>> {
        (0..self.len()).map(|i| self.eigenoperator(i)).collect()
    }

    pub fn export(&self) -> Vec<SpectrumEntry> {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, z)| SpectrumEntry {
                re: z.re,
                im: z.im,
                modulus: z.norm(),
                is_trivial: i == 0,
                is_peripheral: self.peripheral.contains(&i),
            })
            .collect()
    }
}
