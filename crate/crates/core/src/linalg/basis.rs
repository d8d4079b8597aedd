use ndarray::Array2;

use super::{kron_all, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Orthonormal Hermitian operator basis on `M` qudits of dimension `d`.
///
/// The single-site set is the normalised generalised Gell-Mann family: the identity
/// `I/√d` first, then for each `k = 1..d` the symmetric and antisymmetric off-diagonal
/// pairs `(j, k)` with `j < k`, followed by the diagonal element of level `k`. For `d = 2`
/// that is `{I, X, Y, Z}/√2`, for `d = 3` the usual Gell-Mann order `λ₁…λ₈` scaled by `1/√2`.
///
/// Multi-site element `μ` is `Γ^{μ₀} ⊗ … ⊗ Γ^{μ_{M−1}}` where `μ = Σ μ_s (d²)^{M−1−s}`.
/// Elements are built lazily; the coefficient transforms below never materialise the
/// `d^{2M}` products.
#[derive(Clone, Debug)]
pub struct HermitianBasis {
    local_dim: usize,
    sites: usize,
    single: Vec<ComplexMatrix>,
    // flat matrix index (row * D + col) -> site-interleaved index
    interleave: Vec<usize>,
}

/// Largest superoperator dimension `d^{2M}` accepted by default.
pub const DEFAULT_MAX_SUPEROPERATOR_DIM: usize = 4096;

impl HermitianBasis {
    pub fn new(local_dim: usize, sites: usize) -> Result<Self> {
        Self::with_cap(local_dim, sites, DEFAULT_MAX_SUPEROPERATOR_DIM)
    }

    pub fn with_cap(local_dim: usize, sites: usize, max_dim: usize) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::validation("d", "local dimension must be at least 2"));
        }
        if sites < 1 {
            return Err(Error::validation("M", "number of sites must be at least 1"));
        }
        let q = local_dim * local_dim;
        let len = (q as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
        if len > max_dim as u128 {
            return Err(Error::SizeLimit {
                what: "superoperator dimension d^(2M)",
                requested: usize::try_from(len).unwrap_or(usize::MAX),
                cap: max_dim,
            });
        }
        let single = gell_mann(local_dim);
        let op_dim = local_dim.pow(sites as u32);
        let mut interleave = vec![0usize; op_dim * op_dim];
        for a in 0..op_dim {
            for b in 0..op_dim {
                let mut idx = 0;
                for s in 0..sites {
                    let shift = local_dim.pow((sites - 1 - s) as u32);
                    let (da, db) = ((a / shift) % local_dim, (b / shift) % local_dim);
                    idx = idx * q + da * local_dim + db;
                }
                interleave[a * op_dim + b] = idx;
            }
        }
        Ok(HermitianBasis {
            local_dim,
            sites,
            single,
            interleave,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Number of basis elements, `d^{2M}`.
    pub fn len(&self) -> usize {
        self.interleave.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Matrix dimension of each element, `d^M`.
    pub fn operator_dim(&self) -> usize {
        self.local_dim.pow(self.sites as u32)
    }

    pub fn single_site(&self) -> &[ComplexMatrix] {
        &self.single
    }

    /// Per-site indices of multi-site element `mu`.
    pub fn digits(&self, mu: usize) -> Vec<usize> {
        let q = self.local_dim * self.local_dim;
        (0..self.sites)
            .map(|s| (mu / q.pow((self.sites - 1 - s) as u32)) % q)
            .collect()
    }

    pub fn element(&self, mu: usize) -> ComplexMatrix {
        kron_all(self.digits(mu).iter().map(|&k| &self.single[k]))
    }

    pub fn elements(&self) -> Vec<ComplexMatrix> {
        (0..self.len()).map(|mu| self.element(mu)).collect()
    }

    /// Coefficients `c_μ = Tr[Γ^μ X]`, so that `X = Σ_μ c_μ Γ^μ`.
    pub fn coefficients(&self, x: &ComplexMatrix) -> Result<Vec<C64>> {
        let n = self.operator_dim();
        if x.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "operator of shape {:?} does not match basis dimension {n}",
                x.dim()
            )));
        }
        let mut t = vec![ZERO; self.len()];
        for (flat, v) in x.iter().enumerate() {
            t[self.interleave[flat]] = *v;
        }
        self.mode_products(&mut t, &self.coefficient_kernel());
        Ok(t)
    }

    /// Real parts of [`coefficients`](Self::coefficients); exact for Hermitian `x`.
    pub fn real_coefficients(&self, x: &ComplexMatrix) -> Result<Vec<f64>> {
        Ok(self.coefficients(x)?.into_iter().map(|z| z.re).collect())
    }

    /// `Σ_μ c_μ Γ^μ`.
    pub fn operator(&self, coeffs: &[C64]) -> Result<ComplexMatrix> {
        if coeffs.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a basis of {} elements",
                coeffs.len(),
                self.len()
            )));
        }
        let mut t = coeffs.to_vec();
        self.mode_products(&mut t, &self.synthesis_kernel_transposed().reversed_axes());
        let n = self.operator_dim();
        Ok(Array2::from_shape_fn((n, n), |(a, b)| t[self.interleave[a * n + b]]))
    }

    pub fn operator_real(&self, coeffs: &[f64]) -> Result<ComplexMatrix> {
        let z: Vec<C64> = coeffs.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.operator(&z)
    }

    /// Matrix of the map `X ↦ Σ_k K_k X K_k†` in this basis, `S[μ, ν] = Tr[Γ^μ Σ_k K_k Γ^ν K_k†]`.
    pub(crate) fn represent_kraus(&self, kraus: &[ComplexMatrix]) -> Result<Array2<C64>> {
        let n = self.operator_dim();
        if let Some(k) = kraus.iter().find(|k| k.dim() != (n, n)) {
            return Err(Error::Shape(format!(
                "Kraus operator {:?} on a {n}-dimensional space",
                k.dim()
            )));
        }
        let len = self.len();
        let mut t = Array2::<C64>::zeros((len, len));
        for k in kraus {
            let kc = k.mapv(|z| z.conj());
            for a in 0..n {
                for b in 0..n {
                    let r = self.interleave[a * n + b];
                    let mut row = t.row_mut(r);
                    for cc in 0..n {
                        let kac = k[[a, cc]];
                        if kac == ZERO {
                            continue;
                        }
                        for e in 0..n {
                            row[self.interleave[cc * n + e]] += kac * kc[[b, e]];
                        }
                    }
                }
            }
        }
        let (g_left, g_right) = (self.coefficient_kernel(), self.synthesis_kernel_transposed());
        let mut buf = vec![ZERO; len];
        for col in 0..len {
            for (r, b) in buf.iter_mut().enumerate() {
                *b = t[[r, col]];
            }
            self.mode_products(&mut buf, &g_left);
            for (r, b) in buf.iter().enumerate() {
                t[[r, col]] = *b;
            }
        }
        for mut row in t.rows_mut() {
            let slice = row.as_slice_mut().expect("standard layout");
            self.mode_products(slice, &g_right);
        }
        Ok(t)
    }

    // G[μ, (a, b)] = Γ^μ[b, a]
    fn coefficient_kernel(&self) -> Array2<C64> {
        let d = self.local_dim;
        Array2::from_shape_fn((d * d, d * d), |(mu, ab)| self.single[mu][[ab % d, ab / d]])
    }

    // G[μ, (a, b)] = Γ^μ[a, b]
    fn synthesis_kernel_transposed(&self) -> Array2<C64> {
        let d = self.local_dim;
        Array2::from_shape_fn((d * d, d * d), |(mu, ab)| self.single[mu][[ab / d, ab % d]])
    }

    fn mode_products(&self, t: &mut [C64], g: &Array2<C64>) {
        let q = self.local_dim * self.local_dim;
        let mut buf = vec![ZERO; q];
        for s in 0..self.sites {
            let stride = q.pow((self.sites - 1 - s) as u32);
            let block = stride * q;
            for outer in (0..t.len()).step_by(block) {
                for inner in 0..stride {
                    for (i, b) in buf.iter_mut().enumerate() {
                        *b = t[outer + i * stride + inner];
                    }
                    for i in 0..q {
                        t[outer + i * stride + inner] = (0..q).map(|j| g[[i, j]] * buf[j]).sum();
                    }
                }
            }
        }
    }
}

/// Normalised generalised Gell-Mann matrices for one qudit, identity first.
fn gell_mann(d: usize) -> Vec<ComplexMatrix> {
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    out.push(Array2::eye(d).mapv(|z: C64| z / (d as f64).sqrt()));
    for k in 1..d {
        for j in 0..k {
            let mut sym = Array2::zeros((d, d));
            sym[[j, k]] = C64::new(norm, 0.0);
            sym[[k, j]] = C64::new(norm, 0.0);
            out.push(sym);
            let mut anti = Array2::zeros((d, d));
            anti[[j, k]] = C64::new(0.0, -norm);
            anti[[k, j]] = C64::new(0.0, norm);
            out.push(anti);
        }
        let scale = (2.0 / (k * (k + 1)) as f64).sqrt() * norm;
        let mut diag = Array2::zeros((d, d));
        for j in 0..k {
            diag[[j, j]] = C64::new(scale, 0.0);
        }
        diag[[k, k]] = C64::new(-(k as f64) * scale, 0.0);
        out.push(diag);
    }
    out
}
