//! Dense complex matrix substrate.
//!
//! Matrices are plain `ndarray` arrays of `Complex64`. Multi-qudit operators
//! use the convention that site 0 is the outermost (most significant) tensor
//! factor, so `kron(a, b)` places `a` on the lower-numbered site.

mod basis;
mod random;

pub use basis::{HermitianBasis, DEFAULT_MAX_SUPEROPERATOR_DIM};
pub use random::{sample_cue, RngStream};

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewMut2, ShapeBuilder};
use ndarray_linalg::{EigValsh, Eigh, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = Array2<C64>;

/// Largest number of entries any single dense matrix may hold (1 GiB of complex doubles).
pub const MAX_MATRIX_ENTRIES: usize = 1 << 26;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    Array2::eye(n)
}

pub fn adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diag().sum()
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `max |U†U - I|`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    if u.ncols() != n {
        return f64::INFINITY;
    }
    max_abs_diff(&adjoint(u).dot(u), &identity(n))
}

pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &adjoint(m))
}

pub fn ensure_finite(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation(what, "matrix has non-finite entries"))
    }
}

pub fn ensure_square(m: &ComplexMatrix, what: &str) -> Result<usize> {
    if m.nrows() == m.ncols() {
        Ok(m.nrows())
    } else {
        Err(Error::Shape(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Kronecker product with `a`'s indices outermost. Fails if the result would exceed
/// [`MAX_MATRIX_ENTRIES`].
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    let entries = rows.zip(cols).and_then(|(r, c)| r.checked_mul(c));
    match entries {
        Some(n) if n <= MAX_MATRIX_ENTRIES => Ok(kron(a, b)),
        other => Err(Error::SizeLimit {
            what: "tensor product entries",
            requested: other.unwrap_or(usize::MAX),
            cap: MAX_MATRIX_ENTRIES,
        }),
    }
}

/// Unchecked Kronecker product for internal use where sizes are already bounded.
pub(crate) fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            let mut block = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.zip_mut_with(b, |o, &bv| *o = aij * bv);
        }
    }
    out
}

pub(crate) fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors.into_iter().fold(identity(1), |acc, f| kron(&acc, f))
}

/// Trace out the outermost tensor factor of dimension `d_first`.
pub fn partial_trace_first(x: &ComplexMatrix, d_first: usize) -> Result<ComplexMatrix> {
    let n = ensure_square(x, "partial trace input")?;
    if d_first == 0 || n % d_first != 0 {
        return Err(Error::Shape(format!(
            "dimension {n} is not divisible by traced factor {d_first}"
        )));
    }
    let rest = n / d_first;
    let mut out = Array2::zeros((rest, rest));
    for k in 0..d_first {
        out += &x.slice(s![k * rest..(k + 1) * rest, k * rest..(k + 1) * rest]);
    }
    Ok(out)
}

/// Trace out the innermost tensor factor of dimension `d_last`.
pub fn partial_trace_last(x: &ComplexMatrix, d_last: usize) -> Result<ComplexMatrix> {
    let n = ensure_square(x, "partial trace input")?;
    if d_last == 0 || n % d_last != 0 {
        return Err(Error::Shape(format!(
            "dimension {n} is not divisible by traced factor {d_last}"
        )));
    }
    let rest = n / d_last;
    Ok(Array2::from_shape_fn((rest, rest), |(i, j)| {
        (0..d_last).map(|k| x[[i * d_last + k, j * d_last + k]]).sum()
    }))
}

/// Singular values of a complex matrix, descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.to_vec())
}

pub fn singular_values_real(m: &Array2<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.to_vec())
}

/// Trace distance `½‖X − Y‖₁`.
pub fn trace_norm_distance(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!(
            "trace distance of {:?} and {:?}",
            x.dim(),
            y.dim()
        )));
    }
    ensure_square(x, "trace distance operand")?;
    let diff = x - y;
    Ok(0.5 * singular_values(&diff)?.iter().sum::<f64>())
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(m.eigvalsh(UPLO::Lower)?.to_vec())
}

/// Eigen-decomposition of a Hermitian matrix (ascending eigenvalues, eigenvector columns).
pub fn eigh(m: &ComplexMatrix) -> Result<(Array1<f64>, ComplexMatrix)> {
    // LAPACK sees a row-major buffer as the transpose, which conjugates the eigenvectors.
    let mut f = Array2::zeros(m.dim().f());
    f.assign(m);
    Ok(f.eigh(UPLO::Lower)?)
}

/// `exp(factor · H)` for Hermitian `H`.
pub fn expm_hermitian(h: &ComplexMatrix, factor: C64) -> Result<ComplexMatrix> {
    let herm = (h + &adjoint(h)).mapv(|z| z * 0.5);
    let (vals, vecs) = eigh(&herm)?;
    let scaled = Array2::from_shape_fn(vecs.dim(), |(i, j)| vecs[[i, j]] * (factor * vals[j]).exp());
    Ok(scaled.dot(&adjoint(&vecs)))
}

/// Von Neumann entropy (natural log) from a list of probabilities.
pub fn entropy_from_probabilities(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|&x| x > 1e-300).map(|x| -x * x.ln()).sum()
}

/// Apply a two-site gate to the row (or column) index of `m`.
///
/// The row index of `m` is read as `n_sites` qudits of dimension `d`; the gate acts on
/// sites `first` and `first + 1`. With [`Side::Right`] the update is `m ← m · gate†`.
pub(crate) fn apply_two_site(
    m: &mut ComplexMatrix,
    gate: ArrayView2<C64>,
    first: usize,
    n_sites: usize,
    d: usize,
    side: Side,
) {
    if !m.is_standard_layout() {
        *m = m.as_standard_layout().into_owned();
    }
    if side == Side::Right {
        let q = d * d;
        let right = d.pow((n_sites - first - 2) as u32);
        let gc = gate.mapv(|z| z.conj());
        let mut buf = vec![ZERO; q];
        let slab = m.as_slice_mut().expect("standard layout");
        for chunk in slab.chunks_exact_mut(q * right) {
            for r in 0..right {
                for (p, b) in buf.iter_mut().enumerate() {
                    *b = chunk[p * right + r];
                }
                for a in 0..q {
                    chunk[a * right + r] = (0..q).map(|b| gc[[a, b]] * buf[b]).sum();
                }
            }
        }
        return;
    }
    let q = d * d;
    let left = d.pow(first as u32);
    let cols = m.ncols();
    let inner = d.pow((n_sites - first - 2) as u32) * cols;
    let slab = m.as_slice_mut().expect("standard layout");
    let mut out = Array2::<C64>::zeros((q, inner));
    for chunk in slab.chunks_exact_mut(q * inner) {
        let mut x = ArrayViewMut2::from_shape((q, inner), chunk).expect("block shape");
        general_mat_mul(C64::new(1.0, 0.0), &gate, &x, ZERO, &mut out);
        x.assign(&out);
    }
    debug_assert_eq!(slab.len(), left * q * inner);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    Left,
    Right,
}

/// Single-qubit Pauli matrices `[X, Y, Z]`.
pub fn paulis() -> [ComplexMatrix; 3] {
    let x = ndarray::arr2(&[[ZERO, ONE], [ONE, ZERO]]);
    let y = ndarray::arr2(&[[ZERO, -I], [I, ZERO]]);
    let z = ndarray::arr2(&[[ONE, ZERO], [ZERO, -ONE]]);
    [x, y, z]
}
