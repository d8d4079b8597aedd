//! Two-qudit gate families and operator-entanglement diagnostics.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, c, expm_hermitian, identity, kron, paulis, sample_cue, singular_values, unitarity_residual, ComplexMatrix,
    HermitianBasis, C64, ONE, ZERO,
};

/// Unitarity tolerance for gates and their local factors.
pub const UNITARY_TOL: f64 = 1e-10;

/// Default tolerance on the space-direction unitarity residual.
pub const DUAL_UNITARY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateFamily {
    Kak,
    Swap,
    Qutrit24,
    Lossless7,
    Explicit,
    Haar,
}

impl fmt::Display for GateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GateFamily::Kak => "kak",
            GateFamily::Swap => "swap",
            GateFamily::Qutrit24 => "qutrit24",
            GateFamily::Lossless7 => "lossless7",
            GateFamily::Explicit => "explicit",
            GateFamily::Haar => "haar",
        };
        f.write_str(name)
    }
}

/// A two-qudit unitary together with how it was built.
#[derive(Clone, Debug)]
pub struct Gate {
    local_dim: usize,
    matrix: ComplexMatrix,
    family: GateFamily,
    params: Vec<f64>,
}

impl Gate {
    /// Wrap a `d² × d²` matrix, checking unitarity to [`UNITARY_TOL`].
    pub fn new(local_dim: usize, matrix: ComplexMatrix, family: GateFamily, params: Vec<f64>) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::validation("d", "local dimension must be at least 2"));
        }
        let dim = local_dim * local_dim;
        if matrix.dim() != (dim, dim) {
            return Err(Error::Shape(format!(
                "gate for d={local_dim} must be {dim}x{dim}, got {:?}",
                matrix.dim()
            )));
        }
        crate::linalg::ensure_finite(&matrix, "gate")?;
        let residual = unitarity_residual(&matrix);
        if residual > UNITARY_TOL {
            return Err(Error::validation(
                "gate",
                format!("matrix is not unitary (residual {residual:.2e})"),
            ));
        }
        Ok(Gate {
            local_dim,
            matrix,
            family,
            params,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn family(&self) -> GateFamily {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }
}

fn check_local(u: &ComplexMatrix, d: usize, name: &str) -> Result<()> {
    if u.dim() != (d, d) {
        return Err(Error::Shape(format!("local unitary `{name}` must be {d}x{d}")));
    }
    let r = unitarity_residual(u);
    if r > UNITARY_TOL {
        return Err(Error::validation(
            name,
            format!("local factor is not unitary (residual {r:.2e})"),
        ));
    }
    Ok(())
}

/// Single-qudit unitary `exp(−i Σ_k θ_k Γ^k)` over the traceless basis elements
/// (3 coordinates for qubits, 8 for qutrits).
pub fn local_unitary(d: usize, coords: &[f64]) -> Result<ComplexMatrix> {
    if coords.len() != d * d - 1 {
        return Err(Error::validation(
            "params",
            format!(
                "a d={d} local unitary takes {} coordinates, got {}",
                d * d - 1,
                coords.len()
            ),
        ));
    }
    let basis = HermitianBasis::new(d, 1)?;
    let mut h = Array2::<C64>::zeros((d, d));
    for (theta, g) in coords.iter().zip(&basis.single_site()[1..]) {
        h.scaled_add(c(*theta, 0.0), g);
    }
    expm_hermitian(&h, c(0.0, -1.0))
}

/// `V(J) = exp(i (Jx XX + Jy YY + Jz ZZ))`, built as the product of the three commuting factors.
pub fn kak_interaction(j: [f64; 3]) -> ComplexMatrix {
    let mut v = identity(4);
    for (jmu, p) in j.iter().zip(paulis().iter()) {
        let pp = kron(p, p);
        let factor = identity(4).mapv(|z| z * jmu.cos()) + pp.mapv(|z| z * c(0.0, jmu.sin()));
        v = v.dot(&factor);
    }
    v
}

fn check_j_range(j: &[f64]) -> Result<()> {
    for (k, &x) in j.iter().enumerate() {
        if !x.is_finite() || x.abs() > FRAC_PI_2 + 1e-12 {
            return Err(Error::validation(
                format!("J[{k}]"),
                format!("{x} outside [-pi/2, pi/2]"),
            ));
        }
    }
    Ok(())
}

/// Map an angle onto `[−π/2, π/2)`; `V(J)` is invariant under `J → J + π` up to a global sign.
pub fn wrap_coupling(x: f64) -> f64 {
    let wrapped = (x + FRAC_PI_2).rem_euclid(std::f64::consts::PI) - FRAC_PI_2;
    if wrapped >= FRAC_PI_2 {
        wrapped - std::f64::consts::PI
    } else {
        wrapped
    }
}

/// Two-qubit gate `(u′ ⊗ u) V(J) (v ⊗ v′)`.
pub fn kak_gate(
    j: [f64; 3],
    u: &ComplexMatrix,
    u_p: &ComplexMatrix,
    v: &ComplexMatrix,
    v_p: &ComplexMatrix,
) -> Result<Gate> {
    check_j_range(&j)?;
    for (m, name) in [(u, "u"), (u_p, "u_p"), (v, "v"), (v_p, "v_p")] {
        check_local(m, 2, name)?;
    }
    let m = kron(u_p, u).dot(&kak_interaction(j)).dot(&kron(v, v_p));
    Gate::new(2, m, GateFamily::Kak, j.to_vec())
}

/// `kak` gate from a flat parameter vector: `[Jx, Jy, Jz]` (identity locals) or
/// `[Jx, Jy, Jz, u(3), u′(3), v(3), v′(3)]` with locals as Hermitian-exponent coordinates.
pub fn kak_gate_from_params(params: &[f64]) -> Result<Gate> {
    let j = [params.first(), params.get(1), params.get(2)];
    let j = match j {
        [Some(&a), Some(&b), Some(&cc)] => [a, b, cc],
        _ => return Err(Error::validation("params", "kak needs at least 3 parameters")),
    };
    let locals = match params.len() {
        3 => [identity(2), identity(2), identity(2), identity(2)],
        15 => [
            local_unitary(2, &params[3..6])?,
            local_unitary(2, &params[6..9])?,
            local_unitary(2, &params[9..12])?,
            local_unitary(2, &params[12..15])?,
        ],
        n => {
            return Err(Error::validation(
                "params",
                format!("kak takes 3 or 15 parameters, got {n}"),
            ))
        }
    };
    let [u, u_p, v, v_p] = locals;
    let mut g = kak_gate(j, &u, &u_p, &v, &v_p)?;
    g.params = params.to_vec();
    Ok(g)
}

/// The qudit SWAP, `S|a b⟩ = |b a⟩`.
pub fn swap_gate(d: usize) -> Result<Gate> {
    if d < 2 {
        return Err(Error::validation("d", "local dimension must be at least 2"));
    }
    let mut m = Array2::zeros((d * d, d * d));
    for a in 0..d {
        for b in 0..d {
            m[[b * d + a, a * d + b]] = ONE;
        }
    }
    Gate::new(d, m, GateFamily::Swap, Vec::new())
}

/// Two-qutrit gate `(u′ ⊗ u) exp(−i Σ_{μ=1}^{8} J^μ Γ^μ⊗Γ^μ) (v ⊗ v′)`.
pub fn qutrit_gate(
    j: &[f64; 8],
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    u_p: &ComplexMatrix,
    v_p: &ComplexMatrix,
) -> Result<Gate> {
    for (m, name) in [(u, "u"), (v, "v"), (u_p, "u_p"), (v_p, "v_p")] {
        check_local(m, 3, name)?;
    }
    if let Some(bad) = j.iter().position(|x| !x.is_finite()) {
        return Err(Error::validation(format!("J[{bad}]"), "non-finite coupling"));
    }
    let basis = HermitianBasis::new(3, 1)?;
    let mut h = Array2::<C64>::zeros((9, 9));
    for (jmu, g) in j.iter().zip(&basis.single_site()[1..]) {
        h.scaled_add(c(*jmu, 0.0), &kron(g, g));
    }
    let core = expm_hermitian(&h, c(0.0, -1.0))?;
    let m = kron(u_p, u).dot(&core).dot(&kron(v, v_p));
    Gate::new(3, m, GateFamily::Qutrit24, j.to_vec())
}

/// `qutrit24` gate from `[J(8), u(8), v(8)]` (identity `u′`, `v′`) or
/// `[J(8), u(8), v(8), u′(8), v′(8)]`.
pub fn qutrit_gate_from_params(params: &[f64]) -> Result<Gate> {
    let id = identity(3);
    let (u_p, v_p) = match params.len() {
        8 | 24 => (id.clone(), id.clone()),
        40 => (local_unitary(3, &params[24..32])?, local_unitary(3, &params[32..40])?),
        n => {
            return Err(Error::validation(
                "params",
                format!("qutrit24 takes 8, 24 or 40 parameters, got {n}"),
            ))
        }
    };
    let (u, v) = if params.len() == 8 {
        (id.clone(), id)
    } else {
        (local_unitary(3, &params[8..16])?, local_unitary(3, &params[16..24])?)
    };
    let mut j = [0.0; 8];
    j.copy_from_slice(&params[..8]);
    let mut g = qutrit_gate(&j, &u, &v, &u_p, &v_p)?;
    g.params = params.to_vec();
    Ok(g)
}

/// Dual-unitary gate with exactly one peripheral `Φ₁` eigenvalue (`−1`):
/// `Jx = −Jy = −π/4`, `u = w e^{−iθ_Q Z/2}`, `v = e^{iθ_R Z/2} w†`.
pub fn lossless_example_gate(
    jz: f64,
    theta_q: f64,
    theta_r: f64,
    w: &ComplexMatrix,
    u_p: &ComplexMatrix,
    v_p: &ComplexMatrix,
) -> Result<Gate> {
    check_local(w, 2, "w")?;
    let rz = |theta: f64| ndarray::arr2(&[[c(0.0, -theta / 2.0).exp(), ZERO], [ZERO, c(0.0, theta / 2.0).exp()]]);
    let u = w.dot(&rz(theta_q));
    let v = rz(-theta_r).dot(&adjoint(w));
    let mut g = kak_gate([-FRAC_PI_4, FRAC_PI_4, jz], &u, u_p, &v, v_p)?;
    g.family = GateFamily::Lossless7;
    g.params = vec![jz, theta_q, theta_r];
    Ok(g)
}

/// `lossless7` gate from `[Jz, θ_Q, θ_R, w(3)]` or `[Jz, θ_Q, θ_R, w(3), u′(3), v′(3)]`.
pub fn lossless_gate_from_params(params: &[f64]) -> Result<Gate> {
    let (u_p, v_p) = match params.len() {
        6 => (identity(2), identity(2)),
        12 => (local_unitary(2, &params[6..9])?, local_unitary(2, &params[9..12])?),
        n => {
            return Err(Error::validation(
                "params",
                format!("lossless7 takes 6 or 12 parameters, got {n}"),
            ))
        }
    };
    let w = local_unitary(2, &params[3..6])?;
    let mut g = lossless_example_gate(params[0], params[1], params[2], &w, &u_p, &v_p)?;
    g.params = params.to_vec();
    Ok(g)
}

pub fn haar_gate<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Gate> {
    Gate::new(d, sample_cue(d * d, rng), GateFamily::Haar, Vec::new())
}

pub fn explicit_gate(d: usize, matrix: ComplexMatrix) -> Result<Gate> {
    Gate::new(d, matrix, GateFamily::Explicit, Vec::new())
}

/// Operator Schmidt coefficients and operator linear entropy of a gate.
#[derive(Clone, Debug, Serialize)]
pub struct SchmidtData {
    /// `a_μ`, descending, summing to one.
    pub coefficients: Vec<f64>,
    /// `E = 1 − Σ a_μ²`.
    pub linear_entropy: f64,
}

/// `(d² − 1)/d²`, the operator linear entropy of any dual-unitary gate.
pub fn max_linear_entropy(d: usize) -> f64 {
    let q = (d * d) as f64;
    (q - 1.0) / q
}

/// Realignment `R[(a a′), (b b′)] = U[(a b), (a′ b′)]`; its singular values are the
/// operator Schmidt values of `U`.
pub fn realign(u: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let q = d * d;
    Array2::from_shape_fn((q, q), |(row, col)| {
        let (a, ap) = (row / d, row % d);
        let (b, bp) = (col / d, col % d);
        u[[a * d + b, ap * d + bp]]
    })
}

pub fn operator_schmidt(gate: &Gate) -> Result<SchmidtData> {
    let d = gate.local_dim;
    let s = singular_values(&realign(&gate.matrix, d))?;
    let norm = (d * d) as f64;
    let mut coefficients: Vec<f64> = s.iter().map(|x| x * x / norm).filter(|&a| a > 1e-15).collect();
    coefficients.sort_by(|a, b| b.total_cmp(a));
    let linear_entropy = 1.0 - coefficients.iter().map(|a| a * a).sum::<f64>();
    Ok(SchmidtData {
        coefficients,
        linear_entropy,
    })
}

/// Space-direction reshuffling `Ũ[(k l), (i j)] = U[(j l), (i k)]`.
pub fn dual_reshuffle(u: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let q = d * d;
    Array2::from_shape_fn((q, q), |(row, col)| {
        let (k, l) = (row / d, row % d);
        let (i, j) = (col / d, col % d);
        u[[j * d + l, i * d + k]]
    })
}

pub fn dual_unitarity_residual(gate: &Gate) -> f64 {
    unitarity_residual(&dual_reshuffle(&gate.matrix, gate.local_dim))
}

pub fn is_dual_unitary(gate: &Gate, tol: f64) -> bool {
    dual_unitarity_residual(gate) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, RngStream};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_4;

    fn random_coords(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
    }

    #[test]
    fn zero_couplings_give_identity() {
        let id = identity(2);
        let g = kak_gate([0.0; 3], &id, &id, &id, &id).unwrap();
        assert!(max_abs_diff(g.matrix(), &identity(4)) < 1e-15);
    }

    #[test]
    fn isotropic_quarter_coupling_is_phased_swap() {
        // exp(iπ/4 (XX+YY+ZZ)) evaluated from the spectrum of XX+YY+ZZ = 2·SWAP − I:
        // triplet (+1) -> e^{iπ/4}, singlet (−3) -> e^{−3iπ/4} = −e^{iπ/4}.
        let id = identity(2);
        let g = kak_gate([FRAC_PI_4; 3], &id, &id, &id, &id).unwrap();
        let swap = swap_gate(2).unwrap();
        let expected = swap.matrix().mapv(|z| z * c(0.0, FRAC_PI_4).exp());
        assert!(max_abs_diff(g.matrix(), &expected) < 1e-14);
    }

    #[test]
    fn kak_gates_are_unitary() {
        let mut rng = RngStream::new(4, 0);
        for _ in 0..20 {
            let mut p = random_coords(15, &mut rng);
            for x in &mut p[..3] {
                *x = wrap_coupling(*x);
            }
            let g = kak_gate_from_params(&p).unwrap();
            assert!(unitarity_residual(g.matrix()) <= 1e-12);
            assert_eq!(g.params().len(), 15);
        }
    }

    #[test]
    fn kak_rejects_out_of_range_and_non_unitary_locals() {
        let id = identity(2);
        assert!(kak_gate([2.0, 0.0, 0.0], &id, &id, &id, &id).is_err());
        let bad = id.mapv(|z| z * 2.0);
        assert!(matches!(
            kak_gate([0.1, 0.0, 0.0], &bad, &id, &id, &id),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn wrap_coupling_is_periodic() {
        for x in [-4.0, -1.6, 0.3, 1.5, 2.0, 7.1] {
            let w = wrap_coupling(x);
            assert!((-FRAC_PI_2..FRAC_PI_2).contains(&w));
            let k = (x - w) / std::f64::consts::PI;
            assert_abs_diff_eq!(k, k.round(), epsilon = 1e-12);
        }
    }

    #[test]
    fn swap_properties() {
        let s = swap_gate(2).unwrap();
        // |01> (index 1) -> |10> (index 2)
        assert_eq!(s.matrix()[[2, 1]], ONE);
        assert!(max_abs_diff(&s.matrix().dot(s.matrix()), &identity(4)) < 1e-15);

        let s3 = swap_gate(3).unwrap();
        let mut rng = RngStream::new(6, 0);
        let o = Array2::from_shape_fn((3, 3), |_| c(rng.random(), rng.random()));
        let op = Array2::from_shape_fn((3, 3), |_| c(rng.random(), rng.random()));
        let lhs = s3.matrix().dot(&kron(&o, &op)).dot(s3.matrix());
        assert!(max_abs_diff(&lhs, &kron(&op, &o)) < 1e-12);
    }

    #[test]
    fn qutrit_gate_identity_and_unitarity() {
        let id = identity(3);
        let g = qutrit_gate(&[0.0; 8], &id, &id, &id, &id).unwrap();
        assert!(max_abs_diff(g.matrix(), &identity(9)) < 1e-14);
        let mut rng = RngStream::new(7, 0);
        for _ in 0..5 {
            let g = qutrit_gate_from_params(&random_coords(40, &mut rng)).unwrap();
            assert!(unitarity_residual(g.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn schmidt_of_identity_swap_and_cnot() {
        let id = kak_gate([0.0; 3], &identity(2), &identity(2), &identity(2), &identity(2)).unwrap();
        let s = operator_schmidt(&id).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert_abs_diff_eq!(s.coefficients[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.linear_entropy, 0.0, epsilon = 1e-12);

        let swap = operator_schmidt(&swap_gate(2).unwrap()).unwrap();
        assert_abs_diff_eq!(swap.linear_entropy, 0.75, epsilon = 1e-12);

        // CNOT = |0><0|⊗I + |1><1|⊗X realigns to two orthogonal product terms of weight √2 each.
        let mut cnot = Array2::<C64>::zeros((4, 4));
        for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            cnot[[r, col]] = ONE;
        }
        let s = operator_schmidt(&explicit_gate(2, cnot).unwrap()).unwrap();
        assert_eq!(s.coefficients.len(), 2);
        assert_abs_diff_eq!(s.coefficients[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.coefficients[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.linear_entropy, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn dual_unitarity_examples() {
        assert!(is_dual_unitary(&swap_gate(2).unwrap(), DUAL_UNITARY_TOL));
        assert!(is_dual_unitary(&swap_gate(3).unwrap(), DUAL_UNITARY_TOL));
        let mut rng = RngStream::new(8, 0);
        for jz in [-1.2, 0.0, 0.4, 1.5] {
            let mut p = random_coords(15, &mut rng);
            p[0] = FRAC_PI_4;
            p[1] = FRAC_PI_4;
            p[2] = jz;
            let g = kak_gate_from_params(&p).unwrap();
            assert!(is_dual_unitary(&g, DUAL_UNITARY_TOL), "jz = {jz}");
        }
        let g = kak_gate_from_params(&[0.3, 0.2, 0.1]).unwrap();
        assert!(dual_unitarity_residual(&g) > 0.1);
        assert!(!is_dual_unitary(&g, DUAL_UNITARY_TOL));
    }

    #[test]
    fn dual_unitarity_agrees_with_maximal_entropy() {
        let mut rng = RngStream::new(9, 0);
        for i in 0..1000 {
            let mut p = random_coords(15, &mut rng);
            for x in &mut p[..3] {
                *x = wrap_coupling(*x);
            }
            // force roughly a third of the samples onto the dual-unitary family
            if i % 3 == 0 {
                p[0] = FRAC_PI_4;
                p[2] = -FRAC_PI_4;
            }
            let g = kak_gate_from_params(&p).unwrap();
            let e = operator_schmidt(&g).unwrap().linear_entropy;
            let by_entropy = e >= max_linear_entropy(2) - DUAL_UNITARY_TOL;
            assert_eq!(is_dual_unitary(&g, DUAL_UNITARY_TOL), by_entropy, "sample {i}, E = {e}");
        }
    }

    #[test]
    fn lossless_gate_is_dual_unitary() {
        let mut rng = RngStream::new(10, 0);
        for _ in 0..20 {
            let mut p = random_coords(12, &mut rng);
            p[0] = wrap_coupling(p[0]);
            let g = lossless_gate_from_params(&p).unwrap();
            assert_eq!(g.family(), GateFamily::Lossless7);
            assert!(is_dual_unitary(&g, DUAL_UNITARY_TOL));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn entropy_is_local_unitary_invariant_and_bounded(seed in any::<u64>()) {
            let mut rng = RngStream::new(seed, 0);
            let mut p = random_coords(15, &mut rng);
            for x in &mut p[..3] {
                *x = wrap_coupling(*x);
            }
            let e_full = operator_schmidt(&kak_gate_from_params(&p).unwrap()).unwrap().linear_entropy;
            let e_bare = operator_schmidt(&kak_gate_from_params(&p[..3]).unwrap()).unwrap().linear_entropy;
            prop_assert!((e_full - e_bare).abs() <= 1e-10);
            prop_assert!(e_full >= -1e-12 && e_full <= max_linear_entropy(2) + 1e-12);

            let q = qutrit_gate_from_params(&random_coords(40, &mut rng)).unwrap();
            let eq = operator_schmidt(&q).unwrap().linear_entropy;
            prop_assert!(eq >= -1e-12 && eq <= max_linear_entropy(3) + 1e-12);
        }
    }
}
