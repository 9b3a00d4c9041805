//! Small dense complex linear algebra used by the gate and objective code.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_rows(rows: &[&[C64]]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j])
}

pub fn pauli_x() -> CMatrix {
    from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> CMatrix {
    from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> CMatrix {
    from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

/// Kronecker product `a ⊗ b`; `b` occupies the low-order index bits.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Tensor product of single-qubit operators listed from qubit 0 upward.
pub fn kron_lsb(ops: &[CMatrix]) -> CMatrix {
    let mut out = identity(1);
    for op in ops {
        out = kron(op, &out);
    }
    out
}

/// Embeds a `2^k`-dimensional operator acting on `targets` into an
/// `n_qubits` register. Local index bit `m` corresponds to `targets[m]`.
pub fn embed(op: &CMatrix, targets: &[usize], n_qubits: usize) -> CMatrix {
    let dim = 1usize << n_qubits;
    let k = targets.len();
    let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
    let local = |idx: usize| -> usize {
        let mut l = 0;
        for (m, &t) in targets.iter().enumerate() {
            l |= ((idx >> t) & 1) << m;
        }
        l
    };
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lc = local(col);
        let rest = col & !mask;
        for lr in 0..(1usize << k) {
            let mut row = rest;
            for (m, &t) in targets.iter().enumerate() {
                row |= ((lr >> m) & 1) << t;
            }
            out[(row, col)] = op[(lr, lc)];
        }
    }
    out
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// `Tr(a · b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |U†U − I|` entry.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    if u.ncols() != n {
        return f64::INFINITY;
    }
    max_abs(&(u.adjoint() * u - identity(n)))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Phase-insensitive overlap `|Tr(A† B)| / dim`.
pub fn phase_insensitive_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_product(&a.adjoint(), b).norm() / a.nrows() as f64
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// `exp(i·t·H)` for Hermitian `H` via eigendecomposition.
pub fn expm_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| C64::from_polar(1.0, t * l)),
    ));
    &vecs * phases * vecs.adjoint()
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}
