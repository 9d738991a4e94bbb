//! Mixed-dimension tensor-product index utilities: applying an operator to a
//! subset of subsystems, partial traces, and subsystem reordering. All states
//! are dense vectors/matrices over `H = H_{d_0} ⊗ H_{d_1} ⊗ …` in row-major
//! (big-endian) index order: subsystem 0 is the most significant digit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Total dimension of a composite space.
pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Decompose a flat index into per-subsystem digits (big-endian).
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

/// Recompose a flat index from per-subsystem digits.
pub fn flat(digits: &[usize], dims: &[usize]) -> usize {
    let mut idx = 0;
    for (&g, &d) in digits.iter().zip(dims.iter()) {
        idx = idx * d + g;
    }
    idx
}

/// Apply `op` (square, acting on the listed `targets` in the given order) to
/// `state`. Targets need not be contiguous or sorted; `op`'s row/column index
/// runs over the targets in the order listed.
pub fn apply_op(state: &CVector, dims: &[usize], targets: &[usize], op: &CMatrix) -> CVector {
    let n = dims.len();
    debug_assert!(targets.iter().all(|&t| t < n));
    let tdims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let tdim = total_dim(&tdims);
    assert_eq!(op.nrows(), tdim, "operator does not match target dimensions");
    assert_eq!(op.ncols(), tdim);

    let rest: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let rdims: Vec<usize> = rest.iter().map(|&q| dims[q]).collect();
    let rdim = total_dim(&rdims);

    // Flat index as a function of (target digits, rest digits).
    let compose = |tdig: &[usize], rdig: &[usize]| -> usize {
        let mut full = vec![0usize; n];
        for (k, &t) in targets.iter().enumerate() {
            full[t] = tdig[k];
        }
        for (k, &r) in rest.iter().enumerate() {
            full[r] = rdig[k];
        }
        flat(&full, dims)
    };

    let mut out = CVector::zeros(state.len());
    for r in 0..rdim {
        let rdig = digits(r, &rdims);
        // Gather the target-indexed slice, multiply, scatter back.
        let mut slice = CVector::zeros(tdim);
        for t in 0..tdim {
            slice[t] = state[compose(&digits(t, &tdims), &rdig)];
        }
        let moved = op * slice;
        for t in 0..tdim {
            out[compose(&digits(t, &tdims), &rdig)] = moved[t];
        }
    }
    out
}

/// Embed `op` acting on `targets` into the full space as a dense matrix.
pub fn embed_op(dims: &[usize], targets: &[usize], op: &CMatrix) -> CMatrix {
    let dim = total_dim(dims);
    let mut out = CMatrix::zeros(dim, dim);
    let n = dims.len();
    let tdims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let tdim = total_dim(&tdims);
    assert_eq!(op.nrows(), tdim);
    let rest: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let rdims: Vec<usize> = rest.iter().map(|&q| dims[q]).collect();
    let rdim = total_dim(&rdims);

    let compose = |tdig: &[usize], rdig: &[usize]| -> usize {
        let mut full = vec![0usize; n];
        for (k, &t) in targets.iter().enumerate() {
            full[t] = tdig[k];
        }
        for (k, &r) in rest.iter().enumerate() {
            full[r] = rdig[k];
        }
        flat(&full, dims)
    };

    for r in 0..rdim {
        let rdig = digits(r, &rdims);
        for ti in 0..tdim {
            let row = compose(&digits(ti, &tdims), &rdig);
            for tj in 0..tdim {
                let v = op[(ti, tj)];
                if v != Complex64::new(0.0, 0.0) {
                    out[(row, compose(&digits(tj, &tdims), &rdig))] = v;
                }
            }
        }
    }
    out
}

/// Partial trace of a density matrix, keeping the subsystems in `keep`
/// (result indices run over `keep` in the order listed).
pub fn partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let n = dims.len();
    let kdims: Vec<usize> = keep.iter().map(|&q| dims[q]).collect();
    let kdim = total_dim(&kdims);
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let rdims: Vec<usize> = rest.iter().map(|&q| dims[q]).collect();
    let rdim = total_dim(&rdims);

    let compose = |kdig: &[usize], rdig: &[usize]| -> usize {
        let mut full = vec![0usize; n];
        for (k, &t) in keep.iter().enumerate() {
            full[t] = kdig[k];
        }
        for (k, &r) in rest.iter().enumerate() {
            full[r] = rdig[k];
        }
        flat(&full, dims)
    };

    let mut out = CMatrix::zeros(kdim, kdim);
    for i in 0..kdim {
        let idig = digits(i, &kdims);
        for j in 0..kdim {
            let jdig = digits(j, &kdims);
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rdim {
                let rdig = digits(r, &rdims);
                acc += rho[(compose(&idig, &rdig), compose(&jdig, &rdig))];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Partial trace taken directly from a pure state vector (avoids forming the
/// full projector).
pub fn partial_trace_pure(state: &CVector, dims: &[usize], keep: &[usize]) -> CMatrix {
    let n = dims.len();
    let kdims: Vec<usize> = keep.iter().map(|&q| dims[q]).collect();
    let kdim = total_dim(&kdims);
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let rdims: Vec<usize> = rest.iter().map(|&q| dims[q]).collect();
    let rdim = total_dim(&rdims);

    let compose = |kdig: &[usize], rdig: &[usize]| -> usize {
        let mut full = vec![0usize; n];
        for (k, &t) in keep.iter().enumerate() {
            full[t] = kdig[k];
        }
        for (k, &r) in rest.iter().enumerate() {
            full[r] = rdig[k];
        }
        flat(&full, dims)
    };

    // M[k, r] = state[compose(k, r)], then rho = M M†.
    let mut m = CMatrix::zeros(kdim, rdim);
    for k in 0..kdim {
        let kdig = digits(k, &kdims);
        for r in 0..rdim {
            m[(k, r)] = state[compose(&kdig, &digits(r, &rdims))];
        }
    }
    &m * m.adjoint()
}

/// Reorder subsystems of a state vector: `perm[k]` is the old position of the
/// subsystem that ends up at new position `k`.
pub fn permute_state(state: &CVector, dims: &[usize], perm: &[usize]) -> CVector {
    let n = dims.len();
    assert_eq!(perm.len(), n);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut out = CVector::zeros(state.len());
    for idx in 0..state.len() {
        let old = digits(idx, dims);
        let new: Vec<usize> = perm.iter().map(|&p| old[p]).collect();
        out[flat(&new, &new_dims)] = state[idx];
    }
    out
}

/// Kronecker product of two state vectors.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Kronecker product of two matrices.
pub fn kron_mat(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
