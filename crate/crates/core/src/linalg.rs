//! Dense complex linear algebra: pure states, density operators, the
//! trace/fidelity metric layer, diamond-distance bounds for unitaries, and
//! Uhlmann unitaries. Hermitian eigendecomposition is the only spectral
//! primitive; unitary spectra are obtained by jointly diagonalizing the
//! commuting Hermitian and anti-Hermitian parts.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, CVector};

/// Default tolerance for invariant checks (unitarity, Hermiticity, PSD).
pub const TOL_INVARIANT: f64 = 1e-10;
/// Default tolerance for normalization checks.
pub const TOL_NORM: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Identity matrix of dimension `n`.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Max-norm of `U†U − I`; zero for exactly unitary `U`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let d = u.adjoint() * u - identity(u.nrows());
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value (operator norm), via the Hermitian spectrum of
/// `M†M`.
pub fn operator_norm(m: &CMatrix) -> f64 {
    let (vals, _) = eigh(&(m.adjoint() * m));
    vals.max().max(0.0).sqrt()
}

/// Sum of singular values (trace norm). Eigenvalues of `M†M` below the
/// relative noise floor are dropped.
pub fn nuclear_norm(m: &CMatrix) -> f64 {
    let (vals, _) = eigh(&(m.adjoint() * m));
    let floor = vals.max().max(0.0) * 1e-14;
    vals.iter().filter(|&&x| x > floor).map(|x| x.sqrt()).sum()
}

/// Singular value decomposition `A = W·diag(σ)·V†` assembled from Hermitian
/// eigendecompositions only (σ descending, W and V square unitary). Columns
/// of `W` for negligible singular values are completed by Gram-Schmidt.
pub fn svd_via_eigh(a: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let m = a.nrows();
    let n = a.ncols();
    let (dvals, v_asc) = eigh(&(a.adjoint() * a));
    // Descending singular values.
    let mut sigma: Vec<f64> = Vec::with_capacity(n);
    let mut v = CMatrix::zeros(n, n);
    for j in 0..n {
        let src = n - 1 - j;
        sigma.push(dvals[src].max(0.0).sqrt());
        v.set_column(j, &v_asc.column(src).into_owned());
    }
    let smax = sigma.first().copied().unwrap_or(0.0);
    let cutoff = smax * 1e-12;

    let mut w = CMatrix::zeros(m, m);
    let mut filled = 0;
    for j in 0..n.min(m) {
        if sigma[j] > cutoff && sigma[j] > 0.0 {
            let col = (a * v.column(j)) / cr(sigma[j]);
            w.set_column(filled, &col);
            filled += 1;
        }
    }
    // Complete with standard basis vectors, then re-orthonormalize twice.
    let mut k = 0;
    while filled < m && k < m {
        let mut col = CVector::zeros(m);
        col[k] = cr(1.0);
        for j in 0..filled {
            let prev = w.column(j).into_owned();
            let ip = (prev.adjoint() * &col)[(0, 0)];
            col -= prev * ip;
        }
        if col.norm() > 1e-6 {
            col /= cr(col.norm());
            w.set_column(filled, &col);
            filled += 1;
        }
        k += 1;
    }
    for _pass in 0..2 {
        for j in 0..m {
            let mut col = w.column(j).into_owned();
            for i in 0..j {
                let prev = w.column(i).into_owned();
                let ip = (prev.adjoint() * &col)[(0, 0)];
                col -= prev * ip;
            }
            let norm = col.norm();
            if norm > 1e-14 {
                col /= cr(norm);
            }
            w.set_column(j, &col);
        }
    }
    sigma.truncate(n.min(m));
    sigma.resize(n.min(m), 0.0);
    (w, sigma, v)
}

fn check_unitary(u: &CMatrix, what: &str) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::Contract(format!("{what}: matrix not square")));
    }
    let err = unitarity_error(u);
    if err > 1e-8 {
        return Err(Error::Contract(format!("{what}: not unitary (‖U†U−I‖ = {err:.3e})")));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues, eigenvectors)`,
/// columns of the returned matrix are the eigenvectors, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = (m + m.adjoint()) * cr(0.5);
    let se = SymmetricEigen::new(h);
    // nalgebra does not sort; do it here for deterministic downstream use.
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let vecs = CMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// `f` applied to a Hermitian matrix through its spectrum.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let diag = CMatrix::from_fn(n, n, |i, j| if i == j { f(vals[i]) } else { cr(0.0) });
    &vecs * diag * vecs.adjoint()
}

/// `exp(−i·t·H)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(h, |x| Complex64::from_polar(1.0, -t * x))
}

/// Principal square root of a PSD Hermitian matrix. Eigenvalues below the
/// relative noise floor are treated as exact zeros; otherwise `√(±1e-16)`
/// noise would pollute the root at the `1e-8` level.
pub fn matrix_sqrt_psd(m: &CMatrix) -> CMatrix {
    let (vals, _) = eigh(m);
    let floor = vals.max().max(0.0) * 1e-13;
    hermitian_function(m, |x| if x <= floor { cr(0.0) } else { cr(x.sqrt()) })
}

/// Eigendecomposition of a unitary matrix using only the Hermitian solver:
/// `H = (W+W†)/2` and `K = (W−W†)/(2i)` commute for normal `W`, so clusters
/// of `H` are refined by diagonalizing `K` inside each cluster. Returns
/// `(eigenphases in (−π, π], eigenvectors as columns)`.
pub fn eig_unitary(w: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_unitary(w, "eig_unitary")?;
    let n = w.nrows();
    let h = (w + w.adjoint()) * cr(0.5);
    let k = (w - w.adjoint()) * c(0.0, -0.5);
    let (hvals, hvecs) = eigh(&h);

    let mut phases = vec![0.0f64; n];
    let mut vecs = CMatrix::zeros(n, n);
    let cluster_tol = 1e-7;

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (hvals[end] - hvals[end - 1]).abs() < cluster_tol {
            end += 1;
        }
        let width = end - start;
        let basis = hvecs.columns(start, width).into_owned();
        if width == 1 {
            let col = basis.column(0).into_owned();
            let kexp = (col.adjoint() * &k * &col)[(0, 0)].re;
            phases[start] = kexp.atan2(hvals[start]);
            vecs.set_column(start, &col);
        } else {
            let krestricted = basis.adjoint() * &k * &basis;
            let (kvals, kvecs) = eigh(&krestricted);
            let refined = &basis * kvecs;
            for j in 0..width {
                phases[start + j] = kvals[j].atan2(hvals[start]);
                vecs.set_column(start + j, &refined.column(j).into_owned());
            }
        }
        start = end;
    }
    Ok((phases, vecs))
}

/// Haar-like random unitary via QR of a Gaussian complex matrix with the
/// phase convention fixed from the R diagonal.
pub fn random_unitary(dim: usize, rng: &mut impl rand::Rng) -> CMatrix {
    use rand_distr::StandardNormal;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = d / cr(d.norm().max(1e-300));
        for i in 0..dim {
            out[(i, j)] *= ph;
        }
    }
    out
}

/// Random pure state from normalized Gaussian amplitudes.
pub fn random_pure(dim: usize, rng: &mut impl rand::Rng) -> PureState {
    use rand_distr::StandardNormal;
    let v = CVector::from_fn(dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    PureState::normalized(v).unwrap()
}

/// Random Hermitian matrix normalized to `‖H‖∞ = 1`.
pub fn random_hermitian_unit_norm(dim: usize, rng: &mut impl rand::Rng) -> CMatrix {
    use rand_distr::StandardNormal;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let h = (&g + g.adjoint()) * cr(0.5);
    let norm = operator_norm(&h);
    h / cr(norm.max(1e-300))
}

/// A normalized pure state on a `dim`-dimensional space.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Build from amplitudes; the norm must be 1 within `TOL_NORM`.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!("state norm {norm} ≠ 1")));
        }
        if (norm - 1.0).abs() > TOL_NORM {
            // Renormalize tiny drift accumulated by long gate sequences.
            return Ok(Self { amplitudes: amplitudes / cr(norm) });
        }
        Ok(Self { amplitudes })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-14 {
            return Err(Error::Contract("cannot normalize the zero vector".into()));
        }
        Ok(Self { amplitudes: v / cr(norm) })
    }

    /// Computational basis state `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = cr(1.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_vector(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &PureState) -> Complex64 {
        (self.amplitudes.adjoint() * &other.amplitudes)[(0, 0)]
    }

    /// Projector `|ψ⟩⟨ψ|` as a density operator.
    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// A density operator: Hermitian, unit trace, PSD within tolerance.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Contract("density matrix not square".into()));
        }
        let herm_err = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > 1e-9 {
            return Err(Error::Contract(format!("not Hermitian (deviation {herm_err:.3e})")));
        }
        let tr: Complex64 = matrix.diagonal().iter().sum();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::Contract(format!("trace {tr} ≠ 1")));
        }
        let (vals, _) = eigh(&matrix);
        if vals.min() < -1e-8 {
            return Err(Error::Contract(format!("negative eigenvalue {:.3e}", vals.min())));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Trace distance `½‖ρ−σ‖₁`.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Contract(format!(
            "trace_distance: dimension mismatch {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(trace_distance_raw(a.matrix(), b.matrix()))
}

/// Trace distance on raw Hermitian matrices (no invariant checks).
pub fn trace_distance_raw(a: &CMatrix, b: &CMatrix) -> f64 {
    let (vals, _) = eigh(&(a - b));
    0.5 * vals.iter().map(|x| x.abs()).sum::<f64>()
}

/// Trace distance between two pure states, `√(1−|⟨ψ|φ⟩|²)`. Computed from
/// the phase-aligned vector difference: `√(1−|c|²)` through the overlap
/// alone loses half the working precision once the states nearly coincide.
pub fn trace_distance_pure(a: &PureState, b: &PureState) -> f64 {
    let c = a.overlap(b);
    let ca = c.norm();
    if ca < 1e-12 {
        return (1.0 - ca * ca).max(0.0).sqrt().min(1.0);
    }
    let aligned = b.amplitudes() * (c.conj() / cr(ca));
    let v = (a.amplitudes() - aligned).norm_squared(); // = 2(1−|c|)
    (v * (1.0 + ca) * 0.5).max(0.0).sqrt().min(1.0)
}

/// Trace distance between `ψ^{⊗N}` and `φ^{⊗N}` given the single-copy
/// distance, via multiplicativity of pure-state fidelity:
/// `√(1 − (1 − d²)^N)`. Vanishes for `d ≪ 1/√N` and approaches one for
/// `d ≫ 1/√N`.
pub fn n_copy_trace_distance_pure(single_copy_distance: f64, copies: u64) -> f64 {
    let d = single_copy_distance.clamp(0.0, 1.0);
    let log_f = (copies as f64) * (1.0 - d * d).max(0.0).ln();
    (1.0 - log_f.exp()).max(0.0).sqrt()
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Contract(format!(
            "fidelity: dimension mismatch {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let sa = matrix_sqrt_psd(a.matrix());
    let inner = &sa * b.matrix() * &sa;
    let (vals, _) = eigh(&inner);
    let floor = vals.max().max(0.0) * 1e-13;
    let root_sum: f64 = vals.iter().filter(|&&x| x > floor).map(|x| x.sqrt()).sum();
    Ok((root_sum * root_sum).min(1.0 + 1e-12))
}

/// `(lower, upper)` bounds on the diamond distance between two unitary
/// channels: `(½·m, m)` with `m = min_φ ‖e^{iφ}U − V‖∞`. The minimization is
/// over the global phase; the candidate from the spectral-arc midpoint of
/// `U†V` is refined by golden-section search.
pub fn diamond_distance_unitary_bounds(u: &CMatrix, v: &CMatrix) -> Result<(f64, f64)> {
    check_unitary(u, "diamond bounds")?;
    check_unitary(v, "diamond bounds")?;
    if u.nrows() != v.nrows() {
        return Err(Error::Contract("diamond bounds: dimension mismatch".into()));
    }
    let (phases, _) = eig_unitary(&(u.adjoint() * v))?;
    let m = min_phase_deviation(&phases);
    Ok((0.5 * m, m))
}

/// `min_φ max_j |e^{iφ} − e^{iθ_j}|` for phases `θ_j`.
pub fn min_phase_deviation(phases: &[f64]) -> f64 {
    if phases.is_empty() {
        return 0.0;
    }
    let f = |phi: f64| -> f64 {
        phases
            .iter()
            .map(|&t| 2.0 * ((t - phi) * 0.5).sin().abs())
            .fold(0.0, f64::max)
    };
    // Arc midpoint candidate: complement of the largest circular gap.
    let mut sorted: Vec<f64> = phases.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut best_gap = 2.0 * std::f64::consts::PI - (sorted[n - 1] - sorted[0]);
    let mut gap_start = sorted[n - 1];
    for w in sorted.windows(2) {
        let g = w[1] - w[0];
        if g > best_gap {
            best_gap = g;
            gap_start = w[0];
        }
    }
    // The covering arc starts at the end of the largest gap.
    let arc_len = 2.0 * std::f64::consts::PI - best_gap;
    let candidate = gap_start + best_gap + 0.5 * arc_len;

    // Golden-section refinement around the candidate.
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = candidate - 0.51 * arc_len - 1e-3;
    let mut b = candidate + 0.51 * arc_len + 1e-3;
    let mut c1 = b - gr * (b - a);
    let mut c2 = a + gr * (b - a);
    let mut f1 = f(c1);
    let mut f2 = f(c2);
    for _ in 0..200 {
        if f1 < f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - gr * (b - a);
            f1 = f(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + gr * (b - a);
            f2 = f(c2);
        }
        if (b - a).abs() < 1e-14 {
            break;
        }
    }
    f(0.5 * (a + b)).min(f(candidate)).min(2.0)
}

/// Unitary on the purifying register achieving the Uhlmann maximum
/// `max_U |⟨ψ_target|(I ⊗ U)|ψ⟩|²`.
///
/// Purifications live on `H_sys ⊗ H_anc` (system first); `rho` and
/// `rho_target` are the system marginals, and the returned unitary acts on
/// the ancilla. The achieved overlap equals `F(rho, rho_target)`.
pub fn uhlmann_unitary(
    rho: &DensityOperator,
    rho_target: &DensityOperator,
    purification: &PureState,
    purification_target: &PureState,
) -> Result<CMatrix> {
    let ds = rho.dim();
    if rho_target.dim() != ds {
        return Err(Error::Contract("uhlmann: marginal dimension mismatch".into()));
    }
    if purification.dim() != purification_target.dim() {
        return Err(Error::Contract("uhlmann: purification dimension mismatch".into()));
    }
    if purification.dim() % ds != 0 {
        return Err(Error::Contract("uhlmann: purification not divisible by system".into()));
    }
    let da = purification.dim() / ds;
    let m_of = |psi: &PureState| -> CMatrix {
        CMatrix::from_fn(ds, da, |i, j| psi.amplitudes()[i * da + j])
    };
    let m = m_of(purification);
    let mt = m_of(purification_target);

    // Consistency: the purification must reduce to the supplied marginal.
    for (mat, marg, tag) in [(&m, rho, "purification"), (&mt, rho_target, "purification_target")] {
        let reduced = mat * mat.adjoint();
        let dev = (&reduced - marg.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-8 {
            return Err(Error::Contract(format!(
                "uhlmann: {tag} does not purify its marginal (deviation {dev:.3e})"
            )));
        }
    }

    // Overlap as a function of the ancilla unitary: ⟨ψ_t|(I⊗U)|ψ⟩ = Tr(A Uᵀ)
    // with A = M_t† M.  max |Tr(A Uᵀ)| = ‖A‖₁ at Uᵀ = V W† from A = W Σ V†.
    let a = mt.adjoint() * &m;
    let (w, _sigma, v) = svd_via_eigh(&a);
    let ut = v * w.adjoint();
    Ok(ut.transpose())
}
