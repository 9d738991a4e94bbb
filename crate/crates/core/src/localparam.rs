//! Local parameterization of shallow-circuit states: extraction of small
//! rotations from unitaries, the exact two-dimensional localization
//! construction, approximate decoupling via Uhlmann unitaries, and the full
//! pipeline that rewrites a state near a reference circuit as the reference
//! followed by a short list of small local rotations.

use num_complex::Complex64;

use crate::circuit::{two_layer_reduce, BlockGate, BrickworkCircuit};
use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, eig_unitary, exp_i_hermitian, trace_distance_pure, uhlmann_unitary, DensityOperator,
    PureState,
};
use crate::tensor::{apply_op, embed_op, kron_vec, partial_trace_pure, permute_state, CMatrix, CVector};

/// A unitary on an explicit sorted qubit support.
#[derive(Debug, Clone)]
pub struct LocalOp {
    pub qubits: Vec<usize>,
    pub mat: CMatrix,
}

impl LocalOp {
    pub fn new(qubits: Vec<usize>, mat: CMatrix) -> Self {
        debug_assert!(qubits.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(mat.nrows(), 1 << qubits.len());
        Self { qubits, mat }
    }

    pub fn identity_on(qubits: Vec<usize>) -> Self {
        let dim = 1usize << qubits.len();
        Self { qubits, mat: CMatrix::identity(dim, dim) }
    }

    fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Rewrite on a larger support (tensor with identity elsewhere).
    pub fn embed_to(&self, sup: &[usize]) -> CMatrix {
        let dims = vec![2usize; sup.len()];
        let targets: Vec<usize> = self
            .qubits
            .iter()
            .map(|q| sup.iter().position(|s| s == q).expect("support must contain op qubits"))
            .collect();
        embed_op(&dims, &targets, &self.mat)
    }

    pub fn overlaps(&self, other: &LocalOp) -> bool {
        self.qubits.iter().any(|q| other.qubits.contains(q))
    }

    /// Operator product `self · other` on the joint support.
    pub fn then_after(&self, other: &LocalOp) -> LocalOp {
        let sup = Self::union(&self.qubits, &other.qubits);
        let mat = self.embed_to(&sup) * other.embed_to(&sup);
        LocalOp { qubits: sup, mat }
    }

    /// `c · self · c†` on the joint support.
    pub fn conjugated_by(&self, c: &LocalOp) -> LocalOp {
        let sup = Self::union(&self.qubits, &c.qubits);
        let cm = c.embed_to(&sup);
        let mat = &cm * self.embed_to(&sup) * cm.adjoint();
        LocalOp { qubits: sup, mat }
    }

    pub fn adjoint(&self) -> LocalOp {
        LocalOp { qubits: self.qubits.clone(), mat: self.mat.adjoint() }
    }

    /// Apply to an `n`-qubit state vector.
    pub fn apply(&self, state: &CVector, n: usize) -> CVector {
        let dims = vec![2usize; n];
        apply_op(state, &dims, &self.qubits, &self.mat)
    }

    /// Drop qubits on which the operator is an identity tensor factor.
    pub fn pruned(&self) -> LocalOp {
        let mut op = self.clone();
        let mut p = 0;
        while p < op.qubits.len() {
            if acts_trivially_at(&op.mat, op.qubits.len(), p) {
                op = drop_qubit(&op, p);
            } else {
                p += 1;
            }
        }
        op
    }
}

fn acts_trivially_at(mat: &CMatrix, k: usize, p: usize) -> bool {
    let dim = 1usize << k;
    let bit = 1usize << (k - 1 - p);
    let scale = mat.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for i in 0..dim {
        for j in 0..dim {
            let ib = i & bit != 0;
            let jb = j & bit != 0;
            let v = mat[(i, j)];
            if ib != jb {
                if v.norm() > 1e-11 * scale {
                    return false;
                }
            } else if ib && (v - mat[(i & !bit, j & !bit)]).norm() > 1e-11 * scale {
                return false;
            }
        }
    }
    true
}

fn drop_qubit(op: &LocalOp, p: usize) -> LocalOp {
    let k = op.qubits.len();
    let bit = 1usize << (k - 1 - p);
    let dim = 1usize << (k - 1);
    let expand = |idx: usize| -> usize {
        let high = idx >> (k - 1 - p);
        let low = idx & (bit - 1);
        (high << (k - p)) | low
    };
    let mat = CMatrix::from_fn(dim, dim, |i, j| op.mat[(expand(i), expand(j))]);
    let mut qubits = op.qubits.clone();
    qubits.remove(p);
    LocalOp { qubits, mat }
}

/// A small rotation with a certified diamond-distance bound from identity:
/// `unitary = e^{iφ}·exp(−i·2·ε·H)` with `‖H‖∞ ≤ 1` and the diamond upper
/// bound from [`linalg::diamond_distance_unitary_bounds`] at most `ε`.
#[derive(Debug, Clone)]
pub struct EpsRotation {
    pub support: Vec<usize>,
    pub unitary: CMatrix,
    pub generator: CMatrix,
    pub global_phase: f64,
    pub eps_certificate: f64,
}

impl EpsRotation {
    pub fn as_local_op(&self) -> LocalOp {
        LocalOp::new(self.support.clone(), self.unitary.clone())
    }

    /// Residual of the exponential representation (operator norm).
    pub fn representation_error(&self) -> f64 {
        let rebuilt = exp_i_hermitian(&self.generator, 2.0 * self.eps_certificate)
            * Complex64::from_polar(1.0, self.global_phase);
        linalg::operator_norm(&(&rebuilt - &self.unitary))
    }
}

/// Minimal covering arc of a set of phases: returns `(center, half_width)`.
fn covering_arc(phases: &[f64]) -> (f64, f64) {
    if phases.is_empty() {
        return (0.0, 0.0);
    }
    let mut sorted = phases.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut best_gap = 2.0 * std::f64::consts::PI - (sorted[n - 1] - sorted[0]);
    let mut arc_start = sorted[0];
    for w in sorted.windows(2) {
        let g = w[1] - w[0];
        if g > best_gap {
            best_gap = g;
            arc_start = w[1];
        }
    }
    let arc_len = 2.0 * std::f64::consts::PI - best_gap;
    (arc_start + 0.5 * arc_len, 0.5 * arc_len)
}

/// Represent a unitary near the identity as `e^{iφ}·exp(−i·2·ε·H)`:
/// eigenphases are centered by the optimal global phase, the certificate is
/// the half-width of the covering arc, and the generator is scaled to unit
/// operator norm or less.
pub fn extract_rotation(w: &CMatrix, support: Vec<usize>) -> Result<EpsRotation> {
    let (phases, vecs) = eig_unitary(w)?;
    let (center, half) = covering_arc(&phases);
    if 2.0 * half >= std::f64::consts::PI {
        return Err(Error::NotSmallRotation(format!(
            "eigenphase spread {:.4} ≥ π",
            2.0 * half
        )));
    }
    let n = w.nrows();
    let cert = half;
    let generator = if cert < 1e-15 {
        CMatrix::zeros(n, n)
    } else {
        let mut centered: Vec<f64> = phases
            .iter()
            .map(|&t| {
                let mut d = t - center;
                while d > std::f64::consts::PI {
                    d -= 2.0 * std::f64::consts::PI;
                }
                while d < -std::f64::consts::PI {
                    d += 2.0 * std::f64::consts::PI;
                }
                d
            })
            .collect();
        // exp(−i·2·cert·H) must reproduce the centered phases.
        for v in centered.iter_mut() {
            *v = -*v / (2.0 * cert);
        }
        let diag = CMatrix::from_fn(n, n, |i, j| if i == j { cr(centered[i]) } else { cr(0.0) });
        &vecs * diag * vecs.adjoint()
    };
    Ok(EpsRotation {
        support,
        unitary: w.clone(),
        generator,
        global_phase: center,
        eps_certificate: cert,
    })
}

/// Exact localization: the minimal rotation in `span{|φ⟩, V|φ⟩}` taking
/// `|φ⟩` to `V|φ⟩`, acting as the phase `e^{i·arg⟨φ|V|φ⟩}` on the
/// complement. The certificate is at most `4·eps` whenever
/// `d_Tr(VφV†, φ) ≤ eps`.
pub fn localize_unitary(
    v: &CMatrix,
    phi: &PureState,
    eps: f64,
    support: Vec<usize>,
) -> Result<EpsRotation> {
    if eps >= 1.0 {
        return Err(Error::Contract("localization requires eps < 1".into()));
    }
    let moved = v * phi.amplitudes();
    let c_ampl = (phi.amplitudes().adjoint() * &moved)[(0, 0)];
    let measured = trace_distance_pure(&PureState::new(moved.clone())?, phi);
    if measured > eps * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::Contract(format!(
            "localization precondition violated: measured distance {measured:.6e} > eps {eps:.6e}"
        )));
    }
    if c_ampl.norm() < 1e-9 {
        return Err(Error::Contract("localization is degenerate at overlap 0".into()));
    }
    let phase = c_ampl.arg();
    let residual = &moved - phi.amplitudes() * c_ampl;
    let s = residual.norm();
    let n = v.nrows();

    let eta = s.atan2(c_ampl.norm());
    let cert = 2.0 * (0.5 * eta).sin();
    if s < 1e-14 {
        return Ok(EpsRotation {
            support,
            unitary: CMatrix::identity(n, n) * Complex64::from_polar(1.0, phase),
            generator: CMatrix::zeros(n, n),
            global_phase: phase,
            eps_certificate: 0.0,
        });
    }

    // Basis {|φ⟩, |φ⊥⟩} with the residual rephased so the rotation is real.
    let perp = residual * (Complex64::from_polar(1.0, -phase) / cr(s));
    let p0 = phi.amplitudes().clone();
    let cos_eta = eta.cos();
    let sin_eta = eta.sin();
    let mut rot = CMatrix::identity(n, n);
    let outer = |a: &CVector, b: &CVector| -> CMatrix { a * b.adjoint() };
    rot += outer(&p0, &p0) * cr(cos_eta - 1.0);
    rot += outer(&perp, &perp) * cr(cos_eta - 1.0);
    rot += outer(&perp, &p0) * cr(sin_eta);
    rot -= outer(&p0, &perp) * cr(sin_eta);
    let unitary = rot * Complex64::from_polar(1.0, phase);

    // Hermitian generator of the planar rotation.
    let k = (outer(&perp, &p0) - outer(&p0, &perp)) * Complex64::new(0.0, 1.0);
    let generator = k * cr(eta / (2.0 * cert));

    let out = EpsRotation { support, unitary, generator, global_phase: phase, eps_certificate: cert };
    debug_assert!(out.representation_error() < 1e-9);
    Ok(out)
}

/// Subsystem layout for approximate decoupling: a pure state on `A⊗A'`, a pure
/// state on `B⊗B'`, and a unitary on `A⊗B⊗C` applied with `C` in `|0⟩`.
#[derive(Debug, Clone)]
pub struct DecoupleInstance {
    pub dim_a: usize,
    pub dim_a_env: usize,
    pub dim_b: usize,
    pub dim_b_env: usize,
    pub dim_c: usize,
    pub psi: PureState,
    pub phi: PureState,
    pub v: CMatrix,
}

#[derive(Debug)]
pub struct Decoupled {
    pub w_a: CMatrix,
    pub u_b: CMatrix,
    /// Distance between the V-evolved state and the (W_A⊗U_B)-evolved one.
    pub achieved: f64,
    /// Measured hypothesis distance to the product reference.
    pub hypothesis: f64,
}

impl DecoupleInstance {
    fn dims(&self) -> Vec<usize> {
        vec![self.dim_a, self.dim_a_env, self.dim_b, self.dim_b_env, self.dim_c]
    }

    fn input_state(&self) -> CVector {
        let mut c0 = CVector::zeros(self.dim_c);
        c0[0] = cr(1.0);
        kron_vec(&kron_vec(self.psi.amplitudes(), self.phi.amplitudes()), &c0)
    }

    fn evolved(&self) -> Result<PureState> {
        if self.psi.dim() != self.dim_a * self.dim_a_env || self.phi.dim() != self.dim_b * self.dim_b_env
        {
            return Err(Error::Contract("decouple: state dimensions do not match layout".into()));
        }
        if self.v.nrows() != self.dim_a * self.dim_b * self.dim_c {
            return Err(Error::Contract("decouple: V dimension does not match A⊗B⊗C".into()));
        }
        let dims = self.dims();
        PureState::new(apply_op(&self.input_state(), &dims, &[0, 2, 4], &self.v))
    }
}

/// One Uhlmann step: unitary on the `purifying` subsystem aligning `state`
/// with `target`, both pure on (purifying ⊗ kept) with the purifying factor
/// first.
fn uhlmann_on_first_factor(
    state: &PureState,
    target: &PureState,
    dim_first: usize,
    dim_rest: usize,
) -> Result<CMatrix> {
    if dim_first == 1 {
        return Ok(CMatrix::identity(1, 1));
    }
    // Reorder so the purifying register is last (system ⊗ ancilla).
    let dims = [dim_first, dim_rest];
    let flip = |s: &PureState| -> Result<PureState> {
        PureState::new(permute_state(s.amplitudes(), &dims, &[1, 0]))
    };
    let s = flip(state)?;
    let t = flip(target)?;
    let marg = DensityOperator::new(partial_trace_pure(s.amplitudes(), &[dim_rest, dim_first], &[0]))?;
    let marg_t =
        DensityOperator::new(partial_trace_pure(t.amplitudes(), &[dim_rest, dim_first], &[0]))?;
    uhlmann_unitary(&marg, &marg_t, &s, &t)
}

fn decouple_with_targets(
    inst: &DecoupleInstance,
    psi_target: &PureState,
    phi_target: &PureState,
    eps: f64,
) -> Result<Decoupled> {
    let evolved = inst.evolved()?;
    let dims = inst.dims();
    let mut c0 = CVector::zeros(inst.dim_c);
    c0[0] = cr(1.0);
    let reference = PureState::new(kron_vec(
        &kron_vec(psi_target.amplitudes(), phi_target.amplitudes()),
        &c0,
    ))?;
    let hypothesis = trace_distance_pure(&evolved, &reference);
    if hypothesis > eps * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::Contract(format!(
            "decoupling hypothesis violated: measured {hypothesis:.6e} > eps {eps:.6e}"
        )));
    }

    let w_a = uhlmann_on_first_factor(&inst.psi, psi_target, inst.dim_a, inst.dim_a_env)?;
    let u_b = uhlmann_on_first_factor(&inst.phi, phi_target, inst.dim_b, inst.dim_b_env)?;

    let mut moved = inst.input_state();
    if inst.dim_a > 1 {
        moved = apply_op(&moved, &dims, &[0], &w_a);
    }
    if inst.dim_b > 1 {
        moved = apply_op(&moved, &dims, &[2], &u_b);
    }
    let achieved = trace_distance_pure(&evolved, &PureState::new(moved)?);
    Ok(Decoupled { w_a, u_b, achieved, hypothesis })
}

/// Approximate decoupling: find local unitaries `W_A`, `U_B` such that the
/// `V`-evolved input is within `3·eps` of the `(W_A⊗U_B)`-evolved input.
/// The product reference is taken from the evolved state's own marginals
/// (dominant eigenvectors).
pub fn decouple(inst: &DecoupleInstance, eps: f64) -> Result<Decoupled> {
    let evolved = inst.evolved()?;
    let dims = inst.dims();
    let top_eigvec = |keep: &[usize]| -> Result<PureState> {
        let marg = partial_trace_pure(evolved.amplitudes(), &dims, keep);
        let (vals, vecs) = linalg::eigh(&marg);
        let last = vals.len() - 1;
        PureState::normalized(vecs.column(last).into_owned())
    };
    let psi_target = top_eigvec(&[0, 1])?;
    let phi_target = top_eigvec(&[2, 3])?;
    decouple_with_targets(inst, &psi_target, &phi_target, eps)
}

/// The reference-plus-rotations form of a state near a shallow circuit.
#[derive(Debug)]
pub struct LocalParameterization {
    pub base: BrickworkCircuit,
    /// Rotations in application order (first entry applied first to `|0…0⟩`).
    pub rotations: Vec<EpsRotation>,
    pub n_gate: usize,
    pub max_support: usize,
    pub max_overlap: usize,
    /// Total real parameters: Σ (4^{support} − 1).
    pub param_total: f64,
    /// Measured trace distance between the target and estimate states.
    pub measured_eps: f64,
    /// Per-block decoupling hypothesis distances (second layer).
    pub block_hypotheses: Vec<f64>,
    /// Per-rotation localization distances.
    pub localization_distances: Vec<f64>,
    pub reconstruction_error: f64,
}

impl LocalParameterization {
    /// `Û · (∏ rotations) |0…0⟩` recomputed from scratch.
    pub fn rebuild_state(&self) -> Result<PureState> {
        let n = self.base.n();
        let mut state = CVector::zeros(1usize << n);
        state[0] = cr(1.0);
        for rot in &self.rotations {
            if rot.support.is_empty() {
                state *= rot.unitary[(0, 0)];
            } else {
                state = rot.as_local_op().apply(&state, n);
            }
        }
        let dims = vec![2usize; n];
        for layer in self.base.layers() {
            for gate in layer {
                state = apply_op(&state, &dims, &[gate.pair.0, gate.pair.1], &gate.matrix);
            }
        }
        PureState::new(state)
    }
}

struct SceneSide {
    /// First-layer block, if the region has one.
    comp: Option<usize>,
    /// Shared qubits between the block and that component.
    shared: Vec<usize>,
}

fn component_state(block: &BlockGate) -> Result<PureState> {
    let dim = 1usize << block.support.len();
    let mut v = CVector::zeros(dim);
    v[0] = cr(1.0);
    PureState::new(&block.unitary * v)
}

/// Reorder a component state so the `shared` qubits form the leading factor.
fn reorder_shared_first(
    state: &PureState,
    support: &[usize],
    shared: &[usize],
) -> Result<PureState> {
    let k = support.len();
    let dims = vec![2usize; k];
    let shared_pos: Vec<usize> = shared.iter().map(|q| support.iter().position(|s| s == q).unwrap()).collect();
    let rest_pos: Vec<usize> = (0..k).filter(|p| !shared_pos.contains(p)).collect();
    let perm: Vec<usize> = shared_pos.iter().chain(rest_pos.iter()).copied().collect();
    PureState::new(permute_state(state.amplitudes(), &dims, &perm))
}

/// Full localization pipeline: rewrite the target state as the estimate circuit
/// followed by at most `n/d+4` small rotations, each on a bounded support,
/// with at most 4 rotations touching any qubit.
pub fn parameterize(
    target: &BrickworkCircuit,
    estimate: &BrickworkCircuit,
    eps: f64,
) -> Result<LocalParameterization> {
    if target.n() != estimate.n() || target.depth() != estimate.depth() {
        return Err(Error::Contract("parameterize: circuits must share n and d".into()));
    }
    let n = target.n();
    let d = target.depth();
    if d == 0 {
        return Err(Error::Contract("parameterize requires depth ≥ 1".into()));
    }
    let psi_target = target.prepare_state()?;
    let psi_estimate = estimate.prepare_state()?;
    let measured_eps = trace_distance_pure(&psi_target, &psi_estimate);
    if measured_eps > eps * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::Contract(format!(
            "parameterize precondition violated: measured distance {measured_eps:.6e} > eps {eps:.6e}"
        )));
    }

    let red_t = two_layer_reduce(target)?;
    let red_e = two_layer_reduce(estimate)?;
    if red_t.second_layer.len() != red_e.second_layer.len()
        || red_t.first_layer.len() != red_e.first_layer.len()
    {
        return Err(Error::Contract("parameterize: reductions disagree in block structure".into()));
    }

    // Scene sides: which first-layer component shares each block's T/B region.
    let side = |shared: &[usize]| -> Result<SceneSide> {
        if shared.is_empty() {
            return Ok(SceneSide { comp: None, shared: vec![] });
        }
        let owners: Vec<usize> = red_t
            .first_layer
            .iter()
            .enumerate()
            .filter(|(_, c)| shared.iter().any(|q| c.support.contains(q)))
            .map(|(i, _)| i)
            .collect();
        if owners.len() != 1 {
            return Err(Error::Contract(
                "parameterize: block region does not attach to a unique first-layer component".into(),
            ));
        }
        Ok(SceneSide { comp: Some(owners[0]), shared: shared.to_vec() })
    };

    let m = red_t.second_layer.len();
    let n_comp = red_t.first_layer.len();

    // Dressing unitaries accumulated per first-layer component: maps
    // component → list of (shared qubits, unitary) acting inside it.
    let mut dress: Vec<LocalOp> = Vec::new();
    let mut rot_stack: Vec<LocalOp> = Vec::new();
    let mut block_hypotheses = vec![0.0; m];
    let mut localization_distances = Vec::new();
    let mut second_rotations: Vec<LocalOp> = Vec::new();

    // Component states (target and estimate) once.
    let comp_states_t: Vec<PureState> =
        red_t.first_layer.iter().map(component_state).collect::<Result<_>>()?;
    let comp_states_e: Vec<PureState> =
        red_e.first_layer.iter().map(component_state).collect::<Result<_>>()?;

    // Process second-layer blocks right-to-left; each step may conjugate the
    // previously collected rotations by this block's inversion factor.
    for j in (0..m).rev() {
        let blk_t = &red_t.second_layer[j];
        let blk_e = &red_e.second_layer[j];
        let regions = &red_t.regions[j];
        let left = side(&regions.top)?;
        let right = side(&regions.bottom)?;

        // Scene support: block ∪ adjacent component supports, sorted.
        let mut scene: Vec<usize> = blk_t.support.clone();
        for s in [&left, &right] {
            if let Some(ci) = s.comp {
                scene.extend(red_t.first_layer[ci].support.iter().copied());
            }
        }
        scene.sort_unstable();
        scene.dedup();

        // ω_j and its estimate counterpart on the scene.
        let scene_dim = 1usize << scene.len();
        let mut base = CVector::zeros(scene_dim);
        base[0] = cr(1.0);
        let mut omega = base.clone();
        let mut omega_hat = base.clone();
        for s in [&left, &right] {
            if let Some(ci) = s.comp {
                let op_t = LocalOp::new(
                    red_t.first_layer[ci].support.clone(),
                    red_t.first_layer[ci].unitary.clone(),
                );
                let op_e = LocalOp::new(
                    red_e.first_layer[ci].support.clone(),
                    red_e.first_layer[ci].unitary.clone(),
                );
                let dims = vec![2usize; scene.len()];
                let targets: Vec<usize> = op_t
                    .qubits
                    .iter()
                    .map(|q| scene.iter().position(|x| x == q).unwrap())
                    .collect();
                omega = apply_op(&omega, &dims, &targets, &op_t.mat);
                omega_hat = apply_op(&omega_hat, &dims, &targets, &op_e.mat);
            }
        }
        let omega = PureState::new(omega)?;
        let omega_hat = PureState::new(omega_hat)?;

        // Inversion factor (Û_j⁽²⁾)†·U_j⁽²⁾ as a local op on the block.
        let inv_factor = LocalOp::new(blk_e.support.clone(), blk_e.unitary.adjoint())
            .then_after(&LocalOp::new(blk_t.support.clone(), blk_t.unitary.clone()));

        // Uhlmann dressings toward the estimate's component states.
        let mut dress_ops: Vec<LocalOp> = Vec::new();
        for s in [&left, &right] {
            if let Some(ci) = s.comp {
                let sup = &red_t.first_layer[ci].support;
                let shared = &s.shared;
                let sorted_shared = {
                    let mut v = shared.clone();
                    v.sort_unstable();
                    v
                };
                let dim_shared = 1usize << sorted_shared.len();
                let dim_rest = 1usize << (sup.len() - sorted_shared.len());
                let st = reorder_shared_first(&comp_states_t[ci], sup, &sorted_shared)?;
                let se = reorder_shared_first(&comp_states_e[ci], sup, &sorted_shared)?;
                let w = uhlmann_on_first_factor(&st, &se, dim_shared, dim_rest)?;
                dress_ops.push(LocalOp::new(sorted_shared, w));
            }
        }

        // Hypothesis distance for this block, against the estimate pieces.
        let dims = vec![2usize; scene.len()];
        let inv_targets: Vec<usize> = inv_factor
            .qubits
            .iter()
            .map(|q| scene.iter().position(|x| x == q).unwrap())
            .collect();
        let evolved =
            PureState::new(apply_op(omega.amplitudes(), &dims, &inv_targets, &inv_factor.mat))?;
        block_hypotheses[j] = trace_distance_pure(&evolved, &omega_hat);

        // Localization: R such that (Û†U)·ω = R·(W_T⊗W_B)·ω exactly.
        let mut dressed = omega.amplitudes().clone();
        for op in &dress_ops {
            let targets: Vec<usize> =
                op.qubits.iter().map(|q| scene.iter().position(|x| x == q).unwrap()).collect();
            dressed = apply_op(&dressed, &dims, &targets, &op.mat);
        }
        let dressed = PureState::new(dressed)?;
        let delta = trace_distance_pure(&evolved, &dressed);
        localization_distances.push(delta);

        // Build Ṽ = (Û†U)·(W_T⊗W_B)† on the scene.
        let mut v_tilde = inv_factor.embed_to(&scene);
        for op in &dress_ops {
            v_tilde *= op.embed_to(&scene).adjoint();
        }
        let rot = localize_unitary(&v_tilde, &dressed, (delta * (1.0 + 1e-6)).min(0.999), scene.clone())?;
        let mut rot_op = LocalOp::new(scene.clone(), rot.unitary.clone());

        // Conjugate previously collected rotations by this block's factor.
        for r in rot_stack.iter_mut() {
            if r.overlaps(&inv_factor) {
                *r = r.conjugated_by(&inv_factor);
            }
        }
        // Move this rotation left past the dressing collected so far.
        for w in dress.iter() {
            if rot_op.overlaps(w) {
                rot_op = rot_op.conjugated_by(w);
            }
        }
        rot_stack.push(rot_op);
        dress.extend(dress_ops);
    }

    // First-layer localization: P_i with (Û_i⁽¹⁾)†·(dress_i)·U_i⁽¹⁾|0⟩ = P_i|0⟩.
    let mut first_rotations: Vec<LocalOp> = Vec::new();
    for ci in 0..n_comp {
        let sup = red_t.first_layer[ci].support.clone();
        let mut v_op = LocalOp::new(sup.clone(), red_t.first_layer[ci].unitary.clone());
        for w in dress.iter() {
            if w.qubits.iter().all(|q| sup.contains(q)) && v_op.overlaps(w) {
                v_op = LocalOp::new(sup.clone(), w.embed_to(&sup) * &v_op.mat);
            }
        }
        let v_final = LocalOp::new(sup.clone(), red_e.first_layer[ci].unitary.adjoint() * &v_op.mat);
        let zero = PureState::basis(1usize << sup.len(), 0);
        let moved = PureState::new(&v_final.mat * zero.amplitudes())?;
        let dist = trace_distance_pure(&moved, &zero);
        localization_distances.push(dist);
        let rot = localize_unitary(&v_final.mat, &zero, (dist * (1.0 + 1e-6)).min(0.999), sup.clone())?;
        first_rotations.push(LocalOp::new(sup, rot.unitary));
    }

    // Conjugate accumulated second-layer rotations by (Û⁽¹⁾)†.
    for r in rot_stack.iter_mut() {
        for blk in &red_e.first_layer {
            let inv = LocalOp::new(blk.support.clone(), blk.unitary.adjoint());
            if r.overlaps(&inv) {
                *r = r.conjugated_by(&inv);
            }
        }
    }

    // Application order: first-layer rotations, then second-layer rotations
    // from the leftmost block outward (rot_stack holds rightmost-first).
    second_rotations.extend(rot_stack.into_iter().rev());
    let ordered: Vec<LocalOp> = first_rotations
        .into_iter()
        .chain(second_rotations)
        .map(|op| op.pruned())
        .collect();

    let mut rotations = Vec::with_capacity(ordered.len());
    for op in &ordered {
        if op.qubits.is_empty() {
            rotations.push(EpsRotation {
                support: vec![],
                unitary: op.mat.clone(),
                generator: CMatrix::zeros(1, 1),
                global_phase: op.mat[(0, 0)].arg(),
                eps_certificate: 0.0,
            });
        } else {
            rotations.push(extract_rotation(&op.mat, op.qubits.clone())?);
        }
    }

    let n_gate = rotations.len();
    let max_support = rotations.iter().map(|r| r.support.len()).max().unwrap_or(0);
    let mut per_qubit = vec![0usize; n];
    for r in &rotations {
        for &q in &r.support {
            per_qubit[q] += 1;
        }
    }
    let max_overlap = per_qubit.iter().copied().max().unwrap_or(0);
    let param_total: f64 = rotations.iter().map(|r| 4f64.powi(r.support.len() as i32) - 1.0).sum();

    let mut out = LocalParameterization {
        base: estimate.clone(),
        rotations,
        n_gate,
        max_support,
        max_overlap,
        param_total,
        measured_eps,
        block_hypotheses,
        localization_distances,
        reconstruction_error: f64::NAN,
    };
    let rebuilt = out.rebuild_state()?;
    out.reconstruction_error = (rebuilt.amplitudes() - psi_target.amplitudes()).norm();

    // Counting invariants.
    if out.n_gate > n / d + 4 {
        return Err(Error::Contract(format!("{} rotations exceed n/d+4", out.n_gate)));
    }
    if out.max_support > (8 * d).min(n) {
        return Err(Error::Contract(format!("rotation support {} exceeds 8d", out.max_support)));
    }
    if out.max_overlap > 4 {
        return Err(Error::Contract(format!("rotation overlap {} exceeds 4", out.max_overlap)));
    }
    if out.reconstruction_error > 1e-8 {
        return Err(Error::Contract(format!(
            "reconstruction error {:.3e} exceeds 1e-8",
            out.reconstruction_error
        )));
    }
    Ok(out)
}
