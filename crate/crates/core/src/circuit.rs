//! Brickwork shallow circuits: state preparation, serialization, random
//! instances, and the two-layer lightcone reduction.
//!
//! Layer `l` (0-indexed) holds gates on pairs `(l%2, l%2+1), (l%2+2, …)`.
//! The reduction rewrites the depth-`d` circuit as `U = U⁽²⁾·U⁽¹⁾`, two
//! layers of block gates with disjoint supports inside each layer. Blocks of
//! the second layer are forward lightcones grown left-to-right; every gate
//! causally above a collected gate joins the same block, so leftover gates
//! commute past the blocks and slide to the first layer.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, random_hermitian_unit_norm, random_unitary, unitarity_error, PureState};
use crate::tensor::{apply_op, CMatrix, CVector};

/// Desk-scale cap on dense statevector simulation.
pub const MAX_QUBITS: usize = 12;

/// A two-qubit gate on the adjacent pair `(qubits.0, qubits.0 + 1)`.
#[derive(Debug, Clone)]
pub struct Gate {
    pub pair: (usize, usize),
    pub matrix: CMatrix,
}

/// An `n`-qubit, depth-`d` brickwork circuit.
#[derive(Debug, Clone)]
pub struct BrickworkCircuit {
    n: usize,
    layers: Vec<Vec<Gate>>,
}

impl BrickworkCircuit {
    /// Validate and build. Gates in layer `l` must sit on the brickwork
    /// offset pattern for `l`, act on disjoint pairs, and be unitary.
    pub fn new(n: usize, layers: Vec<Vec<Gate>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract("brickwork circuit needs at least 2 qubits".into()));
        }
        for (l, layer) in layers.iter().enumerate() {
            let mut used = vec![false; n];
            for gate in layer {
                let (a, b) = gate.pair;
                if b != a + 1 || b >= n {
                    return Err(Error::Contract(format!(
                        "layer {l}: pair ({a},{b}) is not an adjacent in-range pair"
                    )));
                }
                if a % 2 != l % 2 {
                    return Err(Error::Contract(format!(
                        "layer {l}: pair ({a},{b}) violates the brickwork offset pattern"
                    )));
                }
                if used[a] || used[b] {
                    return Err(Error::Contract(format!("layer {l}: overlapping pairs at {a}")));
                }
                used[a] = true;
                used[b] = true;
                if gate.matrix.nrows() != 4 || gate.matrix.ncols() != 4 {
                    return Err(Error::Contract(format!("layer {l}: gate is not 4x4")));
                }
                let uerr = unitarity_error(&gate.matrix);
                if uerr > linalg::TOL_INVARIANT {
                    return Err(Error::Contract(format!(
                        "layer {l}: gate at {a} not unitary (deviation {uerr:.3e})"
                    )));
                }
            }
        }
        Ok(Self { n, layers })
    }

    /// Full random brickwork circuit: every offset-pattern slot filled with a
    /// Haar-like gate.
    pub fn random(n: usize, d: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        let mut layers = Vec::with_capacity(d);
        for l in 0..d {
            let mut layer = Vec::new();
            let mut a = l % 2;
            while a + 1 < n {
                layer.push(Gate {
                    pair: (a, a + 1),
                    matrix: random_unitary(4, rng),
                });
                a += 2;
            }
            layers.push(layer);
        }
        Self::new(n, layers)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// Dense circuit unitary on all `n` qubits (capacity-capped).
    pub fn full_unitary(&self) -> Result<CMatrix> {
        if self.n > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "full unitary of {} qubits exceeds the {MAX_QUBITS}-qubit cap",
                self.n
            )));
        }
        let dim = 1usize << self.n;
        let dims = vec![2usize; self.n];
        let mut u = CMatrix::identity(dim, dim);
        for layer in &self.layers {
            for gate in layer {
                let embedded =
                    crate::tensor::embed_op(&dims, &[gate.pair.0, gate.pair.1], &gate.matrix);
                u = embedded * u;
            }
        }
        Ok(u)
    }

    /// `U|0…0⟩` by direct statevector propagation.
    pub fn prepare_state(&self) -> Result<PureState> {
        if self.n > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "statevector of {} qubits exceeds the {MAX_QUBITS}-qubit cap",
                self.n
            )));
        }
        let dims = vec![2usize; self.n];
        let mut state = CVector::zeros(1usize << self.n);
        state[0] = cr(1.0);
        for layer in &self.layers {
            for gate in layer {
                state = apply_op(&state, &dims, &[gate.pair.0, gate.pair.1], &gate.matrix);
            }
        }
        PureState::new(state)
    }

    /// Multiply every gate by an independent random rotation whose diamond
    /// distance from the identity is at most `eps`.
    pub fn perturb(&self, eps: f64, rng: &mut impl rand::Rng) -> Result<BrickworkCircuit> {
        if eps < 0.0 {
            return Err(Error::Contract("perturbation strength must be nonnegative".into()));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.len());
            for gate in layer {
                let matrix = if eps == 0.0 {
                    gate.matrix.clone()
                } else {
                    let h = random_hermitian_unit_norm(4, rng);
                    let theta: f64 = rng.gen_range(0.0..=eps);
                    // exp(−iθH) has eigenphase arc ≤ 2θ, so the diamond upper
                    // bound 2·sin(θ/2) stays ≤ eps.
                    let rot = linalg::exp_i_hermitian(&h, theta);
                    rot * &gate.matrix
                };
                out.push(Gate { pair: gate.pair, matrix });
            }
            layers.push(out);
        }
        BrickworkCircuit::new(self.n, layers)
    }
}

/// Serialization form: gates as `{pair, matrix}` with each entry `[re, im]`.
#[derive(Serialize, Deserialize)]
struct GateDoc {
    pair: [usize; 2],
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    n: usize,
    d: usize,
    layers: Vec<Vec<GateDoc>>,
}

impl BrickworkCircuit {
    pub fn to_json(&self) -> String {
        let doc = CircuitDoc {
            n: self.n,
            d: self.depth(),
            layers: self
                .layers
                .iter()
                .map(|layer| {
                    layer
                        .iter()
                        .map(|g| GateDoc {
                            pair: [g.pair.0, g.pair.1],
                            matrix: (0..4)
                                .map(|i| {
                                    (0..4).map(|j| [g.matrix[(i, j)].re, g.matrix[(i, j)].im]).collect()
                                })
                                .collect(),
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("circuit serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CircuitDoc =
            serde_json::from_str(text).map_err(|e| Error::Contract(format!("bad circuit document: {e}")))?;
        let layers = doc
            .layers
            .into_iter()
            .map(|layer| {
                layer
                    .into_iter()
                    .map(|g| {
                        let matrix = CMatrix::from_fn(4, 4, |i, j| {
                            Complex64::new(g.matrix[i][j][0], g.matrix[i][j][1])
                        });
                        Gate { pair: (g.pair[0], g.pair[1]), matrix }
                    })
                    .collect()
            })
            .collect();
        Self::new(doc.n, layers)
    }
}

/// A block gate of the reduced two-layer circuit: a unitary on a sorted
/// contiguous support.
#[derive(Debug, Clone)]
pub struct BlockGate {
    pub support: Vec<usize>,
    pub unitary: CMatrix,
    /// Original gates absorbed into this block, as (layer, pair-start).
    pub members: Vec<(usize, usize)>,
}

/// Sub-supports of a second-layer block: overlap with the left first-layer
/// block (top), exclusive middle, overlap with the right first-layer block
/// (bottom).
#[derive(Debug, Clone, Default)]
pub struct BlockRegions {
    pub top: Vec<usize>,
    pub middle: Vec<usize>,
    pub bottom: Vec<usize>,
}

/// The two-layer reduction `U = U⁽²⁾·U⁽¹⁾`.
#[derive(Debug)]
pub struct TwoLayerReduction {
    pub n: usize,
    pub d: usize,
    pub first_layer: Vec<BlockGate>,
    pub second_layer: Vec<BlockGate>,
    /// T/M/B split of each second-layer block's support.
    pub regions: Vec<BlockRegions>,
    /// Largest block support encountered.
    pub max_support: usize,
}

impl TwoLayerReduction {
    pub fn block_count(&self) -> usize {
        self.first_layer.len() + self.second_layer.len()
    }
}

/// Greedy lightcone grouping of a brickwork circuit into two layers.
pub fn two_layer_reduce(circuit: &BrickworkCircuit) -> Result<TwoLayerReduction> {
    let n = circuit.n();
    let d = circuit.depth();
    if d == 0 {
        return Ok(TwoLayerReduction {
            n,
            d,
            first_layer: vec![],
            second_layer: vec![],
            regions: vec![],
            max_support: 0,
        });
    }

    // Gate bookkeeping: (layer, index-in-layer), assigned flag.
    let mut assigned: Vec<Vec<bool>> = circuit.layers().iter().map(|l| vec![false; l.len()]).collect();
    let support_of = |l: usize, k: usize| -> (usize, usize) { circuit.layers()[l][k].pair };

    // A gate is forced to stay in the first layer if its support crosses the
    // left boundary `s`, or if any forced gate sits above it on a shared
    // qubit. Forcing propagates downward so that no assigned gate ever ends
    // up below a leftover gate it overlaps.
    let compute_forced = |assigned: &Vec<Vec<bool>>, s: usize| -> Vec<Vec<bool>> {
        let mut forced: Vec<Vec<bool>> = assigned.iter().map(|l| vec![false; l.len()]).collect();
        let mut forced_above = vec![false; n];
        for l in (0..d).rev() {
            for k in 0..circuit.layers()[l].len() {
                if assigned[l][k] {
                    continue;
                }
                let (a, b) = support_of(l, k);
                let bad = a < s;
                forced[l][k] = bad || forced_above[a] || forced_above[b];
            }
            for k in 0..circuit.layers()[l].len() {
                if forced[l][k] {
                    let (a, b) = support_of(l, k);
                    forced_above[a] = true;
                    forced_above[b] = true;
                }
            }
        }
        forced
    };

    // Forward-lightcone sweep over unassigned, unforced gates touching the
    // growing qubit interval.
    let sweep = |assigned: &mut Vec<Vec<bool>>,
                 forced: &Vec<Vec<bool>>,
                 seed: (usize, usize)|
     -> (Vec<(usize, usize)>, Vec<usize>) {
        let mut lo = seed.0;
        let mut hi = seed.1; // inclusive
        let mut members = Vec::new();
        for l in 0..d {
            for k in 0..circuit.layers()[l].len() {
                if assigned[l][k] || forced[l][k] {
                    continue;
                }
                let (a, b) = support_of(l, k);
                if b >= lo && a <= hi {
                    assigned[l][k] = true;
                    members.push((l, k));
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
            }
        }
        let support: Vec<usize> = if members.is_empty() { vec![] } else { (lo..=hi).collect() };
        (members, support)
    };

    type BlockMembers = Vec<(Vec<(usize, usize)>, Vec<usize>)>;
    let mut second_members: BlockMembers = Vec::new();
    // First block: lightcone of the first two qubits.
    {
        let forced = compute_forced(&assigned, 0);
        let (members, support) = sweep(&mut assigned, &forced, (0, 1));
        if !members.is_empty() {
            second_members.push((members, support));
        }
    }
    // Subsequent blocks: lightcones of the next 2d qubits.
    let mut s = second_members
        .last()
        .map(|(_, sup)| sup.last().unwrap() + 1)
        .unwrap_or(2);
    while s < n {
        let hi = (s + 2 * d - 1).min(n - 1);
        let forced = compute_forced(&assigned, s);
        let (members, support) = sweep(&mut assigned, &forced, (s, hi));
        if members.is_empty() {
            s = hi + 1;
        } else {
            s = support.last().unwrap() + 1;
            second_members.push((members, support));
        }
    }

    // Leftover gates, grouped into support-connected components.
    let mut leftover: Vec<(usize, usize)> = Vec::new();
    for l in 0..d {
        for k in 0..circuit.layers()[l].len() {
            if !assigned[l][k] {
                leftover.push((l, k));
            }
        }
    }
    let mut first_members: BlockMembers = Vec::new();
    {
        let mut intervals: Vec<(usize, usize, Vec<(usize, usize)>)> = Vec::new();
        let mut sorted = leftover.clone();
        sorted.sort_by_key(|&(l, k)| (support_of(l, k).0, l));
        for (l, k) in sorted {
            let (a, b) = support_of(l, k);
            match intervals.last_mut() {
                Some((_, hi, mem)) if a <= *hi => {
                    *hi = (*hi).max(b);
                    mem.push((l, k));
                }
                _ => intervals.push((a, b, vec![(l, k)])),
            }
        }
        for (lo, hi, mem) in intervals {
            first_members.push((mem, (lo..=hi).collect()));
        }
    }

    // Materialize block unitaries (original time order inside each block).
    let build_block = |members: &[(usize, usize)], support: &[usize]| -> BlockGate {
        let dims = vec![2usize; support.len()];
        let dim = 1usize << support.len();
        let mut u = CMatrix::identity(dim, dim);
        let mut ordered = members.to_vec();
        ordered.sort_by_key(|&(l, _)| l);
        for &(l, k) in &ordered {
            let gate = &circuit.layers()[l][k];
            let t0 = support.iter().position(|&q| q == gate.pair.0).unwrap();
            let t1 = support.iter().position(|&q| q == gate.pair.1).unwrap();
            let embedded = crate::tensor::embed_op(&dims, &[t0, t1], &gate.matrix);
            u = embedded * u;
        }
        BlockGate {
            support: support.to_vec(),
            unitary: u,
            members: members.iter().map(|&(l, k)| (l, support_of(l, k).0)).collect(),
        }
    };

    let second_layer: Vec<BlockGate> =
        second_members.iter().map(|(m, s)| build_block(m, s)).collect();
    let first_layer: Vec<BlockGate> =
        first_members.iter().map(|(m, s)| build_block(m, s)).collect();

    // T/M/B regions per second-layer block.
    let regions: Vec<BlockRegions> = second_layer
        .iter()
        .map(|blk| {
            let mut reg = BlockRegions::default();
            let bmin = *blk.support.first().unwrap();
            for &q in &blk.support {
                let owner = first_layer.iter().find(|a| a.support.contains(&q));
                match owner {
                    Some(a) if *a.support.first().unwrap() < bmin => reg.top.push(q),
                    Some(_) => reg.bottom.push(q),
                    None => reg.middle.push(q),
                }
            }
            reg
        })
        .collect();

    let max_support = second_layer
        .iter()
        .chain(first_layer.iter())
        .map(|b| b.support.len())
        .max()
        .unwrap_or(0);

    let reduction = TwoLayerReduction { n, d, first_layer, second_layer, regions, max_support };

    // Structural invariants.
    for layer in [&reduction.first_layer, &reduction.second_layer] {
        let mut seen = vec![false; n];
        for blk in layer.iter() {
            for &q in &blk.support {
                if seen[q] {
                    return Err(Error::Contract(format!(
                        "two-layer reduction produced overlapping blocks at qubit {q}"
                    )));
                }
                seen[q] = true;
            }
        }
    }
    if reduction.second_layer.len() > n / (2 * d) + 2 {
        return Err(Error::Contract(format!(
            "second layer has {} blocks, exceeding n/(2d)+2 = {}",
            reduction.second_layer.len(),
            n / (2 * d) + 2
        )));
    }
    if reduction.block_count() > n / d + 4 {
        return Err(Error::Contract(format!(
            "{} total blocks exceed n/d+4 = {}",
            reduction.block_count(),
            n / d + 4
        )));
    }
    if reduction.max_support > 3 * d {
        return Err(Error::Contract(format!(
            "block support {} exceeds 3d = {}",
            reduction.max_support,
            3 * d
        )));
    }

    Ok(reduction)
}

impl TwoLayerReduction {
    /// Rebuild the full circuit unitary from the two block layers.
    pub fn reconstructed_unitary(&self) -> Result<CMatrix> {
        if self.n > MAX_QUBITS {
            return Err(Error::Capacity("reconstruction exceeds qubit cap".into()));
        }
        let dims = vec![2usize; self.n];
        let dim = 1usize << self.n;
        let mut u = CMatrix::identity(dim, dim);
        for blk in &self.first_layer {
            u = crate::tensor::embed_op(&dims, &blk.support, &blk.unitary) * u;
        }
        for blk in &self.second_layer {
            u = crate::tensor::embed_op(&dims, &blk.support, &blk.unitary) * u;
        }
        Ok(u)
    }

    /// Whether any block support exceeds the tighter 2d figure (the looser
    /// 3d bound is always enforced at construction).
    pub fn exceeds_2d(&self) -> bool {
        self.max_support > 2 * self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use crate::rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn empty_circuit_prepares_vacuum() {
        let c = BrickworkCircuit::new(3, vec![]).unwrap();
        let s = c.prepare_state().unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-15);
        assert!(s.amplitudes().iter().skip(1).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn bell_preparation() {
        // H on qubit 0 absorbed into a single two-qubit gate: (H⊗I) then CNOT.
        let h = FRAC_1_SQRT_2;
        let mut m = CMatrix::zeros(4, 4);
        // CNOT * (H ⊗ I) in the two-qubit computational basis.
        let hi = CMatrix::from_row_slice(
            4,
            4,
            &[
                cr(h), cr(0.0), cr(h), cr(0.0),
                cr(0.0), cr(h), cr(0.0), cr(h),
                cr(h), cr(0.0), cr(-h), cr(0.0),
                cr(0.0), cr(h), cr(0.0), cr(-h),
            ],
        );
        let cnot = CMatrix::from_row_slice(
            4,
            4,
            &[
                cr(1.0), cr(0.0), cr(0.0), cr(0.0),
                cr(0.0), cr(1.0), cr(0.0), cr(0.0),
                cr(0.0), cr(0.0), cr(0.0), cr(1.0),
                cr(0.0), cr(0.0), cr(1.0), cr(0.0),
            ],
        );
        m.copy_from(&(cnot * hi));
        let c = BrickworkCircuit::new(2, vec![vec![Gate { pair: (0, 1), matrix: m }]]).unwrap();
        let s = c.prepare_state().unwrap();
        let a = s.amplitudes();
        assert!((a[0].re - h).abs() < 1e-12);
        assert!(a[1].norm() < 1e-12);
        assert!(a[2].norm() < 1e-12);
        assert!((a[3].re - h).abs() < 1e-12);
    }

    #[test]
    fn prepare_state_matches_full_matrix_product() {
        let mut r = rng::from_seed(21);
        let c = BrickworkCircuit::random(6, 2, &mut r).unwrap();
        let s = c.prepare_state().unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-12);
        let u = c.full_unitary().unwrap();
        let direct = u.column(0).into_owned();
        assert!((s.amplitudes() - direct).norm() < 1e-11);
    }

    #[test]
    fn prepare_state_rejects_oversized() {
        let c = BrickworkCircuit::new(13, vec![]).unwrap();
        assert!(matches!(c.prepare_state(), Err(Error::Capacity(_))));
    }

    #[test]
    fn rejects_bad_offset_pattern() {
        let mut r = rng::from_seed(22);
        let g = Gate { pair: (1, 2), matrix: random_unitary(4, &mut r) };
        assert!(BrickworkCircuit::new(4, vec![vec![g]]).is_err());
    }

    #[test]
    fn reduction_depth_zero_is_trivial() {
        let c = BrickworkCircuit::new(4, vec![]).unwrap();
        let red = two_layer_reduce(&c).unwrap();
        assert_eq!(red.block_count(), 0);
        let u = red.reconstructed_unitary().unwrap();
        assert!(operator_norm(&(u - CMatrix::identity(16, 16))) < 1e-12);
    }

    #[test]
    fn reduction_d1_n6() {
        let mut r = rng::from_seed(23);
        let c = BrickworkCircuit::random(6, 1, &mut r).unwrap();
        let red = two_layer_reduce(&c).unwrap();
        assert!(red.second_layer.len() <= 5);
        assert!(red.first_layer.is_empty());
        let dev = operator_norm(&(red.reconstructed_unitary().unwrap() - c.full_unitary().unwrap()));
        assert!(dev < 1e-10, "dev={dev}");
    }

    #[test]
    fn reduction_random_circuits_reconstruct_exactly() {
        let mut r = rng::from_seed(24);
        for trial in 0..40 {
            let n = 4 + (trial % 5);
            let d = 1 + (trial % 3).min(2);
            let c = BrickworkCircuit::random(n, d, &mut r).unwrap();
            let red = two_layer_reduce(&c).unwrap();
            assert!(red.second_layer.len() <= n / (2 * d) + 2);
            assert!(red.block_count() <= n / d + 4);
            assert!(red.max_support <= 3 * d);
            let dev =
                operator_norm(&(red.reconstructed_unitary().unwrap() - c.full_unitary().unwrap()));
            assert!(dev < 1e-10, "n={n} d={d} dev={dev}");
        }
    }

    #[test]
    fn reduction_counts_n8_d2() {
        let mut r = rng::from_seed(25);
        let c = BrickworkCircuit::random(8, 2, &mut r).unwrap();
        let red = two_layer_reduce(&c).unwrap();
        assert!(red.block_count() <= 8 / 2 + 4);
    }

    #[test]
    fn perturb_zero_is_identity() {
        let mut r = rng::from_seed(26);
        let c = BrickworkCircuit::random(4, 2, &mut r).unwrap();
        let p = c.perturb(0.0, &mut r).unwrap();
        for (la, lb) in c.layers().iter().zip(p.layers()) {
            for (ga, gb) in la.iter().zip(lb) {
                assert!(operator_norm(&(&ga.matrix - &gb.matrix)) < 1e-15);
            }
        }
    }

    #[test]
    fn perturb_respects_per_gate_diamond_bound() {
        let mut r = rng::from_seed(27);
        let c = BrickworkCircuit::random(4, 1, &mut r).unwrap();
        let eps = 0.01;
        let p = c.perturb(eps, &mut r).unwrap();
        for (la, lb) in c.layers().iter().zip(p.layers()) {
            for (ga, gb) in la.iter().zip(lb) {
                let (_, up) =
                    crate::linalg::diamond_distance_unitary_bounds(&ga.matrix, &gb.matrix).unwrap();
                assert!(up <= eps * (1.0 + 1e-9), "up={up}");
            }
        }
    }

    #[test]
    fn perturb_state_distance_telescopes() {
        let mut r = rng::from_seed(28);
        for trial in 0..100 {
            let n = 4 + (trial % 3);
            let c = BrickworkCircuit::random(n, 2, &mut r).unwrap();
            let eps = 0.02;
            let p = c.perturb(eps, &mut r).unwrap();
            let d = crate::linalg::trace_distance_pure(
                &c.prepare_state().unwrap(),
                &p.prepare_state().unwrap(),
            );
            assert!(d <= c.gate_count() as f64 * eps + 1e-9, "d={d}");
        }
    }

    #[test]
    fn serialization_roundtrip() {
        let mut r = rng::from_seed(29);
        let c = BrickworkCircuit::random(5, 2, &mut r).unwrap();
        let text = c.to_json();
        let back = BrickworkCircuit::from_json(&text).unwrap();
        assert_eq!(back.n(), 5);
        let dev = operator_norm(&(c.full_unitary().unwrap() - back.full_unitary().unwrap()));
        assert!(dev < 1e-12);
        assert_eq!(text, back.to_json());
    }
}
