//! Covering-net construction for two-qubit gates, covering-cardinality and
//! tomography sample-budget calculators, and an idealized hypothesis
//! selection oracle carrying the statistical guarantee of shadow-based
//! selection without its measurement internals.

use rand::Rng;

use crate::circuit::{BrickworkCircuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{diamond_distance_unitary_bounds, random_unitary, trace_distance_pure, PureState};

/// A finite gate family covering all two-qubit unitaries to a target radius
/// in the diamond upper bound. Members are stored in tomographic form as
/// single-gate circuits.
pub struct CoveringNet {
    pub eps: f64,
    pub members: Vec<BrickworkCircuit>,
    /// Fraction of certification probes landing within radius (1.0 when the
    /// net is certified).
    pub certified_fraction: f64,
}

/// Cheap lower bound on `min_φ‖e^{iφ}U − V‖∞` from the Frobenius norm:
/// `‖·‖∞ ≥ ‖·‖_F/√dim` and `min_φ‖e^{iφ}U−V‖_F² = 2·dim − 2|tr(U†V)|`.
fn phase_distance_lower(u: &crate::tensor::CMatrix, v: &crate::tensor::CMatrix) -> f64 {
    let dim = u.nrows();
    let mut tr = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for k in 0..dim {
            tr += u[(k, i)].conj() * v[(k, i)];
        }
    }
    ((2.0 * dim as f64 - 2.0 * tr.norm()).max(0.0) / dim as f64).sqrt()
}

/// Diamond upper bound to the nearest member with the Frobenius prefilter:
/// only candidates that could beat `threshold` get the full spectral path.
fn nearest_with_filter(
    members: &[crate::tensor::CMatrix],
    gate: &crate::tensor::CMatrix,
    threshold: f64,
) -> Result<(usize, f64)> {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, m) in members.iter().enumerate() {
        if phase_distance_lower(m, gate) > threshold.min(best.1) {
            continue;
        }
        let (_, up) = diamond_distance_unitary_bounds(m, gate)?;
        if up < best.1 {
            best = (i, up);
            if up <= 1e-12 {
                break;
            }
        }
    }
    Ok(best)
}

impl CoveringNet {
    pub fn cardinality(&self) -> usize {
        self.members.len()
    }

    fn member_matrices(&self) -> Vec<crate::tensor::CMatrix> {
        self.members.iter().map(|m| m.layers()[0][0].matrix.clone()).collect()
    }

    /// Distance from a gate to the nearest member (diamond upper bound).
    pub fn distance_to_nearest(&self, gate: &crate::tensor::CMatrix) -> Result<f64> {
        Ok(self.nearest(gate)?.1)
    }

    /// Nearest member index and distance.
    pub fn nearest(&self, gate: &crate::tensor::CMatrix) -> Result<(usize, f64)> {
        let mats = self.member_matrices();
        let (mut idx, mut up) = nearest_with_filter(&mats, gate, f64::INFINITY)?;
        if idx == usize::MAX {
            // Threshold filter cannot miss with an infinite budget, but keep
            // a dense fallback for safety.
            for (i, m) in mats.iter().enumerate() {
                let (_, u) = diamond_distance_unitary_bounds(m, gate)?;
                if u < up {
                    idx = i;
                    up = u;
                }
            }
        }
        Ok((idx, up))
    }
}

/// The covering-cardinality bound in bits:
/// `32·G·log₂(12G/eps) + 2·G·log₂(n)`.
pub fn covering_bits_bound(g: usize, eps: f64, n: usize) -> Result<f64> {
    if eps <= 0.0 || eps > 1.0 {
        return Err(Error::Contract(format!("covering bound needs eps in (0,1], got {eps}")));
    }
    if g < 1 {
        return Err(Error::Contract("covering bound needs at least one gate".into()));
    }
    let gf = g as f64;
    Ok(32.0 * gf * (12.0 * gf / eps).log2() + 2.0 * gf * (n as f64).log2())
}

const NET_MEMBER_CAP: usize = 200_000;
const NET_PROBES: usize = 1000;

fn gate_circuit(matrix: crate::tensor::CMatrix) -> BrickworkCircuit {
    BrickworkCircuit::new(2, vec![vec![Gate { pair: (0, 1), matrix }]])
        .expect("single-gate circuit is always valid")
}

/// Feasibility floor for materialized nets. A diamond ball of radius `ε`
/// around a two-qubit gate has Haar mass ≈ (4·arcsin(ε/2)/2π)^15, so the
/// member count below this radius exceeds what a desk-scale net can hold.
pub const NET_MIN_RADIUS: f64 = 1.4;

/// Build an `eps`-covering of two-qubit gates and certify it on 1000 fresh
/// Haar-like probes: greedy coverage of a sampled pool, then any uncovered
/// probe is itself added and the certification repeats.
pub fn build_net_single_gate(eps: f64, seed: u64) -> Result<CoveringNet> {
    if eps < NET_MIN_RADIUS {
        return Err(Error::Capacity(format!(
            "covering radius {eps} below the {NET_MIN_RADIUS} feasibility floor"
        )));
    }
    let mut rng = crate::rng::stream(seed, 0);
    let mut members: Vec<crate::tensor::CMatrix> = vec![crate::tensor::CMatrix::identity(4, 4)];

    let is_covered = |members: &[crate::tensor::CMatrix],
                      g: &crate::tensor::CMatrix,
                      radius: f64|
     -> Result<bool> {
        for m in members {
            if phase_distance_lower(m, g) > radius {
                continue;
            }
            let (_, up) = diamond_distance_unitary_bounds(m, g)?;
            if up <= radius {
                return Ok(true);
            }
        }
        Ok(false)
    };

    // Greedy pass over a sampled pool: keep what is not yet covered. The
    // margin leaves slack for the fresh certification probes.
    let margin = 0.9;
    let pool = if eps >= 2.0 { 0 } else { 2000 };
    for _ in 0..pool {
        let g = random_unitary(4, &mut rng);
        if !is_covered(&members, &g, eps * margin)? {
            members.push(g);
            if members.len() > NET_MEMBER_CAP {
                return Err(Error::Capacity(format!(
                    "covering net exceeded {NET_MEMBER_CAP} members at radius {eps}"
                )));
            }
        }
    }

    // Certify on fresh probes; absorb any miss and re-certify.
    let mut probe_rng = crate::rng::stream(seed, 1);
    for _round in 0..50 {
        let mut misses = Vec::new();
        for _ in 0..NET_PROBES {
            let g = random_unitary(4, &mut probe_rng);
            if !is_covered(&members, &g, eps)? {
                misses.push(g);
            }
        }
        if misses.is_empty() {
            return Ok(CoveringNet {
                eps,
                members: members.into_iter().map(gate_circuit).collect(),
                certified_fraction: 1.0,
            });
        }
        members.extend(misses);
        if members.len() > NET_MEMBER_CAP {
            return Err(Error::Capacity(format!(
                "covering net exceeded {NET_MEMBER_CAP} members at radius {eps}"
            )));
        }
    }
    Err(Error::Capacity(format!("covering net failed to certify at radius {eps}")))
}

/// Outcome of the idealized hypothesis-selection oracle.
#[derive(Debug)]
pub struct Selection {
    pub index: usize,
    pub eps_stat: f64,
    /// Whether the failure branch (probability delta) fired.
    pub failed: bool,
}

/// Statistical-resolution constant in `eps_stat = c·log₂(m/δ)/√M`.
pub const HYPOTHESIS_SELECT_DEFAULT_C: f64 = 1.0;

/// Idealized hypothesis selection: with probability `1−delta` returns an
/// index whose distance to the truth is at most `3·min_i d_i + eps_stat`;
/// with probability `delta` a uniformly random index. Distance estimates are
/// perturbed at the statistical resolution so the guarantee is exercised
/// rather than hardwired.
pub fn hypothesis_select(
    true_state: &PureState,
    hypotheses: &[PureState],
    copies: u64,
    delta: f64,
    c: f64,
    seed: u64,
) -> Result<Selection> {
    if hypotheses.is_empty() {
        return Err(Error::Contract("hypothesis selection needs candidates".into()));
    }
    if copies == 0 {
        return Err(Error::Contract("hypothesis selection needs at least one copy".into()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Contract("delta must lie in [0,1]".into()));
    }
    let m = hypotheses.len() as f64;
    let eps_stat = c * (m / delta.max(1e-300)).log2().max(0.0) / (copies as f64).sqrt();
    let mut rng = crate::rng::from_seed(seed);

    if rng.gen_range(0.0..1.0) < delta {
        let index = rng.gen_range(0..hypotheses.len());
        return Ok(Selection { index, eps_stat, failed: true });
    }

    // Estimates d̂_i = a_i·d_i + b_i with a ∈ [1,√3], b ∈ [0, eps_stat/√3]:
    // the argmin then satisfies d ≤ √3·η + eps_stat/√3 ≤ 3η + eps_stat.
    let mut best = (0usize, f64::INFINITY);
    for (i, h) in hypotheses.iter().enumerate() {
        let d = trace_distance_pure(true_state, h);
        let a: f64 = rng.gen_range(1.0..3f64.sqrt());
        let b: f64 = rng.gen_range(0.0..=(eps_stat / 3f64.sqrt()).max(1e-300));
        let est = a * d + b;
        if est < best.1 {
            best = (i, est);
        }
    }
    Ok(Selection { index: best.0, eps_stat, failed: false })
}

/// Copies needed by shallow-circuit tomography at accuracy `eps` and
/// confidence `1−delta`.
#[derive(Debug, Clone, Copy)]
pub struct SampleBudget {
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub delta: f64,
    pub copies: u64,
}

/// `N₀ = ⌈c·(n·d·log₂(nd/eps) + log₂(1/delta))²/eps²⌉`.
pub fn tomography_budget(n: usize, d: usize, eps: f64, delta: f64, c: f64) -> Result<SampleBudget> {
    if !(0.0..1.0).contains(&eps) || eps == 0.0 {
        return Err(Error::Contract("tomography budget needs eps in (0,1)".into()));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::Contract("tomography budget needs delta in (0,1)".into()));
    }
    let nd = (n * d) as f64;
    let inner = nd * (nd / eps).log2() + (1.0 / delta).log2();
    let copies = (c * inner * inner / (eps * eps)).ceil();
    Ok(SampleBudget { n, d, eps, delta, copies: copies as u64 })
}
