//! Memory lower bounds: the Holevo information of the uncorrelated-qubit
//! ensemble with its continuity correction, a Monte-Carlo check of the
//! single-qubit value, and the Hellinger/Bures gap that rules out fully
//! classical memories.

use num_complex::Complex64;
use rand::Rng;

use crate::bosonic::{coherent, commutator_norm, hellinger_bures};
use crate::error::{Error, Result};
use crate::linalg::{cr, eigh};
use crate::tensor::CMatrix;

/// Holevo lower bound summary.
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundReport {
    pub holevo_bits: f64,
    pub corrected_bound_bits: f64,
    /// `h₂(ε) = −ε·log₂ ε` (single-term convention).
    pub binary_entropy_term: f64,
    /// Standard two-term binary entropy, reported alongside.
    pub shannon_entropy_term: f64,
}

/// `h₂(x) = −x·log₂ x` with `h₂(0) = 0`.
pub fn h2_single(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Standard binary Shannon entropy, for the side-by-side report.
pub fn h2_shannon(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// `χ = n·log₂(N+1)` with the continuity correction
/// `(1−2ε)·χ − 2·h₂(ε)`.
pub fn holevo_lower_bound(n: usize, copies: u64, eps: f64) -> Result<LowerBoundReport> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::Contract(format!("continuity correction needs eps in [0, 1/2), got {eps}")));
    }
    let holevo = n as f64 * ((copies as f64) + 1.0).log2();
    let h = h2_single(eps);
    Ok(LowerBoundReport {
        holevo_bits: holevo,
        corrected_bound_bits: (1.0 - 2.0 * eps) * holevo - 2.0 * h,
        binary_entropy_term: h,
        shannon_entropy_term: h2_shannon(eps),
    })
}

/// Monte-Carlo estimate of the entropy of the Haar average of `ψ^{⊗N}` for a
/// single qubit, computed in the (N+1)-dimensional symmetric basis. The
/// exact value is `log₂(N+1)`.
pub fn single_qubit_holevo_check(copies: u64, samples: usize, seed: u64) -> Result<f64> {
    if copies > 10 {
        return Err(Error::Capacity("dense symmetric-basis check capped at N = 10".into()));
    }
    let n = copies as usize;
    let dim = n + 1;
    let mut rng = crate::rng::from_seed(seed);
    let mut rho = CMatrix::zeros(dim, dim);

    // log binomial coefficients C(N, k).
    let mut log_binom = vec![0.0f64; dim];
    for k in 1..dim {
        log_binom[k] = log_binom[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln();
    }

    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for _ in 0..samples {
        // Haar qubit via normalized Gaussian pair.
        use rand_distr::StandardNormal;
        let a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let b = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / norm, b / norm);

        // ψ^{⊗N} in the symmetric basis: amplitude √C(N,k)·a^{N−k}·b^k.
        for (k, slot) in amps.iter_mut().enumerate() {
            let mag = (0.5 * log_binom[k]).exp();
            *slot = cr(mag) * a.powu((n - k) as u32) * b.powu(k as u32);
        }
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += amps[i] * amps[j].conj();
            }
        }
    }
    rho /= cr(samples as f64);

    let (vals, _) = eigh(&rho);
    let entropy: f64 = vals
        .iter()
        .filter(|&&v| v > 1e-15)
        .map(|&v| -v * v.log2())
        .sum();
    Ok(entropy)
}

/// The no-go gap report for the coherent pair `(vacuum, unit amplitude)`.
#[derive(Debug, Clone, Copy)]
pub struct NoGoGap {
    pub d_hellinger: f64,
    pub d_bures: f64,
    pub gap: f64,
    /// Error floor from the proof-supported continuity form `gap ≤ 2√(2ε)`.
    pub eps_floor: f64,
    /// Floor from the linear continuity form `gap ≤ 2√2·ε`, reported alongside.
    pub eps_floor_stated_form: f64,
    pub commutator: f64,
}

/// Hellinger/Bures separation of the two Q-LAN images `|0⟩_coh`, `|1⟩_coh`:
/// any protocol whose memory commutes on them (a classical memory) cannot
/// recover the gap, so the compression error is bounded below.
pub fn classical_no_go_gap(cutoff: usize) -> Result<NoGoGap> {
    if cutoff < 30 {
        return Err(Error::InsufficientCutoff(format!(
            "no-go gap needs cutoff ≥ 30, got {cutoff}"
        )));
    }
    let g1 = coherent(cr(0.0), cutoff)?.density()?;
    let g2 = coherent(cr(1.0), cutoff)?.density()?;
    let (dh, db) = hellinger_bures(&g1, &g2)?;
    let gap = dh - db;
    let eps_floor = (gap / (2.0 * std::f64::consts::SQRT_2)).powi(2);
    let eps_floor_stated_form = gap / (2.0 * std::f64::consts::SQRT_2);
    if gap <= 0.167 {
        return Err(Error::Contract(format!("no-go gap {gap:.6} fails the 0.167 bound")));
    }
    if eps_floor <= 0.003 {
        return Err(Error::Contract(format!("error floor {eps_floor:.6} fails the 0.003 bound")));
    }
    Ok(NoGoGap {
        d_hellinger: dh,
        d_bures: db,
        gap,
        eps_floor,
        eps_floor_stated_form,
        commutator: commutator_norm(&g1, &g2),
    })
}
