//! The map from locally rotated states to multi-mode coherent states:
//! template bookkeeping, coherent amplitudes, the closed-form N-copy overlap
//! with the target coherent state, and a brute-force tensor oracle for small
//! instances.
//!
//! Conventions: an excitation pattern is a `u64` bitmask with bit `q` set
//! when qubit `q` is excited. The all-zero pattern indexes the reference
//! amplitude `coeff0`, never a bosonic mode; modes are exactly the nonzero
//! patterns of the template's string set.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{cr, exp_i_hermitian, operator_norm, trace_distance_pure, PureState};
use crate::tensor::{CMatrix, CVector};

/// A sequence of bounded-size qubit subsets, the supports of the generating
/// rotations.
#[derive(Debug, Clone)]
pub struct CircuitTemplate {
    pub n: usize,
    pub supports: Vec<Vec<usize>>,
    pub d_tilde: usize,
}

impl CircuitTemplate {
    pub fn new(n: usize, supports: Vec<Vec<usize>>) -> Result<Self> {
        let mut d_tilde = 0;
        for (j, q) in supports.iter().enumerate() {
            if q.is_empty() || q.iter().any(|&i| i >= n) {
                return Err(Error::Contract(format!("template support {j} out of range")));
            }
            if q.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Contract(format!("template support {j} not sorted")));
            }
            d_tilde = d_tilde.max(q.len());
        }
        Ok(Self { n, supports, d_tilde })
    }

    /// Largest number of supports sharing one qubit.
    pub fn n_overlap(&self) -> usize {
        (0..self.n)
            .map(|q| self.supports.iter().filter(|s| s.contains(&q)).count())
            .max()
            .unwrap_or(0)
    }

    pub fn gate_count(&self) -> usize {
        self.supports.len()
    }
}

/// The set of excitation patterns reachable from the all-zero string through
/// the template supports, excluding the all-zero pattern itself.
#[derive(Debug, Clone)]
pub struct StringSetB {
    pub strings: Vec<u64>,
}

/// Exact enumeration of the template's string set by per-support subset
/// expansion with deduplication.
pub fn enumerate_b(template: &CircuitTemplate) -> StringSetB {
    let mut set = BTreeSet::new();
    for q in &template.supports {
        let k = q.len();
        for subset in 0..(1u64 << k) {
            let mut string = 0u64;
            for (t, &qubit) in q.iter().enumerate() {
                if subset >> t & 1 == 1 {
                    string |= 1 << qubit;
                }
            }
            if string != 0 {
                set.insert(string);
            }
        }
    }
    let strings: Vec<u64> = set.into_iter().collect();
    debug_assert!(strings.len() < template.gate_count() * (1 << template.d_tilde));
    StringSetB { strings }
}

/// Complex mode amplitudes `u^k` indexed by nonzero excitation patterns.
#[derive(Debug, Clone)]
pub struct CoherentAmplitudes {
    pub modes: BTreeMap<u64, Complex64>,
    pub eta: f64,
    pub n_overlap: usize,
}

impl CoherentAmplitudes {
    /// Explicit amplitudes for drivers and tests; the per-mode bound
    /// `|u| ≤ eta·n_overlap` is still enforced.
    pub fn explicit(
        modes: BTreeMap<u64, Complex64>,
        eta: f64,
        n_overlap: usize,
    ) -> Result<Self> {
        let out = Self { modes, eta, n_overlap };
        out.check_bound()?;
        Ok(out)
    }

    fn check_bound(&self) -> Result<()> {
        let cap = self.eta * self.n_overlap as f64;
        for (&k, u) in &self.modes {
            if u.norm() > cap * (1.0 + 1e-9) + 1e-15 {
                return Err(Error::Contract(format!(
                    "mode {k:#b} amplitude {:.6} exceeds eta·n_overlap = {:.6}",
                    u.norm(),
                    cap
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.modes.values().map(|u| u.norm()).fold(0.0, f64::max)
    }

    /// Modes with nonzero amplitude, in ascending pattern order.
    fn active(&self) -> Vec<(u64, Complex64)> {
        self.modes
            .iter()
            .filter(|(_, u)| u.norm() > 0.0)
            .map(|(&k, &u)| (k, u))
            .collect()
    }
}

/// Matrix element `⟨pattern|H_j|0…0⟩` of a generator given on its support.
fn generator_column_entry(pattern: u64, support: &[usize], h: &CMatrix) -> Complex64 {
    let outside = pattern & !support.iter().fold(0u64, |acc, &q| acc | (1 << q));
    if outside != 0 {
        return cr(0.0);
    }
    let mut row = 0usize;
    for (t, &q) in support.iter().enumerate() {
        if pattern >> q & 1 == 1 {
            row |= 1 << (support.len() - 1 - t);
        }
    }
    h[(row, 0)]
}

/// `u^k = η·⟨k|Σ_j H_j|0…0⟩` for generators on the template supports, with
/// the per-mode amplitude bound asserted.
pub fn amplitudes(
    template: &CircuitTemplate,
    generators: &[CMatrix],
    eta: f64,
) -> Result<CoherentAmplitudes> {
    if generators.len() != template.supports.len() {
        return Err(Error::Contract("one generator per template support required".into()));
    }
    for (j, (q, h)) in template.supports.iter().zip(generators).enumerate() {
        let dim = 1usize << q.len();
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::Contract(format!("generator {j} does not match its support")));
        }
        let herm = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-9 {
            return Err(Error::Contract(format!("generator {j} is not Hermitian")));
        }
        let norm = operator_norm(h);
        if norm > 1.0 + 1e-9 {
            return Err(Error::Contract(format!("generator {j} has norm {norm:.6} > 1")));
        }
    }
    let strings = enumerate_b(template);
    let n_overlap = template.n_overlap();
    let mut modes = BTreeMap::new();
    for &k in &strings.strings {
        let mut h_k = cr(0.0);
        for (q, h) in template.supports.iter().zip(generators) {
            h_k += generator_column_entry(k, q, h);
        }
        // |h^k| ≤ n_overlap for unit-norm generators.
        if h_k.norm() > n_overlap as f64 * (1.0 + 1e-9) {
            return Err(Error::Contract(format!(
                "matrix element bound violated at mode {k:#b}: {:.6}",
                h_k.norm()
            )));
        }
        modes.insert(k, h_k * cr(eta));
    }
    CoherentAmplitudes::explicit(modes, eta, n_overlap)
}

/// Normalized single-copy truncated state `(coeff0, coeffs)` in the
/// effective basis spanned by the reference string and the modes.
pub fn truncated_state(amps: &CoherentAmplitudes, n_copies: u64) -> (f64, BTreeMap<u64, Complex64>) {
    let n = n_copies as f64;
    let s: f64 = amps.modes.values().map(|u| u.norm_sqr()).sum();
    let norm = (1.0 + s / n).sqrt();
    let coeff0 = 1.0 / norm;
    let coeffs = amps
        .modes
        .iter()
        .map(|(&k, &u)| (k, u / cr(n.sqrt() * norm)))
        .collect();
    (coeff0, coeffs)
}

/// Per-mode photon cutoff large enough for sub-1e-12 Poisson tails at
/// amplitude `max_abs_u`.
pub fn default_mode_cutoff(max_abs_u: f64) -> usize {
    let lambda = max_abs_u * max_abs_u;
    25usize.max((lambda + 10.0 * max_abs_u + 25.0).ceil() as usize)
}

/// Poisson tail `Σ_{m ≥ k} e^{−λ}λ^m/m!`, summed directly in log space.
pub fn poisson_tail(lambda: f64, k: usize) -> f64 {
    if lambda <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return 1.0;
    }
    let log_term0 = -lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0);
    let mut term = log_term0.exp();
    let mut sum = 0.0;
    let mut m = k as f64;
    let max_iter = 10_000;
    for _ in 0..max_iter {
        sum += term;
        m += 1.0;
        term *= lambda / m;
        if term < sum.max(1e-300) * 1e-18 {
            break;
        }
    }
    sum.min(1.0)
}

/// Feasibility cap on the total photon budget of the closed-form sum.
const OVERLAP_MAX_TOTAL_PHOTONS: usize = 50_000;

/// Closed-form overlap `⟨u|coh · V_N |ψ̃⟩^{⊗N}`.
///
/// The type sum couples modes only through the total photon number `s`, via
/// `√([N]_s/N^s)`, so it is evaluated as `Σ_s √([N]_s/N^s)·C_s` where the
/// `C_s` come from convolving per-mode Poisson weight polynomials. Weights
/// are carried as scaled mantissas with a running log offset, and the
/// accumulations are Kahan-compensated, so the result is deterministic and
/// stable from `|u| ≈ 0` up to amplitudes whose overlap underflows.
pub fn qlan_overlap(amps: &CoherentAmplitudes, n_copies: u64, cutoff: usize) -> Result<Complex64> {
    let active = amps.active();
    let n = n_copies as f64;
    if n_copies == 0 {
        return Err(Error::Contract("at least one copy required".into()));
    }

    // Tail estimate for the neglected region beyond the per-mode cutoff:
    // √([N]_s/N^s) ≤ 1 and the Poisson weights are a product measure, so the
    // neglected mass is at most the union of per-mode tails carried by the
    // exact prefactor exp(Σλ/2 − (N/2)·ln(1+Σλ/N)) ≤ exp((Σλ)²/4N).
    let total_lambda: f64 = active.iter().map(|(_, u)| u.norm_sqr()).sum();
    let mut tail_est = 0.0;
    for (_, u) in &active {
        tail_est += poisson_tail(u.norm_sqr(), cutoff + 1);
    }
    let log_pref = 0.5 * total_lambda - 0.5 * n * (1.0 + total_lambda / n).ln();
    tail_est *= log_pref.min(700.0).exp();
    if tail_est > 1e-12 {
        return Err(Error::InsufficientCutoff(format!(
            "estimated neglected tail {tail_est:.3e} above 1e-12 at cutoff {cutoff}"
        )));
    }

    if active.is_empty() {
        return Ok(cr(1.0));
    }

    let caps: Vec<usize> = active.iter().map(|_| cutoff.min(n_copies as usize)).collect();
    let smax: usize = caps.iter().sum();
    if smax > OVERLAP_MAX_TOTAL_PHOTONS {
        return Err(Error::Capacity(format!(
            "total photon budget {smax} exceeds {OVERLAP_MAX_TOTAL_PHOTONS}"
        )));
    }

    // Per-mode Poisson pmf polynomials, each rescaled by its maximum with
    // the log offset accumulated separately.
    let mut conv = vec![1.0f64];
    let mut log_offset = 0.0f64;
    for ((_, u), &cap) in active.iter().zip(&caps) {
        let lambda = u.norm_sqr();
        let mut logs = Vec::with_capacity(cap + 1);
        for m in 0..=cap {
            logs.push(-lambda + m as f64 * lambda.max(1e-300).ln() - ln_gamma(m as f64 + 1.0));
        }
        if lambda == 0.0 {
            logs = vec![0.0];
        }
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|&l| (l - peak).exp()).collect();
        log_offset += peak;

        let mut next = vec![0.0f64; conv.len() + weights.len() - 1];
        for (i, &a) in conv.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in weights.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        let scale = next.iter().copied().fold(0.0f64, f64::max);
        if scale > 0.0 {
            for v in next.iter_mut() {
                *v /= scale;
            }
            log_offset += scale.ln();
        }
        conv = next;
    }

    // Σ_s √([N]_s/N^s) · C̃_s with the falling factorial in log space.
    let mut log_fall = 0.0f64;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (s, &c) in conv.iter().enumerate() {
        if s > n_copies as usize {
            break;
        }
        if s > 0 {
            log_fall += (n - (s as f64 - 1.0)).ln() - n.ln();
        }
        let term = c * (0.5 * log_fall).exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }

    let log_prefactor = 0.5 * total_lambda - 0.5 * n * (1.0 + total_lambda / n).ln() + log_offset;
    let log_result = log_prefactor + sum.max(1e-300).ln();
    let result = if sum <= 0.0 || log_result < -745.0 { 0.0 } else { log_result.exp() };
    if result > 1.0 + 1e-9 {
        return Err(Error::Contract(format!("overlap {result} exceeds 1")));
    }
    Ok(cr(result.min(1.0)))
}

/// Capacity guard for the brute-force oracle.
const ORACLE_MAX_DIM: usize = 1_000_000;

/// Dense N-copy tensor oracle: builds `ψ̃^{⊗N}`, projects onto explicitly
/// constructed symmetric type vectors, relabels them as Fock states, and
/// inner-products with the truncated coherent vector.
pub fn qlan_bruteforce_oracle(amps: &CoherentAmplitudes, n_copies: u64) -> Result<Complex64> {
    let projections = oracle_type_projections(amps, n_copies)?;
    let mut overlap = cr(0.0);
    for proj in &projections {
        overlap += coherent_coefficient(amps, &proj.occupation).conj() * proj.amplitude;
    }
    Ok(overlap)
}

/// Recovery fidelity of the inverse map realized on the oracle's dense
/// representation: project the truncated coherent vector back into the
/// symmetric subspace and refill the lost weight with the all-zero symmetric
/// state.
pub fn oracle_recovery_fidelity(amps: &CoherentAmplitudes, n_copies: u64) -> Result<f64> {
    let projections = oracle_type_projections(amps, n_copies)?;
    let mut back = cr(0.0);
    let mut in_range = 0.0;
    let mut zero_type_amp = cr(0.0);
    for proj in &projections {
        let c = coherent_coefficient(amps, &proj.occupation);
        back += proj.amplitude.conj() * c;
        in_range += c.norm_sqr();
        if proj.occupation.iter().all(|&x| x == 0) {
            zero_type_amp = proj.amplitude;
        }
    }
    let lost = (1.0 - in_range).max(0.0);
    Ok(back.norm_sqr() + lost * zero_type_amp.norm_sqr())
}

struct TypeProjection {
    occupation: Vec<usize>,
    /// `⟨m;N|ψ̃^{⊗N}⟩`.
    amplitude: Complex64,
}

fn coherent_coefficient(amps: &CoherentAmplitudes, occupation: &[usize]) -> Complex64 {
    let active = amps.active();
    let mut c = cr(1.0);
    for ((_, u), &mk) in active.iter().zip(occupation) {
        let lam = u.norm_sqr();
        let log_mag = -0.5 * lam + mk as f64 * u.norm().max(1e-300).ln()
            - 0.5 * ln_gamma(mk as f64 + 1.0);
        let phase = u.arg() * mk as f64;
        c *= Complex64::from_polar(log_mag.exp(), phase);
    }
    c
}

fn oracle_type_projections(amps: &CoherentAmplitudes, n_copies: u64) -> Result<Vec<TypeProjection>> {
    let active = amps.active();
    let k_modes = active.len();
    let base = k_modes + 1;
    let copies = n_copies as usize;
    let dim = base.checked_pow(copies as u32).filter(|&d| d <= ORACLE_MAX_DIM).ok_or_else(|| {
        Error::Capacity(format!(
            "oracle dimension {base}^{copies} exceeds {ORACLE_MAX_DIM}"
        ))
    })?;

    // Single-copy state in the effective basis: index 0 = reference string.
    let (coeff0, coeffs) = truncated_state(amps, n_copies);
    let mut single = CVector::zeros(base);
    single[0] = cr(coeff0);
    for (k, (pattern, _)) in active.iter().enumerate() {
        single[k + 1] = coeffs[pattern];
    }

    // Dense N-fold tensor power.
    let mut tensor = CVector::zeros(dim);
    for idx in 0..dim {
        let mut rem = idx;
        let mut a = cr(1.0);
        for _ in 0..copies {
            a *= single[rem % base];
            rem /= base;
        }
        tensor[idx] = a;
    }

    // Group dense indices by type and project: the symmetric vector is the
    // normalized equal-weight sum over each type class.
    let mut sums: BTreeMap<Vec<usize>, (Complex64, usize)> = BTreeMap::new();
    for idx in 0..dim {
        let mut occ = vec![0usize; k_modes];
        let mut rem = idx;
        for _ in 0..copies {
            let digit = rem % base;
            if digit > 0 {
                occ[digit - 1] += 1;
            }
            rem /= base;
        }
        let entry = sums.entry(occ).or_insert((cr(0.0), 0));
        entry.0 += tensor[idx];
        entry.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(occupation, (sum, count))| TypeProjection {
            occupation,
            amplitude: sum / cr((count as f64).sqrt()),
        })
        .collect())
}

/// Operator-norm gap between the ordered product of rotation exponentials
/// and the single exponential of the summed generator, on the embedded
/// `n`-qubit space.
pub fn linearization_error(
    template: &CircuitTemplate,
    generators: &[CMatrix],
    eta: f64,
    n_copies: u64,
) -> Result<f64> {
    if template.n > 10 {
        return Err(Error::Capacity("linearization check capped at 10 qubits".into()));
    }
    if generators.len() != template.supports.len() {
        return Err(Error::Contract("one generator per support required".into()));
    }
    let eps = eta / (n_copies as f64).sqrt();
    let dims = vec![2usize; template.n];
    let dim = 1usize << template.n;
    let mut product = CMatrix::identity(dim, dim);
    let mut summed = CMatrix::zeros(dim, dim);
    for (q, h) in template.supports.iter().zip(generators) {
        let embedded = crate::tensor::embed_op(&dims, q, h);
        product = exp_i_hermitian(&embedded, eps) * product;
        summed += embedded;
    }
    let single = exp_i_hermitian(&summed, eps);
    Ok(operator_norm(&(product - single)))
}

/// The generator with all matrix elements outside the first column/row
/// removed: `Σ_k Re(h^k)σ_x^k + Im(h^k)σ_y^k` with `h^k = ⟨k|H|0⟩`, the
/// unique quadrature form that matches `exp(−iεH)|0⟩` to first order.
pub fn reduced_generator(h: &CMatrix) -> CMatrix {
    let dim = h.nrows();
    let mut out = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        let hk = h[(k, 0)];
        out[(k, 0)] = hk;
        out[(0, k)] = hk.conj();
    }
    out
}

/// Measured trace distance between `exp(−iεH)|0…0⟩` and the state generated
/// by the quadrature-reduced generator.
pub fn parameter_reduction_gap(h: &CMatrix, eps: f64) -> Result<f64> {
    let norm = operator_norm(h);
    if norm > 1.0 + 1e-9 {
        return Err(Error::Contract(format!("generator norm {norm:.4} > 1")));
    }
    let dim = h.nrows();
    let zero = PureState::basis(dim, 0);
    let psi = PureState::new(exp_i_hermitian(h, eps) * zero.amplitudes())?;
    let reduced = reduced_generator(h);
    let psi_tilde = PureState::new(exp_i_hermitian(&reduced, eps) * zero.amplitudes())?;
    Ok(trace_distance_pure(&psi, &psi_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_hermitian_unit_norm;
    use crate::rng;
    use rand::Rng;

    fn single_mode(u: Complex64) -> CoherentAmplitudes {
        let mut modes = BTreeMap::new();
        modes.insert(1u64, u);
        CoherentAmplitudes::explicit(modes, u.norm().max(1e-12), 1).unwrap()
    }

    #[test]
    fn enumerate_single_support() {
        let t = CircuitTemplate::new(2, vec![vec![0]]).unwrap();
        let b = enumerate_b(&t);
        assert_eq!(b.strings, vec![0b01]);
    }

    #[test]
    fn enumerate_overlapping_supports() {
        let t = CircuitTemplate::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let b = enumerate_b(&t);
        // Ones confined to {0,1} or {1,2}: 100, 010, 110, 001, 011 patterns.
        let expect: BTreeSet<u64> = [0b001, 0b010, 0b011, 0b100, 0b110].into_iter().collect();
        assert_eq!(b.strings.iter().copied().collect::<BTreeSet<_>>(), expect);
        assert_eq!(b.strings.len(), 5);
        assert!(b.strings.len() <= 2 * 4);

        // Exhaustive filter oracle over all 8 strings.
        let mut oracle = BTreeSet::new();
        for s in 1u64..8 {
            for q in [[0usize, 1], [1, 2]] {
                let mask: u64 = q.iter().map(|&i| 1u64 << i).sum();
                if s & !mask == 0 {
                    oracle.insert(s);
                }
            }
        }
        assert_eq!(b.strings.iter().copied().collect::<BTreeSet<_>>(), oracle);
    }

    #[test]
    fn enumerate_disjoint_supports() {
        let t = CircuitTemplate::new(6, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let b = enumerate_b(&t);
        assert_eq!(b.strings.len(), 9);
    }

    #[test]
    fn amplitudes_zero_generators() {
        let t = CircuitTemplate::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let hs = vec![CMatrix::zeros(4, 4), CMatrix::zeros(4, 4)];
        let a = amplitudes(&t, &hs, 0.5).unwrap();
        assert!(a.modes.values().all(|u| u.norm() == 0.0));
    }

    #[test]
    fn amplitudes_single_qubit_x() {
        let t = CircuitTemplate::new(1, vec![vec![0]]).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let a = amplitudes(&t, &[x], 0.3).unwrap();
        assert!((a.modes[&1] - cr(0.3)).norm() < 1e-15);
    }

    #[test]
    fn amplitudes_overlapping_supports_add() {
        // Two templates sharing qubit 0, each contributing X on it.
        let t = CircuitTemplate::new(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        let xi = {
            let x = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
            x.kronecker(&CMatrix::identity(2, 2))
        };
        let a = amplitudes(&t, &[xi.clone(), xi], 0.4).unwrap();
        // Pattern 0b01 = qubit 0 excited: both generators contribute.
        assert!((a.modes[&0b01] - cr(0.8)).norm() < 1e-12);
        assert!(a.max_abs() <= 0.4 * 2.0 + 1e-12);
    }

    #[test]
    fn truncated_state_arithmetic() {
        let a = single_mode(cr(1.0));
        let (c0, cs) = truncated_state(&a, 100);
        assert!((c0 - 1.0 / 1.01f64.sqrt()).abs() < 1e-15);
        assert!((cs[&1] - cr(0.1 / 1.01f64.sqrt())).norm() < 1e-15);
        let norm: f64 = c0 * c0 + cs.values().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-14);

        let vac = single_mode(cr(0.0));
        let (c0, cs) = truncated_state(&vac, 50);
        assert!(c0 == 1.0);
        assert!(cs.values().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn overlap_vacuum_is_one() {
        let mut modes = BTreeMap::new();
        modes.insert(1u64, cr(0.0));
        let a = CoherentAmplitudes::explicit(modes, 1.0, 1).unwrap();
        for n in [1u64, 10, 1000] {
            let ov = qlan_overlap(&a, n, 30).unwrap();
            assert!((ov - cr(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn overlap_increases_with_copies() {
        let a = single_mode(cr(1.0));
        let cutoff = default_mode_cutoff(1.0);
        let mut last = 0.0;
        for n in [100u64, 1_000, 10_000, 100_000] {
            let ov = qlan_overlap(&a, n, cutoff).unwrap().re;
            assert!(ov > last, "n={n} ov={ov} last={last}");
            last = ov;
        }
        assert!(last > 0.99);
    }

    #[test]
    fn oracle_matches_closed_form_k1() {
        for &n in &[1u64, 4, 8] {
            for &u in &[0.3, 0.7, 1.0] {
                let a = single_mode(cr(u));
                let cutoff = default_mode_cutoff(u);
                let closed = qlan_overlap(&a, n, cutoff).unwrap();
                let oracle = qlan_bruteforce_oracle(&a, n).unwrap();
                assert!(
                    (closed - oracle).norm() < 1e-10,
                    "n={n} u={u} closed={closed} oracle={oracle}"
                );
            }
        }
    }

    #[test]
    fn oracle_matches_closed_form_complex_two_mode() {
        let mut modes = BTreeMap::new();
        modes.insert(0b01u64, Complex64::new(0.4, -0.3));
        modes.insert(0b10u64, Complex64::new(-0.2, 0.5));
        let a = CoherentAmplitudes::explicit(modes, 0.6, 1).unwrap();
        for &n in &[2u64, 5] {
            let closed = qlan_overlap(&a, n, 40).unwrap();
            let oracle = qlan_bruteforce_oracle(&a, n).unwrap();
            assert!((closed - oracle).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn oracle_matches_closed_form_three_modes() {
        let mut modes = BTreeMap::new();
        modes.insert(0b001u64, Complex64::new(0.3, 0.4));
        modes.insert(0b010u64, Complex64::new(-0.5, 0.1));
        modes.insert(0b100u64, Complex64::new(0.2, -0.6));
        let a = CoherentAmplitudes::explicit(modes, 0.7, 1).unwrap();
        for &n in &[3u64, 6] {
            let closed = qlan_overlap(&a, n, 40).unwrap();
            let oracle = qlan_bruteforce_oracle(&a, n).unwrap();
            assert!((closed - oracle).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn oracle_capacity_guard() {
        let a = single_mode(cr(0.5));
        assert!(matches!(qlan_bruteforce_oracle(&a, 64), Err(Error::Capacity(_))));
    }

    #[test]
    fn oracle_recovery_fidelity_tracks_overlap() {
        let a = single_mode(cr(0.7));
        let f = oracle_recovery_fidelity(&a, 8).unwrap();
        let ov = qlan_bruteforce_oracle(&a, 8).unwrap();
        assert!(f >= ov.norm_sqr() - 1e-12);
        assert!(f <= 1.0 + 1e-12);
    }

    #[test]
    fn linearization_single_factor_exact() {
        let t = CircuitTemplate::new(2, vec![vec![0, 1]]).unwrap();
        let mut r = rng::from_seed(41);
        let h = random_hermitian_unit_norm(4, &mut r);
        let gap = linearization_error(&t, &[h], 1.0, 100).unwrap();
        assert!(gap < 1e-13);
    }

    #[test]
    fn linearization_commuting_generators_collapse() {
        let t = CircuitTemplate::new(2, vec![vec![0], vec![1]]).unwrap();
        let mut r = rng::from_seed(42);
        let h1 = random_hermitian_unit_norm(2, &mut r);
        let h2 = random_hermitian_unit_norm(2, &mut r);
        let gap = linearization_error(&t, &[h1, h2], 1.0, 100).unwrap();
        assert!(gap < 1e-12);
    }

    #[test]
    fn linearization_scales_as_eps_squared() {
        let t = CircuitTemplate::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2], vec![1]]).unwrap();
        let mut r = rng::from_seed(43);
        let hs: Vec<CMatrix> = vec![
            random_hermitian_unit_norm(4, &mut r),
            random_hermitian_unit_norm(4, &mut r),
            random_hermitian_unit_norm(4, &mut r),
            random_hermitian_unit_norm(2, &mut r),
        ];
        let gap_small = linearization_error(&t, &hs, 1.0, 10_000).unwrap();
        let gap_large = linearization_error(&t, &hs, 1.0, 100).unwrap();
        let ratio = gap_large / gap_small;
        assert!((ratio - 100.0).abs() < 20.0, "ratio={ratio}");
    }

    #[test]
    fn reduction_gap_fixed_point() {
        // A generator already of the quadrature form is untouched.
        let mut h = CMatrix::zeros(4, 4);
        h[(1, 0)] = Complex64::new(0.3, 0.2);
        h[(0, 1)] = Complex64::new(0.3, -0.2);
        h[(2, 0)] = Complex64::new(-0.1, 0.4);
        h[(0, 2)] = Complex64::new(-0.1, -0.4);
        let h = h.clone() / cr(operator_norm(&h).max(1.0));
        let gap = parameter_reduction_gap(&h, 0.05).unwrap();
        assert!(gap < 1e-12, "gap={gap}");
    }

    #[test]
    fn reduction_gap_scales_as_eps_squared() {
        let mut r = rng::from_seed(44);
        let h = random_hermitian_unit_norm(4, &mut r);
        let g1 = parameter_reduction_gap(&h, 0.1).unwrap();
        let g2 = parameter_reduction_gap(&h, 0.01).unwrap();
        let ratio = g1 / g2;
        assert!((ratio - 100.0).abs() < 25.0, "ratio={ratio}");
    }

    #[test]
    fn reduction_gap_diagonal_generator() {
        let mut r = rng::from_seed(45);
        let dim = 4;
        let mut h = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            h[(i, i)] = cr(r.gen_range(-1.0..1.0));
        }
        let h = h.clone() / cr(operator_norm(&h).max(1.0));
        for eps in [0.1, 0.01] {
            let gap = parameter_reduction_gap(&h, eps).unwrap();
            assert!(gap < 1.5 * eps * eps, "eps={eps} gap={gap}");
        }
    }

    #[test]
    fn oracle_permutation_invariance() {
        // Permuting copies leaves the type projections unchanged: verified
        // by comparing the oracle on a copy-permuted dense tensor.
        let a = single_mode(Complex64::new(0.5, 0.2));
        let copies = 4usize;
        let base = 2usize;
        let (c0, cs) = truncated_state(&a, copies as u64);
        let single = [cr(c0), cs[&1]];
        let dim = base.pow(copies as u32);
        let digits = |idx: usize| -> Vec<usize> {
            let mut rem = idx;
            (0..copies)
                .map(|_| {
                    let d = rem % base;
                    rem /= base;
                    d
                })
                .collect()
        };
        let perm = [2usize, 0, 3, 1];
        for occ_target in 0..=copies {
            let mut direct = cr(0.0);
            let mut permuted = cr(0.0);
            let mut count = 0usize;
            for idx in 0..dim {
                let digs = digits(idx);
                let occ: usize = digs.iter().sum();
                if occ != occ_target {
                    continue;
                }
                count += 1;
                let amp: Complex64 = digs.iter().map(|&d| single[d]).product();
                let amp_p: Complex64 = perm.iter().map(|&p| single[digs[p]]).product();
                direct += amp;
                permuted += amp_p;
            }
            if count > 0 {
                assert!((direct - permuted).norm() < 1e-12);
            }
        }
    }
}
