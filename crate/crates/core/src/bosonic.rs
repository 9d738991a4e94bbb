//! Truncated-Fock coherent states and the two single-mode channels used by
//! the compression pipeline: photon-number truncation (with its Poisson-tail
//! Chernoff bound) and parametric amplification. Also the quantum Hellinger
//! and Bures distances used by the classical-memory impossibility argument.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{
    cr, matrix_sqrt_psd, nuclear_norm, operator_norm, DensityOperator,
};
use crate::qlan::poisson_tail;
use crate::tensor::CVector;

/// A single bosonic mode kept below a finite Fock cutoff, with the truncated
/// probability tracked explicitly.
#[derive(Debug, Clone)]
pub struct TruncatedFockState {
    pub cutoff: usize,
    pub coeffs: CVector,
    pub tail_mass: f64,
    /// Coherent amplitude when the state is (a truncation of) a coherent
    /// state; the amplification channel is parametric in it.
    pub amplitude: Option<Complex64>,
}

impl TruncatedFockState {
    /// Invariant: captured norm plus tail mass accounts for all probability.
    pub fn norm_accounting_error(&self) -> f64 {
        (self.coeffs.norm_squared() + self.tail_mass - 1.0).abs()
    }

    /// Density operator of the truncated vector (unnormalized tail left out;
    /// valid once the tail is below the trace tolerance).
    pub fn density(&self) -> Result<DensityOperator> {
        DensityOperator::new(&self.coeffs * self.coeffs.adjoint())
    }
}

/// Cutoff policy: tails below 1e-12 for amplitudes up to about 3.
pub fn recommended_cutoff(amplitude_abs: f64) -> usize {
    let a = amplitude_abs;
    25usize.max((a * a + 10.0 * a + 25.0).ceil() as usize)
}

/// Coherent state `e^{−|u|²/2} Σ u^m/√(m!) |m⟩` kept below `cutoff`.
pub fn coherent(u: Complex64, cutoff: usize) -> Result<TruncatedFockState> {
    if cutoff < 1 {
        return Err(Error::Contract("coherent state needs cutoff ≥ 1".into()));
    }
    let lambda = u.norm_sqr();
    let mut coeffs = CVector::zeros(cutoff);
    for m in 0..cutoff {
        let log_mag = -0.5 * lambda + m as f64 * u.norm().max(1e-300).ln() - 0.5 * ln_gamma(m as f64 + 1.0);
        let mag = if u.norm() == 0.0 && m > 0 { 0.0 } else { log_mag.exp() };
        coeffs[m] = Complex64::from_polar(mag, u.arg() * m as f64);
    }
    if u.norm() == 0.0 {
        coeffs[0] = cr(1.0);
    }
    let tail_mass = poisson_tail(lambda, cutoff);
    Ok(TruncatedFockState { cutoff, coeffs, tail_mass, amplitude: Some(u) })
}

/// Exact overlap of two coherent states, `⟨a|b⟩ = e^{−(|a|²+|b|²)/2 + ā·b}`.
pub fn coherent_overlap(a: Complex64, b: Complex64) -> Complex64 {
    let exponent = -(a.norm_sqr() + b.norm_sqr()) * 0.5;
    let cross = a.conj() * b;
    Complex64::from_polar((exponent + cross.re).exp(), cross.im)
}

/// Photon-number truncation channel outcome.
#[derive(Debug)]
pub struct TruncationOutcome {
    pub state: TruncatedFockState,
    /// Exact trace distance between the channel output and the input.
    pub err_exact: f64,
    /// `√(2·Poistail(|α|², m₀))`.
    pub err_bound: f64,
    /// Chernoff form `√2·(e|α|²/m₀)^{m₀/2}·e^{−|α|²/2}`, meaningful for
    /// `m₀ > |α|²`.
    pub err_chernoff: f64,
    pub kept_probability: f64,
}

/// Keep photon numbers below `m0`, refilling the lost weight with the
/// vacuum. The exact channel error is evaluated in the 3-dimensional span of
/// the input, its projection, and the vacuum.
pub fn truncate_channel(s: &TruncatedFockState, m0: usize) -> Result<TruncationOutcome> {
    if m0 < 1 {
        return Err(Error::Contract("truncation requires m0 ≥ 1".into()));
    }
    let alpha = s.amplitude.ok_or_else(|| {
        Error::UnsupportedInput("truncation error model needs a coherent amplitude".into())
    })?;
    let lambda = alpha.norm_sqr();
    let tail = poisson_tail(lambda, m0);
    let p = (1.0 - tail).max(0.0);
    let err_bound = (2.0 * tail).sqrt();
    let err_chernoff = if lambda > 0.0 {
        std::f64::consts::SQRT_2
            * (0.5 * m0 as f64 * (std::f64::consts::E * lambda / m0 as f64).ln() - 0.5 * lambda).exp()
    } else {
        0.0
    };

    // Exact trace distance in span{|α_P⟩, |α_T⟩, |0⟩-complement} with
    // |α⟩ = √p|α_P⟩ + √t|α_T⟩ and |0⟩ = q|α_P⟩ + w·e₃, q = e^{−λ/2}/√p.
    // Every matrix entry below is an analytic Poisson expression, so the
    // eigenvalues stay accurate down to the underflow threshold.
    let err_exact = if p <= 0.0 {
        1.0
    } else {
        let t = tail;
        let q = ((-0.5 * lambda).exp() / p.sqrt()).min(1.0);
        let w2 = (1.0 - q * q).max(0.0);
        let sqrt_pt = (p * t).sqrt();
        let qw = q * w2.sqrt();
        let diff = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[
                -t * q * q, sqrt_pt, -t * qw,
                sqrt_pt, t, 0.0,
                -t * qw, 0.0, -t * w2,
            ],
        );
        let se = nalgebra::SymmetricEigen::new(diff);
        0.5 * se.eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
    };

    if err_exact > err_bound * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::Contract(format!(
            "exact truncation error {err_exact:.6e} exceeds its bound {err_bound:.6e}"
        )));
    }

    // Materialize only up to the input's own range; everything above it is
    // zero regardless of where the channel cap sits.
    let keep_len = m0.min(s.coeffs.len()).max(1);
    let mut coeffs = CVector::zeros(keep_len);
    for m in 0..keep_len {
        coeffs[m] = s.coeffs[m];
    }
    let tail_mass = (1.0 - coeffs.norm_squared()).max(0.0);
    let state = TruncatedFockState { cutoff: keep_len, coeffs, tail_mass, amplitude: s.amplitude };
    Ok(TruncationOutcome { state, err_exact, err_bound, err_chernoff, kept_probability: p })
}

/// Amplification outcome for a coherent input.
#[derive(Debug)]
pub struct AmplificationOutcome {
    pub state: TruncatedFockState,
    /// Trace distance between the pure coherent states before and after:
    /// `√(1 − e^{−(g−1)²|z|²})`.
    pub err_model: f64,
    /// The channel-level bound `ε = 1 − 1/g²` reported alongside.
    pub err_gain_bound: f64,
}

/// Amplify a coherent state by gain `g ≥ 1`: `|z⟩ → |g·z⟩`, modeled
/// parametrically on the amplitude.
pub fn amplify(s: &TruncatedFockState, gain: f64) -> Result<AmplificationOutcome> {
    if gain < 1.0 {
        return Err(Error::Contract("amplification gain must be ≥ 1".into()));
    }
    let z = s.amplitude.ok_or_else(|| {
        Error::UnsupportedInput("amplification model needs a coherent amplitude".into())
    })?;
    let out_amp = z * cr(gain);
    let overlap_sq = (-(gain - 1.0) * (gain - 1.0) * z.norm_sqr()).exp();
    let err_model = (1.0 - overlap_sq).max(0.0).sqrt();
    let err_gain_bound = 1.0 - 1.0 / (gain * gain);
    let cutoff = s.cutoff.max(recommended_cutoff(out_amp.norm()));
    let state = coherent(out_amp, cutoff)?;
    Ok(AmplificationOutcome { state, err_model, err_gain_bound })
}

/// Quantum Hellinger and Bures distances
/// `d_H = √(2−2·Tr(√ρ√σ))`, `d_B = √(2−2·Tr|√ρ√σ|)`.
pub fn hellinger_bures(a: &DensityOperator, b: &DensityOperator) -> Result<(f64, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::Contract("hellinger_bures: dimension mismatch".into()));
    }
    let sa = matrix_sqrt_psd(a.matrix());
    let sb = matrix_sqrt_psd(b.matrix());
    let m = &sa * &sb;
    let tr: Complex64 = m.diagonal().iter().sum();
    if tr.im.abs() > 1e-9 {
        return Err(Error::Contract(format!("Tr(√ρ√σ) has imaginary part {:.3e}", tr.im)));
    }
    let tr_abs = nuclear_norm(&m);
    let dh = (2.0 - 2.0 * tr.re).max(0.0).sqrt();
    let db = (2.0 - 2.0 * tr_abs).max(0.0).sqrt();
    if db > dh + 1e-9 {
        return Err(Error::Contract(format!("d_B {db} exceeds d_H {dh}")));
    }
    Ok((dh, db))
}

/// Commutator norm `‖[ρ,σ]‖∞`; zero iff the Hellinger and Bures distances
/// coincide.
pub fn commutator_norm(a: &DensityOperator, b: &DensityOperator) -> f64 {
    let c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
    operator_norm(&c)
}

/// `d_H ≤ √(2·d_Tr)` check helper used by tests and reports.
pub fn hellinger_trace_bound_gap(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    let (dh, _) = hellinger_bures(a, b)?;
    let dtr = crate::linalg::trace_distance(a, b)?;
    Ok((2.0 * dtr).sqrt() - dh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_pure, trace_distance};
    use crate::tensor::CMatrix;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn vacuum_has_zero_tail() {
        let v = coherent(cr(0.0), 10).unwrap();
        assert!(v.tail_mass == 0.0);
        assert!((v.coeffs[0].re - 1.0).abs() < 1e-15);
        assert!(v.norm_accounting_error() < 1e-14);
    }

    #[test]
    fn unit_amplitude_norm_accounting() {
        let s = coherent(cr(1.0), 30).unwrap();
        assert!(s.tail_mass < 1e-30);
        assert!(s.norm_accounting_error() < 1e-12);
        // Norm deficit equals the Poisson tail.
        let deficit = 1.0 - s.coeffs.norm_squared();
        assert!((deficit - poisson_tail(1.0, 30)).abs() < 1e-13);
    }

    #[test]
    fn coherent_overlap_identity() {
        let a = coherent(cr(0.0), 60).unwrap();
        let b = coherent(cr(1.0), 60).unwrap();
        let numeric = (a.coeffs.adjoint() * &b.coeffs)[(0, 0)];
        let analytic = coherent_overlap(cr(0.0), cr(1.0));
        assert!((numeric - analytic).norm() < 1e-12);
        assert!((numeric.norm() - (-0.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn coherent_overlap_grid() {
        let mut r = rng::from_seed(51);
        for _ in 0..50 {
            let a = Complex64::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
            let b = Complex64::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
            let (a, b) = (a * cr(0.7), b * cr(0.7));
            let sa = coherent(a, 60).unwrap();
            let sb = coherent(b, 60).unwrap();
            let numeric = (sa.coeffs.adjoint() * &sb.coeffs)[(0, 0)];
            let analytic = coherent_overlap(a, b);
            assert!((numeric - analytic).norm() < 1e-10, "a={a} b={b}");
            assert!(
                (numeric.norm() - (-(a - b).norm_sqr() / 2.0).exp()).abs() < 1e-10
            );
        }
    }

    #[test]
    fn truncate_vacuum_is_exact() {
        let v = coherent(cr(0.0), 10).unwrap();
        for m0 in [1usize, 3, 10] {
            let out = truncate_channel(&v, m0).unwrap();
            assert!(out.err_exact < 1e-14);
            assert!(out.err_bound < 1e-14);
        }
    }

    #[test]
    fn truncate_bound_chain_on_grid() {
        // err_exact ≤ √(2·Poistail) on the whole grid; the Chernoff form
        // additionally dominates wherever m0 > |α|².
        for step in 0..=12 {
            let alpha = 0.25 * step as f64;
            let s = coherent(cr(alpha), recommended_cutoff(alpha)).unwrap();
            for m0 in 1..=40usize {
                let out = truncate_channel(&s, m0).unwrap();
                assert!(
                    out.err_exact <= out.err_bound * (1.0 + 1e-9) + 1e-12,
                    "alpha={alpha} m0={m0}"
                );
                if (m0 as f64) > alpha * alpha {
                    assert!(
                        out.err_bound <= out.err_chernoff * (1.0 + 1e-9) + 1e-12,
                        "alpha={alpha} m0={m0} bound={} chernoff={}",
                        out.err_bound,
                        out.err_chernoff
                    );
                }
            }
        }
    }

    #[test]
    fn truncate_example_alpha1_m8() {
        let s = coherent(cr(1.0), 40).unwrap();
        let out = truncate_channel(&s, 8).unwrap();
        assert!(out.err_exact <= out.err_bound);
        assert!(out.err_bound <= out.err_chernoff * (1.0 + 1e-12));
        // Direct tail comparison.
        assert!((out.err_bound - (2.0 * poisson_tail(1.0, 8)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn truncation_recovery_error_trend() {
        // At m0 = (e·α)² the bound decays like e^{−α²}-ish in α.
        let mut last = f64::INFINITY;
        for step in 1..=4 {
            let alpha = step as f64 * 0.75;
            let m0 = ((std::f64::consts::E * alpha).powi(2).ceil() as usize).max(1);
            let s = coherent(cr(alpha), recommended_cutoff(alpha)).unwrap();
            let out = truncate_channel(&s, m0).unwrap();
            assert!(out.err_bound < last);
            last = out.err_bound;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn amplify_unit_gain_is_identity() {
        let s = coherent(cr(1.0), 30).unwrap();
        let out = amplify(&s, 1.0).unwrap();
        assert!(out.err_model == 0.0);
        assert!((out.state.amplitude.unwrap() - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn amplify_compensation_example() {
        // g² = N/(N−N0) with N = 10⁶, N0 = 10³.
        let n = 1e6_f64;
        let n0 = 1e3;
        let g = (n / (n - n0)).sqrt();
        let s = coherent(cr(1.0), 40).unwrap();
        let out = amplify(&s, g).unwrap();
        let expect = (g - 1.0) * (g - 1.0);
        assert!((expect - 2.5e-7).abs() < 2e-8, "got {expect}");
        assert!((out.err_model - expect.sqrt()).abs() / out.err_model < 1e-6);
        assert!((out.err_model - 5e-4).abs() < 5e-5);
    }

    #[test]
    fn amplify_error_scales_with_copy_fraction() {
        // err_gain_bound = N0/N exactly at gain² = N/(N−N0).
        let n = 1e8_f64;
        for &n0 in &[1e3, 1e4, 1e5] {
            let g = (n / (n - n0)).sqrt();
            let s = coherent(cr(0.5), 30).unwrap();
            let out = amplify(&s, g).unwrap();
            assert!((out.err_gain_bound - n0 / n).abs() < 1e-12);
        }
    }

    #[test]
    fn hellinger_bures_identical() {
        let s = coherent(cr(0.7), 40).unwrap();
        let rho = s.density().unwrap();
        let (dh, db) = hellinger_bures(&rho, &rho).unwrap();
        assert!(dh < 1e-6 && db < 1e-6);
    }

    #[test]
    fn hellinger_equals_bures_iff_commuting() {
        // Commuting diagonal pair.
        let d1 = DensityOperator::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            cr(0.5),
            cr(0.3),
            cr(0.2),
        ])))
        .unwrap();
        let d2 = DensityOperator::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            cr(0.1),
            cr(0.6),
            cr(0.3),
        ])))
        .unwrap();
        assert!(commutator_norm(&d1, &d2) < 1e-12);
        let (dh, db) = hellinger_bures(&d1, &d2).unwrap();
        assert!((dh - db).abs() < 1e-10);

        // Non-commuting pair separates strictly.
        let g1 = coherent(cr(0.0), 40).unwrap().density().unwrap();
        let g2 = coherent(cr(1.0), 40).unwrap().density().unwrap();
        assert!(commutator_norm(&g1, &g2) > 1e-3);
        let (dh, db) = hellinger_bures(&g1, &g2).unwrap();
        assert!(dh - db > 1e-3);
    }

    #[test]
    fn coherent_pair_reference_values() {
        let g1 = coherent(cr(0.0), 40).unwrap().density().unwrap();
        let g2 = coherent(cr(1.0), 40).unwrap().density().unwrap();
        let (dh, db) = hellinger_bures(&g1, &g2).unwrap();
        // Pure-state reduction: Tr(√ρ√σ) = |⟨a|b⟩|² = e⁻¹,
        // Tr|√ρ√σ| = |⟨a|b⟩| = e^{−1/2}.
        let dh_expect = (2.0 - 2.0 * (-1.0f64).exp()).sqrt();
        let db_expect = (2.0 - 2.0 * (-0.5f64).exp()).sqrt();
        assert!((dh - dh_expect).abs() < 1e-10, "dh={dh}");
        assert!((db - db_expect).abs() < 1e-10, "db={db}");
        assert!((dh - 1.12439).abs() < 1e-4);
        assert!((db - 0.88712).abs() < 1e-4);
        assert!(dh - db > 0.167);
    }

    #[test]
    fn hellinger_bounds_on_random_mixed_pairs() {
        let mut r = rng::from_seed(52);
        for _ in 0..500 {
            let dim = r.gen_range(2..=20usize);
            let mk = |r: &mut rand_chacha::ChaCha8Rng| {
                let mut m = CMatrix::identity(dim, dim) * cr(0.05);
                for _ in 0..3 {
                    let p = random_pure(dim, r);
                    m += p.density().matrix() * cr(r.gen_range(0.1..1.0));
                }
                let tr: Complex64 = m.diagonal().iter().sum();
                DensityOperator::new(m / tr).unwrap()
            };
            let a = mk(&mut r);
            let b = mk(&mut r);
            let (dh, db) = hellinger_bures(&a, &b).unwrap();
            assert!(dh >= db - 1e-10);
            let dtr = trace_distance(&a, &b).unwrap();
            assert!(dh <= (2.0 * dtr).sqrt() + 1e-9, "dh={dh} dtr={dtr}");
        }
    }

    #[test]
    fn cutoff_stability() {
        let v40 = {
            let g1 = coherent(cr(0.0), 40).unwrap().density().unwrap();
            let g2 = coherent(cr(1.0), 40).unwrap().density().unwrap();
            hellinger_bures(&g1, &g2).unwrap()
        };
        let v80 = {
            let g1 = coherent(cr(0.0), 80).unwrap().density().unwrap();
            let g2 = coherent(cr(1.0), 80).unwrap().density().unwrap();
            hellinger_bures(&g1, &g2).unwrap()
        };
        assert!((v40.0 - v80.0).abs() < 1e-10);
        assert!((v40.1 - v80.1).abs() < 1e-10);
    }
}
