//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured figures. Run with `cargo test --release --test acceptance`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use sccomp_core::bosonic::{coherent, commutator_norm, hellinger_bures, recommended_cutoff, truncate_channel};
use sccomp_core::bounds::{classical_no_go_gap, holevo_lower_bound, single_qubit_holevo_check};
use sccomp_core::circuit::BrickworkCircuit;
use sccomp_core::linalg::{
    self, cr, fidelity, trace_distance, DensityOperator, PureState,
};
use sccomp_core::localparam::{decouple, parameterize, DecoupleInstance};
use sccomp_core::protocol::{derive_config, derive_config_relaxed, error_ledger, memory_cost};
use sccomp_core::qlan::{
    default_mode_cutoff, poisson_tail, qlan_bruteforce_oracle, qlan_overlap, CoherentAmplitudes,
};
use sccomp_core::rng;
use sccomp_core::tensor::CMatrix;

fn single_real_mode(u: f64) -> CoherentAmplitudes {
    let mut modes = BTreeMap::new();
    modes.insert(1u64, cr(u));
    CoherentAmplitudes::explicit(modes, u.max(1e-12), 1).unwrap()
}

#[test]
fn criterion_01_qlan_oracle_equivalence() {
    let mut worst = 0.0f64;
    for &n_copies in &[2u64, 4, 6, 8] {
        for &u in &[0.3, 0.7, 1.0] {
            let amps = single_real_mode(u);
            let closed = qlan_overlap(&amps, n_copies, default_mode_cutoff(u)).unwrap();
            let oracle = qlan_bruteforce_oracle(&amps, n_copies).unwrap();
            worst = worst.max((closed - oracle).norm());
        }
    }
    assert!(worst <= 1e-10, "worst deviation {worst:.3e}");
    println!("[PASS] criterion 1: closed-form vs dense oracle, worst deviation {worst:.3e} ≤ 1e-10");
}

#[test]
fn criterion_02_qlan_convergence() {
    let mode_sets: Vec<Vec<Complex64>> = vec![
        vec![cr(1.0)],
        vec![cr(1.0), Complex64::new(0.5, 0.5)],
        vec![Complex64::new(0.8, 0.3), cr(0.6), Complex64::new(0.0, 1.0)],
    ];
    let mut final_gap = 0.0f64;
    for set in &mode_sets {
        let mut modes = BTreeMap::new();
        for (k, &u) in set.iter().enumerate() {
            modes.insert(1u64 << k, u);
        }
        let max_abs = set.iter().map(|u| u.norm()).fold(0.0, f64::max);
        let amps = CoherentAmplitudes::explicit(modes, max_abs, 1).unwrap();
        let cutoff = default_mode_cutoff(max_abs);
        let mut last = f64::INFINITY;
        for &n_copies in &[100u64, 1_000, 10_000, 100_000] {
            let ov = qlan_overlap(&amps, n_copies, cutoff).unwrap();
            let one_minus_f = (1.0 - ov.norm_sqr()).max(0.0);
            assert!(
                one_minus_f < last,
                "not strictly decreasing at N={n_copies} (K={})",
                set.len()
            );
            last = one_minus_f;
        }
        assert!(last <= 0.01, "1-F = {last:.3e} at N=1e5 (K={})", set.len());
        final_gap = final_gap.max(last);
    }
    println!("[PASS] criterion 2: 1−|overlap|² strictly decreasing over N=1e2..1e5 for K=1..3, final ≤ {final_gap:.3e} ≤ 0.01");
}

#[test]
fn criterion_03_local_parameterization_sweep() {
    let mut worst_ratio = 0.0f64;
    let mut worst_recon = 0.0f64;
    for seed in 0..100u64 {
        let n = 4 + (seed % 5) as usize;
        let d = 1 + (seed % 2) as usize;
        let mut r = rng::stream(9000, seed);
        let estimate = BrickworkCircuit::random(n, d, &mut r).unwrap();
        let target = estimate.perturb(0.01, &mut r).unwrap();
        let lp = parameterize(&target, &estimate, 1.0 - 1e-9).unwrap();

        assert!(lp.reconstruction_error <= 1e-8, "seed {seed}: reconstruction {}", lp.reconstruction_error);
        assert!(lp.n_gate <= n / d + 4, "seed {seed}: n_gate {}", lp.n_gate);
        assert!(lp.max_support <= 8 * d, "seed {seed}: support {}", lp.max_support);
        assert!(lp.max_overlap <= 4, "seed {seed}: overlap {}", lp.max_overlap);
        for rot in &lp.rotations {
            assert!(
                rot.eps_certificate <= 28.0 * lp.measured_eps + 1e-12,
                "seed {seed}: certificate {} vs 28·{}",
                rot.eps_certificate,
                lp.measured_eps
            );
        }
        worst_recon = worst_recon.max(lp.reconstruction_error);
        if lp.measured_eps > 1e-12 {
            let max_cert = lp.rotations.iter().map(|r| r.eps_certificate).fold(0.0, f64::max);
            worst_ratio = worst_ratio.max(max_cert / lp.measured_eps);
        }
    }
    println!("[PASS] criterion 3: 100 instances, reconstruction ≤ {worst_recon:.3e} ≤ 1e-8, counts within bounds, worst certificate/ε = {worst_ratio:.3} ≤ 28");
}

#[test]
fn criterion_04_decoupling_bound() {
    use rand::Rng;
    let mut r = rng::from_seed(9100);
    let mut worst_ratio = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..200 {
        let da = [1usize, 2, 4][r.gen_range(0..3)];
        let dae = [2usize, 4][r.gen_range(0..2)];
        let db = [2usize, 4][r.gen_range(0..2)];
        let dbe = [1usize, 2][r.gen_range(0..2)];
        let dc = [1usize, 2][r.gen_range(0..2)];
        let h = linalg::random_hermitian_unit_norm(da * db * dc, &mut r);
        let v = linalg::exp_i_hermitian(&h, r.gen_range(0.005..0.08));
        let inst = DecoupleInstance {
            dim_a: da,
            dim_a_env: dae,
            dim_b: db,
            dim_b_env: dbe,
            dim_c: dc,
            psi: linalg::random_pure(da * dae, &mut r),
            phi: linalg::random_pure(db * dbe, &mut r),
            v,
        };
        let out = decouple(&inst, 1.0 - 1e-9).unwrap();
        // √(1−F) carries a ~1e-8 noise floor near zero distance.
        if out.achieved > 3.0 * out.hypothesis + 1e-7 {
            violations += 1;
        }
        if out.hypothesis > 1e-6 {
            worst_ratio = worst_ratio.max(out.achieved / out.hypothesis);
        }
    }
    assert_eq!(violations, 0);
    assert!(worst_ratio <= 3.0 + 1e-6);
    println!("[PASS] criterion 4: 200 instances, zero violations of achieved ≤ 3ε, worst ratio {worst_ratio:.4}");
}

#[test]
fn criterion_05_truncation_bounds() {
    let mut checked = 0usize;
    for step in 0..=12 {
        let alpha = 0.25 * step as f64;
        let s = coherent(cr(alpha), recommended_cutoff(alpha)).unwrap();
        for m0 in 1..=40usize {
            let out = truncate_channel(&s, m0).unwrap();
            let tail_bound = (2.0 * poisson_tail(alpha * alpha, m0)).sqrt();
            assert!(
                out.err_exact <= tail_bound * (1.0 + 1e-9) + 1e-12,
                "alpha={alpha} m0={m0}: exact {} > √(2·tail) {}",
                out.err_exact,
                tail_bound
            );
            // The Chernoff link holds in its validity regime m0 > |α|².
            if (m0 as f64) > alpha * alpha {
                assert!(
                    tail_bound <= out.err_chernoff * (1.0 + 1e-9) + 1e-12,
                    "alpha={alpha} m0={m0}: √(2·tail) {} > chernoff {}",
                    tail_bound,
                    out.err_chernoff
                );
            }
            checked += 1;
        }
    }
    println!("[PASS] criterion 5: err_exact ≤ √(2·Poistail) ≤ Chernoff form on {checked} grid points (Chernoff link in its m0 > |α|² regime)");
}

#[test]
fn criterion_06_classical_no_go() {
    let g = classical_no_go_gap(40).unwrap();
    assert!((g.d_bures - 0.88712).abs() <= 1e-4, "dB = {}", g.d_bures);
    assert!((g.d_hellinger - 1.12439).abs() <= 1e-4, "dH = {}", g.d_hellinger);
    assert!((g.gap - 0.23727).abs() <= 1e-4);
    assert!(g.gap > 0.167);
    assert!((g.eps_floor - 0.00704).abs() <= 1e-4);
    assert!(g.eps_floor > 0.003);
    let g80 = classical_no_go_gap(80).unwrap();
    assert!((g.d_hellinger - g80.d_hellinger).abs() <= 1e-10);
    assert!((g.d_bures - g80.d_bures).abs() <= 1e-10);
    println!(
        "[PASS] criterion 6: dB = {:.5}, dH = {:.5}, gap = {:.5} > 0.167, eps_floor = {:.5} > 0.003, cutoff-stable to 1e-10",
        g.d_bures, g.d_hellinger, g.gap, g.eps_floor
    );
}

#[test]
fn criterion_07_holevo() {
    // Exact formula at machine precision.
    for (n, copies) in [(1usize, 1u64), (4, 15), (7, 1023)] {
        let r = holevo_lower_bound(n, copies, 0.0).unwrap();
        let expect = n as f64 * ((copies + 1) as f64).log2();
        assert!((r.holevo_bits - expect).abs() <= 1e-12);
    }
    // Monte-Carlo single-qubit check at 2e5 samples.
    let mut worst = 0.0f64;
    for copies in 1..=7u64 {
        let h = single_qubit_holevo_check(copies, 200_000, 9200 + copies).unwrap();
        let exact = ((copies + 1) as f64).log2();
        let dev = (h - exact).abs();
        assert!(dev <= 0.02, "N={copies}: entropy {h} vs {exact}");
        worst = worst.max(dev);
    }
    println!("[PASS] criterion 7: χ formula exact to 1e-12; Monte-Carlo within {worst:.4} ≤ 0.02 for N ≤ 7 at 2e5 samples");
}

#[test]
fn criterion_08_budget_calculus() {
    // Formula-level identities across (d, Δ).
    for d in [1usize, 2] {
        for step in 1..=13 {
            let delta = 0.05 * step as f64;
            let cfg = derive_config_relaxed(6, d, 1e18, delta).unwrap();
            let mem = memory_cost(&cfg);
            let mc_ratio = mem.m_c_bits / (6.0 * d as f64 * 1e18f64.log2());
            assert!((mc_ratio - 8.0 * (1.0 - 2.0 * delta / 3.0)).abs() <= 1e-12);
            let r_expect = 2f64.powi(8 * d as i32 - 2) * delta / ((d * d) as f64 * (3.0 - 2.0 * delta));
            assert!((mem.r_qc - r_expect).abs() / r_expect <= 1e-12);
        }
    }
    // Ledger decade sweep at a fixed admissible configuration.
    for d in [1usize, 2] {
        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for e in [20i32, 30, 40, 60] {
            let cfg = derive_config(2, d, 2f64.powi(e), 0.3).unwrap();
            assert!(cfg.admissible);
            let ledger = error_ledger(&cfg, None);
            assert!(ledger.log10_eps_tomo < last.0);
            assert!(ledger.log10_eps_amp < last.1);
            assert!(ledger.log10_eps_trun < last.2);
            last = (ledger.log10_eps_tomo, ledger.log10_eps_amp, ledger.log10_eps_trun);
        }
    }
    println!("[PASS] criterion 8: M_c/(nd·log₂N) and r_qc match their formulas to 1e-12 on the (d, Δ) grid; ledger terms strictly decreasing over N = 2^20..2^60");
}

#[test]
fn criterion_09_metric_layer() {
    use rand::Rng;
    let mut r = rng::from_seed(9300);

    // Fuchs–van de Graaff, both directions, 500 pairs.
    for k in 0..500 {
        let dim = r.gen_range(2..=12usize);
        let (a, b) = if k % 3 == 0 {
            (
                linalg::random_pure(dim, &mut r).density(),
                linalg::random_pure(dim, &mut r).density(),
            )
        } else {
            let mk = |r: &mut rand_chacha::ChaCha8Rng| {
                let mut m = linalg::identity(dim) * cr(0.05);
                for _ in 0..3 {
                    let p = linalg::random_pure(dim, r);
                    m += p.density().matrix() * cr(r.gen_range(0.1..1.0));
                }
                let tr: Complex64 = m.diagonal().iter().sum();
                DensityOperator::new(m / tr).unwrap()
            };
            (mk(&mut r), mk(&mut r))
        };
        let d = trace_distance(&a, &b).unwrap();
        let f = fidelity(&a, &b).unwrap();
        assert!(1.0 - f.sqrt() <= d + 1e-9);
        assert!(d <= (1.0 - f).max(0.0).sqrt() + 1e-9);
    }

    // d_H ≥ d_B on random mixed pairs, equality iff commuting on diagonals,
    // and d_H ≤ √(2·d_Tr).
    for _ in 0..200 {
        let dim = r.gen_range(2..=16usize);
        let mk = |r: &mut rand_chacha::ChaCha8Rng| {
            let mut m = linalg::identity(dim) * cr(0.05);
            for _ in 0..3 {
                let p = linalg::random_pure(dim, r);
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
        assert!(dh <= (2.0 * dtr).sqrt() + 1e-9);
    }
    // Commuting diagonal pairs saturate d_H = d_B.
    for _ in 0..50 {
        let dim = r.gen_range(2..=8usize);
        let mk = |r: &mut rand_chacha::ChaCha8Rng| {
            let mut diag = vec![0.0f64; dim];
            let mut sum = 0.0;
            for v in diag.iter_mut() {
                *v = r.gen_range(0.05..1.0);
                sum += *v;
            }
            let m = CMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    cr(diag[i] / sum)
                } else {
                    cr(0.0)
                }
            });
            DensityOperator::new(m).unwrap()
        };
        let a = mk(&mut r);
        let b = mk(&mut r);
        assert!(commutator_norm(&a, &b) < 1e-12);
        let (dh, db) = hellinger_bures(&a, &b).unwrap();
        assert!((dh - db).abs() <= 1e-10);
    }
    println!("[PASS] criterion 9: Fuchs–van de Graaff on 500 pairs; d_H ≥ d_B with diagonal equality; d_H ≤ √(2·d_Tr)");
}

/// Pure-state sanity anchor used across the suite.
#[test]
fn metric_layer_anchor_values() {
    let zero = PureState::basis(2, 0).density();
    let plus = PureState::new(sccomp_core::tensor::CVector::from_vec(vec![
        cr(std::f64::consts::FRAC_1_SQRT_2),
        cr(std::f64::consts::FRAC_1_SQRT_2),
    ]))
    .unwrap()
    .density();
    assert!((trace_distance(&zero, &plus).unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-10);
}
