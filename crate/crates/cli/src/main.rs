//! Command-line drivers: reproducible experiment commands emitting CSV and
//! JSON artifacts. Every command derives all randomness from one manifest
//! seed, and reruns with an identical manifest produce byte-identical
//! output files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sccomp_core::bounds::classical_no_go_gap;
use sccomp_core::circuit::BrickworkCircuit;
use sccomp_core::error::Error;
use sccomp_core::learner::covering_bits_bound;
use sccomp_core::localparam::{decouple, parameterize, DecoupleInstance};
use sccomp_core::protocol::{
    derive_config, derive_config_relaxed, error_ledger, memory_cost, run_pipeline_desk,
    DeskScaleParams,
};
use sccomp_core::qlan::{
    default_mode_cutoff, qlan_bruteforce_oracle, qlan_overlap, CoherentAmplitudes,
};
use sccomp_core::{linalg, rng};

const VERSION_TAG: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "sccomp", version, about = "Shallow-circuit compression testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    JsonLike,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence sweep of the N-copy coherent-state overlap.
    QlanConverge {
        /// Number of modes (≤ 4).
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Per-mode amplitude (|amp| ≤ 2).
        #[arg(long, default_value_t = 1.0)]
        amp: f64,
        /// Copy counts, comma separated.
        #[arg(long = "N", value_delimiter = ',', default_values_t = vec![100u64, 1000, 10000, 100000])]
        copies: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Budget calculus for a compression configuration.
    CompressPlan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long = "N")]
        copies: f64,
        #[arg(long)]
        delta_exp: f64,
        /// Accept Δ outside the admissible interval (flagged in the report).
        #[arg(long, default_value_t = false)]
        relaxed: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::JsonLike)]
        format: Format,
    },
    /// Tomography sample budget and covering-cardinality bound.
    Budget {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Statistical constant in the sample-count formula.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV decade sweep of the ledger and memory formulas over copy counts.
    PlanSweep {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta_exp: f64,
        /// log₂ copy counts, comma separated.
        #[arg(long = "log2-N", value_delimiter = ',', default_values_t = vec![20u32, 30, 40, 60])]
        log2_copies: Vec<u32>,
        #[arg(long, default_value_t = false)]
        relaxed: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized verification sweep of the local-parameterization pipeline.
    ParamCheck {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Per-gate perturbation strength.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// The Hellinger/Bures no-go gap report.
    Noclassical {
        #[arg(long, default_value_t = 40)]
        cutoff: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the closed-form overlap against the dense oracle and the
    /// decoupling bound against random instances.
    OracleSuite {
        #[arg(long = "max-N", default_value_t = 8)]
        max_copies: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a reproducible random brickwork circuit document.
    GenCircuit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// End-to-end desk-scale pipeline run.
    Pipeline {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Per-gate perturbation for estimate candidates.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Surrogate copy count.
        #[arg(long = "N", default_value_t = 10000)]
        copies: u64,
        #[arg(long, default_value_t = 0.5)]
        delta_exp: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Read the instance from a circuit document instead of sampling.
        #[arg(long)]
        circuit: Option<PathBuf>,
        /// Also include a covering-net-snapped estimate candidate at this
        /// radius.
        #[arg(long)]
        net_eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// 17-significant-digit float formatting for bit-stable regression files.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn manifest(command: &str, params: BTreeMap<&str, String>, seed: u64, out: Option<&PathBuf>) {
    let doc = json!({
        "command": command,
        "params": params,
        "seed": seed,
        "artifacts": out.map(|p| p.display().to_string()),
        "version": VERSION_TAG,
    });
    println!("{doc}");
}

fn write_artifact(path: &PathBuf, contents: &str) -> Result<(), Error> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::Contract(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::Contract(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn worker_cap() -> usize {
    std::env::var("QLC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::QlanConverge { k, amp, copies, out, seed } => {
            if k == 0 || k > 4 {
                return Err(Error::Contract("mode count must be in 1..=4".into()));
            }
            if amp.abs() > 2.0 {
                return Err(Error::Contract("|amp| must be ≤ 2".into()));
            }
            let mut params = BTreeMap::new();
            params.insert("k", k.to_string());
            params.insert("amp", fmt_f64(amp));
            params.insert("N", format!("{copies:?}"));
            manifest("qlan-converge", params, seed, Some(&out));

            let mut modes = BTreeMap::new();
            for mode in 0..k {
                modes.insert(1u64 << mode, num_complex::Complex64::new(amp, 0.0));
            }
            let amps = CoherentAmplitudes::explicit(modes, amp.abs().max(1e-12), 1)?;
            let cutoff = default_mode_cutoff(amp.abs());

            let mut rows = Vec::new();
            let mut last = f64::INFINITY;
            for &n_copies in &copies {
                let ov = qlan_overlap(&amps, n_copies, cutoff)?;
                let one_minus_f = (1.0 - ov.norm_sqr()).max(0.0);
                if amp != 0.0 && one_minus_f >= last {
                    return Err(Error::Contract(format!(
                        "one_minus_fidelity not strictly decreasing at N = {n_copies}"
                    )));
                }
                last = one_minus_f;
                let terms = k * cutoff.min(n_copies as usize) + 1;
                rows.push(format!(
                    "{n_copies},{k},{},{},{cutoff},{terms}",
                    fmt_f64(amp.abs()),
                    fmt_f64(one_minus_f)
                ));
            }
            let mut doc = String::from("N,K,max_amp,one_minus_fidelity,cutoff,terms_summed\n");
            for r in rows {
                doc.push_str(&r);
                doc.push('\n');
            }
            write_artifact(&out, &doc)?;
        }

        Command::CompressPlan { n, d, copies, delta_exp, relaxed, out, format } => {
            let mut params = BTreeMap::new();
            params.insert("n", n.to_string());
            params.insert("d", d.to_string());
            params.insert("N", fmt_f64(copies));
            params.insert("delta_exp", fmt_f64(delta_exp));
            params.insert("relaxed", relaxed.to_string());
            manifest("compress-plan", params, 0, out.as_ref());

            let cfg = if relaxed {
                derive_config_relaxed(n, d, copies, delta_exp)?
            } else {
                derive_config(n, d, copies, delta_exp)?
            };
            let ledger = error_ledger(&cfg, None);
            let memory = memory_cost(&cfg);
            let report = json!({
                "config": {
                    "n": cfg.n, "d": cfg.d, "N": cfg.copies,
                    "delta_exp": cfg.delta_exp,
                    "gamma": cfg.gamma,
                    "delta_interval": [cfg.delta_interval.0, cfg.delta_interval.1],
                    "admissible": cfg.admissible,
                    "eps0": cfg.eps0, "N0": cfg.n0, "alpha0": cfg.alpha0,
                },
                "ledger": {
                    "eps_tomo": ledger.eps_tomo,
                    "eps_qlan": "unevaluated (no closed form; see the pipeline command)",
                    "eps_amp": ledger.eps_amp,
                    "eps_trun": ledger.eps_trun,
                    "log10_eps_tomo": ledger.log10_eps_tomo,
                    "log10_eps_amp": ledger.log10_eps_amp,
                    "log10_eps_trun": ledger.log10_eps_trun,
                    "total_closed_form": ledger.total,
                },
                "memory": {
                    "M_c_bits": memory.m_c_bits,
                    "M_c_log2n_correction": memory.m_c_log_n_correction,
                    "M_q_qubits": memory.m_q_qubits,
                    "M_q_log2n_correction": memory.m_q_log_n_correction,
                    "r_qc": memory.r_qc,
                },
            });
            let text = match format {
                Format::JsonLike => format!("{:#}\n", report),
                Format::Csv => {
                    let mut s = String::from("field,value\n");
                    s.push_str(&format!("eps0,{}\n", fmt_f64(cfg.eps0)));
                    s.push_str(&format!("N0,{}\n", fmt_f64(cfg.n0)));
                    s.push_str(&format!("alpha0,{}\n", fmt_f64(cfg.alpha0)));
                    s.push_str(&format!("eps_tomo,{}\n", fmt_f64(ledger.eps_tomo)));
                    s.push_str(&format!("eps_amp,{}\n", fmt_f64(ledger.eps_amp)));
                    s.push_str(&format!("eps_trun,{}\n", fmt_f64(ledger.eps_trun)));
                    s.push_str(&format!("M_c_bits,{}\n", fmt_f64(memory.m_c_bits)));
                    s.push_str(&format!("M_q_qubits,{}\n", fmt_f64(memory.m_q_qubits)));
                    s.push_str(&format!("r_qc,{}\n", fmt_f64(memory.r_qc)));
                    s
                }
            };
            match out {
                Some(path) => write_artifact(&path, &text)?,
                None => print!("{text}"),
            }
        }

        Command::Budget { n, d, eps, delta, c, out } => {
            let mut params = BTreeMap::new();
            params.insert("n", n.to_string());
            params.insert("d", d.to_string());
            params.insert("eps", fmt_f64(eps));
            params.insert("delta", fmt_f64(delta));
            params.insert("c", fmt_f64(c));
            manifest("budget", params, 0, out.as_ref());
            let budget = sccomp_core::learner::tomography_budget(n, d, eps, delta, c)?;
            let gates = (n * d) / 2;
            let bits = covering_bits_bound(gates.max(1), eps, n)?;
            let report = json!({
                "n": n, "d": d, "eps": eps, "delta": delta, "c": c,
                "N0": budget.copies,
                "covering_bits": bits,
                "covering_gates": gates.max(1),
            });
            let text = format!("{:#}\n", report);
            match out {
                Some(path) => write_artifact(&path, &text)?,
                None => print!("{text}"),
            }
        }

        Command::PlanSweep { n, d, delta_exp, log2_copies, relaxed, out } => {
            let mut params = BTreeMap::new();
            params.insert("n", n.to_string());
            params.insert("d", d.to_string());
            params.insert("delta_exp", fmt_f64(delta_exp));
            params.insert("log2_N", format!("{log2_copies:?}"));
            params.insert("relaxed", relaxed.to_string());
            manifest("plan-sweep", params, 0, Some(&out));
            let mut doc = String::from(
                "log2_N,eps_tomo,eps_amp,eps_trun,log10_eps_tomo,log10_eps_amp,log10_eps_trun,M_c_bits,M_q_qubits,r_qc\n",
            );
            for &e in &log2_copies {
                let copies = 2f64.powi(e as i32);
                let cfg = if relaxed {
                    derive_config_relaxed(n, d, copies, delta_exp)?
                } else {
                    derive_config(n, d, copies, delta_exp)?
                };
                let ledger = error_ledger(&cfg, None);
                let mem = memory_cost(&cfg);
                doc.push_str(&format!(
                    "{e},{},{},{},{},{},{},{},{},{}\n",
                    fmt_f64(ledger.eps_tomo),
                    fmt_f64(ledger.eps_amp),
                    fmt_f64(ledger.eps_trun),
                    fmt_f64(ledger.log10_eps_tomo),
                    fmt_f64(ledger.log10_eps_amp),
                    fmt_f64(ledger.log10_eps_trun),
                    fmt_f64(mem.m_c_bits),
                    fmt_f64(mem.m_q_qubits),
                    fmt_f64(mem.r_qc)
                ));
            }
            write_artifact(&out, &doc)?;
        }

        Command::ParamCheck { n, d, eps, trials, seed, out } => {
            if n > 8 || d > 2 || d == 0 {
                return Err(Error::Capacity("param-check is capped at n ≤ 8, 1 ≤ d ≤ 2".into()));
            }
            let mut params = BTreeMap::new();
            params.insert("n", n.to_string());
            params.insert("d", d.to_string());
            params.insert("eps", fmt_f64(eps));
            params.insert("trials", trials.to_string());
            manifest("param-check", params, seed, Some(&out));

            let run_trial = |t: usize| -> Result<String, Error> {
                let mut gen_rng = rng::stream(seed, t as u64);
                let estimate = BrickworkCircuit::random(n, d, &mut gen_rng)?;
                let target = estimate.perturb(eps, &mut gen_rng)?;
                let lp = parameterize(&target, &estimate, 1.0 - 1e-9)?;
                let max_cert =
                    lp.rotations.iter().map(|r| r.eps_certificate).fold(0.0, f64::max);
                Ok(format!(
                    "{t},{},{},{},{},{}",
                    fmt_f64(lp.reconstruction_error),
                    lp.n_gate,
                    lp.max_support,
                    lp.max_overlap,
                    fmt_f64(max_cert)
                ))
            };

            let workers = worker_cap().min(trials.max(1));
            let mut rows: Vec<Option<String>> = vec![None; trials];
            if workers <= 1 {
                for (t, slot) in rows.iter_mut().enumerate() {
                    *slot = Some(run_trial(t)?);
                }
            } else {
                let results: Vec<Result<String, Error>> = std::thread::scope(|scope| {
                    let mut handles = Vec::new();
                    for chunk in 0..workers {
                        let run_trial = &run_trial;
                        handles.push(scope.spawn(move || {
                            let mut partial = Vec::new();
                            let mut t = chunk;
                            while t < trials {
                                partial.push((t, run_trial(t)));
                                t += workers;
                            }
                            partial
                        }));
                    }
                    let mut flat: Vec<Option<Result<String, Error>>> =
                        (0..trials).map(|_| None).collect();
                    for h in handles {
                        for (t, r) in h.join().expect("worker panicked") {
                            flat[t] = Some(r);
                        }
                    }
                    flat.into_iter().map(|r| r.expect("missing trial")).collect()
                });
                for (t, r) in results.into_iter().enumerate() {
                    rows[t] = Some(r?);
                }
            }

            let mut doc = String::from(
                "trial,reconstruction_error,n_gate,max_support,max_overlap,max_certificate\n",
            );
            for r in rows {
                doc.push_str(&r.expect("missing row"));
                doc.push('\n');
            }
            write_artifact(&out, &doc)?;
        }

        Command::Noclassical { cutoff, out } => {
            let mut params = BTreeMap::new();
            params.insert("cutoff", cutoff.to_string());
            manifest("noclassical", params, 0, out.as_ref());
            let gap = classical_no_go_gap(cutoff)?;
            let report = json!({
                "d_hellinger": gap.d_hellinger,
                "d_bures": gap.d_bures,
                "gap": gap.gap,
                "eps_floor": gap.eps_floor,
                "eps_floor_stated_form": gap.eps_floor_stated_form,
                "commutator_norm": gap.commutator,
                "gap_exceeds_0.167": gap.gap > 0.167,
                "eps_floor_exceeds_0.003": gap.eps_floor > 0.003,
            });
            let text = format!("{:#}\n", report);
            match out {
                Some(path) => write_artifact(&path, &text)?,
                None => print!("{text}"),
            }
        }

        Command::OracleSuite { max_copies, seed } => {
            let mut params = BTreeMap::new();
            params.insert("max_N", max_copies.to_string());
            manifest("oracle-suite", params, seed, None);
            if max_copies > 16 {
                return Err(Error::Capacity("oracle suite is capped at N ≤ 16".into()));
            }

            // Closed form vs dense oracle.
            let mut worst = 0.0f64;
            for n_copies in (2..=max_copies).step_by(2) {
                for &amp in &[0.3, 0.7, 1.0] {
                    let mut modes = BTreeMap::new();
                    modes.insert(1u64, num_complex::Complex64::new(amp, 0.0));
                    let amps = CoherentAmplitudes::explicit(modes, amp, 1)?;
                    let closed = qlan_overlap(&amps, n_copies, default_mode_cutoff(amp))?;
                    let oracle = qlan_bruteforce_oracle(&amps, n_copies)?;
                    worst = worst.max((closed - oracle).norm());
                }
            }
            if worst > 1e-10 {
                return Err(Error::Contract(format!(
                    "oracle disagreement {worst:.3e} above 1e-10"
                )));
            }
            println!("oracle-vs-closed-form worst deviation: {}", fmt_f64(worst));

            // Decoupling bound on random instances.
            let mut r = rng::stream(seed, 7);
            let mut worst_ratio = 0.0f64;
            for _ in 0..200 {
                use rand::Rng;
                let h = linalg::random_hermitian_unit_norm(8, &mut r);
                let v = linalg::exp_i_hermitian(&h, r.gen_range(0.01..0.06));
                let inst = DecoupleInstance {
                    dim_a: 2,
                    dim_a_env: 2,
                    dim_b: 2,
                    dim_b_env: 2,
                    dim_c: 2,
                    psi: linalg::random_pure(4, &mut r),
                    phi: linalg::random_pure(4, &mut r),
                    v,
                };
                let outcome = decouple(&inst, 1.0 - 1e-9)?;
                if outcome.achieved > 3.0 * outcome.hypothesis + 1e-7 {
                    return Err(Error::Contract("decoupling bound violated".into()));
                }
                if outcome.hypothesis > 1e-6 {
                    worst_ratio = worst_ratio.max(outcome.achieved / outcome.hypothesis);
                }
            }
            println!("decoupling worst achieved/hypothesis ratio: {}", fmt_f64(worst_ratio));

            // Covering-bits formula self-check.
            let bits = covering_bits_bound(1, 1.0, 2)?;
            let expect = 32.0 * 12f64.log2() + 2.0;
            if (bits - expect).abs() > 1e-12 {
                return Err(Error::Contract("covering bits formula drift".into()));
            }
            println!("oracle suite passed");
        }

        Command::GenCircuit { n, d, seed, out } => {
            let mut params = BTreeMap::new();
            params.insert("n", n.to_string());
            params.insert("d", d.to_string());
            manifest("gen-circuit", params, seed, Some(&out));
            let mut r = rng::from_seed(seed);
            let c = BrickworkCircuit::random(n, d, &mut r)?;
            write_artifact(&out, &c.to_json())?;
        }

        Command::Pipeline { n, d, eps, copies, delta_exp, seed, circuit, net_eps, out } => {
            let mut params = BTreeMap::new();
            params.insert("n", n.to_string());
            params.insert("d", d.to_string());
            params.insert("eps", fmt_f64(eps));
            params.insert("N", copies.to_string());
            params.insert("delta_exp", fmt_f64(delta_exp));
            if let Some(p) = &circuit {
                params.insert("circuit", p.display().to_string());
            }
            if let Some(e) = net_eps {
                params.insert("net_eps", fmt_f64(e));
            }
            manifest("pipeline", params, seed, out.as_ref());

            let instance = match circuit {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        Error::Contract(format!("cannot read {}: {e}", path.display()))
                    })?;
                    BrickworkCircuit::from_json(&text)?
                }
                None => {
                    let mut r = rng::stream(seed, 0);
                    BrickworkCircuit::random(n, d, &mut r)?
                }
            };
            let desk = DeskScaleParams {
                surrogate_copies: copies,
                delta_exp,
                perturbation: eps,
                seed,
                net_eps,
                ..Default::default()
            };
            let report = run_pipeline_desk(&instance, &desk)?;
            let stages: Vec<serde_json::Value> = report
                .stages
                .iter()
                .map(|s| json!({ "name": s.name, "error": s.error, "detail": s.detail }))
                .collect();
            let doc = json!({
                "config": {
                    "n": report.config.n, "d": report.config.d,
                    "N_surrogate": report.config.copies,
                    "delta_exp": report.config.delta_exp,
                    "eps0_measured": report.config.eps0,
                    "alpha0": report.config.alpha0,
                    "admissible": report.config.admissible,
                },
                "ledger": {
                    "eps_tomo": report.ledger.eps_tomo,
                    "eps_qlan_numeric": report.eps_qlan_numeric,
                    "eps_amp": report.ledger.eps_amp,
                    "eps_trun": report.ledger.eps_trun,
                    "total": report.ledger.total,
                },
                "memory": {
                    "M_c_bits": report.memory.m_c_bits,
                    "M_q_qubits": report.memory.m_q_qubits,
                    "r_qc": report.memory.r_qc,
                },
                "stages": stages,
                "selected_hypothesis": report.selected_hypothesis,
                "mode_count": report.mode_count,
                "max_mode_amplitude": report.max_mode_amplitude,
                "fidelity_bound": report.fidelity_bound,
                "infidelity_proxy": report.infidelity_proxy,
            });
            let text = format!("{:#}\n", doc);
            match out {
                Some(path) => write_artifact(&path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
