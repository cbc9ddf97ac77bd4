//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run: cargo test --release --test acceptance

mod common;

use std::process::ExitCode;
use std::time::Instant;

use mimo_ba::bitalloc::{crlb_ba, enumerate_bset, es_ba, EsMetric};
use mimo_ba::complexity::{complexity_counts, ComplexityScheme};
use mimo_ba::hybrid::factor_default;
use mimo_ba::linalg::{frobenius, max_abs_diff, CMat};
use mimo_ba::metrics::{
    capacity, capacity_inf, crlb, empirical_mse, linearized_capacity_term, log_capacity_term,
    mse_delta, mse_matrix, pseudo_covariance_check, waterfill, CombinerMode, NoiseKind,
};
use mimo_ba::quantization::{BitVector, PowerModel, QuantTable, MMSE_DISTORTION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dft_columns, link, random_semi_unitary, reference_channel, small_channel};

const CAPACITY_TIE_TOL: f64 = 1e-9;
const MSE_CRLB_TOL: f64 = 1e-10;
const MC_TRIALS: usize = 100_000;
const MC_REL_TOL: f64 = 0.02;
const PSEUDO_COV_FACTOR: f64 = 3.0;
const CONTROL_FACTOR: f64 = 10.0;
const ES_RATIO: f64 = 1.05;
const LINEARIZATION_REL_TOL: f64 = 0.01;
const HYBRID_EXACT_TOL: f64 = 1e-8;
const HYBRID_POWER_TOL: f64 = 1e-6;
const WATERFILL_SUM_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn complexity_closed_forms() -> Outcome {
    let get = |s, n_s| complexity_counts(s, n_s, 4, 1, 1, 5).unwrap();
    let cells = [
        (get(ComplexityScheme::Crlb, 8).real_mults, 288),
        (get(ComplexityScheme::Crlb, 12).real_mults, 576),
        (get(ComplexityScheme::Mmqse, 8).real_mults, 440),
        (get(ComplexityScheme::Mmqse, 12).real_mults, 804),
        (get(ComplexityScheme::Mmqse, 8).real_adds, 263),
        (get(ComplexityScheme::Mmqse, 12).real_adds, 528),
    ];
    let got: Vec<u64> = cells.iter().map(|c| c.0).collect();
    outcome(cells.iter().all(|(a, b)| a == b), format!("cells {got:?}"))
}

fn distortion_table_fidelity() -> Outcome {
    let t = QuantTable::default();
    let mut exact = true;
    let mut worst = 0.0f64;
    for (b, f) in MMSE_DISTORTION {
        exact &= t.f_of_b(b).unwrap() == f;
        worst = worst.max((t.g_of_b(b).unwrap() - f / (1.0 - f)).abs());
    }
    outcome(exact && worst <= 1e-12, format!("f exact: {exact}, max |g − f/(1−f)| = {worst:.1e}"))
}

fn kf_matches_capacity_argmax() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut disagreements = 0;
    let mut worst_gap = 0.0f64;
    let mut example = String::new();
    for instance in 0..200u64 {
        let n_s = rng.random_range(1..=4usize);
        let n_b = rng.random_range(1..=3u8);
        let snr = rng.random_range(-10.0..30.0);
        let steps = rng.random_range(2 * n_s as u64..=n_s as u64 * (1u64 << n_b));
        let pm = PowerModel::new(1.0, 1.0, steps as f64).unwrap();
        let setup = link(&small_channel(1000 + instance), n_s, snr, CombinerMode::Ideal);
        let bset = enumerate_bset(n_s, n_b, &pm).unwrap();
        let kf = crlb_ba(&setup.decomp.sigma, &setup.loading, &setup.table, setup.sigma_n2, &bset, 0).unwrap();
        let best = es_ba(EsMetric::Capacity, &setup, &bset, 0).unwrap();
        let kf_cap = capacity(&setup.model(Some(&kf.chosen)).unwrap()).unwrap();
        let best_cap = capacity(&setup.model(Some(&best.chosen)).unwrap()).unwrap();
        let gap = best_cap - kf_cap;
        if kf.chosen != best.chosen && gap > CAPACITY_TIE_TOL {
            disagreements += 1;
            if gap > worst_gap {
                worst_gap = gap;
                example = format!(
                    "instance {instance}: K_f picks [{}] ({kf_cap:.3} b), capacity picks [{}] ({best_cap:.3} b)",
                    kf.chosen, best.chosen
                );
            }
        }
    }
    outcome(
        disagreements == 0,
        format!("{disagreements}/200 disagree beyond 1e-9; worst gap {worst_gap:.3} bits; {example}"),
    )
}

fn mse_equals_crlb() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for instance in 0..100u64 {
        let n_s = rng.random_range(1..=4usize);
        let snr = rng.random_range(-10.0..30.0);
        let setup = link(&small_channel(instance), n_s, snr, CombinerMode::Ideal);
        let bits = BitVector((0..n_s).map(|_| rng.random_range(1..=5u8)).collect());
        let model = setup.model(Some(&bits)).unwrap();
        worst = worst.max(max_abs_diff(&mse_matrix(&model), &crlb(&model).unwrap()));
    }
    outcome(worst <= MSE_CRLB_TOL, format!("max entrywise |MSE − CRLB| = {worst:.2e}"))
}

fn monte_carlo() -> Outcome {
    let setup = link(&reference_channel(5), 4, 0.0, CombinerMode::Ideal);
    let model = setup.model(Some(&BitVector(vec![3, 2, 2, 1]))).unwrap();
    let analytic = mse_delta(&model);
    let empirical = empirical_mse(&model, MC_TRIALS, 99).unwrap();
    let rel = (empirical - analytic).abs() / analytic;

    let phi_norm = model.phi.clone().singular_values().max();
    let scale = phi_norm / (MC_TRIALS as f64).sqrt();
    let circular = pseudo_covariance_check(&model, MC_TRIALS, 5, NoiseKind::CircularGaussian).unwrap();
    let control = pseudo_covariance_check(&model, MC_TRIALS, 5, NoiseKind::RealGaussian).unwrap();
    let pass = rel <= MC_REL_TOL
        && circular <= PSEUDO_COV_FACTOR * scale
        && control >= CONTROL_FACTOR * scale;
    outcome(
        pass,
        format!(
            "δ rel err {:.3}%, pseudo-cov {:.2}× scale, real-noise control {:.0}× scale",
            100.0 * rel,
            circular / scale,
            control / scale
        ),
    )
}

fn curve_shapes() -> Outcome {
    let c_step = 494e-15;
    let f_s = 1e9;
    let n_s = 8;
    let h = reference_channel(0);
    let base = link(&h, n_s, 0.0, CombinerMode::Ideal);
    let (mut vs_one_bit, mut ordering, mut near_es) = (0, 0, 0);
    let mut worst_ratio = 0.0f64;
    let mut points = 0;
    for avg_bits in [2u8, 3] {
        let pm = PowerModel::new(c_step, f_s, PowerModel::budget_for_uniform(c_step, f_s, n_s, avg_bits)).unwrap();
        let bset = enumerate_bset(n_s, 4, &pm).unwrap();
        for snr in -10..=30 {
            points += 1;
            let setup = base.with_noise(10f64.powf(-snr as f64 / 10.0));
            let metrics = |bits: Option<&BitVector>| {
                let m = setup.model(bits).unwrap();
                (mse_delta(&m), capacity(&m).unwrap())
            };
            let kf = crlb_ba(&setup.decomp.sigma, &setup.loading, &setup.table, setup.sigma_n2, &bset, 0).unwrap();
            let es = es_ba(EsMetric::MseDelta, &setup, &bset, 0).unwrap();
            let (d_kf, c_kf) = metrics(Some(&kf.chosen));
            let (d_one, c_one) = metrics(Some(&BitVector::uniform(1, n_s)));
            let (_, c_two) = metrics(Some(&BitVector::uniform(2, n_s)));
            let (_, c_inf) = metrics(None);
            if d_kf > d_one || c_kf < c_one {
                vs_one_bit += 1;
            }
            if !(c_one <= c_two && c_two <= c_inf) {
                ordering += 1;
            }
            let ratio = d_kf / es.score;
            worst_ratio = worst_ratio.max(ratio);
            if ratio > ES_RATIO {
                near_es += 1;
            }
        }
    }
    outcome(
        vs_one_bit == 0 && ordering == 0 && near_es == 0,
        format!(
            "{points} points: beats 1-bit fails {vs_one_bit}, 1-bit ≤ 2-bit ≤ ∞ fails {ordering}, \
             δ(crlb) ≤ 1.05·δ(es) fails {near_es} (worst ratio {worst_ratio:.2})"
        ),
    )
}

fn small_q_linearization() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_q = 0.0;
    for k in 1..=1000 {
        let q = 0.1 * k as f64 / 1000.0;
        let exact = log_capacity_term(q);
        let rel = (linearized_capacity_term(q) - exact).abs() / exact;
        if rel > worst {
            worst = rel;
            worst_q = q;
        }
    }
    outcome(
        worst <= LINEARIZATION_REL_TOL,
        format!("max relative error {:.2}% at q = {worst_q}", 100.0 * worst),
    )
}

fn hybrid_factorization() -> Outcome {
    let mut monotone = true;
    let mut worst_power = 0.0f64;
    for seed in 0..100u64 {
        let (rows, cols) = [(8, 2), (16, 4), (32, 3), (64, 8)][seed as usize % 4];
        let f = factor_default(&random_semi_unitary(rows, cols, seed), cols).unwrap();
        monotone &= f.residual_history.windows(2).all(|w| w[1] <= w[0]);
        worst_power = worst_power.max((frobenius(&f.product()).powi(2) - cols as f64).abs());
    }
    let mut worst_exact = 0.0f64;
    for (rows, cols) in [(2, 2), (8, 8), (8, 3), (16, 4)] {
        let target: CMat = dft_columns(rows, cols);
        let f = factor_default(&target, cols).unwrap();
        worst_exact = worst_exact.max(f.residual);
        worst_power = worst_power.max((frobenius(&f.product()).powi(2) - cols as f64).abs());
    }
    outcome(
        monotone && worst_exact <= HYBRID_EXACT_TOL && worst_power <= HYBRID_POWER_TOL,
        format!("monotone: {monotone}, residual on DFT targets {worst_exact:.1e}, max power defect {worst_power:.1e}"),
    )
}

fn water_filling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_sum = 0.0f64;
    let mut worse_than_uniform = 0;
    for _ in 0..100 {
        let n_s = rng.random_range(1..=12usize);
        let sigma: Vec<f64> = (0..n_s).map(|_| rng.random_range(0.01..50.0)).collect();
        let rho = 10f64.powf(rng.random_range(-3.0..3.0));
        let w = waterfill(&sigma, rho, n_s).unwrap();
        worst_sum = worst_sum.max((w.eps.iter().sum::<f64>() - n_s as f64).abs());
        if capacity_inf(&sigma, rho, n_s, Some(&w)) < capacity_inf(&sigma, rho, n_s, None) - 1e-12 {
            worse_than_uniform += 1;
        }
    }
    outcome(
        worst_sum <= WATERFILL_SUM_TOL && worse_than_uniform == 0,
        format!("max |Σε − N_s| = {worst_sum:.1e}, below uniform on {worse_than_uniform}/100"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 complexity closed forms", complexity_closed_forms),
        ("2 distortion table", distortion_table_fidelity),
        ("3 K_f vs capacity argmax", kf_matches_capacity_argmax),
        ("4 MSE equals CRLB", mse_equals_crlb),
        ("5 Monte-Carlo consistency", monte_carlo),
        ("6 curve shapes", curve_shapes),
        ("7 small-q linearization", small_q_linearization),
        ("8 hybrid factorization", hybrid_factorization),
        ("9 water-filling", water_filling),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({:.1}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
