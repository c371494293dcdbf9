//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a criterion fails that is not listed in `KNOWN_FAILURES`.
//!
//! Run alone with `cargo test -p tetratomo-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rayon::prelude::*;

use common::*;
use tetratomo::adaptive::{
    misalignment_trials, run_premeasure, run_selflearning_checkpoints, two_qubit_exhaustive, Alignment,
    TrialResult, TwoQubitStrategy,
};
use tetratomo::bloch::{
    outcome_probabilities, random_rotation, random_state, reconstruct_pauli, reference_quartet, SixFrame,
    StateKind,
};
use tetratomo::circuit::{ancilla_amplitudes, run_network, READOUT_TO_OUTCOME};
use tetratomo::clicks::{sample_clicks, sample_six};
use tetratomo::metrics::{fisher_bound, fisher_information, quantum_limit_error, violation_probability, GeneralPovm};
use tetratomo::ml::{check_inequality, ml_estimate_four, ml_estimate_six};
use tetratomo::pair::{calibrate_orientation, frequencies, joint_probabilities, reconstruct_two_qubit, sample_pairs, TwoQubitState};
use tetratomo::{rng, ClickCounts, FitMode, PauliVector, TetraFrame};

/// Criteria that cannot be met as stated (see "Known limitations" in the
/// README). They are still run and reported as FAIL.
///
/// 6: at 0.01 degrees the anti-aligned outcome has probability about 4e-9,
/// so 10^4 clicks cannot tell the tilted device from the exact one and the
/// error stays at the anti-aligned value. The large-N limit 4/(3N) needs
/// N kappa^2 >> 1, reached only near 1 degree for N = 10^4.
const KNOWN_FAILURES: &[usize] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(x: f64, target: f64) -> f64 {
    (x - target).abs() / target
}

fn infidelities(trials: &[TrialResult]) -> Vec<f64> {
    trials.iter().map(TrialResult::infidelity).collect()
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(101);
    let mut worst: f64 = 0.0;
    for i in 0..100_000 {
        let s = random_state(StateKind::Ball, &mut r);
        let frame = if i % 2 == 0 {
            TetraFrame::reference()
        } else {
            TetraFrame::reference().transformed(&random_rotation(&mut r))
        };
        let back = reconstruct_pauli(&outcome_probabilities(&s, &frame), &frame);
        worst = worst.max((back.vector() - s.vector()).amax());
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-12 && t < Duration::from_secs(5),
        format!("10^5 states, max error {worst:.2e}, {:.2} s", t.as_secs_f64()),
    )
}

fn ml_oracle() -> Outcome {
    let start = Instant::now();
    let mesh = fibonacci_ball_mesh();
    let a = reference_quartet();
    let logp: Vec<[f64; 4]> = mesh.iter().map(|s| born_probabilities(s, &a).map(f64::ln)).collect();
    let frame = TetraFrame::reference();
    let mut r = rng::seeded(202);
    let mut cases: Vec<[u64; 4]> = vec![[1, 0, 0, 0], [50, 0, 0, 0], [1, 1, 0, 0], [3, 3, 3, 3], [10, 10, 0, 1], [0, 7, 7, 7]];
    while cases.len() < 200 {
        let n = 1 + (r.random_range(0..50u64));
        let kind = if cases.len() % 2 == 0 { StateKind::Ball } else { StateKind::Pure };
        let s = random_state(kind, &mut r);
        cases.push(sample_clicks(&s, &frame, n, &mut r).n);
    }
    let results: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|c| {
            let est = ml_estimate_four(&ClickCounts::new(*c), &frame, FitMode::Auto).expect("estimate");
            let ours = log_likelihood(c, &born_probabilities(est.s.vector(), &a));
            let (best, best_val) = brute_force_ml(&logp, &mesh, c);
            ((est.s.vector() - best).norm(), best_val - ours)
        })
        .collect();
    let worst_dist = results.iter().map(|x| x.0).fold(0.0, f64::max);
    let worst_gap = results.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let t = start.elapsed();
    outcome(
        worst_dist <= 2.0 * MESH_SPACING && worst_gap <= 1e-9 && t < Duration::from_secs(120),
        format!(
            "200 count vectors, {} mesh points, max |dS| {worst_dist:.4} (limit {:.4}), max mesh excess {worst_gap:.2e}, {:.1} s",
            mesh.len(),
            2.0 * MESH_SPACING,
            t.as_secs_f64()
        ),
    )
}

fn mean_sq_dist(s: &PauliVector, n: u64, trials: u64, seed: u64) -> f64 {
    let frame = TetraFrame::reference();
    let d: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::trial_rng(seed, t);
            let c = sample_clicks(s, &frame, n, &mut r);
            let e = ml_estimate_four(&c, &frame, FitMode::Auto).expect("estimate");
            (e.s.vector() - s.vector()).norm_squared()
        })
        .collect();
    mean(&d)
}

fn mean_squared_error() -> Outcome {
    let start = Instant::now();
    let n = 1000;
    let centre = mean_sq_dist(&PauliVector::zero(), n, 10_000, 303);
    let anti = mean_sq_dist(&PauliVector::from_vector(-reference_quartet()[3]).unwrap(), n, 10_000, 304);
    let (e1, e2) = (rel(centre, 9.0 / n as f64), rel(anti, 2.0 / n as f64));
    let t = start.elapsed();
    outcome(
        e1 <= 0.05 && e2 <= 0.10 && t < Duration::from_secs(60),
        format!(
            "s=0: N*msd {:.4} vs 9 ({:.1}%); s=-a4: N*msd {:.4} vs 2 ({:.1}%); {:.1} s",
            centre * n as f64,
            100.0 * e1,
            anti * n as f64,
            100.0 * e2,
            t.as_secs_f64()
        ),
    )
}

fn six_state() -> Outcome {
    let n = 1000u64;
    let frame = SixFrame::standard();
    let run = |fixed: Option<Vector3<f64>>, seed: u64| -> f64 {
        let d: Vec<f64> = (0..10_000u64)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::trial_rng(seed, t);
                let v = fixed.unwrap_or_else(|| random_unit(&mut r) * 0.5);
                let s = PauliVector::from_vector(v).unwrap();
                let c = sample_six(&s, &frame, n, &mut r);
                let e = ml_estimate_six(&c, &frame).expect("estimate");
                (e.s.vector() - v).norm_squared()
            })
            .collect();
        mean(&d)
    };
    let generic = run(None, 404);
    let on_axis = run(Some(Vector3::z()), 405);
    let (e1, e2) = (rel(generic, 8.25 / n as f64), rel(on_axis, 8.0 / (3.0 * n as f64)));
    outcome(
        e1 <= 0.05 && e2 <= 0.10,
        format!(
            "|s|=0.5 random: N*msd {:.4} vs 8.25 ({:.1}%); pure on z: N*msd {:.4} vs 2.6667 ({:.1}%)",
            generic * n as f64,
            100.0 * e1,
            on_axis * n as f64,
            100.0 * e2
        ),
    )
}

const SWEEP_N: u64 = 10_000;
const SWEEP_TRIALS: usize = 10_000;

fn sweep_point(alignment: Alignment, angle: f64) -> f64 {
    mean(&infidelities(&misalignment_trials(alignment, angle, SWEEP_N, SWEEP_TRIALS, 505).expect("trials")))
}

fn pure_fidelity(anti_at_zero: f64) -> Outcome {
    let par = sweep_point(Alignment::Parallel, 0.0);
    let nf = SWEEP_N as f64;
    let (e1, e2) = (rel(par, 1.0 / nf), rel(anti_at_zero, 0.5 / nf));
    outcome(
        e1 <= 0.15 && e2 <= 0.15,
        format!(
            "N(1-F): parallel {:.4} vs 1 ({:.1}%), anti-parallel {:.4} vs 0.5 ({:.1}%)",
            par * nf,
            100.0 * e1,
            anti_at_zero * nf,
            100.0 * e2
        ),
    )
}

fn misalignment(anti_at_zero: f64) -> Outcome {
    let nf = SWEEP_N as f64;
    let tiny = sweep_point(Alignment::Antiparallel, 0.01);
    let small = sweep_point(Alignment::Antiparallel, 0.1);
    let limit = 4.0 / (3.0 * nf);
    let ratio = tiny / anti_at_zero;
    let e = rel(small, limit);
    outcome(
        ratio >= 2.0 && e <= 0.25,
        format!(
            "N(1-F) at 0/0.01/0.1 deg: {:.4}/{:.4}/{:.4}; ratio at 0.01 deg {ratio:.3} (need >= 2); 0.1 deg vs 4/3: {:.1}% (need <= 25%)",
            anti_at_zero * nf,
            tiny * nf,
            small * nf,
            100.0 * e
        ),
    )
}

fn two_clicks() -> Outcome {
    let start = Instant::now();
    let (r3, r6, r24) = (3f64.sqrt(), 6f64.sqrt(), 24f64.sqrt());
    let cases = [
        (TwoQubitStrategy::Nonadaptive, StateKind::Pure, (5.0 - r3) / 3.0),
        (TwoQubitStrategy::Antialign, StateKind::Pure, (11.0 - r24) / 6.0),
        (TwoQubitStrategy::Nonadaptive, StateKind::Ball, (7.0 - r3) / 5.0),
        (TwoQubitStrategy::Antialign, StateKind::Ball, (7.0 - r6) / 5.0),
    ];
    let mut worst: f64 = 0.0;
    let mut vals = Vec::new();
    for (strategy, kind, want) in cases {
        let got = two_qubit_exhaustive(strategy, kind);
        worst = worst.max((got - want).abs());
        vals.push(format!("{got:.10}"));
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-8 && t < Duration::from_secs(10),
        format!("values {}, max error {worst:.1e}, {:.2} s", vals.join(" "), t.as_secs_f64()),
    )
}

fn violation() -> Outcome {
    let n = 500;
    let frame = TetraFrame::reference();
    let (hits, pred): (Vec<f64>, Vec<f64>) = (0..100_000u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::trial_rng(606, t);
            let s = PauliVector::from_vector(random_unit(&mut r) * 0.5).unwrap();
            let c = sample_clicks(&s, &frame, n, &mut r);
            let violated = !check_inequality(&c).unwrap();
            (if violated { 1.0 } else { 0.0 }, violation_probability(&s, &frame, n).unwrap())
        })
        .unzip();
    let (f, p) = (mean(&hits), mean(&pred));
    outcome((f - p).abs() <= 0.02, format!("|s|=0.5, N=500: frequency {f:.5}, predicted {p:.5}"))
}

fn fisher() -> Outcome {
    let mut r = rng::seeded(707);
    // Cramer-Rao trace on a grid of lengths, random directions and frames.
    let mut worst_bound: f64 = 0.0;
    for k in 0..=20 {
        let len = if k == 20 { 0.999 } else { k as f64 / 20.0 };
        for _ in 0..20 {
            let s = PauliVector::from_vector(random_unit(&mut r) * len).unwrap();
            let frame = TetraFrame::reference().transformed(&random_rotation(&mut r));
            for n in [1u64, 1000] {
                let d = fisher_bound(&fisher_information(&s, &frame, n).unwrap()).unwrap();
                worst_bound = worst_bound.max((d - (9.0 - len * len) / n as f64).abs());
            }
        }
    }
    // Probability gradients against central differences.
    let mut worst_grad: f64 = 0.0;
    let h = 1e-6;
    for _ in 0..100 {
        let s = random_state(StateKind::Ball, &mut r).vector() * 0.99;
        let frame = TetraFrame::reference().transformed(&random_rotation(&mut r));
        for axis in 0..3 {
            let mut e = Vector3::zeros();
            e[axis] = h;
            let plus = outcome_probabilities(&PauliVector::from_vector(s + e).unwrap(), &frame);
            let minus = outcome_probabilities(&PauliVector::from_vector(s - e).unwrap(), &frame);
            for j in 0..4 {
                let fd = (plus.values()[j] - minus.values()[j]) / (2.0 * h);
                worst_grad = worst_grad.max((fd - frame.vector(j)[axis] / 4.0).abs());
            }
        }
    }
    // Second-order stationarity at s = 0 under rank-one perturbations.
    let a = reference_quartet();
    let delta: [Vector3<f64>; 4] = [0, 1, 2, 3].map(|_| random_unit(&mut r));
    let bound = |eps: f64| {
        let m = [0, 1, 2, 3].map(|j| (a[j] + delta[j] * eps).normalize());
        let povm = GeneralPovm::rank_one(&m).unwrap();
        fisher_bound(&povm.fisher_information(&Vector3::zeros(), 1).unwrap()).unwrap()
    };
    let d0 = bound(0.0);
    let (d1, d2) = (bound(1e-2) - d0, bound(5e-3) - d0);
    let ratio = d1 / d2;
    outcome(
        worst_bound <= 1e-9 && worst_grad <= 1e-8 && (3.5..=4.5).contains(&ratio) && d1 > 0.0 && (d0 - 9.0).abs() < 1e-12,
        format!(
            "bound error {worst_bound:.1e}, gradient error {worst_grad:.1e}, perturbation growth ratio {ratio:.3} (second order: 4)"
        ),
    )
}

fn network() -> Outcome {
    let mut r = rng::seeded(808);
    let a = reference_quartet();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let kind = if i % 2 == 0 { StateKind::Pure } else { StateKind::Ball };
        let s = random_state(kind, &mut r);
        let born = born_probabilities(s.vector(), &a);
        let out = run_network(&s);
        for m in 0..4 {
            worst = worst.max((out.readout[m] - born[READOUT_TO_OUTCOME[m]]).abs());
        }
    }
    let want = [1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt()];
    let amp = ancilla_amplitudes();
    let amp_err = (0..4).map(|k| (amp[k] - C::new(want[k], 0.0)).norm()).fold(0.0, f64::max);
    let mapping = READOUT_TO_OUTCOME == [0, 3, 1, 2];
    outcome(
        worst <= 1e-10 && amp_err <= 1e-12 && mapping,
        format!("100 inputs, max probability error {worst:.1e}; ancilla amplitude error {amp_err:.1e}"),
    )
}

fn pair_tomography() -> Outcome {
    let mut r = rng::seeded(909);
    let mut worst_rt: f64 = 0.0;
    for _ in 0..100 {
        let rho = TwoQubitState::from_matrix(&random_two_qubit(&mut r)).unwrap();
        let fa = TetraFrame::reference().transformed(&random_rotation(&mut r));
        let fb = TetraFrame::reference().transformed(&random_rotation(&mut r));
        let q = joint_probabilities(&rho, &fa, &fb).unwrap();
        let back = reconstruct_two_qubit(&q, &fa, &fb).unwrap();
        worst_rt = worst_rt.max((back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let singlet = TwoQubitState::singlet();
    let mut worst_exact: f64 = 0.0;
    for _ in 0..20 {
        let ra = random_rotation(&mut r);
        let rb = random_rotation(&mut r);
        let fa = TetraFrame::reference().transformed(&ra);
        let fb = TetraFrame::reference().transformed(&rb);
        let q = joint_probabilities(&singlet, &fa, &fb).unwrap();
        let o = calibrate_orientation(&q, &fa).unwrap();
        worst_exact = worst_exact.max((o - rb * ra.transpose()).norm());
    }
    let rb: Matrix3<f64> = rodrigues(&Vector3::new(0.3, -1.0, 0.5), 0.7);
    let fb = TetraFrame::reference().transformed(&rb);
    let q = joint_probabilities(&singlet, &TetraFrame::reference(), &fb).unwrap();
    let counts = sample_pairs(&q, 1_000_000, &mut r);
    let o = calibrate_orientation(&frequencies(&counts).unwrap(), &TetraFrame::reference()).unwrap();
    let sampled = (o - rb).norm();
    outcome(
        worst_rt <= 1e-12 && worst_exact <= 1e-9 && sampled <= 0.01,
        format!("round trip {worst_rt:.1e}; orientation error exact {worst_exact:.1e}, 10^6 pairs {sampled:.4}"),
    )
}

fn adaptive_strategies() -> Outcome {
    // Pre-measurement scaling.
    let ns = [100u64, 1000, 10_000];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let e: Vec<f64> = (0..10_000u64)
                .into_par_iter()
                .map(|t| {
                    let mut r = rng::trial_rng(1212 + n, t);
                    let s = random_state(StateKind::Pure, &mut r);
                    run_premeasure(&s, n, FitMode::Auto, &mut r).unwrap().infidelity()
                })
                .collect();
            mean(&e)
        })
        .collect();
    let logn: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let loge: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let k = slope(&logn, &loge);
    let factor = errs[2] * (ns[2] as f64 + 2.0);
    let premeasure_ok = (k + 1.0).abs() <= 0.1 && (1.5..=3.0).contains(&factor);

    // Self-learning: parallel against random orientation, and against the
    // quantum limit.
    let checkpoints = [10u64, 20, 50, 100, 200];
    let trials = 4000u64;
    let run = |alignment: Alignment| -> Vec<Vec<f64>> {
        let per_trial: Vec<Vec<TrialResult>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::trial_rng(1313, t);
                let s = random_state(StateKind::Pure, &mut r);
                run_selflearning_checkpoints(&s, &checkpoints, alignment, FitMode::ForceBoundary, &mut r).unwrap()
            })
            .collect();
        (0..checkpoints.len()).map(|i| per_trial.iter().map(|v| v[i].infidelity()).collect()).collect()
    };
    let par = run(Alignment::Parallel);
    let rnd = run(Alignment::Random);
    let mut not_worse = true;
    let mut below_limit = true;
    let mut delta = Vec::new();
    let mut ratio = Vec::new();
    for (i, &n) in checkpoints.iter().enumerate() {
        let (mp, mr) = (mean(&par[i]), mean(&rnd[i]));
        let se = (sem(&par[i]).powi(2) + sem(&rnd[i]).powi(2)).sqrt();
        not_worse &= mp <= mr + 2.0 * se;
        // Fidelity below the quantum limit means error above it.
        let ql = quantum_limit_error(n as f64);
        below_limit &= mp >= ql - 2.0 * sem(&par[i]);
        delta.push(100.0 * (mr - mp) / mp);
        ratio.push(mp / ql);
    }
    let approaches = ratio.last().unwrap() < ratio.first().unwrap() && *ratio.last().unwrap() <= 1.1;
    let mean_delta = mean(&delta);
    let shapes_ok = not_worse && below_limit && approaches && mean_delta > 0.0;
    outcome(
        premeasure_ok && shapes_ok,
        format!(
            "pre-measurement slope {k:.3}, (N+2)(1-F) at 10^4 {factor:.3}; self-learning dF% {:?} (mean {mean_delta:.2}), error/limit {:?}",
            delta.iter().map(|x| (x * 10.0).round() / 10.0).collect::<Vec<_>>(),
            ratio.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let total = Instant::now();
    let anti_at_zero = sweep_point(Alignment::Antiparallel, 0.0);
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "probability round trip", Box::new(round_trip)),
        (2, "ML against brute-force mesh", Box::new(ml_oracle)),
        (3, "mean squared error, four outcomes", Box::new(mean_squared_error)),
        (4, "mean squared error, six outcomes", Box::new(six_state)),
        (5, "pure-state fidelity, aligned frames", Box::new(move || pure_fidelity(anti_at_zero))),
        (6, "misalignment discontinuity", Box::new(move || misalignment(anti_at_zero))),
        (7, "exact two-click averages", Box::new(two_clicks)),
        (8, "purity-violation probability", Box::new(violation)),
        (9, "Fisher information and optimality", Box::new(fisher)),
        (10, "gate network", Box::new(network)),
        (11, "two-qubit tomography and calibration", Box::new(pair_tomography)),
        (12, "adaptive strategies", Box::new(adaptive_strategies)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in &criteria {
        let t = Instant::now();
        let o = check();
        let known = KNOWN_FAILURES.contains(id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name}: {} [{:.1} s]", o.detail, t.elapsed().as_secs_f64());
        if !o.pass && !known {
            unexpected.push(*id);
        }
    }
    println!("acceptance finished in {:.1} s", total.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
