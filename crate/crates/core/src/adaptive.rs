//! Measurement strategies: a fixed frame, a two-stage pre-measurement
//! scheme, and per-click self-learning re-orientation.

use nalgebra::Vector3;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    outcome_probabilities, random_rotation, random_state, PauliVector, StateKind, TetraFrame,
};
use crate::clicks::{draw_outcome, misalign, sample_clicks, ClickCounts};
use crate::error::{Result, TomoError};
use crate::likelihood::ClickLikelihood;
use crate::metrics::uhlmann_fidelity;
use crate::ml::{ml_estimate_four, Branch, Estimate, FitMode};
use crate::quadrature::{ball_rule, sphere_rule};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Static,
    Premeasure,
    Selflearn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    Parallel,
    Antiparallel,
    Random,
}

impl Alignment {
    pub fn as_str(self) -> &'static str {
        match self {
            Alignment::Parallel => "parallel",
            Alignment::Antiparallel => "antiparallel",
            Alignment::Random => "random",
        }
    }
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Static => "static",
            StrategyKind::Premeasure => "premeasure",
            StrategyKind::Selflearn => "selflearn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub alignment: Alignment,
    #[serde(rename = "N")]
    pub n: u64,
    /// Only used by static runs.
    #[serde(default)]
    pub misalignment_deg: f64,
    pub seed: u64,
    #[serde(default)]
    pub mode: FitMode,
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(TomoError::Config("N must be at least 1".into()));
        }
        if self.kind == StrategyKind::Premeasure && self.n < 2 {
            return Err(TomoError::Config("the pre-measurement strategy needs N >= 2".into()));
        }
        if !(self.misalignment_deg >= 0.0 && self.misalignment_deg.is_finite()) {
            return Err(TomoError::Config("misalignment_deg must be a finite angle >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub estimate: Estimate,
    pub true_state: PauliVector,
    /// `|S - s|^2`.
    pub sq_dist: f64,
    /// Squared Uhlmann fidelity; `(1 + s.S)/2` when the true state is pure.
    pub fidelity: f64,
    pub clicks_used: u64,
}

impl TrialResult {
    fn new(estimate: Estimate, true_state: PauliVector, clicks_used: u64) -> Self {
        let sq_dist = (estimate.s.vector() - true_state.vector()).norm_squared();
        let fidelity = uhlmann_fidelity(&estimate.s, &true_state).powi(2);
        TrialResult { estimate, true_state, sq_dist, fidelity, clicks_used }
    }

    /// `1 - F`.
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }
}

/// All clicks with one fixed frame.
pub fn run_static<R: Rng + ?Sized>(
    state: &PauliVector,
    frame: &TetraFrame,
    n: u64,
    mode: FitMode,
    rng: &mut R,
) -> Result<TrialResult> {
    let counts = sample_clicks(state, frame, n, rng);
    let est = ml_estimate_four(&counts, frame, mode)?;
    Ok(TrialResult::new(est, *state, n))
}

/// Frame with vector `designated` along `+dir` (parallel) or `-dir`.
pub fn oriented_frame(alignment: Alignment, dir: &Vector3<f64>) -> Result<TetraFrame> {
    let reference = TetraFrame::reference();
    match alignment {
        Alignment::Parallel => reference.aligned(0, dir),
        Alignment::Antiparallel => reference.aligned(3, &-dir),
        Alignment::Random => Err(TomoError::Domain("random alignment has no fixed frame".into())),
    }
}

/// Two-stage scheme: half the clicks with the reference frame fix a
/// direction, the other half are taken with `a_1` opposite to it and alone
/// give the estimate.
pub fn run_premeasure<R: Rng + ?Sized>(
    state: &PauliVector,
    n: u64,
    mode: FitMode,
    rng: &mut R,
) -> Result<TrialResult> {
    if n < 2 {
        return Err(TomoError::Domain("pre-measurement needs N >= 2".into()));
    }
    let reference = TetraFrame::reference();
    let first = n / 2;
    let counts = sample_clicks(state, &reference, first, rng);
    let s1 = ml_estimate_four(&counts, &reference, FitMode::Auto)?.s;
    let frame = if s1.norm() > 0.0 {
        reference.aligned(0, &-s1.vector())?
    } else {
        reference
    };
    let counts = sample_clicks(state, &frame, n - first, rng);
    let est = ml_estimate_four(&counts, &frame, mode)?;
    Ok(TrialResult::new(est, *state, n - first))
}

fn estimate_from(lik: &ClickLikelihood, s: Vector3<f64>, on_sphere: bool, multiplier: f64, frame: &TetraFrame) -> Estimate {
    let s = PauliVector::from_vector_unchecked(s);
    Estimate {
        ptilde: outcome_probabilities(&s, frame).values().to_vec(),
        s,
        mu: multiplier,
        branch: if on_sphere { Branch::Boundary } else { Branch::Interior },
        loglik: lik.log_likelihood(s.vector()),
        degenerate: false,
    }
}

/// Maximum of the accumulated likelihood: on the sphere for
/// [`FitMode::ForceBoundary`], in the ball otherwise.
///
/// With a warm start (the previous estimate) the sphere search takes only a
/// few Newton steps: one extra click moves the maximum very little, and the
/// result only steers the frame.
fn current_estimate(lik: &ClickLikelihood, warm: Option<Vector3<f64>>, mode: FitMode) -> (Vector3<f64>, bool, f64) {
    match mode {
        FitMode::Auto => {
            let m = lik.maximize_in_ball();
            (m.s, m.on_boundary, m.multiplier)
        }
        FitMode::ForceBoundary => {
            let found = match warm {
                Some(w) => lik.sphere_newton_steps(w, WARM_STEPS),
                None => None,
            };
            let (s, _) = found
                .or_else(|| lik.maximize_on_sphere(&lik.standard_starts()))
                .unwrap_or((Vector3::z(), 0.0));
            let multiplier = 0.5 * s.dot(&lik.gradient(&s));
            (s, true, multiplier)
        }
    }
}

const WARM_STEPS: usize = 3;

/// Per-click self-learning: after every click the estimate is refreshed and
/// the frame re-oriented before the next qubit arrives.
pub fn run_selflearning<R: Rng + ?Sized>(
    state: &PauliVector,
    n: u64,
    alignment: Alignment,
    mode: FitMode,
    rng: &mut R,
) -> Result<TrialResult> {
    let mut out = run_selflearning_checkpoints(state, &[n], alignment, mode, rng)?;
    Ok(out.remove(0))
}

/// One self-learning trajectory, with the final estimate evaluated after
/// each of the (increasing) `checkpoints` click counts. The trajectory does
/// not depend on the checkpoints.
pub fn run_selflearning_checkpoints<R: Rng + ?Sized>(
    state: &PauliVector,
    checkpoints: &[u64],
    alignment: Alignment,
    mode: FitMode,
    rng: &mut R,
) -> Result<Vec<TrialResult>> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TomoError::Domain("checkpoints must be positive and increasing".into()));
    }
    let n = *checkpoints.last().expect("non-empty");
    let mut lik = ClickLikelihood::new();
    let mut frame = TetraFrame::reference();
    let mut estimate: Option<Vector3<f64>> = None;
    let mut results = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for i in 0..n {
        if alignment == Alignment::Random {
            frame = TetraFrame::reference().transformed(&random_rotation(rng));
        } else if i > 0 {
            let (s, _, _) = current_estimate(&lik, estimate, mode);
            estimate = Some(s);
            if s.norm() > 1e-12 {
                frame = match alignment {
                    Alignment::Parallel => frame.aligned(0, &s)?,
                    _ => frame.aligned(0, &-s)?,
                };
            }
        }
        let p = *outcome_probabilities(state, &frame).values();
        let j = draw_outcome(&p, rng);
        lik.push(*frame.vector(j), 1.0);
        if i + 1 == checkpoints[next] {
            let (s, on_sphere, mu) = final_estimate(&lik, estimate, mode)?;
            results.push(TrialResult::new(estimate_from(&lik, s, on_sphere, mu, &frame), *state, i + 1));
            next += 1;
        }
    }
    Ok(results)
}

fn final_estimate(lik: &ClickLikelihood, warm: Option<Vector3<f64>>, mode: FitMode) -> Result<(Vector3<f64>, bool, f64)> {
    match mode {
        FitMode::ForceBoundary => {
            let mut starts: Vec<Vector3<f64>> = warm.into_iter().collect();
            starts.extend(lik.standard_starts());
            let (s, _) = lik
                .maximize_on_sphere(&starts)
                .ok_or_else(|| TomoError::NoRoot("no feasible start on the sphere".into()))?;
            Ok((s, true, 0.5 * s.dot(&lik.gradient(&s))))
        }
        FitMode::Auto => Ok(current_estimate(lik, warm, mode)),
    }
}

/// Runs one configured trial on `state`.
pub fn run_trial<R: Rng + ?Sized>(config: &StrategyConfig, state: &PauliVector, rng: &mut R) -> Result<TrialResult> {
    config.validate()?;
    match config.kind {
        StrategyKind::Static => {
            let frame = match config.alignment {
                Alignment::Random => TetraFrame::reference().transformed(&random_rotation(rng)),
                a => {
                    if state.norm() == 0.0 {
                        TetraFrame::reference()
                    } else {
                        oriented_frame(a, state.vector())?
                    }
                }
            };
            let designated = if config.alignment == Alignment::Antiparallel { 3 } else { 0 };
            let frame = if config.misalignment_deg > 0.0 {
                misalign(&frame, designated, config.misalignment_deg.to_radians(), rng)?
            } else {
                frame
            };
            run_static(state, &frame, config.n, config.mode, rng)
        }
        StrategyKind::Premeasure => run_premeasure(state, config.n, config.mode, rng),
        StrategyKind::Selflearn => run_selflearning(state, config.n, config.alignment, config.mode, rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoQubitStrategy {
    Nonadaptive,
    Antialign,
}

/// Default quadrature order for [`two_qubit_exhaustive`].
pub const TWO_QUBIT_ORDER: usize = 12;

/// Exact mean `|S - s|^2` after two clicks, averaged over uniformly
/// distributed pure states (`Pure`) or the ball volume (`Ball`).
pub fn two_qubit_exhaustive(strategy: TwoQubitStrategy, average_over: StateKind) -> f64 {
    two_qubit_exhaustive_with_order(strategy, average_over, TWO_QUBIT_ORDER)
}

/// The outcome pairs, their probabilities as functions of `s`, and the
/// estimator for each pair.
fn two_qubit_table(strategy: TwoQubitStrategy) -> Vec<(usize, usize, Vector3<f64>)> {
    let f = TetraFrame::reference();
    let mut out = Vec::with_capacity(16);
    for j in 0..4 {
        for k in 0..4 {
            let s = match strategy {
                TwoQubitStrategy::Nonadaptive => {
                    let mut n = [0u64; 4];
                    n[j] += 1;
                    n[k] += 1;
                    *ml_estimate_four(&ClickCounts::new(n), &f, FitMode::Auto)
                        .expect("two clicks always estimate")
                        .s
                        .vector()
                }
                TwoQubitStrategy::Antialign => {
                    // The first estimate is a_j; the second frame is inverted.
                    let mut lik = ClickLikelihood::new();
                    lik.push(*f.vector(j), 1.0);
                    lik.push(-f.vector(k), 1.0);
                    lik.maximize_in_ball().s
                }
            };
            out.push((j, k, s));
        }
    }
    out
}

pub fn two_qubit_exhaustive_with_order(strategy: TwoQubitStrategy, average_over: StateKind, order: usize) -> f64 {
    let table = two_qubit_table(strategy);
    let f = TetraFrame::reference();
    let rule = match average_over {
        StateKind::Pure => sphere_rule(order, 2 * order),
        StateKind::Ball => ball_rule(order, order, 2 * order),
    };
    rule.iter()
        .map(|(s, w)| {
            let p = f.vectors().map(|a| 0.25 * (1.0 + a.dot(s)));
            let mean: f64 = table
                .iter()
                .map(|(j, k, est)| {
                    let prob = match strategy {
                        TwoQubitStrategy::Nonadaptive => p[*j] * p[*k],
                        TwoQubitStrategy::Antialign => p[*j] * (0.5 - p[*k]),
                    };
                    prob * (est - s).norm_squared()
                })
                .sum();
            w * mean
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub angle_deg: f64,
    /// Mean `1 - F` over the trials.
    pub mean_error: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub trials: usize,
}

/// Static trials with a misaligned frame, random pure inputs and the
/// pure-state estimator. Trial `t` draws from the stream `(master_seed, t)`,
/// so every angle sees the same inputs.
pub fn misalignment_trials(
    alignment: Alignment,
    angle_deg: f64,
    n: u64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<TrialResult>> {
    if alignment == Alignment::Random {
        return Err(TomoError::Domain("misalignment is defined for parallel or antiparallel frames".into()));
    }
    let cfg = StrategyConfig {
        kind: StrategyKind::Static,
        alignment,
        n,
        misalignment_deg: angle_deg,
        seed: master_seed,
        mode: FitMode::ForceBoundary,
    };
    cfg.validate()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::trial_rng(master_seed, t);
            let s = random_state(StateKind::Pure, &mut r);
            run_trial(&cfg, &s, &mut r)
        })
        .collect()
}

/// Mean `1 - F` per misalignment angle (see [`misalignment_trials`]).
pub fn misalignment_sweep(
    alignment: Alignment,
    angles_deg: &[f64],
    n: u64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SweepPoint>> {
    angles_deg
        .iter()
        .map(|&angle| {
            let errors: Vec<f64> = misalignment_trials(alignment, angle, n, trials, master_seed)?
                .iter()
                .map(TrialResult::infidelity)
                .collect();
            let (mean, sem) = mean_and_sem(&errors);
            Ok(SweepPoint { angle_deg: angle, mean_error: mean, std_error: sem, trials })
        })
        .collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_sem(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
