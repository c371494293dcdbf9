//! Reproducible experiment runner: configuration, per-trial records and
//! summaries with the matching closed-form predictions.
//!
//! Trials run on the rayon pool; results are collected in trial order, so
//! output is identical for identical configurations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adaptive::{
    mean_and_sem, misalignment_trials, run_selflearning_checkpoints, run_trial, Alignment,
    StrategyConfig, StrategyKind, TrialResult,
};
use crate::bloch::{random_state, reference_quartet, PauliVector, StateKind, TetraFrame};
use crate::clicks::{sample_sequence, ClickCounts};
use crate::error::{Result, TomoError};
use crate::likelihood::ClickLikelihood;
use crate::metrics::{predictions, PredictionSet};
use crate::ml::{ml_estimate_four, FitMode};
use crate::rng::{self, RNG_ALGORITHM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig5,
    Fig6,
    Fig7,
    Fig9,
    Fig10,
    Custom,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Fig6 => "fig6",
            ExperimentId::Fig7 => "fig7",
            ExperimentId::Fig9 => "fig9",
            ExperimentId::Fig10 => "fig10",
            ExperimentId::Custom => "custom",
        }
    }
}

/// Input state of a series. Outcome labels are one based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec {
    Vector { s: [f64; 3] },
    /// `length * a_outcome` of the reference quartet.
    Aligned {
        outcome: usize,
        #[serde(default = "one")]
        length: f64,
    },
    /// `-length * a_outcome`.
    Antialigned {
        outcome: usize,
        #[serde(default = "one")]
        length: f64,
    },
    /// A fresh random state per trial; `length` fixes `|s|` for a random direction.
    Random {
        kind: StateKind,
        #[serde(default)]
        length: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl StateSpec {
    pub fn validate(&self, field: &str) -> Result<()> {
        let bad = |msg: String| Err(TomoError::Config(format!("{field}: {msg}")));
        match *self {
            StateSpec::Vector { s } => {
                PauliVector::new(s[0], s[1], s[2]).map_err(|e| TomoError::Config(format!("{field}.s: {e}")))?;
            }
            StateSpec::Aligned { outcome, length } | StateSpec::Antialigned { outcome, length } => {
                if !(1..=4).contains(&outcome) {
                    return bad(format!("outcome must be 1..4, got {outcome}"));
                }
                if !(0.0..=1.0).contains(&length) {
                    return bad(format!("length must lie in [0, 1], got {length}"));
                }
            }
            StateSpec::Random { length, .. } => {
                if let Some(l) = length {
                    if !(0.0..=1.0).contains(&l) {
                        return bad(format!("length must lie in [0, 1], got {l}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// The state if it does not vary between trials.
    pub fn fixed(&self) -> Option<PauliVector> {
        let a = reference_quartet();
        match *self {
            StateSpec::Vector { s } => PauliVector::new(s[0], s[1], s[2]).ok(),
            StateSpec::Aligned { outcome, length } => PauliVector::from_vector(a[outcome - 1] * length).ok(),
            StateSpec::Antialigned { outcome, length } => PauliVector::from_vector(-a[outcome - 1] * length).ok(),
            StateSpec::Random { .. } => None,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliVector {
        match *self {
            StateSpec::Random { kind, length } => {
                let s = random_state(kind, rng);
                match length {
                    Some(l) if s.norm() > 0.0 => PauliVector::from_vector_unchecked(s.vector() / s.norm() * l),
                    _ => s,
                }
            }
            _ => self.fixed().expect("validated state"),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            StateSpec::Vector { s } => format!("s=({} {} {})", s[0], s[1], s[2]),
            StateSpec::Aligned { outcome, length } => format!("s={length}*a{outcome}"),
            StateSpec::Antialigned { outcome, length } => format!("s=-{length}*a{outcome}"),
            StateSpec::Random { kind, length } => match (kind, length) {
                (_, Some(l)) => format!("random |s|={l}"),
                (StateKind::Pure, None) => "random pure".into(),
                (StateKind::Ball, None) => "random ball".into(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    #[serde(default = "default_alignment")]
    pub alignment: Alignment,
    #[serde(default)]
    pub mode: FitMode,
    #[serde(default)]
    pub misalignment_deg: f64,
}

fn default_alignment() -> Alignment {
    Alignment::Parallel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Experiment description; omitted fields take the experiment's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_deg: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId) -> Self {
        ExperimentConfig {
            experiment,
            n: None,
            trials: None,
            seed: 0,
            states: None,
            strategy: None,
            angles_deg: None,
            cloud_samples: None,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| TomoError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TomoError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fills in defaults and checks every field.
    pub fn resolve(&self) -> Result<Resolved> {
        use ExperimentId::*;
        let id = self.experiment;
        let n = self.n.clone().unwrap_or_else(|| match id {
            Fig5 => vec![100, 200, 400, 800],
            Fig6 => vec![100, 200, 500, 1000, 2000, 3000, 4000, 5000, 6000],
            Fig7 => vec![10_000],
            Fig9 | Fig10 => vec![10, 20, 50, 100, 200, 500, 1000],
            Custom => vec![1000],
        });
        let trials = self.trials.unwrap_or(match id {
            Fig5 => 1,
            Fig6 => 40,
            Fig7 => 2000,
            Fig9 | Fig10 => 200,
            Custom => 100,
        });
        let states = self.states.clone().unwrap_or_else(|| match id {
            Fig5 => vec![StateSpec::Aligned { outcome: 1, length: 0.84 }],
            Fig6 => vec![
                StateSpec::Vector { s: [0.0; 3] },
                StateSpec::Antialigned { outcome: 4, length: 1.0 },
            ],
            Fig7 | Fig9 | Fig10 => vec![StateSpec::Random { kind: StateKind::Pure, length: None }],
            Custom => vec![StateSpec::Vector { s: [0.0; 3] }],
        });
        let strategy = self.strategy.unwrap_or(match id {
            Fig9 | Fig10 => StrategySpec {
                kind: StrategyKind::Selflearn,
                alignment: Alignment::Parallel,
                mode: FitMode::ForceBoundary,
                misalignment_deg: 0.0,
            },
            Fig7 => StrategySpec {
                kind: StrategyKind::Static,
                alignment: Alignment::Antiparallel,
                mode: FitMode::ForceBoundary,
                misalignment_deg: 0.0,
            },
            _ => StrategySpec {
                kind: StrategyKind::Static,
                alignment: Alignment::Parallel,
                mode: FitMode::Auto,
                misalignment_deg: 0.0,
            },
        });
        let angles_deg = self
            .angles_deg
            .clone()
            .unwrap_or_else(|| vec![0.0, 0.01, 0.1, 0.3, 1.0, 2.0, 5.0, 10.0]);
        let cloud_samples = self.cloud_samples.unwrap_or(2000);

        if n.is_empty() {
            return Err(TomoError::Config("N: at least one value required".into()));
        }
        if let Some(pos) = n.iter().position(|&x| x == 0) {
            return Err(TomoError::Config(format!("N[{pos}]: must be at least 1")));
        }
        if matches!(id, Fig6 | Fig9 | Fig10) && n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TomoError::Config("N: checkpoints must be strictly increasing".into()));
        }
        if trials == 0 {
            return Err(TomoError::Config("trials: must be at least 1".into()));
        }
        if states.is_empty() {
            return Err(TomoError::Config("states: at least one state required".into()));
        }
        for (i, s) in states.iter().enumerate() {
            s.validate(&format!("states[{i}]"))?;
        }
        if let Some(pos) = angles_deg.iter().position(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(TomoError::Config(format!("angles_deg[{pos}]: must be finite and >= 0")));
        }
        if !(strategy.misalignment_deg >= 0.0 && strategy.misalignment_deg.is_finite()) {
            return Err(TomoError::Config("strategy.misalignment_deg: must be finite and >= 0".into()));
        }
        if strategy.kind == StrategyKind::Premeasure && n.iter().any(|&x| x < 2) {
            return Err(TomoError::Config("N: the pre-measurement strategy needs N >= 2".into()));
        }
        if id == Fig5 && states.iter().any(|s| s.fixed().is_none()) {
            return Err(TomoError::Config("states: fig5 needs fixed states".into()));
        }
        if cloud_samples == 0 {
            return Err(TomoError::Config("cloud_samples: must be at least 1".into()));
        }
        Ok(Resolved {
            experiment: id,
            n,
            trials,
            seed: self.seed,
            states,
            strategy,
            angles_deg,
            cloud_samples,
        })
    }
}

/// A configuration with every default applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub experiment: ExperimentId,
    #[serde(rename = "N")]
    pub n: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub states: Vec<StateSpec>,
    pub strategy: StrategySpec,
    pub angles_deg: Vec<f64>,
    pub cloud_samples: usize,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub series: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub strategy: String,
    pub alignment: String,
    pub angle_deg: f64,
    pub sq_dist: f64,
    pub fidelity: f64,
}

pub const CSV_HEADER: &str = "series,seed,N,strategy,alignment,angle_deg,sq_dist,fidelity";

/// Twelve significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn rows_to_csv(rows: &[TrialRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.series,
            r.seed,
            r.n,
            r.strategy,
            r.alignment,
            fmt_real(r.angle_deg),
            fmt_real(r.sq_dist),
            fmt_real(r.fidelity)
        );
    }
    out
}

/// Output of an experiment: per-trial rows (or cloud points) and a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    /// Fig. 5 style likelihood samples: `(series, N, point)`.
    pub cloud: Vec<(String, u64, Vector3<f64>)>,
    pub summary: Value,
}

impl ExperimentReport {
    pub fn csv(&self) -> String {
        if !self.cloud.is_empty() {
            let mut out = String::from("series,N,x,y,z\n");
            for (label, n, p) in &self.cloud {
                let _ = writeln!(out, "{label},{n},{},{},{}", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z));
            }
            return out;
        }
        rows_to_csv(&self.rows)
    }

    /// Writes `<path>` (CSV or JSON). For CSV a `<stem>.summary.json` is
    /// written next to it.
    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        match format {
            OutputFormat::Csv => {
                std::fs::write(path, self.csv())?;
                let summary = path.with_extension("summary.json");
                std::fs::write(&summary, serde_json::to_string_pretty(&self.summary)?)?;
                Ok(vec![path.to_path_buf(), summary])
            }
            OutputFormat::Json => {
                let mut doc = self.summary.clone();
                if self.cloud.is_empty() {
                    doc["trials_data"] = serde_json::to_value(&self.rows)?;
                } else {
                    doc["cloud"] = self
                        .cloud
                        .iter()
                        .map(|(l, n, p)| json!({"series": l, "N": n, "s": [p.x, p.y, p.z]}))
                        .collect();
                }
                std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
                Ok(vec![path.to_path_buf()])
            }
        }
    }
}

/// Samples from the likelihood of `counts`, restricted to the Bloch ball
/// and normalized as a density, by rejection from the uniform ball.
pub fn emit_likelihood_cloud<R: Rng + ?Sized>(
    counts: &ClickCounts,
    frame: &TetraFrame,
    n_samples: usize,
    rng: &mut R,
) -> Vec<Vector3<f64>> {
    let lik = ClickLikelihood::from_counts(counts, frame);
    let log_max = if lik.is_empty() { 0.0 } else { lik.maximize_in_ball().value };
    let mut out = Vec::with_capacity(n_samples);
    while out.len() < n_samples {
        let s = *random_state(StateKind::Ball, rng).vector();
        let log_ratio = lik.value(&s) - log_max;
        if log_ratio.is_finite() && rng.random::<f64>().ln() < log_ratio {
            out.push(s);
        }
    }
    out
}

fn stats(x: &[f64]) -> Value {
    let (mean, sem) = mean_and_sem(x);
    let sd = sem * (x.len() as f64).sqrt();
    json!({ "mean": mean, "sd": sd, "sem": sem, "count": x.len() })
}

fn prediction(name: &str, value: Option<f64>) -> Value {
    json!({ "name": name, "value": value, "applicable": value.is_some() })
}

fn series_seed(master: u64, series: usize) -> u64 {
    master.wrapping_add((series as u64) << 32)
}

fn frame_for(spec: &StrategySpec, state: &PauliVector) -> Result<TetraFrame> {
    match spec.alignment {
        Alignment::Random => Ok(TetraFrame::reference()),
        a if state.norm() > 0.0 => crate::adaptive::oriented_frame(a, state.vector()),
        _ => Ok(TetraFrame::reference()),
    }
}

/// Runs a resolved experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let r = config.resolve()?;
    let mut report = match r.experiment {
        ExperimentId::Fig5 => run_fig5(&r)?,
        ExperimentId::Fig6 => run_fig6(&r)?,
        ExperimentId::Fig7 => run_fig7(&r)?,
        ExperimentId::Fig9 | ExperimentId::Fig10 => run_selflearn_figure(&r)?,
        ExperimentId::Custom => run_custom(&r)?,
    };
    report.summary["experiment"] = json!(r.experiment.as_str());
    report.summary["config"] = serde_json::to_value(&r)?;
    report.summary["rng"] = json!(RNG_ALGORITHM);
    Ok(report)
}

fn run_fig5(r: &Resolved) -> Result<ExperimentReport> {
    let frame = TetraFrame::reference();
    let mut cloud = Vec::new();
    let mut series = Vec::new();
    for (si, spec) in r.states.iter().enumerate() {
        let state = spec.fixed().expect("validated");
        let label = spec.label();
        let mut points = Vec::new();
        for (ni, &n) in r.n.iter().enumerate() {
            // Counts whose frequencies are exactly the Born probabilities
            // (rounded), so the most likely state is `state` itself.
            let p = crate::bloch::outcome_probabilities(&state, &frame);
            let mut counts = [0u64; 4];
            for j in 0..4 {
                counts[j] = (p[j] * n as f64).round() as u64;
            }
            let counts = ClickCounts::new(counts);
            let est = ml_estimate_four(&counts, &frame, FitMode::Auto)?;
            let mut rng = rng::trial_rng(series_seed(r.seed, si), ni as u64);
            let pts = emit_likelihood_cloud(&counts, &frame, r.cloud_samples, &mut rng);
            let m = pts.len() as f64;
            let mean: Vector3<f64> = pts.iter().sum::<Vector3<f64>>() / m;
            let cov: Matrix3<f64> = pts
                .iter()
                .map(|p| (p - mean) * (p - mean).transpose())
                .sum::<Matrix3<f64>>()
                / (m - 1.0).max(1.0);
            points.push(json!({
                "N": counts.total,
                "counts": counts.n,
                "ml_estimate": est.s,
                "sample_mean": [mean.x, mean.y, mean.z],
                "covariance_trace": cov.trace(),
                "predictions": predictions(&state, &frame, counts.total)?,
                "prediction": prediction("msd_generic", predictions(&state, &frame, counts.total)?.msd_generic),
            }));
            cloud.extend(pts.into_iter().map(|p| (label.clone(), counts.total, p)));
        }
        series.push(json!({ "label": label, "points": points }));
    }
    Ok(ExperimentReport { rows: vec![], cloud, summary: json!({ "series": series }) })
}

fn run_fig6(r: &Resolved) -> Result<ExperimentReport> {
    let frame = TetraFrame::reference();
    let n_max = *r.n.last().expect("validated");
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (si, spec) in r.states.iter().enumerate() {
        let label = spec.label();
        let master = series_seed(r.seed, si);
        let per_trial: Vec<(u64, Vec<(PauliVector, TrialResult)>)> = (0..r.trials as u64)
            .into_par_iter()
            .map(|t| -> Result<_> {
                let seed = rng::trial_seed(master, t);
                let mut rng = rng::seeded(seed);
                let state = spec.draw(&mut rng);
                let seq = sample_sequence(&state, &frame, n_max, &mut rng);
                let mut out = Vec::with_capacity(r.n.len());
                for &n in &r.n {
                    let counts = crate::clicks::ClickSequence { outcomes: seq.outcomes[..n as usize].to_vec() }.tally();
                    let est = ml_estimate_four(&counts, &frame, r.strategy.mode)?;
                    let sq = (est.s.vector() - state.vector()).norm_squared();
                    let fid = crate::metrics::uhlmann_fidelity(&est.s, &state).powi(2);
                    out.push((
                        state,
                        TrialResult { estimate: est, true_state: state, sq_dist: sq, fidelity: fid, clicks_used: n },
                    ));
                }
                Ok((seed, out))
            })
            .collect::<Result<_>>()?;
        let mut points = Vec::new();
        for (ni, &n) in r.n.iter().enumerate() {
            let sq: Vec<f64> = per_trial.iter().map(|(_, v)| v[ni].1.sq_dist).collect();
            let dist: Vec<f64> = sq.iter().map(|x| x.sqrt()).collect();
            let (pred_name, pred) = match spec.fixed() {
                Some(s) => {
                    let p = predictions(&s, &frame, n)?;
                    if p.msd_antialigned.is_some() {
                        ("msd_antialigned", p.msd_antialigned)
                    } else {
                        ("msd_generic", p.msd_generic)
                    }
                }
                None => ("msd_generic", None),
            };
            points.push(json!({
                "N": n,
                "sq_dist": stats(&sq),
                "dist": stats(&dist),
                "prediction": prediction(pred_name, pred),
                "predicted_dist": pred.map(f64::sqrt),
            }));
        }
        for (seed, v) in &per_trial {
            for (_, tr) in v {
                rows.push(TrialRow {
                    series: label.clone(),
                    seed: *seed,
                    n: tr.clicks_used,
                    strategy: "static".into(),
                    alignment: "reference".into(),
                    angle_deg: 0.0,
                    sq_dist: tr.sq_dist,
                    fidelity: tr.fidelity,
                });
            }
        }
        series.push(json!({ "label": label, "points": points }));
    }
    Ok(ExperimentReport { rows, cloud: vec![], summary: json!({ "series": series }) })
}

fn run_fig7(r: &Resolved) -> Result<ExperimentReport> {
    let n = r.n[0];
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (si, alignment) in [Alignment::Parallel, Alignment::Antiparallel].into_iter().enumerate() {
        let master = series_seed(r.seed, si);
        let mut points = Vec::new();
        for &angle in &r.angles_deg {
            let trials = misalignment_trials(alignment, angle, n, r.trials, master)?;
            let err: Vec<f64> = trials.iter().map(TrialResult::infidelity).collect();
            let (name, value) = match (alignment, angle == 0.0) {
                (Alignment::Parallel, true) => ("err_pure_parallel", Some(1.0 / n as f64)),
                (Alignment::Antiparallel, true) => ("err_pure_antiparallel", Some(0.5 / n as f64)),
                _ => ("err_pure_generic", None),
            };
            points.push(json!({
                "angle_deg": angle,
                "N": n,
                "infidelity": stats(&err),
                "prediction": prediction(name, value),
                "err_pure_limit_kappa0": 4.0 / (3.0 * n as f64),
            }));
            for (t, tr) in trials.iter().enumerate() {
                rows.push(TrialRow {
                    series: alignment.as_str().into(),
                    seed: rng::trial_seed(master, t as u64),
                    n,
                    strategy: "static".into(),
                    alignment: alignment.as_str().into(),
                    angle_deg: angle,
                    sq_dist: tr.sq_dist,
                    fidelity: tr.fidelity,
                });
            }
        }
        series.push(json!({ "label": alignment.as_str(), "points": points }));
    }
    Ok(ExperimentReport { rows, cloud: vec![], summary: json!({ "series": series }) })
}

/// Self-learning runs for every alignment needed by the figure; fig10
/// compares random against parallel.
fn run_selflearn_figure(r: &Resolved) -> Result<ExperimentReport> {
    let alignments: Vec<Alignment> = if r.experiment == ExperimentId::Fig10 {
        vec![Alignment::Parallel, Alignment::Random]
    } else {
        vec![r.strategy.alignment]
    };
    let spec = r.states[0];
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut mean_err = Vec::new();
    for (si, &alignment) in alignments.iter().enumerate() {
        let master = series_seed(r.seed, si);
        let per_trial: Vec<(u64, Vec<TrialResult>)> = (0..r.trials as u64)
            .into_par_iter()
            .map(|t| -> Result<_> {
                let seed = rng::trial_seed(master, t);
                let mut rng = rng::seeded(seed);
                let state = spec.draw(&mut rng);
                let res = run_selflearning_checkpoints(&state, &r.n, alignment, r.strategy.mode, &mut rng)?;
                Ok((seed, res))
            })
            .collect::<Result<_>>()?;
        let mut points = Vec::new();
        let mut errs = Vec::new();
        for (ni, &n) in r.n.iter().enumerate() {
            let err: Vec<f64> = per_trial.iter().map(|(_, v)| v[ni].infidelity()).collect();
            let fid: Vec<f64> = per_trial.iter().map(|(_, v)| v[ni].fidelity).collect();
            errs.push(mean_and_sem(&err).0);
            let nf = n as f64;
            points.push(json!({
                "N": n,
                "infidelity": stats(&err),
                "fidelity": stats(&fid),
                "prediction": prediction("quantum_limit", Some(crate::metrics::quantum_limit_fidelity(nf))),
                "quantum_limit_error": crate::metrics::quantum_limit_error(nf),
            }));
        }
        for (seed, v) in &per_trial {
            for tr in v {
                rows.push(TrialRow {
                    series: alignment.as_str().into(),
                    seed: *seed,
                    n: tr.clicks_used,
                    strategy: "selflearn".into(),
                    alignment: alignment.as_str().into(),
                    angle_deg: 0.0,
                    sq_dist: tr.sq_dist,
                    fidelity: tr.fidelity,
                });
            }
        }
        mean_err.push(errs);
        series.push(json!({ "label": alignment.as_str(), "points": points }));
    }
    let mut summary = json!({ "series": series });
    if r.experiment == ExperimentId::Fig10 {
        let delta: Vec<Value> = r
            .n
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let (par, rnd) = (mean_err[0][i], mean_err[1][i]);
                json!({ "N": n, "delta_f_percent": relative_difference_percent(rnd, par) })
            })
            .collect();
        summary["delta_f"] = Value::Array(delta);
    }
    Ok(ExperimentReport { rows, cloud: vec![], summary })
}

/// `100 (random - adaptive) / adaptive`.
pub fn relative_difference_percent(random_err: f64, adaptive_err: f64) -> f64 {
    100.0 * (random_err - adaptive_err) / adaptive_err
}

fn run_custom(r: &Resolved) -> Result<ExperimentReport> {
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (si, spec) in r.states.iter().enumerate() {
        let label = spec.label();
        let master = series_seed(r.seed, si);
        let mut points = Vec::new();
        for (ni, &n) in r.n.iter().enumerate() {
            let cfg = StrategyConfig {
                kind: r.strategy.kind,
                alignment: r.strategy.alignment,
                n,
                misalignment_deg: r.strategy.misalignment_deg,
                seed: r.seed,
                mode: r.strategy.mode,
            };
            let base = (ni as u64) << 24;
            let trials: Vec<(u64, TrialResult)> = (0..r.trials as u64)
                .into_par_iter()
                .map(|t| -> Result<_> {
                    let seed = rng::trial_seed(master, base + t);
                    let mut rng = rng::seeded(seed);
                    let state = spec.draw(&mut rng);
                    Ok((seed, run_trial(&cfg, &state, &mut rng)?))
                })
                .collect::<Result<_>>()?;
            let sq: Vec<f64> = trials.iter().map(|(_, t)| t.sq_dist).collect();
            let err: Vec<f64> = trials.iter().map(|(_, t)| t.infidelity()).collect();
            let preds: Option<PredictionSet> = match spec.fixed() {
                Some(s) => Some(predictions(&s, &frame_for(&r.strategy, &s)?, n)?),
                None => None,
            };
            points.push(json!({
                "N": n,
                "sq_dist": stats(&sq),
                "infidelity": stats(&err),
                "predictions": preds,
            }));
            for (seed, tr) in trials {
                rows.push(TrialRow {
                    series: label.clone(),
                    seed,
                    n,
                    strategy: r.strategy.kind.as_str().into(),
                    alignment: r.strategy.alignment.as_str().into(),
                    angle_deg: r.strategy.misalignment_deg,
                    sq_dist: tr.sq_dist,
                    fidelity: tr.fidelity,
                });
            }
        }
        series.push(json!({ "label": label, "points": points }));
    }
    Ok(ExperimentReport { rows, cloud: vec![], summary: json!({ "series": series }) })
}
