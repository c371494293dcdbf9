use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};

use tetratomo::adaptive::{
    mean_and_sem, run_trial, two_qubit_exhaustive, Alignment, StrategyConfig, StrategyKind,
    TwoQubitStrategy,
};
use tetratomo::bloch::{
    outcome_probabilities, random_state, six_state_probabilities, SixFrame, StateKind,
};
use tetratomo::circuit::run_network;
use tetratomo::clicks::{sample_clicks, SixCounts};
use tetratomo::experiment::{
    fmt_real, rows_to_csv, run_experiment, ExperimentConfig, ExperimentId, OutputFormat, TrialRow,
};
use tetratomo::metrics::{predictions, uhlmann_fidelity};
use tetratomo::ml::{ml_estimate_four, ml_estimate_six};
use tetratomo::pair::{
    calibrate_orientation, frequencies, joint_probabilities, reconstruct_two_qubit, sample_pairs,
    TwoQubitState,
};
use tetratomo::{rng, ClickCounts, FitMode, PauliVector, Result, TetraFrame, TomoError};

#[derive(Parser, Debug)]
#[command(name = "tetratomo", version, about = "Four-outcome qubit tomography toolkit")]
struct Cli {
    /// Master seed for every random stream [default: 0, or the config file's].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format [default: csv, or the config file's].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Mode {
    Auto,
    ForceBoundary,
}

impl From<Mode> for FitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => FitMode::Auto,
            Mode::ForceBoundary => FitMode::ForceBoundary,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Strategy {
    Static,
    Premeasure,
    Selflearn,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AlignArg {
    Parallel,
    Antiparallel,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Figure {
    Fig5,
    Fig6,
    Fig7,
    Fig9,
    Fig10,
    Custom,
}

#[derive(Args, Debug, Clone)]
struct FrameArg {
    /// Frame rotation as nine comma-separated numbers (row major); the
    /// reference tetrahedron if omitted.
    #[arg(long, value_parser = parse_list::<9>, allow_hyphen_values = true)]
    frame: Option<[f64; 9]>,
}

impl FrameArg {
    fn frame(&self) -> Result<TetraFrame> {
        match self.frame {
            Some(m) => TetraFrame::from_row_major(m),
            None => Ok(TetraFrame::reference()),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Outcome probabilities of a state.
    Probabilities {
        /// Pauli vector `x,y,z`.
        #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true)]
        state: [f64; 3],
        /// Use the six-outcome device instead.
        #[arg(long)]
        six: bool,
        #[command(flatten)]
        frame: FrameArg,
    },
    /// Maximum-likelihood estimate from click counts.
    Estimate {
        /// Four counts, or six (`x+,x-,y+,y-,z+,z-`) for the six-outcome device.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        #[command(flatten)]
        frame: FrameArg,
    },
    /// Simulated runs with a fixed frame, one line per trial.
    Simulate {
        #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true)]
        state: [f64; 3],
        #[arg(short = 'n', long = "clicks")]
        n: u64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        #[command(flatten)]
        frame: FrameArg,
    },
    /// Adaptive strategies, or the exact two-click benchmark table.
    Adaptive {
        #[arg(long, value_enum, default_value_t = Strategy::Selflearn)]
        strategy: Strategy,
        #[arg(long, value_enum, default_value_t = AlignArg::Parallel)]
        alignment: AlignArg,
        #[arg(short = 'n', long = "clicks", default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Fixed input; a random pure state per trial if omitted.
        #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true)]
        state: Option<[f64; 3]>,
        #[arg(long, default_value_t = 0.0)]
        misalignment_deg: f64,
        #[arg(long, value_enum, default_value_t = Mode::ForceBoundary)]
        mode: Mode,
        /// Print the exact two-click averages instead of simulating.
        #[arg(long)]
        two_qubit: bool,
    },
    /// Two-qubit tomography with two tetrahedron devices.
    Pair {
        /// Singlet input (default).
        #[arg(long, conflicts_with_all = ["first", "second"])]
        singlet: bool,
        /// Product input: first qubit.
        #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true, requires = "second")]
        first: Option<[f64; 3]>,
        #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true, requires = "first")]
        second: Option<[f64; 3]>,
        /// Rotation of the second device (nine numbers, row major).
        #[arg(long, value_parser = parse_list::<9>, allow_hyphen_values = true)]
        frame_b: Option<[f64; 9]>,
        /// Number of simulated pairs; exact probabilities if 0.
        #[arg(short = 'n', long = "pairs", default_value_t = 0)]
        n: u64,
    },
    /// Gate-network realization of the measurement.
    Circuit {
        #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true)]
        state: [f64; 3],
    },
    /// Figure data sets.
    Figure {
        #[arg(value_enum)]
        id: Figure,
        /// JSON configuration; command-line values override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short = 'n', long = "clicks", value_delimiter = ',')]
        n: Option<Vec<u64>>,
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn parse_list<const K: usize>(s: &str) -> std::result::Result<[f64; K], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {K} comma-separated numbers, got {}", v.len()))
}

fn state_from(s: [f64; 3]) -> Result<PauliVector> {
    PauliVector::new(s[0], s[1], s[2])
}

/// A rendered result: a CSV table and the equivalent JSON document.
struct Output {
    csv: String,
    json: Value,
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn vec3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn mat3(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

fn probabilities(state: [f64; 3], six: bool, frame: &FrameArg) -> Result<Output> {
    let s = state_from(state)?;
    let p: Vec<f64> = if six {
        let rot = match frame.frame {
            Some(m) => SixFrame::from_rotation(Matrix3::from_row_slice(&m))?,
            None => SixFrame::standard(),
        };
        six_state_probabilities(&s, &rot).to_vec()
    } else {
        outcome_probabilities(&s, &frame.frame()?).values().to_vec()
    };
    let rows: Vec<Vec<String>> = p.iter().enumerate().map(|(j, x)| vec![(j + 1).to_string(), fmt_real(*x)]).collect();
    Ok(Output { csv: table(&["outcome", "probability"], &rows), json: json!({ "probabilities": p }) })
}

fn estimate(counts: &[u64], mode: Mode, frame: &FrameArg) -> Result<Output> {
    let est = match counts.len() {
        4 => ml_estimate_four(&ClickCounts::new(counts.try_into().unwrap()), &frame.frame()?, mode.into())?,
        6 => {
            let rot = match frame.frame {
                Some(m) => SixFrame::from_rotation(Matrix3::from_row_slice(&m))?,
                None => SixFrame::standard(),
            };
            ml_estimate_six(&SixCounts::new(counts.try_into().unwrap()), &rot)?
        }
        k => return Err(TomoError::Config(format!("counts: expected 4 or 6 values, got {k}"))),
    };
    let s = vec3(est.s.vector());
    let row = vec![
        fmt_real(s[0]),
        fmt_real(s[1]),
        fmt_real(s[2]),
        fmt_real(est.mu),
        serde_json::to_value(est.branch)?.as_str().unwrap_or_default().to_string(),
        fmt_real(est.loglik),
    ];
    Ok(Output {
        csv: table(&["S_x", "S_y", "S_z", "mu", "branch", "loglik"], &[row]),
        json: serde_json::to_value(&est)?,
    })
}

fn simulate(seed: u64, state: [f64; 3], n: u64, trials: u64, mode: Mode, frame: &FrameArg) -> Result<Output> {
    if n == 0 || trials == 0 {
        return Err(TomoError::Config("clicks and trials must be at least 1".into()));
    }
    let s = state_from(state)?;
    let frame = frame.frame()?;
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for t in 0..trials {
        let trial_seed = rng::trial_seed(seed, t);
        let mut r = rng::seeded(trial_seed);
        let mut counts = sample_clicks(&s, &frame, n, &mut r);
        counts.seed = Some(trial_seed);
        let est = ml_estimate_four(&counts, &frame, mode.into())?;
        let sq = (est.s.vector() - s.vector()).norm_squared();
        let fid = uhlmann_fidelity(&est.s, &s).powi(2);
        let e = vec3(est.s.vector());
        let mut row = vec![trial_seed.to_string(), n.to_string()];
        row.extend(counts.n.iter().map(|c| c.to_string()));
        row.extend(e.iter().map(|x| fmt_real(*x)));
        row.push(fmt_real(sq));
        row.push(fmt_real(fid));
        rows.push(row);
        docs.push(json!({ "counts": counts, "estimate": est, "sq_dist": sq, "fidelity": fid }));
    }
    let preds = predictions(&s, &frame, n)?;
    Ok(Output {
        csv: table(&["seed", "N", "n1", "n2", "n3", "n4", "S_x", "S_y", "S_z", "sq_dist", "fidelity"], &rows),
        json: json!({ "trials": docs, "predictions": preds }),
    })
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    seed: u64,
    strategy: Strategy,
    alignment: AlignArg,
    n: u64,
    trials: u64,
    state: Option<[f64; 3]>,
    misalignment_deg: f64,
    mode: Mode,
) -> Result<Output> {
    let cfg = StrategyConfig {
        kind: match strategy {
            Strategy::Static => StrategyKind::Static,
            Strategy::Premeasure => StrategyKind::Premeasure,
            Strategy::Selflearn => StrategyKind::Selflearn,
        },
        alignment: match alignment {
            AlignArg::Parallel => Alignment::Parallel,
            AlignArg::Antiparallel => Alignment::Antiparallel,
            AlignArg::Random => Alignment::Random,
        },
        n,
        misalignment_deg,
        seed,
        mode: mode.into(),
    };
    cfg.validate()?;
    if trials == 0 {
        return Err(TomoError::Config("trials must be at least 1".into()));
    }
    let fixed = state.map(state_from).transpose()?;
    let mut rows = Vec::new();
    for t in 0..trials {
        let trial_seed = rng::trial_seed(seed, t);
        let mut r = rng::seeded(trial_seed);
        let s = fixed.unwrap_or_else(|| random_state(StateKind::Pure, &mut r));
        let tr = run_trial(&cfg, &s, &mut r)?;
        rows.push(TrialRow {
            series: "adaptive".into(),
            seed: trial_seed,
            n,
            strategy: cfg.kind.as_str().into(),
            alignment: cfg.alignment.as_str().into(),
            angle_deg: misalignment_deg,
            sq_dist: tr.sq_dist,
            fidelity: tr.fidelity,
        });
    }
    let err: Vec<f64> = rows.iter().map(|r| 1.0 - r.fidelity).collect();
    let (mean, sem) = mean_and_sem(&err);
    Ok(Output {
        csv: rows_to_csv(&rows),
        json: json!({ "config": cfg, "mean_infidelity": mean, "sem": sem, "trials": rows }),
    })
}

fn two_qubit() -> Output {
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for strategy in [TwoQubitStrategy::Nonadaptive, TwoQubitStrategy::Antialign] {
        for kind in [StateKind::Pure, StateKind::Ball] {
            let v = two_qubit_exhaustive(strategy, kind);
            let (name, avg) = (serde_json::to_value(strategy).unwrap(), serde_json::to_value(kind).unwrap());
            let (name, avg) = (name.as_str().unwrap().to_string(), avg.as_str().unwrap().to_string());
            rows.push(vec![name.clone(), avg.clone(), fmt_real(v)]);
            docs.push(json!({ "strategy": name, "average": avg, "mean_sq_dist": v }));
        }
    }
    Output { csv: table(&["strategy", "average", "mean_sq_dist"], &rows), json: Value::Array(docs) }
}

fn pair(seed: u64, first: Option<[f64; 3]>, second: Option<[f64; 3]>, frame_b: Option<[f64; 9]>, n: u64) -> Result<Output> {
    let rho = match (first, second) {
        (Some(a), Some(b)) => TwoQubitState::product(&state_from(a)?, &state_from(b)?),
        _ => TwoQubitState::singlet(),
    };
    let fa = TetraFrame::reference();
    let fb = match frame_b {
        Some(m) => TetraFrame::from_row_major(m)?,
        None => TetraFrame::reference(),
    };
    let q = joint_probabilities(&rho, &fa, &fb)?;
    let (counts, data) = if n > 0 {
        let mut r = rng::seeded(seed);
        let c = sample_pairs(&q, n, &mut r);
        (Some(c), frequencies(&c)?)
    } else {
        (None, q.clone())
    };
    let rec = reconstruct_two_qubit(&data, &fa, &fb)?;
    let orientation = calibrate_orientation(&data, &fa)?;
    let mut rows = Vec::new();
    for j in 0..4 {
        for k in 0..4 {
            rows.push(vec![
                (j + 1).to_string(),
                (k + 1).to_string(),
                fmt_real(q.q[j][k]),
                counts.map(|c| c[j][k].to_string()).unwrap_or_default(),
            ]);
        }
    }
    Ok(Output {
        csv: table(&["outcome_a", "outcome_b", "probability", "count"], &rows),
        json: json!({
            "probabilities": q.q,
            "counts": counts,
            "reconstructed": rec.t,
            "reconstructed_min_eigenvalue": rec.min_eigenvalue(),
            "orientation": mat3(&orientation),
        }),
    })
}

fn circuit(state: [f64; 3]) -> Result<Output> {
    let out = run_network(&state_from(state)?);
    let rows: Vec<Vec<String>> = (0..4)
        .map(|j| {
            let post = out.post_states[j].map(|s| vec3(s.vector()));
            let mut row = vec![(j + 1).to_string(), fmt_real(out.probabilities[j])];
            row.extend((0..3).map(|i| post.map(|p| fmt_real(p[i])).unwrap_or_default()));
            row
        })
        .collect();
    Ok(Output { csv: table(&["outcome", "probability", "post_x", "post_y", "post_z"], &rows), json: serde_json::to_value(&out)? })
}

fn figure(cli: &Cli, id: Figure, config: Option<&Path>, n: Option<Vec<u64>>, trials: Option<usize>) -> Result<Option<Output>> {
    let id = match id {
        Figure::Fig5 => ExperimentId::Fig5,
        Figure::Fig6 => ExperimentId::Fig6,
        Figure::Fig7 => ExperimentId::Fig7,
        Figure::Fig9 => ExperimentId::Fig9,
        Figure::Fig10 => ExperimentId::Fig10,
        Figure::Custom => ExperimentId::Custom,
    };
    let mut cfg = match config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.experiment != id {
                return Err(TomoError::Config(format!(
                    "experiment: file says {}, command line says {}",
                    c.experiment.as_str(),
                    id.as_str()
                )));
            }
            c
        }
        None => ExperimentConfig::new(id),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if n.is_some() {
        cfg.n = n;
    }
    if trials.is_some() {
        cfg.trials = trials;
    }
    let report = run_experiment(&cfg)?;
    let out_path = cli.out.clone().or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
    let format = match (cli.format, &cfg.output) {
        (Some(f), _) => f.into(),
        (None, Some(o)) => o.format,
        (None, None) => OutputFormat::Csv,
    };
    match out_path {
        Some(path) => {
            for p in report.write(&path, format)? {
                log::info!("wrote {}", p.display());
            }
            Ok(None)
        }
        None => {
            let mut json = report.summary.clone();
            json["trials_data"] = serde_json::to_value(&report.rows)?;
            Ok(Some(Output { csv: report.csv(), json }))
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let output = match &cli.command {
        Command::Probabilities { state, six, frame } => Some(probabilities(*state, *six, frame)?),
        Command::Estimate { counts, mode, frame } => Some(estimate(counts, *mode, frame)?),
        Command::Simulate { state, n, trials, mode, frame } => Some(simulate(cli.seed.unwrap_or(0), *state, *n, *trials, *mode, frame)?),
        Command::Adaptive { two_qubit: true, .. } => Some(two_qubit()),
        Command::Adaptive { strategy, alignment, n, trials, state, misalignment_deg, mode, .. } => Some(adaptive(
            cli.seed.unwrap_or(0),
            *strategy,
            *alignment,
            *n,
            *trials,
            *state,
            *misalignment_deg,
            *mode,
        )?),
        Command::Pair { first, second, frame_b, n, .. } => Some(pair(cli.seed.unwrap_or(0), *first, *second, *frame_b, *n)?),
        Command::Circuit { state } => Some(circuit(*state)?),
        Command::Figure { id, config, n, trials } => figure(cli, *id, config.as_deref(), n.clone(), *trials)?,
    };
    if let Some(out) = output {
        let text = match cli.format.unwrap_or(Format::Csv) {
            Format::Csv => out.csv,
            Format::Json => serde_json::to_string_pretty(&out.json)? + "\n",
        };
        match &cli.out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match &e {
                TomoError::Config(_) | TomoError::NonPhysicalState { .. } | TomoError::InvalidFrame(_) => 2,
                e if e.is_numerical() => 3,
                _ => 1,
            })
        }
    }
}
