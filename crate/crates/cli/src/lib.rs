//! Batch experiments with simulated decision makers: repeated seeded runs,
//! per-run CSV logs and a percentile aggregate of the opportunity cost.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use prefmobo::engine::{run_session, DmMode, RunLog, SessionConfig};
use prefmobo::sampling::{sample_simplex_uniform, SeededRng};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] prefmobo::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("percentile of an empty list")]
    EmptyInput,
    #[error("percentile rank {0} outside [0, 100]")]
    InvalidPercentile(f64),
}

/// RNG stream reserved for drawing each repetition's hidden utility weight.
pub const DM_WEIGHT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Seed and decision maker are filled in per repetition.
    pub template: SessionConfig,
    pub repetitions: usize,
    pub seed_base: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub eval_index: usize,
    pub median: f64,
    pub p20: f64,
    pub p80: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub logs: Vec<RunLog>,
    pub aggregate: Vec<AggregateRow>,
    pub aggregate_path: PathBuf,
}

/// Session config of repetition `r`: seed `seed_base + r` and a hidden
/// weight drawn uniformly from the simplex on a dedicated stream.
pub fn repetition_config(spec: &ExperimentSpec, r: usize) -> SessionConfig {
    let seed = spec.seed_base + r as u64;
    let mut rng = SeededRng::with_stream(seed, DM_WEIGHT_STREAM);
    SessionConfig {
        seed,
        dm_mode: DmMode::Simulated {
            weight: sample_simplex_uniform(spec.template.d_out, &mut rng),
        },
        ..spec.template.clone()
    }
}

/// Linear-interpolation percentile with rank `q / 100 * (n - 1)`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64, CliError> {
    if values.is_empty() {
        return Err(CliError::EmptyInput);
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(CliError::InvalidPercentile(q));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = q / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Ok(v[lo] + (rank - lo as f64) * (v[hi] - v[lo]))
}

/// Best-so-far OC after each of `rows` evaluations; a run that stopped early
/// repeats its last value.
pub fn best_oc_series(log: &RunLog, rows: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows);
    let mut last = f64::NAN;
    for k in 0..rows {
        if let Some(v) = log.evaluations.get(k).and_then(|r| r.best_oc) {
            last = v;
        }
        out.push(last);
    }
    out
}

/// Median, 20th and 80th percentile across runs for evaluation counts
/// `1..=rows`.
pub fn aggregate(logs: &[RunLog], rows: usize) -> Result<Vec<AggregateRow>, CliError> {
    let series: Vec<Vec<f64>> = logs.iter().map(|l| best_oc_series(l, rows)).collect();
    (0..rows)
        .map(|k| {
            let column: Vec<f64> = series.iter().map(|s| s[k]).filter(|v| !v.is_nan()).collect();
            if column.is_empty() {
                return Ok(AggregateRow {
                    eval_index: k + 1,
                    median: f64::NAN,
                    p20: f64::NAN,
                    p80: f64::NAN,
                });
            }
            Ok(AggregateRow {
                eval_index: k + 1,
                median: percentile(&column, 50.0)?,
                p20: percentile(&column, 20.0)?,
                p80: percentile(&column, 80.0)?,
            })
        })
        .collect()
}

/// Shortest decimal that round-trips; `.` separator regardless of locale.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn run_log_csv(log: &RunLog) -> Result<Vec<u8>, CliError> {
    let (d_in, d_out) = (log.config.d_in, log.config.d_out);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["eval_index".to_string()];
    header.extend((1..=d_in).map(|i| format!("x{i}")));
    header.extend((1..=d_out).map(|j| format!("y{j}")));
    header.extend((1..=d_out).map(|j| format!("w{j}")));
    header.push("best_oc".into());
    w.write_record(&header)?;
    for row in &log.evaluations {
        let mut rec = vec![row.eval_index.to_string()];
        rec.extend(row.x.iter().map(|v| fmt_f64(*v)));
        rec.extend(row.y.iter().map(|v| fmt_f64(*v)));
        match &row.generating_weight {
            Some(wt) => rec.extend(wt.iter().map(|v| fmt_f64(*v))),
            None => rec.extend(std::iter::repeat_n(String::new(), d_out)),
        }
        rec.push(row.best_oc.map(fmt_f64).unwrap_or_default());
        w.write_record(&rec)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn interactions_csv(log: &RunLog) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["interaction_index", "chosen", "budget_spent", "front"])?;
    for rec in &log.interactions {
        let front: Vec<String> = rec.front.iter().map(|i| i.to_string()).collect();
        w.write_record([
            rec.interaction_index.to_string(),
            rec.chosen.to_string(),
            rec.budget_spent.to_string(),
            front.join(" "),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eval_index", "median_oc", "p20_oc", "p80_oc"])?;
    for r in rows {
        w.write_record([r.eval_index.to_string(), fmt_f64(r.median), fmt_f64(r.p20), fmt_f64(r.p80)])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Runs every repetition (in parallel where cores allow), writes
/// `run_NNN.csv`, `run_NNN_interactions.csv` and `aggregate.csv` under the
/// output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, CliError> {
    spec.template.validate()?;
    fs::create_dir_all(&spec.out_dir)?;
    let configs: Vec<SessionConfig> = (0..spec.repetitions).map(|r| repetition_config(spec, r)).collect();

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunLog, CliError>>>> = Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(r) else { break };
                let outcome = run_session(cfg.clone()).map_err(CliError::from).and_then(|log| {
                    write_atomic(&spec.out_dir.join(format!("run_{r:03}.csv")), &run_log_csv(&log)?)?;
                    write_atomic(
                        &spec.out_dir.join(format!("run_{r:03}_interactions.csv")),
                        &interactions_csv(&log)?,
                    )?;
                    Ok(log)
                });
                results.lock().expect("no worker panics while holding the lock")[r] = Some(outcome);
            });
        }
    });
    let logs: Vec<RunLog> = results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every repetition ran"))
        .collect::<Result<_, _>>()?;

    let aggregate = aggregate(&logs, spec.template.total_budget)?;
    let aggregate_path = spec.out_dir.join("aggregate.csv");
    write_atomic(&aggregate_path, &aggregate_csv(&aggregate)?)?;
    Ok(ExperimentOutcome {
        logs,
        aggregate,
        aggregate_path,
    })
}
