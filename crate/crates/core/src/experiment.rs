//! Multi-run experiments: each run replays the perceptron over a differently
//! shuffled query order, and the per-round average regrets are aggregated
//! into mean/standard-deviation curves written as CSV.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use rayon::prelude::*;

use crate::data::{
    fit_wstar, generate_synthetic, parse_letor, permute_queries, Dataset, SynthConfig,
};
use crate::error::{Error, Result};
use crate::feedback::FeedbackOracleConfig;
use crate::model::UtilityModel;
use crate::perceptron::{regret_bound, run, RunTrace};

pub const DEFAULT_RUNS: usize = 20;
pub const DEFAULT_STRIDE: usize = 10;

pub const CSV_HEADER: &str =
    "t,util_regret_mean,util_regret_std,dcg_regret_mean,dcg_regret_std,slack_sum_mean,bound";

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Letor(PathBuf),
    Synthetic(SynthConfig),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Letor(path) => {
                let file = std::fs::File::open(path)?;
                parse_letor(std::io::BufReader::new(file))
            }
            DataSource::Synthetic(config) => generate_synthetic(config).map(|(ds, _)| ds),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub oracle: FeedbackOracleConfig,
    pub rounds: usize,
    pub runs: usize,
    /// Run `j` shuffles the queries with seed `base_seed + j`.
    pub base_seed: u64,
    /// Emit every `report_stride`-th round (and always the last one).
    pub report_stride: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.runs == 0 || self.report_stride == 0 {
            return Err(Error::Validation(
                "rounds, runs and report stride must all be at least 1".into(),
            ));
        }
        self.oracle.validated().map(|_| ())
    }
}

/// One emitted round of an aggregate regret curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub t: usize,
    pub util_regret_mean: f64,
    pub util_regret_std: f64,
    pub dcg_regret_mean: f64,
    pub dcg_regret_std: f64,
    pub slack_sum_mean: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AggregateCurve {
    pub rows: Vec<CurveRow>,
}

/// Loads the data, fits `w*` and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateCurve> {
    config.validate()?;
    let dataset = config.source.load()?;
    let model = fit_wstar(&dataset)?;
    let traces = run_all(&dataset, &model, config)?;
    aggregate(&traces, config.report_stride)
}

/// Executes every run of the experiment, in parallel, returning traces in run order.
pub fn run_all(
    dataset: &Dataset,
    model: &UtilityModel,
    config: &ExperimentConfig,
) -> Result<Vec<RunTrace>> {
    config.validate()?;
    (0..config.runs)
        .into_par_iter()
        .map(|j| {
            let queries = permute_queries(dataset, config.base_seed.wrapping_add(j as u64));
            run(&queries, model, &config.oracle, config.rounds).map_err(|e| Error::Run {
                run: j,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Rounds emitted for a horizon and stride: multiples of the stride plus the horizon itself.
pub fn emitted_rounds(rounds: usize, stride: usize) -> Vec<usize> {
    let mut ts: Vec<usize> = (stride..=rounds).step_by(stride.max(1)).collect();
    if ts.last() != Some(&rounds) {
        ts.push(rounds);
    }
    ts
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates equally long traces into mean and population standard deviation curves.
///
/// The bound column is evaluated at the mean clamped slack sum, which equals
/// the mean of the per-run bounds since the bound is affine in the slack sum.
pub fn aggregate(traces: &[RunTrace], stride: usize) -> Result<AggregateCurve> {
    let Some(first) = traces.first() else {
        return Err(Error::Validation("no runs to aggregate".into()));
    };
    let rounds = first.rounds();
    if traces.iter().any(|t| t.rounds() != rounds) {
        return Err(Error::Validation("runs have different lengths".into()));
    }
    if stride == 0 {
        return Err(Error::Validation("report stride must be at least 1".into()));
    }
    let curves: Vec<_> = traces.iter().map(RunTrace::regret_curve).collect();
    let slacks: Vec<_> = traces.iter().map(RunTrace::clamped_slack_sums).collect();

    let rows = emitted_rounds(rounds, stride)
        .into_iter()
        .map(|t| {
            let i = t - 1;
            let util: Vec<f64> = curves.iter().map(|c| c[i].utility).collect();
            let dcg: Vec<f64> = curves.iter().map(|c| c[i].dcg).collect();
            let slack: Vec<f64> = slacks.iter().map(|s| s[i]).collect();
            let (util_regret_mean, util_regret_std) = mean_std(&util);
            let (dcg_regret_mean, dcg_regret_std) = mean_std(&dcg);
            let (slack_sum_mean, _) = mean_std(&slack);
            let bound = regret_bound(
                first.alpha,
                first.r_bound,
                first.w_star_norm,
                slack_sum_mean,
                t,
            )?;
            Ok(CurveRow {
                t,
                util_regret_mean,
                util_regret_std,
                dcg_regret_mean,
                dcg_regret_std,
                slack_sum_mean,
                bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AggregateCurve { rows })
}

/// Writes the curve as CSV with LF line endings and 9 significant digits per float.
pub fn write_csv<W: Write>(curve: &AggregateCurve, mut sink: W) -> Result<()> {
    if curve.rows.is_empty() {
        return Err(Error::Validation("cannot write an empty curve".into()));
    }
    writeln!(sink, "{CSV_HEADER}")?;
    for r in &curve.rows {
        writeln!(
            sink,
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            r.t,
            r.util_regret_mean,
            r.util_regret_std,
            r.dcg_regret_mean,
            r.dcg_regret_std,
            r.slack_sum_mean,
            r.bound
        )?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_csv`].
pub fn read_csv<R: BufRead>(source: R) -> Result<AggregateCurve> {
    let mut lines = source.lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: "missing or unexpected CSV header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(err(format!("expected 7 columns, found {}", fields.len())));
        }
        let t = fields[0]
            .parse()
            .map_err(|_| err(format!("invalid round {:?}", fields[0])))?;
        let mut vals = [0.0; 6];
        for (v, f) in vals.iter_mut().zip(&fields[1..]) {
            *v = f
                .parse()
                .map_err(|_| err(format!("invalid number {f:?}")))?;
        }
        rows.push(CurveRow {
            t,
            util_regret_mean: vals[0],
            util_regret_std: vals[1],
            dcg_regret_mean: vals[2],
            dcg_regret_std: vals[3],
            slack_sum_mean: vals[4],
            bound: vals[5],
        });
    }
    Ok(AggregateCurve { rows })
}
