use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coactive::data::{fit_wstar, generate_synthetic, write_letor, SynthConfig};
use coactive::experiment::{
    run_experiment, write_csv, DataSource, ExperimentConfig, DEFAULT_RUNS, DEFAULT_STRIDE,
};
use coactive::feedback::DEFAULT_INSPECTION_DEPTH;
use coactive::{Error, FeedbackOracleConfig};

#[derive(Parser)]
#[command(
    name = "coactive",
    version,
    about = "Preference perceptron experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset in LETOR format.
    Gen {
        #[command(flatten)]
        synth: SynthArgs,
        /// Seed of the generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit w* to a LETOR file and report it with the norm bound R.
    Fit { data: PathBuf },
    /// Run the preference perceptron and write aggregate regret curves as CSV.
    Run(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long, default_value_t = 50)]
    docs: usize,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    /// Standard deviation of the label noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Alpha,
    Relevance,
}

#[derive(Args)]
struct RunArgs {
    /// LETOR dataset file.
    #[arg(long, conflicts_with = "synth")]
    data: Option<PathBuf>,
    /// Use a synthetic dataset instead of a file.
    #[arg(long, required_unless_present = "data")]
    synth: bool,
    #[command(flatten)]
    synth_args: SynthArgs,
    /// Seed of the synthetic dataset.
    #[arg(long, default_value_t = 0)]
    synth_seed: u64,
    #[arg(long, value_enum, default_value_t = OracleArg::Alpha)]
    oracle: OracleArg,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Results inspected by the relevance-label user.
    #[arg(long, default_value_t = DEFAULT_INSPECTION_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    /// Base seed of the per-run query shuffles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
    /// Output CSV file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(out: Option<&PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn synth_config(args: &SynthArgs, seed: u64) -> SynthConfig {
    SynthConfig {
        num_queries: args.queries,
        docs_per_query: args.docs,
        dimension: args.dim,
        noise_std: args.noise,
        seed,
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen { synth, seed, out } => {
            let (dataset, _) = generate_synthetic(&synth_config(&synth, seed))?;
            write_letor(&dataset, sink(out.as_ref())?)
        }
        Command::Fit { data } => {
            let dataset = DataSource::Letor(data).load()?;
            let model = fit_wstar(&dataset)?;
            let mut out = sink(None)?;
            writeln!(out, "queries: {}", dataset.queries().len())?;
            writeln!(out, "documents: {}", dataset.num_documents())?;
            writeln!(out, "dimension: {}", dataset.dimension())?;
            writeln!(out, "R: {}", model.r_bound())?;
            writeln!(out, "w_star_norm: {}", model.w_star_norm())?;
            let w: Vec<String> = model.w_star().iter().map(|v| format!("{v:.8e}")).collect();
            writeln!(out, "w_star: {}", w.join(" "))?;
            out.flush()?;
            Ok(())
        }
        Command::Run(args) => {
            let source = match args.data {
                Some(path) => DataSource::Letor(path),
                None => DataSource::Synthetic(synth_config(&args.synth_args, args.synth_seed)),
            };
            let oracle = match args.oracle {
                OracleArg::Alpha => FeedbackOracleConfig::alpha_informative(args.alpha)?,
                OracleArg::Relevance => {
                    FeedbackOracleConfig::relevance_label(args.depth, args.alpha)?
                }
            };
            let config = ExperimentConfig {
                source,
                oracle,
                rounds: args.rounds,
                runs: args.runs,
                base_seed: args.seed,
                report_stride: args.stride,
            };
            let curve = run_experiment(&config)?;
            write_csv(&curve, sink(args.out.as_ref())?)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
