use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kmanb::dataset::{load_csv, synthesize, write_csv, write_csv_to, ClassCounts, Device, Scale, Target};
use kmanb::feature_rank::rank_features_with;
use kmanb::pipeline::{
    self, load_suite, render_report, run_suite, write_suite, Algorithm, DataSource, ExperimentConfig, ReportFormat,
    DEFAULT_SEPARATION, DEFAULT_SPLIT,
};
use kmanb::{Error, Result};

#[derive(Parser)]
#[command(name = "kmanb", version, about = "K-means + AdaBoosted naive Bayes on IoT telemetry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate one algorithm.
    Run(RunArgs),
    /// Rank features by symmetric uncertainty with the attack type.
    Rank {
        #[arg(long)]
        device: Device,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = kmanb::feature_rank::DEFAULT_BINS)]
        bins: usize,
    },
    /// Generate a synthetic device dataset.
    Synth {
        #[arg(long)]
        device: Device,
        #[arg(long, default_value = "train_test")]
        scale: Scale,
        #[arg(long, default_value_t = DEFAULT_SEPARATION)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a JSON suite of experiments and write combined reports.
    Suite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    device: Device,
    #[arg(long, default_value = "kmanb")]
    algorithm: Algorithm,
    /// Training CSV.
    #[arg(long, required_unless_present = "synth", conflicts_with = "synth")]
    train: Option<PathBuf>,
    /// Generate the training data instead of reading it.
    #[arg(long)]
    synth: Option<Scale>,
    #[arg(long, default_value_t = DEFAULT_SEPARATION, requires = "synth")]
    separation: f64,
    #[arg(long, conflicts_with = "split")]
    test: Option<PathBuf>,
    /// Train fraction when no test CSV is given [default: 0.7].
    #[arg(long)]
    split: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    drop_top_feature: bool,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    #[arg(long)]
    k_override: Option<usize>,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long)]
    rf_trees: Option<usize>,
    #[arg(long)]
    rf_mtry: Option<usize>,
    #[arg(long, default_value = "type")]
    target: Target,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

impl RunArgs {
    fn config(self) -> ExperimentConfig {
        let train = match (self.train, self.synth) {
            (Some(path), _) => DataSource::Csv(path),
            (None, Some(scale)) => DataSource::Synth {
                scale,
                separation: self.separation,
                fraction: None,
            },
            (None, None) => unreachable!("clap requires one"),
        };
        let split = match self.test {
            Some(_) => None,
            None => Some(self.split.unwrap_or(DEFAULT_SPLIT)),
        };
        ExperimentConfig {
            device: self.device,
            train,
            test: self.test.map(DataSource::Csv),
            split,
            algorithm: self.algorithm,
            seed: Some(self.seed),
            drop_top_feature: self.drop_top_feature,
            boost_rounds: self.rounds,
            k_override: self.k_override,
            knn_k: self.knn_k,
            rf_trees: self.rf_trees,
            rf_mtry: self.rf_mtry,
            target: self.target,
            out: self.out,
            format: Some(self.format),
        }
    }
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Internal(e.to_string())),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let config = args.config();
            let result = pipeline::run(&config)?;
            let text = render_report(std::slice::from_ref(&result), config.format.unwrap_or(ReportFormat::Json))?;
            write_out(config.out.as_ref(), &text)
        }
        Command::Rank {
            device,
            input,
            out,
            bins,
        } => {
            let data = load_csv(&input, &device.profile())?;
            let ranking = rank_features_with(&data, bins)?;
            let mut buf = Vec::new();
            ranking.write_csv(&mut buf)?;
            write_out(out.as_ref(), &String::from_utf8_lossy(&buf))
        }
        Command::Synth {
            device,
            scale,
            separation,
            seed,
            out,
        } => {
            let data = synthesize(&device.profile(), &ClassCounts::table(device, scale), seed, separation)?;
            match out {
                Some(path) => write_csv(path, &data),
                None => write_csv_to(std::io::stdout().lock(), &data),
            }
        }
        Command::Suite { config, out } => {
            let suite = load_suite(config)?;
            let cells = run_suite(&suite);
            write_suite(&cells, &out)?;
            let failed = cells.iter().filter(|c| c.error.is_some()).count();
            eprintln!("{} experiments, {failed} failed; reports in {}", cells.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| execute(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
