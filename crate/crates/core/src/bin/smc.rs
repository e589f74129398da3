use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lookahead_smc::bench::selftest::run_selftest;
use lookahead_smc::bench::{run_experiment, write_csv, ExperimentConfig, ExperimentKind, Overrides, ReferenceTable};
use lookahead_smc::error::{Result, SmcError};

#[derive(Parser)]
#[command(name = "smc", version, about = "Lookahead sequential Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-repetition metrics as CSV.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build the large-sample reference cache for RMSE2/MAE2.
    Reference {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print the fully resolved configuration as JSON.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config; fields left out take the experiment's preset.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_experiment)]
    experiment: Option<ExperimentKind>,
    /// Strategy kind (plain, exact, pilot, adaptive, deterministic, multilevel) or a JSON object.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long)]
    pilots: Option<usize>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(short = 'm', long)]
    particles: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated lags, e.g. `0,1,2,3`.
    #[arg(long, value_delimiter = ',')]
    lags: Option<Vec<usize>>,
    #[arg(long)]
    snr_db: Option<f64>,
    /// Reference cache produced by `smc reference`.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Record wall time per repetition.
    #[arg(long)]
    timing: bool,
}

fn parse_experiment(s: &str) -> std::result::Result<ExperimentKind, String> {
    s.parse().map_err(|e: SmcError| e.to_string())
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => serde_json::json!({}),
        };
        let overrides = Overrides {
            experiment: self.experiment,
            strategy: self.strategy.clone(),
            delta: self.delta,
            pilots: self.pilots,
            candidates: self.candidates,
            particles: self.particles,
            reps: self.reps,
            horizon: self.horizon,
            seed: self.seed,
            lags: self.lags.clone(),
            snr_db: self.snr_db,
            reference: self.reference.clone(),
            timing: self.timing,
        };
        ExperimentConfig::from_layers(file, &overrides)
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = config.resolve()?;
            let rows = run_experiment(&cfg)?;
            match out {
                Some(p) => write_csv(&rows, std::fs::File::create(p)?)?,
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Reference { config, out } => {
            let cfg = config.resolve()?;
            let table = ReferenceTable::build(&cfg)?;
            table.write(std::fs::File::create(&out)?)?;
            eprintln!("wrote {} reference series to {}", table.len(), out.display());
        }
        Command::Config { config } => {
            let cfg = config.resolve()?;
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, &cfg)?;
            writeln!(stdout)?;
        }
        Command::Selftest => {
            let mut all = true;
            for c in run_selftest() {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {} {}", c.name, c.detail);
                all &= c.passed;
            }
            return Ok(all);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
