use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mimo_dos::experiments::{
    cmd_dump_dist, cmd_solve, cmd_sweep_snr, cmd_sweep_threshold, cmd_verify, CommandOutput, ExperimentConfig,
};
use mimo_dos::Result;

/// Opportunistic scheduling for two-antenna ad-hoc links: threshold design,
/// rate distributions and renewal-reward simulation.
#[derive(Parser)]
#[command(name = "mimo-dos", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal threshold and print it.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Solve the built-in exponential scenario and check it against x·eˣ = 10.
        #[arg(long)]
        self_test: bool,
    },
    /// Simulated throughput over a grid of fixed thresholds (CSV).
    SweepThreshold(Common),
    /// Solved and simulated maximal throughput over an SNR grid (CSV).
    SweepSnr(Common),
    /// Tabulated CDF of one rate variable (CSV plus JSON sidecar).
    DumpDist(Common),
    /// Monte Carlo checks of the tabulated laws (CSV); exits 5 on failure.
    Verify(Common),
}

/// Overrides applied on top of `--config`, with the same keys.
#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// tg_csit, tg_csir, sg_csit or all.
    #[arg(long)]
    protocol: Option<String>,
    /// Value in dB or `from:to:step`.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    rho_n: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    target_ps: Option<String>,
    #[arg(long)]
    links_per_group: Option<String>,
    #[arg(long)]
    renewals: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// paper or physical.
    #[arg(long)]
    csir_mode: Option<String>,
    /// approx_sum or exact_max.
    #[arg(long)]
    decision_rule: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long = "out")]
    output_path: Option<String>,
    /// Threshold grid `from:to:step` for sweep-threshold.
    #[arg(long)]
    thresholds: Option<String>,
    /// Rate variable for dump-dist.
    #[arg(long)]
    which: Option<String>,
    #[arg(long)]
    batches: Option<String>,
    #[arg(long)]
    grid_points: Option<String>,
    /// Monte Carlo samples per verify check.
    #[arg(long)]
    samples: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("protocol", &self.protocol),
            ("snr_db", &self.snr_db),
            ("rho_n", &self.rho_n),
            ("delta", &self.delta),
            ("target_ps", &self.target_ps),
            ("links_per_group", &self.links_per_group),
            ("renewals", &self.renewals),
            ("seed", &self.seed),
            ("csir_mode", &self.csir_mode),
            ("decision_rule", &self.decision_rule),
            ("output_path", &self.output_path),
            ("thresholds", &self.thresholds),
            ("which", &self.which),
            ("batches", &self.batches),
            ("grid_points", &self.grid_points),
            ("samples", &self.samples),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<String> {
    let output: CommandOutput = match cli.command {
        Command::Solve { common, self_test } => cmd_solve(&common.resolve()?, self_test)?,
        Command::SweepThreshold(c) => cmd_sweep_threshold(&c.resolve()?)?,
        Command::SweepSnr(c) => cmd_sweep_snr(&c.resolve()?)?,
        Command::DumpDist(c) => cmd_dump_dist(&c.resolve()?)?,
        Command::Verify(c) => cmd_verify(&c.resolve()?)?,
    };
    output.commit()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
