use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctor_cli::config::{self, ExperimentConfig, Overrides};
use ctor_cli::{Blocking, CliError, E2eRequest, EXIT_CONFIG};
use ctor_core::TorConfig;

#[derive(Parser)]
#[command(name = "ctor", version, about = "Censorship-resistance experiments for multi-circuit and coded onion routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact blocking probabilities over the grid, as CSV.
    Analytic {
        #[command(flatten)]
        common: CommonArgs,
        /// Cross-check every row by enumerating all bridge subsets.
        #[arg(long)]
        oracle: bool,
    },
    /// Monte Carlo blocking probabilities over the grid, as CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Both CSVs for the default figure grid; --out names a directory.
    Fig2 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// One end-to-end transfer with a per-generation delivery report.
    E2e(E2eArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bridges unknown to the censor.
    #[arg(long)]
    mb: Option<u64>,
    /// Bridges known to the censor: `a` or `a..b`.
    #[arg(long)]
    mknown: Option<String>,
    /// otor | mtor:<n> | ctor:<n>:<r>; repeatable.
    #[arg(long = "variant")]
    variants: Vec<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    full_pipeline_fraction: Option<f64>,
    #[arg(long)]
    message_len: Option<usize>,
    #[arg(long)]
    middles: Option<usize>,
    #[arg(long)]
    exits: Option<usize>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply(&config::parse_config_file(&text)?);
        }
        let variants = if self.variants.is_empty() {
            None
        } else {
            Some(
                self.variants
                    .iter()
                    .map(|v| v.parse::<TorConfig>())
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        cfg.apply(&Overrides {
            m_b: self.mb,
            m_known: self.mknown.as_deref().map(config::parse_m_known).transpose()?,
            variants,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            full_pipeline_fraction: self.full_pipeline_fraction,
            message_len: self.message_len,
            middles: self.middles,
            exits: self.exits,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct E2eArgs {
    /// otor | mtor:<n> | ctor:<n>:<r>
    #[arg(long)]
    variant: String,
    /// Send this file.
    #[arg(long, conflicts_with = "size")]
    message_file: Option<PathBuf>,
    /// Send this many seeded random bytes.
    #[arg(long, default_value_t = 4096)]
    size: usize,
    /// Circuit indices to block, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["mb", "mknown"])]
    block: Vec<usize>,
    /// With --mknown: draw bridges from this pool and block the known ones.
    #[arg(long, requires = "mknown")]
    mb: Option<usize>,
    #[arg(long, requires = "mb")]
    mknown: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = config::DEFAULT_MIDDLES)]
    middles: usize,
    #[arg(long, default_value_t = config::DEFAULT_EXITS)]
    exits: usize,
}

fn run_e2e(args: &E2eArgs) -> Result<i32, CliError> {
    use rand::RngCore;

    let config: TorConfig = args.variant.parse()?;
    let message = match &args.message_file {
        Some(path) => fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
        None => {
            let mut bytes = vec![0u8; args.size];
            ctor_core::rng::rng_from_seed(args.seed ^ 0x6d65_7373_6167_6500).fill_bytes(&mut bytes);
            bytes
        }
    };
    if message.is_empty() {
        return Err(CliError::Config("message is empty".into()));
    }
    let blocking = match (args.mb, args.mknown) {
        (Some(m_b), Some(m_known)) => Blocking::Scenario { m_b, m_known },
        _ => Blocking::Circuits(args.block.clone()),
    };
    let outcome = ctor_cli::cmd_e2e(&E2eRequest {
        config,
        message,
        blocking,
        seed: args.seed,
        middles: args.middles,
        exits: args.exits,
    })?;
    print!("{}", outcome.report);
    Ok(outcome.exit_code)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Analytic { common, oracle } => ctor_cli::cmd_analytic(&common.resolve()?, oracle).map(|_| 0),
        Command::Simulate { common } => ctor_cli::cmd_simulate(&common.resolve()?).map(|_| 0),
        Command::Fig2 { common } => {
            let mut cfg = common.resolve()?;
            let dir = cfg.out.take().unwrap_or_else(|| PathBuf::from("fig2_out"));
            let (a, s) = ctor_cli::cmd_fig2(&cfg, &dir)?;
            eprintln!("wrote {} and {}", a.display(), s.display());
            Ok(0)
        }
        Command::E2e(args) => run_e2e(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
