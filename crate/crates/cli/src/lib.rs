//! Batch experiments: exact sweeps, Monte Carlo sweeps, the combined
//! figure preset and single end-to-end transfers.

pub mod config;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use ctor_core::analytics::{self, SweepRow};
use ctor_core::censor::{self, CampaignOptions, CensorScenario};
use ctor_core::onion::{self, RouterRegistry};
use ctor_core::{rng, Error as CoreError, TorConfig};

pub use config::{ExperimentConfig, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INTERRUPTED: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Resource(String),
    #[error("oracle disagrees at m_known = {m_known}, {config}: formula {formula}, enumeration {oracle}")]
    OracleMismatch {
        m_known: u64,
        config: TorConfig,
        formula: String,
        oracle: String,
    },
    #[error(transparent)]
    Core(CoreError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Resource { .. } => CliError::Resource(e.to_string()),
            CoreError::Configuration(m) | CoreError::Domain(m) | CoreError::Parameter(m) => CliError::Config(m),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Resource(_) => EXIT_RESOURCE,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Serialize)]
struct AnalyticRecord {
    m_known: u64,
    variant: &'static str,
    n: usize,
    r: usize,
    p_exact_num: String,
    p_exact_den: String,
    p_float: f64,
}

#[derive(Debug, Serialize)]
struct SimulatedRecord {
    m_known: u64,
    variant: &'static str,
    n: usize,
    r: usize,
    p_empirical: f64,
    ci95: f64,
    trials: u64,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRow {
    pub m_known: u64,
    pub config: TorConfig,
    pub p_empirical: f64,
    pub ci95: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Exact rows for the configured grid. With `verify_oracle`, every row is
/// also checked against subset enumeration.
pub fn analytic_rows(cfg: &ExperimentConfig, verify_oracle: bool) -> Result<Vec<SweepRow>, CliError> {
    cfg.validate()?;
    let rows = analytics::sweep(cfg.m_b, cfg.m_known.clone(), &cfg.variants)?;
    if verify_oracle {
        for row in &rows {
            let oracle = analytics::enumerate_oracle(
                cfg.m_b,
                row.m_known,
                row.config.n() as u64,
                row.config.r() as u64,
            )?;
            if oracle != row.probability {
                return Err(CliError::OracleMismatch {
                    m_known: row.m_known,
                    config: row.config,
                    formula: row.probability.to_string(),
                    oracle: oracle.to_string(),
                });
            }
        }
    }
    Ok(rows)
}

/// Monte Carlo rows over the same grid as [`analytic_rows`], in the same order.
pub fn simulated_rows(cfg: &ExperimentConfig) -> Result<Vec<SimulatedRow>, CliError> {
    cfg.validate()?;
    let options = CampaignOptions {
        full_pipeline_fraction: cfg.full_pipeline_fraction,
        message_len: cfg.message_len,
        middles: cfg.middles,
        exits: cfg.exits,
    };
    let mut points: Vec<(u64, TorConfig)> = cfg
        .m_known
        .clone()
        .flat_map(|mk| cfg.variants.iter().map(move |v| (mk, *v)))
        .collect();
    points.sort_by_key(|(mk, c)| (*mk, c.variant, c.n(), c.r()));
    points
        .into_iter()
        .map(|(mk, config)| {
            let scenario = CensorScenario::new(cfg.m_b as usize, mk as usize, config)?;
            let result = censor::run_campaign(&scenario, cfg.trials, cfg.seed, &options)?;
            Ok(SimulatedRow {
                m_known: mk,
                config,
                p_empirical: result.p_empirical,
                ci95: result.ci95,
                trials: result.trials,
                seed: cfg.seed,
            })
        })
        .collect()
}

pub fn write_analytic_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(AnalyticRecord {
            m_known: row.m_known,
            variant: row.config.variant.name(),
            n: row.config.n(),
            r: row.config.r(),
            p_exact_num: row.probability.numerator().to_string(),
            p_exact_den: row.probability.denominator().to_string(),
            p_float: row.probability.to_f64(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_simulated_csv<W: Write>(rows: &[SimulatedRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(SimulatedRecord {
            m_known: row.m_known,
            variant: row.config.variant.name(),
            n: row.config.n(),
            r: row.config.r(),
            p_empirical: row.p_empirical,
            ci95: row.ci95,
            trials: row.trials,
            seed: row.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn with_output<F>(path: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(File::create(p)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(&mut io::stdout().lock()),
    }
}

pub fn cmd_analytic(cfg: &ExperimentConfig, verify_oracle: bool) -> Result<(), CliError> {
    let rows = analytic_rows(cfg, verify_oracle)?;
    with_output(cfg.out.as_deref(), |w| write_analytic_csv(&rows, w))
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let rows = simulated_rows(cfg)?;
    with_output(cfg.out.as_deref(), |w| write_simulated_csv(&rows, w))
}

pub const FIG2_ANALYTIC_CSV: &str = "fig2_analytic.csv";
pub const FIG2_SIMULATED_CSV: &str = "fig2_simulated.csv";

/// Writes the analytic and simulated CSVs for `cfg` into `dir`.
pub fn cmd_fig2(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir)?;
    let analytic = dir.join(FIG2_ANALYTIC_CSV);
    let simulated = dir.join(FIG2_SIMULATED_CSV);
    let rows = analytic_rows(cfg, false)?;
    with_output(Some(&analytic), |w| write_analytic_csv(&rows, w))?;
    let rows = simulated_rows(cfg)?;
    with_output(Some(&simulated), |w| write_simulated_csv(&rows, w))?;
    Ok((analytic, simulated))
}

/// Which circuits an end-to-end run loses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Blocking {
    /// Block these circuit indices.
    Circuits(Vec<usize>),
    /// Draw bridges from a pool of `m_b` unknown and `m_known` known ones
    /// and block the known ones.
    Scenario { m_b: usize, m_known: usize },
}

#[derive(Debug, Clone)]
pub struct E2eRequest {
    pub config: TorConfig,
    pub message: Vec<u8>,
    pub blocking: Blocking,
    pub seed: u64,
    pub middles: usize,
    pub exits: usize,
}

#[derive(Debug, Clone)]
pub struct E2eOutcome {
    pub report: String,
    pub exit_code: i32,
}

pub fn cmd_e2e(req: &E2eRequest) -> Result<E2eOutcome, CliError> {
    req.config.validate()?;
    let n = req.config.n();
    let mut rng = rng::rng_from_seed(req.seed);
    let (registry, bridges, known) = match &req.blocking {
        Blocking::Circuits(_) => {
            let registry = RouterRegistry::generate(n, req.middles, req.exits, req.seed);
            let bridges = registry.bridges().iter().map(|b| b.id).collect::<Vec<_>>();
            (registry, bridges, None)
        }
        Blocking::Scenario { m_b, m_known } => {
            let scenario = CensorScenario::new(*m_b, *m_known, req.config)?;
            let registry = RouterRegistry::generate(scenario.pool.len(), req.middles, req.exits, req.seed);
            let bridges = censor::select_bridges(&scenario.pool, n, &mut rng)?;
            (registry, bridges, Some(scenario.pool))
        }
    };
    let mut circuits = onion::build_circuits(&bridges, &registry, &mut rng)?;
    match (&req.blocking, &known) {
        (Blocking::Circuits(indices), _) => circuits.block_indices(indices)?,
        (_, Some(pool)) => circuits.mark_blocked(|id| pool.is_known(id)),
        _ => unreachable!(),
    }

    let transfer = onion::run_transfer(&req.config, &req.message, &circuits)?;
    let mut report = String::new();
    let _ = writeln!(report, "variant: {}  params: {}", req.config, req.config.params);
    let _ = writeln!(report, "message: {} bytes in {} generation(s)", req.message.len(), transfer.generations);
    for (i, c) in circuits.circuits().iter().enumerate() {
        let _ = writeln!(
            report,
            "circuit {i}: {} -> {} -> {}{}",
            c.entry.id,
            c.middle.id,
            c.exit.id,
            if c.blocked { "  [blocked]" } else { "" }
        );
    }
    for (g, d) in transfer.delivered_per_generation.iter().enumerate() {
        let _ = writeln!(report, "generation {g}: {d}/{n} cells delivered");
    }
    let exit_code = match &transfer.outcome {
        Ok(bytes) => {
            let _ = writeln!(report, "decode: ok");
            let _ = writeln!(report, "bytes identical: {}", bytes == &req.message);
            let _ = writeln!(report, "result: delivered");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(report, "decode: failed ({e})");
            let _ = writeln!(report, "bytes identical: false");
            let _ = writeln!(report, "result: interrupted");
            EXIT_INTERRUPTED
        }
    };
    Ok(E2eOutcome { report, exit_code })
}
