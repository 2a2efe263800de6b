//! Bridge pools, the censor's knowledge, and Monte Carlo blocking trials.

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::onion::{self, RouterId, RouterRegistry};
use crate::rng::{self, SimRng};
use crate::variant::TorConfig;

/// Trials per independently seeded block in [`run_campaign`].
pub const TRIALS_PER_BLOCK: u64 = 4096;

/// `M_b` unknown bridges with ids `0..M_b` followed by `M'_b` bridges known
/// to the censor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgePool {
    unknown: Vec<RouterId>,
    known: Vec<RouterId>,
}

impl BridgePool {
    pub fn new(m_b: usize, m_known: usize) -> Self {
        let unknown = (0..m_b as u32).map(RouterId).collect();
        let known = (m_b as u32..(m_b + m_known) as u32).map(RouterId).collect();
        BridgePool { unknown, known }
    }

    pub fn unknown(&self) -> &[RouterId] {
        &self.unknown
    }

    pub fn known(&self) -> &[RouterId] {
        &self.known
    }

    pub fn len(&self) -> usize {
        self.unknown.len() + self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every bridge, in id order. The client sees no difference between them.
    pub fn all(&self) -> Vec<RouterId> {
        self.unknown.iter().chain(&self.known).copied().collect()
    }

    pub fn is_known(&self, id: RouterId) -> bool {
        self.known.binary_search(&id).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensorScenario {
    pub pool: BridgePool,
    pub config: TorConfig,
}

impl CensorScenario {
    pub fn new(m_b: usize, m_known: usize, config: TorConfig) -> Result<Self> {
        let scenario = CensorScenario {
            pool: BridgePool::new(m_b, m_known),
            config,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.config.n() > self.pool.len() {
            return Err(Error::Domain(format!(
                "{} circuits need more bridges than the pool's {}",
                self.config.n(),
                self.pool.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub chosen_bridges: Vec<RouterId>,
    /// Chosen bridges that the censor knows, i.e. blocked circuits.
    pub blocked_count: usize,
    pub interrupted: bool,
    /// Whether the byte-level transfer ran and cross-checked this trial.
    pub pipeline_checked: bool,
}

/// Uniform sample of `n` distinct bridges from the whole pool.
pub fn select_bridges(pool: &BridgePool, n: usize, rng: &mut SimRng) -> Result<Vec<RouterId>> {
    if n > pool.len() {
        return Err(Error::Domain(format!(
            "cannot select {n} bridges from a pool of {}",
            pool.len()
        )));
    }
    Ok(rng::sample_without_replacement(rng, &pool.all(), n))
}

/// One trial. With `message`, the full encode/transmit/decode pipeline runs
/// and must agree with the blocked-count rule; without it only the rule is
/// evaluated.
pub fn run_trial(
    scenario: &CensorScenario,
    registry: &RouterRegistry,
    message: Option<&[u8]>,
    rng: &mut SimRng,
) -> Result<TrialOutcome> {
    let chosen_bridges = select_bridges(&scenario.pool, scenario.config.n(), rng)?;
    let blocked_count = chosen_bridges
        .iter()
        .filter(|id| scenario.pool.is_known(**id))
        .count();
    let interrupted = scenario.config.interrupted_by(blocked_count);

    let Some(message) = message else {
        return Ok(TrialOutcome {
            chosen_bridges,
            blocked_count,
            interrupted,
            pipeline_checked: false,
        });
    };

    let mut circuits = onion::build_circuits(&chosen_bridges, registry, rng)?;
    circuits.mark_blocked(|entry| scenario.pool.is_known(entry));
    debug_assert_eq!(circuits.blocked_count(), blocked_count);
    let report = onion::run_transfer(&scenario.config, message, &circuits)?;
    if report.success() == interrupted {
        return Err(Error::Consistency {
            trial: 0,
            rule: interrupted,
            pipeline: !report.success(),
        });
    }
    Ok(TrialOutcome {
        chosen_bridges,
        blocked_count,
        interrupted,
        pipeline_checked: true,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOptions {
    /// Share of trials that run the byte pipeline, in `[0, 1]`.
    pub full_pipeline_fraction: f64,
    /// Message size for full-pipeline trials.
    pub message_len: usize,
    pub middles: usize,
    pub exits: usize,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            full_pipeline_fraction: 0.01,
            message_len: 2048,
            middles: 50,
            exits: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub trials: u64,
    pub interrupted: u64,
    pub full_pipeline_trials: u64,
    pub p_empirical: f64,
    /// Normal-approximation 95% half-width, `1.96 sqrt(p(1-p)/trials)`.
    pub ci95: f64,
}

impl CampaignResult {
    /// Binomial standard deviation of the estimate at probability `p`.
    pub fn std_dev_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

fn runs_full_pipeline(trial: u64, fraction: f64) -> bool {
    ((trial + 1) as f64 * fraction).floor() > (trial as f64 * fraction).floor()
}

/// `trials` independent trials. Trials are split into blocks of
/// [`TRIALS_PER_BLOCK`]; block `b` draws from stream `b + 1` of `seed`, so the
/// result depends only on the inputs, never on the thread count.
pub fn run_campaign(
    scenario: &CensorScenario,
    trials: u64,
    seed: u64,
    options: &CampaignOptions,
) -> Result<CampaignResult> {
    scenario.validate()?;
    if trials == 0 {
        return Err(Error::Domain("a campaign needs at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&options.full_pipeline_fraction) {
        return Err(Error::Configuration(format!(
            "full-pipeline fraction {} outside [0, 1]",
            options.full_pipeline_fraction
        )));
    }
    if options.full_pipeline_fraction > 0.0 && options.message_len == 0 {
        return Err(Error::Configuration("full-pipeline trials need a nonempty message".into()));
    }
    let registry = RouterRegistry::generate(scenario.pool.len(), options.middles, options.exits, seed);

    let blocks = trials.div_ceil(TRIALS_PER_BLOCK);
    let per_block = (0..blocks)
        .into_par_iter()
        .map(|block| -> Result<(u64, u64)> {
            let mut rng = rng::substream(seed, block + 1);
            let start = block * TRIALS_PER_BLOCK;
            let end = (start + TRIALS_PER_BLOCK).min(trials);
            let (mut interrupted, mut full) = (0u64, 0u64);
            let mut message = vec![0u8; options.message_len];
            for trial in start..end {
                let outcome = if runs_full_pipeline(trial, options.full_pipeline_fraction) {
                    rng.fill_bytes(&mut message);
                    full += 1;
                    run_trial(scenario, &registry, Some(&message), &mut rng)
                } else {
                    run_trial(scenario, &registry, None, &mut rng)
                }
                .map_err(|e| match e {
                    Error::Consistency { rule, pipeline, .. } => Error::Consistency { trial, rule, pipeline },
                    other => other,
                })?;
                interrupted += u64::from(outcome.interrupted);
            }
            Ok((interrupted, full))
        })
        .collect::<Result<Vec<_>>>()?;

    let interrupted: u64 = per_block.iter().map(|(i, _)| i).sum();
    let full_pipeline_trials: u64 = per_block.iter().map(|(_, f)| f).sum();
    let p = interrupted as f64 / trials as f64;
    Ok(CampaignResult {
        trials,
        interrupted,
        full_pipeline_trials,
        p_empirical: p,
        ci95: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
    })
}
