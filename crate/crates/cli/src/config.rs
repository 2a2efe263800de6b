//! Experiment configuration.
//!
//! A config file is plain `key = value` lines; `#` starts a comment. Keys:
//!
//! | key                      | value                                   |
//! |--------------------------|-----------------------------------------|
//! | `mb`                     | unknown bridges                         |
//! | `mknown`                 | known bridges, `a` or inclusive `a..b`  |
//! | `variant`                | `otor`, `mtor:<n>`, `ctor:<n>:<r>`; repeat the key or comma-separate |
//! | `trials`                 | Monte Carlo trials per grid point       |
//! | `seed`                   | campaign seed                           |
//! | `out`                    | output path                             |
//! | `full_pipeline_fraction` | share of trials run through the byte pipeline |
//! | `message_len`            | bytes per full-pipeline message         |
//! | `middles`, `exits`       | relay pool sizes                        |
//!
//! Command-line flags override file values.

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;

use ctor_core::TorConfig;

use crate::CliError;

/// Relay pool sizes are not given by the model; these are operational defaults.
pub const DEFAULT_MIDDLES: usize = 50;
pub const DEFAULT_EXITS: usize = 10;

/// Curves of the default sweep: single circuit, uncoded multi-circuit with
/// 4, 5, 8 and 10 circuits, and coded (5, r=2) and (10, r=4).
pub const FIG2_VARIANTS: [&str; 7] = ["otor", "mtor:4", "mtor:5", "mtor:8", "mtor:10", "ctor:5:2", "ctor:10:4"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m_b: u64,
    pub m_known: RangeInclusive<u64>,
    pub variants: Vec<TorConfig>,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub full_pipeline_fraction: f64,
    pub message_len: usize,
    pub middles: usize,
    pub exits: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m_b: 25,
            m_known: 0..=25,
            variants: FIG2_VARIANTS.iter().map(|v| v.parse().unwrap()).collect(),
            trials: 100_000,
            seed: 1,
            out: None,
            full_pipeline_fraction: 0.01,
            message_len: 2048,
            middles: DEFAULT_MIDDLES,
            exits: DEFAULT_EXITS,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.m_known.is_empty() {
            return Err(CliError::Config(format!(
                "empty mknown range {}..{}",
                self.m_known.start(),
                self.m_known.end()
            )));
        }
        if self.variants.is_empty() {
            return Err(CliError::Config("no variants given".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.full_pipeline_fraction) {
            return Err(CliError::Config(format!(
                "full-pipeline fraction {} outside [0, 1]",
                self.full_pipeline_fraction
            )));
        }
        let smallest_pool = self.m_b + self.m_known.start();
        for v in &self.variants {
            v.validate()?;
            if v.n() as u64 > smallest_pool {
                return Err(CliError::Config(format!(
                    "{v} needs {} bridges but the pool can be as small as {smallest_pool}",
                    v.n()
                )));
            }
            if v.n() > self.middles {
                return Err(CliError::Config(format!(
                    "{v} needs {} middle relays, only {} configured",
                    v.n(),
                    self.middles
                )));
            }
        }
        if self.exits == 0 {
            return Err(CliError::Config("at least one exit relay is required".into()));
        }
        Ok(())
    }

    /// Applies every value present in `o`.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.m_b {
            self.m_b = v;
        }
        if let Some(v) = &o.m_known {
            self.m_known = v.clone();
        }
        if let Some(v) = &o.variants {
            self.variants = v.clone();
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = o.full_pipeline_fraction {
            self.full_pipeline_fraction = v;
        }
        if let Some(v) = o.message_len {
            self.message_len = v;
        }
        if let Some(v) = o.middles {
            self.middles = v;
        }
        if let Some(v) = o.exits {
            self.exits = v;
        }
    }
}

/// Partial configuration from a file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub m_b: Option<u64>,
    pub m_known: Option<RangeInclusive<u64>>,
    pub variants: Option<Vec<TorConfig>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub full_pipeline_fraction: Option<f64>,
    pub message_len: Option<usize>,
    pub middles: Option<usize>,
    pub exits: Option<usize>,
}

/// `a` or inclusive `a..b`.
pub fn parse_m_known(s: &str) -> Result<RangeInclusive<u64>, CliError> {
    let num = |p: &str| {
        p.trim()
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("bad mknown value {s:?}")))
    };
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(CliError::Config(format!("empty mknown range {s:?}")));
            }
            Ok(a..=b)
        }
        None => {
            let v = num(s)?;
            Ok(v..=v)
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("bad value {value:?} for {key}")))
}

pub fn parse_config_file(text: &str) -> Result<Overrides, CliError> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "mb" => o.m_b = Some(parse_value(key, value)?),
            "mknown" => o.m_known = Some(parse_m_known(value)?),
            "variant" => {
                let parsed = value
                    .split(',')
                    .map(|v| v.parse::<TorConfig>())
                    .collect::<Result<Vec<_>, _>>()?;
                o.variants.get_or_insert_with(Vec::new).extend(parsed);
            }
            "trials" => o.trials = Some(parse_value(key, value)?),
            "seed" => o.seed = Some(parse_value(key, value)?),
            "out" => o.out = Some(PathBuf::from(value)),
            "full_pipeline_fraction" => o.full_pipeline_fraction = Some(parse_value(key, value)?),
            "message_len" => o.message_len = Some(parse_value(key, value)?),
            "middles" => o.middles = Some(parse_value(key, value)?),
            "exits" => o.exits = Some(parse_value(key, value)?),
            other => {
                return Err(CliError::Config(format!(
                    "line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(o)
}
