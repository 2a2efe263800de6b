use std::fmt;
use std::str::FromStr;

use crate::codec::CodeParams;
use crate::error::{Error, Result};

/// Transport variant. The derived order (oTor < mTor < cTor) is the sort
/// order used in sweep tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// One circuit, no coding.
    OTor,
    /// `n` circuits, no redundancy.
    MTor,
    /// `n` circuits carrying an (n, k) code with `r >= 1` redundant cells.
    CTor,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::OTor => "otor",
            Variant::MTor => "mtor",
            Variant::CTor => "ctor",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A variant together with its code parameters. All three variants share
/// one pipeline: oTor is (1, 1), mTor is (n, n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorConfig {
    pub variant: Variant,
    pub params: CodeParams,
}

impl TorConfig {
    pub fn otor() -> Self {
        TorConfig {
            variant: Variant::OTor,
            params: CodeParams { n: 1, k: 1, r: 0 },
        }
    }

    pub fn mtor(n: usize) -> Result<Self> {
        let cfg = TorConfig {
            variant: Variant::MTor,
            params: CodeParams { n, k: n, r: 0 },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ctor(n: usize, r: usize) -> Result<Self> {
        if r >= n {
            return Err(Error::Configuration(format!(
                "ctor needs r < n, got n = {n}, r = {r}"
            )));
        }
        let cfg = TorConfig {
            variant: Variant::CTor,
            params: CodeParams { n, k: n - r, r },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn r(&self) -> usize {
        self.params.r
    }

    /// Checks that the parameters fit the variant.
    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| Error::Configuration(e.to_string()))?;
        let CodeParams { n, r, .. } = self.params;
        let ok = match self.variant {
            Variant::OTor => n == 1 && r == 0,
            Variant::MTor => r == 0,
            Variant::CTor => r >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Configuration(format!(
                "{} does not accept parameters {}",
                self.variant, self.params
            )))
        }
    }

    /// Whether a transfer is interrupted when `blocked` circuits are lost.
    pub fn interrupted_by(&self, blocked: usize) -> bool {
        blocked > self.params.r
    }
}

impl fmt::Display for TorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Variant::OTor => write!(f, "otor"),
            Variant::MTor => write!(f, "mtor:{}", self.params.n),
            Variant::CTor => write!(f, "ctor:{}:{}", self.params.n, self.params.r),
        }
    }
}

/// Parses `otor`, `mtor:<n>` or `ctor:<n>:<r>`.
impl FromStr for TorConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| Error::Configuration(format!("bad number {p:?} in variant {s:?}")))
        };
        match parts.as_slice() {
            ["otor"] => Ok(TorConfig::otor()),
            ["mtor", n] => TorConfig::mtor(num(n)?),
            ["ctor", n, r] => TorConfig::ctor(num(n)?, num(r)?),
            _ => Err(Error::Configuration(format!(
                "unknown variant {s:?}; expected otor, mtor:<n> or ctor:<n>:<r>"
            ))),
        }
    }
}
