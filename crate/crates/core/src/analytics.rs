//! Closed-form censorship-success probabilities and a brute-force oracle.
//!
//! A client picks `n` of `M_b + M'_b` bridges uniformly; `M'_b` of them are
//! known to the censor. With `i` known bridges chosen, the transfer is
//! interrupted when `i > threshold`, where the threshold is 0 for plain
//! (oTor/mTor) transport and `r` for coded transport:
//!
//! ```text
//! P = sum_{i = threshold+1}^{min(n, M'_b)} C(M_b, n-i) C(M'_b, i) / C(M_b + M'_b, n)
//! ```
//!
//! Every function is generic over [`Scalar`]; the `ExactProbability`
//! wrappers evaluate in arbitrary-precision rationals.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{from_count, Scalar};
use crate::variant::TorConfig;

/// Largest number of subsets [`enumerate_oracle`] will visit.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// Exact binomial coefficient; zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigUint::one();
    for i in 1..=b {
        // acc * (a - b + i) is divisible by i at every step.
        acc = acc * BigUint::from(a - b + i) / BigUint::from(i);
    }
    acc
}

/// Binomial coefficient evaluated in `T`.
pub fn binomial_in<T: Scalar>(a: u64, b: u64) -> T {
    if b > a {
        return T::zero();
    }
    let b = b.min(a - b);
    (1..=b).fold(T::one(), |acc, i| acc * from_count::<T>(a - b + i) / from_count::<T>(i))
}

/// Probability that more than `threshold` of `n` bridges drawn from
/// `m_b + m_known` are known to the censor. No precondition checks.
pub fn blocking_probability<T: Scalar>(m_b: u64, m_known: u64, n: u64, threshold: u64) -> T {
    let total = binomial_in::<T>(m_b + m_known, n);
    let upper = n.min(m_known);
    let mut hits = T::zero();
    for i in (threshold + 1)..=upper {
        hits = hits + binomial_in::<T>(m_b, n - i) * binomial_in::<T>(m_known, i);
    }
    hits / total
}

fn check_selection(m_b: u64, m_known: u64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if n > m_b + m_known {
        return Err(Error::Domain(format!(
            "cannot select {n} bridges from a pool of {}",
            m_b + m_known
        )));
    }
    Ok(())
}

/// Interruption probability without coding (oTor/mTor), in `T`.
pub fn p_block_plain_in<T: Scalar>(m_b: u64, m_known: u64, n: u64) -> Result<T> {
    check_selection(m_b, m_known, n)?;
    Ok(blocking_probability(m_b, m_known, n, 0))
}

/// Interruption probability with `r` redundant circuits (cTor), in `T`.
pub fn p_block_lnc_in<T: Scalar>(m_b: u64, m_known: u64, n: u64, r: u64) -> Result<T> {
    check_selection(m_b, m_known, n)?;
    if r >= n {
        return Err(Error::Domain(format!("redundancy r = {r} must be below n = {n}")));
    }
    Ok(blocking_probability(m_b, m_known, n, r))
}

/// `1 - C(m_b, n) / C(m_b + m_known, n)`: the plain probability via the
/// complement event "no known bridge chosen".
pub fn p_block_complement_in<T: Scalar>(m_b: u64, m_known: u64, n: u64) -> Result<T> {
    check_selection(m_b, m_known, n)?;
    Ok(T::one() - binomial_in::<T>(m_b, n) / binomial_in::<T>(m_b + m_known, n))
}

/// A probability held as a reduced fraction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProbability(BigRational);

impl ExactProbability {
    pub fn new(numerator: BigUint, denominator: BigUint) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        if numerator > denominator {
            return Err(Error::Domain("probability above one".into()));
        }
        Ok(ExactProbability(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        )))
    }

    pub fn zero() -> Self {
        ExactProbability(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactProbability(BigRational::one())
    }

    pub fn numerator(&self) -> BigUint {
        self.0.numer().to_biguint().expect("probability is non-negative")
    }

    pub fn denominator(&self) -> BigUint {
        self.0.denom().to_biguint().expect("denominator is positive")
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("ratio of finite integers")
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl From<BigRational> for ExactProbability {
    fn from(value: BigRational) -> Self {
        debug_assert!(value >= BigRational::zero() && value <= BigRational::one());
        ExactProbability(value)
    }
}

impl fmt::Display for ExactProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

pub fn p_block_plain(m_b: u64, m_known: u64, n: u64) -> Result<ExactProbability> {
    p_block_plain_in::<BigRational>(m_b, m_known, n).map(ExactProbability)
}

pub fn p_block_lnc(m_b: u64, m_known: u64, n: u64, r: u64) -> Result<ExactProbability> {
    p_block_lnc_in::<BigRational>(m_b, m_known, n, r).map(ExactProbability)
}

pub fn p_block_complement(m_b: u64, m_known: u64, n: u64) -> Result<ExactProbability> {
    p_block_complement_in::<BigRational>(m_b, m_known, n).map(ExactProbability)
}

/// Interruption probability for a transport configuration.
pub fn p_block(config: &TorConfig, m_b: u64, m_known: u64) -> Result<ExactProbability> {
    p_block_lnc(m_b, m_known, config.n() as u64, config.r() as u64)
}

/// Counts, over every `n`-subset of a labelled pool of `m_b` unknown and
/// `m_known` known bridges, how many subsets contain exactly `i` known
/// bridges. Index `i` of the result holds that count.
pub fn enumerate_known_counts(m_b: u64, m_known: u64, n: u64) -> Result<Vec<u64>> {
    let pool = m_b + m_known;
    if n > pool {
        return Err(Error::Domain(format!("cannot select {n} bridges from {pool}")));
    }
    let subsets = binomial(pool, n);
    if subsets > BigUint::from(ENUMERATION_LIMIT) {
        return Err(Error::Resource {
            requested: subsets.to_u128().unwrap_or(u128::MAX),
            limit: ENUMERATION_LIMIT as u128,
        });
    }
    let (pool, n) = (pool as usize, n as usize);
    let is_known = |label: usize| label < m_known as usize;
    let mut histogram = vec![0u64; n + 1];

    // Lexicographic walk over index tuples idx[0] < ... < idx[n-1].
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        histogram[idx.iter().filter(|&&l| is_known(l)).count()] += 1;
        let Some(pos) = (0..n).rev().find(|&p| idx[p] < pool - n + p) else {
            break;
        };
        idx[pos] += 1;
        for p in pos + 1..n {
            idx[p] = idx[p - 1] + 1;
        }
    }
    Ok(histogram)
}

/// Brute-force probability that more than `threshold` chosen bridges are
/// known. `threshold = 0` reproduces [`p_block_plain`], `threshold = r`
/// reproduces [`p_block_lnc`].
pub fn enumerate_oracle(m_b: u64, m_known: u64, n: u64, threshold: u64) -> Result<ExactProbability> {
    let histogram = enumerate_known_counts(m_b, m_known, n)?;
    let total: u64 = histogram.iter().sum();
    let hits: u64 = histogram.iter().skip(threshold as usize + 1).sum();
    ExactProbability::new(BigUint::from(hits), BigUint::from(total))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub m_known: u64,
    pub config: TorConfig,
    pub probability: ExactProbability,
}

/// Exact probabilities for every (known-bridge count, configuration) pair,
/// sorted by (m_known, variant, n, r).
pub fn sweep(m_b: u64, m_known: RangeInclusive<u64>, configs: &[TorConfig]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(configs.len() * m_known.clone().count());
    for mk in m_known {
        for config in configs {
            config.validate()?;
            rows.push(SweepRow {
                m_known: mk,
                config: *config,
                probability: p_block(config, m_b, mk)?,
            });
        }
    }
    rows.sort_by_key(|row| (row.m_known, row.config.variant, row.config.n(), row.config.r()));
    Ok(rows)
}
