//! Demand distributions on the bounded support `{0, 1, ..., dbar}`.
//!
//! A [`Pmf`] is a point of the probability simplex over `dbar + 1` levels and
//! its [`Cdf`] provides the β-quantile (the newsvendor order-up-to level) and
//! exact inverse-CDF sampling. [`EmpiricalCounts`] is the frequency histogram
//! an adaptive policy builds from observed demand.
//!
//! Two random generators produce test distributions: [`gen_uniform_simplex`]
//! draws uniformly from the simplex via spacings of sorted uniforms, and
//! [`gen_inseparable`] squeezes the two CDF points straddling β toward β by a
//! factor `1 - gamma`. Both consume exactly `dbar` uniforms from the stream per
//! attempt; an attempt is repeated only on an exact floating-point tie.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A demand level in `{0, ..., dbar}`.
pub type Level = usize;

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability mass function over `{0, ..., dbar}`.
///
/// Serializes as a flat sequence of `dbar + 1` probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates `weights` as a distribution over `{0, ..., dbar}`.
    ///
    /// Entries must be nonnegative and sum to 1 within 1e-9; the stored vector
    /// is renormalized by its sum.
    pub fn new(dbar: usize, weights: Vec<f64>) -> Result<Self> {
        if dbar == 0 {
            return Err(Error::invalid(
                "dbar",
                "maximum demand level must be positive",
            ));
        }
        if weights.len() != dbar + 1 {
            return Err(Error::SupportLength {
                dbar,
                expected: dbar + 1,
                got: weights.len(),
            });
        }
        for (level, &value) in weights.iter().enumerate() {
            if value.is_nan() || value < 0.0 || value.is_infinite() {
                return Err(Error::NegativeProbability { level, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        let probs = if sum == 1.0 {
            weights
        } else {
            weights.into_iter().map(|w| w / sum).collect()
        };
        Ok(Pmf { probs })
    }

    /// All mass on `level`.
    pub fn point_mass(dbar: usize, level: Level) -> Result<Self> {
        if level > dbar {
            return Err(Error::LevelOutOfRange { level, dbar });
        }
        let mut w = vec![0.0; dbar + 1];
        w[level] = 1.0;
        Pmf::new(dbar, w)
    }

    /// Uniform distribution over `{0, ..., dbar}`.
    pub fn uniform(dbar: usize) -> Result<Self> {
        Pmf::new(dbar, vec![1.0 / (dbar + 1) as f64; dbar + 1])
    }

    pub fn dbar(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, level: Level) -> f64 {
        self.probs.get(level).copied().unwrap_or(0.0)
    }

    /// Mass at the top level `dbar`.
    pub fn eps_f(&self) -> f64 {
        self.probs[self.dbar()]
    }

    pub fn cdf(&self) -> Cdf {
        let mut acc = 0.0;
        let mut cum: Vec<f64> = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        // The top level is pinned so that every u in [0, 1) has a preimage.
        *cum.last_mut().expect("support is nonempty") = 1.0;
        Cdf { cum }
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::invalid("pmf", "need at least two demand levels"));
        }
        Pmf::new(weights.len() - 1, weights)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(pmf: Pmf) -> Self {
        pmf.probs
    }
}

/// Cumulative distribution function, `cum[d] = P(D <= d)`, with `cum[dbar] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    cum: Vec<f64>,
}

impl Cdf {
    pub fn dbar(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.cum
    }

    /// `F(d)`, with `F(-1) = 0` reachable through [`Cdf::below`].
    pub fn at(&self, level: Level) -> f64 {
        self.cum[level.min(self.dbar())]
    }

    /// `F(d - 1)`, using the sentinel `F(-1) = 0`.
    pub fn below(&self, level: Level) -> f64 {
        if level == 0 {
            0.0
        } else {
            self.at(level - 1)
        }
    }

    /// Smallest level `d` with `F(d) >= beta`.
    pub fn quantile(&self, beta: f64) -> Level {
        self.cum.partition_point(|&c| c < beta).min(self.dbar())
    }

    /// Inverse-CDF sampling: the unique `d` with `F(d - 1) <= u < F(d)`.
    pub fn sample(&self, u: f64) -> Level {
        self.cum.partition_point(|&c| c <= u).min(self.dbar())
    }
}

/// Frequency histogram of observed demand levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCounts {
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalCounts {
    pub fn new(dbar: usize) -> Self {
        EmpiricalCounts {
            counts: vec![0; dbar + 1],
            n: 0,
        }
    }

    pub fn dbar(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn observe(&mut self, level: Level) -> Result<()> {
        let dbar = self.dbar();
        let slot = self
            .counts
            .get_mut(level)
            .ok_or(Error::LevelOutOfRange { level, dbar })?;
        *slot += 1;
        self.n += 1;
        Ok(())
    }

    /// Empirical distribution `counts[d] / n`.
    pub fn pmf(&self) -> Result<Pmf> {
        if self.n == 0 {
            return Err(Error::NoObservations);
        }
        let n = self.n as f64;
        Pmf::new(
            self.dbar(),
            self.counts.iter().map(|&c| c as f64 / n).collect(),
        )
    }

    /// Empirical CDF, each value computed as the correctly rounded ratio
    /// `(#observations <= d) / n`.
    pub fn cdf(&self) -> Result<Cdf> {
        if self.n == 0 {
            return Err(Error::NoObservations);
        }
        let n = self.n as f64;
        let mut acc = 0u64;
        let cum = self
            .counts
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / n
            })
            .collect();
        Ok(Cdf { cum })
    }

    /// β-quantile of the empirical CDF; same arithmetic as `self.cdf()?.quantile(beta)`
    /// without allocating.
    pub fn quantile(&self, beta: f64) -> Result<Level> {
        if self.n == 0 {
            return Err(Error::NoObservations);
        }
        let n = self.n as f64;
        let mut acc = 0u64;
        for (d, &c) in self.counts.iter().enumerate() {
            acc += c;
            if acc as f64 / n >= beta {
                return Ok(d);
            }
        }
        Ok(self.dbar())
    }
}

/// Spacings of `0 = eta_0 < eta_1 < ... < eta_dbar < eta_{dbar+1} = 1`.
fn spacings(interior: &[f64]) -> Pmf {
    let dbar = interior.len();
    let mut probs = Vec::with_capacity(dbar + 1);
    let mut prev = 0.0;
    for &eta in interior {
        probs.push(eta - prev);
        prev = eta;
    }
    probs.push(1.0 - prev);
    Pmf::new(dbar, probs).expect("spacings of an increasing sequence in [0,1] form a distribution")
}

fn strictly_increasing_in_unit(sorted: &[f64]) -> bool {
    let mut prev = 0.0;
    for &x in sorted {
        if x.is_nan() || x <= prev || x >= 1.0 {
            return false;
        }
        prev = x;
    }
    true
}

/// Draws `dbar` uniforms and sorts them, redrawing the whole tuple on any tie.
fn sorted_uniforms<R: Rng + ?Sized>(rng: &mut R, dbar: usize) -> Vec<f64> {
    let mut xi = vec![0.0; dbar];
    loop {
        for x in xi.iter_mut() {
            *x = rng.random::<f64>();
        }
        xi.sort_by(f64::total_cmp);
        if strictly_increasing_in_unit(&xi) {
            return xi;
        }
    }
}

/// Uniform draw from the simplex over `{0, ..., dbar}`.
pub fn gen_uniform_simplex<R: Rng + ?Sized>(rng: &mut R, dbar: usize) -> Result<Pmf> {
    if dbar == 0 {
        return Err(Error::invalid(
            "dbar",
            "maximum demand level must be positive",
        ));
    }
    Ok(spacings(&sorted_uniforms(rng, dbar)))
}

/// Random distribution whose CDF points nearest β are pulled toward β.
///
/// With `gamma = 0` the output equals [`gen_uniform_simplex`] for the same draws.
pub fn gen_inseparable<R: Rng + ?Sized>(
    rng: &mut R,
    dbar: usize,
    beta: f64,
    gamma: f64,
) -> Result<Pmf> {
    if dbar == 0 {
        return Err(Error::invalid(
            "dbar",
            "maximum demand level must be positive",
        ));
    }
    check_beta(beta)?;
    check_gamma(gamma)?;
    loop {
        let xi = sorted_uniforms(rng, dbar);
        if xi.contains(&beta) {
            continue;
        }
        return inseparable_from_draws(&xi, beta, gamma);
    }
}

/// Deterministic core of [`gen_inseparable`] for a given set of uniforms
/// (any order). Used to replay draws.
pub fn inseparable_from_draws(draws: &[f64], beta: f64, gamma: f64) -> Result<Pmf> {
    if draws.is_empty() {
        return Err(Error::Empty);
    }
    check_beta(beta)?;
    check_gamma(gamma)?;
    let mut xi = draws.to_vec();
    xi.sort_by(f64::total_cmp);
    if !strictly_increasing_in_unit(&xi) {
        return Err(Error::invalid(
            "draws",
            "uniforms must be distinct and lie in (0, 1)",
        ));
    }
    if xi.contains(&beta) {
        return Err(Error::invalid("draws", "a uniform coincides with beta"));
    }
    // Number of draws below beta; the straddle is xi[below - 1] < beta < xi[below].
    let below = xi.partition_point(|&x| x < beta);
    let mut eta = xi.clone();
    if below > 0 {
        let lo = xi[below - 1];
        let pull = gamma * (beta - lo) / lo;
        for e in &mut eta[..below] {
            *e += pull * *e;
        }
    }
    if below < xi.len() {
        let hi = xi[below];
        let pull = gamma * (hi - beta) / (1.0 - hi);
        for e in &mut eta[below..] {
            *e -= pull * (1.0 - *e);
        }
    }
    Ok(spacings(&eta))
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("beta", format!("{beta} is not in (0, 1)")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::invalid("gamma", format!("{gamma} is not in [0, 1)")))
    }
}
