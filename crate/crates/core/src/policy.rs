//! Adaptive ordering policies as stepwise state machines.
//!
//! Every policy produces an unconstrained target `ŷ_t` and orders up to
//! `y_t = max(ŷ_t, y_{t-1} - d_{t-1})`, since leftover stock cannot be
//! disposed of. All policies order nothing in period 1.
//!
//! * [`PolicyKind::Newsvendor`]: `ŷ_t` is the β-quantile of the empirical
//!   demand distribution of periods `1..t-1`.
//! * [`PolicyKind::StochasticApprox`]: a projected subgradient iterate `ẑ_t`
//!   in `[0, dbar]`, randomly rounded to a neighbouring integer.
//! * [`PolicyKind::UpDown`]: `ŷ_t` moves one unit up or down with
//!   probabilities proportional to the step size.
//! * [`PolicyKind::Oracle`]: the constant `y*` of the true distribution.
//!
//! Randomized policies draw exactly one uniform from their stream in every
//! period `t >= 2` (whether or not it ends up deciding anything), so two
//! runs fed the same stream stay aligned period by period.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{optimal_order, CostParams};
use crate::demand::{EmpiricalCounts, Level, Pmf};
use crate::error::{Error, Result};

/// Identifier of an ordering policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "newsvendor")]
    Newsvendor,
    #[serde(rename = "sa")]
    StochasticApprox,
    #[serde(rename = "updown")]
    UpDown,
    #[serde(rename = "oracle")]
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Newsvendor,
        PolicyKind::StochasticApprox,
        PolicyKind::UpDown,
        PolicyKind::Oracle,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PolicyKind::Newsvendor => "newsvendor",
            PolicyKind::StochasticApprox => "sa",
            PolicyKind::UpDown => "updown",
            PolicyKind::Oracle => "oracle",
        }
    }

    /// Small stable integer used when deriving per-policy random streams.
    pub fn code(self) -> u64 {
        match self {
            PolicyKind::Newsvendor => 0,
            PolicyKind::StochasticApprox => 1,
            PolicyKind::UpDown => 2,
            PolicyKind::Oracle => 3,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "policy",
                    format!("unknown policy '{s}' (expected newsvendor, sa, updown or oracle)"),
                )
            })
    }
}

/// Step sizes `eps_t = dbar / (max(h, b) * sqrt(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeSchedule {
    dbar: usize,
    h: f64,
    b: f64,
}

impl StepSizeSchedule {
    pub fn new(dbar: usize, params: &CostParams) -> Self {
        StepSizeSchedule {
            dbar,
            h: params.h(),
            b: params.b(),
        }
    }

    /// `eps_t` for `t >= 1`.
    pub fn step_size(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        self.dbar as f64 / (self.h.max(self.b) * (t as f64).sqrt())
    }
}

/// Orders emitted for one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Order {
    /// Unconstrained target `ŷ_t`.
    pub base: Level,
    /// Order-up-to level `y_t`.
    pub level: Level,
}

/// `max(base, y_prev - d_prev)`, with the carried stock floored at zero.
#[inline]
pub fn carry_over_order(base: Level, y_prev: Level, d_prev: Level) -> Level {
    base.max(y_prev.saturating_sub(d_prev))
}

#[derive(Debug, Clone)]
enum Rule {
    Newsvendor { counts: EmpiricalCounts },
    StochasticApprox { schedule: StepSizeSchedule, z: f64 },
    UpDown { schedule: StepSizeSchedule },
    Oracle { level: Level },
}

/// Single-owner state of one policy on one demand path.
#[derive(Debug, Clone)]
pub struct PolicyState {
    kind: PolicyKind,
    params: CostParams,
    dbar: usize,
    rule: Rule,
    /// Last emitted period; 0 before the first step.
    t: usize,
    base_prev: Level,
    y_prev: Level,
}

impl PolicyState {
    /// Fresh state. `truth` is consulted only by [`PolicyKind::Oracle`].
    pub fn new(kind: PolicyKind, params: CostParams, truth: &Pmf) -> Self {
        let dbar = truth.dbar();
        let schedule = StepSizeSchedule::new(dbar, &params);
        let rule = match kind {
            PolicyKind::Newsvendor => Rule::Newsvendor {
                counts: EmpiricalCounts::new(dbar),
            },
            PolicyKind::StochasticApprox => Rule::StochasticApprox { schedule, z: 0.0 },
            PolicyKind::UpDown => Rule::UpDown { schedule },
            PolicyKind::Oracle => Rule::Oracle {
                level: optimal_order(&params, truth).0,
            },
        };
        PolicyState {
            kind,
            params,
            dbar,
            rule,
            t: 0,
            base_prev: 0,
            y_prev: 0,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// Index of the last emitted period (0 before the first step).
    pub fn period(&self) -> usize {
        self.t
    }

    /// Current auxiliary iterate of the stochastic-approximation policy.
    pub fn sa_iterate(&self) -> Option<f64> {
        match self.rule {
            Rule::StochasticApprox { z, .. } => Some(z),
            _ => None,
        }
    }

    pub fn empirical(&self) -> Option<&EmpiricalCounts> {
        match &self.rule {
            Rule::Newsvendor { counts } => Some(counts),
            _ => None,
        }
    }

    /// Advances one period. `d_prev` is the demand of the previous period and
    /// must be `None` exactly in period 1.
    pub fn step<R: Rng + ?Sized>(&mut self, d_prev: Option<Level>, rng: &mut R) -> Result<Order> {
        let t = self.t + 1;
        let order = match d_prev {
            None if t == 1 => {
                let base = match self.rule {
                    Rule::Oracle { level } => level,
                    _ => 0,
                };
                Order { base, level: base }
            }
            None => return Err(Error::MissingDemand { t }),
            Some(_) if t == 1 => {
                return Err(Error::invalid("d_prev", "period 1 has no previous demand"));
            }
            Some(d) => {
                if d > self.dbar {
                    return Err(Error::LevelOutOfRange {
                        level: d,
                        dbar: self.dbar,
                    });
                }
                let base = self.next_base(t, d, rng)?;
                Order {
                    base,
                    level: carry_over_order(base, self.y_prev, d),
                }
            }
        };
        self.t = t;
        self.base_prev = order.base;
        self.y_prev = order.level;
        Ok(order)
    }

    fn next_base<R: Rng + ?Sized>(&mut self, t: usize, d: Level, rng: &mut R) -> Result<Level> {
        let (h, b) = (self.params.h(), self.params.b());
        let beta = self.params.beta();
        let (dbar, base_prev, y_prev) = (self.dbar, self.base_prev, self.y_prev);
        match &mut self.rule {
            Rule::Newsvendor { counts } => {
                counts.observe(d)?;
                counts.quantile(beta)
            }
            Rule::StochasticApprox { schedule, z } => {
                let eps = schedule.step_size(t - 1);
                *z = sa_update(*z, base_prev, y_prev, d, h, b, eps, dbar);
                let u: f64 = rng.random();
                Ok(randomized_round(*z, u))
            }
            Rule::UpDown { schedule } => {
                let eps = schedule.step_size(t - 1);
                let u: f64 = rng.random();
                Ok(up_down_move(base_prev, y_prev, d, h, b, eps, dbar, u))
            }
            Rule::Oracle { level } => Ok(*level),
        }
    }
}

/// Subgradient step of the auxiliary iterate, projected onto `[0, dbar]`.
///
/// The iterate moves down by `h * eps` when the previous period ended with
/// stock left over relative to the rounded target, and up by `b * eps`
/// otherwise. Which side counts as "left over" depends on whether the previous
/// target was the floor or the ceiling of the previous iterate.
#[allow(clippy::too_many_arguments)]
pub fn sa_update(
    z: f64,
    base_prev: Level,
    y_prev: Level,
    d_prev: Level,
    h: f64,
    b: f64,
    eps: f64,
    dbar: usize,
) -> f64 {
    let at_floor = base_prev as f64 == z.floor();
    let decrease = if at_floor {
        d_prev <= y_prev
    } else {
        d_prev < y_prev
    };
    let moved = if decrease { z - h * eps } else { z + b * eps };
    moved.clamp(0.0, dbar as f64)
}

/// Rounds `z` down with probability `ceil(z) - z`, else up; `u` is uniform on `[0, 1)`.
#[inline]
pub fn randomized_round(z: f64, u: f64) -> Level {
    let (lo, hi) = (z.floor(), z.ceil());
    let chosen = if u < hi - z { lo } else { hi };
    chosen as Level
}

/// One up-and-down move with probabilities clamped at 1 and the result kept in `[0, dbar]`.
#[allow(clippy::too_many_arguments)]
pub fn up_down_move(
    base_prev: Level,
    y_prev: Level,
    d_prev: Level,
    h: f64,
    b: f64,
    eps: f64,
    dbar: usize,
    u: f64,
) -> Level {
    let (delta, p): (i64, f64) = if d_prev < y_prev {
        (-1, h * eps)
    } else if d_prev > y_prev {
        (1, b * eps)
    } else {
        let sign = if h > b {
            1
        } else if h < b {
            -1
        } else {
            0
        };
        (-sign, (h - b).abs() * eps / 2.0)
    };
    if delta != 0 && u < p.min(1.0) {
        (base_prev as i64 + delta).clamp(0, dbar as i64) as Level
    } else {
        base_prev
    }
}

/// Constant newsvendor level of the true distribution.
pub fn oracle_level(pmf: &Pmf, params: &CostParams) -> Level {
    optimal_order(params, pmf).0
}
