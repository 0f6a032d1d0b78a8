//! Newsvendor costs: realized stage costs, the one-period expected cost
//! `Q_f(y)`, the optimal order-up-to level, pathwise regret traces, and the
//! split of expected regret into a learning part and a carry-over part.
//!
//! The same code path serves the backlogging and lost-sales cases; only the
//! interpretation of `b` differs.

use serde::{Deserialize, Serialize};

use crate::demand::{Level, Pmf};
use crate::error::{Error, Result};

/// Holding cost `h` and shortage cost `b`, both per unit per period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    h: f64,
    b: f64,
}

impl CostParams {
    pub fn new(h: f64, b: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(
                "h",
                format!("holding cost must be positive, got {h}"),
            ));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(
                "b",
                format!("shortage cost must be positive, got {b}"),
            ));
        }
        Ok(CostParams { h, b })
    }

    /// Splits `h + b` according to the critical quantile: `b = beta * (h + b)`.
    pub fn from_beta(h_plus_b: f64, beta: f64) -> Result<Self> {
        if !(h_plus_b > 0.0 && h_plus_b.is_finite()) {
            return Err(Error::invalid(
                "h_plus_b",
                format!("must be positive, got {h_plus_b}"),
            ));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::invalid("beta", format!("{beta} is not in (0, 1)")));
        }
        CostParams::new((1.0 - beta) * h_plus_b, beta * h_plus_b)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Critical quantile `b / (h + b)`.
    pub fn beta(&self) -> f64 {
        self.b / (self.h + self.b)
    }

    /// `h (y - d)^+ + b (d - y)^+`.
    #[inline]
    pub fn stage_cost(&self, y: Level, d: Level) -> f64 {
        if y >= d {
            self.h * (y - d) as f64
        } else {
            self.b * (d - y) as f64
        }
    }
}

/// `Q_f(y) = h * sum_{d<y} F(d) + b * sum_{d=y}^{dbar-1} (1 - F(d))`.
pub fn one_period_cost(params: &CostParams, pmf: &Pmf, y: Level) -> Result<f64> {
    let dbar = pmf.dbar();
    if y > dbar {
        return Err(Error::LevelOutOfRange { level: y, dbar });
    }
    let cdf = pmf.cdf();
    let cum = cdf.values();
    let over: f64 = cum[..y].iter().sum();
    let under: f64 = cum[y..dbar].iter().map(|c| 1.0 - c).sum();
    Ok(params.h() * over + params.b() * under)
}

/// `Q_f(y)` for every `y` in `0..=dbar`.
pub fn cost_table(params: &CostParams, pmf: &Pmf) -> Vec<f64> {
    (0..=pmf.dbar())
        .map(|y| one_period_cost(params, pmf, y).expect("level within support"))
        .collect()
}

/// Newsvendor level `y* = F^{-1}(beta)` and its cost `Q*`.
///
/// When several levels attain the minimum, the β-quantile (the smallest) is
/// returned.
pub fn optimal_order(params: &CostParams, pmf: &Pmf) -> (Level, f64) {
    let y = pmf.cdf().quantile(params.beta());
    let q = one_period_cost(params, pmf, y).expect("quantile lies within support");
    (y, q)
}

/// Realized costs of a policy and of the constant optimal order on one demand path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Cumulative realized cost of the policy through each period.
    pub policy_cost: Vec<f64>,
    /// Cumulative realized cost of ordering up to `y*` every period.
    pub oracle_cost: Vec<f64>,
    /// `policy_cost[t] - oracle_cost[t]`.
    pub regret: Vec<f64>,
    /// Unconstrained target `ŷ_t` per period.
    pub base_orders: Vec<Level>,
    /// Order-up-to level `y_t` actually used.
    pub orders: Vec<Level>,
}

impl PathResult {
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }
}

/// Pathwise regret of `orders` against the optimal constant order, on the same demand.
///
/// The base-order trace is set to `orders`; use [`regret_trace_with_base`] when
/// the policy's unconstrained targets are known.
pub fn regret_trace(
    params: &CostParams,
    pmf: &Pmf,
    demands: &[Level],
    orders: &[Level],
) -> Result<PathResult> {
    regret_trace_with_base(params, pmf, demands, orders, orders)
}

pub fn regret_trace_with_base(
    params: &CostParams,
    pmf: &Pmf,
    demands: &[Level],
    base_orders: &[Level],
    orders: &[Level],
) -> Result<PathResult> {
    if demands.len() != orders.len() {
        return Err(Error::LengthMismatch {
            left: demands.len(),
            right: orders.len(),
        });
    }
    if base_orders.len() != orders.len() {
        return Err(Error::LengthMismatch {
            left: base_orders.len(),
            right: orders.len(),
        });
    }
    let (oracle, _) = optimal_order(params, pmf);
    let n = demands.len();
    let mut out = PathResult {
        policy_cost: Vec::with_capacity(n),
        oracle_cost: Vec::with_capacity(n),
        regret: Vec::with_capacity(n),
        base_orders: base_orders.to_vec(),
        orders: orders.to_vec(),
    };
    let mut acc = RegretAccumulator::default();
    for (&d, &y) in demands.iter().zip(orders) {
        acc.record(params, y, oracle, d);
        out.policy_cost.push(acc.policy);
        out.oracle_cost.push(acc.oracle);
        out.regret.push(acc.regret());
    }
    Ok(out)
}

/// Running cumulative costs; shared by full traces and checkpoint-only simulation
/// so both produce bitwise-identical regrets.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RegretAccumulator {
    pub policy: f64,
    pub oracle: f64,
}

impl RegretAccumulator {
    #[inline]
    pub fn record(&mut self, params: &CostParams, y: Level, oracle: Level, d: Level) {
        self.policy += params.stage_cost(y, d);
        self.oracle += params.stage_cost(oracle, d);
    }

    #[inline]
    pub fn regret(&self) -> f64 {
        self.policy - self.oracle
    }
}

/// Expected-cost split of regret for given target and order sequences:
/// `(sum_t Q(ŷ_t) - T Q*, sum_t [Q(y_t) - Q(ŷ_t)])`.
///
/// Requires the true distribution, so it is a diagnostic only.
pub fn decompose_regret(
    params: &CostParams,
    pmf: &Pmf,
    base_orders: &[Level],
    orders: &[Level],
) -> Result<(f64, f64)> {
    if base_orders.len() != orders.len() {
        return Err(Error::LengthMismatch {
            left: base_orders.len(),
            right: orders.len(),
        });
    }
    let dbar = pmf.dbar();
    if let Some(&level) = base_orders.iter().chain(orders).find(|&&y| y > dbar) {
        return Err(Error::LevelOutOfRange { level, dbar });
    }
    let q = cost_table(params, pmf);
    let (_, q_star) = optimal_order(params, pmf);
    let learning: f64 =
        base_orders.iter().map(|&y| q[y]).sum::<f64>() - base_orders.len() as f64 * q_star;
    let carry_over: f64 = base_orders
        .iter()
        .zip(orders)
        .map(|(&yh, &y)| q[y] - q[yh])
        .sum();
    Ok((learning, carry_over))
}
