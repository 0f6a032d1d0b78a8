//! Monte Carlo experiment engine.
//!
//! An experiment samples `K` demand distributions, simulates every policy on
//! `L` demand paths of length `T` per distribution, and averages the realized
//! regret over paths. For each policy, checkpoint `t`, and tail level `alpha`
//! it reports the conditional value at risk `R` of the `K` mean regrets and
//! the mean separation `D` of the distributions that make up that tail.
//!
//! All policies in one `(k, l)` cell see the same precomputed demand path
//! (common random numbers). Cells run in parallel; their results are reduced
//! in fixed index order, so the surface is a pure function of the config.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::SeparationProfile;
use crate::cost::{
    optimal_order, regret_trace_with_base, CostParams, PathResult, RegretAccumulator,
};
use crate::demand::{gen_inseparable, Cdf, Level, Pmf};
use crate::error::{Error, Result};
use crate::numfmt::format_float;
use crate::policy::{PolicyKind, PolicyState};
use crate::rng::{stream, StreamPurpose};

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dbar: usize,
    pub h_plus_b: f64,
    pub beta: f64,
    /// Number of sampled distributions.
    #[serde(rename = "K")]
    pub num_distributions: usize,
    /// Demand paths per distribution.
    #[serde(rename = "L")]
    pub num_paths: usize,
    /// Horizon in periods.
    #[serde(rename = "T")]
    pub horizon: usize,
    pub alphas: Vec<f64>,
    pub gamma_insep: f64,
    pub policies: Vec<PolicyKind>,
    pub seed: u64,
    pub checkpoints: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let horizon = 10_000;
        ExperimentConfig {
            dbar: 20,
            h_plus_b: 10.0,
            beta: 0.5,
            num_distributions: 1_000,
            num_paths: 100,
            horizon,
            alphas: vec![0.0, 0.95, 0.999],
            gamma_insep: 0.0,
            policies: vec![PolicyKind::Newsvendor, PolicyKind::StochasticApprox],
            seed: 0,
            checkpoints: square_checkpoints(horizon),
        }
    }
}

/// `1, 4, 9, ...` up to the horizon.
pub fn square_checkpoints(horizon: usize) -> Vec<usize> {
    (1..).map(|i| i * i).take_while(|&t| t <= horizon).collect()
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<CostParams> {
        CostParams::from_beta(self.h_plus_b, self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dbar == 0 {
            return Err(Error::invalid("dbar", "must be at least 1"));
        }
        self.params()?;
        for (name, v) in [
            ("K", self.num_distributions),
            ("L", self.num_paths),
            ("T", self.horizon),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        if self.alphas.is_empty() {
            return Err(Error::invalid(
                "alphas",
                "at least one tail level is required",
            ));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
            return Err(Error::invalid("alphas", format!("{a} is not in [0, 1)")));
        }
        if !(0.0..1.0).contains(&self.gamma_insep) {
            return Err(Error::invalid(
                "gamma_insep",
                format!("{} is not in [0, 1)", self.gamma_insep),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::invalid(
                "policies",
                "at least one policy is required",
            ));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::invalid(
                "checkpoints",
                "at least one checkpoint is required",
            ));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("checkpoints", "must be strictly increasing"));
        }
        if self.checkpoints[0] == 0 || *self.checkpoints.last().unwrap() > self.horizon {
            return Err(Error::invalid(
                "checkpoints",
                format!("must lie in 1..={}", self.horizon),
            ));
        }
        Ok(())
    }
}

/// Per-distribution quantities reported alongside the regrets.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary {
    pub pmf: Pmf,
    pub optimal_level: Level,
    pub optimal_cost: f64,
    pub profile: SeparationProfile,
}

/// Tail statistics at one `(policy, t, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub policy: PolicyKind,
    pub t: usize,
    pub alpha: f64,
    /// CVaR of the per-distribution mean regrets.
    pub r: f64,
    /// Mean separation of the distributions in the tail.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSurface {
    pub beta: f64,
    pub gamma_insep: f64,
    pub policies: Vec<PolicyKind>,
    pub checkpoints: Vec<usize>,
    pub alphas: Vec<f64>,
    pub distributions: Vec<DistributionSummary>,
    /// `mean_regret[policy][k][checkpoint]`, averaged over paths.
    pub mean_regret: Vec<Vec<Vec<f64>>>,
    /// Ordered by policy, then checkpoint, then alpha, as in the config.
    pub cells: Vec<SurfaceCell>,
}

impl RegretSurface {
    pub fn cell(&self, policy: PolicyKind, t: usize, alpha: f64) -> Option<&SurfaceCell> {
        self.cells
            .iter()
            .find(|c| c.policy == policy && c.t == t && c.alpha == alpha)
    }

    /// Mean regrets of all distributions for one policy at one checkpoint.
    pub fn regrets_at(&self, policy: PolicyKind, t: usize) -> Option<Vec<f64>> {
        let p = self.policies.iter().position(|&q| q == policy)?;
        let c = self.checkpoints.iter().position(|&s| s == t)?;
        Some(self.mean_regret[p].iter().map(|row| row[c]).collect())
    }

    /// `policy,beta,gamma_insep,t,alpha,R,D`
    pub fn write_surface_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "policy,beta,gamma_insep,t,alpha,R,D")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.policy,
                format_float(self.beta),
                format_float(self.gamma_insep),
                c.t,
                format_float(c.alpha),
                format_float(c.r),
                format_float(c.d)
            )?;
        }
        Ok(())
    }

    /// `policy,k,delta,kappa_or_inf,t,r`, with `k` counted from 0.
    pub fn write_detail_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "policy,k,delta,kappa_or_inf,t,r")?;
        for (p, policy) in self.policies.iter().enumerate() {
            for (k, dist) in self.distributions.iter().enumerate() {
                let delta = format_float(dist.profile.delta);
                let kappa = format_float(dist.profile.kappa);
                for (c, t) in self.checkpoints.iter().enumerate() {
                    writeln!(
                        w,
                        "{policy},{k},{delta},{kappa},{t},{}",
                        format_float(self.mean_regret[p][k][c])
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Demand path of cell `(k, l)`: `horizon` inverse-CDF draws from the demand stream.
pub fn demand_path(seed: u64, cdf: &Cdf, k: usize, l: usize, horizon: usize) -> Vec<Level> {
    let mut rng = stream(seed, StreamPurpose::Demand, k as u64, l as u64);
    (0..horizon).map(|_| cdf.sample(rng.random())).collect()
}

/// Runs one policy over a demand path and records realized costs against `y*`.
pub fn simulate_path<R: Rng + ?Sized>(
    pmf: &Pmf,
    params: &CostParams,
    kind: PolicyKind,
    demands: &[Level],
    rng: &mut R,
) -> Result<PathResult> {
    let mut state = PolicyState::new(kind, *params, pmf);
    let mut base = Vec::with_capacity(demands.len());
    let mut orders = Vec::with_capacity(demands.len());
    let mut prev = None;
    for &d in demands {
        let o = state.step(prev, rng)?;
        base.push(o.base);
        orders.push(o.level);
        prev = Some(d);
    }
    regret_trace_with_base(params, pmf, demands, &base, &orders)
}

/// Cumulative regret at each checkpoint; same arithmetic as [`simulate_path`].
#[allow(clippy::too_many_arguments)]
fn regret_at_checkpoints<R: Rng + ?Sized>(
    pmf: &Pmf,
    params: &CostParams,
    oracle: Level,
    kind: PolicyKind,
    demands: &[Level],
    checkpoints: &[usize],
    rng: &mut R,
    out: &mut Vec<f64>,
) -> Result<()> {
    let mut state = PolicyState::new(kind, *params, pmf);
    let mut acc = RegretAccumulator::default();
    let mut next = checkpoints.iter().peekable();
    let mut prev = None;
    for (i, &d) in demands.iter().enumerate() {
        let o = state.step(prev, rng)?;
        acc.record(params, o.level, oracle, d);
        prev = Some(d);
        if next.peek() == Some(&&(i + 1)) {
            out.push(acc.regret());
            next.next();
        }
    }
    Ok(())
}

/// Samples the `K` distributions of an experiment, one stream per `k`.
pub fn generate_distributions(config: &ExperimentConfig) -> Result<Vec<Pmf>> {
    config.validate()?;
    (0..config.num_distributions)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(config.seed, StreamPurpose::Distribution, k as u64, 0);
            gen_inseparable(&mut rng, config.dbar, config.beta, config.gamma_insep)
        })
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RegretSurface> {
    let pmfs = generate_distributions(config)?;
    evaluate_distributions(config, pmfs)
}

/// Runs the experiment on caller-supplied distributions; `K` is their count
/// and `config.num_distributions` is ignored.
pub fn evaluate_distributions(config: &ExperimentConfig, pmfs: Vec<Pmf>) -> Result<RegretSurface> {
    config.validate()?;
    if pmfs.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(f) = pmfs.iter().find(|f| f.dbar() != config.dbar) {
        return Err(Error::SupportMismatch {
            left: f.dbar(),
            right: config.dbar,
        });
    }
    let params = config.params()?;
    let beta = params.beta();
    let n_pol = config.policies.len();
    let n_chk = config.checkpoints.len();
    let horizon = *config.checkpoints.last().expect("validated nonempty");

    let per_distribution: Vec<Vec<Vec<f64>>> = pmfs
        .par_iter()
        .enumerate()
        .map(|(k, pmf)| -> Result<Vec<Vec<f64>>> {
            let cdf = pmf.cdf();
            let (oracle, _) = optimal_order(&params, pmf);
            let cells: Vec<Vec<f64>> = (0..config.num_paths)
                .into_par_iter()
                .map(|l| -> Result<Vec<f64>> {
                    let demands = demand_path(config.seed, &cdf, k, l, horizon);
                    let mut out = Vec::with_capacity(n_pol * n_chk);
                    for &kind in &config.policies {
                        let mut rng =
                            stream(config.seed, StreamPurpose::Policy(kind), k as u64, l as u64);
                        regret_at_checkpoints(
                            pmf,
                            &params,
                            oracle,
                            kind,
                            &demands,
                            &config.checkpoints,
                            &mut rng,
                            &mut out,
                        )?;
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            let mut sums = vec![0.0; n_pol * n_chk];
            for cell in &cells {
                for (s, v) in sums.iter_mut().zip(cell) {
                    *s += v;
                }
            }
            let paths = config.num_paths as f64;
            Ok(sums
                .chunks(n_chk)
                .map(|row| row.iter().map(|s| s / paths).collect())
                .collect())
        })
        .collect::<Result<_>>()?;

    let mean_regret: Vec<Vec<Vec<f64>>> = (0..n_pol)
        .map(|p| {
            per_distribution
                .iter()
                .map(|rows| rows[p].clone())
                .collect()
        })
        .collect();

    let distributions: Vec<DistributionSummary> = pmfs
        .into_iter()
        .map(|pmf| {
            let (optimal_level, optimal_cost) = optimal_order(&params, &pmf);
            let profile = SeparationProfile::new(&pmf, beta);
            DistributionSummary {
                pmf,
                optimal_level,
                optimal_cost,
                profile,
            }
        })
        .collect();
    let seps: Vec<f64> = distributions.iter().map(|d| d.profile.delta).collect();

    let mut cells = Vec::with_capacity(n_pol * n_chk * config.alphas.len());
    for (p, &policy) in config.policies.iter().enumerate() {
        for (c, &t) in config.checkpoints.iter().enumerate() {
            let regrets: Vec<f64> = mean_regret[p].iter().map(|row| row[c]).collect();
            for &alpha in &config.alphas {
                cells.push(SurfaceCell {
                    policy,
                    t,
                    alpha,
                    r: cvar(&regrets, alpha)?,
                    d: separation_stat(&regrets, &seps, alpha)?,
                });
            }
        }
    }

    Ok(RegretSurface {
        beta: config.beta,
        gamma_insep: config.gamma_insep,
        policies: config.policies.clone(),
        checkpoints: config.checkpoints.clone(),
        alphas: config.alphas.clone(),
        distributions,
        mean_regret,
        cells,
    })
}

/// Size of the upper tail at level `alpha`: `ceil((1 - alpha) K)`, clamped to
/// `1..=K`. A product within 1e-9 of an integer counts as that integer so that
/// e.g. `alpha = 0.95`, `K = 1000` selects exactly 50.
pub fn tail_count(k: usize, alpha: f64) -> usize {
    let x = (1.0 - alpha) * k as f64;
    let m = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (m as usize).clamp(1, k)
}

/// Indices of the `m` largest values, ties broken by smaller index first,
/// returned in ascending index order.
fn top_indices(values: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

/// Mean of the top `ceil((1 - alpha) K)` values. Selected values are summed in
/// index order, so `alpha = 0` reproduces the plain mean exactly.
pub fn cvar(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid("alpha", format!("{alpha} is not in [0, 1)")));
    }
    let top = top_indices(values, tail_count(values.len(), alpha));
    Ok(top.iter().map(|&i| values[i]).sum::<f64>() / top.len() as f64)
}

/// Mean separation over the distributions with the top `ceil((1 - alpha) K)` regrets.
pub fn separation_stat(regrets: &[f64], seps: &[f64], alpha: f64) -> Result<f64> {
    if regrets.len() != seps.len() {
        return Err(Error::LengthMismatch {
            left: regrets.len(),
            right: seps.len(),
        });
    }
    if regrets.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid("alpha", format!("{alpha} is not in [0, 1)")));
    }
    let top = top_indices(regrets, tail_count(regrets.len(), alpha));
    Ok(top.iter().map(|&i| seps[i]).sum::<f64>() / top.len() as f64)
}
