//! Divergences, separation from the critical quantile, and the constant regret
//! bound for distributions well separated from β.
//!
//! Divergences follow the usual conventions `0 ln(0/x) = 0` and
//! `x ln(x/0) = +inf` for `x > 0`; infinities are returned as `f64::INFINITY`
//! rather than errors because the straddle sentinels 0 and 1 produce them for
//! perfectly valid distributions.

use crate::cost::CostParams;
use crate::demand::Pmf;
use crate::error::{Error, Result};

/// Upper limit on the burn-in search in [`tau`].
pub const TAU_SEARCH_CAP: u64 = 1_000_000;

#[inline]
fn xlogy_ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// KL divergence between Bernoulli(u) and Bernoulli(v).
pub fn bernoulli_kl(u: f64, v: f64) -> f64 {
    xlogy_ratio(u, v) + xlogy_ratio(1.0 - u, 1.0 - v)
}

/// `D(g || f) = sum_d g(d) ln(g(d) / f(d))`.
pub fn kl(g: &Pmf, f: &Pmf) -> Result<f64> {
    same_support(g, f)?;
    Ok(g.probs()
        .iter()
        .zip(f.probs())
        .map(|(&a, &b)| xlogy_ratio(a, b))
        .sum::<f64>()
        .max(0.0))
}

/// Total variation distance, half the L1 distance.
pub fn total_variation(f: &Pmf, g: &Pmf) -> Result<f64> {
    same_support(f, g)?;
    Ok(f.probs()
        .iter()
        .zip(g.probs())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0)
}

fn same_support(a: &Pmf, b: &Pmf) -> Result<()> {
    if a.dbar() == b.dbar() {
        Ok(())
    } else {
        Err(Error::SupportMismatch {
            left: a.dbar(),
            right: b.dbar(),
        })
    }
}

/// `t^(dbar+1) * exp(-eps (t - 1))`, evaluated in log space. Not clamped to 1.
pub fn sanov_bound(t: u64, eps: f64, dbar: usize) -> f64 {
    let t = t.max(1) as f64;
    ((dbar as f64 + 1.0) * t.ln() - eps * (t - 1.0)).exp()
}

/// CDF values nearest β from below and above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Straddle {
    /// Largest CDF value strictly below β, or 0.
    pub alpha: f64,
    /// Smallest CDF value strictly above β, or 1.
    pub gamma: f64,
}

pub fn straddle(f: &Pmf, beta: f64) -> Straddle {
    let cdf = f.cdf();
    let alpha = cdf
        .values()
        .iter()
        .copied()
        .filter(|&c| c < beta)
        .fold(0.0, f64::max);
    let gamma = cdf
        .values()
        .iter()
        .copied()
        .filter(|&c| c > beta)
        .fold(1.0, f64::min);
    Straddle { alpha, gamma }
}

/// `min(beta - alpha, gamma - beta)`.
pub fn separation(f: &Pmf, beta: f64) -> f64 {
    let s = straddle(f, beta);
    (beta - s.alpha).min(s.gamma - beta)
}

/// `min(D(beta || alpha), D(beta || gamma))`; infinite only when both
/// straddle points are sentinels.
pub fn kappa(f: &Pmf, beta: f64) -> f64 {
    kappa_from_straddle(straddle(f, beta), beta)
}

pub fn kappa_from_straddle(s: Straddle, beta: f64) -> f64 {
    bernoulli_kl(beta, s.alpha).min(bernoulli_kl(beta, s.gamma))
}

/// Smallest `tau` such that every `t >= tau + 1` satisfies both
/// `t^2 exp(-kappa (t-1)) < 1/2` and
/// `(t+1)^2 exp(-kappa t) / (t^2 exp(-kappa (t-1))) < exp(-kappa / 2)`.
///
/// Both conditions hold for all `t` past their first success, so the search
/// stops at the first `t` satisfying both. `kappa = +inf` gives 1.
pub fn tau(kappa: f64) -> Result<u64> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::invalid(
            "kappa",
            format!("must be positive, got {kappa}"),
        ));
    }
    if kappa.is_infinite() {
        return Ok(1);
    }
    let half_ln = 0.5f64.ln();
    for t in 2..=TAU_SEARCH_CAP + 1 {
        let tf = t as f64;
        let tail = 2.0 * tf.ln() - kappa * (tf - 1.0) < half_ln;
        let ratio = 2.0 * (1.0 / tf).ln_1p() < kappa / 2.0;
        if tail && ratio {
            return Ok(t - 1);
        }
    }
    Err(Error::TauCapExceeded {
        kappa,
        cap: TAU_SEARCH_CAP,
    })
}

/// Closed-form constant bounding the regret of the newsvendor policy for all
/// horizons:
///
/// ```text
/// (2 h dbar + b dbar) tau
///   + (3 h dbar + b dbar) / 2 / (1 - exp(-kappa/2))
///   + h dbar ((1 - eps_f) / eps_f + 1 / (2 eps_f (1 - exp(-kappa/2))))
/// ```
pub fn theorem1_bound(
    params: &CostParams,
    dbar: usize,
    eps_f: f64,
    kappa: f64,
    tau: u64,
) -> Result<f64> {
    if !(eps_f > 0.0 && eps_f <= 1.0) {
        return Err(Error::invalid(
            "eps_f",
            format!("top-level mass must be in (0, 1], got {eps_f}"),
        ));
    }
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::invalid(
            "kappa",
            format!("must be positive, got {kappa}"),
        ));
    }
    if tau == 0 {
        return Err(Error::invalid("tau", "must be at least 1"));
    }
    let (h, b, d) = (params.h(), params.b(), dbar as f64);
    let gap = 1.0 - (-kappa / 2.0).exp();
    Ok((2.0 * h * d + b * d) * tau as f64
        + (3.0 * h * d + b * d) / 2.0 / gap
        + h * d * ((1.0 - eps_f) / eps_f + 1.0 / (2.0 * eps_f * gap)))
}

/// Separation quantities of one distribution at one β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationProfile {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub kappa: f64,
    /// `None` when the burn-in search exceeds [`TAU_SEARCH_CAP`].
    pub tau: Option<u64>,
}

impl SeparationProfile {
    pub fn new(f: &Pmf, beta: f64) -> Self {
        let s = straddle(f, beta);
        let kappa = kappa_from_straddle(s, beta);
        SeparationProfile {
            alpha: s.alpha,
            gamma: s.gamma,
            delta: (beta - s.alpha).min(s.gamma - beta),
            kappa,
            tau: tau(kappa).ok(),
        }
    }

    /// Constant regret bound, when `eps_f > 0` and `tau` is available.
    pub fn theorem1_bound(&self, params: &CostParams, f: &Pmf) -> Option<f64> {
        theorem1_bound(params, f.dbar(), f.eps_f(), self.kappa, self.tau?).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(w: &[f64]) -> Pmf {
        Pmf::new(w.len() - 1, w.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bernoulli_kl_cases() {
        assert_eq!(bernoulli_kl(0.5, 0.5), 0.0);
        assert!(close(
            bernoulli_kl(0.5, 0.25),
            0.143_841_036_225_890_4,
            1e-15
        ));
        assert_eq!(bernoulli_kl(0.5, 0.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.0, 0.0), 0.0);
        assert_eq!(bernoulli_kl(1.0, 0.3), -(0.3f64.ln()));
    }

    #[test]
    fn kl_cases() {
        let f = pmf(&[0.2, 0.5, 0.3]);
        assert_eq!(kl(&f, &f).unwrap(), 0.0);
        assert!(close(
            kl(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5])).unwrap(),
            std::f64::consts::LN_2,
            1e-15
        ));
        assert_eq!(
            kl(&pmf(&[0.5, 0.5]), &pmf(&[1.0, 0.0])).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            kl(&f, &pmf(&[0.5, 0.5])),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn total_variation_cases() {
        let f = pmf(&[0.2, 0.5, 0.3]);
        assert_eq!(total_variation(&f, &f).unwrap(), 0.0);
        assert_eq!(
            total_variation(&pmf(&[1.0, 0.0]), &pmf(&[0.0, 1.0])).unwrap(),
            1.0
        );
        assert_eq!(
            total_variation(&pmf(&[0.5, 0.5]), &pmf(&[0.25, 0.75])).unwrap(),
            0.25
        );
        assert!(total_variation(&f, &pmf(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn sanov_cases() {
        assert_eq!(sanov_bound(1, 0.7, 5), 1.0);
        assert!(close(sanov_bound(10, 0.1, 2), 406.569_659_740_599_1, 1e-9));
        let tiny = sanov_bound(200, 0.3, 3);
        assert!(
            close(tiny / 1.891_208_508_265_602e-17, 1.0, 1e-10),
            "{tiny}"
        );
    }

    #[test]
    fn straddle_cases() {
        let s = straddle(&pmf(&[0.3, 0.4, 0.3]), 0.5);
        assert!(close(s.alpha, 0.3, 1e-15) && close(s.gamma, 0.7, 1e-15));
        assert_eq!(
            straddle(&pmf(&[0.5, 0.5]), 0.5),
            Straddle {
                alpha: 0.0,
                gamma: 1.0
            }
        );
        assert_eq!(
            straddle(&Pmf::point_mass(3, 0).unwrap(), 0.5),
            Straddle {
                alpha: 0.0,
                gamma: 1.0
            }
        );
    }

    #[test]
    fn separation_cases() {
        assert!(close(separation(&pmf(&[0.3, 0.4, 0.3]), 0.5), 0.2, 1e-15));
        assert_eq!(separation(&pmf(&[0.5, 0.5]), 0.5), 0.5);
        for at in 0..4 {
            assert_eq!(separation(&Pmf::point_mass(3, at).unwrap(), 0.5), 0.5);
        }
    }

    #[test]
    fn kappa_cases() {
        assert!(close(
            kappa(&pmf(&[0.3, 0.4, 0.3]), 0.5),
            0.087_176_693_572_388_91,
            1e-14
        ));
        assert_eq!(kappa(&pmf(&[0.5, 0.5]), 0.5), f64::INFINITY);
        // Straddle (0.8, 1) at beta = 0.9: only D(0.9 || 0.8) is finite.
        let k = kappa(&pmf(&[0.8, 0.2]), 0.9);
        assert!(close(k, 0.036_690_014_034_750_6, 1e-14), "{k}");
    }

    #[test]
    fn tau_cases() {
        assert_eq!(tau(1.0).unwrap(), 4);
        assert_eq!(tau(f64::INFINITY).unwrap(), 1);
        assert!(tau(0.0).is_err());
        assert!(tau(-1.0).is_err());
        assert!(matches!(tau(1e-7), Err(Error::TauCapExceeded { .. })));
    }

    /// Brute-force check of both burn-in conditions over a long window.
    fn conditions_hold(kappa: f64, t: u64) -> bool {
        let tf = t as f64;
        let tail = tf * tf * (-kappa * (tf - 1.0)).exp() < 0.5;
        // Consecutive-term ratio with the common exponential cancelled to avoid 0/0.
        let ratio = ((tf + 1.0) / tf).powi(2) * (-kappa).exp() < (-kappa / 2.0).exp();
        tail && ratio
    }

    #[test]
    fn tau_matches_direct_search_and_is_monotone() {
        let mut prev = 0;
        for i in (1..=60).rev() {
            let k = i as f64 / 20.0;
            let t = tau(k).unwrap();
            assert!(t >= prev, "tau not monotone at kappa = {k}");
            prev = t;
            assert!(
                t == 1 || !conditions_hold(k, t),
                "kappa {k}: tau {t} not minimal"
            );
            assert!((t + 1..t + 500).all(|s| conditions_hold(k, s)), "kappa {k}");
        }
    }

    #[test]
    fn theorem1_by_terms() {
        let p = CostParams::new(5.0, 5.0).unwrap();
        let v = theorem1_bound(&p, 2, 0.25, 1.0, 4).unwrap();
        let gap = 1.0 - (-0.5f64).exp();
        assert!(close(
            v,
            120.0 + 20.0 / gap + 10.0 * (3.0 + 1.0 / (0.5 * gap)),
            1e-12
        ));
        assert!(close(v, 251.66, 0.01), "{v}");

        let inf = theorem1_bound(&p, 2, 0.25, f64::INFINITY, 4).unwrap();
        assert!(close(inf, 30.0 * 4.0 + 20.0 + 10.0 * (3.0 + 2.0), 1e-12));

        assert!(theorem1_bound(&p, 2, 0.0, 1.0, 4).is_err());
        assert!(theorem1_bound(&p, 2, 0.25, 0.0, 4).is_err());
        assert!(theorem1_bound(&p, 2, 0.25, 1.0, 0).is_err());
    }

    #[test]
    fn theorem1_decreasing_in_eps_f() {
        let p = CostParams::new(3.0, 7.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let v = theorem1_bound(&p, 20, i as f64 / 100.0, 0.3, 12).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn profile_combines() {
        let f = pmf(&[0.3, 0.4, 0.3]);
        let prof = SeparationProfile::new(&f, 0.5);
        assert!(close(prof.delta, 0.2, 1e-15));
        assert_eq!(prof.tau, Some(tau(prof.kappa).unwrap()));
        let p = CostParams::new(5.0, 5.0).unwrap();
        assert!(prof.theorem1_bound(&p, &f).unwrap() > 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_pmf(dbar: usize) -> impl Strategy<Value = Pmf> {
            prop::collection::vec(0.0f64..1.0, dbar + 1).prop_filter_map("zero weights", move |w| {
                let s: f64 = w.iter().sum();
                (s > 1e-9)
                    .then(|| Pmf::new(dbar, w.iter().map(|x| x / s).collect()).ok())
                    .flatten()
            })
        }

        proptest! {
            #[test]
            fn pinsker_pairs((f, g) in (1usize..8).prop_flat_map(|d| (arb_pmf(d), arb_pmf(d)))) {
                let tv = total_variation(&f, &g).unwrap();
                let div = kl(&g, &f).unwrap();
                prop_assert!(tv <= (div / 2.0).sqrt() + 1e-12);
            }

            #[test]
            fn bernoulli_kl_min_and_convexity(u in 0.0f64..=1.0, a in 0.001f64..0.999, b in 0.001f64..0.999) {
                prop_assert!(bernoulli_kl(u, a) >= -1e-15);
                prop_assert!(bernoulli_kl(u, u).abs() < 1e-15);
                let mid = bernoulli_kl(u, (a + b) / 2.0);
                prop_assert!(mid <= (bernoulli_kl(u, a) + bernoulli_kl(u, b)) / 2.0 + 1e-12);
            }

            #[test]
            fn straddle_brackets_and_kappa_pinsker(f in (1usize..12).prop_flat_map(arb_pmf), beta in 0.01f64..0.99) {
                let s = straddle(&f, beta);
                prop_assert!(s.alpha < beta && beta < s.gamma);
                let delta = separation(&f, beta);
                prop_assert!(delta > 0.0);
                let k = kappa(&f, beta);
                prop_assert!(k > 0.0);
                prop_assert!(k >= 2.0 * delta * delta - 1e-12);
            }
        }
    }
}
