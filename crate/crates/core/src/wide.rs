//! Noisy-prediction algorithm for Δ-wide graphs.
//!
//! The prediction gives an estimate `r̂` of every wide vertex's neighbourhood
//! imbalance `(A x*)_i`. An LP then looks for a fractional `x` whose own
//! imbalances stay ℓ1-close to `r̂` while minimising `⟨r̂, x⟩`, and the LP
//! point is rounded either randomly (best of `T` draws) or by pipage.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{
    adjacency_form, check_fractional, classify_unchecked, cut_value_unchecked, truncated_adjacency, CutAssignment,
    Graph,
};
use crate::lp::{self, AbsForm, AbsGroup, AbsSumLp, LpStatus};
use crate::prediction::NoisyPrediction;
use crate::rng::{derive_named, derive_seed, rng_from_seed};
use crate::sdp::{hyperplane_round, solve_sdp, SdpConfig};

use rand::Rng as _;

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceEstimate {
    pub r_hat: Vec<f64>,
    pub delta: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub wide_set: Vec<usize>,
}

/// `r̂_i = (Ã Y)_i / (2ε)` on Δ-wide vertices, zero elsewhere.
///
/// `eta` only sets the wide/narrow threshold here, so any value in `(0, 1)`
/// is accepted.
pub fn estimate_imbalance(g: &Graph, y: &NoisyPrediction, delta: usize, eta: f64) -> Result<ImbalanceEstimate> {
    if y.y.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: y.y.len(),
        });
    }
    if delta < 1 {
        return Err(Error::param("delta", "must be at least 1"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("{eta} not in (0, 1)")));
    }
    let report = classify_unchecked(g, delta, eta);
    let at = truncated_adjacency(g, delta);
    let yf: Vec<f64> = y.y.iter().map(|&v| v as f64).collect();
    let ay = at.mul(&yf);
    let scale = 1.0 / (2.0 * y.epsilon);
    let mut r_hat = vec![0.0; g.n()];
    let mut wide_set = Vec::new();
    for i in 0..g.n() {
        if report.is_wide(i) {
            r_hat[i] = ay[i] * scale;
            wide_set.push(i);
        }
    }
    Ok(ImbalanceEstimate {
        r_hat,
        delta,
        epsilon: y.epsilon,
        eta,
        wide_set,
    })
}

/// `min ⟨r̂, x⟩` subject to `Σ_i |r̂_i − (A x)_i| ≤ (ε′ + 2η) W`.
pub fn build_wide_lp(g: &Graph, est: &ImbalanceEstimate, eps_prime: f64, eta: f64) -> Result<AbsSumLp> {
    if est.r_hat.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: est.r_hat.len(),
        });
    }
    if !(eps_prime > 0.0) {
        return Err(Error::param("eps_prime", "must be positive"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("{eta} not in (0, 1)")));
    }
    let mut forms: Vec<AbsForm> = (0..g.n())
        .map(|i| AbsForm {
            coeffs: g.neighbors(i).iter().map(|&(j, w)| (j, -w)).collect(),
            offset: est.r_hat[i],
        })
        .collect();
    if forms.is_empty() {
        forms.push(AbsForm {
            coeffs: Vec::new(),
            offset: 0.0,
        });
    }
    Ok(AbsSumLp {
        objective: est.r_hat.clone(),
        groups: vec![AbsGroup {
            forms,
            budget: (eps_prime + 2.0 * eta) * g.total_weight(),
        }],
    })
}

/// Number of independent roundings, `⌈ln 100 / ln(1 + η/2)⌉`.
pub fn rounding_repeats(eta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("{eta} not in (0, 1)")));
    }
    Ok((100f64.ln() / (1.0 + eta / 2.0).ln()).ceil() as usize)
}

/// One independent rounding with `Pr[X_i = +1] = (1 + x̂_i) / 2`.
pub fn randomized_round(x_hat: &[f64], seed: u64) -> CutAssignment {
    let mut rng = rng_from_seed(seed);
    let x = x_hat
        .iter()
        .map(|&v| if rng.random::<f64>() < (1.0 + v) / 2.0 { 1 } else { -1 })
        .collect();
    CutAssignment::new(x).expect("labels are ±1")
}

/// Best of `T` independent roundings by `⟨X, A X⟩` (ties to the earliest).
pub fn randomized_round_best(g: &Graph, x_hat: &[f64], eta: f64, seed: u64) -> Result<CutAssignment> {
    if x_hat.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: x_hat.len(),
        });
    }
    check_fractional(x_hat)?;
    let t = rounding_repeats(eta)?;
    let best = (0..t)
        .into_par_iter()
        .map(|r| {
            let x = randomized_round(x_hat, derive_seed(seed, r as u64));
            let value = cut_value_unchecked(g, x.as_slice());
            (r, value, x)
        })
        .reduce_with(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
        .expect("at least one rounding");
    Ok(best.2)
}

/// Deterministic pipage rounding together with `frac_objective` after every
/// coordinate move.
pub fn pipage_round_traced(g: &Graph, x_hat: &[f64]) -> Result<(CutAssignment, Vec<f64>)> {
    if x_hat.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: x_hat.len(),
        });
    }
    check_fractional(x_hat)?;
    let mut x = x_hat.to_vec();
    let mut trace = Vec::with_capacity(g.n());
    for i in 0..g.n() {
        // ⟨x, A x⟩ = 2 x_i c_i + (terms without x_i)
        let c: f64 = g.neighbors(i).iter().map(|&(j, w)| w * x[j]).sum();
        x[i] = if c > 0.0 { -1.0 } else { 1.0 };
        trace.push(0.25 * (g.total_weight() - adjacency_form(g, &x)));
    }
    Ok((CutAssignment::from_signs(&x), trace))
}

pub fn pipage_round(g: &Graph, x_hat: &[f64]) -> Result<CutAssignment> {
    pipage_round_traced(g, x_hat).map(|(x, _)| x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    #[default]
    Repeat,
    Pipage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideParams {
    pub delta: usize,
    pub eta: f64,
    pub eps_prime: f64,
    pub rounding: Rounding,
}

/// `Δ = ⌈c_Δ / (ε ε′)²⌉`.
pub fn default_delta(epsilon: f64, eps_prime: f64, c_delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && eps_prime > 0.0 && c_delta > 0.0) {
        return Err(Error::param("c_delta", "ε, ε′ and c_Δ must be positive"));
    }
    let d = (c_delta / (epsilon * eps_prime).powi(2)).ceil();
    Ok(d.min(usize::MAX as f64).max(1.0) as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideOutcome {
    pub cut: CutAssignment,
    pub value: f64,
    pub lp_status: LpStatus,
    /// LP optimum and point when the LP was feasible.
    pub lp_value: Option<f64>,
    pub x_hat: Option<Vec<f64>>,
    pub fallback_used: bool,
}

/// Number of hyperplane roundings taken in the infeasible-LP fallback.
pub const FALLBACK_ROUNDINGS: usize = 20;

pub fn solve_wide(g: &Graph, y: &NoisyPrediction, params: &WideParams, seed: u64) -> Result<WideOutcome> {
    let est = estimate_imbalance(g, y, params.delta, params.eta)?;
    let lp_inst = build_wide_lp(g, &est, params.eps_prime, params.eta)?;
    let sol = lp::solve(&lp_inst)?;
    if sol.status == LpStatus::Optimal {
        let cut = match params.rounding {
            Rounding::Repeat => randomized_round_best(g, &sol.x, params.eta, derive_named(seed, "wide-round"))?,
            Rounding::Pipage => pipage_round(g, &sol.x)?,
        };
        return Ok(WideOutcome {
            value: cut_value_unchecked(g, cut.as_slice()),
            cut,
            lp_status: sol.status,
            lp_value: Some(sol.objective_value),
            x_hat: Some(sol.x),
            fallback_used: false,
        });
    }

    let pred = y.as_cut();
    let pred_value = cut_value_unchecked(g, pred.as_slice());
    let (mut cut, mut value) = (pred, pred_value);
    if g.n() > 0 {
        let gw = gw_best(g, derive_named(seed, "wide-fallback"), FALLBACK_ROUNDINGS)?;
        let gv = cut_value_unchecked(g, gw.as_slice());
        if gv > value {
            cut = gw;
            value = gv;
        }
    }
    Ok(WideOutcome {
        cut,
        value,
        lp_status: sol.status,
        lp_value: None,
        x_hat: None,
        fallback_used: true,
    })
}

/// Plain relaxation followed by the best of `roundings` hyperplane cuts.
pub fn gw_best(g: &Graph, seed: u64, roundings: usize) -> Result<CutAssignment> {
    let sol = solve_sdp(g, &SdpConfig::with_seed(derive_named(seed, "sdp")))?;
    let base = derive_named(seed, "hyperplane");
    let mut best: Option<(f64, CutAssignment)> = None;
    for r in 0..roundings.max(1) {
        let x = hyperplane_round(&sol, derive_seed(base, r as u64));
        let v = cut_value_unchecked(g, x.as_slice());
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, x));
        }
    }
    Ok(best.expect("at least one rounding").1)
}
