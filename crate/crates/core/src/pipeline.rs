//! Best-of portfolio for noisy predictions: classify the graph, run the
//! matching wide or narrow solver, and compare against plain GW and the raw
//! prediction.

use crate::error::Result;
use crate::graph::{classify, cut_value_unchecked, CutAssignment, Graph, Width};
use crate::narrow::{solve_narrow, NarrowParams};
use crate::prediction::NoisyPrediction;
use crate::rng::derive_named;
use crate::wide::{default_delta, gw_best, solve_wide, Rounding, WideParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Wide,
    Narrow,
    Gw,
    Prediction,
}

impl Branch {
    pub fn tag(self) -> &'static str {
        match self {
            Branch::Wide => "wide",
            Branch::Narrow => "narrow",
            Branch::Gw => "gw",
            Branch::Prediction => "prediction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyConfig {
    pub eta: f64,
    pub eps_prime: f64,
    pub c_delta: f64,
    pub seed: u64,
    pub rounding: Rounding,
    pub restarts: usize,
    pub gw_roundings: usize,
    pub band_constant: f64,
    /// Largest graph on which the triangle relaxation is attempted.
    pub narrow_max_n: usize,
    /// Fixed Δ; derived from ε, ε′ and c_Δ when absent.
    pub delta: Option<usize>,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        NoisyConfig {
            eta: 0.05,
            eps_prime: 0.05,
            c_delta: 1.0,
            seed: 0,
            rounding: Rounding::Repeat,
            restarts: 20,
            gw_roundings: 20,
            band_constant: 1.0,
            narrow_max_n: 100,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyOutcome {
    pub cut: CutAssignment,
    pub value: f64,
    pub tag: Branch,
    pub delta: usize,
    pub class: Width,
    /// Value of every branch that ran, in priority order.
    pub candidates: Vec<(Branch, f64)>,
}

pub fn solve_noisy(g: &Graph, y: &NoisyPrediction, cfg: &NoisyConfig) -> Result<NoisyOutcome> {
    let delta = cfg.delta_for(y.epsilon)?;
    let class = classify(g, delta, cfg.eta)?.graph_class;
    let mut runs: Vec<(Branch, CutAssignment)> = Vec::new();
    match class {
        Width::Wide => {
            let params = WideParams {
                delta,
                eta: cfg.eta,
                eps_prime: cfg.eps_prime,
                rounding: cfg.rounding,
            };
            runs.push((
                Branch::Wide,
                solve_wide(g, y, &params, derive_named(cfg.seed, "wide"))?.cut,
            ));
        }
        Width::Narrow if g.n() <= cfg.narrow_max_n => {
            let params = NarrowParams {
                delta,
                eta: cfg.eta,
                band_constant: cfg.band_constant,
                restarts: cfg.restarts,
            };
            runs.push((
                Branch::Narrow,
                solve_narrow(g, &params, derive_named(cfg.seed, "narrow"))?.cut,
            ));
        }
        Width::Narrow => {}
    }
    if g.n() > 0 {
        runs.push((Branch::Gw, gw_best(g, derive_named(cfg.seed, "gw"), cfg.gw_roundings)?));
    }
    runs.push((Branch::Prediction, y.as_cut()));

    let candidates: Vec<(Branch, f64)> = runs
        .iter()
        .map(|(b, x)| (*b, cut_value_unchecked(g, x.as_slice())))
        .collect();
    // strict comparison keeps the higher-priority branch on ties
    let mut best = 0;
    for k in 1..candidates.len() {
        if candidates[k].1 > candidates[best].1 {
            best = k;
        }
    }
    let (tag, cut) = runs.swap_remove(best);
    Ok(NoisyOutcome {
        value: candidates[best].1,
        cut,
        tag,
        delta,
        class,
        candidates,
    })
}

impl NoisyConfig {
    pub fn delta_for(&self, epsilon: f64) -> Result<usize> {
        match self.delta {
            Some(d) => Ok(d),
            None => default_delta(epsilon, self.eps_prime, self.c_delta),
        }
    }
}
