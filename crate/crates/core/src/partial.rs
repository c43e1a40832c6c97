//! Partial predictions: the label-fixed relaxation with hyperplane rounding,
//! and the τ-constrained variant with marginal-preserving rounding.
//!
//! Revealed `+1` vertices are pinned to `v_0` and revealed `−1` vertices to
//! `−v_0`.

use crate::error::{Error, Result};
use crate::graph::{cut_value_unchecked, CutAssignment, Graph};
use crate::prediction::PartialPrediction;
use crate::rng::{derive_named, derive_seed};
use crate::sdp::{hyperplane_round, rt_round, solve_sdp, SdpConfig, SdpStatus, SubsetConstraint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    /// Grid spacing as a fraction of `W`.
    pub step: f64,
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid { step: 0.05 }
    }
}

impl TauGrid {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::param("tau_step", format!("{step} not in (0, 1]")));
        }
        Ok(TauGrid { step })
    }

    /// `{0, step·W, 2·step·W, …, W}`.
    pub fn values(&self, total_weight: f64) -> Vec<f64> {
        let count = (1.0 / self.step - 1e-9).ceil() as usize;
        let mut v: Vec<f64> = (0..count).map(|k| k as f64 * self.step * total_weight).collect();
        v.push(total_weight);
        v.dedup();
        v
    }
}

/// Indices of edges with at least one revealed endpoint.
pub fn revealed_edge_set(g: &Graph, y: &PartialPrediction) -> Result<Vec<usize>> {
    if y.y.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: y.y.len(),
        });
    }
    Ok(g.edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| y.y[e.i] != 0 || y.y[e.j] != 0)
        .map(|(k, _)| k)
        .collect())
}

fn pinned_config(y: &PartialPrediction, seed: u64) -> SdpConfig {
    SdpConfig {
        fixed_labels: y.pins(),
        ..SdpConfig::with_seed(derive_named(seed, "sdp"))
    }
}

fn check_len(g: &Graph, y: &PartialPrediction) -> Result<()> {
    if y.y.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: y.y.len(),
        });
    }
    if g.n() == 0 {
        return Err(Error::Precondition("graph has no vertices".into()));
    }
    Ok(())
}

/// Label-fixed relaxation, best of `roundings` hyperplane cuts.
pub fn solve_partial_gw(g: &Graph, y: &PartialPrediction, seed: u64, roundings: usize) -> Result<CutAssignment> {
    check_len(g, y)?;
    let sol = solve_sdp(g, &pinned_config(y, seed))?;
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

#[derive(Debug, Clone, PartialEq)]
pub struct PartialRtOutcome {
    pub cut: CutAssignment,
    pub value: f64,
    pub best_tau: f64,
    /// Grid values whose constrained relaxation was solved successfully.
    pub feasible_taus: Vec<f64>,
}

/// For each τ in the grid, the label-fixed relaxation with
/// `Σ_{E′} w (1 − ⟨v_i, v_j⟩)/2 ≥ τ`, followed by `roundings` threshold
/// roundings; the best cut over all pairs wins (ties to smaller τ, then
/// earlier draw).
pub fn solve_partial_rt(
    g: &Graph,
    y: &PartialPrediction,
    grid: &TauGrid,
    seed: u64,
    roundings: usize,
) -> Result<PartialRtOutcome> {
    check_len(g, y)?;
    let e_prime = revealed_edge_set(g, y)?;
    let e_weight: f64 = e_prime.iter().map(|&k| g.edges()[k].w).sum();
    let base = derive_named(seed, "rt");
    let mut best: Option<(f64, f64, CutAssignment)> = None;
    let mut feasible_taus = Vec::new();
    for (t_idx, tau) in grid.values(g.total_weight()).into_iter().enumerate() {
        // the subset contribution never exceeds w(E′)
        if tau > e_weight + 1e-12 * g.total_weight() {
            continue;
        }
        let mut cfg = pinned_config(y, seed);
        if tau > 0.0 {
            cfg.subset_constraint = Some(SubsetConstraint {
                edges: e_prime.clone(),
                tau,
            });
        }
        let sol = solve_sdp(g, &cfg)?;
        if sol.status == SdpStatus::InfeasibleAtTau {
            continue;
        }
        feasible_taus.push(tau);
        let stream = derive_seed(base, t_idx as u64);
        for r in 0..roundings.max(1) {
            let x = rt_round(&sol, derive_seed(stream, r as u64));
            let v = cut_value_unchecked(g, x.as_slice());
            if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                best = Some((v, tau, x));
            }
        }
    }
    let (value, best_tau, cut) = best.expect("τ = 0 is always feasible");
    Ok(PartialRtOutcome {
        cut,
        value,
        best_tau,
        feasible_taus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cut_value, gen_erdos_renyi, WeightLaw};
    use crate::oracle::exact_maxcut;

    fn path() -> Graph {
        Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn grid_values() {
        let v = TauGrid::default().values(10.0);
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 10.0);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(TauGrid::new(0.3).unwrap().values(1.0).len(), 5);
        assert!(TauGrid::new(0.0).is_err());
    }

    #[test]
    fn revealed_edges() {
        let g = path();
        let none = PartialPrediction::new(vec![0, 0, 0], 0.5).unwrap();
        let all = PartialPrediction::new(vec![1, -1, 1], 0.5).unwrap();
        let middle = PartialPrediction::new(vec![0, 1, 0], 0.5).unwrap();
        assert!(revealed_edge_set(&g, &none).unwrap().is_empty());
        assert_eq!(revealed_edge_set(&g, &all).unwrap(), vec![0, 1]);
        assert_eq!(revealed_edge_set(&g, &middle).unwrap(), vec![0, 1]);
    }

    #[test]
    fn fully_labelled_returns_truth() {
        let gg = gen_erdos_renyi(10, 0.5, WeightLaw::Uniform, 3).unwrap();
        let (opt, x) = exact_maxcut(&gg.graph).unwrap();
        let y = PartialPrediction::new(x.as_slice().to_vec(), 1.0).unwrap();
        let a = solve_partial_gw(&gg.graph, &y, 1, 5).unwrap();
        let b = solve_partial_rt(&gg.graph, &y, &TauGrid::default(), 1, 3).unwrap();
        assert_eq!(a, x);
        assert_eq!(b.cut, x);
        assert_eq!(b.value, opt);
    }

    #[test]
    fn k2_with_one_pin_is_cut() {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        let y = PartialPrediction::new(vec![1, 0], 0.5).unwrap();
        let x = solve_partial_gw(&g, &y, 0, 20).unwrap();
        assert_eq!(x.as_slice(), &[1, -1]);
        assert_eq!(cut_value(&g, &x).unwrap(), 1.0);
    }

    #[test]
    fn pins_hold_in_every_output() {
        for seed in 0..10 {
            let g = gen_erdos_renyi(9, 0.5, WeightLaw::Unit, seed).unwrap().graph;
            let y = PartialPrediction::new(vec![1, 0, -1, 0, 0, 1, 0, 0, -1], 0.5).unwrap();
            let a = solve_partial_gw(&g, &y, seed, 5).unwrap();
            let b = solve_partial_rt(&g, &y, &TauGrid::new(0.25).unwrap(), seed, 3).unwrap();
            for (i, &l) in y.y.iter().enumerate() {
                if l != 0 {
                    assert_eq!(a[i], l);
                    assert_eq!(b.cut[i], l);
                }
            }
        }
    }

    #[test]
    fn zero_tau_is_always_feasible() {
        let g = path();
        let y = PartialPrediction::new(vec![0, 0, 0], 0.5).unwrap();
        let out = solve_partial_rt(&g, &y, &TauGrid::default(), 2, 4).unwrap();
        assert_eq!(out.feasible_taus, vec![0.0]);
    }
}
