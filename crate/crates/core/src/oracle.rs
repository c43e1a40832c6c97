//! Exhaustive optimisers for small instances.
//!
//! Both enumerate all assignments with `x_0 = +1` in Gray-code order, so each
//! step flips one variable and updates the objective incrementally. The best
//! value is recomputed from scratch at the end to shed accumulated rounding.

use crate::csp::{csp_value_unchecked, CspInstance};
use crate::error::{Error, Result};
use crate::graph::{cut_value_unchecked, CutAssignment, Graph};

pub const MAXCUT_LIMIT: usize = 24;
pub const CSP_LIMIT: usize = 22;

/// Visits every assignment reachable by flipping variables `1..n` in
/// Gray-code order, calling `step(v)` after variable `v` flips.
fn gray_walk(n: usize, mut step: impl FnMut(usize)) {
    if n <= 1 {
        return;
    }
    let free = n - 1;
    for t in 1u64..(1u64 << free) {
        step(1 + t.trailing_zeros() as usize);
    }
}

/// Maximum cut and one optimal assignment.
pub fn exact_maxcut(g: &Graph) -> Result<(f64, CutAssignment)> {
    let n = g.n();
    if n > MAXCUT_LIMIT {
        return Err(Error::TooLarge { n, limit: MAXCUT_LIMIT });
    }
    let mut x = vec![1i8; n];
    let mut value = 0.0;
    let mut best = (0.0, x.clone());
    gray_walk(n, |v| {
        // edges to same-side neighbours become cut, the others uncut
        let delta: f64 = g
            .neighbors(v)
            .iter()
            .map(|&(j, w)| if x[j] == x[v] { w } else { -w })
            .sum();
        x[v] = -x[v];
        value += delta;
        if value > best.0 + 1e-9 {
            best = (value, x.clone());
        }
    });
    let exact = cut_value_unchecked(g, &best.1);
    Ok((exact, CutAssignment::new(best.1).expect("labels are ±1")))
}

/// Maximum of `val` and one optimal assignment.
pub fn exact_csp(inst: &CspInstance) -> Result<(f64, CutAssignment)> {
    let n = inst.n;
    if n > CSP_LIMIT {
        return Err(Error::TooLarge { n, limit: CSP_LIMIT });
    }
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, con) in inst.constraints.iter().enumerate() {
        touching[con.i].push(c);
        if con.j != con.i {
            touching[con.j].push(c);
        }
    }
    let mut x = vec![1i8; n.max(1)];
    x.truncate(n);
    let mut value: f64 = inst.constraints.iter().map(|c| c.w * inst.eval_constraint(c, &x)).sum();
    let mut best = (value, x.clone());
    gray_walk(n, |v| {
        let before: f64 = touching[v]
            .iter()
            .map(|&c| {
                let con = &inst.constraints[c];
                con.w * inst.eval_constraint(con, &x)
            })
            .sum();
        x[v] = -x[v];
        let after: f64 = touching[v]
            .iter()
            .map(|&c| {
                let con = &inst.constraints[c];
                con.w * inst.eval_constraint(con, &x)
            })
            .sum();
        value += after - before;
        if value > best.0 + 1e-9 {
            best = (value, x.clone());
        }
    });
    let exact = csp_value_unchecked(inst, &best.1);
    Ok((exact, CutAssignment::new(best.1).expect("labels are ±1")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete_bipartite, complete_graph, cut_value, cycle_graph, gen_erdos_renyi, WeightLaw};
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    #[test]
    fn known_values() {
        assert_eq!(exact_maxcut(&complete_graph(4)).unwrap().0, 4.0);
        assert_eq!(exact_maxcut(&cycle_graph(5)).unwrap().0, 4.0);
        assert_eq!(exact_maxcut(&complete_bipartite(3, 4)).unwrap().0, 12.0);
        assert_eq!(exact_maxcut(&Graph::new(1, []).unwrap()).unwrap().0, 0.0);
    }

    #[test]
    fn too_large_rejected() {
        let g = Graph::new(25, []).unwrap();
        assert!(matches!(exact_maxcut(&g), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn dominates_random_assignments_and_is_flip_symmetric() {
        let mut rng = rng_from_seed(1);
        for seed in 0..20 {
            let g = gen_erdos_renyi(11, 0.5, WeightLaw::Uniform, seed).unwrap().graph;
            let (opt, x) = exact_maxcut(&g).unwrap();
            assert_eq!(cut_value(&g, &x).unwrap(), opt);
            assert_eq!(cut_value(&g, &x.negated()).unwrap(), opt);
            for _ in 0..100 {
                let y =
                    CutAssignment::new((0..11).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()).unwrap();
                assert!(cut_value(&g, &y).unwrap() <= opt);
            }
        }
    }

    #[test]
    fn matches_plain_enumeration() {
        for seed in 0..10 {
            let g = gen_erdos_renyi(9, 0.6, WeightLaw::Uniform, 50 + seed).unwrap().graph;
            let brute = (0u32..1 << 9)
                .map(|mask| {
                    let x: Vec<i8> = (0..9).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
                    cut_value_unchecked(&g, &x)
                })
                .fold(0.0, f64::max);
            assert!((exact_maxcut(&g).unwrap().0 - brute).abs() < 1e-9);
        }
    }
}
