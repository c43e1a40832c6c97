//! Linear programs of the form
//!
//! ```text
//! min ⟨c, x⟩  over x ∈ [−1, 1]ⁿ
//! s.t. Σ_k |⟨g_k, x⟩ + h_k| ≤ B_t   for every group t
//! ```
//!
//! Each absolute value is split as `⟨g_k, x⟩ + h_k = p_k − q_k` with
//! `p_k, q_k ≥ 0`, and the group budget becomes `Σ (p_k + q_k) ≤ B_t`. At an
//! optimum at most one of `p_k, q_k` is positive, so this is equivalent to
//! the single-slack linearisation `s_k ≥ ±(⟨g_k, x⟩ + h_k)`. The resulting
//! standard-form program is solved by a dense two-phase primal simplex with
//! bounded variables (Dantzig pricing, Bland's rule after a run of degenerate
//! pivots).

use crate::error::{Error, Result};

/// One affine form `⟨g, x⟩ + h` with sparse coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsForm {
    pub coeffs: Vec<(usize, f64)>,
    pub offset: f64,
}

impl AbsForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsGroup {
    pub forms: Vec<AbsForm>,
    pub budget: f64,
}

impl AbsGroup {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.forms.iter().map(|f| f.eval(x).abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsSumLp {
    pub objective: Vec<f64>,
    pub groups: Vec<AbsGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub status: LpStatus,
}

impl AbsSumLp {
    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("objective has non-finite entries".into()));
        }
        for g in &self.groups {
            if !(g.budget.is_finite() && g.budget >= 0.0) {
                return Err(Error::Domain(format!("invalid group budget {}", g.budget)));
            }
            if g.forms.is_empty() {
                return Err(Error::Domain("empty constraint group".into()));
            }
            for f in &g.forms {
                if !f.offset.is_finite() {
                    return Err(Error::Domain("non-finite form offset".into()));
                }
                for &(j, a) in &f.coeffs {
                    if j >= n {
                        return Err(Error::Dimension {
                            expected: n,
                            got: j + 1,
                        });
                    }
                    if !a.is_finite() {
                        return Err(Error::Domain("non-finite form coefficient".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of the box and of every group budget at `x`.
    pub fn max_violation(&self, x: &[f64]) -> (f64, f64) {
        let box_v = x.iter().map(|v| (v.abs() - 1.0).max(0.0)).fold(0.0, f64::max);
        let group_v = self
            .groups
            .iter()
            .map(|g| (g.lhs(x) - g.budget).max(0.0))
            .fold(0.0, f64::max);
        (box_v, group_v)
    }
}

const PIVOT_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum State {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    cols: usize,
    /// Row-major `m × cols`, the current `B⁻¹ A`.
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    upper: Vec<f64>,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.cols..(r + 1) * self.cols]
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::AtLower => 0.0,
            State::AtUpper => self.upper[j],
            State::Basic => self.beta[self.basis.iter().position(|&b| b == j).unwrap()],
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (dj, &a) in d.iter_mut().zip(self.row(r)) {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            d[b] = 0.0;
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let cols = self.cols;
        let piv = self.t[r * cols + j];
        let inv = 1.0 / piv;
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v *= inv;
        }
        self.t[r * cols + j] = 1.0;
        let prow: Vec<f64> = self.row(r).to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f != 0.0 {
                let row = &mut self.t[i * cols..(i + 1) * cols];
                for (v, &p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = d[j];
        if f != 0.0 {
            for (dv, &p) in d.iter_mut().zip(&prow) {
                *dv -= f * p;
            }
            d[j] = 0.0;
        }
    }

    /// Primal simplex on `cost` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[f64], max_iter: usize) -> Outcome {
        let scale = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if scale == 0.0 {
            return Outcome::Optimal;
        }
        let dtol = 1e-9 * scale;
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        for iter in 0..max_iter {
            if iter % 64 == 63 {
                d = self.reduced_costs(cost);
            }
            let bland = degenerate_run >= BLAND_AFTER;
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.cols {
                let score = match self.state[j] {
                    State::AtLower if d[j] < -dtol && self.upper[j] > 0.0 => -d[j],
                    State::AtUpper if d[j] > dtol => d[j],
                    _ => continue,
                };
                if bland {
                    enter = Some(j);
                    break;
                }
                if score > best {
                    best = score;
                    enter = Some(j);
                }
            }
            let Some(j) = enter else {
                return Outcome::Optimal;
            };
            let dir = if self.state[j] == State::AtLower { 1.0 } else { -1.0 };

            // ratio test: θ ≥ 0 is the step of the entering variable along dir
            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_key = (f64::INFINITY, 0.0f64, usize::MAX);
            for r in 0..self.m {
                let alpha = dir * self.t[r * self.cols + j];
                let b = self.basis[r];
                let (ratio, to_upper) = if alpha > PIVOT_TOL {
                    ((self.beta[r].max(0.0)) / alpha, false)
                } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                    (((self.upper[b] - self.beta[r]).max(0.0)) / -alpha, true)
                } else {
                    continue;
                };
                let tie = ratio <= leave_key.0 + 1e-12;
                let better = ratio < leave_key.0 - 1e-12
                    || (tie
                        && if bland {
                            b < leave_key.2
                        } else {
                            alpha.abs() > leave_key.1
                        });
                if better {
                    leave_key = (ratio, alpha.abs(), b);
                    leave = Some((r, to_upper));
                }
            }
            if leave_key.0 < theta {
                theta = leave_key.0;
            } else {
                leave = None;
            }
            if !theta.is_finite() {
                return Outcome::Unbounded;
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for r in 0..self.m {
                let a = self.t[r * self.cols + j];
                if a != 0.0 {
                    self.beta[r] -= theta * dir * a;
                }
            }
            match leave {
                None => {
                    // bound flip of the entering variable
                    self.state[j] = if self.state[j] == State::AtLower {
                        State::AtUpper
                    } else {
                        State::AtLower
                    };
                }
                Some((r, to_upper)) => {
                    let entering_value = match self.state[j] {
                        State::AtLower => theta,
                        _ => self.upper[j] - theta,
                    };
                    let out = self.basis[r];
                    self.state[out] = if to_upper { State::AtUpper } else { State::AtLower };
                    self.state[j] = State::Basic;
                    self.basis[r] = j;
                    self.pivot(r, j, &mut d);
                    self.beta[r] = entering_value;
                }
            }
        }
        Outcome::IterationLimit
    }
}

/// Solves an [`AbsSumLp`]; see the module docs for the formulation.
pub fn solve(lp: &AbsSumLp) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n();
    let forms: Vec<(&AbsForm, usize)> = lp
        .groups
        .iter()
        .enumerate()
        .flat_map(|(t, g)| g.forms.iter().map(move |f| (f, t)))
        .collect();
    let kf = forms.len();
    let tg = lp.groups.len();
    let m = kf + tg;

    // columns: y (n, x = y − 1, ub 2) | p_k, q_k (2kf) | σ_t (tg) | art_t (tg)
    let col_p = |k: usize| n + 2 * k;
    let col_q = |k: usize| n + 2 * k + 1;
    let col_sigma = |t: usize| n + 2 * kf + t;
    let col_art = |t: usize| n + 2 * kf + tg + t;
    let cols = n + 2 * kf + 2 * tg;

    let mut tab = Tableau {
        m,
        cols,
        t: vec![0.0; m * cols],
        beta: vec![0.0; m],
        basis: vec![0; m],
        state: vec![State::AtLower; cols],
        upper: vec![f64::INFINITY; cols],
    };
    for j in 0..n {
        tab.upper[j] = 2.0;
    }

    // form rows: ⟨g, y⟩ − p + q = Σ g − h, with y = 0 initially
    let mut basic_is_p = vec![false; kf];
    for (k, (f, _)) in forms.iter().enumerate() {
        let rhs: f64 = f.coeffs.iter().map(|&(_, a)| a).sum::<f64>() - f.offset;
        let sign = if rhs >= 0.0 { 1.0 } else { -1.0 };
        let row = &mut tab.t[k * cols..(k + 1) * cols];
        for &(j, a) in &f.coeffs {
            row[j] += sign * a;
        }
        row[col_p(k)] = -sign;
        row[col_q(k)] = sign;
        tab.beta[k] = sign * rhs;
        if rhs >= 0.0 {
            tab.basis[k] = col_q(k);
        } else {
            tab.basis[k] = col_p(k);
            basic_is_p[k] = true;
        }
        tab.state[tab.basis[k]] = State::Basic;
    }

    // budget rows: Σ (p + q) + σ = B, with the basic p/q eliminated
    let mut needs_phase1 = false;
    for t in 0..tg {
        let r = kf + t;
        let mut row = vec![0.0; cols];
        let mut rhs = lp.groups[t].budget;
        for (k, (_, gt)) in forms.iter().enumerate() {
            if *gt != t {
                continue;
            }
            row[col_p(k)] += 1.0;
            row[col_q(k)] += 1.0;
            // subtract the normalised form row (its basic column has coefficient 1)
            let frow = &tab.t[k * cols..(k + 1) * cols];
            for (v, &a) in row.iter_mut().zip(frow) {
                *v -= a;
            }
            rhs -= tab.beta[k];
        }
        row[col_sigma(t)] = 1.0;
        if rhs >= 0.0 {
            tab.basis[r] = col_sigma(t);
            tab.beta[r] = rhs;
            tab.upper[col_art(t)] = 0.0;
        } else {
            for v in &mut row {
                *v = -*v;
            }
            row[col_art(t)] = 1.0;
            tab.basis[r] = col_art(t);
            tab.beta[r] = -rhs;
            needs_phase1 = true;
        }
        tab.state[tab.basis[r]] = State::Basic;
        tab.t[r * cols..(r + 1) * cols].copy_from_slice(&row);
    }

    let max_iter = 50 * (m + cols) + 1000;
    if needs_phase1 {
        let mut cost = vec![0.0; cols];
        for t in 0..tg {
            cost[col_art(t)] = 1.0;
        }
        match tab.optimize(&cost, max_iter) {
            Outcome::Optimal => {}
            Outcome::Unbounded | Outcome::IterationLimit => {
                return Err(Error::Precondition("simplex failed in phase 1".into()));
            }
        }
        let infeas: f64 = (0..tg).map(|t| tab.value(col_art(t))).sum();
        let scale = 1.0 + lp.groups.iter().map(|g| g.budget).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return Ok(LpSolution {
                x: vec![0.0; n],
                objective_value: 0.0,
                status: LpStatus::Infeasible,
            });
        }
        for t in 0..tg {
            tab.upper[col_art(t)] = 0.0;
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    match tab.optimize(&cost, max_iter) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Err(Error::Precondition("LP reported unbounded".into())),
        Outcome::IterationLimit => return Err(Error::Precondition("simplex iteration limit reached".into())),
    }

    let mut y = vec![0.0; n];
    for (j, yj) in y.iter_mut().enumerate() {
        *yj = tab.value(j);
    }
    let x: Vec<f64> = y.iter().map(|v| (v - 1.0).clamp(-1.0, 1.0)).collect();
    Ok(LpSolution {
        objective_value: lp.objective_at(&x),
        x,
        status: LpStatus::Optimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn single(objective: Vec<f64>, forms: Vec<AbsForm>, budget: f64) -> AbsSumLp {
        AbsSumLp {
            objective,
            groups: vec![AbsGroup { forms, budget }],
        }
    }

    #[test]
    fn interval_example() {
        // min x s.t. |x − 1| ≤ 0.5
        let lp = single(
            vec![1.0],
            vec![AbsForm {
                coeffs: vec![(0, 1.0)],
                offset: -1.0,
            }],
            0.5,
        );
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.5).abs() < 1e-9);
        assert!((s.objective_value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_objective() {
        let lp = single(
            vec![0.0, 0.0],
            vec![AbsForm {
                coeffs: vec![(0, 1.0), (1, 1.0)],
                offset: 0.3,
            }],
            1.0,
        );
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective_value, 0.0);
        let (bv, gv) = lp.max_violation(&s.x);
        assert!(bv <= 1e-9 && gv <= 1e-7);
    }

    #[test]
    fn infeasible_detected() {
        // |x − 3| ≤ 0.5 with x ∈ [−1, 1]
        let lp = single(
            vec![1.0],
            vec![AbsForm {
                coeffs: vec![(0, 1.0)],
                offset: -3.0,
            }],
            0.5,
        );
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn zero_budget_is_equality() {
        // |x0 + x1 − 0.5| ≤ 0, min x0 − x1 → x0 = −0.5, x1 = 1
        let lp = single(
            vec![1.0, -1.0],
            vec![AbsForm {
                coeffs: vec![(0, 1.0), (1, 1.0)],
                offset: -0.5,
            }],
            0.0,
        );
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 0.5).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let lp = single(
            vec![1.0],
            vec![AbsForm {
                coeffs: vec![(3, 1.0)],
                offset: 0.0,
            }],
            1.0,
        );
        assert!(matches!(solve(&lp), Err(Error::Dimension { .. })));
    }

    pub(crate) fn random_lp(n: usize, groups: usize, forms: usize, seed: u64) -> AbsSumLp {
        let mut rng = rng_from_seed(seed);
        AbsSumLp {
            objective: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            groups: (0..groups)
                .map(|_| AbsGroup {
                    forms: (0..forms)
                        .map(|_| AbsForm {
                            coeffs: (0..n)
                                .filter_map(|j| {
                                    let keep = rng.random::<f64>() < 0.7;
                                    let a = rng.random_range(-2.0..2.0);
                                    keep.then_some((j, a))
                                })
                                .collect(),
                            offset: rng.random_range(-2.0..2.0),
                        })
                        .collect(),
                    budget: rng.random_range(0.2..3.0),
                })
                .collect(),
        }
    }

    #[test]
    fn random_solutions_are_feasible() {
        for seed in 0..200 {
            let lp = random_lp(
                6 + (seed as usize % 20),
                1 + seed as usize % 3,
                4 + seed as usize % 9,
                seed,
            );
            let s = solve(&lp).unwrap();
            if s.status == LpStatus::Optimal {
                let (bv, gv) = lp.max_violation(&s.x);
                assert!(bv <= 1e-9, "box {bv}");
                assert!(gv <= 1e-7, "group {gv} seed {seed}");
            }
        }
    }

    #[test]
    fn scaling_objective_keeps_argmin() {
        for seed in 0..40 {
            let lp = random_lp(10, 2, 6, seed);
            let base = solve(&lp).unwrap();
            for lambda in [0.5, 2.0, 8.0, 1024.0] {
                let mut scaled = lp.clone();
                for c in &mut scaled.objective {
                    *c *= lambda;
                }
                let s = solve(&scaled).unwrap();
                assert_eq!(s.status, base.status);
                assert_eq!(s.x, base.x, "seed {seed} lambda {lambda}");
            }
        }
    }

    /// Minimum of the single-slack linearisation by enumerating every basis
    /// of its inequality system (n + K variables, all constraints explicit).
    fn vertex_enumeration(lp: &AbsSumLp) -> Option<f64> {
        let n = lp.n();
        let forms: Vec<(&AbsForm, usize)> = lp
            .groups
            .iter()
            .enumerate()
            .flat_map(|(t, g)| g.forms.iter().map(move |f| (f, t)))
            .collect();
        let nv = n + forms.len();
        // rows a·z ≤ b over z = (x, s)
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for j in 0..n {
            let mut a = vec![0.0; nv];
            a[j] = 1.0;
            rows.push((a.clone(), 1.0));
            a[j] = -1.0;
            rows.push((a, 1.0));
        }
        for (k, (f, _)) in forms.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let mut a = vec![0.0; nv];
                for &(j, g) in &f.coeffs {
                    a[j] += sign * g;
                }
                a[n + k] = -1.0;
                rows.push((a, -sign * f.offset));
            }
        }
        for (t, g) in lp.groups.iter().enumerate() {
            let mut a = vec![0.0; nv];
            for (k, (_, gt)) in forms.iter().enumerate() {
                if *gt == t {
                    a[n + k] = 1.0;
                }
            }
            rows.push((a, g.budget));
        }
        let mut best: Option<f64> = None;
        let mut pick: Vec<usize> = (0..nv).collect();
        loop {
            if let Some(z) = solve_square(&rows, &pick, nv) {
                if rows
                    .iter()
                    .all(|(a, b)| a.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>() <= b + 1e-9)
                {
                    let v = lp.objective_at(&z[..n]);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
            // next combination
            let mut i = nv;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if pick[i] < rows.len() - nv + i {
                    pick[i] += 1;
                    for l in i + 1..nv {
                        pick[l] = pick[l - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn solve_square(rows: &[(Vec<f64>, f64)], pick: &[usize], nv: usize) -> Option<Vec<f64>> {
        let mut m: Vec<Vec<f64>> = pick
            .iter()
            .map(|&r| {
                let mut row = rows[r].0.clone();
                row.push(rows[r].1);
                row
            })
            .collect();
        for c in 0..nv {
            let p = (c..nv).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
            if m[p][c].abs() < 1e-10 {
                return None;
            }
            m.swap(c, p);
            for r in 0..nv {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    if f != 0.0 {
                        for k in c..=nv {
                            m[r][k] -= f * m[c][k];
                        }
                    }
                }
            }
        }
        Some((0..nv).map(|c| m[c][nv] / m[c][c]).collect())
    }

    #[test]
    fn matches_vertex_enumeration() {
        let mut checked = 0;
        for seed in 0..60 {
            let mut lp = random_lp(5, 1, 2, 1000 + seed);
            if seed % 3 == 0 {
                lp = random_lp(3, 2, 1, 2000 + seed);
            }
            let s = solve(&lp).unwrap();
            match vertex_enumeration(&lp) {
                None => assert_eq!(s.status, LpStatus::Infeasible, "seed {seed}"),
                Some(opt) => {
                    assert_eq!(s.status, LpStatus::Optimal, "seed {seed}");
                    assert!(
                        (s.objective_value - opt).abs() <= 1e-6 * (1.0 + opt.abs()),
                        "seed {seed}: {} vs {opt}",
                        s.objective_value
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn no_feasible_point_beats_the_optimum() {
        let mut rng = rng_from_seed(99);
        for seed in 0..30 {
            let lp = random_lp(8, 2, 5, 3000 + seed);
            let s = solve(&lp).unwrap();
            let scale = 1.0 + lp.objective.iter().map(|c| c.abs()).sum::<f64>();
            for _ in 0..2000 {
                let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (_, gv) = lp.max_violation(&x);
                if gv == 0.0 {
                    assert_eq!(s.status, LpStatus::Optimal);
                    assert!(lp.objective_at(&x) >= s.objective_value - 1e-6 * scale);
                }
            }
        }
    }
}
