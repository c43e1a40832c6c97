//! Low-rank MaxCut semidefinite relaxations and their roundings.
//!
//! Vectors live in `k = ⌈√(2n)⌉ + 1` dimensions. Row 0 of the vector table
//! is the reference vector `v_0 = e_1`; vertex `i` is row `i + 1`. Pinned
//! vertices are set to `±e_1` and never touched by the solver, so pins hold
//! bit-exactly.
//!
//! The plain relaxation is solved by the mixing method: each free `v_i` is
//! replaced in turn by the unit vector opposite to `Σ_j w_ij v_j`, which is
//! the exact maximiser of the objective in that block. Triangle inequalities
//! are added through an augmented Lagrangian over the violated triples, and a
//! lower bound on the SDP weight of an edge subset through a Lagrange weight
//! on those edges.

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::{CutAssignment, Graph};
use crate::rng::{derive_named, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetConstraint {
    /// Indices into `Graph::edges`.
    pub edges: Vec<usize>,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConfig {
    pub fixed_labels: Vec<(usize, i8)>,
    pub subset_constraint: Option<SubsetConstraint>,
    pub triangle: bool,
    /// Relative objective change per sweep below which the solver stops.
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SdpConfig {
    fn default() -> Self {
        SdpConfig {
            fixed_labels: Vec::new(),
            subset_constraint: None,
            triangle: false,
            tolerance: 1e-10,
            max_iters: 5000,
            seed: 0,
        }
    }
}

impl SdpConfig {
    pub fn with_seed(seed: u64) -> Self {
        SdpConfig {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Converged,
    IterationLimit,
    /// The subset lower bound could not be reached.
    InfeasibleAtTau,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeasibilityReport {
    pub unit_norm: f64,
    pub triangle: Option<f64>,
    /// `τ − Σ_{E′}` contribution, clipped at zero.
    pub subset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub dim: usize,
    /// Row-major `(n + 1) × dim` table; row 0 is `v_0`.
    pub vectors: Vec<f64>,
    pub objective_value: f64,
    /// Pinned label per vertex, `0` when free.
    pub fixed: Vec<i8>,
    pub report: FeasibilityReport,
    pub status: SdpStatus,
    /// Upper bound on the triangle relaxation's optimum, from the final
    /// multipliers. Absent for the other relaxations.
    pub upper_bound: Option<f64>,
}

impl SdpSolution {
    pub fn n(&self) -> usize {
        self.fixed.len()
    }

    pub fn v0(&self) -> &[f64] {
        &self.vectors[..self.dim]
    }

    /// Vector of vertex `i`.
    pub fn vector(&self, i: usize) -> &[f64] {
        let k = self.dim;
        &self.vectors[(i + 1) * k..(i + 2) * k]
    }

    pub fn gram(&self, i: usize, j: usize) -> f64 {
        dot(self.vector(i), self.vector(j))
    }

    /// `μ_i = ⟨v_0, v_i⟩`.
    pub fn mu(&self, i: usize) -> f64 {
        dot(self.v0(), self.vector(i))
    }

    /// Builds a solution from explicit vertex vectors (`v_0 = e_1`).
    pub fn from_vectors(g: &Graph, dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != g.n() {
            return Err(Error::Dimension {
                expected: g.n(),
                got: rows.len(),
            });
        }
        let mut vectors = vec![0.0; (g.n() + 1) * dim];
        vectors[0] = 1.0;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: r.len(),
                });
            }
            let norm = dot(r, r).sqrt();
            if norm == 0.0 {
                return Err(Error::Domain(format!("zero vector for vertex {i}")));
            }
            for (d, v) in vectors[(i + 1) * dim..(i + 2) * dim].iter_mut().zip(r) {
                *d = v / norm;
            }
        }
        let mut sol = SdpSolution {
            dim,
            vectors,
            objective_value: 0.0,
            fixed: vec![0; g.n()],
            report: FeasibilityReport::default(),
            status: SdpStatus::Converged,
            upper_bound: None,
        };
        sol.objective_value = sdp_objective(g, &sol)?;
        sol.report.unit_norm = unit_norm_violation(&sol);
        Ok(sol)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = dot(v, v).sqrt();
    if norm > 1e-300 && norm.is_finite() {
        for x in v.iter_mut() {
            *x /= norm;
        }
        true
    } else {
        false
    }
}

pub fn embedding_dim(n: usize) -> usize {
    ((2.0 * n as f64).sqrt().ceil() as usize + 1).max(2)
}

/// `Σ_edges w_ij (1 − ⟨v_i, v_j⟩) / 2`.
pub fn sdp_objective(g: &Graph, sol: &SdpSolution) -> Result<f64> {
    if sol.n() != g.n() || sol.vectors.len() != (g.n() + 1) * sol.dim {
        return Err(Error::Dimension {
            expected: g.n(),
            got: sol.n(),
        });
    }
    Ok(g.edges().iter().map(|e| e.w * (1.0 - sol.gram(e.i, e.j)) / 2.0).sum())
}

fn unit_norm_violation(sol: &SdpSolution) -> f64 {
    (0..=sol.n())
        .map(|r| {
            let v = &sol.vectors[r * sol.dim..(r + 1) * sol.dim];
            (dot(v, v).sqrt() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest violation of `s(⟨v_j,v_k⟩ + ⟨v_i,v_k⟩) ≤ 1 + ⟨v_i,v_j⟩` over all
/// ordered triples of distinct vertices and both signs.
pub fn max_triangle_violation(sol: &SdpSolution) -> f64 {
    let n = sol.n();
    let gram = gram_matrix(sol);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let gij = gram[i * n + j];
            for k in j + 1..n {
                let gjk = gram[j * n + k];
                let gik = gram[i * n + k];
                for c in triangle_slacks(gij, gjk, gik) {
                    worst = worst.max(-c);
                }
            }
        }
    }
    worst
}

/// The four distinct inequalities `1 + s·(G_ij, G_jk, G_ik) ≥ 0`.
const TRIANGLE_SIGNS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

fn triangle_slacks(gij: f64, gjk: f64, gik: f64) -> [f64; 4] {
    TRIANGLE_SIGNS.map(|s| 1.0 + s[0] * gij + s[1] * gjk + s[2] * gik)
}

fn gram_matrix(sol: &SdpSolution) -> Vec<f64> {
    let n = sol.n();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = sol.gram(i, j);
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    gram
}

fn pin_vector(n: usize, pins: &[(usize, i8)]) -> Result<Vec<i8>> {
    let mut fixed = vec![0i8; n];
    for &(i, s) in pins {
        if i >= n {
            return Err(Error::InvalidVertex { vertex: i, n });
        }
        if s != 1 && s != -1 {
            return Err(Error::Domain(format!("pin label {s} is not ±1")));
        }
        if fixed[i] != 0 && fixed[i] != s {
            return Err(Error::ContradictoryPins(i));
        }
        fixed[i] = s;
    }
    Ok(fixed)
}

struct State<'a> {
    g: &'a Graph,
    n: usize,
    k: usize,
    v: Vec<f64>,
    fixed: Vec<i8>,
    bound: Option<f64>,
}

impl<'a> State<'a> {
    fn new(g: &'a Graph, fixed: Vec<i8>, seed: u64) -> Self {
        let n = g.n();
        let k = embedding_dim(n);
        let mut rng = rng_from_seed(derive_named(seed, "sdp-init"));
        let mut v = vec![0.0; (n + 1) * k];
        v[0] = 1.0;
        for i in 0..n {
            let row = &mut v[(i + 1) * k..(i + 2) * k];
            if fixed[i] != 0 {
                row[0] = fixed[i] as f64;
                continue;
            }
            loop {
                for x in row.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                if normalize(row) {
                    break;
                }
            }
        }
        State {
            g,
            n,
            k,
            v,
            fixed,
            bound: None,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.v[(i + 1) * self.k..(i + 2) * self.k]
    }

    /// Pads every vector to `new_k` coordinates, nudging free vectors into
    /// the new directions so ascent can use them.
    fn lift(&mut self, new_k: usize, seed: u64) {
        if new_k <= self.k {
            return;
        }
        let mut rng = rng_from_seed(derive_named(seed, "sdp-lift"));
        let mut v = vec![0.0; (self.n + 1) * new_k];
        for r in 0..=self.n {
            v[r * new_k..r * new_k + self.k].copy_from_slice(&self.v[r * self.k..(r + 1) * self.k]);
            if r > 0 && self.fixed[r - 1] == 0 {
                let row = &mut v[r * new_k..(r + 1) * new_k];
                for x in &mut row[self.k..] {
                    *x = 1e-3 * rng.sample::<f64, _>(StandardNormal);
                }
                normalize(row);
            }
        }
        self.v = v;
        self.k = new_k;
    }

    fn objective(&self, extra: &[f64]) -> f64 {
        self.g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, ed)| (ed.w + extra[e]) * (1.0 - dot(self.row(ed.i), self.row(ed.j))) / 2.0)
            .sum()
    }

    /// Mixing-method sweeps with edge weights `w_e + extra_e`.
    fn mix(&mut self, extra: &[f64], tol: f64, max_iters: usize) -> bool {
        let k = self.k;
        // neighbour lists carrying edge ids so per-edge extra weights apply
        let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for (e, ed) in self.g.edges().iter().enumerate() {
            let w = ed.w + extra[e];
            if w != 0.0 {
                nbrs[ed.i].push((ed.j, w));
                nbrs[ed.j].push((ed.i, w));
            }
        }
        let scale = self
            .g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, ed)| (ed.w + extra[e]).abs())
            .sum::<f64>()
            .max(1e-300);
        let mut prev = self.objective(extra);
        let mut acc = vec![0.0; k];
        for _ in 0..max_iters {
            for i in 0..self.n {
                if self.fixed[i] != 0 || nbrs[i].is_empty() {
                    continue;
                }
                acc.iter_mut().for_each(|a| *a = 0.0);
                for &(j, w) in &nbrs[i] {
                    let r = &self.v[(j + 1) * k..(j + 2) * k];
                    for (a, x) in acc.iter_mut().zip(r) {
                        *a -= w * x;
                    }
                }
                if normalize(&mut acc) {
                    self.v[(i + 1) * k..(i + 2) * k].copy_from_slice(&acc);
                }
            }
            let cur = self.objective(extra);
            if (cur - prev).abs() <= tol * scale {
                return true;
            }
            prev = cur;
        }
        false
    }

    fn into_solution(self, status: SdpStatus) -> SdpSolution {
        let mut sol = SdpSolution {
            dim: self.k,
            vectors: self.v,
            objective_value: 0.0,
            fixed: self.fixed,
            report: FeasibilityReport::default(),
            status,
            upper_bound: self.bound,
        };
        sol.objective_value = sdp_objective(self.g, &sol).unwrap_or(0.0);
        sol.report.unit_norm = unit_norm_violation(&sol);
        sol
    }
}

/// Solves the configured relaxation.
pub fn solve_sdp(g: &Graph, cfg: &SdpConfig) -> Result<SdpSolution> {
    if g.n() == 0 {
        return Err(Error::Precondition("graph has no vertices".into()));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let fixed = pin_vector(g.n(), &cfg.fixed_labels)?;
    let m = g.edges().len();
    let mut subset_mask = vec![false; m];
    if let Some(sc) = &cfg.subset_constraint {
        if !(sc.tau >= 0.0) {
            return Err(Error::param("tau", "must be nonnegative"));
        }
        if sc.tau > g.total_weight() {
            return Err(Error::param("tau", "exceeds the total weight W"));
        }
        for &e in &sc.edges {
            if e >= m {
                return Err(Error::Domain(format!("edge index {e} out of range")));
            }
            subset_mask[e] = true;
        }
    }

    let mut state = State::new(g, fixed, cfg.seed);
    let solve_with = |state: &mut State, lambda: f64| -> bool {
        let extra: Vec<f64> = g
            .edges()
            .iter()
            .zip(&subset_mask)
            .map(|(e, &s)| if s { lambda * e.w } else { 0.0 })
            .collect();
        if cfg.triangle {
            triangle_solve(state, &extra, cfg)
        } else {
            state.mix(&extra, cfg.tolerance, cfg.max_iters)
        }
    };

    let Some(sc) = &cfg.subset_constraint else {
        let ok = solve_with(&mut state, 0.0);
        let mut sol = state.into_solution(if ok {
            SdpStatus::Converged
        } else {
            SdpStatus::IterationLimit
        });
        if cfg.triangle {
            sol.report.triangle = Some(max_triangle_violation(&sol));
        }
        return Ok(sol);
    };

    let subset_value = |state: &State| -> f64 {
        g.edges()
            .iter()
            .zip(&subset_mask)
            .filter(|(_, &s)| s)
            .map(|(e, _)| e.w * (1.0 - dot(state.row(e.i), state.row(e.j))) / 2.0)
            .sum()
    };
    let slack = 1e-4 * g.total_weight().max(1e-300);
    let meets = |state: &State| subset_value(state) >= sc.tau - slack;

    let mut ok = solve_with(&mut state, 0.0);
    let mut status = SdpStatus::Converged;
    if !meets(&state) {
        // grow the multiplier until the bound holds, then bisect
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut feasible: Option<(Vec<f64>, bool)> = None;
        for _ in 0..24 {
            ok = solve_with(&mut state, hi);
            if meets(&state) {
                feasible = Some((state.v.clone(), ok));
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        match feasible {
            None => status = SdpStatus::InfeasibleAtTau,
            Some((mut best, mut best_ok)) => {
                for _ in 0..30 {
                    if hi - lo <= 1e-6 * hi {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let r = solve_with(&mut state, mid);
                    if meets(&state) {
                        hi = mid;
                        best.clone_from(&state.v);
                        best_ok = r;
                    } else {
                        lo = mid;
                    }
                }
                state.v = best;
                ok = best_ok;
            }
        }
    }
    if status == SdpStatus::Converged && !ok {
        status = SdpStatus::IterationLimit;
    }
    let sv = subset_value(&state);
    let mut sol = state.into_solution(status);
    // any bound refers to the reweighted problem, not the constrained one
    sol.upper_bound = None;
    sol.report.subset = Some((sc.tau - sv).max(0.0));
    if cfg.triangle {
        sol.report.triangle = Some(max_triangle_violation(&sol));
    }
    Ok(sol)
}

const TRIANGLE_TARGET: f64 = 1e-4;
/// Violation accepted when the solver runs out of outer iterations.
const TRIANGLE_CHECK: f64 = 1e-3;

/// Embedding dimension for the triangle-constrained relaxation: the many
/// active inequalities allow optimal solutions of higher rank.
pub fn triangle_rank(n: usize) -> usize {
    n.max(embedding_dim(n))
}

/// Augmented Lagrangian over an active set of triangle inequalities,
/// starting from the plain relaxation.
fn triangle_solve(state: &mut State, extra: &[f64], cfg: &SdpConfig) -> bool {
    let n = state.n;
    let converged = state.mix(extra, cfg.tolerance, cfg.max_iters);
    // the plain optimum bounds the constrained one from above
    state.bound = Some(state.objective(extra));
    if n < 3 {
        return converged;
    }
    if scan_triangles(state, |_, _| {}) <= TRIANGLE_TARGET {
        return converged;
    }
    let mut wmat = vec![0.0; n * n];
    for (e, ed) in state.g.edges().iter().enumerate() {
        let w = ed.w + extra[e];
        wmat[ed.i * n + ed.j] = w;
        wmat[ed.j * n + ed.i] = w;
    }
    let wmax = wmat.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    let free: Vec<bool> = state.fixed.iter().map(|&f| f == 0).collect();
    if wmax == 0.0 {
        // no objective: the all-equal configuration satisfies every triangle
        let k = state.k;
        for i in (0..n).filter(|&i| free[i]) {
            let row = &mut state.v[(i + 1) * k..(i + 2) * k];
            row.iter_mut().for_each(|x| *x = 0.0);
            row[0] = 1.0;
        }
        return scan_triangles(state, |_, _| {}) <= TRIANGLE_CHECK;
    }
    state.lift(triangle_rank(n), cfg.seed);
    let k = state.k;

    // active constraints: (i, j, l, pattern) with i < j < l
    let mut active: Vec<(u32, u32, u32, u8)> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let mut in_active = std::collections::HashSet::new();
    let rho = 10.0 * wmax;
    let mut prev_objective = f64::NAN;
    let scale: f64 = wmat.iter().map(|w| w.abs()).sum::<f64>() / 2.0;
    let mut settled = false;
    for _ in 0..100 {
        let violation = scan_triangles(state, |key, c| {
            if c < 1e-3 && in_active.insert(key) {
                active.push(key);
                lambda.push(0.0);
            }
        });
        // feasibility alone is not enough: the multipliers must have settled
        let objective = state.objective(extra);
        if violation <= TRIANGLE_TARGET && (objective - prev_objective).abs() <= 1e-8 * scale {
            settled = true;
            break;
        }
        prev_objective = objective;

        al_inner(state, &wmat, &free, &active, &lambda, rho, cfg.max_iters);

        let gram = gram_of(&state.v, n, k);
        for (t, &(i, j, l, p)) in active.iter().enumerate() {
            let (i, j, l) = (i as usize, j as usize, l as usize);
            let c = triangle_slacks(gram[i * n + j], gram[j * n + l], gram[i * n + l])[p as usize];
            lambda[t] = (lambda[t] - rho * c).max(0.0);
        }
    }
    let bound = lagrangian_bound(state, &wmat, &free, &active, &lambda, cfg);
    state.bound = Some(bound.min(state.bound.unwrap_or(f64::INFINITY)));
    settled || scan_triangles(state, |_, _| {}) <= TRIANGLE_CHECK
}

/// `max_X f(X) + Σ_t λ_t c_t(X)` over the elliptope, which bounds the
/// triangle-constrained optimum from above for any `λ ≥ 0`. The Lagrangian
/// is linear in `X`, so this is the plain relaxation with shifted pair
/// weights `w − 2m` plus the constant `Σ_t λ_t (1 + Σ s_t)`.
fn lagrangian_bound(
    state: &State,
    wmat: &[f64],
    free: &[bool],
    active: &[(u32, u32, u32, u8)],
    lambda: &[f64],
    cfg: &SdpConfig,
) -> f64 {
    let n = state.n;
    let k = state.k;
    let mut wp = wmat.to_vec();
    let mut constant = 0.0;
    for (&(i, j, l, p), &lam) in active.iter().zip(lambda) {
        if lam == 0.0 {
            continue;
        }
        let s = TRIANGLE_SIGNS[p as usize];
        constant += lam * (1.0 + s[0] + s[1] + s[2]);
        let (i, j, l) = (i as usize, j as usize, l as usize);
        for (a, b, sv) in [(i, j, s[0]), (j, l, s[1]), (i, l, s[2])] {
            wp[a * n + b] -= 2.0 * lam * sv;
            wp[b * n + a] -= 2.0 * lam * sv;
        }
    }
    let value = |v: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let a = &v[(i + 1) * k..(i + 2) * k];
            for j in i + 1..n {
                let w = wp[i * n + j];
                if w != 0.0 {
                    total += w * (1.0 - dot(a, &v[(j + 1) * k..(j + 2) * k])) / 2.0;
                }
            }
        }
        total
    };
    let scale = wp.iter().map(|w| w.abs()).sum::<f64>().max(1e-300) / 2.0;
    let mut v = state.v.clone();
    let mut acc = vec![0.0; k];
    let mut prev = value(&v);
    for _ in 0..cfg.max_iters {
        for i in (0..n).filter(|&i| free[i]) {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for j in (0..n).filter(|&j| j != i) {
                let w = wp[i * n + j];
                if w != 0.0 {
                    for (x, y) in acc.iter_mut().zip(&v[(j + 1) * k..(j + 2) * k]) {
                        *x -= w * y;
                    }
                }
            }
            if normalize(&mut acc) {
                v[(i + 1) * k..(i + 2) * k].copy_from_slice(&acc);
            }
        }
        let cur = value(&v);
        if (cur - prev).abs() <= cfg.tolerance * scale {
            break;
        }
        prev = cur;
    }
    value(&v) + constant
}

/// Visits every triangle inequality with its slack and returns the largest
/// violation.
fn scan_triangles(state: &State, mut visit: impl FnMut((u32, u32, u32, u8), f64)) -> f64 {
    let n = state.n;
    let gram = gram_of(&state.v, n, state.k);
    let mut violation = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            for l in j + 1..n {
                let cs = triangle_slacks(gram[i * n + j], gram[j * n + l], gram[i * n + l]);
                for (p, &c) in cs.iter().enumerate() {
                    violation = violation.max(-c);
                    visit((i as u32, j as u32, l as u32, p as u8), c);
                }
            }
        }
    }
    violation
}

fn gram_of(v: &[f64], n: usize, k: usize) -> Vec<f64> {
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        let a = &v[(i + 1) * k..(i + 2) * k];
        for j in i..n {
            let val = dot(a, &v[(j + 1) * k..(j + 2) * k]);
            gram[i * n + j] = val;
            gram[j * n + i] = val;
        }
    }
    gram
}

/// Value of the augmented Lagrangian and its derivative in every Gram entry.
fn al_value(
    gram: &[f64],
    n: usize,
    wmat: &[f64],
    active: &[(u32, u32, u32, u8)],
    lambda: &[f64],
    rho: f64,
    dmat: Option<&mut Vec<f64>>,
) -> f64 {
    let mut val = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let w = wmat[i * n + j];
            if w != 0.0 {
                val += w * (1.0 - gram[i * n + j]) / 2.0;
            }
        }
    }
    let mut d = dmat;
    if let Some(d) = d.as_deref_mut() {
        d.iter_mut().zip(wmat).for_each(|(x, w)| *x = -w / 2.0);
    }
    for (t, &(i, j, l, p)) in active.iter().enumerate() {
        let (i, j, l) = (i as usize, j as usize, l as usize);
        let s = TRIANGLE_SIGNS[p as usize];
        let c = 1.0 + s[0] * gram[i * n + j] + s[1] * gram[j * n + l] + s[2] * gram[i * n + l];
        let m = (lambda[t] - rho * c).max(0.0);
        val -= (m * m - lambda[t] * lambda[t]) / (2.0 * rho);
        if m > 0.0 {
            if let Some(d) = d.as_deref_mut() {
                for (a, b, sv) in [(i, j, s[0]), (j, l, s[1]), (i, l, s[2])] {
                    d[a * n + b] += m * sv;
                    d[b * n + a] += m * sv;
                }
            }
        }
    }
    val
}

fn riemannian_gradient(v: &[f64], dmat: &[f64], free: &[bool], n: usize, k: usize, grad: &mut [f64]) -> f64 {
    let mut gnorm2 = 0.0;
    for i in 0..n {
        let gi = &mut grad[(i + 1) * k..(i + 2) * k];
        gi.iter_mut().for_each(|x| *x = 0.0);
        if !free[i] {
            continue;
        }
        for j in 0..n {
            let d = dmat[i * n + j];
            if d != 0.0 && j != i {
                for (x, y) in gi.iter_mut().zip(&v[(j + 1) * k..(j + 2) * k]) {
                    *x += d * y;
                }
            }
        }
        let vi = &v[(i + 1) * k..(i + 2) * k];
        let proj = dot(gi, vi);
        for (x, y) in gi.iter_mut().zip(vi) {
            *x -= proj * y;
        }
        gnorm2 += dot(gi, gi);
    }
    gnorm2
}

/// Riemannian gradient ascent with Barzilai–Borwein steps and a
/// nonmonotone backtracking line search.
fn al_inner(
    state: &mut State,
    wmat: &[f64],
    free: &[bool],
    active: &[(u32, u32, u32, u8)],
    lambda: &[f64],
    rho: f64,
    max_iters: usize,
) -> bool {
    const MEMORY: usize = 8;
    let n = state.n;
    let k = state.k;
    let len = (n + 1) * k;
    let mut dmat = vec![0.0; n * n];
    let gram = gram_of(&state.v, n, k);
    let mut val = al_value(&gram, n, wmat, active, lambda, rho, Some(&mut dmat));
    let scale = wmat.iter().map(|w| w.abs()).sum::<f64>().max(1e-300);
    let mut grad = vec![0.0; len];
    let mut gnorm2 = riemannian_gradient(&state.v, &dmat, free, n, k, &mut grad);
    let mut step = 1.0 / (4.0 * rho + scale / n as f64);
    let mut history = std::collections::VecDeque::from([val]);
    let mut new_grad = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut flat = 0usize;
    for _ in 0..max_iters {
        if gnorm2 <= (1e-9 * scale).powi(2) {
            return true;
        }
        let floor = history.iter().copied().fold(f64::INFINITY, f64::min);
        let mut t = step;
        let mut accepted = None;
        for _ in 0..50 {
            trial.copy_from_slice(&state.v);
            for i in (0..n).filter(|&i| free[i]) {
                let row = &mut trial[(i + 1) * k..(i + 2) * k];
                for (x, gx) in row.iter_mut().zip(&grad[(i + 1) * k..(i + 2) * k]) {
                    *x += t * gx;
                }
                normalize(row);
            }
            let tg = gram_of(&trial, n, k);
            let tv = al_value(&tg, n, wmat, active, lambda, rho, None);
            if tv >= floor + 1e-4 * t * gnorm2 {
                accepted = Some((tg, tv));
                break;
            }
            t *= 0.5;
        }
        let Some((tg, tv)) = accepted else {
            return true;
        };
        let new_val = al_value(&tg, n, wmat, active, lambda, rho, Some(&mut dmat));
        debug_assert!((new_val - tv).abs() <= 1e-9 * (1.0 + tv.abs()));
        let new_gnorm2 = riemannian_gradient(&trial, &dmat, free, n, k, &mut new_grad);
        // BB step from the displacement and the gradient change
        let (mut ss, mut sy) = (0.0, 0.0);
        for ((a, b), (ga, gb)) in trial.iter().zip(&state.v).zip(new_grad.iter().zip(&grad)) {
            let sd = a - b;
            ss += sd * sd;
            sy += sd * (gb - ga);
        }
        step = if sy > 1e-300 {
            (ss / sy).clamp(1e-12, 1e12)
        } else {
            t * 2.0
        };
        std::mem::swap(&mut state.v, &mut trial);
        std::mem::swap(&mut grad, &mut new_grad);
        gnorm2 = new_gnorm2;
        if (new_val - val).abs() <= 1e-13 * scale {
            flat += 1;
            if flat >= 5 {
                return true;
            }
        } else {
            flat = 0;
        }
        val = new_val;
        history.push_back(val);
        if history.len() > MEMORY {
            history.pop_front();
        }
    }
    false
}

/// Standard Gaussian direction in `dim` dimensions.
pub fn gaussian_direction(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Standard Gaussian direction orthogonal to `v_0 = e_1`.
pub fn gaussian_orthogonal(sol: &SdpSolution, seed: u64) -> Vec<f64> {
    let mut g = gaussian_direction(sol.dim, seed);
    let v0 = sol.v0();
    let c = dot(&g, v0);
    for (x, y) in g.iter_mut().zip(v0) {
        *x -= c * y;
    }
    g
}

/// Hyperplane rounding along `g`, oriented so that `v_0` lands on `+1`.
pub fn hyperplane_round_with(sol: &SdpSolution, g: &[f64]) -> CutAssignment {
    let side = if dot(sol.v0(), g) >= 0.0 { 1.0 } else { -1.0 };
    let x = (0..sol.n())
        .map(|i| match sol.fixed[i] {
            0 => {
                if side * dot(sol.vector(i), g) > 0.0 {
                    1
                } else {
                    -1
                }
            }
            s => s,
        })
        .collect();
    CutAssignment::new(x).expect("labels are ±1")
}

pub fn hyperplane_round(sol: &SdpSolution, seed: u64) -> CutAssignment {
    hyperplane_round_with(sol, &gaussian_direction(sol.dim, seed))
}

/// Marginal-preserving threshold rounding.
pub fn rt_round(sol: &SdpSolution, seed: u64) -> CutAssignment {
    let g = gaussian_orthogonal(sol, seed);
    let normal = Normal::standard();
    let v0 = sol.v0();
    let x = (0..sol.n())
        .map(|i| {
            if sol.fixed[i] != 0 {
                return sol.fixed[i];
            }
            let v = sol.vector(i);
            let mu = dot(v0, v).clamp(-1.0, 1.0);
            let mut w: Vec<f64> = v.iter().zip(v0).map(|(a, b)| a - mu * b).collect();
            let norm = dot(&w, &w).sqrt();
            let xi = if norm <= 1e-9 {
                0.0
            } else {
                w.iter_mut().for_each(|a| *a /= norm);
                dot(&g, &w)
            };
            let t = if mu >= 1.0 {
                f64::INFINITY
            } else if mu <= -1.0 {
                f64::NEG_INFINITY
            } else {
                normal.inverse_cdf(mu / 2.0 + 0.5)
            };
            if xi <= t {
                1
            } else {
                -1
            }
        })
        .collect();
    CutAssignment::new(x).expect("labels are ±1")
}

/// Text dump: header `dim n objective`, a line of pins, then `n + 1` rows.
pub fn save_solution(sol: &SdpSolution) -> String {
    let mut s = format!("{} {} {:?}\n", sol.dim, sol.n(), sol.objective_value);
    let pins: Vec<String> = sol.fixed.iter().map(|f| f.to_string()).collect();
    s.push_str(&pins.join(" "));
    s.push('\n');
    for r in 0..=sol.n() {
        let row = &sol.vectors[r * sol.dim..(r + 1) * sol.dim];
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v:?}");
        }
        s.push('\n');
    }
    s
}

pub fn load_solution(text: &str) -> Result<SdpSolution> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 {
        return Err(Error::parse(1, "expected `dim n objective`"));
    }
    let dim: usize = h[0].parse().map_err(|_| Error::parse(1, "bad dim"))?;
    let n: usize = h[1].parse().map_err(|_| Error::parse(1, "bad n"))?;
    let objective_value: f64 = h[2].parse().map_err(|_| Error::parse(1, "bad objective"))?;
    let fixed: Vec<i8> = match lines.next() {
        Some((_, l)) => l
            .split_whitespace()
            .map(|t| t.parse::<i8>().map_err(|_| Error::parse(2, "bad pin")))
            .collect::<Result<_>>()?,
        None => return Err(Error::parse(2, "missing pin line")),
    };
    if fixed.len() != n {
        return Err(Error::parse(2, "pin count does not match n"));
    }
    let mut vectors = Vec::with_capacity((n + 1) * dim);
    for (ln, line) in lines {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::parse(ln + 1, "bad coordinate")))
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(Error::parse(ln + 1, "row length does not match dim"));
        }
        vectors.extend(row);
    }
    if vectors.len() != (n + 1) * dim {
        return Err(Error::parse(0, "wrong number of rows"));
    }
    let mut sol = SdpSolution {
        dim,
        vectors,
        objective_value,
        fixed,
        report: FeasibilityReport::default(),
        status: SdpStatus::Converged,
        upper_bound: None,
    };
    sol.report.unit_norm = unit_norm_violation(&sol);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete_bipartite, complete_graph, cycle_graph, gen_erdos_renyi, WeightLaw};

    fn edge() -> Graph {
        Graph::new(2, [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn single_edge_is_antipodal() {
        let sol = solve_sdp(&edge(), &SdpConfig::default()).unwrap();
        assert!((sol.objective_value - 1.0).abs() < 1e-9);
        assert!(sol.report.unit_norm < 1e-12);
    }

    #[test]
    fn triangle_k3_value() {
        // symmetric 120° configuration: each edge contributes (1 + 1/2)/2
        let oracle = 3.0 * (1.0 - (2.0 * std::f64::consts::PI / 3.0).cos()) / 2.0;
        let sol = solve_sdp(&complete_graph(3), &SdpConfig::default()).unwrap();
        assert!((sol.objective_value - oracle).abs() < 1e-7, "{}", sol.objective_value);
    }

    #[test]
    fn pinned_edge_has_zero_value() {
        let cfg = SdpConfig {
            fixed_labels: vec![(0, 1), (1, 1)],
            ..SdpConfig::default()
        };
        let sol = solve_sdp(&edge(), &cfg).unwrap();
        assert_eq!(sol.objective_value, 0.0);
        assert_eq!(sol.vector(0), sol.v0());
    }

    #[test]
    fn contradictory_pins_rejected() {
        let cfg = SdpConfig {
            fixed_labels: vec![(0, 1), (0, -1)],
            ..SdpConfig::default()
        };
        assert_eq!(solve_sdp(&edge(), &cfg), Err(Error::ContradictoryPins(0)));
    }

    #[test]
    fn tau_above_total_weight_rejected() {
        let cfg = SdpConfig {
            subset_constraint: Some(SubsetConstraint {
                edges: vec![0],
                tau: 2.5,
            }),
            ..SdpConfig::default()
        };
        assert!(solve_sdp(&edge(), &cfg).is_err());
    }

    #[test]
    fn pins_are_exact_and_free_vertex_goes_antipodal() {
        let cfg = SdpConfig {
            fixed_labels: vec![(0, -1)],
            ..SdpConfig::default()
        };
        let sol = solve_sdp(&edge(), &cfg).unwrap();
        assert_eq!(sol.vector(0)[0], -1.0);
        assert!(sol.vector(0)[1..].iter().all(|&x| x == 0.0));
        assert!((sol.mu(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bipartite_value() {
        let sol = solve_sdp(&complete_bipartite(2, 2), &SdpConfig::default()).unwrap();
        assert!((sol.objective_value - 4.0).abs() < 1e-8);
    }

    #[test]
    fn all_equal_vectors_score_zero() {
        let g = complete_graph(4);
        let rows = vec![vec![0.0, 1.0, 0.0]; 4];
        let sol = SdpSolution::from_vectors(&g, 3, &rows).unwrap();
        assert_eq!(sdp_objective(&g, &sol).unwrap(), 0.0);
    }

    #[test]
    fn objective_matches_dense_recomputation() {
        let g = gen_erdos_renyi(15, 0.5, WeightLaw::Uniform, 3).unwrap().graph;
        let sol = solve_sdp(&g, &SdpConfig::with_seed(4)).unwrap();
        let a = g.dense_adjacency();
        let n = g.n();
        let mut dense = 0.0;
        for i in 0..n {
            for j in 0..n {
                let gij: f64 = sol.vector(i).iter().zip(sol.vector(j)).map(|(x, y)| x * y).sum();
                dense += a[i * n + j] * (1.0 - gij) / 4.0;
            }
        }
        assert!((dense - sol.objective_value).abs() < 1e-8);
    }

    #[test]
    fn orthogonal_pair_cut_frequency() {
        let g = edge();
        let sol = SdpSolution::from_vectors(&g, 3, &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let cuts = (0..10_000u64)
            .filter(|&s| {
                let x = hyperplane_round(&sol, s);
                x[0] != x[1]
            })
            .count();
        let f = cuts as f64 / 1e4;
        assert!((f - 0.5).abs() <= 0.02, "{f}");
    }

    #[test]
    fn antipodal_and_identical_pairs() {
        let g = edge();
        let anti = SdpSolution::from_vectors(&g, 2, &[vec![0.3, 1.0], vec![-0.3, -1.0]]).unwrap();
        let same = SdpSolution::from_vectors(&g, 2, &[vec![0.3, 1.0], vec![0.3, 1.0]]).unwrap();
        for s in 0..200 {
            let a = hyperplane_round(&anti, s);
            let b = hyperplane_round(&same, s);
            assert_ne!(a[0], a[1]);
            assert_eq!(b[0], b[1]);
        }
    }

    #[test]
    fn rt_marginals() {
        let g = Graph::new(3, []).unwrap();
        let mu: f64 = 0.6;
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![mu, (1.0 - mu * mu).sqrt(), 0.0],
        ];
        let sol = SdpSolution::from_vectors(&g, 3, &rows).unwrap();
        let draws = 10_000;
        let mut plus = [0usize; 3];
        for s in 0..draws {
            let x = rt_round(&sol, s);
            for i in 0..3 {
                plus[i] += (x[i] == 1) as usize;
            }
        }
        assert_eq!(plus[0], draws as usize);
        assert!((plus[1] as f64 / draws as f64 - 0.5).abs() <= 0.02);
        assert!((plus[2] as f64 / draws as f64 - 0.8).abs() <= 0.02);
    }

    #[test]
    fn subset_constraint_reaches_tau() {
        // path 0-1-2 with vertex 0 and 2 pinned to the same side
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let cfg = SdpConfig {
            subset_constraint: Some(SubsetConstraint {
                edges: vec![0],
                tau: 1.0,
            }),
            ..SdpConfig::default()
        };
        let sol = solve_sdp(&g, &cfg).unwrap();
        assert_eq!(sol.status, SdpStatus::Converged);
        let contrib = (1.0 - sol.gram(0, 1)) / 2.0;
        assert!(contrib >= 1.0 - 1e-4 * g.total_weight());
    }

    #[test]
    fn unreachable_tau_reported() {
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let cfg = SdpConfig {
            fixed_labels: vec![(0, 1), (1, 1)],
            subset_constraint: Some(SubsetConstraint {
                edges: vec![0],
                tau: 0.5,
            }),
            ..SdpConfig::default()
        };
        let sol = solve_sdp(&g, &cfg).unwrap();
        assert_eq!(sol.status, SdpStatus::InfeasibleAtTau);
    }

    #[test]
    fn triangle_inequalities_hold_on_c5() {
        let g = cycle_graph(5);
        let plain = solve_sdp(&g, &SdpConfig::default()).unwrap();
        assert!(max_triangle_violation(&plain) > 1e-2);
        let cfg = SdpConfig {
            triangle: true,
            ..SdpConfig::default()
        };
        let sol = solve_sdp(&g, &cfg).unwrap();
        assert!(max_triangle_violation(&sol) <= 1e-3);
        // the metric bound on C5 equals the maximum cut
        assert!((sol.objective_value - 4.0).abs() < 2e-3, "{}", sol.objective_value);
    }

    #[test]
    fn dump_roundtrip() {
        let g = cycle_graph(6);
        let sol = solve_sdp(&g, &SdpConfig::with_seed(2)).unwrap();
        let back = load_solution(&save_solution(&sol)).unwrap();
        assert_eq!(back.vectors, sol.vectors);
        assert_eq!(back.fixed, sol.fixed);
        assert_eq!(back.objective_value, sol.objective_value);
    }
}
