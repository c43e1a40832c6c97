//! Weighted undirected graphs, cut objectives and the Δ-prefix machinery.
//!
//! A [`Graph`] stores every edge once with `i < j` and keeps a symmetric
//! adjacency list sorted by neighbor index. The weighted degree `W_i` is the
//! row sum of the adjacency matrix and `W = Σ_i W_i` counts every edge weight
//! twice.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Absolute tolerance for comparisons where exact arithmetic is intended.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
    total_weight: f64,
}

impl Graph {
    /// Builds a graph from `(i, j, w)` triples. Endpoints may come in either
    /// order; self-loops, negative or non-finite weights, out-of-range ids
    /// and duplicate pairs are rejected.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (a, b, w) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::InvalidVertex { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::Domain(format!("self-loop at vertex {a}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Domain(format!("edge ({a}, {b}) has invalid weight {w}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(Error::Domain(format!("duplicate edge ({i}, {j})")));
            }
            list.push(Edge { i, j, w });
        }
        Ok(Self::from_checked(n, list))
    }

    fn from_checked(n: usize, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.i].push((e.j, e.w));
            adjacency[e.j].push((e.i, e.w));
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
        }
        let degrees: Vec<f64> = adjacency.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        let total_weight = degrees.iter().sum();
        Graph {
            n,
            edges,
            adjacency,
            degrees,
            total_weight,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `i` with weights, sorted by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// `W_i`.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn weighted_degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `W = Σ_i W_i` (each edge counted twice).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Sum of edge weights, `W / 2`.
    pub fn edge_weight_sum(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.adjacency[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Row-major dense adjacency matrix.
    pub fn dense_adjacency(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for e in &self.edges {
            a[e.i * self.n + e.j] = e.w;
            a[e.j * self.n + e.i] = e.w;
        }
        a
    }

    /// `(Ax)_i` for every vertex.
    pub fn adjacency_mul(&self, x: &[f64]) -> Vec<f64> {
        self.adjacency
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * x[j]).sum())
            .collect()
    }

    pub fn check_vertex(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::InvalidVertex { vertex: i, n: self.n })
        } else {
            Ok(())
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            Err(Error::Dimension {
                expected: self.n,
                got: len,
            })
        } else {
            Ok(())
        }
    }
}

/// An integral cut `x ∈ {−1, +1}ⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutAssignment(Vec<i8>);

impl CutAssignment {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::Domain(format!(
                "cut entry {pos} is {} (expected ±1)",
                values[pos]
            )));
        }
        Ok(CutAssignment(values))
    }

    pub fn all_plus(n: usize) -> Self {
        CutAssignment(vec![1; n])
    }

    /// Sign pattern of arbitrary reals; non-positive entries map to `−1`.
    pub fn from_signs(values: &[f64]) -> Self {
        CutAssignment(values.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }

    pub fn negated(&self) -> Self {
        CutAssignment(self.0.iter().map(|&v| -v).collect())
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

impl std::ops::Index<usize> for CutAssignment {
    type Output = i8;
    fn index(&self, i: usize) -> &i8 {
        &self.0[i]
    }
}

/// `f(x) = Σ_{(i,j)} w_ij 1[x_i ≠ x_j]`.
pub fn cut_value(g: &Graph, x: &CutAssignment) -> Result<f64> {
    g.check_len(x.len())?;
    Ok(cut_value_unchecked(g, x.as_slice()))
}

pub(crate) fn cut_value_unchecked(g: &Graph, x: &[i8]) -> f64 {
    g.edges.iter().filter(|e| x[e.i] != x[e.j]).map(|e| e.w).sum()
}

/// `⟨x, A x⟩ = 2 Σ_{(i,j)} w_ij x_i x_j`.
pub fn adjacency_form(g: &Graph, x: &[f64]) -> f64 {
    2.0 * g.edges.iter().map(|e| e.w * x[e.i] * x[e.j]).sum::<f64>()
}

/// Continuous cut objective `¼ (W − ⟨x, A x⟩)` on `[−1, 1]ⁿ`.
pub fn frac_objective(g: &Graph, x: &[f64]) -> Result<f64> {
    g.check_len(x.len())?;
    check_fractional(x)?;
    Ok(0.25 * (g.total_weight - adjacency_form(g, x)))
}

pub(crate) fn check_fractional(x: &[f64]) -> Result<()> {
    if let Some(pos) = x.iter().position(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::Domain(format!(
            "fractional entry {pos} is {} (outside [-1, 1])",
            x[pos]
        )));
    }
    Ok(())
}

/// Incident edges of `i` in Δ-prefix order: heaviest first, ties broken by
/// lower neighbor index.
pub fn prefix_order(g: &Graph, i: usize) -> Vec<(usize, f64)> {
    let mut row = g.adjacency[i].clone();
    row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    row
}

/// Total weight of the `delta` heaviest edges incident to `i`.
pub fn delta_prefix_weight(g: &Graph, i: usize, delta: usize) -> Result<f64> {
    g.check_vertex(i)?;
    Ok(prefix_order(g, i).iter().take(delta).map(|&(_, w)| w).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Width {
    Wide,
    Narrow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideNarrowReport {
    pub delta: usize,
    pub eta: f64,
    pub per_vertex: Vec<Width>,
    /// `W_{>Δ}`: weighted degree carried by Δ-wide vertices.
    pub wide_weight: f64,
    /// `W_{<Δ}`.
    pub narrow_weight: f64,
    pub graph_class: Width,
}

impl WideNarrowReport {
    pub fn is_wide(&self, i: usize) -> bool {
        self.per_vertex[i] == Width::Wide
    }
}

/// Classifies vertices and the graph as Δ-wide or Δ-narrow.
pub fn classify(g: &Graph, delta: usize, eta: f64) -> Result<WideNarrowReport> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::param("eta", format!("{eta} not in (0, 1/2)")));
    }
    if delta < 1 {
        return Err(Error::param("delta", "must be at least 1"));
    }
    Ok(classify_unchecked(g, delta, eta))
}

/// Same rule as [`classify`] without the range checks on `eta`/`delta`.
pub(crate) fn classify_unchecked(g: &Graph, delta: usize, eta: f64) -> WideNarrowReport {
    let mut per_vertex = Vec::with_capacity(g.n);
    let (mut wide_weight, mut narrow_weight) = (0.0, 0.0);
    for i in 0..g.n {
        let wi = g.degrees[i];
        let prefix: f64 = prefix_order(g, i).iter().take(delta).map(|&(_, w)| w).sum();
        if wi <= 0.0 || prefix <= eta * wi + EXACT_TOL {
            per_vertex.push(Width::Wide);
            wide_weight += wi;
        } else {
            per_vertex.push(Width::Narrow);
            narrow_weight += wi;
        }
    }
    let graph_class = if wide_weight >= (1.0 - eta) * g.total_weight - EXACT_TOL {
        Width::Wide
    } else {
        Width::Narrow
    };
    WideNarrowReport {
        delta,
        eta,
        per_vertex,
        wide_weight,
        narrow_weight,
        graph_class,
    }
}

/// `Ã`: the adjacency matrix with each row's Δ-prefix entries zeroed. Not
/// symmetric in general.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedAdjacency {
    rows: Vec<Vec<(usize, f64)>>,
}

impl TruncatedAdjacency {
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn mul(&self, y: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * y[j]).sum())
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|p| self.rows[i][p].1)
            .unwrap_or(0.0)
    }
}

pub fn truncated_adjacency(g: &Graph, delta: usize) -> TruncatedAdjacency {
    let rows = (0..g.n)
        .map(|i| {
            let mut kept: Vec<(usize, f64)> = prefix_order(g, i).into_iter().skip(delta).collect();
            kept.sort_by_key(|&(j, _)| j);
            kept
        })
        .collect();
    TruncatedAdjacency { rows }
}

/// Edge-weight law for [`gen_erdos_renyi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightLaw {
    Unit,
    /// Weights drawn uniformly from `(0, 1]`.
    Uniform,
    /// Unit-weight planted bisection: an edge appears with probability
    /// `q_cross` across a balanced random bipartition and `q_within` inside
    /// a side. The edge probability `p` is ignored in this mode.
    Planted {
        q_cross: f64,
        q_within: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedGraph {
    pub graph: Graph,
    pub planted: Option<CutAssignment>,
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{p} is not a probability")))
    }
}

pub fn gen_erdos_renyi(n: usize, p: f64, law: WeightLaw, seed: u64) -> Result<GeneratedGraph> {
    if n < 1 {
        return Err(Error::param("n", "must be at least 1"));
    }
    check_prob("p", p)?;
    let mut rng = rng_from_seed(seed);
    match law {
        WeightLaw::Planted { q_cross, q_within } => {
            check_prob("q_cross", q_cross)?;
            check_prob("q_within", q_within)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut truth = vec![-1i8; n];
            for &v in &order[..n / 2] {
                truth[v] = 1;
            }
            let truth = CutAssignment(truth);
            let graph = planted_edges(n, q_cross, q_within, &truth, &mut rng);
            Ok(GeneratedGraph {
                graph,
                planted: Some(truth),
            })
        }
        _ => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        let w = match law {
                            WeightLaw::Uniform => 1.0 - rng.random::<f64>(),
                            _ => 1.0,
                        };
                        edges.push(Edge { i, j, w });
                    }
                }
            }
            Ok(GeneratedGraph {
                graph: Graph::from_checked(n, edges),
                planted: None,
            })
        }
    }
}

/// Planted-partition graph around a caller-supplied ground truth.
pub fn gen_planted(truth: &CutAssignment, q_cross: f64, q_within: f64, seed: u64) -> Result<Graph> {
    check_prob("q_cross", q_cross)?;
    check_prob("q_within", q_within)?;
    let mut rng = rng_from_seed(seed);
    Ok(planted_edges(truth.len(), q_cross, q_within, truth, &mut rng))
}

fn planted_edges(n: usize, q_cross: f64, q_within: f64, truth: &CutAssignment, rng: &mut crate::rng::Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let q = if truth[i] != truth[j] { q_cross } else { q_within };
            if rng.random::<f64>() < q {
                edges.push(Edge { i, j, w: 1.0 });
            }
        }
    }
    Graph::from_checked(n, edges)
}

/// Uniform random `d`-regular simple graph via the pairing model with
/// rejection.
pub fn gen_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(Error::param("d", format!("no {d}-regular graph on {n} vertices")));
    }
    let mut rng = rng_from_seed(seed);
    'attempt: for _ in 0..10_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(&mut rng);
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
            edges.push(Edge { i: a, j: b, w: 1.0 });
        }
        return Ok(Graph::from_checked(n, edges));
    }
    Err(Error::param("d", "pairing model did not produce a simple graph"))
}

pub fn complete_graph(n: usize) -> Graph {
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| Edge { i, j, w: 1.0 }))
        .collect();
    Graph::from_checked(n, edges)
}

pub fn cycle_graph(n: usize) -> Graph {
    let edges = (0..n)
        .filter_map(|i| {
            let j = (i + 1) % n;
            (n > 2 || i == 0).then(|| Edge {
                i: i.min(j),
                j: i.max(j),
                w: 1.0,
            })
        })
        .collect();
    Graph::from_checked(n, edges)
}

/// Star with center `0` and `leaves` unit edges.
pub fn star_graph(leaves: usize) -> Graph {
    let edges = (1..=leaves).map(|j| Edge { i: 0, j, w: 1.0 }).collect();
    Graph::from_checked(leaves + 1, edges)
}

pub fn complete_bipartite(a: usize, b: usize) -> Graph {
    let edges = (0..a)
        .flat_map(|i| (a..a + b).map(move |j| Edge { i, j, w: 1.0 }))
        .collect();
    Graph::from_checked(a + b, edges)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

/// Parses the `n m` / `i j w` edge-list format.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut lines = data_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let mut toks = header.split_whitespace();
    let n: usize = parse_field(toks.next(), hline, "vertex count")?;
    let m: usize = parse_field(toks.next(), hline, "edge count")?;
    if toks.next().is_some() {
        return Err(Error::parse(hline, "header must be `n m`"));
    }
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let mut toks = l.split_whitespace();
        let i: usize = parse_field(toks.next(), line, "vertex id")?;
        let j: usize = parse_field(toks.next(), line, "vertex id")?;
        let w: f64 = parse_field(toks.next(), line, "weight")?;
        if toks.next().is_some() {
            return Err(Error::parse(line, "expected `i j w`"));
        }
        if i == j {
            return Err(Error::parse(line, format!("self-loop at vertex {i}")));
        }
        if i >= n || j >= n {
            return Err(Error::parse(line, format!("vertex id out of range (n = {n})")));
        }
        if i > j {
            return Err(Error::parse(line, "endpoints must satisfy i < j"));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::parse(line, format!("invalid weight {w}")));
        }
        if !seen.insert((i, j)) {
            return Err(Error::parse(line, format!("duplicate edge ({i}, {j})")));
        }
        edges.push(Edge { i, j, w });
    }
    if edges.len() != m {
        return Err(Error::parse(
            hline,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    Ok(Graph::from_checked(n, edges))
}

pub fn save_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n, g.edges.len());
    for e in &g.edges {
        let _ = writeln!(out, "{} {} {:?}", e.i, e.j, e.w);
    }
    out
}

/// Ground-truth file: header `n`, then one `+1`/`-1` per line.
pub fn save_assignment(x: &CutAssignment) -> String {
    let mut out = format!("{}\n", x.len());
    for &v in x.as_slice() {
        out.push_str(if v > 0 { "+1\n" } else { "-1\n" });
    }
    out
}

pub fn load_assignment(text: &str) -> Result<CutAssignment> {
    let mut lines = data_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let n: usize = parse_field(Some(header), hline, "length")?;
    let mut values = Vec::with_capacity(n);
    for (line, l) in lines {
        match l {
            "+1" | "1" => values.push(1),
            "-1" => values.push(-1),
            other => return Err(Error::parse(line, format!("expected ±1, found `{other}`"))),
        }
    }
    if values.len() != n {
        return Err(Error::parse(
            hline,
            format!("declared {n} entries, found {}", values.len()),
        ));
    }
    Ok(CutAssignment(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> Graph {
        complete_graph(3)
    }

    fn dense_laplacian_form(g: &Graph, x: &[f64]) -> f64 {
        let n = g.n();
        let a = g.dense_adjacency();
        let mut total = 0.0;
        for i in 0..n {
            let d: f64 = (0..n).map(|j| a[i * n + j]).sum();
            for j in 0..n {
                let l = if i == j { d } else { 0.0 } - a[i * n + j];
                total += x[i] * l * x[j];
            }
        }
        total
    }

    #[test]
    fn cut_value_small_cases() {
        let x = CutAssignment::new(vec![1, 1, -1]).unwrap();
        assert_eq!(cut_value(&triangle(), &x).unwrap(), 2.0);
        let g = Graph::new(2, [(0, 1, 3.0)]).unwrap();
        assert_eq!(cut_value(&g, &CutAssignment::all_plus(2)).unwrap(), 0.0);
        assert!(matches!(
            cut_value(&g, &CutAssignment::all_plus(3)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn cut_value_matches_dense_laplacian() {
        for seed in 0..20 {
            let g = gen_erdos_renyi(8, 0.5, WeightLaw::Uniform, seed).unwrap().graph;
            let mut rng = rng_from_seed(seed + 100);
            let x: Vec<i8> = (0..8).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let cut = cut_value(&g, &CutAssignment::new(x).unwrap()).unwrap();
            assert!((dense_laplacian_form(&g, &xf) / 4.0 - cut).abs() < 1e-9);
        }
    }

    #[test]
    fn frac_objective_cases() {
        let g = triangle();
        assert_eq!(frac_objective(&g, &[0.0; 3]).unwrap(), g.total_weight() / 4.0);
        assert_eq!(frac_objective(&g, &[1.0, 1.0, -1.0]).unwrap(), 2.0);
        let k2 = complete_graph(2);
        assert!((frac_objective(&k2, &[0.5, -0.5]).unwrap() - 0.625).abs() < 1e-15);
        assert!(matches!(frac_objective(&k2, &[1.5, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn prefix_weights() {
        let g = Graph::new(4, [(0, 1, 5.0), (0, 2, 3.0), (0, 3, 1.0)]).unwrap();
        assert_eq!(delta_prefix_weight(&g, 0, 2).unwrap(), 8.0);
        assert_eq!(delta_prefix_weight(&g, 0, 0).unwrap(), 0.0);
        assert_eq!(delta_prefix_weight(&g, 0, 7).unwrap(), g.weighted_degree(0));
        assert!(delta_prefix_weight(&g, 9, 1).is_err());
    }

    #[test]
    fn classify_single_vertex_rules() {
        let g = star_graph(10);
        let r = classify(&g, 2, 0.3).unwrap();
        assert!(r.is_wide(0));
        let r4 = classify(&g, 4, 0.3).unwrap();
        assert!(!r4.is_wide(0));
    }

    #[test]
    fn classify_star() {
        let g = star_graph(10);
        let r = classify(&g, 2, 0.3).unwrap();
        assert!(r.is_wide(0));
        assert!((1..=10).all(|i| !r.is_wide(i)));
        assert_eq!(r.wide_weight, 10.0);
        assert_eq!(r.narrow_weight, 10.0);
        assert_eq!(r.graph_class, Width::Narrow);
    }

    #[test]
    fn classify_rejects_bad_eta() {
        let g = star_graph(3);
        assert!(classify(&g, 2, 0.5).is_err());
        assert!(classify(&g, 2, 0.0).is_err());
        assert!(classify(&g, 0, 0.3).is_err());
    }

    #[test]
    fn isolated_vertices_are_wide() {
        let g = Graph::new(3, [(0, 1, 1.0)]).unwrap();
        let r = classify(&g, 1, 0.3).unwrap();
        assert!(r.is_wide(2));
    }

    #[test]
    fn truncation_on_path() {
        // path 1 - 0 - 2
        let g = Graph::new(3, [(0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let t = truncated_adjacency(&g, 1);
        assert_eq!(t.row(0), &[(2, 1.0)]);
        assert!(t.row(1).is_empty());
        assert!(t.row(2).is_empty());
        let t0 = truncated_adjacency(&g, 0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t0.get(i, j), g.weight(i, j));
            }
        }
    }

    #[test]
    fn truncated_rows_bounded_by_share() {
        for seed in 0..10 {
            let g = gen_erdos_renyi(30, 0.4, WeightLaw::Uniform, seed).unwrap().graph;
            for delta in [1usize, 3, 7] {
                let t = truncated_adjacency(&g, delta);
                for i in 0..g.n() {
                    for &(j, w) in t.row(i) {
                        assert!(w <= g.weighted_degree(i) / delta as f64 + 1e-12);
                        assert!(w <= g.weight(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn wide_rows_keep_most_weight() {
        let g = gen_erdos_renyi(40, 0.5, WeightLaw::Uniform, 3).unwrap().graph;
        let (delta, eta) = (4, 0.3);
        let r = classify(&g, delta, eta).unwrap();
        let t = truncated_adjacency(&g, delta);
        for i in 0..g.n() {
            if r.is_wide(i) {
                let kept: f64 = t.row(i).iter().map(|&(_, w)| w).sum();
                assert!(kept >= (1.0 - eta) * g.weighted_degree(i) - 1e-12);
            }
        }
    }

    #[test]
    fn generators() {
        let k4 = gen_erdos_renyi(4, 1.0, WeightLaw::Unit, 1).unwrap().graph;
        assert_eq!(k4.edges().len(), 6);
        let a = gen_erdos_renyi(30, 0.3, WeightLaw::Uniform, 9).unwrap();
        let b = gen_erdos_renyi(30, 0.3, WeightLaw::Uniform, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.graph.edges().iter().all(|e| e.w > 0.0 && e.w <= 1.0));
        assert!(gen_erdos_renyi(3, 1.2, WeightLaw::Unit, 0).is_err());
        let r = gen_random_regular(60, 3, 5).unwrap();
        assert!((0..60).all(|i| r.neighbors(i).len() == 3));
    }

    /// Crossing fraction for planted(0.9, 0.1), n = 100, balanced: the mean is
    /// 2250 / 2495 ≈ 0.902 and the standard deviation of the fraction is below
    /// 0.01, so [0.80, 0.95] is a > 4σ window.
    #[test]
    fn planted_crossing_fraction() {
        for seed in 0..5 {
            let gen = gen_erdos_renyi(
                100,
                0.0,
                WeightLaw::Planted {
                    q_cross: 0.9,
                    q_within: 0.1,
                },
                seed,
            )
            .unwrap();
            let truth = gen.planted.unwrap();
            assert_eq!(truth.as_slice().iter().filter(|&&v| v == 1).count(), 50);
            let g = gen.graph;
            let crossing = cut_value(&g, &truth).unwrap();
            let frac = crossing / g.edge_weight_sum();
            assert!((0.80..=0.95).contains(&frac), "fraction {frac}");
        }
    }

    #[test]
    fn edge_list_parse() {
        let g = load_edge_list("3 2\n0 1 1.0\n0 2 2.0").unwrap();
        assert_eq!(g.weighted_degree(0), 3.0);
        let err = load_edge_list("2 1\n0 0 1.0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        assert!(matches!(
            load_edge_list("2 1\n0 1 -1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            load_edge_list("2 1\n0 2 1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            load_edge_list("3 2\n0 1 1\n0 1 2"),
            Err(Error::Parse { line: 3, .. })
        ));
        let with_comment = load_edge_list("# header\n2 1\n# edge\n0 1 0.5\n").unwrap();
        assert_eq!(with_comment.total_weight(), 1.0);
    }

    #[test]
    fn assignment_roundtrip() {
        let x = CutAssignment::new(vec![1, -1, -1, 1]).unwrap();
        assert_eq!(load_assignment(&save_assignment(&x)).unwrap(), x);
    }

    proptest! {
        #[test]
        fn edge_list_roundtrip(n in 2usize..20, p in 0.0f64..1.0, seed in any::<u64>()) {
            let g = gen_erdos_renyi(n, p, WeightLaw::Uniform, seed).unwrap().graph;
            let back = load_edge_list(&save_edge_list(&g)).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn cut_invariants(n in 2usize..16, seed in any::<u64>(), bits in any::<u32>()) {
            let g = gen_erdos_renyi(n, 0.5, WeightLaw::Uniform, seed).unwrap().graph;
            let x = CutAssignment::new((0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect()).unwrap();
            let cut = cut_value(&g, &x).unwrap();
            let xf = x.to_f64();
            prop_assert!((frac_objective(&g, &xf).unwrap() - cut).abs() < 1e-9);
            prop_assert!((dense_laplacian_form(&g, &xf) - 4.0 * cut).abs() < 1e-9);
            prop_assert!((cut_value(&g, &x.negated()).unwrap() - cut).abs() < 1e-12);
        }

        #[test]
        fn prefix_monotone_and_split(n in 2usize..25, seed in any::<u64>(), delta in 1usize..10, eta in 0.01f64..0.49) {
            let g = gen_erdos_renyi(n, 0.6, WeightLaw::Uniform, seed).unwrap().graph;
            for i in 0..n {
                let a = delta_prefix_weight(&g, i, delta).unwrap();
                let b = delta_prefix_weight(&g, i, delta + 1).unwrap();
                prop_assert!(b >= a);
            }
            let r = classify(&g, delta, eta).unwrap();
            prop_assert!((r.wide_weight + r.narrow_weight - g.total_weight()).abs() < 1e-9);
        }
    }
}
