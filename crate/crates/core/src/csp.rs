//! Binary constraint satisfaction over `{±1}` variables.
//!
//! A constraint `(w, c, (i, j))` is satisfied when `P(c₁ x_i, c₂ x_j) = 1`.
//! Every constraint is stored twice, once anchored at each endpoint. The
//! copy anchored at `j` evaluates the transposed predicate
//! `Pᵀ(a, b) = P(b, a)` on `(c₂ x_j, c₁ x_i)`, so both copies always agree
//! and `Σ_i Σ_{S_i}` runs over every constraint exactly twice.
//!
//! Truth tables list `P` on `(+1,+1), (+1,−1), (−1,+1), (−1,−1)` in that
//! order; `CUT` is `0110`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{CutAssignment, Graph, Width, EXACT_TOL};
use crate::lp::{self, AbsForm, AbsGroup, AbsSumLp, LpStatus};
use crate::prediction::{scaled_prediction, NoisyPrediction};
use crate::rng::{derive_named, derive_seed};
use crate::wide::{randomized_round, rounding_repeats};

fn table_index(a: i8, b: i8) -> usize {
    (usize::from(a < 0) << 1) | usize::from(b < 0)
}

const POINTS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predicate {
    pub table: [u8; 4],
    /// `p̂(∅), p̂({1}), p̂({2}), p̂({1,2})`.
    pub fourier: [f64; 4],
}

/// `p̂(S) = ¼ Σ_z P(z) χ_S(z)`.
pub fn fourier_expand(table: [u8; 4]) -> Result<Predicate> {
    if table.iter().any(|&t| t > 1) {
        return Err(Error::Domain("truth table entries must be 0 or 1".into()));
    }
    let mut fourier = [0.0; 4];
    for (idx, &(a, b)) in POINTS.iter().enumerate() {
        let p = table[idx] as f64;
        let (a, b) = (a as f64, b as f64);
        fourier[0] += p / 4.0;
        fourier[1] += p * a / 4.0;
        fourier[2] += p * b / 4.0;
        fourier[3] += p * a * b / 4.0;
    }
    Ok(Predicate { table, fourier })
}

impl Predicate {
    pub const CUT: [u8; 4] = [0, 1, 1, 0];

    pub fn cut() -> Self {
        fourier_expand(Self::CUT).expect("valid table")
    }

    /// Parses four `0`/`1` characters in table order.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let t: Vec<u8> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Domain(format!("predicate bit `{c}` is not 0 or 1"))),
            })
            .collect::<Result<_>>()?;
        let table: [u8; 4] = t
            .try_into()
            .map_err(|_| Error::Domain("predicate needs exactly 4 bits".into()))?;
        fourier_expand(table)
    }

    pub fn bits(&self) -> String {
        self.table.iter().map(|t| t.to_string()).collect()
    }

    pub fn eval(&self, a: i8, b: i8) -> f64 {
        self.table[table_index(a, b)] as f64
    }

    /// Multilinear extension, valid for real arguments.
    pub fn eval_fourier(&self, a: f64, b: f64) -> f64 {
        let p = &self.fourier;
        p[0] + p[1] * a + p[2] * b + p[3] * a * b
    }

    pub fn transposed(&self) -> Self {
        let t = self.table;
        let p = self.fourier;
        Predicate {
            table: [t[0], t[2], t[1], t[3]],
            fourier: [p[0], p[2], p[1], p[3]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub w: f64,
    pub c: (i8, i8),
    /// Anchor literal `α(1)`.
    pub i: usize,
    pub j: usize,
    /// Stored copy anchored at the second variable of the original.
    pub transposed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspInstance {
    pub n: usize,
    pub constraints: Vec<Constraint>,
    pub predicate: Predicate,
    transposed_predicate: Predicate,
}

impl CspInstance {
    /// Builds an instance from original constraints `(w, c, i, j)`; both
    /// orientations are stored.
    pub fn new<I>(n: usize, predicate: Predicate, original: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, (i8, i8), usize, usize)>,
    {
        let mut constraints = Vec::new();
        for (w, c, i, j) in original {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::InvalidVertex { vertex: v, n });
                }
            }
            if i == j {
                return Err(Error::Domain(format!("constraint on a single variable {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Domain(format!("invalid constraint weight {w}")));
            }
            if ![c.0, c.1].iter().all(|&s| s == 1 || s == -1) {
                return Err(Error::Domain("constraint signs must be ±1".into()));
            }
            constraints.push(Constraint {
                w,
                c,
                i,
                j,
                transposed: false,
            });
            constraints.push(Constraint {
                w,
                c: (c.1, c.0),
                i: j,
                j: i,
                transposed: true,
            });
        }
        Ok(CspInstance {
            n,
            constraints,
            predicate,
            transposed_predicate: predicate.transposed(),
        })
    }

    /// `W = Σ` over stored constraints of `w`.
    pub fn total_weight(&self) -> f64 {
        self.constraints.iter().map(|c| c.w).sum()
    }

    fn oriented(&self, c: &Constraint) -> &Predicate {
        if c.transposed {
            &self.transposed_predicate
        } else {
            &self.predicate
        }
    }

    pub fn eval_constraint(&self, c: &Constraint, x: &[i8]) -> f64 {
        self.oriented(c).eval(c.c.0 * x[c.i], c.c.1 * x[c.j])
    }

    /// `S_i` as indices into `constraints`.
    pub fn anchored(&self, i: usize) -> Vec<usize> {
        (0..self.constraints.len())
            .filter(|&k| self.constraints[k].i == i)
            .collect()
    }

    /// Each stored constraint's contribution to `∂/∂x_i` of the multilinear
    /// objective, as `(x_j coefficient, constant)`: `c₁(p̂₁ + p̂₁₂ c₂ x_j)`.
    fn derivative_terms(&self, c: &Constraint) -> (f64, f64) {
        let p = &self.oriented(c).fourier;
        let (c1, c2) = (c.c.0 as f64, c.c.1 as f64);
        (c1 * c2 * p[3], c1 * p[1])
    }
}

pub(crate) fn csp_value_unchecked(inst: &CspInstance, x: &[i8]) -> f64 {
    let w = inst.total_weight();
    if w <= 0.0 {
        return 0.0;
    }
    inst.constraints
        .iter()
        .map(|c| c.w * inst.eval_constraint(c, x))
        .sum::<f64>()
        / w
}

/// `val(x) = (1/W) Σ w P(c ∘ x^α)` by truth-table lookup.
pub fn csp_value(inst: &CspInstance, x: &CutAssignment) -> Result<f64> {
    if x.len() != inst.n {
        return Err(Error::Dimension {
            expected: inst.n,
            got: x.len(),
        });
    }
    Ok(csp_value_unchecked(inst, x.as_slice()))
}

/// Same value through the Fourier expansion.
pub fn csp_value_fourier(inst: &CspInstance, x: &[f64]) -> Result<f64> {
    if x.len() != inst.n {
        return Err(Error::Dimension {
            expected: inst.n,
            got: x.len(),
        });
    }
    let w = inst.total_weight();
    if w <= 0.0 {
        return Ok(0.0);
    }
    Ok(inst
        .constraints
        .iter()
        .map(|c| {
            c.w * inst
                .oriented(c)
                .eval_fourier(c.c.0 as f64 * x[c.i], c.c.1 as f64 * x[c.j])
        })
        .sum::<f64>()
        / w)
}

/// MaxCut as CSP(CUT): one constraint `(w, (+1,+1), (i, j))` per edge.
pub fn maxcut_as_csp(g: &Graph) -> CspInstance {
    CspInstance::new(
        g.n(),
        Predicate::cut(),
        g.edges().iter().map(|e| (e.w, (1, 1), e.i, e.j)),
    )
    .expect("graph edges are valid constraints")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiteralReport {
    pub delta: usize,
    pub eta: f64,
    pub per_literal: Vec<Width>,
    pub literal_weights: Vec<f64>,
    pub wide_weight: f64,
    pub narrow_weight: f64,
    pub class: Width,
    /// Per literal, the Δ-prefix of `S_i` (heaviest first, ties to the lower
    /// other variable) and the remaining suffix `S̃_i`.
    prefixes: Vec<Vec<usize>>,
    suffixes: Vec<Vec<usize>>,
}

impl LiteralReport {
    pub fn is_wide(&self, i: usize) -> bool {
        self.per_literal[i] == Width::Wide
    }

    pub fn suffix(&self, i: usize) -> &[usize] {
        &self.suffixes[i]
    }

    pub fn prefix(&self, i: usize) -> &[usize] {
        &self.prefixes[i]
    }
}

pub fn classify_literals(inst: &CspInstance, delta: usize, eta: f64) -> Result<LiteralReport> {
    if delta < 1 {
        return Err(Error::param("delta", "must be at least 1"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("{eta} not in (0, 1)")));
    }
    let mut per_literal = Vec::with_capacity(inst.n);
    let mut literal_weights = Vec::with_capacity(inst.n);
    let (mut prefixes, mut suffixes) = (Vec::new(), Vec::new());
    let (mut wide_weight, mut narrow_weight) = (0.0, 0.0);
    for i in 0..inst.n {
        let mut s = inst.anchored(i);
        s.sort_by(|&a, &b| {
            let (ca, cb) = (&inst.constraints[a], &inst.constraints[b]);
            cb.w.total_cmp(&ca.w).then(ca.j.cmp(&cb.j)).then(a.cmp(&b))
        });
        let wi: f64 = s.iter().map(|&k| inst.constraints[k].w).sum();
        let cut = delta.min(s.len());
        let prefix_w: f64 = s[..cut].iter().map(|&k| inst.constraints[k].w).sum();
        if wi <= 0.0 || prefix_w <= eta * wi + EXACT_TOL {
            per_literal.push(Width::Wide);
            wide_weight += wi;
        } else {
            per_literal.push(Width::Narrow);
            narrow_weight += wi;
        }
        literal_weights.push(wi);
        suffixes.push(s[cut..].to_vec());
        s.truncate(cut);
        prefixes.push(s);
    }
    let total = wide_weight + narrow_weight;
    let class = if wide_weight >= (1.0 - eta) * total - EXACT_TOL {
        Width::Wide
    } else {
        Width::Narrow
    };
    Ok(LiteralReport {
        delta,
        eta,
        per_literal,
        literal_weights,
        wide_weight,
        narrow_weight,
        class,
        prefixes,
        suffixes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CspParams {
    pub delta: usize,
    pub eta: f64,
    pub eps_prime: f64,
    /// Budget multiplier `C`.
    pub c: f64,
}

impl CspParams {
    pub fn new(delta: usize, eta: f64, eps_prime: f64) -> Self {
        CspParams {
            delta,
            eta,
            eps_prime,
            c: 4.0,
        }
    }
}

/// The wide-literal LP. Its objective is the negated linear part of
/// `Σ_{i wide} Σ_{S̃_i} w P(c ∘ (x_i, Z_j))`; the single group holds, per
/// literal, the derivative sums over `S_i` (narrow), over the prefix (wide)
/// and the suffix deviation from `Z` (wide), with budget `C(ε′ + 2η)W`.
pub fn build_csp_lp(inst: &CspInstance, z: &[f64], params: &CspParams) -> Result<AbsSumLp> {
    if z.len() != inst.n {
        return Err(Error::Dimension {
            expected: inst.n,
            got: z.len(),
        });
    }
    if !(params.c > 0.0) {
        return Err(Error::param("c", "must be positive"));
    }
    if !(params.eps_prime > 0.0) {
        return Err(Error::param("eps_prime", "must be positive"));
    }
    let report = classify_literals(inst, params.delta, params.eta)?;
    let mut objective = vec![0.0; inst.n];
    let mut forms = Vec::new();
    let form_over = |ids: &[usize], subtract_z: bool| -> AbsForm {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        let mut offset = 0.0;
        for &k in ids {
            let c = &inst.constraints[k];
            let (a, b) = inst.derivative_terms(c);
            if a != 0.0 {
                coeffs.push((c.j, c.w * a));
            }
            if subtract_z {
                offset -= c.w * a * z[c.j];
            } else {
                offset += c.w * b;
            }
        }
        coeffs.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, a) in coeffs {
            match merged.last_mut() {
                Some((lj, la)) if *lj == j => *la += a,
                _ => merged.push((j, a)),
            }
        }
        AbsForm { coeffs: merged, offset }
    };
    for i in 0..inst.n {
        if report.is_wide(i) {
            for &k in report.suffix(i) {
                let c = &inst.constraints[k];
                let (a, b) = inst.derivative_terms(c);
                objective[i] -= c.w * (b + a * z[c.j]);
            }
            forms.push(form_over(report.prefix(i), false));
            forms.push(form_over(report.suffix(i), true));
        } else {
            forms.push(form_over(&inst.anchored(i), false));
        }
    }
    if forms.is_empty() {
        forms.push(AbsForm {
            coeffs: Vec::new(),
            offset: 0.0,
        });
    }
    Ok(AbsSumLp {
        objective,
        groups: vec![AbsGroup {
            forms,
            budget: params.c * (params.eps_prime + 2.0 * params.eta) * inst.total_weight(),
        }],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspOutcome {
    pub assignment: CutAssignment,
    pub value: f64,
    pub lp_status: LpStatus,
    pub class: Width,
}

pub fn solve_csp_wide(inst: &CspInstance, y: &NoisyPrediction, params: &CspParams, seed: u64) -> Result<CspOutcome> {
    if y.y.len() != inst.n {
        return Err(Error::Dimension {
            expected: inst.n,
            got: y.y.len(),
        });
    }
    let class = classify_literals(inst, params.delta, params.eta)?.class;
    let z = scaled_prediction(y);
    let lp_inst = build_csp_lp(inst, &z, params)?;
    let sol = lp::solve(&lp_inst)?;
    if sol.status != LpStatus::Optimal {
        let assignment = y.as_cut();
        return Ok(CspOutcome {
            value: csp_value_unchecked(inst, assignment.as_slice()),
            assignment,
            lp_status: sol.status,
            class,
        });
    }
    let base = derive_named(seed, "csp-round");
    let mut best: Option<(f64, CutAssignment)> = None;
    for r in 0..rounding_repeats(params.eta)? {
        let x = randomized_round(&sol.x, derive_seed(base, r as u64));
        let v = csp_value_unchecked(inst, x.as_slice());
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, x));
        }
    }
    let (value, assignment) = best.expect("at least one rounding");
    Ok(CspOutcome {
        assignment,
        value,
        lp_status: sol.status,
        class,
    })
}

/// Header `n k W_norm_flag`, then one `w c1 c2 i j` line per original
/// constraint. With the flag set, weights are rescaled to sum to one.
pub fn load_csp(text: &str, predicate: Predicate) -> Result<CspInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 {
        return Err(Error::parse(hl, "header must be `n k W_norm_flag`"));
    }
    let n: usize = h[0].parse().map_err(|_| Error::parse(hl, "invalid n"))?;
    let k: usize = h[1].parse().map_err(|_| Error::parse(hl, "invalid constraint count"))?;
    let normalize = match h[2] {
        "0" => false,
        "1" => true,
        other => return Err(Error::parse(hl, format!("flag `{other}` must be 0 or 1"))),
    };
    let mut rows = Vec::with_capacity(k);
    for (ln, line) in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 5 {
            return Err(Error::parse(ln, "expected `w c1 c2 i j`"));
        }
        let w: f64 = t[0].parse().map_err(|_| Error::parse(ln, "invalid weight"))?;
        let sign = |s: &str| -> Result<i8> {
            match s {
                "1" | "+1" => Ok(1),
                "-1" => Ok(-1),
                _ => Err(Error::parse(ln, format!("sign `{s}` must be ±1"))),
            }
        };
        let c = (sign(t[1])?, sign(t[2])?);
        let i: usize = t[3].parse().map_err(|_| Error::parse(ln, "invalid index"))?;
        let j: usize = t[4].parse().map_err(|_| Error::parse(ln, "invalid index"))?;
        CspInstance::new(n, predicate, [(w, c, i, j)]).map_err(|e| Error::parse(ln, e.to_string()))?;
        rows.push((w, c, i, j));
    }
    if rows.len() != k {
        return Err(Error::parse(
            hl,
            format!("header declares {k} constraints, found {}", rows.len()),
        ));
    }
    if normalize {
        let s: f64 = rows.iter().map(|r| r.0).sum();
        if s > 0.0 {
            rows.iter_mut().for_each(|r| r.0 /= s);
        }
    }
    CspInstance::new(n, predicate, rows)
}

pub fn save_csp(inst: &CspInstance) -> String {
    let originals: Vec<&Constraint> = inst.constraints.iter().filter(|c| !c.transposed).collect();
    let mut s = format!("{} {} 0\n", inst.n, originals.len());
    for c in originals {
        let _ = writeln!(s, "{:?} {} {} {} {}", c.w, c.c.0, c.c.1, c.i, c.j);
    }
    s
}
