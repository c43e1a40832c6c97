//! Trial loops over generated instances and predictions, emitting one CSV
//! row per (trial, algorithm).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::csp::{maxcut_as_csp, solve_csp_wide, CspParams};
use crate::error::{Error, Result};
use crate::graph::{
    complete_graph, cut_value_unchecked, cycle_graph, gen_erdos_renyi, gen_random_regular, load_edge_list,
    CutAssignment, Graph, WeightLaw,
};
use crate::narrow::{solve_narrow, NarrowParams};
use crate::oracle::{exact_maxcut, MAXCUT_LIMIT};
use crate::partial::{solve_partial_gw, solve_partial_rt, TauGrid};
use crate::pipeline::{solve_noisy, NoisyConfig};
use crate::prediction::{sample_noisy, sample_partial, Independence, Prediction};
use crate::rng::{derive_named, derive_seed};
use crate::sdp::{solve_sdp, SdpConfig};
use crate::wide::{gw_best, solve_wide, Rounding, WideParams};

pub const CSV_HEADER: &str = "trial,n,model,eps,algo,cut,reference,ratio,seed,runtime_ms";

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    pub trials: usize,
    pub graph: GraphSpec,
    pub prediction: PredictionSpec,
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Fill `runtime_ms`; makes the output machine-dependent.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// `erdos_renyi`, `planted`, `regular`, `complete`, `cycle` or `file`.
    pub generator: String,
    pub n: Option<usize>,
    pub p: Option<f64>,
    /// `unit` or `uniform`.
    pub weights: Option<String>,
    pub q_cross: Option<f64>,
    pub q_within: Option<f64>,
    pub d: Option<usize>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PredictionSpec {
    /// `noisy` or `partial`.
    pub model: String,
    pub epsilon: f64,
    /// `mutual` (default) or `pairwise`.
    #[serde(default)]
    pub independence: Option<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ParamOverrides {
    pub eta: f64,
    pub eps_prime: f64,
    pub c_delta: f64,
    pub tau_step: f64,
    pub restarts: usize,
    pub roundings: usize,
    pub csp_c: f64,
    /// `repeat` or `pipage`.
    pub rounding: String,
}

impl Default for ParamOverrides {
    fn default() -> Self {
        let d = NoisyConfig::default();
        ParamOverrides {
            eta: d.eta,
            eps_prime: d.eps_prime,
            c_delta: d.c_delta,
            tau_step: TauGrid::default().step,
            restarts: d.restarts,
            roundings: d.gw_roundings,
            csp_c: 4.0,
            rounding: "repeat".into(),
        }
    }
}

const NOISY_ALGOS: &[&str] = &["auto", "wide", "narrow", "gw", "prediction", "csp_wide", "oracle"];
const PARTIAL_ALGOS: &[&str] = &["gw_fixed", "rt", "gw", "prediction", "oracle"];

fn bad(field: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        msg: msg.into(),
    }
}

/// Normalizes `gw-fixed` style names to `gw_fixed`.
pub fn normalize_algo(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace('-', "_")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| bad("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(bad("trials", "must be at least 1"));
        }
        let g = &self.graph;
        let need_n = |g: &GraphSpec| g.n.ok_or_else(|| bad("graph.n", "required for this generator"));
        let prob = |field: &str, v: Option<f64>| -> Result<f64> {
            let v = v.ok_or_else(|| bad(field, "required for this generator"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(field, format!("{v} is not a probability")));
            }
            Ok(v)
        };
        match g.generator.as_str() {
            "erdos_renyi" => {
                if need_n(g)? < 1 {
                    return Err(bad("graph.n", "must be at least 1"));
                }
                prob("graph.p", g.p)?;
                match g.weights.as_deref() {
                    None | Some("unit") | Some("uniform") => {}
                    Some(w) => return Err(bad("graph.weights", format!("unknown law `{w}`"))),
                }
            }
            "planted" => {
                if need_n(g)? < 2 {
                    return Err(bad("graph.n", "must be at least 2"));
                }
                prob("graph.q_cross", g.q_cross)?;
                prob("graph.q_within", g.q_within)?;
            }
            "regular" => {
                let n = need_n(g)?;
                let d = g.d.ok_or_else(|| bad("graph.d", "required for regular graphs"))?;
                if d >= n || (n * d) % 2 == 1 {
                    return Err(bad("graph.d", format!("no {d}-regular graph on {n} vertices")));
                }
            }
            "complete" | "cycle" => {
                let n = need_n(g)?;
                if g.generator == "cycle" && n < 3 {
                    return Err(bad("graph.n", "a cycle needs at least 3 vertices"));
                }
            }
            "file" => {
                if g.path.is_none() {
                    return Err(bad("graph.path", "required for generator `file`"));
                }
            }
            other => return Err(bad("graph.generator", format!("unknown generator `{other}`"))),
        }

        let eps = self.prediction.epsilon;
        let allowed = match self.prediction.model.as_str() {
            "noisy" => {
                if !(eps > 0.0 && eps < 0.5) {
                    return Err(bad("prediction.epsilon", "noisy bias must lie in (0, 1/2)"));
                }
                NOISY_ALGOS
            }
            "partial" => {
                if !(eps > 0.0 && eps <= 1.0) {
                    return Err(bad("prediction.epsilon", "reveal rate must lie in (0, 1]"));
                }
                PARTIAL_ALGOS
            }
            other => return Err(bad("prediction.model", format!("unknown model `{other}`"))),
        };
        self.independence()?;

        if self.algorithms.is_empty() {
            return Err(bad("algorithms", "list is empty"));
        }
        for a in &self.algorithms {
            if !allowed.contains(&normalize_algo(a).as_str()) {
                return Err(bad(
                    "algorithms",
                    format!("`{a}` is not available for model `{}`", self.prediction.model),
                ));
            }
        }

        let p = &self.params;
        if !(p.eta > 0.0 && p.eta < 0.5) {
            return Err(bad("params.eta", "must lie in (0, 1/2)"));
        }
        if !(p.eps_prime > 0.0) {
            return Err(bad("params.eps_prime", "must be positive"));
        }
        if !(p.c_delta > 0.0) {
            return Err(bad("params.c_delta", "must be positive"));
        }
        if !(p.tau_step > 0.0 && p.tau_step <= 1.0) {
            return Err(bad("params.tau_step", "must lie in (0, 1]"));
        }
        if p.restarts < 1 {
            return Err(bad("params.restarts", "must be at least 1"));
        }
        if p.roundings < 1 {
            return Err(bad("params.roundings", "must be at least 1"));
        }
        if !(p.csp_c > 0.0) {
            return Err(bad("params.csp_c", "must be positive"));
        }
        noisy_config_from(p, 0)?;
        Ok(())
    }

    fn independence(&self) -> Result<Independence> {
        match self.prediction.independence.as_deref() {
            None | Some("mutual") => Ok(Independence::Mutual),
            Some("pairwise") => Ok(Independence::PairwiseOnly),
            Some(o) => Err(bad("prediction.independence", format!("unknown mode `{o}`"))),
        }
    }

    fn noisy_config(&self, seed: u64) -> Result<NoisyConfig> {
        noisy_config_from(&self.params, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Oracle,
    Planted,
    /// Relaxation optimum; ratios against it understate the true ratio.
    SdpBound,
}

impl ReferenceKind {
    pub fn tag(self) -> &'static str {
        match self {
            ReferenceKind::Oracle => "oracle",
            ReferenceKind::Planted => "planted",
            ReferenceKind::SdpBound => "sdp_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub trial: usize,
    pub n: usize,
    pub model: String,
    pub eps: f64,
    pub algo: String,
    pub cut: f64,
    pub reference: f64,
    pub reference_kind: ReferenceKind,
    pub seed: u64,
    pub runtime_ms: Option<f64>,
}

impl Row {
    pub fn ratio(&self) -> f64 {
        if self.reference > 0.0 {
            self.cut / self.reference
        } else {
            1.0
        }
    }
}

struct Instance {
    graph: Graph,
    truth: CutAssignment,
    reference: f64,
    kind: ReferenceKind,
}

fn build_instance(cfg: &ExperimentConfig, file_graph: Option<&Graph>, seed: u64) -> Result<Instance> {
    let spec = &cfg.graph;
    let gseed = derive_named(seed, "graph");
    let (graph, planted) = match spec.generator.as_str() {
        "erdos_renyi" => {
            let law = match spec.weights.as_deref() {
                Some("uniform") => WeightLaw::Uniform,
                _ => WeightLaw::Unit,
            };
            let gg = gen_erdos_renyi(spec.n.unwrap_or(0), spec.p.unwrap_or(0.0), law, gseed)?;
            (gg.graph, gg.planted)
        }
        "planted" => {
            let law = WeightLaw::Planted {
                q_cross: spec.q_cross.unwrap_or(0.0),
                q_within: spec.q_within.unwrap_or(0.0),
            };
            let gg = gen_erdos_renyi(spec.n.unwrap_or(0), 0.0, law, gseed)?;
            (gg.graph, gg.planted)
        }
        "regular" => (
            gen_random_regular(spec.n.unwrap_or(0), spec.d.unwrap_or(0), gseed)?,
            None,
        ),
        "complete" => (complete_graph(spec.n.unwrap_or(0)), None),
        "cycle" => (cycle_graph(spec.n.unwrap_or(0)), None),
        _ => (file_graph.expect("file graph loaded").clone(), None),
    };

    if graph.n() <= MAXCUT_LIMIT {
        let (opt, x) = exact_maxcut(&graph)?;
        // planted labels still drive the prediction; the reference is certified
        return Ok(Instance {
            truth: planted.unwrap_or(x),
            graph,
            reference: opt,
            kind: ReferenceKind::Oracle,
        });
    }
    if let Some(x) = planted {
        let reference = cut_value_unchecked(&graph, x.as_slice());
        return Ok(Instance {
            graph,
            truth: x,
            reference,
            kind: ReferenceKind::Planted,
        });
    }
    let sdp_seed = derive_named(seed, "reference");
    let bound = solve_sdp(&graph, &SdpConfig::with_seed(sdp_seed))?.objective_value;
    let truth = gw_best(&graph, sdp_seed, cfg.params.roundings)?;
    Ok(Instance {
        graph,
        truth,
        reference: bound,
        kind: ReferenceKind::SdpBound,
    })
}

fn run_algo(cfg: &ExperimentConfig, inst: &Instance, pred: &Prediction, algo: &str, seed: u64) -> Result<f64> {
    let g = &inst.graph;
    let p = &cfg.params;
    let cut = match (pred, algo) {
        (_, "oracle") => exact_maxcut(g)?.1,
        (_, "gw") => gw_best(g, seed, p.roundings)?,
        (_, "prediction") => match pred {
            Prediction::Noisy(y) => y.as_cut(),
            Prediction::Partial(y) => y.as_cut(),
        },
        (Prediction::Noisy(y), "auto") => solve_noisy(g, y, &cfg.noisy_config(seed)?)?.cut,
        (Prediction::Noisy(y), "wide") => {
            let nc = cfg.noisy_config(seed)?;
            let params = WideParams {
                delta: nc.delta_for(y.epsilon)?,
                eta: nc.eta,
                eps_prime: nc.eps_prime,
                rounding: nc.rounding,
            };
            solve_wide(g, y, &params, seed)?.cut
        }
        (Prediction::Noisy(y), "narrow") => {
            let nc = cfg.noisy_config(seed)?;
            let params = NarrowParams {
                restarts: p.restarts,
                ..NarrowParams::new(nc.delta_for(y.epsilon)?, nc.eta)
            };
            solve_narrow(g, &params, seed)?.cut
        }
        (Prediction::Noisy(y), "csp_wide") => {
            let nc = cfg.noisy_config(seed)?;
            let params = CspParams {
                c: p.csp_c,
                ..CspParams::new(nc.delta_for(y.epsilon)?, nc.eta, nc.eps_prime)
            };
            solve_csp_wide(&maxcut_as_csp(g), y, &params, seed)?.assignment
        }
        (Prediction::Partial(y), "gw_fixed") => solve_partial_gw(g, y, seed, p.roundings)?,
        (Prediction::Partial(y), "rt") => solve_partial_rt(g, y, &TauGrid::new(p.tau_step)?, seed, p.roundings)?.cut,
        _ => return Err(bad("algorithms", format!("`{algo}` does not apply to this model"))),
    };
    Ok(cut_value_unchecked(g, cut.as_slice()))
}

fn run_trial(cfg: &ExperimentConfig, file_graph: Option<&Graph>, trial: usize) -> Result<Vec<Row>> {
    let seed = derive_seed(cfg.master_seed, trial as u64);
    let inst = build_instance(cfg, file_graph, seed)?;
    let pseed = derive_named(seed, "prediction");
    let eps = cfg.prediction.epsilon;
    let pred = match cfg.prediction.model.as_str() {
        "noisy" => Prediction::Noisy(sample_noisy(&inst.truth, eps, pseed, cfg.independence()?)?),
        _ => Prediction::Partial(sample_partial(&inst.truth, eps, pseed, cfg.independence()?)?),
    };
    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    for a in &cfg.algorithms {
        let algo = normalize_algo(a);
        let start = Instant::now();
        let cut = run_algo(cfg, &inst, &pred, &algo, derive_named(seed, &algo))?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        rows.push(Row {
            trial,
            n: inst.graph.n(),
            model: cfg.prediction.model.clone(),
            eps,
            cut,
            reference: inst.reference,
            reference_kind: inst.kind,
            seed,
            runtime_ms: cfg.timing.then_some(elapsed),
            algo,
        });
    }
    Ok(rows)
}

/// All rows, sorted by `(trial, algo)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    cfg.validate()?;
    let file_graph = match (&cfg.graph.generator[..], &cfg.graph.path) {
        ("file", Some(path)) => Some(load_edge_list(&std::fs::read_to_string(path)?)?),
        _ => None,
    };
    let per_trial: Vec<Vec<Row>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, file_graph.as_ref(), t))
        .collect::<Result<_>>()?;
    let mut rows: Vec<Row> = per_trial.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.trial, &a.algo).cmp(&(b.trial, &b.algo)));
    Ok(rows)
}

/// CSV text; a `reference_kind` column is appended when any reference is
/// not an exact optimum.
pub fn rows_to_csv(rows: &[Row]) -> String {
    let flagged = rows.iter().any(|r| r.reference_kind != ReferenceKind::Oracle);
    let mut out = String::from(CSV_HEADER);
    if flagged {
        out.push_str(",reference_kind");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.n,
            r.model,
            r.eps,
            r.algo,
            r.cut,
            r.reference,
            r.ratio(),
            r.seed,
            r.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default()
        );
        if flagged {
            out.push(',');
            out.push_str(r.reference_kind.tag());
        }
        out.push('\n');
    }
    out
}

/// Portfolio configuration from a parameter block.
pub fn noisy_config_from(params: &ParamOverrides, seed: u64) -> Result<NoisyConfig> {
    let rounding = match params.rounding.as_str() {
        "pipage" => Rounding::Pipage,
        "repeat" => Rounding::Repeat,
        o => return Err(bad("params.rounding", format!("unknown rounding `{o}`"))),
    };
    Ok(NoisyConfig {
        eta: params.eta,
        eps_prime: params.eps_prime,
        c_delta: params.c_delta,
        seed,
        rounding,
        restarts: params.restarts,
        gw_roundings: params.roundings,
        ..NoisyConfig::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k4_config() -> &'static str {
        r#"
master_seed = 3
trials = 1
algorithms = ["oracle"]

[graph]
generator = "complete"
n = 4

[prediction]
model = "noisy"
epsilon = 0.2
"#
    }

    #[test]
    fn k4_oracle_row() {
        let cfg = ExperimentConfig::from_toml(k4_config()).unwrap();
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].cut, 4.0);
        assert_eq!(rows[0].ratio(), 1.0);
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(csv.lines().nth(1).unwrap().contains(",oracle,4,4,1,"));
    }

    #[test]
    fn validation_names_fields() {
        let cases = [
            ("trials = 1", "trials = 0", "trials"),
            ("n = 4", "n = 4\np = 2.0\ngenerator2 = 1", "config"),
            ("epsilon = 0.2", "epsilon = 0.7", "prediction.epsilon"),
            ("[\"oracle\"]", "[\"rt\"]", "algorithms"),
            (
                "generator = \"complete\"",
                "generator = \"hypercube\"",
                "graph.generator",
            ),
        ];
        for (from, to, field) in cases {
            let text = k4_config().replace(from, to);
            match ExperimentConfig::from_toml(&text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{to}"),
                other => panic!("{to}: {other:?}"),
            }
        }
        let eta = format!("{}\n[params]\neta = 0.7\n", k4_config());
        assert!(matches!(
            ExperimentConfig::from_toml(&eta),
            Err(Error::Config { field, .. }) if field == "params.eta"
        ));
    }

    #[test]
    fn deterministic_and_sorted() {
        let text = r#"
master_seed = 11
trials = 4
algorithms = ["rt", "gw_fixed", "prediction", "gw"]

[graph]
generator = "erdos_renyi"
n = 10
p = 0.5
weights = "uniform"

[prediction]
model = "partial"
epsilon = 0.5

[params]
tau_step = 0.25
roundings = 4
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let a = rows_to_csv(&run_experiment(&cfg).unwrap());
        let b = rows_to_csv(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 16);
        assert!(rows
            .windows(2)
            .all(|w| (w[0].trial, &w[0].algo) < (w[1].trial, &w[1].algo)));
        assert!(rows.iter().all(|r| r.cut <= r.reference + 1e-9));
    }

    #[test]
    fn large_planted_uses_planted_reference() {
        let text = r#"
trials = 1
algorithms = ["prediction"]

[graph]
generator = "planted"
n = 30
q_cross = 0.8
q_within = 0.1

[prediction]
model = "noisy"
epsilon = 0.1
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows[0].reference_kind, ReferenceKind::Planted);
        assert!(rows[0].ratio() < 1.0);
        assert!(rows_to_csv(&rows).lines().next().unwrap().ends_with(",reference_kind"));
    }
}
