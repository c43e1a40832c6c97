use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use maxcut_predict::csp::{load_csp, solve_csp_wide, CspParams, Predicate};
use maxcut_predict::experiment::{noisy_config_from, rows_to_csv, run_experiment, ExperimentConfig, ParamOverrides};
use maxcut_predict::graph::{
    complete_bipartite, complete_graph, cut_value, cycle_graph, gen_erdos_renyi, gen_random_regular, load_assignment,
    load_edge_list, save_assignment, save_edge_list, star_graph, CutAssignment, Graph, WeightLaw,
};
use maxcut_predict::narrow::{solve_narrow, NarrowParams};
use maxcut_predict::oracle::exact_maxcut;
use maxcut_predict::partial::{solve_partial_gw, solve_partial_rt, TauGrid};
use maxcut_predict::pipeline::{solve_noisy, NoisyConfig};
use maxcut_predict::prediction::{
    load_prediction, sample_noisy, sample_partial, save_prediction, Independence, Prediction,
};
use maxcut_predict::wide::{gw_best, solve_wide, WideParams};
use maxcut_predict::{Error, Result};

#[derive(Parser)]
#[command(name = "maxcut", version, about = "MaxCut with noisy or partial predictions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    ErdosRenyi,
    Planted,
    Regular,
    Complete,
    Cycle,
    Star,
    Bipartite,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Noisy,
    Partial,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Wide,
    Narrow,
    Auto,
    Gw,
    GwFixed,
    Rt,
    Prediction,
}

#[derive(Clone, Copy, ValueEnum)]
enum Indep {
    Mutual,
    Pairwise,
}

#[derive(clap::Args)]
struct Tuning {
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value_t = 0.05)]
    eps_prime: f64,
    #[arg(long, default_value_t = 1.0)]
    c_delta: f64,
    /// Fixed Δ instead of the value derived from ε, ε′ and c_Δ.
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 20)]
    roundings: usize,
    #[arg(long, default_value_t = 0.05)]
    tau_step: f64,
    /// Randomized `repeat` rounding or deterministic `pipage`.
    #[arg(long, default_value = "repeat")]
    rounding: String,
}

impl Tuning {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            eta: self.eta,
            eps_prime: self.eps_prime,
            c_delta: self.c_delta,
            tau_step: self.tau_step,
            restarts: self.restarts,
            roundings: self.roundings,
            rounding: self.rounding.clone(),
            ..ParamOverrides::default()
        }
    }

    fn config(&self, seed: u64) -> Result<NoisyConfig> {
        Ok(NoisyConfig {
            delta: self.delta,
            ..noisy_config_from(&self.overrides(), seed)?
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph and write it as an edge list.
    GenGraph {
        #[arg(long, value_enum)]
        generator: Generator,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Uniform (0, 1] weights instead of unit weights.
        #[arg(long)]
        uniform_weights: bool,
        #[arg(long, default_value_t = 0.9)]
        q_cross: f64,
        #[arg(long, default_value_t = 0.1)]
        q_within: f64,
        /// Degree for `regular`; second side size for `bipartite`.
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the planted assignment, if any.
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Sample a prediction of a ground-truth assignment.
    GenPredictions {
        /// Ground truth; when absent the exact optimum of --graph is used.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value = "mutual")]
        independence: Indep,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver and print its cut.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        /// Prediction file; required by every algorithm except `gw`.
        #[arg(long)]
        prediction: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, value_enum)]
        algo: Algo,
        /// Also print the ratio against the exact optimum.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact maximum cut by enumeration.
    Oracle {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// LP-based solver for 2-CSP instances with a noisy prediction.
    CspSolve {
        #[arg(long)]
        instance: PathBuf,
        /// Truth table as four bits over (+1,+1), (+1,−1), (−1,+1), (−1,−1).
        #[arg(long)]
        predicate: String,
        #[arg(long)]
        prediction: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a TOML config and write CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output path; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<Graph> {
    load_edge_list(&read(path)?)
}

fn gen_graph(cmd: &Cmd) -> Result<()> {
    let Cmd::GenGraph {
        generator,
        n,
        p,
        uniform_weights,
        q_cross,
        q_within,
        d,
        seed,
        out,
        truth_out,
    } = cmd
    else {
        unreachable!()
    };
    let (g, planted) = match generator {
        Generator::ErdosRenyi => {
            let law = if *uniform_weights {
                WeightLaw::Uniform
            } else {
                WeightLaw::Unit
            };
            let gg = gen_erdos_renyi(*n, *p, law, *seed)?;
            (gg.graph, gg.planted)
        }
        Generator::Planted => {
            let law = WeightLaw::Planted {
                q_cross: *q_cross,
                q_within: *q_within,
            };
            let gg = gen_erdos_renyi(*n, 0.0, law, *seed)?;
            (gg.graph, gg.planted)
        }
        Generator::Regular => (gen_random_regular(*n, *d, *seed)?, None),
        Generator::Complete => (complete_graph(*n), None),
        Generator::Cycle => (cycle_graph(*n), None),
        Generator::Star => (star_graph(*n), None),
        Generator::Bipartite => (complete_bipartite(*n, *d), None),
    };
    write(out, &save_edge_list(&g))?;
    if let Some(path) = truth_out {
        let x = planted.ok_or_else(|| Error::Precondition("generator has no planted assignment".into()))?;
        write(path, &save_assignment(&x))?;
    }
    println!("n {} edges {} weight {}", g.n(), g.edges().len(), g.edge_weight_sum());
    Ok(())
}

fn gen_predictions(cmd: &Cmd) -> Result<()> {
    let Cmd::GenPredictions {
        truth,
        graph,
        model,
        eps,
        independence,
        seed,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let x = match (truth, graph) {
        (Some(t), _) => load_assignment(&read(t)?)?,
        (None, Some(gp)) => exact_maxcut(&load_graph(gp)?)?.1,
        (None, None) => return Err(Error::Precondition("pass --truth or --graph".into())),
    };
    let indep = match independence {
        Indep::Mutual => Independence::Mutual,
        Indep::Pairwise => Independence::PairwiseOnly,
    };
    let pred = match model {
        Model::Noisy => Prediction::Noisy(sample_noisy(&x, *eps, *seed, indep)?),
        Model::Partial => Prediction::Partial(sample_partial(&x, *eps, *seed, indep)?),
    };
    write(out, &save_prediction(&pred))?;
    let agree = pred.labels().iter().zip(x.as_slice()).filter(|(a, b)| a == b).count();
    println!("n {} agree {agree}", x.len());
    Ok(())
}

fn solve(cmd: &Cmd) -> Result<()> {
    let Cmd::Solve {
        graph,
        prediction,
        model,
        algo,
        oracle,
        seed,
        tuning,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let g = load_graph(graph)?;
    let pred = match prediction {
        Some(p) => Some(load_prediction(&read(p)?)?),
        None => None,
    };
    if let Some(p) = &pred {
        let expected = match model {
            Model::Noisy => "noisy",
            Model::Partial => "partial",
        };
        if p.model_name() != expected {
            return Err(Error::Precondition(format!(
                "prediction file holds a {} prediction, --model is {expected}",
                p.model_name()
            )));
        }
    }
    let need = || {
        pred.clone()
            .ok_or_else(|| Error::Precondition("this algorithm needs --prediction".into()))
    };
    let cfg = tuning.config(*seed)?;

    let (cut, tag): (CutAssignment, &str) = match (model, algo) {
        (_, Algo::Gw) => (gw_best(&g, *seed, tuning.roundings)?, "gw"),
        (Model::Noisy, a @ (Algo::Auto | Algo::Wide | Algo::Narrow | Algo::Prediction)) => {
            let Prediction::Noisy(y) = need()? else { unreachable!() };
            let delta = cfg.delta_for(y.epsilon)?;
            match a {
                Algo::Auto => {
                    let out = solve_noisy(&g, &y, &cfg)?;
                    (out.cut, out.tag.tag())
                }
                Algo::Wide => {
                    let params = WideParams {
                        delta,
                        eta: cfg.eta,
                        eps_prime: cfg.eps_prime,
                        rounding: cfg.rounding,
                    };
                    (solve_wide(&g, &y, &params, *seed)?.cut, "wide")
                }
                Algo::Narrow => {
                    let params = NarrowParams {
                        restarts: tuning.restarts,
                        ..NarrowParams::new(delta, cfg.eta)
                    };
                    (solve_narrow(&g, &params, *seed)?.cut, "narrow")
                }
                _ => (y.as_cut(), "prediction"),
            }
        }
        (Model::Partial, a @ (Algo::GwFixed | Algo::Rt | Algo::Prediction)) => {
            let Prediction::Partial(y) = need()? else {
                unreachable!()
            };
            match a {
                Algo::GwFixed => (solve_partial_gw(&g, &y, *seed, tuning.roundings)?, "gw-fixed"),
                Algo::Rt => {
                    let grid = TauGrid::new(tuning.tau_step)?;
                    (solve_partial_rt(&g, &y, &grid, *seed, tuning.roundings)?.cut, "rt")
                }
                _ => (y.as_cut(), "prediction"),
            }
        }
        _ => {
            return Err(Error::Precondition(
                "algorithm not available for this model (noisy: wide, narrow, auto, gw, prediction; \
                 partial: gw-fixed, rt, gw, prediction)"
                    .into(),
            ))
        }
    };
    let value = cut_value(&g, &cut)?;
    println!("cut {value}");
    if *oracle {
        let (opt, _) = exact_maxcut(&g)?;
        println!("ratio {}", if opt > 0.0 { value / opt } else { 1.0 });
    }
    println!("branch {tag}");
    if let Some(path) = out {
        write(path, &save_assignment(&cut))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        c @ Cmd::GenGraph { .. } => gen_graph(c),
        c @ Cmd::GenPredictions { .. } => gen_predictions(c),
        c @ Cmd::Solve { .. } => solve(c),
        Cmd::Oracle { graph, out, .. } => {
            let (opt, x) = exact_maxcut(&load_graph(graph)?)?;
            println!("opt {opt}");
            if let Some(path) = out {
                write(path, &save_assignment(&x))?;
            }
            Ok(())
        }
        Cmd::CspSolve {
            instance,
            predicate,
            prediction,
            c,
            seed,
            tuning,
            out,
        } => {
            let inst = load_csp(&read(instance)?, Predicate::from_bits(predicate)?)?;
            let Prediction::Noisy(y) = load_prediction(&read(prediction)?)? else {
                return Err(Error::Precondition("csp-solve needs a noisy prediction".into()));
            };
            let cfg = tuning.config(*seed)?;
            let delta = cfg.delta_for(y.epsilon)?;
            let params = CspParams {
                c: *c,
                ..CspParams::new(delta, cfg.eta, cfg.eps_prime)
            };
            let res = solve_csp_wide(&inst, &y, &params, *seed)?;
            println!("val {}", res.value);
            println!("lp {:?}", res.lp_status);
            if let Some(path) = out {
                write(path, &save_assignment(&res.assignment))?;
            }
            Ok(())
        }
        Cmd::Experiment { config, seed, out } => {
            let mut cfg = ExperimentConfig::from_toml(&read(config)?)?;
            if let Some(s) = seed {
                cfg.master_seed = *s;
            }
            let csv = rows_to_csv(&run_experiment(&cfg)?);
            match out.as_ref().or(cfg.output.as_ref()) {
                Some(path) => {
                    write(path, &csv)?;
                    println!("rows {}", csv.lines().count() - 1);
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
