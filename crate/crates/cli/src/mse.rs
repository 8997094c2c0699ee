//! `mse`: per-trial MSE-vs-iteration traces for memoryless, oracle-tuned,
//! and estimator-tuned accelerated averaging, plus a JSON summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use consensus_core::engine::{default_max_iters, init_slope, init_spike, run_to_accuracy, Algo};
use consensus_core::{
    derive_seed, doi, rng_from_seed, AcceleratedOperator, DoiConfig, DoiEstimate, Error,
    ExperimentTrace, Graph, InitModel, PredictorParams, WeightMatrix,
};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, InitKind, Lambda2Source};
use crate::report::{ensure_dir, mean, write_json, SCHEMA};

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    command: &'static str,
    config: &'a ExperimentConfig,
    sizes: Vec<SizeSummary>,
}

#[derive(Serialize)]
struct SizeSummary {
    n: usize,
    trials: usize,
    algorithms: Vec<AlgoSummary>,
    /// Trials where the tuned run beat the memoryless run to the accuracy
    /// target (both completed).
    oracle_beats_memoryless: usize,
    doi_beats_memoryless: Option<usize>,
    /// Max pointwise gap between the trial-averaged oracle and estimator
    /// MSE curves (dB), up to the oracle curve's accuracy crossing.
    averaged_curve_gap_db: Option<f64>,
    estimator: Option<EstimatorSummary>,
    /// Instances whose weight matrix needed the lazy repair before tuning.
    lazy_repaired_trials: usize,
}

#[derive(Serialize)]
struct AlgoSummary {
    algo: &'static str,
    completed_trials: usize,
    incomplete_trials: usize,
    mean_iterations_to_eps: Option<f64>,
    mean_final_mse_db: Option<f64>,
}

#[derive(Serialize)]
struct EstimatorSummary {
    mean_k: f64,
    mean_l: f64,
    mean_lambda2_hat: f64,
    mean_consensus_rounds: f64,
    mean_max_consensus_invocations: f64,
    mean_max_consensus_rounds: f64,
    mean_total_rounds: f64,
    clamped_trials: usize,
}

struct TrialOutcome {
    memoryless: ExperimentTrace,
    oracle: ExperimentTrace,
    doi: Option<ExperimentTrace>,
    estimate: Option<DoiEstimate>,
    estimate_clamped: bool,
    doi_cfg: Option<(usize, usize)>,
    lazy_repaired: bool,
}

/// Tuned operator with graceful handling of the two legitimate edge cases:
/// a spectrum whose negative tail dominates (repaired by the lazy transform)
/// and lambda2 = 0 (alpha* = 0 by continuity; the tuned run degenerates to
/// the memoryless one).
pub(crate) fn oracle_operator(
    w: WeightMatrix,
    theta: PredictorParams,
) -> Result<(AcceleratedOperator, WeightMatrix, bool)> {
    match AcceleratedOperator::optimal(&w, theta) {
        Ok(op) => Ok((op, w, false)),
        Err(Error::ConditionViolation { .. }) => {
            let lazy = w.lazy_transform();
            let op = AcceleratedOperator::optimal(&lazy, theta)?;
            Ok((op, lazy, true))
        }
        Err(Error::OutOfDomain(_)) => {
            let op = AcceleratedOperator::new_unchecked(&w, theta, 0.0);
            Ok((op, w, false))
        }
        Err(e) => Err(e.into()),
    }
}

fn estimator_operator(
    w: &WeightMatrix,
    theta: PredictorParams,
    cfg: &DoiConfig,
) -> Result<(AcceleratedOperator, DoiEstimate, bool)> {
    match doi::end_to_end_alpha(w, theta, cfg) {
        Ok(tuned) => Ok((tuned.operator, tuned.estimate, tuned.clamped)),
        // lambda2 = 0 is outside the tuning domain; fall back to alpha = 0.
        Err(Error::OutOfDomain(_)) => {
            let estimate = doi::estimate_lambda2(w, cfg)?;
            let op = AcceleratedOperator::new_unchecked(w, theta, 0.0);
            Ok((op, estimate, true))
        }
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn initial_state(
    cfg: &ExperimentConfig,
    g: &Graph,
    trial_seed: u64,
) -> Result<(Vec<f64>, InitModel)> {
    match cfg.init {
        InitKind::Slope => Ok((init_slope(g), InitModel::Slope)),
        InitKind::Spike => {
            let mut rng = rng_from_seed(derive_seed(trial_seed, 1));
            let node = rng.gen_range(0..g.n());
            Ok((init_spike(g, node)?, InitModel::Spike))
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<TrialOutcome> {
    let theta = cfg.theta();
    let eps = cfg.epsilon_linear();
    let trial_seed = cfg.trial_seed(n, trial);
    let g = cfg.instance(n, trial_seed)?;
    let (x0, init_model) = initial_state(cfg, &g, trial_seed)?;

    let (oracle_op, w, lazy_repaired) =
        oracle_operator(WeightMatrix::metropolis_hastings(&g), theta)?;
    let mem_algo = Algo::Memoryless(&w);
    let memoryless =
        run_to_accuracy(&mem_algo, &x0, eps, default_max_iters(&mem_algo, n), init_model)?;
    let acc_algo = Algo::Accelerated(&oracle_op);
    let acc_iters = default_max_iters(&acc_algo, n);
    let oracle = run_to_accuracy(&acc_algo, &x0, eps, acc_iters, init_model)?;

    let mut outcome = TrialOutcome {
        memoryless,
        oracle,
        doi: None,
        estimate: None,
        estimate_clamped: false,
        doi_cfg: None,
        lazy_repaired,
    };
    if let Lambda2Source::Doi { k, l } = cfg.lambda2_source {
        let k = cfg.doi_k.or(k).unwrap_or(2 * n);
        let l = match cfg.doi_l.or(l) {
            Some(l) => l,
            None => w.graph().diameter()?.max(1),
        };
        let doi_cfg = DoiConfig::new(k, l, cfg.estimator_seed(n, trial))?;
        let (doi_op, estimate, clamped) = estimator_operator(&w, theta, &doi_cfg)?;
        let doi_algo = Algo::Accelerated(&doi_op);
        outcome.doi = Some(run_to_accuracy(&doi_algo, &x0, eps, acc_iters, init_model)?);
        outcome.estimate = Some(estimate);
        outcome.estimate_clamped = clamped;
        outcome.doi_cfg = Some((doi_cfg.k(), doi_cfg.l()));
    }
    Ok(outcome)
}

fn write_trace(
    dir: &Path,
    cfg: &ExperimentConfig,
    n: usize,
    algo: &str,
    trial_seed: u64,
    trace: &ExperimentTrace,
) -> Result<()> {
    let name = format!(
        "{}_{}_{}_{}_{}.csv",
        cfg.topology.as_str(),
        n,
        algo,
        cfg.init.as_str(),
        trial_seed
    );
    let path = dir.join(name);
    let mut out = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
    trace.write_csv(&mut out)?;
    Ok(())
}

fn summarize_algo(algo: &'static str, traces: &[&ExperimentTrace]) -> AlgoSummary {
    let completed: Vec<f64> = traces
        .iter()
        .filter_map(|t| t.converged_at.map(|c| c as f64))
        .collect();
    let finals: Vec<f64> = traces.iter().map(|t| *t.mse_db().last().unwrap()).collect();
    AlgoSummary {
        algo,
        completed_trials: completed.len(),
        incomplete_trials: traces.len() - completed.len(),
        mean_iterations_to_eps: mean(&completed),
        mean_final_mse_db: mean(&finals),
    }
}

/// Max pointwise gap (dB) between trial-averaged curves, up to the first
/// crossing of the accuracy level by the reference curve.
fn averaged_gap_db(reference: &[&ExperimentTrace], other: &[&ExperimentTrace], eps_db: f64) -> f64 {
    let horizon = reference
        .iter()
        .chain(other.iter())
        .map(|t| t.mse_linear.len())
        .min()
        .unwrap_or(0);
    let mean_db = |curves: &[&ExperimentTrace], t: usize| {
        curves.iter().map(|c| 10.0 * c.mse_linear[t].max(1e-320).log10()).sum::<f64>()
            / curves.len() as f64
    };
    let mut gap = 0.0f64;
    for t in 0..horizon {
        let r = mean_db(reference, t);
        gap = gap.max((mean_db(other, t) - r).abs());
        if r <= eps_db {
            break;
        }
    }
    gap
}

pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    ensure_dir(&cfg.out)?;
    let mut sizes = Vec::new();
    for &n in &cfg.sizes {
        let outcomes: Vec<(usize, TrialOutcome)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, n, t).map(|o| (t, o)))
            .collect::<Result<_>>()?;
        for (t, o) in &outcomes {
            let trial_seed = cfg.trial_seed(n, *t);
            write_trace(&cfg.out, cfg, n, "memoryless", trial_seed, &o.memoryless)?;
            write_trace(&cfg.out, cfg, n, "accelerated-oracle", trial_seed, &o.oracle)?;
            if let Some(doi) = &o.doi {
                write_trace(&cfg.out, cfg, n, "accelerated-doi", trial_seed, doi)?;
            }
        }

        let mem: Vec<&ExperimentTrace> = outcomes.iter().map(|(_, o)| &o.memoryless).collect();
        let oracle: Vec<&ExperimentTrace> = outcomes.iter().map(|(_, o)| &o.oracle).collect();
        let doi: Vec<&ExperimentTrace> =
            outcomes.iter().filter_map(|(_, o)| o.doi.as_ref()).collect();

        let beats = |tuned: &[&ExperimentTrace]| {
            tuned
                .iter()
                .zip(mem.iter())
                .filter(|(a, m)| match (a.converged_at, m.converged_at) {
                    (Some(a), Some(m)) => a < m,
                    _ => false,
                })
                .count()
        };
        let mut algorithms = vec![
            summarize_algo("memoryless", &mem),
            summarize_algo("accelerated-oracle", &oracle),
        ];
        let mut estimator = None;
        let mut doi_beats = None;
        let mut gap = None;
        if !doi.is_empty() {
            algorithms.push(summarize_algo("accelerated-doi", &doi));
            doi_beats = Some(beats(&doi));
            gap = Some(averaged_gap_db(&oracle, &doi, cfg.epsilon_db));
            let est: Vec<&DoiEstimate> =
                outcomes.iter().filter_map(|(_, o)| o.estimate.as_ref()).collect();
            let cost_mean = |f: &dyn Fn(&DoiEstimate) -> f64| {
                est.iter().map(|e| f(e)).sum::<f64>() / est.len() as f64
            };
            estimator = Some(EstimatorSummary {
                mean_k: outcomes
                    .iter()
                    .filter_map(|(_, o)| o.doi_cfg.map(|(k, _)| k as f64))
                    .sum::<f64>()
                    / est.len() as f64,
                mean_l: outcomes
                    .iter()
                    .filter_map(|(_, o)| o.doi_cfg.map(|(_, l)| l as f64))
                    .sum::<f64>()
                    / est.len() as f64,
                mean_lambda2_hat: cost_mean(&|e| e.lambda2_hat),
                mean_consensus_rounds: cost_mean(&|e| e.cost.consensus_rounds as f64),
                mean_max_consensus_invocations: cost_mean(&|e| {
                    e.cost.max_consensus_invocations as f64
                }),
                mean_max_consensus_rounds: cost_mean(&|e| e.cost.max_consensus_rounds as f64),
                mean_total_rounds: cost_mean(&|e| e.cost.total_rounds() as f64),
                clamped_trials: outcomes.iter().filter(|(_, o)| o.estimate_clamped).count(),
            });
        }

        let size_summary = SizeSummary {
            n,
            trials: cfg.trials,
            algorithms,
            oracle_beats_memoryless: beats(&oracle),
            doi_beats_memoryless: doi_beats,
            averaged_curve_gap_db: gap,
            estimator,
            lazy_repaired_trials: outcomes.iter().filter(|(_, o)| o.lazy_repaired).count(),
        };
        for a in &size_summary.algorithms {
            println!(
                "mse {} n={n} {}: {}/{} trials to {} dB, mean {} iterations",
                cfg.topology.as_str(),
                a.algo,
                a.completed_trials,
                cfg.trials,
                cfg.epsilon_db,
                a.mean_iterations_to_eps
                    .map_or_else(|| "-".into(), |m| format!("{m:.1}")),
            );
        }
        sizes.push(size_summary);
    }

    let summary = Summary { schema: SCHEMA, command: "mse", config: cfg, sizes };
    let path = cfg.out.join(format!("mse_{}_summary.json", cfg.topology.as_str()));
    write_json(&path, &summary)?;
    println!("wrote {}", path.display());
    Ok(())
}
