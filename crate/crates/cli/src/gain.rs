//! `gain`: spectral and empirical acceleration gain across network sizes.
//!
//! Per size: the asymptotic time ratio log rho(accelerated) / log rho(W - J),
//! a paired empirical iteration ratio from actual runs, and the slack in the
//! square-root envelope 1 - sqrt(psi) - rho(accelerated) >= 0.

use anyhow::Result;
use consensus_core::engine::{default_max_iters, run_to_accuracy, Algo};
use consensus_core::WeightMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, InitKind};
use crate::mse::{initial_state, oracle_operator};
use crate::report::{ensure_dir, mean, write_json, SCHEMA};

#[derive(Serialize)]
struct GainReport<'a> {
    schema: u32,
    command: &'static str,
    config: &'a ExperimentConfig,
    records: Vec<GainRecord>,
}

#[derive(Debug, Serialize)]
pub struct GainRecord {
    pub n: usize,
    pub instances: usize,
    pub mean_rho_w: f64,
    pub mean_rho_accelerated: f64,
    /// log rho(accelerated) / log rho(W - J), averaged over instances.
    pub tau_asym_ratio: f64,
    /// Memoryless iterations to target over accelerated iterations, same
    /// x(0) in both runs; None when a run did not converge in budget.
    pub empirical_tc_ratio: Option<f64>,
    pub incomplete_pairs: usize,
    /// min over instances of 1 - sqrt(psi) - rho(accelerated).
    pub sqrt_bound_slack: f64,
}

struct Instance {
    rho_w: f64,
    rho_acc: f64,
    tau_ratio: f64,
    tc_ratio: Option<f64>,
    slack: f64,
}

/// Iteration budget for a run with asymptotic rate `rho`: three times the
/// predicted time to `eps`, never below the engine default.
fn budget(eps: f64, rho: f64, floor: usize) -> usize {
    if rho > 0.0 && rho < 1.0 {
        floor.max((3.0 * eps.ln() / rho.ln()).ceil() as usize)
    } else {
        floor
    }
}

fn run_instance(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<Instance> {
    let trial_seed = cfg.trial_seed(n, trial);
    let g = cfg.instance(n, trial_seed)?;
    let (op, w, _) = oracle_operator(WeightMatrix::metropolis_hastings(&g), cfg.theta())?;
    let rho_w = op.spectrum().rho_deviation();
    let rho_acc = op.analytic_radius();
    let tau_ratio = if rho_acc > 0.0 { rho_acc.ln() / rho_w.ln() } else { f64::INFINITY };

    let (x0, init_model) = initial_state(cfg, &g, trial_seed)?;
    let eps = cfg.epsilon_linear();
    // The ratio needs both legs to finish, so budget from the predicted rate
    // rather than the flat per-size default (a chain's convergence time grows
    // quadratically in n and outruns any linear budget).
    let mem_algo = Algo::Memoryless(&w);
    let mem_budget = budget(eps, rho_w, default_max_iters(&mem_algo, n));
    let mem = run_to_accuracy(&mem_algo, &x0, eps, mem_budget, init_model)?;
    let acc_algo = Algo::Accelerated(&op);
    let acc_budget = budget(eps, rho_acc, default_max_iters(&acc_algo, n));
    let acc = run_to_accuracy(&acc_algo, &x0, eps, acc_budget, init_model)?;
    let tc_ratio = match (mem.converged_at, acc.converged_at) {
        (Some(m), Some(a)) if a > 0 => Some(m as f64 / a as f64),
        _ => None,
    };

    let psi = 1.0 - rho_w;
    Ok(Instance { rho_w, rho_acc, tau_ratio, tc_ratio, slack: (1.0 - psi.sqrt()) - rho_acc })
}

pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    ensure_dir(&cfg.out)?;
    let mut records = Vec::new();
    for &n in &cfg.sizes {
        // Deterministic topology with a deterministic start repeats exactly;
        // one instance carries the whole average.
        let instances = if !cfg.topology.is_deterministic() || cfg.init == InitKind::Spike {
            cfg.trials
        } else {
            1
        };
        let runs: Vec<Instance> = (0..instances)
            .into_par_iter()
            .map(|t| run_instance(cfg, n, t))
            .collect::<Result<_>>()?;
        let tc: Vec<f64> = runs.iter().filter_map(|r| r.tc_ratio).collect();
        let record = GainRecord {
            n,
            instances,
            mean_rho_w: runs.iter().map(|r| r.rho_w).sum::<f64>() / instances as f64,
            mean_rho_accelerated: runs.iter().map(|r| r.rho_acc).sum::<f64>() / instances as f64,
            tau_asym_ratio: runs.iter().map(|r| r.tau_ratio).sum::<f64>() / instances as f64,
            empirical_tc_ratio: mean(&tc),
            incomplete_pairs: instances - tc.len(),
            sqrt_bound_slack: runs.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        };
        println!(
            "gain {} n={n}: tau ratio {:.2}, empirical {}, slack {:+.3e}",
            cfg.topology.as_str(),
            record.tau_asym_ratio,
            record
                .empirical_tc_ratio
                .map_or_else(|| "-".into(), |m| format!("{m:.2}")),
            record.sqrt_bound_slack,
        );
        records.push(record);
    }
    let report = GainReport { schema: SCHEMA, command: "gain", config: cfg, records };
    let path = cfg.out.join(format!("gain_{}.json", cfg.topology.as_str()));
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    Ok(())
}
