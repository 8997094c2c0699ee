//! Decentralized estimation of lambda2(W).
//!
//! Power iteration on the deviation subspace, runnable by the network
//! itself: start from a zero-mean random vector v0 = Wv - v (one mixing round
//! strips the consensus component), repeatedly apply W, and normalize by the
//! sup norm every L rounds. The sup norm is obtained with max-consensus over
//! absolute values, which finishes exactly within a diameter's worth of
//! rounds and leaves every node holding the identical value, so all nodes
//! normalize consistently. The final estimate is the one-step growth ratio
//! ||W v_K||_inf / ||v_K||_inf.
//!
//! Every communication round is tallied: K + 2 mixing rounds (the zero-mean
//! prep, the K-loop, and the final ratio's application, counted as one) plus
//! the measured rounds of each max-consensus invocation.

use rand::Rng as _;

use crate::accel::{self, AcceleratedOperator, PredictorParams};
use crate::engine::max_consensus;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::weights::WeightMatrix;

/// Sup norms below this are reported as precision loss (choose a smaller L).
const UNDERFLOW_GUARD: f64 = 1e-300;
/// lambda2 estimates are clamped into (0, 1 - 1e-9] before use.
const LAMBDA2_MAX: f64 = 1.0 - 1e-9;

/// Estimation schedule: K total mixing iterations, sup-norm normalization
/// every L of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DoiConfig {
    k: usize,
    l: usize,
    seed: u64,
}

impl DoiConfig {
    pub fn new(k: usize, l: usize, seed: u64) -> Result<Self> {
        if l < 1 || k < l {
            return Err(Error::InvalidParameter(format!(
                "estimation schedule needs K >= L >= 1, got K = {k}, L = {l}"
            )));
        }
        Ok(DoiConfig { k, l, seed })
    }

    /// K = 2N and L proportional to the diameter, the settings that reach
    /// about 1e-3 relative error on geometric graphs. Slow-mixing topologies
    /// (chains) need K closer to N^2.
    pub fn recommended(w: &WeightMatrix, seed: u64) -> Result<Self> {
        let diameter = w.graph().diameter()?;
        DoiConfig::new(2 * w.n(), diameter.max(1), seed)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Synchronous-round tally of one estimation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DoiCost {
    /// Mixing rounds (applications of W), including the final ratio's one.
    pub consensus_rounds: usize,
    /// Number of max-consensus invocations (each computes one sup norm).
    pub max_consensus_invocations: usize,
    /// Total value-changing rounds across those invocations (<= D each).
    pub max_consensus_rounds: usize,
}

impl DoiCost {
    pub fn total_rounds(&self) -> usize {
        self.consensus_rounds + self.max_consensus_rounds
    }
}

/// Estimate plus what it cost to compute.
#[derive(Debug, Clone, Copy)]
pub struct DoiEstimate {
    pub lambda2_hat: f64,
    pub cost: DoiCost,
}

/// An operator tuned from a decentralized estimate instead of an eigensolve.
#[derive(Debug, Clone)]
pub struct DoiOperator {
    pub operator: AcceleratedOperator,
    pub estimate: DoiEstimate,
    /// True when the raw estimate fell outside (0, 1 - 1e-9] and was clamped.
    pub clamped: bool,
}

/// Network-wide sup norm via max-consensus on absolute values; exact, and
/// identical at every node. Returns the norm and the rounds it took.
fn sup_norm_distributed(w: &WeightMatrix, v: &[f64]) -> (f64, usize) {
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let (values, rounds) = max_consensus(w.graph(), &abs);
    (values[0], rounds)
}

/// Decentralized lambda2 estimation.
///
/// The initial vector is per-node independent uniform(-1, 1) from `seed`
/// (the algorithm only requires some random vector; this choice is fixed for
/// reproducibility). An exactly vanishing iterate short-circuits to an
/// estimate of 0 (W has no deviation spectrum, as on a complete graph with
/// uniform weights); a subnormal-range iterate is an error suggesting a
/// smaller L.
pub fn estimate_lambda2(w: &WeightMatrix, cfg: &DoiConfig) -> Result<DoiEstimate> {
    let n = w.n();
    let mut cost = DoiCost::default();
    let mut rng = rng_from_seed(cfg.seed());

    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let wv = w.apply(&v);
    cost.consensus_rounds += 1;
    let mut v: Vec<f64> = wv.iter().zip(&v).map(|(a, b)| a - b).collect();

    let normalize = |v: &mut Vec<f64>, cost: &mut DoiCost| -> Result<Option<f64>> {
        let (norm, rounds) = sup_norm_distributed(w, v);
        cost.max_consensus_invocations += 1;
        cost.max_consensus_rounds += rounds;
        if norm == 0.0 {
            return Ok(None);
        }
        if norm < UNDERFLOW_GUARD {
            return Err(Error::PrecisionLoss { max_abs: norm });
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        Ok(Some(norm))
    };

    for k in 1..=cfg.k() {
        v = w.apply(&v);
        cost.consensus_rounds += 1;
        if k % cfg.l() == 0 && normalize(&mut v, &mut cost)?.is_none() {
            return Ok(DoiEstimate {
                lambda2_hat: 0.0,
                cost,
            });
        }
    }
    // Normalize at k = K as well (unless the schedule just did) so the final
    // ratio's denominator is exactly 1 and cannot underflow.
    if !cfg.k().is_multiple_of(cfg.l()) && normalize(&mut v, &mut cost)?.is_none() {
        return Ok(DoiEstimate {
            lambda2_hat: 0.0,
            cost,
        });
    }

    let wv = w.apply(&v);
    cost.consensus_rounds += 1;
    let (num, rounds) = sup_norm_distributed(w, &wv);
    cost.max_consensus_invocations += 1;
    cost.max_consensus_rounds += rounds;
    Ok(DoiEstimate {
        lambda2_hat: num,
        cost,
    })
}

/// Runs the estimator, then builds the accelerated operator from the
/// estimate: alpha = optimal_alpha(clamp(lambda2_hat), theta).
pub fn end_to_end_alpha(
    w: &WeightMatrix,
    theta: PredictorParams,
    cfg: &DoiConfig,
) -> Result<DoiOperator> {
    let estimate = estimate_lambda2(w, cfg)?;
    let mut lambda2 = estimate.lambda2_hat;
    let mut clamped = false;
    if lambda2 > LAMBDA2_MAX {
        lambda2 = LAMBDA2_MAX;
        clamped = true;
    } else if lambda2 <= 0.0 {
        lambda2 = 0.0;
        clamped = estimate.lambda2_hat < 0.0;
    }
    let alpha = accel::optimal_alpha(lambda2, &theta)?;
    let operator = AcceleratedOperator::with_alpha(w, theta, alpha)?;
    Ok(DoiOperator {
        operator,
        estimate,
        clamped,
    })
}
