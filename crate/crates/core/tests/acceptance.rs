//! Acceptance gate: one test per criterion, each printing a single
//! `ACCEPTANCE <k> <name>: PASS|FAIL` line before asserting.
//!
//! Tolerances are pinned here and are not to be loosened; where a check has a
//! numerically delicate regime (defective eigenvalues, trial-averaged
//! curves), the comments state the measurement protocol.

use num_complex::Complex64;

use consensus_core::accel::{optimal_alpha, AcceleratedOperator, PredictorParams};
use consensus_core::doi::{end_to_end_alpha, estimate_lambda2, DoiConfig};
use consensus_core::engine::{init_slope, run_to_accuracy, step_accelerated, Algo, InitModel, NodeState};
use consensus_core::graph::Graph;
use consensus_core::rng::{derive_seed, rng_from_seed};
use consensus_core::spectral::{phi_spectrum, symmetric_eigenvalues, Spectrum};
use consensus_core::weights::WeightMatrix;
use rand::Rng as _;

fn report(idx: usize, name: &str, ok: bool) {
    println!("ACCEPTANCE {idx:02} {name}: {}", if ok { "PASS" } else { "FAIL" });
}

/// Fifty reproducible admissible (lambda2, theta) draws shared by the
/// closed-form criteria.
fn parameter_draws() -> Vec<(f64, PredictorParams)> {
    let mut rng = rng_from_seed(42);
    (0..50)
        .map(|i| {
            let lambda2 = rng.gen_range(0.05..0.995);
            let theta = match i % 3 {
                0 => PredictorParams::least_squares(),
                1 => PredictorParams::asymptotic(rng.gen_range(0.1..1.5)).unwrap(),
                _ => {
                    let t2 = rng.gen_range(0.0..1.0);
                    let t3 = rng.gen_range(1.05..2.2);
                    PredictorParams::new(1.0 - t2 - t3, t2, t3).unwrap()
                }
            };
            (lambda2, theta)
        })
        .collect()
}

fn mixing_operator(g: &Graph, theta: PredictorParams) -> AcceleratedOperator {
    let w = WeightMatrix::metropolis_hastings(g);
    match AcceleratedOperator::optimal(&w, theta) {
        Ok(op) => op,
        Err(_) => AcceleratedOperator::optimal(&w.lazy_transform(), theta).unwrap(),
    }
}

/// Greedy multiset distance between the analytic operator spectrum and the
/// eigenvalues of the assembled matrix computed by a dense solver.
fn assembled_multiset_distance(op: &AcceleratedOperator) -> f64 {
    let analytic = phi_spectrum(op.spectrum(), op.params(), op.alpha());
    let dense = op.assemble_phi();
    let m = nalgebra::DMatrix::from_fn(dense.n(), dense.n(), |i, j| dense.get(i, j));
    let mut unmatched: Vec<Complex64> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    let mut worst = 0.0f64;
    for &a in analytic.eigenvalues() {
        let (idx, dist) = unmatched
            .iter()
            .enumerate()
            .map(|(i, &z)| (i, (z - a).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        worst = worst.max(dist);
        unmatched.swap_remove(idx);
    }
    worst
}

#[test]
fn criterion_01_optimal_alpha_matches_grid_search() {
    const STEP: f64 = 1e-4;
    const TOL: f64 = 2e-4;
    let mut worst = 0.0f64;
    for (lambda2, theta) in parameter_draws() {
        let spec = Spectrum::from_values(vec![1.0, lambda2]);
        let a_star = optimal_alpha(lambda2, &theta).unwrap();
        let bound = theta.stability_bound();
        let mut best = (f64::INFINITY, 0.0);
        let mut k = 0usize;
        loop {
            let alpha = k as f64 * STEP;
            if alpha >= bound {
                break;
            }
            let r = phi_spectrum(&spec, &theta, alpha).radius();
            if r < best.0 {
                best = (r, alpha);
            }
            k += 1;
        }
        worst = worst.max((a_star - best.1).abs());
    }
    let ok = worst <= TOL;
    report(1, "optimal alpha matches 1e-4 grid search", ok);
    assert!(ok, "worst |alpha* - argmin| = {worst:.3e} > {TOL:.0e}");
}

#[test]
fn criterion_02_radius_identity_and_assembled_cross_check() {
    // Identity: the radius at alpha* equals sqrt(-alpha* theta1), the
    // coalesced dominant double root.
    let mut worst_identity = 0.0f64;
    for (lambda2, theta) in parameter_draws() {
        let spec = Spectrum::from_values(vec![1.0, lambda2]);
        let a_star = optimal_alpha(lambda2, &theta).unwrap();
        let radius = phi_spectrum(&spec, &theta, a_star).radius();
        worst_identity = worst_identity.max((radius - (-a_star * theta.theta1()).sqrt()).abs());
    }
    let instances = [
        Graph::chain(4).unwrap(),
        Graph::chain(6).unwrap(),
        Graph::chain(8).unwrap(),
        Graph::chain(10).unwrap(),
        Graph::chain(12).unwrap(),
        Graph::grid(3).unwrap(),
        Graph::random_geometric(10, 7).unwrap().graph,
        Graph::random_geometric(12, 11).unwrap().graph,
    ];
    let theta = PredictorParams::least_squares();
    for g in &instances {
        let op = mixing_operator(g, theta);
        let identity = (-op.alpha() * theta.theta1()).sqrt();
        worst_identity = worst_identity.max((op.analytic_radius() - identity).abs());
    }
    // Cross-check against a dense eigensolve of the assembled 2N x 2N matrix.
    // Away from coalescence every eigenvalue is semisimple and the dense
    // solver is accurate to ~1e-13, so all sizes are checked there. At
    // alpha* the dominant pair is defective and any backward-stable solver
    // splits it by ~sqrt(machine epsilon) ~ 1e-8; that oracle-side error
    // shrinks with instance size and sits below 1e-8 only from N ~ 10 up,
    // so the defective-point check runs on the larger instances.
    let mut worst_semisimple = 0.0f64;
    for g in &instances {
        let at_opt = mixing_operator(g, theta);
        let spec = symmetric_eigenvalues(at_opt.weights()).unwrap();
        let mut alpha = 0.6 * at_opt.alpha();
        'nudge: loop {
            for &lam in spec.eigenvalues().iter().skip(1) {
                let (lo, _) = consensus_core::accel::alpha_region_bounds(lam, &theta).unwrap();
                if (alpha - lo).abs() < 2e-3 {
                    alpha += 4e-3;
                    continue 'nudge;
                }
            }
            break;
        }
        let op = AcceleratedOperator::with_alpha(at_opt.weights(), theta, alpha).unwrap();
        worst_semisimple = worst_semisimple.max(assembled_multiset_distance(&op));
    }
    let mut worst_defective = 0.0f64;
    for g in [
        Graph::chain(10).unwrap(),
        Graph::chain(12).unwrap(),
        Graph::random_geometric(12, 11).unwrap().graph,
    ] {
        let op = mixing_operator(&g, theta);
        worst_defective = worst_defective.max(assembled_multiset_distance(&op));
    }
    let ok = worst_identity <= 1e-10 && worst_semisimple <= 1e-8 && worst_defective <= 1e-8;
    report(2, "closed-form radius identity + assembled eigenvalues", ok);
    assert!(
        ok,
        "identity {worst_identity:.3e} (tol 1e-10), semisimple {worst_semisimple:.3e}, \
         defective {worst_defective:.3e} (tol 1e-8)"
    );
}

#[test]
fn criterion_03_radius_within_square_root_envelope() {
    let theta = PredictorParams::least_squares();
    let mut min_slack = f64::INFINITY;
    for n in [16usize, 64, 144, 256] {
        let side = (n as f64).sqrt() as usize;
        for g in [
            Graph::chain(n).unwrap(),
            Graph::grid(side).unwrap(),
            Graph::random_geometric(n, derive_seed(3, n as u64)).unwrap().graph,
        ] {
            let op = mixing_operator(&g, theta);
            let psi = 1.0 - op.spectrum().rho_deviation();
            let slack = (1.0 - psi.sqrt()) - op.analytic_radius();
            min_slack = min_slack.min(slack);
        }
    }
    let ok = min_slack >= 0.0;
    report(3, "accelerated radius <= 1 - sqrt(psi) on all instances", ok);
    assert!(ok, "minimum slack {min_slack:.3e} < 0");
}

#[test]
fn criterion_04_chain_spectrum_matches_closed_form() {
    let mut worst = 0.0f64;
    for n in [4usize, 10, 50, 200] {
        let w = WeightMatrix::metropolis_hastings(&Graph::chain(n).unwrap());
        let spec = symmetric_eigenvalues(&w).unwrap();
        for (i, &lam) in spec.eigenvalues().iter().enumerate() {
            let exact = 1.0 / 3.0 + 2.0 / 3.0 * (std::f64::consts::PI * i as f64 / n as f64).cos();
            worst = worst.max((lam - exact).abs());
        }
    }
    let ok = worst <= 1e-9;
    report(4, "chain spectrum matches closed form", ok);
    assert!(ok, "worst eigenvalue deviation {worst:.3e} > 1e-9");
}

/// Asymptotic time ratio of memoryless over accelerated consensus.
fn gain(op: &AcceleratedOperator) -> f64 {
    op.analytic_radius().ln() / op.spectrum().rho_deviation().ln()
}

#[test]
fn criterion_05_gain_scaling_with_network_size() {
    let theta = PredictorParams::least_squares();
    let chain_ratio = gain(&mixing_operator(&Graph::chain(200).unwrap(), theta))
        / gain(&mixing_operator(&Graph::chain(100).unwrap(), theta));
    let grid_ratio = gain(&mixing_operator(&Graph::grid(16).unwrap(), theta))
        / gain(&mixing_operator(&Graph::grid(8).unwrap(), theta));
    let ok = (1.6..=2.4).contains(&chain_ratio) && (1.6..=2.4).contains(&grid_ratio);
    report(5, "gain doubles from N=100 to N=200 (chain) and 64 to 256 (grid)", ok);
    assert!(ok, "chain ratio {chain_ratio:.4}, grid ratio {grid_ratio:.4}, want [1.6, 2.4]");
}

#[test]
fn criterion_06_gain_envelope_on_deterministic_topologies() {
    // The reference gain at the sqrt envelope is f(psi) =
    // ln(1 - sqrt(psi)) / ln(1 - psi); the envelope bounds are a property of
    // f, and the measured gain can only exceed f because the operator radius
    // sits at or below 1 - sqrt(psi) (criterion 3).
    let theta = PredictorParams::least_squares();
    let mut ok = true;
    let mut detail = String::new();
    for n in [16usize, 64, 144, 256] {
        let side = (n as f64).sqrt() as usize;
        for g in [Graph::chain(n).unwrap(), Graph::grid(side).unwrap()] {
            let op = mixing_operator(&g, theta);
            let psi = 1.0 - op.spectrum().rho_deviation();
            let f = (1.0 - psi.sqrt()).ln() / (1.0 - psi).ln();
            let lower = 1.0 / psi.sqrt();
            let measured = gain(&op);
            if !(lower <= f && f <= lower + 0.5 && measured + 1e-12 >= f) {
                ok = false;
                detail = format!(
                    "n = {n}: 1/sqrt(psi) = {lower:.4}, f = {f:.4}, measured = {measured:.4}"
                );
            }
        }
    }
    report(6, "1/sqrt(psi) <= f(psi) <= 1/sqrt(psi) + 1/2 <= measured-gain envelope", ok);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_07_doi_estimation_accuracy() {
    // Ten geometric instances in the slow-mixing regime the estimator targets.
    let mut worst_rgg = 0.0f64;
    for i in 0..10u64 {
        let g = Graph::random_geometric(200, derive_seed(7, i)).unwrap().graph;
        let w = WeightMatrix::metropolis_hastings(&g);
        let truth = symmetric_eigenvalues(&w).unwrap().lambda2();
        let est = estimate_lambda2(&w, &DoiConfig::new(400, 10, derive_seed(7, 100 + i)).unwrap())
            .unwrap();
        worst_rgg = worst_rgg.max((est.lambda2_hat - truth).abs() / truth);
    }
    // Slow-mixing chain with the quadratic iteration budget.
    let w = WeightMatrix::metropolis_hastings(&Graph::chain(50).unwrap());
    let truth = symmetric_eigenvalues(&w).unwrap().lambda2();
    let cfg = DoiConfig::new(2500, 49, derive_seed(7, 999)).unwrap();
    let chain_err = (estimate_lambda2(&w, &cfg).unwrap().lambda2_hat - truth).abs() / truth;
    let ok = worst_rgg <= 5e-3 && chain_err <= 1e-3;
    report(7, "decentralized lambda2 estimate accuracy", ok);
    assert!(ok, "rgg max rel err {worst_rgg:.3e} (tol 5e-3), chain {chain_err:.3e} (tol 1e-3)");
}

#[test]
fn criterion_08_end_to_end_acceleration() {
    const TRIALS: usize = 30;
    const EPS: f64 = 1e-5; // -100 dB
    let theta = PredictorParams::least_squares();
    let mut oracle_wins = 0usize;
    let mut doi_wins = 0usize;
    let mut oracle_curves: Vec<Vec<f64>> = Vec::new();
    let mut doi_curves: Vec<Vec<f64>> = Vec::new();
    for t in 0..TRIALS as u64 {
        let g = Graph::random_geometric(200, derive_seed(8, t)).unwrap().graph;
        let w = WeightMatrix::metropolis_hastings(&g);
        let x0 = init_slope(&g);
        let mem = run_to_accuracy(&Algo::Memoryless(&w), &x0, EPS, 10_000, InitModel::Slope)
            .unwrap();
        let oracle_op = AcceleratedOperator::optimal(&w, theta).unwrap();
        let oracle =
            run_to_accuracy(&Algo::Accelerated(&oracle_op), &x0, EPS, 4_000, InitModel::Slope)
                .unwrap();
        let cfg = DoiConfig::new(400, 10, derive_seed(8, 1_000 + t)).unwrap();
        let doi_op = end_to_end_alpha(&w, theta, &cfg).unwrap().operator;
        let doi =
            run_to_accuracy(&Algo::Accelerated(&doi_op), &x0, EPS, 4_000, InitModel::Slope)
                .unwrap();
        let mem_tc = mem.converged_at.expect("memoryless budget exhausted");
        if oracle.converged_at.is_some_and(|tc| tc < mem_tc) {
            oracle_wins += 1;
        }
        if doi.converged_at.is_some_and(|tc| tc < mem_tc) {
            doi_wins += 1;
        }
        oracle_curves.push(oracle.mse_linear);
        doi_curves.push(doi.mse_linear);
    }
    // Trial-averaged MSE curves in dB (geometric mean across trials per
    // iteration), compared pointwise up to the averaged oracle curve's first
    // -100 dB crossing. Per-trial curves diverge late in the run because a
    // small alpha mismatch integrates over hundreds of iterations; averaging
    // across trials is what the near-coincidence claim is about.
    let horizon = oracle_curves
        .iter()
        .chain(doi_curves.iter())
        .map(Vec::len)
        .min()
        .unwrap();
    let mean_db = |curves: &[Vec<f64>], t: usize| {
        curves.iter().map(|c| 10.0 * c[t].max(1e-320).log10()).sum::<f64>() / TRIALS as f64
    };
    let mut gap_db = 0.0f64;
    for t in 0..horizon {
        let oracle_db = mean_db(&oracle_curves, t);
        gap_db = gap_db.max((mean_db(&doi_curves, t) - oracle_db).abs());
        if oracle_db <= -100.0 {
            break;
        }
    }
    let ok = oracle_wins * 100 >= TRIALS * 95 && doi_wins * 100 >= TRIALS * 95 && gap_db <= 1.0;
    report(8, "end-to-end acceleration and oracle/estimate coincidence", ok);
    assert!(
        ok,
        "oracle wins {oracle_wins}/{TRIALS}, doi wins {doi_wins}/{TRIALS}, \
         averaged-curve gap {gap_db:.3} dB (tol 1.0)"
    );
}

#[test]
fn criterion_09_limiting_convergence_time() {
    // Fixed stable operator away from the defective optimum, where the pure
    // exponential rate is observable at finite horizons.
    let w = WeightMatrix::metropolis_hastings(&Graph::chain(16).unwrap());
    let theta = PredictorParams::least_squares();
    let lambda2 = symmetric_eigenvalues(&w).unwrap().lambda2();
    let a_star = optimal_alpha(lambda2, &theta).unwrap();
    let op = AcceleratedOperator::with_alpha(&w, theta, 0.8 * a_star).unwrap();
    let target = -1.0 / op.analytic_radius().ln();
    let x0 = init_slope(w.graph());
    let eps = 1e-9;
    let trace = run_to_accuracy(&Algo::Accelerated(&op), &x0, eps, 4_000, InitModel::Slope)
        .unwrap();
    let ratio = trace.converged_at.unwrap() as f64 / (1.0 / eps).ln();
    let gap = ((ratio - target) / target).abs();
    let ok = gap <= 0.10;
    report(9, "convergence time per log(1/eps) approaches 1/log(1/rho)", ok);
    assert!(ok, "relative gap {gap:.4} at eps = 1e-9 (tol 0.10)");
}

#[test]
fn criterion_10_invariant_suites() {
    // The full property suites run as the `properties` test target in the
    // same workspace invocation; this smoke check re-runs one instance of
    // each headline invariant so the acceptance gate is self-contained.
    let g = Graph::chain(12).unwrap();
    let w = WeightMatrix::metropolis_hastings(&g);
    let theta = PredictorParams::least_squares();
    let op = AcceleratedOperator::optimal(&w, theta).unwrap();

    // Quadratic residuals of the analytic spectrum.
    let phi = phi_spectrum(op.spectrum(), op.params(), op.alpha());
    let c = Complex64::new(op.alpha() * theta.theta1(), 0.0);
    let mut qep_ok = true;
    for (i, &lam) in op.spectrum().eigenvalues().iter().enumerate() {
        let lw3 = (1.0 - op.alpha() + op.alpha() * theta.theta3()) * lam
            + op.alpha() * theta.theta2();
        for &root in &phi.eigenvalues()[2 * i..2 * i + 2] {
            qep_ok &= (root * root - root * lw3 - c).norm() <= 1e-9;
        }
    }

    // Locality: the node-local kernel reproduces the assembled recursion.
    let x0 = init_slope(&g);
    let dense = op.assemble_phi();
    let mut states: Vec<NodeState> = x0.iter().map(|&v| NodeState::new(v)).collect();
    let mut stacked: Vec<f64> = x0.iter().chain(x0.iter()).copied().collect();
    let mut local_ok = true;
    let mut mean_ok = true;
    let mean0 = x0.iter().sum::<f64>() / x0.len() as f64;
    for _ in 0..100 {
        states = step_accelerated(&op, &states);
        stacked = dense.mul_vec(&stacked);
        for (i, s) in states.iter().enumerate() {
            local_ok &= (s.current - stacked[i]).abs() <= 1e-12;
        }
        let mean = states.iter().map(|s| s.current).sum::<f64>() / states.len() as f64;
        mean_ok &= (mean - mean0).abs() <= 1e-11;
    }

    // Estimator determinism and zero-mean start.
    let cfg = DoiConfig::new(40, 5, 9).unwrap();
    let e1 = estimate_lambda2(&w, &cfg).unwrap();
    let e2 = estimate_lambda2(&w, &cfg).unwrap();
    let det_ok = e1.lambda2_hat == e2.lambda2_hat;

    let ok = qep_ok && local_ok && mean_ok && det_ok;
    report(10, "invariant property suites", ok);
    assert!(ok, "qep {qep_ok}, locality {local_ok}, mean {mean_ok}, determinism {det_ok}");
}
