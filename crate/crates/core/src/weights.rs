//! Mixing matrices over a topology.
//!
//! A mixing matrix W must satisfy W1 = 1, 1'W = 1', and rho(W - J) < 1
//! (J is the all-ones matrix scaled by 1/n) for the iteration x(t+1) = W x(t)
//! to drive every component to the initial average. Both constructions here
//! are symmetric and locally computable: a node needs only its own degree and
//! its neighbors' degrees.
//!
//! - Metropolis-Hastings: W_ij = 1 / (1 + max(d_i, d_j)) on edges.
//! - Max-degree: W_ij = 1 / (1 + d_max) on edges. The 1/(d_max + 1)
//!   convention (rather than 1/d_max) keeps every self-weight strictly
//!   positive, which rules out a -1 eigenvalue on bipartite graphs.
//!
//! Diagonals absorb the remaining row mass, so row sums are exact up to
//! floating-point rounding.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::SquareMatrix;
use crate::spectral;

/// Tolerance on row/column sums and symmetry in [`WeightMatrix::check_conditions`].
pub const STOCHASTICITY_TOL: f64 = 1e-12;

/// Symmetric mixing matrix tied to the graph it mixes over.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    graph: Graph,
    entries: SquareMatrix,
}

/// Diagnostics from [`WeightMatrix::check_conditions`].
#[derive(Debug, Clone, Copy)]
pub struct ConditionReport {
    /// max_i |sum_j W_ij - 1|
    pub max_row_sum_error: f64,
    /// max_j |sum_i W_ij - 1|
    pub max_col_sum_error: f64,
    /// max_ij |W_ij - W_ji|
    pub max_asymmetry: f64,
    /// rho(W - J), the convergence rate of the memoryless iteration.
    pub rho_deviation: f64,
}

impl ConditionReport {
    /// True when all averaging conditions hold at the documented tolerance.
    pub fn is_valid(&self) -> bool {
        self.max_row_sum_error <= STOCHASTICITY_TOL
            && self.max_col_sum_error <= STOCHASTICITY_TOL
            && self.max_asymmetry <= STOCHASTICITY_TOL
            && self.rho_deviation < 1.0
    }
}

impl WeightMatrix {
    /// Metropolis-Hastings weights: edge weight 1 / (1 + max(d_i, d_j)),
    /// diagonal fills the row to 1.
    pub fn metropolis_hastings(graph: &Graph) -> Self {
        Self::from_edge_rule(graph, |g, i, j| {
            1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64)
        })
    }

    /// Max-degree weights: every edge gets 1 / (1 + d_max).
    pub fn max_degree(graph: &Graph) -> Self {
        let inv = 1.0 / (1.0 + graph.max_degree() as f64);
        Self::from_edge_rule(graph, |_, _, _| inv)
    }

    fn from_edge_rule(graph: &Graph, rule: impl Fn(&Graph, usize, usize) -> f64) -> Self {
        let n = graph.n();
        let mut entries = SquareMatrix::zeros(n);
        for i in 0..n {
            let mut off_diag = 0.0;
            for &j in graph.neighbors(i) {
                let w = rule(graph, i, j);
                entries.set(i, j, w);
                off_diag += w;
            }
            entries.set(i, i, 1.0 - off_diag);
        }
        WeightMatrix {
            graph: graph.clone(),
            entries,
        }
    }

    /// Builds from explicit entries, validating that the support matches the
    /// graph (nonzero off-diagonals only on edges). Intended for tests and
    /// for loading externally computed weights.
    pub fn from_parts(graph: Graph, entries: SquareMatrix) -> Result<Self> {
        if entries.n() != graph.n() {
            return Err(Error::InvalidParameter(format!(
                "graph has {} nodes but matrix is {}x{}",
                graph.n(),
                entries.n(),
                entries.n()
            )));
        }
        for i in 0..graph.n() {
            for j in 0..graph.n() {
                if i != j && entries.get(i, j) != 0.0 && !graph.neighbors(i).contains(&j) {
                    return Err(Error::InvalidParameter(format!(
                        "nonzero weight at non-edge ({i}, {j})"
                    )));
                }
            }
        }
        Ok(WeightMatrix { graph, entries })
    }

    /// Lazy variant (W + I) / 2. Shifts the spectrum into [0, 1], trading a
    /// factor of at most two in rate for guaranteed nonnegative eigenvalues.
    pub fn lazy_transform(&self) -> WeightMatrix {
        let n = self.n();
        let mut entries = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let half = 0.5 * self.entries.get(i, j);
                entries.set(i, j, if i == j { 0.5 + half } else { half });
            }
        }
        WeightMatrix {
            graph: self.graph.clone(),
            entries,
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn self_weight(&self, i: usize) -> f64 {
        self.entries.get(i, i)
    }

    /// Weights on edges incident to `i`, in ascending neighbor order.
    pub fn neighbor_weights(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.graph
            .neighbors(i)
            .iter()
            .map(move |&j| (j, self.entries.get(i, j)))
    }

    /// Dense W x. Test and analysis path; the engine iterates node-locally.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries.mul_vec(x)
    }

    /// Verifies the averaging conditions: unit row and column sums, symmetry,
    /// and rho(W - J) < 1.
    pub fn check_conditions(&self) -> Result<ConditionReport> {
        let n = self.n();
        let mut max_row = 0.0f64;
        let mut max_col = 0.0f64;
        for i in 0..n {
            let row_sum: f64 = self.entries.row(i).iter().sum();
            let col_sum: f64 = (0..n).map(|k| self.entries.get(k, i)).sum();
            max_row = max_row.max((row_sum - 1.0).abs());
            max_col = max_col.max((col_sum - 1.0).abs());
        }
        let report = ConditionReport {
            max_row_sum_error: max_row,
            max_col_sum_error: max_col,
            max_asymmetry: self.entries.max_asymmetry(),
            rho_deviation: spectral::rho_deviation(self)?,
        };
        Ok(report)
    }

    /// CSV dump with 17 significant digits per entry, enough to reconstruct
    /// each f64 exactly.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    write!(out, ",")?;
                }
                write!(out, "{:.16e}", self.entries.get(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
