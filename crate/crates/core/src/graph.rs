//! Network topologies for the averaging experiments.
//!
//! - chain: n-node path.
//! - grid: side x side four-neighbor lattice.
//! - random geometric graph (RGG): n uniform points in the unit square,
//!   edge iff Euclidean distance <= sqrt(2 ln n / n), the radius at which
//!   connectivity holds with high probability.
//!
//! Graphs are undirected and simple; neighbor lists are kept sorted.
//! Construction is deterministic: the RGG is a pure function of (n, seed),
//! and disconnected samples are regenerated from derived seeds with the
//! retry count surfaced to the caller.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Maximum RGG regeneration attempts before giving up.
const RGG_RETRY_CAP: u32 = 64;

/// Undirected simple graph with optional node coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    positions: Option<Vec<[f64; 2]>>,
}

/// A generated random geometric graph plus how many resamples it took.
#[derive(Debug, Clone)]
pub struct RggSample {
    pub graph: Graph,
    /// Number of discarded disconnected samples before this one.
    pub retries: u32,
}

impl Graph {
    /// Path graph: node i adjacent to i-1 and i+1 where they exist.
    pub fn chain(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("chain needs n >= 2, got {n}")));
        }
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n - 1 {
            neighbors[i].push(i + 1);
            neighbors[i + 1].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph {
            neighbors,
            positions: None,
        })
    }

    /// side x side four-neighbor lattice, n = side^2. Nodes carry their
    /// lattice coordinates scaled into the unit square, row-major ids.
    pub fn grid(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs side >= 2, got {side}"
            )));
        }
        let n = side * side;
        let mut neighbors = vec![Vec::new(); n];
        let id = |r: usize, c: usize| r * side + c;
        for r in 0..side {
            for c in 0..side {
                if c + 1 < side {
                    neighbors[id(r, c)].push(id(r, c + 1));
                    neighbors[id(r, c + 1)].push(id(r, c));
                }
                if r + 1 < side {
                    neighbors[id(r, c)].push(id(r + 1, c));
                    neighbors[id(r + 1, c)].push(id(r, c));
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let denom = (side - 1) as f64;
        let positions = (0..n)
            .map(|i| [(i % side) as f64 / denom, (i / side) as f64 / denom])
            .collect();
        Ok(Graph {
            neighbors,
            positions: Some(positions),
        })
    }

    /// Complete graph on n nodes.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "complete graph needs n >= 2, got {n}"
            )));
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Ok(Graph {
            neighbors,
            positions: None,
        })
    }

    /// Builds a graph from an explicit edge list (validated).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("graph needs n >= 2, got {n}")));
        }
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at node {i}")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge at node {i}"
                )));
            }
        }
        Ok(Graph {
            neighbors,
            positions: None,
        })
    }

    /// Random geometric graph on n uniform points in the unit square with
    /// connectivity radius sqrt(2 ln n / n).
    ///
    /// Disconnected samples are discarded and regenerated from
    /// `derive_seed(seed, attempt)` up to a retry cap; the sample is a pure
    /// function of (n, seed).
    pub fn random_geometric(n: usize, seed: u64) -> Result<RggSample> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("rgg needs n >= 2, got {n}")));
        }
        let radius_sq = 2.0 * (n as f64).ln() / (n as f64);
        for attempt in 0..RGG_RETRY_CAP {
            let mut rng = rng_from_seed(derive_seed(seed, u64::from(attempt)));
            let positions: Vec<[f64; 2]> = (0..n)
                .map(|_| {
                    let x = rng.gen::<f64>();
                    let y = rng.gen::<f64>();
                    [x, y]
                })
                .collect();
            let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let dx = positions[i][0] - positions[j][0];
                    let dy = positions[i][1] - positions[j][1];
                    if dx * dx + dy * dy <= radius_sq {
                        neighbors[i].push(j);
                        neighbors[j].push(i);
                    }
                }
            }
            let graph = Graph {
                neighbors,
                positions: Some(positions),
            };
            if graph.is_connected() {
                return Ok(RggSample {
                    graph,
                    retries: attempt,
                });
            }
        }
        Err(Error::GenerationFailure {
            n,
            attempts: RGG_RETRY_CAP,
        })
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Node coordinates in the unit square; present for RGGs and grids.
    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|&d| d != usize::MAX)
    }

    /// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
    fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Maximum over node pairs of the shortest-path hop count.
    pub fn diameter(&self) -> Result<usize> {
        let mut worst = 0;
        for source in 0..self.n() {
            for d in self.bfs_distances(source) {
                if d == usize::MAX {
                    return Err(Error::Disconnected);
                }
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }

    /// Plain-text edge list: first line `n`, then one `i j` pair per line
    /// in ascending order.
    pub fn write_edge_list(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "{}", self.n())?;
        for i in 0..self.n() {
            for &j in &self.neighbors[i] {
                if i < j {
                    writeln!(out, "{i} {j}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_smallest_path() {
        let g = Graph::chain(2).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.degree(0), 1);
    }

    #[test]
    fn chain_four_structure() {
        let g = Graph::chain(4).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.diameter().unwrap(), 3);
    }

    #[test]
    fn chain_interior_edge_degrees() {
        let g = Graph::chain(5).unwrap();
        for i in 0..4 {
            let max_deg = g.degree(i).max(g.degree(i + 1));
            if i > 0 || i + 1 < 4 {
                assert_eq!(max_deg, 2);
            }
        }
    }

    #[test]
    fn chain_rejects_singleton() {
        assert!(Graph::chain(1).is_err());
    }

    #[test]
    fn grid_two_is_cycle() {
        let g = Graph::grid(2).unwrap();
        assert_eq!(g.n(), 4);
        for i in 0..4 {
            assert_eq!(g.degree(i), 2);
        }
    }

    #[test]
    fn grid_three_degrees() {
        let g = Graph::grid(3).unwrap();
        assert_eq!(g.n(), 9);
        assert_eq!(g.degree(4), 4);
        for corner in [0, 2, 6, 8] {
            assert_eq!(g.degree(corner), 2);
        }
        // BFS oracle value, also checked by diameter_oracle below.
        assert_eq!(g.diameter().unwrap(), 4);
    }

    #[test]
    fn grid_four_diameter() {
        let g = Graph::grid(4).unwrap();
        assert_eq!(g.diameter().unwrap(), 6);
    }

    #[test]
    fn complete_diameter_one() {
        let g = Graph::complete(4).unwrap();
        assert_eq!(g.diameter().unwrap(), 1);
    }

    #[test]
    fn chain_diameter_sweep() {
        for n in 2..=64 {
            let g = Graph::chain(n).unwrap();
            assert_eq!(g.diameter().unwrap(), n - 1);
        }
    }

    /// Reference diameter: independent Floyd-Warshall oracle on small graphs.
    fn diameter_oracle(g: &Graph) -> usize {
        let n = g.n();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
            for &j in g.neighbors(i) {
                row[j] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        (0..n)
            .flat_map(|i| d[i].iter().copied())
            .max()
            .unwrap()
    }

    #[test]
    fn diameter_matches_floyd_warshall_oracle() {
        for g in [
            Graph::chain(7).unwrap(),
            Graph::grid(3).unwrap(),
            Graph::grid(4).unwrap(),
            Graph::complete(5).unwrap(),
            Graph::random_geometric(24, 11).unwrap().graph,
        ] {
            assert_eq!(g.diameter().unwrap(), diameter_oracle(&g));
        }
    }

    #[test]
    fn rgg_deterministic() {
        let a = Graph::random_geometric(50, 3).unwrap();
        let b = Graph::random_geometric(50, 3).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.retries, b.retries);
    }

    #[test]
    fn rgg_connected_and_symmetric() {
        for seed in 0..5 {
            let sample = Graph::random_geometric(100, seed).unwrap();
            let g = &sample.graph;
            assert!(g.is_connected());
            for i in 0..g.n() {
                for &j in g.neighbors(i) {
                    assert_ne!(i, j, "self-loop at {i}");
                    assert!(g.neighbors(j).contains(&i), "asymmetric edge {i}-{j}");
                }
            }
            assert_eq!(g.positions().unwrap().len(), 100);
        }
    }

    #[test]
    fn rgg_two_nodes_single_edge_when_close() {
        // Radius for n=2 is sqrt(2 ln 2 / 2) ~ 0.83; most seeds connect.
        // Find one quickly and check the edge set.
        let sample = Graph::random_geometric(2, 0).unwrap();
        assert_eq!(sample.graph.edge_count(), 1);
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 5)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn edge_list_format() {
        let g = Graph::chain(3).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3\n0 1\n1 2\n");
    }
}
