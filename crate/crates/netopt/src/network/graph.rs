//! Communication-graph construction and validation.

use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_RESAMPLE_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    ErdosRenyi,
    Ring,
    Star,
    Grid,
    Complete,
}

/// Undirected connected communication graph over agents `0..n`.
///
/// Edges are stored as ordered pairs `(i, j)` with `i < j`; self-loops are
/// rejected at construction.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    kind: GraphKind,
}

/// Parameters for [`Graph::build`], one variant per topology kind.
#[derive(Debug, Clone, Copy)]
pub enum GraphSpec {
    ErdosRenyi { n: usize, p: f64 },
    Ring { n: usize },
    Star { n: usize },
    Grid { rows: usize, cols: usize },
    Complete { n: usize },
}

impl Graph {
    /// Builds the requested topology. Erdős–Rényi sampling resamples with
    /// sub-seed `seed + attempt` until the draw is connected, capped at
    /// 1000 attempts.
    pub fn build(spec: GraphSpec, seed: u64) -> Result<Graph> {
        match spec {
            GraphSpec::Ring { n } => Graph::ring(n),
            GraphSpec::Star { n } => Graph::star(n),
            GraphSpec::Grid { rows, cols } => Graph::grid(rows, cols),
            GraphSpec::Complete { n } => Graph::complete(n),
            GraphSpec::ErdosRenyi { n, p } => Graph::erdos_renyi(n, p, seed),
        }
    }

    pub fn ring(n: usize) -> Result<Graph> {
        check_size(n)?;
        let mut edges = BTreeSet::new();
        for i in 0..n {
            edges.insert(ordered(i, (i + 1) % n));
        }
        Graph::from_edges(n, edges, GraphKind::Ring)
    }

    pub fn star(n: usize) -> Result<Graph> {
        check_size(n)?;
        let edges = (1..n).map(|i| (0, i)).collect();
        Graph::from_edges(n, edges, GraphKind::Star)
    }

    pub fn grid(rows: usize, cols: usize) -> Result<Graph> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidConfig("grid dimensions overflow".into()))?;
        check_size(n)?;
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig("grid dimensions must be positive".into()));
        }
        let mut edges = BTreeSet::new();
        let id = |r: usize, c: usize| r * cols + c;
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.insert(ordered(id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.insert(ordered(id(r, c), id(r + 1, c)));
                }
            }
        }
        Graph::from_edges(n, edges, GraphKind::Grid)
    }

    pub fn complete(n: usize) -> Result<Graph> {
        check_size(n)?;
        let mut edges = BTreeSet::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.insert((i, j));
            }
        }
        Graph::from_edges(n, edges, GraphKind::Complete)
    }

    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
        check_size(n)?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "edge probability must be in (0, 1], got {p}"
            )));
        }
        for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
            let mut edges = BTreeSet::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen::<f64>() < p {
                        edges.insert((i, j));
                    }
                }
            }
            if is_connected(n, &edges) {
                return Graph::from_edges(n, edges, GraphKind::ErdosRenyi);
            }
        }
        Err(Error::InvalidConfig(format!(
            "no connected Erdős–Rényi draw with n={n}, p={p} in {MAX_RESAMPLE_ATTEMPTS} attempts"
        )))
    }

    fn from_edges(n: usize, edges: BTreeSet<(usize, usize)>, kind: GraphKind) -> Result<Graph> {
        for &(i, j) in &edges {
            if i == j {
                return Err(Error::Validation(format!("self-loop at node {i}")));
            }
            if j >= n {
                return Err(Error::Validation(format!("edge ({i}, {j}) out of range for n={n}")));
            }
        }
        if !is_connected(n, &edges) {
            return Err(Error::Validation("graph is not connected".into()));
        }
        Ok(Graph { n, edges, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&ordered(i, j))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Writes the edge list as one `"i j"` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for &(i, j) in &self.edges {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidConfig(format!("need at least 2 nodes, got {n}")))
    } else {
        Ok(())
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn is_connected(n: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}
