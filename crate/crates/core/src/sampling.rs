//! Random-walk-with-restart graph sampling.
//!
//! The walk starts at a uniformly random node. At every step it jumps back to
//! the start node with probability `restart_probability`, otherwise it moves
//! to a uniformly random neighbor. When the visited set has not grown for
//! `100 * theta` consecutive steps, or the current node has no neighbors, a new
//! exploration starts from a uniformly random unvisited node. Sampling stops
//! once `theta` distinct nodes (users and items together) have been visited,
//! and the result is the subgraph induced by the visited nodes.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with `seed`, so the sample
//! depends only on the graph, the config and the `rand` version.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::BipartiteGraph;

/// Steps without a new node, per unit of `theta`, before a fresh exploration.
pub const STALL_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub theta: usize,
    pub restart_probability: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            theta: 100,
            restart_probability: 0.15,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta == 0 {
            return Err(Error::Config("theta must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.restart_probability) {
            return Err(Error::Config(format!(
                "restart probability {} not in [0, 1)",
                self.restart_probability
            )));
        }
        Ok(())
    }
}

/// Global indices of the nodes visited by the walk, in visiting order.
pub fn walk_visit_order(g: &BipartiteGraph, cfg: &WalkConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    if g.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = g.num_nodes();
    let target = cfg.theta.min(n);
    let adj = g.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(target);

    let mut start = rng.random_range(0..n);
    let mut current = start;
    visited[start] = true;
    order.push(start);
    let stall_limit = STALL_FACTOR * cfg.theta;
    let mut stalled = 0usize;

    while order.len() < target {
        if adj[current].is_empty() || stalled >= stall_limit {
            let unvisited: Vec<usize> = (0..n).filter(|&v| !visited[v]).collect();
            start = unvisited[rng.random_range(0..unvisited.len())];
            current = start;
            visited[start] = true;
            order.push(start);
            stalled = 0;
            continue;
        }
        current = if rng.random::<f64>() < cfg.restart_probability {
            start
        } else {
            let neighbors = &adj[current];
            neighbors[rng.random_range(0..neighbors.len())].0
        };
        if visited[current] {
            stalled += 1;
        } else {
            visited[current] = true;
            order.push(current);
            stalled = 0;
        }
    }
    Ok(order)
}

/// Reduces `g` to the subgraph induced by `min(theta, |V|)` walk-visited nodes.
pub fn random_walk_sample(g: &BipartiteGraph, cfg: &WalkConfig) -> Result<BipartiteGraph> {
    cfg.validate()?;
    if g.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    if cfg.theta >= g.num_nodes() {
        return Ok(g.clone());
    }
    let order = walk_visit_order(g, cfg)?;
    let mut keep = vec![false; g.num_nodes()];
    for v in order {
        keep[v] = true;
    }
    Ok(g.induced(&keep))
}
