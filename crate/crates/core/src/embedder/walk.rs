//! Second-order biased random walks.
//!
//! Having arrived at `cur` from `prev`, the next node `x` is drawn with
//! unnormalized weight `1/p` if `x == prev`, `1` if `x` neighbors `prev`,
//! and `1/q` otherwise. The first step of a walk is uniform.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 80,
            p: 1.0,
            q: 1.0,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 || self.walk_length == 0 {
            return Err(Error::Config(
                "walks_per_node and walk_length must be at least 1".into(),
            ));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn is_first_order(&self) -> bool {
        self.p == 1.0 && self.q == 1.0
    }
}

/// Unnormalized weights for stepping from `cur` to each of its neighbors
/// (in neighbor-list order), given the previous node.
pub fn transition_weights(g: &Graph, prev: Option<NodeId>, cur: NodeId, p: f64, q: f64) -> Vec<f64> {
    let next = g.neighbors(cur);
    let Some(prev) = prev else {
        return vec![1.0; next.len()];
    };
    let prev_nbrs = g.neighbors(prev);
    next.iter()
        .map(|&x| {
            if x == prev {
                1.0 / p
            } else if prev_nbrs.binary_search(&x).is_ok() {
                1.0
            } else {
                1.0 / q
            }
        })
        .collect()
}

/// Lazily built alias tables keyed by directed edge `(prev, cur)`.
struct AliasCache<'g> {
    graph: &'g Graph,
    p: f64,
    q: f64,
    tables: HashMap<(NodeId, NodeId), WeightedAliasIndex<f64>>,
}

impl<'g> AliasCache<'g> {
    fn new(graph: &'g Graph, p: f64, q: f64) -> Self {
        AliasCache {
            graph,
            p,
            q,
            tables: HashMap::new(),
        }
    }

    fn sample<R: Rng>(&mut self, prev: NodeId, cur: NodeId, rng: &mut R) -> NodeId {
        let (graph, p, q) = (self.graph, self.p, self.q);
        let table = self.tables.entry((prev, cur)).or_insert_with(|| {
            WeightedAliasIndex::new(transition_weights(graph, Some(prev), cur, p, q))
                .expect("positive finite weights")
        });
        graph.neighbors(cur)[table.sample(rng)]
    }
}

fn walk_from<R: Rng>(
    g: &Graph,
    start: NodeId,
    cfg: &WalkConfig,
    cache: &mut AliasCache<'_>,
    rng: &mut R,
) -> Vec<NodeId> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let nbrs = g.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = if walk.len() == 1 || cfg.is_first_order() {
            nbrs[rng.random_range(0..nbrs.len())]
        } else {
            cache.sample(walk[walk.len() - 2], cur, rng)
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` rounds, each visiting every node once in a seeded random
/// order. Every walk has its own generator derived from `(seed, round, start)`,
/// so the output is identical for any thread count.
pub fn generate_walks(g: &Graph, cfg: &WalkConfig) -> Result<Vec<Vec<NodeId>>> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(Error::InvalidGraph("cannot walk an empty graph".into()));
    }
    let n = g.node_count() as NodeId;
    let mut starts = Vec::with_capacity(cfg.walks_per_node * n as usize);
    for round in 0..cfg.walks_per_node as u64 {
        let mut order: Vec<NodeId> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seeds::mix(cfg.seed, &[round])));
        starts.extend(order.into_iter().map(|v| (round, v)));
    }
    let walks = starts
        .par_iter()
        .map_init(
            || AliasCache::new(g, cfg.p, cfg.q),
            |cache, &(round, v)| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seeds::mix(cfg.seed, &[round, v as u64, 1]));
                walk_from(g, v, cfg, cache, &mut rng)
            },
        )
        .collect();
    Ok(walks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn uniform_when_p_and_q_are_one() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
        let w = transition_weights(&g, Some(0), 1, 1.0, 1.0);
        assert!(w.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn return_and_outward_weights() {
        let g = path3();
        let w = transition_weights(&g, Some(0), 1, 0.5, 2.0);
        assert_eq!(w, vec![2.0, 0.5]);
        let total: f64 = w.iter().sum();
        assert!((w[0] / total - 0.8).abs() < 1e-12);
        assert!((w[1] / total - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empirical_second_step_frequencies() {
        // start at 0; the only first step is 1; the second step returns w.p. 0.8
        let g = path3();
        let cfg = WalkConfig {
            walks_per_node: 4000,
            walk_length: 3,
            p: 0.5,
            q: 2.0,
            seed: 3,
        };
        let walks = generate_walks(&g, &cfg).unwrap();
        let from_zero: Vec<_> = walks.iter().filter(|w| w[0] == 0).collect();
        let back = from_zero.iter().filter(|w| w[2] == 0).count() as f64;
        let freq = back / from_zero.len() as f64;
        assert!((freq - 0.8).abs() < 0.03, "{freq}");
    }

    #[test]
    fn isolated_node_walks_have_length_one() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let walks = generate_walks(&g, &WalkConfig { walks_per_node: 2, ..Default::default() }).unwrap();
        assert_eq!(walks.len(), 6);
        for w in &walks {
            if w[0] == 2 {
                assert_eq!(w, &vec![2]);
            } else {
                assert_eq!(w.len(), 80);
            }
        }
    }

    #[test]
    fn star_walks_alternate_through_center() {
        let g = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        let walks = generate_walks(&g, &WalkConfig { walk_length: 21, seed: 5, ..Default::default() })
            .unwrap();
        for w in walks.iter().filter(|w| w[0] != 0) {
            for (pos, &v) in w.iter().enumerate() {
                assert_eq!(v == 0, pos % 2 == 1);
            }
        }
    }

    #[test]
    fn walks_follow_edges_and_are_deterministic() {
        let g = Graph::from_edges(8, [(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 6), (6, 7)])
            .unwrap();
        let cfg = WalkConfig { p: 0.25, q: 4.0, seed: 11, walk_length: 30, ..Default::default() };
        let a = generate_walks(&g, &cfg).unwrap();
        assert_eq!(a, generate_walks(&g, &cfg).unwrap());
        for w in &a {
            assert!(w.windows(2).all(|e| g.contains(e[0], e[1])));
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        assert_eq!(a, pool.install(|| generate_walks(&g, &cfg).unwrap()));
    }

    #[test]
    fn config_validation() {
        let bad = WalkConfig { p: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = WalkConfig { walk_length: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
