//! Repeated random sub-sampling splits with matched negative pairs.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, canonical, max_pairs, Graph, NodeId, Pair};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplit {
    pub train_pos: Vec<Pair>,
    pub train_neg: Vec<Pair>,
    pub val_pos: Vec<Pair>,
    pub val_neg: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub test_neg: Vec<Pair>,
    /// Graph on all nodes containing exactly `train_pos`.
    pub train_graph: Graph,
    pub seed: u64,
    pub test_frac: f64,
    pub val_frac: f64,
}

/// Contents of `split.json` in a split bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMeta {
    pub seed: u64,
    pub test_frac: f64,
    pub val_frac: f64,
    pub node_count: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// `round(frac * count)` with halves rounded up.
pub fn round_count(frac: f64, count: usize) -> usize {
    (frac * count as f64 + 0.5).floor() as usize
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut perm = ChaCha8Rng::seed_from_u64(seed);
    perm.set_stream(0);
    let mut neg = ChaCha8Rng::seed_from_u64(seed);
    neg.set_stream(1);
    (perm, neg)
}

/// Draws disconnected node pairs uniformly at random, never repeating a pair.
struct NegativeSampler<'g> {
    graph: &'g Graph,
    used: HashSet<Pair>,
    /// Explicit shuffled non-edge list for graphs too dense for rejection.
    pool: Option<Vec<Pair>>,
    rng: ChaCha8Rng,
}

impl<'g> NegativeSampler<'g> {
    fn new(graph: &'g Graph, needed: usize, rng: ChaCha8Rng) -> Result<Self> {
        let n = graph.node_count();
        let non_edges = max_pairs(n) - graph.edge_count();
        if needed > non_edges {
            return Err(Error::Sampling(format!(
                "need {needed} negative pairs but the graph has only {non_edges} non-edges"
            )));
        }
        let mut sampler = NegativeSampler {
            graph,
            used: HashSet::with_capacity(needed),
            pool: None,
            rng,
        };
        // rejection stays cheap while at least half the pairs are available
        if needed > 0 && (non_edges - needed) * 2 < max_pairs(n) {
            let mut pool: Vec<Pair> = (0..n as NodeId)
                .flat_map(|i| (i + 1..n as NodeId).map(move |j| (i, j)))
                .filter(|&(i, j)| !graph.contains(i, j))
                .collect();
            pool.shuffle(&mut sampler.rng);
            pool.reverse();
            sampler.pool = Some(pool);
        }
        Ok(sampler)
    }

    fn draw(&mut self) -> Pair {
        if let Some(pool) = &mut self.pool {
            return pool.pop().expect("pool sized at construction");
        }
        let n = self.graph.node_count() as NodeId;
        loop {
            let i = self.rng.random_range(0..n);
            let j = self.rng.random_range(0..n);
            if i == j || self.graph.contains(i, j) {
                continue;
            }
            let pair = canonical(i, j);
            if self.used.insert(pair) {
                return pair;
            }
        }
    }

    fn take(&mut self, count: usize) -> Vec<Pair> {
        (0..count).map(|_| self.draw()).collect()
    }
}

fn sorted(mut pairs: Vec<Pair>) -> Vec<Pair> {
    pairs.sort_unstable();
    pairs
}

fn shuffled_edges(g: &Graph, rng: &mut ChaCha8Rng) -> Vec<Pair> {
    let mut edges: Vec<Pair> = g.edges().collect();
    edges.shuffle(rng);
    edges
}

/// Splits `g` into hidden test edges, validation edges and training edges,
/// each paired with an equal number of non-edges of `g`.
pub fn make_split(g: &Graph, test_frac: f64, val_frac: f64, seed: u64) -> Result<EdgeSplit> {
    if !(test_frac > 0.0 && val_frac >= 0.0 && test_frac + val_frac < 1.0) {
        return Err(Error::Range(format!(
            "split fractions test={test_frac} val={val_frac} must satisfy 0 < test, 0 <= val, test + val < 1"
        )));
    }
    let e = g.edge_count();
    let n_test = round_count(test_frac, e);
    let n_val = round_count(val_frac, e);
    if n_test + n_val > e {
        return Err(Error::Range("split fractions round to more edges than exist".into()));
    }
    let (mut perm_rng, neg_rng) = rngs(seed);
    let edges = shuffled_edges(g, &mut perm_rng);
    let mut negatives = NegativeSampler::new(g, e, neg_rng)?;

    let test_pos = edges[..n_test].to_vec();
    let val_pos = edges[n_test..n_test + n_val].to_vec();
    let train_pos = edges[n_test + n_val..].to_vec();
    let test_neg = negatives.take(test_pos.len());
    let val_neg = negatives.take(val_pos.len());
    let train_neg = negatives.take(train_pos.len());

    let train_graph = Graph::from_edges(g.node_count(), train_pos.iter().copied())?;
    Ok(EdgeSplit {
        train_pos: sorted(train_pos),
        train_neg: sorted(train_neg),
        val_pos: sorted(val_pos),
        val_neg: sorted(val_neg),
        test_pos: sorted(test_pos),
        test_neg: sorted(test_neg),
        train_graph,
        seed,
        test_frac,
        val_frac,
    })
}

/// `count` distinct non-edges of `g` drawn uniformly at random.
pub fn sample_non_edges(g: &Graph, count: usize, seed: u64) -> Result<Vec<Pair>> {
    let (_, neg_rng) = rngs(seed);
    Ok(sorted(NegativeSampler::new(g, count, neg_rng)?.take(count)))
}

/// Training-set-size sweep: one split per fraction sharing a fixed test set.
///
/// Training edges for fraction `t` are the first `round(t * |E|)` edges of a
/// single permutation of the non-test edges, so training sets are nested.
/// Validation sets are empty. With a fraction that covers every non-test edge
/// the result equals `make_split(g, test_frac, 0.0, seed)`.
pub fn sweep_fractions(
    g: &Graph,
    test_frac: f64,
    train_fracs: &[f64],
    seed: u64,
) -> Result<Vec<EdgeSplit>> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::Range(format!("test fraction {test_frac} must lie in (0, 1)")));
    }
    let e = g.edge_count();
    let n_test = round_count(test_frac, e);
    let mut sizes = Vec::with_capacity(train_fracs.len());
    for &t in train_fracs {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Range(format!("train fraction {t} must lie in (0, 1)")));
        }
        let size = round_count(t, e);
        if size + n_test > e {
            return Err(Error::Range(format!(
                "train fraction {t} needs {size} edges but only {} non-test edges exist",
                e - n_test
            )));
        }
        sizes.push(size);
    }
    let max_train = sizes.iter().copied().max().unwrap_or(0);

    let (mut perm_rng, neg_rng) = rngs(seed);
    let edges = shuffled_edges(g, &mut perm_rng);
    let mut negatives = NegativeSampler::new(g, n_test + max_train, neg_rng)?;
    let test_pos = sorted(edges[..n_test].to_vec());
    let test_neg = sorted(negatives.take(n_test));
    let train_neg_all = negatives.take(max_train);
    let rest = &edges[n_test..];

    sizes
        .iter()
        .zip(train_fracs)
        .map(|(&size, _)| {
            let train_pos = rest[..size].to_vec();
            let train_graph = Graph::from_edges(g.node_count(), train_pos.iter().copied())?;
            Ok(EdgeSplit {
                train_pos: sorted(train_pos),
                train_neg: sorted(train_neg_all[..size].to_vec()),
                val_pos: Vec::new(),
                val_neg: Vec::new(),
                test_pos: test_pos.clone(),
                test_neg: test_neg.clone(),
                train_graph,
                seed,
                test_frac,
                val_frac: 0.0,
            })
        })
        .collect()
}

pub const SPLIT_FILES: [&str; 6] = [
    "train_pos.tsv",
    "train_neg.tsv",
    "val_pos.tsv",
    "val_neg.tsv",
    "test_pos.tsv",
    "test_neg.tsv",
];

impl EdgeSplit {
    fn sets(&self) -> [&Vec<Pair>; 6] {
        [
            &self.train_pos,
            &self.train_neg,
            &self.val_pos,
            &self.val_neg,
            &self.test_pos,
            &self.test_neg,
        ]
    }

    pub fn meta(&self) -> SplitMeta {
        SplitMeta {
            seed: self.seed,
            test_frac: self.test_frac,
            val_frac: self.val_frac,
            node_count: self.train_graph.node_count(),
            train: self.train_pos.len(),
            val: self.val_pos.len(),
            test: self.test_pos.len(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, set) in SPLIT_FILES.iter().zip(self.sets()) {
            graph::save_edge_list(dir.join(name), set.iter().copied())?;
        }
        let path = dir.join("split.json");
        let json = serde_json::to_string_pretty(&self.meta()).expect("meta serializes");
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("split.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: SplitMeta =
            serde_json::from_str(&text).map_err(|e| Error::format(&path, e.line(), e.to_string()))?;
        let mut sets = Vec::with_capacity(6);
        for name in SPLIT_FILES {
            let pairs = graph::read_edge_list(dir.join(name))?;
            sets.push(pairs.into_iter().map(|(i, j)| canonical(i, j)).collect::<Vec<_>>());
        }
        let [train_pos, train_neg, val_pos, val_neg, test_pos, test_neg]: [Vec<Pair>; 6] =
            sets.try_into().expect("six sets");
        let train_graph = Graph::from_edges(meta.node_count, train_pos.iter().copied())?;
        Ok(EdgeSplit {
            train_pos,
            train_neg,
            val_pos,
            val_neg,
            test_pos,
            test_neg,
            train_graph,
            seed: meta.seed,
            test_frac: meta.test_frac,
            val_frac: meta.val_frac,
        })
    }
}
