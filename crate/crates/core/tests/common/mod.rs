//! Synthetic attributed graphs shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use agee::dataset::{Dataset, FeatureMatrix, LoadReport};
use agee::graph::Graph;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Planted {
    pub nodes: usize,
    pub communities: usize,
    /// Expected within-community degree.
    pub degree_in: f64,
    /// Expected between-community degree.
    pub degree_out: f64,
    pub features: usize,
    pub words_per_node: usize,
    /// Probability that a word is drawn from the whole vocabulary instead of
    /// the node's community topic.
    pub word_noise: f64,
    pub seed: u64,
}

impl Default for Planted {
    fn default() -> Self {
        Planted {
            nodes: 300,
            communities: 6,
            degree_in: 5.0,
            degree_out: 0.5,
            features: 240,
            words_per_node: 12,
            word_noise: 0.2,
            seed: 1,
        }
    }
}

impl Planted {
    pub fn community(&self, node: usize) -> usize {
        node % self.communities
    }

    /// Stochastic block model whose binary features are drawn from
    /// community-specific topics.
    pub fn dataset(&self) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.nodes;
        let size = n as f64 / self.communities as f64;
        let p_in = self.degree_in / (size - 1.0);
        let p_out = self.degree_out / (n as f64 - size);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if self.community(i) == self.community(j) { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    edges.push((i as u32, j as u32));
                }
            }
        }
        let topic = self.features / self.communities;
        let rows = (0..n)
            .map(|i| {
                let c = self.community(i);
                let mut words: Vec<u32> = (0..self.words_per_node)
                    .map(|_| {
                        if rng.random::<f64>() < self.word_noise {
                            rng.random_range(0..self.features as u32)
                        } else {
                            (c * topic + rng.random_range(0..topic)) as u32
                        }
                    })
                    .collect();
                words.sort_unstable();
                words.dedup();
                words.into_iter().map(|w| (w, 1.0)).collect()
            })
            .collect();
        Dataset {
            name: "planted".into(),
            graph: Graph::from_edges(n, edges).unwrap(),
            features: FeatureMatrix::from_rows(self.features, rows).unwrap(),
            external_ids: (0..n).map(|i| format!("p{i}")).collect(),
            labels: (0..n).map(|i| Some(format!("c{}", self.community(i)))).collect(),
            report: LoadReport::default(),
        }
    }
}

/// Writes `ds` in the `.content`/`.cites` layout.
pub fn write_content_cites(ds: &Dataset, dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    let mut content = String::new();
    for (i, id) in ds.external_ids.iter().enumerate() {
        let (idx, _) = ds.features.row(i as u32);
        let mut dense = vec!["0"; ds.features.feature_count()];
        for &k in idx {
            dense[k as usize] = "1";
        }
        let label = ds.labels[i].as_deref().unwrap_or("none");
        writeln!(content, "{id}\t{}\t{label}", dense.join("\t")).unwrap();
    }
    let mut cites = String::new();
    for (i, j) in ds.graph.edges() {
        writeln!(cites, "{}\t{}", ds.external_ids[i as usize], ds.external_ids[j as usize]).unwrap();
    }
    let cp = dir.join(format!("{stem}.content"));
    let ep = dir.join(format!("{stem}.cites"));
    std::fs::write(&cp, content).unwrap();
    std::fs::write(&ep, cites).unwrap();
    (cp, ep)
}

/// Random graph with `n` nodes and each pair present with probability `p`.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|i| (i + 1..n as u32).map(move |j| (i, j)))
        .filter(|_| rng.random::<f64>() < p)
        .collect();
    Graph::from_edges(n, edges).unwrap()
}

/// Sparse random nonnegative feature matrix.
pub fn random_features(n: usize, m: usize, density: f64, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = [1.0, 1.0, 1.0, 2.0, 0.5];
    let rows = (0..n)
        .map(|_| {
            let mut row = Vec::new();
            for k in 0..m as u32 {
                if rng.random::<f64>() < density {
                    row.push((k, *values.choose(&mut rng).unwrap()));
                }
            }
            row
        })
        .collect();
    FeatureMatrix::from_rows(m, rows).unwrap()
}
pub mod properties;
