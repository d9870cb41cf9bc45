mod common;

use agee::embedder::*;
use agee::graph::Graph;

/// Two 10-cliques joined by the single edge (0, 10).
fn two_cliques() -> Graph {
    let clique = |base: u32| (0..10).flat_map(move |i| (i + 1..10).map(move |j| (base + i, base + j)));
    Graph::from_edges(20, clique(0).chain(clique(10)).chain([(0, 10)])).unwrap()
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn config(seed: u64) -> (WalkConfig, TrainConfig) {
    (
        WalkConfig { walks_per_node: 20, walk_length: 30, seed, ..Default::default() },
        TrainConfig { dimensions: 16, window: 5, epochs: 2, seed, ..Default::default() },
    )
}

#[test]
fn cliques_separate_in_embedding_space() {
    let g = two_cliques();
    let (walk, train) = config(3);
    let emb = embed(&g, &walk, &train).unwrap();
    let (mut within, mut across) = (Vec::new(), Vec::new());
    for i in 0..20u32 {
        for j in i + 1..20 {
            let c = cosine(emb.row(i), emb.row(j));
            if (i < 10) == (j < 10) {
                within.push(c)
            } else {
                across.push(c)
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&within) > mean(&across) + 0.3, "within {} across {}", mean(&within), mean(&across));
}

#[test]
fn objective_rises_during_training() {
    let g = two_cliques();
    let (walk, train) = config(5);
    let walks = generate_walks(&g, &walk).unwrap();
    let train = TrainConfig { track_objective: true, ..train };
    let (_, report) = train_skipgram_with_report(&walks, &train, 20).unwrap();
    let q = report.quartile_objective.unwrap();
    assert!(q[3] >= q[0], "{q:?}");
    assert!(report.pairs > 0);
}

#[test]
fn deterministic_mode_is_reproducible() {
    let g = two_cliques();
    let (walk, train) = config(9);
    let a = embed(&g, &walk, &train).unwrap();
    assert_eq!(a, embed(&g, &walk, &train).unwrap());
    let (walk2, train2) = config(10);
    assert_ne!(a, embed(&g, &walk2, &train2).unwrap());
}

#[test]
fn parallel_training_stays_finite_and_useful() {
    let g = two_cliques();
    let (walk, train) = config(4);
    let emb = embed(&g, &walk, &TrainConfig { workers: 3, ..train }).unwrap();
    assert!(emb.vectors().iter().all(|v| v.is_finite()));
    assert!(cosine(emb.row(1), emb.row(2)) > cosine(emb.row(1), emb.row(12)));
}

#[test]
fn isolated_nodes_keep_their_initial_vectors() {
    let g = Graph::from_edges(5, [(0, 1), (1, 2)]).unwrap();
    let (walk, train) = config(2);
    let emb = embed(&g, &walk, &train).unwrap();
    let init = EmbeddingTable::initialize(5, train.dimensions, train.seed);
    assert_eq!(emb.row(3), init.row(3));
    assert_eq!(emb.row(4), init.row(4));
    assert_ne!(emb.row(1), init.row(1));
}

#[test]
fn embedding_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.txt");
    let (walk, train) = config(1);
    let emb = embed(&two_cliques(), &walk, &train).unwrap();
    save_embedding(&path, &emb).unwrap();
    let back = load_embedding(&path).unwrap();
    assert_eq!(back.vectors(), emb.vectors());
}
