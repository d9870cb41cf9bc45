//! Randomized property checks. Each returns `Err` with a description of the
//! first counterexample. They are driven both by the `properties` test
//! target and by the acceptance report.

use std::collections::HashSet;
use std::path::Path;

use agee::dataset::FeatureMatrix;
use agee::embedder::{sgns_gradient, sgns_objective};
use agee::eval::auc_from_scores;
use agee::feature_graph::{build_feature_graph, feature_information, materialize_similarity};
use agee::graph::{canonical, parse_edge_list, write_edge_list, Graph, Pair};
use agee::link_model::{blend, Channel, ScoreSet};
use agee::splitter::{make_split, round_count};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gnp, random_features};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// 3 nodes, 2 features: rows (1,1), (1,0), (0,0).
fn toy() -> FeatureMatrix {
    FeatureMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap()
}

pub fn information_toy() -> Check {
    let info = feature_information(&toy()).map_err(|e| e.to_string())?;
    // counts (2, 1) of 3 occurrences: -log2(2/3) = log2(3) - 1, -log2(1/3) = log2(3)
    let expected = [3f64.log2() - 1.0, 3f64.log2()];
    for (m, (&got, want)) in info.values().iter().zip(expected).enumerate() {
        ensure!((got - want).abs() <= 1e-9, "feature {m}: {got} vs {want}");
    }
    Ok(())
}

/// `I ∘ F` as a dense matrix, computed independently of the library.
fn weighted_dense(fm: &FeatureMatrix) -> DMatrix<f64> {
    let n = fm.node_count();
    let m = fm.feature_count();
    let mut counts = vec![0usize; m];
    for (idx, _) in fm.rows() {
        for &k in idx {
            counts[k as usize] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let bits: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { -(c as f64 / total as f64).log2() })
        .collect();
    let mut g = DMatrix::zeros(n, m);
    for (i, (idx, val)) in fm.rows().enumerate() {
        for (&k, &v) in idx.iter().zip(val) {
            g[(i, k as usize)] = bits[k as usize] * v;
        }
    }
    g
}

pub fn similarity_psd() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..25 {
        let n = rng.random_range(2..=50);
        let m = rng.random_range(3..=40);
        let fm = random_features(n, m, rng.random_range(0.05..0.4), rng.random());
        let Ok(info) = feature_information(&fm) else { continue };
        let w = materialize_similarity(&fm, &info).map_err(|e| e.to_string())?;
        let g = weighted_dense(&fm);
        let oracle = &g * g.transpose();
        for i in 0..n {
            for j in 0..n {
                ensure!(w[i][j] == w[j][i], "case {case}: W[{i}][{j}] != W[{j}][{i}]");
                let tol = 1e-9 * oracle[(i, j)].abs().max(1.0);
                ensure!(
                    (w[i][j] - oracle[(i, j)]).abs() <= tol,
                    "case {case}: W[{i}][{j}] = {} but G*G^T gives {}",
                    w[i][j],
                    oracle[(i, j)]
                );
            }
        }
        let dense = DMatrix::from_fn(n, n, |i, j| w[i][j]);
        let min = dense.symmetric_eigenvalues().min();
        ensure!(min >= -1e-9, "case {case}: eigenvalue {min}");
    }
    Ok(())
}

/// Top-`k` pairs by sorting every off-diagonal entry of the materialized matrix.
fn naive_top_k(w: &[Vec<f64>], k: usize) -> Vec<Pair> {
    let n = w.len();
    let mut all: Vec<(f64, Pair)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| w[i][j] > 0.0)
        .map(|(i, j)| (w[i][j], (i as u32, j as u32)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut top: Vec<Pair> = all.into_iter().take(k).map(|x| x.1).collect();
    top.sort_unstable();
    top
}

fn positive_pairs(w: &[Vec<f64>]) -> usize {
    let n = w.len();
    (0..n).map(|i| (i + 1..n).filter(|&j| w[i][j] > 0.0).count()).sum()
}

/// Feature matrix whose rows repeat, so many pairs share a weight.
fn duplicated_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> FeatureMatrix {
    let distinct = rng.random_range(2..=6);
    let base: Vec<Vec<(u32, f64)>> = (0..distinct)
        .map(|_| {
            let mut idx: Vec<u32> = (0..m as u32).filter(|_| rng.random::<f64>() < 0.3).collect();
            if idx.is_empty() {
                idx.push(rng.random_range(0..m as u32));
            }
            idx.into_iter().map(|k| (k, 1.0)).collect()
        })
        .collect();
    let rows = (0..n).map(|_| base[rng.random_range(0..distinct)].clone()).collect();
    FeatureMatrix::from_rows(m, rows).unwrap()
}

pub fn streaming_matches_naive() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..30 {
        let n = rng.random_range(2..=200);
        let m = rng.random_range(4..=60);
        let fm = if case % 3 == 0 {
            duplicated_rows(&mut rng, n, m)
        } else {
            random_features(n, m, rng.random_range(0.02..0.2), rng.random())
        };
        let Ok(info) = feature_information(&fm) else { continue };
        let w = materialize_similarity(&fm, &info).map_err(|e| e.to_string())?;
        let positive = positive_pairs(&w);
        for k in [0, positive / 3, positive, rng.random_range(0..=positive)] {
            let fg = build_feature_graph(&fm, &info, k).map_err(|e| format!("case {case} k={k}: {e}"))?;
            let got: Vec<Pair> = fg.graph.edges().collect();
            ensure!(got == naive_top_k(&w, k), "case {case} (n={n}) k={k}: edge sets differ");
        }
    }
    Ok(())
}

pub fn exact_edge_counts_with_ties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..20 {
        let n = rng.random_range(6..=80);
        let m = rng.random_range(4..=20);
        let fm = duplicated_rows(&mut rng, n, m);
        let info = feature_information(&fm).map_err(|e| e.to_string())?;
        let w = materialize_similarity(&fm, &info).map_err(|e| e.to_string())?;
        let positive = positive_pairs(&w);
        let mut ks: Vec<usize> = (0..12).map(|_| rng.random_range(0..=positive)).collect();
        ks.extend([0, 1.min(positive), positive]);
        for k in ks {
            let fg = build_feature_graph(&fm, &info, k).map_err(|e| format!("case {case} k={k}: {e}"))?;
            ensure!(fg.graph.edge_count() == k, "case {case}: asked {k}, got {}", fg.graph.edge_count());
            ensure!(fg.summary.k == k, "case {case}: summary k {}", fg.summary.k);
        }
        let over = build_feature_graph(&fm, &info, positive + 1);
        ensure!(over.is_err() || positive + 1 > n * (n - 1) / 2, "case {case}: k beyond support accepted");
    }
    Ok(())
}

fn brute_force_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &q in neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

pub fn auc_matches_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..1000 {
        let total = rng.random_range(2..=200);
        let np = rng.random_range(1..total);
        let levels = if case % 2 == 0 { 8 } else { 1_000_000 };
        let mut draw = || rng.random_range(0..levels) as f64 / levels as f64;
        let pos: Vec<f64> = (0..np).map(|_| draw()).collect();
        let neg: Vec<f64> = (0..total - np).map(|_| draw()).collect();
        let got = auc_from_scores(&pos, &neg).map_err(|e| e.to_string())?;
        let want = brute_force_auc(&pos, &neg);
        ensure!((got - want).abs() <= 1e-12, "case {case}: rank AUC {got}, pair count {want}");
        // strictly increasing transform
        let t = |x: &f64| (3.0 * x).exp() - 7.0;
        let moved = auc_from_scores(&pos.iter().map(t).collect::<Vec<_>>(), &neg.iter().map(t).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        ensure!((moved - got).abs() <= 1e-12, "case {case}: transform changed AUC {got} -> {moved}");
    }
    Ok(())
}

fn flatten(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> Vec<f64> {
    let mut v = center.to_vec();
    v.extend_from_slice(context);
    for n in negatives {
        v.extend_from_slice(n);
    }
    v
}

pub fn sgns_gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (d, k) = (8, 5);
    for point in 0..10 {
        let mut vec_ = || (0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let center = vec_();
        let context = vec_();
        let negatives: Vec<Vec<f64>> = (0..k).map(|_| vec_()).collect();
        let g = sgns_gradient(&center, &context, &negatives);
        let analytic = flatten(&g.center, &g.context, &g.negatives);
        let x = flatten(&center, &context, &negatives);
        let objective = |x: &[f64]| {
            let negs: Vec<Vec<f64>> = (0..k).map(|r| x[(2 + r) * d..(3 + r) * d].to_vec()).collect();
            sgns_objective(&x[..d], &x[d..2 * d], &negs)
        };
        let h = 1e-5;
        let numeric: Vec<f64> = (0..x.len())
            .map(|c| {
                let (mut up, mut down) = (x.clone(), x.clone());
                up[c] += h;
                down[c] -= h;
                (objective(&up) - objective(&down)) / (2.0 * h)
            })
            .collect();
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        ensure!(diff <= 1e-5 * scale, "point {point}: relative error {}", diff / scale);
    }
    Ok(())
}

pub fn split_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(8..=120);
        let g = gnp(n, rng.random_range(0.03..0.5), rng.random());
        if g.edge_count() < 10 {
            continue;
        }
        checked += 1;
        let test_frac = rng.random_range(0.05..0.3);
        let val_frac = rng.random_range(0.0..0.2);
        let seed = rng.random();
        let s = make_split(&g, test_frac, val_frac, seed).map_err(|e| format!("graph {checked}: {e}"))?;
        let e = g.edge_count();
        ensure!(s.test_pos.len() == round_count(test_frac, e), "graph {checked}: test size");
        ensure!(s.val_pos.len() == round_count(val_frac, e), "graph {checked}: val size");
        ensure!(
            s.train_pos.len() + s.val_pos.len() + s.test_pos.len() == e,
            "graph {checked}: positives do not partition the edges"
        );
        for (name, p, q) in [
            ("train", &s.train_pos, &s.train_neg),
            ("val", &s.val_pos, &s.val_neg),
            ("test", &s.test_pos, &s.test_neg),
        ] {
            ensure!(p.len() == q.len(), "graph {checked}: {name} has {} positives, {} negatives", p.len(), q.len());
        }
        let mut seen = HashSet::new();
        for set in [&s.train_pos, &s.train_neg, &s.val_pos, &s.val_neg, &s.test_pos, &s.test_neg] {
            for &(i, j) in set.iter() {
                ensure!(i < j, "graph {checked}: pair ({i}, {j}) not canonical");
                ensure!(seen.insert((i, j)), "graph {checked}: pair ({i}, {j}) appears twice");
            }
        }
        for &(i, j) in s.train_neg.iter().chain(&s.val_neg).chain(&s.test_neg) {
            ensure!(!g.contains(i, j), "graph {checked}: negative ({i}, {j}) is an edge");
        }
        for &(i, j) in s.train_pos.iter().chain(&s.val_pos).chain(&s.test_pos) {
            ensure!(g.contains(i, j), "graph {checked}: positive ({i}, {j}) is not an edge");
        }
        for &(i, j) in s.test_pos.iter().chain(&s.val_pos) {
            ensure!(!s.train_graph.contains(i, j), "graph {checked}: held-out ({i}, {j}) leaks into training");
        }
        let train_edges: Vec<Pair> = s.train_graph.edges().collect();
        ensure!(train_edges == s.train_pos, "graph {checked}: train graph differs from train_pos");
        ensure!(
            make_split(&g, test_frac, val_frac, seed).map_err(|e| e.to_string())? == s,
            "graph {checked}: split not reproducible"
        );
    }
    Ok(())
}

pub fn blend_boundaries() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for case in 0..200 {
        let n = rng.random_range(1..60u32);
        let mut pairs: Vec<Pair> = (0..n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
        pairs.shuffle(&mut rng);
        pairs.truncate(rng.random_range(1..=pairs.len()));
        let mut draw = || match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        };
        let s: Vec<(Pair, f64)> = pairs.iter().map(|&p| (p, draw())).collect();
        // the feature channel lists the same pairs flipped and reordered
        let mut f: Vec<(Pair, f64)> = pairs.iter().map(|&(i, j)| ((j, i), draw())).collect();
        f.reverse();
        let s = ScoreSet::new(Channel::Structure, s).map_err(|e| e.to_string())?;
        let f = ScoreSet::new(Channel::Feature, f).map_err(|e| e.to_string())?;
        let at = |a: f64| blend(&s, &f, a).map_err(|e| e.to_string());
        let (one, zero) = (at(1.0)?, at(0.0)?);
        let mid = [at(0.25)?, at(0.5)?, at(0.75)?];
        for &((i, j), ps) in s.records() {
            let pf = f.get(i, j).unwrap();
            ensure!(one.get(i, j).unwrap().to_bits() == ps.to_bits(), "case {case}: alpha=1 differs");
            ensure!(zero.get(j, i).unwrap().to_bits() == pf.to_bits(), "case {case}: alpha=0 differs");
            let path: Vec<f64> = [pf]
                .into_iter()
                .chain(mid.iter().map(|b| b.get(i, j).unwrap()))
                .chain([ps])
                .collect();
            let rising = path.windows(2).all(|w| w[1] >= w[0] - 1e-15);
            let falling = path.windows(2).all(|w| w[1] <= w[0] + 1e-15);
            ensure!(rising || falling, "case {case}: blend not monotone in alpha");
            let affine = 0.5 * pf + 0.5 * ps;
            ensure!((path[2] - affine).abs() <= 1e-15, "case {case}: alpha=0.5 not the midpoint");
        }
    }
    Ok(())
}

/// Canonical-pair helper kept alongside the checks that rely on it.
pub fn canonical_set(pairs: &[Pair]) -> HashSet<Pair> {
    pairs.iter().map(|&(i, j)| canonical(i, j)).collect()
}

pub fn graph_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for case in 0..50 {
        let n = rng.random_range(1..60u32);
        let raw: Vec<Pair> = (0..rng.random_range(0..200))
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect();
        let g = Graph::from_edges(n as usize, raw.iter().copied()).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_edge_list(&mut buf, g.edges()).map_err(|e| e.to_string())?;
        let out = parse_edge_list(buf.as_slice(), Path::new("mem")).map_err(|e| e.to_string())?;
        let mut want: Vec<Pair> = canonical_set(&raw).into_iter().filter(|&(i, j)| i != j).collect();
        want.sort_unstable();
        ensure!(out == want, "case {case}: round trip differs");
    }
    Ok(())
}

pub const ALL: &[(&str, fn() -> Check)] = &[
    ("self-information matches the toy values", information_toy),
    ("similarity matrix symmetric, equal to G*G^T, PSD (N <= 50)", similarity_psd),
    ("streaming top-k equals naive top-k (N <= 200)", streaming_matches_naive),
    ("feature graph hits the requested edge count with ties", exact_edge_counts_with_ties),
    ("AUC equals brute-force pair counting (1000 sets)", auc_matches_brute_force),
    ("skip-gram gradient matches central differences", sgns_gradient_check),
    ("split invariants on 100 random graphs", split_invariants),
    ("blend boundaries bit-exact and monotone", blend_boundaries),
    ("edge list round trip", graph_round_trip),
];
