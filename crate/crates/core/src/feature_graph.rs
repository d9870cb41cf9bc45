//! Attribute graph construction.
//!
//! Each feature is weighted by its self-information `-log2 p(m)`, where
//! `p(m)` is the share of all feature occurrences taken by feature `m`. Node
//! similarity is the dot product of information-weighted feature rows, and
//! the feature graph keeps the `k` most similar pairs so that its edge count
//! matches the structure graph.
//!
//! The full `N x N` similarity matrix is never stored. Rows are swept against
//! an inverted column index and every positive pair is offered to a bounded
//! heap of size `k`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::{max_pairs, Graph, NodeId, Pair};

/// Per-feature self-information in bits, with the occurrence counts it was
/// derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoVector {
    values: Vec<f64>,
    counts: Vec<usize>,
    total: usize,
}

impl InfoVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of nodes carrying each feature.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Sum of all feature occurrence counts.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn probability(&self, feature: usize) -> f64 {
        self.counts[feature] as f64 / self.total as f64
    }
}

pub fn feature_information(fm: &FeatureMatrix) -> Result<InfoVector> {
    let mut counts = vec![0usize; fm.feature_count()];
    for (idx, _) in fm.rows() {
        for &m in idx {
            counts[m as usize] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::DegenerateInput(
            "feature matrix has no nonzero entries".into(),
        ));
    }
    let values = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                // column is all zeros, any finite weight gives the same result
                0.0
            } else {
                -(c as f64 / total as f64).log2()
            }
        })
        .collect();
    Ok(InfoVector {
        values,
        counts,
        total,
    })
}

fn check_dims(fm: &FeatureMatrix, info: &InfoVector) -> Result<()> {
    if info.len() != fm.feature_count() {
        return Err(Error::DimensionMismatch {
            expected: fm.feature_count(),
            actual: info.len(),
        });
    }
    Ok(())
}

fn check_node(fm: &FeatureMatrix, id: NodeId) -> Result<()> {
    if id as usize >= fm.node_count() {
        return Err(Error::InvalidNode {
            id: id as usize,
            node_count: fm.node_count(),
        });
    }
    Ok(())
}

/// Information-weighted dot product of two nodes' feature rows.
pub fn similarity(fm: &FeatureMatrix, info: &InfoVector, i: NodeId, j: NodeId) -> Result<f64> {
    check_dims(fm, info)?;
    check_node(fm, i)?;
    check_node(fm, j)?;
    let info = info.values();
    let (ia, va) = fm.row(i);
    let (ib, vb) = fm.row(j);
    let (mut a, mut b) = (0, 0);
    let mut sum = 0.0;
    while a < ia.len() && b < ib.len() {
        match ia[a].cmp(&ib[b]) {
            Ordering::Less => a += 1,
            Ordering::Greater => b += 1,
            Ordering::Equal => {
                let w = info[ia[a] as usize];
                sum += (w * va[a]) * (w * vb[b]);
                a += 1;
                b += 1;
            }
        }
    }
    Ok(sum)
}

/// Dense `N x N` similarity matrix. Quadratic memory; intended for small
/// inputs and for cross-checking [`build_feature_graph`].
pub fn materialize_similarity(fm: &FeatureMatrix, info: &InfoVector) -> Result<Vec<Vec<f64>>> {
    let n = fm.node_count() as NodeId;
    (0..n)
        .map(|i| (0..n).map(|j| similarity(fm, info, i, j)).collect())
        .collect()
}

/// Feature graph together with how the density target was met.
#[derive(Debug, Clone)]
pub struct FeatureGraph {
    pub graph: Graph,
    pub summary: FeatureGraphSummary,
}

/// Sidecar record written next to an exported feature graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGraphSummary {
    /// Requested (and realized) edge count.
    pub k: usize,
    /// Weight of the weakest selected pair; every pair above it is selected.
    pub threshold: f64,
    /// Selected pairs whose weight equals the threshold.
    pub selected_at_threshold: usize,
    /// Pairs at the threshold weight left out by the lexicographic tie-break.
    pub excluded_at_threshold: usize,
    /// Off-diagonal pairs with positive similarity.
    pub positive_pairs: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    weight: f64,
    pair: Pair,
}

// Heap order: "greater" means worse, so the heap top is the weakest kept pair.
// Better = larger weight, then lexicographically smaller pair.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight
            .total_cmp(&self.weight)
            .then(self.pair.cmp(&other.pair))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

struct TopK {
    k: usize,
    heap: BinaryHeap<Candidate>,
    positive: usize,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k.min(1 << 20) + 1),
            positive: 0,
        }
    }

    #[inline]
    fn offer(&mut self, c: Candidate) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if c < *self.heap.peek().expect("non-empty") {
            self.heap.pop();
            self.heap.push(c);
        }
    }

    fn merge(mut self, other: TopK) -> TopK {
        self.positive += other.positive;
        for c in other.heap {
            self.offer(c);
        }
        self
    }
}

struct ColumnIndex {
    offsets: Vec<usize>,
    entries: Vec<(NodeId, f64)>,
}

impl ColumnIndex {
    fn new(fm: &FeatureMatrix, info: &[f64]) -> Self {
        let mut counts = vec![0usize; fm.feature_count() + 1];
        for (idx, _) in fm.rows() {
            for &m in idx {
                counts[m as usize + 1] += 1;
            }
        }
        for m in 0..fm.feature_count() {
            counts[m + 1] += counts[m];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut entries = vec![(0, 0.0); fm.nnz()];
        // rows visited in ascending order keep each column sorted by node
        for (node, (idx, val)) in fm.rows().enumerate() {
            for (&m, &v) in idx.iter().zip(val) {
                let slot = &mut cursor[m as usize];
                entries[*slot] = (node as NodeId, info[m as usize] * v);
                *slot += 1;
            }
        }
        ColumnIndex { offsets, entries }
    }

    fn column(&self, m: u32) -> &[(NodeId, f64)] {
        &self.entries[self.offsets[m as usize]..self.offsets[m as usize + 1]]
    }
}

/// Calls `visit(j, weight)` for every `j > i` sharing at least one feature
/// with `i`. Weights are accumulated in ascending feature order, which makes
/// them bit-identical to [`similarity`].
fn sweep_row(
    fm: &FeatureMatrix,
    info: &[f64],
    columns: &ColumnIndex,
    i: NodeId,
    acc: &mut [f64],
    touched: &mut Vec<NodeId>,
    mark: &mut [bool],
    mut visit: impl FnMut(NodeId, f64),
) {
    let (idx, val) = fm.row(i);
    for (&m, &v) in idx.iter().zip(val) {
        let wi = info[m as usize] * v;
        let col = columns.column(m);
        let start = col.partition_point(|&(n, _)| n <= i);
        for &(j, wj) in &col[start..] {
            let ju = j as usize;
            if !mark[ju] {
                mark[ju] = true;
                touched.push(j);
            }
            acc[ju] += wi * wj;
        }
    }
    for &j in touched.iter() {
        let ju = j as usize;
        visit(j, acc[ju]);
        acc[ju] = 0.0;
        mark[ju] = false;
    }
    touched.clear();
}

struct Scratch {
    acc: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<NodeId>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            acc: vec![0.0; n],
            mark: vec![false; n],
            touched: Vec::new(),
        }
    }
}

const ROW_BLOCK: usize = 64;

/// Keeps the `k` off-diagonal pairs with the largest similarity. Pairs tied
/// at the cut-off weight are taken in ascending `(i, j)` order. The result
/// does not depend on the size of the rayon thread pool.
pub fn build_feature_graph(
    fm: &FeatureMatrix,
    info: &InfoVector,
    k: usize,
) -> Result<FeatureGraph> {
    check_dims(fm, info)?;
    let n = fm.node_count();
    let limit = max_pairs(n);
    if k > limit {
        return Err(Error::Range(format!(
            "requested {k} edges but {n} nodes admit only {limit} pairs"
        )));
    }
    let info_values = info.values();
    let columns = ColumnIndex::new(fm, info_values);

    let top = (0..n)
        .into_par_iter()
        .with_min_len(ROW_BLOCK)
        .fold(
            || (TopK::new(k), Scratch::new(n)),
            |(mut top, mut s), i| {
                let i = i as NodeId;
                sweep_row(
                    fm,
                    info_values,
                    &columns,
                    i,
                    &mut s.acc,
                    &mut s.touched,
                    &mut s.mark,
                    |j, weight| {
                        if weight > 0.0 {
                            top.positive += 1;
                            top.offer(Candidate {
                                weight,
                                pair: (i, j),
                            });
                        }
                    },
                );
                (top, s)
            },
        )
        .map(|(top, _)| top)
        .reduce(|| TopK::new(k), TopK::merge);

    if k > top.positive {
        return Err(Error::InsufficientSupport {
            requested: k,
            available: top.positive,
        });
    }

    let mut selected: Vec<Candidate> = top.heap.into_vec();
    selected.sort_unstable();
    let threshold = selected.last().map_or(f64::INFINITY, |c| c.weight);
    let selected_at_threshold = selected.iter().filter(|c| c.weight == threshold).count();

    // second pass: count threshold ties that lost the lexicographic tie-break
    let tied_total = if k == 0 {
        0
    } else {
        (0..n)
            .into_par_iter()
            .with_min_len(ROW_BLOCK)
            .fold(
                || (0usize, Scratch::new(n)),
                |(mut count, mut s), i| {
                    sweep_row(
                        fm,
                        info_values,
                        &columns,
                        i as NodeId,
                        &mut s.acc,
                        &mut s.touched,
                        &mut s.mark,
                        |_, w| count += usize::from(w == threshold),
                    );
                    (count, s)
                },
            )
            .map(|(c, _)| c)
            .sum()
    };

    let graph = Graph::from_edges(n, selected.iter().map(|c| c.pair))?;
    debug_assert_eq!(graph.edge_count(), k);
    let summary = FeatureGraphSummary {
        k,
        threshold: if k == 0 { 0.0 } else { threshold },
        selected_at_threshold,
        excluded_at_threshold: tied_total - selected_at_threshold,
        positive_pairs: top.positive,
    };
    Ok(FeatureGraph { graph, summary })
}

/// One row of the information-vs-frequency diagnostic table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub feature: usize,
    pub count: usize,
    pub probability: f64,
    pub bits: f64,
}

/// Per-feature `(count, probability, bits)` for every feature that occurs,
/// sorted by count descending (feature index breaks ties).
pub fn information_histogram(info: &InfoVector) -> Vec<HistogramRow> {
    let mut rows: Vec<HistogramRow> = (0..info.len())
        .filter(|&m| info.counts[m] > 0)
        .map(|m| HistogramRow {
            feature: m,
            count: info.counts[m],
            probability: info.probability(m),
            bits: info.values[m],
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.feature.cmp(&b.feature)));
    rows
}

pub fn write_histogram_csv<W: Write>(mut out: W, rows: &[HistogramRow]) -> std::io::Result<()> {
    writeln!(out, "count,probability,bits")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.count, r.probability, r.bits)?;
    }
    out.flush()
}

pub fn save_feature_graph(dir: &Path, fg: &FeatureGraph) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::graph::save_edge_list(dir.join("feature_graph.tsv"), fg.graph.edges())?;
    let path = dir.join("feature_graph.json");
    let json = serde_json::to_string_pretty(&fg.summary).expect("summary serializes");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> FeatureMatrix {
        FeatureMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn toy_information() {
        // c = (2, 1), T = 3: -log2(2/3) and -log2(1/3), computed independently
        let info = feature_information(&toy()).unwrap();
        assert_eq!(info.counts(), &[2, 1]);
        assert!((info.values()[0] - 0.584_962_500_721_156_2).abs() < 1e-12);
        assert!((info.values()[1] - 1.584_962_500_721_156_2).abs() < 1e-12);
    }

    #[test]
    fn single_universal_feature_has_zero_bits() {
        let fm = FeatureMatrix::from_dense(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(feature_information(&fm).unwrap().values(), &[0.0]);
    }

    #[test]
    fn all_zero_matrix_is_degenerate() {
        let fm = FeatureMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            feature_information(&fm),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn zero_occurrence_feature_gets_zero_bits() {
        let fm = FeatureMatrix::from_dense(&[vec![1.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let info = feature_information(&fm).unwrap();
        assert_eq!(info.values()[1], 0.0);
    }

    #[test]
    fn toy_similarity() {
        let fm = toy();
        let info = feature_information(&fm).unwrap();
        let s01 = similarity(&fm, &info, 0, 1).unwrap();
        assert!((s01 - 0.584_962_500_721_156_2f64.powi(2)).abs() < 1e-12);
        assert!((s01 - 0.34218).abs() < 1e-5);
        assert_eq!(similarity(&fm, &info, 0, 2).unwrap(), 0.0);
        assert_eq!(s01, similarity(&fm, &info, 1, 0).unwrap());
        let self00 = similarity(&fm, &info, 0, 0).unwrap();
        let norm = info.values()[0].powi(2) + info.values()[1].powi(2);
        assert!((self00 - norm).abs() < 1e-12);
        assert!(similarity(&fm, &info, 0, 3).is_err());
    }

    #[test]
    fn toy_feature_graph() {
        let fm = toy();
        let info = feature_information(&fm).unwrap();
        let fg = build_feature_graph(&fm, &info, 1).unwrap();
        assert_eq!(fg.graph.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(fg.summary.positive_pairs, 1);

        let empty = build_feature_graph(&fm, &info, 0).unwrap();
        assert_eq!(empty.graph.edge_count(), 0);
        assert_eq!(empty.graph.node_count(), 3);

        assert!(matches!(
            build_feature_graph(&fm, &info, 2),
            Err(Error::InsufficientSupport { requested: 2, available: 1 })
        ));
        assert!(matches!(
            build_feature_graph(&fm, &info, 4),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn ties_break_lexicographically() {
        // four identical rows: all six pairs tie
        let fm = FeatureMatrix::from_dense(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let info = feature_information(&fm).unwrap();
        let fg = build_feature_graph(&fm, &info, 4).unwrap();
        assert_eq!(
            fg.graph.edges().collect::<Vec<_>>(),
            vec![(0, 1), (0, 2), (0, 3), (1, 2)]
        );
        assert_eq!(fg.summary.selected_at_threshold, 4);
        assert_eq!(fg.summary.excluded_at_threshold, 2);
    }

    #[test]
    fn toy_histogram() {
        let info = feature_information(&toy()).unwrap();
        let rows = information_histogram(&info);
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].count, rows[1].count), (2, 1));
        assert!((rows[0].probability - 2.0 / 3.0).abs() < 1e-12);
        assert!((rows[0].bits - 0.585).abs() < 1e-3);
        assert!((rows[1].bits - 1.585).abs() < 1e-3);
        let mut csv = Vec::new();
        write_histogram_csv(&mut csv, &rows).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("count,probability,bits\n2,"));
    }

    #[test]
    fn uniform_frequencies_give_equal_bits() {
        let fm = FeatureMatrix::from_dense(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]])
            .unwrap();
        let info = feature_information(&fm).unwrap();
        let rows = information_histogram(&info);
        assert!(rows.iter().all(|r| r.bits == rows[0].bits));
    }
}
