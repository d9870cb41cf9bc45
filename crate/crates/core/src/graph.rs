//! Immutable undirected, unweighted graph in compressed adjacency form.
//!
//! Both the observed structure graph and the attribute-derived feature graph
//! use this representation. Node ids are dense integers `0..N`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = u32;

/// An unordered node pair stored with the smaller id first.
pub type Pair = (NodeId, NodeId);

#[inline]
pub fn canonical(i: NodeId, j: NodeId) -> Pair {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Counts of input edges discarded while building a [`Graph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
}

impl Graph {
    pub fn empty(node_count: usize) -> Self {
        Graph {
            node_count,
            offsets: vec![0; node_count + 1],
            neighbors: Vec::new(),
        }
    }

    /// Builds a graph, silently merging duplicate edges and dropping self-loops.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = Pair>,
    {
        Self::from_edges_with_report(node_count, edges).map(|(g, _)| g)
    }

    pub fn from_edges_with_report<I>(node_count: usize, edges: I) -> Result<(Self, BuildReport)>
    where
        I: IntoIterator<Item = Pair>,
    {
        if node_count > NodeId::MAX as usize {
            return Err(Error::InvalidGraph(format!(
                "{node_count} nodes exceeds the supported maximum"
            )));
        }
        let mut report = BuildReport::default();
        let mut pairs: Vec<Pair> = Vec::new();
        for (i, j) in edges {
            for id in [i, j] {
                if id as usize >= node_count {
                    return Err(Error::InvalidNode {
                        id: id as usize,
                        node_count,
                    });
                }
            }
            if i == j {
                report.self_loops += 1;
                continue;
            }
            pairs.push(canonical(i, j));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        report.duplicates = before - pairs.len();
        if report.self_loops > 0 {
            log::warn!("dropped {} self-loop(s)", report.self_loops);
        }

        let mut degree = vec![0usize; node_count];
        for &(i, j) in &pairs {
            degree[i as usize] += 1;
            degree[j as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..node_count].to_vec();
        let mut neighbors = vec![0; offsets[node_count]];
        // Pairs are sorted by (i, j), so each list receives its entries in
        // ascending order: first the smaller partners (as j), then the larger.
        // Filling in two passes keeps the lists sorted without a final sort.
        for &(i, j) in &pairs {
            let slot = &mut cursor[j as usize];
            neighbors[*slot] = i;
            *slot += 1;
        }
        for &(i, j) in &pairs {
            let slot = &mut cursor[i as usize];
            neighbors[*slot] = j;
            *slot += 1;
        }
        Ok((
            Graph {
                node_count,
                offsets,
                neighbors,
            },
            report,
        ))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, node: NodeId) -> usize {
        let n = node as usize;
        self.offsets[n + 1] - self.offsets[n]
    }

    /// Sorted neighbor list of `node`. Panics if `node` is out of range.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        let n = node as usize;
        &self.neighbors[self.offsets[n]..self.offsets[n + 1]]
    }

    /// Membership test without range checking; out-of-range ids are never adjacent.
    pub fn contains(&self, i: NodeId, j: NodeId) -> bool {
        if i as usize >= self.node_count || j as usize >= self.node_count || i == j {
            return false;
        }
        // search the shorter list
        let (a, b) = if self.degree(i) <= self.degree(j) {
            (i, j)
        } else {
            (j, i)
        };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> Result<bool> {
        self.check_node(i)?;
        self.check_node(j)?;
        Ok(self.contains(i, j))
    }

    pub fn check_node(&self, id: NodeId) -> Result<()> {
        if id as usize >= self.node_count {
            return Err(Error::InvalidNode {
                id: id as usize,
                node_count: self.node_count,
            });
        }
        Ok(())
    }

    /// Fraction of the `N(N-1)/2` possible pairs that are edges.
    pub fn density(&self) -> Result<f64> {
        if self.node_count < 2 {
            return Err(Error::InvalidGraph(format!(
                "density needs at least 2 nodes, graph has {}",
                self.node_count
            )));
        }
        Ok(self.edge_count() as f64 / max_pairs(self.node_count) as f64)
    }

    /// Edges as canonical pairs (`i < j`) in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        (0..self.node_count as NodeId).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }
}

/// Number of unordered pairs of distinct nodes.
pub fn max_pairs(node_count: usize) -> usize {
    node_count * node_count.saturating_sub(1) / 2
}

/// Parses the edge-list text format: one `i<TAB>j` per line, `#` comments.
pub fn parse_edge_list<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<Pair>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::format(origin, line_no, "expected two node ids"));
        };
        let parse = |s: &str| {
            s.parse::<NodeId>()
                .map_err(|_| Error::format(origin, line_no, format!("invalid node id {s:?}")))
        };
        edges.push((parse(a)?, parse(b)?));
    }
    Ok(edges)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<Pair>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path)
}

/// Writes pairs one per line. Callers pass canonical, sorted pairs to get the
/// canonical export.
pub fn write_edge_list<W: Write, I>(mut out: W, edges: I) -> std::io::Result<()>
where
    I: IntoIterator<Item = Pair>,
{
    for (i, j) in edges {
        writeln!(out, "{i}\t{j}")?;
    }
    out.flush()
}

pub fn save_edge_list<I>(path: impl AsRef<Path>, edges: I) -> Result<()>
where
    I: IntoIterator<Item = Pair>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_edge_list(BufWriter::new(file), edges).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn complete(n: u32) -> Graph {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Graph::from_edges(n as usize, edges).unwrap()
    }

    #[test]
    fn density_of_complete_and_empty() {
        assert_eq!(complete(4).density().unwrap(), 1.0);
        assert_eq!(Graph::empty(10).density().unwrap(), 0.0);
    }

    #[test]
    fn density_at_cora_scale() {
        let d: f64 = 5429.0 / (2708.0 * 2707.0 / 2.0);
        assert!((d - 0.00148).abs() < 5e-6);
    }

    #[test]
    fn density_rejects_tiny_graphs() {
        assert!(matches!(
            Graph::empty(1).density(),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn triangle_membership() {
        let g = triangle();
        assert!(g.has_edge(0, 1).unwrap());
        assert!(!g.has_edge(0, 0).unwrap());
        assert!(matches!(
            g.has_edge(0, 3),
            Err(Error::InvalidNode { id: 3, .. })
        ));
    }

    #[test]
    fn has_edge_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let edges: Vec<Pair> = (0..300)
            .map(|_| (rng.random_range(0..60), rng.random_range(0..60)))
            .collect();
        let g = Graph::from_edges(60, edges).unwrap();
        for _ in 0..1000 {
            let i = rng.random_range(0..60);
            let j = rng.random_range(0..60);
            assert_eq!(g.has_edge(i, j).unwrap(), g.has_edge(j, i).unwrap());
        }
    }

    #[test]
    fn duplicates_and_self_loops_are_dropped() {
        let (g, report) =
            Graph::from_edges_with_report(4, [(0, 1), (1, 0), (2, 2), (1, 3), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(report.self_loops, 1);
        assert_eq!(report.duplicates, 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 3)]);
    }

    #[test]
    fn isolated_nodes_have_degree_zero() {
        let g = Graph::from_edges(5, [(0, 1)]).unwrap();
        assert_eq!(g.degree(4), 0);
        assert!(g.neighbors(4).is_empty());
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# comment\n0\t1\n\n2 1\n";
        let edges = parse_edge_list(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(edges, vec![(0, 1), (2, 1)]);
        let err = parse_edge_list("0\tx\n".as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    proptest! {
        #[test]
        fn canonical_round_trip(raw in prop::collection::vec((0u32..40, 0u32..40), 0..200)) {
            let g = Graph::from_edges(40, raw.clone()).unwrap();
            let mut out = Vec::new();
            write_edge_list(&mut out, g.edges()).unwrap();
            let reread = parse_edge_list(out.as_slice(), Path::new("mem")).unwrap();
            let g2 = Graph::from_edges(40, reread.clone()).unwrap();
            prop_assert_eq!(&g, &g2);

            let mut expected: Vec<Pair> = raw.iter()
                .filter(|(i, j)| i != j)
                .map(|&(i, j)| canonical(i, j))
                .collect();
            expected.sort_unstable();
            expected.dedup();
            prop_assert_eq!(reread, expected);
        }

        #[test]
        fn degree_sum_is_twice_edge_count(raw in prop::collection::vec((0u32..30, 0u32..30), 0..150)) {
            let g = Graph::from_edges(30, raw).unwrap();
            let total: usize = (0..30).map(|i| g.degree(i)).sum();
            prop_assert_eq!(total, 2 * g.edge_count());
            for i in 0..30 {
                prop_assert_eq!(g.degree(i), g.neighbors(i).len());
                prop_assert!(g.neighbors(i).windows(2).all(|w| w[0] < w[1]));
                for &j in g.neighbors(i) {
                    prop_assert!(g.neighbors(j).contains(&i));
                }
            }
        }
    }
}
