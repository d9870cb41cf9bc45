//! node2vec: biased random walks fed to a skip-gram model.

mod skipgram;
mod walk;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub use skipgram::{
    log_sigmoid, sgns_gradient, sgns_objective, sigmoid, train_skipgram, train_skipgram_with_report,
    EmbeddingTable, SgnsGradient, TrainConfig, TrainReport,
};
pub use walk::{generate_walks, transition_weights, WalkConfig};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Walks over `g` followed by skip-gram training.
pub fn embed(g: &Graph, walk: &WalkConfig, train: &TrainConfig) -> Result<EmbeddingTable> {
    let walks = generate_walks(g, walk)?;
    train_skipgram(&walks, train, g.node_count())
}

/// Writes `N d` followed by `node v1 .. vd`, values with 9 significant digits.
pub fn write_embedding<W: Write>(mut out: W, table: &EmbeddingTable) -> std::io::Result<()> {
    writeln!(out, "{} {}", table.node_count(), table.dimensions())?;
    for node in 0..table.node_count() {
        write!(out, "{node}")?;
        for v in table.row(node as u32) {
            write!(out, " {v:.8e}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn save_embedding(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_embedding(BufWriter::new(file), table).map_err(|e| Error::io(path, e))
}

pub fn parse_embedding<R: BufRead>(reader: R, origin: &Path) -> Result<EmbeddingTable> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, Ok(l))) if l.trim().is_empty() => continue,
            Some((_, Ok(l))) => break l,
            Some((_, Err(e))) => return Err(Error::io(origin, e)),
            None => return Err(Error::format(origin, 1, "missing \"N d\" header")),
        }
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(origin, 1, "header must be \"N d\""))?;
    let [n, d] = dims[..] else {
        return Err(Error::format(origin, 1, "header must be \"N d\""));
    };
    let mut vectors = vec![0.0f32; n * d];
    let mut seen = vec![false; n];
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let mut fields = line.split_whitespace();
        let Some(node) = fields.next() else { continue };
        let node: usize = node
            .parse()
            .ok()
            .filter(|&v| v < n)
            .ok_or_else(|| Error::format(origin, line_no, format!("invalid node id {node:?}")))?;
        if std::mem::replace(&mut seen[node], true) {
            return Err(Error::format(origin, line_no, format!("node {node} repeated")));
        }
        let row = &mut vectors[node * d..(node + 1) * d];
        let mut count = 0;
        for (slot, tok) in row.iter_mut().zip(fields.by_ref()) {
            *slot = tok
                .parse()
                .map_err(|_| Error::format(origin, line_no, format!("invalid value {tok:?}")))?;
            count += 1;
        }
        if count != d || fields.next().is_some() {
            return Err(Error::format(origin, line_no, format!("expected {d} values")));
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::format(origin, 0, format!("no vector for node {missing}")));
    }
    EmbeddingTable::from_vectors(n, d, vectors)
}

pub fn load_embedding(path: &Path) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embedding(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_graph_embeds_to_initialization() {
        let g = Graph::empty(5);
        let train = TrainConfig { dimensions: 6, seed: 2, ..Default::default() };
        let table = embed(&g, &WalkConfig::default(), &train).unwrap();
        assert_eq!(table, EmbeddingTable::initialize(5, 6, 2));
    }

    #[test]
    fn equal_seeds_give_identical_tables() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]).unwrap();
        let walk = WalkConfig { walks_per_node: 3, walk_length: 10, seed: 9, ..Default::default() };
        let train = TrainConfig { dimensions: 8, seed: 9, ..Default::default() };
        assert_eq!(embed(&g, &walk, &train).unwrap(), embed(&g, &walk, &train).unwrap());
    }

    #[test]
    fn malformed_embedding_files() {
        let p = Path::new("mem");
        assert!(parse_embedding("2 2\n0 1 2\n".as_bytes(), p).is_err());
        assert!(parse_embedding("2 2\n0 1 2\n1 3\n".as_bytes(), p).is_err());
        assert!(parse_embedding("1 2\n0 1 2 3\n".as_bytes(), p).is_err());
        assert!(parse_embedding("".as_bytes(), p).is_err());
    }

    proptest! {
        #[test]
        fn text_format_round_trips(values in prop::collection::vec(-1e6f32..1e6f32, 12)) {
            let table = EmbeddingTable::from_vectors(4, 3, values).unwrap();
            let mut buf = Vec::new();
            write_embedding(&mut buf, &table).unwrap();
            let back = parse_embedding(buf.as_slice(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, table);
        }
    }
}
