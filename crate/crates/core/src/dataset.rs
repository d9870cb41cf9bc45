//! Loaders for attributed citation networks and the canonical on-disk bundle.
//!
//! Two raw layouts are understood: the `.content` / `.cites` pair used by
//! Cora and CiteSeer, and the PubMed-Diabetes tab files with sparse
//! `word=value` attributes. Either one is converted into a [`Dataset`] whose
//! node ids are assigned in order of first appearance in the node file.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, Graph, NodeId, Pair};

/// Sparse nonnegative node-attribute matrix in row-compressed form.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    node_count: usize,
    feature_count: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from per-node sparse rows. Each row must have strictly
    /// increasing feature indices below `feature_count` and positive values.
    pub fn from_rows(feature_count: usize, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        let node_count = rows.len();
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (node, row) in rows.into_iter().enumerate() {
            let mut last: Option<u32> = None;
            for (idx, value) in row {
                if idx as usize >= feature_count {
                    return Err(Error::Range(format!(
                        "node {node}: feature index {idx} >= feature count {feature_count}"
                    )));
                }
                if last.is_some_and(|l| l >= idx) {
                    return Err(Error::Range(format!(
                        "node {node}: feature indices must be strictly increasing"
                    )));
                }
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::Range(format!(
                        "node {node}: feature {idx} has non-positive or non-finite value {value}"
                    )));
                }
                last = Some(idx);
                indices.push(idx);
                values.push(value);
            }
            offsets.push(indices.len());
        }
        Ok(FeatureMatrix {
            node_count,
            feature_count,
            offsets,
            indices,
            values,
        })
    }

    /// Builds from a dense row-major matrix, keeping positive entries.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let feature_count = rows.first().map_or(0, Vec::len);
        let mut sparse = Vec::with_capacity(rows.len());
        for (node, row) in rows.iter().enumerate() {
            if row.len() != feature_count {
                return Err(Error::Range(format!(
                    "row {node} has {} columns, expected {feature_count}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::Range(format!("row {node} has a negative entry")));
            }
            sparse.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(m, &v)| (m as u32, v))
                    .collect(),
            );
        }
        Self::from_rows(feature_count, sparse)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Feature indices and values of one node's row.
    pub fn row(&self, node: NodeId) -> (&[u32], &[f64]) {
        let n = node as usize;
        let range = self.offsets[n]..self.offsets[n + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[u32], &[f64])> + '_ {
        (0..self.node_count as NodeId).map(move |i| self.row(i))
    }

    /// Copy with every value multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

/// Counts of raw records that were dropped or merged while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    pub duplicate_edges: usize,
    pub dangling_citations: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    /// External id of each dense node id.
    pub external_ids: Vec<String>,
    /// Class label per node, parsed for round-tripping only.
    pub labels: Vec<Option<String>>,
    pub report: LoadReport,
}

impl Dataset {
    pub fn id_map(&self) -> HashMap<&str, NodeId> {
        self.external_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as NodeId))
            .collect()
    }

    pub fn meta(&self) -> Meta {
        Meta {
            name: self.name.clone(),
            node_count: self.graph.node_count(),
            feature_count: self.features.feature_count(),
            edge_count: self.graph.edge_count(),
            feature_nnz: self.features.nnz(),
            report: self.report,
        }
    }
}

/// Contents of a bundle's `meta.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub node_count: usize,
    pub feature_count: usize,
    pub edge_count: usize,
    pub feature_nnz: usize,
    #[serde(flatten)]
    pub report: LoadReport,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

/// Interns external ids in order of first appearance.
#[derive(Default)]
struct IdInterner {
    ids: Vec<String>,
    lookup: HashMap<String, NodeId>,
}

impl IdInterner {
    fn insert_new(&mut self, id: &str) -> Option<NodeId> {
        if self.lookup.contains_key(id) {
            return None;
        }
        let dense = self.ids.len() as NodeId;
        self.ids.push(id.to_string());
        self.lookup.insert(id.to_string(), dense);
        Some(dense)
    }

    fn get(&self, id: &str) -> Option<NodeId> {
        self.lookup.get(id).copied()
    }
}

fn assemble(
    name: String,
    ids: IdInterner,
    labels: Vec<Option<String>>,
    feature_count: usize,
    rows: Vec<Vec<(u32, f64)>>,
    edges: Vec<Pair>,
    dangling: usize,
) -> Result<Dataset> {
    let n = ids.ids.len();
    let (graph, build) = Graph::from_edges_with_report(n, edges)?;
    if dangling > 0 {
        log::warn!("{name}: dropped {dangling} citation(s) referencing unknown ids");
    }
    if build.duplicates > 0 {
        log::info!("{name}: merged {} duplicate edge(s)", build.duplicates);
    }
    Ok(Dataset {
        name,
        graph,
        features: FeatureMatrix::from_rows(feature_count, rows)?,
        external_ids: ids.ids,
        labels,
        report: LoadReport {
            self_loops_dropped: build.self_loops,
            duplicate_edges: build.duplicates,
            dangling_citations: dangling,
        },
    })
}

/// Loads the Cora/CiteSeer layout: `.content` lines are
/// `<id> <M binary values> <label>`, `.cites` lines are `<cited> <citing>`.
pub fn load_content_cites(content_path: &Path, cites_path: &Path) -> Result<Dataset> {
    let mut ids = IdInterner::default();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;

    for (idx, line) in open(content_path)?.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(content_path, e))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 2 {
            return Err(Error::format(content_path, line_no, "expected an id and a label"));
        }
        let m = tokens.len() - 2;
        match width {
            None => width = Some(m),
            Some(w) if w != m => {
                return Err(Error::format(
                    content_path,
                    line_no,
                    format!("found {m} feature columns, previous lines had {w}"),
                ))
            }
            _ => {}
        }
        if ids.insert_new(tokens[0]).is_none() {
            return Err(Error::format(
                content_path,
                line_no,
                format!("duplicate node id {:?}", tokens[0]),
            ));
        }
        let mut row = Vec::new();
        for (m, tok) in tokens[1..tokens.len() - 1].iter().enumerate() {
            let value: f64 = tok.parse().map_err(|_| {
                Error::format(content_path, line_no, format!("invalid feature value {tok:?}"))
            })?;
            if value < 0.0 || !value.is_finite() {
                return Err(Error::format(
                    content_path,
                    line_no,
                    format!("feature value {tok:?} must be nonnegative"),
                ));
            }
            if value > 0.0 {
                row.push((m as u32, value));
            }
        }
        rows.push(row);
        labels.push(Some(tokens[tokens.len() - 1].to_string()));
    }

    let mut edges = Vec::new();
    let mut dangling = 0;
    for (idx, line) in open(cites_path)?.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(cites_path, e))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            [cited, citing] => match (ids.get(cited), ids.get(citing)) {
                (Some(a), Some(b)) => edges.push((a, b)),
                _ => dangling += 1,
            },
            _ => {
                return Err(Error::format(
                    cites_path,
                    line_no,
                    "expected \"<cited-id> <citing-id>\"",
                ))
            }
        }
    }

    assemble(
        stem(content_path),
        ids,
        labels,
        width.unwrap_or(0),
        rows,
        edges,
        dangling,
    )
}

/// Loads the PubMed-Diabetes tab layout.
///
/// The node file starts with a `NODE` line and a schema line listing
/// `numeric:<word>:<default>` columns; each data line is
/// `<id> label=<k> <word>=<value> ... summary=...`. Words not named in the
/// schema are appended to the vocabulary in order of first appearance. The
/// edge file has two header lines followed by
/// `<edge-id> paper:<a> | paper:<b>`.
pub fn load_pubmed(node_path: &Path, edge_path: &Path) -> Result<Dataset> {
    let mut vocab: HashMap<String, u32> = HashMap::new();
    let mut words: Vec<String> = Vec::new();
    let mut intern_word = |w: &str, vocab: &mut HashMap<String, u32>| -> u32 {
        if let Some(&i) = vocab.get(w) {
            return i;
        }
        let i = words.len() as u32;
        words.push(w.to_string());
        vocab.insert(w.to_string(), i);
        i
    };

    let mut ids = IdInterner::default();
    let mut labels = Vec::new();
    let mut rows = Vec::new();

    for (idx, line) in open(node_path)?.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(node_path, e))?;
        let fields: Vec<&str> = line.split('\t').map(str::trim).filter(|f| !f.is_empty()).collect();
        let Some(&first) = fields.first() else {
            continue;
        };
        if first == "NODE" {
            continue;
        }
        if first.starts_with("cat=") || first.starts_with("numeric:") {
            for f in &fields {
                if let Some(rest) = f.strip_prefix("numeric:") {
                    let word = rest.rsplit_once(':').map_or(rest, |(w, _)| w);
                    intern_word(word, &mut vocab);
                }
            }
            continue;
        }
        if ids.insert_new(first).is_none() {
            return Err(Error::format(
                node_path,
                line_no,
                format!("duplicate node id {first:?}"),
            ));
        }
        let mut label = None;
        let mut row: Vec<(u32, f64)> = Vec::new();
        for f in &fields[1..] {
            let Some((key, value)) = f.split_once('=') else {
                return Err(Error::format(
                    node_path,
                    line_no,
                    format!("expected key=value, found {f:?}"),
                ));
            };
            match key {
                "label" => label = Some(value.to_string()),
                "summary" => {}
                word => {
                    let v: f64 = value.parse().map_err(|_| {
                        Error::format(node_path, line_no, format!("invalid value in {f:?}"))
                    })?;
                    if v < 0.0 || !v.is_finite() {
                        return Err(Error::format(
                            node_path,
                            line_no,
                            format!("attribute {word:?} must be nonnegative"),
                        ));
                    }
                    let m = intern_word(word, &mut vocab);
                    if v > 0.0 {
                        row.push((m, v));
                    }
                }
            }
        }
        row.sort_unstable_by_key(|&(m, _)| m);
        if row.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::format(node_path, line_no, "attribute repeated on one line"));
        }
        rows.push(row);
        labels.push(label);
    }
    let feature_count = words.len();

    let mut edges = Vec::new();
    let mut dangling = 0;
    for (idx, line) in open(edge_path)?.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(edge_path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let endpoints: Vec<&str> = fields
            .iter()
            .filter_map(|f| f.strip_prefix("paper:"))
            .collect();
        match endpoints.as_slice() {
            [] => continue, // header lines
            [a, b] => match (ids.get(a), ids.get(b)) {
                (Some(a), Some(b)) => edges.push((a, b)),
                _ => dangling += 1,
            },
            _ => {
                return Err(Error::format(
                    edge_path,
                    line_no,
                    "expected exactly two paper:<id> endpoints",
                ))
            }
        }
    }

    assemble(
        stem(node_path),
        ids,
        labels,
        feature_count,
        rows,
        edges,
        dangling,
    )
}

pub const GRAPH_FILE: &str = "graph.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const META_FILE: &str = "meta.json";
pub const IDMAP_FILE: &str = "idmap.tsv";

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes the canonical bundle directory (created if missing).
pub fn write_bundle(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    graph::save_edge_list(dir.join(GRAPH_FILE), ds.graph.edges())?;
    write_file(&dir.join(FEATURES_FILE), |w| {
        for (node, (idx, val)) in ds.features.rows().enumerate() {
            write!(w, "{node}\t")?;
            for (k, (m, v)) in idx.iter().zip(val).enumerate() {
                if k > 0 {
                    write!(w, ",")?;
                }
                write!(w, "{m}:{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    write_file(&dir.join(IDMAP_FILE), |w| {
        for (node, ext) in ds.external_ids.iter().enumerate() {
            let label = ds.labels.get(node).cloned().flatten().unwrap_or_default();
            writeln!(w, "{ext}\t{node}\t{label}")?;
        }
        Ok(())
    })?;
    let meta = serde_json::to_string_pretty(&ds.meta()).expect("meta serializes");
    write_file(&dir.join(META_FILE), |w| writeln!(w, "{meta}"))
}

pub fn read_meta(dir: &Path) -> Result<Meta> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(&path, e.line(), e.to_string()))
}

pub fn read_features(path: &Path, node_count: usize, feature_count: usize) -> Result<FeatureMatrix> {
    let mut rows = vec![Vec::new(); node_count];
    let mut seen = vec![false; node_count];
    for (idx, line) in open(path)?.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (node, entries) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        let node: usize = node
            .trim()
            .parse()
            .map_err(|_| Error::format(path, line_no, format!("invalid node id {node:?}")))?;
        if node >= node_count || seen[node] {
            return Err(Error::format(
                path,
                line_no,
                format!("node id {node} out of range or repeated"),
            ));
        }
        seen[node] = true;
        let mut row = Vec::new();
        for entry in entries.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let parsed = entry
                .split_once(':')
                .and_then(|(m, v)| Some((m.parse::<u32>().ok()?, v.parse::<f64>().ok()?)));
            let Some(pair) = parsed else {
                return Err(Error::format(path, line_no, format!("invalid entry {entry:?}")));
            };
            row.push(pair);
        }
        rows[node] = row;
    }
    FeatureMatrix::from_rows(feature_count, rows).map_err(|e| Error::format(path, 0, e.to_string()))
}

/// Reads a bundle written by [`write_bundle`].
pub fn read_bundle(dir: &Path) -> Result<Dataset> {
    let meta = read_meta(dir)?;
    let edges = graph::read_edge_list(dir.join(GRAPH_FILE))?;
    let graph = Graph::from_edges(meta.node_count, edges)?;
    let features = read_features(&dir.join(FEATURES_FILE), meta.node_count, meta.feature_count)?;

    let idmap_path = dir.join(IDMAP_FILE);
    let mut external_ids = vec![String::new(); meta.node_count];
    let mut labels = vec![None; meta.node_count];
    for (idx, line) in open(&idmap_path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&idmap_path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let ext = fields.next().unwrap_or_default();
        let dense = fields
            .next()
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&d| d < meta.node_count)
            .ok_or_else(|| Error::format(&idmap_path, idx + 1, "invalid dense id"))?;
        external_ids[dense] = ext.to_string();
        labels[dense] = fields.next().filter(|l| !l.is_empty()).map(str::to_string);
    }

    Ok(Dataset {
        name: meta.name,
        graph,
        features,
        external_ids,
        labels,
        report: meta.report,
    })
}
