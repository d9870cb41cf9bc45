//! C ABI over the agee toolkit.
//!
//! Objects are opaque handles created by `*_new`/builder functions and
//! released with the matching `*_free`. Fallible calls return an
//! [`AgeeStatus`]; on failure a message describing the error is available
//! from [`agee_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use agee::dataset::FeatureMatrix;
use agee::embedder::{self, EmbeddingTable, TrainConfig, WalkConfig};
use agee::feature_graph;
use agee::graph::Graph;
use agee::{eval, link_model, seeds, Error};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidGraph = 2,
    InvalidNode = 3,
    Io = 4,
    Format = 5,
    DegenerateInput = 6,
    InsufficientSupport = 7,
    Range = 8,
    Sampling = 9,
    TrainingDiverged = 10,
    Fit = 11,
    DimensionMismatch = 12,
    Alignment = 13,
    UndefinedMetric = 14,
    Config = 15,
    BufferTooSmall = 16,
    Panic = 99,
}

impl From<&Error> for AgeeStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidGraph(_) => AgeeStatus::InvalidGraph,
            Error::InvalidNode { .. } => AgeeStatus::InvalidNode,
            Error::Io { .. } => AgeeStatus::Io,
            Error::Format { .. } => AgeeStatus::Format,
            Error::DegenerateInput(_) => AgeeStatus::DegenerateInput,
            Error::InsufficientSupport { .. } => AgeeStatus::InsufficientSupport,
            Error::Range(_) => AgeeStatus::Range,
            Error::Sampling(_) => AgeeStatus::Sampling,
            Error::TrainingDiverged(_) => AgeeStatus::TrainingDiverged,
            Error::Fit(_) => AgeeStatus::Fit,
            Error::DimensionMismatch { .. } => AgeeStatus::DimensionMismatch,
            Error::Alignment(_) => AgeeStatus::Alignment,
            Error::UndefinedMetric(_) => AgeeStatus::UndefinedMetric,
            Error::Config(_) => AgeeStatus::Config,
            Error::Repetition { source, .. } => AgeeStatus::from(source.as_ref()),
        }
    }
}

/// Undirected simple graph.
pub struct AgeeGraph {
    inner: Graph,
}

/// Nonnegative node feature matrix.
pub struct AgeeFeatures {
    inner: FeatureMatrix,
}

/// Node embedding table.
pub struct AgeeEmbedding {
    inner: EmbeddingTable,
}

/// Walk and skip-gram settings for [`agee_embed`]. Fill with
/// [`agee_embed_options_default`] before overriding fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AgeeEmbedOptions {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub p: f64,
    pub q: f64,
    pub dimensions: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: AgeeStatus, message: impl Into<String>) -> AgeeStatus {
    set_last_error(message.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), AgeeStatus>) -> AgeeStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AgeeStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(AgeeStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn check(e: Error) -> AgeeStatus {
    let status = AgeeStatus::from(&e);
    fail(status, e.to_string())
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), AgeeStatus> {
    if p.is_null() {
        Err(fail(AgeeStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Slice from a pointer that may be null when `len` is 0.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], AgeeStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], AgeeStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn agee_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn agee_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph from `edge_count` pairs stored as `2 * edge_count`
/// consecutive node ids. Self-loops and duplicates are dropped.
///
/// # Safety
/// `edges` must point to `2 * edge_count` readable ids (or be null when
/// `edge_count` is 0) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agee_graph_new(
    node_count: usize,
    edges: *const u32,
    edge_count: usize,
    out: *mut *mut AgeeGraph,
) -> AgeeStatus {
    guard(|| {
        non_null(out, "out")?;
        let flat = slice(edges, edge_count * 2, "edges")?;
        let pairs = flat.chunks_exact(2).map(|c| (c[0], c[1]));
        let inner = Graph::from_edges(node_count, pairs).map_err(check)?;
        write_out(out, AgeeGraph { inner });
        Ok(())
    })
}

/// # Safety
/// `graph` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn agee_graph_free(graph: *mut AgeeGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn agee_graph_node_count(graph: *const AgeeGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.node_count())
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn agee_graph_edge_count(graph: *const AgeeGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// Edge count over the number of node pairs.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn agee_graph_density(graph: *const AgeeGraph, out: *mut f64) -> AgeeStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        *out = (*graph).inner.density().map_err(check)?;
        Ok(())
    })
}

/// Copies the edges, smaller id first and in ascending order, into `out` as
/// `2 * edge_count` ids. `capacity` counts ids, not pairs.
///
/// # Safety
/// `graph` must be a live handle and `out` must hold `capacity` ids.
#[no_mangle]
pub unsafe extern "C" fn agee_graph_edges(graph: *const AgeeGraph, out: *mut u32, capacity: usize) -> AgeeStatus {
    guard(|| {
        non_null(graph, "graph")?;
        let g = &(*graph).inner;
        let needed = g.edge_count() * 2;
        if capacity < needed {
            return Err(fail(AgeeStatus::BufferTooSmall, format!("need {needed} ids, got {capacity}")));
        }
        let buf = slice_mut(out, needed, "out")?;
        for (slot, (i, j)) in buf.chunks_exact_mut(2).zip(g.edges()) {
            slot[0] = i;
            slot[1] = j;
        }
        Ok(())
    })
}

/// Feature matrix from a row-major dense array of `rows * cols` values.
///
/// # Safety
/// `values` must point to `rows * cols` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn agee_features_new_dense(
    values: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut AgeeFeatures,
) -> AgeeStatus {
    guard(|| {
        non_null(out, "out")?;
        let flat = slice(values, rows * cols, "values")?;
        let dense: Vec<Vec<f64>> = if cols == 0 {
            vec![Vec::new(); rows]
        } else {
            flat.chunks_exact(cols).map(<[f64]>::to_vec).collect()
        };
        let inner = FeatureMatrix::from_dense(&dense).map_err(check)?;
        write_out(out, AgeeFeatures { inner });
        Ok(())
    })
}

/// Feature matrix in compressed sparse row form: row `r` holds
/// `indices[indptr[r]..indptr[r + 1]]` with matching `values`.
///
/// # Safety
/// `indptr` must hold `rows + 1` entries; `indices` and `values` must hold
/// `indptr[rows]` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agee_features_new_csr(
    rows: usize,
    cols: usize,
    indptr: *const usize,
    indices: *const u32,
    values: *const f64,
    out: *mut *mut AgeeFeatures,
) -> AgeeStatus {
    guard(|| {
        non_null(out, "out")?;
        let indptr = slice(indptr, rows + 1, "indptr")?;
        let nnz = indptr[rows];
        if indptr.windows(2).any(|w| w[0] > w[1]) || indptr[0] != 0 {
            return Err(fail(AgeeStatus::Format, "indptr must start at 0 and be nondecreasing"));
        }
        let indices = slice(indices, nnz, "indices")?;
        let values = slice(values, nnz, "values")?;
        let data = indptr
            .windows(2)
            .map(|w| indices[w[0]..w[1]].iter().copied().zip(values[w[0]..w[1]].iter().copied()).collect())
            .collect();
        let inner = FeatureMatrix::from_rows(cols, data).map_err(check)?;
        write_out(out, AgeeFeatures { inner });
        Ok(())
    })
}

/// # Safety
/// `features` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn agee_features_free(features: *mut AgeeFeatures) {
    if !features.is_null() {
        drop(Box::from_raw(features));
    }
}

/// Feature graph holding the `k` most similar node pairs under
/// self-information weighting. `threshold` may be null; otherwise it
/// receives the weight of the weakest selected pair.
///
/// # Safety
/// `features` must be a live handle, `out` writable, `threshold` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn agee_feature_graph_build(
    features: *const AgeeFeatures,
    k: usize,
    out: *mut *mut AgeeGraph,
    threshold: *mut f64,
) -> AgeeStatus {
    guard(|| {
        non_null(features, "features")?;
        non_null(out, "out")?;
        let fm = &(*features).inner;
        let info = feature_graph::feature_information(fm).map_err(check)?;
        let fg = feature_graph::build_feature_graph(fm, &info, k).map_err(check)?;
        if !threshold.is_null() {
            *threshold = fg.summary.threshold;
        }
        write_out(out, AgeeGraph { inner: fg.graph });
        Ok(())
    })
}

/// Fills `options` with the library defaults.
///
/// # Safety
/// `options` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agee_embed_options_default(options: *mut AgeeEmbedOptions) -> AgeeStatus {
    guard(|| {
        non_null(options, "options")?;
        let (w, t) = (WalkConfig::default(), TrainConfig::default());
        *options = AgeeEmbedOptions {
            walks_per_node: w.walks_per_node,
            walk_length: w.walk_length,
            p: w.p,
            q: w.q,
            dimensions: t.dimensions,
            window: t.window,
            negatives: t.negatives,
            epochs: t.epochs,
            initial_lr: t.initial_lr,
            final_lr: t.final_lr,
            seed: 0,
        };
        Ok(())
    })
}

/// Deterministic node2vec embedding of `graph`.
///
/// # Safety
/// `graph` must be a live handle, `options` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn agee_embed(
    graph: *const AgeeGraph,
    options: *const AgeeEmbedOptions,
    out: *mut *mut AgeeEmbedding,
) -> AgeeStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(options, "options")?;
        non_null(out, "out")?;
        let o = *options;
        let walk = WalkConfig {
            walks_per_node: o.walks_per_node,
            walk_length: o.walk_length,
            p: o.p,
            q: o.q,
            seed: seeds::derive(o.seed, "walks"),
        };
        let train = TrainConfig {
            dimensions: o.dimensions,
            window: o.window,
            negatives: o.negatives,
            epochs: o.epochs,
            initial_lr: o.initial_lr,
            final_lr: o.final_lr,
            seed: seeds::derive(o.seed, "sgd"),
            ..TrainConfig::default()
        };
        let inner = embedder::embed(&(*graph).inner, &walk, &train).map_err(check)?;
        write_out(out, AgeeEmbedding { inner });
        Ok(())
    })
}

/// # Safety
/// `embedding` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn agee_embedding_free(embedding: *mut AgeeEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}

/// # Safety
/// `embedding` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn agee_embedding_node_count(embedding: *const AgeeEmbedding) -> usize {
    embedding.as_ref().map_or(0, |e| e.inner.node_count())
}

/// # Safety
/// `embedding` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn agee_embedding_dimensions(embedding: *const AgeeEmbedding) -> usize {
    embedding.as_ref().map_or(0, |e| e.inner.dimensions())
}

/// Copies the vector of `node` into `out`, which holds `len` floats.
///
/// # Safety
/// `embedding` must be a live handle and `out` must hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn agee_embedding_row(
    embedding: *const AgeeEmbedding,
    node: u32,
    out: *mut f32,
    len: usize,
) -> AgeeStatus {
    guard(|| {
        non_null(embedding, "embedding")?;
        let table = &(*embedding).inner;
        if node as usize >= table.node_count() {
            return Err(check(Error::InvalidNode { id: node as usize, node_count: table.node_count() }));
        }
        let d = table.dimensions();
        if len < d {
            return Err(fail(AgeeStatus::BufferTooSmall, format!("need {d} floats, got {len}")));
        }
        slice_mut(out, d, "out")?.copy_from_slice(table.row(node));
        Ok(())
    })
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
///
/// # Safety
/// `positives` and `negatives` must hold the given number of doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agee_auc(
    positives: *const f64,
    positive_count: usize,
    negatives: *const f64,
    negative_count: usize,
    out: *mut f64,
) -> AgeeStatus {
    guard(|| {
        non_null(out, "out")?;
        let pos = slice(positives, positive_count, "positives")?;
        let neg = slice(negatives, negative_count, "negatives")?;
        *out = eval::auc_from_scores(pos, neg).map_err(check)?;
        Ok(())
    })
}

/// Elementwise `alpha * structure + (1 - alpha) * feature` over `len`
/// probabilities. `out` may alias either input.
///
/// # Safety
/// All three arrays must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn agee_blend(
    structure: *const f64,
    feature: *const f64,
    len: usize,
    alpha: f64,
    out: *mut f64,
) -> AgeeStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(check(Error::Range(format!("alpha {alpha} outside [0, 1]"))));
        }
        if len == 0 {
            return Ok(());
        }
        non_null(structure, "structure")?;
        non_null(feature, "feature")?;
        non_null(out, "out")?;
        for k in 0..len {
            let (ps, pf) = (*structure.add(k), *feature.add(k));
            if !(0.0..=1.0).contains(&ps) || !(0.0..=1.0).contains(&pf) {
                return Err(check(Error::Range(format!("probability at index {k} outside [0, 1]"))));
            }
            *out.add(k) = link_model::blend_probability(ps, pf, alpha);
        }
        Ok(())
    })
}
