//! Skip-gram with negative sampling over walk corpora.
//!
//! For a center node `c` and a context node `t` seen within `window`
//! positions of each other, one update ascends
//! `log σ(f(c)·g(t)) + Σ_n log σ(-f(c)·g(n))`, where `f` are the input
//! vectors, `g` the context vectors and the `n` are drawn from the walk
//! unigram distribution raised to the 3/4 power.

use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dimensions: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
    /// 1 trains deterministically on the calling thread. More workers update
    /// the shared tables without locks and results vary between runs.
    pub workers: usize,
    /// Record the mean objective per training quartile (costs a log per update).
    pub track_objective: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dimensions: 128,
            window: 10,
            negatives: 5,
            epochs: 1,
            initial_lr: 0.025,
            final_lr: 0.0001,
            seed: 0,
            workers: 1,
            track_objective: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimensions == 0 || self.window == 0 || self.negatives == 0 {
            return Err(Error::Config(
                "dimensions, window and negatives must be at least 1".into(),
            ));
        }
        if !(self.final_lr > 0.0 && self.initial_lr >= self.final_lr && self.initial_lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rates must satisfy initial ({}) >= final ({}) > 0",
                self.initial_lr, self.final_lr
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Learned node vectors. `vectors` holds the input side that is used for
/// scoring; `context` holds the output side and is empty for tables read
/// back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    node_count: usize,
    dimensions: usize,
    vectors: Vec<f32>,
    context: Vec<f32>,
}

impl EmbeddingTable {
    pub fn from_vectors(node_count: usize, dimensions: usize, vectors: Vec<f32>) -> Result<Self> {
        if vectors.len() != node_count * dimensions {
            return Err(Error::DimensionMismatch {
                expected: node_count * dimensions,
                actual: vectors.len(),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range("embedding contains non-finite values".into()));
        }
        Ok(EmbeddingTable {
            node_count,
            dimensions,
            vectors,
            context: Vec::new(),
        })
    }

    /// Input vectors uniform in `[-0.5/d, 0.5/d]`, context vectors zero.
    pub fn initialize(node_count: usize, dimensions: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "init"));
        let scale = 1.0 / dimensions as f32;
        let vectors = (0..node_count * dimensions)
            .map(|_| (rng.random::<f32>() - 0.5) * scale)
            .collect();
        EmbeddingTable {
            node_count,
            dimensions,
            vectors,
            context: vec![0.0; node_count * dimensions],
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn dimensions(&self) -> usize {
        self.dimensions
    }

    pub fn row(&self, node: NodeId) -> &[f32] {
        let start = node as usize * self.dimensions;
        &self.vectors[start..start + self.dimensions]
    }

    pub fn context_row(&self, node: NodeId) -> Option<&[f32]> {
        let start = node as usize * self.dimensions;
        self.context.get(start..start + self.dimensions)
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Positive (center, context) updates performed.
    pub pairs: u64,
    /// Mean per-update objective in each quarter of training, when tracked.
    pub quartile_objective: Option<[f64; 4]>,
}

/// `ln σ(x)` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling objective for one (center, context, negatives) tuple.
pub fn sgns_objective(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    log_sigmoid(dot64(center, context))
        + negatives
            .iter()
            .map(|n| log_sigmoid(-dot64(center, n)))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_objective`]. With label `y` and
/// `e = y - σ(f·g)`, the partials are `e·g` for the center and `e·f` for
/// each output vector.
pub fn sgns_gradient(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> SgnsGradient {
    let d = center.len();
    let mut grad_center = vec![0.0; d];
    let e = 1.0 - sigmoid(dot64(center, context));
    for k in 0..d {
        grad_center[k] += e * context[k];
    }
    let grad_context = center.iter().map(|c| e * c).collect();
    let grad_neg = negatives
        .iter()
        .map(|n| {
            let e = -sigmoid(dot64(center, n));
            for k in 0..d {
                grad_center[k] += e * n[k];
            }
            center.iter().map(|c| e * c).collect()
        })
        .collect();
    SgnsGradient {
        center: grad_center,
        context: grad_context,
        negatives: grad_neg,
    }
}

/// Row access used by the update kernel, implemented for plain and shared
/// (lock-free) storage.
trait RowStore {
    fn dot(&self, row: usize, v: &[f32]) -> f32;
    /// `out += a * row`
    fn gather(&self, row: usize, a: f32, out: &mut [f32]);
    /// `row += a * v`
    fn scatter(&mut self, row: usize, a: f32, v: &[f32]);
    fn copy_row(&self, row: usize, out: &mut [f32]);
}

#[inline]
fn dot32(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f32 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f32>() + tail
}

struct Plain<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl RowStore for Plain<'_> {
    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        dot32(&self.data[row * self.dim..(row + 1) * self.dim], v)
    }

    #[inline]
    fn gather(&self, row: usize, a: f32, out: &mut [f32]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        for (o, x) in out.iter_mut().zip(r) {
            *o += a * x;
        }
    }

    #[inline]
    fn scatter(&mut self, row: usize, a: f32, v: &[f32]) {
        let r = &mut self.data[row * self.dim..(row + 1) * self.dim];
        for (x, y) in r.iter_mut().zip(v) {
            *x += a * y;
        }
    }

    #[inline]
    fn copy_row(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }
}

/// Shared table for unsynchronized multi-worker training. Relaxed atomics
/// make concurrent reads and writes well defined; lost updates are accepted.
struct Shared<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl Shared<'_> {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.data[i].load(Ordering::Relaxed))
    }
}

impl RowStore for Shared<'_> {
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let base = row * self.dim;
        (0..self.dim).map(|k| self.get(base + k) * v[k]).sum()
    }

    fn gather(&self, row: usize, a: f32, out: &mut [f32]) {
        let base = row * self.dim;
        for (k, o) in out.iter_mut().enumerate() {
            *o += a * self.get(base + k);
        }
    }

    fn scatter(&mut self, row: usize, a: f32, v: &[f32]) {
        let base = row * self.dim;
        for (k, y) in v.iter().enumerate() {
            let x = self.get(base + k) + a * y;
            self.data[base + k].store(x.to_bits(), Ordering::Relaxed);
        }
    }

    fn copy_row(&self, row: usize, out: &mut [f32]) {
        let base = row * self.dim;
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.get(base + k);
        }
    }
}

struct Buffers {
    center: Vec<f32>,
    grad: Vec<f32>,
    negatives: Vec<usize>,
}

impl Buffers {
    fn new(dim: usize, negatives: usize) -> Self {
        Buffers {
            center: vec![0.0; dim],
            grad: vec![0.0; dim],
            negatives: Vec::with_capacity(negatives),
        }
    }
}

/// One gradient-ascent step on a (center, context, negatives) tuple.
/// Returns the objective before the step when `track` is set, or an error
/// if a score became non-finite.
#[inline]
fn update_pair<S: RowStore>(
    input: &mut S,
    output: &mut S,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f32,
    buf: &mut Buffers,
    track: bool,
) -> std::result::Result<f64, ()> {
    input.copy_row(center, &mut buf.center);
    buf.grad.iter_mut().for_each(|g| *g = 0.0);
    let mut objective = 0.0;
    let targets = std::iter::once((context, 1.0f32)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (target, label) in targets {
        let x = output.dot(target, &buf.center);
        if !x.is_finite() {
            return Err(());
        }
        if track {
            let signed = if label > 0.0 { x } else { -x };
            objective += log_sigmoid(signed as f64);
        }
        let g = (label - sigmoid(x as f64) as f32) * lr;
        output.gather(target, g, &mut buf.grad);
        output.scatter(target, g, &buf.center);
    }
    input.scatter(center, 1.0, &buf.grad);
    Ok(objective)
}

fn window_pairs(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|pos| {
            let lo = pos.saturating_sub(window);
            let hi = (pos + window).min(len - 1);
            (hi - lo) as u64
        })
        .sum()
}

fn noise_distribution(walks: &[Vec<NodeId>], node_count: usize) -> Result<WeightedAliasIndex<f64>> {
    let mut counts = vec![0u64; node_count];
    for w in walks {
        for &v in w {
            if v as usize >= node_count {
                return Err(Error::InvalidNode {
                    id: v as usize,
                    node_count,
                });
            }
            counts[v as usize] += 1;
        }
    }
    let weights = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    WeightedAliasIndex::new(weights).map_err(|e| Error::DegenerateInput(format!("noise distribution: {e}")))
}

struct Schedule {
    initial: f64,
    final_lr: f64,
    total: u64,
}

impl Schedule {
    #[inline]
    fn lr(&self, done: u64) -> f32 {
        let frac = done as f64 / self.total.max(1) as f64;
        (self.initial - (self.initial - self.final_lr) * frac).max(self.final_lr) as f32
    }
}

fn walk_rng(cfg: &TrainConfig, epoch: usize, walk: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seeds::mix(
        seeds::derive(cfg.seed, "negatives"),
        &[epoch as u64, walk as u64],
    ))
}

/// Trains one walk; returns (pairs done, objective sum per quartile, count per quartile).
#[allow(clippy::too_many_arguments)]
fn train_walk<S: RowStore>(
    walk: &[NodeId],
    cfg: &TrainConfig,
    noise: &WeightedAliasIndex<f64>,
    schedule: &Schedule,
    mut done: u64,
    rng: &mut ChaCha8Rng,
    input: &mut S,
    output: &mut S,
    buf: &mut Buffers,
    quartiles: &mut [(f64, u64); 4],
) -> Result<u64> {
    let start = done;
    for pos in 0..walk.len() {
        let center = walk[pos] as usize;
        let lo = pos.saturating_sub(cfg.window);
        let hi = (pos + cfg.window).min(walk.len() - 1);
        for off in lo..=hi {
            if off == pos {
                continue;
            }
            let context = walk[off] as usize;
            buf.negatives.clear();
            for _ in 0..cfg.negatives {
                let n = noise.sample(rng);
                if n != context {
                    buf.negatives.push(n);
                }
            }
            let negatives = std::mem::take(&mut buf.negatives);
            let lr = schedule.lr(done);
            let res = update_pair(input, output, center, context, &negatives, lr, buf, cfg.track_objective);
            buf.negatives = negatives;
            let objective = res.map_err(|_| {
                Error::TrainingDiverged(format!(
                    "non-finite score after {done} updates (learning rate {lr})"
                ))
            })?;
            if cfg.track_objective {
                let q = ((done * 4) / schedule.total.max(1)).min(3) as usize;
                quartiles[q].0 += objective;
                quartiles[q].1 += 1;
            }
            done += 1;
        }
    }
    Ok(done - start)
}

pub fn train_skipgram(walks: &[Vec<NodeId>], cfg: &TrainConfig, node_count: usize) -> Result<EmbeddingTable> {
    train_skipgram_with_report(walks, cfg, node_count).map(|(t, _)| t)
}

pub fn train_skipgram_with_report(
    walks: &[Vec<NodeId>],
    cfg: &TrainConfig,
    node_count: usize,
) -> Result<(EmbeddingTable, TrainReport)> {
    cfg.validate()?;
    if walks.is_empty() {
        return Err(Error::DegenerateInput("no walks to train on".into()));
    }
    let mut table = EmbeddingTable::initialize(node_count, cfg.dimensions, cfg.seed);
    let noise = noise_distribution(walks, node_count)?;
    let per_epoch: u64 = walks.iter().map(|w| window_pairs(w.len(), cfg.window)).sum();
    let schedule = Schedule {
        initial: cfg.initial_lr,
        final_lr: cfg.final_lr,
        total: per_epoch * cfg.epochs as u64,
    };
    let dim = cfg.dimensions;
    let mut quartiles = [(0.0, 0u64); 4];
    let mut done = 0u64;

    if cfg.workers == 1 {
        let mut buf = Buffers::new(dim, cfg.negatives);
        let mut input = Plain { data: &mut table.vectors, dim };
        let mut output = Plain { data: &mut table.context, dim };
        for epoch in 0..cfg.epochs {
            for (w, walk) in walks.iter().enumerate() {
                let mut rng = walk_rng(cfg, epoch, w);
                done += train_walk(
                    walk, cfg, &noise, &schedule, done, &mut rng, &mut input, &mut output, &mut buf,
                    &mut quartiles,
                )?;
            }
        }
    } else {
        let to_atomic = |v: &[f32]| v.iter().map(|x| AtomicU32::new(x.to_bits())).collect::<Vec<_>>();
        let input_data = to_atomic(&table.vectors);
        let output_data = to_atomic(&table.context);
        let progress = AtomicU64::new(0);
        let diverged = AtomicBool::new(false);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let merged = pool.install(|| {
            (0..cfg.epochs)
                .flat_map(|epoch| (0..walks.len()).map(move |w| (epoch, w)))
                .collect::<Vec<_>>()
                .into_par_iter()
                .try_fold(
                    || (Buffers::new(dim, cfg.negatives), [(0.0, 0u64); 4]),
                    |(mut buf, mut quart), (epoch, w)| {
                        if diverged.load(Ordering::Relaxed) {
                            return Err(Error::TrainingDiverged("another worker diverged".into()));
                        }
                        let mut rng = walk_rng(cfg, epoch, w);
                        let mut input = Shared { data: &input_data, dim };
                        let mut output = Shared { data: &output_data, dim };
                        let start = progress.load(Ordering::Relaxed);
                        let n = train_walk(
                            &walks[w], cfg, &noise, &schedule, start, &mut rng, &mut input,
                            &mut output, &mut buf, &mut quart,
                        )
                        .inspect_err(|_| diverged.store(true, Ordering::Relaxed))?;
                        progress.fetch_add(n, Ordering::Relaxed);
                        Ok((buf, quart))
                    },
                )
                .map(|r| r.map(|(_, q)| q))
                .try_reduce(
                    || [(0.0, 0u64); 4],
                    |mut a, b| {
                        for k in 0..4 {
                            a[k].0 += b[k].0;
                            a[k].1 += b[k].1;
                        }
                        Ok(a)
                    },
                )
        })?;
        quartiles = merged;
        done = progress.load(Ordering::Relaxed);
        let from_atomic = |v: Vec<AtomicU32>| v.into_iter().map(|a| f32::from_bits(a.into_inner())).collect();
        table.vectors = from_atomic(input_data);
        table.context = from_atomic(output_data);
    }

    if table.vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::TrainingDiverged("embedding contains non-finite values".into()));
    }
    let quartile_objective = cfg.track_objective.then(|| {
        let mut out = [0.0; 4];
        for k in 0..4 {
            out[k] = quartiles[k].0 / quartiles[k].1.max(1) as f64;
        }
        out
    });
    Ok((
        table,
        TrainReport {
            pairs: done,
            quartile_objective,
        },
    ))
}
