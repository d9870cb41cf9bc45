//! Edge probabilities from node embeddings.
//!
//! A pair is represented by the Hadamard product of its two node vectors and
//! scored with a logistic model. Probabilities from the structure and
//! feature channels are blended as `alpha * p_structure + (1 - alpha) * p_feature`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedder::{sigmoid, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{canonical, NodeId, Pair};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeature {
    pub pair: Pair,
    pub vector: Vec<f64>,
}

pub fn edge_feature(emb: &EmbeddingTable, i: NodeId, j: NodeId) -> Result<EdgeFeature> {
    for id in [i, j] {
        if id as usize >= emb.node_count() {
            return Err(Error::InvalidNode {
                id: id as usize,
                node_count: emb.node_count(),
            });
        }
    }
    let vector = emb
        .row(i)
        .iter()
        .zip(emb.row(j))
        .map(|(&a, &b)| a as f64 * b as f64)
        .collect();
    Ok(EdgeFeature {
        pair: (i, j),
        vector,
    })
}

pub fn edge_features(emb: &EmbeddingTable, pairs: &[Pair]) -> Result<Vec<Vec<f64>>> {
    pairs
        .iter()
        .map(|&(i, j)| edge_feature(emb, i, j).map(|f| f.vector))
        .collect()
}

/// Logistic model; serialized as `{dim, theta, bias}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub dim: usize,
    pub theta: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        LogisticModel {
            dim,
            theta: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.theta.iter().zip(x).map(|(t, v)| t * v).sum::<f64>() + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: LogisticModel =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.to_string()))?;
        if model.theta.len() != model.dim {
            return Err(Error::format(path, 0, "theta length differs from dim"));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// L2 penalty on `theta` (the bias is not penalized).
    pub reg: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Fit on z-scored features and fold the scaling back into `theta`/`bias`.
    pub standardize: bool,
    /// Stop when validation AUC has not improved for this many epochs and
    /// keep the best epoch's parameters. Needs validation data.
    pub early_stopping: Option<usize>,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            reg: 1e-4,
            epochs: 100,
            lr: 0.01,
            seed: 0,
            standardize: true,
            early_stopping: None,
        }
    }
}

struct Scaling {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl Scaling {
    fn fit(features: &[Vec<f64>], dim: usize) -> Self {
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for x in features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for x in features {
            for k in 0..dim {
                var[k] += (x[k] - mean[k]).powi(2) / n;
            }
        }
        let inv_std = var
            .iter()
            .map(|&v| if v > 1e-300 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        Scaling { mean, inv_std }
    }

    fn identity(dim: usize) -> Self {
        Scaling {
            mean: vec![0.0; dim],
            inv_std: vec![1.0; dim],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.inv_std)
            .map(|((v, m), s)| (v - m) * s)
            .collect()
    }

    /// Model on raw features equivalent to `model` on scaled features.
    fn fold(&self, model: &LogisticModel) -> LogisticModel {
        let theta: Vec<f64> = model
            .theta
            .iter()
            .zip(&self.inv_std)
            .map(|(t, s)| t * s)
            .collect();
        let shift: f64 = theta.iter().zip(&self.mean).map(|(t, m)| t * m).sum();
        LogisticModel {
            dim: model.dim,
            theta,
            bias: model.bias - shift,
        }
    }
}

fn check_training_set(features: &[Vec<f64>], labels: &[bool]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::Fit("need at least one example of each label".into()));
    }
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    Ok(dim)
}

/// Minimizes mean cross-entropy plus `reg * |theta|^2 / 2` by shuffled SGD.
pub fn fit_logistic(features: &[Vec<f64>], labels: &[bool], cfg: &LogisticConfig) -> Result<LogisticModel> {
    fit_logistic_with_validation(features, labels, None, cfg)
}

/// As [`fit_logistic`], optionally early-stopping on validation AUC.
pub fn fit_logistic_with_validation(
    features: &[Vec<f64>],
    labels: &[bool],
    validation: Option<(&[Vec<f64>], &[bool])>,
    cfg: &LogisticConfig,
) -> Result<LogisticModel> {
    let dim = check_training_set(features, labels)?;
    if !(cfg.lr > 0.0 && cfg.reg >= 0.0) {
        return Err(Error::Config("logistic lr must be positive and reg nonnegative".into()));
    }
    let scaling = if cfg.standardize {
        Scaling::fit(features, dim)
    } else {
        Scaling::identity(dim)
    };
    let scaled: Vec<Vec<f64>> = features.iter().map(|x| scaling.apply(x)).collect();
    let patience = match (cfg.early_stopping, validation) {
        (Some(p), Some(_)) => Some(p),
        (Some(_), None) => {
            return Err(Error::Config("early stopping needs a validation set".into()));
        }
        _ => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..scaled.len()).collect();
    let mut model = LogisticModel::zeros(dim);
    let mut best: Option<(f64, LogisticModel)> = None;
    let mut stale = 0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let x = &scaled[idx];
            let y = if labels[idx] { 1.0 } else { 0.0 };
            let err = model.probability(x) - y;
            for (t, v) in model.theta.iter_mut().zip(x) {
                *t -= cfg.lr * (err * v + cfg.reg * *t);
            }
            model.bias -= cfg.lr * err;
        }
        if model.theta.iter().any(|t| !t.is_finite()) || !model.bias.is_finite() {
            return Err(Error::Fit("parameters diverged".into()));
        }
        if let (Some(patience), Some((vx, vy))) = (patience, validation) {
            let folded = scaling.fold(&model);
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for (x, &y) in vx.iter().zip(vy) {
                let s = folded.logit(x);
                if y {
                    pos.push(s)
                } else {
                    neg.push(s)
                }
            }
            let auc = crate::eval::auc_from_scores(&pos, &neg)?;
            if best.as_ref().is_none_or(|(b, _)| auc > *b) {
                best = Some((auc, folded));
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(match best {
        Some((_, m)) => m,
        None => scaling.fold(&model),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Channel {
    Structure,
    Feature,
    Blend,
    External(String),
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Structure => write!(f, "structure"),
            Channel::Feature => write!(f, "feature"),
            Channel::Blend => write!(f, "blend"),
            Channel::External(name) => write!(f, "external:{name}"),
        }
    }
}

impl Channel {
    pub fn parse(s: &str) -> Channel {
        match s {
            "structure" => Channel::Structure,
            "feature" => Channel::Feature,
            "blend" => Channel::Blend,
            other => Channel::External(other.strip_prefix("external:").unwrap_or(other).to_string()),
        }
    }
}

/// Probabilities for a set of unordered pairs from one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub channel: Channel,
    records: Vec<(Pair, f64)>,
    index: HashMap<Pair, usize>,
}

impl ScoreSet {
    /// Pairs are canonicalized; duplicates and probabilities outside [0, 1]
    /// are rejected.
    pub fn new(channel: Channel, records: Vec<(Pair, f64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        let mut canon = Vec::with_capacity(records.len());
        for (k, ((i, j), p)) in records.into_iter().enumerate() {
            let pair = canonical(i, j);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Range(format!("probability {p} for pair {pair:?} outside [0, 1]")));
            }
            if index.insert(pair, k).is_some() {
                return Err(Error::Alignment(format!("pair {pair:?} appears twice")));
            }
            canon.push((pair, p));
        }
        Ok(ScoreSet {
            channel,
            records: canon,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(Pair, f64)] {
        &self.records
    }

    /// Probability for a pair in either orientation.
    pub fn get(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.index.get(&canonical(i, j)).map(|&k| self.records[k].1)
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# channel={}", self.channel)?;
        for &((i, j), p) in &self.records {
            writeln!(out, "{i}\t{j}\t{p}")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_tsv(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let (channel, records) = parse_score_lines(BufReader::new(file), path)?;
        let channel = channel.map_or(Channel::External(stem(path)), |c| Channel::parse(&c));
        ScoreSet::new(channel, records.into_iter().map(|(_, pair, p)| (pair, p)).collect())
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scores".into())
}

type ScoreLine = (usize, Pair, f64);

fn parse_score_lines<R: BufRead>(reader: R, origin: &Path) -> Result<(Option<String>, Vec<ScoreLine>)> {
    let mut channel = None;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(name) = comment.trim().strip_prefix("channel=") {
                channel = Some(name.trim().to_string());
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [i, j, p] = fields[..] else {
            return Err(Error::format(origin, line_no, "expected \"i<TAB>j<TAB>probability\""));
        };
        let node = |s: &str| {
            s.parse::<NodeId>()
                .map_err(|_| Error::format(origin, line_no, format!("invalid node id {s:?}")))
        };
        let pair = canonical(node(i)?, node(j)?);
        let p: f64 = p
            .parse()
            .map_err(|_| Error::format(origin, line_no, format!("invalid probability {p:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::format(
                origin,
                line_no,
                format!("probability {p} outside [0, 1]"),
            ));
        }
        if !seen.insert(pair) {
            return Err(Error::format(origin, line_no, format!("duplicate pair {pair:?}")));
        }
        out.push((line_no, pair, p));
    }
    Ok((channel, out))
}

/// Reads scores produced by another link predictor and checks that they
/// cover exactly `expected`. The channel is `external:<name>`, with the name
/// taken from the `# channel=` header or else the file stem.
pub fn ingest_external_scores(path: &Path, expected: &[Pair]) -> Result<ScoreSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (channel, lines) = parse_score_lines(BufReader::new(file), path)?;
    let wanted: HashSet<Pair> = expected.iter().map(|&(i, j)| canonical(i, j)).collect();
    for &(line_no, pair, _) in &lines {
        if !wanted.contains(&pair) {
            return Err(Error::format(path, line_no, format!("unexpected pair {pair:?}")));
        }
    }
    if lines.len() != wanted.len() {
        let have: HashSet<Pair> = lines.iter().map(|l| l.1).collect();
        let mut missing: Vec<&Pair> = wanted.difference(&have).collect();
        missing.sort();
        return Err(Error::format(
            path,
            lines.last().map_or(1, |l| l.0 + 1),
            format!("{} expected pair(s) missing, first {:?}", missing.len(), missing[0]),
        ));
    }
    let name = channel
        .map(|c| c.strip_prefix("external:").unwrap_or(&c).to_string())
        .unwrap_or_else(|| stem(path));
    ScoreSet::new(
        Channel::External(name),
        lines.into_iter().map(|(_, pair, p)| (pair, p)).collect(),
    )
}

/// Scores every pair with `model` over `emb`.
pub fn score(model: &LogisticModel, emb: &EmbeddingTable, pairs: &[Pair], channel: Channel) -> Result<ScoreSet> {
    if model.dim != emb.dimensions() || model.theta.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: emb.dimensions(),
            actual: model.dim,
        });
    }
    let mut records = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        let f = edge_feature(emb, i, j)?;
        records.push(((i, j), model.probability(&f.vector)));
    }
    ScoreSet::new(channel, records)
}

/// `alpha * structure + (1 - alpha) * feature` for one pair.
pub fn blend_probability(structure: f64, feature: f64, alpha: f64) -> f64 {
    alpha * structure + (1.0 - alpha) * feature
}

/// Pairwise [`blend_probability`], in the structure set's order.
pub fn blend(structure: &ScoreSet, feature: &ScoreSet, alpha: f64) -> Result<ScoreSet> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Range(format!("alpha {alpha} outside [0, 1]")));
    }
    if structure.len() != feature.len() {
        return Err(Error::Alignment(format!(
            "channels cover {} and {} pairs",
            structure.len(),
            feature.len()
        )));
    }
    let mut records = Vec::with_capacity(structure.len());
    for &((i, j), ps) in structure.records() {
        let pf = feature
            .get(i, j)
            .ok_or_else(|| Error::Alignment(format!("pair ({i}, {j}) missing from {}", feature.channel)))?;
        records.push(((i, j), blend_probability(ps, pf, alpha)));
    }
    ScoreSet::new(Channel::Blend, records)
}
