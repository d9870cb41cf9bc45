//! AUC, consensus-weight selection and the repeated sub-sampling experiments.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::embedder::{embed, save_embedding, EmbeddingTable, TrainConfig, WalkConfig};
use crate::error::{Error, Result};
use crate::feature_graph::{build_feature_graph, feature_information, FeatureGraph};
use crate::graph::{Graph, Pair};
use crate::link_model::{
    blend, edge_features, fit_logistic_with_validation, score, Channel, LogisticConfig,
    LogisticModel, ScoreSet,
};
use crate::seeds;
use crate::splitter::{make_split, sample_non_edges, sweep_fractions, EdgeSplit};

/// Area under the ROC curve from raw scores, ties counted as half.
pub fn auc_from_scores(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes ({} positive, {} negative)",
            positives.len(),
            negatives.len()
        )));
    }
    if positives.iter().chain(negatives).any(|s| s.is_nan()) {
        return Err(Error::Range("NaN score".into()));
    }
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    // sum of (1-based, tie-averaged) ranks of the positives
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < all.len() {
        let mut end = start + 1;
        while end < all.len() && all[end].0 == all[start].0 {
            end += 1;
        }
        let mean_rank = (start + end + 1) as f64 / 2.0;
        let pos = all[start..end].iter().filter(|x| x.1).count();
        rank_sum += mean_rank * pos as f64;
        start = end;
    }
    let (np, nn) = (positives.len() as f64, negatives.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

fn lookup(scores: &ScoreSet, pairs: &[Pair]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(i, j)| {
            scores
                .get(i, j)
                .ok_or_else(|| Error::Alignment(format!("no {} score for pair ({i}, {j})", scores.channel)))
        })
        .collect()
}

pub fn auc(scores: &ScoreSet, positives: &[Pair], negatives: &[Pair]) -> Result<f64> {
    auc_from_scores(&lookup(scores, positives)?, &lookup(scores, negatives)?)
}

/// `{0, step, .., 1}`; `step` must divide 1.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    let steps = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || (steps * step - 1.0).abs() > 1e-9 {
        return Err(Error::Range(format!("alpha step {step} does not divide 1")));
    }
    let steps = steps as usize;
    Ok((0..=steps).map(|k| k as f64 / steps as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaChoice {
    pub alpha: f64,
    pub auc: f64,
}

/// AUCs closer than this count as tied.
const AUC_TIE: f64 = 1e-12;

/// Grid alpha with the best validation AUC of the blend; ties go to the
/// larger alpha.
pub fn select_alpha(
    structure: &ScoreSet,
    feature: &ScoreSet,
    val_pos: &[Pair],
    val_neg: &[Pair],
    step: f64,
) -> Result<AlphaChoice> {
    let mut best: Option<AlphaChoice> = None;
    for alpha in alpha_grid(step)? {
        let auc = auc(&blend(structure, feature, alpha)?, val_pos, val_neg)?;
        best = Some(match best {
            Some(b) if auc < b.auc - AUC_TIE => b,
            Some(b) if auc <= b.auc + AUC_TIE => AlphaChoice { alpha, auc: b.auc.max(auc) },
            _ => AlphaChoice { alpha, auc },
        });
    }
    Ok(best.expect("grid is never empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Base,
    Agee,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Base => "base",
            Method::Agee => "agee",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Method::Base),
            "agee" => Ok(Method::Agee),
            _ => Err(Error::Config(format!("unknown method {s:?} (expected base or agee)"))),
        }
    }
}

/// Which labelled pairs train the feature channel's logistic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureLabels {
    /// The structure training edges and their sampled negatives.
    #[default]
    Structure,
    /// Feature-graph edges against an equal number of feature-graph non-edges.
    FeatureGraph,
}

impl FromStr for FeatureLabels {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structure" => Ok(FeatureLabels::Structure),
            "feature-graph" => Ok(FeatureLabels::FeatureGraph),
            _ => Err(Error::Config(format!(
                "unknown feature label source {s:?} (expected structure or feature-graph)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Walk and skip-gram settings; their seed fields are replaced per repetition.
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub logistic: LogisticConfig,
    pub test_frac: f64,
    pub val_frac: f64,
    pub reps: usize,
    /// Repetition `r` uses seed `seed + r`.
    pub seed: u64,
    pub alpha_step: f64,
    /// Fixed consensus weight; `None` selects it on the validation set.
    pub alpha: Option<f64>,
    /// Consensus weight used by the training-fraction sweep.
    pub sweep_alpha: f64,
    pub feature_labels: FeatureLabels,
    /// Threads for running repetitions side by side.
    #[serde(skip, default = "one")]
    pub jobs: usize,
}

fn one() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            logistic: LogisticConfig::default(),
            test_frac: 0.1,
            val_frac: 0.1,
            reps: 10,
            seed: 0,
            alpha_step: 0.05,
            alpha: None,
            sweep_alpha: 0.6,
            feature_labels: FeatureLabels::Structure,
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.walk.validate()?;
        self.train.validate()?;
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        alpha_grid(self.alpha_step)?;
        for a in self.alpha.iter().chain([&self.sweep_alpha]) {
            if !(0.0..=1.0).contains(a) {
                return Err(Error::Range(format!("alpha {a} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Hex FNV-1a of the serialized configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        format!("{:016x}", seeds::fnv1a(&json))
    }
}

/// Every seed used in one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepSeeds {
    pub rep: usize,
    pub seed: u64,
    pub split: u64,
    pub walks: u64,
    pub sgd: u64,
    pub negatives: u64,
    pub logistic: u64,
    pub feature_walks: u64,
    pub feature_sgd: u64,
    pub feature_logistic: u64,
    pub feature_negatives: u64,
}

impl RepSeeds {
    pub fn new(seed_base: u64, rep: usize) -> Self {
        let seed = seed_base.wrapping_add(rep as u64);
        let d = |name| seeds::derive(seed, name);
        RepSeeds {
            rep,
            seed,
            split: d("split"),
            walks: d("walks"),
            sgd: d("sgd"),
            negatives: seeds::derive(d("sgd"), "negatives"),
            logistic: d("logistic"),
            feature_walks: d("feature-walks"),
            feature_sgd: d("feature-sgd"),
            feature_logistic: d("feature-logistic"),
            feature_negatives: d("feature-negatives"),
        }
    }
}

/// An embedding and the logistic model fitted on it.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub embedding: EmbeddingTable,
    pub model: LogisticModel,
}

impl ChannelModel {
    pub fn score(&self, pairs: &[Pair], channel: Channel) -> Result<ScoreSet> {
        score(&self.model, &self.embedding, pairs, channel)
    }
}

/// Labelled pairs for fitting a channel's logistic model.
pub struct Labelled<'a> {
    pub pos: &'a [Pair],
    pub neg: &'a [Pair],
}

impl Labelled<'_> {
    fn pairs_and_labels(&self) -> (Vec<Pair>, Vec<bool>) {
        let pairs = self.pos.iter().chain(self.neg).copied().collect();
        let labels = std::iter::repeat_n(true, self.pos.len())
            .chain(std::iter::repeat_n(false, self.neg.len()))
            .collect();
        (pairs, labels)
    }
}

/// Embeds `graph` and fits a logistic model on `train`. With early stopping
/// configured and a non-empty `val`, training stops on validation AUC.
pub fn train_channel(
    graph: &Graph,
    train: Labelled<'_>,
    val: Labelled<'_>,
    cfg: &ExperimentConfig,
    walk_seed: u64,
    sgd_seed: u64,
    logistic_seed: u64,
) -> Result<ChannelModel> {
    let walk = WalkConfig { seed: walk_seed, ..cfg.walk.clone() };
    let sgd = TrainConfig { seed: sgd_seed, ..cfg.train.clone() };
    let embedding = embed(graph, &walk, &sgd)?;
    let (pairs, labels) = train.pairs_and_labels();
    let features = edge_features(&embedding, &pairs)?;
    let mut logistic = LogisticConfig { seed: logistic_seed, ..cfg.logistic.clone() };
    let use_val = logistic.early_stopping.is_some() && !val.pos.is_empty() && !val.neg.is_empty();
    if !use_val {
        logistic.early_stopping = None;
    }
    let model = if use_val {
        let (vp, vl) = val.pairs_and_labels();
        let vf = edge_features(&embedding, &vp)?;
        fit_logistic_with_validation(&features, &labels, Some((&vf, &vl)), &logistic)?
    } else {
        fit_logistic_with_validation(&features, &labels, None, &logistic)?
    };
    Ok(ChannelModel { embedding, model })
}

/// Feature graph with as many edges as the structure graph.
pub fn density_matched_feature_graph(ds: &Dataset) -> Result<FeatureGraph> {
    let info = feature_information(&ds.features)?;
    build_feature_graph(&ds.features, &info, ds.graph.edge_count())
}

pub fn structure_channel(split: &EdgeSplit, cfg: &ExperimentConfig, s: &RepSeeds) -> Result<ChannelModel> {
    train_channel(
        &split.train_graph,
        Labelled { pos: &split.train_pos, neg: &split.train_neg },
        Labelled { pos: &split.val_pos, neg: &split.val_neg },
        cfg,
        s.walks,
        s.sgd,
        s.logistic,
    )
}

pub fn feature_channel(
    feature_graph: &Graph,
    split: &EdgeSplit,
    cfg: &ExperimentConfig,
    s: &RepSeeds,
) -> Result<ChannelModel> {
    let val = Labelled { pos: &split.val_pos, neg: &split.val_neg };
    match cfg.feature_labels {
        FeatureLabels::Structure => train_channel(
            feature_graph,
            Labelled { pos: &split.train_pos, neg: &split.train_neg },
            val,
            cfg,
            s.feature_walks,
            s.feature_sgd,
            s.feature_logistic,
        ),
        FeatureLabels::FeatureGraph => {
            let pos: Vec<Pair> = feature_graph.edges().collect();
            let neg = sample_non_edges(feature_graph, pos.len(), s.feature_negatives)?;
            train_channel(
                feature_graph,
                Labelled { pos: &pos, neg: &neg },
                val,
                cfg,
                s.feature_walks,
                s.feature_sgd,
                s.feature_logistic,
            )
        }
    }
}

fn concat(a: &[Pair], b: &[Pair]) -> Vec<Pair> {
    a.iter().chain(b).copied().collect()
}

/// Structure and feature channel scores on the validation and test pairs of
/// one split.
pub struct ChannelScores {
    pub structure: ChannelModel,
    pub feature: Option<ChannelModel>,
    pub structure_val: ScoreSet,
    pub structure_test: ScoreSet,
    pub feature_val: Option<ScoreSet>,
    pub feature_test: Option<ScoreSet>,
}

pub fn channel_scores(
    split: &EdgeSplit,
    feature_graph: Option<&Graph>,
    cfg: &ExperimentConfig,
    s: &RepSeeds,
) -> Result<ChannelScores> {
    let val = concat(&split.val_pos, &split.val_neg);
    let test = concat(&split.test_pos, &split.test_neg);
    let st = structure_channel(split, cfg, s)?;
    let (feature, feature_val, feature_test) = match feature_graph {
        Some(fg) => {
            let ft = feature_channel(fg, split, cfg, s)?;
            let val = ft.score(&val, Channel::Feature)?;
            let test = ft.score(&test, Channel::Feature)?;
            (Some(ft), Some(val), Some(test))
        }
        None => (None, None, None),
    };
    Ok(ChannelScores {
        structure_val: st.score(&val, Channel::Structure)?,
        structure_test: st.score(&test, Channel::Structure)?,
        structure: st,
        feature,
        feature_val,
        feature_test,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub dataset: String,
    pub method: Method,
    pub repetitions: usize,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub auc_per_rep: Vec<f64>,
    /// Consensus weight used per repetition (1 for the base method).
    pub chosen_alpha_per_rep: Vec<f64>,
    /// Validation AUC at the chosen weight, when a validation set exists.
    pub val_auc_per_rep: Vec<Option<f64>>,
    pub seeds: Vec<u64>,
    pub sub_seeds: Vec<RepSeeds>,
    pub config_digest: String,
    pub config: ExperimentConfig,
}

impl ExperimentResult {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("result serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    auc: f64,
    alpha: f64,
    val_auc: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct RepOutcome {
    seeds: RepSeeds,
    base: Outcome,
    agee: Option<Outcome>,
}

/// Writes the split, embeddings, models and test scores of one repetition.
fn save_artifacts(dir: &Path, split: &EdgeSplit, ch: &ChannelScores, alpha: Option<f64>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    split.save(&dir.join("split"))?;
    save_embedding(&dir.join("structure_embedding.txt"), &ch.structure.embedding)?;
    ch.structure.model.save(&dir.join("structure_model.json"))?;
    ch.structure_test.save(&dir.join("structure_test.tsv"))?;
    if let (Some(f), Some(ft)) = (&ch.feature, &ch.feature_test) {
        save_embedding(&dir.join("feature_embedding.txt"), &f.embedding)?;
        f.model.save(&dir.join("feature_model.json"))?;
        ft.save(&dir.join("feature_test.tsv"))?;
        if let Some(a) = alpha {
            blend(&ch.structure_test, ft, a)?.save(&dir.join("blend_test.tsv"))?;
        }
    }
    Ok(())
}

fn run_rep(
    ds: &Dataset,
    fg: Option<&Graph>,
    cfg: &ExperimentConfig,
    s: RepSeeds,
    artifacts: Option<&Path>,
) -> Result<RepOutcome> {
    let split = make_split(&ds.graph, cfg.test_frac, cfg.val_frac, s.split)?;
    let ch = channel_scores(&split, fg, cfg, &s)?;
    let has_val = !split.val_pos.is_empty() && !split.val_neg.is_empty();
    let base = Outcome {
        auc: auc(&ch.structure_test, &split.test_pos, &split.test_neg)?,
        alpha: 1.0,
        val_auc: if has_val {
            Some(auc(&ch.structure_val, &split.val_pos, &split.val_neg)?)
        } else {
            None
        },
    };
    let agee = match (&ch.feature_val, &ch.feature_test) {
        (Some(fv), Some(ft)) => {
            let (alpha, val_auc) = match cfg.alpha {
                Some(a) if has_val => {
                    (a, Some(auc(&blend(&ch.structure_val, fv, a)?, &split.val_pos, &split.val_neg)?))
                }
                Some(a) => (a, None),
                None if has_val => {
                    let c = select_alpha(&ch.structure_val, fv, &split.val_pos, &split.val_neg, cfg.alpha_step)?;
                    (c.alpha, Some(c.auc))
                }
                None => {
                    return Err(Error::Config(
                        "alpha selection needs a validation set; set val_frac > 0 or fix alpha".into(),
                    ))
                }
            };
            let blended = blend(&ch.structure_test, ft, alpha)?;
            Some(Outcome {
                auc: auc(&blended, &split.test_pos, &split.test_neg)?,
                alpha,
                val_auc,
            })
        }
        _ => None,
    };
    if let Some(dir) = artifacts {
        save_artifacts(dir, &split, &ch, agee.map(|a| a.alpha))?;
    }
    info!(
        "rep {} (seed {}): base auc {:.4}{}",
        s.rep,
        s.seed,
        base.auc,
        agee.map_or(String::new(), |a| format!(", agee auc {:.4} at alpha {}", a.auc, a.alpha))
    );
    Ok(RepOutcome { seeds: s, base, agee })
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `f` for every repetition, at most `cfg.jobs` at a time, returning
/// results in repetition order.
fn for_each_rep<T: Send>(cfg: &ExperimentConfig, f: impl Fn(RepSeeds) -> Result<T> + Sync) -> Result<Vec<T>> {
    in_pool(cfg.jobs, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let s = RepSeeds::new(cfg.seed, rep);
                f(s).map_err(|e| Error::Repetition { rep, seed: s.seed, source: Box::new(e) })
            })
            .collect()
    })?
}

fn summarize(ds: &Dataset, method: Method, cfg: &ExperimentConfig, reps: &[RepOutcome]) -> ExperimentResult {
    let outcomes: Vec<Outcome> = reps
        .iter()
        .map(|r| match method {
            Method::Base => r.base,
            Method::Agee => r.agee.expect("feature channel computed"),
        })
        .collect();
    let auc_per_rep: Vec<f64> = outcomes.iter().map(|o| o.auc).collect();
    let (auc_mean, auc_std) = mean_std(&auc_per_rep);
    ExperimentResult {
        dataset: ds.name.clone(),
        method,
        repetitions: reps.len(),
        auc_mean,
        auc_std,
        auc_per_rep,
        chosen_alpha_per_rep: outcomes.iter().map(|o| o.alpha).collect(),
        val_auc_per_rep: outcomes.iter().map(|o| o.val_auc).collect(),
        seeds: reps.iter().map(|r| r.seeds.seed).collect(),
        sub_seeds: reps.iter().map(|r| r.seeds).collect(),
        config_digest: cfg.digest(),
        config: cfg.clone(),
    }
}

fn run_reps(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    with_features: bool,
    artifacts: Option<&Path>,
) -> Result<Vec<RepOutcome>> {
    cfg.validate()?;
    let fg = if with_features {
        let fg = density_matched_feature_graph(ds)?;
        info!(
            "feature graph: {} edges, threshold {:.6}",
            fg.graph.edge_count(),
            fg.summary.threshold
        );
        Some(fg.graph)
    } else {
        None
    };
    for_each_rep(cfg, |s| {
        let dir = artifacts.filter(|_| s.rep == 0);
        run_rep(ds, fg.as_ref(), cfg, s, dir)
    })
}

pub fn run_experiment(ds: &Dataset, method: Method, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_artifacts(ds, method, cfg, None)
}

/// As [`run_experiment`], also saving the first repetition's split,
/// embeddings, models and scores under `artifacts`.
pub fn run_experiment_with_artifacts(
    ds: &Dataset,
    method: Method,
    cfg: &ExperimentConfig,
    artifacts: Option<&Path>,
) -> Result<ExperimentResult> {
    let reps = run_reps(ds, cfg, method == Method::Agee, artifacts)?;
    Ok(summarize(ds, method, cfg, &reps))
}

/// Base and AGEE results from the same splits and structure embeddings.
pub fn run_paired(ds: &Dataset, cfg: &ExperimentConfig) -> Result<(ExperimentResult, ExperimentResult)> {
    run_paired_with_artifacts(ds, cfg, None)
}

pub fn run_paired_with_artifacts(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    artifacts: Option<&Path>,
) -> Result<(ExperimentResult, ExperimentResult)> {
    let reps = run_reps(ds, cfg, true, artifacts)?;
    Ok((
        summarize(ds, Method::Base, cfg, &reps),
        summarize(ds, Method::Agee, cfg, &reps),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
}

/// Test AUC of the blend at each fixed alpha, over `cfg.reps` repetitions
/// using the same splits and seeds as [`run_experiment`].
pub fn sweep_alpha(ds: &Dataset, alphas: &[f64], cfg: &ExperimentConfig) -> Result<Vec<AlphaRow>> {
    cfg.validate()?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Range(format!("alpha {a} outside [0, 1]")));
    }
    let fg = density_matched_feature_graph(ds)?.graph;
    let per_rep = for_each_rep(cfg, |s| {
        let split = make_split(&ds.graph, cfg.test_frac, cfg.val_frac, s.split)?;
        let ch = channel_scores(&split, Some(&fg), cfg, &s)?;
        let ft = ch.feature_test.as_ref().expect("feature channel computed");
        alphas
            .iter()
            .map(|&a| auc(&blend(&ch.structure_test, ft, a)?, &split.test_pos, &split.test_neg))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[k]).collect();
            let (auc_mean, auc_std) = mean_std(&xs);
            AlphaRow { alpha, auc_mean, auc_std }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionRow {
    pub frac: f64,
    pub base_auc: f64,
    pub agee_auc: f64,
}

/// Mean test AUC of both methods per training fraction. There is no
/// validation set, so AGEE blends at `cfg.sweep_alpha`.
pub fn sweep_train_fraction(ds: &Dataset, fracs: &[f64], cfg: &ExperimentConfig) -> Result<Vec<FractionRow>> {
    cfg.validate()?;
    let fg = density_matched_feature_graph(ds)?.graph;
    let per_rep = for_each_rep(cfg, |s| {
        let splits = sweep_fractions(&ds.graph, cfg.test_frac, fracs, s.split)?;
        splits
            .iter()
            .map(|split| {
                let ch = channel_scores(split, Some(&fg), cfg, &s)?;
                let ft = ch.feature_test.as_ref().expect("feature channel computed");
                let base = auc(&ch.structure_test, &split.test_pos, &split.test_neg)?;
                let agee = auc(&blend(&ch.structure_test, ft, cfg.sweep_alpha)?, &split.test_pos, &split.test_neg)?;
                info!("rep {} train fraction {:.2}: base {base:.4}, agee {agee:.4}", s.rep, split_frac(split, ds));
                Ok((base, agee))
            })
            .collect::<Result<Vec<(f64, f64)>>>()
    })?;
    Ok(fracs
        .iter()
        .enumerate()
        .map(|(k, &frac)| {
            let base: Vec<f64> = per_rep.iter().map(|r| r[k].0).collect();
            let agee: Vec<f64> = per_rep.iter().map(|r| r[k].1).collect();
            FractionRow {
                frac,
                base_auc: mean_std(&base).0,
                agee_auc: mean_std(&agee).0,
            }
        })
        .collect())
}

fn split_frac(split: &EdgeSplit, ds: &Dataset) -> f64 {
    split.train_pos.len() as f64 / ds.graph.edge_count() as f64
}

pub const ALPHA_SWEEP_FILE: &str = "alpha_sweep.csv";
pub const FRACTION_SWEEP_FILE: &str = "fraction_sweep.csv";

pub fn write_alpha_csv<W: Write>(mut out: W, rows: &[AlphaRow]) -> std::io::Result<()> {
    writeln!(out, "alpha,auc_mean,auc_std")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.alpha, r.auc_mean, r.auc_std)?;
    }
    out.flush()
}

pub fn write_fraction_csv<W: Write>(mut out: W, rows: &[FractionRow]) -> std::io::Result<()> {
    writeln!(out, "frac,base_auc,agee_auc")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.frac, r.base_auc, r.agee_auc)?;
    }
    out.flush()
}
