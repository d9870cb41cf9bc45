//! Command-line flags and the flat config file that mirrors them.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use agee::embedder::{TrainConfig, WalkConfig};
use agee::eval::{ExperimentConfig, FeatureLabels, Method};
use agee::link_model::LogisticConfig;
use agee::{Error, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "agee", version, about = "Link prediction on attributed networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct GlobalArgs {
    /// Base seed; every random stream is derived from it [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads [default: 1]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a raw dataset into a bundle directory
    Ingest(IngestArgs),
    /// Build the density-matched feature graph of a bundle
    FeatureGraph(FeatureGraphArgs),
    /// Write one train/validation/test split of a bundle
    Split(SplitCmdArgs),
    /// Embed a graph with node2vec
    Embed(EmbedCmdArgs),
    /// Fit a logistic model on a split and score its validation and test pairs
    TrainPredict(TrainPredictArgs),
    /// Blend structure and feature channel scores
    Blend(BlendArgs),
    /// AUC of a score file against a split
    Evaluate(EvaluateArgs),
    /// Run repeated experiments end to end
    Pipeline(PipelineArgs),
    /// Alpha or training-fraction sweep
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFormat {
    /// `<name>.content` + `<name>.cites`
    ContentCites,
    /// `*.NODE.paper.tab` + `*.DIRECTED.cites.tab`
    Pubmed,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: RawFormat,
    /// Node file for content-cites
    #[arg(long, required_if_eq("format", "content-cites"))]
    pub content: Option<PathBuf>,
    /// Edge file for content-cites
    #[arg(long, required_if_eq("format", "content-cites"))]
    pub cites: Option<PathBuf>,
    /// Node file for pubmed
    #[arg(long, required_if_eq("format", "pubmed"))]
    pub nodes: Option<PathBuf>,
    /// Edge file for pubmed
    #[arg(long, required_if_eq("format", "pubmed"))]
    pub edges: Option<PathBuf>,
    /// Dataset name recorded in the bundle [default: input file stem]
    #[arg(long)]
    pub name: Option<String>,
    /// Output bundle directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FeatureGraphArgs {
    /// Dataset bundle directory
    #[arg(long)]
    pub dataset: PathBuf,
    /// Edge count [default: the structure graph's edge count]
    #[arg(long)]
    pub k: Option<usize>,
    /// Also write the feature self-information histogram
    #[arg(long)]
    pub histogram: bool,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct SplitArgs {
    /// Fraction of edges held out for testing [default: 0.1]
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Fraction of edges held out for validation [default: 0.1]
    #[arg(long)]
    pub val_frac: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SplitCmdArgs {
    /// Dataset bundle directory
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Output split directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct EmbedArgs {
    /// Embedding dimension [default: 128]
    #[arg(long)]
    pub dimensions: Option<usize>,
    /// Walks started from every node [default: 10]
    #[arg(long)]
    pub walks_per_node: Option<usize>,
    /// Nodes per walk [default: 80]
    #[arg(long)]
    pub walk_length: Option<usize>,
    /// Skip-gram context window [default: 10]
    #[arg(long)]
    pub window: Option<usize>,
    /// Negative samples per positive pair [default: 5]
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Passes over the walk corpus [default: 1]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Return parameter [default: 1]
    #[arg(long)]
    pub p: Option<f64>,
    /// In-out parameter [default: 1]
    #[arg(long)]
    pub q: Option<f64>,
    /// Initial skip-gram learning rate [default: 0.025]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Final skip-gram learning rate [default: 0.0001]
    #[arg(long)]
    pub final_lr: Option<f64>,
    /// Train skip-gram with lock-free updates on --jobs threads; results then vary between runs
    #[arg(long)]
    pub nondeterministic: bool,
}

#[derive(Args, Debug)]
pub struct EmbedCmdArgs {
    /// Dataset bundle directory (fixes the node count)
    #[arg(long)]
    pub dataset: PathBuf,
    /// Edge list to embed instead of the dataset graph
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
    /// Output embedding file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct LogisticArgs {
    /// L2 penalty of the logistic model [default: 0.0001]
    #[arg(long)]
    pub logistic_reg: Option<f64>,
    /// Logistic SGD epochs [default: 100]
    #[arg(long)]
    pub logistic_epochs: Option<usize>,
    /// Logistic SGD learning rate [default: 0.01]
    #[arg(long)]
    pub logistic_lr: Option<f64>,
    /// Stop logistic training after this many epochs without validation AUC gain
    #[arg(long)]
    pub early_stopping: Option<usize>,
    /// Fit the logistic model on raw rather than z-scored edge features
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelArg {
    Structure,
    Feature,
}

#[derive(Args, Debug)]
pub struct TrainPredictArgs {
    /// Embedding file
    #[arg(long)]
    pub embedding: PathBuf,
    /// Split directory providing training, validation and test pairs
    #[arg(long)]
    pub split_dir: PathBuf,
    /// Channel label of the produced scores
    #[arg(long, value_enum, default_value = "structure")]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub logistic: LogisticArgs,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BlendArgs {
    /// Structure channel scores
    #[arg(long)]
    pub structure: PathBuf,
    /// Feature channel scores
    #[arg(long)]
    pub feature: PathBuf,
    /// Consensus weight of the structure channel
    #[arg(long, required_unless_present = "split_dir")]
    pub alpha: Option<f64>,
    /// Select alpha on this split's validation pairs (needs --structure-val and --feature-val)
    #[arg(long, requires_all = ["structure_val", "feature_val"], conflicts_with = "alpha")]
    pub split_dir: Option<PathBuf>,
    /// Structure channel validation scores
    #[arg(long)]
    pub structure_val: Option<PathBuf>,
    /// Feature channel validation scores
    #[arg(long)]
    pub feature_val: Option<PathBuf>,
    /// Alpha grid step for selection
    #[arg(long, default_value_t = 0.05)]
    pub alpha_step: f64,
    /// Output score file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSet {
    Val,
    Test,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Score file
    #[arg(long)]
    pub scores: PathBuf,
    /// Split directory
    #[arg(long)]
    pub split_dir: PathBuf,
    /// Which labelled pairs to evaluate on
    #[arg(long, value_enum, default_value = "test")]
    pub set: EvalSet,
    /// Also write the result as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ExperimentArgs {
    /// Dataset bundle directory
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// base (structure channel only) or agee [default: agee]
    #[arg(long)]
    pub method: Option<String>,
    /// Repetitions [default: 10]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Alpha grid step [default: 0.05]
    #[arg(long)]
    pub alpha_step: Option<f64>,
    /// Fixed consensus weight, used with --no-alpha-select [default: 0.6]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Blend at --alpha instead of selecting alpha on the validation set
    #[arg(long)]
    pub no_alpha_select: bool,
    /// Consensus weight of the training-fraction sweep [default: 0.6]
    #[arg(long)]
    pub sweep_alpha: Option<f64>,
    /// Training pairs of the feature channel: structure or feature-graph [default: structure]
    #[arg(long)]
    pub feature_labels: Option<String>,
}

/// Flags shared by `pipeline` and `sweep`, all of which may also come from
/// the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// TOML file with flag names as keys; flags given on the command line win
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub embed: EmbedArgs,
    #[command(flatten)]
    pub logistic: LogisticArgs,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Scores from another predictor on the test pairs of --split-dir
    #[arg(long, requires = "split_dir")]
    pub external_scores: Option<PathBuf>,
    /// Same predictor's scores on the validation pairs, for alpha selection
    #[arg(long, requires = "external_scores")]
    pub external_val_scores: Option<PathBuf>,
    /// Channel the external scores stand in for
    #[arg(long, value_enum, default_value = "structure")]
    pub channel: ChannelArg,
    /// Split whose test pairs the external scores cover
    #[arg(long, requires = "external_scores")]
    pub split_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Alpha,
    Fraction,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Comma-separated training fractions
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    pub fracs: Vec<f64>,
    /// Comma-separated alphas [default: grid at --alpha-step]
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[command(flatten)]
    pub run: RunArgs,
}

macro_rules! merge {
    ($ty:ident { $($opt:ident),* } flags { $($flag:ident),* }) => {
        impl $ty {
            /// Fields set here win over `file`.
            pub fn merge(self, file: Self) -> Self {
                $ty { $($opt: self.$opt.or(file.$opt),)* $($flag: self.$flag || file.$flag,)* }
            }
        }
    };
}

merge!(GlobalArgs { seed, jobs } flags {});
merge!(SplitArgs { test_frac, val_frac } flags {});
merge!(EmbedArgs {
    dimensions, walks_per_node, walk_length, window, negatives, epochs, p, q, lr, final_lr
} flags { nondeterministic });
merge!(LogisticArgs { logistic_reg, logistic_epochs, logistic_lr, early_stopping } flags { no_standardize });
merge!(ExperimentArgs {
    dataset, out, method, reps, alpha_step, alpha, sweep_alpha, feature_labels
} flags { no_alpha_select });

/// Every key a config file may contain.
pub fn config_keys() -> BTreeSet<String> {
    let mut cmd = Cli::command();
    cmd.build();
    let mut keys = BTreeSet::new();
    for sub in ["pipeline", "sweep"] {
        let sub = cmd.find_subcommand(sub).expect("subcommand exists");
        keys.extend(sub.get_arguments().filter_map(|a| a.get_long()).map(str::to_string));
    }
    for only_flag in ["config", "kind", "fracs", "alphas", "external-scores", "external-val-scores", "channel", "split-dir", "help"] {
        keys.remove(only_flag);
    }
    keys
}

fn from_table<T: for<'de> Deserialize<'de>>(table: &toml::Table, path: &Path) -> Result<T> {
    T::deserialize(toml::Value::Table(table.clone()))
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl RunArgs {
    /// Merges flags over the config file, if any.
    pub fn resolve(self, global: GlobalArgs) -> Result<(RunArgs, GlobalArgs)> {
        let Some(path) = self.config.clone() else {
            return Ok((self, global));
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))?;
        let known = config_keys();
        if let Some(bad) = table.keys().find(|k| !known.contains(*k)) {
            return Err(Error::Config(format!("{}: unknown key {bad:?}", path.display())));
        }
        let run = RunArgs {
            config: Some(path.clone()),
            experiment: self.experiment.merge(from_table(&table, &path)?),
            split: self.split.merge(from_table(&table, &path)?),
            embed: self.embed.merge(from_table(&table, &path)?),
            logistic: self.logistic.merge(from_table(&table, &path)?),
        };
        Ok((run, global.merge(from_table(&table, &path)?)))
    }

    pub fn method(&self) -> Result<Method> {
        self.experiment.method.as_deref().unwrap_or("agee").parse()
    }

    pub fn dataset(&self) -> Result<&Path> {
        let p = self
            .experiment
            .dataset
            .as_deref()
            .ok_or_else(|| Error::Config("--dataset is required".into()))?;
        if !p.is_dir() {
            return Err(Error::Config(format!("dataset bundle {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn out(&self) -> Result<&Path> {
        self.experiment
            .out
            .as_deref()
            .ok_or_else(|| Error::Config("--out is required".into()))
    }

    pub fn experiment_config(&self, global: &GlobalArgs) -> Result<ExperimentConfig> {
        let d = ExperimentConfig::default();
        let e = &self.experiment;
        let jobs = global.jobs.unwrap_or(1);
        let alpha = match (e.no_alpha_select, e.alpha) {
            (true, a) => Some(a.unwrap_or(0.6)),
            (false, None) => None,
            (false, Some(_)) => {
                return Err(Error::Config("--alpha only applies together with --no-alpha-select".into()));
            }
        };
        let cfg = ExperimentConfig {
            walk: self.embed.walk_config(),
            train: self.embed.train_config(jobs),
            logistic: self.logistic.config(),
            test_frac: self.split.test_frac.unwrap_or(d.test_frac),
            val_frac: self.split.val_frac.unwrap_or(d.val_frac),
            reps: e.reps.unwrap_or(d.reps),
            seed: global.seed.unwrap_or(d.seed),
            alpha_step: e.alpha_step.unwrap_or(d.alpha_step),
            alpha,
            sweep_alpha: e.sweep_alpha.unwrap_or(d.sweep_alpha),
            feature_labels: match &e.feature_labels {
                Some(s) => s.parse::<FeatureLabels>()?,
                None => d.feature_labels,
            },
            jobs,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl EmbedArgs {
    pub fn walk_config(&self) -> WalkConfig {
        let d = WalkConfig::default();
        WalkConfig {
            walks_per_node: self.walks_per_node.unwrap_or(d.walks_per_node),
            walk_length: self.walk_length.unwrap_or(d.walk_length),
            p: self.p.unwrap_or(d.p),
            q: self.q.unwrap_or(d.q),
            seed: 0,
        }
    }

    pub fn train_config(&self, jobs: usize) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            dimensions: self.dimensions.unwrap_or(d.dimensions),
            window: self.window.unwrap_or(d.window),
            negatives: self.negatives.unwrap_or(d.negatives),
            epochs: self.epochs.unwrap_or(d.epochs),
            initial_lr: self.lr.unwrap_or(d.initial_lr),
            final_lr: self.final_lr.unwrap_or(d.final_lr),
            seed: 0,
            workers: if self.nondeterministic { jobs } else { 1 },
            track_objective: false,
        }
    }
}

impl LogisticArgs {
    pub fn config(&self) -> LogisticConfig {
        let d = LogisticConfig::default();
        LogisticConfig {
            reg: self.logistic_reg.unwrap_or(d.reg),
            epochs: self.logistic_epochs.unwrap_or(d.epochs),
            lr: self.logistic_lr.unwrap_or(d.lr),
            seed: 0,
            standardize: !self.no_standardize,
            early_stopping: self.early_stopping,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_keys_cover_shared_flags() {
        let keys = config_keys();
        for k in ["dataset", "reps", "seed", "jobs", "walk-length", "logistic-reg", "test-frac", "no-alpha-select"] {
            assert!(keys.contains(k), "{k}");
        }
        assert!(!keys.contains("config"));
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "reps = 3\nwalk-length = 20\nseed = 9\nno-alpha-select = true\n").unwrap();
        let mut run = RunArgs { config: Some(path.clone()), ..Default::default() };
        run.experiment.reps = Some(5);
        let (run, global) = run.resolve(GlobalArgs::default()).unwrap();
        assert_eq!(run.experiment.reps, Some(5));
        assert_eq!(run.embed.walk_length, Some(20));
        assert_eq!(global.seed, Some(9));
        assert!(run.experiment.no_alpha_select);
        let cfg = run.experiment_config(&global).unwrap();
        assert_eq!(cfg.alpha, Some(0.6));
        assert_eq!(cfg.walk.walk_length, 20);

        std::fs::write(&path, "walk_lenght = 20\n").unwrap();
        let run = RunArgs { config: Some(path), ..Default::default() };
        assert!(matches!(run.resolve(GlobalArgs::default()), Err(Error::Config(_))));
    }

    #[test]
    fn alpha_needs_no_alpha_select() {
        let mut run = RunArgs::default();
        run.experiment.alpha = Some(1.0);
        assert!(run.experiment_config(&GlobalArgs::default()).is_err());
        run.experiment.no_alpha_select = true;
        assert_eq!(run.experiment_config(&GlobalArgs::default()).unwrap().alpha, Some(1.0));
    }
}
