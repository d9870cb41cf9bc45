use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use agee::dataset::{self, read_bundle, Dataset};
use agee::embedder::{embed, load_embedding, save_embedding};
use agee::eval::{
    alpha_grid, auc, density_matched_feature_graph, feature_channel, run_experiment_with_artifacts,
    run_paired_with_artifacts, select_alpha, structure_channel, sweep_alpha, sweep_train_fraction,
    write_alpha_csv, write_fraction_csv, Method, RepSeeds, ALPHA_SWEEP_FILE, FRACTION_SWEEP_FILE,
};
use agee::feature_graph::{
    build_feature_graph, feature_information, information_histogram, save_feature_graph,
    write_histogram_csv,
};
use agee::graph::{read_edge_list, Graph, Pair};
use agee::link_model::{
    blend, edge_features, fit_logistic_with_validation, ingest_external_scores, score, Channel,
    LogisticConfig, ScoreSet,
};
use agee::splitter::{make_split, EdgeSplit};
use agee::{Error, Result};
use log::info;
use serde::Serialize;

use crate::args::*;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, json + "\n").map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

const STALE_MARKER: &str = "STALE";

/// Runs `f`, leaving a `STALE` file with the error in `out` if it fails so
/// that artifacts from the aborted run are not mistaken for results.
fn guarded(out: &Path, f: impl FnOnce() -> Result<()>) -> Result<()> {
    create_dir(out)?;
    let marker = out.join(STALE_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(io_err(&marker))?;
    }
    let result = f();
    if let Err(e) = &result {
        let _ = std::fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn pairs(a: &[Pair], b: &[Pair]) -> Vec<Pair> {
    a.iter().chain(b).copied().collect()
}

pub fn run(cli: Cli) -> Result<()> {
    let global = cli.global;
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::FeatureGraph(a) => feature_graph(a),
        Command::Split(a) => split(a, &global),
        Command::Embed(a) => embed_cmd(a, &global),
        Command::TrainPredict(a) => train_predict(a, &global),
        Command::Blend(a) => blend_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a, global),
        Command::Sweep(a) => sweep(a, global),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let mut ds = match a.format {
        RawFormat::ContentCites => dataset::load_content_cites(
            a.content.as_deref().expect("required by clap"),
            a.cites.as_deref().expect("required by clap"),
        )?,
        RawFormat::Pubmed => dataset::load_pubmed(
            a.nodes.as_deref().expect("required by clap"),
            a.edges.as_deref().expect("required by clap"),
        )?,
    };
    if let Some(name) = a.name {
        ds.name = name;
    }
    dataset::write_bundle(&ds, &a.out)?;
    let m = ds.meta();
    println!(
        "{}: {} nodes, {} edges, {} features ({} nonzero) -> {}",
        m.name,
        m.node_count,
        m.edge_count,
        m.feature_count,
        m.feature_nnz,
        a.out.display()
    );
    Ok(())
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("dataset bundle {} does not exist", dir.display())));
    }
    read_bundle(dir)
}

fn feature_graph(a: FeatureGraphArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let info = feature_information(&ds.features)?;
    let k = a.k.unwrap_or(ds.graph.edge_count());
    let fg = build_feature_graph(&ds.features, &info, k)?;
    save_feature_graph(&a.out, &fg)?;
    if a.histogram {
        let path = a.out.join("info_histogram.csv");
        write_histogram_csv(create(&path)?, &information_histogram(&info)).map_err(io_err(&path))?;
    }
    println!(
        "feature graph: {} edges, threshold {} ({} tied pairs left out)",
        fg.graph.edge_count(),
        fg.summary.threshold,
        fg.summary.excluded_at_threshold
    );
    Ok(())
}

fn split(a: SplitCmdArgs, global: &GlobalArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let s = RepSeeds::new(global.seed.unwrap_or(0), 0);
    let split = make_split(
        &ds.graph,
        a.split.test_frac.unwrap_or(0.1),
        a.split.val_frac.unwrap_or(0.1),
        s.split,
    )?;
    split.save(&a.out)?;
    let m = split.meta();
    println!("split: {} train, {} val, {} test positives -> {}", m.train, m.val, m.test, a.out.display());
    Ok(())
}

fn embed_cmd(a: EmbedCmdArgs, global: &GlobalArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let graph = match &a.graph {
        Some(path) => Graph::from_edges(ds.graph.node_count(), read_edge_list(path)?)?,
        None => ds.graph.clone(),
    };
    let s = RepSeeds::new(global.seed.unwrap_or(0), 0);
    let walk = agee::embedder::WalkConfig { seed: s.walks, ..a.embed.walk_config() };
    let train = agee::embedder::TrainConfig { seed: s.sgd, ..a.embed.train_config(global.jobs.unwrap_or(1)) };
    let table = embed(&graph, &walk, &train)?;
    save_embedding(&a.out, &table)?;
    info!("wrote {} x {} embedding to {}", table.node_count(), table.dimensions(), a.out.display());
    Ok(())
}

fn train_predict(a: TrainPredictArgs, global: &GlobalArgs) -> Result<()> {
    let emb = load_embedding(&a.embedding)?;
    let split = EdgeSplit::load(&a.split_dir)?;
    let s = RepSeeds::new(global.seed.unwrap_or(0), 0);
    let (channel, name, seed) = match a.channel {
        ChannelArg::Structure => (Channel::Structure, "structure", s.logistic),
        ChannelArg::Feature => (Channel::Feature, "feature", s.feature_logistic),
    };
    let cfg = LogisticConfig { seed, ..a.logistic.config() };
    let train = pairs(&split.train_pos, &split.train_neg);
    let labels: Vec<bool> = (0..train.len()).map(|k| k < split.train_pos.len()).collect();
    let x = edge_features(&emb, &train)?;
    let val = pairs(&split.val_pos, &split.val_neg);
    let model = if cfg.early_stopping.is_some() && !split.val_pos.is_empty() {
        let vx = edge_features(&emb, &val)?;
        let vl: Vec<bool> = (0..val.len()).map(|k| k < split.val_pos.len()).collect();
        fit_logistic_with_validation(&x, &labels, Some((&vx, &vl)), &cfg)?
    } else {
        fit_logistic_with_validation(&x, &labels, None, &LogisticConfig { early_stopping: None, ..cfg })?
    };
    create_dir(&a.out)?;
    model.save(&a.out.join(format!("{name}_model.json")))?;
    score(&model, &emb, &val, channel.clone())?.save(&a.out.join(format!("{name}_val.tsv")))?;
    let test = score(&model, &emb, &pairs(&split.test_pos, &split.test_neg), channel)?;
    test.save(&a.out.join(format!("{name}_test.tsv")))?;
    println!("{name} test auc {:.6}", auc(&test, &split.test_pos, &split.test_neg)?);
    Ok(())
}

fn blend_cmd(a: BlendArgs) -> Result<()> {
    let s = ScoreSet::load(&a.structure)?;
    let f = ScoreSet::load(&a.feature)?;
    let alpha = match (&a.split_dir, a.alpha) {
        (Some(dir), _) => {
            let split = EdgeSplit::load(dir)?;
            let sv = ScoreSet::load(a.structure_val.as_deref().expect("required by clap"))?;
            let fv = ScoreSet::load(a.feature_val.as_deref().expect("required by clap"))?;
            let c = select_alpha(&sv, &fv, &split.val_pos, &split.val_neg, a.alpha_step)?;
            println!("selected alpha {} (validation auc {:.6})", c.alpha, c.auc);
            c.alpha
        }
        (None, Some(alpha)) => alpha,
        (None, None) => unreachable!("clap requires --alpha or --split-dir"),
    };
    blend(&s, &f, alpha)?.save(&a.out)
}

#[derive(Serialize)]
struct Evaluation<'a> {
    scores: &'a Path,
    channel: String,
    set: &'static str,
    positives: usize,
    negatives: usize,
    auc: f64,
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let scores = ScoreSet::load(&a.scores)?;
    let split = EdgeSplit::load(&a.split_dir)?;
    let (pos, neg, set) = match a.set {
        EvalSet::Test => (&split.test_pos, &split.test_neg, "test"),
        EvalSet::Val => (&split.val_pos, &split.val_neg, "val"),
    };
    let value = auc(&scores, pos, neg)?;
    println!("auc\t{value}");
    if let Some(out) = &a.out {
        write_json(
            out,
            &Evaluation {
                scores: &a.scores,
                channel: scores.channel.to_string(),
                set,
                positives: pos.len(),
                negatives: neg.len(),
                auc: value,
            },
        )?;
    }
    Ok(())
}

fn pipeline(a: PipelineArgs, global: GlobalArgs) -> Result<()> {
    let (run, global) = a.run.resolve(global)?;
    let cfg = run.experiment_config(&global)?;
    let method = run.method()?;
    let dataset_dir = run.dataset()?.to_path_buf();
    let out = run.out()?.to_path_buf();
    guarded(&out, || {
        let ds = read_bundle(&dataset_dir)?;
        if let Some(path) = &a.external_scores {
            let split_dir = a.split_dir.as_deref().expect("required by clap");
            return external_pipeline(&ds, &cfg, path, a.external_val_scores.as_deref(), a.channel, split_dir, &out);
        }
        let artifacts = out.join("rep0");
        match method {
            Method::Base => {
                let r = run_experiment_with_artifacts(&ds, Method::Base, &cfg, Some(&artifacts))?;
                write_json(&out.join("results.json"), &r)?;
                println!("{} base: auc {:.4} ± {:.4} over {} reps", r.dataset, r.auc_mean, r.auc_std, r.repetitions);
            }
            Method::Agee => {
                save_feature_graph(&out, &density_matched_feature_graph(&ds)?)?;
                let (base, agee) = run_paired_with_artifacts(&ds, &cfg, Some(&artifacts))?;
                write_json(&out.join("results.json"), &agee)?;
                write_json(&out.join("results_base.json"), &base)?;
                for r in [&base, &agee] {
                    println!(
                        "{} {}: auc {:.4} ± {:.4} over {} reps",
                        r.dataset, r.method, r.auc_mean, r.auc_std, r.repetitions
                    );
                }
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ExternalResult {
    dataset: String,
    external_channel: String,
    replaces: &'static str,
    alpha: f64,
    alpha_selected_on_validation: bool,
    auc_external: f64,
    auc_internal: f64,
    auc_blend: f64,
    seeds: RepSeeds,
    config_digest: String,
}

fn external_pipeline(
    ds: &Dataset,
    cfg: &agee::eval::ExperimentConfig,
    test_path: &Path,
    val_path: Option<&Path>,
    replaces: ChannelArg,
    split_dir: &Path,
    out: &Path,
) -> Result<()> {
    let split = EdgeSplit::load(split_dir)?;
    if split.train_graph.node_count() != ds.graph.node_count() {
        return Err(Error::Config(format!(
            "split {} has {} nodes but the dataset has {}",
            split_dir.display(),
            split.train_graph.node_count(),
            ds.graph.node_count()
        )));
    }
    let s = RepSeeds::new(cfg.seed, 0);
    let test = pairs(&split.test_pos, &split.test_neg);
    let val = pairs(&split.val_pos, &split.val_neg);
    let ext_test = ingest_external_scores(test_path, &test)?;
    let ext_val = val_path.map(|p| ingest_external_scores(p, &val)).transpose()?;
    let (internal, label) = match replaces {
        ChannelArg::Structure => {
            let fg = density_matched_feature_graph(ds)?.graph;
            (feature_channel(&fg, &split, cfg, &s)?, Channel::Feature)
        }
        ChannelArg::Feature => (structure_channel(&split, cfg, &s)?, Channel::Structure),
    };
    let int_test = internal.score(&test, label.clone())?;
    // blend() takes the structure channel first
    let ordered = |ext: ScoreSet, int: ScoreSet| match replaces {
        ChannelArg::Structure => (ext, int),
        ChannelArg::Feature => (int, ext),
    };
    let (alpha, selected) = match (cfg.alpha, ext_val) {
        (Some(a), _) => (a, false),
        (None, Some(ev)) => {
            let (sv, fv) = ordered(ev, internal.score(&val, label)?);
            (select_alpha(&sv, &fv, &split.val_pos, &split.val_neg, cfg.alpha_step)?.alpha, true)
        }
        (None, None) => {
            return Err(Error::Config(
                "alpha selection needs --external-val-scores; otherwise pass --no-alpha-select".into(),
            ))
        }
    };
    let auc_external = auc(&ext_test, &split.test_pos, &split.test_neg)?;
    let auc_internal = auc(&int_test, &split.test_pos, &split.test_neg)?;
    let external_channel = ext_test.channel.to_string();
    let (st, ft) = ordered(ext_test, int_test);
    let blended = blend(&st, &ft, alpha)?;
    blended.save(&out.join("blend_test.tsv"))?;
    let result = ExternalResult {
        dataset: ds.name.clone(),
        external_channel,
        replaces: match replaces {
            ChannelArg::Structure => "structure",
            ChannelArg::Feature => "feature",
        },
        alpha,
        alpha_selected_on_validation: selected,
        auc_external,
        auc_internal,
        auc_blend: auc(&blended, &split.test_pos, &split.test_neg)?,
        seeds: s,
        config_digest: cfg.digest(),
    };
    write_json(&out.join("results.json"), &result)?;
    println!(
        "{}: external {:.4}, internal {:.4}, blend {:.4} at alpha {}",
        result.dataset, result.auc_external, result.auc_internal, result.auc_blend, alpha
    );
    Ok(())
}

fn sweep(a: SweepArgs, global: GlobalArgs) -> Result<()> {
    let (run, global) = a.run.resolve(global)?;
    let cfg = run.experiment_config(&global)?;
    let dataset_dir = run.dataset()?.to_path_buf();
    let out = run.out()?.to_path_buf();
    guarded(&out, || {
        let ds = read_bundle(&dataset_dir)?;
        match a.kind {
            SweepKind::Alpha => {
                let alphas = match &a.alphas {
                    Some(v) => v.clone(),
                    None => alpha_grid(cfg.alpha_step)?,
                };
                let rows = sweep_alpha(&ds, &alphas, &cfg)?;
                let path = out.join(ALPHA_SWEEP_FILE);
                write_alpha_csv(create(&path)?, &rows).map_err(io_err(&path))?;
                println!("wrote {} rows to {}", rows.len(), path.display());
            }
            SweepKind::Fraction => {
                let rows = sweep_train_fraction(&ds, &a.fracs, &cfg)?;
                let path = out.join(FRACTION_SWEEP_FILE);
                write_fraction_csv(create(&path)?, &rows).map_err(io_err(&path))?;
                println!("wrote {} rows to {}", rows.len(), path.display());
            }
        }
        Ok(())
    })
}
