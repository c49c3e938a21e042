use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use scenebm::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION};
use scenebm::rng::{self, phase};
use scenebm::scene::{
    derive_relations, encode_scene, implied_dimension, load_scenes, split_dataset, synth_generate, EncodedScene,
    MotifTable, SceneInstance, SplitRatios, SynthSpec, Thresholds, Vocabulary,
};
use scenebm::selfcheck::{self, Budget, Mutation};
use scenebm::tasks::{self, category_hidden_unit, task4_generate, GenerationSeed, TaskReport};
use scenebm::trainer::{self, init_visible_biases, TrainHistory};
use scenebm::{init_params, Node, Params, SceneVector, Task};

use crate::config::RunConfig;
use crate::plot::{line_chart, Series};

pub const TRAIN_FILE: &str = "train.json";
pub const VALIDATION_FILE: &str = "validation.json";
pub const TEST_FILE: &str = "test.json";
pub const VOCAB_FILE: &str = "vocabulary.json";
pub const SCENES_FILE: &str = "scenes.json";
pub const MOTIFS_FILE: &str = "motifs.json";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_encoded(path: &Path) -> Result<Vec<EncodedScene>> {
    read_json(path)
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::load(path).with_context(|| format!("loading vocabulary {}", path.display()))
}

fn read_scenes(path: &Path) -> Result<Vec<SceneInstance>> {
    load_scenes(path).with_context(|| format!("loading scenes {}", path.display()))
}

pub fn synth(spec_path: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut spec = match spec_path {
        Some(p) => SynthSpec::load(p).with_context(|| format!("loading spec {}", p.display()))?,
        None => SynthSpec::desk_fixture(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let generated = synth_generate(&spec)?;
    write_json(&out.join(SCENES_FILE), &generated.scenes)?;
    write_json(&out.join(VOCAB_FILE), &generated.vocabulary)?;
    write_json(&out.join(MOTIFS_FILE), &generated.motifs)?;
    println!("wrote {} scenes over {} labels to {}", generated.scenes.len(), generated.vocabulary.num_objects(), out.display());
    Ok(())
}

pub fn derive(scenes: &Path, thresholds: Thresholds, out: &Path) -> Result<()> {
    thresholds.validate()?;
    let input = read_scenes(scenes)?;
    let derived = input
        .iter()
        .map(|s| derive_relations(s, &thresholds).with_context(|| format!("scene {}", s.scene_id)))
        .collect::<Result<Vec<_>>>()?;
    let n: usize = derived.iter().map(|s| s.relations.len()).sum();
    write_json(out, &derived)?;
    println!("derived {n} relations across {} scenes", derived.len());
    Ok(())
}

pub fn encode(scenes: &Path, vocab: &Path, out: &Path) -> Result<()> {
    let vocab = load_vocab(vocab)?;
    let input = read_scenes(scenes)?;
    let encoded = input
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(EncodedScene {
                source_index: i,
                scene_id: s.scene_id.clone(),
                category: s.category.clone(),
                vector: encode_scene(s, &vocab).with_context(|| format!("scene {}", s.scene_id))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(out, &encoded)?;
    let (v, t) = (vocab.num_objects(), vocab.num_types());
    println!("V={v} Tc={t} dimension={} ({v} + {t}*{v}^2)", implied_dimension(v, t));
    Ok(())
}

pub fn split(scenes: &Path, vocab_path: &Path, ratios: [f64; 3], seed: u64, out: &Path) -> Result<()> {
    let vocab = load_vocab(vocab_path)?;
    let input = read_scenes(scenes)?;
    let ratios = SplitRatios::new(ratios[0], ratios[1], ratios[2])?;
    let split = split_dataset(&input, &vocab, ratios, seed)?;
    write_json(&out.join(TRAIN_FILE), &split.train)?;
    write_json(&out.join(TEST_FILE), &split.test)?;
    write_json(&out.join(VALIDATION_FILE), &split.validation)?;
    write_json(&out.join(VOCAB_FILE), &vocab)?;
    if let Some(motifs) = vocab_path.parent().map(|d| d.join(MOTIFS_FILE)).filter(|p| p.exists()) {
        let table: MotifTable = read_json(&motifs)?;
        write_json(&out.join(MOTIFS_FILE), &table)?;
    }
    println!("train {} / test {} / validation {}", split.train.len(), split.test.len(), split.validation.len());
    Ok(())
}

fn num_objects(scenes: &[EncodedScene]) -> Result<usize> {
    let v = scenes.first().map(|s| s.vector.num_objects()).context("dataset is empty")?;
    if let Some(bad) = scenes.iter().find(|s| s.vector.num_objects() != v) {
        bail!("scene {} has {} labels, expected {v}", bad.scene_id, bad.vector.num_objects());
    }
    Ok(v)
}

pub fn train(cfg: &RunConfig, resume: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    let train_set = load_encoded(&cfg.data_dir.join(TRAIN_FILE))?;
    let validation = load_encoded(&cfg.data_dir.join(VALIDATION_FILE))?;
    let v = num_objects(&train_set)?;
    let seed = cfg.seed();
    let hyper = trainer::HyperParams { seed, ..cfg.hyper };
    let (start, history) = match resume {
        Some(path) => {
            let (p, h) = load_checkpoint::<f64>(path).with_context(|| format!("loading {}", path.display()))?;
            if p.config.num_objects != v {
                bail!("checkpoint has {} labels, data has {v}", p.config.num_objects);
            }
            (p, h)
        }
        None => {
            let config = cfg.model.network(v, seed)?;
            let mut p: Params = init_params(config, &mut rng::stream(seed, &[phase::INIT]))?;
            init_visible_biases(&mut p, &train_set)?;
            (p, TrainHistory::default())
        }
    };
    let first = history.len();
    let (params, history) = trainer::resume(&start, &train_set, &validation, &hyper, history, |e| {
        eprintln!(
            "epoch {:>3}  objects {:.4}  relations {:.4}  validation {:.4}",
            e.epoch, e.obj_err, e.rel_err, e.val_err
        );
    })
    .map_err(|e| match e {
        scenebm::Error::Diverged { epoch, last_good } => anyhow::anyhow!(
            "training diverged at epoch {epoch}; last good epoch {}",
            last_good.map_or("none".to_string(), |g| g.to_string())
        ),
        other => other.into(),
    })?;
    if let Some(dir) = cfg.checkpoint.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_checkpoint(&params, &history, &cfg.checkpoint).with_context(|| format!("writing {}", cfg.checkpoint.display()))?;
    write(&cfg.report_dir.join("train_log.jsonl"), history.to_json_lines())?;
    write(&cfg.report_dir.join("loss.svg"), loss_plot(&history))?;
    println!(
        "trained {} epochs (from {first}), best epoch {}; checkpoint {}",
        history.len() - first,
        history.best_epoch.map_or("-".into(), |b| b.to_string()),
        cfg.checkpoint.display()
    );
    Ok(())
}

pub fn loss_plot(history: &TrainHistory) -> String {
    let obj = history.object_errors();
    let rel = history.relation_errors();
    line_chart(
        "Reconstruction error vs. epochs",
        "reconstruction error",
        &[
            Series { label: "objects", color: "#d62728", values: &obj },
            Series { label: "relations", color: "#1f77b4", values: &rel },
        ],
    )
}

/// Files a task evaluation writes, rendered up front so that a failure
/// leaves nothing half-written.
struct Rendered(Vec<(PathBuf, String)>);

impl Rendered {
    fn report(out: &Path, stem: &str, report: &TaskReport) -> Result<Self> {
        Ok(Self(vec![
            (out.join(format!("{stem}.json")), report.to_json()? + "\n"),
            (out.join(format!("{stem}.csv")), report.to_csv()),
            (out.join(format!("{stem}.txt")), report.to_text()),
        ]))
    }

    fn flush(self) -> Result<()> {
        for (path, text) in self.0 {
            write(&path, text)?;
        }
        Ok(())
    }
}

pub struct EvalArgs<'a> {
    pub checkpoint: &'a Path,
    pub task: Task,
    pub data: &'a Path,
    pub vocab: Option<&'a Path>,
    pub motifs: Option<&'a Path>,
    pub count: usize,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn eval(cfg: &RunConfig, args: EvalArgs) -> Result<()> {
    let (params, _) = load_checkpoint::<f64>(args.checkpoint).with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let scenes = load_encoded(args.data)?;
    let v = num_objects(&scenes)?;
    if v != params.config.num_objects || scenes[0].vector.num_types() != params.config.num_types {
        bail!(
            "checkpoint expects V={} Tc={}, data {} has V={v} Tc={}",
            params.config.num_objects,
            params.config.num_types,
            args.data.display(),
            scenes[0].vector.num_types()
        );
    }
    let settings = &cfg.sampler;
    settings.validate()?;
    let report = match args.task {
        Task::Relations => tasks::task1_relation_estimation(&params, &scenes, settings, args.seed)?,
        Task::MissingObject => tasks::task2_missing_object(&params, &scenes, settings, args.seed)?,
        Task::OutOfContext => tasks::task3_out_of_context(&params, &scenes, settings, args.seed)?,
        Task::Generate => {
            let vocab_path = args.vocab.map(Path::to_path_buf).unwrap_or_else(|| sibling(args.data, VOCAB_FILE));
            let vocab = load_vocab(&vocab_path)?;
            let motif_path = args.motifs.map(Path::to_path_buf).unwrap_or_else(|| sibling(args.data, MOTIFS_FILE));
            let motifs: Option<MotifTable> = if motif_path.exists() { Some(read_json(&motif_path)?) } else { None };
            generation_by_category(&params, &scenes, &vocab, motifs.as_ref(), args.count, settings, args.seed)?
        }
    };
    let stem = format!("task{}", args.task as u8);
    Rendered::report(args.out, &stem, &report)?.flush()?;
    print!("{}", report.to_text());
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join(name)
}

/// Task 4 over every category present in `scenes`: clamp that category's
/// most characteristic hidden unit and score motif presence.
fn generation_by_category(
    params: &Params,
    scenes: &[EncodedScene],
    vocab: &Vocabulary,
    motifs: Option<&MotifTable>,
    count: usize,
    settings: &scenebm::SamplerSettings,
    seed: u64,
) -> Result<TaskReport> {
    let categories: BTreeSet<&str> = scenes.iter().map(|s| s.category.as_str()).collect();
    let mut combined: Option<TaskReport> = None;
    for cat in categories {
        let unit = category_hidden_unit(params, scenes, cat, settings, seed)?;
        let g = task4_generate(params, &GenerationSeed::Hidden(vec![unit]), count, settings, vocab, motifs.map(|m| (m, Some(cat))), seed)?;
        let mut report = g.report;
        for r in &mut report.records {
            r.scene_id = format!("{cat}/{}", r.scene_id);
        }
        match &mut combined {
            None => combined = Some(report),
            Some(c) => c.records.extend(report.records),
        }
    }
    let mut report = combined.context("no categories to generate for")?;
    report.metric = report.recompute();
    Ok(report)
}

pub struct GenerateArgs<'a> {
    pub checkpoint: &'a Path,
    pub vocab: &'a Path,
    pub hidden: Vec<usize>,
    pub objects: Vec<String>,
    pub motifs: Option<&'a Path>,
    pub category: Option<String>,
    pub count: usize,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn generate(cfg: &RunConfig, args: GenerateArgs) -> Result<()> {
    let (params, _) = load_checkpoint::<f64>(args.checkpoint).with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let vocab = load_vocab(args.vocab)?;
    let c = &params.config;
    if vocab.num_objects() != c.num_objects {
        bail!("checkpoint has {} labels, vocabulary {}", c.num_objects, vocab.num_objects());
    }
    let seed_units = if !args.objects.is_empty() {
        if !args.hidden.is_empty() {
            bail!("pass either --hidden or --objects, not both");
        }
        let ids = args.objects.iter().map(|l| vocab.id(l)).collect::<scenebm::Result<Vec<_>>>()?;
        GenerationSeed::Partial(SceneVector::new(c.num_objects, c.num_types, ids, [])?)
    } else {
        if let Some(&bad) = args.hidden.iter().find(|&&m| m >= c.hidden1) {
            bail!("hidden unit {bad} out of range (H1 = {})", c.hidden1);
        }
        GenerationSeed::Hidden(args.hidden.iter().map(|&m| Node::Hidden1(m)).collect())
    };
    let motifs: Option<MotifTable> = args.motifs.map(read_json).transpose()?;
    let g = task4_generate(
        &params,
        &seed_units,
        args.count,
        &cfg.sampler,
        &vocab,
        motifs.as_ref().map(|m| (m, args.category.as_deref())),
        args.seed,
    )?;
    let mut files = Rendered::report(args.out, "generate", &g.report)?;
    files.0.push((args.out.join("generated_scenes.json"), serde_json::to_string_pretty(&g.decoded)? + "\n"));
    files.flush()?;
    for s in g.decoded.iter().take(5) {
        let labels: Vec<&str> = s.objects.iter().map(|o| o.label.as_str()).collect();
        println!("{}: {} objects, {} relations [{}]", s.scene_id, s.objects.len(), s.relations.len(), labels.join(", "));
    }
    if motifs.is_some() {
        println!("motif presence {:.3}", g.report.metric);
    }
    Ok(())
}

/// Returns whether every check passed.
pub fn oracle_check(mutation: Mutation, quick: bool, seed: u64) -> Result<bool> {
    let budget = if quick { Budget::quick() } else { Budget::full() };
    let results = selfcheck::run_all(budget, mutation, seed)?;
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failed} failed", results.len());
    Ok(failed == 0)
}

pub fn inspect(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("format_version").is_some() {
        let ck = Checkpoint::<f64>::from_json(&text)?;
        let c = &ck.params.config;
        println!("checkpoint (format {FORMAT_VERSION})");
        println!("  model {}  V={} Tc={} H1={} H2={}", c.kind(), c.num_objects, c.num_types, c.hidden1, c.hidden2);
        println!(
            "  biases {}  rh_sharing {:?}  relation_support {:?}  T={}",
            c.use_biases, c.rh_sharing, c.relation_support, c.temperature
        );
        println!("  {} weights", ck.params.num_weights());
        if c.use_triway {
            println!("  w_tri {:?}", ck.params.w_tri.to_vec());
        }
        let h = &ck.history;
        println!("  {} epochs, best {:?}, stopped early {}", h.len(), h.best_epoch, h.stopped_early);
        if let Some(last) = h.epochs.last() {
            println!("  last epoch: objects {:.4} relations {:.4} validation {:.4}", last.obj_err, last.rel_err, last.val_err);
        }
    } else if value.get("canonical_relations").is_some() {
        let v: Vocabulary = serde_json::from_value(value)?;
        println!("vocabulary: {} labels, {} relation types, dimension {}", v.num_objects(), v.num_types(), implied_dimension(v.num_objects(), v.num_types()));
    } else if value.get("task").is_some() && value.get("records").is_some() {
        let r: TaskReport = serde_json::from_value(value)?;
        print!("{}", r.to_text());
        println!("{} scenes scored, {} skipped", r.records.len(), r.skipped.len());
    } else if let Some(first) = value.as_array().and_then(|a| a.first()) {
        let n = value.as_array().map_or(0, Vec::len);
        if first.get("vector").is_some() {
            let scenes: Vec<EncodedScene> = serde_json::from_value(value)?;
            let v = num_objects(&scenes)?;
            let objs: usize = scenes.iter().map(|s| s.vector.objects().len()).sum();
            let rels: usize = scenes.iter().map(|s| s.vector.relations().len()).sum();
            let cats: BTreeSet<&str> = scenes.iter().map(|s| s.category.as_str()).collect();
            println!("encoded scenes: {n}, V={v}, {} categories", cats.len());
            println!("  mean {:.2} objects, {:.2} relations per scene", objs as f64 / n as f64, rels as f64 / n as f64);
        } else {
            let scenes: Vec<SceneInstance> = serde_json::from_value(value)?;
            let cats: BTreeSet<&str> = scenes.iter().map(|s| s.category.as_str()).collect();
            let rels: usize = scenes.iter().map(|s| s.relations.len()).sum();
            println!("scenes: {n}, {} categories, {rels} raw relations", cats.len());
        }
    } else {
        bail!("{}: not a recognized artifact", path.display());
    }
    Ok(())
}
