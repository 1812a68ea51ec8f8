use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use topeval_core::corpus::{
    build_vocabulary, load_corpus, Corpus, CorpusFormat, Vocabulary, WindowCounter,
};
use topeval_core::embeddings::{load_embeddings, EmbeddingTable};
use topeval_core::metrics::{
    cv_model, metric_report, CoherenceConfig, MetricReport, DEFAULT_EPSILON,
};
use topeval_core::model_io::{load_model, load_model_dir, TopicModel};
use topeval_core::scoring::{load_annotations, score, write_annotations, ScoreConfig, ScoreReport};
use topeval_core::synth::simulate_annotations;
use topeval_core::taskgen::bundle::read_bundle;
use topeval_core::taskgen::{
    assemble_bundle, bundle_exporters, task_generators, GenContext, Generated, SamplingPlan,
    SkipRecord, TaskKind,
};
use topeval_core::{Error, Result, VERSION};

use crate::args::{
    AnnotatedArgs, CorpusArgs, CorpusFormatArg, ExportArgs, GenArgs, IngestArgs, MetricsArgs,
    ScoreArgs, SimulateArgs,
};
use crate::settings::{set, Settings};

const SCHEMA_VERSION: u32 = 1;

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_text(path, &(text + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// File name only, so outputs do not depend on where inputs live.
fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_corpus_arg(args: &CorpusArgs) -> Result<(Corpus, PathBuf)> {
    let path = args
        .corpus
        .clone()
        .ok_or_else(|| Error::InvalidArgument("--corpus is required".into()))?;
    let format = match args.corpus_format {
        Some(CorpusFormatArg::Lines) => CorpusFormat::Lines,
        Some(CorpusFormatArg::Jsonl) => CorpusFormat::JsonLines,
        None => CorpusFormat::from_path(&path),
    };
    Ok((load_corpus(&path, format)?, path))
}

fn vocabulary(corpus: &Corpus, s: &Settings) -> Vocabulary {
    let vocab = build_vocabulary(corpus, s.min_sentence_freq);
    for w in vocab.warnings() {
        log::warn!("vocabulary: {w}");
    }
    vocab
}

fn load_models(paths: &[PathBuf]) -> Result<Vec<TopicModel>> {
    let mut models = Vec::new();
    for p in paths {
        if p.is_dir() {
            models.extend(load_model_dir(p)?);
        } else {
            models.push(load_model(p)?);
        }
    }
    let mut ids = HashSet::new();
    if let Some(dup) = models
        .iter()
        .find(|m| !ids.insert(m.model_id().to_string()))
    {
        return Err(Error::InvalidArgument(format!(
            "model id {:?} given twice",
            dup.model_id()
        )));
    }
    if models.is_empty() {
        return Err(Error::InvalidArgument("no models found".into()));
    }
    Ok(models)
}

pub fn ingest(args: &IngestArgs, mut s: Settings) -> Result<()> {
    set(&mut s.min_sentence_freq, args.corpus.min_sentence_freq);
    let (corpus, _) = load_corpus_arg(&args.corpus)?;
    let vocab = vocabulary(&corpus, &s);
    ensure_dir(&s.out_dir)?;
    write_json(&s.out_dir.join("vocabulary.json"), &vocab.to_file())?;
    println!(
        "{} documents, {} tokens, {} vocabulary words",
        corpus.len(),
        corpus.token_count(),
        vocab.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    schema_version: u32,
    toolkit_version: &'static str,
    corpus: String,
    vocabulary_size: usize,
    total_windows: u64,
    settings: &'a Settings,
    models: Vec<MetricReport>,
}

fn coherence_config(s: &Settings) -> CoherenceConfig {
    CoherenceConfig {
        top_n: s.top_n,
        window_size: s.window_size,
        epsilon: DEFAULT_EPSILON,
        include_self: s.include_self,
    }
}

/// Window counts restricted to the words the models' top-N lists use.
fn model_counts(
    corpus: &Corpus,
    vocab: &Vocabulary,
    models: &[TopicModel],
    cfg: &CoherenceConfig,
) -> Result<topeval_core::corpus::WindowCounts> {
    cfg.validate()?;
    let mut ids = Vec::new();
    for m in models {
        for t in 0..m.k() {
            let n = cfg.top_n.min(m.ranking_len(t));
            ids.extend(m.top_words(t, n)?.iter().filter_map(|w| vocab.id(w)));
        }
    }
    WindowCounter::new(cfg.window_size)?
        .track_only(vocab.len(), ids)
        .count(corpus, vocab)
}

pub fn metrics(args: &MetricsArgs, mut s: Settings) -> Result<()> {
    set(&mut s.min_sentence_freq, args.corpus.min_sentence_freq);
    set(&mut s.window_size, args.window_size);
    set(&mut s.top_n, args.top_n);
    if args.exclude_self {
        s.include_self = false;
    }
    let (corpus, corpus_path) = load_corpus_arg(&args.corpus)?;
    let models = load_models(&args.models)?;
    let vocab = vocabulary(&corpus, &s);
    let cfg = coherence_config(&s);
    let counts = model_counts(&corpus, &vocab, &models, &cfg)?;
    let reports: Vec<MetricReport> = models
        .iter()
        .map(|m| metric_report(&counts, &vocab, m, &cfg))
        .collect::<Result<_>>()?;

    ensure_dir(&s.out_dir)?;
    let mut csv =
        String::from("model_id,family,granularity_label,k,cv_mean,cv_mean_rescaled,diversity\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.model_id,
            r.family,
            r.granularity_label,
            r.k,
            r.cv_mean,
            r.cv_mean_rescaled,
            r.diversity
        ));
    }
    write_json(
        &s.out_dir.join("metrics.json"),
        &MetricsFile {
            schema_version: SCHEMA_VERSION,
            toolkit_version: VERSION,
            corpus: file_label(&corpus_path),
            vocabulary_size: vocab.len(),
            total_windows: counts.total_windows(),
            settings: &s,
            models: reports,
        },
    )?;
    write_text(&s.out_dir.join("metrics.csv"), &csv)
}

/// Per-topic C_V from a `metrics.json`.
fn read_quality(path: &Path) -> Result<BTreeMap<String, Vec<Option<f64>>>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let v: Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = || Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "expected the output of `topeval metrics`".into(),
    };
    let mut out = BTreeMap::new();
    for m in v["models"].as_array().ok_or_else(bad)? {
        let id = m["model_id"].as_str().ok_or_else(bad)?;
        let cv = m["per_topic_cv"]
            .as_array()
            .ok_or_else(bad)?
            .iter()
            .map(Value::as_f64)
            .collect();
        out.insert(id.to_string(), cv);
    }
    Ok(out)
}

#[derive(Default, Serialize)]
struct KindCounts {
    regular: usize,
    controls: usize,
}

#[derive(Serialize)]
struct GenerationReport<'a> {
    schema_version: u32,
    toolkit_version: &'static str,
    bundle_id: String,
    kinds: Vec<TaskKind>,
    settings: &'a Settings,
    corpus: Option<String>,
    embeddings: Option<String>,
    models: Vec<String>,
    tasks: usize,
    per_model: BTreeMap<String, BTreeMap<TaskKind, KindCounts>>,
    per_track: Vec<usize>,
    skipped: Vec<SkipRecord>,
    notes: Vec<String>,
}

pub fn generate(kinds: &[TaskKind], args: &GenArgs, mut s: Settings) -> Result<()> {
    set(&mut s.min_sentence_freq, args.corpus.min_sentence_freq);
    set(&mut s.window_size, args.window_size);
    set(&mut s.sampling, args.sampling.clone());
    set(&mut s.controls, args.controls);
    set(&mut s.tracks, args.tracks);
    set(&mut s.topic_embed_topn, args.topic_embed_topn);
    set(&mut s.format, args.format.clone());
    let plan: SamplingPlan = s.sampling.parse()?;
    let exporters = bundle_exporters();
    let exporter = exporters.get(&s.format)?;
    let generators = task_generators();

    let models = load_models(&args.models)?;
    let needs_vocab = kinds.contains(&TaskKind::Twi);
    let corpus = match (&args.corpus.corpus, needs_vocab) {
        (None, false) => None,
        _ => Some(load_corpus_arg(&args.corpus)?),
    };
    let vocab = corpus.as_ref().map(|(c, _)| vocabulary(c, &s));
    let table: Option<EmbeddingTable> = args
        .embeddings
        .as_deref()
        .map(load_embeddings)
        .transpose()?;

    let quality = match (&args.metrics, &corpus, &vocab) {
        (Some(p), _, _) => Some(read_quality(p)?),
        (None, Some((c, _)), Some(v)) if kinds.contains(&TaskKind::Twm) => {
            let cfg = coherence_config(&s);
            let counts = model_counts(c, v, &models, &cfg)?;
            let mut q = BTreeMap::new();
            for m in &models {
                q.insert(
                    m.model_id().to_string(),
                    cv_model(&counts, v, m, &cfg)?.per_topic,
                );
            }
            Some(q)
        }
        _ => None,
    };

    let mut ctx = GenContext::new(s.seed);
    ctx.vocab = vocab.as_ref();
    ctx.embeddings = table.as_ref();
    ctx.plan = plan;
    ctx.controls_per_model = s.controls;
    ctx.topic_quality = quality.as_ref();
    ctx.topic_embed_top_n = s.topic_embed_topn;

    let mut all = Generated::default();
    for kind in kinds {
        let generator = generators.get(kind.as_str())?;
        for m in &models {
            all.extend(generator.generate(m, &ctx)?);
        }
    }
    for n in &all.notes {
        log::info!("{n}");
    }

    let name = args.name.clone().unwrap_or_else(|| match kinds {
        [k] => k.as_str().to_string(),
        _ => "campaign".to_string(),
    });
    let mut per_model: BTreeMap<String, BTreeMap<TaskKind, KindCounts>> = BTreeMap::new();
    for t in &all.tasks {
        let c = per_model
            .entry(t.model_id().to_string())
            .or_default()
            .entry(t.kind())
            .or_default();
        if t.is_control() {
            c.controls += 1;
        } else {
            c.regular += 1;
        }
    }
    let n_tasks = all.tasks.len();
    let bundle = assemble_bundle(all.tasks, s.tracks, s.seed, &name)?;
    ensure_dir(&s.out_dir)?;
    for p in exporter.export(&bundle, &s.out_dir, &name)? {
        println!("wrote {}", p.display());
    }
    let report = GenerationReport {
        schema_version: SCHEMA_VERSION,
        toolkit_version: VERSION,
        bundle_id: name.clone(),
        kinds: kinds.to_vec(),
        settings: &s,
        corpus: corpus.as_ref().map(|(_, p)| file_label(p)),
        embeddings: args.embeddings.as_deref().map(file_label),
        models: models.iter().map(|m| m.model_id().to_string()).collect(),
        tasks: n_tasks,
        per_model,
        per_track: bundle.tracks.iter().map(Vec::len).collect(),
        skipped: all.skipped,
        notes: all.notes,
    };
    write_json(&s.out_dir.join(format!("{name}.generation.json")), &report)?;
    println!("{n_tasks} tasks in {} tracks", bundle.n_tracks());
    Ok(())
}

pub fn export(args: &ExportArgs, mut s: Settings) -> Result<()> {
    set(&mut s.format, args.format.clone());
    let bundle = read_bundle(&args.bundle.bundle, &args.bundle.key)?;
    let name = args
        .name
        .clone()
        .unwrap_or_else(|| bundle.bundle_id.clone());
    let exporters = bundle_exporters();
    ensure_dir(&s.out_dir)?;
    for p in exporters
        .get(&s.format)?
        .export(&bundle, &s.out_dir, &name)?
    {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn score_annotated(
    args: &AnnotatedArgs,
    s: &mut Settings,
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    set(&mut s.annotation_format, args.annotation_format.clone());
    let bundle = read_bundle(&args.bundle.bundle, &args.bundle.key)?;
    let records = load_annotations(&args.annotations, &s.annotation_format)?;
    score(&records, &bundle, cfg)
}

pub fn score_cmd(args: &ScoreArgs, mut s: Settings) -> Result<()> {
    set(&mut s.bootstrap, args.bootstrap);
    set(&mut s.ci_level, args.ci_level);
    let cfg = ScoreConfig {
        seed: s.seed,
        bootstrap_replicates: s.bootstrap,
        ci_level: s.ci_level,
        regression_unit: if args.task_level_regression {
            topeval_core::scoring::RegressionUnit::Task
        } else {
            topeval_core::scoring::RegressionUnit::Annotation
        },
    };
    let report = score_annotated(&args.annotated, &mut s, &cfg)?;
    ensure_dir(&s.out_dir)?;
    write_json(&s.out_dir.join("score.json"), &report)?;
    write_text(&s.out_dir.join("score.csv"), &report.to_csv()?)?;
    for (kind, k) in [("twi", &report.twi), ("twm", &report.twm)] {
        if let Some(k) = k {
            println!(
                "{kind}: {} tasks, {} annotations",
                k.n_tasks, k.n_annotations
            );
            for (family, g) in &k.per_family {
                println!(
                    "  {family:<12} {} {:.3} [{:.3}, {:.3}]",
                    k.metric, g.value, g.ci_low, g.ci_high
                );
            }
        }
    }
    Ok(())
}

pub fn agreement(args: &AnnotatedArgs, mut s: Settings) -> Result<()> {
    let cfg = ScoreConfig {
        seed: s.seed,
        bootstrap_replicates: 0,
        ..ScoreConfig::default()
    };
    let report = score_annotated(args, &mut s, &cfg)?;
    let out = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": VERSION,
        "bundle_id": report.bundle_id,
        "twi": report.twi.as_ref().and_then(|k| k.agreement.as_ref()),
        "twm": report.twm.as_ref().and_then(|k| k.agreement.as_ref()),
    });
    ensure_dir(&s.out_dir)?;
    write_json(&s.out_dir.join("agreement.json"), &out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("plain JSON")
    );
    Ok(())
}

pub fn simulate(args: &SimulateArgs, s: Settings) -> Result<()> {
    let bundle = read_bundle(&args.bundle.bundle, &args.bundle.key)?;
    let records = simulate_annotations(&bundle, args.annotators, s.seed);
    ensure_dir(&s.out_dir)?;
    let path = s.out_dir.join("annotations.json");
    write_annotations(&path, &records)?;
    println!("wrote {} ({} annotations)", path.display(), records.len());
    Ok(())
}
