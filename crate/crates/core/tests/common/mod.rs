#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use topeval_core::corpus::{build_vocabulary, load_corpus, Corpus, CorpusFormat, Vocabulary};
use topeval_core::embeddings::{load_embeddings, EmbeddingTable};
use topeval_core::model_io::{load_model_dir, TopicModel};
use topeval_core::taskgen::{task_generators, GenContext, Generated, SamplingPlan};

pub const FIXTURE_MIN_SENTENCE_FREQ: u64 = 5;
pub const SEED: u64 = 7;

pub fn fixtures_dir() -> PathBuf {
    // resolves from either crate in the workspace
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub struct Fixture {
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    pub table: EmbeddingTable,
    pub models: Vec<TopicModel>,
}

pub fn fixture() -> Fixture {
    let dir = fixtures_dir();
    let corpus = load_corpus(&dir.join("corpus.txt"), CorpusFormat::Lines).unwrap();
    let vocab = build_vocabulary(&corpus, FIXTURE_MIN_SENTENCE_FREQ);
    let table = load_embeddings(&dir.join("embeddings.txt")).unwrap();
    let models = load_model_dir(&dir.join("models")).unwrap();
    Fixture {
        corpus,
        vocab,
        table,
        models,
    }
}

impl Fixture {
    pub fn generate(&self, kind: &str, plan: SamplingPlan, seed: u64) -> Generated {
        let mut ctx = GenContext::new(seed);
        ctx.vocab = Some(&self.vocab);
        ctx.embeddings = Some(&self.table);
        ctx.plan = plan;
        let gens = task_generators();
        let g = gens.get(kind).unwrap();
        let mut out = Generated::default();
        for m in &self.models {
            out.extend(g.generate(m, &ctx).unwrap());
        }
        out
    }
}

pub fn docs(fx: &Fixture) -> Vec<Vec<String>> {
    fx.corpus
        .documents()
        .iter()
        .map(|d| d.tokens.clone())
        .collect()
}

/// Corpus frequencies of the words kept at the fixture threshold, counted
/// without the library.
pub fn retained_freq(fx: &Fixture) -> HashMap<String, u64> {
    let docs = docs(fx);
    let df = crate::oracles::doc_freq(&docs);
    crate::oracles::token_freq(&docs)
        .into_iter()
        .filter(|(w, _)| df[w] >= FIXTURE_MIN_SENTENCE_FREQ)
        .collect()
}

pub fn read_vectors() -> HashMap<String, Vec<f64>> {
    let text = std::fs::read_to_string(fixtures_dir().join("embeddings.txt")).unwrap();
    text.lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            let w = it.next()?.to_string();
            let v: Vec<f64> = it.map(|x| x.parse().unwrap()).collect();
            (v.len() > 1).then_some((w, v))
        })
        .collect()
}

/// Tasks expected under the default plan: everything at small K, otherwise
/// the rounded share.
pub fn expected_share(k: usize, full: usize, fraction: f64) -> usize {
    if k <= 15 {
        full
    } else {
        ((fraction * full as f64).round() as usize).max(1)
    }
}
