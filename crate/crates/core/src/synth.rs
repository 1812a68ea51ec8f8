//! Seeded synthetic corpora for benchmarks and test fixtures.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, WeightedIndex, Zipf};

use crate::corpus::{Corpus, Document};
use crate::model_io::TopicModel;
use crate::scoring::{AnnotationRecord, Response};
use crate::seed::SeedStream;
use crate::taskgen::{Task, TaskBundle};

/// Zipf-distributed tokens `w0 .. w{vocab_size-1}` split into documents of
/// `doc_len` tokens (the last document may be shorter).
pub fn zipf_corpus(
    n_tokens: usize,
    vocab_size: usize,
    doc_len: usize,
    exponent: f64,
    seed: u64,
) -> Corpus {
    let mut rng = SeedStream::new(seed).rng("synth/zipf");
    let zipf = Zipf::new(vocab_size as u64, exponent).expect("valid zipf parameters");
    let names: Vec<String> = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let mut docs = Vec::with_capacity(n_tokens / doc_len.max(1) + 1);
    let mut remaining = n_tokens;
    while remaining > 0 {
        let len = remaining.min(doc_len.max(1));
        let tokens = (0..len)
            .map(|_| names[zipf.sample(&mut rng) as usize - 1].clone())
            .collect();
        docs.push(Document {
            id: format!("doc-{}", docs.len()),
            tokens,
            sentences: None,
        });
        remaining -= len;
    }
    Corpus::new(docs).expect("generated corpus is non-empty")
}

/// Uniform random documents over a small alphabet `w0..`, lengths in
/// `min_len..=max_len`.
pub fn uniform_docs(
    n_docs: usize,
    alphabet: usize,
    min_len: usize,
    max_len: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<String>> {
    (0..n_docs)
        .map(|_| {
            let len = rng.gen_range(min_len..=max_len);
            (0..len)
                .map(|_| format!("w{}", rng.gen_range(0..alphabet)))
                .collect()
        })
        .collect()
}

/// Shape of the synthetic evaluation campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub themes: usize,
    pub words_per_theme: usize,
    pub background_words: usize,
    pub docs: usize,
    pub doc_len: usize,
    pub embedding_dim: usize,
    pub families: Vec<String>,
    pub ks: Vec<usize>,
    /// Ranking length of every topic; a multiple of `words_per_theme`.
    pub ranking_len: usize,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            themes: 60,
            words_per_theme: 12,
            background_words: 100,
            docs: 600,
            doc_len: 60,
            embedding_dim: 16,
            families: ["lda", "nmf", "top2vec", "bertopic", "cfmf", "cfmf-emb"]
                .map(String::from)
                .to_vec(),
            ks: vec![10, 25, 50],
            ranking_len: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub corpus: Corpus,
    pub models: Vec<TopicModel>,
    /// `(word, vector)` in a fixed order.
    pub embeddings: Vec<(String, Vec<f64>)>,
}

pub fn theme_word(theme: usize, i: usize) -> String {
    format!("t{theme}w{i}")
}

pub fn background_word(i: usize) -> String {
    format!("bg{i}")
}

/// Themed corpus, topic models and word vectors.
///
/// Documents mix a primary theme (half the tokens), a secondary theme and
/// background words; theme words follow a 1/sqrt(rank) profile. A topic's
/// ranking is its theme's words followed by blocks borrowed from other
/// topics of the same model. Theme vectors come in clusters of three so
/// that confusable topic pairs exist.
pub fn campaign(spec: &CampaignSpec, seed: u64) -> Campaign {
    let seeds = SeedStream::new(seed).child("campaign");
    let wpt = spec.words_per_theme;

    let weights: Vec<f64> = (0..wpt).map(|i| 1.0 / ((i + 1) as f64).sqrt()).collect();
    let theme_dist = WeightedIndex::new(&weights).expect("positive weights");
    let mut rng = seeds.rng("corpus");
    let mut docs = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let primary = d % spec.themes;
        let secondary = (primary + 1 + rng.gen_range(0..spec.themes - 1)) % spec.themes;
        let tokens: Vec<String> = (0..spec.doc_len)
            .map(|_| {
                let u: f64 = rng.gen();
                if u < 0.5 {
                    theme_word(primary, theme_dist.sample(&mut rng))
                } else if u < 0.7 {
                    theme_word(secondary, theme_dist.sample(&mut rng))
                } else {
                    background_word(rng.gen_range(0..spec.background_words))
                }
            })
            .collect();
        docs.push(Document {
            id: format!("doc-{d}"),
            tokens,
            sentences: None,
        });
    }
    let corpus = Corpus::new(docs).expect("non-empty corpus");

    let blocks = spec.ranking_len / wpt;
    let mut models = Vec::new();
    for family in &spec.families {
        for &k in &spec.ks {
            let label = format!("{family}-k{k}");
            let mut rng = seeds.rng(&format!("model/{label}"));
            let themes: Vec<usize> = sample(&mut rng, spec.themes, k).into_vec();
            let topics = (0..k)
                .map(|t| {
                    let others: Vec<usize> = (0..k).filter(|&o| o != t).collect();
                    let mut ranking: Vec<String> =
                        (0..wpt).map(|i| theme_word(themes[t], i)).collect();
                    for o in others.choose_multiple(&mut rng, blocks - 1) {
                        ranking.extend((0..wpt).map(|i| theme_word(themes[*o], i)));
                    }
                    ranking
                })
                .collect();
            models.push(
                TopicModel::new(label, family.clone(), format!("K={k}"), topics)
                    .expect("valid synthetic model"),
            );
        }
    }

    let dim = spec.embedding_dim;
    let mut rng = seeds.rng("embeddings");
    let gaussian = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
        (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            })
            .collect()
    };
    let clusters: Vec<Vec<f64>> = (0..spec.themes.div_ceil(3))
        .map(|_| gaussian(&mut rng, 1.0))
        .collect();
    let mut embeddings = Vec::new();
    for theme in 0..spec.themes {
        let offset = gaussian(&mut rng, 0.6);
        let center: Vec<f64> = clusters[theme / 3]
            .iter()
            .zip(&offset)
            .map(|(c, o)| c + o)
            .collect();
        for i in 0..wpt {
            let noise = gaussian(&mut rng, 0.3);
            embeddings.push((
                theme_word(theme, i),
                center.iter().zip(&noise).map(|(c, n)| c + n).collect(),
            ));
        }
    }
    for i in 0..spec.background_words {
        embeddings.push((background_word(i), gaussian(&mut rng, 1.0)));
    }
    Campaign {
        corpus,
        models,
        embeddings,
    }
}

/// Whitespace embedding text with a `count dim` header.
pub fn embeddings_text(entries: &[(String, Vec<f64>)]) -> String {
    let dim = entries.first().map_or(0, |e| e.1.len());
    let mut out = format!("{} {dim}\n", entries.len());
    for (w, v) in entries {
        out.push_str(w);
        for x in v {
            out.push_str(&format!(" {x:.6}"));
        }
        out.push('\n');
    }
    out
}

/// Seeded simulated annotators. A TWI answer is right with probability
/// `0.95 - 0.6 * intruder_similarity` (clamped to [0.05, 0.95]), a TWM answer
/// with probability 0.8, a control with 0.97. Wrong TWI answers are uniform
/// over the head words.
pub fn simulate_annotations(
    bundle: &TaskBundle,
    annotators: usize,
    seed: u64,
) -> Vec<AnnotationRecord> {
    let seeds = SeedStream::new(seed).child("simulate");
    let mut out = Vec::with_capacity(bundle.tasks.len() * annotators);
    for task in &bundle.tasks {
        for a in 0..annotators {
            let mut rng = seeds.rng(&format!("{}/{a}", task.task_id()));
            let response = match task {
                Task::Twi(t) => {
                    let p = if t.is_control {
                        0.97
                    } else {
                        (0.95 - 0.6 * t.intruder_similarity.unwrap_or(0.5)).clamp(0.05, 0.95)
                    };
                    let word = if rng.gen_bool(p) {
                        t.intruder()
                    } else {
                        &t.head_words[rng.gen_range(0..t.head_words.len())]
                    };
                    Response::Word(word.to_string())
                }
                Task::Twm(t) => {
                    let p = if t.is_control { 0.97 } else { 0.8 };
                    let label = if rng.gen_bool(p) {
                        t.label
                    } else {
                        3 - t.label
                    };
                    Response::Class(i64::from(label))
                }
            };
            out.push(AnnotationRecord::new(
                task.task_id(),
                format!("annotator-{a}"),
                response,
            ));
        }
    }
    out
}
