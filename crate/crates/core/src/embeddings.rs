//! Precomputed word vectors, topic embeddings and confusable topic pairs.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_io::{TopicModel, TopicRef};

pub const DEFAULT_TOPIC_EMBED_TOP_N: usize = 50;

/// Word -> dense vector. All vectors share one dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    warnings: Vec<String>,
}

impl EmbeddingTable {
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut table = Self {
            dim,
            index: HashMap::new(),
            data: Vec::new(),
            warnings: Vec::new(),
        };
        for (line, (word, v)) in entries.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    line: line + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::NonNumeric {
                    line: line + 1,
                    value: bad.to_string(),
                });
            }
            table.insert(word, &v);
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, v: &[f64]) {
        match self.index.get(&word) {
            Some(&row) => {
                log::warn!("duplicate embedding for {word:?}; keeping the last one");
                self.warnings.push(format!("duplicate word {word:?}"));
                self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(v);
            }
            None => {
                self.index.insert(word, self.data.len() / self.dim.max(1));
                self.data.extend_from_slice(v);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        let row = *self.index.get(word)?;
        Some(&self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Parses `word v1 .. v_dim` lines, with an optional leading `N dim` header.
pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let mut dim = None;
    if let Some((_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split_whitespace().collect();
        if fields.len() == 2 {
            if let (Ok(_), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                dim = Some(d);
                lines.next();
            }
        }
    }
    let mut table: Option<EmbeddingTable> = None;
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap_or_default().to_string();
        let mut v = Vec::new();
        for f in fields {
            let x: f64 = f.parse().map_err(|_| Error::NonNumeric {
                line: lineno,
                value: f.to_string(),
            })?;
            if !x.is_finite() {
                return Err(Error::NonNumeric {
                    line: lineno,
                    value: f.to_string(),
                });
            }
            v.push(x);
        }
        let expected = *dim.get_or_insert(v.len());
        if v.len() != expected || expected == 0 {
            return Err(Error::DimensionMismatch {
                line: lineno,
                expected,
                found: v.len(),
            });
        }
        table
            .get_or_insert_with(|| EmbeddingTable {
                dim: expected,
                index: HashMap::new(),
                data: Vec::new(),
                warnings: Vec::new(),
            })
            .insert(word, &v);
    }
    Ok(table.unwrap_or(EmbeddingTable {
        dim: dim.unwrap_or(0),
        index: HashMap::new(),
        data: Vec::new(),
        warnings: Vec::new(),
    }))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text).map_err(|e| match e {
        Error::DimensionMismatch { .. } | Error::NonNumeric { .. } => Error::Parse {
            path: path.to_path_buf(),
            line: match &e {
                Error::DimensionMismatch { line, .. } | Error::NonNumeric { line, .. } => *line,
                _ => 0,
            },
            message: e.to_string(),
        },
        other => other,
    })
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicEmbedding {
    pub topic: TopicRef,
    pub vector: Vec<f64>,
    pub covered: usize,
    pub missing: Vec<String>,
}

/// Mean vector of the topic's top `top_n` words that have an embedding.
pub fn topic_embedding(
    model: &TopicModel,
    topic_index: usize,
    table: &EmbeddingTable,
    top_n: usize,
) -> Result<TopicEmbedding> {
    let n = top_n.min(model.ranking_len(topic_index)).max(1);
    let words = model.top_words(topic_index, n)?;
    let mut sum = vec![0.0; table.dim()];
    let mut covered = 0;
    let mut missing = Vec::new();
    for w in words {
        match table.get(w) {
            Some(v) => {
                covered += 1;
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
            }
            None => missing.push(w.clone()),
        }
    }
    if covered == 0 {
        return Err(Error::ZeroCoverage(format!(
            "topic {topic_index} of model {}",
            model.model_id()
        )));
    }
    if !missing.is_empty() {
        log::warn!(
            "model {} topic {topic_index}: {} of {n} top words lack embeddings",
            model.model_id(),
            missing.len()
        );
    }
    let c = covered as f64;
    sum.iter_mut().for_each(|s| *s /= c);
    Ok(TopicEmbedding {
        topic: model.topic_ref(topic_index),
        vector: sum,
        covered,
        missing,
    })
}

pub fn topic_embeddings(
    model: &TopicModel,
    table: &EmbeddingTable,
    top_n: usize,
) -> Result<Vec<TopicEmbedding>> {
    (0..model.k())
        .map(|t| topic_embedding(model, t, table, top_n))
        .collect()
}

/// Symmetric matrix of pairwise topic cosines (diagonal 1).
pub fn similarity_matrix(embeddings: &[TopicEmbedding]) -> Result<Vec<Vec<f64>>> {
    let k = embeddings.len();
    let mut sim = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let s = cosine(&embeddings[i].vector, &embeddings[j].vector)?;
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    Ok(sim)
}

/// An unordered topic pair, `first < second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopicPair {
    pub first: usize,
    pub second: usize,
    pub similarity: f64,
}

/// For each topic, its most similar accepted partner (ties to the lower
/// index), as unordered pairs sorted by similarity descending then index.
/// Topics whose every partner is rejected by `accept` contribute no pair.
pub fn best_partner_pairs(
    sim: &[Vec<f64>],
    accept: impl Fn(usize, usize) -> bool,
) -> Vec<TopicPair> {
    let k = sim.len();
    let mut pairs: Vec<TopicPair> = Vec::new();
    for i in 0..k {
        let mut best: Option<usize> = None;
        for j in (0..k).filter(|&j| j != i && accept(i, j)) {
            if best.is_none_or(|b| sim[i][j] > sim[i][b]) {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            let (first, second) = (i.min(j), i.max(j));
            if !pairs.iter().any(|p| p.first == first && p.second == second) {
                pairs.push(TopicPair {
                    first,
                    second,
                    similarity: sim[first][second],
                });
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.first.cmp(&b.first))
            .then(a.second.cmp(&b.second))
    });
    pairs
}

pub fn most_similar_pairs(
    model: &TopicModel,
    table: &EmbeddingTable,
    top_n: usize,
) -> Result<Vec<TopicPair>> {
    if model.k() < 2 {
        return Err(Error::TooFewTopics(model.k()));
    }
    let embs = topic_embeddings(model, table, top_n)?;
    Ok(best_partner_pairs(&similarity_matrix(&embs)?, |_, _| true))
}

/// Mean cosine between the intruder and each head word that has a vector.
pub fn intruder_head_similarity(
    head: &[String],
    intruder: &str,
    table: &EmbeddingTable,
) -> Result<f64> {
    let iv = table
        .get(intruder)
        .ok_or_else(|| Error::ZeroCoverage(format!("intruder {intruder:?}")))?;
    let mut total = 0.0;
    let mut n = 0usize;
    for w in head {
        if let Some(hv) = table.get(w) {
            total += cosine(hv, iv)?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::ZeroCoverage("every head word".into()));
    }
    Ok(total / n as f64)
}
