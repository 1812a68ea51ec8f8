//! Tokenized corpora, vocabulary filtering and boolean sliding-window counts.
//!
//! A window is a run of `s` consecutive token positions inside one document
//! (step 1, never crossing a document boundary). A document shorter than `s`
//! is a single window. Counts are boolean: a word contributes at most once to
//! each window, however many times it occurs there.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

/// Sentinel id for tokens outside the retained vocabulary.
pub const OOV: u32 = u32::MAX;

pub const DEFAULT_MIN_SENTENCE_FREQ: u64 = 50;
pub const DEFAULT_WINDOW_SIZE: usize = 110;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    /// Sentence segmentation, when the source provides one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for (index, doc) in documents.iter().enumerate() {
            if doc.tokens.is_empty() {
                return Err(Error::EmptyDocument { index });
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateDocId {
                    index,
                    id: doc.id.clone(),
                });
            }
        }
        Ok(Self { documents })
    }

    /// Builds a corpus from bare token lists, naming documents `doc-<index>`.
    pub fn from_tokens<I, D, S>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            docs.into_iter()
                .enumerate()
                .map(|(i, toks)| Document {
                    id: format!("doc-{i}"),
                    tokens: toks.into_iter().map(Into::into).collect(),
                    sentences: None,
                })
                .collect(),
        )
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// One document per line, whitespace tokenized.
    Lines,
    /// JSON objects `{"id", "tokens", "sentences"?}`, one per line.
    JsonLines,
}

impl CorpusFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorpusFormat::Lines => "lines",
            CorpusFormat::JsonLines => "jsonl",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => CorpusFormat::JsonLines,
            _ => CorpusFormat::Lines,
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lines" | "text" => Ok(CorpusFormat::Lines),
            "jsonl" | "json-lines" => Ok(CorpusFormat::JsonLines),
            other => Err(Error::UnknownName {
                kind: "corpus format",
                name: other.to_string(),
                available: "jsonl, lines".into(),
            }),
        }
    }
}

pub trait CorpusReader: Named + Send + Sync {
    fn parse(&self, path: &Path, text: &str) -> Result<Vec<Document>>;
}

pub struct LinesReader;

impl Named for LinesReader {
    fn name(&self) -> &'static str {
        "lines"
    }
}

impl CorpusReader for LinesReader {
    fn parse(&self, _path: &Path, text: &str) -> Result<Vec<Document>> {
        let mut docs = Vec::new();
        for (index, line) in text.lines().enumerate() {
            let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if tokens.is_empty() {
                return Err(Error::EmptyDocument { index });
            }
            docs.push(Document {
                id: format!("doc-{index}"),
                tokens,
                sentences: None,
            });
        }
        Ok(docs)
    }
}

pub struct JsonLinesReader;

impl Named for JsonLinesReader {
    fn name(&self) -> &'static str {
        "jsonl"
    }
}

#[derive(Deserialize)]
struct JsonDoc {
    id: String,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    sentences: Option<Vec<Vec<String>>>,
}

impl CorpusReader for JsonLinesReader {
    fn parse(&self, path: &Path, text: &str) -> Result<Vec<Document>> {
        let mut docs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: JsonDoc = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
            let tokens = match (raw.tokens, &raw.sentences) {
                (Some(t), _) => t,
                (None, Some(s)) => s.concat(),
                (None, None) => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        message: "missing \"tokens\" field".into(),
                    })
                }
            };
            docs.push(Document {
                id: raw.id,
                tokens,
                sentences: raw.sentences,
            });
        }
        Ok(docs)
    }
}

pub fn corpus_readers() -> Registry<dyn CorpusReader> {
    Registry::<dyn CorpusReader>::new("corpus format")
        .with(Box::new(LinesReader))
        .with(Box::new(JsonLinesReader))
}

pub fn parse_corpus(path: &Path, text: &str, format: CorpusFormat) -> Result<Corpus> {
    let docs = corpus_readers().get(format.as_str())?.parse(path, text)?;
    Corpus::new(docs)
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(path, &text, format)
}

/// What one unit of `sentence_freq` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyUnit {
    Sentence,
    /// No segmentation was available; each document counts as one sentence.
    Document,
    /// Some documents carried sentences, the rest counted as one each.
    Mixed,
}

pub const WARN_EMPTY_VOCABULARY: &str = "EMPTY_VOCABULARY";

#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
    corpus_freq: Vec<u64>,
    sentence_freq: Vec<u64>,
    min_sentence_freq: u64,
    unit: FrequencyUnit,
    warnings: Vec<String>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn corpus_freq(&self, id: u32) -> u64 {
        self.corpus_freq[id as usize]
    }

    pub fn sentence_freq(&self, id: u32) -> u64 {
        self.sentence_freq[id as usize]
    }

    pub fn corpus_freq_of(&self, word: &str) -> Option<u64> {
        self.id(word).map(|id| self.corpus_freq(id))
    }

    pub fn min_sentence_freq(&self) -> u64 {
        self.min_sentence_freq
    }

    pub fn frequency_unit(&self) -> FrequencyUnit {
        self.unit
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Maps tokens to ids, with [`OOV`] for dropped words.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t).unwrap_or(OOV)).collect()
    }

    /// Word ids ordered by descending corpus frequency, ties by word.
    pub fn by_frequency(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = (0..self.words.len() as u32).collect();
        ids.sort_by(|&a, &b| {
            self.corpus_freq(b)
                .cmp(&self.corpus_freq(a))
                .then_with(|| self.word(a).cmp(self.word(b)))
        });
        ids
    }

    fn from_parts(
        entries: Vec<(String, u64, u64)>,
        min_sentence_freq: u64,
        unit: FrequencyUnit,
    ) -> Self {
        let mut words = Vec::with_capacity(entries.len());
        let mut corpus_freq = Vec::with_capacity(entries.len());
        let mut sentence_freq = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (w, cf, sf) in entries {
            index.insert(w.clone(), words.len() as u32);
            words.push(w);
            corpus_freq.push(cf);
            sentence_freq.push(sf);
        }
        let mut warnings = Vec::new();
        if words.is_empty() {
            log::warn!("vocabulary is empty at min_sentence_freq={min_sentence_freq}");
            warnings.push(WARN_EMPTY_VOCABULARY.to_string());
        }
        Self {
            words,
            index,
            corpus_freq,
            sentence_freq,
            min_sentence_freq,
            unit,
            warnings,
        }
    }

    pub fn to_file(&self) -> VocabularyFile {
        VocabularyFile {
            schema_version: 1,
            min_sentence_freq: self.min_sentence_freq,
            frequency_unit: self.unit,
            warnings: self.warnings.clone(),
            words: (0..self.words.len() as u32)
                .map(|id| VocabularyEntry {
                    word: self.word(id).to_string(),
                    corpus_freq: self.corpus_freq(id),
                    sentence_freq: self.sentence_freq(id),
                })
                .collect(),
        }
    }

    pub fn from_file(file: VocabularyFile) -> Self {
        Self::from_parts(
            file.words
                .into_iter()
                .map(|e| (e.word, e.corpus_freq, e.sentence_freq))
                .collect(),
            file.min_sentence_freq,
            file.frequency_unit,
        )
    }
}

/// On-disk form of a [`Vocabulary`], written by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyFile {
    pub schema_version: u32,
    pub min_sentence_freq: u64,
    pub frequency_unit: FrequencyUnit,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub words: Vec<VocabularyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyEntry {
    pub word: String,
    pub corpus_freq: u64,
    pub sentence_freq: u64,
}

/// Retains exactly the words whose sentence frequency reaches
/// `min_sentence_freq`. Ids follow first appearance in the corpus.
fn bump_distinct<'c>(
    toks: &'c [String],
    seen: &mut HashSet<&'c str>,
    stats: &mut HashMap<&'c str, (u64, u64)>,
) {
    seen.clear();
    for tok in toks {
        if seen.insert(tok.as_str()) {
            // sentence-only tokens still need an entry
            stats.entry(tok.as_str()).or_insert((0, 0)).1 += 1;
        }
    }
}

pub fn build_vocabulary(corpus: &Corpus, min_sentence_freq: u64) -> Vocabulary {
    let mut order: Vec<&str> = Vec::new();
    let mut stats: HashMap<&str, (u64, u64)> = HashMap::new();
    let mut segmented = 0usize;
    let mut seen: HashSet<&str> = HashSet::new();

    for doc in corpus.documents() {
        for tok in &doc.tokens {
            let e = stats.entry(tok.as_str()).or_insert_with(|| {
                order.push(tok.as_str());
                (0, 0)
            });
            e.0 += 1;
        }
        match &doc.sentences {
            Some(sentences) => {
                segmented += 1;
                for s in sentences {
                    bump_distinct(s, &mut seen, &mut stats);
                }
            }
            None => bump_distinct(&doc.tokens, &mut seen, &mut stats),
        }
    }

    let unit = match segmented {
        0 => FrequencyUnit::Document,
        n if n == corpus.len() => FrequencyUnit::Sentence,
        _ => FrequencyUnit::Mixed,
    };
    let entries = order
        .into_iter()
        .filter_map(|w| {
            let (cf, sf) = stats[w];
            (sf >= min_sentence_freq).then(|| (w.to_string(), cf, sf))
        })
        .collect();
    Vocabulary::from_parts(entries, min_sentence_freq, unit)
}

#[inline]
fn pair_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Pair tables are split into this many partitions by a hash of the key.
const PARTITION_BITS: u32 = 12;
const PARTITIONS: usize = 1 << PARTITION_BITS;
const PARTITION_BUFFER: usize = 1 << 12;

#[inline]
fn partition_of(key: (u32, u32)) -> usize {
    let packed = (u64::from(key.0) << 32) | u64::from(key.1);
    (packed.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> (64 - PARTITION_BITS)) as usize
}

/// Pair partitions from one shard; occurrence counts come from shard 0 only.
type ShardOutput = (Vec<FxHashMap<(u32, u32), u32>>, Option<Vec<i64>>);

/// Boolean window occurrence and co-occurrence counts.
#[derive(Debug, Clone)]
pub struct WindowCounts {
    window_size: usize,
    total_windows: u64,
    occur: Vec<u64>,
    parts: Vec<FxHashMap<(u32, u32), u32>>,
}

impl WindowCounts {
    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn vocab_len(&self) -> usize {
        self.occur.len()
    }

    pub fn occur(&self, id: u32) -> u64 {
        self.occur.get(id as usize).copied().unwrap_or(0)
    }

    pub fn cooccur(&self, a: u32, b: u32) -> u64 {
        if a == b {
            return self.occur(a);
        }
        let key = pair_key(a, b);
        self.parts[partition_of(key)]
            .get(&key)
            .map_or(0, |&c| u64::from(c))
    }

    /// Number of materialized (co-occurring) unordered pairs.
    pub fn pair_count(&self) -> usize {
        self.parts.iter().map(|s| s.len()).sum()
    }

    /// All materialized pairs `(a, b, count)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<(u32, u32, u64)> {
        let mut out: Vec<_> = self
            .parts
            .iter()
            .flat_map(|s| s.iter().map(|(&(a, b), &c)| (a, b, u64::from(c))))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Configures a counting run.
#[derive(Debug, Clone)]
pub struct WindowCounter {
    window_size: usize,
    shards: usize,
    tracked: Option<Vec<bool>>,
}

impl WindowCounter {
    pub fn new(window_size: usize) -> Result<Self> {
        if window_size < 2 {
            return Err(Error::WindowTooSmall(window_size));
        }
        Ok(Self {
            window_size,
            shards: rayon::current_num_threads().max(1),
            tracked: None,
        })
    }

    /// Number of parallel passes. Each pass sweeps the whole corpus and owns
    /// a disjoint subset of pair partitions; counts do not depend on this.
    pub fn shards(mut self, shards: usize) -> Self {
        self.shards = shards.clamp(1, PARTITIONS);
        self
    }

    /// Materialize only pairs whose two words are both in `ids`.
    /// Occurrence counts are still computed for every word.
    pub fn track_only(mut self, vocab_len: usize, ids: impl IntoIterator<Item = u32>) -> Self {
        let mut mask = vec![false; vocab_len];
        for id in ids {
            if let Some(m) = mask.get_mut(id as usize) {
                *m = true;
            }
        }
        self.tracked = Some(mask);
        self
    }

    pub fn count(&self, corpus: &Corpus, vocab: &Vocabulary) -> Result<WindowCounts> {
        let encoded: Vec<Vec<u32>> = corpus
            .documents()
            .par_iter()
            .map(|d| vocab.encode(&d.tokens))
            .collect();
        self.count_encoded(&encoded, vocab.len())
    }

    /// Counts over documents already mapped to ids (`OOV` for skipped tokens).
    pub fn count_encoded(&self, docs: &[Vec<u32>], vocab_len: usize) -> Result<WindowCounts> {
        let s = self.window_size;
        let total_windows: u64 = docs
            .iter()
            .map(|d| {
                if d.len() <= s {
                    1
                } else {
                    (d.len() - s + 1) as u64
                }
            })
            .sum();
        // pair counts are stored as u32
        if total_windows > u64::from(u32::MAX) {
            return Err(Error::InvalidArgument(format!(
                "{total_windows} windows exceed the supported maximum of {}",
                u32::MAX
            )));
        }
        let n_shards = self.shards;
        let results: Vec<ShardOutput> = (0..n_shards)
            .into_par_iter()
            .map(|shard| {
                let mut scan = Scan::new(
                    vocab_len,
                    s,
                    shard,
                    n_shards,
                    self.tracked.as_deref(),
                    shard == 0,
                );
                for doc in docs {
                    scan.document(doc);
                }
                scan.finish()
            })
            .collect();

        let mut occur = Vec::new();
        let mut parts: Vec<FxHashMap<(u32, u32), u32>> =
            (0..PARTITIONS).map(|_| FxHashMap::default()).collect();
        for (shard, (shard_parts, occ)) in results.into_iter().enumerate() {
            if let Some(o) = occ {
                occur = o.into_iter().map(|c| c as u64).collect();
            }
            for (p, table) in shard_parts.into_iter().enumerate() {
                if p % n_shards == shard {
                    parts[p] = table;
                }
            }
        }
        Ok(WindowCounts {
            window_size: s,
            total_windows,
            occur,
            parts,
        })
    }
}

/// Convenience wrapper: full counts with the default shard count.
pub fn count_windows(
    corpus: &Corpus,
    vocab: &Vocabulary,
    window_size: usize,
) -> Result<WindowCounts> {
    WindowCounter::new(window_size)?.count(corpus, vocab)
}

/// One pass of the sliding-window sweep.
///
/// Presence of a word (or pair) over consecutive windows is an interval
/// `[t0, t1)`. Instead of touching every present pair in every window, the
/// sweep adds `-t0` when a pair switches on and `+t1` when it switches off, so
/// work is proportional to presence changes. Per-document totals are staged
/// in partition buffers and folded into the partition tables in batches, which
/// keeps each batch of inserts inside one small table.
struct Scan<'a> {
    window: usize,
    shard: usize,
    n_shards: usize,
    tracked: Option<&'a [bool]>,
    count: Vec<u32>,
    slot: Vec<u32>,
    present: Vec<u32>,
    local: FxHashMap<(u32, u32), i64>,
    buffers: Vec<Vec<((u32, u32), u32)>>,
    parts: Vec<FxHashMap<(u32, u32), u32>>,
    occur: Option<Vec<i64>>,
}

impl<'a> Scan<'a> {
    fn new(
        vocab_len: usize,
        window: usize,
        shard: usize,
        n_shards: usize,
        tracked: Option<&'a [bool]>,
        with_occur: bool,
    ) -> Self {
        Self {
            window,
            shard,
            n_shards,
            tracked,
            count: vec![0; vocab_len],
            slot: vec![0; vocab_len],
            present: Vec::with_capacity(window),
            local: FxHashMap::default(),
            buffers: (0..PARTITIONS).map(|_| Vec::new()).collect(),
            parts: (0..PARTITIONS).map(|_| FxHashMap::default()).collect(),
            occur: with_occur.then(|| vec![0; vocab_len]),
        }
    }

    #[inline]
    fn is_tracked(&self, w: u32) -> bool {
        self.tracked.is_none_or(|m| m[w as usize])
    }

    #[inline]
    fn bump(&mut self, key: (u32, u32), delta: i64) {
        *self.local.entry(key).or_insert(0) += delta;
    }

    /// Adds `delta` to every pair (w, y) with y currently present.
    fn touch_pairs(&mut self, w: u32, delta: i64) {
        if !self.is_tracked(w) {
            return;
        }
        for i in 0..self.present.len() {
            let y = self.present[i];
            if y == w || !self.is_tracked(y) {
                continue;
            }
            self.bump(pair_key(w, y), delta);
        }
    }

    fn insert(&mut self, w: u32) {
        let c = &mut self.count[w as usize];
        *c += 1;
        if *c == 1 {
            self.slot[w as usize] = self.present.len() as u32;
            self.present.push(w);
        }
    }

    fn remove(&mut self, w: u32) -> bool {
        let c = &mut self.count[w as usize];
        *c -= 1;
        if *c == 0 {
            let idx = self.slot[w as usize] as usize;
            self.present.swap_remove(idx);
            if let Some(&moved) = self.present.get(idx) {
                self.slot[moved as usize] = idx as u32;
            }
            true
        } else {
            false
        }
    }

    fn close_document(&mut self, at: i64) {
        if let Some(occ) = self.occur.as_mut() {
            for &w in &self.present {
                occ[w as usize] += at;
            }
        }
        for i in 0..self.present.len() {
            let a = self.present[i];
            if !self.is_tracked(a) {
                continue;
            }
            for j in (i + 1)..self.present.len() {
                let b = self.present[j];
                if self.is_tracked(b) {
                    self.bump(pair_key(a, b), at);
                }
            }
        }
        for &w in &self.present {
            self.count[w as usize] = 0;
        }
        self.present.clear();

        let mut local = std::mem::take(&mut self.local);
        for (key, n) in local.drain() {
            debug_assert!(n > 0);
            let p = partition_of(key);
            if p % self.n_shards != self.shard {
                continue;
            }
            self.buffers[p].push((key, n as u32));
            if self.buffers[p].len() >= PARTITION_BUFFER {
                self.fold(p);
            }
        }
        self.local = local;
    }

    fn fold(&mut self, p: usize) {
        let table = &mut self.parts[p];
        for (key, n) in self.buffers[p].drain(..) {
            *table.entry(key).or_insert(0) += n;
        }
    }

    fn document(&mut self, doc: &[u32]) {
        let s = self.window;
        let head = doc.len().min(s);
        for &w in &doc[..head] {
            if w != OOV {
                self.insert(w);
            }
        }
        if doc.len() <= s {
            self.close_document(1);
            return;
        }
        let windows = doc.len() - s + 1;
        for t in 1..windows {
            let out = doc[t - 1];
            let inn = doc[t + s - 1];
            if out == inn {
                continue;
            }
            let t = t as i64;
            if out != OOV && self.remove(out) {
                if let Some(occ) = self.occur.as_mut() {
                    occ[out as usize] += t;
                }
                self.touch_pairs(out, t);
            }
            if inn != OOV {
                if self.count[inn as usize] == 0 {
                    if let Some(occ) = self.occur.as_mut() {
                        occ[inn as usize] -= t;
                    }
                    self.touch_pairs(inn, -t);
                }
                self.insert(inn);
            }
        }
        self.close_document(windows as i64);
    }

    fn finish(mut self) -> ShardOutput {
        for p in 0..PARTITIONS {
            self.fold(p);
        }
        (self.parts, self.occur)
    }
}
