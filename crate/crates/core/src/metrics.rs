//! Automated topic quality: NPMI, C_V coherence and topic diversity.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Vocabulary, WindowCounts, DEFAULT_WINDOW_SIZE};
use crate::embeddings::cosine;
use crate::error::{Error, Result};
use crate::model_io::TopicModel;

pub const DEFAULT_TOP_N: usize = 10;
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceConfig {
    pub top_n: usize,
    pub window_size: usize,
    pub epsilon: f64,
    /// Keep the `npmi(w, w)` entry in each context vector.
    pub include_self: bool,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        Self {
            top_n: DEFAULT_TOP_N,
            window_size: DEFAULT_WINDOW_SIZE,
            epsilon: DEFAULT_EPSILON,
            include_self: true,
        }
    }
}

impl CoherenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n < 2 {
            return Err(Error::InvalidArgument(format!(
                "top_n must be >= 2, got {}",
                self.top_n
            )));
        }
        if self.window_size < 2 {
            return Err(Error::WindowTooSmall(self.window_size));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Normalized PMI over boolean windows.
///
/// `epsilon` only enters when the pair never co-occurs, keeping `log(0)` out
/// while leaving every observed probability exact.
pub fn npmi(counts: &WindowCounts, a: u32, b: u32, epsilon: f64) -> Result<f64> {
    let total = counts.total_windows() as f64;
    let (oa, ob) = (counts.occur(a), counts.occur(b));
    if oa == 0 {
        return Err(Error::ZeroOccurrence(a));
    }
    if ob == 0 {
        return Err(Error::ZeroOccurrence(b));
    }
    let joint = counts.cooccur(a, b) as f64 / total;
    let pa = oa as f64 / total;
    let pb = ob as f64 / total;
    Ok(npmi_from_probabilities(pa, pb, joint, epsilon))
}

pub fn npmi_from_probabilities(pa: f64, pb: f64, joint: f64, epsilon: f64) -> f64 {
    let joint = if joint > 0.0 { joint } else { epsilon };
    if joint >= 1.0 {
        return 1.0;
    }
    ((joint / (pa * pb)).ln() / -joint.ln()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicCoherence {
    pub value: f64,
    /// Words that entered the context vectors.
    pub used: Vec<String>,
    /// Top words absent from the vocabulary or never seen in a window.
    pub skipped: Vec<String>,
    /// Words whose context vector had zero norm; excluded from the mean.
    pub undefined: Vec<String>,
}

/// C_V for one word list: NPMI context vectors, one-set segmentation
/// (each word against the whole set) and mean cosine.
pub fn cv_topic(
    counts: &WindowCounts,
    vocab: &Vocabulary,
    top_words: &[String],
    cfg: &CoherenceConfig,
) -> Result<TopicCoherence> {
    let mut used = Vec::new();
    let mut ids = Vec::new();
    let mut skipped = Vec::new();
    for w in top_words {
        match vocab.id(w) {
            Some(id) if counts.occur(id) > 0 => {
                used.push(w.clone());
                ids.push(id);
            }
            _ => skipped.push(w.clone()),
        }
    }
    if ids.len() < 2 {
        return Err(Error::TooFewWords);
    }
    let n = ids.len();
    let mut vectors = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            if i == j && !cfg.include_self {
                continue;
            }
            let v = npmi(counts, ids[i], ids[j], cfg.epsilon)?;
            vectors[i][j] = v;
            vectors[j][i] = v;
        }
    }
    let mut topic = vec![0.0; n];
    for v in &vectors {
        for (t, x) in topic.iter_mut().zip(v) {
            *t += x;
        }
    }
    let mut total = 0.0;
    let mut defined = 0usize;
    let mut undefined = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        match cosine(v, &topic) {
            Ok(c) => {
                total += c;
                defined += 1;
            }
            Err(Error::ZeroNorm) if v.iter().any(|x| *x != 0.0) => {
                return Err(Error::DegenerateTopic);
            }
            Err(Error::ZeroNorm) => {
                log::warn!("zero-norm context vector for {:?}", used[i]);
                undefined.push(used[i].clone());
            }
            Err(e) => return Err(e),
        }
    }
    if defined == 0 {
        return Err(Error::DegenerateTopic);
    }
    Ok(TopicCoherence {
        value: total / defined as f64,
        used,
        skipped,
        undefined,
    })
}

/// Per-topic C_V and their mean over topics that could be scored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelCoherence {
    pub per_topic: Vec<Option<f64>>,
    pub mean: f64,
    pub skipped_words: BTreeMap<usize, Vec<String>>,
    pub skipped_topics: BTreeMap<usize, String>,
}

pub fn cv_model(
    counts: &WindowCounts,
    vocab: &Vocabulary,
    model: &TopicModel,
    cfg: &CoherenceConfig,
) -> Result<ModelCoherence> {
    cfg.validate()?;
    let mut per_topic = Vec::with_capacity(model.k());
    let mut skipped_words = BTreeMap::new();
    let mut skipped_topics = BTreeMap::new();
    for t in 0..model.k() {
        let n = cfg.top_n.min(model.ranking_len(t));
        let words = model.top_words(t, n)?;
        match cv_topic(counts, vocab, words, cfg) {
            Ok(c) => {
                if !c.skipped.is_empty() {
                    skipped_words.insert(t, c.skipped);
                }
                per_topic.push(Some(c.value));
            }
            Err(e @ (Error::TooFewWords | Error::DegenerateTopic)) => {
                log::warn!("model {} topic {t} skipped: {e}", model.model_id());
                let missing: Vec<String> = words
                    .iter()
                    .filter(|w| !vocab.contains(w))
                    .cloned()
                    .collect();
                if !missing.is_empty() {
                    skipped_words.insert(t, missing);
                }
                skipped_topics.insert(t, e.to_string());
                per_topic.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let scored: Vec<f64> = per_topic.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(Error::AllTopicsSkipped(model.model_id().to_string()));
    }
    Ok(ModelCoherence {
        mean: scored.iter().sum::<f64>() / scored.len() as f64,
        per_topic,
        skipped_words,
        skipped_topics,
    })
}

/// `|U| / (K * N)` over the topics' top-N word sets.
pub fn diversity(model: &TopicModel, top_n: usize) -> Result<f64> {
    if top_n == 0 {
        return Err(Error::InvalidArgument("top_n must be >= 1".into()));
    }
    let mut unique: HashSet<&str> = HashSet::new();
    for t in 0..model.k() {
        unique.extend(model.top_words(t, top_n)?.iter().map(String::as_str));
    }
    Ok(unique.len() as f64 / (model.k() * top_n) as f64)
}

/// Maps a raw [-1, 1] coherence onto [0, 1].
pub fn rescale_unit(x: f64) -> f64 {
    (x + 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub model_id: String,
    pub family: String,
    pub granularity_label: String,
    pub k: usize,
    pub cv_mean: f64,
    /// `(cv_mean + 1) / 2`.
    pub cv_mean_rescaled: f64,
    pub per_topic_cv: Vec<Option<f64>>,
    pub diversity: f64,
    pub skipped: BTreeMap<String, Vec<String>>,
    pub skipped_topics: BTreeMap<String, String>,
    pub config: MetricConfigRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricConfigRecord {
    pub top_n: usize,
    pub window_size: usize,
    pub epsilon: f64,
    pub include_self: bool,
    /// Exponent applied to NPMI entries of the context vectors.
    pub npmi_exponent: f64,
    pub min_sentence_freq: u64,
    pub frequency_unit: crate::corpus::FrequencyUnit,
    pub segmentation: &'static str,
    pub cv_range: &'static str,
}

pub fn metric_report(
    counts: &WindowCounts,
    vocab: &Vocabulary,
    model: &TopicModel,
    cfg: &CoherenceConfig,
) -> Result<MetricReport> {
    let cv = cv_model(counts, vocab, model, cfg)?;
    let diversity = diversity(model, cfg.top_n)?;
    Ok(MetricReport {
        schema_version: 1,
        toolkit_version: crate::VERSION.to_string(),
        model_id: model.model_id().to_string(),
        family: model.family().to_string(),
        granularity_label: model.granularity_label().to_string(),
        k: model.k(),
        cv_mean: cv.mean,
        cv_mean_rescaled: rescale_unit(cv.mean),
        per_topic_cv: cv.per_topic,
        diversity,
        skipped: cv
            .skipped_words
            .into_iter()
            .map(|(t, w)| (t.to_string(), w))
            .collect(),
        skipped_topics: cv
            .skipped_topics
            .into_iter()
            .map(|(t, r)| (t.to_string(), r))
            .collect(),
        config: MetricConfigRecord {
            top_n: cfg.top_n,
            window_size: counts.window_size(),
            epsilon: cfg.epsilon,
            include_self: cfg.include_self,
            npmi_exponent: 1.0,
            min_sentence_freq: vocab.min_sentence_freq(),
            frequency_unit: vocab.frequency_unit(),
            segmentation: "one-set",
            cv_range: "raw [-1,1]; cv_mean_rescaled = (x+1)/2",
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, count_windows, Corpus};

    fn setup(docs: &[&str], s: usize) -> (Vocabulary, WindowCounts) {
        let c = Corpus::from_tokens(docs.iter().map(|d| d.split_whitespace())).unwrap();
        let v = build_vocabulary(&c, 0);
        let wc = count_windows(&c, &v, s).unwrap();
        (v, wc)
    }

    #[test]
    fn npmi_independence_and_perfect_association() {
        assert!(npmi_from_probabilities(0.5, 0.5, 0.25, 1e-12).abs() < 1e-15);
        assert!((npmi_from_probabilities(0.1, 0.1, 0.1, 1e-12) - 1.0).abs() < 1e-12);
        assert_eq!(npmi_from_probabilities(1.0, 1.0, 1.0, 1e-12), 1.0);
    }

    #[test]
    fn npmi_four_windows() {
        // each doc is one window: {a,b},{a,b},{a},{z}
        let (v, wc) = setup(&["a b", "a b", "a", "z"], 5);
        let (a, b) = (v.id("a").unwrap(), v.id("b").unwrap());
        let got = npmi(&wc, a, b, 1e-12).unwrap();
        let want = (4.0f64 / 3.0).ln() / 2f64.ln();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((got - 0.4150).abs() < 1e-4);
        assert_eq!(
            npmi(&wc, a, b, 1e-12).unwrap(),
            npmi(&wc, b, a, 1e-12).unwrap()
        );
    }

    #[test]
    fn npmi_zero_occurrence() {
        let (_, wc) = setup(&["a b"], 5);
        assert!(matches!(
            npmi(&wc, 0, 7, 1e-12),
            Err(Error::ZeroOccurrence(7))
        ));
    }

    #[test]
    fn cv_all_cooccurring_is_one() {
        let (v, wc) = setup(&["a b c", "z", "a b c", "z"], 5);
        let words: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let c = cv_topic(&wc, &v, &words, &CoherenceConfig::default()).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cv_needs_two_words() {
        let (v, wc) = setup(&["a b c"], 5);
        let words: Vec<String> = ["a", "q", "r"].map(String::from).to_vec();
        let e = cv_topic(&wc, &v, &words, &CoherenceConfig::default()).unwrap_err();
        assert_eq!(e.to_string(), "fewer than 2 usable words");
    }

    #[test]
    fn cv_reports_skipped_words() {
        let (v, wc) = setup(&["a b c", "z", "a b"], 5);
        let words: Vec<String> = ["a", "nope", "b"].map(String::from).to_vec();
        let c = cv_topic(&wc, &v, &words, &CoherenceConfig::default()).unwrap();
        assert_eq!(c.skipped, ["nope"]);
        assert_eq!(c.used, ["a", "b"]);
    }

    fn model(topics: &[&str]) -> TopicModel {
        TopicModel::new(
            "m",
            "f",
            "",
            topics
                .iter()
                .map(|t| t.split_whitespace().map(String::from).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn diversity_cases() {
        assert_eq!(diversity(&model(&["a b c", "d e f"]), 3).unwrap(), 1.0);
        assert_eq!(
            diversity(&model(&["a b c", "a b c", "c b a"]), 3).unwrap(),
            1.0 / 3.0
        );
        assert!((diversity(&model(&["a b c", "a d e"]), 3).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            diversity(&model(&["a b", "c d e"]), 3),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn cv_model_mean_and_skips() {
        let (v, wc) = setup(&["a b c", "z", "a b c", "z", "d e"], 5);
        let m = model(&["a b c", "q r s"]);
        let cfg = CoherenceConfig {
            top_n: 3,
            ..CoherenceConfig::default()
        };
        let r = cv_model(&wc, &v, &m, &cfg).unwrap();
        assert_eq!(r.per_topic[1], None);
        assert!((r.mean - r.per_topic[0].unwrap()).abs() < 1e-15);
        assert_eq!(r.skipped_words[&1], ["q", "r", "s"]);

        let m = model(&["q r s", "x y"]);
        assert!(matches!(
            cv_model(&wc, &v, &m, &CoherenceConfig { top_n: 2, ..cfg }),
            Err(Error::AllTopicsSkipped(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(CoherenceConfig::default().validate().is_ok());
        assert!(CoherenceConfig {
            top_n: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CoherenceConfig {
            epsilon: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CoherenceConfig {
            window_size: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
