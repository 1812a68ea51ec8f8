//! Word intrusion tasks.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{GenContext, Generated, SkipRecord, Task, TwiTask};
use crate::corpus::Vocabulary;
use crate::embeddings::{intruder_head_similarity, EmbeddingTable};
use crate::error::{Error, Result};
use crate::model_io::{TopicModel, RANK_FLOOR};

pub const HEAD_SIZE: usize = 4;
/// Intruders come from strictly below this percentile of the evaluated topic.
pub const LOWER_HALF: f64 = 0.5;
/// ...and at or above this percentile of some other topic.
pub const TOP_DECILE: f64 = 0.10;
/// Multiplicative frequency bands tried in order.
pub const FREQUENCY_BANDS: [f64; 3] = [2.0, 4.0, 8.0];
/// Share of the vocabulary, by frequency, that control intruders come from.
pub const CONTROL_FREQUENT_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntruderChoice {
    pub word: String,
    pub band: f64,
    /// Qualifying candidates at the accepted band.
    pub candidates: usize,
    /// Bands tried before the accepted one.
    pub relaxations: usize,
}

/// Words meeting the rank constraints: lower half of `topic`, top decile of
/// another topic, and present in the vocabulary. Ranking order.
pub fn rank_candidates<'m>(
    model: &'m TopicModel,
    topic: usize,
    vocab: &Vocabulary,
) -> Vec<&'m str> {
    let ranking = &model.topics()[topic];
    ranking
        .iter()
        .filter(|w| {
            model
                .rank_percentile(topic, w)
                .is_some_and(|p| p > LOWER_HALF)
        })
        .filter(|w| {
            (0..model.k())
                .filter(|&j| j != topic)
                .any(|j| model.rank_percentile(j, w).is_some_and(|p| p <= TOP_DECILE))
        })
        .filter(|w| vocab.corpus_freq_of(w).is_some_and(|f| f > 0))
        .map(String::as_str)
        .collect()
}

/// Geometric mean corpus frequency of the head words found in `vocab`.
pub fn head_frequency(head: &[String], vocab: &Vocabulary) -> Option<f64> {
    let logs: Vec<f64> = head
        .iter()
        .filter_map(|w| vocab.corpus_freq_of(w))
        .filter(|&f| f > 0)
        .map(|f| (f as f64).ln())
        .collect();
    if logs.is_empty() {
        return None;
    }
    Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

pub fn in_band(freq: u64, center: f64, rho: f64) -> bool {
    let f = freq as f64;
    f >= center / rho && f <= center * rho
}

pub fn select_intruder<R: Rng + ?Sized>(
    model: &TopicModel,
    topic: usize,
    vocab: &Vocabulary,
    bands: &[f64],
    rng: &mut R,
) -> Result<IntruderChoice> {
    let no_candidate = |reason: String| Error::NoCandidate {
        model_id: model.model_id().to_string(),
        topic,
        reason,
    };
    let head = model.top_words(topic, HEAD_SIZE)?;
    let center = head_frequency(head, vocab)
        .ok_or_else(|| no_candidate("no head word in vocabulary".into()))?;
    let ranked = rank_candidates(model, topic, vocab);
    if ranked.is_empty() {
        return Err(no_candidate("no word meets the rank constraints".into()));
    }
    for (relaxations, &rho) in bands.iter().enumerate() {
        let pool: Vec<&str> = ranked
            .iter()
            .copied()
            .filter(|w| in_band(vocab.corpus_freq_of(w).unwrap_or(0), center, rho))
            .collect();
        if !pool.is_empty() {
            let word = pool[rng.gen_range(0..pool.len())].to_string();
            return Ok(IntruderChoice {
                word,
                band: rho,
                candidates: pool.len(),
                relaxations,
            });
        }
    }
    Err(no_candidate(format!(
        "{} rank candidates, none within frequency band {:?} of {center:.1}",
        ranked.len(),
        bands
    )))
}

/// A highly salient intruder: among the most frequent vocabulary words not
/// in the topic's top half, the one least similar to the head. Without
/// embeddings, the most frequent such word.
pub fn control_intruder(
    model: &TopicModel,
    topic: usize,
    vocab: &Vocabulary,
    table: Option<&EmbeddingTable>,
) -> Result<String> {
    let head = model.top_words(topic, HEAD_SIZE)?;
    let eligible = |w: &str| {
        model
            .rank_percentile(topic, w)
            .is_none_or(|p| p > LOWER_HALF)
    };
    let by_freq = vocab.by_frequency();
    let no_candidate = || Error::NoCandidate {
        model_id: model.model_id().to_string(),
        topic,
        reason: "no control intruder outside the topic's top half".into(),
    };
    if let Some(table) = table {
        let pool_len = ((by_freq.len() as f64 * CONTROL_FREQUENT_SHARE).ceil() as usize).max(1);
        let mut best: Option<(f64, &str)> = None;
        for &id in by_freq.iter().take(pool_len) {
            let w = vocab.word(id);
            if !eligible(w) {
                continue;
            }
            if let Ok(s) = intruder_head_similarity(head, w, table) {
                if best.is_none_or(|(b, _)| s < b) {
                    best = Some((s, w));
                }
            }
        }
        if let Some((_, w)) = best {
            return Ok(w.to_string());
        }
        log::warn!(
            "model {} topic {topic}: no embedded control candidate, using frequency fallback",
            model.model_id()
        );
    }
    by_freq
        .iter()
        .map(|&id| vocab.word(id))
        .find(|w| eligible(w))
        .map(String::from)
        .ok_or_else(no_candidate)
}

#[allow(clippy::too_many_arguments)]
fn build_task<R: Rng + ?Sized>(
    model: &TopicModel,
    task_id: String,
    topic: usize,
    intruder: String,
    is_control: bool,
    band: Option<f64>,
    table: Option<&EmbeddingTable>,
    rng: &mut R,
) -> Result<TwiTask> {
    let head: Vec<String> = model.top_words(topic, HEAD_SIZE)?.to_vec();
    if head.contains(&intruder) {
        return Err(Error::Invariant(format!(
            "intruder {intruder:?} is a head word of {task_id}"
        )));
    }
    let mut shown = head.clone();
    shown.push(intruder.clone());
    shown.shuffle(rng);
    let intruder_position = shown
        .iter()
        .position(|w| *w == intruder)
        .expect("intruder was pushed");
    let intruder_similarity =
        table.and_then(|t| intruder_head_similarity(&head, &intruder, t).ok());
    Ok(TwiTask {
        origin: task_id.clone(),
        task_id,
        model_id: model.model_id().to_string(),
        family: model.family().to_string(),
        topic,
        shown_words: shown,
        intruder_position,
        is_control,
        head_words: head,
        intruder_similarity,
        frequency_band: band,
    })
}

pub fn gen_twi(model: &TopicModel, ctx: &GenContext<'_>) -> Result<Generated> {
    let vocab = ctx
        .vocab
        .ok_or_else(|| Error::InvalidArgument("word intrusion needs a vocabulary".into()))?;
    model.check_rank_floor(RANK_FLOOR)?;
    let seeds = ctx.seeds.child(&format!("twi/{}", model.model_id()));
    let k = model.k();
    let mut topics: Vec<usize> =
        sample(&mut seeds.rng("topics"), k, ctx.plan.twi_topics(k)).into_vec();
    topics.sort_unstable();

    let mut out = Generated::default();
    let mut intruder_uses: BTreeMap<String, usize> = BTreeMap::new();
    for &topic in &topics {
        let choice = match select_intruder(
            model,
            topic,
            vocab,
            &ctx.frequency_bands,
            &mut seeds.rng(&format!("intruder/{topic}")),
        ) {
            Ok(c) => c,
            Err(e @ Error::NoCandidate { .. }) => {
                log::warn!("{e}");
                out.skipped.push(SkipRecord {
                    model_id: model.model_id().to_string(),
                    topic: Some(topic),
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        if choice.relaxations > 0 {
            out.notes.push(format!(
                "model {} topic {topic}: frequency band relaxed to {}",
                model.model_id(),
                choice.band
            ));
        }
        *intruder_uses.entry(choice.word.clone()).or_default() += 1;
        let task = build_task(
            model,
            format!("{}-twi-t{topic}", model.model_id()),
            topic,
            choice.word,
            false,
            Some(choice.band),
            ctx.embeddings,
            &mut seeds.rng(&format!("shuffle/{topic}")),
        )?;
        out.tasks.push(Task::Twi(task));
    }
    for (word, n) in intruder_uses.iter().filter(|(_, &n)| n > 1) {
        out.notes.push(format!(
            "model {}: intruder {word:?} used in {n} tasks",
            model.model_id()
        ));
    }

    let mut control_rng = seeds.rng("control-topics");
    let mut pool: Vec<usize> = Vec::new();
    for c in 0..ctx.controls_per_model {
        if pool.is_empty() {
            pool = (0..k).collect();
            pool.shuffle(&mut control_rng);
        }
        let topic = pool.pop().expect("refilled above");
        let intruder = control_intruder(model, topic, vocab, ctx.embeddings)?;
        let task = build_task(
            model,
            format!("{}-twi-c{c}", model.model_id()),
            topic,
            intruder,
            true,
            None,
            ctx.embeddings,
            &mut seeds.rng(&format!("control-shuffle/{c}")),
        )?;
        out.tasks.push(Task::Twi(task));
    }
    Ok(out)
}
