//! Word mixing tasks.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{GenContext, Generated, ShownWord, Task, TwmTask};
use crate::embeddings::{
    best_partner_pairs, similarity_matrix, topic_embeddings, EmbeddingTable, TopicPair,
};
use crate::error::{Error, Result};
use crate::model_io::TopicModel;

pub const MIX_HALF: usize = 4;
pub const TASK_WORDS: usize = 8;

fn disjoint_heads(model: &TopicModel, a: usize, b: usize) -> bool {
    let (Ok(ha), Ok(hb)) = (model.top_words(a, MIX_HALF), model.top_words(b, MIX_HALF)) else {
        return false;
    };
    !ha.iter().any(|w| hb.contains(w))
}

/// Each topic's most similar partner whose top-4 is disjoint from its own.
pub fn candidate_pairs(model: &TopicModel, sim: &[Vec<f64>]) -> Vec<TopicPair> {
    best_partner_pairs(sim, |i, j| disjoint_heads(model, i, j))
}

/// Every disjoint pair, least similar first.
fn least_similar_pairs(model: &TopicModel, sim: &[Vec<f64>]) -> Vec<TopicPair> {
    let k = sim.len();
    let mut pairs: Vec<TopicPair> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .filter(|&(i, j)| disjoint_heads(model, i, j))
        .map(|(first, second)| TopicPair {
            first,
            second,
            similarity: sim[first][second],
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.similarity
            .total_cmp(&b.similarity)
            .then(a.first.cmp(&b.first))
            .then(a.second.cmp(&b.second))
    });
    pairs
}

pub fn mixed_task<R: Rng + ?Sized>(
    model: &TopicModel,
    pair: &TopicPair,
    task_id: String,
    is_control: bool,
    rng: &mut R,
) -> Result<TwmTask> {
    let bold_topic = if rng.gen_bool(0.5) {
        pair.first
    } else {
        pair.second
    };
    let mut words: Vec<ShownWord> = Vec::with_capacity(TASK_WORDS);
    for t in [pair.first, pair.second] {
        for w in model.top_words(t, MIX_HALF)? {
            words.push(ShownWord {
                w: w.clone(),
                bold: t == bold_topic,
            });
        }
    }
    words.shuffle(rng);
    Ok(TwmTask {
        origin: task_id.clone(),
        task_id,
        model_id: model.model_id().to_string(),
        family: model.family().to_string(),
        topics: vec![pair.first, pair.second],
        words,
        label: 2,
        is_control,
        bold_topic: Some(bold_topic),
        pair_similarity: Some(pair.similarity),
    })
}

pub fn single_task<R: Rng + ?Sized>(
    model: &TopicModel,
    topic: usize,
    task_id: String,
    is_control: bool,
    rng: &mut R,
) -> Result<TwmTask> {
    let top = model.top_words(topic, TASK_WORDS)?;
    let bold: BTreeSet<usize> = sample(rng, TASK_WORDS, MIX_HALF).into_iter().collect();
    let mut words: Vec<ShownWord> = top
        .iter()
        .enumerate()
        .map(|(i, w)| ShownWord {
            w: w.clone(),
            bold: bold.contains(&i),
        })
        .collect();
    words.shuffle(rng);
    Ok(TwmTask {
        origin: task_id.clone(),
        task_id,
        model_id: model.model_id().to_string(),
        family: model.family().to_string(),
        topics: vec![topic],
        words,
        label: 1,
        is_control,
        bold_topic: None,
        pair_similarity: None,
    })
}

/// Topics for single-topic controls: best quality first when known,
/// otherwise most isolated (lowest maximum similarity to any other topic).
fn control_topics(
    model: &TopicModel,
    sim: &[Vec<f64>],
    quality: Option<&[Option<f64>]>,
) -> Vec<usize> {
    let k = model.k();
    let mut topics: Vec<usize> = (0..k).collect();
    match quality.filter(|q| q.len() == k && q.iter().any(Option::is_some)) {
        Some(q) => topics.sort_by(|&a, &b| {
            let (qa, qb) = (
                q[a].unwrap_or(f64::NEG_INFINITY),
                q[b].unwrap_or(f64::NEG_INFINITY),
            );
            qb.total_cmp(&qa).then(a.cmp(&b))
        }),
        None => {
            let nearest = |i: usize| {
                (0..k)
                    .filter(|&j| j != i)
                    .map(|j| sim[i][j])
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            topics.sort_by(|&a, &b| nearest(a).total_cmp(&nearest(b)).then(a.cmp(&b)));
        }
    }
    topics
}

fn embeddings_for<'a>(ctx: &GenContext<'a>) -> Result<&'a EmbeddingTable> {
    ctx.embeddings
        .ok_or_else(|| Error::InvalidArgument("word mixing needs embeddings".into()))
}

pub fn gen_twm(model: &TopicModel, ctx: &GenContext<'_>) -> Result<Generated> {
    let table = embeddings_for(ctx)?;
    let id = model.model_id();
    let insufficient = |message: String| Error::InsufficientPairs {
        model_id: id.to_string(),
        message,
    };
    let sim = similarity_matrix(&topic_embeddings(model, table, ctx.topic_embed_top_n)?)?;
    let candidates = candidate_pairs(model, &sim);
    if candidates.is_empty() {
        return Err(insufficient("no topic pair with disjoint top words".into()));
    }
    let seeds = ctx.seeds.child(&format!("twm/{id}"));
    let m = ctx.plan.twm_pairs(model.k(), candidates.len());
    let mut picked: Vec<usize> = sample(&mut seeds.rng("pairs"), candidates.len(), m).into_vec();
    picked.sort_unstable();
    let pairs: Vec<TopicPair> = picked.iter().map(|&i| candidates[i]).collect();

    let mut out = Generated::default();
    for p in &pairs {
        let task_id = format!("{id}-twm-m{}-{}", p.first, p.second);
        let rng = &mut seeds.rng(&format!("mixed/{}-{}", p.first, p.second));
        out.tasks
            .push(Task::Twm(mixed_task(model, p, task_id, false, rng)?));
    }

    // Single-topic tasks, as many as mixed ones, drawn from the topics that
    // appear in the selected pairs.
    let frame: Vec<usize> = pairs
        .iter()
        .flat_map(|p| [p.first, p.second])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut singles_rng = seeds.rng("singles");
    let mut singles: Vec<usize> = Vec::with_capacity(m);
    while singles.len() < m {
        let take = (m - singles.len()).min(frame.len());
        let mut round: Vec<usize> = sample(&mut singles_rng, frame.len(), take)
            .into_iter()
            .map(|i| frame[i])
            .collect();
        round.sort_unstable();
        singles.extend(round);
    }
    if m > frame.len() {
        out.notes.push(format!(
            "model {id}: single-topic frame of {} topics reused for {m} tasks",
            frame.len()
        ));
    }
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for (n, &t) in singles.iter().enumerate() {
        let task_id = if seen.insert(t) {
            format!("{id}-twm-s{t}")
        } else {
            format!("{id}-twm-s{t}-r{n}")
        };
        let rng = &mut seeds.rng(&format!("single/{n}"));
        out.tasks
            .push(Task::Twm(single_task(model, t, task_id, false, rng)?));
    }

    if ctx.controls_per_model > 0 {
        let far = least_similar_pairs(model, &sim);
        let quality = ctx.topic_quality.and_then(|q| q.get(id)).map(Vec::as_slice);
        if quality.is_none() {
            out.notes.push(format!(
                "model {id}: no topic quality given, single controls use the most isolated topics"
            ));
        }
        let clear = control_topics(model, &sim, quality);
        for c in 0..ctx.controls_per_model {
            let task_id = format!("{id}-twm-c{c}");
            let rng = &mut seeds.rng(&format!("control/{c}"));
            let task = if c % 2 == 0 {
                let p = far
                    .get((c / 2) % far.len().max(1))
                    .ok_or_else(|| insufficient("no pair for a mixed control".into()))?;
                mixed_task(model, p, task_id, true, rng)?
            } else {
                single_task(model, clear[(c / 2) % clear.len()], task_id, true, rng)?
            };
            out.tasks.push(Task::Twm(task));
        }
    }
    Ok(out)
}
