//! Task bundles: track assignment, the annotator-facing file and the sealed
//! answer key.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ShownWord, Task, TaskKind, TwiTask, TwmTask};
use crate::error::{Error, Result};
use crate::seed::SeedStream;

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskBundle {
    pub bundle_id: String,
    pub seed: u64,
    /// Presentation order; each track's tasks appear in their track order.
    pub tasks: Vec<Task>,
    pub tracks: Vec<Vec<String>>,
}

/// Shuffles tasks with the seed, renames them `{kind}-{n}` in presentation
/// order and deals them round-robin into tracks.
pub fn assemble_bundle(
    mut tasks: Vec<Task>,
    n_tracks: usize,
    seed: u64,
    bundle_id: &str,
) -> Result<TaskBundle> {
    if n_tracks == 0 {
        return Err(Error::InvalidArgument(
            "at least one track is required".into(),
        ));
    }
    if tasks.len() < n_tracks {
        return Err(Error::TooFewTasks {
            tasks: tasks.len(),
            tracks: n_tracks,
        });
    }
    let mut ids = HashSet::new();
    if let Some(dup) = tasks.iter().find(|t| !ids.insert(t.task_id().to_string())) {
        return Err(Error::InvalidArgument(format!(
            "duplicate task id {:?}",
            dup.task_id()
        )));
    }
    tasks.shuffle(&mut SeedStream::new(seed).rng("bundle/shuffle"));
    let width = tasks.len().to_string().len();
    for (i, t) in tasks.iter_mut().enumerate() {
        let id = format!("{}-{:0width$}", t.kind(), i + 1);
        t.set_task_id(id);
    }
    let mut tracks = vec![Vec::new(); n_tracks];
    for (i, t) in tasks.iter().enumerate() {
        tracks[i % n_tracks].push(t.task_id().to_string());
    }
    Ok(TaskBundle {
        bundle_id: bundle_id.to_string(),
        seed,
        tasks,
        tracks,
    })
}

impl TaskBundle {
    pub fn n_tracks(&self) -> usize {
        self.tracks.len()
    }

    pub fn index(&self) -> HashMap<&str, &Task> {
        self.tasks.iter().map(|t| (t.task_id(), t)).collect()
    }

    pub fn track_of(&self) -> HashMap<&str, usize> {
        self.tracks
            .iter()
            .enumerate()
            .flat_map(|(n, ids)| ids.iter().map(move |id| (id.as_str(), n)))
            .collect()
    }

    /// Tasks of one track in presentation order.
    pub fn track_tasks(&self, track: usize) -> Vec<&Task> {
        let index = self.index();
        self.tracks
            .get(track)
            .map(|ids| ids.iter().map(|id| index[id.as_str()]).collect())
            .unwrap_or_default()
    }

    pub fn public(&self) -> PublicBundle {
        let track_of = self.track_of();
        PublicBundle {
            schema_version: BUNDLE_SCHEMA_VERSION,
            bundle_id: self.bundle_id.clone(),
            seed: self.seed,
            toolkit_version: crate::VERSION.to_string(),
            n_tracks: self.n_tracks(),
            tasks: self
                .tasks
                .iter()
                .map(|t| PublicTask {
                    task_id: t.task_id().to_string(),
                    kind: t.kind(),
                    model_id: t.model_id().to_string(),
                    words: t.shown(),
                    track: track_of[t.task_id()],
                })
                .collect(),
        }
    }

    pub fn answer_key(&self) -> AnswerKey {
        self.tasks
            .iter()
            .map(|t| {
                let key = match t {
                    Task::Twi(t) => TaskKey::Twi {
                        origin: t.origin.clone(),
                        family: t.family.clone(),
                        topic: t.topic,
                        intruder: t.intruder().to_string(),
                        intruder_position: t.intruder_position,
                        head_words: t.head_words.clone(),
                        is_control: t.is_control,
                        intruder_similarity: t.intruder_similarity,
                        frequency_band: t.frequency_band,
                    },
                    Task::Twm(t) => TaskKey::Twm {
                        origin: t.origin.clone(),
                        family: t.family.clone(),
                        topics: t.topics.clone(),
                        label: t.label,
                        is_control: t.is_control,
                        bold_topic: t.bold_topic,
                        pair_similarity: t.pair_similarity,
                    },
                };
                (t.task_id().to_string(), key)
            })
            .collect()
    }

    /// Rebuilds a bundle from its public file and its key.
    pub fn from_parts(public: PublicBundle, key: &AnswerKey) -> Result<Self> {
        let bad = |id: &str, what: &str| Error::InvalidArgument(format!("task {id:?}: {what}"));
        if key.len() != public.tasks.len() {
            return Err(Error::InvalidArgument(format!(
                "answer key covers {} tasks, bundle has {}",
                key.len(),
                public.tasks.len()
            )));
        }
        let mut tracks = vec![Vec::new(); public.n_tracks];
        let mut tasks = Vec::with_capacity(public.tasks.len());
        for p in public.tasks {
            let k = key
                .get(&p.task_id)
                .ok_or_else(|| bad(&p.task_id, "missing from answer key"))?;
            tracks
                .get_mut(p.track)
                .ok_or_else(|| bad(&p.task_id, "track out of range"))?
                .push(p.task_id.clone());
            let task = match (p.kind, k) {
                (
                    TaskKind::Twi,
                    TaskKey::Twi {
                        origin,
                        family,
                        topic,
                        intruder,
                        intruder_position,
                        head_words,
                        is_control,
                        intruder_similarity,
                        frequency_band,
                    },
                ) => {
                    let shown_words: Vec<String> = p.words.into_iter().map(|w| w.w).collect();
                    if shown_words.get(*intruder_position) != Some(intruder) {
                        return Err(bad(
                            &p.task_id,
                            "intruder position does not match the shown words",
                        ));
                    }
                    Task::Twi(TwiTask {
                        task_id: p.task_id,
                        origin: origin.clone(),
                        model_id: p.model_id,
                        family: family.clone(),
                        topic: *topic,
                        shown_words,
                        intruder_position: *intruder_position,
                        is_control: *is_control,
                        head_words: head_words.clone(),
                        intruder_similarity: *intruder_similarity,
                        frequency_band: *frequency_band,
                    })
                }
                (
                    TaskKind::Twm,
                    TaskKey::Twm {
                        origin,
                        family,
                        topics,
                        label,
                        is_control,
                        bold_topic,
                        pair_similarity,
                    },
                ) => Task::Twm(TwmTask {
                    task_id: p.task_id,
                    origin: origin.clone(),
                    model_id: p.model_id,
                    family: family.clone(),
                    topics: topics.clone(),
                    words: p.words,
                    label: *label,
                    is_control: *is_control,
                    bold_topic: *bold_topic,
                    pair_similarity: *pair_similarity,
                }),
                _ => return Err(bad(&p.task_id, "kind differs between bundle and key")),
            };
            tasks.push(task);
        }
        Ok(Self {
            bundle_id: public.bundle_id,
            seed: public.seed,
            tasks,
            tracks,
        })
    }
}

/// Annotator-facing bundle file. Carries no answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicBundle {
    pub schema_version: u32,
    pub bundle_id: String,
    pub seed: u64,
    pub toolkit_version: String,
    pub n_tracks: usize,
    pub tasks: Vec<PublicTask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicTask {
    pub task_id: String,
    pub kind: TaskKind,
    pub model_id: String,
    pub words: Vec<ShownWord>,
    pub track: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaskKey {
    Twi {
        origin: String,
        family: String,
        topic: usize,
        intruder: String,
        intruder_position: usize,
        head_words: Vec<String>,
        is_control: bool,
        intruder_similarity: Option<f64>,
        frequency_band: Option<f64>,
    },
    Twm {
        origin: String,
        family: String,
        topics: Vec<usize>,
        label: u8,
        is_control: bool,
        bold_topic: Option<usize>,
        pair_similarity: Option<f64>,
    },
}

/// task_id -> key. Kept in a separate file from the bundle.
pub type AnswerKey = BTreeMap<String, TaskKey>;

pub fn read_public_bundle(path: &Path) -> Result<PublicBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn read_answer_key(path: &Path) -> Result<AnswerKey> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn read_bundle(bundle: &Path, key: &Path) -> Result<TaskBundle> {
    TaskBundle::from_parts(read_public_bundle(bundle)?, &read_answer_key(key)?)
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn twi(id: &str) -> Task {
        Task::Twi(TwiTask {
            task_id: id.into(),
            origin: id.into(),
            model_id: "m".into(),
            family: "lda".into(),
            topic: 0,
            shown_words: ["b", "x", "a", "c", "d"].map(String::from).to_vec(),
            intruder_position: 1,
            is_control: false,
            head_words: ["a", "b", "c", "d"].map(String::from).to_vec(),
            intruder_similarity: Some(0.125),
            frequency_band: Some(2.0),
        })
    }

    #[test]
    fn round_robin_tracks() {
        let tasks: Vec<Task> = (0..8).map(|i| twi(&format!("t{i}"))).collect();
        let b = assemble_bundle(tasks.clone(), 4, 7, "b").unwrap();
        assert!(b.tracks.iter().all(|t| t.len() == 2));
        let mut all: Vec<&String> = b.tracks.iter().flatten().collect();
        all.sort();
        assert_eq!(all.len(), 8);
        assert_eq!(assemble_bundle(tasks.clone(), 4, 7, "b").unwrap(), b);
        assert!(matches!(
            assemble_bundle(tasks[..3].to_vec(), 4, 7, "b"),
            Err(Error::TooFewTasks {
                tasks: 3,
                tracks: 4
            })
        ));
    }

    #[test]
    fn ids_are_opaque() {
        let tasks: Vec<Task> = (0..12).map(|i| twi(&format!("m-twi-c{i}"))).collect();
        let b = assemble_bundle(tasks, 4, 1, "b").unwrap();
        let ids: Vec<&str> = b.tasks.iter().map(Task::task_id).collect();
        assert_eq!(ids[0], "twi-01");
        assert_eq!(ids[11], "twi-12");
        assert!(b.tasks.iter().all(|t| t.origin().starts_with("m-twi-c")));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(assemble_bundle(vec![twi("a"), twi("a")], 1, 0, "b").is_err());
    }

    #[test]
    fn public_and_key_round_trip() {
        let b = assemble_bundle(vec![twi("only")], 1, 3, "b").unwrap();
        let public: PublicBundle =
            serde_json::from_str(&serde_json::to_string(&b.public()).unwrap()).unwrap();
        let key: AnswerKey =
            serde_json::from_str(&serde_json::to_string(&b.answer_key()).unwrap()).unwrap();
        assert_eq!(TaskBundle::from_parts(public, &key).unwrap(), b);
    }

    #[test]
    fn mismatched_key_rejected() {
        let b = assemble_bundle(vec![twi("only")], 1, 3, "b").unwrap();
        let mut key = b.answer_key();
        if let Some(TaskKey::Twi {
            intruder_position, ..
        }) = key.get_mut("twi-1")
        {
            *intruder_position = 0;
        }
        assert!(TaskBundle::from_parts(b.public(), &key).is_err());
    }
}
