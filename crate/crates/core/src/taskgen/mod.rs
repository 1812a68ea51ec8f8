//! Human-evaluation task generation.
//!
//! Two task families are produced from topic models:
//!
//! * **TWI** (topic word intrusion): a topic's four top words plus one
//!   intruder that sits in the topic's lower half but in the top decile of
//!   another topic, frequency-matched to the head.
//! * **TWM** (topic word mixing): eight words that are either one topic's top
//!   eight (`y = 1`) or the top four of two confusable topics (`y = 2`), with
//!   half the words bolded.
//!
//! Generators are registered by name (`twi`, `twm`) and share a
//! [`GenContext`]. Bundling, the sealed answer key and the exporters live in
//! the submodules.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::embeddings::{EmbeddingTable, DEFAULT_TOPIC_EMBED_TOP_N};
use crate::error::{Error, Result};
use crate::model_io::TopicModel;
use crate::registry::{Named, Registry};
use crate::seed::SeedStream;

pub mod bundle;
pub mod export;
pub mod twi;
pub mod twm;

pub use bundle::{assemble_bundle, AnswerKey, PublicBundle, PublicTask, TaskBundle, TaskKey};
pub use export::{bundle_exporters, BundleExporter};
pub use twi::{control_intruder, gen_twi, select_intruder, IntruderChoice};
pub use twm::{candidate_pairs, gen_twm};

/// Models with at most this many topics are fully included by the standard plan.
pub const FULL_INCLUSION_MAX_K: usize = 15;
pub const STANDARD_TWI_FRACTION: f64 = 0.6;
pub const STANDARD_TWM_FRACTION: f64 = 0.5;
pub const DEFAULT_TRACKS: usize = 4;
pub const DEFAULT_CONTROLS_PER_MODEL: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Twi,
    Twm,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Twi => "twi",
            TaskKind::Twm => "twm",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShownWord {
    pub w: String,
    pub bold: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwiTask {
    pub task_id: String,
    /// Descriptive generator id. Bundling replaces `task_id` with an opaque
    /// one so that ids shown to annotators reveal nothing.
    pub origin: String,
    pub model_id: String,
    pub family: String,
    pub topic: usize,
    pub shown_words: Vec<String>,
    pub intruder_position: usize,
    pub is_control: bool,
    pub head_words: Vec<String>,
    pub intruder_similarity: Option<f64>,
    /// Multiplicative frequency band the intruder was drawn from
    /// (`None` for controls).
    pub frequency_band: Option<f64>,
}

impl TwiTask {
    pub fn intruder(&self) -> &str {
        &self.shown_words[self.intruder_position]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwmTask {
    pub task_id: String,
    pub origin: String,
    pub model_id: String,
    pub family: String,
    /// One topic for `label == 1`, two for `label == 2`.
    pub topics: Vec<usize>,
    pub words: Vec<ShownWord>,
    pub label: u8,
    pub is_control: bool,
    /// For mixed tasks, the topic whose top words are bold.
    pub bold_topic: Option<usize>,
    pub pair_similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Twi(TwiTask),
    Twm(TwmTask),
}

impl Task {
    pub fn task_id(&self) -> &str {
        match self {
            Task::Twi(t) => &t.task_id,
            Task::Twm(t) => &t.task_id,
        }
    }

    pub fn origin(&self) -> &str {
        match self {
            Task::Twi(t) => &t.origin,
            Task::Twm(t) => &t.origin,
        }
    }

    pub(crate) fn set_task_id(&mut self, id: String) {
        match self {
            Task::Twi(t) => t.task_id = id,
            Task::Twm(t) => t.task_id = id,
        }
    }

    pub fn model_id(&self) -> &str {
        match self {
            Task::Twi(t) => &t.model_id,
            Task::Twm(t) => &t.model_id,
        }
    }

    pub fn family(&self) -> &str {
        match self {
            Task::Twi(t) => &t.family,
            Task::Twm(t) => &t.family,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Twi(_) => TaskKind::Twi,
            Task::Twm(_) => TaskKind::Twm,
        }
    }

    pub fn is_control(&self) -> bool {
        match self {
            Task::Twi(t) => t.is_control,
            Task::Twm(t) => t.is_control,
        }
    }

    /// Words as presented to annotators.
    pub fn shown(&self) -> Vec<ShownWord> {
        match self {
            Task::Twi(t) => t
                .shown_words
                .iter()
                .map(|w| ShownWord {
                    w: w.clone(),
                    bold: false,
                })
                .collect(),
            Task::Twm(t) => t.words.clone(),
        }
    }

    pub fn as_twi(&self) -> Option<&TwiTask> {
        match self {
            Task::Twi(t) => Some(t),
            Task::Twm(_) => None,
        }
    }

    pub fn as_twm(&self) -> Option<&TwmTask> {
        match self {
            Task::Twm(t) => Some(t),
            Task::Twi(_) => None,
        }
    }
}

/// How many topics (TWI) or candidate pairs (TWM) of a model are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingPlan {
    /// Everything at K <= 15; otherwise 60% of topics for TWI and 50% of
    /// candidate tasks for TWM.
    Standard,
    All,
    Fraction(f64),
}

impl SamplingPlan {
    fn fraction(&self, k: usize, kind: TaskKind) -> f64 {
        match *self {
            SamplingPlan::All => 1.0,
            SamplingPlan::Fraction(f) => f,
            SamplingPlan::Standard if k <= FULL_INCLUSION_MAX_K => 1.0,
            SamplingPlan::Standard => match kind {
                TaskKind::Twi => STANDARD_TWI_FRACTION,
                TaskKind::Twm => STANDARD_TWM_FRACTION,
            },
        }
    }

    /// Number of TWI topics to draw from a K-topic model.
    pub fn twi_topics(&self, k: usize) -> usize {
        sample_size(self.fraction(k, TaskKind::Twi), k)
    }

    /// Number of mixed pairs to draw from `candidates` for a K-topic model.
    pub fn twm_pairs(&self, k: usize, candidates: usize) -> usize {
        sample_size(self.fraction(k, TaskKind::Twm), candidates)
    }
}

/// `round(fraction * n)`, at least 1 when `n > 0`.
pub fn sample_size(fraction: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

impl fmt::Display for SamplingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingPlan::Standard => f.write_str("standard"),
            SamplingPlan::All => f.write_str("all"),
            SamplingPlan::Fraction(x) => write!(f, "fraction={x}"),
        }
    }
}

impl FromStr for SamplingPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(SamplingPlan::Standard),
            "all" => Ok(SamplingPlan::All),
            _ => {
                let value = s.strip_prefix("fraction=").ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "sampling plan {s:?}; expected standard, all or fraction=F"
                    ))
                })?;
                let f: f64 = value.parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad sampling fraction {value:?}"))
                })?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sampling fraction must be in (0, 1], got {f}"
                    )));
                }
                Ok(SamplingPlan::Fraction(f))
            }
        }
    }
}

impl Serialize for SamplingPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SamplingPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkipRecord {
    pub model_id: String,
    pub topic: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generated {
    pub tasks: Vec<Task>,
    pub skipped: Vec<SkipRecord>,
    /// Non-fatal observations: band relaxations, repeated intruders, fallbacks.
    pub notes: Vec<String>,
}

impl Generated {
    pub fn extend(&mut self, other: Generated) {
        self.tasks.extend(other.tasks);
        self.skipped.extend(other.skipped);
        self.notes.extend(other.notes);
    }
}

/// Shared inputs for task generators.
#[derive(Debug, Clone)]
pub struct GenContext<'a> {
    pub vocab: Option<&'a Vocabulary>,
    pub embeddings: Option<&'a EmbeddingTable>,
    pub plan: SamplingPlan,
    pub controls_per_model: usize,
    pub seeds: SeedStream,
    /// Per-model, per-topic quality (C_V) used to pick single-topic TWM
    /// controls.
    pub topic_quality: Option<&'a BTreeMap<String, Vec<Option<f64>>>>,
    pub topic_embed_top_n: usize,
    pub frequency_bands: Vec<f64>,
}

impl<'a> GenContext<'a> {
    pub fn new(seed: u64) -> Self {
        Self {
            vocab: None,
            embeddings: None,
            plan: SamplingPlan::Standard,
            controls_per_model: DEFAULT_CONTROLS_PER_MODEL,
            seeds: SeedStream::new(seed),
            topic_quality: None,
            topic_embed_top_n: DEFAULT_TOPIC_EMBED_TOP_N,
            frequency_bands: twi::FREQUENCY_BANDS.to_vec(),
        }
    }
}

pub trait TaskGenerator: Named + Send + Sync {
    fn kind(&self) -> TaskKind;
    fn generate(&self, model: &TopicModel, ctx: &GenContext<'_>) -> Result<Generated>;
}

pub struct TwiGenerator;

impl Named for TwiGenerator {
    fn name(&self) -> &'static str {
        "twi"
    }
}

impl TaskGenerator for TwiGenerator {
    fn kind(&self) -> TaskKind {
        TaskKind::Twi
    }

    fn generate(&self, model: &TopicModel, ctx: &GenContext<'_>) -> Result<Generated> {
        gen_twi(model, ctx)
    }
}

pub struct TwmGenerator;

impl Named for TwmGenerator {
    fn name(&self) -> &'static str {
        "twm"
    }
}

impl TaskGenerator for TwmGenerator {
    fn kind(&self) -> TaskKind {
        TaskKind::Twm
    }

    fn generate(&self, model: &TopicModel, ctx: &GenContext<'_>) -> Result<Generated> {
        gen_twm(model, ctx)
    }
}

pub fn task_generators() -> Registry<dyn TaskGenerator> {
    Registry::<dyn TaskGenerator>::new("task generator")
        .with(Box::new(TwiGenerator))
        .with(Box::new(TwmGenerator))
}

/// Runs one generator over every model, in model order.
pub fn generate_all(
    generator: &dyn TaskGenerator,
    models: &[TopicModel],
    ctx: &GenContext<'_>,
) -> Result<Generated> {
    let mut out = Generated::default();
    for m in models {
        out.extend(generator.generate(m, ctx)?);
    }
    Ok(out)
}
