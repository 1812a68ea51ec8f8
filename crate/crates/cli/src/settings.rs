//! Run settings: `--config` JSON overlaid by flags, then defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topeval_core::corpus::{DEFAULT_MIN_SENTENCE_FREQ, DEFAULT_WINDOW_SIZE};
use topeval_core::embeddings::DEFAULT_TOPIC_EMBED_TOP_N;
use topeval_core::metrics::DEFAULT_TOP_N;
use topeval_core::scoring::{DEFAULT_BOOTSTRAP_REPLICATES, DEFAULT_CI_LEVEL};
use topeval_core::taskgen::{DEFAULT_CONTROLS_PER_MODEL, DEFAULT_TRACKS};
use topeval_core::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub min_sentence_freq: Option<u64>,
    pub window_size: Option<usize>,
    pub top_n: Option<usize>,
    pub include_self: Option<bool>,
    pub topic_embed_topn: Option<usize>,
    pub sampling: Option<String>,
    pub controls: Option<usize>,
    pub tracks: Option<usize>,
    pub format: Option<String>,
    pub annotation_format: Option<String>,
    pub bootstrap: Option<usize>,
    pub ci_level: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Effective values, recorded in outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub min_sentence_freq: u64,
    pub window_size: usize,
    pub top_n: usize,
    pub include_self: bool,
    pub topic_embed_topn: usize,
    pub sampling: String,
    pub controls: usize,
    pub tracks: usize,
    pub format: String,
    pub annotation_format: String,
    pub bootstrap: usize,
    pub ci_level: f64,
}

impl Settings {
    pub fn from_file(file: FileConfig) -> Self {
        Self {
            seed: file.seed.unwrap_or(0),
            out_dir: file.out_dir.unwrap_or_else(|| PathBuf::from(".")),
            min_sentence_freq: file.min_sentence_freq.unwrap_or(DEFAULT_MIN_SENTENCE_FREQ),
            window_size: file.window_size.unwrap_or(DEFAULT_WINDOW_SIZE),
            top_n: file.top_n.unwrap_or(DEFAULT_TOP_N),
            include_self: file.include_self.unwrap_or(true),
            topic_embed_topn: file.topic_embed_topn.unwrap_or(DEFAULT_TOPIC_EMBED_TOP_N),
            sampling: file.sampling.unwrap_or_else(|| "standard".into()),
            controls: file.controls.unwrap_or(DEFAULT_CONTROLS_PER_MODEL),
            tracks: file.tracks.unwrap_or(DEFAULT_TRACKS),
            format: file.format.unwrap_or_else(|| "native-json".into()),
            annotation_format: file.annotation_format.unwrap_or_else(|| "native".into()),
            bootstrap: file.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP_REPLICATES),
            ci_level: file.ci_level.unwrap_or(DEFAULT_CI_LEVEL),
        }
    }
}

/// Overwrites `slot` when the flag was given.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}
