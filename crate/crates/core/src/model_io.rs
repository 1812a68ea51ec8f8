//! Topic models as ranked word lists.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest ranking taskgen accepts. Below this the lower-50% and top-10%
/// rank constraints degenerate.
pub const RANK_FLOOR: usize = 40;

pub const MODEL_FILE_SUFFIX: &str = ".model.json";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopicRef {
    pub model_id: String,
    pub topic_index: usize,
}

/// On-disk model schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub model_id: String,
    #[serde(default)]
    pub family: String,
    #[serde(default)]
    pub granularity_label: String,
    pub topics: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct TopicModel {
    model_id: String,
    family: String,
    granularity_label: String,
    topics: Vec<Vec<String>>,
    // word -> 1-based rank, per topic
    ranks: Vec<HashMap<String, usize>>,
}

impl TopicModel {
    pub fn new(
        model_id: impl Into<String>,
        family: impl Into<String>,
        granularity_label: impl Into<String>,
        topics: Vec<Vec<String>>,
    ) -> Result<Self> {
        if topics.len() < 2 {
            return Err(Error::TooFewTopics(topics.len()));
        }
        let mut ranks = Vec::with_capacity(topics.len());
        for (t, ranking) in topics.iter().enumerate() {
            if ranking.is_empty() {
                return Err(Error::EmptyTopic(t));
            }
            let mut index = HashMap::with_capacity(ranking.len());
            for (pos, word) in ranking.iter().enumerate() {
                if index.insert(word.clone(), pos + 1).is_some() {
                    return Err(Error::DuplicateWord {
                        topic: t,
                        word: word.clone(),
                    });
                }
            }
            ranks.push(index);
        }
        let k = topics.len();
        let granularity_label = match granularity_label.into() {
            l if l.is_empty() => format!("K={k}"),
            l => l,
        };
        Ok(Self {
            model_id: model_id.into(),
            family: family.into(),
            granularity_label,
            topics,
            ranks,
        })
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        Self::new(
            file.model_id,
            file.family,
            file.granularity_label,
            file.topics,
        )
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            model_id: self.model_id.clone(),
            family: self.family.clone(),
            granularity_label: self.granularity_label.clone(),
            topics: self.topics.clone(),
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn granularity_label(&self) -> &str {
        &self.granularity_label
    }

    pub fn k(&self) -> usize {
        self.topics.len()
    }

    pub fn topics(&self) -> &[Vec<String>] {
        &self.topics
    }

    pub fn topic_ref(&self, topic_index: usize) -> TopicRef {
        TopicRef {
            model_id: self.model_id.clone(),
            topic_index,
        }
    }

    fn ranking(&self, topic: usize) -> Result<&[String]> {
        self.topics
            .get(topic)
            .map(Vec::as_slice)
            .ok_or(Error::TopicOutOfRange {
                index: topic,
                k: self.k(),
            })
    }

    pub fn ranking_len(&self, topic: usize) -> usize {
        self.topics.get(topic).map_or(0, Vec::len)
    }

    /// The first `m` words of a topic's ranking.
    pub fn top_words(&self, topic: usize, m: usize) -> Result<&[String]> {
        let ranking = self.ranking(topic)?;
        if m == 0 || m > ranking.len() {
            return Err(Error::RankOutOfRange {
                topic,
                requested: m,
                available: ranking.len(),
            });
        }
        Ok(&ranking[..m])
    }

    /// 1-based rank of `word` in a topic, if present.
    pub fn rank_position(&self, topic: usize, word: &str) -> Option<usize> {
        self.ranks.get(topic)?.get(word).copied()
    }

    /// `rank / L_k`; 0.01 for the head of a 100-word ranking, 1.0 for its tail.
    pub fn rank_percentile(&self, topic: usize, word: &str) -> Option<f64> {
        let pos = self.rank_position(topic, word)?;
        Some(pos as f64 / self.ranking_len(topic) as f64)
    }

    pub fn check_rank_floor(&self, floor: usize) -> Result<()> {
        match self.topics.iter().position(|t| t.len() < floor) {
            Some(topic) => Err(Error::RankingTooShort {
                model_id: self.model_id.clone(),
                topic,
                len: self.topics[topic].len(),
                floor,
            }),
            None => Ok(()),
        }
    }

    /// Distinct words across all rankings.
    pub fn vocabulary(&self) -> HashSet<&str> {
        self.topics.iter().flatten().map(String::as_str).collect()
    }
}

pub fn parse_model(path: &Path, text: &str) -> Result<TopicModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::json(path, e))?;
    TopicModel::from_file(file)
}

pub fn load_model(path: &Path) -> Result<TopicModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(path, &text)
}

pub fn write_model(model: &TopicModel, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&model.to_file()).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Loads every `*.model.json` in `dir`, ordered by file name.
pub fn load_model_dir(dir: &Path) -> Result<Vec<TopicModel>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_model = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(MODEL_FILE_SUFFIX));
        if is_model {
            paths.push(path);
        }
    }
    paths.sort();
    let models: Vec<TopicModel> = paths.iter().map(|p| load_model(p)).collect::<Result<_>>()?;
    let mut ids = HashSet::new();
    for m in &models {
        if !ids.insert(m.model_id()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate model_id {:?} in {}",
                m.model_id(),
                dir.display()
            )));
        }
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn parse_two_topics() {
        let m = parse_model(
            Path::new("m"),
            r#"{"model_id":"m","family":"lda","granularity_label":"K≈10","topics":[["a","b"],["c","d"]]}"#,
        )
        .unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(m.topics()[1], ["c", "d"]);
        assert_eq!(m.family(), "lda");
    }

    #[test]
    fn invalid_models() {
        let e = TopicModel::new("m", "", "", vec![words("a b a"), words("c")]).unwrap_err();
        match e {
            Error::DuplicateWord { topic, word } => {
                assert_eq!(topic, 0);
                assert_eq!(word, "a");
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            TopicModel::new("m", "", "", vec![words("a")]),
            Err(Error::TooFewTopics(1))
        ));
        assert!(matches!(
            TopicModel::new("m", "", "", vec![words("a"), vec![]]),
            Err(Error::EmptyTopic(1))
        ));
    }

    #[test]
    fn top_words_prefix() {
        let m = TopicModel::new("m", "", "", vec![words("x y z"), words("q")]).unwrap();
        assert_eq!(m.top_words(0, 2).unwrap(), ["x", "y"]);
        assert_eq!(m.top_words(0, 3).unwrap(), ["x", "y", "z"]);
        assert!(matches!(
            m.top_words(0, 4),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            m.top_words(0, 0),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            m.top_words(5, 1),
            Err(Error::TopicOutOfRange { .. })
        ));
    }

    #[test]
    fn percentile_boundaries() {
        let ranking: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        let m = TopicModel::new("m", "", "", vec![ranking, words("q")]).unwrap();
        assert_eq!(m.rank_percentile(0, "w0"), Some(0.01));
        assert_eq!(m.rank_percentile(0, "w49"), Some(0.5));
        assert!(m.rank_percentile(0, "w50").unwrap() > 0.5);
        assert_eq!(m.rank_percentile(0, "nope"), None);
        assert_eq!(m.rank_percentile(9, "w0"), None);
    }

    #[test]
    fn rank_floor() {
        let m = TopicModel::new("m", "", "", vec![words("a b c"), words("d e f g")]).unwrap();
        assert!(m.check_rank_floor(3).is_ok());
        assert!(matches!(
            m.check_rank_floor(4),
            Err(Error::RankingTooShort {
                topic: 0,
                len: 3,
                ..
            })
        ));
    }

    #[test]
    fn default_granularity_label() {
        let m = TopicModel::new("m", "", "", vec![words("a"), words("b")]).unwrap();
        assert_eq!(m.granularity_label(), "K=2");
    }
}
