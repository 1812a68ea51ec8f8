//! Annotation records, import formats and resolution against a bundle.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};
use crate::taskgen::export::{LS_TWI_CHOICES, LS_TWM_CHOICES};
use crate::taskgen::{Task, TaskBundle};

/// A chosen word (TWI) or a class (TWM).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Class(i64),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub task_id: String,
    pub annotator_id: String,
    pub response: Response,
}

impl AnnotationRecord {
    pub fn new(
        task_id: impl Into<String>,
        annotator_id: impl Into<String>,
        response: Response,
    ) -> Self {
        Self {
            task_id: task_id.into(),
            annotator_id: annotator_id.into(),
            response,
        }
    }
}

/// A validated annotation. `answer` is the shown-word position for TWI and
/// the class (1 or 2) for TWM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub index: usize,
    pub task_id: String,
    pub annotator_id: String,
    pub answer: usize,
}

/// Checks every record against the bundle and maps responses to answers.
pub fn resolve(records: &[AnnotationRecord], bundle: &TaskBundle) -> Result<Vec<Resolved>> {
    let index = bundle.index();
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let task = index
            .get(r.task_id.as_str())
            .ok_or_else(|| Error::UnknownTask {
                index: i,
                task_id: r.task_id.clone(),
            })?;
        if !seen.insert((&r.task_id, &r.annotator_id)) {
            return Err(Error::DuplicateAnnotation {
                index: i,
                task_id: r.task_id.clone(),
                annotator_id: r.annotator_id.clone(),
            });
        }
        let invalid = |message: String| Error::InvalidResponse { index: i, message };
        let answer = match (task, &r.response) {
            (Task::Twi(t), Response::Word(w)) => t
                .shown_words
                .iter()
                .position(|s| s == w)
                .ok_or_else(|| invalid(format!("{w:?} is not a shown word of {}", t.task_id)))?,
            (Task::Twi(t), Response::Class(c)) => {
                return Err(invalid(format!(
                    "expected a word for {}, got {c}",
                    t.task_id
                )))
            }
            (Task::Twm(_), Response::Class(c @ (1 | 2))) => *c as usize,
            (Task::Twm(_), Response::Word(w)) if w.trim() == "1" || w.trim() == "2" => {
                w.trim().parse().expect("checked")
            }
            (Task::Twm(t), other) => {
                return Err(invalid(format!(
                    "expected class 1 or 2 for {}, got {other:?}",
                    t.task_id
                )))
            }
        };
        out.push(Resolved {
            index: i,
            task_id: r.task_id.clone(),
            annotator_id: r.annotator_id.clone(),
            answer,
        });
    }
    Ok(out)
}

pub trait AnnotationReader: Named + Send + Sync {
    fn parse(&self, path: &Path, text: &str) -> Result<Vec<AnnotationRecord>>;
}

/// `[{"task_id", "annotator_id", "response"}, ...]`
pub struct NativeAnnotations;

impl Named for NativeAnnotations {
    fn name(&self) -> &'static str {
        "native"
    }
}

impl AnnotationReader for NativeAnnotations {
    fn parse(&self, path: &Path, text: &str) -> Result<Vec<AnnotationRecord>> {
        serde_json::from_str(text).map_err(|e| Error::json(path, e))
    }
}

/// A LabelStudio JSON export of tasks produced by the `labelstudio-json`
/// exporter.
pub struct LabelStudioAnnotations;

impl Named for LabelStudioAnnotations {
    fn name(&self) -> &'static str {
        "labelstudio"
    }
}

#[derive(Deserialize)]
struct LsTask {
    data: LsData,
    #[serde(default)]
    annotations: Vec<LsAnnotation>,
}

#[derive(Deserialize)]
struct LsData {
    task_id: String,
}

#[derive(Deserialize)]
struct LsAnnotation {
    completed_by: serde_json::Value,
    #[serde(default)]
    was_cancelled: bool,
    #[serde(default)]
    result: Vec<LsResult>,
}

#[derive(Deserialize)]
struct LsResult {
    from_name: String,
    value: LsValue,
}

#[derive(Deserialize)]
struct LsValue {
    #[serde(default)]
    choices: Vec<String>,
}

fn ls_annotator(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Object(o) => o
            .get("email")
            .and_then(|e| e.as_str().map(String::from))
            .or_else(|| o.get("id").and_then(ls_annotator)),
        _ => None,
    }
}

impl AnnotationReader for LabelStudioAnnotations {
    fn parse(&self, path: &Path, text: &str) -> Result<Vec<AnnotationRecord>> {
        let tasks: Vec<LsTask> = serde_json::from_str(text).map_err(|e| Error::json(path, e))?;
        let mut out = Vec::new();
        for task in tasks {
            for (n, a) in task.annotations.iter().enumerate() {
                if a.was_cancelled {
                    continue;
                }
                let annotator_id = ls_annotator(&a.completed_by).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    message: format!("task {:?} annotation {n}: no annotator", task.data.task_id),
                })?;
                let choice = a
                    .result
                    .iter()
                    .find(|r| r.from_name == LS_TWI_CHOICES || r.from_name == LS_TWM_CHOICES)
                    .and_then(|r| r.value.choices.first().map(|c| (r.from_name.as_str(), c)));
                let Some((from, choice)) = choice else {
                    log::warn!(
                        "task {:?}: annotation by {annotator_id} has no choice",
                        task.data.task_id
                    );
                    continue;
                };
                let response = match (from, choice.parse::<i64>()) {
                    (LS_TWM_CHOICES, Ok(c)) => Response::Class(c),
                    _ => Response::Word(choice.clone()),
                };
                out.push(AnnotationRecord {
                    task_id: task.data.task_id.clone(),
                    annotator_id,
                    response,
                });
            }
        }
        Ok(out)
    }
}

pub fn annotation_readers() -> Registry<dyn AnnotationReader> {
    Registry::<dyn AnnotationReader>::new("annotation format")
        .with(Box::new(NativeAnnotations))
        .with(Box::new(LabelStudioAnnotations))
}

pub fn load_annotations(path: &Path, format: &str) -> Result<Vec<AnnotationRecord>> {
    let readers = annotation_readers();
    let reader = readers.get(format)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    reader.parse(path, &text)
}

pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    let text = serde_json::to_string_pretty(records).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
