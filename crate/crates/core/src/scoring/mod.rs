//! Scoring of returned annotations: TWI accuracy, TWM macro F1, agreement,
//! and the intruder-similarity difficulty regression.
//!
//! Control tasks never enter a score; they only feed the per-annotator
//! attentiveness tally.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::taskgen::{Task, TaskBundle, TaskKind};

pub mod annotations;
pub mod stats;

pub use annotations::{
    annotation_readers, load_annotations, resolve, write_annotations, AnnotationReader,
    AnnotationRecord, Resolved, Response,
};
pub use stats::{
    adjust_scores, bootstrap, fleiss_kappa, linear_regression, percent_agreement, AdjustedScore,
    Agreement, Confusion, Fleiss, Interval, Regression, DEFAULT_BOOTSTRAP_REPLICATES,
    DEFAULT_CI_LEVEL,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
const TWI_CATEGORIES: usize = 5;
const TWM_CATEGORIES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressionUnit {
    /// One point per annotation.
    #[default]
    Annotation,
    /// One point per task: (similarity, task accuracy).
    Task,
}

impl fmt::Display for RegressionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegressionUnit::Annotation => "annotation",
            RegressionUnit::Task => "task",
        })
    }
}

impl FromStr for RegressionUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annotation" => Ok(Self::Annotation),
            "task" => Ok(Self::Task),
            _ => Err(Error::InvalidArgument(format!(
                "regression unit {s:?}; expected annotation or task"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub seed: u64,
    pub bootstrap_replicates: usize,
    pub ci_level: f64,
    pub regression_unit: RegressionUnit,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            bootstrap_replicates: DEFAULT_BOOTSTRAP_REPLICATES,
            ci_level: DEFAULT_CI_LEVEL,
            regression_unit: RegressionUnit::Annotation,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ci level must be in (0, 1), got {}",
                self.ci_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupScore {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_tasks: usize,
    pub n_annotations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub method: &'static str,
    pub percent: f64,
    pub items_used: usize,
    pub items_excluded: usize,
    /// `None` when undefined (all labels in one category).
    pub fleiss_kappa: Option<f64>,
    pub kappa_annotations_per_item: Option<usize>,
    pub kappa_items_used: usize,
    pub kappa_items_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifficultyReport {
    pub unit: RegressionUnit,
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub p_value: f64,
    pub n: usize,
    pub tasks_without_similarity: usize,
    pub adjusted_per_family: BTreeMap<String, AdjustedScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindScores {
    pub metric: &'static str,
    pub n_tasks: usize,
    pub n_annotations: usize,
    pub per_model: BTreeMap<String, GroupScore>,
    pub per_family: BTreeMap<String, GroupScore>,
    pub agreement: Option<AgreementReport>,
    pub difficulty: Option<DifficultyReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ControlTally {
    pub answered: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreConfigRecord {
    pub seed: u64,
    pub bootstrap_replicates: usize,
    pub ci_level: f64,
    pub ci_method: &'static str,
    pub macro_average: &'static str,
    pub twm_f1_unit: &'static str,
    pub agreement: &'static str,
    pub regression_unit: RegressionUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub bundle_id: String,
    pub config: ScoreConfigRecord,
    pub twi: Option<KindScores>,
    pub twm: Option<KindScores>,
    pub attentiveness: BTreeMap<String, ControlTally>,
    pub warnings: Vec<String>,
}

/// One scored (non-control) task with its annotations in annotator order.
struct Scored<'a> {
    task: &'a Task,
    answers: Vec<usize>,
}

impl Scored<'_> {
    fn accuracy(&self) -> f64 {
        let t = self.task.as_twi().expect("twi task");
        let hits = self
            .answers
            .iter()
            .filter(|&&a| a == t.intruder_position)
            .count();
        hits as f64 / self.answers.len() as f64
    }

    fn confusion(&self) -> Confusion {
        let gold = self.task.as_twm().expect("twm task").label as usize;
        let mut c = Confusion::default();
        for &a in &self.answers {
            c.add(gold, a);
        }
        c
    }
}

fn group_tasks<'a>(
    resolved: &[Resolved],
    bundle: &'a TaskBundle,
    kind: TaskKind,
) -> Vec<Scored<'a>> {
    let index = bundle.index();
    let mut by_task: BTreeMap<&str, Vec<(&str, usize)>> = BTreeMap::new();
    for r in resolved {
        let task = index[r.task_id.as_str()];
        if task.kind() == kind && !task.is_control() {
            by_task
                .entry(task.task_id())
                .or_default()
                .push((&r.annotator_id, r.answer));
        }
    }
    by_task
        .into_iter()
        .map(|(id, mut v)| {
            v.sort();
            Scored {
                task: index[id],
                answers: v.into_iter().map(|(_, a)| a).collect(),
            }
        })
        .collect()
}

fn group_score<'a>(
    tasks: &[&Scored<'a>],
    stat: &(dyn Fn(&[&&Scored<'a>]) -> f64 + Sync),
    cfg: &ScoreConfig,
    seeds: &SeedStream,
) -> GroupScore {
    let iv = bootstrap(tasks, stat, cfg.bootstrap_replicates, cfg.ci_level, seeds);
    GroupScore {
        value: iv.value,
        ci_low: iv.ci_low,
        ci_high: iv.ci_high,
        n_tasks: tasks.len(),
        n_annotations: tasks.iter().map(|t| t.answers.len()).sum(),
    }
}

fn per_group<'a>(
    tasks: &'a [Scored<'a>],
    key: impl Fn(&Task) -> &str,
    stat: &(dyn Fn(&[&&Scored<'a>]) -> f64 + Sync),
    cfg: &ScoreConfig,
    seeds: &SeedStream,
) -> BTreeMap<String, GroupScore> {
    let mut groups: BTreeMap<&str, Vec<&Scored<'a>>> = BTreeMap::new();
    for t in tasks {
        groups.entry(key(t.task)).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|(g, ts)| (g.to_string(), group_score(&ts, stat, cfg, &seeds.child(g))))
        .collect()
}

fn agreement(
    tasks: &[Scored<'_>],
    categories: usize,
    to_category: impl Fn(usize) -> usize,
) -> Result<AgreementReport> {
    let items: Vec<Vec<usize>> = tasks
        .iter()
        .map(|t| t.answers.iter().map(|&a| to_category(a)).collect())
        .collect();
    let pct = percent_agreement(&items)?;
    let (kappa, n, used, excluded) = match fleiss_kappa(&items, categories) {
        Ok(f) => (Some(f.kappa), Some(f.n), f.items_used, f.items_excluded),
        Err(Error::UndefinedKappa) => {
            log::warn!("Fleiss' kappa undefined: every label falls in one category");
            (None, None, 0, items.len())
        }
        Err(e) => return Err(e),
    };
    Ok(AgreementReport {
        method: "pairwise",
        percent: pct.percent,
        items_used: pct.items_used,
        items_excluded: pct.items_excluded,
        fleiss_kappa: kappa,
        kappa_annotations_per_item: n,
        kappa_items_used: used,
        kappa_items_excluded: excluded,
    })
}

fn mean_accuracy(ts: &[&&Scored<'_>]) -> f64 {
    ts.iter().map(|t| t.accuracy()).sum::<f64>() / ts.len() as f64
}

fn pooled_f1(ts: &[&&Scored<'_>]) -> f64 {
    let mut c = Confusion::default();
    for t in ts {
        c.merge(&t.confusion());
    }
    c.macro_f1()
}

/// Regression points of correctness on intruder similarity, with family.
fn difficulty_points(
    tasks: &[Scored<'_>],
    unit: RegressionUnit,
) -> (Vec<(String, f64, f64)>, usize) {
    let mut pts = Vec::new();
    let mut missing = 0;
    for t in tasks {
        let twi = t.task.as_twi().expect("twi task");
        let Some(x) = twi.intruder_similarity else {
            missing += 1;
            continue;
        };
        match unit {
            RegressionUnit::Task => pts.push((twi.family.clone(), x, t.accuracy())),
            RegressionUnit::Annotation => pts.extend(t.answers.iter().map(|&a| {
                (
                    twi.family.clone(),
                    x,
                    f64::from(u8::from(a == twi.intruder_position)),
                )
            })),
        }
    }
    (pts, missing)
}

pub fn difficulty(
    resolved: &[Resolved],
    bundle: &TaskBundle,
    unit: RegressionUnit,
) -> Result<DifficultyReport> {
    let tasks = group_tasks(resolved, bundle, TaskKind::Twi);
    let (pts, missing) = difficulty_points(&tasks, unit);
    if pts.is_empty() {
        return Err(Error::NoData(
            "no annotated task carries an intruder similarity".into(),
        ));
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.1, p.2)).collect();
    let reg = linear_regression(&xy)?;
    let adjusted_per_family = adjust_scores(&pts, &reg)?;
    Ok(DifficultyReport {
        unit,
        slope: reg.slope,
        intercept: reg.intercept,
        pearson_r: reg.pearson_r,
        p_value: reg.p_value,
        n: reg.n,
        tasks_without_similarity: missing,
        adjusted_per_family,
    })
}

pub fn score_twi(
    resolved: &[Resolved],
    bundle: &TaskBundle,
    cfg: &ScoreConfig,
    warnings: &mut Vec<String>,
) -> Result<KindScores> {
    cfg.validate()?;
    let tasks = group_tasks(resolved, bundle, TaskKind::Twi);
    if tasks.is_empty() {
        return Err(Error::NoData("no word intrusion annotations".into()));
    }
    let seeds = SeedStream::new(cfg.seed).child("twi");
    let agreement = agreement(&tasks, TWI_CATEGORIES, |a| a)
        .map_err(|e| warnings.push(format!("twi agreement: {e}")))
        .ok();
    let difficulty = difficulty(resolved, bundle, cfg.regression_unit)
        .map_err(|e| {
            log::warn!("difficulty regression skipped: {e}");
            warnings.push(format!("twi difficulty: {e}"));
        })
        .ok();
    Ok(KindScores {
        metric: "accuracy",
        n_tasks: tasks.len(),
        n_annotations: tasks.iter().map(|t| t.answers.len()).sum(),
        per_model: per_group(
            &tasks,
            Task::model_id,
            &mean_accuracy,
            cfg,
            &seeds.child("model"),
        ),
        per_family: per_group(
            &tasks,
            Task::family,
            &mean_accuracy,
            cfg,
            &seeds.child("family"),
        ),
        agreement,
        difficulty,
    })
}

pub fn score_twm(
    resolved: &[Resolved],
    bundle: &TaskBundle,
    cfg: &ScoreConfig,
    warnings: &mut Vec<String>,
) -> Result<KindScores> {
    cfg.validate()?;
    let tasks = group_tasks(resolved, bundle, TaskKind::Twm);
    if tasks.is_empty() {
        return Err(Error::NoData("no word mixing annotations".into()));
    }
    let seeds = SeedStream::new(cfg.seed).child("twm");
    let mut by_model: BTreeMap<&str, Confusion> = BTreeMap::new();
    for t in &tasks {
        by_model
            .entry(t.task.model_id())
            .or_default()
            .merge(&t.confusion());
    }
    for (m, c) in &by_model {
        for class in [1, 2] {
            if c.f1(class).is_none() {
                let msg = format!(
                    "model {m}: class {class} never gold nor predicted, its F1 counted as 0"
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    let agreement = agreement(&tasks, TWM_CATEGORIES, |a| a - 1)
        .map_err(|e| warnings.push(format!("twm agreement: {e}")))
        .ok();
    Ok(KindScores {
        metric: "macro_f1",
        n_tasks: tasks.len(),
        n_annotations: tasks.iter().map(|t| t.answers.len()).sum(),
        per_model: per_group(
            &tasks,
            Task::model_id,
            &pooled_f1,
            cfg,
            &seeds.child("model"),
        ),
        per_family: per_group(
            &tasks,
            Task::family,
            &pooled_f1,
            cfg,
            &seeds.child("family"),
        ),
        agreement,
        difficulty: None,
    })
}

/// Control-task answers per annotator.
pub fn attentiveness(resolved: &[Resolved], bundle: &TaskBundle) -> BTreeMap<String, ControlTally> {
    let index = bundle.index();
    let mut out: BTreeMap<String, ControlTally> = BTreeMap::new();
    for r in resolved {
        let task = index[r.task_id.as_str()];
        if !task.is_control() {
            continue;
        }
        let correct = match task {
            Task::Twi(t) => r.answer == t.intruder_position,
            Task::Twm(t) => r.answer == t.label as usize,
        };
        let e = out.entry(r.annotator_id.clone()).or_default();
        e.answered += 1;
        e.correct += usize::from(correct);
    }
    out
}

/// Scores every task kind present in the annotations.
pub fn score(
    records: &[AnnotationRecord],
    bundle: &TaskBundle,
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    cfg.validate()?;
    let resolved = resolve(records, bundle)?;
    let index = bundle.index();
    let present = |kind: TaskKind| {
        resolved.iter().any(|r| {
            let t = index[r.task_id.as_str()];
            t.kind() == kind && !t.is_control()
        })
    };
    let mut warnings = Vec::new();
    let twi = present(TaskKind::Twi)
        .then(|| score_twi(&resolved, bundle, cfg, &mut warnings))
        .transpose()?;
    let twm = present(TaskKind::Twm)
        .then(|| score_twm(&resolved, bundle, cfg, &mut warnings))
        .transpose()?;
    if twi.is_none() && twm.is_none() {
        return Err(Error::NoData("no annotations of non-control tasks".into()));
    }
    Ok(ScoreReport {
        schema_version: REPORT_SCHEMA_VERSION,
        toolkit_version: crate::VERSION.to_string(),
        bundle_id: bundle.bundle_id.clone(),
        config: ScoreConfigRecord {
            seed: cfg.seed,
            bootstrap_replicates: cfg.bootstrap_replicates,
            ci_level: cfg.ci_level,
            ci_method: "percentile bootstrap over tasks",
            macro_average: "per model: mean over tasks of annotator-mean correctness; per family: mean over the family's tasks",
            twm_f1_unit: "every annotation is one prediction",
            agreement: "pairwise",
            regression_unit: cfg.regression_unit,
        },
        twi,
        twm,
        attentiveness: attentiveness(&resolved, bundle),
        warnings,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    kind: &'a str,
    level: &'a str,
    name: &'a str,
    metric: &'a str,
    value: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    n_tasks: Option<usize>,
    n_annotations: Option<usize>,
}

impl ScoreReport {
    /// Flat table for plotting: one row per (kind, level, name, metric).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut put = |row: CsvRow<'_>| {
            w.serialize(row)
                .map_err(|e| Error::InvalidArgument(e.to_string()))
        };
        for (kind, scores) in [("twi", &self.twi), ("twm", &self.twm)] {
            let Some(s) = scores else { continue };
            for (level, groups) in [("model", &s.per_model), ("family", &s.per_family)] {
                for (name, g) in groups {
                    put(CsvRow {
                        kind,
                        level,
                        name,
                        metric: s.metric,
                        value: Some(g.value),
                        ci_low: Some(g.ci_low),
                        ci_high: Some(g.ci_high),
                        n_tasks: Some(g.n_tasks),
                        n_annotations: Some(g.n_annotations),
                    })?;
                }
            }
            if let Some(a) = &s.agreement {
                let row = |metric, value| CsvRow {
                    kind,
                    level: "all",
                    name: "all",
                    metric,
                    value,
                    ci_low: None,
                    ci_high: None,
                    n_tasks: Some(a.items_used),
                    n_annotations: None,
                };
                put(row("percent_agreement", Some(a.percent)))?;
                put(row("fleiss_kappa", a.fleiss_kappa))?;
            }
            if let Some(d) = &s.difficulty {
                for (name, adj) in &d.adjusted_per_family {
                    put(CsvRow {
                        kind,
                        level: "family",
                        name,
                        metric: "adjusted_accuracy",
                        value: Some(adj.adjusted),
                        ci_low: None,
                        ci_high: None,
                        n_tasks: None,
                        n_annotations: Some(adj.n),
                    })?;
                }
                for (metric, value) in [
                    ("difficulty_slope", d.slope),
                    ("difficulty_intercept", d.intercept),
                    ("difficulty_pearson_r", d.pearson_r),
                    ("difficulty_p_value", d.p_value),
                ] {
                    put(CsvRow {
                        kind,
                        level: "all",
                        name: "all",
                        metric,
                        value: Some(value),
                        ci_low: None,
                        ci_high: None,
                        n_tasks: None,
                        n_annotations: Some(d.n),
                    })?;
                }
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
    }
}
