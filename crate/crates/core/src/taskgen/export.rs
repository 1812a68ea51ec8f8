//! Bundle exporters. The native pair (bundle + sealed key) is always
//! written; other formats add annotator-facing files next to it.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::bundle::write_json;
use super::{Task, TaskBundle, TaskKind};
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

pub const BUNDLE_SUFFIX: &str = ".bundle.json";
pub const KEY_SUFFIX: &str = ".key.json";

/// Choice control names used in the LabelStudio configs and read back by
/// the annotation importer.
pub const LS_TWI_CHOICES: &str = "intruder";
pub const LS_TWM_CHOICES: &str = "topics";

pub trait BundleExporter: Named + Send + Sync {
    /// Writes files under `dir` named from `stem`; returns their paths.
    fn export(&self, bundle: &TaskBundle, dir: &Path, stem: &str) -> Result<Vec<PathBuf>>;

    /// Files an annotator may see. The key file is never among them.
    fn annotator_files(&self, written: &[PathBuf]) -> Vec<PathBuf> {
        written
            .iter()
            .filter(|p| !p.to_string_lossy().ends_with(KEY_SUFFIX))
            .cloned()
            .collect()
    }
}

pub struct NativeJson;

impl Named for NativeJson {
    fn name(&self) -> &'static str {
        "native-json"
    }
}

impl BundleExporter for NativeJson {
    fn export(&self, bundle: &TaskBundle, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let public = dir.join(format!("{stem}{BUNDLE_SUFFIX}"));
        let key = dir.join(format!("{stem}{KEY_SUFFIX}"));
        write_json(&public, &bundle.public())?;
        write_json(&key, &bundle.answer_key())?;
        Ok(vec![public, key])
    }
}

pub struct LabelStudioJson;

impl Named for LabelStudioJson {
    fn name(&self) -> &'static str {
        "labelstudio-json"
    }
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Serialize)]
struct LsItem {
    data: serde_json::Value,
}

/// One LabelStudio task. Bold words are wrapped in `<b>`.
pub fn labelstudio_item(task: &Task, track: usize) -> serde_json::Value {
    let words = task.shown();
    let html = words
        .iter()
        .map(|w| {
            let text = escape_html(&w.w);
            if w.bold {
                format!("<b>{text}</b>")
            } else {
                text
            }
        })
        .collect::<Vec<_>>()
        .join(" &middot; ");
    let mut data = json!({
        "task_id": task.task_id(),
        "kind": task.kind(),
        "track": track,
        "html": format!("<p>{html}</p>"),
    });
    if task.kind() == TaskKind::Twi {
        data["options"] = words.iter().map(|w| json!({ "value": w.w })).collect();
    }
    serde_json::to_value(LsItem { data }).expect("plain JSON value")
}

pub fn labelstudio_config(kind: TaskKind) -> String {
    match kind {
        TaskKind::Twi => format!(
            r#"<View>
  <Header value="Which word does not belong with the others?"/>
  <HyperText name="words" value="$html"/>
  <Choices name="{LS_TWI_CHOICES}" toName="words" choice="single" required="true" value="$options"/>
</View>
"#
        ),
        TaskKind::Twm => format!(
            r#"<View>
  <Header value="How many topics do these words come from?"/>
  <HyperText name="words" value="$html"/>
  <Choices name="{LS_TWM_CHOICES}" toName="words" choice="single" required="true">
    <Choice value="1"/>
    <Choice value="2"/>
  </Choices>
</View>
"#
        ),
    }
}

impl BundleExporter for LabelStudioJson {
    fn export(&self, bundle: &TaskBundle, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let mut written = NativeJson.export(bundle, dir, stem)?;
        let mut kinds: Vec<TaskKind> = bundle.tasks.iter().map(Task::kind).collect();
        kinds.sort();
        kinds.dedup();
        for track in 0..bundle.n_tracks() {
            let items: Vec<serde_json::Value> = bundle
                .track_tasks(track)
                .into_iter()
                .map(|t| labelstudio_item(t, track))
                .collect();
            let path = dir.join(format!("{stem}.track{track}.labelstudio.json"));
            write_json(&path, &items)?;
            written.push(path);
        }
        for kind in kinds {
            let path = dir.join(format!("{stem}.labelstudio-{kind}.xml"));
            std::fs::write(&path, labelstudio_config(kind)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn bundle_exporters() -> Registry<dyn BundleExporter> {
    Registry::<dyn BundleExporter>::new("bundle format")
        .with(Box::new(NativeJson))
        .with(Box::new(LabelStudioJson))
}
