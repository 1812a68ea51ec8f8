//! Writes the synthetic campaign used by the integration tests.
//!
//!     cargo run -p topeval-core --example make_fixtures -- crates/core/tests/fixtures

use std::path::PathBuf;

use topeval_core::model_io::write_model;
use topeval_core::synth::{campaign, embeddings_text, CampaignSpec};

pub const FIXTURE_SEED: u64 = 20240611;

fn main() -> topeval_core::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "crates/core/tests/fixtures".into()),
    );
    let models_dir = dir.join("models");
    std::fs::create_dir_all(&models_dir).expect("create fixture dir");
    let c = campaign(&CampaignSpec::default(), FIXTURE_SEED);
    let corpus: String = c
        .corpus
        .documents()
        .iter()
        .map(|d| d.tokens.join(" ") + "\n")
        .collect();
    std::fs::write(dir.join("corpus.txt"), corpus).expect("write corpus");
    std::fs::write(dir.join("embeddings.txt"), embeddings_text(&c.embeddings))
        .expect("write embeddings");
    for m in &c.models {
        write_model(m, &models_dir.join(format!("{}.model.json", m.model_id())))?;
    }
    println!(
        "{} documents, {} models -> {}",
        c.corpus.len(),
        c.models.len(),
        dir.display()
    );
    Ok(())
}
