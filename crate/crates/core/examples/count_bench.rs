use std::time::Instant;

use topeval_core::corpus::{build_vocabulary, WindowCounter};
use topeval_core::synth::zipf_corpus;

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10_000_000);
    let t = Instant::now();
    let corpus = zipf_corpus(n, 20_000, 1000, 1.0, 7);
    println!("generate {:?}", t.elapsed());
    let t = Instant::now();
    let vocab = build_vocabulary(&corpus, 0);
    println!("vocab {} words {:?}", vocab.len(), t.elapsed());
    let t = Instant::now();
    let counts = WindowCounter::new(110)
        .unwrap()
        .count(&corpus, &vocab)
        .unwrap();
    println!(
        "count {:?} windows={} pairs={}",
        t.elapsed(),
        counts.total_windows(),
        counts.pair_count()
    );
    if let Ok(status) = std::fs::read_to_string("/proc/self/status") {
        for line in status.lines().filter(|l| l.starts_with("VmHWM")) {
            println!("{line}");
        }
    }
}
