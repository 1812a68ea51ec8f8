mod oracles;

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topeval_core::corpus::{build_vocabulary, count_windows, Corpus};
use topeval_core::metrics::{cv_topic, diversity, npmi, CoherenceConfig};
use topeval_core::model_io::TopicModel;

const EPS: f64 = 1e-12;

fn random_docs(
    rng: &mut ChaCha8Rng,
    n_docs: usize,
    alphabet: usize,
    max_len: usize,
) -> Vec<Vec<String>> {
    (0..n_docs)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            (0..len)
                .map(|_| format!("w{}", rng.gen_range(0..alphabet)))
                .collect()
        })
        .collect()
}

fn strings(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

#[test]
fn npmi_matches_window_enumeration() {
    let start = Instant::now();
    for case in 0..120u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + case);
        let (n_docs, alphabet) = (rng.gen_range(1..=6), rng.gen_range(2..=8));
        let docs = random_docs(&mut rng, n_docs, alphabet, 30);
        let s = rng.gen_range(2..=12);
        let min = rng.gen_range(0..=2);
        let corpus = Corpus::from_tokens(docs.clone()).unwrap();
        let vocab = build_vocabulary(&corpus, min);
        let keep: HashSet<String> = oracles::doc_freq(&docs)
            .into_iter()
            .filter(|(_, f)| *f >= min)
            .map(|(w, _)| w)
            .collect();
        let lib_words: HashSet<String> = vocab.words().iter().cloned().collect();
        assert_eq!(lib_words, keep, "case {case}: vocabulary");

        let counts = count_windows(&corpus, &vocab, s).unwrap();
        let brute = oracles::BruteCounts::new(&docs, &keep, s);
        assert_eq!(counts.total_windows(), brute.total(), "case {case}");
        let words: Vec<&String> = keep.iter().collect();
        for a in &words {
            let ia = vocab.id(a).unwrap();
            assert_eq!(counts.occur(ia), brute.occur(a), "case {case}: occur {a}");
            for b in &words {
                let ib = vocab.id(b).unwrap();
                assert_eq!(
                    counts.cooccur(ia, ib),
                    brute.cooccur(a, b),
                    "case {case}: cooccur {a} {b}"
                );
                let got = npmi(&counts, ia, ib, EPS).unwrap();
                let want = brute.npmi(a, b, EPS);
                assert!(
                    (got - want).abs() <= 1e-9,
                    "case {case}: npmi({a},{b}) {got} vs {want}"
                );
            }
        }
    }
    assert!(
        start.elapsed().as_secs_f64() < 5.0,
        "took {:?}",
        start.elapsed()
    );
}

/// Documents shorter than the window, laid out on an m x n grid: `a` in the
/// first p rows, `b` in the first q columns. P(a,b) = P(a) P(b) exactly.
#[test]
fn independence_gives_zero() {
    for (m, n, p, q) in [
        (2, 2, 1, 1),
        (4, 5, 1, 2),
        (3, 7, 2, 3),
        (10, 10, 3, 7),
        (6, 4, 5, 1),
    ] {
        let mut docs = Vec::new();
        for i in 0..m {
            for j in 0..n {
                let mut d = vec![format!("pad{i}-{j}")];
                if i < p {
                    d.push("a".into());
                }
                if j < q {
                    d.push("b".into());
                }
                docs.push(d);
            }
        }
        let corpus = Corpus::from_tokens(docs).unwrap();
        let vocab = build_vocabulary(&corpus, 0);
        let counts = count_windows(&corpus, &vocab, 5).unwrap();
        let v = npmi(&counts, vocab.id("a").unwrap(), vocab.id("b").unwrap(), EPS).unwrap();
        assert!(v.abs() <= 1e-12, "{m}x{n} grid: {v}");
    }
}

#[test]
fn hand_counted_npmi() {
    let corpus =
        Corpus::from_tokens([vec!["a", "b"], vec!["a", "b"], vec!["a"], vec!["z"]]).unwrap();
    let vocab = build_vocabulary(&corpus, 0);
    let counts = count_windows(&corpus, &vocab, 110).unwrap();
    let v = npmi(&counts, vocab.id("a").unwrap(), vocab.id("b").unwrap(), EPS).unwrap();
    assert!((v - (4.0f64 / 3.0).ln() / 2f64.ln()).abs() < 1e-9);
    assert!((v - 0.4150).abs() < 5e-5);
}

#[test]
fn window_counts_by_hand() {
    let corpus = Corpus::from_tokens([vec!["a", "b", "c"]]).unwrap();
    let vocab = build_vocabulary(&corpus, 0);
    let c = count_windows(&corpus, &vocab, 2).unwrap();
    let id = |w| vocab.id(w).unwrap();
    assert_eq!(c.total_windows(), 2);
    assert_eq!(c.occur(id("b")), 2);
    assert_eq!(c.cooccur(id("a"), id("b")), 1);
    assert_eq!(c.cooccur(id("a"), id("c")), 0);

    let one = Corpus::from_tokens([vec!["a"]]).unwrap();
    let vocab = build_vocabulary(&one, 0);
    let c = count_windows(&one, &vocab, 110).unwrap();
    assert_eq!((c.total_windows(), c.occur(0)), (1, 1));
}

#[test]
fn long_document_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let doc: Vec<String> = (0..200)
        .map(|_| format!("w{}", rng.gen_range(0..5)))
        .collect();
    let docs = vec![doc];
    let corpus = Corpus::from_tokens(docs.clone()).unwrap();
    let vocab = build_vocabulary(&corpus, 0);
    let counts = count_windows(&corpus, &vocab, 10).unwrap();
    let keep: HashSet<String> = vocab.words().iter().cloned().collect();
    let brute = oracles::BruteCounts::new(&docs, &keep, 10);
    assert_eq!(counts.total_windows(), 191);
    for a in &keep {
        for b in &keep {
            assert_eq!(
                counts.cooccur(vocab.id(a).unwrap(), vocab.id(b).unwrap()),
                brute.cooccur(a, b)
            );
        }
    }
}

#[test]
fn cv_matches_direct_formula() {
    for case in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + case);
        let alphabet = rng.gen_range(15..=40);
        let mut docs = Vec::new();
        let mut tokens = 0;
        loop {
            let len = rng.gen_range(10..=60);
            if tokens + len > 1000 {
                break;
            }
            tokens += len;
            docs.push(
                (0..len)
                    .map(|_| format!("w{}", rng.gen_range(0..alphabet)))
                    .collect::<Vec<_>>(),
            );
        }
        let s = rng.gen_range(5..=25);
        let corpus = Corpus::from_tokens(docs.clone()).unwrap();
        let vocab = build_vocabulary(&corpus, 0);
        let counts = count_windows(&corpus, &vocab, s).unwrap();
        let keep: HashSet<String> = vocab.words().iter().cloned().collect();
        let brute = oracles::BruteCounts::new(&docs, &keep, s);

        let mut pool: Vec<String> = (0..alphabet + 3).map(|i| format!("w{i}")).collect();
        pool.shuffle(&mut rng);
        let n = rng.gen_range(5..=10);
        let topic = &pool[..n];
        for include_self in [true, false] {
            let cfg = CoherenceConfig {
                top_n: n,
                window_size: s,
                epsilon: EPS,
                include_self,
            };
            let got = cv_topic(&counts, &vocab, topic, &cfg).unwrap().value;
            let want = oracles::cv(&brute, topic, EPS, include_self);
            assert!(
                (got - want).abs() <= 1e-9,
                "case {case} self={include_self}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn all_cooccurring_topic_is_one() {
    let mut docs = vec![vec!["a", "b", "c"]; 5];
    docs.extend(vec![vec!["z"]; 5]);
    let corpus = Corpus::from_tokens(docs).unwrap();
    let vocab = build_vocabulary(&corpus, 0);
    let counts = count_windows(&corpus, &vocab, 110).unwrap();
    let cfg = CoherenceConfig::default();
    let v = cv_topic(&counts, &vocab, &strings(&["a", "b", "c"]), &cfg)
        .unwrap()
        .value;
    assert_eq!(v, 1.0);
}

#[test]
fn diversity_is_set_union() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let k = rng.gen_range(2..=12);
        let n = rng.gen_range(1..=15);
        let len = n + rng.gen_range(0..10);
        let alphabet = rng.gen_range(len..=len * 4);
        let mut pool: Vec<String> = (0..alphabet).map(|i| format!("v{i}")).collect();
        let topics: Vec<Vec<String>> = (0..k)
            .map(|_| {
                pool.shuffle(&mut rng);
                pool[..len].to_vec()
            })
            .collect();
        let model = TopicModel::new("m", "f", "", topics.clone()).unwrap();
        assert_eq!(
            diversity(&model, n).unwrap(),
            oracles::diversity(&topics, n)
        );
    }
}

#[test]
fn diversity_extremes() {
    let disjoint: Vec<Vec<String>> = (0..5)
        .map(|t| (0..10).map(|i| format!("t{t}-{i}")).collect())
        .collect();
    let m = TopicModel::new("m", "f", "", disjoint).unwrap();
    assert_eq!(diversity(&m, 10).unwrap(), 1.0);

    let same: Vec<Vec<String>> = (0..5)
        .map(|_| (0..10).map(|i| format!("w{i}")).collect())
        .collect();
    let m = TopicModel::new("m", "f", "", same).unwrap();
    assert_eq!(diversity(&m, 10).unwrap(), 1.0 / 5.0);

    let m = TopicModel::new(
        "m",
        "f",
        "",
        vec![strings(&["a", "b", "c"]), strings(&["a", "d", "e"])],
    )
    .unwrap();
    assert_eq!(diversity(&m, 3).unwrap(), 5.0 / 6.0);
}
