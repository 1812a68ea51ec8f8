//! Reference implementations written straight from the definitions, sharing
//! no code with the library. Slow on purpose.
#![allow(dead_code, clippy::too_many_arguments, clippy::needless_range_loop)]

use std::collections::{BTreeSet, HashMap, HashSet};

/// Every boolean window of every document, step 1. A document no longer
/// than `s` is one window. Words outside `keep` still take up positions.
pub fn windows(docs: &[Vec<String>], keep: &HashSet<String>, s: usize) -> Vec<BTreeSet<String>> {
    let mut out = Vec::new();
    for doc in docs {
        let starts = if doc.len() <= s { 1 } else { doc.len() - s + 1 };
        for start in 0..starts {
            let end = (start + s).min(doc.len());
            out.push(
                doc[start..end]
                    .iter()
                    .filter(|w| keep.contains(*w))
                    .cloned()
                    .collect(),
            );
        }
    }
    out
}

pub struct BruteCounts {
    pub windows: Vec<BTreeSet<String>>,
}

impl BruteCounts {
    pub fn new(docs: &[Vec<String>], keep: &HashSet<String>, s: usize) -> Self {
        Self {
            windows: windows(docs, keep, s),
        }
    }

    pub fn total(&self) -> u64 {
        self.windows.len() as u64
    }

    pub fn occur(&self, w: &str) -> u64 {
        self.windows.iter().filter(|win| win.contains(w)).count() as u64
    }

    pub fn cooccur(&self, a: &str, b: &str) -> u64 {
        self.windows
            .iter()
            .filter(|win| win.contains(a) && win.contains(b))
            .count() as u64
    }

    pub fn npmi(&self, a: &str, b: &str, eps: f64) -> f64 {
        let t = self.total() as f64;
        npmi_formula(
            self.occur(a) as f64 / t,
            self.occur(b) as f64 / t,
            self.cooccur(a, b) as f64 / t,
            eps,
        )
    }
}

/// The smoothed formula with epsilon inside both logs.
pub fn npmi_formula(pa: f64, pb: f64, pab: f64, eps: f64) -> f64 {
    if pab + eps >= 1.0 {
        return 1.0;
    }
    let v = ((pab + eps) / (pa * pb)).ln() / -(pab + eps).ln();
    v.clamp(-1.0, 1.0)
}

pub fn cos(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

/// C_V over the words that occur in at least one window.
pub fn cv(counts: &BruteCounts, words: &[String], eps: f64, include_self: bool) -> f64 {
    let w: Vec<&String> = words.iter().filter(|w| counts.occur(w) > 0).collect();
    let u: Vec<Vec<f64>> = w
        .iter()
        .enumerate()
        .map(|(i, a)| {
            w.iter()
                .enumerate()
                .map(|(j, b)| {
                    if i == j && !include_self {
                        0.0
                    } else {
                        counts.npmi(a, b, eps)
                    }
                })
                .collect()
        })
        .collect();
    let t: Vec<f64> = (0..w.len())
        .map(|j| u.iter().map(|row| row[j]).sum())
        .collect();
    u.iter().map(|ui| cos(ui, &t)).sum::<f64>() / w.len() as f64
}

pub fn diversity(topics: &[Vec<String>], n: usize) -> f64 {
    let u: HashSet<&String> = topics.iter().flat_map(|t| &t[..n]).collect();
    u.len() as f64 / (topics.len() * n) as f64
}

/// Documents each word appears in.
pub fn doc_freq(docs: &[Vec<String>]) -> HashMap<String, u64> {
    let mut out = HashMap::new();
    for d in docs {
        let set: HashSet<&String> = d.iter().collect();
        for w in set {
            *out.entry(w.clone()).or_insert(0) += 1;
        }
    }
    out
}

pub fn token_freq(docs: &[Vec<String>]) -> HashMap<String, u64> {
    let mut out = HashMap::new();
    for w in docs.iter().flatten() {
        *out.entry(w.clone()).or_insert(0) += 1;
    }
    out
}

fn percentile(ranking: &[String], w: &str) -> Option<f64> {
    let pos = ranking.iter().position(|x| x == w)?;
    Some((pos + 1) as f64 / ranking.len() as f64)
}

/// Checks one regular intrusion task: the head, the shown set, and the rank
/// and frequency constraints. `freq` holds corpus frequencies of the
/// retained vocabulary. `band` is the multiplier the generator reports; it
/// must be the first of `bands` with any qualifying word.
pub fn check_twi(
    topics: &[Vec<String>],
    topic: usize,
    shown: &[String],
    intruder: &str,
    head: &[String],
    band: f64,
    freq: &HashMap<String, u64>,
    bands: &[f64],
) -> Result<(), String> {
    let ranking = &topics[topic];
    if head != &ranking[..4] {
        return Err(format!("head {head:?} is not the top 4 of topic {topic}"));
    }
    if shown.len() != 5 {
        return Err(format!("{} shown words", shown.len()));
    }
    let mut a: Vec<&String> = shown.iter().collect();
    let mut b: Vec<&String> = head.iter().collect();
    let intruder_s = intruder.to_string();
    b.push(&intruder_s);
    a.sort();
    b.sort();
    if a != b || head.iter().any(|h| h == intruder) {
        return Err(format!("shown {shown:?} is not head + intruder {intruder}"));
    }
    let qualifies_rank = |w: &str| {
        percentile(ranking, w).is_some_and(|p| p > 0.5)
            && topics
                .iter()
                .enumerate()
                .any(|(j, r)| j != topic && percentile(r, w).is_some_and(|p| p <= 0.10))
            && freq.get(w).is_some_and(|&f| f > 0)
    };
    if !qualifies_rank(intruder) {
        return Err(format!(
            "{intruder} fails the rank constraints for topic {topic}"
        ));
    }
    let logs: Vec<f64> = head
        .iter()
        .filter_map(|w| freq.get(w))
        .filter(|&&f| f > 0)
        .map(|&f| (f as f64).ln())
        .collect();
    let center = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    let within = |w: &str, rho: f64| {
        let f = freq[w] as f64;
        f >= center / rho && f <= center * rho
    };
    if !within(intruder, band) {
        return Err(format!(
            "{intruder} freq {} outside band {band} of {center}",
            freq[intruder]
        ));
    }
    let first = bands
        .iter()
        .copied()
        .find(|&rho| ranking.iter().any(|w| qualifies_rank(w) && within(w, rho)));
    if first != Some(band) {
        return Err(format!(
            "reported band {band}, first nonempty band {first:?}"
        ));
    }
    Ok(())
}

/// Topic vector: mean of the vectors of the top `n` words that have one.
pub fn topic_vector(ranking: &[String], table: &HashMap<String, Vec<f64>>, n: usize) -> Vec<f64> {
    let found: Vec<&Vec<f64>> = ranking
        .iter()
        .take(n)
        .filter_map(|w| table.get(w))
        .collect();
    let dim = found[0].len();
    (0..dim)
        .map(|d| found.iter().map(|v| v[d]).sum::<f64>() / found.len() as f64)
        .collect()
}

/// Full similarity table, then each topic's best partner among those whose
/// top 4 is disjoint from its own. Returns unordered pairs.
pub fn best_disjoint_pairs(
    topics: &[Vec<String>],
    table: &HashMap<String, Vec<f64>>,
    n: usize,
) -> BTreeSet<(usize, usize)> {
    let vecs: Vec<Vec<f64>> = topics.iter().map(|t| topic_vector(t, table, n)).collect();
    let k = topics.len();
    let mut sim = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            sim[i][j] = cos(&vecs[i], &vecs[j]);
        }
    }
    let disjoint = |i: usize, j: usize| {
        let a: HashSet<&String> = topics[i][..4].iter().collect();
        topics[j][..4].iter().all(|w| !a.contains(w))
    };
    let mut out = BTreeSet::new();
    for i in 0..k {
        let mut best: Option<usize> = None;
        for j in 0..k {
            if j == i || !disjoint(i, j) {
                continue;
            }
            if best.is_none_or(|b| sim[i][j] > sim[i][b]) {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            out.insert((i.min(j), i.max(j)));
        }
    }
    out
}

/// Fleiss' kappa straight from the textbook formula; every item must have
/// the same number of ratings.
pub fn fleiss(items: &[Vec<usize>], categories: usize) -> f64 {
    let n = items[0].len() as f64;
    let big_n = items.len() as f64;
    let mut p_j = vec![0.0; categories];
    let mut p_bar = 0.0;
    for item in items {
        let mut c = vec![0.0; categories];
        for &r in item {
            c[r] += 1.0;
        }
        for j in 0..categories {
            p_j[j] += c[j];
        }
        p_bar += (c.iter().map(|x| x * x).sum::<f64>() - n) / (n * (n - 1.0));
    }
    p_bar /= big_n;
    let pe: f64 = p_j.iter().map(|x| (x / (big_n * n)).powi(2)).sum();
    (p_bar - pe) / (1.0 - pe)
}

/// Slope and intercept from the normal equations in raw sums.
pub fn ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    (slope, intercept, r)
}
