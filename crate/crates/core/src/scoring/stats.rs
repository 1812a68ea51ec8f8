//! Statistics used by the scorer.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::seed::SeedStream;

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 2000;
pub const DEFAULT_CI_LEVEL: f64 = 0.95;

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Percentile bootstrap over `items`. Replicate `r` draws from its own
/// stream, so results do not depend on thread scheduling. The interval is
/// widened if needed to contain `stat(items)`.
pub fn bootstrap<T: Sync>(
    items: &[T],
    stat: impl Fn(&[&T]) -> f64 + Sync,
    replicates: usize,
    level: f64,
    seeds: &SeedStream,
) -> Interval {
    let all: Vec<&T> = items.iter().collect();
    let value = stat(&all);
    if items.is_empty() || replicates == 0 {
        return Interval {
            value,
            ci_low: value,
            ci_high: value,
        };
    }
    let mut reps: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeds.rng(&format!("rep/{r}"));
            let sample: Vec<&T> = (0..items.len())
                .map(|_| &items[rng.gen_range(0..items.len())])
                .collect();
            stat(&sample)
        })
        .collect();
    reps.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Interval {
        value,
        ci_low: quantile(&reps, alpha).min(value),
        ci_high: quantile(&reps, 1.0 - alpha).max(value),
    }
}

/// 2x2 confusion counts over classes 1 and 2, `m[gold-1][pred-1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion(pub [[u64; 2]; 2]);

impl Confusion {
    pub fn add(&mut self, gold: usize, pred: usize) {
        self.0[gold - 1][pred - 1] += 1;
    }

    pub fn merge(&mut self, other: &Confusion) {
        for g in 0..2 {
            for p in 0..2 {
                self.0[g][p] += other.0[g][p];
            }
        }
    }

    /// F1 of class `c` (1 or 2); `None` when it never occurs as gold or
    /// prediction.
    pub fn f1(&self, c: usize) -> Option<f64> {
        let i = c - 1;
        let o = 1 - i;
        let tp = self.0[i][i] as f64;
        let fp = self.0[o][i] as f64;
        let fn_ = self.0[i][o] as f64;
        let denom = 2.0 * tp + fp + fn_;
        (denom > 0.0).then(|| 2.0 * tp / denom)
    }

    /// Unweighted mean of both class F1 scores; an undefined class counts 0.
    pub fn macro_f1(&self) -> f64 {
        (self.f1(1).unwrap_or(0.0) + self.f1(2).unwrap_or(0.0)) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    /// Mean share of agreeing unordered annotator pairs per task.
    pub percent: f64,
    pub items_used: usize,
    pub items_excluded: usize,
}

/// Pairwise percent agreement. Each item is the list of category labels its
/// annotators gave. Items with fewer than two labels are excluded.
pub fn percent_agreement(items: &[Vec<usize>]) -> Result<Agreement> {
    let mut total = 0.0;
    let mut used = 0;
    for labels in items.iter().filter(|l| l.len() >= 2) {
        let n = labels.len();
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for &l in labels {
            *counts.entry(l).or_default() += 1;
        }
        let agreeing: u64 = counts.values().map(|&c| c * (c - 1) / 2).sum();
        total += agreeing as f64 / (n * (n - 1) / 2) as f64;
        used += 1;
    }
    let excluded = items.len() - used;
    if excluded > 0 {
        log::warn!("{excluded} items with fewer than two annotations left out of agreement");
    }
    if used == 0 {
        return Err(Error::NoData("no item with two or more annotations".into()));
    }
    Ok(Agreement {
        percent: total / used as f64,
        items_used: used,
        items_excluded: excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fleiss {
    pub kappa: f64,
    /// Annotations per item.
    pub n: usize,
    pub items_used: usize,
    pub items_excluded: usize,
}

/// Fleiss' kappa over items rated by the modal number of annotators; items
/// with another count are excluded. Labels must be `< categories`.
pub fn fleiss_kappa(items: &[Vec<usize>], categories: usize) -> Result<Fleiss> {
    let mut by_count: BTreeMap<usize, usize> = BTreeMap::new();
    for l in items.iter().filter(|l| l.len() >= 2) {
        *by_count.entry(l.len()).or_default() += 1;
    }
    // most items, then the larger count
    let n = by_count
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(&n, _)| n)
        .ok_or_else(|| Error::NoData("no item with two or more annotations".into()))?;
    let used: Vec<&Vec<usize>> = items.iter().filter(|l| l.len() == n).collect();
    let excluded = items.len() - used.len();
    if excluded > 0 {
        log::warn!("{excluded} items without exactly {n} annotations left out of Fleiss' kappa");
    }
    let mut totals = vec![0u64; categories];
    let mut p_bar = 0.0;
    for labels in &used {
        let mut row = vec![0u64; categories];
        for &l in labels.iter() {
            if l >= categories {
                return Err(Error::InvalidArgument(format!(
                    "category {l} outside 0..{categories}"
                )));
            }
            row[l] += 1;
            totals[l] += 1;
        }
        let sq: u64 = row.iter().map(|c| c * c).sum();
        p_bar += (sq - n as u64) as f64 / (n * (n - 1)) as f64;
    }
    let items_n = used.len() as f64;
    p_bar /= items_n;
    let grand = items_n * n as f64;
    let p_e: f64 = totals.iter().map(|&t| (t as f64 / grand).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(Error::UndefinedKappa);
    }
    Ok(Fleiss {
        kappa: ((p_bar - p_e) / (1.0 - p_e)).clamp(-1.0, 1.0),
        n,
        items_used: used.len(),
        items_excluded: excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub p_value: f64,
    pub n: usize,
    pub warnings: Vec<String>,
}

/// OLS of `y` on `x`, Pearson r and the two-sided t-test p-value.
pub fn linear_regression(points: &[(f64, f64)]) -> Result<Regression> {
    let n = points.len();
    if n < 3 {
        return Err(Error::NoData(format!(
            "regression needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::ZeroVariance("similarity"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut warnings = Vec::new();
    if syy <= 0.0 {
        let msg = "correctness has zero variance; r reported as 0".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
        return Ok(Regression {
            slope,
            intercept,
            pearson_r: 0.0,
            p_value: 1.0,
            n,
            warnings,
        });
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p_value = if 1.0 - r * r <= 0.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Invariant(e.to_string()))?;
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Regression {
        slope,
        intercept,
        pearson_r: r,
        p_value,
        n,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedScore {
    pub raw: f64,
    pub adjusted: f64,
    pub n: usize,
}

/// Residual adjustment per group: grand mean of `y` plus the group's mean
/// residual from the fitted line. Points are `(group, x, y)`.
pub fn adjust_scores(
    points: &[(String, f64, f64)],
    reg: &Regression,
) -> Result<BTreeMap<String, AdjustedScore>> {
    if points.is_empty() {
        return Err(Error::NoData("no points to adjust".into()));
    }
    let grand = points.iter().map(|p| p.2).sum::<f64>() / points.len() as f64;
    let mut acc: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for (g, x, y) in points {
        let e = acc.entry(g.clone()).or_default();
        e.0 += y;
        e.1 += y - (reg.intercept + reg.slope * x);
        e.2 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(g, (sum_y, sum_res, n))| {
            let nf = n as f64;
            (
                g,
                AdjustedScore {
                    raw: sum_y / nf,
                    adjusted: grand + sum_res / nf,
                    n,
                },
            )
        })
        .collect())
}
