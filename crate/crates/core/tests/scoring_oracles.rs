mod common;
mod oracles;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topeval_core::scoring::annotations::{AnnotationRecord, Response};
use topeval_core::scoring::stats::{adjust_scores, fleiss_kappa, linear_regression, Confusion};
use topeval_core::scoring::{score, ScoreConfig};
use topeval_core::synth::simulate_annotations;
use topeval_core::taskgen::{assemble_bundle, SamplingPlan, ShownWord, Task, TaskBundle, TwmTask};

fn quick() -> ScoreConfig {
    ScoreConfig {
        bootstrap_replicates: 200,
        ..ScoreConfig::default()
    }
}

#[test]
fn fleiss_hand_case_and_unanimity() {
    let f = fleiss_kappa(&[vec![0, 0, 1], vec![1, 1, 1]], 2).unwrap();
    assert!((f.kappa - 0.25).abs() <= 1e-12, "{}", f.kappa);
    let f = fleiss_kappa(&[vec![0, 0, 0], vec![1, 1, 1], vec![2, 2, 2]], 3).unwrap();
    assert_eq!(f.kappa, 1.0);
}

#[test]
fn fleiss_matches_textbook_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let cats = rng.gen_range(2..=5);
        let n = rng.gen_range(2..=7);
        let items: Vec<Vec<usize>> = (0..rng.gen_range(2..40))
            .map(|_| (0..n).map(|_| rng.gen_range(0..cats)).collect())
            .collect();
        let want = oracles::fleiss(&items, cats);
        match fleiss_kappa(&items, cats) {
            Ok(f) => assert!((f.kappa - want).abs() <= 1e-12, "{} vs {want}", f.kappa),
            Err(_) => assert!(!want.is_finite()),
        }
    }
}

fn twm(id: &str, label: u8) -> Task {
    Task::Twm(TwmTask {
        task_id: id.into(),
        origin: id.into(),
        model_id: "m".into(),
        family: "f".into(),
        topics: if label == 1 { vec![0] } else { vec![0, 1] },
        words: (0..8)
            .map(|i| ShownWord {
                w: format!("{id}w{i}"),
                bold: i < 4,
            })
            .collect(),
        label,
        is_control: false,
        bold_topic: (label == 2).then_some(0),
        pair_similarity: None,
    })
}

#[test]
fn macro_f1_four_item_fixture() {
    let mut c = Confusion::default();
    for (g, p) in [(1, 1), (1, 2), (2, 2), (2, 2)] {
        c.add(g, p);
    }
    assert!((c.macro_f1() - 11.0 / 15.0).abs() <= 1e-12);

    let tasks = vec![twm("a", 1), twm("b", 1), twm("c", 2), twm("d", 2)];
    let bundle = assemble_bundle(tasks, 1, 0, "f1").unwrap();
    let origin: BTreeMap<String, String> = bundle
        .tasks
        .iter()
        .map(|t| (t.origin().to_string(), t.task_id().to_string()))
        .collect();
    let records: Vec<AnnotationRecord> = [("a", 1), ("b", 2), ("c", 2), ("d", 2)]
        .iter()
        .map(|(o, p)| AnnotationRecord::new(origin[*o].clone(), "x", Response::Class(*p)))
        .collect();
    let report = score(&records, &bundle, &quick()).unwrap();
    let got = report.twm.unwrap().per_model["m"].value;
    assert!((got - 0.733_333_333_333).abs() < 1e-9, "{got}");
}

#[test]
fn ols_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let points: Vec<(f64, f64)> = (0..200)
        .map(|_| {
            let x: f64 = rng.gen_range(0.0..1.0);
            let y = if rng.gen_bool((0.9 - 0.5 * x).clamp(0.0, 1.0)) {
                1.0
            } else {
                0.0
            };
            (x, y)
        })
        .collect();
    let reg = linear_regression(&points).unwrap();
    let (slope, intercept, r) = oracles::ols(&points);
    assert!((reg.slope - slope).abs() <= 1e-9);
    assert!((reg.intercept - intercept).abs() <= 1e-9);
    assert!((reg.pearson_r - r).abs() <= 1e-9);
    assert!(reg.p_value > 0.0 && reg.p_value < 1.0);

    let line: Vec<(f64, f64)> = (0..20).map(|i| ((i % 2) as f64, (i % 2) as f64)).collect();
    let reg = linear_regression(&line).unwrap();
    assert!((reg.slope - 1.0).abs() < 1e-12 && (reg.pearson_r - 1.0).abs() < 1e-12);
    assert!(reg.p_value < 1e-12);
}

#[test]
fn adjustment_preserves_grand_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let groups = rng.gen_range(2..=6);
        let pts: Vec<(String, f64, f64)> = (0..rng.gen_range(10..300))
            .map(|_| {
                let g = rng.gen_range(0..groups);
                let x = rng.gen_range(0.0..1.0) + 0.1 * g as f64;
                (format!("g{g}"), x, rng.gen_range(0..2) as f64)
            })
            .collect();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.1, p.2)).collect();
        let Ok(reg) = linear_regression(&xy) else {
            continue;
        };
        let adj = adjust_scores(&pts, &reg).unwrap();
        let n: usize = adj.values().map(|a| a.n).sum();
        let weighted = adj.values().map(|a| a.adjusted * a.n as f64).sum::<f64>() / n as f64;
        let grand = pts.iter().map(|p| p.2).sum::<f64>() / pts.len() as f64;
        assert!((weighted - grand).abs() <= 1e-9);
    }
}

fn campaign() -> (TaskBundle, Vec<AnnotationRecord>) {
    let fx = common::fixture();
    let mut tasks = fx
        .generate("twi", SamplingPlan::Standard, common::SEED)
        .tasks;
    tasks.extend(
        fx.generate("twm", SamplingPlan::Standard, common::SEED)
            .tasks,
    );
    let bundle = assemble_bundle(tasks, 4, common::SEED, "c").unwrap();
    let records = simulate_annotations(&bundle, 5, 1);
    (bundle, records)
}

/// Per-task means, then per-model means, from the raw records.
#[test]
fn twi_accuracy_matches_flat_recomputation() {
    let (bundle, records) = campaign();
    let index = bundle.index();
    let mut per_task: BTreeMap<&str, (String, f64, f64)> = BTreeMap::new();
    for r in &records {
        let Some(t) = index[r.task_id.as_str()].as_twi() else {
            continue;
        };
        if t.is_control {
            continue;
        }
        let ok = matches!(&r.response, Response::Word(w) if w == t.intruder());
        let e = per_task
            .entry(&r.task_id)
            .or_insert((t.model_id.clone(), 0.0, 0.0));
        e.1 += ok as u8 as f64;
        e.2 += 1.0;
    }
    let mut per_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (m, c, n) in per_task.values() {
        per_model.entry(m.clone()).or_default().push(c / n);
    }
    let report = score(&records, &bundle, &quick()).unwrap();
    let twi = report.twi.unwrap();
    assert_eq!(twi.per_model.len(), per_model.len());
    for (m, accs) in per_model {
        let want = accs.iter().sum::<f64>() / accs.len() as f64;
        let got = &twi.per_model[&m];
        assert!((got.value - want).abs() < 1e-12, "{m}");
        assert!(got.ci_low <= got.value && got.value <= got.ci_high);
    }

    let d = twi.difficulty.unwrap();
    let n: usize = d.adjusted_per_family.values().map(|a| a.n).sum();
    let raw = d
        .adjusted_per_family
        .values()
        .map(|a| a.raw * a.n as f64)
        .sum::<f64>()
        / n as f64;
    let adj = d
        .adjusted_per_family
        .values()
        .map(|a| a.adjusted * a.n as f64)
        .sum::<f64>()
        / n as f64;
    assert!((raw - adj).abs() <= 1e-9);
    assert!(d.slope < 0.0 && d.p_value < 0.05);
}

#[test]
fn twm_f1_matches_flat_recomputation() {
    let (bundle, records) = campaign();
    let index = bundle.index();
    let mut conf: BTreeMap<String, [[f64; 2]; 2]> = BTreeMap::new();
    for r in &records {
        let Some(t) = index[r.task_id.as_str()].as_twm() else {
            continue;
        };
        if t.is_control {
            continue;
        }
        let Response::Class(p) = r.response else {
            panic!()
        };
        conf.entry(t.model_id.clone()).or_default()[t.label as usize - 1][p as usize - 1] += 1.0;
    }
    let report = score(&records, &bundle, &quick()).unwrap();
    let twm = report.twm.unwrap();
    for (m, c) in conf {
        let f1 = |i: usize| {
            let o = 1 - i;
            2.0 * c[i][i] / (2.0 * c[i][i] + c[o][i] + c[i][o])
        };
        let want = (f1(0) + f1(1)) / 2.0;
        assert!((twm.per_model[&m].value - want).abs() < 1e-12, "{m}");
    }
}
