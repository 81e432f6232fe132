//! Brute-force reference implementations shared by the integration tests.
//! They are written from the textbook formulas and do not call the library.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

/// Grade of `s` by linear scan; 0 when unjudged.
fn grade_of(judgments: &[(String, u8)], s: &str) -> u8 {
    for (id, g) in judgments {
        if id == s {
            return *g;
        }
    }
    0
}

pub fn oracle_precision(ranking: &[String], judgments: &[(String, u8)], k: usize) -> f64 {
    let mut hits = 0;
    for (pos, s) in ranking.iter().enumerate() {
        if pos >= k {
            break;
        }
        if grade_of(judgments, s) >= 1 {
            hits += 1;
        }
    }
    hits as f64 / k as f64
}

pub fn oracle_recall(ranking: &[String], judgments: &[(String, u8)], k: usize) -> f64 {
    let mut hits = 0;
    for (pos, s) in ranking.iter().enumerate() {
        if pos < k && grade_of(judgments, s) >= 1 {
            hits += 1;
        }
    }
    hits as f64 / judgments.len() as f64
}

pub fn oracle_ndcg(ranking: &[String], judgments: &[(String, u8)], k: usize) -> f64 {
    let mut dcg = 0.0;
    for i in 1..=k.min(ranking.len()) {
        dcg += f64::from(grade_of(judgments, &ranking[i - 1])) / ((i + 1) as f64).ln() * std::f64::consts::LN_2;
    }
    // ideal: all grade-2 items first, then grade-1
    let twos = judgments.iter().filter(|(_, g)| *g == 2).count();
    let ones = judgments.iter().filter(|(_, g)| *g == 1).count();
    let mut ideal = vec![2.0; twos];
    ideal.extend(std::iter::repeat_n(1.0, ones));
    let mut idcg = 0.0;
    for i in 1..=k.min(ideal.len()) {
        idcg += ideal[i - 1] / ((i + 1) as f64).ln() * std::f64::consts::LN_2;
    }
    dcg / idcg
}

/// Fleiss' kappa by counting agreeing rater pairs per item.
pub fn oracle_kappa(items: &[Vec<bool>]) -> f64 {
    let n = items[0].len();
    let pairs = (n * (n - 1) / 2) as f64;
    let mut mean_agreement = 0.0;
    let mut yes = 0usize;
    for ratings in items {
        let mut agree = 0usize;
        for a in 0..n {
            for b in a + 1..n {
                if ratings[a] == ratings[b] {
                    agree += 1;
                }
            }
        }
        mean_agreement += agree as f64 / pairs;
        yes += ratings.iter().filter(|&&r| r).count();
    }
    mean_agreement /= items.len() as f64;
    let p_yes = yes as f64 / (items.len() * n) as f64;
    let chance = p_yes * p_yes + (1.0 - p_yes) * (1.0 - p_yes);
    if chance == 1.0 {
        return 1.0;
    }
    (mean_agreement - chance) / (1.0 - chance)
}

/// Lanczos approximation (g = 7, 9 terms).
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn t_pdf(x: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Paired t statistic from the textbook formula and the two-sided p-value
/// by Simpson integration of the t density over `[0, |t|]`.
pub fn oracle_ttest(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let sum: f64 = d.iter().sum();
    let sum_sq: f64 = d.iter().map(|x| x * x).sum();
    let sd = ((sum_sq - sum * sum / n) / (n - 1.0)).sqrt();
    let t = (sum / n) / (sd / n.sqrt());
    let df = n - 1.0;
    let upper = t.abs();
    let steps = 20_000;
    let h = upper / steps as f64;
    let mut acc = t_pdf(0.0, df) + t_pdf(upper, df);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * t_pdf(i as f64 * h, df);
    }
    let central = acc * h / 3.0;
    (t, (1.0 - 2.0 * central).max(0.0))
}

/// Reads a run TSV into per-disease symptom lists, ordered by rank.
pub fn oracle_read_run(text: &str) -> BTreeMap<String, Vec<String>> {
    let mut rows: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        rows.entry(f[0].to_string())
            .or_default()
            .push((f[1].parse().unwrap(), f[2].to_string()));
    }
    rows.into_iter()
        .map(|(d, mut v)| {
            v.sort();
            (d, v.into_iter().map(|(_, s)| s).collect())
        })
        .collect()
}

/// Per-disease judgments from a collection JSON, in file order.
pub fn oracle_read_collection(text: &str) -> Vec<(String, Vec<(String, u8)>)> {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    v["diseases"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| {
            let js = d["judgments"]
                .as_array()
                .unwrap()
                .iter()
                .map(|j| (j["symptom_id"].as_str().unwrap().to_string(), j["grade"].as_u64().unwrap() as u8))
                .collect();
            (d["id"].as_str().unwrap().to_string(), js)
        })
        .collect()
}

/// Macro (nDCG, P, R) at `k` for a run against a collection.
pub fn oracle_macro(run: &BTreeMap<String, Vec<String>>, collection: &[(String, Vec<(String, u8)>)], k: usize) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let empty = Vec::new();
    for (d, judgments) in collection {
        let ranking = run.get(d).unwrap_or(&empty);
        acc[0] += oracle_ndcg(ranking, judgments, k);
        acc[1] += oracle_precision(ranking, judgments, k);
        acc[2] += oracle_recall(ranking, judgments, k);
    }
    acc.map(|x| x / collection.len() as f64)
}

#[test]
fn oracles_reproduce_worked_examples() {
    let j: Vec<(String, u8)> = vec![("s1".into(), 2), ("s2".into(), 1), ("s3".into(), 1)];
    let r: Vec<String> = ["s1", "unjudged", "s2"].iter().map(|s| s.to_string()).collect();
    assert!((oracle_ndcg(&r, &j, 3) - 0.79849).abs() < 1e-5);
    // 4 items, 3 raters, textbook value 1/3
    let items = vec![
        vec![true, true, true],
        vec![true, true, false],
        vec![true, false, false],
        vec![false, false, false],
    ];
    assert!((oracle_kappa(&items) - 1.0 / 3.0).abs() < 1e-12);
    // reference: scipy.stats.ttest_rel
    let (t, p) = oracle_ttest(&[0.2, 0.4, 0.1, 0.5, 0.3], &[0.25, 0.35, 0.3, 0.6, 0.45]);
    assert!((t + 2.092_457_497_388_746).abs() < 1e-9);
    assert!((p - 0.104_539_999_778_375_53).abs() < 1e-7, "{p}");
}
