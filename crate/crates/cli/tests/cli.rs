mod common;

use std::fs;
use std::path::Path;

use clap::Parser;
use common::{data, oracle_macro, oracle_read_collection, oracle_read_run};
use dsr_cli::{exit_code, run, Cli, EXIT_DATA, EXIT_IO, EXIT_USAGE};

fn dsr(args: &[&str]) -> anyhow::Result<String> {
    let cli = Cli::try_parse_from(std::iter::once("dsr").chain(args.iter().copied()))?;
    let mut out = Vec::new();
    run(&cli, &mut out)?;
    Ok(String::from_utf8(out)?)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn mine_mini(out: &Path, workers: &str) {
    dsr(&[
        "mine",
        "--vocab",
        p(&data("mini/vocab.tsv")),
        "--corpus",
        p(&data("mini/corpus.jsonl")),
        "--out",
        p(out),
        "--workers",
        workers,
        "--batch-size",
        "1",
    ])
    .unwrap();
}

#[test]
fn mine_reproduces_hand_counts() {
    let dir = tempfile::tempdir().unwrap();
    mine_mini(dir.path(), "2");
    // co(D1,S1)=2, co(D1,S2)=1, co(D2,S1)=1; |X|=2, n_S1=2, n_S2=1
    // λ(D1,S1)=2·1, λ(D1,S2)=1·2, λ(D2,S1)=1·1
    let expected = "D1\tS1\t2\nD1\tS2\t2\nD2\tS1\t1\n";
    assert_eq!(fs::read_to_string(dir.path().join("kwd.scores.tsv")).unwrap(), expected);
    assert_eq!(fs::read_to_string(dir.path().join("fulltext.scores.tsv")).unwrap(), expected);
    assert_eq!(
        fs::read_to_string(dir.path().join("kwd.index.tsv")).unwrap(),
        "#|X|=2\n#regime=keyword\nD1\tS1\t2\nD1\tS2\t1\nD2\tS1\t1\n"
    );
}

#[test]
fn mine_is_identical_across_worker_counts() {
    let runs: Vec<_> = ["1", "2", "8"]
        .iter()
        .map(|w| {
            let dir = tempfile::tempdir().unwrap();
            mine_mini(dir.path(), w);
            let files: Vec<Vec<u8>> = ["kwd.index.tsv", "kwd.scores.tsv", "fulltext.index.tsv", "fulltext.scores.tsv"]
                .iter()
                .map(|f| fs::read(dir.path().join(f)).unwrap())
                .collect();
            files
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn rank_prints_top_k_descending() {
    let out = dsr(&[
        "rank",
        "--vocab",
        p(&data("rank/vocab.tsv")),
        "--scores",
        p(&data("rank/scores.tsv")),
        "--disease",
        "Appendicitis",
        "-k",
        "4",
    ])
    .unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "rank\tsymptom_id\tname\tscore");
    assert_eq!(lines.len(), 5);
    let scores: Vec<f64> = lines[1..].iter().map(|l| l.split('\t').nth(3).unwrap().parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]), "{scores:?}");
    assert_eq!(lines[1], "1\tS_AP\tabdominal pain\t12.5");
    // tie at 3.0 broken by symptom id
    assert_eq!(lines[3], "3\tS_F\tfever\t3");
    assert_eq!(lines[4], "4\tS_N\tnausea\t3");
}

#[test]
fn rank_without_disease_writes_run_file() {
    let dir = tempfile::tempdir().unwrap();
    dsr(&[
        "rank",
        "--vocab",
        p(&data("rank/vocab.tsv")),
        "--scores",
        p(&data("rank/scores.tsv")),
        "--method",
        "kwdlarge",
        "-k",
        "2",
        "--out",
        p(dir.path()),
    ])
    .unwrap();
    let text = fs::read_to_string(dir.path().join("kwdlarge.run.tsv")).unwrap();
    assert_eq!(text, "D_APP\t1\tS_AP\t12.5\nD_APP\t2\tS_V\t4\nD_FLU\t1\tS_F\t9\nD_FLU\t2\tS_C\t7\n");
}

fn eval_golden(out: &Path, config: Option<&Path>) -> String {
    let collection = data("eval/collection.json");
    let runs: Vec<String> = ["strong", "weak", "chance"]
        .iter()
        .map(|l| format!("{l}={}", p(&data(&format!("eval/{l}.run.tsv")))))
        .collect();
    let mut args = vec!["eval", "--collection", p(&collection), "--out", p(out)];
    if let Some(c) = config {
        args.extend(["--config", p(c)]);
    }
    args.extend(runs.iter().map(String::as_str));
    dsr(&args).unwrap()
}

#[test]
fn eval_matches_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = eval_golden(dir.path(), None);
    for name in ["report.json", "report.md"] {
        let got = fs::read(dir.path().join(name)).unwrap();
        let want = fs::read(data(&format!("eval/golden/{name}"))).unwrap();
        assert!(got == want, "{name} differs from golden");
    }
    assert_eq!(stdout, fs::read_to_string(data("eval/golden/report.md")).unwrap());
}

#[test]
fn golden_values_agree_with_oracle() {
    let collection = oracle_read_collection(&fs::read_to_string(data("eval/collection.json")).unwrap());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(data("eval/golden/report.json")).unwrap()).unwrap();
    for run in report["runs"].as_array().unwrap() {
        let label = run["label"].as_str().unwrap();
        let ranking = oracle_read_run(&fs::read_to_string(data(&format!("eval/{label}.run.tsv"))).unwrap());
        for m in run["macro_avg"].as_array().unwrap() {
            let k = m["k"].as_u64().unwrap() as usize;
            let [ndcg, prec, rec] = oracle_macro(&ranking, &collection, k);
            for (key, want) in [("ndcg", ndcg), ("precision", prec), ("recall", rec)] {
                let got = m[key].as_f64().unwrap();
                assert!((got - want).abs() <= 1e-9, "{label} {key}@{k}: {got} vs {want}");
            }
        }
    }
    for c in report["comparisons"].as_array().unwrap() {
        let column = |label: &str| -> Vec<f64> {
            let run = report["runs"].as_array().unwrap().iter().find(|r| r["label"] == label).unwrap();
            let ki = report["config"]["cutoffs"].as_array().unwrap().iter().position(|k| k == &c["k"]).unwrap();
            run["per_disease"]
                .as_array()
                .unwrap()
                .iter()
                .map(|d| d["scores"][ki][c["metric"].as_str().unwrap()].as_f64().unwrap())
                .collect()
        };
        let (a, b) = (column(c["a"].as_str().unwrap()), column(c["b"].as_str().unwrap()));
        if c["degenerate"].as_bool().unwrap() {
            continue;
        }
        let (t, pv) = common::oracle_ttest(&a, &b);
        assert!((c["t"].as_f64().unwrap() - t).abs() < 1e-9);
        assert!((c["p_value"].as_f64().unwrap() - pv).abs() <= 1e-6);
    }
}

#[test]
fn config_file_is_recorded_and_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "cutoffs=3,5\nalpha=0.05\n").unwrap();
    eval_golden(dir.path(), Some(&cfg));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["cutoffs"], serde_json::json!([3, 5]));
    assert_eq!(report["config"]["alpha"], 0.05);
    assert_eq!(report["config"]["gain"], "linear");

    let out = dsr(&[
        "eval",
        "--config",
        p(&cfg),
        "--alpha",
        "0.001",
        "--collection",
        p(&data("eval/collection.json")),
        p(&data("eval/weak.run.tsv")),
    ])
    .unwrap();
    assert!(out.contains("p < 0.001"), "{out}");
    assert!(out.contains("| (a) weak |"), "{out}");
}

#[test]
fn errors_are_categorized() {
    let e = dsr(&["eval", "--alpha", "1.5", "--collection", "x", "r"]).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_USAGE);
    let e = dsr(&["tag", "--vocab", "/does/not/exist", "--corpus", "/nor/this"]).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_USAGE);

    let dir = tempfile::tempdir().unwrap();
    let bad_vocab = dir.path().join("v.tsv");
    fs::write(&bad_vocab, "D1\tdisease\n").unwrap();
    let e = dsr(&["tag", "--vocab", p(&bad_vocab), "--corpus", p(&data("mini/corpus.jsonl"))]).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_DATA);
    assert!(format!("{e:#}").contains("line 1"), "{e:#}");

    let bad_corpus = dir.path().join("c.jsonl");
    fs::write(&bad_corpus, "{\"id\":\"a\",\"title\":\"\",\"keywords\":[],\"text\":\"\"}\nnot json\n").unwrap();
    let vocab = data("mini/vocab.tsv");
    let args = ["tag", "--vocab", p(&vocab), "--corpus", p(&bad_corpus)];
    let e = dsr(&args).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_DATA);
    let skipped = dsr(&[&args[..], &["--skip-bad-records"]].concat()).unwrap();
    assert_eq!(skipped.lines().count(), 1);

    let e = dsr(&["mine", "--vocab", p(&data("mini/vocab.tsv")), "--corpus", p(&data("mini/corpus.jsonl")), "--out", "/proc/forbidden/x"])
        .unwrap_err();
    assert_eq!(exit_code(&e), EXIT_IO, "{e:#}");
}

#[test]
fn tag_writes_section_records() {
    let out = dsr(&["tag", "--vocab", p(&data("mini/vocab.tsv")), "--corpus", p(&data("mini/corpus.jsonl"))]).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1], r#"{"id":"A2","title":[],"keywords":["D1","S1","S2"],"body":["S1","S2"]}"#);
    assert_eq!(lines[2], r#"{"id":"A3","title":["D2"],"keywords":["D2","S1"],"body":["S1"]}"#);
}

#[test]
fn vote_kappa_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let ann = data("mini/annotations.csv");
    dsr(&[
        "vote",
        "--annotations",
        p(&ann),
        "--pairs",
        p(&data("mini/pairs.tsv")),
        "--vocab",
        p(&data("mini/vocab.tsv")),
        "--out",
        p(dir.path()),
    ])
    .unwrap();
    let collection = dir.path().join("collection.json");
    let c: serde_json::Value = serde_json::from_str(&fs::read_to_string(&collection).unwrap()).unwrap();
    assert_eq!(c["diseases"][0]["name"], "Influenza");
    assert_eq!(c["diseases"][0]["judgments"][0]["grade"], 2);
    assert_eq!(c["diseases"][0]["judgments"][1]["grade"], 1);

    let kappa: serde_json::Value = serde_json::from_str(&dsr(&["kappa", "--annotations", p(&ann)]).unwrap()).unwrap();
    assert_eq!(kappa["items"], 3);
    assert!(kappa["per_disease_kappa"]["D2"].is_null());

    let expect = dir.path().join("expect.json");
    fs::write(&expect, r#"{"diseases":2,"judgments":3,"primaries":2,"symptom_frequency":{"fever":2}}"#).unwrap();
    let vocab = data("mini/vocab.tsv");
    let args = ["validate", "--collection", p(&collection), "--vocab", p(&vocab), "--expect", p(&expect)];
    dsr(&args).unwrap();
    fs::write(&expect, r#"{"primaries":3}"#).unwrap();
    let e = dsr(&args).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_DATA);
    let out = dsr(&["validate", "--vocab", p(&data("mini/vocab.tsv")), "--corpus", p(&data("mini/corpus.jsonl"))]).unwrap();
    assert!(out.contains("2 diseases") && out.contains("3 articles"), "{out}");
}
