use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use revhelper::assist::{handle_predict, PredictRequest};
use revhelper::learn::TrainedModel;
use revhelper::text::Lexicons;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");

fn revhelper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revhelper"))
        .args(args)
        .env_remove("REVHELPER_TOKEN")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = revhelper(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// synth -> label -> features into `dir`; returns the dataset path.
fn pipeline(dir: &Path) -> PathBuf {
    let (corpus, labeled, data) = (dir.join("corpus.json"), dir.join("labeled.json"), dir.join("data.csv"));
    ok(&["synth", "--n-prs", "40", "--seed", "7", "-o", p(&corpus)]);
    ok(&["label", "-i", p(&corpus), "-o", p(&labeled)]);
    ok(&["features", "-i", p(&labeled), "-o", p(&data)]);
    data
}

#[test]
fn pipeline_produces_labeled_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = pipeline(dir.path());
    let csv = std::fs::read_to_string(&data).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("RE_full,RE_prose,SWR,SKWR,QR,CEP,STR,CS,CA_file"));
    assert!(header.ends_with("label"));
    assert!(csv.lines().count() > 40);
    let study = ok(&["study", "-i", p(&data), "--format", "csv"]);
    assert_eq!(study.lines().count(), 16);
}

#[test]
fn predict_agrees_with_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let data = pipeline(dir.path());
    let model = dir.path().join("model.json");
    ok(&["train", "-i", p(&data), "--n-trees", "40", "--seed", "3", "-o", p(&model)]);
    let request = format!("{FIXTURES}/predict_request.json");
    let out = ok(&["predict", "-m", p(&model), "-i", &request, "--request", "--format", "json"]);
    let cli: serde_json::Value = serde_json::from_str(&out).unwrap();
    let req: PredictRequest = serde_json::from_str(&std::fs::read_to_string(&request).unwrap()).unwrap();
    let lib = handle_predict(&req, &TrainedModel::load(&model).unwrap(), &Lexicons::default()).unwrap();
    assert_eq!(cli, serde_json::to_value(&lib).unwrap());
    assert_eq!(cli["features"].as_array().unwrap().len(), 15);

    // the plain-text form with flags builds the same request
    let body = dir.path().join("comment.txt");
    std::fs::write(&body, format!("{}\n", req.comment_body)).unwrap();
    let s = req.reviewer_stats.clone().unwrap();
    let num = |v: Option<f64>| v.unwrap().to_string();
    let (ca_file, ca_sys, cr_file, cr_commits, cr_prs, ele) =
        (num(s.ca_file), num(s.ca_sys), num(s.cr_file), num(s.cr_commits), num(s.cr_prs), num(s.ele));
    let mut args = vec!["predict", "-m", p(&model), "-i", p(&body), "--format", "json"];
    for l in &req.changed_lines {
        args.extend(["--changed-line", l.as_str()]);
    }
    args.extend(["--ca-file", &ca_file, "--ca-sys", &ca_sys, "--cr-file", &cr_file]);
    args.extend(["--cr-commits", &cr_commits, "--cr-prs", &cr_prs, "--ele", &ele]);
    let flags: serde_json::Value = serde_json::from_str(&ok(&args)).unwrap();
    assert_eq!(flags, cli);

    let table = ok(&["predict", "-m", p(&model), "-i", p(&body)]);
    assert!(table.starts_with("label: "));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // missing input is an I/O failure
    let out = revhelper(&["label", "-i", p(&dir.path().join("absent.json"))]);
    assert_eq!(out.status.code(), Some(2));
    // usage errors
    assert_eq!(revhelper(&["label", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(revhelper(&["--help"]).status.code(), Some(0));
    // single-class data is a contract violation
    let one_class = dir.path().join("one.csv");
    std::fs::write(&one_class, "SWR,QR,label\n0.1,0,useful\n0.2,0.5,useful\n0.3,1,useful\n").unwrap();
    let out = revhelper(&["study", "-i", p(&one_class), "--feature-set", "SWR,QR"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    let out = revhelper(&["train", "-i", p(&one_class), "--feature-set", "SWR,QR", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fetch_replays_tapes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let tape = format!("{FIXTURES}/tapes/one_pr.json");
    ok(&["fetch", "--repo", "acme/shop", "--tape", &tape, "-o", p(&corpus)]);
    let labeled: serde_json::Value = serde_json::from_str(&ok(&["label", "-i", p(&corpus)])).unwrap();
    let comments = labeled["systems"][0]["pull_requests"][0]["comments"].as_array().unwrap();
    let values: Vec<&str> = comments.iter().map(|c| c["label"]["value"].as_str().unwrap()).collect();
    assert_eq!(values, ["useful", "non_useful"]);

    let out = revhelper(&["fetch", "--repo", "acme/shop", "--tape", &format!("{FIXTURES}/tapes/expired_token.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("authentication rejected"));
    let out = revhelper(&["fetch", "--repo", "acme/shop", "--tape", &format!("{FIXTURES}/tapes/rate_limited.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("42"));
}

#[test]
fn omitted_seed_is_reported() {
    let out = revhelper(&["synth", "--n-prs", "2"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let seed: u64 = err.lines().find_map(|l| l.strip_prefix("seed: ")).unwrap().trim().parse().unwrap();
    let again = ok(&["synth", "--n-prs", "2", "--seed", &seed.to_string()]);
    assert_eq!(again.as_bytes(), out.stdout.as_slice());
}
