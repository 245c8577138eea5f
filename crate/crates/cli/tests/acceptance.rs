//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use revhelper::eval::evaluate_random_forest_runs;
use revhelper::features::{build_dataset, FeatureConfig, FEATURE_NAMES};
use revhelper::ingest::{generate_synthetic_corpus, SynthSpec};
use revhelper::labeling::{label_corpus, LabelPolicy};
use revhelper::learn::Hyper;
use revhelper::stats::study::run_comparative_study;
use revhelper::text::Lexicons;

#[path = "../../core/tests/stats_oracle.rs"]
#[allow(dead_code, unused_imports)]
mod stats_oracle;

#[path = "../../core/tests/text_features.rs"]
#[allow(dead_code, unused_imports)]
mod text_features;

#[path = "../../core/tests/labeling.rs"]
#[allow(dead_code, unused_imports)]
mod labeling;

#[path = "../../core/tests/numerics.rs"]
#[allow(dead_code, unused_imports)]
mod numerics;

fn synthetic(n_prs: usize, signal: f64, seed: u64) -> revhelper::features::Dataset {
    let spec = SynthSpec {
        n_prs,
        signal_strength: signal,
        seed,
        ..SynthSpec::default()
    };
    let mut c = generate_synthetic_corpus(&spec).unwrap();
    label_corpus(&mut c, &LabelPolicy::default()).unwrap();
    build_dataset(&c, &Lexicons::default(), &FeatureConfig::default(), None)
        .select(&FEATURE_NAMES)
        .unwrap()
}

fn within(limit: Duration, start: Instant, what: &str) {
    let t = start.elapsed();
    assert!(t < limit, "{what} took {t:?}, limit {limit:?}");
}

fn statistical_oracles() {
    let start = Instant::now();
    stats_oracle::check_mann_whitney_exact_matches_enumeration_up_to_6x6();
    stats_oracle::check_kruskal_wallis_exact_matches_permutation_oracle();
    within(Duration::from_secs(10), start, "oracle suite");
}

fn feature_fixtures() {
    text_features::check_thirty_fixtures_match_hand_values();
    text_features::check_motivating_comments();
    text_features::check_syllable_table_flesch_within_two_points();
}

fn labeling_fixtures() {
    labeling::check_twelve_crafted_prs_match_hand_traces();
}

fn learner_sanity() {
    let start = Instant::now();
    let hyper = Hyper {
        n_trees: 200,
        ..Hyper::default()
    };
    let strong = synthetic(400, 2.0, 1);
    assert!(strong.len() >= 900, "{} rows", strong.len());
    let m = evaluate_random_forest_runs(&strong, &hyper, 10, 2).unwrap().headline();
    let auc = m.auc.unwrap();
    assert!(m.accuracy >= 0.90 && auc >= 0.95, "signal 2: accuracy {:.4}, AUC {auc:.4}", m.accuracy);

    let null = synthetic(400, 0.0, 3);
    let (u, n) = null.class_counts();
    let majority = u.max(n) as f64 / (u + n) as f64;
    let m = evaluate_random_forest_runs(&null, &hyper, 10, 4).unwrap().headline();
    let auc = m.auc.unwrap();
    assert!(
        (m.accuracy - majority).abs() <= 0.05 && (0.45..=0.55).contains(&auc),
        "signal 0: accuracy {:.4} (majority {majority:.4}), AUC {auc:.4}",
        m.accuracy
    );
    within(Duration::from_secs(60), start, "learner sanity");
}

fn numerical_checks() {
    numerics::check_logistic_gradient_matches_central_differences();
    numerics::check_pca_components_are_orthonormal();
    numerics::check_naive_bayes_posteriors_sum_to_one();
    numerics::check_trapezoid_auc_equals_rank_auc();
}

fn run(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_revhelper"))
        .args(args)
        .env_remove("REVHELPER_TOKEN")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a labeled synthetic dataset into `dir` and returns its path.
fn dataset_file(dir: &Path) -> String {
    let corpus = dir.join("corpus.json");
    let labeled = dir.join("labeled.json");
    let data = dir.join("data.csv");
    std::fs::write(&corpus, run(&["synth", "--n-prs", "60", "--signal", "1.5", "--seed", "5"])).unwrap();
    std::fs::write(&labeled, run(&["label", "-i", p(&corpus)])).unwrap();
    std::fs::write(&data, run(&["features", "-i", p(&labeled)])).unwrap();
    p(&data).to_string()
}

fn header(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).lines().next().unwrap_or_default().to_string()
}

fn protocol_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset_file(dir.path());
    let performance = "algorithm,dimension,feature_set,useful_precision,useful_recall,non_useful_precision,\
                  non_useful_recall,precision,recall,f1,accuracy";
    for protocol in ["cv", "runs"] {
        let out = run(&["evaluate", "-i", &data, "--n-trees", "20", "--runs", "3", "--protocol", protocol, "--seed", "1", "--format", "csv"]);
        assert_eq!(header(&out), performance, "{protocol}");
        assert_eq!(String::from_utf8_lossy(&out).lines().count(), 2);
    }
    let grid = run(&["evaluate", "-i", &data, "--n-trees", "20", "--runs", "3", "-k", "3", "--protocol", "grid", "--seed", "1", "--format", "csv"]);
    assert_eq!(header(&grid), performance);
    assert_eq!(String::from_utf8_lossy(&grid).lines().count(), 9);

    let comparison = "classifier,test_useful_precision,test_useful_recall,test_non_useful_precision,test_non_useful_recall,\
                  test_f1,test_accuracy,validation_useful_precision,validation_useful_recall,\
                  validation_non_useful_precision,validation_non_useful_recall,validation_f1,validation_accuracy,significance";
    let cmp = run(&["evaluate", "-i", &data, "--n-trees", "20", "--runs", "3", "-k", "3", "--protocol", "baselines", "--seed", "1", "--format", "csv"]);
    assert_eq!(header(&cmp), comparison);
    let text = String::from_utf8_lossy(&cmp).to_string();
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        names,
        ["Baseline-I", "Baseline-II-a", "Baseline-II-b", "Baseline-III-a", "Baseline-III-b", "RevHelper_txt", "RevHelper_exp", "RevHelper"]
    );

    let study = String::from_utf8(run(&["study", "-i", &data, "--format", "csv"])).unwrap();
    let cols: Vec<&str> = study.lines().next().unwrap().split(',').collect();
    for want in ["feature", "U", "p_mwu", "cohens_d", "H", "p_kw"] {
        assert!(cols.contains(&want), "study lacks {want}");
    }
    for q in 1..=4 {
        for stat in ["U", "p", "d"] {
            assert!(cols.contains(&format!("Q{q}_{stat}").as_str()), "study lacks Q{q}_{stat}");
        }
    }
    let rows: Vec<&str> = study.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, FEATURE_NAMES);
    assert!(study.lines().skip(1).all(|l| l.split(',').count() == cols.len()));
}

fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset_file(dir.path());
    let model = dir.path().join("model.json");
    let commands: Vec<Vec<&str>> = vec![
        vec!["synth", "--n-prs", "30", "--seed", "9"],
        vec!["train", "-i", &data, "--n-trees", "30", "--seed", "9"],
        vec!["train", "-i", &data, "--kind", "lr", "--pca", "0.95", "--seed", "9"],
        vec!["evaluate", "-i", &data, "--kind", "nb", "--protocol", "cv", "--seed", "9", "--format", "json"],
        vec!["evaluate", "-i", &data, "--n-trees", "20", "--runs", "3", "--seed", "9", "--format", "json"],
        vec!["evaluate", "-i", &data, "--n-trees", "20", "--runs", "3", "-k", "3", "--protocol", "baselines", "--seed", "9", "--format", "json"],
        vec!["study", "-i", &data, "--format", "json"],
    ];
    for args in &commands {
        assert_eq!(run(args), run(args), "{args:?} differs between runs");
    }
    // features and labels are derived deterministically from the corpus
    let corpus = dir.path().join("corpus.json");
    assert_eq!(run(&["label", "-i", p(&corpus)]), run(&["label", "-i", p(&corpus)]));
    let labeled = dir.path().join("labeled.json");
    assert_eq!(run(&["features", "-i", p(&labeled)]), run(&["features", "-i", p(&labeled)]));

    std::fs::write(&model, run(&["train", "-i", &data, "--n-trees", "30", "--seed", "9"])).unwrap();
    let request = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/predict_request.json");
    let predict = ["predict", "-m", p(&model), "-i", request, "--request", "--format", "json"];
    assert_eq!(run(&predict), run(&predict));
}

fn null_study_guard() {
    let mut rows = 0;
    let mut flagged = 0;
    for seed in 0..20 {
        let ds = synthetic(100, 0.0, 1000 + seed);
        let report = run_comparative_study(&ds).unwrap();
        rows += report.features.len();
        flagged += report.features.iter().filter(|f| f.mann_whitney.p_value < 0.05).count();
    }
    assert!(flagged * 10 <= rows, "{flagged} of {rows} feature rows at p < 0.05");
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        ("statistical oracle suite", statistical_oracles),
        ("feature-extraction fixtures", feature_fixtures),
        ("labeling heuristic fixtures", labeling_fixtures),
        ("learner sanity", learner_sanity),
        ("numerical checks", numerical_checks),
        ("protocol reproduction", protocol_columns),
        ("determinism", determinism),
        ("null-study guard", null_study_guard),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(()) => println!("PASS {name} ({:.1} s)", start.elapsed().as_secs_f64()),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
