//! Forge client over recorded tapes, diff parsing and the synthetic corpus.

use std::sync::Mutex;

use revhelper::corpus::{validate_corpus, ChangeKind, ReviewCorpus};
use revhelper::ingest::forge::{HttpResponse, Secret, TOKEN_ENV};
use revhelper::ingest::*;
use revhelper::labeling::{label_corpus, LabelPolicy};
use revhelper::Error;

const TAPES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/tapes");

fn config() -> ForgeConfig {
    ForgeConfig::new("https://forge.invalid", "acme/shop")
}

fn tape(name: &str) -> TapeTransport {
    TapeTransport::load(format!("{TAPES}/{name}")).unwrap()
}

#[test]
fn one_pr_tape_yields_labeled_comments() {
    let mut corpus = fetch_remote_reviews(&config(), &tape("one_pr.json")).unwrap();
    assert!(validate_corpus(&corpus).is_empty(), "{:?}", validate_corpus(&corpus));
    let (system, pr) = corpus.pull_requests().next().unwrap();
    assert_eq!(system.name, "acme/shop");
    assert_eq!(pr.commits.len(), 2);
    // the pull-request-level comment has no anchor and is skipped
    assert_eq!(pr.comments.len(), 2);
    label_corpus(&mut corpus, &LabelPolicy::default()).unwrap();
    let (_, pr) = corpus.pull_requests().next().unwrap();
    let first = pr.comments.iter().find(|c| c.id.ends_with("1001")).unwrap().label.clone().unwrap();
    assert!(first.value.is_useful());
    assert_eq!(first.trigger_commit.as_deref(), Some("d4e5f6"));
    assert_eq!((first.trigger_line, first.distance), (Some(13), Some(1)));
    let second = pr.comments.iter().find(|c| c.id.ends_with("1002")).unwrap().label.clone().unwrap();
    assert!(!second.value.is_useful());
}

#[test]
fn rejected_token_and_rate_limit_are_typed() {
    match fetch_remote_reviews(&config(), &tape("expired_token.json")) {
        Err(Error::Auth { status: 401 }) => {}
        other => panic!("expected auth error, got {other:?}"),
    }
    match fetch_remote_reviews(&config(), &tape("rate_limited.json")) {
        Err(Error::RateLimited { retry_after_secs: 42 }) => {}
        other => panic!("expected rate limit, got {other:?}"),
    }
    let missing = TapeTransport::new(Vec::new());
    assert!(matches!(fetch_remote_reviews(&config(), &missing), Err(Error::Transport(_))));
}

/// Replays a tape and remembers which token each request carried.
struct Spy {
    inner: TapeTransport,
    tokens: Mutex<Vec<Option<String>>>,
}

impl Transport for Spy {
    fn get(&self, url: &str, token: Option<&Secret>) -> revhelper::Result<HttpResponse> {
        self.tokens.lock().unwrap().push(token.map(|t| t.expose().to_string()));
        self.inner.get(url, token)
    }
}

#[test]
fn token_is_sent_but_never_recorded_or_printed() {
    let mut cfg = config();
    cfg.auth_token = Some(Secret::new("s3cret-value"));
    assert!(!format!("{cfg:?}").contains("s3cret-value"));
    let spy = Spy {
        inner: tape("one_pr.json"),
        tokens: Mutex::new(Vec::new()),
    };
    let recorder = RecordingTransport::new(spy, "https://forge.invalid");
    let live = fetch_remote_reviews(&cfg, &recorder).unwrap();
    let text = recorder.to_tape();
    assert!(!text.contains("s3cret-value"));
    let replayed = fetch_remote_reviews(&config(), &TapeTransport::from_json(&text).unwrap()).unwrap();
    assert_eq!(live, replayed);
    assert_eq!(TOKEN_ENV, "REVHELPER_TOKEN");
}

#[test]
fn config_validation() {
    assert!(config().validate().is_ok());
    let mut c = config();
    c.page_size = 0;
    assert!(c.validate().is_err());
    let mut c = config();
    c.repo = "noslash".into();
    assert!(c.validate().is_err());
    let mut c = config();
    c.base_url = "ftp://x".into();
    assert!(c.validate().is_err());
}

const DIFF: &str = "\
diff --git a/app/orders.py b/app/orders.py
index 1111111..2222222 100644
--- a/app/orders.py
+++ b/app/orders.py
@@ -10,4 +10,5 @@ def total(items):
     subtotal = 0
-    for i in items:
+    for item in items:
+        check(item)
         subtotal += i
     return subtotal
diff --git a/old.py b/new.py
similarity index 100%
rename from old.py
rename to new.py
diff --git a/gone.py b/gone.py
deleted file mode 100644
--- a/gone.py
+++ /dev/null
@@ -1,2 +0,0 @@
-import os
-print(os.name)
";

#[test]
fn unified_diff_line_numbers() {
    let files = parse_unified_diff(DIFF).unwrap();
    assert_eq!(files.len(), 3);
    let f = &files[0];
    assert_eq!((f.path.as_str(), f.change_kind), ("app/orders.py", ChangeKind::Modified));
    let h = &f.hunks[0];
    // deleted pre-image line 11, added post-image lines 11 and 12
    assert_eq!(h.changed_lines.iter().copied().collect::<Vec<_>>(), vec![11, 12]);
    assert_eq!(h.line_texts[&12], "        check(item)");
    assert_eq!(h.removed_texts[&11], "    for i in items:");
    assert_eq!(files[1].change_kind, ChangeKind::Renamed);
    assert_eq!((files[1].old_path.as_deref(), files[1].path.as_str()), (Some("old.py"), "new.py"));
    assert_eq!(files[2].change_kind, ChangeKind::Deleted);

    let bad = "--- a/x\n+++ b/x\n@@ -1,2 +1,2 @@\n context\n";
    match parse_unified_diff(bad) {
        Err(Error::DiffParse { line, .. }) => assert!(line >= 3),
        other => panic!("expected a diff error, got {other:?}"),
    }
}

#[test]
fn synthetic_corpus_is_valid_and_seeded() {
    let spec = SynthSpec {
        n_prs: 30,
        seed: 4,
        ..SynthSpec::default()
    };
    let a = generate_synthetic_corpus(&spec).unwrap();
    let b = generate_synthetic_corpus(&spec).unwrap();
    assert_eq!(a, b);
    assert!(validate_corpus(&a).is_empty(), "{:?}", validate_corpus(&a));
    assert_ne!(a, generate_synthetic_corpus(&SynthSpec { seed: 5, ..spec.clone() }).unwrap());
    assert!(a.pull_requests().all(|(_, pr)| pr.comments.iter().all(|c| c.label.is_none())));
    let back = ReviewCorpus::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
    assert!(generate_synthetic_corpus(&SynthSpec { n_developers: 1, ..spec.clone() }).is_err());
    assert!(generate_synthetic_corpus(&SynthSpec { useful_fraction: 1.5, ..spec }).is_err());
}

#[test]
fn corpus_parse_errors_carry_offsets() {
    match ReviewCorpus::from_json("{\"schema_version\": 1, \"systems\": [}") {
        Err(Error::Parse { offset, .. }) => assert!(offset > 0),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
