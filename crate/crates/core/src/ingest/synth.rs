//! Synthetic review corpora with planted ground truth.
//!
//! Each pull request has an initial commit that writes the anchored lines,
//! then all inline comments, then one follow-up commit. Comments drawn as
//! useful get a follow-up change within the default vicinity of their
//! anchor; the others get no change, a change 12-14 lines away, or a change
//! in a file nobody commented on. The labeling heuristic therefore recovers
//! the drawn labels exactly.
//!
//! With `signal_strength = s > 0`, three latent channels are shifted by
//! `+-SHIFT_PER_UNIT * s` standard deviations depending on the drawn label:
//! vocabulary shared with the anchored line (CS), number of embedded code
//! elements (CEP, STR) and reviewer seniority (CA, CR, ELE). Everything else
//! is drawn independently of the label.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::corpus::{
    ChangeKind, Commit, DiffHunk, FileDiff, InlineComment, PullRequest, ReviewCorpus, SystemRecord, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Latent shift, in standard deviations, per unit of signal strength.
pub const SHIFT_PER_UNIT: f64 = 0.5;

const BASE_TIME: i64 = 1_600_000_000;
const DAY: i64 = 86_400;
const ANCHOR_SPACING: u32 = 30;
const ANCHOR_OFFSET: u32 = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_prs: usize,
    /// Inclusive range of inline comments per pull request.
    pub comments_per_pr: (usize, usize),
    pub useful_fraction: f64,
    pub signal_strength: f64,
    pub seed: u64,
    pub n_developers: usize,
    /// Comment-free warm-up pull requests that build authorship history;
    /// `None` means `max(20, n_prs / 2)`.
    pub history_prs: Option<usize>,
    pub system: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_prs: 50,
            comments_per_pr: (1, 4),
            useful_fraction: 0.5553,
            signal_strength: 1.0,
            seed: 0,
            n_developers: 12,
            history_prs: None,
            system: "synthetic".into(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.useful_fraction) {
            return Err(Error::contract(format!("useful_fraction {} outside [0, 1]", self.useful_fraction)));
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength.is_finite()) {
            return Err(Error::contract(format!("signal_strength {} must be finite and >= 0", self.signal_strength)));
        }
        if self.comments_per_pr.0 > self.comments_per_pr.1 {
            return Err(Error::contract("comments_per_pr minimum exceeds maximum"));
        }
        if self.n_developers < 2 {
            return Err(Error::contract("n_developers must be at least 2"));
        }
        if self.system.is_empty() {
            return Err(Error::contract("system name must not be empty"));
        }
        Ok(())
    }
}

const ANCHOR_VOCAB: &[&str] = &[
    "invoice", "ledger", "partner", "market", "tenant", "quota", "shard", "cursor", "payload", "voucher", "currency",
    "region", "bucket", "session", "batch", "schedule", "vendor", "catalog", "coupon", "refund", "shipment",
    "warehouse", "account", "balance", "receipt", "profile", "channel", "metric", "segment", "journal", "snapshot",
    "budget", "order", "ticket", "contract", "listing", "gateway", "pricing", "discount", "inventory",
];

const NEUTRAL_NOUNS: &[&str] = &[
    "branch", "layer", "piece", "block", "path", "part", "section", "flow", "logic", "step", "area", "spot",
    "corner", "detail", "approach", "portion", "routine", "snippet", "helper", "wrapper",
];

const CODE_VOCAB: &[&str] = &[
    "retry_limit", "parse_header()", "config.timeout", "None", "max_items", "load_rows()", "self.cache",
    "HttpClient", "on_commit", "build_index()", "row_count", "is_enabled", "to_dict()", "DataFrame",
    "settings.DEBUG", "True", "page_size", "flush()", "BaseModel", "user_id",
];

const PLAIN_WORDS: &[&str] = &[
    "here", "below", "above", "again", "later", "today", "maybe", "also", "quite", "still",
];

const OPENERS: &[&str] = &["Looking at the", "About the", "Regarding the", "On the", "For the", "In the"];

const FILLERS: &[&str] = &[
    "Could we add a test for this?",
    "Not sure this is needed.",
    "Nice work on this part.",
    "This looks fine to me.",
    "Why do we need this here?",
    "Please rename this.",
    "This might be a bug.",
    "Maybe move this to a helper.",
    "I think this is a bit confusing.",
    "Can you check the return value?",
    "Thanks, that makes sense.",
    "We should handle the error case.",
    "Is this still used?",
    "Small nit.",
    "The naming could be clearer.",
    "Consider a simpler loop.",
];

const LIBRARIES: &[&str] = &[
    "requests", "numpy", "pandas", "django", "flask", "sqlalchemy", "celery", "redis", "boto3", "yaml", "logging",
    "datetime", "collections", "itertools", "typing", "pytest", "attr", "click", "jinja2", "decimal",
];

struct World {
    devs: Vec<String>,
    activity: Vec<f64>,
    files: Vec<String>,
    imports: Vec<Vec<String>>,
    normal: Normal,
}

impl World {
    fn new(spec: &SynthSpec, rng: &mut Rng) -> Self {
        let devs: Vec<String> = (0..spec.n_developers).map(|i| format!("dev{i:02}")).collect();
        // dev00 is the most active author
        let activity = (0..spec.n_developers).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let files: Vec<String> = (0..24).map(|i| format!("svc/module_{i:02}.py")).collect();
        let imports = files
            .iter()
            .map(|_| {
                let k = rng.random_range(2..=5);
                let mut libs: Vec<String> = LIBRARIES.choose_multiple(rng, k).map(|s| s.to_string()).collect();
                libs.sort();
                libs
            })
            .collect();
        World {
            devs,
            activity,
            files,
            imports,
            normal: Normal::standard(),
        }
    }

    fn pick_author(&self, rng: &mut Rng) -> usize {
        let total: f64 = self.activity.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, w) in self.activity.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        self.activity.len() - 1
    }

    /// Reviewer index from a latent seniority score; higher is more senior.
    fn pick_reviewer(&self, z: f64, submitter: usize) -> usize {
        let d = self.devs.len();
        let u = self.normal.cdf(z);
        let idx = (((1.0 - u) * d as f64).floor() as usize).min(d - 1);
        if idx == submitter {
            if idx + 1 < d {
                idx + 1
            } else {
                idx - 1
            }
        } else {
            idx
        }
    }

    fn import_lines(&self, file: usize) -> BTreeMap<u32, String> {
        self.imports[file]
            .iter()
            .enumerate()
            .map(|(i, lib)| (i as u32 + 1, format!("import {lib}")))
            .collect()
    }
}

fn anchor_line(slot: usize) -> u32 {
    ANCHOR_SPACING * slot as u32 + ANCHOR_OFFSET
}

fn latent(rng: &mut Rng, shift: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z + shift
}

fn hunk(lines: BTreeMap<u32, String>) -> DiffHunk {
    DiffHunk {
        changed_lines: lines.keys().copied().collect(),
        line_texts: lines,
        ..Default::default()
    }
}

fn comment_body(rng: &mut Rng, anchor_words: &[&str], shift: f64) -> String {
    let overlap = (1.5 + latent(rng, shift)).round().clamp(0.0, 4.0) as usize;
    let n_code = (1.0 + latent(rng, shift)).round().clamp(0.0, 3.0) as usize;
    let mut words: Vec<String> = anchor_words[..overlap].iter().map(|s| s.to_string()).collect();
    words.extend(NEUTRAL_NOUNS.choose_multiple(rng, 4 - overlap).map(|s| s.to_string()));
    words.extend(CODE_VOCAB.choose_multiple(rng, n_code).map(|s| s.to_string()));
    words.extend(PLAIN_WORDS.choose_multiple(rng, 3 - n_code).map(|s| s.to_string()));
    words.shuffle(rng);
    let opener = OPENERS.choose(rng).unwrap();
    let end = if rng.random_bool(0.3) { "?" } else { "." };
    let mut body = format!("{opener} {}{end}", words.join(" "));
    for _ in 0..rng.random_range(0..=2) {
        body.push(' ');
        body.push_str(FILLERS.choose(rng).unwrap());
    }
    body
}

/// Builds a corpus from `spec`; comments are left unlabeled.
pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<ReviewCorpus> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let world = World::new(spec, &mut rng);
    let mut prs = Vec::new();

    let history = spec.history_prs.unwrap_or((spec.n_prs / 2).max(20));
    for h in 0..history {
        let author = world.pick_author(&mut rng);
        let n_files = rng.random_range(1..=3);
        let file_idx: Vec<usize> = rand::seq::index::sample(&mut rng, world.files.len(), n_files).into_vec();
        let ts = BASE_TIME + h as i64 * DAY / 4;
        let mut diffs: Vec<FileDiff> = file_idx
            .iter()
            .map(|&f| FileDiff {
                path: world.files[f].clone(),
                change_kind: ChangeKind::Modified,
                old_path: None,
                hunks: vec![hunk(world.import_lines(f))],
                post_image_imports: Some(world.imports[f].clone()),
            })
            .collect();
        diffs.sort_by(|a, b| a.path.cmp(&b.path));
        prs.push(PullRequest {
            id: format!("hist-{h:04}"),
            commits: vec![Commit {
                id: format!("h{h:04}"),
                author: world.devs[author].clone(),
                timestamp: ts,
                file_diffs: diffs,
            }],
            comments: Vec::new(),
            submitter: world.devs[author].clone(),
            scaffolding: true,
        });
    }

    let (lo, hi) = spec.comments_per_pr;
    let counts: Vec<usize> = (0..spec.n_prs).map(|_| rng.random_range(lo..=hi)).collect();
    let total: usize = counts.iter().sum();
    let n_useful = (spec.useful_fraction * total as f64).round() as usize;
    let mut labels: Vec<bool> = (0..total).map(|i| i < n_useful).collect();
    labels.shuffle(&mut rng);
    let mut labels = labels.into_iter();

    let start = BASE_TIME + history as i64 * DAY / 4 + DAY;
    for (k, &m) in counts.iter().enumerate() {
        let t0 = start + k as i64 * DAY / 2;
        let submitter = world.pick_author(&mut rng);
        let n_files = if m == 0 { 1 } else { rng.random_range(1..=m.min(3)) };
        let file_idx: Vec<usize> = rand::seq::index::sample(&mut rng, world.files.len(), n_files).into_vec();
        let pr_id = format!("pr-{k:04}");
        let initial_id = format!("c{k:04}-0");

        let mut initial: BTreeMap<usize, BTreeMap<u32, String>> =
            file_idx.iter().map(|&f| (f, world.import_lines(f))).collect();
        let mut followup: BTreeMap<usize, BTreeMap<u32, String>> = BTreeMap::new();
        let mut comments = Vec::new();
        let mut slots: BTreeMap<usize, usize> = BTreeMap::new();
        for j in 0..m {
            let useful = labels.next().expect("label per comment");
            let shift = if useful { 1.0 } else { -1.0 } * SHIFT_PER_UNIT * spec.signal_strength;
            let f = file_idx[j % n_files];
            let slot = slots.entry(f).or_insert(0);
            let line = anchor_line(*slot + 1);
            *slot += 1;

            let anchor_words: Vec<&str> = ANCHOR_VOCAB.choose_multiple(&mut rng, 4).copied().collect();
            let text = format!(
                "    {}_{} = {}.{}()",
                anchor_words[0], anchor_words[1], anchor_words[2], anchor_words[3]
            );
            let lines = initial.get_mut(&f).unwrap();
            lines.insert(line, text);
            lines.insert(line + 1, "    return result".into());

            let reviewer = world.pick_reviewer(latent(&mut rng, shift), submitter);
            let body = comment_body(&mut rng, &anchor_words, shift);
            comments.push(InlineComment {
                id: format!("{pr_id}-c{j}"),
                pr_id: pr_id.clone(),
                anchor_path: world.files[f].clone(),
                anchor_line: line,
                anchor_commit: initial_id.clone(),
                reviewer: world.devs[reviewer].clone(),
                timestamp: t0 + 600 + j as i64 * 60,
                body,
                label: None,
            });

            let change = if useful {
                Some((f, line.saturating_add_signed(rng.random_range(-10..=10))))
            } else {
                match rng.random_range(0..4) {
                    0 | 1 => {
                        let d = rng.random_range(12..=14);
                        Some((f, if rng.random_bool(0.5) { line + d } else { line - d }))
                    }
                    2 => {
                        let others: Vec<usize> = (0..world.files.len()).filter(|x| !file_idx.contains(x)).collect();
                        Some((*others.choose(&mut rng).unwrap(), line))
                    }
                    _ => None,
                }
            };
            if let Some((file, at)) = change {
                followup
                    .entry(file)
                    .or_default()
                    .insert(at, format!("    {} = {}", NEUTRAL_NOUNS.choose(&mut rng).unwrap(), anchor_words[0]));
            }
        }

        let to_diffs = |map: BTreeMap<usize, BTreeMap<u32, String>>, with_imports: bool| {
            let mut diffs: Vec<FileDiff> = map
                .into_iter()
                .map(|(f, lines)| FileDiff {
                    path: world.files[f].clone(),
                    change_kind: ChangeKind::Modified,
                    old_path: None,
                    hunks: vec![hunk(lines)],
                    post_image_imports: with_imports.then(|| world.imports[f].clone()),
                })
                .collect();
            diffs.sort_by(|a, b| a.path.cmp(&b.path));
            diffs
        };
        let mut commits = vec![Commit {
            id: initial_id,
            author: world.devs[submitter].clone(),
            timestamp: t0,
            file_diffs: to_diffs(initial, true),
        }];
        if !followup.is_empty() {
            commits.push(Commit {
                id: format!("c{k:04}-1"),
                author: world.devs[submitter].clone(),
                timestamp: t0 + 7200,
                file_diffs: to_diffs(followup, true),
            });
        }
        prs.push(PullRequest {
            id: pr_id,
            commits,
            comments,
            submitter: world.devs[submitter].clone(),
            scaffolding: false,
        });
    }

    Ok(ReviewCorpus {
        schema_version: SCHEMA_VERSION,
        systems: vec![SystemRecord {
            name: spec.system.clone(),
            pull_requests: prs,
        }],
    })
}
