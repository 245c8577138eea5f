//! Reviewer experience: code authorship, code reviewership and familiarity
//! with the external libraries a file imports.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Commit, SystemRecord};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthoredCommit {
    pub id: String,
    pub timestamp: i64,
    pub paths: Vec<String>,
    /// Imports of each touched file's post-image, where known.
    #[serde(default)]
    pub imports: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewedCommit {
    pub id: String,
    pub timestamp: i64,
    pub paths: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewedPr {
    pub pr_id: String,
    pub timestamp: i64,
}

/// Time-ordered activity of one developer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeveloperHistory {
    pub developer: String,
    #[serde(default)]
    pub authored_commits: Vec<AuthoredCommit>,
    #[serde(default)]
    pub reviewed_commits: Vec<ReviewedCommit>,
    #[serde(default)]
    pub reviewed_prs: Vec<ReviewedPr>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AuthorshipCounts {
    pub file_commits: u64,
    pub system_commits: u64,
    pub changed_file_before: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReviewershipCounts {
    pub file_reviewed: u64,
    pub commits_reviewed_total: u64,
    pub prs_reviewed_total: u64,
    pub reviewed_file_before: bool,
}

pub fn authorship_counts(path: &str, at: i64, hist: &DeveloperHistory) -> AuthorshipCounts {
    let before = hist.authored_commits.iter().filter(|c| c.timestamp < at);
    let (mut file, mut system) = (0, 0);
    for c in before {
        system += 1;
        if c.paths.iter().any(|p| p == path) {
            file += 1;
        }
    }
    AuthorshipCounts {
        file_commits: file,
        system_commits: system,
        changed_file_before: file >= 1,
    }
}

pub fn reviewership_counts(path: &str, at: i64, hist: &DeveloperHistory) -> ReviewershipCounts {
    let commits: Vec<_> = hist.reviewed_commits.iter().filter(|c| c.timestamp < at).collect();
    let file = commits.iter().filter(|c| c.paths.iter().any(|p| p == path)).count() as u64;
    ReviewershipCounts {
        file_reviewed: file,
        commits_reviewed_total: commits.len() as u64,
        prs_reviewed_total: hist.reviewed_prs.iter().filter(|p| p.timestamp < at).count() as u64,
        reviewed_file_before: file >= 1,
    }
}

/// Share of `target_imports` found among imports of files the developer
/// authored strictly before `at` (optionally only within `window_secs`).
/// `None` when the target file imports nothing.
pub fn external_library_experience(
    target_imports: &[String],
    at: i64,
    hist: &DeveloperHistory,
    window_secs: Option<i64>,
) -> Option<f64> {
    let target: BTreeSet<&str> = target_imports.iter().map(String::as_str).collect();
    if target.is_empty() {
        return None;
    }
    let known: BTreeSet<&str> = hist
        .authored_commits
        .iter()
        .filter(|c| c.timestamp < at && window_secs.is_none_or(|w| c.timestamp >= at - w))
        .flat_map(|c| c.imports.values().flatten())
        .map(String::as_str)
        .collect();
    let hits = target.iter().filter(|t| known.contains(*t)).count();
    Some(hits as f64 / target.len() as f64)
}

/// Developer histories and per-file import snapshots for one system.
#[derive(Debug, Clone, Default)]
pub struct ExperienceIndex {
    histories: HashMap<String, DeveloperHistory>,
    imports_by_path: HashMap<String, Vec<(i64, Vec<String>)>>,
}

static EMPTY: std::sync::LazyLock<DeveloperHistory> = std::sync::LazyLock::new(DeveloperHistory::default);

impl ExperienceIndex {
    /// Derives histories from a system's pull requests.
    ///
    /// A developer reviewed a commit when they left at least one inline
    /// comment in that commit's pull request at or before the commit; the
    /// review is dated at the commit. A pull request counts as reviewed from
    /// the developer's first inline comment on it.
    pub fn from_system(system: &SystemRecord) -> Self {
        let mut histories: HashMap<String, DeveloperHistory> = HashMap::new();
        let mut imports_by_path: HashMap<String, Vec<(i64, Vec<String>)>> = HashMap::new();
        for pr in &system.pull_requests {
            for commit in &pr.commits {
                let hist = histories.entry(commit.author.clone()).or_insert_with(|| DeveloperHistory {
                    developer: commit.author.clone(),
                    ..Default::default()
                });
                hist.authored_commits.push(authored(commit));
                for diff in &commit.file_diffs {
                    if let Some(imports) = &diff.post_image_imports {
                        imports_by_path
                            .entry(diff.path.clone())
                            .or_default()
                            .push((commit.timestamp, imports.clone()));
                    }
                }
            }
            let mut first_comment: BTreeMap<&str, i64> = BTreeMap::new();
            for c in &pr.comments {
                let e = first_comment.entry(c.reviewer.as_str()).or_insert(c.timestamp);
                *e = (*e).min(c.timestamp);
            }
            for (dev, first) in first_comment {
                let hist = histories.entry(dev.to_string()).or_insert_with(|| DeveloperHistory {
                    developer: dev.to_string(),
                    ..Default::default()
                });
                hist.reviewed_prs.push(ReviewedPr {
                    pr_id: pr.id.clone(),
                    timestamp: first,
                });
                for commit in pr.commits.iter().filter(|c| c.timestamp >= first) {
                    hist.reviewed_commits.push(ReviewedCommit {
                        id: commit.id.clone(),
                        timestamp: commit.timestamp,
                        paths: commit.file_diffs.iter().map(|d| d.path.clone()).collect(),
                    });
                }
            }
        }
        let mut index = ExperienceIndex {
            histories,
            imports_by_path,
        };
        index.normalize();
        index
    }

    /// Merges pre-corpus history (for long-lived reviewers) from a sidecar.
    pub fn merge_sidecar(&mut self, sidecar: HistorySidecar) {
        for extra in sidecar.developers {
            let hist = self
                .histories
                .entry(extra.developer.clone())
                .or_insert_with(|| DeveloperHistory {
                    developer: extra.developer.clone(),
                    ..Default::default()
                });
            hist.authored_commits.extend(extra.authored_commits);
            hist.reviewed_commits.extend(extra.reviewed_commits);
            hist.reviewed_prs.extend(extra.reviewed_prs);
        }
        self.normalize();
    }

    fn normalize(&mut self) {
        for h in self.histories.values_mut() {
            h.authored_commits.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
            h.authored_commits.dedup_by(|a, b| a.id == b.id);
            h.reviewed_commits.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
            h.reviewed_commits.dedup_by(|a, b| a.id == b.id);
            h.reviewed_prs.sort_by(|a, b| (a.timestamp, &a.pr_id).cmp(&(b.timestamp, &b.pr_id)));
            h.reviewed_prs.dedup_by(|a, b| a.pr_id == b.pr_id);
        }
        for snapshots in self.imports_by_path.values_mut() {
            snapshots.sort_by_key(|(ts, _)| *ts);
        }
    }

    pub fn history(&self, developer: &str) -> &DeveloperHistory {
        self.histories.get(developer).unwrap_or(&EMPTY)
    }

    /// Imports of `path` as of the latest known snapshot at or before `at`.
    pub fn target_imports(&self, path: &str, at: i64) -> Vec<String> {
        self.imports_by_path
            .get(path)
            .and_then(|snaps| snaps.iter().rev().find(|(ts, _)| *ts <= at))
            .map(|(_, imports)| imports.clone())
            .unwrap_or_default()
    }
}

fn authored(commit: &Commit) -> AuthoredCommit {
    AuthoredCommit {
        id: commit.id.clone(),
        timestamp: commit.timestamp,
        paths: commit.file_diffs.iter().map(|d| d.path.clone()).collect(),
        imports: commit
            .file_diffs
            .iter()
            .filter_map(|d| d.post_image_imports.clone().map(|i| (d.path.clone(), i)))
            .collect(),
    }
}

/// Optional pre-corpus history injected alongside a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HistorySidecar {
    pub developers: Vec<DeveloperHistory>,
}

impl HistorySidecar {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::Error::Parse {
            offset: e.column(),
            message: e.to_string(),
        })
    }
}

/// Top-level packages imported by a Python source fragment.
pub fn extract_python_imports(source: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |name: &str| {
        let top = name.trim().split('.').next().unwrap_or("").trim();
        if !top.is_empty() && top.chars().all(|c| c.is_alphanumeric() || c == '_') && !out.iter().any(|o| o == top) {
            out.push(top.to_string());
        }
    };
    for line in source.lines() {
        let line = line.trim_start();
        if let Some(rest) = line.strip_prefix("import ") {
            for part in rest.split(',') {
                push(part.split_whitespace().next().unwrap_or(""));
            }
        } else if let Some(rest) = line.strip_prefix("from ") {
            let module = rest.split_whitespace().next().unwrap_or("");
            if !module.starts_with('.') && rest.contains(" import") {
                push(module);
            }
        }
    }
    out
}

/// Import extraction keyed on file extension; only Python is understood.
pub fn extract_imports(path: &str, source: &str) -> Option<Vec<String>> {
    match Path::new(path).extension().and_then(|e| e.to_str()) {
        Some("py") => Some(extract_python_imports(source)),
        _ => None,
    }
}
