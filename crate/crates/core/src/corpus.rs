//! Canonical representation of mined review history.
//!
//! A corpus is a list of systems, each holding pull requests with their
//! commits, per-file diffs and inline review comments. The on-disk form is
//! "corpus-JSON" (see `docs/corpus-schema.md`), a direct serde mapping of the
//! types below.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Default vicinity recorded on labels that do not carry one.
pub const DEFAULT_VICINITY: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewCorpus {
    pub schema_version: u32,
    pub systems: Vec<SystemRecord>,
}

impl Default for ReviewCorpus {
    fn default() -> Self {
        ReviewCorpus {
            schema_version: SCHEMA_VERSION,
            systems: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub name: String,
    pub pull_requests: Vec<PullRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullRequest {
    pub id: String,
    pub commits: Vec<Commit>,
    pub comments: Vec<InlineComment>,
    pub submitter: String,
    #[serde(default)]
    pub scaffolding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commit {
    pub id: String,
    pub author: String,
    pub timestamp: i64,
    pub file_diffs: Vec<FileDiff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
    Renamed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDiff {
    pub path: String,
    pub change_kind: ChangeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_path: Option<String>,
    pub hunks: Vec<DiffHunk>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_image_imports: Option<Vec<String>>,
}

/// Line coordinates from a `@@ -a,b +c,d @@` header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkHeader {
    pub old_start: u32,
    pub old_lines: u32,
    pub new_start: u32,
    pub new_lines: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiffHunk {
    /// Post-image numbers of added lines plus pre-image numbers of deleted lines.
    pub changed_lines: BTreeSet<u32>,
    /// Text of added lines, keyed by post-image line number.
    #[serde(default)]
    pub line_texts: BTreeMap<u32, String>,
    /// Text of deleted lines, keyed by pre-image line number.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub removed_texts: BTreeMap<u32, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<HunkHeader>,
}

impl DiffHunk {
    /// Texts of every changed line that carries one, added lines first.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.line_texts
            .values()
            .chain(self.removed_texts.values())
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Usefulness {
    Useful,
    NonUseful,
}

impl Usefulness {
    pub fn is_useful(self) -> bool {
        self == Usefulness::Useful
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Usefulness::Useful => "useful",
            Usefulness::NonUseful => "non_useful",
        }
    }

    pub fn from_bool(useful: bool) -> Self {
        if useful {
            Usefulness::Useful
        } else {
            Usefulness::NonUseful
        }
    }
}

impl fmt::Display for Usefulness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Usefulness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "useful" | "1" => Ok(Usefulness::Useful),
            "non_useful" | "0" => Ok(Usefulness::NonUseful),
            other => Err(Error::contract(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsefulnessLabel {
    pub value: Usefulness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_commit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_line: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<u32>,
    /// Vicinity the label was computed with; absent means the default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vicinity: Option<u32>,
}

impl UsefulnessLabel {
    pub fn non_useful() -> Self {
        UsefulnessLabel {
            value: Usefulness::NonUseful,
            trigger_commit: None,
            trigger_line: None,
            distance: None,
            vicinity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineComment {
    pub id: String,
    pub pr_id: String,
    pub anchor_path: String,
    pub anchor_line: u32,
    pub anchor_commit: String,
    pub reviewer: String,
    pub timestamp: i64,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<UsefulnessLabel>,
}

/// One invariant failure found by [`validate_corpus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

impl ReviewCorpus {
    pub fn comment_count(&self) -> usize {
        self.pull_requests().map(|(_, pr)| pr.comments.len()).sum()
    }

    pub fn pull_requests(&self) -> impl Iterator<Item = (&SystemRecord, &PullRequest)> {
        self.systems
            .iter()
            .flat_map(|s| s.pull_requests.iter().map(move |pr| (s, pr)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serialization is infallible")
    }

    /// Parses and validates a corpus document held in memory.
    pub fn from_json(text: &str) -> Result<Self> {
        let corpus: ReviewCorpus = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })?;
        if corpus.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation {
                entity: "corpus".into(),
                rule: format!("unsupported schema_version {}", corpus.schema_version),
            });
        }
        if let Some(v) = validate_corpus(&corpus).into_iter().next() {
            return Err(Error::Validation {
                entity: v.entity,
                rule: v.rule,
            });
        }
        Ok(corpus)
    }
}

impl PullRequest {
    pub fn find_comment(&self, id: &str) -> Option<&InlineComment> {
        self.comments.iter().find(|c| c.id == id)
    }
}

/// Reads a corpus-JSON file, rejecting anything [`validate_corpus`] would flag.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<ReviewCorpus> {
    let bytes = std::fs::read(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        offset: e.utf8_error().valid_up_to(),
        message: "corpus is not valid UTF-8".into(),
    })?;
    ReviewCorpus::from_json(&text)
}

pub fn save_corpus(corpus: &ReviewCorpus, path: impl AsRef<Path>) -> Result<()> {
    let mut text = corpus.to_json();
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn violation(out: &mut Vec<Violation>, entity: impl Into<String>, rule: impl Into<String>) {
    out.push(Violation {
        entity: entity.into(),
        rule: rule.into(),
    });
}

/// Checks every corpus invariant. Returns an empty list iff all hold.
pub fn validate_corpus(corpus: &ReviewCorpus) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut system_names = HashSet::new();
    for system in &corpus.systems {
        if !system_names.insert(system.name.as_str()) {
            violation(&mut out, format!("system {}", system.name), "duplicate system name");
        }
        let pr_ids: Vec<&str> = system.pull_requests.iter().map(|p| p.id.as_str()).collect();
        let mut seen_prs = HashSet::new();
        let mut seen_commits = HashSet::new();
        let mut seen_comments = HashSet::new();
        for pr in &system.pull_requests {
            if !seen_prs.insert(pr.id.as_str()) {
                violation(&mut out, format!("pull request {}", pr.id), "duplicate pull request id");
            }
            if pr.submitter.trim().is_empty() {
                violation(&mut out, format!("pull request {}", pr.id), "empty submitter");
            }
            for pair in pr.commits.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                if (a.timestamp, &a.id) >= (b.timestamp, &b.id) {
                    violation(
                        &mut out,
                        format!("commit {}", b.id),
                        format!("commits of pull request {} not ordered by (timestamp, id)", pr.id),
                    );
                }
            }
            for commit in &pr.commits {
                if !seen_commits.insert(commit.id.as_str()) {
                    violation(&mut out, format!("commit {}", commit.id), "duplicate commit id");
                }
                validate_commit(commit, &mut out);
            }
            for comment in &pr.comments {
                if !seen_comments.insert(comment.id.as_str()) {
                    violation(&mut out, format!("comment {}", comment.id), "duplicate comment id");
                }
                let matches = pr_ids.iter().filter(|id| **id == comment.pr_id).count();
                if comment.pr_id != pr.id || matches != 1 {
                    violation(
                        &mut out,
                        format!("comment {}", comment.id),
                        format!(
                            "pr_id {:?} does not resolve to its enclosing pull request",
                            comment.pr_id
                        ),
                    );
                }
                validate_comment(comment, &mut out);
            }
        }
    }
    out
}

fn validate_commit(commit: &Commit, out: &mut Vec<Violation>) {
    let entity = || format!("commit {}", commit.id);
    if commit.id.is_empty() {
        violation(out, entity(), "empty commit id");
    }
    if commit.timestamp <= 0 {
        violation(out, entity(), format!("timestamp {} is not positive", commit.timestamp));
    }
    let mut paths = HashSet::new();
    for diff in &commit.file_diffs {
        if !paths.insert(diff.path.as_str()) {
            violation(out, entity(), format!("path {} appears twice", diff.path));
        }
        if diff.change_kind == ChangeKind::Renamed && diff.old_path.is_none() {
            violation(out, entity(), format!("renamed file {} lacks old_path", diff.path));
        }
        let mut prev: Option<(u32, u32)> = None;
        for (idx, hunk) in diff.hunks.iter().enumerate() {
            let hunk_entity = || format!("commit {} file {} hunk {}", commit.id, diff.path, idx);
            if hunk.changed_lines.contains(&0) {
                violation(out, hunk_entity(), "line number 0");
            }
            for key in hunk.line_texts.keys().chain(hunk.removed_texts.keys()) {
                if !hunk.changed_lines.contains(key) {
                    violation(out, hunk_entity(), format!("text for line {key} not in changed_lines"));
                }
            }
            let Some(range) = hunk_span(hunk) else { continue };
            if let Some(p) = prev {
                if range.0 <= p.1 {
                    violation(
                        out,
                        hunk_entity(),
                        format!("range {}-{} overlaps or precedes previous {}-{}", range.0, range.1, p.0, p.1),
                    );
                }
            }
            prev = Some(range);
        }
    }
}

/// Line span a hunk occupies for ordering purposes: the post-image range
/// when a header is present, otherwise the span of its changed lines.
fn hunk_span(hunk: &DiffHunk) -> Option<(u32, u32)> {
    if let Some(h) = hunk.header {
        let start = h.new_start.max(1);
        return Some((start, start + h.new_lines.max(1) - 1));
    }
    let first = *hunk.changed_lines.first()?;
    let last = *hunk.changed_lines.last()?;
    Some((first, last))
}

fn validate_comment(c: &InlineComment, out: &mut Vec<Violation>) {
    let entity = || format!("comment {}", c.id);
    if c.anchor_line == 0 {
        violation(out, entity(), "anchor_line must be >= 1");
    }
    if c.body.trim().is_empty() {
        violation(out, entity(), "blank body");
    }
    if c.reviewer.is_empty() {
        violation(out, entity(), "empty reviewer");
    }
    if let Some(label) = &c.label {
        if label.value == Usefulness::Useful {
            let vicinity = label.vicinity.unwrap_or(DEFAULT_VICINITY);
            match (&label.trigger_commit, label.trigger_line, label.distance) {
                (Some(_), Some(_), Some(d)) if d <= vicinity => {}
                (Some(_), Some(_), Some(d)) => {
                    violation(out, entity(), format!("label distance {d} exceeds vicinity {vicinity}"))
                }
                _ => violation(out, entity(), "useful label lacks trigger commit, line or distance"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commit(id: &str, ts: i64) -> Commit {
        Commit {
            id: id.into(),
            author: "dev".into(),
            timestamp: ts,
            file_diffs: vec![],
        }
    }

    fn corpus_with(pr: PullRequest) -> ReviewCorpus {
        ReviewCorpus {
            schema_version: 1,
            systems: vec![SystemRecord {
                name: "s".into(),
                pull_requests: vec![pr],
            }],
        }
    }

    fn pr() -> PullRequest {
        PullRequest {
            id: "1".into(),
            commits: vec![commit("a", 10)],
            comments: vec![],
            submitter: "dev".into(),
            scaffolding: false,
        }
    }

    #[test]
    fn empty_corpus_is_valid() {
        let c = ReviewCorpus::from_json(r#"{"schema_version":1,"systems":[]}"#).unwrap();
        assert!(c.systems.is_empty());
        assert!(validate_corpus(&c).is_empty());
    }

    #[test]
    fn zero_timestamp_is_one_violation() {
        let mut p = pr();
        p.commits[0].timestamp = 0;
        let v = validate_corpus(&corpus_with(p));
        assert_eq!(v.len(), 1);
        assert!(v[0].entity.contains("commit a"));
    }

    #[test]
    fn overlapping_hunks_flag_the_hunk_index() {
        let mut p = pr();
        p.commits[0].file_diffs.push(FileDiff {
            path: "x.py".into(),
            change_kind: ChangeKind::Modified,
            old_path: None,
            hunks: vec![
                DiffHunk {
                    changed_lines: [3, 4, 5].into(),
                    ..Default::default()
                },
                DiffHunk {
                    changed_lines: [5, 6].into(),
                    ..Default::default()
                },
            ],
            post_image_imports: None,
        });
        let v = validate_corpus(&corpus_with(p));
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].entity.ends_with("hunk 1"));
    }

    #[test]
    fn parse_error_reports_offset() {
        let text = "{\"schema_version\":1,\n\"systems\": [}";
        match ReviewCorpus::from_json(text) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 20 && offset <= text.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unordered_commits_are_rejected() {
        let mut p = pr();
        p.commits.push(commit("b", 5));
        assert_eq!(validate_corpus(&corpus_with(p)).len(), 1);
    }

    #[test]
    fn useful_label_requires_trigger() {
        let mut p = pr();
        p.comments.push(InlineComment {
            id: "c".into(),
            pr_id: "1".into(),
            anchor_path: "x.py".into(),
            anchor_line: 3,
            anchor_commit: "a".into(),
            reviewer: "r".into(),
            timestamp: 11,
            body: "fix".into(),
            label: Some(UsefulnessLabel {
                value: Usefulness::Useful,
                ..UsefulnessLabel::non_useful()
            }),
        });
        let v = validate_corpus(&corpus_with(p));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "comment c");
    }
}
