//! Change-triggering heuristic: a comment is useful when a later commit of
//! the same pull request changes code within a few lines of its anchor.

use std::collections::BTreeSet;

use crate::corpus::{
    ChangeKind, InlineComment, PullRequest, ReviewCorpus, Usefulness, UsefulnessLabel, DEFAULT_VICINITY,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelPolicy {
    /// Maximum inclusive line distance from the anchor.
    pub vicinity: u32,
    pub require_same_file: bool,
}

impl Default for LabelPolicy {
    fn default() -> Self {
        LabelPolicy {
            vicinity: DEFAULT_VICINITY,
            require_same_file: true,
        }
    }
}

impl LabelPolicy {
    pub fn new(vicinity: u32) -> Result<Self> {
        if vicinity == 0 {
            return Err(Error::contract("vicinity must be >= 1"));
        }
        Ok(LabelPolicy {
            vicinity,
            ..Default::default()
        })
    }
}

/// Labels one comment against the commits of its pull request.
///
/// Commits are scanned in order; only those strictly later than the comment
/// count. The anchor path is followed through renames. The first commit with
/// a changed line inside the vicinity wins; within it the smallest distance
/// and then the smallest line number are chosen.
pub fn label_comment(comment: &InlineComment, pr: &PullRequest, policy: &LabelPolicy) -> Result<UsefulnessLabel> {
    if comment.pr_id != pr.id || pr.find_comment(&comment.id).is_none() {
        return Err(Error::contract(format!(
            "comment {} does not belong to pull request {}",
            comment.id, pr.id
        )));
    }
    let mut tracked: BTreeSet<&str> = BTreeSet::new();
    tracked.insert(comment.anchor_path.as_str());

    for commit in pr.commits.iter().filter(|c| c.timestamp > comment.timestamp) {
        let mut best: Option<(u32, u32)> = None;
        let mut renamed_to = Vec::new();
        for diff in &commit.file_diffs {
            let via_rename = diff.change_kind == ChangeKind::Renamed
                && diff.old_path.as_deref().is_some_and(|p| tracked.contains(p));
            let on_path = tracked.contains(diff.path.as_str()) || via_rename;
            if via_rename {
                renamed_to.push(diff.path.as_str());
            }
            if policy.require_same_file && !on_path {
                continue;
            }
            for line in diff.hunks.iter().flat_map(|h| h.changed_lines.iter().copied()) {
                let distance = line.abs_diff(comment.anchor_line);
                if distance <= policy.vicinity && best.is_none_or(|b| (distance, line) < b) {
                    best = Some((distance, line));
                }
            }
        }
        tracked.extend(renamed_to);
        if let Some((distance, line)) = best {
            return Ok(UsefulnessLabel {
                value: Usefulness::Useful,
                trigger_commit: Some(commit.id.clone()),
                trigger_line: Some(line),
                distance: Some(distance),
                vicinity: (policy.vicinity != DEFAULT_VICINITY).then_some(policy.vicinity),
            });
        }
    }
    Ok(UsefulnessLabel::non_useful())
}

/// Labels every comment of every non-scaffolding pull request in place.
/// Scaffolding pull requests have their labels cleared.
pub fn label_corpus(corpus: &mut ReviewCorpus, policy: &LabelPolicy) -> Result<()> {
    for system in &mut corpus.systems {
        for pr in &mut system.pull_requests {
            if pr.scaffolding {
                pr.comments.iter_mut().for_each(|c| c.label = None);
                continue;
            }
            let labels = pr
                .comments
                .iter()
                .map(|c| label_comment(c, pr, policy))
                .collect::<Result<Vec<_>>>()?;
            for (comment, label) in pr.comments.iter_mut().zip(labels) {
                comment.label = Some(label);
            }
        }
    }
    Ok(())
}
