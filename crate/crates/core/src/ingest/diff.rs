//! Unified-diff parsing into [`FileDiff`] records.

use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::{ChangeKind, DiffHunk, FileDiff, HunkHeader};
use crate::error::{Error, Result};

static HUNK_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@").unwrap());

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::DiffParse {
        line,
        message: message.into(),
    }
}

pub fn parse_hunk_header(line: &str, line_no: usize) -> Result<HunkHeader> {
    let caps = HUNK_HEADER
        .captures(line)
        .ok_or_else(|| err(line_no, format!("malformed hunk header {line:?}")))?;
    let num = |i: usize, default: u32| -> Result<u32> {
        match caps.get(i) {
            Some(m) => m
                .as_str()
                .parse()
                .map_err(|_| err(line_no, format!("line number out of range in {line:?}"))),
            None => Ok(default),
        }
    };
    Ok(HunkHeader {
        old_start: num(1, 0)?,
        old_lines: num(2, 1)?,
        new_start: num(3, 0)?,
        new_lines: num(4, 1)?,
    })
}

/// Parses the hunks of a single file (the body after the `+++` line, or a
/// forge `patch` field). `first_line` is the 1-based number of the first
/// line of `text` within the enclosing document, used in error messages.
pub fn parse_hunks(text: &str, first_line: usize) -> Result<Vec<DiffHunk>> {
    let lines: Vec<&str> = text.lines().collect();
    let (hunks, consumed) = parse_hunk_run(&lines, 0, first_line)?;
    if let Some(rest) = lines[consumed..].iter().position(|l| !l.trim().is_empty()) {
        return Err(err(first_line + consumed + rest, "unexpected content outside a hunk"));
    }
    Ok(hunks)
}

/// Parses consecutive hunks starting at `lines[start]`; returns the hunks and
/// the index just past the last one.
fn parse_hunk_run(lines: &[&str], start: usize, base: usize) -> Result<(Vec<DiffHunk>, usize)> {
    let mut hunks = Vec::new();
    let mut i = start;
    while i < lines.len() && lines[i].starts_with("@@") {
        let header = parse_hunk_header(lines[i], base + i)?;
        let mut hunk = DiffHunk {
            header: Some(header),
            ..Default::default()
        };
        let (mut old_no, mut new_no) = (header.old_start, header.new_start);
        let (mut old_left, mut new_left) = (header.old_lines, header.new_lines);
        i += 1;
        while old_left > 0 || new_left > 0 {
            let Some(line) = lines.get(i) else {
                return Err(err(base + i, "hunk ends before the counts in its header"));
            };
            match line.as_bytes().first() {
                Some(b'+') if new_left > 0 => {
                    hunk.changed_lines.insert(new_no);
                    hunk.line_texts.insert(new_no, line[1..].to_string());
                    new_no += 1;
                    new_left -= 1;
                }
                Some(b'-') if old_left > 0 => {
                    hunk.changed_lines.insert(old_no);
                    hunk.removed_texts.insert(old_no, line[1..].to_string());
                    old_no += 1;
                    old_left -= 1;
                }
                // context; some tools strip the leading space of blank lines
                Some(b' ') | None if old_left > 0 && new_left > 0 => {
                    old_no += 1;
                    new_no += 1;
                    old_left -= 1;
                    new_left -= 1;
                }
                Some(b'\\') => {}
                _ => return Err(err(base + i, format!("line {line:?} does not fit the hunk header counts"))),
            }
            i += 1;
        }
        while lines.get(i).is_some_and(|l| l.starts_with('\\')) {
            i += 1;
        }
        hunks.push(hunk);
    }
    Ok((hunks, i))
}

fn strip_prefix(path: &str) -> Option<String> {
    let path = path.split('\t').next().unwrap_or(path).trim_end();
    if path == "/dev/null" {
        return None;
    }
    let p = path
        .strip_prefix("a/")
        .or_else(|| path.strip_prefix("b/"))
        .unwrap_or(path);
    Some(p.to_string())
}

#[derive(Default)]
struct Pending {
    old: Option<String>,
    new: Option<String>,
    rename_from: Option<String>,
    rename_to: Option<String>,
    new_file: bool,
    deleted_file: bool,
    hunks: Vec<DiffHunk>,
    seen_paths: bool,
}

impl Pending {
    fn finish(self, line: usize) -> Result<Option<FileDiff>> {
        if !self.seen_paths && self.rename_to.is_none() && !self.new_file && !self.deleted_file {
            return Ok(None);
        }
        let old = self.rename_from.or(self.old);
        let new = self.rename_to.or(self.new);
        let (path, change_kind, old_path) = match (old, new) {
            (None, Some(n)) => (n, ChangeKind::Added, None),
            (Some(o), None) => (o, ChangeKind::Deleted, None),
            (Some(o), Some(n)) if o != n => (n, ChangeKind::Renamed, Some(o)),
            (Some(_), Some(n)) if self.new_file => (n, ChangeKind::Added, None),
            (Some(o), Some(_)) if self.deleted_file => (o, ChangeKind::Deleted, None),
            (Some(_), Some(n)) => (n, ChangeKind::Modified, None),
            (None, None) => return Err(err(line, "file section without paths")),
        };
        Ok(Some(FileDiff {
            path,
            change_kind,
            old_path,
            hunks: self.hunks,
            post_image_imports: None,
        }))
    }
}

/// Parses a (possibly multi-file) unified diff, with or without git
/// extended headers.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FileDiff>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    let mut cur: Option<Pending> = None;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let line_no = i + 1;
        if let Some(rest) = line.strip_prefix("diff --git ") {
            if let Some(p) = cur.take() {
                out.extend(p.finish(line_no)?);
            }
            let mut p = Pending::default();
            // "a/x b/y"; only trusted when no ---/+++ lines follow (e.g. pure renames)
            if let Some((a, b)) = rest.split_once(" b/") {
                p.old = strip_prefix(a);
                p.new = Some(b.to_string());
                p.seen_paths = true;
            }
            cur = Some(p);
        } else if line.starts_with("--- ") && lines.get(i + 1).is_some_and(|n| n.starts_with("+++ ")) {
            let mut p = match cur.take() {
                Some(p) if p.hunks.is_empty() => p,
                Some(p) => {
                    out.extend(p.finish(line_no)?);
                    Pending::default()
                }
                None => Pending::default(),
            };
            p.old = strip_prefix(&line[4..]);
            p.new = strip_prefix(&lines[i + 1][4..]);
            p.seen_paths = true;
            i += 2;
            let (hunks, next) = parse_hunk_run(&lines, i, 1)?;
            p.hunks = hunks;
            i = next;
            cur = Some(p);
            continue;
        } else if line.starts_with("@@") {
            match cur.as_mut() {
                Some(p) if p.seen_paths => {
                    let (hunks, next) = parse_hunk_run(&lines, i, 1)?;
                    p.hunks.extend(hunks);
                    i = next;
                    continue;
                }
                _ => return Err(err(line_no, "hunk without a file header")),
            }
        } else if let Some(p) = cur.as_mut() {
            if let Some(from) = line.strip_prefix("rename from ") {
                p.rename_from = Some(from.to_string());
            } else if let Some(to) = line.strip_prefix("rename to ") {
                p.rename_to = Some(to.to_string());
            } else if line.starts_with("new file mode") {
                p.new_file = true;
            } else if line.starts_with("deleted file mode") {
                p.deleted_file = true;
            }
        }
        i += 1;
    }
    if let Some(p) = cur {
        out.extend(p.finish(lines.len())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_added_line() {
        let d = "--- a/f.py\n+++ b/f.py\n@@ -1,2 +1,3 @@\n a = 1\n+b = 2\n c = 3\n";
        let files = parse_unified_diff(d).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].path, "f.py");
        assert_eq!(files[0].change_kind, ChangeKind::Modified);
        let h = &files[0].hunks[0];
        assert_eq!(h.changed_lines.iter().copied().collect::<Vec<_>>(), vec![2]);
        assert_eq!(h.line_texts[&2], "b = 2");
    }

    #[test]
    fn empty_input() {
        assert!(parse_unified_diff("").unwrap().is_empty());
    }

    #[test]
    fn garbage_header() {
        let d = "--- a/f\n+++ b/f\n@@ garbage @@\n";
        match parse_unified_diff(d) {
            Err(Error::DiffParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deletions_use_pre_image_numbers() {
        let truncated = "--- a/f\n+++ b/f\n@@ -10,3 +10,2 @@\n x\n-y\n";
        assert!(matches!(parse_unified_diff(truncated), Err(Error::DiffParse { line: 6, .. })));
        let d = "--- a/f\n+++ b/f\n@@ -10,3 +10,2 @@\n x\n-y\n-w\n+z\n";
        let h = &parse_unified_diff(d).unwrap()[0].hunks[0];
        assert_eq!(h.removed_texts.keys().copied().collect::<Vec<_>>(), vec![11, 12]);
        assert_eq!(h.line_texts.keys().copied().collect::<Vec<_>>(), vec![11]);
        assert_eq!(h.changed_lines.iter().copied().collect::<Vec<_>>(), vec![11, 12]);
    }

    #[test]
    fn git_headers() {
        let d = "diff --git a/old.py b/new.py\nsimilarity index 90%\nrename from old.py\nrename to new.py\n\
                 --- a/old.py\n+++ b/new.py\n@@ -1 +1 @@\n-x\n+y\n\
                 diff --git a/n.py b/n.py\nnew file mode 100644\n--- /dev/null\n+++ b/n.py\n@@ -0,0 +1,2 @@\n+a\n+b\n\
                 diff --git a/gone.py b/gone.py\ndeleted file mode 100644\n--- a/gone.py\n+++ /dev/null\n@@ -1 +0,0 @@\n-z\n\
                 diff --git a/m.py b/m.py\nsimilarity index 100%\nrename from m.py\nrename to pkg/m.py\n";
        let files = parse_unified_diff(d).unwrap();
        let kinds: Vec<_> = files.iter().map(|f| (f.path.as_str(), f.change_kind)).collect();
        assert_eq!(
            kinds,
            vec![
                ("new.py", ChangeKind::Renamed),
                ("n.py", ChangeKind::Added),
                ("gone.py", ChangeKind::Deleted),
                ("pkg/m.py", ChangeKind::Renamed),
            ]
        );
        assert_eq!(files[0].old_path.as_deref(), Some("old.py"));
        assert_eq!(files[3].old_path.as_deref(), Some("m.py"));
        assert!(files[3].hunks.is_empty());
    }

    #[test]
    fn patch_field() {
        let h = parse_hunks("@@ -3,2 +3,3 @@ def f():\n     a\n+    b\n     c\n\\ No newline at end of file", 1).unwrap();
        assert_eq!(h[0].line_texts[&4], "    b");
    }
}
