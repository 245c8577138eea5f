//! Read-only client for a GitHub-style forge REST API.
//!
//! All HTTP goes through a [`Transport`], so exchanges can be recorded to a
//! tape file and replayed without network access.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::diff::parse_hunks;
use crate::corpus::{
    validate_corpus, ChangeKind, Commit, FileDiff, InlineComment, PullRequest, ReviewCorpus, SystemRecord,
    SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::experience::extract_imports;

pub const TOKEN_ENV: &str = "REVHELPER_TOKEN";
const MAX_PAGES: u32 = 1000;

/// A credential that never appears in `Debug` output.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Secret(s.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

/// URL templates relative to `base_url`. Placeholders: `{repo}`,
/// `{number}`, `{sha}`, `{per_page}`, `{page}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoints {
    pub pulls: String,
    pub pr_commits: String,
    pub commit: String,
    pub review_comments: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Endpoints {
            pulls: "/repos/{repo}/pulls?state=all&sort=created&direction=desc&per_page={per_page}&page={page}".into(),
            pr_commits: "/repos/{repo}/pulls/{number}/commits?per_page={per_page}&page={page}".into(),
            commit: "/repos/{repo}/commits/{sha}".into(),
            review_comments: "/repos/{repo}/pulls/{number}/comments?per_page={per_page}&page={page}".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForgeConfig {
    pub base_url: String,
    /// `owner/name`.
    pub repo: String,
    pub auth_token: Option<Secret>,
    pub page_size: u32,
    pub max_prs: usize,
    pub endpoints: Endpoints,
}

impl ForgeConfig {
    pub fn new(base_url: impl Into<String>, repo: impl Into<String>) -> Self {
        ForgeConfig {
            base_url: base_url.into(),
            repo: repo.into(),
            auth_token: None,
            page_size: 100,
            max_prs: 100,
            endpoints: Endpoints::default(),
        }
    }

    /// Reads the token from `REVHELPER_TOKEN` when set.
    pub fn with_env_token(mut self) -> Self {
        self.auth_token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()).map(Secret::new);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=100).contains(&self.page_size) {
            return Err(Error::contract(format!("page_size {} outside [1, 100]", self.page_size)));
        }
        if self.max_prs < 1 {
            return Err(Error::contract("max_prs must be at least 1"));
        }
        let parts: Vec<&str> = self.repo.split('/').collect();
        if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::contract(format!("repo {:?} is not owner/name", self.repo)));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(Error::contract(format!("base_url {:?} is not an http(s) URL", self.base_url)));
        }
        Ok(())
    }

    fn url(&self, template: &str, number: Option<u64>, sha: Option<&str>, page: u32) -> String {
        let path = template
            .replace("{repo}", &self.repo)
            .replace("{number}", &number.map(|n| n.to_string()).unwrap_or_default())
            .replace("{sha}", sha.unwrap_or(""))
            .replace("{per_page}", &self.page_size.to_string())
            .replace("{page}", &page.to_string());
        format!("{}{}", self.base_url.trim_end_matches('/'), path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Lower-cased header names.
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str, token: Option<&Secret>) -> Result<HttpResponse>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapeRequest {
    #[serde(default = "get_method")]
    pub method: String,
    pub url: String,
}

fn get_method() -> String {
    "GET".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapeResponse {
    pub status: u16,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    /// JSON document, or a string holding a raw body.
    #[serde(default)]
    pub body: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapeRecord {
    pub request: TapeRequest,
    pub response: TapeResponse,
}

/// Replays recorded exchanges. A tape URL matches a request when it equals
/// the request URL or is its suffix (tapes usually store paths only).
#[derive(Debug, Clone)]
pub struct TapeTransport {
    records: Vec<TapeRecord>,
}

impl TapeTransport {
    pub fn new(records: Vec<TapeRecord>) -> Self {
        TapeTransport { records }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: crate::corpus::byte_offset(text, e.line(), e.column()),
            message: format!("tape: {e}"),
        })?;
        Ok(TapeTransport { records })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Transport for TapeTransport {
    fn get(&self, url: &str, _token: Option<&Secret>) -> Result<HttpResponse> {
        let rec = self
            .records
            .iter()
            .find(|r| r.request.method.eq_ignore_ascii_case("GET") && (r.request.url == url || url.ends_with(&r.request.url)))
            .ok_or_else(|| Error::Transport(format!("no tape entry for GET {url}")))?;
        let body = match &rec.response.body {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            v => v.to_string(),
        };
        Ok(HttpResponse {
            status: rec.response.status,
            headers: rec.response.headers.iter().map(|(k, v)| (k.to_ascii_lowercase(), v.clone())).collect(),
            body,
        })
    }
}

/// Forwards to `inner` and keeps every exchange for [`Self::to_tape`].
/// Request headers (and so the token) are never recorded.
pub struct RecordingTransport<T> {
    inner: T,
    base_url: String,
    records: Mutex<Vec<TapeRecord>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, base_url: impl Into<String>) -> Self {
        RecordingTransport {
            inner,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            records: Mutex::new(Vec::new()),
        }
    }

    pub fn to_tape(&self) -> String {
        let records = self.records.lock().expect("tape lock poisoned");
        serde_json::to_string_pretty(&*records).expect("tape serialization is infallible")
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str, token: Option<&Secret>) -> Result<HttpResponse> {
        let resp = self.inner.get(url, token)?;
        let body = serde_json::from_str(&resp.body).unwrap_or_else(|_| Value::String(resp.body.clone()));
        let keep = ["retry-after", "x-ratelimit-remaining", "x-ratelimit-reset", "link"];
        self.records.lock().expect("tape lock poisoned").push(TapeRecord {
            request: TapeRequest {
                method: "GET".into(),
                url: url.strip_prefix(&self.base_url).unwrap_or(url).to_string(),
            },
            response: TapeResponse {
                status: resp.status,
                headers: resp
                    .headers
                    .iter()
                    .filter(|(k, _)| keep.contains(&k.as_str()))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect(),
                body,
            },
        });
        Ok(resp)
    }
}

/// Blocking HTTP transport.
pub struct LiveTransport {
    client: reqwest::blocking::Client,
}

impl LiveTransport {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("revhelper/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(LiveTransport { client })
    }
}

impl Transport for LiveTransport {
    fn get(&self, url: &str, token: Option<&Secret>) -> Result<HttpResponse> {
        let mut req = self.client.get(url).header("Accept", "application/vnd.github+json");
        if let Some(t) = token {
            req = req.bearer_auth(t.expose());
        }
        let resp = req.send().map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let body = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpResponse { status, headers, body })
    }
}

fn check_status(url: &str, resp: &HttpResponse) -> Result<()> {
    if (200..300).contains(&resp.status) {
        return Ok(());
    }
    let exhausted = resp.headers.get("x-ratelimit-remaining").is_some_and(|v| v.trim() == "0");
    if resp.status == 429 || (resp.status == 403 && exhausted) {
        let retry_after_secs = resp
            .headers
            .get("retry-after")
            .and_then(|v| v.trim().parse().ok())
            .or_else(|| {
                let reset: i64 = resp.headers.get("x-ratelimit-reset")?.trim().parse().ok()?;
                let now = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs() as i64);
                Some((reset - now).max(0) as u64)
            })
            .unwrap_or(60);
        return Err(Error::RateLimited { retry_after_secs });
    }
    match resp.status {
        401 | 403 => Err(Error::Auth { status: resp.status }),
        404 => Err(Error::NotFound(url.to_string())),
        s => Err(Error::Transport(format!("HTTP {s} from {url}"))),
    }
}

fn get_json(transport: &dyn Transport, cfg: &ForgeConfig, url: &str) -> Result<Value> {
    let resp = transport.get(url, cfg.auth_token.as_ref())?;
    check_status(url, &resp)?;
    serde_json::from_str(&resp.body).map_err(|e| Error::Transport(format!("malformed JSON from {url}: {e}")))
}

fn get_pages(transport: &dyn Transport, cfg: &ForgeConfig, template: &str, number: Option<u64>, limit: usize) -> Result<Vec<Value>> {
    let mut out = Vec::new();
    for page in 1..=MAX_PAGES {
        let url = cfg.url(template, number, None, page);
        let items = match get_json(transport, cfg, &url)? {
            Value::Array(items) => items,
            _ => return Err(Error::Transport(format!("expected a JSON array from {url}"))),
        };
        let n = items.len();
        out.extend(items);
        if n < cfg.page_size as usize || out.len() >= limit {
            break;
        }
    }
    out.truncate(limit);
    Ok(out)
}

fn str_at<'a>(v: &'a Value, path: &[&str]) -> Option<&'a str> {
    path.iter().try_fold(v, |acc, k| acc.get(k))?.as_str()
}

fn timestamp(v: &Value, path: &[&str], what: &str) -> Result<i64> {
    let s = str_at(v, path).ok_or_else(|| Error::Transport(format!("{what} lacks {}", path.join("."))))?;
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|t| t.timestamp())
        .map_err(|e| Error::Transport(format!("{what}: bad timestamp {s:?}: {e}")))
}

fn login(v: &Value) -> Option<String> {
    str_at(v, &["user", "login"]).map(String::from)
}

fn change_kind(status: &str) -> ChangeKind {
    match status {
        "added" => ChangeKind::Added,
        "removed" => ChangeKind::Deleted,
        "renamed" => ChangeKind::Renamed,
        _ => ChangeKind::Modified,
    }
}

fn fetch_commit(transport: &dyn Transport, cfg: &ForgeConfig, sha: &str) -> Result<Commit> {
    let url = cfg.url(&cfg.endpoints.commit, None, Some(sha), 1);
    let v = get_json(transport, cfg, &url)?;
    let what = format!("commit {sha}");
    let timestamp = timestamp(&v, &["commit", "committer", "date"], &what)
        .or_else(|_| timestamp(&v, &["commit", "author", "date"], &what))?;
    let author = str_at(&v, &["author", "login"])
        .or_else(|| str_at(&v, &["commit", "author", "name"]))
        .unwrap_or("unknown")
        .to_string();
    let mut file_diffs = Vec::new();
    for f in v.get("files").and_then(Value::as_array).into_iter().flatten() {
        let Some(path) = str_at(f, &["filename"]) else { continue };
        let kind = change_kind(str_at(f, &["status"]).unwrap_or("modified"));
        let patch = str_at(f, &["patch"]).unwrap_or("");
        let hunks = parse_hunks(patch, 1)?;
        // Only the patch is available, so imports are those visible in it.
        let visible: String = patch
            .lines()
            .filter(|l| !l.starts_with('-') && !l.starts_with("@@"))
            .map(|l| l.get(1..).unwrap_or(""))
            .collect::<Vec<_>>()
            .join("\n");
        let post_image_imports = extract_imports(path, &visible).filter(|i| !i.is_empty());
        file_diffs.push(FileDiff {
            path: path.to_string(),
            change_kind: kind,
            old_path: if kind == ChangeKind::Renamed {
                str_at(f, &["previous_filename"]).map(String::from)
            } else {
                None
            },
            hunks,
            post_image_imports,
        });
    }
    Ok(Commit {
        id: sha.to_string(),
        author,
        timestamp,
        file_diffs,
    })
}

fn fetch_pr(transport: &dyn Transport, cfg: &ForgeConfig, pr: &Value) -> Result<PullRequest> {
    let number = pr
        .get("number")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Transport("pull request without number".into()))?;
    let pr_id = number.to_string();
    let commit_list = get_pages(transport, cfg, &cfg.endpoints.pr_commits, Some(number), usize::MAX)?;
    let mut commits = Vec::new();
    for c in &commit_list {
        let sha = str_at(c, &["sha"]).ok_or_else(|| Error::Transport(format!("PR {number}: commit without sha")))?;
        commits.push(fetch_commit(transport, cfg, sha)?);
    }
    commits.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));

    let raw_comments = get_pages(transport, cfg, &cfg.endpoints.review_comments, Some(number), usize::MAX)?;
    let mut comments = Vec::new();
    for c in &raw_comments {
        // review bodies and file-level remarks carry no line anchor
        let line = c
            .get("line")
            .and_then(Value::as_u64)
            .or_else(|| c.get("original_line").and_then(Value::as_u64));
        let (Some(path), Some(line)) = (str_at(c, &["path"]), line) else { continue };
        let body = str_at(c, &["body"]).unwrap_or("");
        let reviewer = login(c).unwrap_or_default();
        if line == 0 || body.trim().is_empty() || reviewer.is_empty() {
            log::warn!("PR {number}: skipping unusable review comment {}", c.get("id").unwrap_or(&Value::Null));
            continue;
        }
        let id = c.get("id").map(|v| v.to_string().trim_matches('"').to_string()).unwrap_or_default();
        comments.push(InlineComment {
            id,
            pr_id: pr_id.clone(),
            anchor_path: path.to_string(),
            anchor_line: u32::try_from(line).map_err(|_| Error::Transport(format!("line {line} out of range")))?,
            anchor_commit: str_at(c, &["commit_id"])
                .or_else(|| str_at(c, &["original_commit_id"]))
                .unwrap_or("")
                .to_string(),
            reviewer,
            timestamp: timestamp(c, &["created_at"], "review comment")?,
            body: body.to_string(),
            label: None,
        });
    }
    comments.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    Ok(PullRequest {
        id: pr_id,
        commits,
        comments,
        submitter: login(pr).unwrap_or_else(|| "unknown".into()),
        scaffolding: false,
    })
}

/// Fetches the `max_prs` most recent pull requests with their commits,
/// diffs and inline review comments, newest first.
pub fn fetch_remote_reviews(cfg: &ForgeConfig, transport: &dyn Transport) -> Result<ReviewCorpus> {
    cfg.validate()?;
    let mut listed = get_pages(transport, cfg, &cfg.endpoints.pulls, None, cfg.max_prs)?;
    // newest first regardless of server ordering
    let created = |v: &Value| str_at(v, &["created_at"]).unwrap_or("").to_string();
    let number = |v: &Value| v.get("number").and_then(Value::as_u64).unwrap_or(0);
    listed.sort_by(|a, b| (created(b), number(b)).cmp(&(created(a), number(a))));
    let pull_requests = listed
        .iter()
        .map(|pr| fetch_pr(transport, cfg, pr))
        .collect::<Result<Vec<_>>>()?;
    let corpus = ReviewCorpus {
        schema_version: SCHEMA_VERSION,
        systems: vec![SystemRecord {
            name: cfg.repo.clone(),
            pull_requests,
        }],
    };
    if let Some(v) = validate_corpus(&corpus).into_iter().next() {
        return Err(Error::Validation {
            entity: v.entity,
            rule: v.rule,
        });
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = ForgeConfig::new("https://api.example.test", "o/r");
        assert!(c.validate().is_ok());
        c.max_prs = 0;
        assert!(c.validate().is_err());
        c.max_prs = 1;
        c.page_size = 101;
        assert!(c.validate().is_err());
        c.page_size = 10;
        c.repo = "nope".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn secret_is_redacted() {
        let s = Secret::new("ghp_abc");
        assert_eq!(format!("{s:?}"), "Secret(***)");
    }

    #[test]
    fn status_mapping() {
        let mk = |status, headers: &[(&str, &str)]| HttpResponse {
            status,
            headers: headers.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            body: String::new(),
        };
        assert!(matches!(check_status("u", &mk(401, &[])), Err(Error::Auth { status: 401 })));
        assert!(matches!(check_status("u", &mk(403, &[])), Err(Error::Auth { status: 403 })));
        assert!(matches!(
            check_status("u", &mk(429, &[("retry-after", "17")])),
            Err(Error::RateLimited { retry_after_secs: 17 })
        ));
        assert!(matches!(
            check_status("u", &mk(403, &[("x-ratelimit-remaining", "0"), ("retry-after", "5")])),
            Err(Error::RateLimited { retry_after_secs: 5 })
        ));
        assert!(check_status("u", &mk(200, &[])).is_ok());
    }
}
