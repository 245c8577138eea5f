//! Single-comment prediction with per-feature rationale and hints, shared
//! by the CLI `predict` command and the HTTP service.

use serde::{Deserialize, Serialize};

use crate::corpus::Usefulness;
use crate::error::{Error, Result};
use crate::features::{baseline_features, textual_features, BASELINE_COLUMNS, FEATURE_NAMES};
use crate::learn::{predict, TrainedModel};
use crate::text::Lexicons;

/// Reviewer experience supplied by the caller, who can see the forge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewerStats {
    pub ca_file: Option<f64>,
    pub ca_sys: Option<f64>,
    pub cr_file: Option<f64>,
    pub cr_commits: Option<f64>,
    pub cr_prs: Option<f64>,
    pub ele: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub comment_body: String,
    /// Source lines of the change the comment is about.
    #[serde(default)]
    pub changed_lines: Vec<String>,
    #[serde(default)]
    pub reviewer_stats: Option<ReviewerStats>,
    #[serde(default)]
    pub model_id: Option<String>,
}

impl PredictRequest {
    pub fn new(body: impl Into<String>) -> Self {
        PredictRequest {
            comment_body: body.into(),
            changed_lines: Vec::new(),
            reviewer_stats: None,
            model_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRationale {
    pub name: String,
    pub value: f64,
    /// True when the value was filled from the training median.
    pub defaulted: bool,
    pub median_useful: Option<f64>,
    pub median_non_useful: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRank {
    pub feature: String,
    pub rank: usize,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub label: Usefulness,
    pub score: f64,
    pub features: Vec<FeatureRationale>,
    pub importance: Vec<ImportanceRank>,
    pub hints: Vec<String>,
}

pub const HINT_CODE_ELEMENT: &str =
    "Reference a changed code element (identifier, call or literal) so the author knows exactly what to change.";
pub const HINT_RELATE: &str = "Relate the comment to the changed lines; it shares little vocabulary with them.";

fn hint_wording(swr: f64, q3: f64) -> String {
    format!("Tighten the wording: the stop-word ratio {swr:.2} is above the upper quartile of useful comments ({q3:.2}).")
}

/// All computable columns for the request, by name; `None` where the
/// request carries no value.
fn raw_values(req: &PredictRequest, lex: &Lexicons) -> Vec<(&'static str, Option<f64>)> {
    let textual = textual_features(&req.comment_body, req.changed_lines.iter().map(String::as_str), lex);
    let s = req.reviewer_stats.clone().unwrap_or_default();
    let presence = s.ca_file.map(|v| if v >= 1.0 { 1.0 } else { 0.0 });
    let experience = [s.ca_file, s.ca_sys, presence, s.cr_file, s.cr_commits, s.cr_prs, s.ele];
    let baseline = baseline_features(&req.comment_body, lex);
    FEATURE_NAMES
        .iter()
        .copied()
        .zip(textual.into_iter().chain(experience))
        .chain(BASELINE_COLUMNS.iter().copied().zip(baseline.map(Some)))
        .collect()
}

fn check_request(req: &PredictRequest) -> Result<()> {
    if req.comment_body.trim().is_empty() {
        return Err(Error::contract("comment_body must not be blank"));
    }
    if let Some(s) = &req.reviewer_stats {
        for (name, v) in [
            ("ca_file", s.ca_file),
            ("ca_sys", s.ca_sys),
            ("cr_file", s.cr_file),
            ("cr_commits", s.cr_commits),
            ("cr_prs", s.cr_prs),
            ("ele", s.ele),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::contract(format!("reviewer_stats.{name} must be a non-negative number")));
                }
            }
        }
        if s.ele.is_some_and(|e| e > 1.0) {
            return Err(Error::contract("reviewer_stats.ele must be in [0, 1]"));
        }
    }
    Ok(())
}

/// Predicts one drafted comment. Pure in `req` for a given model.
pub fn handle_predict(req: &PredictRequest, model: &TrainedModel, lex: &Lexicons) -> Result<PredictResponse> {
    check_request(req)?;
    let raw = raw_values(req, lex);
    let summary = model.summary.as_ref();
    let mut features = Vec::with_capacity(model.feature_names.len());
    for (j, name) in model.feature_names.iter().enumerate() {
        let value = raw
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::contract(format!("model feature {name} cannot be computed for a single comment")))?
            .1;
        let fallback = summary.and_then(|s| s.median_all.get(j).copied()).unwrap_or(0.0);
        features.push(FeatureRationale {
            name: name.clone(),
            value: value.unwrap_or(fallback),
            defaulted: value.is_none(),
            median_useful: summary.and_then(|s| s.median_useful.get(j).copied()),
            median_non_useful: summary.and_then(|s| s.median_non_useful.get(j).copied()),
        });
    }
    let row: Vec<f64> = features.iter().map(|f| f.value).collect();
    let prediction = predict(model, &row)?;

    let importance = summary
        .map(|s| {
            s.importance
                .iter()
                .enumerate()
                .map(|(i, (f, v))| ImportanceRank {
                    feature: f.clone(),
                    rank: i + 1,
                    importance: *v,
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(PredictResponse {
        label: prediction.label,
        score: prediction.score,
        hints: hints(req, &raw, model),
        features,
        importance,
    })
}

/// Fixed threshold rules following the directions found in the study:
/// useful comments more often mention code elements, share more vocabulary
/// with the change and use fewer stop words.
fn hints(req: &PredictRequest, raw: &[(&str, Option<f64>)], model: &TrainedModel) -> Vec<String> {
    let get = |name: &str| raw.iter().find(|(n, _)| *n == name).and_then(|(_, v)| *v);
    let summary_at = |name: &str, pick: fn(&crate::learn::TrainingSummary) -> &Vec<f64>| {
        let j = model.feature_names.iter().position(|n| n == name)?;
        model.summary.as_ref().and_then(|s| pick(s).get(j).copied())
    };
    let mut out = Vec::new();
    let has_context = req.changed_lines.iter().any(|l| !l.trim().is_empty());
    if has_context && get("CEP") == Some(0.0) {
        out.push(HINT_CODE_ELEMENT.to_string());
    }
    if has_context {
        let cs = get("CS").unwrap_or(0.0);
        let bar = summary_at("CS", |s| &s.median_useful).filter(|m| *m > 0.0).unwrap_or(f64::MIN_POSITIVE);
        if cs < bar {
            out.push(HINT_RELATE.to_string());
        }
    }
    if let (Some(swr), Some(q3)) = (get("SWR"), summary_at("SWR", |s| &s.q3_useful)) {
        if swr > q3 {
            out.push(hint_wording(swr, q3));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Dataset, Row};
    use crate::learn::{train_classifier, Hyper, ModelKind};

    fn model() -> TrainedModel {
        let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let rows = (0..20)
            .map(|i| Row {
                id: format!("r{i}"),
                system: "s".into(),
                values: (0..15).map(|j| Some(((i * 7 + j * 3) % 11) as f64 / 10.0)).collect(),
                label: Usefulness::from_bool(i % 2 == 0),
            })
            .collect();
        let ds = Dataset::new(names, rows);
        let mut m = train_classifier(&ds, ModelKind::GaussianNb, &Hyper::default(), 1).unwrap();
        m.attach_summary(&ds, None).unwrap();
        m
    }

    #[test]
    fn empty_context() {
        let lex = Lexicons::default();
        let r = handle_predict(&PredictRequest::new("looks good"), &model(), &lex).unwrap();
        let get = |n: &str| r.features.iter().find(|f| f.name == n).unwrap().value;
        assert_eq!(get("CS"), 0.0);
        assert_eq!(get("CEP"), 0.0);
        assert_eq!(r.features.len(), 15);
        assert!((0.0..=1.0).contains(&r.score));
        assert!(r.features.iter().find(|f| f.name == "CA_file").unwrap().defaulted);
    }

    #[test]
    fn blank_body_rejected() {
        let lex = Lexicons::default();
        assert!(matches!(
            handle_predict(&PredictRequest::new("  \n"), &model(), &lex),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn code_element_hint() {
        let lex = Lexicons::default();
        let mut req = PredictRequest::new("please reconsider this");
        req.changed_lines = vec!["market_id = get_market()".into()];
        let r = handle_predict(&req, &model(), &lex).unwrap();
        assert!(r.hints.iter().any(|h| h == HINT_CODE_ELEMENT));
        assert!(r.hints.iter().any(|h| h == HINT_RELATE));
    }
}
