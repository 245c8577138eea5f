//! Textual features on the hand-traced comment fixtures.

use revhelper::features::textual_features;
use revhelper::text::*;
use serde_json::Value;

fn fixtures() -> Vec<Value> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/text_features.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn count(v: &Value, key: &str) -> f64 {
    v["counts"][key].as_f64().unwrap()
}

/// Feature values recomputed from the documented counts alone.
fn from_counts(fx: &Value) -> [Option<f64>; 7] {
    let flesch = |w: f64, s: f64, y: f64| (w > 0.0).then(|| 206.835 - 1.015 * (w / s) - 84.6 * (y / w));
    let words = count(fx, "words");
    let sentences = count(fx, "sentences");
    let n_elements = fx["counts"]["code_elements"].as_array().unwrap().len();
    let source = count(fx, "source_tokens");
    let prose = count(fx, "prose_words");
    let (dot, na, nb) = (count(fx, "cs_dot"), count(fx, "cs_norm2_comment"), count(fx, "cs_norm2_line"));
    [
        flesch(words, sentences, count(fx, "syllables")),
        flesch(prose, count(fx, "prose_sentences"), count(fx, "prose_syllables")),
        Some(if words > 0.0 { count(fx, "stop_hits") / words } else { 0.0 }),
        Some(if sentences > 0.0 { count(fx, "questions") / sentences } else { 0.0 }),
        Some(if n_elements > 0 { 1.0 } else { 0.0 }),
        Some(if source + prose > 0.0 { source / (source + prose) } else { 0.0 }),
        Some(if na > 0.0 && nb > 0.0 { dot / (na.sqrt() * nb.sqrt()) } else { 0.0 }),
    ]
}

const NAMES: [&str; 7] = ["RE_full", "RE_prose", "SWR", "QR", "CEP", "STR", "CS"];

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= 1e-9,
        _ => false,
    }
}

pub fn check_thirty_fixtures_match_hand_values() {
    let lex = Lexicons::default();
    let fx = fixtures();
    assert_eq!(fx.len(), 30);
    for f in &fx {
        let body = f["body"].as_str().unwrap();
        let lines: Vec<&str> = f["changed_lines"].as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
        let t = textual_features(body, lines.iter().copied(), &lex);
        // RE_full, RE_prose, SWR, SKWR, QR, CEP, STR, CS
        let got = [t[0], t[1], t[2], t[4], t[5], t[6], t[7]];
        let hand = from_counts(f);
        for (i, name) in NAMES.iter().enumerate() {
            let documented = f["expected"][name].as_f64();
            assert!(close(hand[i], documented), "{} {name}: counts give {:?}, documented {:?}", f["id"], hand[i], documented);
            assert!(close(got[i], documented), "{} {name}: computed {:?}, documented {:?}", f["id"], got[i], documented);
        }
        let elements: Vec<&str> =
            f["counts"]["code_elements"].as_array().unwrap().iter().map(|e| e.as_str().unwrap()).collect();
        assert_eq!(extract_code_elements(body), elements, "{}", f["id"]);
    }
}

pub fn check_motivating_comments() {
    let lex = Lexicons::default();
    let a = TokenizedComment::new("Only check postable services?");
    assert_eq!(question_ratio(&a), 1.0);
    assert_eq!(stop_word_ratio(&a, false, &lex), 0.25);
    assert!(a.code_elements.is_empty());

    let body = "I don't think we need 2 ways to call get_partner_whitelabel_config as market_id is None by default";
    let els = extract_code_elements(body);
    for e in ["get_partner_whitelabel_config", "market_id", "None"] {
        assert!(els.iter().any(|x| x == e), "missing {e}");
    }
    let t = textual_features(body, ["config = get_partner_whitelabel_config(market_id=None)"], &lex);
    assert_eq!(t[5], Some(1.0));
    assert!(t[7].unwrap() > 0.0);
    // removing multi-hump identifiers makes the prose easier to read
    assert!(t[1].unwrap() > t[0].unwrap());
}

#[test]
fn documented_examples() {
    let lex = Lexicons::default();
    assert_eq!(split_sentences("Looks fine. Why this cast?").len(), 2);
    assert!(split_sentences("").is_empty());
    assert_eq!(split_sentences("rename this").len(), 1);
    assert!((flesch_reading_ease("The cat sat.").unwrap() - 119.19).abs() < 0.01);
    assert_eq!(question_ratio(&TokenizedComment::new("Looks fine. Why this cast?")), 0.5);
    assert_eq!(stop_word_ratio(&TokenizedComment::new("is it in the"), false, &lex), 1.0);
    assert!(extract_code_elements("looks good to me").is_empty());
    assert_eq!(extract_code_elements("`x+1` is wrong"), vec!["x+1"]);
    assert!((source_token_ratio(&TokenizedComment::new("rename market_id")) - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(source_token_ratio(&TokenizedComment::new("get_market_id")), 1.0);

    let lam = TokenizedComment::new("use lambda here");
    assert!(stop_word_ratio(&lam, true, &lex) > stop_word_ratio(&lam, false, &lex));

    let sim = max_line_similarity("market id default", ["market_id = config"], &lex);
    assert!((sim - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(max_line_similarity("alpha beta", ["gamma delta"], &lex), 0.0);
    assert!((max_line_similarity("alpha beta", ["beta alpha"], &lex) - 1.0).abs() < 1e-12);

    let mut l = Lexicons::default();
    l.sentiment_positive = ["great", "clean", "fix"].iter().map(|s| s.to_string()).collect();
    assert_eq!(sentiment_score("great clean fix", &l), (1.0, SentimentGroup::Positive));
    assert_eq!(sentiment_score("", &l), (0.0, SentimentGroup::Neutral));
    l.sentiment_negative = ["broken"].iter().map(|s| s.to_string()).collect();
    assert_eq!(sentiment_score("great but broken", &l).1, SentimentGroup::Neutral);
}

pub fn check_syllable_table_flesch_within_two_points() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/syllables.json")).unwrap();
    let table: Vec<Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(table.len(), 50);
    let words: Vec<&str> = table.iter().map(|r| r["word"].as_str().unwrap()).collect();
    let hand: f64 = table.iter().map(|r| r["syllables"].as_f64().unwrap()).sum();
    // ten five-word sentences
    let passage: String = words.chunks(5).map(|c| format!("{}.", c.join(" "))).collect::<Vec<_>>().join(" ");
    let n = words.len() as f64;
    let by_hand = 206.835 - 1.015 * (n / 10.0) - 84.6 * (hand / n);
    let computed = flesch_reading_ease(&passage).unwrap();
    assert!((computed - by_hand).abs() <= 2.0, "computed {computed}, by hand {by_hand}");
}

// shared with the acceptance suite
#[test]
fn thirty_fixtures_match_hand_values() {
    check_thirty_fixtures_match_hand_values();
}

#[test]
fn motivating_comments() {
    check_motivating_comments();
}

#[test]
fn syllable_table_flesch_within_two_points() {
    check_syllable_table_flesch_within_two_points();
}
