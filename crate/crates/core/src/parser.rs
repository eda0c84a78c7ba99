//! Converts raw backend text into a [`DetectionResult`].
//!
//! Real models drift from format instructions, so parsing is a cascade that
//! prefers the instructed format and degrades gracefully:
//!
//! 1. STRUCTURED - a leading `<digit>, <reason>` line, a JSON-ish object
//!    carrying an anomaly field, or `key: value` lines.
//! 2. FALLBACK_DIGIT - the first standalone `0`/`1` token becomes the label.
//! 3. FALLBACK_KEYWORD - negation phrases, then bare keywords.
//!
//! A response that survives none of the stages is UNPARSEABLE; callers count
//! it instead of coercing it to a label, since defaulting would bias ACC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{DetectionResult, Label, ParsePath};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("response failed all parsing stages: {raw:?}")]
    Unparseable { raw: String },
}

/// Keyword lists for the third cascade stage. Negative phrases are checked
/// before positive keywords so negations ("no anomaly") never read as
/// positive. All matching is case-insensitive on word boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordConfig {
    pub positive_keywords: Vec<String>,
    pub negative_phrases: Vec<String>,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        KeywordConfig {
            positive_keywords: ["anomaly", "anomalies", "anomalous", "defect", "defects", "defective", "abnormal"]
                .map(String::from)
                .to_vec(),
            negative_phrases: ["no anomaly", "no anomalies", "not anomalous", "no defect", "no defects", "normal"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Runs the cascade with the default keyword lists.
pub fn parse_response(raw: &str) -> Result<DetectionResult, ParseError> {
    parse_response_with(raw, &KeywordConfig::default())
}

/// Runs the cascade with caller-supplied keyword lists.
pub fn parse_response_with(raw: &str, keywords: &KeywordConfig) -> Result<DetectionResult, ParseError> {
    if let Some((label, reasoning)) = parse_structured(raw) {
        return Ok(DetectionResult::from_label(label, reasoning, raw.to_string(), ParsePath::Structured));
    }
    if let Some((label, reasoning)) = parse_standalone_digit(raw) {
        return Ok(DetectionResult::from_label(label, reasoning, raw.to_string(), ParsePath::FallbackDigit));
    }
    if let Some(label) = parse_keywords(raw, keywords) {
        return Ok(DetectionResult::from_label(
            label,
            raw.trim().to_string(),
            raw.to_string(),
            ParsePath::FallbackKeyword,
        ));
    }
    Err(ParseError::Unparseable { raw: raw.to_string() })
}

/// Applies the cascade element-wise, preserving order. Failures are counted,
/// not raised.
pub fn parse_batch(raws: &[String], keywords: &KeywordConfig) -> (Vec<DetectionResult>, usize) {
    let mut results = Vec::with_capacity(raws.len());
    let mut unparseable = 0;
    for raw in raws {
        match parse_response_with(raw, keywords) {
            Ok(result) => results.push(result),
            Err(_) => unparseable += 1,
        }
    }
    (results, unparseable)
}

fn parse_structured(raw: &str) -> Option<(Label, String)> {
    if let Some(hit) = parse_leading_digit(raw) {
        return Some(hit);
    }
    if let Some(hit) = parse_json_object(raw) {
        return Some(hit);
    }
    parse_key_value_lines(raw)
}

/// `<digit>, <reason>` with an optional separator; rejects leading decimals
/// ("0.95") and multi-digit numbers ("10").
fn parse_leading_digit(raw: &str) -> Option<(Label, String)> {
    let trimmed = raw.trim_start();
    let mut chars = trimmed.chars();
    let digit = chars.next()?;
    let label = match digit {
        '0' => Label::Normal,
        '1' => Label::Anomalous,
        _ => return None,
    };
    let rest = chars.as_str();
    let mut rest_chars = rest.chars();
    match rest_chars.next() {
        None => return Some((label, String::new())),
        Some(c) if c.is_ascii_digit() => return None,
        Some('.') if rest_chars.next().is_some_and(|c| c.is_ascii_digit()) => return None,
        Some(c) if c.is_alphabetic() => return None,
        _ => {}
    }
    let reason = rest
        .trim_start()
        .trim_start_matches([',', '.', ':', ';', '-'])
        .trim();
    Some((label, reason.to_string()))
}

const ANOMALY_KEYS: [&str; 7] =
    ["anomaly", "anomaly_detected", "is_anomaly", "label", "result", "prediction", "detection"];
const REASON_KEYS: [&str; 3] = ["reason", "reasoning", "explanation"];

/// A JSON object (bare, embedded, or inside a code fence) with an anomaly
/// field and optionally a reason field.
fn parse_json_object(raw: &str) -> Option<(Label, String)> {
    let candidate = extract_balanced_object(raw)?;
    let value: serde_json::Value = serde_json::from_str(candidate).ok()?;
    let object = value.as_object()?;
    let mut label = None;
    for key in ANOMALY_KEYS {
        if let Some(v) = object.get(key) {
            label = json_label(v);
            if label.is_some() {
                break;
            }
        }
    }
    let label = label?;
    let reason = REASON_KEYS
        .iter()
        .find_map(|k| object.get(*k).and_then(|v| v.as_str()))
        .unwrap_or_default()
        .to_string();
    Some((label, reason))
}

fn json_label(value: &serde_json::Value) -> Option<Label> {
    match value {
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(0) => Some(Label::Normal),
            Some(1) => Some(Label::Anomalous),
            _ => None,
        },
        serde_json::Value::Bool(b) => Some(if *b { Label::Anomalous } else { Label::Normal }),
        serde_json::Value::String(s) => match s.trim() {
            "0" => Some(Label::Normal),
            "1" => Some(Label::Anomalous),
            _ => None,
        },
        _ => None,
    }
}

/// First balanced `{...}` in the text, string-aware.
fn extract_balanced_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escape = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escape {
                escape = false;
            } else {
                match b {
                    b'\\' => escape = true,
                    b'"' => in_string = false,
                    _ => {}
                }
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// `anomaly: 1` / `reason: ...` style lines.
fn parse_key_value_lines(raw: &str) -> Option<(Label, String)> {
    let mut label = None;
    let mut reason = None;
    for line in raw.lines() {
        let line = line.trim();
        let Some((key, value)) = line.split_once([':', '=']) else { continue };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if label.is_none() && ANOMALY_KEYS.contains(&key.as_str()) {
            label = match value.trim_end_matches(['.', ',']).trim() {
                "0" => Some(Label::Normal),
                "1" => Some(Label::Anomalous),
                _ => None,
            };
        } else if reason.is_none() && REASON_KEYS.contains(&key.as_str()) {
            reason = Some(value.to_string());
        }
    }
    label.map(|l| (l, reason.unwrap_or_default()))
}

/// First standalone `0`/`1` token: not adjacent to word characters and not
/// part of a decimal number. The remainder after the token (or before it,
/// when the token ends the text) becomes the reasoning.
fn parse_standalone_digit(raw: &str) -> Option<(Label, String)> {
    let bytes = raw.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        let label = match b {
            b'0' => Label::Normal,
            b'1' => Label::Anomalous,
            _ => continue,
        };
        let word = |c: u8| c.is_ascii_alphanumeric() || c == b'_';
        if i > 0 {
            let prev = bytes[i - 1];
            if word(prev) {
                continue;
            }
            // reject the fractional part of a decimal such as "0.5"
            if prev == b'.' && i >= 2 && bytes[i - 2].is_ascii_digit() {
                continue;
            }
        }
        if let Some(&next) = bytes.get(i + 1) {
            if word(next) {
                continue;
            }
            // reject the integer part of a decimal such as "0.5"
            if next == b'.' && bytes.get(i + 2).is_some_and(|c| c.is_ascii_digit()) {
                continue;
            }
        }
        let after = raw[i + 1..].trim_start_matches([',', '.', ':', ';', '-']).trim();
        let reasoning = if after.is_empty() { raw[..i].trim() } else { after };
        return Some((label, reasoning.to_string()));
    }
    None
}

fn parse_keywords(raw: &str, keywords: &KeywordConfig) -> Option<Label> {
    let haystack = raw.to_ascii_lowercase();
    let matches_any = |phrases: &[String]| {
        phrases.iter().any(|p| contains_bounded(&haystack, &p.to_ascii_lowercase()))
    };
    if matches_any(&keywords.negative_phrases) {
        return Some(Label::Normal);
    }
    if matches_any(&keywords.positive_keywords) {
        return Some(Label::Anomalous);
    }
    None
}

/// Substring match that requires non-word characters (or text edges) on both
/// sides, so "normal" never fires inside "abnormal".
fn contains_bounded(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let word = |c: char| c.is_alphanumeric() || c == '_';
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let left_ok = start == 0 || !haystack[..start].chars().next_back().is_some_and(word);
        let right_ok = end == haystack.len() || !haystack[end..].chars().next().is_some_and(word);
        if left_ok && right_ok {
            return true;
        }
        from = start + 1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parsed(raw: &str) -> DetectionResult {
        parse_response(raw).unwrap_or_else(|e| panic!("{raw:?} should parse: {e}"))
    }

    #[test]
    fn canonical_structured_forms() {
        let r = parsed("1, There appears to be a braided or twisted material on the bottle");
        assert_eq!(r.label, Label::Anomalous);
        assert_eq!(r.parse_path, ParsePath::Structured);
        assert_eq!(r.reasoning, "There appears to be a braided or twisted material on the bottle");
        assert_eq!(r.score, 1.0);

        let r = parsed("0, the object matches the reference");
        assert_eq!(r.label, Label::Normal);
        assert_eq!(r.parse_path, ParsePath::Structured);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn structured_json_and_key_value() {
        let r = parsed(r#"{"anomaly": 1, "reason": "crack along the rim"}"#);
        assert_eq!((r.label, r.parse_path), (Label::Anomalous, ParsePath::Structured));
        assert_eq!(r.reasoning, "crack along the rim");

        let r = parsed("```json\n{\"anomaly\": 0, \"reason\": \"matches reference\"}\n```");
        assert_eq!((r.label, r.parse_path), (Label::Normal, ParsePath::Structured));

        let r = parsed("anomaly: 1\nreason: bent pin on the left side");
        assert_eq!((r.label, r.parse_path), (Label::Anomalous, ParsePath::Structured));
        assert_eq!(r.reasoning, "bent pin on the left side");
    }

    #[test]
    fn leading_decimal_is_not_a_label() {
        // "0.95 confident" must not read as label 0 via the structured stage
        let r = parse_response("0.95 confident there is a defect").unwrap();
        assert_eq!(r.parse_path, ParsePath::FallbackKeyword);
        assert_eq!(r.label, Label::Anomalous);
    }

    #[test]
    fn digit_fallback_finds_standalone_token() {
        let r = parsed("The detection result is 1 because the capsule is cracked.");
        assert_eq!((r.label, r.parse_path), (Label::Anomalous, ParsePath::FallbackDigit));
        assert_eq!(r.reasoning, "because the capsule is cracked.");

        let r = parsed("After careful comparison I answer: 0");
        assert_eq!((r.label, r.parse_path), (Label::Normal, ParsePath::FallbackDigit));
        assert_eq!(r.reasoning, "After careful comparison I answer:");

        // "10" and "0.5" contain no standalone binary token
        assert!(matches!(
            parse_response("confidence 0.5 out of 10"),
            Err(ParseError::Unparseable { .. })
        ));
    }

    #[test]
    fn keyword_fallback_with_negation_safety() {
        let r = parsed("The image looks normal with no defects visible.");
        assert_eq!((r.label, r.parse_path), (Label::Normal, ParsePath::FallbackKeyword));

        let r = parsed("A visible defect near the thread.");
        assert_eq!((r.label, r.parse_path), (Label::Anomalous, ParsePath::FallbackKeyword));

        // every negative phrase parses as 0 despite containing positive keywords
        for phrase in KeywordConfig::default().negative_phrases {
            let r = parsed(&phrase);
            assert_eq!(r.label, Label::Normal, "phrase {phrase:?}");
        }
    }

    #[test]
    fn normal_does_not_fire_inside_abnormal() {
        let r = parsed("The texture is abnormal.");
        assert_eq!(r.label, Label::Anomalous);
    }

    #[test]
    fn unparseable_is_counted_not_coerced() {
        for garbage in ["???", "I cannot tell from this view.", "n/a"] {
            assert!(matches!(parse_response(garbage), Err(ParseError::Unparseable { .. })), "{garbage}");
        }
        let raws: Vec<String> = vec!["1, x".into(), "???".into(), "0, y".into()];
        let (results, unparseable) = parse_batch(&raws, &KeywordConfig::default());
        assert_eq!(results.len(), 2);
        assert_eq!(unparseable, 1);
        assert_eq!(results[0].label, Label::Anomalous);
        assert_eq!(results[1].label, Label::Normal);
    }

    #[test]
    fn reparse_of_reconstructed_output_is_idempotent() {
        for raw in ["1, crack on rim", "The part looks normal overall"] {
            let first = parsed(raw);
            let reconstructed = format!("{}, {}", first.label, first.reasoning);
            assert_eq!(parsed(&reconstructed).label, first.label);
        }
    }

    #[test]
    fn bare_digits_parse_structured() {
        assert_eq!(parsed("1").label, Label::Anomalous);
        assert_eq!(parsed("0").parse_path, ParsePath::Structured);
        assert_eq!(parsed("  1  ").label, Label::Anomalous);
    }
}
