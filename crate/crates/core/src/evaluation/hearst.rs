//! Hearst-pattern baseline. Every pattern runs over every sentence and the captures are
//! merged in text order, so the result does not depend on pattern order.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    En,
    Zh,
}

// Capture stops at a relative pronoun, clause punctuation, or the end of the sentence.
const Y: &str = r"(?P<y>[^,;:()]+?)";
const STOP: &str = r"(?:\s+(?:that|which|who|whose)\b|\s*[,;:(]|\s*$)";

static EN: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        format!(r"(?i)\b(?:is|was)\s+(?:a|an)\s+{Y}{STOP}"),
        format!(r"(?i)\b(?:is|was)\s+one\s+of\s+{Y}{STOP}"),
        format!(r"(?i)\brefers?\s+to\s+{Y}{STOP}"),
        format!(r"(?i)\b(?:is|was)\s+(?:a|an)\s+(?:member|part|form|kind|type|sort|variety)\s+of\s+{Y}{STOP}"),
        r"(?i)(?:^|[,;]\s*)as\s+(?P<y>[^,;:]+?)\s*,\s*[^,;:]+?\s+(?:is|was|has|became)\b".to_string(),
    ]
    .iter()
    .map(|p| Regex::new(p).expect("valid pattern"))
    .collect()
});

static EN_PARTITIVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:member|part|form|kind|type|sort|variety)\s+of\b").expect("valid pattern"));

static ZH: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        r"是(?P<y>[^，。；、：]+?)(?:[，；：]|$)",
        r"是(?P<y>[^，。；、：]+?)之一",
        r"是一(?:种|类|个)(?P<y>[^，。；、：]+?)(?:[，；：]|$)",
        r"属于(?P<y>[^，。；、：]+?)(?:[，；：]|$)",
        r"(?:位于|成立于)[^，。；、：]*?的(?P<y>[^，。；、：]+?)(?:[，；：]|$)",
    ]
    .iter()
    .map(|p| Regex::new(p).expect("valid pattern"))
    .collect()
});

static SENTENCE_EN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.!?]+(?:\s+|$)").expect("valid pattern"));
static SENTENCE_ZH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[。！？]+").expect("valid pattern"));
static ARTICLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^(?:(?:a|an|the)\s+)+").expect("valid pattern"));

fn trim_en(y: &str) -> String {
    ARTICLE.replace(y.trim(), "").trim().to_string()
}

fn trim_zh(y: &str) -> String {
    let y = y.trim();
    let y = y.strip_suffix("之一").unwrap_or(y);
    let y = ["一种", "一类", "一个", "一部", "一座", "一家", "一所", "一位", "一名"]
        .iter()
        .find_map(|p| y.strip_prefix(p))
        .unwrap_or(y);
    y.trim().to_string()
}

fn sentences<'a>(text: &'a str, splitter: &Regex) -> Vec<(usize, &'a str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for m in splitter.find_iter(text) {
        out.push((start, &text[start..m.start()]));
        start = m.end();
    }
    if start < text.len() {
        out.push((start, &text[start..]));
    }
    out
}

/// Concept strings captured by any pattern, in order of appearance, without duplicates.
pub fn hearst_extract(text: &str, language: Language) -> Vec<String> {
    let (patterns, splitter): (&[Regex], &Regex) = match language {
        Language::En => (&EN, &SENTENCE_EN),
        Language::Zh => (&ZH, &SENTENCE_ZH),
    };
    let mut hits: Vec<(usize, String)> = Vec::new();
    for (offset, sentence) in sentences(text, splitter) {
        for (pi, re) in patterns.iter().enumerate() {
            for cap in re.captures_iter(sentence) {
                let m = cap.name("y").expect("every pattern captures y");
                let y = match language {
                    Language::En => {
                        if pi == 0 && EN_PARTITIVE.is_match(m.as_str()) {
                            continue;
                        }
                        trim_en(m.as_str())
                    }
                    Language::Zh => {
                        let raw = m.as_str();
                        if pi == 0 && (raw.ends_with("之一") || raw.contains("位于") || raw.contains("成立于")) {
                            continue;
                        }
                        trim_zh(raw)
                    }
                };
                if !y.is_empty() {
                    hits.push((offset + m.start(), y));
                }
            }
        }
    }
    hits.sort();
    let mut out: Vec<String> = Vec::new();
    for (_, y) in hits {
        if !out.contains(&y) {
            out.push(y);
        }
    }
    out
}
