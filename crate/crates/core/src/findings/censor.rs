//! Removal of diagnosis mentions from a trace before retrieval.

use regex::{Regex, RegexBuilder};

fn term_pattern(term: &str) -> Option<String> {
    let words: Vec<String> = term.split_whitespace().map(regex::escape).collect();
    if words.is_empty() {
        return None;
    }
    let body = words.join(r"\s+");
    // \b only works next to word characters; terms like "A-Fib." or "(AF)" need lookaround-free guards.
    let first = term.trim().chars().next()?;
    let last = term.trim().chars().last()?;
    let lead = if first.is_alphanumeric() || first == '_' { r"\b" } else { "" };
    let trail = if last.is_alphanumeric() || last == '_' { r"\b" } else { "" };
    Some(format!("{lead}{body}{trail}"))
}

/// Case-insensitive, whole-word pattern matching any of `terms`.
pub fn censor_regex<'a>(terms: impl IntoIterator<Item = &'a str>) -> Option<Regex> {
    let mut pats: Vec<String> = terms.into_iter().filter_map(term_pattern).collect();
    if pats.is_empty() {
        return None;
    }
    pats.sort_by_key(|p| std::cmp::Reverse(p.len()));
    pats.dedup();
    RegexBuilder::new(&pats.join("|")).case_insensitive(true).build().ok()
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Remove every whole-word mention of `label` and its `synonyms`.
///
/// Removal repeats until nothing matches, since deleting one mention can
/// join its neighbours into a new one.
pub fn censor_label(trace: &str, label: &str, synonyms: &[String]) -> String {
    let terms = std::iter::once(label).chain(synonyms.iter().map(String::as_str));
    let Some(re) = censor_regex(terms) else {
        return trace.to_string();
    };
    if !re.is_match(trace) {
        return trace.to_string();
    }
    let mut text = trace.to_string();
    loop {
        let next = collapse_whitespace(&re.replace_all(&text, " "));
        if next == text {
            return next.trim().to_string();
        }
        text = next;
    }
}
