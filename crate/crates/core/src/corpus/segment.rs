//! Rule-based sentence splitter.
//!
//! Boundaries are placed after a run of terminal punctuation (`.`, `!`, `?`,
//! plus trailing closing quotes/brackets) that is followed by whitespace or
//! the end of text, and at line breaks. A lone period after a listed
//! abbreviation or a single capital initial is not a boundary. Segments are
//! trimmed slices of the input, so no non-whitespace character is ever lost.

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "vs", "prof", "mt", "ave", "e.g", "i.e", "approx", "est",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{2026}')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Splits `text` into sentences. Empty or whitespace-only text gives no sentences.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let push = |from: usize, to: usize, out: &mut Vec<String>| {
        let s = text[from..to].trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
    };

    while i < chars.len() {
        let (pos, c) = chars[i];
        if c == '\n' {
            push(start, pos, &mut out);
            start = pos + c.len_utf8();
            i += 1;
            continue;
        }
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut j = i;
        while j < chars.len() && is_terminal(chars[j].1) {
            j += 1;
        }
        let terminal_run = j - run_start;
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let at_end = j == chars.len();
        let before_space = !at_end && chars[j].1.is_whitespace();
        if (at_end || before_space) && !(terminal_run == 1 && c == '.' && guarded(text, pos)) {
            let end = if at_end { text.len() } else { chars[j].0 };
            push(start, end, &mut out);
            start = end;
        }
        i = j.max(i + 1);
    }
    if start < text.len() {
        push(start, text.len(), &mut out);
    }
    out
}

/// True when the period at byte `dot` closes an abbreviation or an initial.
fn guarded(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    if word.is_empty() {
        return false;
    }
    let mut cs = word.chars();
    if let (Some(first), None) = (cs.next(), cs.next()) {
        if first.is_uppercase() {
            return true;
        }
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}
