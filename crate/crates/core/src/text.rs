//! Word-level text helpers shared by the lexicon scorer, the hash-bag
//! embedder and the contradiction rules.

/// Lowercased word tokens. Apostrophes are dropped inside words
/// ("doesn't" -> "doesnt"); every other non-alphanumeric character separates.
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if ch == '\'' || ch == '\u{2019}' {
            continue;
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Fraction of `candidate`'s distinct tokens that also occur in `reference`.
/// Returns 0.0 when `candidate` has no tokens.
pub fn token_overlap(candidate: &str, reference: &str) -> f64 {
    use std::collections::BTreeSet;
    let cand: BTreeSet<String> = words(candidate).into_iter().collect();
    if cand.is_empty() {
        return 0.0;
    }
    let reference: BTreeSet<String> = words(reference).into_iter().collect();
    cand.intersection(&reference).count() as f64 / cand.len() as f64
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
