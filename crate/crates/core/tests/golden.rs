use critique_core::corpus::segment_sentences;
use critique_core::interpreter::{build_prompt, default_exemplars};
use serde::Deserialize;
use std::path::PathBuf;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden").join(name)
}

#[derive(Deserialize)]
struct Case {
    text: String,
    sentences: Vec<String>,
}

#[test]
fn segmentation_cases() {
    let cases: Vec<Case> = critique_core::jsonl::read(golden("segmentation.jsonl")).unwrap();
    assert!(cases.len() >= 20);
    for c in cases {
        assert_eq!(segment_sentences(&c.text), c.sentences, "{:?}", c.text);
    }
}

#[test]
fn default_prompt_is_byte_stable() {
    let want = std::fs::read_to_string(golden("prompt_default.txt")).unwrap();
    let got = build_prompt("It doesn't look good for a date", &default_exemplars()).unwrap();
    assert_eq!(got, want);
    assert!(!got.ends_with('\n'));
    assert_eq!(got.lines().count(), default_exemplars().len() + 1);
}
