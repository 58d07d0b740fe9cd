use super::InterpretError;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const PREFERENCE_PREFIX: &str = "I prefer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Category {
    Food,
    Atmosphere,
}

/// One `critique=>preference` demonstration line of the few-shot prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub critique: String,
    pub preference: String,
    pub category: Category,
}

impl Exemplar {
    pub fn validate(&self) -> Result<(), InterpretError> {
        if self.critique.trim().is_empty() || self.preference.trim().is_empty() {
            return Err(InterpretError::BadExemplar(format!("{self:?}: empty field")));
        }
        if !self.preference.trim_start().starts_with(PREFERENCE_PREFIX) {
            return Err(InterpretError::BadExemplar(format!(
                "preference {:?} must begin with {PREFERENCE_PREFIX:?}",
                self.preference
            )));
        }
        Ok(())
    }
}

const DEFAULT_EXEMPLARS: &str = include_str!("../../data/exemplars.jsonl");

/// The bundled ten exemplars: five about food, five about atmosphere.
/// The first three are the canonical cheap / expensive / tacky lines; the
/// remaining seven follow the same pattern and can be replaced with
/// [`load_exemplars`].
pub fn default_exemplars() -> Vec<Exemplar> {
    crate::jsonl::parse_str(DEFAULT_EXEMPLARS, "exemplars.jsonl").expect("bundled exemplars parse")
}

pub fn load_exemplars(path: impl AsRef<Path>) -> Result<Vec<Exemplar>, InterpretError> {
    let ex: Vec<Exemplar> = crate::jsonl::read(path).map_err(|e| InterpretError::BadExemplar(e.to_string()))?;
    for e in &ex {
        e.validate()?;
    }
    Ok(ex)
}

/// One `<critique>=><preference>` line per exemplar followed by
/// `<critique>=>I prefer`, newline-separated, no trailing newline.
pub fn build_prompt(critique: &str, exemplars: &[Exemplar]) -> Result<String, InterpretError> {
    let critique = critique.trim();
    if critique.is_empty() {
        return Err(InterpretError::EmptyCritique);
    }
    if exemplars.is_empty() {
        return Err(InterpretError::NoExemplars);
    }
    let mut prompt = String::new();
    for ex in exemplars {
        ex.validate()?;
        prompt.push_str(ex.critique.trim());
        prompt.push_str("=>");
        prompt.push_str(ex.preference.trim());
        prompt.push('\n');
    }
    prompt.push_str(critique);
    prompt.push_str("=>");
    prompt.push_str(PREFERENCE_PREFIX);
    Ok(prompt)
}

/// Recovers the critique from the final prompt line.
pub(crate) fn critique_of_prompt(prompt: &str) -> &str {
    let last = prompt.rsplit('\n').next().unwrap_or(prompt);
    last.strip_suffix(PREFERENCE_PREFIX)
        .and_then(|s| s.strip_suffix("=>"))
        .unwrap_or(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_shot() -> Vec<Exemplar> {
        default_exemplars().into_iter().take(3).collect()
    }

    #[test]
    fn three_shot_prompt_verbatim() {
        let prompt = build_prompt("That's not good for a date", &three_shot()).unwrap();
        assert_eq!(
            prompt,
            "It looks cheap=>I prefer a fancier place.\n\
             Too expensive=>I prefer a more affordable place.\n\
             That's so tacky=>I prefer a more stylish place.\n\
             That's not good for a date=>I prefer"
        );
    }

    #[test]
    fn minimal_prompt() {
        let ex = &default_exemplars()[..1];
        let p = build_prompt("x", ex).unwrap();
        assert_eq!(p.lines().count(), 2);
        assert!(p.ends_with("\nx=>I prefer"));
        assert_eq!(critique_of_prompt(&p), "x");
    }

    #[test]
    fn default_exemplars_are_balanced() {
        let ex = default_exemplars();
        assert_eq!(ex.len(), 10);
        assert_eq!(ex.iter().filter(|e| e.category == Category::Food).count(), 5);
        for e in &ex {
            e.validate().unwrap();
        }
    }

    #[test]
    fn empty_critique_and_no_exemplars() {
        assert!(matches!(build_prompt("  ", &three_shot()), Err(InterpretError::EmptyCritique)));
        assert!(matches!(build_prompt("x", &[]), Err(InterpretError::NoExemplars)));
    }

    #[test]
    fn exemplar_must_start_with_prefix() {
        let bad = Exemplar {
            critique: "Too loud".into(),
            preference: "Quieter please.".into(),
            category: Category::Atmosphere,
        };
        assert!(bad.validate().is_err());
    }
}
