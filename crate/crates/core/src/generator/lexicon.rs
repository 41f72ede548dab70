use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pair::ShiftType;

const BUNDLED: &str = include_str!("../../data/default_lexicon.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModifierCategory {
    AdjP,
    PP,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modifier {
    pub text: String,
    pub category: ModifierCategory,
}

/// All modifiers attached at one level of a chain. Level `k` holds exactly
/// `k` modifiers and extends level `k - 1` by one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLevel {
    pub level: u32,
    pub modifiers: Vec<Modifier>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub id: String,
    /// The two constituent roles, in unshifted order.
    pub roles: Vec<String>,
    /// Fixed trailing material, e.g. a temporal adjunct.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjunct: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSection {
    pub frames: Vec<Frame>,
    pub subjects: Vec<String>,
    pub verbs: Vec<String>,
    pub constituents: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub modifier_chains: BTreeMap<String, Vec<ChainLevel>>,
}

impl ShiftSection {
    /// Highest modifier level available for `role` (0 without a chain).
    pub fn max_level(&self, role: &str) -> u32 {
        self.modifier_chains.get(role).map_or(0, |c| c.len() as u32)
    }

    /// Modifiers at `level` for `role`; level 0 is the bare base.
    pub fn modifiers(&self, role: &str, level: u32) -> &[Modifier] {
        if level == 0 {
            return &[];
        }
        &self.modifier_chains[role][level as usize - 1].modifiers
    }
}

/// Template lexicon, one section per shift type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon {
    pub sections: BTreeMap<ShiftType, ShiftSection>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon is not valid JSON for the lexicon schema: {0}")]
    Parse(String),
    #[error("cannot read lexicon {path}: {message}")]
    Io { path: String, message: String },
    #[error("lexicon has no shift sections")]
    NoSections,
    #[error("{shift}: `{field}` is empty")]
    Empty { shift: ShiftType, field: String },
    #[error("{shift}: frame {frame:?} must list roles {expected:?}, found {found:?}")]
    FrameRoles { shift: ShiftType, frame: String, expected: Vec<String>, found: Vec<String> },
    #[error("{shift}: frame {frame:?} references unknown role {role:?}")]
    UnknownRole { shift: ShiftType, frame: String, role: String },
    #[error("{shift}: no constituents listed for role {role:?}")]
    MissingRole { shift: ShiftType, role: String },
    #[error("{shift}: modifier chain for unknown role {role:?}")]
    UnknownChainRole { shift: ShiftType, role: String },
    #[error("{shift}: chain {role:?} entry {index} has level {found}, expected {expected}")]
    LevelGap { shift: ShiftType, role: String, index: usize, expected: u32, found: u32 },
    #[error("{shift}: chain {role:?} level {level} does not extend level {prev} by exactly one modifier")]
    NonCumulative { shift: ShiftType, role: String, level: u32, prev: u32 },
    #[error("{shift}: base {text:?} is listed for both roles, so its swap is not a distinct pair")]
    SharedBase { shift: ShiftType, text: String },
    #[error("{shift}: recipient {text:?} already starts with \"to\"")]
    RecipientHasTo { shift: ShiftType, text: String },
    #[error("{shift}: duplicate frame id {frame:?}")]
    DuplicateFrame { shift: ShiftType, frame: String },
}

impl Lexicon {
    /// Parses and validates a JSON lexicon document.
    pub fn from_json(source: &str) -> Result<Self, LexiconError> {
        let lex: Lexicon = serde_json::from_str(source).map_err(|e| LexiconError::Parse(e.to_string()))?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// The lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled lexicon is valid")
    }

    pub fn bundled_json() -> &'static str {
        BUNDLED
    }

    pub fn section(&self, shift: ShiftType) -> Option<&ShiftSection> {
        self.sections.get(&shift)
    }

    pub fn validate(&self) -> Result<(), LexiconError> {
        if self.sections.is_empty() {
            return Err(LexiconError::NoSections);
        }
        for (&shift, sec) in &self.sections {
            validate_section(shift, sec)?;
        }
        Ok(())
    }
}

fn validate_section(shift: ShiftType, sec: &ShiftSection) -> Result<(), LexiconError> {
    let empty = |field: &str| LexiconError::Empty { shift, field: field.to_string() };
    if sec.frames.is_empty() {
        return Err(empty("frames"));
    }
    if sec.subjects.is_empty() {
        return Err(empty("subjects"));
    }
    if sec.verbs.is_empty() {
        return Err(empty("verbs"));
    }
    let expected: Vec<String> = shift.roles().iter().map(|r| r.to_string()).collect();
    let mut ids = std::collections::BTreeSet::new();
    for f in &sec.frames {
        if !ids.insert(f.id.as_str()) {
            return Err(LexiconError::DuplicateFrame { shift, frame: f.id.clone() });
        }
        if let Some(role) = f.roles.iter().find(|r| !expected.contains(r)) {
            return Err(LexiconError::UnknownRole { shift, frame: f.id.clone(), role: role.clone() });
        }
        if f.roles != expected {
            return Err(LexiconError::FrameRoles {
                shift,
                frame: f.id.clone(),
                expected: expected.clone(),
                found: f.roles.clone(),
            });
        }
    }
    for role in &expected {
        match sec.constituents.get(role) {
            None => return Err(LexiconError::MissingRole { shift, role: role.clone() }),
            Some(b) if b.is_empty() || b.iter().any(|t| t.trim().is_empty()) => {
                return Err(empty(&format!("constituents.{role}")))
            }
            Some(_) => {}
        }
    }
    for base in &sec.constituents[&expected[0]] {
        if sec.constituents[&expected[1]].contains(base) {
            return Err(LexiconError::SharedBase { shift, text: base.clone() });
        }
        if shift == ShiftType::DativeAlternation
            && base.split_whitespace().next().is_some_and(|w| w.eq_ignore_ascii_case("to"))
        {
            return Err(LexiconError::RecipientHasTo { shift, text: base.clone() });
        }
    }
    for (role, chain) in &sec.modifier_chains {
        if !expected.contains(role) {
            return Err(LexiconError::UnknownChainRole { shift, role: role.clone() });
        }
        let mut prev: &[Modifier] = &[];
        for (i, lvl) in chain.iter().enumerate() {
            let want = i as u32 + 1;
            if lvl.level != want {
                return Err(LexiconError::LevelGap {
                    shift,
                    role: role.clone(),
                    index: i,
                    expected: want,
                    found: lvl.level,
                });
            }
            let extends = lvl.modifiers.len() == prev.len() + 1 && lvl.modifiers[..prev.len()] == *prev;
            if !extends || lvl.modifiers.iter().any(|m| m.text.trim().is_empty()) {
                return Err(LexiconError::NonCumulative { shift, role: role.clone(), level: want, prev: want - 1 });
            }
            prev = &lvl.modifiers;
        }
    }
    Ok(())
}

/// Inserts modifiers around the head (last word) of `base`: adjectival
/// modifiers directly before the head, prepositional ones after it, each in
/// declared order.
pub fn attach_modifiers(base: &str, modifiers: &[Modifier]) -> String {
    let words: Vec<&str> = base.split_whitespace().collect();
    let (head, pre) = words.split_last().expect("validated bases are non-empty");
    let mut out: Vec<&str> = pre.to_vec();
    out.extend(modifiers.iter().filter(|m| m.category == ModifierCategory::AdjP).map(|m| m.text.as_str()));
    out.push(head);
    out.extend(modifiers.iter().filter(|m| m.category == ModifierCategory::PP).map(|m| m.text.as_str()));
    out.join(" ")
}
