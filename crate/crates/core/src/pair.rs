//! Minimal-pair records shared by the miner, the generator and every
//! downstream stage.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::weights::{RatioProfile, WeightProfile};

/// The four post-verbal constituent alternations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ShiftType {
    /// Heavy NP shift: `V NP PP` / `V PP NP`.
    #[serde(rename = "HNPS")]
    HeavyNpShift,
    /// Particle movement: `V PRT NP` / `V NP PRT`.
    #[serde(rename = "PM")]
    ParticleMovement,
    /// Dative alternation: `V NP1 NP2` / `V NP2 to NP1`.
    #[serde(rename = "DA")]
    DativeAlternation,
    /// Multiple PP shift: `V PP1 PP2` / `V PP2 PP1`.
    #[serde(rename = "MPP")]
    MultiplePp,
}

impl ShiftType {
    pub const ALL: [ShiftType; 4] = [
        ShiftType::HeavyNpShift,
        ShiftType::ParticleMovement,
        ShiftType::DativeAlternation,
        ShiftType::MultiplePp,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ShiftType::HeavyNpShift => "HNPS",
            ShiftType::ParticleMovement => "PM",
            ShiftType::DativeAlternation => "DA",
            ShiftType::MultiplePp => "MPP",
        }
    }

    /// Constituent roles in unshifted surface order.
    pub fn roles(self) -> [&'static str; 2] {
        match self {
            ShiftType::HeavyNpShift => ["NP", "PP"],
            ShiftType::ParticleMovement => ["PRT", "NP"],
            ShiftType::DativeAlternation => ["NP1", "NP2"],
            ShiftType::MultiplePp => ["PP1", "PP2"],
        }
    }

    /// Whether both constituents receive graded modifiers in synthetic data.
    pub fn grades_both(self) -> bool {
        matches!(self, ShiftType::DativeAlternation | ShiftType::MultiplePp)
    }

    /// The constituent (by unshifted index) that is graded when only one is.
    pub fn graded_index(self) -> usize {
        match self {
            ShiftType::HeavyNpShift => 0,
            ShiftType::ParticleMovement => 1,
            ShiftType::DativeAlternation | ShiftType::MultiplePp => 0,
        }
    }
}

impl fmt::Display for ShiftType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown shift type {0:?} (expected one of hnps, pm, da, mpp)")]
pub struct UnknownShiftType(pub String);

impl FromStr for ShiftType {
    type Err = UnknownShiftType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "HNPS" => Ok(ShiftType::HeavyNpShift),
            "PM" => Ok(ShiftType::ParticleMovement),
            "DA" => Ok(ShiftType::DativeAlternation),
            "MPP" => Ok(ShiftType::MultiplePp),
            _ => Err(UnknownShiftType(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSource {
    Synthetic,
    Mined,
}

/// One moved constituent, as it appears in the unshifted sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constituent {
    pub role: String,
    pub text: String,
    pub order_index: usize,
}

/// Template provenance carried by generated pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticMeta {
    pub frame_id: String,
    pub level_a: u32,
    pub level_b: u32,
    pub modifier_weight_a: u32,
    pub modifier_weight_b: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    pub shift_type: ShiftType,
    pub unshifted: String,
    pub shifted: String,
    pub verb: String,
    pub source: PairSource,
    /// Exactly two entries, in unshifted order (`order_index` 0 and 1).
    pub constituents: Vec<Constituent>,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_a: Option<WeightProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_b: Option<WeightProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<RatioProfile>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairError {
    #[error("pair {0}: unshifted and shifted texts are identical")]
    IdenticalTexts(String),
    #[error("pair {0}: expected two constituents in unshifted order")]
    Constituents(String),
    #[error("pair {id}: word multisets differ beyond the permitted insertion ({detail})")]
    WordMultiset { id: String, detail: String },
}

impl SentencePair {
    pub fn constituent_a(&self) -> &Constituent {
        &self.constituents[0]
    }

    pub fn constituent_b(&self) -> &Constituent {
        &self.constituents[1]
    }

    /// The same pair with the two surface orders exchanged.
    pub fn swapped(&self) -> SentencePair {
        let mut out = self.clone();
        std::mem::swap(&mut out.unshifted, &mut out.shifted);
        out
    }

    /// Checks the structural pair invariants: distinct texts, two ordered
    /// constituents, and identical word multisets except for the single
    /// `to` a dative rewrite inserts.
    pub fn validate(&self) -> Result<(), PairError> {
        if self.unshifted == self.shifted {
            return Err(PairError::IdenticalTexts(self.id.clone()));
        }
        if self.constituents.len() != 2
            || self.constituents[0].order_index != 0
            || self.constituents[1].order_index != 1
        {
            return Err(PairError::Constituents(self.id.clone()));
        }
        let mut diff = word_counts(&self.shifted);
        for (w, c) in word_counts(&self.unshifted) {
            *diff.entry(w).or_insert(0) -= c;
        }
        diff.retain(|_, c| *c != 0);
        let ok = match self.shift_type {
            ShiftType::DativeAlternation => {
                diff.len() == 1 && diff.get("to").copied() == Some(1)
            }
            _ => diff.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(PairError::WordMultiset {
                id: self.id.clone(),
                detail: format!("{diff:?}"),
            })
        }
    }
}

fn word_counts(text: &str) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    for w in text.split_whitespace() {
        let w = w.trim_matches(|c: char| !c.is_alphanumeric());
        if !w.is_empty() {
            *out.entry(w.to_lowercase()).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(shift: ShiftType, u: &str, s: &str) -> SentencePair {
        SentencePair {
            id: "t".into(),
            shift_type: shift,
            unshifted: u.into(),
            shifted: s.into(),
            verb: "send".into(),
            source: PairSource::Mined,
            constituents: vec![
                Constituent { role: "NP1".into(), text: "her".into(), order_index: 0 },
                Constituent { role: "NP2".into(), text: "a gift".into(), order_index: 1 },
            ],
            synthetic: None,
            weights_a: None,
            weights_b: None,
            ratios: None,
        }
    }

    #[test]
    fn dative_allows_single_inserted_to() {
        let p = pair(
            ShiftType::DativeAlternation,
            "He sent her a gift.",
            "He sent a gift to her.",
        );
        assert!(p.validate().is_ok());
        let bad = pair(
            ShiftType::HeavyNpShift,
            "He sent her a gift.",
            "He sent a gift to her.",
        );
        assert!(matches!(bad.validate(), Err(PairError::WordMultiset { .. })));
    }

    #[test]
    fn identical_texts_rejected() {
        let p = pair(ShiftType::MultiplePp, "a b", "a b");
        assert_eq!(p.validate(), Err(PairError::IdenticalTexts("t".into())));
    }

    #[test]
    fn shift_codes_parse_case_insensitively() {
        for s in ShiftType::ALL {
            assert_eq!(s.code().to_lowercase().parse::<ShiftType>().unwrap(), s);
        }
        assert!("xyz".parse::<ShiftType>().is_err());
    }

    #[test]
    fn synthetic_metadata_flattens_into_record() {
        let mut p = pair(ShiftType::DativeAlternation, "a b", "b to a");
        p.synthetic = Some(SyntheticMeta {
            frame_id: "f".into(),
            level_a: 2,
            level_b: 0,
            modifier_weight_a: 3,
            modifier_weight_b: 1,
        });
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["level_a"], 2);
        assert_eq!(v["modifier_weight_b"], 1);
        let back: SentencePair = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);

        let mined = pair(ShiftType::DativeAlternation, "a b", "b to a");
        let v = serde_json::to_value(&mined).unwrap();
        assert!(v.get("frame_id").is_none());
        let back: SentencePair = serde_json::from_value(v).unwrap();
        assert_eq!(back.synthetic, None);
    }
}
