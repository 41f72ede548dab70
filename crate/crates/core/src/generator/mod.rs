//! Graded synthetic minimal pairs from a template lexicon.
//!
//! Each shift section of a [`Lexicon`] supplies frames, subjects, verbs,
//! base constituents per role and cumulative modifier chains. [`expand`]
//! walks the Cartesian product of those slots and the modifier levels of a
//! [`GenerationPlan`], producing one pair per combination.

mod expand;
mod lexicon;

pub use expand::{dataset_census, expand, Census, Expansion, GenerationPlan, PlanError};
pub use lexicon::{
    attach_modifiers, ChainLevel, Frame, Lexicon, LexiconError, Modifier, ModifierCategory, ShiftSection,
};
