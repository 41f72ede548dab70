use std::collections::BTreeMap;

use serde::Serialize;

use crate::pair::{Constituent, PairSource, SentencePair, ShiftType, SyntheticMeta};
use crate::treebank::verb_lemma;

use super::lexicon::{attach_modifiers, Lexicon, ShiftSection};

/// Which levels to generate for each constituent of one shift type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationPlan {
    pub shift_type: ShiftType,
    /// Highest modifier level per constituent, unshifted order.
    pub max_level: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("lexicon has no {0} section")]
    MissingSection(ShiftType),
    #[error("{shift}: constituent {index} is not graded but has maximum level {level}")]
    UngradedLevel { shift: ShiftType, index: usize, level: u32 },
    #[error("{shift}: role {role} has {available} chain levels, plan asks for {requested}")]
    LevelUnavailable { shift: ShiftType, role: String, available: u32, requested: u32 },
}

impl GenerationPlan {
    /// Grades the shift's graded constituent(s) up to `max_level`.
    pub fn new(shift_type: ShiftType, max_level: u32) -> Self {
        let mut levels = [0; 2];
        for (i, l) in levels.iter_mut().enumerate() {
            if Self::is_graded(shift_type, i) {
                *l = max_level;
            }
        }
        GenerationPlan { shift_type, max_level: levels }
    }

    /// Uses every chain level the lexicon provides for the graded roles.
    pub fn full(lexicon: &Lexicon, shift_type: ShiftType) -> Result<Self, PlanError> {
        let sec = lexicon.section(shift_type).ok_or(PlanError::MissingSection(shift_type))?;
        let roles = shift_type.roles();
        let mut levels = [0; 2];
        for (i, l) in levels.iter_mut().enumerate() {
            if Self::is_graded(shift_type, i) {
                *l = sec.max_level(roles[i]);
            }
        }
        Ok(GenerationPlan { shift_type, max_level: levels })
    }

    pub fn is_graded(shift: ShiftType, index: usize) -> bool {
        shift.grades_both() || shift.graded_index() == index
    }

    pub fn check(&self, lexicon: &Lexicon) -> Result<(), PlanError> {
        let shift = self.shift_type;
        let sec = lexicon.section(shift).ok_or(PlanError::MissingSection(shift))?;
        for (i, role) in shift.roles().iter().enumerate() {
            let level = self.max_level[i];
            if !Self::is_graded(shift, i) && level > 0 {
                return Err(PlanError::UngradedLevel { shift, index: i, level });
            }
            let available = sec.max_level(role);
            if level > available {
                return Err(PlanError::LevelUnavailable {
                    shift,
                    role: role.to_string(),
                    available,
                    requested: level,
                });
            }
        }
        Ok(())
    }

    /// Closed-form number of pairs `expand` emits.
    pub fn cardinality(&self, lexicon: &Lexicon) -> Result<usize, PlanError> {
        self.check(lexicon)?;
        Ok(radices(lexicon.section(self.shift_type).unwrap(), self).iter().product())
    }
}

fn radices(sec: &ShiftSection, plan: &GenerationPlan) -> [usize; 7] {
    let [ra, rb] = plan.shift_type.roles();
    [
        sec.frames.len(),
        sec.subjects.len(),
        sec.verbs.len(),
        sec.constituents[ra].len(),
        sec.constituents[rb].len(),
        plan.max_level[0] as usize + 1,
        plan.max_level[1] as usize + 1,
    ]
}

/// Lazily enumerates every slot combination in lexicographic order of
/// (frame, subject, verb, base a, base b, level a, level b).
#[derive(Debug, Clone)]
pub struct Expansion<'l> {
    section: &'l ShiftSection,
    plan: GenerationPlan,
    radices: [usize; 7],
    next: usize,
    total: usize,
}

pub fn expand<'l>(lexicon: &'l Lexicon, plan: &GenerationPlan) -> Result<Expansion<'l>, PlanError> {
    plan.check(lexicon)?;
    let section = lexicon.section(plan.shift_type).unwrap();
    let radices = radices(section, plan);
    Ok(Expansion { section, plan: *plan, radices, next: 0, total: radices.iter().product() })
}

impl Expansion<'_> {
    fn build(&self, idx: usize) -> SentencePair {
        let mut digits = [0usize; 7];
        let mut rest = idx;
        for (d, r) in digits.iter_mut().zip(self.radices).rev() {
            *d = rest % r;
            rest /= r;
        }
        let [fi, si, vi, ai, bi, la, lb] = digits;
        let (la, lb) = (la as u32, lb as u32);
        let sec = self.section;
        let shift = self.plan.shift_type;
        let [ra, rb] = shift.roles();
        let frame = &sec.frames[fi];
        let subject = &sec.subjects[si];
        let verb = &sec.verbs[vi];
        let a = attach_modifiers(&sec.constituents[ra][ai], sec.modifiers(ra, la));
        let b = attach_modifiers(&sec.constituents[rb][bi], sec.modifiers(rb, lb));

        let sentence = |middle: &[&str]| {
            let mut parts = vec![subject.as_str(), verb.as_str()];
            parts.extend_from_slice(middle);
            if let Some(adj) = &frame.adjunct {
                parts.push(adj);
            }
            format!("{}.", parts.join(" "))
        };
        let unshifted = sentence(&[&a, &b]);
        let shifted = match shift {
            ShiftType::DativeAlternation => sentence(&[&b, "to", &a]),
            _ => sentence(&[&b, &a]),
        };
        let verb_head = verb.split_whitespace().next().unwrap_or(verb);
        SentencePair {
            id: format!("syn-{}-{}-s{si}-v{vi}-a{ai}-b{bi}-l{la}-{lb}", shift.code(), frame.id),
            shift_type: shift,
            unshifted,
            shifted,
            verb: verb_lemma(verb_head),
            source: PairSource::Synthetic,
            constituents: vec![
                Constituent { role: ra.to_string(), text: a, order_index: 0 },
                Constituent { role: rb.to_string(), text: b, order_index: 1 },
            ],
            synthetic: Some(SyntheticMeta {
                frame_id: frame.id.clone(),
                level_a: la,
                level_b: lb,
                modifier_weight_a: la + 1,
                modifier_weight_b: lb + 1,
            }),
            weights_a: None,
            weights_b: None,
            ratios: None,
        }
    }
}

impl Iterator for Expansion<'_> {
    type Item = SentencePair;

    fn next(&mut self) -> Option<SentencePair> {
        if self.next >= self.total {
            return None;
        }
        let p = self.build(self.next);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.total - self.next;
        (n, Some(n))
    }

    fn nth(&mut self, n: usize) -> Option<SentencePair> {
        self.next = self.next.saturating_add(n).min(self.total);
        self.next()
    }
}

impl ExactSizeIterator for Expansion<'_> {}

/// Dataset composition: pairs per shift type and per modifier-level cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Census {
    pub per_shift: BTreeMap<ShiftType, usize>,
    /// Keyed `"{SHIFT}:{level_a}x{level_b}"`; generated pairs only.
    pub per_cell: BTreeMap<String, usize>,
}

impl Census {
    pub fn total(&self) -> usize {
        self.per_shift.values().sum()
    }

    pub fn cell(&self, shift: ShiftType, level_a: u32, level_b: u32) -> usize {
        self.per_cell.get(&cell_key(shift, level_a, level_b)).copied().unwrap_or(0)
    }
}

fn cell_key(shift: ShiftType, a: u32, b: u32) -> String {
    format!("{}:{a}x{b}", shift.code())
}

pub fn dataset_census<'p, I>(pairs: I) -> Census
where
    I: IntoIterator<Item = &'p SentencePair>,
{
    let mut per_shift: BTreeMap<ShiftType, usize> = ShiftType::ALL.iter().map(|&s| (s, 0)).collect();
    let mut per_cell = BTreeMap::new();
    for p in pairs {
        *per_shift.entry(p.shift_type).or_default() += 1;
        if let Some(m) = &p.synthetic {
            *per_cell.entry(cell_key(p.shift_type, m.level_a, m.level_b)).or_default() += 1;
        }
    }
    Census { per_shift, per_cell }
}
