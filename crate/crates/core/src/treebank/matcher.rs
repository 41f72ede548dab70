use crate::pair::ShiftType;

use super::lemma::verb_lemma;
use super::tree::ParseNode;

/// Function tags marking an NP as an adjunct or predicate rather than an
/// argument; such NPs never fill an NP slot of a shift schema.
const NON_ARGUMENT_NP_TAGS: &[&str] = &["ADV", "TMP", "LOC", "EXT", "PRD", "VOC", "DIR", "MNR", "PRP"];

/// One VP configuration matching a shift schema. Constituents are given in
/// source surface order.
#[derive(Debug, Clone)]
pub struct ShiftMatch<'t> {
    pub shift_type: ShiftType,
    /// The whole sentence the VP belongs to.
    pub root: &'t ParseNode,
    pub vp_node: &'t ParseNode,
    pub verb_node: &'t ParseNode,
    pub verb_lemma: String,
    pub constituent_a: &'t ParseNode,
    pub constituent_b: &'t ParseNode,
    /// VP children following the two constituents.
    pub tail: Vec<&'t ParseNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Np,
    Pp,
    Prt,
}

fn slot_of(node: &ParseNode) -> Option<Slot> {
    match node.category() {
        "NP" if !node.function_tags().iter().any(|t| NON_ARGUMENT_NP_TAGS.contains(t)) => Some(Slot::Np),
        "PP" => Some(Slot::Pp),
        "PRT" => Some(Slot::Prt),
        _ => None,
    }
}

/// Whether `(a, b)` in surface order satisfies the schema of `shift`.
pub fn schema_accepts(shift: ShiftType, a: &ParseNode, b: &ParseNode) -> bool {
    let (Some(a), Some(b)) = (slot_of(a), slot_of(b)) else {
        return false;
    };
    match shift {
        ShiftType::HeavyNpShift => matches!((a, b), (Slot::Np, Slot::Pp) | (Slot::Pp, Slot::Np)),
        ShiftType::ParticleMovement => matches!((a, b), (Slot::Prt, Slot::Np) | (Slot::Np, Slot::Prt)),
        ShiftType::DativeAlternation => a == Slot::Np && b == Slot::Np,
        ShiftType::MultiplePp => a == Slot::Pp && b == Slot::Pp,
    }
}

fn is_verb(node: &ParseNode) -> bool {
    node.is_preterminal() && node.category().starts_with("VB")
}

/// All matches of `shift` in `tree`, outermost VP first. A VP matches when
/// the first two non-empty children after its head verb (the first `VB*`
/// child) fit the schema.
pub fn match_shift_pattern(tree: &ParseNode, shift: ShiftType) -> Vec<ShiftMatch<'_>> {
    tree.preorder()
        .filter(|n| n.category() == "VP")
        .filter_map(|vp| match_vp(tree, vp, shift))
        .collect()
}

fn match_vp<'t>(root: &'t ParseNode, vp: &'t ParseNode, shift: ShiftType) -> Option<ShiftMatch<'t>> {
    let head = vp.children.iter().position(is_verb)?;
    let mut rest = vp.children[head + 1..]
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.span.is_empty());
    let (_, a) = rest.next()?;
    let (ib, b) = rest.next()?;
    if !schema_accepts(shift, a, b) {
        return None;
    }
    let verb_node = &vp.children[head];
    Some(ShiftMatch {
        shift_type: shift,
        root,
        vp_node: vp,
        verb_node,
        verb_lemma: verb_lemma(verb_node.token.as_deref().unwrap_or_default()),
        constituent_a: a,
        constituent_b: b,
        tail: vp.children[head + 1 + ib + 1..].iter().collect(),
    })
}

impl ShiftMatch<'_> {
    /// Re-checks the schema and ordering invariants of the match.
    pub fn is_sound(&self) -> bool {
        schema_accepts(self.shift_type, self.constituent_a, self.constituent_b)
            && self.constituent_a.span.end <= self.constituent_b.span.start
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_treebank;

    fn one(src: &str) -> ParseNode {
        parse_treebank(src).unwrap().remove(0)
    }

    #[test]
    fn hnps_in_simple_transitive_vp() {
        let t = one("(S (NP (PRP I)) (VP (VBD met) (NP (DT the) (NN man)) (PP (IN at) (NP (DT the) (NN park)))) (. .))");
        let m = match_shift_pattern(&t, ShiftType::HeavyNpShift);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].constituent_a.yield_tokens().join(" "), "the man");
        assert_eq!(m[0].constituent_b.yield_tokens().join(" "), "at the park");
        assert_eq!(m[0].verb_lemma, "meet");
        assert!(m[0].tail.is_empty());
        for s in [ShiftType::ParticleMovement, ShiftType::DativeAlternation, ShiftType::MultiplePp] {
            assert!(match_shift_pattern(&t, s).is_empty());
        }
    }

    #[test]
    fn intransitive_has_no_match() {
        let t = one("(S (NP (DT the) (NN dog)) (VP (VBD ran)))");
        for s in ShiftType::ALL {
            assert!(match_shift_pattern(&t, s).is_empty());
        }
    }

    #[test]
    fn adverbial_np_is_not_an_argument() {
        let t = one("(S (NP-SBJ (NNS Sales)) (VP (VBD fell) (NP-EXT (CD 5) (NN %)) (PP (IN in) (NP (NNP May)))) (. .))");
        assert!(match_shift_pattern(&t, ShiftType::HeavyNpShift).is_empty());
    }

    #[test]
    fn trace_children_are_skipped() {
        let t = one("(S (NP-SBJ-1 (DT The) (NN money)) (VP (VBD was) (VP (VBN moved) (NP (-NONE- *-1)) (PP (TO to) (NP (NN savings))) (PP (IN on) (NP (NNP Monday))))))");
        let m = match_shift_pattern(&t, ShiftType::MultiplePp);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].constituent_a.yield_tokens().join(" "), "to savings");
        assert!(match_shift_pattern(&t, ShiftType::HeavyNpShift).is_empty());
    }

    #[test]
    fn nested_vps_reported_outermost_first() {
        let t = one("(S (NP (PRP I)) (VP (VBD met) (NP (NP (DT the) (NN man)) (VP (VBG selling) (NP (NN water)) (PP (TO to) (NP (NNS runners))))) (PP (IN at) (NP (DT the) (NN park)))) (. .))");
        let m = match_shift_pattern(&t, ShiftType::HeavyNpShift);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].verb_lemma, "meet");
        assert_eq!(m[1].verb_lemma, "selling");
        assert!(m.iter().all(|m| m.is_sound()));
    }
}
