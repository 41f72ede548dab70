use shiftbench_core::generator::{expand, GenerationPlan, Lexicon};
use shiftbench_core::jsonl::to_line;
use shiftbench_core::study::{
    aggregate, recode, AttentionCheck, ExclusionConfig, JudgmentRecord, PresentationOrder, StudyConfig, StudyError,
    StudyService,
};
use shiftbench_core::{SentencePair, ShiftType};

fn pool() -> Vec<SentencePair> {
    let lex = Lexicon::bundled();
    expand(&lex, &GenerationPlan::new(ShiftType::DativeAlternation, 2)).unwrap().take(40).collect()
}

fn config(items: usize) -> StudyConfig {
    StudyConfig { items_per_assignment: items, seed: 11, ..Default::default() }
}

/// Rates every item of a participant's assignment. Attention checks are
/// answered as `attn` on the unshifted-first scale, other pairs with
/// `rating(pair_index)`.
fn rate_all(svc: &StudyService, participant: &str, attn: u8, rating: impl Fn(usize) -> u8) {
    let a = svc.create_assignment(participant).unwrap();
    for (i, item) in a.items.iter().enumerate() {
        let r = if item.is_attention_check { attn } else { rating(i) };
        svc.submit_judgment(JudgmentRecord {
            participant_id: participant.into(),
            pair_id: item.pair_id.clone(),
            presentation_order: item.presentation_order,
            rating: recode(r, item.presentation_order),
            response_time_ms: 1500 + i as u64,
            submitted_at: 1_700_000_000_000 + i as u64,
            is_attention_check: false,
        })
        .unwrap();
    }
}

#[test]
fn log_replay_reproduces_aggregates_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let checks = AttentionCheck::bundled();
    let before = {
        let svc = StudyService::open(pool(), checks.clone(), config(20), dir.path()).unwrap();
        for (k, p) in ["p1", "p2", "p3", "p4", "p5"].iter().enumerate() {
            rate_all(&svc, p, 1, |i| ((i + k) % 7 + 1) as u8);
        }
        rate_all(&svc, "careless", 7, |_| 4);
        svc.aggregates()
    };
    assert!(!before.is_empty());
    let svc = StudyService::open(pool(), checks, config(20), dir.path()).unwrap();
    let after = svc.aggregates();
    let render = |v: &[_]| v.iter().map(to_line).collect::<String>();
    assert_eq!(render(&before), render(&after));
    assert!(matches!(svc.create_assignment("p1"), Err(StudyError::Conflict(_))));
    let log = std::fs::read_to_string(dir.path().join("judgments.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 6 * 22);
}

#[test]
fn failing_participant_contributes_nothing() {
    let svc = StudyService::new(pool(), AttentionCheck::bundled(), config(40)).unwrap();
    for p in ["a", "b", "c"] {
        rate_all(&svc, p, 2, |_| 2);
    }
    let baseline = svc.aggregates();
    rate_all(&svc, "bot", 7, |_| 7);
    let with_bot = svc.aggregates();
    assert_eq!(baseline, with_bot);
    assert!(with_bot.iter().all(|a| a.n == 3 && a.mean == 2.0 && !a.excluded));
}

#[test]
fn polarized_pair_is_excluded() {
    let mk = |p: &str, order, rating| JudgmentRecord {
        participant_id: p.into(),
        pair_id: "x".into(),
        presentation_order: order,
        rating,
        response_time_ms: 0,
        submitted_at: 0,
        is_attention_check: false,
    };
    let log = [
        mk("a", PresentationOrder::UnshiftedFirst, 1),
        mk("b", PresentationOrder::ShiftedFirst, 1),
        mk("c", PresentationOrder::UnshiftedFirst, 1),
        mk("d", PresentationOrder::ShiftedFirst, 1),
    ];
    let agg = aggregate(&log, &ExclusionConfig::default());
    assert_eq!(agg[0].mean, 4.0);
    assert!((agg[0].stddev - 12f64.sqrt()).abs() < 1e-12);
    assert!(agg[0].excluded);
}

#[test]
fn per_pair_cap_exhausts_the_pool() {
    let cfg = StudyConfig { max_assignments_per_pair: Some(1), ..config(20) };
    let svc = StudyService::new(pool(), AttentionCheck::bundled(), cfg).unwrap();
    svc.create_assignment("a").unwrap();
    svc.create_assignment("b").unwrap();
    assert!(matches!(svc.create_assignment("c"), Err(StudyError::Exhausted(_))));
}

#[test]
fn assignments_are_reproducible_per_participant() {
    let a = StudyService::new(pool(), AttentionCheck::bundled(), config(10)).unwrap();
    let b = StudyService::new(pool(), AttentionCheck::bundled(), config(10)).unwrap();
    let x = a.create_assignment_at("same", 0).unwrap();
    let y = b.create_assignment_at("same", 0).unwrap();
    assert_eq!(x, y);
}
