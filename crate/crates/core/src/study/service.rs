use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jsonl::{read_jsonl, to_line};
use crate::pair::SentencePair;

use super::{aggregate, AggregateJudgment, Assignment, AssignmentItem, ExclusionConfig, JudgmentRecord, PresentationOrder};

const BUNDLED_CHECKS: &str = include_str!("../../data/attention_checks.json");

pub const ASSIGNMENTS_FILE: &str = "assignments.jsonl";
pub const JUDGMENTS_FILE: &str = "judgments.jsonl";

/// A pair whose second sentence is grossly ungrammatical. Its `good`
/// sentence plays the unshifted role, so a passing recoded rating is low.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionCheck {
    pub id: String,
    pub good: String,
    pub bad: String,
}

impl AttentionCheck {
    pub fn bundled() -> Vec<AttentionCheck> {
        serde_json::from_str(BUNDLED_CHECKS).expect("bundled attention checks parse")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub items_per_assignment: usize,
    pub attention_checks: usize,
    pub seed: u64,
    /// Pairs issued this many times are no longer assigned; `None` lets the
    /// pool cycle indefinitely.
    pub max_assignments_per_pair: Option<u32>,
    pub exclusion: ExclusionConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            items_per_assignment: 25,
            attention_checks: 2,
            seed: 0,
            max_assignments_per_pair: None,
            exclusion: ExclusionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StudyError {
    #[error("invalid request: {0}")]
    Validation(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("pool exhausted: {0}")]
    Exhausted(String),
    #[error("storage error: {0}")]
    Storage(String),
}

struct Logs {
    assignments: File,
    judgments: File,
}

struct State {
    assignments: HashMap<String, Assignment>,
    coverage: Vec<u32>,
    judgments: Vec<JudgmentRecord>,
    judged: HashSet<(String, String)>,
    logs: Option<Logs>,
}

/// Study state: the pair pool, issued assignments and the judgment log.
/// All mutations go through one lock, which also serializes log writes.
pub struct StudyService {
    pool: Vec<SentencePair>,
    index: HashMap<String, usize>,
    checks: Vec<AttentionCheck>,
    config: StudyConfig,
    data_dir: Option<PathBuf>,
    state: Mutex<State>,
}

pub fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn storage<E: std::fmt::Display>(e: E) -> StudyError {
    StudyError::Storage(e.to_string())
}

fn open_append(path: &Path) -> Result<File, StudyError> {
    OpenOptions::new().create(true).append(true).open(path).map_err(storage)
}

impl StudyService {
    /// In-memory service (nothing persisted).
    pub fn new(pool: Vec<SentencePair>, checks: Vec<AttentionCheck>, config: StudyConfig) -> Result<Self, StudyError> {
        Self::build(pool, checks, config, None)
    }

    /// Service persisting to `data_dir`, replaying any existing logs there.
    pub fn open(
        pool: Vec<SentencePair>,
        checks: Vec<AttentionCheck>,
        config: StudyConfig,
        data_dir: impl Into<PathBuf>,
    ) -> Result<Self, StudyError> {
        Self::build(pool, checks, config, Some(data_dir.into()))
    }

    fn build(
        pool: Vec<SentencePair>,
        checks: Vec<AttentionCheck>,
        config: StudyConfig,
        data_dir: Option<PathBuf>,
    ) -> Result<Self, StudyError> {
        if checks.len() < config.attention_checks {
            return Err(StudyError::Validation(format!(
                "{} attention checks requested but the catalogue has {}",
                config.attention_checks,
                checks.len()
            )));
        }
        let mut index = HashMap::new();
        for (i, p) in pool.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(StudyError::Validation(format!("duplicate pair id {}", p.id)));
            }
        }
        let mut state = State {
            assignments: HashMap::new(),
            coverage: vec![0; pool.len()],
            judgments: Vec::new(),
            judged: HashSet::new(),
            logs: None,
        };
        if let Some(dir) = &data_dir {
            std::fs::create_dir_all(dir).map_err(storage)?;
            let (ap, jp) = (dir.join(ASSIGNMENTS_FILE), dir.join(JUDGMENTS_FILE));
            if ap.exists() {
                for a in read_jsonl::<Assignment>(&ap).map_err(storage)? {
                    for item in a.items.iter().filter(|i| !i.is_attention_check) {
                        if let Some(&ix) = index.get(&item.pair_id) {
                            state.coverage[ix] += 1;
                        }
                    }
                    state.assignments.insert(a.participant_id.clone(), a);
                }
            }
            if jp.exists() {
                for j in read_jsonl::<JudgmentRecord>(&jp).map_err(storage)? {
                    state.judged.insert((j.participant_id.clone(), j.pair_id.clone()));
                    state.judgments.push(j);
                }
            }
            state.logs = Some(Logs { assignments: open_append(&ap)?, judgments: open_append(&jp)? });
        }
        Ok(StudyService { pool, index, checks, config, data_dir, state: Mutex::new(state) })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    /// Per-pair seed for a participant, independent of request order.
    pub fn participant_seed(&self, participant_id: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.config.seed.to_le_bytes());
        h.update(participant_id.as_bytes());
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    pub fn create_assignment(&self, participant_id: &str) -> Result<Assignment, StudyError> {
        self.create_assignment_at(participant_id, now_millis())
    }

    pub fn create_assignment_at(&self, participant_id: &str, issued_at: u64) -> Result<Assignment, StudyError> {
        let participant_id = participant_id.trim();
        if participant_id.is_empty() {
            return Err(StudyError::Validation("participant id is empty".into()));
        }
        let mut st = self.state.lock().expect("study state lock");
        if st.assignments.contains_key(participant_id) {
            return Err(StudyError::Conflict(format!("participant {participant_id} already has an assignment")));
        }
        let need = self.config.items_per_assignment;
        let mut open: Vec<usize> = (0..self.pool.len())
            .filter(|&i| self.config.max_assignments_per_pair.is_none_or(|cap| st.coverage[i] < cap))
            .collect();
        if open.len() < need {
            return Err(StudyError::Exhausted(format!("{} assignable pairs, {need} needed", open.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.participant_seed(participant_id));
        open.shuffle(&mut rng);
        open.sort_by_key(|&i| st.coverage[i]);
        let chosen = &open[..need];

        let order = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.5) {
                PresentationOrder::ShiftedFirst
            } else {
                PresentationOrder::UnshiftedFirst
            }
        };
        let mut items: Vec<AssignmentItem> = chosen
            .iter()
            .map(|&i| {
                let p = &self.pool[i];
                let o = order(&mut rng);
                let (a, b) = match o {
                    PresentationOrder::UnshiftedFirst => (&p.unshifted, &p.shifted),
                    PresentationOrder::ShiftedFirst => (&p.shifted, &p.unshifted),
                };
                AssignmentItem {
                    pair_id: p.id.clone(),
                    presentation_order: o,
                    is_attention_check: false,
                    sentence_a: a.clone(),
                    sentence_b: b.clone(),
                }
            })
            .collect();
        let picks = rand::seq::index::sample(&mut rng, self.checks.len(), self.config.attention_checks);
        for ci in picks.iter() {
            let c = &self.checks[ci];
            let o = order(&mut rng);
            let (a, b) = match o {
                PresentationOrder::UnshiftedFirst => (&c.good, &c.bad),
                PresentationOrder::ShiftedFirst => (&c.bad, &c.good),
            };
            let at = rng.random_range(0..=items.len());
            items.insert(
                at,
                AssignmentItem {
                    pair_id: c.id.clone(),
                    presentation_order: o,
                    is_attention_check: true,
                    sentence_a: a.clone(),
                    sentence_b: b.clone(),
                },
            );
        }
        let assignment = Assignment { participant_id: participant_id.to_string(), items, issued_at };
        if let Some(logs) = &mut st.logs {
            logs.assignments
                .write_all(to_line(&assignment).as_bytes())
                .and_then(|_| logs.assignments.flush())
                .map_err(storage)?;
        }
        for &i in chosen {
            st.coverage[i] += 1;
        }
        st.assignments.insert(assignment.participant_id.clone(), assignment.clone());
        Ok(assignment)
    }

    pub fn assignment(&self, participant_id: &str) -> Option<Assignment> {
        self.state.lock().expect("study state lock").assignments.get(participant_id).cloned()
    }

    /// Validates and appends one judgment; returns the stored record.
    pub fn submit_judgment(&self, mut record: JudgmentRecord) -> Result<JudgmentRecord, StudyError> {
        if !(1..=7).contains(&record.rating) {
            return Err(StudyError::Validation(format!("rating {} outside 1..=7", record.rating)));
        }
        let mut st = self.state.lock().expect("study state lock");
        let assignment = st
            .assignments
            .get(&record.participant_id)
            .ok_or_else(|| StudyError::NotFound(format!("no assignment for participant {}", record.participant_id)))?;
        let item = assignment.item(&record.pair_id).ok_or_else(|| {
            StudyError::NotFound(format!("pair {} is not in the assignment of {}", record.pair_id, record.participant_id))
        })?;
        if item.presentation_order != record.presentation_order {
            return Err(StudyError::Validation(format!(
                "presentation order for {} does not match the assignment",
                record.pair_id
            )));
        }
        record.is_attention_check = item.is_attention_check;
        let key = (record.participant_id.clone(), record.pair_id.clone());
        if st.judged.contains(&key) {
            return Err(StudyError::Conflict(format!(
                "participant {} already rated {}",
                record.participant_id, record.pair_id
            )));
        }
        if record.submitted_at == 0 {
            record.submitted_at = now_millis();
        }
        if let Some(logs) = &mut st.logs {
            logs.judgments
                .write_all(to_line(&record).as_bytes())
                .and_then(|_| logs.judgments.flush())
                .map_err(storage)?;
        }
        st.judged.insert(key);
        st.judgments.push(record.clone());
        Ok(record)
    }

    /// Snapshot of the judgment log.
    pub fn judgments(&self) -> Vec<JudgmentRecord> {
        self.state.lock().expect("study state lock").judgments.clone()
    }

    pub fn aggregates(&self) -> Vec<AggregateJudgment> {
        aggregate(&self.judgments(), &self.config.exclusion)
    }

    /// Issued-assignment count per pool pair id.
    pub fn coverage(&self) -> BTreeMap<String, u32> {
        let st = self.state.lock().expect("study state lock");
        self.index.iter().map(|(id, &i)| (id.clone(), st.coverage[i])).collect()
    }
}
