use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use shiftbench_core::scoring::{
    preference, train_ngram, HttpBackend, HttpConfig, PreferenceRecord, ReplayBackend, ScoringBackend, Tokenizer,
    UniformBackend, WhitespaceTokenizer,
};
use shiftbench_core::SentencePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Ngram,
    Http,
    Replay,
    Uniform,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "ngram")]
    pub backend: BackendKind,
    /// Training corpus for the n-gram backend, one sentence per line.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Defaults to $SHIFTBENCH_LM_URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Recorded log probabilities for the replay backend.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Append-only log-probability cache for the HTTP backend.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long, default_value_t = 50_000)]
    pub vocab_size: usize,
}

impl BackendArgs {
    /// Files the chosen backend reads, for existence checks and manifests.
    pub fn inputs(&self) -> Vec<&Path> {
        match self.backend {
            BackendKind::Ngram => self.train.as_deref().into_iter().collect(),
            BackendKind::Replay => self.fixture.as_deref().into_iter().collect(),
            BackendKind::Http | BackendKind::Uniform => Vec::new(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn ScoringBackend>> {
        Ok(match self.backend {
            BackendKind::Ngram => {
                let Some(path) = &self.train else { bail!("--backend ngram needs --train") };
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let corpus: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
                Box::new(train_ngram(&corpus, self.order, self.delta)?)
            }
            BackendKind::Http => {
                let mut cfg = HttpConfig::from_env(self.endpoint.clone())?;
                cfg.max_in_flight = self.max_in_flight.max(1);
                cfg.cache_path = self.cache.clone();
                Box::new(HttpBackend::new(cfg)?)
            }
            BackendKind::Replay => {
                let Some(path) = &self.fixture else { bail!("--backend replay needs --fixture") };
                Box::new(ReplayBackend::from_path(path)?)
            }
            BackendKind::Uniform => Box::new(UniformBackend { vocab_size: self.vocab_size }),
        })
    }

    /// Worker threads used for scoring; remote backends are bounded by
    /// their in-flight limit, local ones by the machine.
    pub fn workers(&self) -> usize {
        match self.backend {
            BackendKind::Http => self.max_in_flight.max(1),
            _ => std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    Whitespace,
    Http,
    Replay,
    None,
}

/// Builds the tokenizer used for the token-count weight measure.
pub fn tokenizer(kind: TokenizerKind, backend: &BackendArgs) -> Result<Option<Box<dyn Tokenizer>>> {
    Ok(match kind {
        TokenizerKind::None => None,
        TokenizerKind::Whitespace => Some(Box::new(WhitespaceTokenizer)),
        TokenizerKind::Http | TokenizerKind::Replay => {
            let b = BackendArgs {
                backend: if kind == TokenizerKind::Http { BackendKind::Http } else { BackendKind::Replay },
                ..backend.clone()
            };
            let built: Box<dyn ScoringBackend> = b.build()?;
            Some(Box::new(AsTokenizer(built)))
        }
    })
}

struct AsTokenizer(Box<dyn ScoringBackend>);

impl Tokenizer for AsTokenizer {
    fn tokenizer_id(&self) -> String {
        self.0.tokenizer_id()
    }

    fn count_tokens(&self, constituent: &str) -> Result<usize, shiftbench_core::scoring::ScoringError> {
        self.0.count_tokens(constituent)
    }
}

/// Scores every pair on `workers` threads. Output order follows `pairs`;
/// the first failure (in pair order) aborts the run.
pub fn score_all(backend: &dyn ScoringBackend, pairs: &[SentencePair], workers: usize) -> Result<Vec<PreferenceRecord>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<PreferenceRecord, String>>>> = Mutex::new(vec![None; pairs.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, pairs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = pairs.get(i) else { break };
                let r = preference(backend, p).map_err(|e| e.to_string());
                let failed = r.is_err();
                slots.lock().expect("score slots")[i] = Some(r);
                if failed {
                    // stop handing out new work; in-flight pairs finish
                    next.store(pairs.len(), Ordering::Relaxed);
                    break;
                }
            });
        }
    });
    let mut out = Vec::with_capacity(pairs.len());
    for (p, slot) in pairs.iter().zip(slots.into_inner().expect("score slots")) {
        match slot {
            Some(Ok(r)) => out.push(r),
            Some(Err(e)) => bail!("scoring pair {}: {e}", p.id),
            None => bail!("scoring stopped before pair {}", p.id),
        }
    }
    Ok(out)
}
