use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use shiftbench_core::analysis::{
    ablate, correlate_human, curves_tsv, join_records, log_grid, metric_curve, AblationTable, AnalysisRecord,
    DesignOptions, FitOptions, LambdaSelection,
};
use shiftbench_core::generator::{dataset_census, expand, GenerationPlan, Lexicon};
use shiftbench_core::jsonl::{read_jsonl, write_jsonl};
use shiftbench_core::scoring::{PreferenceRecord, Tokenizer};
use shiftbench_core::study::AggregateJudgment;
use shiftbench_core::treebank::{mine_with, parse_treebank, QualityFilter};
use shiftbench_core::weights::{annotate, Metric};
use shiftbench_core::{SentencePair, ShiftType};

use crate::backend::{score_all, tokenizer, BackendArgs, TokenizerKind};
use crate::manifest::{sidecar, Manifest};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Shift types named on the command line as `hnps,pm` or `all`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shifts(pub Vec<ShiftType>);

impl Serialize for Shifts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|t| t.code()))
    }
}

/// Comma-separated predictor names, order kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics(pub Vec<Metric>);

impl Serialize for Metrics {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|m| m.name()))
    }
}

pub fn parse_shifts(s: &str) -> Result<Shifts, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Shifts(ShiftType::ALL.to_vec()));
    }
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        out.insert(part.parse::<ShiftType>().map_err(|e| e.to_string())?);
    }
    if out.is_empty() {
        return Err("no shift types given".into());
    }
    Ok(Shifts(out.into_iter().collect()))
}

pub fn parse_metrics(s: &str) -> Result<Metrics, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m: Metric = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("no predictors given".into());
    }
    Ok(Metrics(out))
}

/// `MIN,MAX,POINTS`, log-spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

pub fn parse_grid(s: &str) -> Result<LambdaGrid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, n] = parts[..] else { return Err(format!("expected MIN,MAX,POINTS, got {s:?}")) };
    let min: f64 = lo.parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let max: f64 = hi.parse().map_err(|e| format!("{hi:?}: {e}"))?;
    let points: usize = n.parse().map_err(|e| format!("{n:?}: {e}"))?;
    if !(min > 0.0 && max >= min && points >= 1) {
        return Err("grid needs 0 < MIN <= MAX and at least one point".into());
    }
    Ok(LambdaGrid { min, max, points })
}

/// Usage-level failure: reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(UsageError(format!("input not found: {}", p.display())).into());
        }
    }
    Ok(())
}

fn finish_file(mut manifest: Manifest, out: &Path) -> Result<()> {
    manifest.output(out)?;
    manifest.write(&sidecar(out))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    /// `default` for the bundled lexicon, or a lexicon JSON file.
    #[arg(long, default_value = "default")]
    pub lexicon: String,
    #[arg(long, default_value = "all", value_parser = parse_shifts)]
    pub shift: Shifts,
    /// Cap on modifier levels; the full lexicon range when omitted.
    #[arg(long)]
    pub max_level: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    let lexicon_path = (args.lexicon != "default").then(|| PathBuf::from(&args.lexicon));
    require_inputs(lexicon_path.as_deref())?;
    let lex = match &lexicon_path {
        Some(p) => Lexicon::from_path(p)?,
        None => Lexicon::bundled(),
    };
    let mut pairs = Vec::new();
    for &s in &args.shift.0 {
        let mut plan = GenerationPlan::full(&lex, s)?;
        if let Some(cap) = args.max_level {
            for l in &mut plan.max_level {
                *l = (*l).min(cap);
            }
        }
        pairs.extend(expand(&lex, &plan)?);
    }
    write_jsonl(&args.out, &pairs)?;
    let census = dataset_census(&pairs);
    eprintln!("generated {} pairs", census.total());
    let mut m = Manifest::new("generate", None, args)?;
    if let Some(p) = &lexicon_path {
        m.input(p)?;
    }
    m.summary = serde_json::to_value(&census)?;
    finish_file(m, &args.out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MineArgs {
    /// Bracketed treebank file; repeat for several files.
    #[arg(long, required = true)]
    pub treebank: Vec<PathBuf>,
    #[arg(long, default_value = "all", value_parser = parse_shifts)]
    pub shift: Shifts,
    /// Pairs sampled per shift type.
    #[arg(long, default_value_t = 500)]
    pub sample_size: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 25)]
    pub max_words: usize,
    /// File of allowed verb lemmas, one per line.
    #[arg(long)]
    pub verbs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn mine(args: &MineArgs) -> Result<()> {
    require_inputs(args.treebank.iter().map(PathBuf::as_path).chain(args.verbs.as_deref()))?;
    let mut trees = Vec::new();
    for p in &args.treebank {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        trees.extend(parse_treebank(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    let verb_allowlist = match &args.verbs {
        Some(p) => Some(
            fs::read_to_string(p)?
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        ),
        None => None,
    };
    let filter = QualityFilter { max_constituent_words: args.max_words, verb_allowlist };
    let mut pairs = Vec::new();
    for &s in &args.shift.0 {
        pairs.extend(mine_with(&trees, s, args.sample_size, args.seed, &filter));
    }
    write_jsonl(&args.out, &pairs)?;
    let census = dataset_census(&pairs);
    eprintln!("mined {} pairs from {} trees", census.total(), trees.len());
    let mut m = Manifest::new("mine", Some(args.seed), args)?;
    for p in args.treebank.iter().chain(&args.verbs) {
        m.input(p)?;
    }
    m.summary = json!({ "trees": trees.len(), "per_shift": census.per_shift });
    finish_file(m, &args.out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WeighArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// Tokenizer for the token-count measure.
    #[arg(long, value_enum, default_value = "whitespace")]
    pub tokenizer: TokenizerKind,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn weigh(args: &WeighArgs) -> Result<()> {
    let mut inputs = vec![args.pairs.as_path()];
    if args.tokenizer == TokenizerKind::Replay {
        inputs.extend(args.backend.fixture.as_deref());
    }
    require_inputs(inputs)?;
    let pairs: Vec<SentencePair> = read_jsonl(&args.pairs)?;
    let tok = tokenizer(args.tokenizer, &args.backend)?;
    let toks: Vec<&dyn Tokenizer> = tok.as_deref().into_iter().collect();
    let weighed = pairs
        .iter()
        .map(|p| annotate(p, &toks).with_context(|| format!("weighing pair {}", p.id)))
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(&args.out, &weighed)?;
    let mut m = Manifest::new("weigh", None, args)?;
    m.input(&args.pairs)?;
    if args.tokenizer == TokenizerKind::Replay {
        if let Some(f) = &args.backend.fixture {
            m.input(f)?;
        }
    }
    m.summary = json!({ "pairs": weighed.len(), "tokenizer": tok.map(|t| t.tokenizer_id()) });
    finish_file(m, &args.out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn score(args: &ScoreArgs) -> Result<()> {
    require_inputs(std::iter::once(args.pairs.as_path()).chain(args.backend.inputs()))?;
    let pairs: Vec<SentencePair> = read_jsonl(&args.pairs)?;
    let backend = args.backend.build()?;
    let prefs = score_all(backend.as_ref(), &pairs, args.backend.workers())?;
    write_jsonl(&args.out, &prefs)?;
    eprintln!("scored {} pairs with {}", prefs.len(), backend.backend_id());
    let mut m = Manifest::new("score", None, args)?;
    m.input(&args.pairs)?;
    for p in args.backend.inputs() {
        m.input(p)?;
    }
    m.summary = json!({ "pairs": prefs.len(), "backend_id": backend.backend_id() });
    finish_file(m, &args.out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Preference records; several backends may be mixed in one file.
    #[arg(long)]
    pub prefs: PathBuf,
    /// Weighed pairs.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "token,word,syllable,modifier", value_parser = parse_metrics)]
    pub predictors: Metrics,
    #[arg(long, default_value_t = 10)]
    pub basis_size: usize,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, default_value = "1e-4,1e4,12", value_parser = parse_grid)]
    pub lambda_grid: LambdaGrid,
    /// Predictor carrying a per-verb random slope; `none` disables it.
    #[arg(long, default_value = "word")]
    pub random_slope: String,
    #[arg(long)]
    pub no_random_effects: bool,
    /// Tokenizer id whose token ratio is used, when pairs carry several.
    #[arg(long)]
    pub tokenizer: Option<String>,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    require_inputs([args.prefs.as_path(), args.pairs.as_path()])?;
    let random_slope = match args.random_slope.as_str() {
        "none" => None,
        s => Some(s.parse::<Metric>().map_err(UsageError)?),
    };
    if args.predictors.0.len() < 2 {
        return Err(UsageError("ablation needs at least two predictors".into()).into());
    }
    let prefs: Vec<PreferenceRecord> = read_jsonl(&args.prefs)?;
    let pairs: Vec<SentencePair> = read_jsonl(&args.pairs)?;
    let shift_of: HashMap<&str, ShiftType> = pairs.iter().map(|p| (p.id.as_str(), p.shift_type)).collect();

    let mut by_backend: BTreeMap<&str, Vec<PreferenceRecord>> = BTreeMap::new();
    for r in &prefs {
        by_backend.entry(r.backend_id.as_str()).or_default().push(r.clone());
    }
    let design = DesignOptions {
        predictors: args.predictors.0.clone(),
        basis_size: args.basis_size,
        random_slope: random_slope.filter(|m| args.predictors.0.contains(m)),
        random_effects: !args.no_random_effects,
    };
    let grid = log_grid(args.lambda_grid.min, args.lambda_grid.max, args.lambda_grid.points);
    let fit = FitOptions { selection: LambdaSelection::Gcv { grid, max_sweeps: 10 }, ..Default::default() };

    let mut rows = Vec::new();
    let mut curves = String::new();
    for (backend, recs) in &by_backend {
        let records = join_records(recs, &pairs, args.tokenizer.as_deref())?;
        let mut per_shift: BTreeMap<ShiftType, Vec<AnalysisRecord>> = BTreeMap::new();
        for r in &records {
            let s = shift_of[r.pair_id.as_str()];
            per_shift.entry(s).or_default().push(r.clone());
        }
        for (s, group) in &per_shift {
            rows.push(ablate(format!("{backend}:{}", s.code()), group, &design, &fit)?);
        }
        if per_shift.len() > 1 {
            rows.push(ablate(format!("{backend}:all"), &records, &design, &fit)?);
        }
        let per_metric: Vec<_> = args
            .predictors
            .0
            .iter()
            .filter(|m| records.iter().all(|r| r.predictors.contains_key(m)))
            .map(|&m| (m, metric_curve(&records, m, args.bins)))
            .collect();
        let tsv = curves_tsv(&per_metric);
        let mut lines = tsv.lines();
        if curves.is_empty() {
            curves.push_str(&format!("backend\t{}\n", lines.next().unwrap_or_default()));
        } else {
            lines.next();
        }
        for l in lines {
            curves.push_str(&format!("{backend}\t{l}\n"));
        }
    }
    if curves.is_empty() {
        curves.push_str("backend\tmetric\tbin_lo\tbin_hi\tcenter\tmean\tcount\tstderr\n");
    }
    let table = AblationTable { predictors: args.predictors.0.clone(), rows };

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let outputs = [
        (args.out.join("ablation.tsv"), table.to_tsv()),
        (args.out.join("ablation.json"), serde_json::to_string_pretty(&table)? + "\n"),
        (args.out.join("curves.tsv"), curves),
    ];
    let mut m = Manifest::new("analyze", None, args)?;
    m.input(&args.prefs)?;
    m.input(&args.pairs)?;
    for (path, text) in &outputs {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        m.output(path)?;
    }
    let failed = table
        .rows
        .iter()
        .flat_map(|r| std::iter::once(&r.full).chain(r.dropped.iter().map(|(_, c)| c)))
        .filter(|c| c.adj().is_none())
        .count();
    if failed > 0 {
        eprintln!("warning: {failed} model fits failed; see ablation.json");
    }
    m.summary = json!({ "backends": by_backend.keys().collect::<Vec<_>>(), "rows": table.rows.len(), "failed_fits": failed });
    m.write(&args.out.join("manifest.json"))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub prefs: PathBuf,
    /// Aggregated judgments, as a JSON array or JSON Lines.
    #[arg(long)]
    pub aggregates: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_aggregates(path: &Path) -> Result<Vec<AggregateJudgment>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    Ok(read_jsonl(path)?)
}

pub fn correlate(args: &CorrelateArgs) -> Result<()> {
    require_inputs([args.prefs.as_path(), args.aggregates.as_path()])?;
    let prefs: Vec<PreferenceRecord> = read_jsonl(&args.prefs)?;
    let human = read_aggregates(&args.aggregates)?;
    let mut by_backend: BTreeMap<&str, Vec<PreferenceRecord>> = BTreeMap::new();
    for r in &prefs {
        by_backend.entry(r.backend_id.as_str()).or_default().push(r.clone());
    }
    let mut tsv = String::from("backend\tn\trho\tabs_rho\n");
    for (backend, recs) in &by_backend {
        match correlate_human(recs, &human) {
            Ok(c) => tsv.push_str(&format!("{backend}\t{}\t{:.6}\t{:.6}\n", c.n, c.rho, c.rho.abs())),
            Err(e) => {
                eprintln!("warning: {backend}: {e}");
                tsv.push_str(&format!("{backend}\t0\tNA\tNA\n"));
            }
        }
    }
    if by_backend.is_empty() {
        bail!("no preference records in {}", args.prefs.display());
    }
    fs::write(&args.out, &tsv).with_context(|| format!("writing {}", args.out.display()))?;
    let mut m = Manifest::new("correlate", None, args)?;
    m.input(&args.prefs)?;
    m.input(&args.aggregates)?;
    finish_file(m, &args.out)
}
