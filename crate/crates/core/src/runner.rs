//! Campaign runner: expands a plan into the (item, mode, rate, trial)
//! grid, masks and prompts each cell once, drives the completer with
//! bounded parallelism, parses responses, and appends every finished trial
//! to a resumable JSONL log.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Mutex};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::Tagger;
use crate::corpus::{Corpus, EvidenceMode, SourceTag};
use crate::llm::{
    AnswerKey, ClientError, Completer, CompletionRequest, EndpointConfig, HttpClient, MockOracle,
    OracleHint, OracleKind,
};
use crate::masking::meta::MetaGenerator;
use crate::masking::{mask_calc_task, mask_qa_item, ExclusionRules, MaskMode, MaskingError};
use crate::metrics::canonical_variable;
use crate::prompting::{build_mskcal_prompt, build_mskqa_prompt, PromptError};
use crate::seed;

fn default_rates() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8, 1.0]
}
fn default_modes() -> Vec<MaskMode> {
    MaskMode::ALL.to_vec()
}
fn default_trials() -> usize {
    1
}

/// Everything a campaign needs beyond the corpus: the grid, the seed, and
/// the completion backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunPlan {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Masking rates to probe; the unmasked baseline is always added.
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: Vec<MaskMode>,
    /// Trials per grid cell.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Text setting for arithmetic items; defaults to the rationale with
    /// the question's numbers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_mode: Option<EvidenceMode>,
    /// Keep the derivation tails of calculation tasks unmasked.
    #[serde(default)]
    pub restricted: bool,
    /// Deterministic offline backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleKind>,
    /// HTTP backend; used when no oracle is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
}

impl RunPlan {
    pub fn from_toml_path(path: &Path) -> Result<RunPlan, RunnerError> {
        let text = std::fs::read_to_string(path)?;
        let plan: RunPlan = toml::from_str(&text).map_err(|e| RunnerError::Plan {
            message: format!("{}: {e}", path.display()),
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let fail = |message: String| Err(RunnerError::Plan { message });
        if self.trials == 0 {
            return fail("trials must be at least 1".to_string());
        }
        if self.modes.is_empty() {
            return fail("at least one masking mode is required".to_string());
        }
        for &rate in &self.rates {
            if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
                return fail(format!("rate {rate} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// The probed rates with the baseline prepended, deduplicated on the
    /// rate key and sorted.
    pub fn rate_grid(&self) -> Vec<f64> {
        let mut keys: Vec<u32> = std::iter::once(0)
            .chain(self.rates.iter().map(|&r| rate_key(r)))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter().map(rate_of_key).collect()
    }

    /// The backend the plan asks for; a configured oracle wins over an
    /// endpoint.
    pub fn build_completer(&self) -> Result<Box<dyn Completer>, RunnerError> {
        if let Some(kind) = self.oracle {
            return Ok(Box::new(MockOracle::new(kind)));
        }
        if let Some(config) = &self.endpoint {
            return Ok(Box::new(HttpClient::new(config.clone())?));
        }
        Err(RunnerError::Plan {
            message: "plan needs either an oracle or an endpoint".to_string(),
        })
    }
}

/// Fixed-point masking rate used for grid identity: rate times ten
/// thousand, rounded.
pub fn rate_key(rate: f64) -> u32 {
    (rate * 10_000.0).round() as u32
}

/// Inverse of [`rate_key`].
pub fn rate_of_key(key: u32) -> f64 {
    key as f64 / 10_000.0
}

/// What a response parsed into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedAnswer {
    /// One-based option number.
    Choice { answer: usize },
    /// Canonical variable name to answered value.
    Quantities { values: BTreeMap<String, f64> },
    /// Nothing usable came back.
    Missing,
}

/// One finished trial, as appended to the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_tag: Option<SourceTag>,
    pub mode: MaskMode,
    pub rate_key: u32,
    pub trial: usize,
    pub masked_count: usize,
    pub maskable_count: usize,
    pub answer: ParsedAnswer,
    /// Whether a choice answer matched; absent for calculation trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn rate(&self) -> f64 {
        rate_of_key(self.rate_key)
    }

    fn grid_key(&self) -> (String, MaskMode, u32, usize) {
        (self.item_id.clone(), self.mode, self.rate_key, self.trial)
    }
}

/// Read a run log, tolerating a truncated final line (an interrupted
/// append); damage anywhere else is an error.
pub fn load_trial_log(path: &Path) -> Result<Vec<TrialRecord>, RunnerError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(std::fs::File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let last_content = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut records = Vec::new();
    for (idx, line) in lines.iter().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(trimmed) {
            Ok(record) => records.push(record),
            Err(_) if Some(idx) == last_content => {
                // the writer died mid-line; the trial will simply rerun
                break;
            }
            Err(e) => {
                return Err(RunnerError::Log {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(records)
}

/// Parse a multiple-choice response: the first JSON object carrying a
/// usable `answer` wins, with a plain `answer: N` scan as fallback. Out of
/// range or absent numbers are a missing answer.
pub fn parse_mskqa_response(text: &str, n_options: usize) -> ParsedAnswer {
    let usable = |k: usize| (1..=n_options).contains(&k);
    for object in crate::llm::extract_json_objects(text) {
        let Some(value) = object.get("answer") else {
            continue;
        };
        let parsed = value
            .as_u64()
            .map(|v| v as usize)
            .or_else(|| value.as_str().and_then(|s| s.trim().parse::<usize>().ok()))
            .or_else(|| {
                value
                    .as_f64()
                    .filter(|f| f.fract() == 0.0 && *f >= 0.0)
                    .map(|f| f as usize)
            });
        if let Some(answer) = parsed {
            if usable(answer) {
                return ParsedAnswer::Choice { answer };
            }
        }
    }
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r#"(?i)["']?answer["']?\s*[:=]\s*["']?(\d+)"#).expect("answer regex")
    });
    if let Some(caps) = re.captures(text) {
        if let Ok(answer) = caps[1].parse::<usize>() {
            if usable(answer) {
                return ParsedAnswer::Choice { answer };
            }
        }
    }
    ParsedAnswer::Missing
}

/// Parse a quantity expressed as text: commas and currency words are
/// ignored, scale words multiply (`"1,980.00 million yen"` is 1.98e9).
pub fn parse_quantity(text: &str) -> Option<f64> {
    static NUMBER: OnceLock<Regex> = OnceLock::new();
    let number_re = NUMBER.get_or_init(|| {
        Regex::new(r"[-+]?\d[\d,]*(?:\.\d+)?(?:[eE][-+]?\d+)?").expect("number regex")
    });
    let found = number_re.find(text)?;
    let cleaned: String = found.as_str().chars().filter(|c| *c != ',').collect();
    let mut value: f64 = cleaned.parse().ok()?;

    static SCALE: OnceLock<Regex> = OnceLock::new();
    let scale_re = SCALE.get_or_init(|| {
        Regex::new(r"(?i)^\s*(thousand|million|billion|trillion)\b").expect("scale regex")
    });
    if let Some(caps) = scale_re.captures(&text[found.end()..]) {
        value *= match caps[1].to_ascii_lowercase().as_str() {
            "thousand" => 1e3,
            "million" => 1e6,
            "billion" => 1e9,
            _ => 1e12,
        };
    }
    value.is_finite().then_some(value)
}

/// Parse a calculation response: gather every recognizable variable from
/// any JSON object in the text, however nested, accepting numbers or
/// quantity strings. No variable at all is a missing answer.
pub fn parse_mskcal_response(text: &str) -> ParsedAnswer {
    let mut values = BTreeMap::new();
    for object in crate::llm::extract_json_objects(text) {
        collect_quantities(&object, &mut values);
    }
    if values.is_empty() {
        ParsedAnswer::Missing
    } else {
        ParsedAnswer::Quantities { values }
    }
}

fn collect_quantities(value: &serde_json::Value, out: &mut BTreeMap<String, f64>) {
    let Some(map) = value.as_object() else { return };
    for (key, entry) in map {
        if let Some(name) = canonical_variable(key) {
            let parsed = entry
                .as_f64()
                .or_else(|| entry.as_str().and_then(parse_quantity));
            if let Some(v) = parsed {
                if v.is_finite() {
                    out.entry(name.to_string()).or_insert(v);
                    continue;
                }
            }
        }
        collect_quantities(entry, out);
    }
}

struct Pending {
    skeleton: TrialRecord,
    key: AnswerKey,
}

/// Run (or resume) a campaign: every grid cell is masked and prompted
/// once, each pending trial is completed, parsed, and appended to
/// `log_path` as soon as it finishes. Returns all records, resumed ones
/// included, in grid order. An authentication failure aborts the run;
/// other per-trial failures are recorded as missing answers.
pub fn run_campaign(
    plan: &RunPlan,
    corpus: &Corpus,
    completer: &dyn Completer,
    tagger: &dyn Tagger,
    generator: &dyn MetaGenerator,
    log_path: Option<&Path>,
) -> Result<Vec<TrialRecord>, RunnerError> {
    plan.validate()?;
    let mut records = match log_path {
        Some(path) => load_trial_log(path)?,
        None => Vec::new(),
    };
    let done: HashSet<_> = records.iter().map(TrialRecord::grid_key).collect();

    // Expand the grid into pending prompts. Masking happens once per
    // (item, mode, rate); trials share the bytes.
    let mut requests = VecDeque::new();
    let mut pending = Vec::new();
    let grid = plan.rate_grid();
    let mut push_jobs = |item_id: &str,
                         source_tag: Option<SourceTag>,
                         mode: MaskMode,
                         rate: f64,
                         prompt: &str,
                         key: &AnswerKey,
                         masked_count: usize,
                         maskable_count: usize| {
        let rk = rate_key(rate);
        for trial in 0..plan.trials {
            if done.contains(&(item_id.to_string(), mode, rk, trial)) {
                continue;
            }
            let tag = format!("{item_id}/{mode}/{rk}/{trial}");
            let draw_seed = seed::derive(
                plan.seed,
                &["draw", item_id, mode.as_str(), &rk.to_string(), &trial.to_string()],
            );
            let index = pending.len();
            requests.push_back((
                index,
                CompletionRequest {
                    prompt: prompt.to_string(),
                    tag,
                    oracle_hint: Some(OracleHint {
                        key: key.clone(),
                        draw_seed,
                    }),
                },
            ));
            pending.push(Some(Pending {
                skeleton: TrialRecord {
                    item_id: item_id.to_string(),
                    source_tag,
                    mode,
                    rate_key: rk,
                    trial,
                    masked_count,
                    maskable_count,
                    answer: ParsedAnswer::Missing,
                    correct: None,
                    response: None,
                    error: None,
                },
                key: key.clone(),
            }));
        }
    };

    match corpus {
        Corpus::Qa(items) => {
            for item in items {
                let mask_seed = seed::derive(plan.seed, &[&item.id]);
                let evidence_mode = (item.source_tag == SourceTag::Aqa)
                    .then(|| plan.evidence_mode.unwrap_or(EvidenceMode::Case1));
                for &mode in &plan.modes {
                    for &rate in &grid {
                        if (0..plan.trials).all(|trial| {
                            done.contains(&(item.id.clone(), mode, rate_key(rate), trial))
                        }) {
                            continue;
                        }
                        let masked = mask_qa_item(
                            item,
                            evidence_mode,
                            mode,
                            rate,
                            mask_seed,
                            &ExclusionRules::none(),
                            tagger,
                            generator,
                        )?;
                        let bundle = build_mskqa_prompt(&masked, item)?;
                        push_jobs(
                            &item.id,
                            Some(item.source_tag),
                            mode,
                            rate,
                            &bundle.prompt,
                            &bundle.key,
                            bundle.masked_count,
                            bundle.maskable_count,
                        );
                    }
                }
            }
        }
        Corpus::Calc(tasks) => {
            for task in tasks {
                let mask_seed = seed::derive(plan.seed, &[&task.id]);
                for &mode in &plan.modes {
                    for &rate in &grid {
                        if (0..plan.trials).all(|trial| {
                            done.contains(&(task.id.clone(), mode, rate_key(rate), trial))
                        }) {
                            continue;
                        }
                        let masked = mask_calc_task(
                            task,
                            mode,
                            rate,
                            mask_seed,
                            plan.restricted,
                            tagger,
                            generator,
                        )?;
                        let bundle = build_mskcal_prompt(&masked, task)?;
                        push_jobs(
                            &task.id,
                            None,
                            mode,
                            rate,
                            &bundle.prompt,
                            &bundle.key,
                            bundle.masked_count,
                            bundle.maskable_count,
                        );
                    }
                }
            }
        }
    }

    let mut log_file = match log_path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            Some(OpenOptions::new().create(true).append(true).open(path)?)
        }
        None => None,
    };

    // Drive the completer from a bounded worker pool; the main thread owns
    // parsing and the log.
    let queue = Mutex::new(requests);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<String, ClientError>)>();
    let workers = completer
        .max_parallel()
        .clamp(1, pending.len().max(1));
    let mut fatal: Option<ClientError> = None;

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let queue = &queue;
            let stop = &stop;
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let next = queue.lock().expect("queue lock").pop_front();
                let Some((index, request)) = next else { break };
                let result = completer.complete(&request);
                if matches!(result, Err(ClientError::Auth { .. })) {
                    stop.store(true, Ordering::Relaxed);
                }
                if tx.send((index, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        for (index, result) in rx {
            let Some(Pending { mut skeleton, key }) = pending[index].take() else {
                continue;
            };
            match result {
                Ok(response) => {
                    match &key {
                        AnswerKey::Choice { answer, n_options } => {
                            skeleton.answer = parse_mskqa_response(&response, *n_options);
                            skeleton.correct = Some(matches!(
                                skeleton.answer,
                                ParsedAnswer::Choice { answer: a } if a == *answer
                            ));
                        }
                        AnswerKey::Quantities(_) => {
                            skeleton.answer = parse_mskcal_response(&response);
                        }
                    }
                    skeleton.response = Some(response);
                }
                Err(error @ ClientError::Auth { .. }) => {
                    // abort: leave the trial unlogged so a fixed key resumes it
                    if fatal.is_none() {
                        fatal = Some(error);
                    }
                    continue;
                }
                Err(error) => {
                    skeleton.error = Some(error.to_string());
                    if let AnswerKey::Choice { .. } = key {
                        skeleton.correct = Some(false);
                    }
                }
            }
            if let Some(file) = &mut log_file {
                let line = serde_json::to_string(&skeleton).expect("record serializes");
                writeln!(file, "{line}")?;
                file.flush()?;
            }
            records.push(skeleton);
        }
        Ok::<(), std::io::Error>(())
    })?;

    if let Some(error) = fatal {
        return Err(RunnerError::Client(error));
    }

    let mode_rank = |mode: MaskMode| MaskMode::ALL.iter().position(|m| *m == mode).unwrap_or(0);
    records.sort_by(|a, b| {
        (&a.item_id, mode_rank(a.mode), a.rate_key, a.trial).cmp(&(
            &b.item_id,
            mode_rank(b.mode),
            b.rate_key,
            b.trial,
        ))
    });
    Ok(records)
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Masking(#[from] MaskingError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("trial log {path} line {line}: {message}")]
    Log {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("plan: {message}")]
    Plan { message: String },
}
