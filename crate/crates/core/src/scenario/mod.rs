//! Multi-round referendum runs: query every agent, parse ballots, aggregate,
//! persist, and replay from transcripts.

pub mod config;
pub mod report;
pub mod roster;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::ScenarioConfig;

use crate::catalog::{Catalog, PolicyId};
use crate::gateway::{
    build_prompts_with, correction_suffix, parse_response, query_agent, AgentProfile, BackendError, ChatBackend,
    ChatRequest, ParsedVote, PromptBundle, QueryRecord, RetryPolicy,
};
use crate::metrics::{rank_lattice, EntropyAverages, EntropyReport};
use crate::voting::{
    approval_winner, irv_winner, mean_approved_policy, mean_ranked_policy_by_rank, Ballot, IrvLog, MeanPolicy,
    VotingRule, MAX_RANKS,
};

/// Corrective re-asks after an unparseable reply, on top of the first ask.
pub const MAX_REASKS: u32 = 2;

pub const TRANSCRIPT_FILE: &str = "transcripts.jsonl";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error("backend error: {0}")]
    Backend(BackendError),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}, line {line}: {message}")]
    Transcript { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ScenarioError {
    /// Process exit status: 2 config, 3 backend, 4 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Backend(_) => 3,
            _ => 4,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> ScenarioError {
        ScenarioError::Io { path: path.to_path_buf(), source }
    }
}

impl From<BackendError> for ScenarioError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Config(m) => ScenarioError::Config(m),
            other => ScenarioError::Backend(other),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompts {
    pub system: String,
    pub user: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub raw_response: Option<String>,
    /// `ok`, a parse error category, or `backend_error`.
    pub parse_status: String,
    pub error: Option<String>,
    pub query: QueryRecord,
}

/// One line of `transcripts.jsonl`: everything about one agent in one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub scenario: String,
    pub round: u32,
    pub agent_id: u32,
    pub community: String,
    pub rule: VotingRule,
    pub prompts: Prompts,
    pub attempts: Vec<Attempt>,
    /// Reply of the last attempt.
    pub raw_response: Option<String>,
    pub parse_status: String,
    pub decision: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: u32,
    pub agents: usize,
    pub ballots: Vec<Ballot>,
    pub parsed: Vec<(u32, ParsedVote)>,
    pub abstentions: Vec<u32>,
    /// More than half the agents abstained; excluded from aggregates.
    pub failed: bool,
    pub winner: Option<PolicyId>,
    /// Approval plurality tie, resolved to the lowest id.
    pub tied: bool,
    pub irv_log: Option<IrvLog>,
    pub entropy: Option<EntropyReport>,
    /// Mean over every listed policy.
    pub mean_listed: Option<MeanPolicy>,
    /// Ranked rounds only: mean of the policy at each rank.
    pub mean_by_rank: Option<[Option<MeanPolicy>; MAX_RANKS]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeCell {
    pub policy: PolicyId,
    /// 1..=5 for ranked ballots, 0 for approvals.
    pub rank: usize,
    pub count: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub rule: VotingRule,
    pub rounds: u32,
    pub agents: usize,
    pub failed_rounds: Vec<u32>,
    pub ballots_cast: usize,
    /// Ballots cast over agent-rounds queried.
    pub coverage: f64,
    pub winner_counts: BTreeMap<PolicyId, u32>,
    pub entropy: Option<EntropyAverages>,
    /// Per-round means averaged over completed rounds: the rank-1 policy for
    /// ranked ballots, all approved policies otherwise.
    pub mean_policy: Option<MeanPolicy>,
    pub lattice: Vec<LatticeCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun {
    pub summary: ScenarioSummary,
    pub rounds: Vec<RoundResult>,
}

/// Asks one agent, re-asking with a correction when the reply can't be
/// parsed. Only fatal backend errors are returned as `Err`; anything else
/// ends up in the record.
#[allow(clippy::too_many_arguments)]
fn ask_agent(
    backend: &dyn ChatBackend,
    retry: &RetryPolicy,
    temperature: f64,
    scenario: &str,
    profile: &AgentProfile,
    bundle: &PromptBundle,
    round: u32,
) -> Result<TranscriptRecord, BackendError> {
    let mut attempts = Vec::new();
    let mut decision = None;
    let mut last_problem: Option<String> = None;
    for attempt in 0..=MAX_REASKS {
        let mut user = bundle.user_text.clone();
        if let Some(problem) = &last_problem {
            user.push_str(&correction_suffix(problem));
        }
        let request = ChatRequest {
            system: bundle.system_text.clone(),
            user,
            temperature,
            agent_id: profile.agent_id(),
            community: profile.community_name().to_string(),
            round,
            rule: bundle.rule,
            attempt,
        };
        let (result, query) = query_agent(backend, retry, &request);
        match result {
            Err(e) if e.is_fatal() => return Err(e),
            Err(e) => {
                attempts.push(Attempt {
                    raw_response: None,
                    parse_status: "backend_error".into(),
                    error: Some(e.to_string()),
                    query,
                });
                break;
            }
            Ok(resp) => match parse_response(&resp.text, bundle.rule) {
                Ok(vote) => {
                    decision = Some(vote.decision.iter().map(|id| id.get()).collect());
                    attempts.push(Attempt {
                        raw_response: Some(resp.text),
                        parse_status: "ok".into(),
                        error: None,
                        query,
                    });
                    break;
                }
                Err(e) => {
                    last_problem = Some(e.message.clone());
                    attempts.push(Attempt {
                        raw_response: Some(resp.text),
                        parse_status: e.kind.name().into(),
                        error: Some(e.to_string()),
                        query,
                    });
                }
            },
        }
    }
    let last = attempts.last().expect("at least one attempt");
    Ok(TranscriptRecord {
        scenario: scenario.to_string(),
        round,
        agent_id: profile.agent_id(),
        community: profile.community_name().to_string(),
        rule: bundle.rule,
        prompts: Prompts { system: bundle.system_text.clone(), user: bundle.user_text.clone() },
        raw_response: last.raw_response.clone(),
        parse_status: last.parse_status.clone(),
        attempts,
        decision,
    })
}

struct RoundContext<'a> {
    backend: &'a dyn ChatBackend,
    retry: RetryPolicy,
    temperature: f64,
    scenario: &'a str,
    agents: &'a [(AgentProfile, PromptBundle)],
    parallelism: usize,
}

/// Queries every agent on a bounded pool of scoped threads. Records come
/// back in agent order; on a fatal error, the records finished before it are
/// returned alongside it.
fn query_round(ctx: &RoundContext<'_>, round: u32) -> (Vec<TranscriptRecord>, Option<BackendError>) {
    let n = ctx.agents.len();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<Result<TranscriptRecord, BackendError>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..ctx.parallelism.min(n).max(1) {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let (profile, bundle) = &ctx.agents[i];
                let r = ask_agent(ctx.backend, &ctx.retry, ctx.temperature, ctx.scenario, profile, bundle, round);
                if r.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    let mut records = Vec::with_capacity(n);
    let mut fatal = None;
    for slot in slots {
        match slot.into_inner().expect("slot lock") {
            Some(Ok(r)) => records.push(r),
            Some(Err(e)) => {
                fatal.get_or_insert(e);
            }
            None => {}
        }
    }
    (records, fatal)
}

/// Recomputes a round from its transcript records. The same function serves
/// live runs and replays, so both agree exactly.
pub fn evaluate_round(round: u32, rule: VotingRule, records: &[TranscriptRecord]) -> Result<RoundResult, ScenarioError> {
    let mut ballots = Vec::new();
    let mut parsed = Vec::new();
    let mut abstentions = Vec::new();
    for rec in records {
        let vote = rec
            .attempts
            .iter()
            .filter_map(|a| a.raw_response.as_deref())
            .find_map(|raw| parse_response(raw, rule).ok());
        match vote {
            Some(vote) => {
                let ballot = vote
                    .to_ballot(rec.agent_id, rule)
                    .map_err(|e| ScenarioError::Data(format!("round {round}, agent {}: {e}", rec.agent_id)))?;
                ballots.push(ballot);
                parsed.push((rec.agent_id, vote));
            }
            None => abstentions.push(rec.agent_id),
        }
    }
    let agents = records.len();
    let failed = ballots.is_empty() || 2 * abstentions.len() > agents;
    let mut result = RoundResult {
        round,
        agents,
        ballots,
        parsed,
        abstentions,
        failed,
        winner: None,
        tied: false,
        irv_log: None,
        entropy: None,
        mean_listed: None,
        mean_by_rank: None,
    };
    if failed {
        return Ok(result);
    }
    let data = |e: &dyn std::fmt::Display| ScenarioError::Data(format!("round {round}: {e}"));
    if rule == VotingRule::Ranked {
        let outcome = irv_winner(&result.ballots).map_err(|e| data(&e))?;
        result.winner = Some(outcome.winner);
        result.irv_log = Some(outcome.log);
        result.mean_by_rank = Some(mean_ranked_policy_by_rank(&result.ballots).map_err(|e| data(&e))?);
    } else {
        let outcome = approval_winner(&result.ballots).map_err(|e| data(&e))?;
        result.winner = Some(outcome.winner);
        result.tied = outcome.tied;
    }
    result.entropy = Some(EntropyReport::compute(&result.ballots, rule, round).map_err(|e| data(&e))?);
    result.mean_listed = Some(mean_approved_policy(&result.ballots).map_err(|e| data(&e))?);
    Ok(result)
}

fn average(policies: &[MeanPolicy]) -> Option<MeanPolicy> {
    if policies.is_empty() {
        return None;
    }
    let n = policies.len() as f64;
    Some(MeanPolicy {
        tax: policies.iter().map(|m| m.tax).sum::<f64>() / n,
        fare: policies.iter().map(|m| m.fare).sum::<f64>() / n,
        fee: policies.iter().map(|m| m.fee).sum::<f64>() / n,
    })
}

pub fn summarize(scenario: &str, rule: VotingRule, rounds: &[RoundResult]) -> ScenarioSummary {
    let completed: Vec<&RoundResult> = rounds.iter().filter(|r| !r.failed).collect();
    let mut winner_counts = BTreeMap::new();
    for r in &completed {
        if let Some(w) = r.winner {
            *winner_counts.entry(w).or_insert(0) += 1;
        }
    }
    let reports: Vec<EntropyReport> = completed.iter().filter_map(|r| r.entropy.clone()).collect();
    let means: Vec<MeanPolicy> = completed
        .iter()
        .filter_map(|r| match rule {
            VotingRule::Ranked => r.mean_by_rank.and_then(|m| m[0]),
            _ => r.mean_listed,
        })
        .collect();
    let lattice = rank_lattice(completed.iter().map(|r| r.ballots.as_slice()))
        .into_iter()
        .map(|((policy, rank), count)| LatticeCell { policy, rank, count })
        .collect();
    let agents = rounds.iter().map(|r| r.agents).max().unwrap_or(0);
    let ballots_cast: usize = rounds.iter().map(|r| r.ballots.len()).sum();
    let queried: usize = rounds.iter().map(|r| r.agents).sum();
    ScenarioSummary {
        scenario: scenario.to_string(),
        rule,
        rounds: rounds.len() as u32,
        agents,
        failed_rounds: rounds.iter().filter(|r| r.failed).map(|r| r.round).collect(),
        ballots_cast,
        coverage: if queried == 0 { 0.0 } else { ballots_cast as f64 / queried as f64 },
        winner_counts,
        entropy: EntropyAverages::of(&reports),
        mean_policy: average(&means),
        lattice,
    }
}

fn write_records(out: &mut impl Write, records: &[TranscriptRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Runs a scenario and writes every output file into `config.output_dir`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, ScenarioError> {
    config.validate()?;
    let catalog = match &config.catalog_file {
        Some(p) => Catalog::load(config.city, p).map_err(|e| ScenarioError::Config(e.to_string()))?,
        None => Catalog::bundled(config.city),
    };
    let template = config.prompt_template()?;
    let agents: Vec<(AgentProfile, PromptBundle)> = config
        .profiles()?
        .into_iter()
        .map(|p| {
            let b = build_prompts_with(&template, &p, &catalog, config.rule);
            (p, b)
        })
        .collect();
    let backend = config.backend.build()?;
    let ctx = RoundContext {
        backend: backend.as_ref(),
        retry: config.backend.retry_policy(),
        temperature: config.backend.temperature,
        scenario: &config.name,
        agents: &agents,
        parallelism: config.parallelism,
    };

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    let transcript_path = dir.join(TRANSCRIPT_FILE);
    let file = File::create(&transcript_path).map_err(|e| ScenarioError::io(&transcript_path, e))?;
    let mut transcript = BufWriter::new(file);

    let mut rounds = Vec::with_capacity(config.rounds as usize);
    for round in 1..=config.rounds {
        let (records, fatal) = query_round(&ctx, round);
        write_records(&mut transcript, &records).map_err(|e| ScenarioError::io(&transcript_path, e))?;
        if let Some(e) = fatal {
            return Err(ScenarioError::Backend(e));
        }
        rounds.push(evaluate_round(round, config.rule, &records)?);
    }
    drop(transcript);

    let run = ScenarioRun { summary: summarize(&config.name, config.rule, &rounds), rounds };
    let meta = report::RunMeta { model: backend.model_name().to_string(), city: Some(config.city) };
    report::write_outputs(dir, &run, &meta)?;
    if let (Some(cov), Some(baseline)) = (&config.covariate_file, &config.regression_baseline) {
        report::write_regression_from_files(dir, &run, baseline, cov)?;
    }
    Ok(run)
}

pub fn read_transcripts(path: impl AsRef<Path>) -> Result<Vec<TranscriptRecord>, ScenarioError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ScenarioError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ScenarioError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TranscriptRecord = serde_json::from_str(&line).map_err(|e| ScenarioError::Transcript {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Recomputes a run from its transcript file without contacting any backend.
pub fn replay(transcript_file: impl AsRef<Path>, rule: VotingRule) -> Result<ScenarioRun, ScenarioError> {
    let records = read_transcripts(&transcript_file)?;
    replay_records(records, rule)
}

pub fn replay_records(records: Vec<TranscriptRecord>, rule: VotingRule) -> Result<ScenarioRun, ScenarioError> {
    let scenario = records.first().map(|r| r.scenario.clone()).unwrap_or_default();
    let mut by_round: BTreeMap<u32, BTreeMap<u32, TranscriptRecord>> = BTreeMap::new();
    for rec in records {
        let (round, agent) = (rec.round, rec.agent_id);
        if by_round.entry(round).or_default().insert(agent, rec).is_some() {
            return Err(ScenarioError::Data(format!("agent {agent} appears twice in round {round}")));
        }
    }
    let rounds = by_round
        .into_iter()
        .map(|(round, recs)| evaluate_round(round, rule, &recs.into_values().collect::<Vec<_>>()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioRun { summary: summarize(&scenario, rule, &rounds), rounds })
}
