//! Ballots under the three voting rules and winner determination.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Lever, PolicyId};

/// Maximum number of ids on a ranked ballot.
pub const MAX_RANKS: usize = 5;
/// Exact size of a 5-approval ballot.
pub const APPROVE5_SIZE: usize = 5;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotingRule {
    /// Up to five distinct ids in preference order; instant-runoff winner.
    Ranked,
    /// Exactly five approved ids; plurality winner.
    Approve5,
    /// Any nonempty approved set; plurality winner.
    ApproveAll,
}

impl VotingRule {
    pub const ALL: [VotingRule; 3] = [VotingRule::Ranked, VotingRule::Approve5, VotingRule::ApproveAll];

    pub fn name(self) -> &'static str {
        match self {
            VotingRule::Ranked => "ranked",
            VotingRule::Approve5 => "approve5",
            VotingRule::ApproveAll => "approve_all",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            VotingRule::Ranked => "Ranked-Choice",
            VotingRule::Approve5 => "5-Approval",
            VotingRule::ApproveAll => "All-Approval",
        }
    }

    pub fn is_approval(self) -> bool {
        !matches!(self, VotingRule::Ranked)
    }

    /// Inclusive bounds on the number of ids a ballot may list.
    pub fn cardinality(self) -> (usize, usize) {
        match self {
            VotingRule::Ranked => (1, MAX_RANKS),
            VotingRule::Approve5 => (APPROVE5_SIZE, APPROVE5_SIZE),
            VotingRule::ApproveAll => (1, crate::catalog::POLICY_COUNT),
        }
    }
}

impl fmt::Display for VotingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VotingRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ranked" | "ranked_choice" | "irv" => Ok(VotingRule::Ranked),
            "approve5" | "approve_5" | "5_approval" => Ok(VotingRule::Approve5),
            "approve_all" | "all_approval" => Ok(VotingRule::ApproveAll),
            other => Err(format!("unknown voting rule `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BallotError {
    #[error("{rule} ballot lists {found} ids; allowed {min}..={max}")]
    Cardinality { rule: VotingRule, found: usize, min: usize, max: usize },
    #[error("policy {0} listed more than once")]
    Duplicate(PolicyId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VotingError {
    #[error("no ballots to aggregate")]
    NoBallots,
    #[error("every ranked ballot is empty")]
    AllBallotsEmpty,
    #[error("ballot of agent {agent_id} uses rule {found}, expected {expected}")]
    WrongRule { agent_id: u32, expected: &'static str, found: VotingRule },
    #[error("ballots approve no policies")]
    NoApprovals,
}

/// A validated vote from one agent.
///
/// Ranked ballots keep preference order. Approval ballots store their ids in
/// ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBallot", into = "RawBallot")]
pub struct Ballot {
    agent_id: u32,
    rule: VotingRule,
    choices: Vec<PolicyId>,
}

#[derive(Serialize, Deserialize)]
struct RawBallot {
    agent_id: u32,
    rule: VotingRule,
    choices: Vec<PolicyId>,
}

impl TryFrom<RawBallot> for Ballot {
    type Error = BallotError;

    fn try_from(raw: RawBallot) -> Result<Self, Self::Error> {
        Ballot::new(raw.agent_id, raw.rule, raw.choices)
    }
}

impl From<Ballot> for RawBallot {
    fn from(b: Ballot) -> RawBallot {
        RawBallot { agent_id: b.agent_id, rule: b.rule, choices: b.choices }
    }
}

impl Ballot {
    pub fn new(agent_id: u32, rule: VotingRule, mut choices: Vec<PolicyId>) -> Result<Ballot, BallotError> {
        let mut seen = BTreeSet::new();
        for &c in &choices {
            if !seen.insert(c) {
                return Err(BallotError::Duplicate(c));
            }
        }
        let (min, max) = rule.cardinality();
        if choices.len() < min || choices.len() > max {
            return Err(BallotError::Cardinality { rule, found: choices.len(), min, max });
        }
        if rule.is_approval() {
            choices.sort_unstable();
        }
        Ok(Ballot { agent_id, rule, choices })
    }

    pub fn ranked(agent_id: u32, choices: Vec<PolicyId>) -> Result<Ballot, BallotError> {
        Ballot::new(agent_id, VotingRule::Ranked, choices)
    }

    pub fn approval(agent_id: u32, rule: VotingRule, choices: Vec<PolicyId>) -> Result<Ballot, BallotError> {
        Ballot::new(agent_id, rule, choices)
    }

    pub fn agent_id(&self) -> u32 {
        self.agent_id
    }

    pub fn rule(&self) -> VotingRule {
        self.rule
    }

    /// Ranked order for ranked ballots, ascending ids for approval ballots.
    pub fn choices(&self) -> &[PolicyId] {
        &self.choices
    }

    /// Id at 1-based `rank`, for ranked ballots only.
    pub fn at_rank(&self, rank: usize) -> Option<PolicyId> {
        if self.rule != VotingRule::Ranked || rank == 0 {
            return None;
        }
        self.choices.get(rank - 1).copied()
    }
}

fn require_approval(ballots: &[Ballot]) -> Result<(), VotingError> {
    if let Some(b) = ballots.iter().find(|b| !b.rule.is_approval()) {
        return Err(VotingError::WrongRule { agent_id: b.agent_id, expected: "an approval rule", found: b.rule });
    }
    Ok(())
}

fn require_ranked(ballots: &[Ballot]) -> Result<(), VotingError> {
    if let Some(b) = ballots.iter().find(|b| b.rule != VotingRule::Ranked) {
        return Err(VotingError::WrongRule { agent_id: b.agent_id, expected: "ranked", found: b.rule });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApprovalOutcome {
    pub winner: PolicyId,
    pub counts: BTreeMap<PolicyId, u32>,
    /// More than one policy shares the top count; `winner` is the lowest id.
    pub tied: bool,
}

/// Plurality over approvals; ties resolve to the lowest id and are flagged.
pub fn approval_winner(ballots: &[Ballot]) -> Result<ApprovalOutcome, VotingError> {
    if ballots.is_empty() {
        return Err(VotingError::NoBallots);
    }
    require_approval(ballots)?;
    let counts = tally_all(ballots);
    let top = counts.values().copied().max().ok_or(VotingError::NoApprovals)?;
    let mut leaders = counts.iter().filter(|(_, &c)| c == top).map(|(&id, _)| id);
    let winner = leaders.next().ok_or(VotingError::NoApprovals)?;
    let tied = leaders.next().is_some();
    Ok(ApprovalOutcome { winner, counts, tied })
}

/// Number of ballots listing each policy, at any position.
pub fn tally_all(ballots: &[Ballot]) -> BTreeMap<PolicyId, u32> {
    let mut counts = BTreeMap::new();
    for b in ballots {
        for &id in &b.choices {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrvRound {
    /// First-choice counts among the candidates still standing this round.
    pub tally: BTreeMap<PolicyId, u32>,
    /// Candidates removed at the end of this round; empty on the deciding round.
    pub eliminated: Vec<PolicyId>,
    /// Ballots with at least one candidate still standing.
    pub active_ballots: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrvLog {
    pub rounds: Vec<IrvRound>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IrvOutcome {
    pub winner: PolicyId,
    pub log: IrvLog,
}

/// Instant-runoff winner.
///
/// Each round counts every active ballot for its highest-ranked surviving
/// candidate. A candidate with strictly more than half of the active ballots
/// wins. Otherwise all candidates sharing the fewest first-choice votes are
/// eliminated together; if that would remove every remaining candidate, the
/// lowest id among them survives and wins. Ballots whose listed candidates
/// have all been eliminated are exhausted and leave the denominator.
///
/// The candidate set is every policy listed on at least one ballot.
pub fn irv_winner(ballots: &[Ballot]) -> Result<IrvOutcome, VotingError> {
    if ballots.is_empty() {
        return Err(VotingError::NoBallots);
    }
    require_ranked(ballots)?;
    let mut standing: BTreeSet<PolicyId> = ballots.iter().flat_map(|b| b.choices.iter().copied()).collect();
    if standing.is_empty() {
        return Err(VotingError::AllBallotsEmpty);
    }

    let mut log = IrvLog::default();
    loop {
        let mut tally: BTreeMap<PolicyId, u32> = standing.iter().map(|&id| (id, 0)).collect();
        let mut active = 0u32;
        for b in ballots {
            if let Some(top) = b.choices.iter().find(|id| standing.contains(id)) {
                *tally.get_mut(top).expect("standing candidate") += 1;
                active += 1;
            }
        }

        let (&leader, &lead) = tally
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .expect("at least one standing candidate");
        if 2 * lead > active || standing.len() == 1 {
            log.rounds.push(IrvRound { tally, eliminated: Vec::new(), active_ballots: active });
            return Ok(IrvOutcome { winner: leader, log });
        }

        let fewest = *tally.values().min().expect("nonempty tally");
        let mut eliminated: Vec<PolicyId> = tally.iter().filter(|(_, &c)| c == fewest).map(|(&id, _)| id).collect();
        let survivor = if eliminated.len() == standing.len() {
            // eliminated is ascending, so the lowest id is first
            Some(eliminated.remove(0))
        } else {
            None
        };
        for id in &eliminated {
            standing.remove(id);
        }
        log.rounds.push(IrvRound { tally, eliminated, active_ballots: active });
        if let Some(winner) = survivor {
            return Ok(IrvOutcome { winner, log });
        }
    }
}

/// Component-wise average of lever values.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanPolicy {
    pub tax: f64,
    pub fare: f64,
    pub fee: f64,
}

impl MeanPolicy {
    pub fn lever(&self, lever: Lever) -> f64 {
        match lever {
            Lever::Tax => self.tax,
            Lever::Fare => self.fare,
            Lever::Fee => self.fee,
        }
    }

    fn of<'a>(ids: impl IntoIterator<Item = &'a PolicyId>) -> Option<MeanPolicy> {
        let mut sums = [0.0; 3];
        let mut n = 0usize;
        for id in ids {
            for (s, lever) in sums.iter_mut().zip(Lever::ALL) {
                *s += id.lever_value(lever);
            }
            n += 1;
        }
        (n > 0).then(|| {
            let n = n as f64;
            MeanPolicy { tax: sums[0] / n, fare: sums[1] / n, fee: sums[2] / n }
        })
    }
}

/// Average lever values over every (agent, listed policy) pair.
///
/// For approval ballots this is the mean of all approved policies. Ranked
/// ballots are accepted too and contribute each listed entry once.
pub fn mean_approved_policy(ballots: &[Ballot]) -> Result<MeanPolicy, VotingError> {
    MeanPolicy::of(ballots.iter().flat_map(|b| b.choices.iter())).ok_or(VotingError::NoApprovals)
}

/// Mean lever values of the policy placed at each rank 1..=5, over the
/// agents whose ballots reach that rank. Ranks no ballot reaches are `None`.
pub fn mean_ranked_policy_by_rank(ballots: &[Ballot]) -> Result<[Option<MeanPolicy>; MAX_RANKS], VotingError> {
    if ballots.is_empty() {
        return Err(VotingError::NoBallots);
    }
    require_ranked(ballots)?;
    let mut out = [None; MAX_RANKS];
    for (s, slot) in out.iter_mut().enumerate() {
        *slot = MeanPolicy::of(ballots.iter().filter_map(|b| b.choices.get(s)));
    }
    Ok(out)
}
