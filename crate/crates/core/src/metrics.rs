//! Vote concentration (Shannon entropy in bits) and rank-weighted Borda
//! preference scores.
//!
//! Vote shares count every listed id once per ballot. For ranked ballots the
//! shares are normalized by the total number of ranked entries, so they sum
//! to one under every rule.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Lever, PolicyId, POLICY_COUNT};
use crate::voting::{Ballot, VotingRule, MAX_RANKS};

/// Sum of Borda weights 5 + 4 + 3 + 2 + 1.
pub const BORDA_DENOMINATOR: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no votes cast")]
    NoVotes,
    #[error("no ballot reaches rank {0}")]
    EmptyRank(usize),
    #[error("rank {0} outside 1..=5")]
    BadRank(usize),
    #[error("ballot of agent {agent_id} uses rule {found}, expected {expected}")]
    RuleMismatch { agent_id: u32, expected: VotingRule, found: VotingRule },
}

/// Empirical share of votes per policy in one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteDistribution {
    probabilities: Vec<f64>,
    pub round: u32,
}

impl VoteDistribution {
    pub fn probability(&self, id: PolicyId) -> f64 {
        self.probabilities[id.index()]
    }

    /// Shares indexed by policy id.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Marginal shares of the low, medium and high levels of `lever`.
    pub fn lever_marginal(&self, lever: Lever) -> [f64; 3] {
        let mut out = [0.0; 3];
        for id in PolicyId::all() {
            out[id.level(lever).index()] += self.probability(id);
        }
        out
    }
}

/// Vote shares of one round of ballots cast under `rule`.
pub fn vote_distribution(ballots: &[Ballot], rule: VotingRule, round: u32) -> Result<VoteDistribution, MetricsError> {
    let mut counts = vec![0u64; POLICY_COUNT];
    for b in ballots {
        if b.rule() != rule {
            return Err(MetricsError::RuleMismatch { agent_id: b.agent_id(), expected: rule, found: b.rule() });
        }
        for id in b.choices() {
            counts[id.index()] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(MetricsError::NoVotes);
    }
    let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(VoteDistribution { probabilities, round })
}

/// Shannon entropy in bits, with 0 log 0 taken as 0.
pub fn shannon_entropy_bits(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probabilities
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // a degenerate distribution gives -0.0
    h.max(0.0)
}

pub fn policy_entropy(dist: &VoteDistribution) -> f64 {
    shannon_entropy_bits(dist.probabilities.iter().copied())
}

pub fn lever_entropy(dist: &VoteDistribution, lever: Lever) -> f64 {
    shannon_entropy_bits(dist.lever_marginal(lever))
}

/// Level shares of `lever` among the policies ranked at 1-based `rank`.
pub fn lever_marginal_by_rank(ballots: &[Ballot], lever: Lever, rank: usize) -> Result<[f64; 3], MetricsError> {
    if rank == 0 || rank > MAX_RANKS {
        return Err(MetricsError::BadRank(rank));
    }
    let mut counts = [0u64; 3];
    for b in ballots {
        if b.rule() != VotingRule::Ranked {
            return Err(MetricsError::RuleMismatch {
                agent_id: b.agent_id(),
                expected: VotingRule::Ranked,
                found: b.rule(),
            });
        }
        if let Some(id) = b.at_rank(rank) {
            counts[id.level(lever).index()] += 1;
        }
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(MetricsError::EmptyRank(rank));
    }
    Ok(counts.map(|c| c as f64 / n as f64))
}

pub fn lever_entropy_by_rank(ballots: &[Ballot], lever: Lever, rank: usize) -> Result<f64, MetricsError> {
    lever_marginal_by_rank(ballots, lever, rank).map(shannon_entropy_bits)
}

/// Per-round entropy family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub policy_entropy: f64,
    pub lever_entropy: BTreeMap<Lever, f64>,
    /// Per lever, entropy at ranks 1..=5; `None` where no ballot reaches the
    /// rank. Empty for approval rules.
    pub lever_entropy_by_rank: BTreeMap<Lever, [Option<f64>; MAX_RANKS]>,
}

impl EntropyReport {
    pub fn compute(ballots: &[Ballot], rule: VotingRule, round: u32) -> Result<EntropyReport, MetricsError> {
        let dist = vote_distribution(ballots, rule, round)?;
        let lever_entropy = Lever::ALL.iter().map(|&l| (l, lever_entropy(&dist, l))).collect();
        let mut by_rank = BTreeMap::new();
        if rule == VotingRule::Ranked {
            for lever in Lever::ALL {
                let mut row = [None; MAX_RANKS];
                for (s, slot) in row.iter_mut().enumerate() {
                    *slot = lever_entropy_by_rank(ballots, lever, s + 1).ok();
                }
                by_rank.insert(lever, row);
            }
        }
        Ok(EntropyReport { policy_entropy: policy_entropy(&dist), lever_entropy, lever_entropy_by_rank: by_rank })
    }

    pub fn by_rank(&self, lever: Lever, rank: usize) -> Option<f64> {
        self.lever_entropy_by_rank.get(&lever).and_then(|r| r.get(rank.checked_sub(1)?).copied().flatten())
    }
}

/// Arithmetic means of the per-round entropy family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyAverages {
    pub rounds: usize,
    pub policy_entropy: f64,
    pub lever_entropy: BTreeMap<Lever, f64>,
    /// Averaged over the rounds in which the rank is reached.
    pub lever_entropy_by_rank: BTreeMap<Lever, [Option<f64>; MAX_RANKS]>,
}

impl EntropyAverages {
    pub fn of(reports: &[EntropyReport]) -> Option<EntropyAverages> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let policy_entropy = reports.iter().map(|r| r.policy_entropy).sum::<f64>() / n;
        let lever_entropy = Lever::ALL
            .iter()
            .map(|&l| (l, reports.iter().map(|r| r.lever_entropy[&l]).sum::<f64>() / n))
            .collect();
        let mut by_rank = BTreeMap::new();
        if reports.iter().all(|r| !r.lever_entropy_by_rank.is_empty()) {
            for lever in Lever::ALL {
                let mut row = [None; MAX_RANKS];
                for (s, slot) in row.iter_mut().enumerate() {
                    let vals: Vec<f64> = reports.iter().filter_map(|r| r.by_rank(lever, s + 1)).collect();
                    if !vals.is_empty() {
                        *slot = Some(vals.iter().sum::<f64>() / vals.len() as f64);
                    }
                }
                by_rank.insert(lever, row);
            }
        }
        Some(EntropyAverages { rounds: reports.len(), policy_entropy, lever_entropy, lever_entropy_by_rank: by_rank })
    }

    pub fn by_rank(&self, lever: Lever, rank: usize) -> Option<f64> {
        self.lever_entropy_by_rank.get(&lever).and_then(|r| r.get(rank.checked_sub(1)?).copied().flatten())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BordaScore {
    pub community_id: u32,
    pub lever: Lever,
    pub score: f64,
    /// Some round had no ballot, or a ballot shorter than five, for this
    /// community; the missing ranks contributed zero.
    pub incomplete: bool,
}

/// Rank-weighted lever preference per community, averaged over rounds.
///
/// In each round the policy at rank s contributes `(6 - s) / 15` times its
/// lever value. Every round counts toward the average, including rounds where
/// the community cast no ballot. Communities are those appearing in any round.
pub fn borda_scores(rounds: &[Vec<Ballot>], lever: Lever) -> Result<Vec<BordaScore>, MetricsError> {
    let communities: BTreeSet<u32> = rounds.iter().flatten().map(Ballot::agent_id).collect();
    let j = rounds.len() as f64;
    let mut out = Vec::with_capacity(communities.len());
    for community in communities {
        let mut total = 0.0;
        let mut incomplete = false;
        for round in rounds {
            match round.iter().find(|b| b.agent_id() == community) {
                Some(b) => {
                    if b.rule() != VotingRule::Ranked {
                        return Err(MetricsError::RuleMismatch {
                            agent_id: community,
                            expected: VotingRule::Ranked,
                            found: b.rule(),
                        });
                    }
                    incomplete |= b.choices().len() < MAX_RANKS;
                    total += round_borda(b, lever);
                }
                None => incomplete = true,
            }
        }
        out.push(BordaScore { community_id: community, lever, score: total / j, incomplete });
    }
    Ok(out)
}

fn round_borda(ballot: &Ballot, lever: Lever) -> f64 {
    ballot
        .choices()
        .iter()
        .enumerate()
        .map(|(i, id)| (MAX_RANKS - i) as f64 * id.lever_value(lever))
        .sum::<f64>()
        / BORDA_DENOMINATOR
}

/// Policy-by-rank vote counts, the data behind a vote-lattice plot.
pub fn rank_lattice<'a>(rounds: impl IntoIterator<Item = &'a [Ballot]>) -> BTreeMap<(PolicyId, usize), u32> {
    let mut lattice = BTreeMap::new();
    for round in rounds {
        for b in round {
            for (i, &id) in b.choices().iter().enumerate() {
                let rank = if b.rule() == VotingRule::Ranked { i + 1 } else { 0 };
                *lattice.entry((id, rank)).or_insert(0) += 1;
            }
        }
    }
    lattice
}
