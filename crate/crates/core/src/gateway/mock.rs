use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::backend::{BackendError, ChatBackend, ChatRequest, ChatResponse};
use crate::catalog::{Lever, PolicyId};
use crate::voting::{VotingRule, MAX_RANKS};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockOptions {
    /// Probability that a reply is unusable (no ballot, duplicate or
    /// out-of-range ids). Drawn per attempt, so re-asking can recover.
    pub fault_rate: f64,
    /// Added to every agent's taste for higher tax levels.
    pub tax_bias: f64,
    /// Per-agent additions to the tax taste, keyed by agent id.
    #[serde(with = "id_keys")]
    pub tax_tilt: BTreeMap<u32, f64>,
}

/// Agent-id keyed maps as string-keyed tables, which TOML requires.
mod id_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.trim().parse().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("`{k}` is not an agent id"))))
            .collect()
    }
}

/// Offline stand-in for a chat model. Replies are a pure function of
/// (seed, agent, round, rule, attempt); each agent has a stable taste, with
/// a general dislike of high fares, plus per-round noise.
#[derive(Clone, Debug)]
pub struct MockBackend {
    seed: u64,
    options: MockOptions,
    model: String,
}

struct Taste {
    fare_aversion: f64,
    tax: f64,
    fee: f64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(parts: &[u64]) -> ChaCha8Rng {
    let mut h = 0u64;
    for &p in parts {
        h = splitmix(h ^ p);
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn rule_code(rule: VotingRule) -> u64 {
    match rule {
        VotingRule::Ranked => 1,
        VotingRule::Approve5 => 2,
        VotingRule::ApproveAll => 3,
    }
}

const TASTE: u64 = 0x7a57e;
const BALLOT: u64 = 0xba1107;
const PROSE: u64 = 0x9805e;
const FAULT: u64 = 0xfa17;

impl MockBackend {
    pub fn new(seed: u64, options: MockOptions) -> MockBackend {
        MockBackend { seed, options, model: "mock-voter".into() }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> MockBackend {
        self.model = model.into();
        self
    }

    fn taste(&self, agent_id: u32) -> Taste {
        let mut rng = stream(&[self.seed, TASTE, agent_id as u64]);
        let tilt = self.options.tax_tilt.get(&agent_id).copied().unwrap_or(0.0);
        Taste {
            fare_aversion: 1.0 + rng.gen::<f64>(),
            tax: rng.gen_range(-1.0..1.0) + self.options.tax_bias + tilt,
            fee: rng.gen_range(-0.6..1.0),
        }
    }

    fn choose(&self, request: &ChatRequest, taste: &Taste) -> Vec<PolicyId> {
        let mut rng = stream(&[self.seed, BALLOT, request.agent_id as u64, request.round as u64, rule_code(request.rule)]);
        // Gumbel perturbation: sorting by perturbed score samples without
        // replacement in proportion to exp(score).
        let mut scored: Vec<(f64, PolicyId)> = PolicyId::all()
            .map(|id| {
                let [t, r, f] = id.levels().map(|l| l.index() as f64 - 1.0);
                let score = -taste.fare_aversion * 1.5 * r + taste.tax * t + taste.fee * f;
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                (score - 0.7 * (-u.ln()).ln(), id)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let n = match request.rule {
            VotingRule::Ranked | VotingRule::Approve5 => MAX_RANKS,
            VotingRule::ApproveAll => rng.gen_range(2..=8),
        };
        scored.into_iter().take(n).map(|(_, id)| id).collect()
    }

    fn fault(&self, request: &ChatRequest, decision: &mut Vec<u32>) -> Option<String> {
        if self.options.fault_rate <= 0.0 {
            return None;
        }
        let mut rng = stream(&[
            self.seed,
            FAULT,
            request.agent_id as u64,
            request.round as u64,
            rule_code(request.rule),
            request.attempt as u64,
        ]);
        if rng.gen::<f64>() >= self.options.fault_rate {
            return None;
        }
        match rng.gen_range(0..3) {
            0 => Some("I would need more information about the budget before I could vote.".into()),
            1 => {
                let first = decision[0];
                decision.push(first);
                None
            }
            _ => {
                decision[0] = 27 + rng.gen_range(0..10);
                None
            }
        }
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, options: &[&'a str]) -> &'a str {
    options[rng.gen_range(0..options.len())]
}

fn rationale(rng: &mut ChaCha8Rng, community: &str, taste: &Taste, top: PolicyId) -> [String; 4] {
    let income = if taste.tax < 0.0 {
        pick(rng, &[
            "Many households here live on tight budgets, so a higher sales tax would noticeably reduce take-home income.",
            "Residents are worried about rising costs, and every extra percent of sales tax hurts families with low incomes.",
            "Income is modest for a large share of households, so taxes and fares must stay low.",
        ])
    } else {
        pick(rng, &[
            "Most households have stable incomes and can absorb a modest sales tax if it improves service.",
            "Incomes are mixed, but a moderate tax spreads the cost fairly across everyone who benefits.",
            "A small tax increase is acceptable because it keeps fares affordable for riders.",
        ])
    };
    let consumption = pick(rng, &[
        "Discretionary spending is limited, so extra costs would come out of essentials.",
        "Residents enjoy local shops and restaurants, and lower transport costs leave more money for them.",
        "Spending on non-essential goods is sensitive to fares, since many people ride the bus daily.",
        "Households would have to cut back on leisure if travel became more expensive.",
    ]);
    let access = if taste.fee > 0.2 {
        pick(rng, &[
            "Congestion is a serious problem and a driver fee would speed up buses for everyone.",
            "Better bus frequency would greatly improve access to jobs, schools and healthcare.",
            "Many residents depend on transit, so faster and more reliable buses matter most.",
        ])
    } else {
        pick(rng, &[
            "Many residents still need cars for work, so a high driver fee would be unfair.",
            "Transit coverage is weak in parts of the area, and driving remains the only practical option for some trips.",
            "Access is fine today; the priority is avoiding new charges on daily trips.",
        ])
    };
    let [t, r, f] = [Lever::Tax, Lever::Fare, Lever::Fee].map(|l| top.lever_value(l));
    let decision = format!(
        "For {community}, the best balance is Policy {}: a {t}% sales tax, a ${r:.2} fare and a ${f:.2} driver fee. {}",
        top.get(),
        pick(rng, &[
            "Keeping fares low is the most important goal.",
            "This protects vulnerable riders while funding good service.",
            "It is a fair compromise between cost and accessibility.",
            "Other options would place too heavy a burden on residents.",
        ])
    );
    [income.to_string(), consumption.to_string(), access.to_string(), decision]
}

impl ChatBackend for MockBackend {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let taste = self.taste(request.agent_id);
        let choices = self.choose(request, &taste);
        let mut prose_rng =
            stream(&[self.seed, PROSE, request.agent_id as u64, request.round as u64, rule_code(request.rule)]);
        let [income, consumption, access, decision_text] =
            rationale(&mut prose_rng, &request.community, &taste, choices[0]);
        let mut decision: Vec<u32> = choices.iter().map(|id| id.get()).collect();
        if let Some(text) = self.fault(request, &mut decision) {
            return Ok(ChatResponse { text, prompt_tokens: None, completion_tokens: None });
        }
        let body = json!({
            "community": request.community,
            "rationale": {
                "disposable_income": income,
                "discretionary_consumption": consumption,
                "accessibility": access,
                "decision_rationale": decision_text,
            },
            "decision": decision,
        });
        let pretty = serde_json::to_string_pretty(&body).expect("serializable");
        let text = if request.agent_id.is_multiple_of(3) {
            format!("Here is my vote.\n```json\n{pretty}\n```\n")
        } else {
            pretty
        };
        Ok(ChatResponse { text, prompt_tokens: None, completion_tokens: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(agent_id: u32, round: u32, rule: VotingRule) -> ChatRequest {
        ChatRequest {
            system: String::new(),
            user: String::new(),
            temperature: 0.0,
            agent_id,
            community: format!("Area {agent_id}"),
            round,
            rule,
            attempt: 0,
        }
    }

    #[test]
    fn deterministic() {
        let a = MockBackend::new(42, MockOptions::default());
        let b = MockBackend::new(42, MockOptions::default());
        for rule in VotingRule::ALL {
            let r = request(7, 3, rule);
            assert_eq!(a.complete(&r).unwrap(), b.complete(&r).unwrap());
        }
        let other = MockBackend::new(43, MockOptions::default());
        assert_ne!(a.complete(&request(7, 3, VotingRule::Ranked)), other.complete(&request(7, 3, VotingRule::Ranked)));
    }

    #[test]
    fn prefers_low_fares() {
        let m = MockBackend::new(1, MockOptions::default());
        let mut fare_levels = [0usize; 3];
        for agent in 1..=77 {
            let taste = m.taste(agent);
            for id in m.choose(&request(agent, 1, VotingRule::Ranked), &taste) {
                fare_levels[id.level(Lever::Fare).index()] += 1;
            }
        }
        assert!(fare_levels[0] > fare_levels[1] && fare_levels[1] > fare_levels[2], "{fare_levels:?}");
    }

    #[test]
    fn approve_all_sizes() {
        let m = MockBackend::new(5, MockOptions::default());
        for agent in 1..30 {
            let taste = m.taste(agent);
            let n = m.choose(&request(agent, 2, VotingRule::ApproveAll), &taste).len();
            assert!((2..=8).contains(&n));
        }
    }
}
