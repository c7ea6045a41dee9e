use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AgentMode, AgentProfile};
use crate::catalog::{Catalog, City};
use crate::voting::VotingRule;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub rule: VotingRule,
}

/// Prompt wording with `{placeholder}` slots.
///
/// System slots: `{role}`, `{instruction}`, `{format}`.
/// User slots: `{city}`, `{policies}`, `{facts}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

const DEFAULT_SYSTEM: &str = "\
{role} You are taking part in a referendum on how the city should fund its public transit system. \
Vote for the policies that best serve the interests of the people you represent.

Think step by step. Before voting, reason through three considerations:
1. Disposable income: how each policy affects residents' income after taxes, fares, and fees.
2. Discretionary consumption: how much income is left for non-essential goods and services.
3. Accessibility: how well residents can reach work, shopping, healthcare and other daily destinations under the transit service and congestion each policy implies.
Then explain your decision rationale.

{instruction}

{format}";

const DEFAULT_USER: &str = "\
{city} is deciding how to finance its bus system. Each policy combines three levers:
- a dedicated sales tax (percent of consumer spending),
- a flat transit fare paid per bus trip,
- a fee paid by drivers per car trip.
Revenue pays for bus service, so more revenue means more frequent buses and shorter bus travel times. \
Higher fares make bus trips more expensive, and higher driver fees shift travelers from cars to buses, which reduces congestion.

The candidate policies, with the travel times and per-trip costs each one produces:
{policies}{facts}";

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate { system: DEFAULT_SYSTEM.to_string(), user: DEFAULT_USER.to_string() }
    }
}

fn instruction(rule: VotingRule) -> &'static str {
    match rule {
        VotingRule::Ranked => {
            "You are allowed to choose five policies and submit them as a ranked list. \
             Put your most preferred policy first."
        }
        VotingRule::Approve5 => "You are allowed to choose five proposals and submit them as a list.",
        VotingRule::ApproveAll => "You should vote all the policies that you agree and submit them as a list.",
    }
}

const FORMAT: &str = "\
Respond with a single JSON object and nothing else, in this form:
{\"community\": \"<the community you represent>\", \
\"rationale\": {\"disposable_income\": \"...\", \"discretionary_consumption\": \"...\", \
\"accessibility\": \"...\", \"decision_rationale\": \"...\"}, \
\"decision\": [<policy ids>]}";

fn role(profile: &AgentProfile) -> String {
    let unit = match profile.city() {
        City::Chicago => "community area",
        City::Houston => "super neighborhood",
    };
    match profile.mode() {
        AgentMode::CityAverage => format!("You are an average resident of {}.", profile.city().display_name()),
        _ => format!(
            "You represent the {} {unit} of {}.",
            profile.community_name(),
            profile.city().display_name()
        ),
    }
}

fn policy_lines(catalog: &Catalog) -> String {
    let mut out = String::new();
    for entry in catalog.iter() {
        let (p, m) = (&entry.policy, &entry.metrics);
        let _ = writeln!(
            out,
            "Policy {}: sales tax {}%, transit fare ${:.2}, driver fee ${:.2}; \
             drive time {} min, bus time {} min, drive cost ${:.2}, bus cost ${:.2}",
            p.id.get(),
            p.tax,
            p.fare,
            p.fee,
            m.drive_time,
            m.bus_time,
            m.drive_cost,
            m.bus_cost,
        );
    }
    out
}

fn fact_lines(profile: &AgentProfile) -> String {
    match profile.context_facts() {
        Some(facts) => {
            let mut out = format!("\nFacts about {}:\n", profile.community_name());
            for (label, value) in facts {
                let _ = writeln!(out, "- {label}: {value}");
            }
            out
        }
        None => String::new(),
    }
}

pub fn build_prompts(profile: &AgentProfile, catalog: &Catalog, rule: VotingRule) -> PromptBundle {
    build_prompts_with(&PromptTemplate::default(), profile, catalog, rule)
}

pub fn build_prompts_with(
    template: &PromptTemplate,
    profile: &AgentProfile,
    catalog: &Catalog,
    rule: VotingRule,
) -> PromptBundle {
    let system_text = template
        .system
        .replace("{role}", &role(profile))
        .replace("{instruction}", instruction(rule))
        .replace("{format}", FORMAT);
    let user_text = template
        .user
        .replace("{city}", profile.city().display_name())
        .replace("{policies}", &policy_lines(catalog))
        .replace("{facts}", &fact_lines(profile));
    PromptBundle { system_text, user_text, rule }
}

/// Appended to the user prompt when re-asking after an unusable reply.
pub fn correction_suffix(problem: &str) -> String {
    format!(
        "\n\nYour previous reply could not be used ({problem}). \
         Reply again with exactly one JSON object in the required form."
    )
}
