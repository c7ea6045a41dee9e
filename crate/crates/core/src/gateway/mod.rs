//! Agent prompts, chat-completion backends and ballot parsing.

mod backend;
mod mock;
mod parse;
mod prompt;

pub use backend::{
    query_agent, AnthropicBackend, BackendConfig, BackendError, BackendKind, ChatBackend, ChatRequest, ChatResponse,
    OpenAiBackend, QueryRecord, RetryPolicy, ANTHROPIC_KEY_VAR, OPENAI_KEY_VAR,
};
pub use mock::{MockBackend, MockOptions};
pub use parse::{parse_response, render_vote, ParseError, ParseErrorKind, ParsedVote, Rationale};
pub use prompt::{build_prompts, build_prompts_with, correction_suffix, PromptBundle, PromptTemplate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::City;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    Community,
    KnowledgeAugmented,
    CityAverage,
}

impl std::str::FromStr for AgentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "community" | "com" => Ok(AgentMode::Community),
            "knowledge_augmented" | "knowledge" | "know" => Ok(AgentMode::KnowledgeAugmented),
            "city_average" | "average" | "avg" => Ok(AgentMode::CityAverage),
            other => Err(format!("unknown agent mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("agent {0}: knowledge-augmented agents need at least one context fact")]
    MissingFacts(u32),
}

/// Label and value of one fact given to a knowledge-augmented agent.
pub type ContextFact = (String, String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    agent_id: u32,
    community_name: String,
    city: City,
    mode: AgentMode,
    context_facts: Option<Vec<ContextFact>>,
}

impl AgentProfile {
    pub fn community(agent_id: u32, community_name: impl Into<String>, city: City) -> AgentProfile {
        AgentProfile {
            agent_id,
            community_name: community_name.into(),
            city,
            mode: AgentMode::Community,
            context_facts: None,
        }
    }

    pub fn knowledge_augmented(
        agent_id: u32,
        community_name: impl Into<String>,
        city: City,
        facts: Vec<ContextFact>,
    ) -> Result<AgentProfile, ProfileError> {
        if facts.is_empty() {
            return Err(ProfileError::MissingFacts(agent_id));
        }
        Ok(AgentProfile {
            agent_id,
            community_name: community_name.into(),
            city,
            mode: AgentMode::KnowledgeAugmented,
            context_facts: Some(facts),
        })
    }

    /// The single generic resident used in city-average scenarios, id 0.
    pub fn city_average(city: City) -> AgentProfile {
        AgentProfile {
            agent_id: 0,
            community_name: city_resident_label(city),
            city,
            mode: AgentMode::CityAverage,
            context_facts: None,
        }
    }

    pub fn agent_id(&self) -> u32 {
        self.agent_id
    }

    pub fn community_name(&self) -> &str {
        &self.community_name
    }

    pub fn city(&self) -> City {
        self.city
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn context_facts(&self) -> Option<&[ContextFact]> {
        self.context_facts.as_deref()
    }
}

pub fn city_resident_label(city: City) -> String {
    format!("Average {} resident", city.display_name())
}
