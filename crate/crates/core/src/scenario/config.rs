use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::roster::{community_count, load_facts, roster};
use super::ScenarioError;
use crate::catalog::City;
use crate::gateway::{AgentMode, AgentProfile, BackendConfig, PromptTemplate};
use crate::voting::VotingRule;

/// One experiment, as written in a TOML file.
///
/// ```toml
/// name = "CHI-com"
/// city = "chicago"
/// agent_mode = "community"      # community | knowledge_augmented | city_average
/// rule = "ranked"               # ranked | approve5 | approve_all
/// rounds = 10
/// parallelism = 8
/// output_dir = "out/chi-com"
/// facts_file = "facts.csv"      # knowledge_augmented only
/// covariate_file = "cov.csv"    # with regression_baseline, adds regression.csv
/// regression_baseline = "out/chi-com/transcripts.jsonl"
///
/// [backend]
/// kind = "mock"                 # mock | openai | anthropic
/// seed = 42
/// ```
///
/// Relative paths are resolved against the config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub city: City,
    pub agent_mode: AgentMode,
    pub rule: VotingRule,
    pub rounds: u32,
    pub parallelism: usize,
    pub output_dir: PathBuf,
    pub facts_file: Option<PathBuf>,
    pub covariate_file: Option<PathBuf>,
    pub regression_baseline: Option<PathBuf>,
    pub catalog_file: Option<PathBuf>,
    pub system_prompt_file: Option<PathBuf>,
    pub user_prompt_file: Option<PathBuf>,
    /// Restrict the roster to these ids; empty means every community.
    pub agents: Vec<u32>,
    pub backend: BackendConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            city: City::Chicago,
            agent_mode: AgentMode::Community,
            rule: VotingRule::Ranked,
            rounds: 10,
            parallelism: 4,
            output_dir: PathBuf::from("out"),
            facts_file: None,
            covariate_file: None,
            regression_baseline: None,
            catalog_file: None,
            system_prompt_file: None,
            user_prompt_file: None,
            agents: Vec::new(),
            backend: BackendConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))?;
        let mut config = ScenarioConfig::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [
            &mut self.facts_file,
            &mut self.covariate_file,
            &mut self.regression_baseline,
            &mut self.catalog_file,
            &mut self.system_prompt_file,
            &mut self.user_prompt_file,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.agent_mode == AgentMode::KnowledgeAugmented && self.facts_file.is_none() {
            return bad("knowledge_augmented scenarios need a facts_file".into());
        }
        if self.agent_mode != AgentMode::KnowledgeAugmented && self.facts_file.is_some() {
            return bad("facts_file is only used by knowledge_augmented scenarios".into());
        }
        let n = community_count(self.city) as u32;
        if let Some(id) = self.agents.iter().find(|&&id| id == 0 || id > n) {
            return bad(format!("agent {id} is not a {} community", self.city.display_name()));
        }
        self.backend.validate().map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn prompt_template(&self) -> Result<PromptTemplate, ScenarioError> {
        let mut t = PromptTemplate::default();
        let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| ScenarioError::Config(format!("{}: {e}", p.display())));
        if let Some(p) = &self.system_prompt_file {
            t.system = read(p)?;
        }
        if let Some(p) = &self.user_prompt_file {
            t.user = read(p)?;
        }
        Ok(t)
    }

    /// Agents in id order.
    pub fn profiles(&self) -> Result<Vec<AgentProfile>, ScenarioError> {
        if self.agent_mode == AgentMode::CityAverage {
            return Ok(vec![AgentProfile::city_average(self.city)]);
        }
        let facts = match &self.facts_file {
            Some(p) => Some(load_facts(p).map_err(ScenarioError::Config)?),
            None => None,
        };
        roster(self.city)
            .into_iter()
            .filter(|(id, _)| self.agents.is_empty() || self.agents.contains(id))
            .map(|(id, name)| match &facts {
                None => Ok(AgentProfile::community(id, name, self.city)),
                Some(facts) => {
                    let f = facts.get(&id).cloned().unwrap_or_default();
                    AgentProfile::knowledge_augmented(id, name, self.city, f)
                        .map_err(|e| ScenarioError::Config(e.to_string()))
                }
            })
            .collect()
    }
}
