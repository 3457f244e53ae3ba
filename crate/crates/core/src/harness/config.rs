use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agents::{AgentProfile, Behavior, ScorePolicy};
use crate::chain::NodeRole;
use crate::trm::TrmParams;

/// A complete, self-describing experiment.
///
/// ```toml
/// seed = 42
/// rounds = 55
/// byzantine_budget = 1
/// regular_threshold = 0.5
/// corpus_path = "../corpus"
///
/// [trm]
/// delta_val = 0.85
/// delta_inv = 0.9
/// gamma = 0.85
/// n_validators = 4
///
/// [[agents]]
/// name = "cc2"
/// role = "contributor"
/// behavior = { kind = "turncoat", switch_at = 25 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub trm: TrmParams,
    pub byzantine_budget: usize,
    pub agents: Vec<AgentProfile>,
    pub rounds: usize,
    pub corpus_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub regular_threshold: f64,
}

fn default_threshold() -> f64 {
    0.5
}

impl ScenarioConfig {
    /// Three contributors (honest, turncoat at round 25, always malicious)
    /// under four honest validators, with one regular node.
    pub fn reference(corpus_path: impl Into<PathBuf>) -> Self {
        let mut agents: Vec<AgentProfile> = (1..=4)
            .map(|i| AgentProfile::new(format!("cv{i}"), NodeRole::Validator))
            .collect();
        agents.push(AgentProfile::new("cc1", NodeRole::Contributor));
        agents.push(
            AgentProfile::new("cc2", NodeRole::Contributor)
                .with_behavior(Behavior::Turncoat { switch_at: 25 }),
        );
        agents.push(
            AgentProfile::new("cc3", NodeRole::Contributor).with_behavior(Behavior::AlwaysMalicious),
        );
        agents.push(AgentProfile::new("cr1", NodeRole::Regular));
        Self {
            seed: 2024,
            trm: TrmParams::reference(),
            byzantine_budget: 1,
            agents,
            rounds: 55,
            corpus_path: corpus_path.into(),
            output_path: None,
            regular_threshold: 0.5,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Loads a scenario file. Relative `corpus_path` and `output_path` are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Self = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if config.corpus_path.is_relative() {
            config.corpus_path = base.join(&config.corpus_path);
        }
        if let Some(out) = config.output_path.as_mut().filter(|p| p.is_relative()) {
            *out = base.join(&*out);
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Sets every honest validator's score policy.
    pub fn with_validator_policy(mut self, policy: ScorePolicy) -> Self {
        for agent in &mut self.agents {
            if agent.role == NodeRole::Validator && agent.behavior == Behavior::Honest {
                agent.score_policy = policy;
            }
        }
        self
    }

    pub fn agents_with_role(&self, role: NodeRole) -> impl Iterator<Item = &AgentProfile> {
        self.agents.iter().filter(move |a| a.role == role)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        self.trm
            .validate_byzantine(self.byzantine_budget)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.regular_threshold) {
            return bad(format!("regular_threshold {} outside [0, 1]", self.regular_threshold));
        }
        let validators = self.agents_with_role(NodeRole::Validator).count();
        if validators != self.trm.n_validators {
            return bad(format!(
                "{validators} validator agents for n_validators = {}",
                self.trm.n_validators
            ));
        }
        let mut names = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for agent in &self.agents {
            agent.validate()?;
            if !names.insert(agent.name.as_str()) {
                return bad(format!("duplicate agent name {}", agent.name));
            }
            if !labels.insert(agent.key_label()) {
                return bad(format!("agent {} reuses key seed {}", agent.name, agent.key_label()));
            }
        }
        for agent in &self.agents {
            if let Behavior::BadMouther { target } = &agent.behavior {
                let known = self
                    .agents_with_role(NodeRole::Contributor)
                    .any(|c| &c.name == target);
                if !known {
                    return bad(format!("{} targets unknown contributor {target}", agent.name));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenario_is_valid_and_round_trips() {
        let config = ScenarioConfig::reference("corpus");
        config.validate().unwrap();
        let text = config.to_toml_string();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), config);
    }

    #[test]
    fn zero_rounds_rejected() {
        let config = ScenarioConfig {
            rounds: 0,
            ..ScenarioConfig::reference("corpus")
        };
        assert!(matches!(config.validate(), Err(HarnessError::Config(m)) if m.contains("rounds")));
    }

    #[test]
    fn validator_count_must_match() {
        let mut config = ScenarioConfig::reference("corpus");
        config.agents.remove(0);
        assert!(config.validate().is_err());
    }

    #[test]
    fn bad_mouther_target_must_exist() {
        let mut config = ScenarioConfig::reference("corpus");
        config.agents[0].behavior = Behavior::BadMouther { target: "nobody".into() };
        assert!(config.validate().is_err());
        config.agents[0].behavior = Behavior::BadMouther { target: "cc1".into() };
        config.validate().unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = ScenarioConfig::reference("corpus").to_toml_string();
        let err = ScenarioConfig::from_toml_str(&format!("colour = 1\n{text}"));
        assert!(matches!(err, Err(HarnessError::Config(_))));
    }

    #[test]
    fn parses_handwritten_file() {
        let text = r#"
seed = 9
rounds = 3
byzantine_budget = 1
corpus_path = "c"

[trm]
delta_val = 0.85
delta_inv = 0.9
gamma = 0.85
n_validators = 4

[[agents]]
name = "v1"
role = "validator"
score_policy = { valid = { kind = "constant", value = 1.0 }, invalid = { kind = "uniform", low = 0.0, high = 0.05 } }
[[agents]]
name = "v2"
role = "validator"
behavior = { kind = "bad_mouther", target = "c1" }
[[agents]]
name = "v3"
role = "validator"
[[agents]]
name = "v4"
role = "validator"
behavior = { kind = "byzantine" }
[[agents]]
name = "c1"
role = "contributor"
behavior = { kind = "whitewasher", rejoin_at = 2 }
"#;
        let config = ScenarioConfig::from_toml_str(text).unwrap();
        config.validate().unwrap();
        assert_eq!(config.regular_threshold, 0.5);
        assert_eq!(config.trm.q_threshold, 0.5);
        assert_eq!(config.agents[4].behavior, Behavior::Whitewasher { rejoin_at: 2 });
    }
}
