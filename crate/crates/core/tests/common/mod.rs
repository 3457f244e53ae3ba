#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use cids_core::agents::{AgentProfile, Behavior, ScorePolicy};
use cids_core::chain::NodeRole;
use cids_core::harness::ScenarioConfig;
use cids_core::rulestore::Corpus;
use cids_core::trm::TrmParams;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn corpus_dir() -> PathBuf {
    workspace_root().join("corpus")
}

pub fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| Corpus::load_dir(&corpus_dir()).expect("bundled corpus loads"))
}

pub fn scenario(name: &str) -> ScenarioConfig {
    let path = workspace_root().join("scenarios").join(format!("{name}.toml"));
    ScenarioConfig::load(&path).expect("bundled scenario loads")
}

fn validators(n: usize) -> Vec<AgentProfile> {
    (1..=n)
        .map(|i| AgentProfile::new(format!("cv{i}"), NodeRole::Validator))
        .collect()
}

/// One honest contributor under four validators that always score valid
/// rules 1.0.
pub fn honest_single(gamma: f64, rounds: usize) -> ScenarioConfig {
    let mut agents = validators(4);
    agents.push(AgentProfile::new("cc1", NodeRole::Contributor));
    ScenarioConfig {
        seed: 1,
        trm: TrmParams::reference().with_gamma(gamma),
        byzantine_budget: 1,
        agents,
        rounds,
        corpus_path: corpus_dir(),
        output_path: None,
        regular_threshold: 0.5,
    }
    .with_validator_policy(ScorePolicy::constant(1.0, 0.0))
}

/// `n = 3ℓ + 1` validators, the last `byzantine` of them inverting every
/// verdict, judging one honest and one malicious contributor.
pub fn byzantine(budget: usize, byzantine: usize, seed: u64, rounds: usize) -> ScenarioConfig {
    let n = 3 * budget + 1;
    let mut agents = validators(n);
    for agent in agents.iter_mut().skip(n - byzantine) {
        agent.behavior = Behavior::Byzantine;
    }
    agents.push(AgentProfile::new("good", NodeRole::Contributor));
    agents.push(AgentProfile::new("bad", NodeRole::Contributor).with_behavior(Behavior::AlwaysMalicious));
    ScenarioConfig {
        seed,
        trm: TrmParams {
            n_validators: n,
            ..TrmParams::reference()
        },
        byzantine_budget: budget,
        agents,
        rounds,
        corpus_path: corpus_dir(),
        output_path: None,
        regular_threshold: 0.5,
    }
}

/// Reputation by direct summation, independent of the recurrence.
pub fn direct_sum(ts: &[f64], gamma: f64) -> f64 {
    let m = ts.len();
    ts.iter()
        .enumerate()
        .map(|(j, t)| (1.0 - gamma) * gamma.powi((m - 1 - j) as i32) * t)
        .sum()
}
