//! WebAssembly bindings for the single-page demo in `www/`.
//!
//! Each export returns a JSON string. The `*_json` functions hold the logic
//! and are callable natively; the exported wrappers only convert errors.

use std::sync::OnceLock;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use cids_core::agents::{Behavior, ScorePolicy};
use cids_core::harness::{run_with_corpus, ScenarioConfig};
use cids_core::rulestore::Corpus;
use cids_core::trm::{
    evaluate_rule, reputation_bounds, rule_trust_bounds, rounds_to_fraction, TrmParams, VoteScore,
};

const VALID_RULES: &str = concat!(
    include_str!("../../../corpus/valid/dns.rule"),
    include_str!("../../../corpus/valid/exploits.rule"),
    include_str!("../../../corpus/valid/malware_cnc.rule"),
    include_str!("../../../corpus/valid/scans.rule"),
    include_str!("../../../corpus/valid/web_attacks.rule"),
);

const INVALID_RULES: &str = concat!(
    include_str!("../../../corpus/invalid/benign_destinations.rule"),
    include_str!("../../../corpus/invalid/overbroad_http.rule"),
    include_str!("../../../corpus/invalid/protocol_mismatch.rule"),
    include_str!("../../../corpus/invalid/tiny_patterns.rule"),
);

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| Corpus::from_texts(VALID_RULES, INVALID_RULES).expect("embedded corpus parses"))
}

fn trajectories(config: &ScenarioConfig) -> Result<Value, String> {
    let artifacts = run_with_corpus(config, corpus()).map_err(|e| e.to_string())?;
    let series: Vec<Value> = artifacts
        .trajectories
        .iter()
        .map(|traj| {
            json!({
                "contributor": traj.contributor,
                "rounds": traj.series.iter().map(|p| p.round).collect::<Vec<_>>(),
                "t": traj.series.iter().map(|p| p.t).collect::<Vec<_>>(),
                "T": traj.series.iter().map(|p| p.reputation).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "trajectories": series,
        "r_db": artifacts.ledger.state().r_db.len(),
        "transactions": artifacts.ledger.log().len(),
    }))
}

/// Runs the three-contributor scenario: honest, turncoat switching at
/// `switch_at`, and always malicious.
pub fn simulate_json(seed: u32, gamma: f64, switch_at: usize, rounds: usize) -> Result<String, String> {
    let mut config = ScenarioConfig::reference("embedded");
    config.seed = u64::from(seed);
    config.rounds = rounds;
    config.trm = config.trm.with_gamma(gamma);
    for agent in &mut config.agents {
        if let Behavior::Turncoat { switch_at: s } = &mut agent.behavior {
            *s = switch_at;
        }
    }
    config.validate().map_err(|e| e.to_string())?;
    trajectories(&config).map(|v| v.to_string())
}

/// One honest contributor whose rules always score 1.0, run once per
/// forgetting factor.
pub fn gamma_sweep_json(gammas: &[f64], rounds: usize) -> Result<String, String> {
    let mut runs = Vec::new();
    for &gamma in gammas {
        let mut config = ScenarioConfig::reference("embedded");
        config.agents.retain(|a| a.name.starts_with("cv") || a.name == "cc1");
        config.trm = config.trm.with_gamma(gamma);
        config.rounds = rounds;
        let config = config.with_validator_policy(ScorePolicy::constant(1.0, 0.0));
        config.validate().map_err(|e| e.to_string())?;
        let mut run = trajectories(&config)?;
        run["gamma"] = json!(gamma);
        run["rounds_to_99"] = json!(rounds_to_fraction(gamma, 0.99));
        runs.push(run);
    }
    Ok(Value::Array(runs).to_string())
}

/// Per-rule trust and decision for one vote vector. `verdicts` holds +1 or
/// -1 per validator, `scores` the matching confidence.
pub fn evaluate_json(
    verdicts: &[i32],
    scores: &[f64],
    delta_val: f64,
    delta_inv: f64,
    gamma: f64,
) -> Result<String, String> {
    if verdicts.len() != scores.len() {
        return Err(format!("{} verdicts for {} scores", verdicts.len(), scores.len()));
    }
    let params = TrmParams::new(delta_val, delta_inv, gamma, 0.5, verdicts.len()).map_err(|e| e.to_string())?;
    let votes = verdicts
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(i, (&phi, &s))| {
            let phi = i8::try_from(phi).map_err(|_| format!("verdict {phi} is not +1 or -1"))?;
            VoteScore::from_sign(phi, s, i).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let trust = evaluate_rule(&votes, &params).map_err(|e| e.to_string())?;
    let bounds = rule_trust_bounds(&params);
    Ok(json!({
        "t": trust.t,
        "decision": trust.decision.sign(),
        "t_lower": bounds.lower,
        "t_upper": bounds.upper,
        "upper_inclusive": bounds.upper_inclusive,
        "T_upper_after_10": reputation_bounds(&params, 10).upper,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn simulate(seed: u32, gamma: f64, switch_at: usize, rounds: usize) -> Result<String, JsValue> {
    simulate_json(seed, gamma, switch_at, rounds).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn gamma_sweep(gammas: Vec<f64>, rounds: usize) -> Result<String, JsValue> {
    gamma_sweep_json(&gammas, rounds).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn evaluate(
    verdicts: Vec<i32>,
    scores: Vec<f64>,
    delta_val: f64,
    delta_inv: f64,
    gamma: f64,
) -> Result<String, JsValue> {
    evaluate_json(&verdicts, &scores, delta_val, delta_inv, gamma).map_err(|e| JsValue::from_str(&e))
}
