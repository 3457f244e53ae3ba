mod common;

use std::collections::BTreeMap;
use std::fs;

use cids_core::agents::{Behavior, RuleClass, SubmissionKind};
use cids_core::chain::{EventKind, TransactionLog, TxKind};
use cids_core::harness::{
    emit_csv, replay_log, run_with_corpus, verify_decision_bounds, RunArtifacts, ScenarioConfig,
    ARTIFACT_FILES,
};
use cids_core::identity::ContentAddress;
use cids_core::rulestore::{audit_bundle_dir, RuleBundle};
use cids_core::trm::Decision;

use common::{byzantine, corpus, corpus_dir, scenario};

fn run(config: &ScenarioConfig) -> RunArtifacts {
    run_with_corpus(config, corpus()).unwrap()
}

fn bundles(artifacts: &RunArtifacts) -> BTreeMap<ContentAddress, RuleBundle> {
    artifacts
        .store
        .iter()
        .map(|(a, b)| (*a, RuleBundle::from_canonical_bytes(b).unwrap()))
        .collect()
}

#[test]
fn reference_run_confirms_exactly_the_valid_rules() {
    let artifacts = run(&ScenarioConfig::reference(corpus_dir()));
    let truth = corpus().ground_truth();
    let bundles = bundles(&artifacts);
    assert_eq!(artifacts.decisions().len(), 3 * 55);
    for d in artifacts.decisions() {
        let valid = truth.is_valid(&bundles[&d.rule].rule);
        assert_eq!(d.trust.decision.is_accept(), valid, "rule {}", d.rule);
        assert_eq!(artifacts.ledger.state().r_db.contains_key(&d.rule), valid);
    }
    let confirmed = artifacts
        .ledger
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::RuleConfirmed)
        .count();
    assert_eq!(confirmed, artifacts.ledger.state().r_db.len());
    assert!(verify_decision_bounds(artifacts.ledger.params(), artifacts.decisions()).is_empty());
}

#[test]
fn regular_node_only_pulls_confirmed_rules() {
    let artifacts = run(&ScenarioConfig::reference(corpus_dir()));
    let local = &artifacts.local_rules["cr1"];
    let r_db = &artifacts.ledger.state().r_db;
    assert!(!local.is_empty());
    assert!(local.keys().all(|a| r_db.contains_key(a)));
}

#[test]
fn byzantine_majority_breaks_the_guarantee() {
    // One more faulty validator than the budget allows flips at least one
    // decision across a handful of seeds.
    let truth = corpus().ground_truth();
    let mut wrong = 0;
    for seed in 0..5 {
        let artifacts = run(&byzantine(1, 2, seed, 10));
        let bundles = bundles(&artifacts);
        wrong += artifacts
            .decisions()
            .iter()
            .filter(|d| d.trust.decision.is_accept() != truth.is_valid(&bundles[&d.rule].rule))
            .count();
    }
    assert!(wrong > 0);
}

#[test]
fn byzantine_within_budget_never_flips_worst_case_valid_rule() {
    // Valid rules scored 0.9 by honest validators and worst-case by the
    // rest: (5 * 0.9 - 2 * 0.49) / 7 is just above the threshold.
    let config = byzantine(2, 2, 3, 5)
        .with_validator_policy(cids_core::agents::ScorePolicy::constant(0.9, 0.0));
    let artifacts = run(&config);
    let good = artifacts.trajectory("good").unwrap().key;
    for d in artifacts.decisions().iter().filter(|d| d.contributor == good) {
        assert_eq!(d.trust.decision, Decision::Accept);
    }
}

#[test]
fn whitewasher_keeps_both_identities_on_chain() {
    let artifacts = run(&scenario("whitewashing"));
    let old = artifacts.trajectory("cc2").unwrap();
    let new = artifacts.trajectory("cc2/1").unwrap();
    assert_eq!(old.series.last().unwrap().round, 14);
    assert_eq!(new.series.first().unwrap().round, 15);
    assert!(artifacts.ledger.query_contributor(&old.key).is_ok());
    assert!(artifacts.ledger.query_contributor(&new.key).is_ok());
}

#[test]
fn ballot_stuffer_alternates_resubmission_styles() {
    let artifacts = run(&scenario("ballot_stuffing"));
    let kinds: Vec<_> = artifacts
        .submissions
        .iter()
        .filter(|s| s.contributor == "cc2")
        .map(|s| s.kind)
        .collect();
    assert_eq!(kinds[0], SubmissionKind::Fresh(RuleClass::Valid));
    assert!(kinds.contains(&SubmissionKind::Verbatim));
    assert!(kinds.contains(&SubmissionKind::Cosmetic));
}

#[test]
fn artifacts_are_byte_identical_across_reruns() {
    let config = scenario("bad_mouthing");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit_csv(&run(&config), a.path()).unwrap();
    emit_csv(&run(&config), b.path()).unwrap();
    for name in ARTIFACT_FILES {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let audit = audit_bundle_dir(&a.path().join("bundles")).unwrap();
    assert!(audit.checked > 0);
    assert!(audit.mismatched.is_empty() && audit.malformed.is_empty());
}

#[test]
fn different_seed_changes_the_run() {
    let config = scenario("bad_mouthing");
    let mut other = config.clone();
    other.seed += 1;
    assert_ne!(run(&config).ledger.state_digest(), run(&other).ledger.state_digest());
}

#[test]
fn txlog_round_trips_and_replays_to_checkpoint() {
    let artifacts = run(&scenario("self_promotion"));
    let log = TransactionLog::from_ledger(&artifacts.ledger);
    let text = log.to_ndjson();
    let parsed = TransactionLog::read_from(text.as_bytes()).unwrap();
    assert_eq!(parsed.to_ndjson(), text);

    let (ledger, report) = replay_log(&parsed).unwrap();
    assert_eq!(report.checkpoint_matches, Some(true));
    assert_eq!(ledger.state(), artifacts.ledger.state());
    assert_eq!(report.decisions, artifacts.decisions().len());
}

#[test]
fn replay_detects_a_dropped_vote() {
    let artifacts = run(&ScenarioConfig::reference(corpus_dir()));
    let mut log = TransactionLog::from_ledger(&artifacts.ledger);
    let pos = log
        .transactions
        .iter()
        .position(|tx| tx.kind() == TxKind::ValidationVote)
        .unwrap();
    log.transactions.remove(pos);
    assert!(replay_log(&log).is_err());
}

#[test]
fn csv_artifacts_have_expected_shape() {
    let config = ScenarioConfig::reference(corpus_dir());
    let artifacts = run(&config);
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&artifacts, dir.path()).unwrap();

    let mut traj = csv::Reader::from_path(dir.path().join("trust_trajectories.csv")).unwrap();
    assert_eq!(traj.headers().unwrap(), vec!["round", "contributor", "t", "T"]);
    assert_eq!(traj.records().count(), 3 * 55);

    let mut decisions = csv::Reader::from_path(dir.path().join("decisions.csv")).unwrap();
    for record in decisions.records() {
        let record = record.unwrap();
        assert!(record[2] == *"+1" || record[2] == *"-1");
        assert_eq!(record[3].split(';').count(), 4);
    }

    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("metric,subject,value\n"));
    assert!(summary.contains("final_T,cc3,"));
    assert!(summary.contains("r_loc_size,cr1,"));
}

#[test]
fn turncoat_loses_reputation_after_switching() {
    let artifacts = run(&ScenarioConfig::reference(corpus_dir()));
    let cc2 = artifacts.trajectory("cc2").unwrap();
    let peak = cc2.reputation_at(25).unwrap();
    assert!(cc2.series.iter().skip(25).all(|p| p.reputation < peak));
    let behaviors: Vec<_> = artifacts.config.agents.iter().map(|a| a.behavior.clone()).collect();
    assert!(behaviors.contains(&Behavior::Turncoat { switch_at: 25 }));
}
