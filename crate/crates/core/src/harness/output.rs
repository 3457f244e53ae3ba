use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{HarnessError, RunArtifacts};
use crate::chain::TransactionLog;

pub const ARTIFACT_FILES: [&str; 4] = [
    "trust_trajectories.csv",
    "decisions.csv",
    "summary.csv",
    "txlog.ndjson",
];

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), HarnessError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| HarnessError::Io { path, source })
}

/// Writes the CSV artifacts, the transaction log and the bundle store into
/// `dir`. Output depends only on the artifacts, so reruns with the same
/// scenario and seed are byte-identical.
pub fn emit_csv(artifacts: &RunArtifacts, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let trajectories = artifacts.trajectories.iter().flat_map(|traj| {
        traj.series.iter().map(|p| {
            vec![
                p.round.to_string(),
                traj.contributor.clone(),
                p.t.to_string(),
                p.reputation.to_string(),
            ]
        })
    });
    let mut rows: Vec<Vec<String>> = trajectories.collect();
    rows.sort_by_key(|r| r[0].parse::<usize>().unwrap_or(0));
    write(
        dir,
        ARTIFACT_FILES[0],
        &csv_bytes(&["round", "contributor", "t", "T"], rows),
    )?;

    let decisions = artifacts.decisions().iter().map(|d| {
        let votes: Vec<String> = d
            .votes
            .iter()
            .map(|v| format!("{:+}:{}", v.phi().sign(), v.score()))
            .collect();
        vec![
            d.rule.to_hex(),
            artifacts.label_of(&d.contributor),
            format!("{:+}", d.trust.decision.sign()),
            votes.join(";"),
        ]
    });
    write(
        dir,
        ARTIFACT_FILES[1],
        &csv_bytes(&["rule_address", "contributor", "decision", "vote_vector"], decisions),
    )?;

    let state = artifacts.ledger.state();
    let mut summary = Vec::new();
    for traj in &artifacts.trajectories {
        summary.push(vec![
            "final_T".into(),
            traj.contributor.clone(),
            traj.final_reputation().to_string(),
        ]);
        summary.push(vec![
            "contributions".into(),
            traj.contributor.clone(),
            traj.series.len().to_string(),
        ]);
    }
    summary.push(vec!["r_db_size".into(), "network".into(), state.r_db.len().to_string()]);
    for (name, rules) in &artifacts.local_rules {
        summary.push(vec!["r_loc_size".into(), name.clone(), rules.len().to_string()]);
    }
    let mut rejected: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &artifacts.rejections {
        *rejected.entry(r.agent.as_str()).or_default() += 1;
    }
    for (agent, count) in rejected {
        summary.push(vec!["rejected_transactions".into(), agent.into(), count.to_string()]);
    }
    write(dir, ARTIFACT_FILES[2], &csv_bytes(&["metric", "subject", "value"], summary))?;

    let log = TransactionLog::from_ledger(&artifacts.ledger);
    write(dir, ARTIFACT_FILES[3], log.to_ndjson().as_bytes())?;

    artifacts
        .store
        .write_dir(&dir.join("bundles"))
        .map_err(|e| match e {
            crate::rulestore::StoreError::Io { path, source } => HarnessError::Io { path, source },
            other => HarnessError::Invariant(vec![other.to_string()]),
        })
}
