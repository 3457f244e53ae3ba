use serde_json::Value;

use cids_demo::{evaluate_json, gamma_sweep_json, simulate_json};

fn parse(text: String) -> Value {
    serde_json::from_str(&text).unwrap()
}

#[test]
fn simulate_separates_the_three_contributors() {
    let out = parse(simulate_json(2024, 0.85, 25, 55).unwrap());
    let traj = out["trajectories"].as_array().unwrap();
    assert_eq!(traj.len(), 3);
    let last = |i: usize| traj[i]["T"].as_array().unwrap().last().unwrap().as_f64().unwrap();
    assert!(last(0) > 0.7);
    assert!(last(1) < 0.2 && last(2) < 0.15);
}

#[test]
fn simulate_is_deterministic() {
    let a = simulate_json(2024, 0.85, 25, 55).unwrap();
    let b = simulate_json(2024, 0.85, 25, 55).unwrap();
    assert_eq!(a, b);
}

#[test]
fn simulate_rejects_bad_parameters() {
    assert!(simulate_json(1, 1.5, 25, 10).is_err());
    assert!(simulate_json(1, 0.85, 25, 0).is_err());
}

#[test]
fn sweep_reports_convergence_speed() {
    let out = parse(gamma_sweep_json(&[0.8, 0.9], 30).unwrap());
    let runs = out.as_array().unwrap();
    assert_eq!(runs[0]["rounds_to_99"], 21);
    assert_eq!(runs[1]["rounds_to_99"], 44);
    let t = runs[0]["trajectories"][0]["T"].as_array().unwrap();
    let expected = (1.0 - 0.8f64.powi(30)) * 0.85;
    assert!((t[29].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn evaluate_reports_trust_and_decision() {
    let out = parse(evaluate_json(&[1, 1, 1, -1], &[1.0, 1.0, 0.9, 0.2], 0.85, 0.9, 0.85).unwrap());
    let expected = (0.85 + 0.85 + 0.9 * 0.85 + 0.2 * 0.9) / 4.0;
    assert!((out["t"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(out["decision"], 1);
    assert_eq!(out["t_upper"], 0.85);

    let out = parse(evaluate_json(&[-1, -1, 1, 1], &[0.4, 0.3, 0.6, 0.5], 0.85, 0.9, 0.85).unwrap());
    assert_eq!(out["decision"], -1);
}

#[test]
fn evaluate_rejects_malformed_votes() {
    assert!(evaluate_json(&[1, 1], &[1.0], 0.85, 0.9, 0.85).is_err());
    assert!(evaluate_json(&[1, 2, 1, 1], &[1.0; 4], 0.85, 0.9, 0.85).is_err());
    assert!(evaluate_json(&[1, 1, 1, 1], &[0.2; 4], 0.85, 0.9, 0.85).is_err());
}
