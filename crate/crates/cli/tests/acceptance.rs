//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Criteria 1–11 read the report of a single default run; criterion 12 runs
//! the default configuration again and compares every artifact.

use std::io::Write;
use std::sync::OnceLock;

use serde_json::Value;

use qmalab::amplifiers::TRUNCATION_LAW_SLOPE;
use qmalab_cli::{run, Artifacts, ExperimentConfig, Suite};

struct DefaultRun {
    artifacts: Artifacts,
    report: Value,
}

fn default_run() -> &'static DefaultRun {
    static RUN: OnceLock<DefaultRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let artifacts = run(&ExperimentConfig::default(), &Suite::ALL).expect("default run");
        let report = serde_json::from_slice(&artifacts.files["reports.json"]).expect("json");
        DefaultRun { artifacts, report }
    })
}

fn invariant(suite: &str, name: &str) -> (f64, f64) {
    let inv = default_run()
        .artifacts
        .invariants
        .iter()
        .find(|i| i.suite == suite && i.name == name)
        .unwrap_or_else(|| panic!("missing invariant {suite}/{name}"));
    (inv.observed, inv.limit)
}

fn summary(suite: &str, key: &str) -> &'static Value {
    &default_run().report["suites"][suite][key]
}

fn rows(file: &str) -> Vec<csv::StringRecord> {
    let bytes = &default_run().artifacts.files[file];
    csv::Reader::from_reader(bytes.as_slice())
        .records()
        .map(|r| r.expect("csv row"))
        .collect()
}

/// Prints the verdict outside the test harness's capture, then asserts it.
fn verdict(n: u32, pass: bool, detail: String) {
    let line = format!(
        "criterion {n}: {} {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {n}: {detail}");
}

fn within(suite: &str, names: &[&str]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let (observed, limit) = invariant(suite, name);
        pass &= observed <= limit;
        parts.push(format!("{name}={observed:.3e} (≤ {limit:.0e})"));
    }
    (pass, parts.join(", "))
}

#[test]
fn criterion_01_rewinding() {
    let (pass, detail) = within("rewinding", &["rewinding_relations", "rewinding_block_matrix"]);
    let trials = summary("rewinding", "trials").as_u64().unwrap();
    let dims_ok = rows("rewinding_relations.csv").iter().all(|r| {
        r[1].parse::<usize>().unwrap() <= 2 && r[2].parse::<usize>().unwrap() <= 2
    });
    verdict(
        1,
        pass && trials == 200 && dims_ok,
        format!("{trials} Haar verifiers, {detail}"),
    );
}

#[test]
fn criterion_02_controlled_gate_removal() {
    let (pass, detail) = within("rewinding", &["gate_removal_bound"]);
    let trials = summary("rewinding", "gate_removal_trials").as_u64().unwrap();
    let swapped = summary("rewinding", "gate_removal_swapped").as_u64().unwrap();
    let (any, _) = invariant("rewinding", "gate_removal_bound_any_population");
    verdict(
        2,
        pass && trials == 500,
        format!(
            "{trials} pairs, {detail}; {swapped} controls relabelled to p ≤ 1/2, \
             {any} pairs exceed the bound before relabelling"
        ),
    );
}

#[test]
fn criterion_03_c1_completeness() {
    let (pass, detail) = within("c1", &["c1_completeness", "c1_perfect_completeness"]);
    let dims: Vec<usize> = rows("c1_completeness.csv")
        .iter()
        .map(|r| r[2].parse().unwrap())
        .collect();
    let covers = [16, 32, 64].iter().all(|d| dims.contains(d));
    verdict(3, pass && covers, detail);
}

#[test]
fn criterion_04_c1_soundness() {
    let (pass, detail) = within("c1", &["c1_soundness"]);
    let small = rows("c1_soundness.csv")
        .iter()
        .all(|r| r[1].parse::<f64>().unwrap() <= 1.0 / 16.0);
    verdict(4, pass && small, format!("margin {detail}"));
}

#[test]
fn criterion_05_c2_completeness() {
    let (pass, detail) = within(
        "c2",
        &["c2_closed_form", "c2_completeness", "c2_centered_completeness"],
    );
    verdict(5, pass, detail);
}

#[test]
fn criterion_06_c2_soundness() {
    let (pass, detail) = within("c2", &["c2_soundness", "c2_bound_at_quarter"]);
    let trials = summary("c2", "soundness_trials").as_u64().unwrap();
    let below = rows("c2_soundness.csv")
        .iter()
        .all(|r| r[1].parse::<f64>().unwrap() < 0.25);
    verdict(
        6,
        pass && trials == 50 && below,
        format!("{trials} bases, {detail}"),
    );
}

#[test]
fn criterion_07_block_diagonality() {
    let (pass, detail) = within("c2", &["c2_block_diagonal", "c2_block_maximum"]);
    let trials = summary("c2", "block_trials").as_u64().unwrap();
    verdict(
        7,
        pass && trials == 50,
        format!("{trials} nondegenerate bases, {detail}"),
    );
}

#[test]
fn criterion_08_truncation_amplifier() {
    let (pass, detail) = within(
        "truncation",
        &[
            "new_completeness",
            "new_completeness_residual",
            "new_soundness",
            "new_counter_size",
        ],
    );
    let qs: Vec<u32> = rows("truncation_amplifier.csv")
        .iter()
        .map(|r| r[0].parse().unwrap())
        .collect();
    verdict(8, pass && qs == [8, 12, 16, 20], format!("q = {qs:?}, {detail}"));
}

#[test]
fn criterion_09_probability_truncation() {
    let (pass, detail) = within(
        "prob-trunc",
        &[
            "prob_trunc_exact",
            "prob_trunc_closed_form",
            "prob_trunc_rate",
            "prob_trunc_soundness",
        ],
    );
    let constant = summary("prob-trunc", "completeness_constant").as_f64().unwrap();
    let bits: Vec<u32> = rows("prob_trunc_sweep.csv")
        .iter()
        .filter(|r| &r[0] == "0")
        .map(|r| r[1].parse().unwrap())
        .collect();
    let sweep_ok = bits == (4..=16).collect::<Vec<_>>();
    verdict(
        9,
        pass && sweep_ok && constant.is_finite(),
        format!("fitted C = {constant:.4}, {detail}"),
    );
}

#[test]
fn criterion_10_interval_removal() {
    let (pass, detail) = within(
        "truncation",
        &["interval_removal_bound", "interval_removal_oracle"],
    );
    let data = rows("truncation_interval_removal.csv");
    let shape = data.iter().all(|r| {
        r[1].parse::<usize>().unwrap() <= 32 && r[2].parse::<usize>().unwrap() <= 4
    });
    verdict(
        10,
        pass && shape && data.len() == 200,
        format!("{} vectors, {detail}", data.len()),
    );
}

#[test]
fn criterion_11_witness_truncation_law() {
    let fits = summary("truncation", "law_fits").as_array().unwrap();
    let slopes: Vec<f64> = fits.iter().map(|f| f["slope"].as_f64().unwrap()).collect();
    let tolerance = 0.15;
    let pass = !slopes.is_empty()
        && slopes
            .iter()
            .all(|s| (s - TRUNCATION_LAW_SLOPE).abs() <= tolerance);
    let (bound, _) = invariant("truncation", "truncation_explicit_bound");
    verdict(
        11,
        pass,
        format!(
            "fitted slopes {slopes:.3?} vs {TRUNCATION_LAW_SLOPE:.3} ± {tolerance}; \
             explicit bound margin {bound:.3e}"
        ),
    );
}

#[test]
fn criterion_12_determinism() {
    let again = run(&ExperimentConfig::default(), &Suite::ALL).expect("second run");
    let first = &default_run().artifacts.files;
    let same = first == &again.files;
    let bytes: usize = first.values().map(Vec::len).sum();
    verdict(
        12,
        same,
        format!("{} files, {bytes} bytes compared", first.len()),
    );
}
