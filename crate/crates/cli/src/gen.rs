//! Random verifier corpora: brickwork `.qvc` circuits with JSON sidecars.

use std::collections::{BTreeMap, HashMap};

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use qmalab::algebra::random::seeded_rng;
use qmalab::circuit::{random_circuit, verifier_from_circuit};
use qmalab::verifier::optimal_witness;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub count: usize,
    pub seed: u64,
    pub ancilla_qubits: usize,
    pub witness_qubits: usize,
    pub layers: usize,
    /// Accepted range of the optimal acceptance, exclusive on both ends.
    pub p_range: (f64, f64),
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            count: 16,
            seed: 0,
            ancilla_qubits: 1,
            witness_qubits: 2,
            layers: 3,
            p_range: (0.05, 0.95),
        }
    }
}

/// Annotation sidecar of a generated verifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub index: usize,
    pub seed: u64,
    pub ancilla_qubits: usize,
    pub witness_qubits: usize,
    pub layers: usize,
    pub p_max: f64,
    /// Completeness annotation, the attained optimum.
    pub c: f64,
    /// Soundness annotation, `c/2`.
    pub s: f64,
    /// Circuits drawn before this one was accepted.
    pub attempts: usize,
}

const MAX_ATTEMPTS: usize = 1000;

/// Generates the corpus as `(file name, bytes)` pairs in index order.
///
/// Circuits are drawn from a single stream and rejected until their optimal
/// acceptance falls inside `p_range`.
pub fn generate(cfg: &GenConfig) -> Result<BTreeMap<String, Vec<u8>>> {
    let (lo, hi) = cfg.p_range;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        bail!("p_range must satisfy 0 ≤ lo < hi ≤ 1");
    }
    if cfg.ancilla_qubits == 0 || cfg.ancilla_qubits + cfg.witness_qubits > 10 {
        bail!("need at least one ancilla qubit and at most 10 qubits in total");
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut files = BTreeMap::new();
    for index in 0..cfg.count {
        let mut attempts = 0;
        let (circuit, p_max) = loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                bail!("no circuit with p_max in ({lo}, {hi}) after {MAX_ATTEMPTS} draws");
            }
            let c = random_circuit(cfg.ancilla_qubits, cfg.witness_qubits, cfg.layers, &mut rng)?;
            let v = verifier_from_circuit(&c, &HashMap::new(), 1.0, 0.0)?;
            let (p, _) = optimal_witness(&v)?;
            if p > lo && p < hi {
                break (c, p);
            }
        };
        let stem = format!("verifier_{index:04}");
        let sidecar = Sidecar {
            index,
            seed: cfg.seed,
            ancilla_qubits: cfg.ancilla_qubits,
            witness_qubits: cfg.witness_qubits,
            layers: cfg.layers,
            p_max,
            c: p_max,
            s: p_max / 2.0,
            attempts,
        };
        files.insert(format!("{stem}.qvc"), circuit.serialize().into_bytes());
        let mut json = serde_json::to_vec_pretty(&sidecar)?;
        json.push(b'\n');
        files.insert(format!("{stem}.json"), json);
    }
    Ok(files)
}
