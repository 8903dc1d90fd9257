//! Experiment configuration: a TOML file of `key = value` sections, with
//! defaults for every field.

use std::fmt;
use std::path::{Path, PathBuf};

use qmalab::amplifiers::TruncationParams;
use qmalab::verifier::Centering;
use serde::{Deserialize, Serialize};

/// Largest Hilbert-space dimension any suite may simulate.
pub const MAX_TOTAL_DIM: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub trials: TrialSection,
    pub sweep: SweepSection,
    pub c1: ConstructionSection,
    pub c2: ConstructionSection,
    pub prob_trunc: ProbTruncSection,
    pub tolerances: ToleranceSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// Ancilla qubits of the bases fed to constructions and amplifiers.
    pub ancilla_qubits: usize,
    /// Witness qubits of the same bases.
    pub witness_qubits: usize,
    /// Completeness promise of the amplifier bases.
    pub completeness: f64,
    /// Soundness promise of the amplifier bases.
    pub soundness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialSection {
    pub rewinding: usize,
    pub gate_removal: usize,
    pub c1_soundness: usize,
    pub c2_soundness: usize,
    pub block_structure: usize,
    pub interval_removal: usize,
    pub truncation_law: usize,
    pub prob_trunc: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub counter_dims: Vec<usize>,
    pub q: Vec<u32>,
    pub m: Vec<u32>,
    pub ell: usize,
    pub q_bits: Vec<u32>,
    /// Claim width of the exhaustive prob-trunc soundness grid.
    pub soundness_q_bits: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSection {
    /// Optimal acceptance of the yes-instance bases.
    pub p_yes: Vec<f64>,
    /// Largest optimal acceptance of the random no-instance bases.
    pub p_no_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbTruncSection {
    /// No-instance bases accept with probability at most `1/2 − delta`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub construction: f64,
    pub end_to_end: f64,
    /// Allowed distance of the truncation-law slope from `−ln 2 / 2`.
    pub law_slope: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run: RunSection::default(),
            trials: TrialSection::default(),
            sweep: SweepSection::default(),
            c1: ConstructionSection {
                p_yes: vec![0.6, 0.75, 0.9, 1.0],
                p_no_max: 1.0 / 16.0,
            },
            c2: ConstructionSection {
                p_yes: vec![0.3, 0.5, 0.75, 1.0],
                p_no_max: 0.24,
            },
            prob_trunc: ProbTruncSection::default(),
            tolerances: ToleranceSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            ancilla_qubits: 2,
            witness_qubits: 2,
            completeness: 2.0 / 3.0,
            soundness: 1.0 / 3.0,
        }
    }
}

impl Default for TrialSection {
    fn default() -> Self {
        Self {
            rewinding: 200,
            gate_removal: 500,
            c1_soundness: 20,
            c2_soundness: 50,
            block_structure: 50,
            interval_removal: 200,
            truncation_law: 3,
            prob_trunc: 10,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            counter_dims: vec![8, 16, 32, 64],
            q: vec![8, 12, 16, 20],
            m: vec![4, 5, 6, 7, 8],
            ell: 1,
            q_bits: (4..=16).collect(),
            soundness_q_bits: 12,
        }
    }
}

impl Default for ProbTruncSection {
    fn default() -> Self {
        Self { delta: 0.1 }
    }
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            construction: qmalab::tolerance::CONSTRUCTION,
            end_to_end: qmalab::tolerance::END_TO_END,
            law_slope: 0.15,
        }
    }
}

/// A configuration that cannot be run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Dimension of the truncation-law counter, `D > 2^{max m} + ℓ`.
    pub fn law_counter_dim(&self) -> Result<usize, ConfigError> {
        let m = *self.sweep.m.iter().max().ok_or(ConfigError("sweep.m is empty".into()))?;
        TruncationParams::for_split(m, self.sweep.ell)
            .map(|p| p.dim)
            .map_err(|e| ConfigError(format!("sweep.m: {e}")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.run;
        if !(1..=4).contains(&r.ancilla_qubits) || r.witness_qubits > 4 {
            return fail("run.ancilla_qubits must lie in 1..=4 and run.witness_qubits in 0..=4");
        }
        if !(0.0..=1.0).contains(&r.soundness) || !(r.completeness <= 1.0 && r.completeness > r.soundness) {
            return fail("run needs 0 ≤ soundness < completeness ≤ 1");
        }
        let s = &self.sweep;
        for (name, empty) in [
            ("sweep.counter_dims", s.counter_dims.is_empty()),
            ("sweep.q", s.q.is_empty()),
            ("sweep.m", s.m.is_empty()),
            ("sweep.q_bits", s.q_bits.is_empty()),
            ("c1.p_yes", self.c1.p_yes.is_empty()),
            ("c2.p_yes", self.c2.p_yes.is_empty()),
        ] {
            if empty {
                return fail(format!("{name} must not be empty"));
            }
        }
        if s.counter_dims.iter().any(|&d| d < 2) {
            return fail("sweep.counter_dims entries must be at least 2");
        }
        if s.q_bits.iter().chain([&s.soundness_q_bits]).any(|q| !(1..=16).contains(q)) {
            return fail("prob-trunc claim widths must lie in 1..=16");
        }
        if s.q.iter().any(|&q| q > 4096) {
            return fail("sweep.q entries must be at most 4096");
        }
        for &m in &s.m {
            TruncationParams::for_split(m, s.ell).map_err(|e| ConfigError(format!("sweep.m: {e}")))?;
        }
        if self.c1.p_yes.iter().any(|p| !(*p > 0.5 && *p <= 1.0)) {
            return fail("c1.p_yes entries must lie in (1/2, 1]");
        }
        if !(self.c1.p_no_max > 0.0 && self.c1.p_no_max <= 1.0 / 16.0) {
            return fail("c1.p_no_max must lie in (0, 1/16]");
        }
        if self.c2.p_yes.iter().any(|p| !(*p > 0.25 && *p <= 1.0)) {
            return fail("c2.p_yes entries must lie in (1/4, 1]");
        }
        if !(self.c2.p_no_max > 0.0 && self.c2.p_no_max < 0.25) {
            return fail("c2.p_no_max must lie in (0, 1/4)");
        }
        if !(self.prob_trunc.delta > 0.0 && self.prob_trunc.delta < 0.5) {
            return fail("prob_trunc.delta must lie in (0, 1/2)");
        }
        if !(r.completeness > 0.5 && r.soundness < 0.5) {
            return fail("run needs completeness > 1/2 > soundness for the prob-trunc amplifier");
        }
        let t = &self.tolerances;
        if [t.construction, t.end_to_end, t.law_slope].iter().any(|x| !(*x >= 0.0)) {
            return fail("tolerances must be nonnegative");
        }
        self.check_dims()
    }

    fn check_dims(&self) -> Result<(), ConfigError> {
        let base = 1usize << (self.run.ancilla_qubits + self.run.witness_qubits);
        let max_d = *self.sweep.counter_dims.iter().max().expect("validated nonempty");
        let centering = Centering::for_gap(self.run.completeness, self.run.soundness)
            .map_err(|e| ConfigError(e.to_string()))?;
        let max_q = *self.sweep.q.iter().max().expect("validated nonempty");
        let amp_d = TruncationParams::for_delta(max_q, centering.delta)
            .map_err(|e| ConfigError(e.to_string()))?
            .dim;
        let needs = [
            ("construction 1", 2 * max_d * base),
            ("construction 2", max_d * base),
            ("truncation amplifier", 2 * amp_d * base),
            ("truncation law", self.law_counter_dim()? * base),
        ];
        for (what, dim) in needs {
            if dim > MAX_TOTAL_DIM {
                return fail(format!(
                    "{what} needs dimension {dim}, above the limit {MAX_TOTAL_DIM}"
                ));
            }
        }
        Ok(())
    }
}
