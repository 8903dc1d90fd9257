//! Report assembly. Every artifact is rendered in memory first so a run can be
//! written out or compared byte-for-byte against a previous one.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use qmalab::amplifiers::{formula_rows, table1_report, AmplifierReport, Table1Row};

use crate::config::ExperimentConfig;
use crate::suites::{Invariant, Suite, SuiteOutput};

/// Version of the JSON and CSV layouts.
pub const SCHEMA_VERSION: u32 = 1;

pub const REPORT_FILE: &str = "reports.json";
pub const INVARIANTS_FILE: &str = "invariants.csv";
pub const TABLE_FILE: &str = "table1.csv";

#[derive(Clone, Debug)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
    pub invariants: Vec<Invariant>,
}

impl Artifacts {
    /// The first enforced invariant that does not hold, in suite order.
    pub fn first_failure(&self) -> Option<&Invariant> {
        self.invariants.iter().find(|i| i.enforced && !i.holds)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    /// Names of the files in `dir` that are missing or differ from this run.
    pub fn compare(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(name, bytes)| std::fs::read(dir.join(name)).ok().as_ref() != Some(*bytes))
            .map(|(name, _)| name.clone())
            .collect()
    }
}

pub fn run(cfg: &ExperimentConfig, suites: &[Suite]) -> Result<Artifacts> {
    let outputs = suites
        .iter()
        .map(|s| s.run(cfg))
        .collect::<Result<Vec<SuiteOutput>>>()?;
    assemble(cfg, &outputs)
}

fn assemble(cfg: &ExperimentConfig, outputs: &[SuiteOutput]) -> Result<Artifacts> {
    let mut files = BTreeMap::new();
    let invariants: Vec<Invariant> = outputs.iter().flat_map(|o| o.invariants.clone()).collect();
    let reports: Vec<&AmplifierReport> = outputs.iter().flat_map(|o| &o.reports).collect();

    let summaries: serde_json::Map<String, serde_json::Value> = outputs
        .iter()
        .map(|o| (o.suite.name().to_string(), o.summary.clone().into()))
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "passed": invariants.iter().all(|i| i.holds || !i.enforced),
        "suites": summaries,
        "invariants": invariants,
        "amplifier_reports": reports,
    });
    let mut json = serde_json::to_vec_pretty(&doc)?;
    json.push(b'\n');
    files.insert(REPORT_FILE.to_string(), json);

    files.insert(INVARIANTS_FILE.to_string(), csv_bytes(&invariants)?);

    let owned: Vec<AmplifierReport> = reports.into_iter().cloned().collect();
    let mut rows = table1_report(&owned);
    for &q in &cfg.sweep.q {
        rows.extend(formula_rows(q, cfg.run.completeness, cfg.run.soundness));
    }
    files.insert(TABLE_FILE.to_string(), table_bytes(&rows)?);

    for o in outputs {
        for t in &o.tables {
            files.insert(t.file.clone(), t.bytes.clone());
        }
    }
    Ok(Artifacts { files, invariants })
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().context("flushing csv")
}

/// The comparison table, with its header written even when empty.
fn table_bytes(rows: &[Table1Row]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(Table1Row::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().context("flushing csv")
}
