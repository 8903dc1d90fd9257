//! Invariant suites. Each suite draws from its own random stream, records the
//! checked quantities as tidy CSV rows and reduces them to [`Invariant`]s.

use anyhow::{bail, Context, Result};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use qmalab::algebra::random::{haar_unitary, random_state, seeded_rng, LabRng};
use qmalab::algebra::{fidelity, StateVector, C64};
use qmalab::amplifiers::{
    amplify_new, amplify_prob_trunc, counter_size_offset, fit_completeness_error,
    prob_trunc_rejection_closed_form, prob_trunc_sweep, truncation_law_fit,
    witness_truncation_sweep, AmplifierReport, ProbTruncVerifier, TRUNCATION_LAW_SLOPE,
};
use qmalab::constructions::{
    block_structure_check, build_c1, build_c2, max_acceptance, rejection_closed_form,
    soundness_bound_c1, soundness_bound_c2,
};
use qmalab::counter::{geometric_witness, interval_removal_bound, remove_interval, ConstructionTag};
use qmalab::verifier::{
    center_gap, controlled_gate_removal_bound, controlled_gate_removal_distance, optimal_witness,
    rewinding_basis, Verifier,
};

use crate::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Suite {
    Rewinding,
    C1,
    C2,
    Truncation,
    ProbTrunc,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Rewinding,
        Suite::C1,
        Suite::C2,
        Suite::Truncation,
        Suite::ProbTrunc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rewinding => "rewinding",
            Suite::C1 => "c1",
            Suite::C2 => "c2",
            Suite::Truncation => "truncation",
            Suite::ProbTrunc => "prob-trunc",
        }
    }

    /// The suite's random stream; fixed per suite so that selecting a subset
    /// of suites does not change their results.
    fn rng(self, seed: u64) -> LabRng {
        let mut rng = seeded_rng(seed);
        rng.set_stream(self as u64 + 1);
        rng
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<SuiteOutput> {
        let mut rng = self.rng(cfg.run.seed);
        let mut out = SuiteOutput::new(self);
        match self {
            Suite::Rewinding => rewinding(cfg, &mut rng, &mut out),
            Suite::C1 => c1(cfg, &mut rng, &mut out),
            Suite::C2 => c2(cfg, &mut rng, &mut out),
            Suite::Truncation => truncation(cfg, &mut rng, &mut out),
            Suite::ProbTrunc => prob_trunc(cfg, &mut rng, &mut out),
        }
        .with_context(|| format!("suite {}", self.name()))?;
        Ok(out)
    }
}

/// A checked quantity: the worst observed value against its limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Invariant {
    pub suite: &'static str,
    pub name: &'static str,
    pub observed: f64,
    pub limit: f64,
    /// `observed ≤ limit`; NaN never holds.
    pub holds: bool,
    /// Informational invariants are reported but never fail a run.
    pub enforced: bool,
}

/// One CSV file of tidy rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub summary: serde_json::Map<String, Value>,
    pub invariants: Vec<Invariant>,
    pub tables: Vec<Table>,
    pub reports: Vec<AmplifierReport>,
}

impl SuiteOutput {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            summary: serde_json::Map::new(),
            invariants: Vec::new(),
            tables: Vec::new(),
            reports: Vec::new(),
        }
    }

    fn check(&mut self, name: &'static str, observed: f64, limit: f64, enforced: bool) {
        self.invariants.push(Invariant {
            suite: self.suite.name(),
            name,
            observed,
            limit,
            holds: observed <= limit,
            enforced,
        });
    }

    fn at_most(&mut self, name: &'static str, observed: f64, limit: f64) {
        self.check(name, observed, limit, true);
    }

    fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        self.tables.push(Table {
            file: format!("{}_{stem}.csv", self.suite.name().replace('-', "_")),
            bytes: w.into_inner().context("flushing csv")?,
        });
        Ok(())
    }

    fn note(&mut self, key: &str, value: Value) {
        self.summary.insert(key.to_string(), value);
    }
}

/// Largest value, `-inf` when there is none; NaN propagates so it cannot pass.
fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, |m, x| {
        if x.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(x)
        }
    })
}

fn spectral_base(cfg: &ExperimentConfig, p_max: f64, rng: &mut LabRng) -> Result<Verifier> {
    let r = &cfg.run;
    Ok(Verifier::with_top_eigenvalue(
        r.ancilla_qubits,
        r.witness_qubits,
        p_max,
        r.completeness,
        r.soundness,
        rng,
    )?)
}

fn rewinding(cfg: &ExperimentConfig, rng: &mut LabRng, out: &mut SuiteOutput) -> Result<()> {
    const DIMS: [(usize, usize); 6] = [(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)];

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        ancilla_qubits: usize,
        witness_qubits: usize,
        p: f64,
        degenerate: bool,
        v_w0: f64,
        v_w1: f64,
        w1_on_zero: f64,
        shape: f64,
        block_error: Option<f64>,
    }
    let mut rows = Vec::new();
    for trial in 0..cfg.trials.rewinding {
        let (a, w) = DIMS[trial % DIMS.len()];
        let v = Verifier::haar(a, w, cfg.run.completeness, cfg.run.soundness, rng)?;
        let (_, w0) = optimal_witness(&v)?;
        let basis = rewinding_basis(&v, &w0)?;
        let [v_w0, v_w1, w1_on_zero, shape] = basis.relation_residuals(&v)?;
        let block_error = basis.block_matrix(&v)?.map(|m| block_error(&m, basis.p));
        rows.push(Row {
            trial,
            ancilla_qubits: a,
            witness_qubits: w,
            p: basis.p,
            degenerate: basis.is_degenerate(),
            v_w0,
            v_w1,
            w1_on_zero,
            shape,
            block_error,
        });
    }
    let tol = cfg.tolerances.end_to_end;
    let relations = worst(rows.iter().map(|r| r.v_w0.max(r.v_w1).max(r.w1_on_zero).max(r.shape)));
    let blocks = worst(rows.iter().filter_map(|r| r.block_error));
    out.at_most("rewinding_relations", relations, tol);
    out.at_most("rewinding_block_matrix", blocks, tol);
    out.note("trials", json!(rows.len()));
    out.note("degenerate", json!(rows.iter().filter(|r| r.degenerate).count()));
    out.table("relations", &rows)?;

    #[derive(Serialize)]
    struct GateRow {
        trial: usize,
        target_qubits: usize,
        p_raw: f64,
        distance_raw: f64,
        bound_raw: f64,
        swapped: bool,
        p: f64,
        distance: f64,
        bound: f64,
    }
    let mut rows = Vec::new();
    for trial in 0..cfg.trials.gate_removal {
        let k = 1 + trial % 3;
        let n = 1usize << k;
        let psi = random_state(2 * n, rng);
        let u = haar_unitary(n, rng);
        let (p_raw, distance_raw) = controlled_gate_removal_distance(&psi, &u)?;
        // The bound needs the control populated with probability at most 1/2;
        // relabelling the control basis puts every sample in that regime.
        let swapped = p_raw > 0.5;
        let (p, distance) = if swapped {
            let mut amps = psi.amplitudes().to_vec();
            amps.rotate_left(n);
            controlled_gate_removal_distance(&StateVector::new(amps)?, &u)?
        } else {
            (p_raw, distance_raw)
        };
        rows.push(GateRow {
            trial,
            target_qubits: k,
            p_raw,
            distance_raw,
            bound_raw: controlled_gate_removal_bound(p_raw),
            swapped,
            p,
            distance,
            bound: controlled_gate_removal_bound(p),
        });
    }
    let tight = cfg.tolerances.construction;
    out.at_most(
        "gate_removal_bound",
        worst(rows.iter().map(|r| r.distance - r.bound)),
        tight,
    );
    let unconditioned = rows
        .iter()
        .filter(|r| !(r.distance_raw <= r.bound_raw + tight))
        .count();
    out.check("gate_removal_bound_any_population", unconditioned as f64, 0.0, false);
    out.note("gate_removal_trials", json!(rows.len()));
    out.note("gate_removal_swapped", json!(rows.iter().filter(|r| r.swapped).count()));
    out.table("gate_removal", &rows)
}

fn block_error(m: &[[C64; 2]; 2], p: f64) -> f64 {
    let (a, b) = ((1.0 - p).sqrt(), p.sqrt());
    let expected = [[a, b], [b, -a]];
    let mut err = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            err = err.max((m[i][j] - C64::new(expected[i][j], 0.0)).norm());
        }
    }
    err
}

#[derive(Serialize)]
struct CompletenessRow {
    base: String,
    p: f64,
    counter_dim: usize,
    gamma: f64,
    acceptance: f64,
    bound: f64,
}

#[derive(Serialize)]
struct SoundnessRow {
    trial: usize,
    p_max: f64,
    counter_dim: usize,
    max_acceptance: f64,
    bound: f64,
}

fn c1(cfg: &ExperimentConfig, rng: &mut LabRng, out: &mut SuiteOutput) -> Result<()> {
    let r = &cfg.run;
    let mut bases = Vec::new();
    for &p in &cfg.c1.p_yes {
        bases.push((format!("spectral_{p}"), p, spectral_base(cfg, p, rng)?));
    }
    bases.push((
        "always_accept".into(),
        1.0,
        Verifier::always_accept(r.ancilla_qubits, r.witness_qubits)?,
    ));
    let mut rows = Vec::new();
    let mut perfect = Vec::new();
    for (name, nominal, v) in &bases {
        let (p, w) = optimal_witness(v)?;
        for &d in &cfg.sweep.counter_dims {
            let av = build_c1(v, d)?;
            let g = geometric_witness(p, d, ConstructionTag::C1)?;
            let acceptance = av.acceptance(&g.state().tensor(&w))?;
            if *nominal == 1.0 {
                perfect.push(1.0 - acceptance);
            }
            rows.push(CompletenessRow {
                base: name.clone(),
                p,
                counter_dim: d,
                gamma: g.gamma(),
                acceptance,
                bound: 1.0 - g.trace_distance_to_ideal(),
            });
        }
    }
    let tol = cfg.tolerances.end_to_end;
    out.at_most(
        "c1_completeness",
        worst(rows.iter().map(|r| r.bound - r.acceptance)),
        tol,
    );
    out.at_most(
        "c1_perfect_completeness",
        worst(perfect.iter().map(|x| x.abs())),
        cfg.tolerances.construction,
    );
    out.table("completeness", &rows)?;

    let dims = &cfg.sweep.counter_dims;
    let mut rows = Vec::new();
    for trial in 0..cfg.trials.c1_soundness {
        let p_max = rng.random_range(0.0..=cfg.c1.p_no_max);
        let v = spectral_base(cfg, p_max, rng)?;
        let d = dims[trial % dims.len()];
        let (best, _) = max_acceptance(&build_c1(&v, d)?)?;
        rows.push(SoundnessRow {
            trial,
            p_max,
            counter_dim: d,
            max_acceptance: best,
            bound: soundness_bound_c1(p_max),
        });
    }
    out.at_most(
        "c1_soundness",
        worst(rows.iter().map(|r| r.max_acceptance - r.bound)),
        tol,
    );
    out.note("soundness_trials", json!(rows.len()));
    out.note(
        "worst_soundness_margin",
        json!(worst(rows.iter().map(|r| r.max_acceptance - r.bound))),
    );
    out.table("soundness", &rows)
}

fn c2(cfg: &ExperimentConfig, rng: &mut LabRng, out: &mut SuiteOutput) -> Result<()> {
    let tol = cfg.tolerances.end_to_end;
    let dims = &cfg.sweep.counter_dims;

    #[derive(Serialize)]
    struct Row {
        base: String,
        p: f64,
        counter_dim: usize,
        gamma: f64,
        acceptance: f64,
        rejection: f64,
        rejection_closed_form: f64,
        bound: f64,
        centered_delta: Option<f64>,
        centered_bound: Option<f64>,
    }
    let mut bases = Vec::new();
    for &p in &cfg.c2.p_yes {
        bases.push((format!("spectral_{p}"), None, spectral_base(cfg, p, rng)?));
    }
    let (c, s) = (cfg.run.completeness, cfg.run.soundness);
    let centered = center_gap(&spectral_base(cfg, c, rng)?)?;
    let delta = centered.completeness() - 0.25;
    bases.push(("centered".into(), Some(delta), centered));
    let mut rows = Vec::new();
    for (name, delta, v) in &bases {
        let (p, w) = optimal_witness(v)?;
        for &d in dims {
            let av = build_c2(v, d)?;
            let g = geometric_witness(p, d, ConstructionTag::C2)?;
            let (acceptance, rejection) = av.outcome(&g.state().tensor(&w))?;
            rows.push(Row {
                base: name.clone(),
                p,
                counter_dim: d,
                gamma: g.gamma(),
                acceptance,
                rejection,
                rejection_closed_form: rejection_closed_form(p, g.state().amplitudes()),
                bound: 1.0 - g.trace_distance_to_ideal(),
                centered_delta: *delta,
                centered_bound: delta.map(|x| 1.0 - (1.0 - 4.0 * x).powi(d as i32 - 1)),
            });
        }
    }
    out.at_most(
        "c2_closed_form",
        worst(rows.iter().map(|r| (r.rejection - r.rejection_closed_form).abs())),
        tol,
    );
    out.at_most(
        "c2_completeness",
        worst(rows.iter().map(|r| r.bound - r.acceptance)),
        tol,
    );
    out.at_most(
        "c2_centered_completeness",
        worst(rows.iter().filter_map(|r| Some(r.centered_bound? - r.acceptance))),
        tol,
    );
    out.note("centering", json!({ "c": c, "s": s, "delta": delta }));
    out.table("completeness", &rows)?;

    let mut rows = Vec::new();
    for trial in 0..cfg.trials.c2_soundness {
        let p_max = rng.random_range(0.0..cfg.c2.p_no_max);
        let v = spectral_base(cfg, p_max, rng)?;
        let d = dims[trial % dims.len()];
        let (best, _) = max_acceptance(&build_c2(&v, d)?)?;
        rows.push(SoundnessRow {
            trial,
            p_max,
            counter_dim: d,
            max_acceptance: best,
            bound: soundness_bound_c2(p_max),
        });
    }
    out.at_most(
        "c2_soundness",
        worst(rows.iter().map(|r| r.max_acceptance - r.bound)),
        tol,
    );
    out.at_most("c2_bound_at_quarter", (soundness_bound_c2(0.25) - 1.0).abs(), 0.0);
    out.note("soundness_trials", json!(rows.len()));
    out.table("soundness", &rows)?;

    #[derive(Serialize)]
    struct BlockRow {
        trial: usize,
        counter_dim: usize,
        min_gap: f64,
        max_off_block: f64,
        best_block: f64,
        global_max: f64,
    }
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    let r = &cfg.run;
    while rows.len() < cfg.trials.block_structure {
        let v = Verifier::haar(r.ancilla_qubits, r.witness_qubits, c, s, rng)?;
        let d = dims[rows.len() % dims.len()];
        let b = block_structure_check(&build_c2(&v, d)?)?;
        if !b.reliable {
            skipped += 1;
            if skipped > 10 * cfg.trials.block_structure.max(1) {
                bail!("too many degenerate bases for the block-structure check");
            }
            continue;
        }
        rows.push(BlockRow {
            trial: rows.len(),
            counter_dim: d,
            min_gap: b.min_gap,
            max_off_block: b.max_off_block,
            best_block: worst(b.block_maxima.iter().copied()),
            global_max: b.global_max,
        });
    }
    out.at_most(
        "c2_block_diagonal",
        worst(rows.iter().map(|r| r.max_off_block)),
        tol,
    );
    out.at_most(
        "c2_block_maximum",
        worst(rows.iter().map(|r| (r.best_block - r.global_max).abs())),
        tol,
    );
    out.note("block_trials", json!(rows.len()));
    out.note("block_degenerate_skipped", json!(skipped));
    out.table("blocks", &rows)
}

fn truncation(cfg: &ExperimentConfig, rng: &mut LabRng, out: &mut SuiteOutput) -> Result<()> {
    let tol = cfg.tolerances.end_to_end;
    let (c, s) = (cfg.run.completeness, cfg.run.soundness);

    #[derive(Serialize)]
    struct Row {
        q: u32,
        counter_dim: usize,
        counter_qubits: usize,
        size_offset: f64,
        one_minus_c: f64,
        residual_log2: f64,
        soundness: f64,
        soundness_bound: f64,
    }
    let yes = spectral_base(cfg, c, rng)?;
    let no = spectral_base(cfg, s, rng)?;
    let mut rows = Vec::new();
    for &q in &cfg.sweep.q {
        let (av, yes_report) = amplify_new(&yes, q)?;
        let (_, no_report) = amplify_new(&no, q)?;
        let report = yes_report.merge(&no_report)?;
        let dim = av.counter_dim();
        rows.push(Row {
            q,
            counter_dim: dim,
            counter_qubits: av.resources().counter_qubits,
            size_offset: counter_size_offset(dim, q, c, s),
            one_minus_c: 1.0 - report.completeness_measured.context("no completeness")?,
            residual_log2: report.completeness_residual_log2.context("no residual")?,
            soundness: report.soundness_measured.context("no soundness")?,
            soundness_bound: report.soundness_bound,
        });
        out.reports.push(report);
    }
    // Below double resolution the measured error is 0 and the analytic
    // residual carries the check.
    out.at_most(
        "new_completeness",
        worst(rows.iter().map(|r| r.one_minus_c - 2f64.powi(-(r.q as i32)))),
        tol,
    );
    out.at_most(
        "new_completeness_residual",
        worst(rows.iter().map(|r| r.residual_log2 + r.q as f64)),
        0.0,
    );
    out.at_most(
        "new_soundness",
        worst(rows.iter().map(|r| r.soundness - r.soundness_bound)),
        tol,
    );
    out.at_most(
        "new_counter_size",
        worst(rows.iter().map(|r| r.size_offset.abs())),
        2.0,
    );
    out.table("amplifier", &rows)?;

    interval_removal(cfg, rng, out)?;
    truncation_law(cfg, rng, out)
}

fn interval_removal(cfg: &ExperimentConfig, rng: &mut LabRng, out: &mut SuiteOutput) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        trial: usize,
        dim: usize,
        ell: usize,
        k: usize,
        fidelity: f64,
        oracle_k: usize,
        oracle_fidelity: f64,
        bound: f64,
    }
    let mut rows = Vec::new();
    for trial in 0..cfg.trials.interval_removal {
        let dim = rng.random_range(6..=32);
        let ell = rng.random_range(1..=4);
        let psi = random_state(dim, rng);
        let (k, phi) = remove_interval(&psi, ell)?;
        let (oracle_k, oracle_fidelity) = best_window(&psi, ell)?;
        rows.push(Row {
            trial,
            dim,
            ell,
            k,
            fidelity: fidelity(&psi, &phi)?,
            oracle_k,
            oracle_fidelity,
            bound: interval_removal_bound(dim, ell),
        });
    }
    let tight = cfg.tolerances.construction;
    out.at_most(
        "interval_removal_bound",
        worst(rows.iter().map(|r| r.bound - r.fidelity)),
        tight,
    );
    out.at_most(
        "interval_removal_oracle",
        worst(rows.iter().map(|r| r.oracle_fidelity - r.fidelity)),
        tight,
    );
    out.note("interval_trials", json!(rows.len()));
    out.note(
        "interval_window_disagreements",
        json!(rows.iter().filter(|r| r.k != r.oracle_k).count()),
    );
    out.table("interval_removal", &rows)
}

/// Tries every window and keeps the renormalized state closest to `psi`.
fn best_window(psi: &StateVector, ell: usize) -> Result<(usize, f64)> {
    let d = psi.dim();
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..=d - ell {
        let mut amps = psi.amplitudes().to_vec();
        for a in &mut amps[k..k + ell] {
            *a = C64::new(0.0, 0.0);
        }
        let Ok(phi) = StateVector::new(amps).and_then(|x| x.normalized()) else {
            continue;
        };
        let f = fidelity(psi, &phi)?;
        if f > best.1 {
            best = (k, f);
        }
    }
    Ok(best)
}

fn truncation_law(cfg: &ExperimentConfig, rng: &mut LabRng, out: &mut SuiteOutput) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        base: usize,
        p_max: f64,
        counter_dim: usize,
        m: u32,
        ell: usize,
        full_max: f64,
        restricted_max: f64,
        drop: f64,
        implied_constant: f64,
        explicit_bound: f64,
    }
    let dim = cfg.law_counter_dim()?;
    let ell = cfg.sweep.ell;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for base in 0..cfg.trials.truncation_law {
        let p_max = rng.random_range(0.1..0.25);
        let v = spectral_base(cfg, p_max, rng)?;
        let points = witness_truncation_sweep(&build_c2(&v, dim)?, &cfg.sweep.m, ell)?;
        if let Ok(fit) = truncation_law_fit(&points) {
            fits.push(json!({
                "base": base,
                "p_max": p_max,
                "slope": fit.line.slope,
                "intercept": fit.line.intercept,
                "constant": fit.constant,
            }));
        }
        rows.extend(points.into_iter().map(|p| Row {
            base,
            p_max,
            counter_dim: p.counter_dim,
            m: p.m,
            ell: p.ell,
            full_max: p.full_max,
            restricted_max: p.restricted_max,
            drop: p.drop,
            implied_constant: p.implied_constant,
            explicit_bound: p.explicit_bound,
        }));
    }
    out.at_most(
        "truncation_explicit_bound",
        worst(rows.iter().map(|r| r.drop - r.explicit_bound)),
        0.0,
    );
    let slope_error = worst(
        fits.iter()
            .map(|f| (f["slope"].as_f64().unwrap_or(f64::NAN) - TRUNCATION_LAW_SLOPE).abs()),
    );
    out.check("truncation_law_slope", slope_error, cfg.tolerances.law_slope, false);
    out.note("law_counter_dim", json!(dim));
    out.note("law_target_slope", json!(TRUNCATION_LAW_SLOPE));
    out.note("law_fits", Value::Array(fits));
    out.note(
        "law_max_constant",
        json!(worst(rows.iter().map(|r| r.implied_constant))),
    );
    out.table("law", &rows)
}

fn prob_trunc(cfg: &ExperimentConfig, rng: &mut LabRng, out: &mut SuiteOutput) -> Result<()> {
    let tol = cfg.tolerances.end_to_end;
    let r = &cfg.run;

    #[derive(Serialize)]
    struct ExactRow {
        base: usize,
        p: f64,
        rejection: f64,
    }
    #[derive(Serialize)]
    struct SweepRow {
        base: usize,
        q_bits: u32,
        p: f64,
        p_down: f64,
        p_up: f64,
        rejection_down: f64,
        rejection_up: f64,
        closed_form_down: f64,
    }
    let mut exact = Vec::new();
    let mut sweep = Vec::new();
    let mut fits = Vec::new();
    for base in 0..=cfg.trials.prob_trunc {
        let v = if base == 0 {
            Verifier::always_accept(r.ancilla_qubits, r.witness_qubits)?
        } else {
            spectral_base(cfg, rng.random_range(0.5..1.0), rng)?
        };
        let (p, w) = optimal_witness(&v)?;
        let pt = ProbTruncVerifier::new(&v, 1)?;
        exact.push(ExactRow {
            base,
            p,
            rejection: pt.rejection_at(p, &w)?,
        });
        let points = prob_trunc_sweep(&v, &cfg.sweep.q_bits)?;
        let errors: Vec<(u32, f64)> = points
            .iter()
            .map(|x| (x.q_bits, x.rejection_down.max(x.rejection_up)))
            .collect();
        let fit = fit_completeness_error(&errors)?;
        fits.push(json!({
            "base": base,
            "p": p,
            "constant": fit.constant,
            "slope": fit.line.map(|l| l.slope),
        }));
        sweep.extend(points.into_iter().map(|x| SweepRow {
            base,
            q_bits: x.q_bits,
            p: x.p,
            p_down: x.p_down,
            p_up: x.p_up,
            rejection_down: x.rejection_down,
            rejection_up: x.rejection_up,
            closed_form_down: prob_trunc_rejection_closed_form(x.p, x.p_down),
        }));
    }
    out.at_most("prob_trunc_exact", worst(exact.iter().map(|x| x.rejection)), tol);
    out.at_most(
        "prob_trunc_closed_form",
        worst(sweep.iter().map(|x| (x.rejection_down - x.closed_form_down).abs())),
        tol,
    );
    // Rounding moves the claim by less than 2^{-q}, so the error is at most
    // (2^{-q}/p̂)² ≤ 4·2^{-2q}.
    out.at_most(
        "prob_trunc_rate",
        worst(sweep.iter().map(|x| {
            x.rejection_down.max(x.rejection_up) * 4f64.powi(x.q_bits as i32)
        })),
        4.0 + tol,
    );
    let constant = worst(fits.iter().map(|f| f["constant"].as_f64().unwrap_or(f64::NAN)));
    out.note("completeness_constant", json!(constant));
    out.note("completeness_fits", Value::Array(fits));
    out.table("exact", &exact)?;
    out.table("sweep", &sweep)?;

    #[derive(Serialize)]
    struct SoundRow {
        base: usize,
        p_max: f64,
        q_bits: u32,
        claims: usize,
        min_rejection: f64,
        worst_claim: f64,
        bound: f64,
    }
    let delta = cfg.prob_trunc.delta;
    let bits = cfg.sweep.soundness_q_bits;
    let mut sound = Vec::new();
    for base in 0..cfg.trials.prob_trunc.max(1) {
        let v = spectral_base(cfg, 0.5 - delta, rng)?;
        let pt = ProbTruncVerifier::new(&v, bits)?;
        let (acc, k) = pt.max_acceptance()?;
        sound.push(SoundRow {
            base,
            p_max: 0.5 - delta,
            q_bits: bits,
            claims: pt.levels(),
            min_rejection: 1.0 - acc,
            worst_claim: pt.decode(k),
            bound: 4.0 * delta * delta,
        });
    }
    out.at_most(
        "prob_trunc_soundness",
        worst(sound.iter().map(|x| x.bound - x.min_rejection)),
        tol,
    );
    out.table("soundness", &sound)?;

    let (c, s) = (r.completeness, r.soundness);
    let yes = spectral_base(cfg, c, rng)?;
    let no = spectral_base(cfg, s, rng)?;
    for &q in &cfg.sweep.q_bits {
        let (_, a) = amplify_prob_trunc(&yes, q)?;
        let (_, b) = amplify_prob_trunc(&no, q)?;
        out.reports.push(a.merge(&b)?);
    }
    out.at_most(
        "prob_trunc_report_soundness",
        worst(
            out.reports
                .iter()
                .map(|x| x.soundness_measured.unwrap_or(f64::NAN) - x.soundness_bound),
        ),
        tol,
    );
    Ok(())
}
