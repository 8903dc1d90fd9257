//! End-to-end amplifiers: the counter-based truncation amplifier, the
//! probability-truncation amplifier, the witness-truncation law and the
//! resource table comparing them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{eigh, gram, OpFlags, Operator, Program, SpaceLayout, StateVector, C64};
use crate::circuit::ceil_log2;
use crate::constructions::{
    build_c2, max_acceptance, product_block_maxima, rejection_closed_form, soundness_bound_c2,
    AmplifiedVerifier, ConstructionTag,
};
use crate::counter::geometric_witness;
use crate::error::{invalid, Result};
use crate::tolerance;
use crate::verifier::{center_gap, optimal_witness, Verifier, ANCILLA, WITNESS};

/// Full-space dimension up to which `amplify_new` simulates the witness directly.
const MAX_SIMULATED_DIM: usize = 1 << 16;
/// Witness-space dimension up to which `amplify_new` eigensolves for soundness.
const MAX_EIGEN_DIM: usize = 1 << 11;

/// Which amplifier a report row describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AmplifierId {
    #[serde(rename = "fk16")]
    Fk16,
    #[serde(rename = "prob-trunc")]
    ProbTrunc,
    #[serde(rename = "new")]
    New,
    #[serde(rename = "new+")]
    NewPlus,
}

impl AmplifierId {
    pub fn label(self) -> &'static str {
        match self {
            AmplifierId::Fk16 => "fk16",
            AmplifierId::ProbTrunc => "prob-trunc",
            AmplifierId::New => "new",
            AmplifierId::NewPlus => "new+",
        }
    }
}

/// Counter sizing for the truncation amplifier and the `(m, ℓ)` register split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    /// Target completeness exponent, `c′ = 1 − 2^{−q}`.
    pub q: u32,
    /// Half-gap of the centered verifier.
    pub delta: f64,
    /// Counter dimension, a power of two.
    pub dim: usize,
    pub m: Option<u32>,
    pub ell: usize,
}

impl TruncationParams {
    /// Smallest power of two `D ≥ 2` with `(1 − 4δ)^{D−1} ≤ 2^{−q}`.
    pub fn for_delta(q: u32, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.25) {
            return Err(invalid(format!("centered half-gap must lie in (0, 1/4], got {delta}")));
        }
        let rate = -(1.0 - 4.0 * delta).log2();
        let needed = if rate.is_infinite() {
            0.0
        } else {
            (q as f64 / rate).ceil()
        };
        let mut dim = 2usize;
        while ((dim - 1) as f64) < needed {
            dim *= 2;
        }
        Ok(Self {
            q,
            delta,
            dim,
            m: None,
            ell: 1,
        })
    }

    /// The split keeping the `m` least significant counter bits in the
    /// witness: `D` is the smallest power of two above `2^m + ℓ`.
    pub fn for_split(m: u32, ell: usize) -> Result<Self> {
        if ell == 0 || (m as f64) <= (ell as f64).log2() + 3.0 {
            return Err(invalid(format!("need m > log₂ ℓ + 3, got m = {m}, ℓ = {ell}")));
        }
        let dim = ((1usize << m) + ell + 1).next_power_of_two();
        Ok(Self {
            q: 0,
            delta: 0.0,
            dim,
            m: Some(m),
            ell,
        })
    }

    /// `log₂ (1 − 4δ)^{D−1}`, the centered completeness law.
    pub fn centered_residual_log2(&self) -> f64 {
        (self.dim as f64 - 1.0) * (1.0 - 4.0 * self.delta).log2()
    }
}

/// Parameters of the input verifier, in the columns of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportInput {
    pub c: f64,
    pub s: f64,
    pub l_m: usize,
    pub l_a: usize,
    pub t_a: usize,
}

impl ReportInput {
    pub fn of(v: &Verifier) -> Self {
        Self {
            c: v.completeness(),
            s: v.soundness(),
            l_m: v.witness_qubits(),
            l_a: v.ancilla_qubits() + v.witness_qubits(),
            t_a: v.cost(),
        }
    }
}

/// Measured and promised parameters of one amplifier run.
///
/// Completeness is measured on yes-instance bases (optimum at least `c`) and
/// soundness on no-instance bases (optimum at most `s`); the other field stays
/// empty. [`AmplifierReport::merge`] combines a yes and a no run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifierReport {
    pub amplifier: AmplifierId,
    pub input: ReportInput,
    /// Target exponent `q`, or the number of probability bits.
    pub q: u32,
    pub counter_dim: Option<usize>,
    /// `log₂` of the promised `1 − c′`.
    pub completeness_error_bound_log2: f64,
    pub completeness_measured: Option<f64>,
    /// `log₂` of the analytic residual bounding `1 − c′` for the measured witness.
    pub completeness_residual_log2: Option<f64>,
    pub soundness_bound: f64,
    pub soundness_measured: Option<f64>,
    pub l_m: usize,
    pub l_a: usize,
    pub t_a: usize,
    pub v_calls: usize,
    pub v_dagger_calls: usize,
}

impl AmplifierReport {
    /// Fills empty measurements of `self` from `other`, a run of the same
    /// amplifier with the same resources.
    pub fn merge(mut self, other: &AmplifierReport) -> Result<Self> {
        if self.amplifier != other.amplifier
            || self.q != other.q
            || self.counter_dim != other.counter_dim
        {
            return Err(invalid("reports describe different amplifier runs"));
        }
        self.completeness_measured = self.completeness_measured.or(other.completeness_measured);
        self.completeness_residual_log2 = self
            .completeness_residual_log2
            .or(other.completeness_residual_log2);
        self.soundness_measured = self.soundness_measured.or(other.soundness_measured);
        Ok(self)
    }

    pub fn total_calls(&self) -> usize {
        self.v_calls + self.v_dagger_calls
    }
}

fn is_yes_instance(p_max: f64, v: &Verifier) -> bool {
    p_max >= v.completeness() - tolerance::END_TO_END
}

fn is_no_instance(p_max: f64, v: &Verifier) -> bool {
    p_max <= v.soundness() + tolerance::END_TO_END
}

fn finite_log2(x: f64) -> Option<f64> {
    (x > 0.0).then(|| x.log2())
}

/// Center the gap, then apply construction 2 with a counter large enough for
/// completeness `1 − 2^{−q}`.
pub fn amplify_new(base: &Verifier, q: u32) -> Result<(AmplifiedVerifier, AmplifierReport)> {
    let centered = center_gap(base)?;
    let params = TruncationParams::for_delta(q, centered.completeness() - 0.25)?;
    let av = build_c2(&centered, params.dim)?;
    let (p_max, w) = optimal_witness(&centered)?;
    let (base_max, _) = optimal_witness(base)?;
    let levels = av.witness_levels();

    let mut completeness_measured = None;
    let mut completeness_residual_log2 = None;
    if is_yes_instance(base_max, base) && p_max > 0.25 {
        let g = geometric_witness(p_max, params.dim, ConstructionTag::C2)?;
        let rejection = if av.layout().dim() <= MAX_SIMULATED_DIM {
            av.rejection(&g.state().tensor(&w))?
        } else {
            rejection_closed_form(p_max, g.state().amplitudes())
        };
        completeness_measured = Some(1.0 - rejection);
        completeness_residual_log2 = finite_log2(g.gamma().abs())
            .map(|l| (g.dim() as f64 - 1.0) * l)
            .or(Some(f64::MIN));
    }
    let mut soundness_measured = None;
    if is_no_instance(base_max, base) && levels * centered.witness_dim() <= MAX_EIGEN_DIM {
        let best = match product_block_maxima(&av) {
            Ok(blocks) => blocks.iter().map(|b| b.1).fold(0.0, f64::max),
            Err(_) => max_acceptance(&av)?.0,
        };
        soundness_measured = Some(best);
    }

    let res = av.resources();
    let calls = res.v_calls + res.v_dagger_calls;
    let report = AmplifierReport {
        amplifier: AmplifierId::New,
        input: ReportInput::of(base),
        q,
        counter_dim: Some(params.dim),
        completeness_error_bound_log2: -(q as f64),
        completeness_measured,
        completeness_residual_log2,
        soundness_bound: soundness_bound_c2(centered.soundness()),
        soundness_measured,
        l_m: res.witness_qubits,
        l_a: res.total_qubits,
        t_a: calls * centered.cost() + res.overhead_gates,
        v_calls: res.v_calls,
        v_dagger_calls: res.v_dagger_calls,
    };
    Ok((av.with_witness_levels(levels)?, report))
}

/// `U(p̂)` with `γ = 1/(2p̂)`.
pub fn rotation_for(p_hat: f64) -> Result<Operator> {
    if !(0.5..=1.0).contains(&p_hat) {
        return Err(invalid(format!("rotation needs 1/2 ≤ p ≤ 1, got {p_hat}")));
    }
    let g = 1.0 / (2.0 * p_hat);
    let (a, b) = ((1.0 - g).max(0.0).sqrt(), g.sqrt());
    Ok(Operator::from_real(2, 2, &[a, b, b, -a]))
}

/// Rejection of an eigen-witness with acceptance `p` when the prover claims
/// `p̂`: `(1 − p/p̂)²`.
pub fn prob_trunc_rejection_closed_form(p: f64, p_hat: f64) -> f64 {
    (1.0 - p / p_hat).powi(2)
}

/// The probability-truncation verifier: the witness is a `q_bits` big-endian
/// claim `k` of the acceptance probability `k/2^{q_bits}` followed by `W`.
#[derive(Clone, Debug)]
pub struct ProbTruncVerifier {
    base: Verifier,
    q_bits: u32,
}

/// Qubit rotated by `U(p̂)`.
pub const ROTATION: &str = "Q";
/// Register holding the claimed probability.
pub const CLAIM: &str = "P";

impl ProbTruncVerifier {
    pub fn new(base: &Verifier, q_bits: u32) -> Result<Self> {
        if !(1..=24).contains(&q_bits) {
            return Err(invalid(format!("q_bits must lie in 1..=24, got {q_bits}")));
        }
        Ok(Self {
            base: base.clone(),
            q_bits,
        })
    }

    pub fn base(&self) -> &Verifier {
        &self.base
    }

    pub fn q_bits(&self) -> u32 {
        self.q_bits
    }

    pub fn levels(&self) -> usize {
        1 << self.q_bits
    }

    pub fn decode(&self, k: usize) -> f64 {
        k as f64 / self.levels() as f64
    }

    /// Largest grid point at or below `p`.
    pub fn encode_down(&self, p: f64) -> usize {
        ((p * self.levels() as f64).floor() as usize).min(self.levels() - 1)
    }

    /// Smallest grid point at or above `p`, clipped to the top of the grid.
    pub fn encode_up(&self, p: f64) -> usize {
        ((p * self.levels() as f64).ceil() as usize).min(self.levels() - 1)
    }

    fn layout(&self) -> Result<SpaceLayout> {
        SpaceLayout::new([
            (ROTATION, 2),
            (ANCILLA, self.base.ancilla_dim()),
            (WITNESS, self.base.witness_dim()),
        ])
    }

    /// The circuit run once the claim reads `p̂ ≥ 1/2`.
    pub fn fixed_claim_program(&self, p_hat: f64) -> Result<Program> {
        let u = rotation_for(p_hat)?;
        let ad = self.base.ancilla_dim();
        let mut z = DMatrix::<C64>::identity(ad, ad);
        for i in ad / 2..ad {
            z[(i, i)] = C64::new(-1.0, 0.0);
        }
        let z = Operator::trusted(z, OpFlags::UNITARY);
        let mut p = Program::new(self.layout()?);
        p.push(&u, &[ROTATION])?;
        p.push(self.base.unitary(), &[ANCILLA, WITNESS])?;
        p.push_controlled(&z, &[ANCILLA], ROTATION, |q| q == 1)?;
        p.push(&self.base.unitary().adjoint(), &[ANCILLA, WITNESS])?;
        p.push(&u.adjoint(), &[ROTATION])?;
        Ok(p)
    }

    /// Rejection of `|w⟩` under claim `p̂`, read off the `Q = 0, A = 0` amplitudes.
    pub fn rejection_at(&self, p_hat: f64, w: &StateVector) -> Result<f64> {
        crate::algebra::check_dim("witness", self.base.witness_dim(), w.dim())?;
        let prog = self.fixed_claim_program(p_hat)?;
        let mut input = StateVector::zeros(prog.layout().dim());
        input.amplitudes_mut()[..w.dim()].copy_from_slice(w.amplitudes());
        let out = prog.apply(&input)?;
        Ok(out.amplitudes()[..w.dim()].iter().map(|a| a.norm_sqr()).sum())
    }

    /// Rejection of `|k⟩_P|w⟩`.
    pub fn rejection(&self, k: usize, w: &StateVector) -> Result<f64> {
        if k >= self.levels() {
            return Err(invalid(format!("claim {k} outside the {}-bit grid", self.q_bits)));
        }
        if k < self.levels() / 2 {
            return Ok(1.0);
        }
        self.rejection_at(self.decode(k), w)
    }

    /// Rejection operator on `W` under claim `p̂`.
    pub fn rejection_block(&self, p_hat: f64) -> Result<Operator> {
        let prog = self.fixed_claim_program(p_hat)?;
        let wd = self.base.witness_dim();
        let mut cols = DMatrix::<C64>::identity(prog.layout().dim(), wd);
        prog.apply_to_columns(&mut cols)?;
        Ok(gram(cols.rows(0, wd)))
    }

    /// Smallest rejection over all witnesses with claim `p̂`.
    pub fn min_rejection_at(&self, p_hat: f64) -> Result<f64> {
        Ok(eigh(&self.rejection_block(p_hat)?)?.values[0])
    }

    /// Largest acceptance over the whole claim grid and `W`, with its claim.
    pub fn max_acceptance(&self) -> Result<(f64, usize)> {
        let mut best = (0.0, 0);
        for k in self.levels() / 2..self.levels() {
            let acc = 1.0 - self.min_rejection_at(self.decode(k))?;
            if acc > best.0 {
                best = (acc, k);
            }
        }
        Ok(best)
    }

    /// Rejection operator on `P ⊗ W` built from one dense circuit controlled
    /// on every claim; only for small `q_bits`.
    pub fn dense_rejection_povm(&self) -> Result<Operator> {
        if self.q_bits > 6 {
            return Err(invalid("dense evaluation is limited to q_bits ≤ 6"));
        }
        let ad = self.base.ancilla_dim();
        let wd = self.base.witness_dim();
        let layout = SpaceLayout::new([
            (CLAIM, self.levels()),
            (ROTATION, 2),
            (ANCILLA, ad),
            (WITNESS, wd),
        ])?;
        let half = self.levels() / 2;
        let mut z = DMatrix::<C64>::identity(ad, ad);
        for i in ad / 2..ad {
            z[(i, i)] = C64::new(-1.0, 0.0);
        }
        let z = Operator::trusted(z, OpFlags::UNITARY);
        let mut prog = Program::new(layout.clone());
        for k in half..self.levels() {
            prog.push_controlled(&rotation_for(self.decode(k))?, &[ROTATION], CLAIM, |d| d == k)?;
        }
        prog.push(self.base.unitary(), &[ANCILLA, WITNESS])?;
        prog.push_controlled(&z, &[ANCILLA], ROTATION, |q| q == 1)?;
        prog.push(&self.base.unitary().adjoint(), &[ANCILLA, WITNESS])?;
        for k in half..self.levels() {
            let u = rotation_for(self.decode(k))?.adjoint();
            prog.push_controlled(&u, &[ROTATION], CLAIM, |d| d == k)?;
        }
        let n = layout.dim();
        let stride = n / self.levels();
        let mut cols = DMatrix::<C64>::zeros(n, self.levels() * wd);
        for i in 0..self.levels() * wd {
            cols[((i / wd) * stride + i % wd, i)] = C64::new(1.0, 0.0);
        }
        prog.apply_to_columns(&mut cols)?;
        for r in 0..n {
            let claim = r / stride;
            let rest = r % stride;
            let rejected = claim < half || rest < wd;
            if !rejected {
                cols.row_mut(r).fill(C64::new(0.0, 0.0));
            }
        }
        Ok(gram(cols.view((0, 0), cols.shape())))
    }

    /// Gate model: two base runs, the claim-controlled rotation and its
    /// inverse reading `q_bits` bits each, the controlled `Z`, and the check
    /// of `A` and the rotated qubit.
    pub fn time_model(&self) -> usize {
        2 * self.base.cost() + 2 * self.q_bits as usize + 1 + self.base.ancilla_qubits() + 1
    }
}

/// One probability-truncation measurement at a given number of claim bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbTruncPoint {
    pub q_bits: u32,
    pub p: f64,
    pub p_down: f64,
    pub p_up: f64,
    pub rejection_down: f64,
    pub rejection_up: f64,
}

/// Rejection of the base optimum with its acceptance rounded down and up to
/// each grid in `q_bits`.
pub fn prob_trunc_sweep(base: &Verifier, q_bits: &[u32]) -> Result<Vec<ProbTruncPoint>> {
    let (p, w) = optimal_witness(base)?;
    if p < 0.5 {
        return Err(invalid(format!("prob-trunc completeness needs p ≥ 1/2, got {p}")));
    }
    q_bits
        .iter()
        .map(|&q| {
            let pt = ProbTruncVerifier::new(base, q)?;
            let (kd, ku) = (pt.encode_down(p), pt.encode_up(p));
            Ok(ProbTruncPoint {
                q_bits: q,
                p,
                p_down: pt.decode(kd),
                p_up: pt.decode(ku),
                rejection_down: pt.rejection(kd, &w)?,
                rejection_up: pt.rejection(ku, &w)?,
            })
        })
        .collect()
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("a line fit needs at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("a line fit needs distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Fit of `log₂(1 − c′)` against the claim bits, and the smallest `C` with
/// `1 − c′ ≤ C·2^{−q_bits}` on every point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessFit {
    pub constant: f64,
    pub line: Option<LineFit>,
}

pub fn fit_completeness_error(points: &[(u32, f64)]) -> Result<CompletenessFit> {
    let constant = points
        .iter()
        .map(|&(q, e)| e * 2f64.powi(q as i32))
        .fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(q, e)| (q as f64, e.log2()))
        .unzip();
    let line = if xs.len() >= 2 {
        Some(fit_line(&xs, &ys)?)
    } else {
        None
    };
    Ok(CompletenessFit { constant, line })
}

/// Build the probability-truncation verifier and measure it: completeness
/// with the rounded-down claim of the base optimum on yes-instances,
/// acceptance maximized over the full claim grid on no-instances.
pub fn amplify_prob_trunc(
    base: &Verifier,
    q_bits: u32,
) -> Result<(ProbTruncVerifier, AmplifierReport)> {
    let pt = ProbTruncVerifier::new(base, q_bits)?;
    let (p_max, w) = optimal_witness(base)?;
    let mut completeness_measured = None;
    let mut completeness_residual_log2 = None;
    if is_yes_instance(p_max, base) && p_max >= 0.5 {
        let k = pt.encode_down(p_max);
        completeness_measured = Some(1.0 - pt.rejection(k, &w)?);
        completeness_residual_log2 =
            finite_log2(prob_trunc_rejection_closed_form(p_max, pt.decode(k))).or(Some(f64::MIN));
    }
    let soundness_measured = if is_no_instance(p_max, base) {
        Some(pt.max_acceptance()?.0)
    } else {
        None
    };
    let s = base.soundness();
    let report = AmplifierReport {
        amplifier: AmplifierId::ProbTrunc,
        input: ReportInput::of(base),
        q: q_bits,
        counter_dim: None,
        completeness_error_bound_log2: -(q_bits as f64),
        completeness_measured,
        completeness_residual_log2,
        soundness_bound: 4.0 * s * (1.0 - s),
        soundness_measured,
        l_m: q_bits as usize + base.witness_qubits(),
        l_a: q_bits as usize + 1 + base.ancilla_qubits() + base.witness_qubits(),
        t_a: pt.time_model(),
        v_calls: 1,
        v_dagger_calls: 1,
    };
    Ok((pt, report))
}

/// Completeness drop from offering only the `m` least significant counter bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessTruncation {
    pub m: u32,
    pub ell: usize,
    pub counter_dim: usize,
    /// Optimum with every counter value below `D − ℓ` offered.
    pub full_max: f64,
    /// Optimum with counter values below `2^m` offered.
    pub restricted_max: f64,
    pub drop: f64,
    /// `drop / √(2^{−m}ℓ)`, the implied constant of the law.
    pub implied_constant: f64,
    /// Explicit bound `√(ℓ/(2^{m−3} − ℓ))` on the drop.
    pub explicit_bound: f64,
}

/// Restricts the witness of `av` to counter values `0..2^m` and measures the
/// drop of the optimal acceptance.
pub fn witness_truncation_check(
    av: &AmplifiedVerifier,
    m: u32,
    ell: usize,
) -> Result<WitnessTruncation> {
    let mut points = witness_truncation_sweep(av, &[m], ell)?;
    Ok(points.remove(0))
}

/// [`witness_truncation_check`] over several `m`, sharing the unrestricted optimum.
pub fn witness_truncation_sweep(
    av: &AmplifiedVerifier,
    ms: &[u32],
    ell: usize,
) -> Result<Vec<WitnessTruncation>> {
    let d = av.counter_dim();
    if !d.is_power_of_two() {
        return Err(invalid(format!("counter dimension {d} is not a power of two")));
    }
    if ell < av.increments() {
        return Err(invalid(format!(
            "ℓ = {ell} is below the construction's {} increments",
            av.increments()
        )));
    }
    for &m in ms {
        TruncationParams::for_split(m, ell)?;
        if d < (1usize << m) + ell {
            return Err(invalid(format!("need D ≥ 2^m + ℓ, got D = {d}, m = {m}, ℓ = {ell}")));
        }
    }
    let best = |levels: usize| -> Result<f64> {
        let restricted = av.clone().with_witness_levels(levels)?;
        Ok(match product_block_maxima(&restricted) {
            Ok(blocks) => blocks.iter().map(|b| b.1).fold(0.0, f64::max),
            Err(_) => max_acceptance(&restricted)?.0,
        })
    };
    let full_max = best(d - ell)?;
    ms.iter()
        .map(|&m| {
            let offered = 1usize << m;
            let restricted_max = best(offered)?;
            let drop = (full_max - restricted_max).max(0.0);
            Ok(WitnessTruncation {
                m,
                ell,
                counter_dim: d,
                full_max,
                restricted_max,
                drop,
                implied_constant: drop / (ell as f64 / offered as f64).sqrt(),
                explicit_bound: (ell as f64 / ((offered >> 3) as f64 - ell as f64)).sqrt(),
            })
        })
        .collect()
}

/// Fit of `ln(drop)` against `m`; a `√(2^{−m})` law has slope `−ln 2 / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationLawFit {
    pub line: LineFit,
    /// Largest implied constant over the points.
    pub constant: f64,
}

pub const TRUNCATION_LAW_SLOPE: f64 = -std::f64::consts::LN_2 / 2.0;

pub fn truncation_law_fit(points: &[WitnessTruncation]) -> Result<TruncationLawFit> {
    let kept: Vec<&WitnessTruncation> = points.iter().filter(|p| p.drop > 0.0).collect();
    let xs: Vec<f64> = kept.iter().map(|p| p.m as f64).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.drop.ln()).collect();
    Ok(TruncationLawFit {
        line: fit_line(&xs, &ys)?,
        constant: points.iter().map(|p| p.implied_constant).fold(0.0, f64::max),
    })
}

/// One row of the comparison table. Numeric columns are filled for
/// implemented amplifiers, formula columns for the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub amplifier: String,
    pub implemented: bool,
    pub q: u32,
    pub c: f64,
    pub s: f64,
    pub one_minus_c_bound: String,
    pub one_minus_c_measured: Option<f64>,
    pub one_minus_c_residual_log2: Option<f64>,
    pub s_bound: String,
    pub s_measured: Option<f64>,
    pub calls: String,
    pub t_a: String,
    pub l_m: String,
    pub l_a: String,
}

impl Table1Row {
    pub const HEADER: [&'static str; 14] = [
        "amplifier",
        "implemented",
        "q",
        "c",
        "s",
        "one_minus_c_bound",
        "one_minus_c_measured",
        "one_minus_c_residual_log2",
        "s_bound",
        "s_measured",
        "calls",
        "t_a",
        "l_m",
        "l_a",
    ];
}

/// Rows for the measured reports, in input order.
pub fn table1_report(reports: &[AmplifierReport]) -> Vec<Table1Row> {
    reports
        .iter()
        .map(|r| Table1Row {
            amplifier: r.amplifier.label().to_string(),
            implemented: true,
            q: r.q,
            c: r.input.c,
            s: r.input.s,
            one_minus_c_bound: format!("2^-{}", r.q),
            one_minus_c_measured: r.completeness_measured.map(|c| 1.0 - c),
            one_minus_c_residual_log2: r.completeness_residual_log2,
            s_bound: format!("{}", r.soundness_bound),
            s_measured: r.soundness_measured,
            calls: r.total_calls().to_string(),
            t_a: r.t_a.to_string(),
            l_m: r.l_m.to_string(),
            l_a: r.l_a.to_string(),
        })
        .collect()
}

/// Formula-only rows for the amplifiers that are not simulated here: the
/// repeated-verification amplifier and its composition with the truncation
/// amplifier (with `q′ = q`).
pub fn formula_rows(q: u32, c: f64, s: f64) -> Vec<Table1Row> {
    let row = |id: AmplifierId, s_bound: String, calls: &str, t_a: &str, l_m: &str, l_a: &str| {
        Table1Row {
            amplifier: id.label().to_string(),
            implemented: false,
            q,
            c,
            s,
            one_minus_c_bound: format!("2^-{q}"),
            one_minus_c_measured: None,
            one_minus_c_residual_log2: None,
            s_bound,
            s_measured: None,
            calls: calls.to_string(),
            t_a: t_a.to_string(),
            l_m: l_m.to_string(),
            l_a: l_a.to_string(),
        }
    };
    vec![
        row(
            AmplifierId::Fk16,
            format!("2^-{q}"),
            "O(q/(c-s))",
            "O(q/(c-s))*t_A",
            "l_M",
            "l_A+O(log(q/(c-s)))",
        ),
        row(
            AmplifierId::NewPlus,
            format!("2^-{q}"),
            "O(q'/(c-s))",
            "O(q'/(c-s)*t_A+log q)",
            "l_M+log q+O(1)",
            "O(l_A+log(qq'/(c-s)))",
        ),
    ]
}

/// `log₂ D − log₂(q/(c−s))`, the constant offset of the counter size.
pub fn counter_size_offset(dim: usize, q: u32, c: f64, s: f64) -> f64 {
    ceil_log2(dim) as f64 - (q as f64 / (c - s)).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random::seeded_rng;

    #[test]
    fn counter_dims_for_two_thirds_one_third() {
        let delta = 1.0 / 12.0;
        let dims: Vec<usize> = [0, 8, 12, 16, 20]
            .iter()
            .map(|&q| TruncationParams::for_delta(q, delta).unwrap().dim)
            .collect();
        assert_eq!(dims, vec![2, 16, 32, 32, 64]);
        let big = TruncationParams::for_delta(1024, delta).unwrap();
        assert_eq!(big.dim, 2048);
        assert!(big.centered_residual_log2() <= -1024.0);
    }

    #[test]
    fn split_dims() {
        assert_eq!(TruncationParams::for_split(4, 1).unwrap().dim, 32);
        assert_eq!(TruncationParams::for_split(8, 1).unwrap().dim, 512);
        assert!(TruncationParams::for_split(3, 1).is_err());
        assert!(TruncationParams::for_split(5, 4).is_err());
        assert!(TruncationParams::for_split(6, 4).is_ok());
    }

    #[test]
    fn rotation_is_unitary() {
        for p in [0.5, 0.6, 0.75, 1.0] {
            assert!(rotation_for(p).unwrap().isometry_residual() < 1e-15);
        }
        assert!(rotation_for(0.4).is_err());
    }

    #[test]
    fn encoding_round_trip() {
        let pt = ProbTruncVerifier::new(&Verifier::always_accept(1, 1).unwrap(), 4).unwrap();
        assert_eq!(pt.encode_down(0.7), 11);
        assert_eq!(pt.encode_up(0.7), 12);
        assert_eq!(pt.encode_down(1.0), 15);
        assert_eq!(pt.encode_up(0.999), 15);
        assert_eq!(pt.decode(8), 0.5);
    }

    #[test]
    fn claim_below_half_rejects() {
        let v = Verifier::always_accept(1, 1).unwrap();
        let pt = ProbTruncVerifier::new(&v, 3).unwrap();
        assert_eq!(pt.rejection(3, &StateVector::basis(2, 0)).unwrap(), 1.0);
    }

    #[test]
    fn exact_claim_accepts() {
        let v = Verifier::always_accept(1, 1).unwrap();
        let pt = ProbTruncVerifier::new(&v, 4).unwrap();
        assert!(pt.rejection_at(1.0, &StateVector::basis(2, 1)).unwrap() < 1e-15);
    }

    #[test]
    fn line_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 0.5).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 0.5).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn empty_table() {
        assert!(table1_report(&[]).is_empty());
        let rows = formula_rows(8, 2.0 / 3.0, 1.0 / 3.0);
        assert!(rows.iter().all(|r| !r.implemented));
    }

    #[test]
    fn merge_requires_matching_runs() {
        let yes = Verifier::with_spectrum(1, 1, &[0.7, 0.1], 2.0 / 3.0, 1.0 / 3.0, &mut seeded_rng(1)).unwrap();
        let no = Verifier::with_spectrum(1, 1, &[0.3, 0.1], 2.0 / 3.0, 1.0 / 3.0, &mut seeded_rng(2)).unwrap();
        let (_, a) = amplify_new(&yes, 8).unwrap();
        let (_, b) = amplify_new(&no, 8).unwrap();
        assert!(a.completeness_measured.is_some() && a.soundness_measured.is_none());
        assert!(b.completeness_measured.is_none() && b.soundness_measured.is_some());
        let row = a.merge(&b).unwrap();
        assert!(row.completeness_measured.is_some() && row.soundness_measured.is_some());
        assert_eq!(row.total_calls(), 3);
        let (_, c) = amplify_new(&no, 20).unwrap();
        assert!(row.merge(&c).is_err());
    }
}
