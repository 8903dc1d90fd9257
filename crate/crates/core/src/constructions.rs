//! The two infinite-counter constructions over a `D`-level counter, their
//! closed-form acceptance formulas and the block structure of `P_{V'}`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use crate::counter::ConstructionTag;

use crate::algebra::{
    eigh, gram, tensor, top_eigenpair, OpFlags, Operator, Program, SpaceLayout, StateVector, C64,
};
use crate::circuit::{
    ceil_log2, CircuitDesc, Condition, GateDesc, GateKind, Operand, RegisterKind,
};
use crate::counter::{inc_mod, q_projector, CounterRegister};
use crate::error::{invalid, Error, Result};
use crate::tolerance;
use crate::verifier::{accept_povm, embed_zero_ancilla, Verifier, ANCILLA, WITNESS};

/// Counter register name.
pub const COUNTER: &str = "B";
/// Name of the distillation qubit of construction 1.
pub const DISTILL: &str = "R";
/// Name under which the base verifier is called in exported circuits.
pub const BASE_CALL: &str = "V";

/// Eigenvalue gaps below this make the eigenbasis of `P_V` ambiguous.
pub const DEGENERACY_GAP: f64 = 1e-6;

/// Resource counters of an amplified verifier, derived from its circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCounts {
    pub v_calls: usize,
    pub v_dagger_calls: usize,
    /// Gates acting on or controlled by the counter, including the `Q`
    /// measurement circuit of construction 1.
    pub counter_gates: usize,
    /// Gates of the construction other than calls, counting `inc_mod` as
    /// `⌈log₂ D⌉` basic gates.
    pub overhead_gates: usize,
    pub counter_qubits: usize,
    /// Qubits sent by the prover: counter bits that can be nonzero plus `W`.
    pub witness_qubits: usize,
    /// All qubits of the amplified verifier.
    pub total_qubits: usize,
}

/// Annotations exported next to a construction's circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionAnnotations {
    pub construction: ConstructionTag,
    pub counter_dim: usize,
    pub witness_levels: usize,
    pub accept_rule: String,
    pub base_completeness: f64,
    pub base_soundness: f64,
    pub base_ancilla_qubits: usize,
    pub base_witness_qubits: usize,
    pub resources: ResourceCounts,
}

/// A construction applied to a base verifier, with its composed circuit and
/// accept projector on the full layout (`B ⊗ R ⊗ A ⊗ W` or `B ⊗ A ⊗ W`).
#[derive(Clone, Debug)]
pub struct AmplifiedVerifier {
    base: Verifier,
    tag: ConstructionTag,
    counter: CounterRegister,
    witness_levels: usize,
    program: Program,
    accept: Program,
    circuit: CircuitDesc,
}

impl AmplifiedVerifier {
    pub fn base(&self) -> &Verifier {
        &self.base
    }

    pub fn tag(&self) -> ConstructionTag {
        self.tag
    }

    pub fn counter(&self) -> CounterRegister {
        self.counter
    }

    pub fn counter_dim(&self) -> usize {
        self.counter.dim()
    }

    /// Counter values `0..levels` offered to the prover.
    pub fn witness_levels(&self) -> usize {
        self.witness_levels
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.program.layout()
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// The construction as an IR circuit calling the base verifier as `V`.
    pub fn circuit(&self) -> &CircuitDesc {
        &self.circuit
    }

    /// Number of increments, which bounds how far a witness moves up the counter.
    pub fn increments(&self) -> usize {
        self.circuit.increment_count()
    }

    /// Restricts the prover to counter values `0..levels`.
    ///
    /// Levels within `ℓ` (the increment count) of `D − 1` are refused, so the
    /// modular wrap is unreachable from any offered witness.
    pub fn with_witness_levels(mut self, levels: usize) -> Result<Self> {
        let max = self.counter_dim() - self.increments().max(1);
        if levels == 0 || levels > max {
            return Err(invalid(format!(
                "witness levels must lie in 1..={max} for D = {}, got {levels}",
                self.counter_dim()
            )));
        }
        self.witness_levels = levels;
        Ok(self)
    }

    pub fn resources(&self) -> ResourceCounts {
        let (v_calls, v_dagger_calls) = self.circuit.call_counts(BASE_CALL);
        let counter_name = "b";
        let touches_counter = |g: &GateDesc| {
            g.targets.iter().any(|t| t.register == counter_name)
                || g.controls.iter().any(|c| c.operand.register == counter_name)
        };
        let mut counter_gates = self.circuit.gates().iter().filter(|g| touches_counter(g)).count();
        let mut overhead_gates = self.circuit.cost_model(0);
        if self.tag == ConstructionTag::C1 {
            // The Q measurement is an open-controlled increment followed by H on R.
            counter_gates += 1;
            overhead_gates += ceil_log2(self.counter_dim()) + 1;
        }
        let counter_qubits = ceil_log2(self.counter_dim());
        let extra = usize::from(self.tag == ConstructionTag::C1);
        ResourceCounts {
            v_calls,
            v_dagger_calls,
            counter_gates,
            overhead_gates,
            counter_qubits,
            witness_qubits: ceil_log2(self.witness_levels) + self.base.witness_qubits(),
            total_qubits: counter_qubits
                + extra
                + self.base.ancilla_qubits()
                + self.base.witness_qubits(),
        }
    }

    pub fn annotations(&self) -> ConstructionAnnotations {
        let accept_rule = match self.tag {
            ConstructionTag::C1 => "accept unless a = 0 and Q on (b, r) rejects",
            ConstructionTag::C2 => "accept iff a[0] = 1",
        };
        ConstructionAnnotations {
            construction: self.tag,
            counter_dim: self.counter_dim(),
            witness_levels: self.witness_levels,
            accept_rule: accept_rule.to_string(),
            base_completeness: self.base.completeness(),
            base_soundness: self.base.soundness(),
            base_ancilla_qubits: self.base.ancilla_qubits(),
            base_witness_qubits: self.base.witness_qubits(),
            resources: self.resources(),
        }
    }

    /// Dimension of the witness register `B ⊗ W`.
    pub fn witness_dim(&self) -> usize {
        self.counter_dim() * self.base.witness_dim()
    }

    fn stride(&self) -> usize {
        self.layout().dim() / self.counter_dim()
    }

    /// Places a witness on `B ⊗ W` into the full space with all other registers at `|0⟩`.
    pub fn embed_witness(&self, witness: &StateVector) -> Result<StateVector> {
        crate::algebra::check_dim("witness", self.witness_dim(), witness.dim())?;
        let wd = self.base.witness_dim();
        let outside: f64 = witness.amplitudes()[self.witness_levels * wd..]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        if outside > tolerance::CONSTRUCTION * tolerance::CONSTRUCTION {
            return Err(invalid(format!(
                "witness has weight {outside:e} on counter values ≥ {}",
                self.witness_levels
            )));
        }
        let mut full = StateVector::zeros(self.layout().dim());
        let stride = self.stride();
        for (i, a) in witness.amplitudes().iter().enumerate() {
            full.amplitudes_mut()[(i / wd) * stride + i % wd] = *a;
        }
        Ok(full)
    }

    /// `V'|witness⟩` before the final measurement.
    pub fn run(&self, witness: &StateVector) -> Result<StateVector> {
        self.program.apply(&self.embed_witness(witness)?)
    }

    /// Acceptance and rejection probabilities, each computed directly.
    pub fn outcome(&self, witness: &StateVector) -> Result<(f64, f64)> {
        let out = self.run(witness)?;
        let acc = self.accept.apply(&out)?;
        let rej = out.distance(&acc)?;
        Ok((acc.norm_squared(), rej * rej))
    }

    pub fn acceptance(&self, witness: &StateVector) -> Result<f64> {
        Ok(self.outcome(witness)?.0)
    }

    pub fn rejection(&self, witness: &StateVector) -> Result<f64> {
        Ok(self.outcome(witness)?.1)
    }

    /// `Π_acc V'` applied to the given full-space columns.
    fn accepted_columns(&self, mut cols: DMatrix<C64>) -> Result<DMatrix<C64>> {
        self.program.apply_to_columns(&mut cols)?;
        self.accept.apply_to_columns(&mut cols)?;
        Ok(cols)
    }

    /// `P_{V'}` on the offered witness space (counter values `0..levels` ⊗ `W`).
    pub fn accept_povm(&self) -> Result<Operator> {
        let wd = self.base.witness_dim();
        let k = self.witness_levels * wd;
        let stride = self.stride();
        let mut cols = DMatrix::<C64>::zeros(self.layout().dim(), k);
        for i in 0..k {
            cols[((i / wd) * stride + i % wd, i)] = C64::new(1.0, 0.0);
        }
        let y = self.accepted_columns(cols)?;
        Ok(gram(y.view((0, 0), y.shape())))
    }

    /// `P_{V'}` restricted to `H_B ⊗ span{w}`, in the counter basis.
    pub fn product_block(&self, w: &StateVector) -> Result<Operator> {
        let wd = self.base.witness_dim();
        crate::algebra::check_dim("witness", wd, w.dim())?;
        let stride = self.stride();
        let mut cols = DMatrix::<C64>::zeros(self.layout().dim(), self.witness_levels);
        for b in 0..self.witness_levels {
            for (j, a) in w.amplitudes().iter().enumerate() {
                cols[(b * stride + j, b)] = *a;
            }
        }
        let y = self.accepted_columns(cols)?;
        Ok(gram(y.view((0, 0), y.shape())))
    }

    /// The full unitary `V'`.
    pub fn composed_operator(&self) -> Operator {
        self.program.to_operator()
    }

    /// The full accept projector `Π'_acc`.
    pub fn accept_projector(&self) -> Operator {
        let op = self.accept.to_operator().into_matrix();
        Operator::trusted(op, OpFlags::PROJECTOR)
    }

    /// Bindings for elaborating [`Self::circuit`].
    pub fn bindings(&self) -> HashMap<String, Operator> {
        HashMap::from([(BASE_CALL.to_string(), self.base.unitary().clone())])
    }

    /// Layout matching [`Self::circuit`] register names, for elaboration.
    pub fn circuit_layout(&self) -> SpaceLayout {
        let regs = self
            .layout()
            .registers()
            .iter()
            .map(|r| (r.name.to_lowercase(), r.dim));
        SpaceLayout::new(regs).expect("lowercased names stay distinct")
    }
}

fn base_layout(base: &Verifier, dim: usize, distill: bool) -> Result<SpaceLayout> {
    let mut regs = vec![(COUNTER, dim)];
    if distill {
        regs.push((DISTILL, 2));
    }
    regs.push((ANCILLA, base.ancilla_dim()));
    regs.push((WITNESS, base.witness_dim()));
    SpaceLayout::new(regs)
}

fn circuit_header(base: &Verifier, dim: usize, distill: bool) -> Result<CircuitDesc> {
    let mut c = CircuitDesc::new();
    c.counter("b", dim)?;
    if distill {
        c.qreg("r", 1)?;
    }
    c.qreg("a", base.ancilla_qubits())?;
    if base.witness_qubits() > 0 {
        c.qreg("w", base.witness_qubits())?;
    }
    Ok(c)
}

fn call(base: &Verifier, dagger: bool) -> GateDesc {
    let mut targets = vec![Operand::whole("a")];
    if base.witness_qubits() > 0 {
        targets.push(Operand::whole("w"));
    }
    GateDesc::new(
        GateKind::Call {
            name: BASE_CALL.to_string(),
            dagger,
        },
        targets,
    )
}

/// Construction 1: `V† · CNOT(M → R) · V`, accepting unless `A` returns to
/// `|0⟩` while the `Q` measurement on `B ⊗ R` rejects.
pub fn build_c1(base: &Verifier, dim: usize) -> Result<AmplifiedVerifier> {
    let counter = CounterRegister::truncated(dim)?;
    let layout = base_layout(base, dim, true)?;
    let ad = base.ancilla_dim();
    let mut program = Program::new(layout.clone());
    program.push(base.unitary(), &[ANCILLA, WITNESS])?;
    program.push_controlled(&Operator::pauli_x(), &[DISTILL], ANCILLA, |a| a >= ad / 2)?;
    program.push(&base.unitary().adjoint(), &[ANCILLA, WITNESS])?;

    let q = q_projector(dim)?;
    let not_q = Operator::identity(2 * dim).matrix() - q.matrix();
    let reject = tensor(&[
        Operator::new(not_q),
        Operator::basis_projector(ad, [0]),
    ])?;
    let n = reject.dim_in();
    let accept_local = Operator::trusted(
        DMatrix::identity(n, n) - reject.matrix(),
        OpFlags::PROJECTOR,
    );
    let mut accept = Program::new(layout);
    accept.push(&accept_local, &[COUNTER, DISTILL, ANCILLA])?;

    let mut circuit = circuit_header(base, dim, true)?;
    circuit.push(call(base, false))?;
    circuit.push(GateDesc::new(
        GateKind::Cnot,
        vec![Operand::qubit("a", 0), Operand::qubit("r", 0)],
    ))?;
    circuit.push(call(base, true))?;

    Ok(AmplifiedVerifier {
        base: base.clone(),
        tag: ConstructionTag::C1,
        counter,
        witness_levels: dim - 1,
        program,
        accept,
        circuit,
    })
}

/// Construction 2: `V · C_{d≥1}[R₀ on A] · V† · C_{M=0}[+1 mod D on B] · V`,
/// accepting iff `M` reads 1.
pub fn build_c2(base: &Verifier, dim: usize) -> Result<AmplifiedVerifier> {
    let counter = CounterRegister::truncated(dim)?;
    let layout = base_layout(base, dim, false)?;
    let ad = base.ancilla_dim();
    let mut r0 = -DMatrix::<C64>::identity(ad, ad);
    r0[(0, 0)] = C64::new(1.0, 0.0);
    let r0 = Operator::trusted(r0, OpFlags::UNITARY);

    let mut program = Program::new(layout.clone());
    program.push(base.unitary(), &[ANCILLA, WITNESS])?;
    program.push_controlled(&inc_mod(&counter), &[COUNTER], ANCILLA, |a| a < ad / 2)?;
    program.push(&base.unitary().adjoint(), &[ANCILLA, WITNESS])?;
    program.push_controlled(&r0, &[ANCILLA], COUNTER, |d| d >= 1)?;
    program.push(base.unitary(), &[ANCILLA, WITNESS])?;

    let mut accept = Program::new(layout);
    accept.push(&Operator::basis_projector(ad, ad / 2..ad), &[ANCILLA])?;

    let mut circuit = circuit_header(base, dim, false)?;
    circuit.push(call(base, false))?;
    circuit.push(
        GateDesc::new(GateKind::IncMod, vec![Operand::whole("b")])
            .controlled(Operand::qubit("a", 0), Condition::Zero),
    )?;
    circuit.push(call(base, true))?;
    circuit.push(
        GateDesc::new(GateKind::Reflect0, vec![Operand::whole("a")])
            .controlled(Operand::whole("b"), Condition::CounterPositive),
    )?;
    circuit.push(call(base, false))?;
    debug_assert!(matches!(
        circuit.register("b").map(|r| &r.kind),
        Some(RegisterKind::Counter(_))
    ));

    Ok(AmplifiedVerifier {
        base: base.clone(),
        tag: ConstructionTag::C2,
        counter,
        witness_levels: dim - 1,
        program,
        accept,
        circuit,
    })
}

/// Construction 2 rejection probability of `ψ_B ⊗ w` for an eigen-witness `w`
/// with acceptance `p`: `(1−p) Σ_{d≥1} |ψ_{d−1}(1−2p) + 2pψ_d|²` with `ψ` zero
/// past its last entry.
pub fn rejection_closed_form(p: f64, psi: &[C64]) -> f64 {
    let at = |d: usize| psi.get(d).copied().unwrap_or_default();
    let sum: f64 = (1..=psi.len())
        .map(|d| (at(d - 1) * (1.0 - 2.0 * p) + at(d) * (2.0 * p)).norm_sqr())
        .sum();
    (1.0 - p) * sum
}

/// Construction 2 soundness `1 − (1−s)(1−4s)²`.
pub fn soundness_bound_c2(s: f64) -> f64 {
    1.0 - (1.0 - s) * (1.0 - 4.0 * s).powi(2)
}

/// Construction 1 soundness `1/2 + 2√(s(1−s))`.
pub fn soundness_bound_c1(s: f64) -> f64 {
    0.5 + 2.0 * (s * (1.0 - s)).max(0.0).sqrt()
}

/// Weaker construction 2 bound `s + 2√(s(1−s))` from removing the increment's
/// control; reported for reference only.
pub fn simple_soundness_bound_c2(s: f64) -> f64 {
    s + 2.0 * (s * (1.0 - s)).max(0.0).sqrt()
}

/// Probability that the distillation qubit reads 1 given that `A` returned to
/// `|0⟩`, for an eigen-witness with acceptance `p`: `p²/(p² + (1−p)²)`.
pub fn distilled_q(p: f64) -> f64 {
    p * p / (p * p + (1.0 - p) * (1.0 - p))
}

/// Simulates `V† · CNOT(M → R) · V` on `|0⟩_R|0⟩_A|w⟩` and returns
/// `Pr[R = 1 | A = 0]`.
pub fn simulate_distilled_q(base: &Verifier, w: &StateVector) -> Result<f64> {
    let layout = SpaceLayout::new([
        (DISTILL, 2),
        (ANCILLA, base.ancilla_dim()),
        (WITNESS, base.witness_dim()),
    ])?;
    let ad = base.ancilla_dim();
    let mut p = Program::new(layout);
    p.push(base.unitary(), &[ANCILLA, WITNESS])?;
    p.push_controlled(&Operator::pauli_x(), &[DISTILL], ANCILLA, |a| a >= ad / 2)?;
    p.push(&base.unitary().adjoint(), &[ANCILLA, WITNESS])?;
    let input = StateVector::basis(2, 0).tensor(&embed_zero_ancilla(w, ad));
    let out = p.apply(&input)?;
    let wd = base.witness_dim();
    let half = out.dim() / 2;
    let weight = |r: usize| -> f64 {
        out.amplitudes()[r * half..r * half + wd]
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    };
    let (w0, w1) = (weight(0), weight(1));
    if w0 + w1 == 0.0 {
        return Err(invalid("ancilla never returns to |0⟩"));
    }
    Ok(w1 / (w0 + w1))
}

/// Top eigenpair of `P_{V'}`; the witness is returned on the full `B ⊗ W`
/// register, zero beyond the offered counter values.
pub fn max_acceptance(av: &AmplifiedVerifier) -> Result<(f64, StateVector)> {
    let (p, v) = top_eigenpair(&av.accept_povm()?)?;
    let mut full = StateVector::zeros(av.witness_dim());
    full.amplitudes_mut()[..v.dim()].copy_from_slice(v.amplitudes());
    Ok((p, full))
}

/// `P_{V'}` in the basis `{counter} ⊗ {eigenvectors of P_V}`.
#[derive(Clone, Debug)]
pub struct BlockStructure {
    /// Largest Frobenius norm of a block `H_k → H_k'`, `k ≠ k'`.
    pub max_off_block: f64,
    /// False when `P_V` has eigenvalues closer than [`DEGENERACY_GAP`].
    pub reliable: bool,
    /// Smallest gap in the spectrum of `P_V`.
    pub min_gap: f64,
    /// Eigenvalues `p_k` of `P_V`, ascending.
    pub base_spectrum: Vec<f64>,
    /// Largest eigenvalue of each diagonal block, aligned with `base_spectrum`.
    pub block_maxima: Vec<f64>,
    /// Largest eigenvalue of the full `P_{V'}`.
    pub global_max: f64,
}

/// Measures how far `P_{V'}` is from block diagonal in the eigenbasis of `P_V`.
pub fn block_structure_check(av: &AmplifiedVerifier) -> Result<BlockStructure> {
    let base = eigh(&accept_povm(av.base()))?;
    let wd = av.base().witness_dim();
    let levels = av.witness_levels();
    let povm = av.accept_povm()?;
    let n = levels * wd;
    let mut t = DMatrix::<C64>::zeros(n, n);
    for b in 0..levels {
        t.view_mut((b * wd, b * wd), (wd, wd)).copy_from(&base.vectors);
    }
    let rotated = t.adjoint() * povm.matrix() * &t;
    let idx = |k: usize| (0..levels).map(move |b| b * wd + k);
    let mut max_off_block = 0.0f64;
    let mut block_maxima = Vec::with_capacity(wd);
    for k in 0..wd {
        for k2 in 0..wd {
            if k == k2 {
                continue;
            }
            let f: f64 = idx(k)
                .flat_map(|r| idx(k2).map(move |c| (r, c)))
                .map(|(r, c)| rotated[(r, c)].norm_sqr())
                .sum();
            max_off_block = max_off_block.max(f.sqrt());
        }
        let block = DMatrix::from_fn(levels, levels, |r, c| rotated[(r * wd + k, c * wd + k)]);
        let block = Operator::trusted((&block + block.adjoint()).unscale(2.0), OpFlags::HERMITIAN);
        block_maxima.push(*eigh(&block)?.values.last().expect("nonempty block"));
    }
    let global = eigh(&povm)?;
    let min_gap = base.min_gap();
    Ok(BlockStructure {
        max_off_block,
        reliable: min_gap >= DEGENERACY_GAP,
        min_gap,
        base_spectrum: base.values.clone(),
        block_maxima,
        global_max: *global.values.last().expect("nonempty"),
    })
}

/// Largest acceptance over product witnesses `ψ_B ⊗ w_k`, one block per
/// eigenvector `w_k` of `P_V`; returns `(p_k, block maximum)` pairs.
///
/// Equal to the global maximum whenever `P_{V'}` is block diagonal (see
/// [`block_structure_check`]), at a fraction of the cost.
pub fn product_block_maxima(av: &AmplifiedVerifier) -> Result<Vec<(f64, f64)>> {
    let base = eigh(&accept_povm(av.base()))?;
    if base.min_gap() < DEGENERACY_GAP {
        return Err(Error::Degenerate(format!(
            "P_V eigenvalue gap {:.3e} below {DEGENERACY_GAP:e}",
            base.min_gap()
        )));
    }
    (0..base.values.len())
        .map(|k| {
            let block = av.product_block(&base.vector(k))?;
            Ok((base.values[k], *eigh(&block)?.values.last().expect("nonempty")))
        })
        .collect()
}
