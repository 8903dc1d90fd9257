//! Textual gate-level IR for verifier circuits.
//!
//! Grammar (one statement per line in canonical output, `#` starts a comment):
//!
//! ```text
//! program  := (decl | gate)*
//! decl     := "qreg" NAME "[" INT "]" ";"          n-qubit block, qubit 0 most significant
//!           | "counter" NAME "[" INT "]" ";"       D-level counter, D ≥ 2
//! gate     := "gate" kind operands ("ctrl" control ("," control)*)? ";"
//! kind     := "h" | "x" | "z" | "cnot" | "ry" "(" NUM ")"
//!           | "u2" "(" NUM "," NUM "," NUM "," NUM ")"
//!           | "inc_mod" | "zero_check" | "reflect0"
//!           | "call" NAME ("dagger")?
//! operands := operand ("," operand)*
//! operand  := NAME | NAME "[" INT "]"
//! control  := operand | "!" operand | NAME "==" "0" | NAME ">=" "1"
//! ```
//!
//! `u2(α, β, γ, δ)` is `e^{iα} RZ(β) RY(γ) RZ(δ)`. `zero_check b, f[0]` flips
//! `f[0]` when counter `b` reads 0. Counters may be targets only of `inc_mod`
//! and `zero_check`, and may control a gate only through `b==0` or `b>=1`.

mod elaborate;
mod parse;

pub use elaborate::{elaborate, random_circuit, verifier_from_circuit};
pub use parse::parse;

use std::fmt;

use crate::error::{invalid, Result};

/// Declared register kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegisterKind {
    /// A block of `n ≥ 1` qubits.
    Qubits(usize),
    /// A counter with `D ≥ 2` levels.
    Counter(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterDecl {
    pub name: String,
    pub kind: RegisterKind,
}

impl RegisterDecl {
    /// Hilbert-space dimension of the register.
    pub fn dim(&self) -> usize {
        match self.kind {
            RegisterKind::Qubits(n) => 1 << n,
            RegisterKind::Counter(d) => d,
        }
    }
}

/// A whole register (`a`) or one of its qubits (`a[0]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operand {
    pub register: String,
    pub index: Option<usize>,
}

impl Operand {
    pub fn whole(register: &str) -> Self {
        Self {
            register: register.to_string(),
            index: None,
        }
    }

    pub fn qubit(register: &str, index: usize) -> Self {
        Self {
            register: register.to_string(),
            index: Some(index),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]", self.register, i),
            None => write!(f, "{}", self.register),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// Qubit in `|1⟩`.
    One,
    /// Qubit in `|0⟩` (open control).
    Zero,
    /// Counter reads 0.
    CounterZero,
    /// Counter reads at least 1.
    CounterPositive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlSpec {
    pub operand: Operand,
    pub condition: Condition,
}

impl fmt::Display for ControlSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.condition {
            Condition::One => write!(f, "{}", self.operand),
            Condition::Zero => write!(f, "!{}", self.operand),
            Condition::CounterZero => write!(f, "{}==0", self.operand),
            Condition::CounterPositive => write!(f, "{}>=1", self.operand),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    Z,
    Cnot,
    Ry(f64),
    U2([f64; 4]),
    IncMod,
    ZeroCheck,
    Reflect0,
    Call { name: String, dagger: bool },
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::H => write!(f, "h"),
            GateKind::X => write!(f, "x"),
            GateKind::Z => write!(f, "z"),
            GateKind::Cnot => write!(f, "cnot"),
            GateKind::Ry(t) => write!(f, "ry({t})"),
            GateKind::U2([a, b, c, d]) => write!(f, "u2({a}, {b}, {c}, {d})"),
            GateKind::IncMod => write!(f, "inc_mod"),
            GateKind::ZeroCheck => write!(f, "zero_check"),
            GateKind::Reflect0 => write!(f, "reflect0"),
            GateKind::Call { name, dagger } => {
                write!(f, "call {name}")?;
                if *dagger {
                    write!(f, " dagger")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateDesc {
    pub kind: GateKind,
    pub targets: Vec<Operand>,
    pub controls: Vec<ControlSpec>,
}

impl GateDesc {
    pub fn new(kind: GateKind, targets: Vec<Operand>) -> Self {
        Self {
            kind,
            targets,
            controls: Vec::new(),
        }
    }

    pub fn controlled(mut self, operand: Operand, condition: Condition) -> Self {
        self.controls.push(ControlSpec { operand, condition });
        self
    }
}

impl fmt::Display for GateDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gate {} ", self.kind)?;
        for (i, t) in self.targets.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t}")?;
        }
        if !self.controls.is_empty() {
            write!(f, " ctrl ")?;
            for (i, c) in self.controls.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
        }
        write!(f, ";")
    }
}

/// A validated circuit: register declarations followed by an ordered gate list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircuitDesc {
    registers: Vec<RegisterDecl>,
    gates: Vec<GateDesc>,
}

pub(crate) const KEYWORDS: [&str; 5] = ["qreg", "counter", "gate", "ctrl", "dagger"];

impl CircuitDesc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn registers(&self) -> &[RegisterDecl] {
        &self.registers
    }

    pub fn gates(&self) -> &[GateDesc] {
        &self.gates
    }

    pub fn register(&self, name: &str) -> Option<&RegisterDecl> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn declare(&mut self, name: &str, kind: RegisterKind) -> Result<&mut Self> {
        if KEYWORDS.contains(&name) || !is_identifier(name) {
            return Err(invalid(format!("`{name}` is not a valid register name")));
        }
        if self.register(name).is_some() {
            return Err(crate::Error::DuplicateRegister(name.to_string()));
        }
        match kind {
            RegisterKind::Qubits(0) => return Err(invalid(format!("qreg `{name}` has no qubits"))),
            RegisterKind::Counter(d) if d < 2 => {
                return Err(invalid(format!("counter `{name}` needs at least 2 levels")))
            }
            _ => {}
        }
        self.registers.push(RegisterDecl {
            name: name.to_string(),
            kind,
        });
        Ok(self)
    }

    pub fn qreg(&mut self, name: &str, qubits: usize) -> Result<&mut Self> {
        self.declare(name, RegisterKind::Qubits(qubits))
    }

    pub fn counter(&mut self, name: &str, levels: usize) -> Result<&mut Self> {
        self.declare(name, RegisterKind::Counter(levels))
    }

    /// Appends a gate after checking it against the declarations.
    pub fn push(&mut self, gate: GateDesc) -> Result<&mut Self> {
        self.check_gate(&gate)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// `self` followed by `other`; shared registers must be declared identically.
    pub fn concat(&self, other: &CircuitDesc) -> Result<CircuitDesc> {
        let mut out = self.clone();
        for r in &other.registers {
            match out.register(&r.name) {
                Some(existing) if existing == r => {}
                Some(_) => {
                    return Err(invalid(format!(
                        "register `{}` declared differently in the two circuits",
                        r.name
                    )))
                }
                None => {
                    out.declare(&r.name, r.kind.clone())?;
                }
            }
        }
        for g in &other.gates {
            out.push(g.clone())?;
        }
        Ok(out)
    }

    /// Canonical text: declarations, then gates, one per line.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for r in &self.registers {
            let (kw, n) = match r.kind {
                RegisterKind::Qubits(n) => ("qreg", n),
                RegisterKind::Counter(d) => ("counter", d),
            };
            s.push_str(&format!("{kw} {}[{n}];\n", r.name));
        }
        for g in &self.gates {
            s.push_str(&format!("{g}\n"));
        }
        s
    }

    /// Number of `call name` gates, split into (plain, daggered).
    pub fn call_counts(&self, name: &str) -> (usize, usize) {
        self.gates.iter().fold((0, 0), |(p, d), g| match &g.kind {
            GateKind::Call { name: n, dagger } if n == name => {
                if *dagger {
                    (p, d + 1)
                } else {
                    (p + 1, d)
                }
            }
            _ => (p, d),
        })
    }

    /// Number of increments, the `ℓ` that bounds how far a witness can move up the counter.
    pub fn increment_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::IncMod)
            .count()
    }

    /// Gate-count model where every `inc_mod` on a `D`-level counter costs
    /// `⌈log₂ D⌉` basic gates and a call costs `call_cost`.
    pub fn cost_model(&self, call_cost: usize) -> usize {
        self.gates
            .iter()
            .map(|g| match &g.kind {
                GateKind::IncMod => {
                    let d = self.register(&g.targets[0].register).map_or(2, |r| r.dim());
                    ceil_log2(d)
                }
                GateKind::Call { .. } => call_cost,
                _ => 1,
            })
            .sum()
    }

    fn qubit_width(&self, op: &Operand) -> Result<usize> {
        let r = self
            .register(&op.register)
            .ok_or_else(|| crate::Error::UnknownRegister(op.register.clone()))?;
        match (&r.kind, op.index) {
            (RegisterKind::Qubits(n), Some(i)) if i < *n => Ok(1),
            (RegisterKind::Qubits(n), Some(i)) => Err(invalid(format!(
                "qubit index {i} out of range for `{}` with {n} qubits",
                r.name
            ))),
            (RegisterKind::Qubits(n), None) => Ok(*n),
            (RegisterKind::Counter(_), _) => Err(invalid(format!(
                "counter `{}` used where qubits are expected",
                r.name
            ))),
        }
    }

    fn check_counter(&self, op: &Operand) -> Result<()> {
        match self.register(&op.register).map(|r| &r.kind) {
            Some(RegisterKind::Counter(_)) if op.index.is_none() => Ok(()),
            Some(RegisterKind::Counter(_)) => Err(invalid(format!(
                "counter `{}` cannot be indexed",
                op.register
            ))),
            Some(_) => Err(invalid(format!("`{}` is not a counter", op.register))),
            None => Err(crate::Error::UnknownRegister(op.register.clone())),
        }
    }

    fn check_gate(&self, g: &GateDesc) -> Result<()> {
        let single = |op: &Operand| -> Result<()> {
            if self.qubit_width(op)? != 1 {
                return Err(invalid(format!("`{op}` is not a single qubit")));
            }
            Ok(())
        };
        let arity = |n: usize| -> Result<()> {
            if g.targets.len() != n {
                return Err(invalid(format!(
                    "gate {} takes {n} operand(s), got {}",
                    g.kind,
                    g.targets.len()
                )));
            }
            Ok(())
        };
        match &g.kind {
            GateKind::H | GateKind::X | GateKind::Z | GateKind::Ry(_) | GateKind::U2(_) => {
                arity(1)?;
                single(&g.targets[0])?;
            }
            GateKind::Cnot => {
                arity(2)?;
                single(&g.targets[0])?;
                single(&g.targets[1])?;
            }
            GateKind::IncMod => {
                arity(1)?;
                self.check_counter(&g.targets[0])?;
            }
            GateKind::ZeroCheck => {
                arity(2)?;
                self.check_counter(&g.targets[0])?;
                single(&g.targets[1])?;
            }
            GateKind::Reflect0 | GateKind::Call { .. } => {
                if g.targets.is_empty() {
                    return Err(invalid(format!("gate {} needs operands", g.kind)));
                }
                for t in &g.targets {
                    self.qubit_width(t)?;
                }
            }
        }
        if let GateKind::Ry(x) = g.kind {
            finite(x)?;
        }
        if let GateKind::U2(xs) = g.kind {
            xs.iter().try_for_each(|&x| finite(x))?;
        }
        for c in &g.controls {
            match c.condition {
                Condition::One | Condition::Zero => single(&c.operand)?,
                Condition::CounterZero | Condition::CounterPositive => self.check_counter(&c.operand)?,
            }
        }
        let mut touched: Vec<(String, Option<usize>)> = Vec::new();
        for op in g.targets.iter().chain(g.controls.iter().map(|c| &c.operand)) {
            let clash = touched.iter().any(|(r, i)| {
                *r == op.register && (i.is_none() || op.index.is_none() || *i == op.index)
            });
            if clash {
                return Err(invalid(format!("`{op}` is used twice in gate {}", g.kind)));
            }
            touched.push((op.register.clone(), op.index));
        }
        Ok(())
    }
}

fn finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid("gate parameters must be finite"))
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_cannot_be_a_plain_target() {
        let mut c = CircuitDesc::new();
        c.counter("b", 4).unwrap().qreg("a", 1).unwrap();
        assert!(c.push(GateDesc::new(GateKind::X, vec![Operand::whole("b")])).is_err());
        assert!(c
            .push(GateDesc::new(GateKind::Reflect0, vec![Operand::whole("b")]))
            .is_err());
        assert!(c
            .push(GateDesc::new(GateKind::X, vec![Operand::qubit("a", 0)]).controlled(
                Operand::whole("b"),
                Condition::One
            ))
            .is_err());
        assert!(c
            .push(GateDesc::new(GateKind::X, vec![Operand::qubit("a", 0)]).controlled(
                Operand::whole("b"),
                Condition::CounterPositive
            ))
            .is_ok());
    }

    #[test]
    fn overlapping_operands_rejected() {
        let mut c = CircuitDesc::new();
        c.qreg("a", 2).unwrap();
        let g = GateDesc::new(GateKind::Cnot, vec![Operand::qubit("a", 1), Operand::qubit("a", 1)]);
        assert!(c.push(g).is_err());
        let g = GateDesc::new(GateKind::Reflect0, vec![Operand::whole("a")])
            .controlled(Operand::qubit("a", 0), Condition::One);
        assert!(c.push(g).is_err());
    }

    #[test]
    fn cost_model_charges_log_d_per_increment() {
        let mut c = CircuitDesc::new();
        c.counter("b", 9).unwrap();
        c.push(GateDesc::new(GateKind::IncMod, vec![Operand::whole("b")]))
            .unwrap();
        assert_eq!(c.cost_model(1), 4);
        assert_eq!(c.increment_count(), 1);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(1), 0);
    }
}
