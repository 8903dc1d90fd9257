use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;

use super::{CircuitDesc, Condition, GateDesc, GateKind, Operand, RegisterKind};
use crate::algebra::{controlled, embed, tensor, Operator, SpaceLayout, C64};
use crate::counter::{inc_mod, CounterRegister};
use crate::error::{invalid, Error, Result};
use crate::verifier::Verifier;

fn qubit_name(register: &str, i: usize) -> String {
    format!("{register}[{i}]")
}

/// Splits every declared qubit block of `layout` into one factor per qubit.
fn fine_layout(c: &CircuitDesc, layout: &SpaceLayout) -> Result<SpaceLayout> {
    for r in c.registers() {
        let dim = layout.dim_of(&r.name)?;
        crate::algebra::check_dim("layout register", r.dim(), dim)?;
    }
    let mut regs = Vec::new();
    for r in layout.registers() {
        match c.register(&r.name).map(|d| &d.kind) {
            Some(RegisterKind::Qubits(n)) => {
                regs.extend((0..*n).map(|i| (qubit_name(&r.name, i), 2)));
            }
            _ => regs.push((r.name.clone(), r.dim)),
        }
    }
    SpaceLayout::new(regs)
}

fn factor_names(c: &CircuitDesc, op: &Operand) -> Vec<String> {
    match (op.index, c.register(&op.register).map(|r| &r.kind)) {
        (Some(i), _) => vec![qubit_name(&op.register, i)],
        (None, Some(RegisterKind::Qubits(n))) => {
            (0..*n).map(|i| qubit_name(&op.register, i)).collect()
        }
        (None, _) => vec![op.register.clone()],
    }
}

fn reflect0(dim: usize) -> Operator {
    let mut m = -DMatrix::<C64>::identity(dim, dim);
    m[(0, 0)] = C64::new(1.0, 0.0);
    Operator::unitary(m).expect("reflection is unitary")
}

fn gate_matrix(
    c: &CircuitDesc,
    g: &GateDesc,
    fine: &SpaceLayout,
    bindings: &HashMap<String, Operator>,
) -> Result<Operator> {
    let mut targets: Vec<String> = g.targets.iter().flat_map(|t| factor_names(c, t)).collect();
    let mut ctrl_names: Vec<String> = Vec::new();
    let mut ctrl_projs: Vec<Operator> = Vec::new();
    let local_dim = |names: &[String]| -> Result<usize> {
        names
            .iter()
            .map(|n| fine.dim_of(n))
            .try_fold(1, |acc, d| d.map(|d| acc * d))
    };
    let op = match &g.kind {
        GateKind::H => Operator::hadamard(),
        GateKind::X => Operator::pauli_x(),
        GateKind::Z => Operator::pauli_z(),
        GateKind::Cnot => Operator::cnot(),
        GateKind::Ry(t) => Operator::ry(*t),
        GateKind::U2([a, b, g, d]) => Operator::u2(*a, *b, *g, *d),
        GateKind::IncMod => inc_mod(&CounterRegister::truncated(local_dim(&targets)?)?),
        GateKind::ZeroCheck => {
            let counter = targets.remove(0);
            ctrl_projs.push(Operator::basis_projector(fine.dim_of(&counter)?, [0]));
            ctrl_names.push(counter);
            Operator::pauli_x()
        }
        GateKind::Reflect0 => reflect0(local_dim(&targets)?),
        GateKind::Call { name, dagger } => {
            let op = bindings
                .get(name)
                .ok_or_else(|| Error::UnboundCall(name.clone()))?;
            crate::algebra::check_dim("call binding", local_dim(&targets)?, op.dim_in())?;
            if *dagger {
                op.adjoint()
            } else {
                op.clone()
            }
        }
    };
    for ctl in &g.controls {
        let name = factor_names(c, &ctl.operand).remove(0);
        let dim = fine.dim_of(&name)?;
        ctrl_projs.push(match ctl.condition {
            Condition::One => Operator::basis_projector(2, [1]),
            Condition::Zero | Condition::CounterZero => Operator::basis_projector(dim, [0]),
            Condition::CounterPositive => Operator::basis_projector(dim, 1..dim),
        });
        ctrl_names.push(name);
    }
    let t: Vec<&str> = targets.iter().map(String::as_str).collect();
    if ctrl_names.is_empty() {
        embed(&op, fine, &t)
    } else {
        let cn: Vec<&str> = ctrl_names.iter().map(String::as_str).collect();
        controlled(&op, &tensor(&ctrl_projs)?, fine, &cn, &t)
    }
}

/// The product of the embedded gate matrices in program order.
///
/// `layout` must contain every declared register with its declared dimension;
/// extra registers are left untouched. Qubit 0 of a block is its most
/// significant qubit.
pub fn elaborate(
    c: &CircuitDesc,
    layout: &SpaceLayout,
    bindings: &HashMap<String, Operator>,
) -> Result<Operator> {
    let fine = fine_layout(c, layout)?;
    let n = fine.dim();
    let mut u = DMatrix::<C64>::identity(n, n);
    for g in c.gates() {
        u = gate_matrix(c, g, &fine, bindings)?.matrix() * u;
    }
    Operator::unitary(u)
}

/// A verifier from a circuit over `qreg a[..]` (ancilla, `a[0]` is the output
/// qubit) and `qreg w[..]` (witness). The gate-count model counts every gate once.
pub fn verifier_from_circuit(
    c: &CircuitDesc,
    bindings: &HashMap<String, Operator>,
    completeness: f64,
    soundness: f64,
) -> Result<Verifier> {
    let qubits = |name: &str| match c.register(name).map(|r| &r.kind) {
        Some(RegisterKind::Qubits(n)) => Ok(*n),
        _ => Err(invalid(format!("verifier circuits declare `qreg {name}[..]`"))),
    };
    let (a, w) = (qubits("a")?, qubits("w")?);
    if c.registers().len() != 2 {
        return Err(invalid("verifier circuits declare exactly `a` and `w`"));
    }
    let layout = SpaceLayout::new([("a", 1usize << a), ("w", 1usize << w)])?;
    let u = elaborate(c, &layout, bindings)?;
    Ok(Verifier::new(u, a, w, completeness, soundness)?.with_cost(c.cost_model(1)))
}

/// Brickwork circuit on `qreg a[a]; qreg w[w]`: each layer applies a random
/// `u2` to every qubit, then CNOTs on alternating neighbour pairs.
pub fn random_circuit<R: Rng + ?Sized>(
    ancilla_qubits: usize,
    witness_qubits: usize,
    layers: usize,
    rng: &mut R,
) -> Result<CircuitDesc> {
    let mut c = CircuitDesc::new();
    c.qreg("a", ancilla_qubits)?.qreg("w", witness_qubits)?;
    let qubits: Vec<Operand> = (0..ancilla_qubits)
        .map(|i| Operand::qubit("a", i))
        .chain((0..witness_qubits).map(|i| Operand::qubit("w", i)))
        .collect();
    let tau = std::f64::consts::TAU;
    for layer in 0..layers {
        for q in &qubits {
            let p = [0; 4].map(|_| rng.random::<f64>() * tau);
            c.push(GateDesc::new(GateKind::U2(p), vec![q.clone()]))?;
        }
        let mut i = layer % 2;
        while i + 1 < qubits.len() {
            c.push(GateDesc::new(
                GateKind::Cnot,
                vec![qubits[i].clone(), qubits[i + 1].clone()],
            ))?;
            i += 2;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use crate::algebra::StateVector;

    fn none() -> HashMap<String, Operator> {
        HashMap::new()
    }

    #[test]
    fn x_twice_is_identity() {
        let c = parse("qreg a[1]; gate x a[0]; gate x a[0];").unwrap();
        let l = SpaceLayout::new([("a", 2)]).unwrap();
        let u = elaborate(&c, &l, &none()).unwrap();
        assert_eq!(u.matrix(), Operator::identity(2).matrix());
        assert!(u.flags().unitary);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = parse("qreg a[2]; counter b[3];").unwrap();
        let l = SpaceLayout::new([("b", 3), ("a", 4)]).unwrap();
        let u = elaborate(&c, &l, &none()).unwrap();
        assert_eq!(u.matrix(), Operator::identity(12).matrix());
    }

    #[test]
    fn inc_mod_wraps() {
        let c = parse("counter b[4]; gate inc_mod b;").unwrap();
        let l = SpaceLayout::new([("b", 4)]).unwrap();
        let u = elaborate(&c, &l, &none()).unwrap();
        assert_eq!(u.apply(&StateVector::basis(4, 3)).unwrap(), StateVector::basis(4, 0));
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let c = parse("qreg a[2]; gate x a[0];").unwrap();
        let l = SpaceLayout::new([("a", 4)]).unwrap();
        let u = elaborate(&c, &l, &none()).unwrap();
        assert_eq!(u.apply(&StateVector::basis(4, 0)).unwrap(), StateVector::basis(4, 2));
    }

    #[test]
    fn counter_controls() {
        let c = parse("counter b[3]; qreg f[1]; gate x f[0] ctrl b>=1; gate zero_check b, f[0];")
            .unwrap();
        let l = SpaceLayout::new([("b", 3), ("f", 2)]).unwrap();
        let u = elaborate(&c, &l, &none()).unwrap();
        // Every counter value ends with the flag set exactly once.
        for d in 0..3 {
            let out = u.apply(&StateVector::basis(6, 2 * d)).unwrap();
            assert_eq!(out, StateVector::basis(6, 2 * d + 1), "d = {d}");
        }
    }

    #[test]
    fn unbound_and_mismatched_calls() {
        let c = parse("qreg a[1]; gate call V a;").unwrap();
        let l = SpaceLayout::new([("a", 2)]).unwrap();
        assert!(matches!(elaborate(&c, &l, &none()), Err(Error::UnboundCall(_))));
        let mut b = none();
        b.insert("V".to_string(), Operator::identity(4));
        assert!(matches!(
            elaborate(&c, &l, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = SpaceLayout::new([("a", 4)]).unwrap();
        assert!(elaborate(&c, &bad, &b).is_err());
    }

    #[test]
    fn reflect0_on_block() {
        let c = parse("qreg a[2]; gate reflect0 a;").unwrap();
        let l = SpaceLayout::new([("a", 4)]).unwrap();
        let u = elaborate(&c, &l, &none()).unwrap();
        let diag: Vec<f64> = u.matrix().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, -1.0]);
    }

    #[test]
    fn random_circuit_verifier() {
        let mut rng = crate::algebra::random::seeded_rng(1);
        let c = random_circuit(2, 1, 3, &mut rng).unwrap();
        let v = verifier_from_circuit(&c, &none(), 0.7, 0.2).unwrap();
        assert_eq!(v.dim(), 8);
        assert!(v.unitary().isometry_residual() < 1e-12);
        assert_eq!(v.cost(), c.gates().len());
    }
}
