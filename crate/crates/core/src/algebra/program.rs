use std::sync::Arc;

use nalgebra::DMatrix;

use super::{check_dim, OpFlags, Operator, SpaceLayout, StateVector, C64};
use crate::error::{invalid, Result};

/// A diagonal control: the gate fires on basis states of `register` marked active.
#[derive(Clone, Debug, PartialEq)]
pub struct Control {
    pub register: usize,
    pub active: Vec<bool>,
}

/// A local operator placed on a layout, with its index plan precomputed.
#[derive(Clone, Debug)]
pub struct Gate {
    op: Arc<Operator>,
    targets: Vec<usize>,
    control: Option<Control>,
    offsets: Vec<usize>,
    bases: Vec<usize>,
    rows: Vec<Vec<(usize, C64)>>,
}

impl Gate {
    fn new(
        layout: &SpaceLayout,
        op: Arc<Operator>,
        targets: Vec<usize>,
        control: Option<Control>,
    ) -> Result<Self> {
        let dims = layout.dims();
        let local: usize = targets.iter().map(|&t| dims[t]).product();
        check_dim("gate", local, op.dim_in())?;
        check_dim("gate", local, op.dim_out())?;
        let offsets = layout.local_offsets(&targets);
        let mut bases = layout.outer_bases(&targets);
        if let Some(c) = &control {
            if targets.contains(&c.register) {
                return Err(invalid("control register is also a target"));
            }
            check_dim("control mask", dims[c.register], c.active.len())?;
            let stride = layout.strides()[c.register];
            let dim = dims[c.register];
            bases.retain(|b| c.active[(b / stride) % dim]);
        }
        let m = op.matrix();
        let rows = (0..local)
            .map(|r| {
                (0..local)
                    .filter_map(|c| {
                        let v = m[(r, c)];
                        (v != C64::new(0.0, 0.0)).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            op,
            targets,
            control,
            offsets,
            bases,
            rows,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn control(&self) -> Option<&Control> {
        self.control.as_ref()
    }

    fn apply(&self, amps: &mut [C64], buf: &mut Vec<C64>) {
        let k = self.offsets.len();
        buf.resize(k, C64::new(0.0, 0.0));
        for &b in &self.bases {
            for (slot, &o) in buf.iter_mut().zip(&self.offsets) {
                *slot = amps[b + o];
            }
            for (r, row) in self.rows.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &(c, v) in row {
                    acc += v * buf[c];
                }
                amps[b + self.offsets[r]] = acc;
            }
        }
    }
}

/// An ordered gate list over a fixed layout, applied without forming the full matrix.
#[derive(Clone, Debug)]
pub struct Program {
    layout: SpaceLayout,
    gates: Vec<Gate>,
}

impl Program {
    pub fn new(layout: SpaceLayout) -> Self {
        Self {
            layout,
            gates: Vec::new(),
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, op: &Operator, targets: &[&str]) -> Result<()> {
        let t = self.layout.indices_of(targets)?;
        let g = Gate::new(&self.layout, Arc::new(op.clone()), t, None)?;
        self.gates.push(g);
        Ok(())
    }

    /// Appends `op` controlled on the basis states of `control` selected by `active`.
    pub fn push_controlled(
        &mut self,
        op: &Operator,
        targets: &[&str],
        control: &str,
        active: impl Fn(usize) -> bool,
    ) -> Result<()> {
        let t = self.layout.indices_of(targets)?;
        let register = self.layout.index_of(control)?;
        let mask = (0..self.layout.dims()[register]).map(active).collect();
        let g = Gate::new(
            &self.layout,
            Arc::new(op.clone()),
            t,
            Some(Control {
                register,
                active: mask,
            }),
        )?;
        self.gates.push(g);
        Ok(())
    }

    /// Appends every gate of `other`, which must share this layout.
    pub fn append(&mut self, other: &Program) -> Result<()> {
        if other.layout != self.layout {
            return Err(invalid("cannot append programs over different layouts"));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// The inverse program: gates reversed and daggered.
    pub fn adjoint(&self) -> Program {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                Gate::new(
                    &self.layout,
                    Arc::new(g.op.adjoint()),
                    g.targets.clone(),
                    g.control.clone(),
                )
                .expect("adjoint preserves gate shape")
            })
            .collect();
        Program {
            layout: self.layout.clone(),
            gates,
        }
    }

    pub fn apply_in_place(&self, amps: &mut [C64]) {
        assert_eq!(amps.len(), self.layout.dim(), "program applied to wrong dimension");
        let mut buf = Vec::new();
        for g in &self.gates {
            g.apply(amps, &mut buf);
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        check_dim("program", self.layout.dim(), state.dim())?;
        let mut out = state.clone();
        self.apply_in_place(out.amplitudes_mut());
        Ok(out)
    }

    /// Applies the program to every column of `m`.
    pub fn apply_to_columns(&self, m: &mut DMatrix<C64>) -> Result<()> {
        check_dim("program", self.layout.dim(), m.nrows())?;
        let n = m.nrows();
        for col in m.as_mut_slice().chunks_mut(n) {
            self.apply_in_place(col);
        }
        Ok(())
    }

    pub fn all_unitary(&self) -> bool {
        self.gates.iter().all(|g| g.op.flags().unitary)
    }

    /// The full matrix of the program.
    pub fn to_operator(&self) -> Operator {
        let n = self.layout.dim();
        let mut m = DMatrix::identity(n, n);
        self.apply_to_columns(&mut m).expect("square identity matches layout");
        let flags = if self.all_unitary() {
            OpFlags::UNITARY
        } else {
            OpFlags::NONE
        };
        Operator::trusted(m, flags)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{controlled, embed};
    use super::*;

    #[test]
    fn program_matches_dense_embedding() {
        let l = SpaceLayout::new([("B", 3), ("A", 2), ("W", 2)]).unwrap();
        let mut p = Program::new(l.clone());
        p.push(&Operator::hadamard(), &["W"]).unwrap();
        p.push(&Operator::cnot(), &["W", "A"]).unwrap();
        p.push_controlled(&Operator::ry(0.4), &["A"], "B", |d| d >= 1)
            .unwrap();
        let h = embed(&Operator::hadamard(), &l, &["W"]).unwrap();
        let cx = embed(&Operator::cnot(), &l, &["W", "A"]).unwrap();
        let proj = Operator::basis_projector(3, [1, 2]);
        let cry = controlled(&Operator::ry(0.4), &proj, &l, &["B"], &["A"]).unwrap();
        let dense = cry.compose(&cx.compose(&h).unwrap()).unwrap();
        assert!(p.to_operator().distance(&dense).unwrap() < 1e-14);
        let inv = p.adjoint().to_operator();
        assert!(inv.distance(&dense.adjoint()).unwrap() < 1e-14);
    }
}
