//! Dense complex linear algebra: states, operators, layouts and embeddings.

mod eigen;
mod layout;
mod program;
pub mod random;

pub use eigen::{eigh, top_eigenpair, Eigen};
pub use layout::{Register, SpaceLayout};
pub use program::{Control, Gate, Program};

use nalgebra::{DMatrix, DMatrixView, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::tolerance;

/// Shorthand for a complex number.
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A pure state as a dense amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(invalid("state vector must have positive dimension"));
        }
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| c64(x, 0.0)).collect())
    }

    pub fn from_vector(amps: DVector<C64>) -> Self {
        assert!(!amps.is_empty(), "state vector must have positive dimension");
        Self { amps }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = DVector::zeros(dim);
        amps[index] = c64(1.0, 0.0);
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        Self {
            amps: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        self.amps.as_mut_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= tolerance::CONSTRUCTION
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(invalid("cannot normalize a zero vector"));
        }
        Ok(Self {
            amps: self.amps.unscale(n),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim("inner product", self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        Self {
            amps: self.amps.kronecker(&other.amps),
        }
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        check_dim("distance", self.dim(), other.dim())?;
        Ok((&self.amps - &other.amps).norm())
    }

    /// Rotates the global phase so the first non-negligible amplitude is real positive.
    pub fn with_canonical_phase(mut self) -> Self {
        let scale = self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if let Some(first) = self
            .amps
            .iter()
            .find(|a| a.norm() > 1e-10 * scale.max(f64::MIN_POSITIVE))
        {
            let phase = first.conj() / first.norm();
            self.amps *= phase;
        }
        self
    }
}

/// Fidelity `|⟨a|b⟩|` between pure states.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm())
}

/// Trace distance between pure states, `√(1 − |⟨a|b⟩|²)`.
pub fn trace_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    let f = fidelity(a, b)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// Structural flags carried by an [`Operator`]; each one is validated when set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpFlags {
    pub unitary: bool,
    pub hermitian: bool,
    pub projector: bool,
    pub isometry: bool,
}

impl OpFlags {
    pub const NONE: OpFlags = OpFlags {
        unitary: false,
        hermitian: false,
        projector: false,
        isometry: false,
    };
    pub const UNITARY: OpFlags = OpFlags {
        unitary: true,
        hermitian: false,
        projector: false,
        isometry: true,
    };
    pub const HERMITIAN: OpFlags = OpFlags {
        unitary: false,
        hermitian: true,
        projector: false,
        isometry: false,
    };
    pub const PROJECTOR: OpFlags = OpFlags {
        unitary: false,
        hermitian: true,
        projector: true,
        isometry: false,
    };
    pub const ISOMETRY: OpFlags = OpFlags {
        unitary: false,
        hermitian: false,
        projector: false,
        isometry: true,
    };

    fn and(self, other: OpFlags) -> OpFlags {
        OpFlags {
            unitary: self.unitary && other.unitary,
            hermitian: self.hermitian && other.hermitian,
            projector: self.projector && other.projector,
            isometry: self.isometry && other.isometry,
        }
    }
}

/// A dense complex matrix with validated structural flags.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    flags: OpFlags,
}

impl Operator {
    /// Wraps a matrix without claiming any structure.
    pub fn new(mat: DMatrix<C64>) -> Self {
        Self {
            mat,
            flags: OpFlags::NONE,
        }
    }

    /// Wraps a matrix and validates every requested flag at the flag tolerance.
    pub fn with_flags(mat: DMatrix<C64>, flags: OpFlags) -> Result<Self> {
        let op = Self { mat, flags };
        op.validate()?;
        Ok(op)
    }

    pub fn unitary(mat: DMatrix<C64>) -> Result<Self> {
        Self::with_flags(mat, OpFlags::UNITARY)
    }

    pub fn hermitian(mat: DMatrix<C64>) -> Result<Self> {
        Self::with_flags(mat, OpFlags::HERMITIAN)
    }

    pub fn projector(mat: DMatrix<C64>) -> Result<Self> {
        Self::with_flags(mat, OpFlags::PROJECTOR)
    }

    /// Sets flags that hold by construction, skipping the O(n³) validation.
    pub(crate) fn trusted(mat: DMatrix<C64>, flags: OpFlags) -> Self {
        let op = Self { mat, flags };
        debug_assert!(op.mat.nrows() > 256 || op.validate().is_ok());
        op
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
            flags: OpFlags {
                unitary: true,
                hermitian: true,
                projector: true,
                isometry: true,
            },
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
            flags: OpFlags::PROJECTOR,
        }
    }

    /// Builds a real matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Self::new(DMatrix::from_row_iterator(
            rows,
            cols,
            entries.iter().map(|&x| c64(x, 0.0)),
        ))
    }

    pub fn pauli_x() -> Self {
        Self::trusted(
            Self::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).mat,
            OpFlags {
                hermitian: true,
                ..OpFlags::UNITARY
            },
        )
    }

    pub fn pauli_z() -> Self {
        Self::trusted(
            Self::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).mat,
            OpFlags {
                hermitian: true,
                ..OpFlags::UNITARY
            },
        )
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::trusted(
            Self::from_real(2, 2, &[h, h, h, -h]).mat,
            OpFlags {
                hermitian: true,
                ..OpFlags::UNITARY
            },
        )
    }

    /// `RY(θ) = exp(−iθY/2)`.
    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::trusted(Self::from_real(2, 2, &[c, -s, s, c]).mat, OpFlags::UNITARY)
    }

    /// `e^{iα} RZ(β) RY(γ) RZ(δ)`, a parametrization of all single-qubit unitaries.
    pub fn u2(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        let (s, c) = (gamma / 2.0).sin_cos();
        let ph = |x: f64| C64::from_polar(1.0, x);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                ph(alpha - beta / 2.0 - delta / 2.0) * c,
                -ph(alpha - beta / 2.0 + delta / 2.0) * s,
                ph(alpha + beta / 2.0 - delta / 2.0) * s,
                ph(alpha + beta / 2.0 + delta / 2.0) * c,
            ],
        );
        Self::trusted(m, OpFlags::UNITARY)
    }

    /// CNOT with the first qubit as control.
    pub fn cnot() -> Self {
        let mut m = DMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(r, c)] = c64(1.0, 0.0);
        }
        Self::trusted(
            m,
            OpFlags {
                hermitian: true,
                ..OpFlags::UNITARY
            },
        )
    }

    /// Diagonal projector onto the listed computational basis states.
    pub fn basis_projector(dim: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for i in indices {
            m[(i, i)] = c64(1.0, 0.0);
        }
        Self::trusted(m, OpFlags::PROJECTOR)
    }

    /// `|v⟩⟨v|` for a normalized `v`.
    pub fn rank_one(v: &StateVector) -> Result<Self> {
        if !v.is_normalized() {
            return Err(invalid("rank-one projector needs a normalized vector"));
        }
        let a = v.as_vector();
        Ok(Self::trusted(a * a.adjoint(), OpFlags::PROJECTOR))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn flags(&self) -> OpFlags {
        self.flags
    }

    pub fn dim_out(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dim_in(&self) -> usize {
        self.mat.ncols()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            flags: OpFlags {
                isometry: self.flags.unitary,
                ..self.flags
            },
        }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        check_dim("compose", self.dim_in(), rhs.dim_out())?;
        let both = self.flags.and(rhs.flags);
        Ok(Self {
            mat: &self.mat * &rhs.mat,
            flags: OpFlags {
                unitary: both.unitary,
                isometry: both.isometry,
                ..OpFlags::NONE
            },
        })
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dim("apply", self.dim_in(), v.dim())?;
        Ok(StateVector {
            amps: &self.mat * &v.amps,
        })
    }

    /// Real part of `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &StateVector) -> Result<f64> {
        check_dim("expectation", self.dim_in(), v.dim())?;
        check_dim("expectation", self.dim_out(), v.dim())?;
        Ok(v.amps.dotc(&(&self.mat * &v.amps)).re)
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &Operator) -> Result<f64> {
        check_dim("distance", self.dim_out(), other.dim_out())?;
        check_dim("distance", self.dim_in(), other.dim_in())?;
        Ok((&self.mat - &other.mat).norm())
    }

    /// `‖M†M − I‖_F`.
    pub fn isometry_residual(&self) -> f64 {
        let n = self.dim_in();
        (self.mat.adjoint() * &self.mat - DMatrix::<C64>::identity(n, n)).norm()
    }

    /// `‖M − M†‖_F`.
    pub fn hermitian_residual(&self) -> f64 {
        if self.dim_in() != self.dim_out() {
            return f64::INFINITY;
        }
        (&self.mat - self.mat.adjoint()).norm()
    }

    /// `‖M² − M‖_F`.
    pub fn idempotency_residual(&self) -> f64 {
        if self.dim_in() != self.dim_out() {
            return f64::INFINITY;
        }
        (&self.mat * &self.mat - &self.mat).norm()
    }

    fn validate(&self) -> Result<()> {
        let f = self.flags;
        let tol = tolerance::FLAG;
        if f.unitary {
            check_dim("unitary", self.dim_out(), self.dim_in())?;
        }
        if f.unitary || f.isometry {
            let r = self.isometry_residual();
            if !(r <= tol) {
                let flag = if f.unitary { "unitary" } else { "an isometry" };
                return Err(Error::FlagViolation { flag, residual: r });
            }
        }
        if f.hermitian || f.projector {
            let r = self.hermitian_residual();
            if !(r <= tol) {
                return Err(Error::FlagViolation {
                    flag: "hermitian",
                    residual: r,
                });
            }
        }
        if f.projector {
            let r = self.idempotency_residual();
            if !(r <= tol) {
                return Err(Error::FlagViolation {
                    flag: "a projector",
                    residual: r,
                });
            }
        }
        Ok(())
    }
}

/// `Yᴴ Y` as a Hermitian operator.
///
/// Formed from two real matrix products, which take the optimized `f64`
/// kernel instead of the generic complex loop.
pub fn gram(y: DMatrixView<'_, C64>) -> Operator {
    let re = y.map(|z| z.re);
    let im = y.map(|z| z.im);
    let real = re.transpose() * &re + im.transpose() * &im;
    let cross = re.transpose() * &im;
    let n = y.ncols();
    let m = DMatrix::from_fn(n, n, |r, c| {
        C64::new(
            0.5 * (real[(r, c)] + real[(c, r)]),
            cross[(r, c)] - cross[(c, r)],
        )
    });
    Operator::trusted(m, OpFlags::HERMITIAN)
}

/// Kronecker product in list order; structural flags held by every factor carry over.
pub fn tensor(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| invalid("tensor of an empty operator list"))?;
    let mut out = first.clone();
    for op in rest {
        out = Operator {
            mat: out.mat.kronecker(&op.mat),
            flags: out.flags.and(op.flags),
        };
    }
    Ok(out)
}

/// Embeds `op` on the named registers of `layout`, identity elsewhere.
///
/// The target order defines how `op`'s index is split: the first target is the
/// most significant factor of `op`.
pub fn embed(op: &Operator, layout: &SpaceLayout, targets: &[&str]) -> Result<Operator> {
    let tidx = layout.indices_of(targets)?;
    let local: usize = tidx.iter().map(|&i| layout.dims()[i]).product();
    check_dim("embed", local, op.dim_in())?;
    check_dim("embed", local, op.dim_out())?;
    let n = layout.dim();
    let offsets = layout.local_offsets(&tidx);
    let mut out = DMatrix::<C64>::zeros(n, n);
    for base in layout.outer_bases(&tidx) {
        for (lc, &oc) in offsets.iter().enumerate() {
            for (lr, &or) in offsets.iter().enumerate() {
                let v = op.mat[(lr, lc)];
                if v != C64::new(0.0, 0.0) {
                    out[(base + or, base + oc)] = v;
                }
            }
        }
    }
    let flags = OpFlags {
        isometry: op.flags.unitary,
        ..op.flags
    };
    Ok(Operator { mat: out, flags })
}

/// `P ⊗ op + (I − P) ⊗ I`, embedded in `layout`.
///
/// Open controls (on `|0⟩`, or on `d ≥ 1` for a counter) are expressed through
/// the choice of projector.
pub fn controlled(
    op: &Operator,
    control_projector: &Operator,
    layout: &SpaceLayout,
    control_regs: &[&str],
    target_regs: &[&str],
) -> Result<Operator> {
    if !control_projector.flags.projector {
        let r = control_projector
            .hermitian_residual()
            .max(control_projector.idempotency_residual());
        if !(r <= tolerance::FLAG) {
            return Err(Error::FlagViolation {
                flag: "a projector",
                residual: r,
            });
        }
    }
    if let Some(t) = target_regs.iter().find(|t| control_regs.contains(t)) {
        return Err(invalid(format!("register `{t}` is both control and target")));
    }
    let p = embed(control_projector, layout, control_regs)?;
    let u = embed(op, layout, target_regs)?;
    let n = layout.dim();
    let id = DMatrix::<C64>::identity(n, n);
    let mat = &p.mat * &u.mat + (&id - &p.mat);
    let flags = OpFlags {
        unitary: op.flags.unitary,
        isometry: op.flags.unitary,
        ..OpFlags::NONE
    };
    Ok(Operator { mat, flags })
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(regs: &[(&str, usize)]) -> SpaceLayout {
        SpaceLayout::new(regs.iter().map(|&(n, d)| (n, d))).unwrap()
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let t = tensor(&[Operator::identity(2), Operator::identity(2)]).unwrap();
        assert_eq!(t.matrix(), Operator::identity(4).matrix());
        assert!(t.flags().unitary && t.flags().projector);
    }

    #[test]
    fn tensor_xx_flips_both_qubits() {
        let t = tensor(&[Operator::pauli_x(), Operator::pauli_x()]).unwrap();
        let out = t.apply(&StateVector::basis(4, 0)).unwrap();
        assert_eq!(out, StateVector::basis(4, 3));
    }

    #[test]
    fn tensor_h_identity_has_unit_columns() {
        let t = tensor(&[Operator::hadamard(), Operator::identity(2)]).unwrap();
        for col in t.matrix().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-15);
        }
        assert!(t.isometry_residual() < 1e-15);
    }

    #[test]
    fn tensor_rejects_empty_list() {
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn embed_x_on_first_factor() {
        let l = layout(&[("A", 2), ("W", 2)]);
        let x = embed(&Operator::pauli_x(), &l, &["A"]).unwrap();
        let psi = StateVector::new(vec![c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
        let input = StateVector::basis(2, 0).tensor(&psi);
        let expect = StateVector::basis(2, 1).tensor(&psi);
        assert_eq!(x.apply(&input).unwrap(), expect);
    }

    #[test]
    fn embed_identity_is_identity() {
        let l = layout(&[("A", 2), ("B", 3), ("C", 2)]);
        let e = embed(&Operator::identity(3), &l, &["B"]).unwrap();
        assert_eq!(e.matrix(), Operator::identity(12).matrix());
    }

    #[test]
    fn embed_cnot_matches_bit_permutation() {
        // CNOT with qubit 1 as control and qubit 3 as target on three qubits.
        let l = layout(&[("q1", 2), ("q2", 2), ("q3", 2)]);
        let e = embed(&Operator::cnot(), &l, &["q1", "q3"]).unwrap();
        for x in 0..8usize {
            let (b1, b2, b3) = (x >> 2 & 1, x >> 1 & 1, x & 1);
            let y = b1 << 2 | b2 << 1 | (b3 ^ b1);
            let out = e.apply(&StateVector::basis(8, x)).unwrap();
            assert_eq!(out, StateVector::basis(8, y), "input {x:03b}");
        }
    }

    #[test]
    fn embed_over_all_registers_is_the_operator() {
        let l = layout(&[("A", 2), ("W", 2)]);
        let op = tensor(&[Operator::hadamard(), Operator::ry(0.3)]).unwrap();
        let e = embed(&op, &l, &["A", "W"]).unwrap();
        assert!(e.distance(&op).unwrap() < 1e-15);
    }

    #[test]
    fn embed_respects_target_order() {
        let l = layout(&[("a", 2), ("b", 2)]);
        let e = embed(&Operator::cnot(), &l, &["b", "a"]).unwrap();
        // control on b: |01⟩ → |11⟩.
        assert_eq!(
            e.apply(&StateVector::basis(4, 1)).unwrap(),
            StateVector::basis(4, 3)
        );
    }

    #[test]
    fn embed_dimension_mismatch() {
        let l = layout(&[("A", 2), ("W", 3)]);
        assert!(matches!(
            embed(&Operator::pauli_x(), &l, &["W"]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            embed(&Operator::pauli_x(), &l, &["Z"]),
            Err(Error::UnknownRegister(_))
        ));
    }

    #[test]
    fn controlled_with_identity_projector_applies_op() {
        let l = layout(&[("c", 2), ("t", 2)]);
        let c = controlled(&Operator::pauli_x(), &Operator::identity(2), &l, &["c"], &["t"]).unwrap();
        let u = embed(&Operator::pauli_x(), &l, &["t"]).unwrap();
        assert!(c.distance(&u).unwrap() < 1e-15);
    }

    #[test]
    fn controlled_with_zero_projector_is_identity() {
        let l = layout(&[("c", 2), ("t", 2)]);
        let c = controlled(&Operator::hadamard(), &Operator::zeros(2), &l, &["c"], &["t"]).unwrap();
        assert!(c.distance(&Operator::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn controlled_x_is_cnot() {
        let l = layout(&[("c", 2), ("t", 2)]);
        let p1 = Operator::basis_projector(2, [1]);
        let c = controlled(&Operator::pauli_x(), &p1, &l, &["c"], &["t"]).unwrap();
        assert_eq!(c.matrix(), Operator::cnot().matrix());
        assert!(c.flags().unitary);
    }

    #[test]
    fn controlled_rejects_non_projector() {
        let l = layout(&[("c", 2), ("t", 2)]);
        let bad = Operator::from_real(2, 2, &[0.5, 0.0, 0.0, 1.0]);
        assert!(matches!(
            controlled(&Operator::pauli_x(), &bad, &l, &["c"], &["t"]),
            Err(Error::FlagViolation { .. })
        ));
    }

    #[test]
    fn flag_validation_rejects_non_unitary() {
        let m = Operator::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).into_matrix();
        assert!(matches!(
            Operator::unitary(m),
            Err(Error::FlagViolation { flag: "unitary", .. })
        ));
    }

    #[test]
    fn u2_covers_standard_gates() {
        use std::f64::consts::PI;
        // H = e^{iπ/2} RZ(0) RY(π/2) RZ(π) up to the chosen convention.
        let h = Operator::u2(PI / 2.0, 0.0, PI / 2.0, PI);
        assert!(h.distance(&Operator::hadamard()).unwrap() < 1e-15);
        assert!(Operator::u2(0.0, 0.0, 0.7, 0.0)
            .distance(&Operator::ry(0.7))
            .unwrap()
            < 1e-15);
    }

    #[test]
    fn trace_distance_of_orthogonal_states_is_one() {
        let a = StateVector::basis(2, 0);
        let b = StateVector::basis(2, 1);
        assert_eq!(trace_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
    }
}
