//! The verifier model: acceptance POVM, optimal witnesses, the rewinding
//! decomposition, controlled-gate removal and gap centering.

use nalgebra::DMatrix;
use rand::Rng;

use crate::algebra::random::haar_unitary;
use crate::algebra::{
    gram, top_eigenpair, Operator, Program, SpaceLayout, StateVector, C64,
};
use crate::error::{invalid, Error, Result};
use crate::tolerance;

/// Name of the ancilla register in a verifier layout.
pub const ANCILLA: &str = "A";
/// Name of the witness register in a verifier layout.
pub const WITNESS: &str = "W";

/// A unitary `V` on `A ⊗ W` that accepts when the first qubit `M` of `A` reads 1.
#[derive(Clone, Debug)]
pub struct Verifier {
    unitary: Operator,
    ancilla_qubits: usize,
    witness_qubits: usize,
    completeness: f64,
    soundness: f64,
    cost: usize,
}

impl Verifier {
    /// Wraps `unitary` (on `2^a · 2^w` dimensions) with annotations `(c, s)`.
    pub fn new(
        unitary: Operator,
        ancilla_qubits: usize,
        witness_qubits: usize,
        completeness: f64,
        soundness: f64,
    ) -> Result<Self> {
        if ancilla_qubits == 0 {
            return Err(invalid("a verifier needs at least one ancilla qubit"));
        }
        let n = 1usize << (ancilla_qubits + witness_qubits);
        crate::algebra::check_dim("verifier", n, unitary.dim_in())?;
        let unitary = if unitary.flags().unitary {
            unitary
        } else {
            Operator::unitary(unitary.into_matrix())?
        };
        check_annotations(completeness, soundness)?;
        Ok(Self {
            unitary,
            ancilla_qubits,
            witness_qubits,
            completeness,
            soundness,
            cost: 1,
        })
    }

    /// `V = X` on `M`: every witness is accepted with certainty.
    pub fn always_accept(ancilla_qubits: usize, witness_qubits: usize) -> Result<Self> {
        let rest = 1usize << (ancilla_qubits + witness_qubits - 1);
        let x = crate::algebra::tensor(&[Operator::pauli_x(), Operator::identity(rest)])?;
        Self::new(x, ancilla_qubits, witness_qubits, 1.0, 0.0)
    }

    /// `V = I`: `M` stays `|0⟩`, so every witness is rejected.
    pub fn always_reject(ancilla_qubits: usize, witness_qubits: usize) -> Result<Self> {
        let n = 1usize << (ancilla_qubits + witness_qubits);
        Self::new(Operator::identity(n), ancilla_qubits, witness_qubits, 1.0, 0.0)
    }

    /// Haar-random `V`.
    pub fn haar<R: Rng + ?Sized>(
        ancilla_qubits: usize,
        witness_qubits: usize,
        completeness: f64,
        soundness: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let n = 1usize << (ancilla_qubits + witness_qubits);
        Self::new(
            haar_unitary(n, rng),
            ancilla_qubits,
            witness_qubits,
            completeness,
            soundness,
        )
    }

    /// Random `V` whose acceptance POVM has exactly the given spectrum in a
    /// random eigenbasis.
    ///
    /// `V = (G₀ ⊕ G₁) · R · (I_A ⊗ U†) · (I ⊕ H)`: `H` scrambles the complement
    /// of `|0⟩_A ⊗ W`, `U` is the eigenbasis, `R` rotates `|0⟩|0..⟩|k⟩` into
    /// `√(1−p_k)|0..k⟩ + √p_k|1..k⟩`, and `G₀, G₁` scramble each half of `M`.
    pub fn with_spectrum<R: Rng + ?Sized>(
        ancilla_qubits: usize,
        witness_qubits: usize,
        spectrum: &[f64],
        completeness: f64,
        soundness: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if ancilla_qubits == 0 {
            return Err(invalid("a verifier needs at least one ancilla qubit"));
        }
        let wd = 1usize << witness_qubits;
        let n = wd << ancilla_qubits;
        let half = n / 2;
        crate::algebra::check_dim("spectrum", wd, spectrum.len())?;
        if let Some(p) = spectrum.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid(format!("acceptance probability {p} outside [0, 1]")));
        }
        let scramble = haar_unitary(n - wd, rng);
        let basis = haar_unitary(wd, rng);
        let g0 = haar_unitary(half, rng);
        let g1 = haar_unitary(half, rng);

        let mut h = DMatrix::<C64>::identity(n, n);
        h.view_mut((wd, wd), (n - wd, n - wd))
            .copy_from(scramble.matrix());
        let mut u = DMatrix::<C64>::zeros(n, n);
        let ad = n / wd;
        for a in 0..ad {
            u.view_mut((a * wd, a * wd), (wd, wd))
                .copy_from(&basis.matrix().adjoint());
        }
        let mut r = DMatrix::<C64>::identity(n, n);
        for (k, &p) in spectrum.iter().enumerate() {
            let (c, s) = ((1.0 - p).sqrt(), p.sqrt());
            r[(k, k)] = C64::new(c, 0.0);
            r[(half + k, k)] = C64::new(s, 0.0);
            r[(k, half + k)] = C64::new(-s, 0.0);
            r[(half + k, half + k)] = C64::new(c, 0.0);
        }
        let mut g = DMatrix::<C64>::zeros(n, n);
        g.view_mut((0, 0), (half, half)).copy_from(g0.matrix());
        g.view_mut((half, half), (half, half)).copy_from(g1.matrix());
        let v = g * r * u * h;
        Self::new(
            Operator::unitary(v)?,
            ancilla_qubits,
            witness_qubits,
            completeness,
            soundness,
        )
    }

    /// Random spectrum with maximum `p_max` and the remaining eigenvalues
    /// uniform in `[0, p_max)`.
    pub fn with_top_eigenvalue<R: Rng + ?Sized>(
        ancilla_qubits: usize,
        witness_qubits: usize,
        p_max: f64,
        completeness: f64,
        soundness: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let wd = 1usize << witness_qubits;
        let mut spectrum: Vec<f64> = (1..wd).map(|_| rng.random::<f64>() * p_max).collect();
        spectrum.insert(0, p_max);
        Self::with_spectrum(
            ancilla_qubits,
            witness_qubits,
            &spectrum,
            completeness,
            soundness,
            rng,
        )
    }

    pub fn with_annotations(mut self, completeness: f64, soundness: f64) -> Result<Self> {
        check_annotations(completeness, soundness)?;
        self.completeness = completeness;
        self.soundness = soundness;
        Ok(self)
    }

    /// Sets the gate-count model `t_A` used in resource reports.
    pub fn with_cost(mut self, cost: usize) -> Self {
        self.cost = cost;
        self
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    pub fn witness_qubits(&self) -> usize {
        self.witness_qubits
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.ancilla_qubits
    }

    pub fn witness_dim(&self) -> usize {
        1 << self.witness_qubits
    }

    pub fn dim(&self) -> usize {
        self.ancilla_dim() * self.witness_dim()
    }

    pub fn completeness(&self) -> f64 {
        self.completeness
    }

    pub fn soundness(&self) -> f64 {
        self.soundness
    }

    pub fn cost(&self) -> usize {
        self.cost
    }

    /// `[A: 2^a, W: 2^w]`.
    pub fn layout(&self) -> SpaceLayout {
        SpaceLayout::new([(ANCILLA, self.ancilla_dim()), (WITNESS, self.witness_dim())])
            .expect("two distinct registers")
    }

    /// `Π_acc = |1⟩⟨1|_M ⊗ I` on `A ⊗ W`.
    pub fn accept_projector(&self) -> Operator {
        let n = self.dim();
        Operator::basis_projector(n, n / 2..n)
    }

    /// `V|0⟩_A|w⟩` for a witness `w`.
    pub fn run(&self, w: &StateVector) -> Result<StateVector> {
        crate::algebra::check_dim("witness", self.witness_dim(), w.dim())?;
        self.unitary.apply(&embed_zero_ancilla(w, self.ancilla_dim()))
    }
}

fn check_annotations(c: f64, s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) || !(0.0..=1.0).contains(&s) || !(c > s) {
        return Err(invalid(format!(
            "annotations need 0 ≤ s < c ≤ 1, got c = {c}, s = {s}"
        )));
    }
    Ok(())
}

/// `|0⟩_A ⊗ |w⟩`.
pub fn embed_zero_ancilla(w: &StateVector, ancilla_dim: usize) -> StateVector {
    StateVector::basis(ancilla_dim, 0).tensor(w)
}

/// `P_V = (⟨0|_A ⊗ I) V† Π_acc V (|0⟩_A ⊗ I)`.
pub fn accept_povm(v: &Verifier) -> Operator {
    let n = v.dim();
    let wd = v.witness_dim();
    let x = v.unitary.matrix().view((n / 2, 0), (n / 2, wd));
    gram(x)
}

/// `‖Π_acc V|0⟩|w⟩‖²`.
pub fn p_accept(v: &Verifier, w: &StateVector) -> Result<f64> {
    let out = v.run(w)?;
    let n = out.dim();
    Ok(out.amplitudes()[n / 2..].iter().map(|a| a.norm_sqr()).sum())
}

/// Top eigenpair of `P_V`: the maximal acceptance probability (clamped to
/// `[0, 1]` against rounding) and its witness.
pub fn optimal_witness(v: &Verifier) -> Result<(f64, StateVector)> {
    let (p, w) = top_eigenpair(&accept_povm(v))?;
    Ok((p.clamp(0.0, 1.0), w))
}

/// The vectors of the rewinding decomposition for an eigen-witness.
///
/// `V` maps `span{w0, w1}` onto `span{s0, s1}` through
/// `[[√(1−p), √p], [√p, −√(1−p)]]`. At `p = 0` the vectors `s1` and `w1` are
/// absent, at `p = 1` the vectors `s0` and `w1` are.
#[derive(Clone, Debug)]
pub struct RewindingBasis {
    pub p: f64,
    pub w0: StateVector,
    pub w1: Option<StateVector>,
    pub s0: Option<StateVector>,
    pub s1: Option<StateVector>,
}

impl RewindingBasis {
    pub fn is_degenerate(&self) -> bool {
        self.w1.is_none()
    }

    /// `‖V w0 − √(1−p) s0 − √p s1‖` and `‖V w1 − √p s0 + √(1−p) s1‖`
    /// (the second is 0 when degenerate).
    pub fn residuals(&self, v: &Verifier) -> Result<(f64, f64)> {
        let zero = StateVector::zeros(v.dim());
        let s0 = self.s0.as_ref().unwrap_or(&zero).as_vector();
        let s1 = self.s1.as_ref().unwrap_or(&zero).as_vector();
        let (a, b) = ((1.0 - self.p).sqrt(), self.p.sqrt());
        let vw0 = v.unitary.apply(&self.w0)?;
        let r0 = (vw0.as_vector() - s0.scale(a) - s1.scale(b)).norm();
        let r1 = match &self.w1 {
            Some(w1) => {
                let vw1 = v.unitary.apply(w1)?;
                (vw1.as_vector() - s0.scale(b) + s1.scale(a)).norm()
            }
            None => 0.0,
        };
        Ok((r0, r1))
    }

    /// Residuals of the four rewinding relations: the actions of `V` on `w0`
    /// and `w1`, `Π₀ w1 = 0`, and the shape of the basis (unit vectors with
    /// `s0` on `M = 0` and `s1` on `M = 1`).
    pub fn relation_residuals(&self, v: &Verifier) -> Result<[f64; 4]> {
        let (r0, r1) = self.residuals(v)?;
        let wd = v.witness_dim();
        let half = v.dim() / 2;
        let on_zero = self.w1.as_ref().map_or(0.0, |w1| {
            w1.amplitudes()[..wd].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
        });
        let mass = |x: &StateVector, range: std::ops::Range<usize>| -> f64 {
            x.amplitudes()[range].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
        };
        let mut shape = (self.w0.norm() - 1.0).abs();
        for x in [&self.w1, &self.s0, &self.s1].into_iter().flatten() {
            shape = shape.max((x.norm() - 1.0).abs());
        }
        if let Some(s0) = &self.s0 {
            shape = shape.max(mass(s0, half..v.dim()));
        }
        if let Some(s1) = &self.s1 {
            shape = shape.max(mass(s1, 0..half));
        }
        Ok([r0, r1, on_zero, shape])
    }

    /// `⟨s_i|V|w_j⟩` for `i, j ∈ {0, 1}`; `None` when degenerate.
    pub fn block_matrix(&self, v: &Verifier) -> Result<Option<[[C64; 2]; 2]>> {
        let (Some(w1), Some(s0), Some(s1)) = (&self.w1, &self.s0, &self.s1) else {
            return Ok(None);
        };
        let vw = [v.unitary.apply(&self.w0)?, v.unitary.apply(w1)?];
        let s = [s0, s1];
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = s[i].inner(&vw[j])?;
            }
        }
        Ok(Some(m))
    }
}

/// Builds the rewinding decomposition around an eigenvector `w` of `P_V`.
pub fn rewinding_basis(v: &Verifier, w: &StateVector) -> Result<RewindingBasis> {
    let w = w.normalized()?;
    let povm = accept_povm(v);
    let p = povm.expectation(&w)?.clamp(0.0, 1.0);
    let pw = povm.apply(&w)?;
    let residual = (pw.as_vector() - w.as_vector().scale(p)).norm();
    if residual > tolerance::END_TO_END {
        return Err(Error::NotEigenvector { residual });
    }
    let n = v.dim();
    let w0 = embed_zero_ancilla(&w, v.ancilla_dim());
    let vw0 = v.unitary.apply(&w0)?;
    let mut rej = vw0.clone();
    let mut acc = vw0;
    rej.amplitudes_mut()[n / 2..].fill(C64::new(0.0, 0.0));
    acc.amplitudes_mut()[..n / 2].fill(C64::new(0.0, 0.0));
    let degenerate = tolerance::CONSTRUCTION;
    let s0 = (1.0 - p > degenerate).then(|| scaled(&rej, 1.0 / (1.0 - p).sqrt()));
    let s1 = (p > degenerate).then(|| scaled(&acc, 1.0 / p.sqrt()));
    let w1 = match (&s0, &s1) {
        (Some(_), Some(s1)) => {
            let mut back = v.unitary.adjoint().apply(s1)?;
            back.amplitudes_mut()[..v.witness_dim()].fill(C64::new(0.0, 0.0));
            Some(scaled(&back, -1.0 / (1.0 - p).sqrt()))
        }
        _ => None,
    };
    Ok(RewindingBasis { p, w0, w1, s0, s1 })
}

fn scaled(v: &StateVector, k: f64) -> StateVector {
    StateVector::from_vector(v.as_vector().scale(k))
}

/// Upper bound `2√(p(1−p))` on the trace distance between `C[U]ψ` and `ψ`
/// when the control is populated with probability `p`.
pub fn controlled_gate_removal_bound(p: f64) -> f64 {
    2.0 * (p * (1.0 - p)).max(0.0).sqrt()
}

/// Applies `C[U] = |0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U` to `psi` on a qubit followed by
/// `U`'s register; returns the control population `p` and `T(C[U]ψ, ψ)`.
pub fn controlled_gate_removal_distance(psi: &StateVector, u: &Operator) -> Result<(f64, f64)> {
    let n = u.dim_in();
    crate::algebra::check_dim("controlled state", 2 * n, psi.dim())?;
    let p: f64 = psi.amplitudes()[n..].iter().map(|a| a.norm_sqr()).sum();
    let layout = SpaceLayout::new([("ctrl", 2), ("target", n)])?;
    let mut prog = Program::new(layout);
    prog.push_controlled(u, &["target"], "ctrl", |c| c == 1)?;
    let phi = prog.apply(psi)?;
    Ok((p, crate::algebra::trace_distance(&phi, psi)?))
}

/// The affine acceptance map `p ↦ r + t·p` used to center a gap around 1/4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Centering {
    /// Stretch: the new half-gap is `(c − s)/alpha`.
    pub alpha: f64,
    /// Probability of running `V`.
    pub t: f64,
    /// Probability of accepting without running `V`.
    pub r: f64,
    /// Half-gap of the centered verifier.
    pub delta: f64,
}

impl Centering {
    pub fn for_gap(c: f64, s: f64) -> Result<Self> {
        check_annotations(c, s)?;
        let alpha = 2f64.max(4.0 * (c + s)).max(4.0 * (2.0 - c - s) / 3.0);
        let t = 2.0 / alpha;
        let r = (0.25 - (c + s) / alpha).max(0.0);
        Ok(Self {
            alpha,
            t,
            r,
            delta: (c - s) / alpha,
        })
    }

    pub fn apply(&self, p: f64) -> f64 {
        self.r + self.t * p
    }
}

/// True when `c − 1/4 = 1/4 − s` up to construction tolerance.
pub fn is_centered(c: f64, s: f64) -> bool {
    (c + s - 0.5).abs() <= tolerance::CONSTRUCTION
}

/// Wraps `v` so its annotations sit symmetrically around 1/4.
///
/// A fresh coin qubit `C` (appended as the last qubit of `A`, so `M` stays
/// first) is rotated to `|1⟩` with probability `t`. On `C = 1` the original
/// `V` runs; on `C = 0` the qubit `M` is rotated to `|1⟩` with probability
/// `r/(1−t)`. The acceptance POVM becomes `t·P_V + r·I`.
pub fn center_gap(v: &Verifier) -> Result<Verifier> {
    if is_centered(v.completeness, v.soundness) {
        return Ok(v.clone());
    }
    let k = Centering::for_gap(v.completeness, v.soundness)?;
    let rest = v.ancilla_dim() / 2;
    let layout = SpaceLayout::new([
        ("M", 2),
        ("Ar", rest),
        ("C", 2),
        (WITNESS, v.witness_dim()),
    ])?;
    let theta = |prob: f64| 2.0 * prob.clamp(0.0, 1.0).sqrt().asin();
    let mut prog = Program::new(layout);
    prog.push(&Operator::ry(theta(k.t)), &["C"])?;
    prog.push_controlled(&v.unitary, &["M", "Ar", WITNESS], "C", |c| c == 1)?;
    if k.t < 1.0 {
        prog.push_controlled(&Operator::ry(theta(k.r / (1.0 - k.t))), &["M"], "C", |c| c == 0)?;
    }
    let (c2, s2) = (0.25 + k.delta, 0.25 - k.delta);
    Ok(Verifier {
        unitary: prog.to_operator(),
        ancilla_qubits: v.ancilla_qubits + 1,
        witness_qubits: v.witness_qubits,
        completeness: c2,
        soundness: s2,
        cost: v.cost + 2,
    })
}
