//! The truncated counter register and the states and projectors built on it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{OpFlags, Operator, SpaceLayout, StateVector, C64};
use crate::error::{invalid, Error, Result};

/// Whether a counter stands for the unbounded register or a `D`-level truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CounterRole {
    /// The unbounded counter, simulated at a level `D` large enough to be unreachable.
    Unbounded,
    /// A genuine `D`-level truncation with increment modulo `D`.
    Truncated,
}

/// A `D`-dimensional counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterRegister {
    dim: usize,
    role: CounterRole,
}

impl CounterRegister {
    pub fn new(dim: usize, role: CounterRole) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("counter dimension must be at least 2, got {dim}")));
        }
        Ok(Self { dim, role })
    }

    pub fn truncated(dim: usize) -> Result<Self> {
        Self::new(dim, CounterRole::Truncated)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> CounterRole {
        self.role
    }

    /// Number of qubits when `D` is a power of two.
    pub fn qubits(&self) -> Option<u32> {
        self.dim.is_power_of_two().then(|| self.dim.trailing_zeros())
    }
}

/// Which infinite-counter construction a witness or verifier belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstructionTag {
    /// Distillation through a second register and the `Q` measurement.
    C1,
    /// Controlled increment followed by a controlled reflection.
    C2,
}

/// `|d⟩ ↦ |d + 1 mod D⟩`.
pub fn inc_mod(reg: &CounterRegister) -> Operator {
    let d = reg.dim;
    let mut m = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        m[((i + 1) % d, i)] = C64::new(1.0, 0.0);
    }
    Operator::trusted(m, OpFlags::UNITARY)
}

/// `X_target ⊗ |0⟩⟨0|_B + I ⊗ Σ_{d≥1} |d⟩⟨d|_B`, embedded in `layout`.
pub fn zero_check(
    reg: &CounterRegister,
    layout: &SpaceLayout,
    counter: &str,
    target_qubit: &str,
) -> Result<Operator> {
    crate::algebra::check_dim("zero_check counter", reg.dim, layout.dim_of(counter)?)?;
    crate::algebra::check_dim("zero_check target", 2, layout.dim_of(target_qubit)?)?;
    let p0 = Operator::basis_projector(reg.dim, [0]);
    crate::algebra::controlled(&Operator::pauli_x(), &p0, layout, &[counter], &[target_qubit])
}

/// The geometric ratio `γ(p)` of a construction's witness.
pub fn witness_ratio(p: f64, tag: ConstructionTag) -> Result<f64> {
    match tag {
        ConstructionTag::C1 if p > 0.5 && p <= 1.0 => Ok((1.0 - p) / p),
        ConstructionTag::C2 if p > 0.25 && p <= 1.0 => Ok(1.0 - 1.0 / (2.0 * p)),
        ConstructionTag::C1 => Err(invalid(format!("C1 witness needs 1/2 < p ≤ 1, got {p}"))),
        ConstructionTag::C2 => Err(invalid(format!("C2 witness needs 1/4 < p ≤ 1, got {p}"))),
    }
}

/// Counter state with amplitudes `∝ γ^d` for `d = 0..D−2` and nothing on `|D−1⟩`.
#[derive(Clone, Debug)]
pub struct GeometricWitness {
    gamma: f64,
    dim: usize,
    tag: ConstructionTag,
    state: StateVector,
}

impl GeometricWitness {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> ConstructionTag {
        self.tag
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    /// `⟨ψ̃|ψ_∞⟩ = √(1 − γ^{2(D−1)})`.
    pub fn ideal_overlap(&self) -> f64 {
        (1.0 - self.gamma.powi(2 * (self.dim as i32 - 1))).sqrt()
    }

    /// Trace distance to the untruncated state, `|γ|^{D−1}`.
    pub fn trace_distance_to_ideal(&self) -> f64 {
        self.gamma.abs().powi(self.dim as i32 - 1)
    }

    /// `log₂ |γ|^{D−1}`, finite even where the residual underflows.
    pub fn log2_trace_distance_to_ideal(&self) -> f64 {
        (self.dim as f64 - 1.0) * self.gamma.abs().log2()
    }
}

/// The truncated geometric witness of a construction at acceptance probability `p`.
pub fn geometric_witness(p: f64, dim: usize, tag: ConstructionTag) -> Result<GeometricWitness> {
    if dim < 2 {
        return Err(invalid(format!("counter dimension must be at least 2, got {dim}")));
    }
    let gamma = witness_ratio(p, tag)?;
    let support = dim as i32 - 1;
    let norm = ((1.0 - gamma * gamma) / (1.0 - gamma.powi(2 * support))).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (d, a) in amps.iter_mut().take(dim - 1).enumerate() {
        *a = C64::new(norm * gamma.powi(d as i32), 0.0);
    }
    Ok(GeometricWitness {
        gamma,
        dim,
        tag,
        state: StateVector::new(amps)?,
    })
}

/// Projector on `B̃ ⊗ R` spanned by `|0⟩|1⟩` and `(|d⟩|0⟩ + |d+1⟩|1⟩)/√2`, `d < D − 1`.
pub fn q_projector(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(invalid(format!("counter dimension must be at least 2, got {dim}")));
    }
    let n = 2 * dim;
    let mut m = DMatrix::<C64>::zeros(n, n);
    m[(1, 1)] = C64::new(1.0, 0.0);
    let h = C64::new(0.5, 0.0);
    for d in 0..dim - 1 {
        let (a, b) = (2 * d, 2 * (d + 1) + 1);
        m[(a, a)] += h;
        m[(b, b)] += h;
        m[(a, b)] += h;
        m[(b, a)] += h;
    }
    Operator::projector(m)
}

/// Zeroes a window of `ell` consecutive counter values chosen to remove the
/// least probability mass (smallest start on ties) and renormalizes.
///
/// Returns the window start `k` and the renormalized state.
pub fn remove_interval(psi: &StateVector, ell: usize) -> Result<(usize, StateVector)> {
    let d = psi.dim();
    if ell == 0 || ell >= d {
        return Err(invalid(format!("need 0 < ell < D, got ell = {ell}, D = {d}")));
    }
    let mass: Vec<f64> = psi.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    let mut best = (0, f64::INFINITY);
    for k in 0..=d - ell {
        let removed: f64 = mass[k..k + ell].iter().sum();
        if removed < best.1 {
            best = (k, removed);
        }
    }
    let k = best.0;
    let mut phi = psi.clone();
    phi.amplitudes_mut()[k..k + ell].fill(C64::new(0.0, 0.0));
    let phi = phi
        .normalized()
        .map_err(|_| Error::InvalidParameter("state vanishes after interval removal".into()))?;
    Ok((k, phi))
}

/// The lower bound `√(1 − ℓ/(D − ℓ))` on the fidelity after interval removal.
pub fn interval_removal_bound(dim: usize, ell: usize) -> f64 {
    (1.0 - ell as f64 / (dim - ell) as f64).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::fidelity;

    #[test]
    fn inc_mod_two_levels_is_x() {
        let r = CounterRegister::truncated(2).unwrap();
        assert_eq!(inc_mod(&r).matrix(), Operator::pauli_x().matrix());
    }

    #[test]
    fn inc_mod_wraps_and_cycles() {
        let r = CounterRegister::truncated(5).unwrap();
        let inc = inc_mod(&r);
        assert_eq!(inc.apply(&StateVector::basis(5, 4)).unwrap(), StateVector::basis(5, 0));
        let mut p = Operator::identity(5);
        for _ in 0..5 {
            p = inc.compose(&p).unwrap();
        }
        assert_eq!(p.matrix(), Operator::identity(5).matrix());
        for row in inc.matrix().row_iter() {
            let ones = row.iter().filter(|x| **x == C64::new(1.0, 0.0)).count();
            let zeros = row.iter().filter(|x| **x == C64::new(0.0, 0.0)).count();
            assert_eq!((ones, zeros), (1, 4));
        }
    }

    #[test]
    fn counter_needs_two_levels() {
        assert!(CounterRegister::truncated(1).is_err());
    }

    #[test]
    fn zero_check_action() {
        let r = CounterRegister::truncated(4).unwrap();
        let l = SpaceLayout::new([("B", 4), ("f", 2)]).unwrap();
        let z = zero_check(&r, &l, "B", "f").unwrap();
        assert_eq!(z.apply(&StateVector::basis(8, 0)).unwrap(), StateVector::basis(8, 1));
        assert_eq!(z.apply(&StateVector::basis(8, 6)).unwrap(), StateVector::basis(8, 6));
        assert!(z.compose(&z).unwrap().distance(&Operator::identity(8)).unwrap() < 1e-15);
    }

    #[test]
    fn geometric_witness_at_certainty() {
        let w = geometric_witness(1.0, 8, ConstructionTag::C2).unwrap();
        assert_eq!(w.gamma(), 0.5);
        let a = w.state().amplitudes();
        for d in 0..6 {
            assert!((a[d + 1].re / a[d].re - 0.5).abs() < 1e-15);
        }
        assert_eq!(a[7], C64::new(0.0, 0.0));
        let w1 = geometric_witness(1.0, 8, ConstructionTag::C1).unwrap();
        assert_eq!(w1.gamma(), 0.0);
        assert_eq!(w1.state(), &StateVector::basis(8, 0));
    }

    #[test]
    fn geometric_witness_overlap_with_ideal() {
        // Overlap computed by summing the truncated part against the exact infinite state.
        let w = geometric_witness(0.4, 16, ConstructionTag::C2).unwrap();
        let g = w.gamma();
        assert!((g + 0.25).abs() < 1e-15);
        assert!((w.state().norm() - 1.0).abs() < 1e-12);
        let ideal_norm = (1.0 - g * g).sqrt();
        let overlap: f64 = w
            .state()
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(d, a)| a.re * ideal_norm * g.powi(d as i32))
            .sum();
        assert!((overlap - (1.0 - g.powi(30)).sqrt()).abs() < 1e-12);
        assert!((overlap - w.ideal_overlap()).abs() < 1e-12);
    }

    #[test]
    fn geometric_witness_rejects_out_of_range() {
        assert!(geometric_witness(0.5, 8, ConstructionTag::C1).is_err());
        assert!(geometric_witness(0.25, 8, ConstructionTag::C2).is_err());
        assert!(geometric_witness(0.9, 1, ConstructionTag::C2).is_err());
    }

    #[test]
    fn q_projector_structure() {
        let d = 8;
        // Listed spanning vectors are orthonormal.
        let mut vecs = vec![StateVector::basis(2 * d, 1)];
        for k in 0..d - 1 {
            let mut a = vec![C64::new(0.0, 0.0); 2 * d];
            a[2 * k] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            a[2 * (k + 1) + 1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            vecs.push(StateVector::new(a).unwrap());
        }
        for (i, a) in vecs.iter().enumerate() {
            for (j, b) in vecs.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b).unwrap() - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        let q = q_projector(d).unwrap();
        let tr: C64 = q.matrix().diagonal().iter().sum();
        assert!((tr.re - d as f64).abs() < 1e-12);
        assert!((q.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!(q.idempotency_residual() < 1e-12 && q.hermitian_residual() < 1e-12);
    }

    #[test]
    fn remove_interval_basis_state() {
        let (k, phi) = remove_interval(&StateVector::basis(4, 0), 1).unwrap();
        assert!(k >= 1);
        assert_eq!(phi, StateVector::basis(4, 0));
    }

    #[test]
    fn remove_interval_uniform() {
        let psi = StateVector::from_real(&[8f64.sqrt().recip(); 8]).unwrap();
        let (k, phi) = remove_interval(&psi, 2).unwrap();
        assert_eq!(k, 0);
        let f = fidelity(&phi, &psi).unwrap();
        assert!((f - 0.75f64.sqrt()).abs() < 1e-15);
        assert!(f >= interval_removal_bound(8, 2));
    }

    #[test]
    fn remove_interval_rejects_bad_window() {
        let psi = StateVector::basis(4, 0);
        assert!(remove_interval(&psi, 0).is_err());
        assert!(remove_interval(&psi, 4).is_err());
    }
}
