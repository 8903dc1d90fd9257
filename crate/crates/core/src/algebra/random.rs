//! Seedable random states, unitaries and Hermitian matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{OpFlags, Operator, StateVector, C64};

pub type LabRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> LabRng {
    LabRng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of R's
/// diagonal moved into Q.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Operator {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    Operator::with_flags(q, OpFlags::UNITARY).expect("QR factor is unitary")
}

/// Uniformly random pure state.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    StateVector::new(v)
        .and_then(|s| s.normalized())
        .expect("Gaussian vector is nonzero almost surely")
}

/// Hermitian matrix `(G + G†)/2` with Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(n, n, rng);
    Operator::with_flags((&g + g.adjoint()).unscale(2.0), OpFlags::HERMITIAN)
        .expect("symmetrized matrix is hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_unitary_and_seeded() {
        let a = haar_unitary(8, &mut seeded_rng(3));
        let b = haar_unitary(8, &mut seeded_rng(3));
        assert!(a.isometry_residual() < 1e-12);
        assert_eq!(a, b);
    }

    #[test]
    fn haar_first_entry_has_uniform_phase() {
        // For Haar measure the phase of U_00 is uniform; its mean vanishes.
        let mut rng = seeded_rng(5);
        let mean: C64 = (0..4000)
            .map(|_| {
                let u = haar_unitary(2, &mut rng);
                let z = u.matrix()[(0, 0)];
                z / z.norm()
            })
            .sum::<C64>()
            / 4000.0;
        assert!(mean.norm() < 0.05, "mean phase {mean}");
    }
}
