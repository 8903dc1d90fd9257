use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Operator, StateVector, C64};
use crate::error::{Error, Result};
use crate::tolerance;

/// Hermitian eigendecomposition with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<C64>,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> StateVector {
        StateVector::from_vector(self.vectors.column(k).into_owned())
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn hermitian_matrix(op: &Operator) -> Result<DMatrix<C64>> {
    let m = op.matrix();
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context: "eigendecomposition",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let scale = m.norm().max(1.0);
    let r = op.hermitian_residual();
    if !(r <= tolerance::FLAG * scale) {
        return Err(Error::FlagViolation {
            flag: "hermitian",
            residual: r,
        });
    }
    Ok((m + m.adjoint()).unscale(2.0))
}

/// Eigendecomposition of a Hermitian operator.
pub fn eigh(op: &Operator) -> Result<Eigen> {
    let m = hermitian_matrix(op)?;
    let n = m.nrows();
    let se = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Largest eigenvalue and a unit eigenvector with a deterministic choice inside
/// degenerate top eigenspaces.
///
/// Among unit vectors of the top eigenspace (eigenvalues within
/// [`tolerance::EIGEN_TIE`]), the returned one maximizes the absolute amplitudes
/// in lexicographic order; its first non-negligible amplitude is real positive.
pub fn top_eigenpair(op: &Operator) -> Result<(f64, StateVector)> {
    let e = eigh(op)?;
    let n = e.values.len();
    let top = e.values[n - 1];
    let first = e.values.partition_point(|&v| v < top - tolerance::EIGEN_TIE);
    let basis = e.vectors.columns(first, n - first);
    // The projection of e_j onto the eigenspace maximizes |v_j| among its unit
    // vectors; the first j with a nonzero projection settles the comparison.
    let mut best: Option<DVector<C64>> = None;
    for j in 0..n {
        let coeffs: DVector<C64> = basis.row(j).adjoint();
        let proj = basis * coeffs;
        let norm = proj.norm();
        if norm > 1e-6 {
            best = Some(proj.unscale(norm));
            break;
        }
    }
    let v = StateVector::from_vector(best.expect("eigenspace is nonempty")).with_canonical_phase();
    let residual = (op.matrix() * v.as_vector() - v.as_vector().scale(top)).norm();
    if residual > tolerance::END_TO_END * op.matrix().norm().max(1.0) {
        return Err(Error::NotEigenvector { residual });
    }
    Ok((top, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random::{random_hermitian, seeded_rng};

    #[test]
    fn identity_tie_break_returns_first_basis_vector() {
        let (l, v) = top_eigenpair(&Operator::identity(4)).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        assert_eq!(v, StateVector::basis(4, 0));
    }

    #[test]
    fn diagonal_top_pair() {
        let op = Operator::from_real(2, 2, &[0.2, 0.0, 0.0, 0.7]);
        let (l, v) = top_eigenpair(&op).unwrap();
        assert!((l - 0.7).abs() < 1e-15);
        assert_eq!(v, StateVector::basis(2, 1));
    }

    #[test]
    fn degenerate_space_without_first_basis_vector() {
        // Top eigenspace span{|1⟩, |2⟩}: e_0 projects to zero, e_1 is selected.
        let op = Operator::from_real(3, 3, &[0.1, 0.0, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.9]);
        let (_, v) = top_eigenpair(&op).unwrap();
        assert!(v.distance(&StateVector::basis(3, 1)).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let op = Operator::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            top_eigenpair(&op),
            Err(Error::FlagViolation { flag: "hermitian", .. })
        ));
    }

    #[test]
    fn residuals_on_random_hermitian_matrices() {
        let mut rng = seeded_rng(11);
        for (i, n) in [1usize, 2, 3, 7, 16, 33, 64, 128, 257, 512].into_iter().enumerate() {
            let h = random_hermitian(n, &mut rng);
            let (l, v) = top_eigenpair(&h).unwrap();
            let r = (h.matrix() * v.as_vector() - v.as_vector().scale(l)).norm();
            assert!(r <= 1e-9, "case {i}: dim {n} residual {r:e}");
            let e = eigh(&h).unwrap();
            let back = &e.vectors
                * DMatrix::from_diagonal(&DVector::from_iterator(
                    n,
                    e.values.iter().map(|&x| C64::new(x, 0.0)),
                ))
                * e.vectors.adjoint();
            assert!((back - h.matrix()).norm() < 1e-9 * (n as f64));
        }
    }
}
