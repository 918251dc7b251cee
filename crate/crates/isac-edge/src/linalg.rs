//! Small dense complex-matrix helpers shared by the solver modules.
//!
//! Everything here works through the real symmetric embedding of a Hermitian
//! matrix, so the rest of the crate never needs a complex eigensolver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Builds the real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]`.
///
/// The embedding is PSD iff `A` is PSD, carries each eigenvalue of `A` with
/// doubled multiplicity, and satisfies `tr(embed(A)) = 2 tr(A)`.
pub(crate) fn embed_hermitian(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(n + i, n + j)] = z.re;
            out[(i, n + j)] = -z.im;
            out[(n + i, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`embed_hermitian`] for an arbitrary symmetric `2n x 2n` matrix:
/// averages the matrix with its rotation `R X Rᵀ` (`R = [[0,-I],[I,0]]`) and
/// reads off the complex Hermitian part. For matrices that already have the
/// embedding structure this is exact; for general symmetric PSD matrices the
/// result is the Hermitian PSD matrix with the same inner products against
/// embedded coefficients.
pub(crate) fn project_embedding(x: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = x.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
        let im = 0.5 * (x[(n + i, j)] - x[(i, n + j)]);
        Complex64::new(re, im)
    })
}

pub(crate) fn is_hermitian(a: &DMatrix<Complex64>, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// Goes through the real embedding: its spectrum is the complex spectrum with
/// every eigenvalue doubled, and each real eigenvector `(u; v)` maps to the
/// complex eigenvector `u + iv`.
pub(crate) fn hermitian_eigen(a: &DMatrix<Complex64>) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    let n = a.nrows();
    let embedded = embed_hermitian(a);
    let eig = nalgebra::SymmetricEigen::new(embedded);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    // Keep one representative per doubled eigenvalue: the real eigenspace for a
    // complex eigenvalue of multiplicity k has real dimension 2k and is spanned
    // by phase rotations, so taking every other sorted vector is enough.
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for pair in 0..n {
        let idx = order[2 * pair];
        values.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        let z = DVector::from_fn(n, |i, _| Complex64::new(col[i], col[n + i]));
        vectors.push(z);
    }
    (values, vectors)
}

/// Ratio of second-largest to largest eigenvalue, the rank-1 defect measure.
/// Matrices that are numerically zero report a defect of zero.
pub(crate) fn rank1_defect(a: &DMatrix<Complex64>) -> f64 {
    let (values, _) = hermitian_eigen(a);
    let lead = values[0].abs();
    if lead <= 1e-300 || values.len() < 2 {
        return 0.0;
    }
    (values[1].abs() / lead).min(f64::MAX)
}
