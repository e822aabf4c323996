//! Dense kernels, pseudoinverses and inertia under explicit tolerances.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::Serialize;

/// A value within this factor of a decision threshold marks the decision as ill-conditioned.
pub const FLAG_FACTOR: f64 = 1e3;

fn near(value: f64, threshold: f64) -> bool {
    threshold > 0.0 && value > threshold / FLAG_FACTOR && value < threshold * FLAG_FACTOR
}

#[derive(Clone, Debug)]
pub struct Kernel {
    /// Orthonormal columns spanning the numerical kernel.
    pub basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub near_threshold: bool,
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Singular values and right singular vectors (as rows of `v_t`, all `ncols` of them).
fn full_right_svd(mat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (r, c) = mat.shape();
    // zero rows leave the kernel alone and make the thin SVD return every right vector
    let padded = if r < c {
        mat.clone().resize_vertically(c, 0.0)
    } else {
        mat.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    (svd.singular_values.iter().copied().collect(), v_t)
}

pub fn spectral_norm(mat: &DMatrix<f64>) -> f64 {
    if mat.is_empty() {
        return 0.0;
    }
    mat.clone().svd(false, false).singular_values.max()
}

/// Numerical kernel: right singular vectors with `sigma <= rank_tol * scale`.
///
/// `scale` defaults to the largest singular value of `mat`.
pub fn kernel(mat: &DMatrix<f64>, rank_tol: f64, scale: Option<f64>) -> Kernel {
    let (r, c) = mat.shape();
    if c == 0 {
        return Kernel {
            basis: DMatrix::zeros(0, 0),
            singular_values: vec![],
            threshold: 0.0,
            near_threshold: false,
        };
    }
    if r == 0 {
        return Kernel {
            basis: DMatrix::identity(c, c),
            singular_values: vec![],
            threshold: 0.0,
            near_threshold: false,
        };
    }
    let (sv, v_t) = full_right_svd(mat);
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let threshold = rank_tol * scale.unwrap_or(sigma_max);
    let cols: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= threshold).collect();
    let mut basis = DMatrix::zeros(c, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    let near_threshold = sv.iter().any(|&s| near(s, threshold));
    Kernel {
        basis,
        singular_values: sv,
        threshold,
        near_threshold,
    }
}

/// Moore-Penrose pseudoinverse dropping `sigma <= rank_tol * sigma_max`.
pub fn pinv(mat: &DMatrix<f64>, rank_tol: f64) -> (DMatrix<f64>, bool) {
    let (r, c) = mat.shape();
    if r == 0 || c == 0 {
        return (DMatrix::zeros(c, r), false);
    }
    let svd = SVD::new(mat.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let threshold = rank_tol * sigma_max;
    let flagged = svd.singular_values.iter().any(|&s| near(s, threshold));
    let pinv = svd
        .pseudo_inverse(threshold)
        .expect("nonnegative threshold");
    (pinv, flagged)
}

/// Eigenvalues of a symmetric matrix in ascending order with matching eigenvector columns.
pub fn sym_eigen(mat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    if n == 0 {
        return (vec![], DMatrix::zeros(0, 0));
    }
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub minus: usize,
    pub zero: usize,
    pub plus: usize,
    pub near_threshold: bool,
}

/// Counts of negative, zero (`|mu| <= zero_tol`) and positive eigenvalues of a symmetric matrix.
pub fn inertia(mat: &DMatrix<f64>, zero_tol: f64) -> Inertia {
    let (values, _) = sym_eigen(mat);
    let mut out = Inertia {
        minus: 0,
        zero: 0,
        plus: 0,
        near_threshold: false,
    };
    for mu in values {
        if mu.abs() <= zero_tol {
            out.zero += 1;
        } else if mu < 0.0 {
            out.minus += 1;
        } else {
            out.plus += 1;
        }
        out.near_threshold |= near(mu.abs(), zero_tol);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertia_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 0.0, 3.0]));
        let i = inertia(&d, 1e-9);
        assert_eq!((i.minus, i.zero, i.plus), (1, 1, 1));
        let z = inertia(&DMatrix::zeros(4, 4), 1e-9);
        assert_eq!((z.minus, z.zero, z.plus), (0, 4, 0));
    }

    #[test]
    fn kernel_of_wide_matrix_has_full_dimension() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = kernel(&m, 1e-9, None);
        assert_eq!(k.dim(), 2);
        assert!((&m * &k.basis).amax() < 1e-14);
        assert!((k.basis.transpose() * &k.basis - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn kernel_with_external_scale() {
        let tiny = DMatrix::from_row_slice(2, 2, &[1e-20, 0.0, 0.0, 2e-20]);
        assert_eq!(kernel(&tiny, 1e-9, None).dim(), 0);
        assert_eq!(kernel(&tiny, 1e-9, Some(1.0)).dim(), 2);
    }

    #[test]
    fn pinv_of_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (p, _) = pinv(&m, 1e-9);
        assert!((&m * &p * &m - &m).amax() < 1e-14);
        assert!((p.amax() - 0.25).abs() < 1e-14);
    }
}
