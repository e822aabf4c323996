//! Discrete Dirichlet-to-Neumann maps, plain and reduced.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{linalg, Spectra, SpectraError, Tolerances};
use crate::assembly::AssembledSystem;

#[derive(Clone, Debug)]
pub struct DtnOperator {
    pub lambda: f64,
    /// Orthonormal `n_B x dim Q` basis of the subspace the map is compressed to.
    pub q_basis: DMatrix<f64>,
    /// Symmetric `dim Q x dim Q` matrix of the map in `q_basis`.
    pub matrix: DMatrix<f64>,
    pub i_infinity: usize,
    /// `dim ker(A_II - lambda M_II)`.
    pub dirichlet_kernel: usize,
    pub flagged: bool,
}

impl DtnOperator {
    pub fn dim(&self) -> usize {
        self.q_basis.ncols()
    }

    pub fn inertia(&self, zero_tol: f64) -> linalg::Inertia {
        linalg::inertia(&self.matrix, zero_tol)
    }

    /// The map in boundary coordinates, `Q Λ Q^T`.
    pub fn boundary_matrix(&self) -> DMatrix<f64> {
        &self.q_basis * &self.matrix * self.q_basis.transpose()
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// DtN map at `lambda`; reduced through the Dirichlet kernel when `lambda` is a Dirichlet eigenvalue.
pub fn dtn(sys: &AssembledSystem, lambda: f64, tol: &Tolerances) -> DtnOperator {
    let c = sys.pencil_blocks(lambda);
    let nb = c.bb.nrows();
    let ker = linalg::kernel(&c.ii, tol.rank, None);
    if ker.dim() == 0 {
        let schur = match c.ii.clone().lu().solve(&c.ib) {
            Some(x) => &c.bb - &c.bi * x,
            // numerically singular yet above the rank threshold; fall back to the pseudoinverse
            None => &c.bb - &c.bi * linalg::pinv(&c.ii, tol.rank).0 * &c.ib,
        };
        return DtnOperator {
            lambda,
            q_basis: DMatrix::identity(nb, nb),
            matrix: symmetrize(schur),
            i_infinity: 0,
            dirichlet_kernel: 0,
            flagged: ker.near_threshold,
        };
    }
    let (pinv, pinv_flag) = linalg::pinv(&c.ii, tol.rank);
    let hat = &c.bb - &c.bi * pinv * &c.ib;
    // ker(C_BI P C_IB) = ker(W^T C_IB) for an orthonormal basis W of ker C_II
    let t = ker.basis.transpose() * &c.ib;
    let scale = linalg::spectral_norm(&c.ib);
    let q = linalg::kernel(&t, tol.rank, Some(scale));
    let matrix = symmetrize(q.basis.transpose() * hat * &q.basis);
    DtnOperator {
        lambda,
        i_infinity: nb - q.dim(),
        dirichlet_kernel: ker.dim(),
        flagged: ker.near_threshold || pinv_flag || q.near_threshold,
        q_basis: q.basis,
        matrix,
    }
}

/// Interior values of the solution with boundary data `u_b`: `u_I = -(C_II)^{-1} C_IB u_B`.
pub fn harmonic_extension(
    sp: &Spectra,
    lambda: f64,
    u_b: &DVector<f64>,
) -> Result<DVector<f64>, SpectraError> {
    sp.check_not_dirichlet(lambda)?;
    check_len(sp.sys, u_b)?;
    let c = sp.sys.pencil_blocks(lambda);
    let rhs = -(&c.ib * u_b);
    c.ii.lu()
        .solve(&rhs)
        .ok_or(SpectraError::DirichletEigenvalue {
            lambda,
            eigenvalue: lambda,
        })
}

/// Discrete normal derivative `C_BB u_B + C_BI u_I` of the extension of `u_b`.
pub fn normal_derivative(
    sp: &Spectra,
    lambda: f64,
    u_b: &DVector<f64>,
) -> Result<DVector<f64>, SpectraError> {
    let u_i = harmonic_extension(sp, lambda, u_b)?;
    let c = sp.sys.pencil_blocks(lambda);
    Ok(&c.bb * u_b + &c.bi * u_i)
}

fn check_len(sys: &AssembledSystem, u_b: &DVector<f64>) -> Result<(), SpectraError> {
    let nb = sys.partition.n_boundary();
    if u_b.len() != nb {
        return Err(SpectraError::Parameter(format!(
            "boundary vector has length {}, expected {nb}",
            u_b.len()
        )));
    }
    Ok(())
}

/// Serializable summary of a DtN operator.
#[derive(Clone, Debug, Serialize)]
pub struct DtnSummary {
    pub lambda: f64,
    pub dim_q: usize,
    pub i_infinity: usize,
    pub dirichlet_kernel: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
    pub eigenvalues: Vec<f64>,
    pub flagged: bool,
}

impl DtnSummary {
    pub fn new(op: &DtnOperator, zero_tol: f64) -> Self {
        let inertia = op.inertia(zero_tol);
        DtnSummary {
            lambda: op.lambda,
            dim_q: op.dim(),
            i_infinity: op.i_infinity,
            dirichlet_kernel: op.dirichlet_kernel,
            n_minus: inertia.minus,
            n_zero: inertia.zero,
            n_plus: inertia.plus,
            eigenvalues: linalg::sym_eigen(&op.matrix).0,
            flagged: op.flagged || inertia.near_threshold,
        }
    }
}
