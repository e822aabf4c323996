//! Inner solutions: interior vectors that solve the Dirichlet and Neumann problems at once.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{linalg, Spectra, Tolerances};
use crate::assembly::AssembledSystem;

#[derive(Clone, Debug)]
pub struct InnerSpace {
    pub lambda: f64,
    /// Orthonormal `n_I x dim` basis of `ker(A_II - lambda M_II) ∩ ker(A_BI - lambda M_BI)`.
    pub basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub flagged: bool,
}

impl InnerSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Residuals `(||C_II u||, ||C_BI u||)` of every basis column.
    pub fn residuals(&self, sys: &AssembledSystem) -> Vec<(f64, f64)> {
        let c = sys.pencil_blocks(self.lambda);
        self.basis
            .column_iter()
            .map(|u| ((&c.ii * u).norm(), (&c.bi * u).norm()))
            .collect()
    }
}

/// Numerical kernel of the stacked matrix `[C_II; C_BI]` with `C = A - lambda M`.
pub fn inner_space(sys: &AssembledSystem, lambda: f64, tol: &Tolerances) -> InnerSpace {
    let c = sys.pencil_blocks(lambda);
    let (ni, nb) = (c.ii.nrows(), c.bi.nrows());
    let mut stacked = DMatrix::zeros(ni + nb, ni);
    stacked.view_mut((0, 0), (ni, ni)).copy_from(&c.ii);
    stacked.view_mut((ni, 0), (nb, ni)).copy_from(&c.bi);
    let k = linalg::kernel(&stacked, tol.rank, None);
    InnerSpace {
        lambda,
        flagged: k.near_threshold,
        basis: k.basis,
        singular_values: k.singular_values,
        threshold: k.threshold,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerEntry {
    pub lambda: f64,
    /// Dirichlet multiplicity `m_D(lambda)`.
    pub multiplicity: usize,
    pub dim_inner: usize,
    /// Basis vectors over the interior nodes, in partition order.
    pub basis: Vec<Vec<f64>>,
    /// `(||C_II u||, ||C_BI u||)` per basis vector.
    pub residuals: Vec<(f64, f64)>,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerReport {
    pub entries: Vec<InnerEntry>,
    /// Interior node indices the basis entries refer to.
    pub interior: Vec<usize>,
    pub ucp: bool,
    pub flagged: bool,
}

impl InnerReport {
    /// Entries with a nontrivial inner space.
    pub fn nontrivial(&self) -> impl Iterator<Item = &InnerEntry> {
        self.entries.iter().filter(|e| e.dim_inner > 0)
    }

    pub fn max_dim(&self) -> usize {
        self.entries.iter().map(|e| e.dim_inner).max().unwrap_or(0)
    }
}

pub(super) fn scan(sp: &Spectra) -> InnerReport {
    let entries: Vec<InnerEntry> = sp
        .dirichlet
        .clusters
        .iter()
        .map(|c| {
            let space = sp.inner_space(c.value);
            InnerEntry {
                lambda: c.value,
                multiplicity: c.len,
                dim_inner: space.dim(),
                basis: space
                    .basis
                    .column_iter()
                    .map(|v| v.iter().copied().collect())
                    .collect(),
                residuals: space.residuals(sp.sys),
                flagged: space.flagged,
            }
        })
        .collect();
    InnerReport {
        ucp: entries.iter().all(|e| e.dim_inner == 0),
        flagged: entries.iter().any(|e| e.flagged),
        interior: sp.sys.partition.interior.clone(),
        entries,
    }
}

/// Evaluates the inner space at every Dirichlet eigenvalue cluster.
pub fn inner_scan(
    sys: &AssembledSystem,
    tol: &Tolerances,
) -> Result<InnerReport, super::SpectraError> {
    Ok(scan(&Spectra::new(sys, *tol)?))
}
