//! Dirichlet and Neumann spectra, inner solutions, Dirichlet-to-Neumann maps and interlacing.
//!
//! Everything here is dense. The Neumann pencil is `(A, M)`; the Dirichlet
//! pencil is its interior block `(A_II, M_II)`. Rank and inertia decisions are
//! made under [`Tolerances`], and every decision that lands close to its
//! threshold is flagged rather than silently rounded.

mod dtn;
mod inner;
mod interlace;
pub mod linalg;
pub mod studies;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{AssembledSystem, AssemblyError};
use crate::mesh::MeshError;

pub use dtn::{dtn, harmonic_extension, normal_derivative, DtnOperator, DtnSummary};
pub use inner::{inner_scan, inner_space, InnerEntry, InnerReport, InnerSpace};
pub use interlace::{counting, interlace, Counts, InterlaceRecord};
pub use linalg::{inertia, Inertia};

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(
        "lambda = {lambda} lies within cluster tolerance of the Dirichlet eigenvalue {eigenvalue}"
    )]
    DirichletEigenvalue { lambda: f64, eigenvalue: f64 },
    #[error(
        "lambda = {lambda} has Neumann multiplicity {multiplicity}, expected a simple eigenvalue"
    )]
    NotSimple { lambda: f64, multiplicity: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Numerical decision thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `sigma` counts as zero iff `sigma <= rank * sigma_max`.
    pub rank: f64,
    /// Eigenvalues cluster iff `|l_i - l_j| <= cluster * (1 + |l_i|)`.
    pub cluster: f64,
    /// Inertia zero class: `|mu| <= zero * (||A|| + |lambda| ||M||)`.
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            cluster: 1e-8,
            zero: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), SpectraError> {
        for (name, v) in [
            ("rank", self.rank),
            ("cluster", self.cluster),
            ("zero", self.zero),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SpectraError::Parameter(format!(
                    "{name} tolerance must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn same_cluster(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.cluster * (1.0 + a.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub start: usize,
    pub len: usize,
    /// Mean of the clustered eigenvalues.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// `M`-orthonormal columns.
    pub vectors: DMatrix<f64>,
    pub clusters: Vec<Cluster>,
}

impl EigenDecomposition {
    /// Cluster containing an eigenvalue within cluster tolerance of `lambda`.
    pub fn cluster_near(&self, lambda: f64, tol: &Tolerances) -> Option<&Cluster> {
        self.clusters.iter().find(|c| {
            self.values[c.start..c.start + c.len]
                .iter()
                .any(|&v| tol.same_cluster(v, lambda))
        })
    }

    pub fn count_below(&self, lambda: f64, tol: &Tolerances) -> usize {
        self.values
            .iter()
            .filter(|&&v| v < lambda && !tol.same_cluster(v, lambda))
            .count()
    }

    pub fn multiplicity_at(&self, lambda: f64, tol: &Tolerances) -> usize {
        self.values
            .iter()
            .filter(|&&v| tol.same_cluster(v, lambda))
            .count()
    }
}

fn clusters_of(values: &[f64], tol: &Tolerances) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if tol.same_cluster(values[i - 1], v) => c.len += 1,
            _ => out.push(Cluster {
                start: i,
                len: 1,
                value: 0.0,
            }),
        }
    }
    for c in &mut out {
        c.value = values[c.start..c.start + c.len].iter().sum::<f64>() / c.len as f64;
    }
    out
}

/// Solves `A v = lambda M v` by a Cholesky reduction `M = L L^T` and a symmetric eigensolve.
pub fn generalized_eigen(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<EigenDecomposition, SpectraError> {
    let n = a.nrows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
            clusters: vec![],
        });
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or(SpectraError::NotPositiveDefinite)?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(a)
        .expect("Cholesky factor is nonsingular");
    let c = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor is nonsingular");
    let (values, y) = linalg::sym_eigen(&c);
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .expect("Cholesky factor is nonsingular");
    let clusters = clusters_of(&values, tol);
    Ok(EigenDecomposition {
        values,
        vectors,
        clusters,
    })
}

pub fn neumann_eigs(
    sys: &AssembledSystem,
    tol: &Tolerances,
) -> Result<EigenDecomposition, SpectraError> {
    generalized_eigen(&sys.a, &sys.m, tol)
}

pub fn dirichlet_eigs(
    sys: &AssembledSystem,
    tol: &Tolerances,
) -> Result<EigenDecomposition, SpectraError> {
    generalized_eigen(&sys.a_blocks.ii, &sys.m_blocks.ii, tol)
}

/// An assembled system together with both spectra and the norms used by the tolerances.
#[derive(Clone, Debug)]
pub struct Spectra<'a> {
    pub sys: &'a AssembledSystem,
    pub tol: Tolerances,
    pub neumann: EigenDecomposition,
    pub dirichlet: EigenDecomposition,
    pub norm_a: f64,
    pub norm_m: f64,
}

impl<'a> Spectra<'a> {
    pub fn new(sys: &'a AssembledSystem, tol: Tolerances) -> Result<Self, SpectraError> {
        tol.validate()?;
        let neumann = neumann_eigs(sys, &tol)?;
        let dirichlet = dirichlet_eigs(sys, &tol)?;
        Ok(Spectra {
            sys,
            tol,
            neumann,
            dirichlet,
            norm_a: linalg::spectral_norm(&sys.a),
            norm_m: linalg::spectral_norm(&sys.m),
        })
    }

    /// Inertia zero threshold at `lambda`.
    pub fn zero_tol(&self, lambda: f64) -> f64 {
        self.tol.zero * (self.norm_a + lambda.abs() * self.norm_m)
    }

    pub fn inner_space(&self, lambda: f64) -> InnerSpace {
        inner_space(self.sys, lambda, &self.tol)
    }

    pub fn inner_scan(&self) -> InnerReport {
        inner::scan(self)
    }

    pub fn dtn(&self, lambda: f64) -> DtnOperator {
        dtn(self.sys, lambda, &self.tol)
    }

    pub fn counting(&self, lambda: f64) -> Counts {
        interlace::counts(self, lambda)
    }

    pub fn interlace(&self, lambda: f64) -> InterlaceRecord {
        interlace::record(self, lambda)
    }

    /// Dirichlet and Neumann cluster values, merged and sorted.
    pub fn eigenvalue_locations(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .dirichlet
            .clusters
            .iter()
            .chain(&self.neumann.clusters)
            .map(|c| c.value)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub(crate) fn check_not_dirichlet(&self, lambda: f64) -> Result<(), SpectraError> {
        match self
            .dirichlet
            .values
            .iter()
            .find(|&&v| self.tol.same_cluster(v, lambda))
        {
            Some(&eigenvalue) => Err(SpectraError::DirichletEigenvalue { lambda, eigenvalue }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::mesh::{gen_polygon_ring, gen_tensor_product};

    fn residual_ok(a: &DMatrix<f64>, m: &DMatrix<f64>, eig: &EigenDecomposition) -> bool {
        let (na, nm) = (linalg::spectral_norm(a), linalg::spectral_norm(m));
        eig.values.iter().enumerate().all(|(k, &l)| {
            let v = eig.vectors.column(k);
            (a * v - m * v * l).norm() <= 1e-9 * (na + l.abs() * nm)
        })
    }

    #[test]
    fn neumann_spectrum_of_ring() {
        let sys = assemble(&gen_polygon_ring(6, 3.0).unwrap()).unwrap();
        let tol = Tolerances::default();
        let eig = neumann_eigs(&sys, &tol).unwrap();
        assert!(eig.values[0].abs() < 1e-12);
        let v0 = eig.vectors.column(0);
        assert!(v0.iter().all(|&x| (x - v0[0]).abs() < 1e-10));
        assert!(residual_ok(&sys.a, &sys.m, &eig));
        let gram = eig.vectors.transpose() * &sys.m * &eig.vectors;
        assert!((gram - DMatrix::identity(13, 13)).amax() < 1e-10);
        assert_eq!(eig.clusters.iter().map(|c| c.len).sum::<usize>(), 13);
    }

    #[test]
    fn single_interior_node() {
        let sys =
            assemble(&gen_tensor_product(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap()).unwrap();
        let eig = dirichlet_eigs(&sys, &Tolerances::default()).unwrap();
        assert_eq!(eig.values.len(), 1);
        let expected = sys.a[(4, 4)] / sys.m[(4, 4)];
        assert!((eig.values[0] - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn indefinite_mass_is_rejected() {
        let a = DMatrix::identity(2, 2);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            generalized_eigen(&a, &m, &Tolerances::default()),
            Err(SpectraError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn clusters_chain() {
        let tol = Tolerances::default();
        let c = clusters_of(&[1.0, 1.0 + 1e-12, 2.0, 3.0, 3.0], &tol);
        assert_eq!(c.iter().map(|c| c.len).collect::<Vec<_>>(), vec![2, 1, 2]);
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(Tolerances {
            rank: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(Tolerances::default().validate().is_ok());
    }
}
