//! P1/Q1 elemental matrices, global assembly and the interior/boundary block split.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::Serialize;
use thiserror::Error;

use crate::mesh::{self, BoundaryPartition, ElementKind, Mesh, MeshError, Point2};

/// Sign-audit threshold relative to `max |a_ij|`.
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("degenerate element (signed area {0:e})")]
    Degenerate(f64),
    #[error("quadrilateral is not convex")]
    NonConvex,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementMatrices {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

/// Exact P1 matrices of a counter-clockwise triangle.
///
/// Barycentric gradients are constant: for the cyclic triple `(j, k, l)`,
/// `grad phi_j = (y_k - y_l, x_l - x_k) / (2 * area)`.
pub fn elemental_p1(tri: &[Point2; 3]) -> Result<ElementMatrices, AssemblyError> {
    let twice_area = mesh::cross3(&tri[0], &tri[1], &tri[2]);
    if twice_area.is_nan() || twice_area <= 0.0 {
        return Err(AssemblyError::Degenerate(0.5 * twice_area));
    }
    let area = 0.5 * twice_area;
    let grads: Vec<(f64, f64)> = (0..3)
        .map(|j| {
            let (k, l) = ((j + 1) % 3, (j + 2) % 3);
            (
                (tri[k].y - tri[l].y) / twice_area,
                (tri[l].x - tri[k].x) / twice_area,
            )
        })
        .collect();
    let stiffness = symmetric(3, |i, j| {
        area * (grads[i].0 * grads[j].0 + grads[i].1 * grads[j].1)
    });
    let mass = symmetric(3, |i, j| if i == j { area / 6.0 } else { area / 12.0 });
    Ok(ElementMatrices { stiffness, mass })
}

fn symmetric(n: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = f(i, j);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn is_axis_aligned_rectangle(q: &[Point2; 4]) -> bool {
    let scale = q
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    let tol = 1e-14 * scale;
    (0..4).all(|i| {
        let (p, r) = (q[i], q[(i + 1) % 4]);
        (p.x - r.x).abs() <= tol || (p.y - r.y).abs() <= tol
    })
}

/// Q1 matrices of a convex quadrilateral.
///
/// Axis-aligned rectangles use the closed tensor-product form, so the entry
/// between opposite corners is exactly `-(hx/hy + hy/hx) / 6`. Other convex
/// quads fall back to 2x2 Gauss quadrature of the bilinear map.
pub fn elemental_q1(quad: &[Point2; 4]) -> Result<ElementMatrices, AssemblyError> {
    let signed = 0.5
        * (0..4)
            .map(|i| quad[i].x * quad[(i + 1) % 4].y - quad[(i + 1) % 4].x * quad[i].y)
            .sum::<f64>();
    if signed.is_nan() || signed <= 0.0 {
        return Err(AssemblyError::Degenerate(signed));
    }
    if !(0..4).all(|i| mesh::cross3(&quad[i], &quad[(i + 1) % 4], &quad[(i + 2) % 4]) > 0.0) {
        return Err(AssemblyError::NonConvex);
    }
    if is_axis_aligned_rectangle(quad) {
        Ok(rectangle_q1(quad))
    } else {
        Ok(gauss_q1(quad))
    }
}

fn rectangle_q1(quad: &[Point2; 4]) -> ElementMatrices {
    let x0 = quad.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let x1 = quad.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let y0 = quad.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let y1 = quad.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let (hx, hy) = (x1 - x0, y1 - y0);
    // side of each corner along each axis: 0 = low, 1 = high
    let side: Vec<(usize, usize)> = quad
        .iter()
        .map(|p| {
            (
                usize::from((p.x - x0).abs() > (p.x - x1).abs()),
                usize::from((p.y - y0).abs() > (p.y - y1).abs()),
            )
        })
        .collect();
    let k1 = |h: f64, a: usize, b: usize| if a == b { 1.0 / h } else { -1.0 / h };
    let m1 = |h: f64, a: usize, b: usize| if a == b { h / 3.0 } else { h / 6.0 };
    let stiffness = symmetric(4, |i, j| {
        let ((ix, iy), (jx, jy)) = (side[i], side[j]);
        k1(hx, ix, jx) * m1(hy, iy, jy) + m1(hx, ix, jx) * k1(hy, iy, jy)
    });
    let mass = symmetric(4, |i, j| {
        let ((ix, iy), (jx, jy)) = (side[i], side[j]);
        m1(hx, ix, jx) * m1(hy, iy, jy)
    });
    ElementMatrices { stiffness, mass }
}

fn gauss_q1(quad: &[Point2; 4]) -> ElementMatrices {
    // reference corners in counter-clockwise order
    const REF: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let g = 1.0 / 3f64.sqrt();
    let mut stiffness = DMatrix::<f64>::zeros(4, 4);
    let mut mass = DMatrix::<f64>::zeros(4, 4);
    for (xi, eta) in [(-g, -g), (g, -g), (g, g), (-g, g)] {
        let shape: Vec<f64> = REF
            .iter()
            .map(|&(a, b)| 0.25 * (1.0 + a * xi) * (1.0 + b * eta))
            .collect();
        let dref: Vec<Vector2<f64>> = REF
            .iter()
            .map(|&(a, b)| Vector2::new(0.25 * a * (1.0 + b * eta), 0.25 * b * (1.0 + a * xi)))
            .collect();
        let mut jac = Matrix2::zeros();
        for (p, d) in quad.iter().zip(&dref) {
            jac[(0, 0)] += p.x * d[0];
            jac[(0, 1)] += p.x * d[1];
            jac[(1, 0)] += p.y * d[0];
            jac[(1, 1)] += p.y * d[1];
        }
        let det = jac.determinant();
        let inv_t = jac
            .try_inverse()
            .expect("convex quad has invertible Jacobian")
            .transpose();
        let grads: Vec<Vector2<f64>> = dref.iter().map(|d| inv_t * d).collect();
        for i in 0..4 {
            for j in 0..4 {
                stiffness[(i, j)] += det * grads[i].dot(&grads[j]);
                mass[(i, j)] += det * shape[i] * shape[j];
            }
        }
    }
    // Gauss points were visited in corner order so the matrices are symmetric up to rounding.
    let stiffness = symmetric(4, |i, j| 0.5 * (stiffness[(i, j)] + stiffness[(j, i)]));
    let mass = symmetric(4, |i, j| 0.5 * (mass[(i, j)] + mass[(j, i)]));
    ElementMatrices { stiffness, mass }
}

pub fn elemental(mesh: &Mesh, e: usize) -> Result<ElementMatrices, AssemblyError> {
    let pts = mesh.element_points(e);
    match mesh.elements()[e].kind {
        ElementKind::Tri => elemental_p1(&[pts[0], pts[1], pts[2]]),
        ElementKind::Quad => elemental_q1(&[pts[0], pts[1], pts[2], pts[3]]),
    }
}

/// Symmetric matrix in coordinate form, both triangles stored, sorted by `(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    /// Sums the contributions of each entry in sorted order, so the result
    /// does not depend on the order in which they were produced.
    fn from_contributions(n: usize, contributions: BTreeMap<(usize, usize), Vec<f64>>) -> Self {
        let entries = contributions
            .into_iter()
            .map(|((i, j), mut parts)| {
                parts.sort_by(f64::total_cmp);
                (i, j, parts.iter().sum())
            })
            .collect();
        SparseMatrix { n, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(i, j)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            out[(i, j)] = v;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max)
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        SparseMatrix {
            n: m.nrows().max(m.ncols()),
            entries,
        }
    }
}

/// The four blocks of a matrix under the interior/boundary split.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks {
    pub ii: DMatrix<f64>,
    pub ib: DMatrix<f64>,
    pub bi: DMatrix<f64>,
    pub bb: DMatrix<f64>,
}

impl Blocks {
    fn split(full: &DMatrix<f64>, part: &BoundaryPartition) -> Self {
        let (int, bnd) = (&part.interior, &part.boundary);
        Blocks {
            ii: full.select_rows(int).select_columns(int),
            ib: full.select_rows(int).select_columns(bnd),
            bi: full.select_rows(bnd).select_columns(int),
            bb: full.select_rows(bnd).select_columns(bnd),
        }
    }
}

/// Global stiffness `A` and mass `M` with their interior/boundary blocks.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub partition: BoundaryPartition,
    pub a: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub a_blocks: Blocks,
    pub m_blocks: Blocks,
}

impl AssembledSystem {
    fn from_parts(
        stiffness: SparseMatrix,
        mass: SparseMatrix,
        partition: BoundaryPartition,
    ) -> Self {
        let a = stiffness.to_dense();
        let m = mass.to_dense();
        let a_blocks = Blocks::split(&a, &partition);
        let m_blocks = Blocks::split(&m, &partition);
        AssembledSystem {
            stiffness,
            mass,
            partition,
            a,
            m,
            a_blocks,
            m_blocks,
        }
    }

    pub fn n(&self) -> usize {
        self.stiffness.n
    }

    /// Both matrices multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |s: &SparseMatrix| SparseMatrix {
            n: s.n,
            entries: s
                .entries
                .iter()
                .map(|&(i, j, v)| (i, j, v * factor))
                .collect(),
        };
        AssembledSystem::from_parts(
            scale(&self.stiffness),
            scale(&self.mass),
            self.partition.clone(),
        )
    }

    /// `A - lambda M` as a dense matrix.
    pub fn pencil(&self, lambda: f64) -> DMatrix<f64> {
        &self.a - &self.m * lambda
    }

    pub fn pencil_blocks(&self, lambda: f64) -> Blocks {
        let (a, m) = (&self.a_blocks, &self.m_blocks);
        Blocks {
            ii: &a.ii - &m.ii * lambda,
            ib: &a.ib - &m.ib * lambda,
            bi: &a.bi - &m.bi * lambda,
            bb: &a.bb - &m.bb * lambda,
        }
    }
}

/// Accumulates elemental matrices into the global system.
pub fn assemble(mesh: &Mesh) -> Result<AssembledSystem, AssemblyError> {
    let partition = mesh::boundary_partition(mesh)?;
    let mut a_parts: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut m_parts: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (e, el) in mesh.elements().iter().enumerate() {
        let local = elemental(mesh, e)?;
        for (li, &gi) in el.nodes.iter().enumerate() {
            for (lj, &gj) in el.nodes.iter().enumerate() {
                a_parts
                    .entry((gi, gj))
                    .or_default()
                    .push(local.stiffness[(li, lj)]);
                m_parts
                    .entry((gi, gj))
                    .or_default()
                    .push(local.mass[(li, lj)]);
            }
        }
    }
    let n = mesh.n_nodes();
    Ok(AssembledSystem::from_parts(
        SparseMatrix::from_contributions(n, a_parts),
        SparseMatrix::from_contributions(n, m_parts),
        partition,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositiveEntry {
    pub i: usize,
    pub j: usize,
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignAudit {
    pub offdiag_nonpositive: bool,
    pub positive_entries: Vec<PositiveEntry>,
    pub threshold: f64,
}

/// Graph edges (`i < j`, `m_ij > 0`) whose stiffness entry exceeds `1e-12 * max |a|`.
pub fn sign_audit(sys: &AssembledSystem) -> SignAudit {
    let threshold = SIGN_TOL * sys.stiffness.max_abs();
    let positive_entries: Vec<PositiveEntry> = sys
        .mass
        .entries
        .iter()
        .filter(|&&(i, j, m)| i < j && m > 0.0)
        .map(|&(i, j, _)| PositiveEntry {
            i,
            j,
            a: sys.stiffness.get(i, j),
        })
        .filter(|p| p.a > threshold)
        .collect();
    SignAudit {
        offdiag_nonpositive: positive_entries.is_empty(),
        positive_entries,
        threshold,
    }
}
