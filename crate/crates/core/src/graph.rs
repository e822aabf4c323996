//! Mesh graphs, zero forcing and edge-leaky forcing.
//!
//! Vertices are mesh nodes; `i` and `j` are adjacent when `m_ij > 0`. An edge
//! is *leaky* when its stiffness entry is positive: such an edge may be needed
//! to count white neighbours but can never carry a force.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{AssembledSystem, SIGN_TOL};
use crate::mesh::{Mesh, MeshKind};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("mesh is not a tensor-product grid: {0}")]
    NotTensorGrid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeAttr {
    pub m: f64,
    pub a: f64,
    pub leaky: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshGraph {
    pub n: usize,
    pub adjacency: Vec<Vec<usize>>,
    /// Keyed by `(min, max)`.
    pub edges: BTreeMap<(usize, usize), EdgeAttr>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl MeshGraph {
    /// Graph with the given undirected edges and no attributes (`m = 1`, `a = 0`).
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let attrs = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| {
                (
                    key(u, v),
                    EdgeAttr {
                        m: 1.0,
                        a: 0.0,
                        leaky: false,
                    },
                )
            })
            .collect();
        Self::from_attrs(n, attrs)
    }

    fn from_attrs(n: usize, edges: BTreeMap<(usize, usize), EdgeAttr>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges.keys() {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        MeshGraph {
            n,
            adjacency,
            edges,
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge(&self, u: usize, v: usize) -> Option<&EdgeAttr> {
        self.edges.get(&key(u, v))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains_key(&key(u, v))
    }

    pub fn leaky_edges(&self) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .filter(|(_, e)| e.leaky)
            .map(|(&k, _)| k)
            .collect()
    }

    fn check(&self, seed: &[usize]) -> Result<(), GraphError> {
        match seed.iter().find(|&&v| v >= self.n) {
            Some(&v) => Err(GraphError::VertexOutOfRange(v)),
            None => Ok(()),
        }
    }
}

/// Vertices are nodes; edges are pairs with positive mass coupling.
pub fn build_graph(sys: &AssembledSystem) -> MeshGraph {
    let threshold = SIGN_TOL * sys.stiffness.max_abs();
    let edges = sys
        .mass
        .entries
        .iter()
        .filter(|&&(i, j, m)| i < j && m > 0.0)
        .map(|&(i, j, m)| {
            let a = sys.stiffness.get(i, j);
            (
                (i, j),
                EdgeAttr {
                    m,
                    a,
                    leaky: a > threshold,
                },
            )
        })
        .collect();
    MeshGraph::from_attrs(sys.n(), edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForceStep {
    pub forcer: usize,
    pub forced: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForcingResult {
    pub final_blue: BTreeSet<usize>,
    pub chronicle: Vec<ForceStep>,
    pub forced_all: bool,
}

impl ForcingResult {
    /// Replays the chronicle from `seed`, checking that every step was legal when it fired.
    pub fn replay(&self, g: &MeshGraph, seed: &[usize], leaks: &BTreeSet<(usize, usize)>) -> bool {
        let mut blue = vec![false; g.n];
        for &s in seed {
            blue[s] = true;
        }
        for step in &self.chronicle {
            let white: Vec<usize> = g.adjacency[step.forcer]
                .iter()
                .copied()
                .filter(|&w| !blue[w])
                .collect();
            if !blue[step.forcer]
                || white != [step.forced]
                || leaks.contains(&key(step.forcer, step.forced))
            {
                return false;
            }
            blue[step.forced] = true;
        }
        let replayed: BTreeSet<usize> = (0..g.n).filter(|&v| blue[v]).collect();
        replayed == self.final_blue
    }
}

/// Colour-change closure where edges in `leaks` never carry a force.
///
/// Each round fires the legal force with the smallest forcer.
pub fn forcing_closure_with(
    g: &MeshGraph,
    seed: &[usize],
    leaks: &BTreeSet<(usize, usize)>,
) -> Result<ForcingResult, GraphError> {
    g.check(seed)?;
    let mut blue = vec![false; g.n];
    for &s in seed {
        blue[s] = true;
    }
    let mut chronicle = Vec::new();
    loop {
        let next = (0..g.n).filter(|&u| blue[u]).find_map(|u| {
            let mut white = g.adjacency[u].iter().copied().filter(|&w| !blue[w]);
            match (white.next(), white.next()) {
                (Some(w), None) if !leaks.contains(&key(u, w)) => Some(ForceStep {
                    forcer: u,
                    forced: w,
                }),
                _ => None,
            }
        });
        match next {
            Some(step) => {
                blue[step.forced] = true;
                chronicle.push(step);
            }
            None => break,
        }
    }
    let final_blue: BTreeSet<usize> = (0..g.n).filter(|&v| blue[v]).collect();
    let forced_all = final_blue.len() == g.n;
    Ok(ForcingResult {
        final_blue,
        chronicle,
        forced_all,
    })
}

/// Zero forcing closure; with `use_leaks` the graph's leaky edges cannot force.
pub fn forcing_closure(
    g: &MeshGraph,
    seed: &[usize],
    use_leaks: bool,
) -> Result<ForcingResult, GraphError> {
    let leaks = if use_leaks {
        g.leaky_edges()
    } else {
        BTreeSet::new()
    };
    forcing_closure_with(g, seed, &leaks)
}

pub fn is_zfs(g: &MeshGraph, seed: &[usize]) -> Result<bool, GraphError> {
    Ok(forcing_closure(g, seed, false)?.forced_all)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZfExcess {
    /// `Z(G; B) - |B|`
    Exact(usize),
    ExceedsCap(usize),
}

impl ZfExcess {
    pub fn value(self) -> Option<usize> {
        match self {
            ZfExcess::Exact(k) => Some(k),
            ZfExcess::ExceedsCap(_) => None,
        }
    }
}

/// Advances `idx` to the next `k`-subset of `0..n` in colexicographic order.
fn next_colex(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in 0..k {
        let limit = if i + 1 < k { idx[i + 1] } else { n };
        if idx[i] + 1 < limit {
            idx[i] += 1;
            for (j, slot) in idx.iter_mut().enumerate().take(i) {
                *slot = j;
            }
            return true;
        }
    }
    false
}

/// Smallest number of extra vertices that turn `base` into a zero forcing set.
///
/// Subsets of the non-base vertices are tried by increasing size in
/// colexicographic order, stopping at the first success.
pub fn restricted_zf_excess(
    g: &MeshGraph,
    base: &[usize],
    cap: usize,
) -> Result<ZfExcess, GraphError> {
    g.check(base)?;
    let in_base: BTreeSet<usize> = base.iter().copied().collect();
    let candidates: Vec<usize> = (0..g.n).filter(|v| !in_base.contains(v)).collect();
    let mut seed = base.to_vec();
    for size in 0..=cap.min(candidates.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            seed.truncate(base.len());
            seed.extend(idx.iter().map(|&i| candidates[i]));
            if is_zfs(g, &seed)? {
                return Ok(ZfExcess::Exact(size));
            }
            if !next_colex(&mut idx, candidates.len()) {
                break;
            }
        }
    }
    Ok(ZfExcess::ExceedsCap(cap))
}

/// Grid shape of a tensor-product mesh, node `j * nx + i` at `(xs[i], ys[j])`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorGrid {
    pub nx: usize,
    pub ny: usize,
}

impl TensorGrid {
    /// Recovers the grid shape of a mesh produced by [`crate::mesh::gen_tensor_product`].
    pub fn detect(mesh: &Mesh) -> Result<Self, GraphError> {
        if mesh.kind() != MeshKind::Quadrilateral {
            return Err(GraphError::NotTensorGrid("not a quadrilateral mesh".into()));
        }
        let nodes = mesh.nodes();
        let y0 = nodes
            .first()
            .map(|p| p.y)
            .ok_or_else(|| GraphError::NotTensorGrid("no nodes".into()))?;
        let nx = nodes.iter().take_while(|p| p.y == y0).count();
        if nx < 2 || !nodes.len().is_multiple_of(nx) {
            return Err(GraphError::NotTensorGrid("node count is not a grid".into()));
        }
        let ny = nodes.len() / nx;
        for j in 0..ny {
            for i in 0..nx {
                let p = nodes[j * nx + i];
                if p.x != nodes[i].x || p.y != nodes[j * nx].y {
                    return Err(GraphError::NotTensorGrid(format!(
                        "node {} is off the grid",
                        j * nx + i
                    )));
                }
            }
        }
        Ok(TensorGrid { nx, ny })
    }

    /// Bottom row followed by the rest of the left column.
    pub fn bottom_left_seed(&self) -> Vec<usize> {
        let mut seed: Vec<usize> = (0..self.nx).collect();
        seed.extend((1..self.ny).map(|j| j * self.nx));
        seed
    }

    pub fn is_axis_parallel(&self, u: usize, v: usize) -> bool {
        let (ui, uj) = (u % self.nx, u / self.nx);
        let (vi, vj) = (v % self.nx, v / self.nx);
        ui == vi || uj == vj
    }
}

pub fn axis_parallel_edges(g: &MeshGraph, grid: &TensorGrid) -> BTreeSet<(usize, usize)> {
    g.edges
        .keys()
        .copied()
        .filter(|&(u, v)| grid.is_axis_parallel(u, v))
        .collect()
}

/// Forcing from the bottom row and left column with every axis-parallel edge leaked.
pub fn tensor_leaky_certificate(g: &MeshGraph, mesh: &Mesh) -> Result<ForcingResult, GraphError> {
    let grid = TensorGrid::detect(mesh)?;
    if g.n != grid.nx * grid.ny {
        return Err(GraphError::NotTensorGrid(
            "graph and mesh sizes differ".into(),
        ));
    }
    forcing_closure_with(g, &grid.bottom_left_seed(), &axis_parallel_edges(g, &grid))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    pub m: f64,
    pub a: f64,
    pub leaky: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<EdgeRecord>,
}

impl From<&MeshGraph> for GraphFile {
    fn from(g: &MeshGraph) -> Self {
        GraphFile {
            n: g.n,
            edges: g
                .edges
                .iter()
                .map(|(&(u, v), e)| EdgeRecord {
                    u,
                    v,
                    m: e.m,
                    a: e.a,
                    leaky: e.leaky,
                })
                .collect(),
        }
    }
}

impl From<&GraphFile> for MeshGraph {
    fn from(f: &GraphFile) -> Self {
        let edges = f
            .edges
            .iter()
            .map(|e| {
                (
                    key(e.u, e.v),
                    EdgeAttr {
                        m: e.m,
                        a: e.a,
                        leaky: e.leaky,
                    },
                )
            })
            .collect();
        MeshGraph::from_attrs(f.n, edges)
    }
}
